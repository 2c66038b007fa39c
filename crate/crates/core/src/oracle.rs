//! Brute-force model finding: a solution exists exactly when some quotient
//! of the variables carries an age-valid coloring satisfying every
//! constraint.
//!
//! Shares nothing with the minimality machinery. Forbidden structures are
//! matched directly against the partial coloring.

use crate::error::SolverError;
use crate::label::{Color, OrbitLabel};
use crate::solver::{Instance, Solution};
use crate::template::{ColoredStructure, Template};

pub const DEFAULT_ORACLE_CAP: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Sat(Solution),
    Unsat,
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat(_))
    }
}

pub fn oracle_solve(t: &Template, i: &Instance) -> Result<OracleVerdict, SolverError> {
    oracle_solve_capped(t, i, DEFAULT_ORACLE_CAP)
}

pub fn oracle_solve_capped(t: &Template, i: &Instance, cap: usize) -> Result<OracleVerdict, SolverError> {
    let n = i.num_variables();
    if n > cap {
        return Err(SolverError::OracleCapExceeded { vars: n, cap });
    }
    let mut part = vec![0usize; n];
    let mut found = None;
    partitions(0, 0, &mut part, &mut |p, k| {
        found = color_quotient(t, i, p, k);
        found.is_some()
    });
    Ok(match found {
        Some(s) => OracleVerdict::Sat(s),
        None => OracleVerdict::Unsat,
    })
}

/// Restricted growth strings; `visit` returns true to stop.
fn partitions(pos: usize, blocks: usize, part: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize], usize) -> bool) -> bool {
    if pos == part.len() {
        return visit(part, blocks);
    }
    for b in 0..=blocks {
        part[pos] = b;
        if partitions(pos + 1, blocks.max(b + 1), part, visit) {
            return true;
        }
    }
    false
}

struct Coloring<'a> {
    t: &'a Template,
    i: &'a Instance,
    part: &'a [usize],
    pairs: Vec<(usize, usize)>,
    covered: Vec<Vec<bool>>,
    /// Constraints to check once pair `p` of `pairs` is colored.
    due: Vec<Vec<usize>>,
    color: Vec<Vec<Color>>,
}

fn color_quotient(t: &Template, i: &Instance, part: &[usize], k: usize) -> Option<Solution> {
    // Equal classes must be allowed wherever a constraint sees them.
    for c in i.constraints() {
        let verts: Vec<usize> = c.scope.iter().map(|&v| part[v]).collect();
        if !c.relation.iter().any(|l| (0..verts.len()).all(|a| (a + 1..verts.len()).all(|b| (verts[a] == verts[b]) == l.color(a, b).is_eq()))) {
            return None;
        }
    }
    let mut pairs = Vec::new();
    for b in 1..k {
        for a in 0..b {
            pairs.push((a, b));
        }
    }
    let step = |a: usize, b: usize| b * (b - 1) / 2 + a;
    let mut covered = vec![vec![false; k]; k];
    let mut due = vec![Vec::new(); pairs.len().max(1)];
    for (ci, c) in i.constraints().iter().enumerate() {
        let mut last = 0;
        for x in 0..c.scope.len() {
            for y in x + 1..c.scope.len() {
                let (a, b) = (part[c.scope[x]], part[c.scope[y]]);
                if a != b {
                    covered[a][b] = true;
                    covered[b][a] = true;
                    last = last.max(step(a.min(b), a.max(b)));
                }
            }
        }
        due[last].push(ci);
    }
    let mut s = Coloring { t, i, part, pairs, covered, due, color: vec![vec![Color::EQ; k]; k] };
    if s.pairs.is_empty() {
        let d = ColoredStructure::empty(k);
        return s.constraints_hold(0).then(|| Solution { quotient: part.to_vec(), structure: d });
    }
    if s.search(0) {
        let d = ColoredStructure::from_fn(k, |a, b| s.color[a][b]);
        return Some(Solution { quotient: part.to_vec(), structure: d });
    }
    None
}

impl Coloring<'_> {
    fn constraints_hold(&self, p: usize) -> bool {
        self.due[p].iter().all(|&ci| {
            let c = &self.i.constraints()[ci];
            let l = OrbitLabel::from_classes(&c.scope.iter().map(|&v| self.part[v]).collect::<Vec<_>>(), |a, b| {
                self.color[a][b]
            });
            c.relation.contains(&l)
        })
    }

    fn search(&mut self, p: usize) -> bool {
        if p == self.pairs.len() {
            return true;
        }
        let (a, b) = self.pairs[p];
        let choices: Vec<Color> = if self.covered[a][b] {
            std::iter::once(Color::NULL).chain(self.t.real_colors()).collect()
        } else {
            vec![Color::NULL]
        };
        for c in choices {
            self.color[a][b] = c;
            self.color[b][a] = c;
            if c.is_real() && self.completes_forbidden(a, b) {
                continue;
            }
            if self.constraints_hold(p) && self.search(p + 1) {
                return true;
            }
        }
        false
    }

    /// Whether a forbidden structure embeds using the pair `(a, b)` and only
    /// pairs colored so far, which are exactly those among `0..=b` except
    /// `(a', b)` with `a' > a`.
    fn completes_forbidden(&self, a: usize, b: usize) -> bool {
        let verts: Vec<usize> = (0..=a).chain(std::iter::once(b)).collect();
        self.t.forbidden().iter().any(|f| {
            let mut image = vec![usize::MAX; f.size()];
            embed(f, &self.color, &verts, a, b, 0, &mut image)
        })
    }
}

fn embed(
    f: &crate::template::ForbiddenStructure,
    color: &[Vec<Color>],
    verts: &[usize],
    a: usize,
    b: usize,
    pos: usize,
    image: &mut Vec<usize>,
) -> bool {
    if pos == f.size() {
        return image.contains(&a) && image.contains(&b);
    }
    for &v in verts {
        if image[..pos].contains(&v) {
            continue;
        }
        if (0..pos).all(|q| color[image[q]][v] == f.color(q, pos)) {
            image[pos] = v;
            if embed(f, color, verts, a, b, pos + 1, image) {
                return true;
            }
        }
    }
    image[pos] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{OrbitRelation, OrbitalSet};
    use crate::solver::Constraint;
    use crate::template::{random_graph, triangle_free, two_color_a_free};

    fn bin(a: usize, b: usize, c: Color) -> Constraint {
        Constraint { scope: vec![a, b], relation: OrbitRelation::binary(OrbitalSet::single(c)) }
    }

    #[test]
    fn single_variable() {
        let i = Instance::with_variables(1, vec![]).unwrap();
        assert!(oracle_solve(&random_graph(), &i).unwrap().is_sat());
    }

    #[test]
    fn disjoint_orbitals_on_one_pair() {
        let i = Instance::with_variables(2, vec![bin(0, 1, Color(2)), bin(0, 1, Color::NULL)]).unwrap();
        assert_eq!(oracle_solve(&random_graph(), &i).unwrap(), OracleVerdict::Unsat);
    }

    #[test]
    fn triangles() {
        let e = Color(2);
        let i = Instance::with_variables(3, vec![bin(0, 1, e), bin(1, 2, e), bin(0, 2, e)]).unwrap();
        assert!(oracle_solve(&random_graph(), &i).unwrap().is_sat());
        assert_eq!(oracle_solve(&triangle_free(), &i).unwrap(), OracleVerdict::Unsat);
        // With A forbidden on triangles, B still works.
        let t = two_color_a_free();
        assert_eq!(oracle_solve(&t, &i).unwrap(), OracleVerdict::Unsat);
        let b = Color(3);
        let i = Instance::with_variables(3, vec![bin(0, 1, e), bin(1, 2, e), bin(0, 2, b)]).unwrap();
        assert!(oracle_solve(&t, &i).unwrap().is_sat());
    }

    #[test]
    fn merged_variables() {
        let e = Color(2);
        let i = Instance::with_variables(3, vec![bin(0, 1, Color::EQ), bin(1, 2, e), bin(0, 2, e)]).unwrap();
        let OracleVerdict::Sat(s) = oracle_solve(&triangle_free(), &i).unwrap() else { panic!() };
        assert_eq!(s.quotient, vec![0, 0, 1]);
        assert!(i.is_satisfied_by(&s.quotient, &s.structure));
    }

    #[test]
    fn cap() {
        let i = Instance::with_variables(8, vec![]).unwrap();
        assert!(matches!(oracle_solve(&random_graph(), &i), Err(SolverError::OracleCapExceeded { vars: 8, cap: 7 })));
    }
}
