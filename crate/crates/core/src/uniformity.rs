//! Semi-deciding implicational uniformity over a finitely generated closure.

use std::collections::{HashMap, HashSet};

use crate::compose::{compose_once, Kind};
use crate::error::AlgebraError;
use crate::relation::{implication_of, ImplicationWitness, OrbitRelation, OrbitalSet};
use crate::template::Template;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Generator(usize),
    Projection { of: usize, coords: Vec<usize> },
    Permute { of: usize, perm: Vec<usize> },
    Intersect(usize, usize),
    Compose(Kind, usize, usize),
}

#[derive(Clone, Debug)]
pub struct Member {
    pub relation: OrbitRelation,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub enum Uniformity {
    Uniform { closure_size: usize },
    NonUniform { first: ImplicationWitness, second: ImplicationWitness, members: (usize, usize) },
    BudgetExhausted { partial: usize },
}

impl Uniformity {
    pub fn is_uniform(&self) -> bool {
        matches!(self, Uniformity::Uniform { .. })
    }
}

#[derive(Clone, Debug)]
pub struct UniformityReport {
    pub verdict: Uniformity,
    pub closure: Vec<Member>,
    pub steps: usize,
}

type Key = (OrbitalSet, OrbitalSet, OrbitalSet, OrbitalSet);

struct Closure<'t> {
    template: &'t Template,
    members: Vec<Member>,
    seen: HashSet<OrbitRelation>,
    implications: HashMap<Key, (usize, ImplicationWitness)>,
    found: Option<Uniformity>,
}

impl Closure<'_> {
    fn add(&mut self, relation: OrbitRelation, provenance: Provenance) {
        if self.found.is_some() || !self.seen.insert(relation.clone()) {
            return;
        }
        let idx = self.members.len();
        if relation.arity() >= 3 {
            for a in relation.first_pair().proper_subsets() {
                let Some(w) = implication_of(&relation, a) else { continue };
                let key = (w.from, w.to, relation.first_pair(), relation.last_pair());
                self.implications.entry(key).or_insert((idx, w));
            }
            for a in relation.first_pair().proper_subsets() {
                let Some(w) = implication_of(&relation, a) else { continue };
                if w.from == w.to {
                    continue;
                }
                let partner = (w.to, w.from, relation.last_pair(), relation.first_pair());
                if let Some((j, w2)) = self.implications.get(&partner) {
                    self.found = Some(Uniformity::NonUniform { first: w.clone(), second: w2.clone(), members: (idx, *j) });
                    break;
                }
            }
        }
        self.members.push(Member { relation, provenance });
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn heap(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            heap(n - 1, cur, out);
            let j = if n % 2 == 0 { i } else { 0 };
            cur.swap(j, n - 1);
        }
    }
    heap(k, &mut cur, &mut out);
    out.sort();
    out.dedup();
    out
}

/// Closes `generators` under argument permutation, intersection and the two
/// compositions, stopping at the first complementary pair with distinct
/// endpoints. Each candidate operation costs one step of `budget`.
pub fn check_uniformity(t: &Template, generators: &[OrbitRelation], budget: usize) -> Result<UniformityReport, AlgebraError> {
    let mut c = Closure {
        template: t,
        members: Vec::new(),
        seen: HashSet::new(),
        implications: HashMap::new(),
        found: None,
    };
    for (g, r) in generators.iter().enumerate() {
        if r.arity() > 4 {
            let k = r.arity();
            for a in 0..k {
                for b in a + 1..k {
                    for cc in b + 1..k {
                        for d in cc + 1..k {
                            let coords = vec![a, b, cc, d];
                            c.add(r.project0(&coords), Provenance::Projection { of: g, coords });
                        }
                    }
                }
            }
        } else {
            c.add(r.clone(), Provenance::Generator(g));
        }
    }
    let perms: Vec<Vec<Vec<usize>>> = (0..=4).map(permutations).collect();
    let mut steps = 0usize;
    let mut next = 0usize;
    let exhausted = |c: &Closure, steps: usize| (steps > budget).then(|| Uniformity::BudgetExhausted { partial: c.members.len() });
    'outer: while next < c.members.len() && c.found.is_none() {
        let i = next;
        next += 1;
        let ri = c.members[i].relation.clone();
        for p in &perms[ri.arity().min(4)] {
            steps += 1;
            if let Some(v) = exhausted(&c, steps) {
                c.found = Some(v);
                break 'outer;
            }
            if ri.arity() <= 4 {
                let r = ri.permute(p)?;
                c.add(r, Provenance::Permute { of: i, perm: p.clone() });
            }
        }
        for j in 0..=i {
            if c.found.is_some() {
                break 'outer;
            }
            let rj = c.members[j].relation.clone();
            if rj.arity() == ri.arity() && j != i {
                steps += 1;
                if let Some(v) = exhausted(&c, steps) {
                    c.found = Some(v);
                    break 'outer;
                }
                c.add(ri.intersect(&rj)?, Provenance::Intersect(j, i));
            }
            if ri.arity() == 4 && rj.arity() == 4 {
                for (a, b, x, y) in [(&ri, &rj, i, j), (&rj, &ri, j, i)] {
                    if a.last_pair() != b.first_pair() {
                        continue;
                    }
                    for kind in [Kind::Circ, Kind::Bowtie] {
                        steps += 1;
                        if let Some(v) = exhausted(&c, steps) {
                            c.found = Some(v);
                            break 'outer;
                        }
                        let r = compose_once(c.template, kind, a, b)?;
                        c.add(r, Provenance::Compose(kind, x, y));
                    }
                    if i == j {
                        break;
                    }
                }
            }
        }
    }
    let verdict = c.found.take().unwrap_or(Uniformity::Uniform { closure_size: c.members.len() });
    Ok(UniformityReport { verdict, closure: c.members, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{Color, OrbitLabel};
    use crate::relation::are_complementary;
    use crate::template::{random_graph, triangle_free};

    const E: Color = Color(2);
    const N: Color = Color::NULL;

    fn q(c12: Color, c34: Color) -> OrbitLabel {
        OrbitLabel::injective(4, |i, j| match (i, j) {
            (0, 1) => c12,
            (2, 3) => c34,
            _ => N,
        })
    }

    #[test]
    fn orbitals_alone_are_uniform() {
        for t in [random_graph(), triangle_free()] {
            let gens: Vec<_> = t.colors().map(|c| OrbitRelation::binary(OrbitalSet::single(c))).collect();
            let rep = check_uniformity(&t, &gens, 10_000).unwrap();
            assert!(rep.verdict.is_uniform(), "{:?}", rep.verdict);
        }
    }

    #[test]
    fn xor_is_not_uniform() {
        let t = random_graph();
        let x = OrbitRelation::from_labels(4, [q(E, N), q(N, E)]).unwrap();
        let rep = check_uniformity(&t, &[x], 10_000).unwrap();
        match rep.verdict {
            Uniformity::NonUniform { first, second, members } => {
                assert_eq!(members, (0, 0));
                assert!(are_complementary(&first, &second));
                assert_ne!(first.from, first.to);
                let ends = [first.from, first.to];
                assert!(ends.contains(&OrbitalSet::single(E)) && ends.contains(&OrbitalSet::single(N)));
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn empty_generators() {
        let rep = check_uniformity(&random_graph(), &[], 10).unwrap();
        assert!(matches!(rep.verdict, Uniformity::Uniform { closure_size: 0 }));
    }

    #[test]
    fn budget_is_enforced() {
        let t = random_graph();
        let r = OrbitRelation::from_labels(4, [q(E, E), q(N, N), q(E, N)]).unwrap();
        let rep = check_uniformity(&t, &[r], 3).unwrap();
        assert!(matches!(rep.verdict, Uniformity::BudgetExhausted { .. }));
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1).len(), 1);
    }
}
