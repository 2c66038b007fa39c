//! Exact evaluation of primitive positive formulas at the orbit level.
//!
//! The search assigns variables one at a time. A variable either joins the
//! equality class of an earlier variable or opens a new class, in which case
//! its colors towards every earlier class are chosen one by one, rejecting
//! any choice that completes a forbidden structure. Free variables come
//! first; once a free assignment has one extension, the bound part of the
//! search stops.

use std::collections::{BTreeSet, HashSet};

use crate::error::AlgebraError;
use crate::label::{pack, Color, OrbitLabel, MAX_ARITY};
use crate::relation::{OrbitRelation, OrbitalSet};
use crate::template::Template;

#[derive(Clone, Debug)]
pub struct Atom<'a> {
    pub relation: &'a OrbitRelation,
    pub scope: Vec<usize>,
}

/// `∃ (bound variables). ⋀ atoms`, with variables numbered `0..variables`.
#[derive(Clone, Debug)]
pub struct PPFormula<'a> {
    pub variables: usize,
    pub atoms: Vec<Atom<'a>>,
    pub free: Vec<usize>,
}

impl<'a> PPFormula<'a> {
    pub fn new(variables: usize, free: Vec<usize>) -> Self {
        PPFormula { variables, atoms: Vec::new(), free }
    }

    pub fn atom(mut self, relation: &'a OrbitRelation, scope: &[usize]) -> Self {
        self.atoms.push(Atom { relation, scope: scope.to_vec() });
        self
    }
}

struct Check {
    vars: Vec<usize>,
    allowed: HashSet<u128>,
}

struct Search<'t> {
    template: &'t Template,
    order: Vec<usize>,
    nfree: usize,
    free: Vec<usize>,
    checks: Vec<Vec<Check>>,
    pair_allowed: [[u16; MAX_ARITY]; MAX_ARITY],
    color: [[Color; MAX_ARITY]; MAX_ARITY],
    rep: [usize; MAX_ARITY],
    reps: Vec<usize>,
    distinct: Vec<Color>,
    results: BTreeSet<OrbitLabel>,
}

pub fn pp_eval(t: &Template, f: &PPFormula<'_>) -> Result<OrbitRelation, AlgebraError> {
    let n = f.variables;
    if n > MAX_ARITY {
        return Err(AlgebraError::ArityCapExceeded { arity: n, cap: MAX_ARITY });
    }
    for (i, a) in f.atoms.iter().enumerate() {
        if a.scope.len() != a.relation.arity() {
            return Err(AlgebraError::ScopeArityMismatch { atom: i, scope: a.scope.len(), arity: a.relation.arity() });
        }
        if let Some(&v) = a.scope.iter().find(|&&v| v >= n) {
            return Err(AlgebraError::UnknownVariable(v));
        }
    }
    let mut seen = [false; MAX_ARITY];
    for &v in &f.free {
        if v >= n {
            return Err(AlgebraError::UnknownVariable(v));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(AlgebraError::Malformed(format!("free variable {v} listed twice")));
        }
    }
    if f.atoms.iter().any(|a| a.relation.is_empty()) {
        return Ok(OrbitRelation::empty(f.free.len()));
    }

    let mut order = f.free.clone();
    order.extend((0..n).filter(|v| !seen[*v]));
    let mut pos = [0usize; MAX_ARITY];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }

    let all_bits = (1u16 << t.num_colors()) - 1;
    let mut pair_allowed = [[all_bits; MAX_ARITY]; MAX_ARITY];
    let mut checks: Vec<Vec<Check>> = (0..n).map(|_| Vec::new()).collect();
    for a in &f.atoms {
        for i in 0..a.scope.len() {
            for j in i + 1..a.scope.len() {
                let (u, v) = (a.scope[i], a.scope[j]);
                if u == v {
                    if !a.relation.pair_orbitals(i, j).contains(Color::EQ) {
                        return Ok(OrbitRelation::empty(f.free.len()));
                    }
                    continue;
                }
                let s = a.relation.pair_orbitals(i, j).bits();
                pair_allowed[u][v] &= s;
                pair_allowed[v][u] &= s;
            }
        }
        let mut steps: Vec<usize> = a.scope.iter().map(|&v| pos[v]).collect();
        steps.sort_unstable();
        steps.dedup();
        for &p in &steps {
            let positions: Vec<usize> = (0..a.scope.len()).filter(|&i| pos[a.scope[i]] <= p).collect();
            if positions.len() < 3 {
                continue;
            }
            let vars = positions.iter().map(|&i| a.scope[i]).collect();
            let allowed = a.relation.iter().map(|l| l.restrict(&positions).code()).collect();
            checks[p].push(Check { vars, allowed });
        }
    }

    let mut s = Search {
        template: t,
        order,
        nfree: f.free.len(),
        free: f.free.clone(),
        checks,
        pair_allowed,
        color: [[Color::EQ; MAX_ARITY]; MAX_ARITY],
        rep: [0; MAX_ARITY],
        reps: Vec::new(),
        distinct: t.distinct_colors().collect(),
        results: BTreeSet::new(),
    };
    s.dfs(0);
    Ok(OrbitRelation::from_set(f.free.len(), s.results))
}

impl Search<'_> {
    fn allowed(&self, u: usize, v: usize, c: Color) -> bool {
        self.pair_allowed[u][v] & (1 << c.0) != 0
    }

    fn checks_pass(&self, p: usize) -> bool {
        self.checks[p].iter().all(|ch| {
            let code = pack(ch.vars.len(), |a, b| self.color[ch.vars[a]][ch.vars[b]]);
            ch.allowed.contains(&code)
        })
    }

    fn dfs(&mut self, p: usize) -> bool {
        if p == self.order.len() {
            let free = &self.free;
            let code = pack(free.len(), |a, b| self.color[free[a]][free[b]]);
            self.results.insert(OrbitLabel::from_code(free.len(), code));
            return true;
        }
        let stop_on_find = p >= self.nfree;
        let v = self.order[p];
        for ri in 0..self.reps.len() {
            let r = self.reps[ri];
            let mut ok = true;
            for &u in &self.order[..p] {
                let c = if self.rep[u] == r { Color::EQ } else { self.color[r][u] };
                if !self.allowed(v, u, c) {
                    ok = false;
                    break;
                }
                self.color[v][u] = c;
                self.color[u][v] = c;
            }
            if !ok {
                continue;
            }
            self.rep[v] = r;
            if self.checks_pass(p) && self.dfs(p + 1) && stop_on_find {
                return true;
            }
        }
        self.rep[v] = v;
        let found = self.open_class(p, v, 0);
        found && stop_on_find
    }

    fn open_class(&mut self, p: usize, v: usize, i: usize) -> bool {
        let stop_on_find = p >= self.nfree;
        if i == self.reps.len() {
            for &u in &self.order[..p] {
                let c = self.color[v][self.rep[u]];
                if !self.allowed(v, u, c) {
                    return false;
                }
                self.color[v][u] = c;
                self.color[u][v] = c;
            }
            if !self.checks_pass(p) {
                return false;
            }
            self.reps.push(v);
            let found = self.dfs(p + 1);
            self.reps.pop();
            return found;
        }
        let r = self.reps[i];
        let mut any = false;
        for ci in 0..self.distinct.len() {
            let c = self.distinct[ci];
            let members_ok = self.order[..p].iter().all(|&u| self.rep[u] != r || self.allowed(v, u, c));
            if !members_ok {
                continue;
            }
            self.color[v][r] = c;
            self.color[r][v] = c;
            if c.is_real() && !self.template.forbidden().is_empty() {
                let mut verts: Vec<usize> = self.reps[..=i].to_vec();
                verts.push(v);
                let color = &self.color;
                if self.template.hits_forbidden(&verts, &|a, b| color[a][b], &[v, r]) {
                    continue;
                }
            }
            if self.open_class(p, v, i + 1) {
                any = true;
                if stop_on_find {
                    return true;
                }
            }
        }
        any
    }
}

/// Binary relation of a single orbital.
pub fn orbital(c: Color) -> OrbitRelation {
    OrbitRelation::binary(OrbitalSet::single(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{random_graph, triangle_free};

    fn set(cs: &[Color]) -> OrbitRelation {
        OrbitRelation::binary(cs.iter().copied().collect())
    }

    #[test]
    fn path_of_two_edges() {
        let e = Color(2);
        let er = orbital(e);
        let f = PPFormula::new(3, vec![0, 1]).atom(&er, &[0, 2]).atom(&er, &[2, 1]);
        let h = triangle_free();
        assert_eq!(pp_eval(&h, &f).unwrap(), set(&[Color::EQ, Color::NULL]));
        let rg = random_graph();
        assert_eq!(pp_eval(&rg, &f).unwrap(), set(&[Color::EQ, Color::NULL, e]));
    }

    #[test]
    fn disjoint_orbitals() {
        let e = orbital(Color(2));
        let n = orbital(Color::NULL);
        let f = PPFormula::new(2, vec![0, 1]).atom(&e, &[0, 1]).atom(&n, &[0, 1]);
        assert!(pp_eval(&random_graph(), &f).unwrap().is_empty());
    }

    #[test]
    fn no_free_variables() {
        let e = orbital(Color(2));
        let tri = PPFormula::new(3, vec![]).atom(&e, &[0, 1]).atom(&e, &[1, 2]).atom(&e, &[0, 2]);
        assert!(pp_eval(&triangle_free(), &tri).unwrap().is_empty());
        assert_eq!(pp_eval(&random_graph(), &tri).unwrap().len(), 1);
    }

    #[test]
    fn errors() {
        let e = orbital(Color(2));
        let f = PPFormula::new(2, vec![0]).atom(&e, &[0]);
        assert!(matches!(pp_eval(&random_graph(), &f), Err(AlgebraError::ScopeArityMismatch { .. })));
        let f = PPFormula::new(9, vec![0]);
        assert!(matches!(pp_eval(&random_graph(), &f), Err(AlgebraError::ArityCapExceeded { .. })));
        let f = PPFormula::new(2, vec![0, 4]);
        assert!(matches!(pp_eval(&random_graph(), &f), Err(AlgebraError::UnknownVariable(4))));
    }

    #[test]
    fn repeated_scope_variable() {
        let eq = orbital(Color::EQ);
        let e = orbital(Color(2));
        let f = PPFormula::new(1, vec![0]).atom(&eq, &[0, 0]);
        assert_eq!(pp_eval(&random_graph(), &f).unwrap().len(), 1);
        let f = PPFormula::new(1, vec![0]).atom(&e, &[0, 0]);
        assert!(pp_eval(&random_graph(), &f).unwrap().is_empty());
    }
}
