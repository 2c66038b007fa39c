//! CSP instances over a template, the (k, l)-minimality fixpoint and the
//! constructive solvers.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, SolverError};
use crate::instance_graph::{build_instance_graph, shrink_by_component};
use crate::label::{Color, OrbitLabel, MAX_ARITY};
use crate::relation::{OrbitRelation, OrbitalSet};
use crate::template::{ColoredStructure, Template};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub scope: Vec<usize>,
    pub relation: OrbitRelation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub variables: Vec<String>,
    pub constraints: Vec<ConstraintDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub scope: Vec<String>,
    pub relation: String,
}

impl Instance {
    pub fn new(variables: Vec<String>, constraints: Vec<Constraint>) -> Result<Self, SolverError> {
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v) {
                return Err(SolverError::Malformed(format!("variable {v:?} declared twice")));
            }
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.scope.len() != c.relation.arity() {
                return Err(SolverError::ArityMismatch(format!(
                    "constraint {i} has a scope of {} variables for a relation of arity {}",
                    c.scope.len(),
                    c.relation.arity()
                )));
            }
            if let Some(&v) = c.scope.iter().find(|&&v| v >= variables.len()) {
                return Err(SolverError::UnknownVariable(format!("#{v}")));
            }
            let distinct: HashSet<_> = c.scope.iter().collect();
            if distinct.len() != c.scope.len() {
                return Err(SolverError::ArityMismatch(format!("constraint {i} repeats a variable in its scope")));
            }
        }
        Ok(Instance { variables, constraints })
    }

    /// An instance on `n` variables named `x0, x1, ...`.
    pub fn with_variables(n: usize, constraints: Vec<Constraint>) -> Result<Self, SolverError> {
        Self::new((0..n).map(|i| format!("x{i}")).collect(), constraints)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_trivial(&self) -> bool {
        self.constraints.iter().any(|c| c.relation.is_empty())
    }

    /// Total number of orbit labels over all constraints.
    pub fn size(&self) -> usize {
        self.constraints.iter().map(|c| c.relation.len()).sum()
    }

    /// Intersection of the projections to `(i, j)` of every constraint
    /// covering both variables, or `None` if no constraint does.
    pub fn pair_projection(&self, i: usize, j: usize) -> Option<OrbitalSet> {
        let mut out: Option<OrbitalSet> = None;
        for c in &self.constraints {
            let (Some(a), Some(b)) = (position(&c.scope, i), position(&c.scope, j)) else { continue };
            let s = c.relation.pair_orbitals(a.min(b), a.max(b));
            out = Some(out.map_or(s, |o| o.intersection(s)));
        }
        out
    }

    /// `I_{i,j}` for every covered pair `i < j`.
    pub fn pair_projections(&self) -> BTreeMap<(usize, usize), OrbitalSet> {
        let mut out = BTreeMap::new();
        for i in 0..self.num_variables() {
            for j in i + 1..self.num_variables() {
                if let Some(s) = self.pair_projection(i, j) {
                    out.insert((i, j), s);
                }
            }
        }
        out
    }

    /// Keeps only the tuples whose `(i, j)` pair lies in `allowed`.
    pub fn restrict_pair(&self, i: usize, j: usize, allowed: OrbitalSet) -> Instance {
        let mut out = self.clone();
        let mut covered = false;
        for c in &mut out.constraints {
            let (Some(a), Some(b)) = (position(&c.scope, i), position(&c.scope, j)) else { continue };
            covered = true;
            c.relation = c.relation.filter(|l| allowed.contains(l.color(a, b)));
        }
        if !covered {
            out.constraints.push(Constraint { scope: vec![i, j], relation: OrbitRelation::binary(allowed) });
        }
        out
    }

    /// Whether the map sending each variable to its class of `quotient`
    /// satisfies every constraint of the instance in `s`.
    pub fn is_satisfied_by(&self, quotient: &[usize], s: &ColoredStructure) -> bool {
        quotient.len() == self.num_variables()
            && self.constraints.iter().all(|c| {
                let verts: Vec<usize> = c.scope.iter().map(|&v| quotient[v]).collect();
                c.relation.contains(&s.label_of(&verts))
            })
    }
}

fn position(scope: &[usize], v: usize) -> Option<usize> {
    scope.iter().position(|&x| x == v)
}

/// Resolves an instance document. Relation names are palette colors, `=`,
/// `N`, or the names in `relations`.
pub fn load_instance(t: &Template, text: &str, relations: &[(String, OrbitRelation)]) -> Result<Instance, SolverError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| SolverError::Malformed(e.to_string()))?;
    instance_from_doc(t, &doc, relations)
}

pub fn instance_from_doc(t: &Template, doc: &InstanceDoc, relations: &[(String, OrbitRelation)]) -> Result<Instance, SolverError> {
    let index: HashMap<&str, usize> = doc.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut constraints = Vec::new();
    for c in &doc.constraints {
        let scope = c
            .scope
            .iter()
            .map(|v| index.get(v.as_str()).copied().ok_or_else(|| SolverError::UnknownVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let relation = match relations.iter().find(|(n, _)| *n == c.relation) {
            Some((_, r)) => r.clone(),
            None => match t.color(&c.relation) {
                Some(col) => OrbitRelation::binary(OrbitalSet::single(col)),
                None => return Err(SolverError::UnknownRelation(c.relation.clone())),
            },
        };
        constraints.push(Constraint { scope, relation });
    }
    Instance::new(doc.variables.clone(), constraints)
}

pub fn instance_to_doc(i: &Instance, names: &dyn Fn(usize, &OrbitRelation) -> String) -> InstanceDoc {
    InstanceDoc {
        variables: i.variables.clone(),
        constraints: i
            .constraints
            .iter()
            .enumerate()
            .map(|(k, c)| ConstraintDoc {
                scope: c.scope.iter().map(|&v| i.variables[v].clone()).collect(),
                relation: names(k, &c.relation),
            })
            .collect(),
    }
}

/// How the pruning phase of minimality visits constraints.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// One constraint at a time, each seeing the effect of the previous ones.
    Sequential,
    /// Synchronous rounds, every constraint pruned in parallel against the
    /// projections of the previous round.
    Parallel,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Positions of the constraint scope belonging to each `k`-subset of its
/// variables, keyed by the sorted variable subset.
fn projection_keys(scope: &[usize], k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    subsets(scope.len(), k)
        .into_iter()
        .map(|pos| {
            let mut pairs: Vec<(usize, usize)> = pos.iter().map(|&p| (scope[p], p)).collect();
            pairs.sort_unstable();
            (pairs.iter().map(|x| x.0).collect(), pairs.iter().map(|x| x.1).collect())
        })
        .collect()
}

type Projections = HashMap<Vec<usize>, HashSet<OrbitLabel>>;

fn project(c: &Constraint, keys: &[(Vec<usize>, Vec<usize>)]) -> Vec<HashSet<OrbitLabel>> {
    keys.iter().map(|(_, pos)| c.relation.iter().map(|l| l.restrict(pos)).collect()).collect()
}

fn prune(c: &Constraint, keys: &[(Vec<usize>, Vec<usize>)], p: &Projections) -> OrbitRelation {
    c.relation.filter(|l| keys.iter().all(|(vars, pos)| p[vars].contains(&l.restrict(pos))))
}

fn merge(p: &mut Projections, keys: &[(Vec<usize>, Vec<usize>)], sets: Vec<HashSet<OrbitLabel>>) {
    for ((vars, _), s) in keys.iter().zip(sets) {
        match p.get_mut(vars) {
            Some(cur) => cur.retain(|l| s.contains(l)),
            None => {
                p.insert(vars.clone(), s);
            }
        }
    }
}

/// Establishes (k, l)-minimality: covers every `l`-subset of variables by a
/// constraint, then prunes tuples until all constraints agree on their
/// projections to every `k`-subset they share. `l` is capped at the number
/// of variables.
pub fn establish_minimality(t: &Template, i: &Instance, k: usize, l: usize) -> Result<Instance, SolverError> {
    establish_minimality_with(t, i, k, l, Schedule::Sequential)
}

pub fn establish_minimality_with(
    t: &Template,
    i: &Instance,
    k: usize,
    l: usize,
    schedule: Schedule,
) -> Result<Instance, SolverError> {
    if l > MAX_ARITY {
        return Err(AlgebraError::ArityCapExceeded { arity: l, cap: MAX_ARITY }.into());
    }
    if k > l {
        return Err(SolverError::Malformed(format!("k = {k} exceeds l = {l}")));
    }
    let n = i.num_variables();
    let l = l.min(n);
    let k = k.min(l);
    let mut out = i.clone();
    if l > 0 {
        let full = t.enumerate_orbits(l)?;
        let scopes: Vec<HashSet<usize>> = out.constraints.iter().map(|c| c.scope.iter().copied().collect()).collect();
        for s in subsets(n, l) {
            if !scopes.iter().any(|sc| s.iter().all(|v| sc.contains(v))) {
                out.constraints.push(Constraint { scope: s, relation: full.clone() });
            }
        }
    }
    let keys: Vec<_> = out.constraints.iter().map(|c| projection_keys(&c.scope, k)).collect();
    match schedule {
        Schedule::Sequential => loop {
            let mut p = Projections::new();
            for (c, ks) in out.constraints.iter().zip(&keys) {
                merge(&mut p, ks, project(c, ks));
            }
            let mut changed = false;
            for ci in 0..out.constraints.len() {
                let ks = &keys[ci];
                let pruned = prune(&out.constraints[ci], ks, &p);
                if pruned.len() != out.constraints[ci].relation.len() {
                    changed = true;
                    out.constraints[ci].relation = pruned;
                    let sets = project(&out.constraints[ci], ks);
                    merge(&mut p, ks, sets);
                }
            }
            if !changed {
                break;
            }
        },
        Schedule::Parallel => loop {
            let sets: Vec<_> = out.constraints.par_iter().zip(&keys).map(|(c, ks)| project(c, ks)).collect();
            let mut p = Projections::new();
            for (ks, s) in keys.iter().zip(sets) {
                merge(&mut p, ks, s);
            }
            let pruned: Vec<OrbitRelation> =
                out.constraints.par_iter().zip(&keys).map(|(c, ks)| prune(c, ks, &p)).collect();
            let mut changed = false;
            for (c, r) in out.constraints.iter_mut().zip(pruned) {
                if r.len() != c.relation.len() {
                    changed = true;
                    c.relation = r;
                }
            }
            if !changed {
                break;
            }
        },
    }
    if out.is_trivial() {
        for c in &mut out.constraints {
            c.relation = OrbitRelation::empty(c.relation.arity());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Class index of every variable.
    pub quotient: Vec<usize>,
    pub structure: ColoredStructure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(Solution),
    Unsat,
    Incomplete(String),
}

impl Outcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, Outcome::Sat(_))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    PaperFaithful,
}

/// Closure steps granted to each instance graph in the proof-driven strategy.
pub const DEFAULT_GRAPH_BUDGET: usize = 400;

pub fn solve(t: &Template, i: &Instance, strategy: Strategy) -> Result<Outcome, SolverError> {
    solve_with(t, i, strategy, t.bound(), DEFAULT_GRAPH_BUDGET)
}

pub fn solve_with(t: &Template, i: &Instance, strategy: Strategy, l: usize, budget: usize) -> Result<Outcome, SolverError> {
    if i.constraints().is_empty() {
        let n = i.num_variables();
        return Ok(Outcome::Sat(Solution { quotient: (0..n).collect(), structure: ColoredStructure::empty(n) }));
    }
    let mut m = establish_minimality(t, i, 2, l)?;
    if m.is_trivial() {
        return Ok(Outcome::Unsat);
    }
    match strategy {
        Strategy::Greedy => loop {
            let open = m.pair_projections().into_iter().find(|(_, s)| s.len() >= 2);
            let Some(((a, b), s)) = open else { return Ok(extract(t, i, &m)) };
            let mut next = None;
            for c in s.iter() {
                let r = establish_minimality(t, &m.restrict_pair(a, b, OrbitalSet::single(c)), 2, l)?;
                if !r.is_trivial() {
                    next = Some(r);
                    break;
                }
            }
            match next {
                Some(r) => m = r,
                None => {
                    return Ok(Outcome::Incomplete(format!(
                        "every single-orbital restriction of ({}, {}) trivializes the instance",
                        i.variables()[a],
                        i.variables()[b]
                    )))
                }
            }
        },
        Strategy::PaperFaithful => loop {
            let g = build_instance_graph(t, &m, budget)?;
            let Some(&comp) = g.maximal.first() else { return Ok(extract(t, i, &m)) };
            let shrunk = match shrink_by_component(&m, &g, comp) {
                Ok(s) => s,
                Err(e @ (SolverError::MixedComponent | SolverError::NoShrink)) => {
                    return Ok(Outcome::Incomplete(e.to_string()))
                }
                Err(e) => return Err(e),
            };
            let r = establish_minimality(t, &shrunk, 2, l)?;
            if r.is_trivial() {
                return Ok(Outcome::Incomplete("shrinking by a maximal component trivialized the instance".into()));
            }
            m = r;
        },
    }
}

/// Reads a solution off a minimal instance whose pair projections are all
/// single orbitals.
fn extract(t: &Template, original: &Instance, m: &Instance) -> Outcome {
    let n = m.num_variables();
    let proj = m.pair_projections();
    let color = |a: usize, b: usize| -> Option<Color> {
        if a == b {
            return Some(Color::EQ);
        }
        proj.get(&(a.min(b), a.max(b))).and_then(|s| (s.len() == 1).then(|| s.first().unwrap()))
    };
    let mut quotient = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for v in 0..n {
        for (ci, &r) in reps.iter().enumerate() {
            if color(v, r) == Some(Color::EQ) {
                quotient[v] = ci;
                break;
            }
        }
        if quotient[v] == usize::MAX {
            quotient[v] = reps.len();
            reps.push(v);
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            match color(a, b) {
                Some(c) if c.is_eq() != (quotient[a] == quotient[b]) => {
                    return Outcome::Incomplete("equality is not an equivalence on the variables".into())
                }
                None => return Outcome::Incomplete(format!("pair {a}, {b} is not a single orbital")),
                _ => {}
            }
        }
    }
    let structure = ColoredStructure::from_fn(reps.len(), |a, b| color(reps[a], reps[b]).unwrap());
    if !t.is_in_age(&structure).unwrap_or(false) {
        return Outcome::Incomplete("the quotient structure is not in the age".into());
    }
    if !original.is_satisfied_by(&quotient, &structure) {
        return Outcome::Incomplete("the quotient structure violates a constraint".into());
    }
    Outcome::Sat(Solution { quotient, structure })
}
