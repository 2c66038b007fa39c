//! The bipartite digraph of a pair of relations and its components.
//!
//! Left vertices are copies of the orbitals in the first projection of `r1`,
//! right vertices copies of those in the first projection of `r2`. A tuple of
//! `r1` with first pair `O` and last pair `P` gives an arc `O_L → P_R`; a
//! tuple of `r2` gives an arc `O_R → P_L`.

use std::collections::{BTreeMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::label::{Color, OrbitLabel};
use crate::relation::{classify_tuple, plus, OrbitRelation, OrbitalSet};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub side: Side,
    pub orbital: Color,
}

impl Vertex {
    pub fn left(c: Color) -> Self {
        Vertex { side: Side::L, orbital: c }
    }

    pub fn right(c: Color) -> Self {
        Vertex { side: Side::R, orbital: c }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: Vertex,
    pub to: Vertex,
    /// Every tuple inducing this arc, in canonical order.
    pub witnesses: Vec<OrbitLabel>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Trivial,
    Degenerated(Color),
    NonDegenerated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<Vertex>,
    pub kind: ComponentKind,
    /// No arc enters the component.
    pub minimal: bool,
    /// No arc leaves the component.
    pub maximal: bool,
}

impl Component {
    pub fn is_trivial(&self) -> bool {
        self.kind == ComponentKind::Trivial
    }

    pub fn orbitals(&self, side: Side) -> OrbitalSet {
        self.vertices.iter().filter(|v| v.side == side).map(|v| v.orbital).collect()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }
}

#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    components: Vec<Component>,
    component_of: BTreeMap<Vertex, usize>,
}

/// Whether `r1` and `r2` agree on projections.
pub fn agree_on_projections(r1: &OrbitRelation, r2: &OrbitRelation) -> bool {
    r1.arity() >= 2 && r2.arity() >= 2 && r1.last_pair() == r2.first_pair() && r2.last_pair() == r1.first_pair()
}

pub fn analyze_pair(r1: &OrbitRelation, r2: &OrbitRelation) -> Result<BipartiteGraph, AnalysisError> {
    if !agree_on_projections(r1, r2) {
        return Err(AnalysisError::ProjectionsDisagree);
    }
    let mut arcs: BTreeMap<(Vertex, Vertex), Vec<OrbitLabel>> = BTreeMap::new();
    for (r, from, to) in [(r1, Side::L, Side::R), (r2, Side::R, Side::L)] {
        let k = r.arity();
        for l in r.iter() {
            let a = Vertex { side: from, orbital: l.color(0, 1) };
            let b = Vertex { side: to, orbital: l.color(k - 2, k - 1) };
            arcs.entry((a, b)).or_default().push(*l);
        }
    }
    let mut vertices: Vec<Vertex> = r1.first_pair().iter().map(Vertex::left).collect();
    vertices.extend(r2.first_pair().iter().map(Vertex::right));
    let arcs = arcs.into_iter().map(|((from, to), witnesses)| Arc { from, to, witnesses }).collect();
    Ok(BipartiteGraph::build(vertices, arcs))
}

impl BipartiteGraph {
    fn build(mut vertices: Vec<Vertex>, arcs: Vec<Arc>) -> Self {
        vertices.sort();
        let index: BTreeMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut g: DiGraph<Vertex, ()> = DiGraph::with_capacity(vertices.len(), arcs.len());
        let nodes: Vec<_> = vertices.iter().map(|v| g.add_node(*v)).collect();
        for a in &arcs {
            g.add_edge(nodes[index[&a.from]], nodes[index[&a.to]], ());
        }
        let mut sccs: Vec<Vec<Vertex>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut vs: Vec<Vertex> = c.into_iter().map(|n| g[n]).collect();
                vs.sort();
                vs
            })
            .collect();
        sccs.sort();
        let mut component_of = BTreeMap::new();
        for (i, c) in sccs.iter().enumerate() {
            for v in c {
                component_of.insert(*v, i);
            }
        }
        let n = sccs.len();
        let mut entered = vec![false; n];
        let mut left = vec![false; n];
        let mut all_degenerated = vec![true; n];
        for a in &arcs {
            let (cf, ct) = (component_of[&a.from], component_of[&a.to]);
            if cf != ct {
                left[cf] = true;
                entered[ct] = true;
            } else if !a
                .witnesses
                .iter()
                .all(|l| l.arity() == 4 && classify_tuple(l).is_ok_and(|s| s.degenerated))
            {
                all_degenerated[cf] = false;
            }
        }
        let components = sccs
            .into_iter()
            .enumerate()
            .map(|(i, vs)| {
                let kind = if vs.len() < 2 {
                    ComponentKind::Trivial
                } else if all_degenerated[i] && vs.len() == 2 && vs[0].orbital == vs[1].orbital {
                    ComponentKind::Degenerated(vs[0].orbital)
                } else {
                    ComponentKind::NonDegenerated
                };
                Component { vertices: vs, kind, minimal: !entered[i], maximal: !left[i] }
            })
            .collect();
        BipartiteGraph { vertices, arcs, components, component_of }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component_of(&self, v: Vertex) -> Option<&Component> {
        self.component_of.get(&v).map(|&i| &self.components[i])
    }

    pub fn component_index(&self, v: Vertex) -> Option<usize> {
        self.component_of.get(&v).copied()
    }

    pub fn arc(&self, from: Vertex, to: Vertex) -> Option<&Arc> {
        self.arcs.iter().find(|a| a.from == from && a.to == to)
    }

    pub fn successors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.arcs.iter().filter(move |a| a.from == v).map(|a| a.to)
    }

    pub fn predecessors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.arcs.iter().filter(move |a| a.to == v).map(|a| a.from)
    }

    /// Whether some non-trivial component is not degenerated.
    pub fn has_nondegenerated_component(&self) -> bool {
        self.components.iter().any(|c| c.kind == ComponentKind::NonDegenerated)
    }

    /// Components of the subgraph induced on `left` copies on the left and
    /// `right` copies on the right.
    pub fn subgraph(&self, left: OrbitalSet, right: OrbitalSet) -> BipartiteGraph {
        let keep = |v: &Vertex| match v.side {
            Side::L => left.contains(v.orbital),
            Side::R => right.contains(v.orbital),
        };
        let vertices = self.vertices.iter().copied().filter(keep).collect();
        let arcs = self.arcs.iter().filter(|a| keep(&a.from) && keep(&a.to)).cloned().collect();
        BipartiteGraph::build(vertices, arcs)
    }

    /// The same vertices with every arc reversed.
    pub fn reversed(&self) -> BipartiteGraph {
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc { from: a.to, to: a.from, witnesses: a.witnesses.clone() })
            .collect();
        BipartiteGraph::build(self.vertices.clone(), arcs)
    }

    /// Orbitals `P` such that a path of positive length joins `from` and
    /// `P` on `side`, following arcs forward or backward.
    pub fn reach(&self, direction: Direction, from: Vertex, side: Side) -> Result<OrbitalSet, AnalysisError> {
        if !self.component_of.contains_key(&from) {
            return Err(AnalysisError::UnknownVertex);
        }
        let mut seen: BTreeMap<Vertex, ()> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let step = |v: Vertex| -> Vec<Vertex> {
            match direction {
                Direction::Forward => self.successors(v).collect(),
                Direction::Backward => self.predecessors(v).collect(),
            }
        };
        for w in step(from) {
            if seen.insert(w, ()).is_none() {
                queue.push_back(w);
            }
        }
        while let Some(v) = queue.pop_front() {
            for w in step(v) {
                if seen.insert(w, ()).is_none() {
                    queue.push_back(w);
                }
            }
        }
        Ok(seen.keys().filter(|v| v.side == side).map(|v| v.orbital).collect())
    }

    /// Every vertex reachable from `from` by a path of positive length.
    pub fn reachable(&self, direction: Direction, from: Vertex) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = Vec::new();
        for side in [Side::L, Side::R] {
            if let Ok(s) = self.reach(direction, from, side) {
                out.extend(s.iter().map(|c| Vertex { side, orbital: c }));
            }
        }
        out
    }

    /// Whether the underlying undirected graph has a single part containing
    /// every vertex incident to an arc.
    pub fn is_weakly_connected(&self) -> bool {
        let touched: Vec<Vertex> = self
            .vertices
            .iter()
            .copied()
            .filter(|v| self.arcs.iter().any(|a| a.from == *v || a.to == *v))
            .collect();
        let Some(&start) = touched.first() else {
            return true;
        };
        let mut seen = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for a in &self.arcs {
                let w = if a.from == v {
                    a.to
                } else if a.to == v {
                    a.from
                } else {
                    continue;
                };
                if !seen.contains(&w) {
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        touched.iter().all(|v| seen.contains(v))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

fn require_quaternary(r: &OrbitRelation) -> Result<(), AnalysisError> {
    if r.arity() != 4 {
        return Err(AnalysisError::WrongArity { expected: 4, found: r.arity() });
    }
    Ok(())
}

/// `R(x4, x3, x2, x1)`.
pub fn reversal(r: &OrbitRelation) -> OrbitRelation {
    r.reverse()
}

/// Whether the bipartite graph of `r` and its reversal is connected.
pub fn is_connected(r: &OrbitRelation) -> Result<bool, AnalysisError> {
    require_quaternary(r)?;
    let g = analyze_pair(r, &r.reverse())?;
    Ok(g.is_weakly_connected())
}

/// Whether every non-trivial component of `B_{r,r}` has the same orbitals on
/// both sides, and `r` agrees on projections with itself.
pub fn has_symmetric_components(r: &OrbitRelation) -> Result<bool, AnalysisError> {
    if !agree_on_projections(r, r) {
        return Ok(false);
    }
    let g = analyze_pair(r, r)?;
    Ok(g.components().iter().filter(|c| !c.is_trivial()).all(|c| c.orbitals(Side::L) == c.orbitals(Side::R)))
}

/// Every non-empty proper `A` with `A + r = A`, when `r` has symmetric
/// components; otherwise nothing.
pub fn self_complementary_endpoints(r: &OrbitRelation) -> Result<Vec<OrbitalSet>, AnalysisError> {
    require_quaternary(r)?;
    if !has_symmetric_components(r)? {
        return Ok(Vec::new());
    }
    let p = r.first_pair();
    Ok(p.proper_subsets().filter(|a| plus(*a, r).is_ok_and(|b| b == *a)).collect())
}

/// Whether `r` is a self-complementary `(A → A)`-implication for some `A`.
pub fn is_self_complementary(r: &OrbitRelation) -> Result<bool, AnalysisError> {
    Ok(!self_complementary_endpoints(r)?.is_empty())
}

/// Self-complementarity with the endpoint `a` fixed.
pub fn is_self_complementary_for(r: &OrbitRelation, a: OrbitalSet) -> Result<bool, AnalysisError> {
    require_quaternary(r)?;
    Ok(!a.is_empty()
        && a.is_proper_subset(r.first_pair())
        && plus(a, r).is_ok_and(|b| b == a)
        && has_symmetric_components(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::OrbitLabel;

    const E: Color = Color(2);
    const N: Color = Color::NULL;

    fn q(c12: Color, c34: Color) -> OrbitLabel {
        OrbitLabel::injective(4, |i, j| match (i, j) {
            (0, 1) => c12,
            (2, 3) => c34,
            _ => N,
        })
    }

    fn degen(c: Color) -> OrbitLabel {
        OrbitLabel::from_partition(&[0, 1, 1, 0], &[(0, 1, c)]).unwrap()
    }

    fn xor() -> OrbitRelation {
        OrbitRelation::from_labels(4, [q(E, N), q(N, E)]).unwrap()
    }

    #[test]
    fn xor_graph_has_two_cycles_of_length_two() {
        let g = analyze_pair(&xor(), &xor()).unwrap();
        let nontrivial: Vec<_> = g.components().iter().filter(|c| !c.is_trivial()).collect();
        assert_eq!(nontrivial.len(), 2);
        for c in &nontrivial {
            assert_eq!(c.kind, ComponentKind::NonDegenerated);
            assert!(c.minimal && c.maximal);
            assert_ne!(c.orbitals(Side::L), c.orbitals(Side::R));
        }
        assert_eq!(g.reach(Direction::Forward, Vertex::left(E), Side::L).unwrap(), OrbitalSet::single(E));
        assert_eq!(g.reach(Direction::Forward, Vertex::left(E), Side::R).unwrap(), OrbitalSet::single(N));
    }

    #[test]
    fn degenerated_component() {
        let r = OrbitRelation::from_labels(4, [degen(E)]).unwrap();
        let g = analyze_pair(&r, &r).unwrap();
        assert_eq!(g.components().len(), 1);
        assert_eq!(g.components()[0].kind, ComponentKind::Degenerated(E));
    }

    #[test]
    fn disagreeing_projections() {
        let a = OrbitRelation::from_labels(4, [q(E, E)]).unwrap();
        let b = OrbitRelation::from_labels(4, [q(N, N)]).unwrap();
        assert!(matches!(analyze_pair(&a, &b), Err(AnalysisError::ProjectionsDisagree)));
    }

    #[test]
    fn single_loop_reach() {
        let r = OrbitRelation::from_labels(4, [q(E, E)]).unwrap();
        let g = analyze_pair(&r, &r).unwrap();
        assert_eq!(g.reach(Direction::Forward, Vertex::left(E), Side::L).unwrap(), OrbitalSet::single(E));
        assert!(matches!(
            g.reach(Direction::Forward, Vertex::left(N), Side::L),
            Err(AnalysisError::UnknownVertex)
        ));
    }

    #[test]
    fn connectedness() {
        let blocks = OrbitRelation::from_labels(4, [q(E, E), q(N, N)]).unwrap();
        assert!(!is_connected(&blocks).unwrap());
        let mixed = OrbitRelation::from_labels(4, [q(E, E), q(N, N), q(E, N)]).unwrap();
        assert!(is_connected(&mixed).unwrap());
        assert!(is_connected(&OrbitRelation::empty(3)).is_err());
    }

    #[test]
    fn self_complementarity() {
        assert!(!is_self_complementary(&xor()).unwrap());
        let blocks = OrbitRelation::from_labels(4, [q(E, E), q(N, N)]).unwrap();
        assert!(is_self_complementary(&blocks).unwrap());
        assert!(is_self_complementary_for(&blocks, OrbitalSet::single(E)).unwrap());
        let all: OrbitalSet = [E, N].into_iter().collect();
        assert!(!is_self_complementary_for(&blocks, all).unwrap());
        let full = OrbitRelation::from_labels(4, [q(E, E), q(N, N), q(E, N), q(N, E)]).unwrap();
        assert!(!is_self_complementary(&full).unwrap());
    }
}
