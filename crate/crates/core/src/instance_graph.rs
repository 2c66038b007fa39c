//! The implication graph of a minimal instance and the shrinking step of the
//! width argument.
//!
//! Vertices are pairs of variables together with a proper non-empty subset
//! of their pair projection. Witness relations come from a bounded closure
//! of the quaternary projections of the constraints.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::compose::{compose_once, Kind};
use crate::error::SolverError;
use crate::relation::{plus, OrbitRelation, OrbitalSet};
use crate::solver::Instance;
use crate::template::Template;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphVertex {
    pub pair: (usize, usize),
    pub set: OrbitalSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphArc {
    pub from: usize,
    pub to: usize,
    /// Index into `InstanceGraph::witnesses`.
    pub witness: usize,
}

#[derive(Clone, Debug)]
pub struct InstanceGraph {
    pub vertices: Vec<GraphVertex>,
    pub arcs: Vec<GraphArc>,
    pub witnesses: Vec<OrbitRelation>,
    /// Strongly connected components as sorted vertex indices, ordered by
    /// their least vertex.
    pub components: Vec<Vec<usize>>,
    /// Indices of components with no arc leaving them.
    pub maximal: Vec<usize>,
    /// False when the witness closure ran out of budget.
    pub complete: bool,
}

impl InstanceGraph {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

const PAIR_PERMS: [[usize; 4]; 3] = [[1, 0, 2, 3], [0, 1, 3, 2], [2, 3, 0, 1]];

fn witness_closure(t: &Template, i: &Instance, budget: usize) -> Result<(Vec<OrbitRelation>, bool), SolverError> {
    let mut seen = HashSet::new();
    let mut list = Vec::new();
    let mut push = |r: OrbitRelation, list: &mut Vec<OrbitRelation>| {
        if !r.is_empty() && seen.insert(r.clone()) {
            list.push(r);
        }
    };
    for c in i.constraints() {
        let k = c.scope.len();
        for a in 0..k {
            for b in 0..k {
                for x in 0..k {
                    for y in 0..k {
                        if a < b && x < y && (a, b) != (x, y) {
                            push(c.relation.project0(&[a, b, x, y]), &mut list);
                        }
                    }
                }
            }
        }
    }
    let mut steps = 0usize;
    let mut queue: VecDeque<usize> = (0..list.len()).collect();
    while let Some(n) = queue.pop_front() {
        let r = list[n].clone();
        let mut fresh = Vec::new();
        for p in PAIR_PERMS {
            fresh.push(r.permute(&p)?);
        }
        for m in 0..=n {
            let s = list[m].clone();
            for (a, b) in [(&r, &s), (&s, &r)] {
                if a.last_pair() == b.first_pair() {
                    for kind in [Kind::Circ, Kind::Bowtie] {
                        steps += 1;
                        if steps > budget {
                            return Ok((list, false));
                        }
                        fresh.push(compose_once(t, kind, a, b)?);
                    }
                }
            }
            if m != n && r.first_pair() == s.first_pair() && r.last_pair() == s.last_pair() {
                fresh.push(r.intersect(&s)?);
            }
        }
        for f in fresh {
            let before = list.len();
            push(f, &mut list);
            if list.len() > before {
                queue.push_back(before);
            }
        }
    }
    Ok((list, true))
}

/// Builds the implication graph of a (2, l)-minimal instance.
pub fn build_instance_graph(t: &Template, i: &Instance, budget: usize) -> Result<InstanceGraph, SolverError> {
    let proj = i.pair_projections();
    let mut vertices = Vec::new();
    for (&pair, &s) in &proj {
        for a in s.proper_subsets() {
            vertices.push(GraphVertex { pair, set: a });
        }
    }
    vertices.sort();
    let index: HashMap<GraphVertex, usize> = vertices.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let (witnesses, complete) = if vertices.is_empty() { (Vec::new(), true) } else { witness_closure(t, i, budget)? };

    let mut by_projection: BTreeMap<OrbitalSet, Vec<(usize, usize)>> = BTreeMap::new();
    for (&pair, &s) in &proj {
        by_projection.entry(s).or_default().push(pair);
    }
    let mut arcs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (w, r) in witnesses.iter().enumerate() {
        let (Some(src), Some(dst)) = (by_projection.get(&r.first_pair()), by_projection.get(&r.last_pair())) else {
            continue;
        };
        for a in r.first_pair().proper_subsets() {
            let b = plus(a, r)?;
            if b.is_empty() || !b.is_proper_subset(r.last_pair()) {
                continue;
            }
            for &p in src {
                for &q in dst {
                    let from = index[&GraphVertex { pair: p, set: a }];
                    let to = index[&GraphVertex { pair: q, set: b }];
                    arcs.entry((from, to)).or_insert(w);
                }
            }
        }
    }
    let arcs: Vec<GraphArc> = arcs.into_iter().map(|((from, to), witness)| GraphArc { from, to, witness }).collect();

    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..vertices.len()).map(|_| g.add_node(())).collect();
    for a in &arcs {
        g.add_edge(nodes[a.from], nodes[a.to], ());
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    components.sort();
    let mut comp_of = vec![0; vertices.len()];
    for (ci, c) in components.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }
    let mut leaves = vec![false; components.len()];
    for a in &arcs {
        if comp_of[a.from] != comp_of[a.to] {
            leaves[comp_of[a.from]] = true;
        }
    }
    let maximal = (0..components.len()).filter(|&c| !leaves[c]).collect();
    Ok(InstanceGraph { vertices, arcs, witnesses, components, maximal, complete })
}

/// Conjoins every constraint with `A(x_i, x_j)` for the vertices
/// `((x_i, x_j), A)` of a component. All vertices must carry the same `A`.
pub fn shrink_by_component(i: &Instance, g: &InstanceGraph, component: usize) -> Result<Instance, SolverError> {
    let comp = g
        .components
        .get(component)
        .ok_or_else(|| SolverError::Malformed(format!("no component {component}")))?;
    let sets: HashSet<OrbitalSet> = comp.iter().map(|&v| g.vertices[v].set).collect();
    if sets.len() != 1 {
        return Err(SolverError::MixedComponent);
    }
    let mut out = i.clone();
    for &v in comp {
        let GraphVertex { pair: (a, b), set } = g.vertices[v];
        out = out.restrict_pair(a, b, set);
    }
    if out.size() >= i.size() {
        return Err(SolverError::NoShrink);
    }
    Ok(out)
}
