//! Generators and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use amalgam::pp::{pp_eval, PPFormula};
use amalgam::relation::{are_complementary, implication_of, load_relations, ImplicationWitness};
use amalgam::solver::{Constraint, Instance};
use amalgam::template::{random_graph, triangle_free, two_color_a_free};
use amalgam::{Color, OrbitLabel, OrbitRelation, OrbitalSet, Template};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn templates() -> Vec<(&'static str, Template)> {
    vec![("random graph", random_graph()), ("H_3", triangle_free()), ("A-triangle-free", two_color_a_free())]
}

pub fn first(l: &OrbitLabel) -> Color {
    l.color(0, 1)
}

pub fn last(l: &OrbitLabel) -> Color {
    let k = l.arity();
    l.color(k - 2, k - 1)
}

/// The quaternary label with the given end orbitals and every cross pair `N`.
pub fn free_pair(a: Color, b: Color) -> OrbitLabel {
    let classes: Vec<usize> = match (a.is_eq(), b.is_eq()) {
        (true, true) => vec![0, 0, 1, 1],
        (true, false) => vec![0, 0, 1, 2],
        (false, true) => vec![0, 1, 2, 2],
        (false, false) => vec![0, 1, 2, 3],
    };
    let side = |x: usize| if x == classes[0] || x == classes[1] { 0 } else { 1 };
    OrbitLabel::from_classes(&classes, |x, y| match (side(x), side(y)) {
        (0, 0) => a,
        (1, 1) => b,
        _ => Color::NULL,
    })
}

pub fn binary(c: Color) -> OrbitRelation {
    OrbitRelation::binary(OrbitalSet::single(c))
}

pub fn neq(t: &Template) -> OrbitRelation {
    OrbitRelation::binary(t.distinct_colors().collect())
}

/// A relation set that instance generation draws from.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub name: String,
    pub binaries: Vec<OrbitRelation>,
    pub quaternaries: Vec<OrbitRelation>,
}

impl GeneratorSet {
    pub fn all(&self) -> Vec<OrbitRelation> {
        self.binaries.iter().chain(&self.quaternaries).cloned().collect()
    }
}

pub fn binaries(t: &Template) -> Vec<OrbitRelation> {
    let mut v: Vec<OrbitRelation> = t.colors().map(binary).collect();
    v.push(neq(t));
    v
}

/// `⋃_c (c, N, N, N, N, c)` over the anti-reflexive orbitals.
pub fn parallel(t: &Template) -> OrbitRelation {
    OrbitRelation::from_labels(4, t.distinct_colors().map(|c| free_pair(c, c))).unwrap()
}

/// A conjunction of random binary atoms on four free and one bound
/// variable.
pub fn random_pp(t: &Template, rng: &mut impl Rng) -> OrbitRelation {
    let bins = binaries(t);
    loop {
        let atoms: Vec<(usize, usize, usize)> = (0..rng.gen_range(2..=4))
            .map(|_| {
                let a = rng.gen_range(0..5);
                let mut b = rng.gen_range(0..5);
                while b == a {
                    b = rng.gen_range(0..5);
                }
                (rng.gen_range(1..bins.len()), a, b)
            })
            .collect();
        let mut f = PPFormula::new(5, vec![0, 1, 2, 3]);
        for &(r, a, b) in &atoms {
            f = f.atom(&bins[r], &[a, b]);
        }
        let r = pp_eval(t, &f).unwrap();
        if !r.is_empty() && r.first_pair().len() >= 2 {
            return r;
        }
    }
}

/// A union of random quaternary orbits.
pub fn random_labels(labels: &[OrbitLabel], size: usize, rng: &mut impl Rng) -> OrbitRelation {
    OrbitRelation::from_labels(4, labels.choose_multiple(rng, size).copied()).unwrap()
}

/// Passes the relations through their document form, as loaded from disk.
pub fn reload(t: &Template, rels: &[OrbitRelation]) -> Vec<OrbitRelation> {
    let docs: Vec<_> = rels.iter().enumerate().map(|(i, r)| r.to_doc(t, &format!("R{i}"))).collect();
    let text = serde_json::to_string(&docs).unwrap();
    load_relations(t, &text).unwrap().into_iter().map(|(_, r)| r).collect()
}

pub fn random_instance(set: &GeneratorSet, rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(3..=6);
    let m = rng.gen_range(2..=8);
    let mut cs = Vec::with_capacity(m);
    for _ in 0..m {
        let quaternary = n >= 4 && !set.quaternaries.is_empty() && rng.gen_bool(0.4);
        let (relation, k) = if quaternary {
            (set.quaternaries.choose(rng).unwrap().clone(), 4)
        } else {
            (set.binaries.choose(rng).unwrap().clone(), 2)
        };
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        vars.truncate(k);
        cs.push(Constraint { scope: vars, relation });
    }
    Instance::with_variables(n, cs).unwrap()
}

/// Random complementary implications `R1: A → B`, `R2: B → A`, each
/// relation a small union of quaternary orbits.
pub fn random_complementary(
    t: &Template,
    labels: &[OrbitLabel],
    rng: &mut impl Rng,
) -> Option<(ImplicationWitness, ImplicationWitness)> {
    let colors: Vec<Color> = t.colors().collect();
    let pick = |rng: &mut dyn rand::RngCore| -> Vec<Color> {
        let k = rng.gen_range(2..=colors.len().min(3));
        colors.choose_multiple(rng, k).copied().collect()
    };
    let p = pick(rng);
    let q = pick(rng);
    let by_ends = |a: Color, b: Color| -> Vec<OrbitLabel> {
        labels.iter().filter(|l| first(l) == a && last(l) == b).copied().collect()
    };
    let build = |from: &[Color], to: &[Color], rng: &mut dyn rand::RngCore| -> Option<OrbitRelation> {
        let mut chosen = BTreeSet::new();
        let mut hit = BTreeSet::new();
        for &a in from {
            for _ in 0..rng.gen_range(1..=2) {
                let b = *to.choose(rng).unwrap();
                chosen.insert(*by_ends(a, b).choose(rng)?);
                hit.insert(b);
            }
        }
        for &b in to {
            if !hit.contains(&b) {
                let a = *from.choose(rng).unwrap();
                chosen.insert(*by_ends(a, b).choose(rng)?);
            }
        }
        Some(OrbitRelation::from_labels(4, chosen).unwrap())
    };
    let r1 = build(&p, &q, rng)?;
    let r2 = build(&q, &p, rng)?;
    for a in r1.first_pair().proper_subsets() {
        let Some(w1) = implication_of(&r1, a) else { continue };
        let Some(w2) = implication_of(&r2, w1.to) else { continue };
        if are_complementary(&w1, &w2) {
            return Some((w1, w2));
        }
    }
    None
}

/// Vertices are `(side, orbital)` with side 0 for left.
pub type V = (u8, Color);

pub fn arcs(r1: &OrbitRelation, r2: &OrbitRelation) -> BTreeSet<(V, V)> {
    let mut out = BTreeSet::new();
    for l in r1.iter() {
        out.insert(((0, first(l)), (1, last(l))));
    }
    for l in r2.iter() {
        out.insert(((1, first(l)), (0, last(l))));
    }
    out
}

/// Vertices reachable from `start` by walks of exactly `len` arcs.
pub fn walk_ends(arcs: &BTreeSet<(V, V)>, start: V, len: usize) -> BTreeSet<V> {
    let mut cur = BTreeSet::from([start]);
    for _ in 0..len {
        cur = arcs.iter().filter(|(a, _)| cur.contains(a)).map(|(_, b)| *b).collect();
    }
    cur
}

/// Strongly connected components by transitive closure.
pub fn components(arcs: &BTreeSet<(V, V)>) -> Vec<BTreeSet<V>> {
    let verts: Vec<V> = arcs.iter().flat_map(|(a, b)| [*a, *b]).collect::<BTreeSet<_>>().into_iter().collect();
    let idx: HashMap<V, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = verts.len();
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in arcs {
        reach[idx[a]][idx[b]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out: Vec<BTreeSet<V>> = Vec::new();
    for i in 0..n {
        if out.iter().any(|c| c.contains(&verts[i])) {
            continue;
        }
        let c: BTreeSet<V> = (0..n).filter(|&j| j == i || (reach[i][j] && reach[j][i])).map(|j| verts[j]).collect();
        out.push(c);
    }
    out
}

pub fn plus_ref(a: OrbitalSet, r: &OrbitRelation) -> OrbitalSet {
    r.iter().filter(|l| a.contains(first(l))).map(last).collect()
}

/// Self-complementarity of `r` with endpoint `a`, computed from scratch.
pub fn self_complementary_ref(r: &OrbitRelation, a: OrbitalSet) -> bool {
    let p: OrbitalSet = r.iter().map(first).collect();
    let q: OrbitalSet = r.iter().map(last).collect();
    if p != q || a.is_empty() || !a.is_proper_subset(p) || plus_ref(a, r) != a {
        return false;
    }
    components(&arcs(r, r)).iter().filter(|c| c.len() > 1).all(|c| {
        let side = |s: u8| -> BTreeSet<Color> { c.iter().filter(|v| v.0 == s).map(|v| v.1).collect() };
        side(0) == side(1)
    })
}
