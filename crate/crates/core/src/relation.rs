//! Relations as finite sets of orbit labels.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::AlgebraError;
use crate::label::{Color, OrbitLabel, MAX_ARITY};
use crate::template::Template;

/// A set of orbitals, one bit per color.
#[derive(Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitalSet(u16);

impl OrbitalSet {
    pub const EMPTY: OrbitalSet = OrbitalSet(0);

    pub fn single(c: Color) -> Self {
        OrbitalSet(1 << c.0)
    }

    pub fn from_bits(bits: u16) -> Self {
        OrbitalSet(bits)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, c: Color) -> bool {
        self.0 & (1 << c.0) != 0
    }

    pub fn insert(&mut self, c: Color) {
        self.0 |= 1 << c.0;
    }

    pub fn union(self, o: Self) -> Self {
        OrbitalSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        OrbitalSet(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        OrbitalSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_proper_subset(self, o: Self) -> bool {
        self.is_subset(o) && self != o
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Color> {
        (0..16u8).filter(move |i| self.0 & (1 << i) != 0).map(Color)
    }

    pub fn first(self) -> Option<Color> {
        self.iter().next()
    }

    /// Every subset of `self`, in increasing bit order.
    pub fn subsets(self) -> impl Iterator<Item = OrbitalSet> {
        let full = self.0;
        let mut sub: Option<u16> = Some(0);
        std::iter::from_fn(move || {
            let cur = sub?;
            sub = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(OrbitalSet(cur))
        })
    }

    /// Non-empty proper subsets of `self`.
    pub fn proper_subsets(self) -> impl Iterator<Item = OrbitalSet> {
        self.subsets().filter(move |s| !s.is_empty() && *s != self)
    }

    pub fn names(self, t: &Template) -> Vec<String> {
        self.iter().map(|c| t.name(c).to_string()).collect()
    }

    pub fn from_names(t: &Template, names: &[String]) -> Result<Self, AlgebraError> {
        let mut s = OrbitalSet::EMPTY;
        for n in names {
            let c = t
                .color(n)
                .ok_or_else(|| AlgebraError::Template(crate::error::TemplateError::UnknownColor(n.clone())))?;
            s.insert(c);
        }
        Ok(s)
    }
}

impl fmt::Debug for OrbitalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

impl FromIterator<Color> for OrbitalSet {
    fn from_iter<I: IntoIterator<Item = Color>>(iter: I) -> Self {
        let mut s = OrbitalSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

/// An automorphism-invariant relation, stored as its set of orbits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitRelation {
    arity: usize,
    labels: BTreeSet<OrbitLabel>,
}

impl fmt::Debug for OrbitRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.arity)?;
        f.debug_set().entries(self.labels.iter()).finish()
    }
}

impl OrbitRelation {
    pub fn empty(arity: usize) -> Self {
        OrbitRelation { arity, labels: BTreeSet::new() }
    }

    /// Collects labels of the given arity.
    pub fn from_labels(arity: usize, labels: impl IntoIterator<Item = OrbitLabel>) -> Result<Self, AlgebraError> {
        let labels: BTreeSet<OrbitLabel> = labels.into_iter().collect();
        if let Some(l) = labels.iter().find(|l| l.arity() != arity) {
            return Err(AlgebraError::WrongArity { expected: arity, found: l.arity() });
        }
        Ok(OrbitRelation { arity, labels })
    }

    pub(crate) fn from_set(arity: usize, labels: BTreeSet<OrbitLabel>) -> Self {
        debug_assert!(labels.iter().all(|l| l.arity() == arity));
        OrbitRelation { arity, labels }
    }

    /// The binary relation consisting of the given orbitals.
    pub fn binary(orbitals: OrbitalSet) -> Self {
        OrbitRelation::from_set(2, orbitals.iter().map(OrbitLabel::orbital).collect())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &BTreeSet<OrbitLabel> {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = &OrbitLabel> {
        self.labels.iter()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, l: &OrbitLabel) -> bool {
        self.labels.contains(l)
    }

    /// The orbitals of a binary relation.
    pub fn orbitals(&self) -> Result<OrbitalSet, AlgebraError> {
        if self.arity != 2 {
            return Err(AlgebraError::WrongArity { expected: 2, found: self.arity });
        }
        Ok(self.labels.iter().map(|l| l.color(0, 1)).collect())
    }

    /// Orbitals of the pair of zero-based positions `(i, j)`.
    pub fn pair_orbitals(&self, i: usize, j: usize) -> OrbitalSet {
        self.labels.iter().map(|l| l.color(i, j)).collect()
    }

    /// Orbitals on the first two coordinates.
    pub fn first_pair(&self) -> OrbitalSet {
        self.pair_orbitals(0, 1)
    }

    /// Orbitals on the last two coordinates, in the order (k-1, k).
    pub fn last_pair(&self) -> OrbitalSet {
        self.pair_orbitals(self.arity - 2, self.arity - 1)
    }

    /// Projection onto zero-based coordinates, which may repeat.
    pub fn project0(&self, coords: &[usize]) -> OrbitRelation {
        OrbitRelation::from_set(coords.len(), self.labels.iter().map(|l| l.restrict(coords)).collect())
    }

    /// Projection onto one-based coordinates, with `-l` meaning `k+1-l`.
    pub fn project(&self, coords: &[i64]) -> Result<OrbitRelation, AlgebraError> {
        if coords.is_empty() {
            return Err(AlgebraError::IndexOutOfRange { index: 0, arity: self.arity });
        }
        let zero = resolve_coords(coords, self.arity)?;
        Ok(self.project0(&zero))
    }

    /// Position `i` of the result is position `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<OrbitRelation, AlgebraError> {
        let mut seen = vec![false; self.arity];
        if perm.len() != self.arity {
            return Err(AlgebraError::WrongArity { expected: self.arity, found: perm.len() });
        }
        for &p in perm {
            if p >= self.arity || std::mem::replace(&mut seen[p], true) {
                return Err(AlgebraError::IndexOutOfRange { index: p as i64 + 1, arity: self.arity });
            }
        }
        Ok(self.project0(perm))
    }

    /// `R(x_k, ..., x_1)`.
    pub fn reverse(&self) -> OrbitRelation {
        let perm: Vec<usize> = (0..self.arity).rev().collect();
        self.project0(&perm)
    }

    pub fn intersect(&self, other: &OrbitRelation) -> Result<OrbitRelation, AlgebraError> {
        if self.arity != other.arity {
            return Err(AlgebraError::WrongArity { expected: self.arity, found: other.arity });
        }
        Ok(OrbitRelation::from_set(self.arity, self.labels.intersection(&other.labels).copied().collect()))
    }

    pub fn union(&self, other: &OrbitRelation) -> Result<OrbitRelation, AlgebraError> {
        if self.arity != other.arity {
            return Err(AlgebraError::WrongArity { expected: self.arity, found: other.arity });
        }
        Ok(OrbitRelation::from_set(self.arity, self.labels.union(&other.labels).copied().collect()))
    }

    /// Keeps the labels satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&OrbitLabel) -> bool) -> OrbitRelation {
        OrbitRelation::from_set(self.arity, self.labels.iter().copied().filter(|l| keep(l)).collect())
    }

    /// The quaternary relation `R(x1, x2, x4) ∧ x2 = x3` of a ternary `R`.
    pub fn lift_ternary(&self) -> Result<OrbitRelation, AlgebraError> {
        if self.arity != 3 {
            return Err(AlgebraError::WrongArity { expected: 3, found: self.arity });
        }
        Ok(self.project0(&[0, 1, 1, 2]))
    }

    /// Parses a relation document against a template.
    pub fn from_doc(t: &Template, doc: &RelationDoc) -> Result<OrbitRelation, AlgebraError> {
        if doc.arity == 0 || doc.arity > MAX_ARITY {
            return Err(AlgebraError::ArityCapExceeded { arity: doc.arity, cap: MAX_ARITY });
        }
        let mut labels = BTreeSet::new();
        for (n, o) in doc.orbits.iter().enumerate() {
            if o.partition.len() != doc.arity {
                return Err(AlgebraError::WrongArity { expected: doc.arity, found: o.partition.len() });
            }
            let mut edges = Vec::with_capacity(o.edges.len());
            for (a, b, name) in &o.edges {
                let c = t
                    .color(name)
                    .ok_or_else(|| AlgebraError::Template(crate::error::TemplateError::UnknownColor(name.clone())))?;
                edges.push((*a, *b, c));
            }
            let l = OrbitLabel::from_partition(&o.partition, &edges)
                .map_err(|e| AlgebraError::Malformed(format!("{}: orbit {n}: {e}", doc.name)))?;
            if !t.admits(&l) {
                return Err(AlgebraError::Malformed(format!("{}: orbit {n} is outside the age", doc.name)));
            }
            labels.insert(l);
        }
        Ok(OrbitRelation::from_set(doc.arity, labels))
    }

    pub fn to_doc(&self, t: &Template, name: &str) -> RelationDoc {
        RelationDoc {
            name: name.to_string(),
            arity: self.arity,
            orbits: self.labels.iter().map(|l| LabelDoc::from_label(t, l)).collect(),
        }
    }
}

pub(crate) fn resolve_coords(coords: &[i64], arity: usize) -> Result<Vec<usize>, AlgebraError> {
    coords
        .iter()
        .map(|&c| {
            let k = arity as i64;
            let z = if c >= 1 && c <= k {
                c - 1
            } else if c <= -1 && c >= -k {
                k + c
            } else {
                return Err(AlgebraError::IndexOutOfRange { index: c, arity });
            };
            Ok(z as usize)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDoc {
    pub partition: Vec<usize>,
    pub edges: Vec<(usize, usize, String)>,
}

impl LabelDoc {
    pub fn from_label(t: &Template, l: &OrbitLabel) -> Self {
        LabelDoc {
            partition: l.partition(),
            edges: l.class_edges().into_iter().map(|(a, b, c)| (a, b, t.name(c).to_string())).collect(),
        }
    }

    pub fn to_label(&self, t: &Template) -> Result<OrbitLabel, AlgebraError> {
        let mut edges = Vec::new();
        for (a, b, name) in &self.edges {
            let c = t
                .color(name)
                .ok_or_else(|| AlgebraError::Template(crate::error::TemplateError::UnknownColor(name.clone())))?;
            edges.push((*a, *b, c));
        }
        OrbitLabel::from_partition(&self.partition, &edges).map_err(AlgebraError::Malformed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub name: String,
    pub arity: usize,
    pub orbits: Vec<LabelDoc>,
}

/// Parses a document holding one relation or a list of relations.
pub fn load_relations(t: &Template, text: &str) -> Result<Vec<(String, OrbitRelation)>, AlgebraError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Docs {
        One(RelationDoc),
        Many(Vec<RelationDoc>),
        Wrapped { relations: Vec<RelationDoc> },
    }
    let docs: Docs = serde_json::from_str(text).map_err(|e| AlgebraError::Malformed(e.to_string()))?;
    let docs = match docs {
        Docs::One(d) => vec![d],
        Docs::Many(v) | Docs::Wrapped { relations: v } => v,
    };
    docs.iter().map(|d| Ok((d.name.clone(), OrbitRelation::from_doc(t, d)?))).collect()
}

/// `A + R`: orbits of the last two coordinates over tuples of `r` whose
/// first two coordinates lie in `a`.
pub fn plus(a: OrbitalSet, r: &OrbitRelation) -> Result<OrbitalSet, AlgebraError> {
    if r.arity() < 2 {
        return Err(AlgebraError::WrongArity { expected: 3, found: r.arity() });
    }
    if !a.is_subset(r.first_pair()) {
        return Err(AlgebraError::NotASubsetOfProjection);
    }
    let k = r.arity();
    Ok(r
        .iter()
        .filter(|l| a.contains(l.color(0, 1)))
        .map(|l| l.color(k - 2, k - 1))
        .collect())
}

/// A relation together with the implication `from → to` it induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplicationWitness {
    pub relation: OrbitRelation,
    pub from: OrbitalSet,
    pub to: OrbitalSet,
}

/// The implication induced by `a` on `r`, when both ends are proper and
/// `a` is non-empty.
pub fn implication_of(r: &OrbitRelation, a: OrbitalSet) -> Option<ImplicationWitness> {
    if r.arity() < 3 || a.is_empty() || !a.is_proper_subset(r.first_pair()) {
        return None;
    }
    let b = plus(a, r).ok()?;
    b.is_proper_subset(r.last_pair()).then(|| ImplicationWitness { relation: r.clone(), from: a, to: b })
}

/// Whether two implications `A → B` and `B → A` agree on projections.
pub fn are_complementary(w1: &ImplicationWitness, w2: &ImplicationWitness) -> bool {
    let (r1, r2) = (&w1.relation, &w2.relation);
    r1.first_pair() == r2.last_pair()
        && r2.first_pair() == r1.last_pair()
        && w1.to == w2.from
        && w2.to == w1.from
        && plus(w1.from, r1).is_ok_and(|b| b == w1.to)
        && plus(w2.from, r2).is_ok_and(|a| a == w2.to)
}

/// Sort flags of a quaternary tuple.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TupleSort {
    pub degenerated: bool,
    pub essentially_ternary: bool,
    pub essentially_quaternary: bool,
    pub partially_free: bool,
    pub fully_free: bool,
}

impl TupleSort {
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.degenerated {
            v.push("degenerated");
        }
        if self.essentially_ternary {
            v.push("essentially-ternary");
        }
        if self.essentially_quaternary {
            v.push("essentially-quaternary");
        }
        if self.partially_free {
            v.push("partially-free");
        }
        if self.fully_free {
            v.push("fully-free");
        }
        v
    }
}

pub fn classify_tuple(l: &OrbitLabel) -> Result<TupleSort, AlgebraError> {
    if l.arity() != 4 {
        return Err(AlgebraError::WrongArity { expected: 4, found: l.arity() });
    }
    let eq = |i: usize, j: usize| l.color(i, j).is_eq();
    let null = |i: usize, j: usize| l.color(i, j) == Color::NULL;
    let cross = [(0, 2), (0, 3), (1, 2), (1, 3)];
    let degenerated = eq(0, 3) && eq(1, 2);
    let quaternary = cross.iter().all(|&(i, j)| !eq(i, j));
    Ok(TupleSort {
        degenerated,
        essentially_ternary: eq(1, 2) && !eq(0, 3),
        essentially_quaternary: quaternary,
        partially_free: null(0, 3),
        fully_free: cross.iter().all(|&(i, j)| null(i, j)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::random_graph;

    const E: Color = Color(2);
    const N: Color = Color::NULL;

    fn q(c12: Color, c34: Color) -> OrbitLabel {
        OrbitLabel::injective(4, |i, j| match (i, j) {
            (0, 1) => c12,
            (2, 3) => c34,
            _ => N,
        })
    }

    fn xor() -> OrbitRelation {
        OrbitRelation::from_labels(4, [q(E, N), q(N, E)]).unwrap()
    }

    #[test]
    fn projections() {
        let r = OrbitRelation::from_labels(4, [q(E, N)]).unwrap();
        assert_eq!(r.project(&[3, 4]).unwrap(), OrbitRelation::binary(OrbitalSet::single(N)));
        assert_eq!(r.project(&[-2, -1]).unwrap(), r.project(&[3, 4]).unwrap());
        assert_eq!(r.project(&[1, 2, 3, 4]).unwrap(), r);
        assert!(matches!(r.project(&[5]), Err(AlgebraError::IndexOutOfRange { index: 5, .. })));
        assert!(r.project(&[0]).is_err());
        assert!(r.project(&[]).is_err());
        let l = OrbitLabel::from_partition(&[0, 1, 0], &[(0, 1, E)]).unwrap();
        let s = OrbitRelation::from_labels(3, [l]).unwrap();
        assert_eq!(s.project(&[1, 3]).unwrap(), OrbitRelation::binary(OrbitalSet::single(Color::EQ)));
    }

    #[test]
    fn plus_examples() {
        let single = OrbitRelation::from_labels(4, [q(E, E)]).unwrap();
        assert_eq!(plus(OrbitalSet::single(E), &single).unwrap(), OrbitalSet::single(E));
        assert_eq!(plus(OrbitalSet::single(E), &xor()).unwrap(), OrbitalSet::single(N));
        assert_eq!(plus(OrbitalSet::single(Color::EQ), &xor()), Err(AlgebraError::NotASubsetOfProjection));
    }

    #[test]
    fn implication_examples() {
        let w = implication_of(&xor(), OrbitalSet::single(E)).unwrap();
        assert_eq!(w.to, OrbitalSet::single(N));
        let both: OrbitalSet = [E, N].into_iter().collect();
        assert!(implication_of(&xor(), both).is_none());
        let r = OrbitRelation::from_labels(4, [q(E, N), q(N, N)]).unwrap();
        assert!(implication_of(&r, OrbitalSet::single(E)).is_none());
        assert!(implication_of(&xor(), OrbitalSet::EMPTY).is_none());
    }

    #[test]
    fn complementary_examples() {
        let w1 = implication_of(&xor(), OrbitalSet::single(E)).unwrap();
        let w2 = implication_of(&xor(), OrbitalSet::single(N)).unwrap();
        assert!(are_complementary(&w1, &w2));
        let other = OrbitRelation::from_labels(4, [q(N, E), q(N, N), q(E, N)]).unwrap();
        let w3 = ImplicationWitness { relation: other, from: OrbitalSet::single(N), to: OrbitalSet::single(E) };
        assert!(!are_complementary(&w1, &w3));
    }

    #[test]
    fn sorts() {
        let degen = OrbitLabel::from_partition(&[0, 1, 1, 0], &[(0, 1, E)]).unwrap();
        let s = classify_tuple(&degen).unwrap();
        assert_eq!(s.names(), vec!["degenerated"]);
        let s = classify_tuple(&q(E, E)).unwrap();
        assert_eq!(s.names(), vec!["essentially-quaternary", "partially-free", "fully-free"]);
        let tern = OrbitLabel::from_partition(&[0, 1, 1, 2], &[(0, 1, E), (0, 2, N), (1, 2, E)]).unwrap();
        assert_eq!(classify_tuple(&tern).unwrap().names(), vec!["essentially-ternary", "partially-free"]);
        let tern = OrbitLabel::from_partition(&[0, 1, 1, 2], &[(0, 1, E), (0, 2, E), (1, 2, E)]).unwrap();
        assert_eq!(classify_tuple(&tern).unwrap().names(), vec!["essentially-ternary"]);
        assert!(classify_tuple(&OrbitLabel::orbital(E)).is_err());
    }

    #[test]
    fn subsets_enumerate_everything() {
        let s = OrbitalSet::from_bits(0b1011);
        let all: Vec<_> = s.subsets().collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|x| x.is_subset(s)));
        assert_eq!(s.proper_subsets().count(), 6);
    }

    #[test]
    fn document_round_trip() {
        let t = random_graph();
        let r = xor();
        let doc = r.to_doc(&t, "xor");
        let back = OrbitRelation::from_doc(&t, &doc).unwrap();
        assert_eq!(back, r);
        let text = serde_json::to_string(&doc).unwrap();
        let loaded = load_relations(&t, &text).unwrap();
        assert_eq!(loaded, vec![("xor".to_string(), r)]);
    }

    #[test]
    fn lift_of_ternary() {
        let l = OrbitLabel::injective(3, |_, _| E);
        let r = OrbitRelation::from_labels(3, [l]).unwrap();
        let q = r.lift_ternary().unwrap();
        let only = q.iter().next().unwrap();
        assert_eq!(only.partition(), vec![0, 1, 1, 2]);
        assert!(classify_tuple(only).unwrap().essentially_ternary);
    }
}
