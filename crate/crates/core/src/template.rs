//! Templates: a palette of edge colors plus forbidden complete structures.

use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, TemplateError};
use crate::label::{Color, OrbitLabel, MAX_ARITY, MAX_COLORS};
use crate::relation::OrbitRelation;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorKind {
    Equality,
    Null,
    Real,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorSymbol {
    pub name: String,
    pub kind: ColorKind,
}

#[inline]
fn tri(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// A finite structure: every pair of distinct vertices carries one color
/// other than `=`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredStructure {
    size: usize,
    colors: Vec<Color>,
}

impl ColoredStructure {
    /// The structure on `n` vertices with every pair colored `N`.
    pub fn empty(n: usize) -> Self {
        ColoredStructure {
            size: n,
            colors: vec![Color::NULL; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn from_fn(n: usize, color: impl Fn(usize, usize) -> Color) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                s.set(i, j, color(i, j));
            }
        }
        s
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Color {
        if i == j {
            Color::EQ
        } else {
            self.colors[tri(i, j, self.size)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: Color) {
        let k = tri(i, j, self.size);
        self.colors[k] = c;
    }

    /// Substructure induced on `verts`, renumbered in the given order.
    pub fn induced(&self, verts: &[usize]) -> Self {
        Self::from_fn(verts.len(), |a, b| self.get(verts[a], verts[b]))
    }

    /// The injective orbit label of the vertex tuple `verts`, which may
    /// repeat vertices.
    pub fn label_of(&self, verts: &[usize]) -> OrbitLabel {
        OrbitLabel::from_classes(verts, |a, b| self.get(a, b))
    }
}

/// A complete graph whose edges all carry real colors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenStructure {
    size: usize,
    colors: Vec<Color>,
}

impl ForbiddenStructure {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn color(&self, i: usize, j: usize) -> Color {
        self.colors[tri(i, j, self.size)]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    palette: Vec<ColorSymbol>,
    forbidden: Vec<ForbiddenStructure>,
    bound: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    pub palette: Vec<String>,
    #[serde(default)]
    pub forbidden: Vec<ForbiddenDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForbiddenDoc {
    pub size: usize,
    pub edges: Vec<(usize, usize, String)>,
}

fn reserved(name: &str) -> bool {
    name == "=" || name == "N"
}

impl Template {
    /// Builds a template from real color names and forbidden structures,
    /// each given as a size and a list of colored edges.
    pub fn new(real: &[&str], forbidden: &[(usize, Vec<(usize, usize, &str)>)]) -> Result<Self, TemplateError> {
        let doc = TemplateDoc {
            palette: real.iter().map(|s| s.to_string()).collect(),
            forbidden: forbidden
                .iter()
                .map(|(size, edges)| ForbiddenDoc {
                    size: *size,
                    edges: edges.iter().map(|&(a, b, c)| (a, b, c.to_string())).collect(),
                })
                .collect(),
        };
        Self::from_doc(&doc)
    }

    pub fn from_doc(doc: &TemplateDoc) -> Result<Self, TemplateError> {
        if doc.palette.is_empty() {
            return Err(TemplateError::EmptyPalette);
        }
        let mut palette = vec![
            ColorSymbol { name: "=".into(), kind: ColorKind::Equality },
            ColorSymbol { name: "N".into(), kind: ColorKind::Null },
        ];
        for name in &doc.palette {
            if reserved(name) {
                return Err(TemplateError::ReservedColor(name.clone()));
            }
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',' || c == '(' || c == ')') {
                return Err(TemplateError::MalformedDocument(format!("bad color name {name:?}")));
            }
            if palette.iter().any(|s| &s.name == name) {
                return Err(TemplateError::DuplicateColor(name.clone()));
            }
            palette.push(ColorSymbol { name: name.clone(), kind: ColorKind::Real });
        }
        if palette.len() > MAX_COLORS {
            return Err(TemplateError::TooManyColors(doc.palette.len()));
        }
        let mut t = Template { palette, forbidden: Vec::new(), bound: 3 };
        for (index, f) in doc.forbidden.iter().enumerate() {
            if f.size < 2 || f.size > MAX_ARITY {
                return Err(TemplateError::MalformedDocument(format!(
                    "forbidden structure {index} has size {}, expected 2..={MAX_ARITY}",
                    f.size
                )));
            }
            let mut colors: Vec<Option<Color>> = vec![None; f.size * (f.size - 1) / 2];
            for (a, b, name) in &f.edges {
                if reserved(name) {
                    return Err(TemplateError::ForbiddenUsesNullOrEquality { index, color: name.clone() });
                }
                let c = t.color(name).ok_or_else(|| TemplateError::UnknownColor(name.clone()))?;
                if *a >= f.size || *b >= f.size || a == b {
                    return Err(TemplateError::MalformedDocument(format!(
                        "forbidden structure {index} has bad edge ({a},{b})"
                    )));
                }
                let slot = &mut colors[tri(*a, *b, f.size)];
                if slot.replace(c).is_some() {
                    return Err(TemplateError::MalformedDocument(format!(
                        "forbidden structure {index} colors ({a},{b}) twice"
                    )));
                }
            }
            let colors = colors
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| TemplateError::MalformedDocument(format!("forbidden structure {index} is not total")))?;
            t.bound = t.bound.max(f.size);
            t.forbidden.push(ForbiddenStructure { size: f.size, colors });
        }
        Ok(t)
    }

    pub fn to_doc(&self) -> TemplateDoc {
        TemplateDoc {
            palette: self.real_colors().map(|c| self.name(c).to_string()).collect(),
            forbidden: self
                .forbidden
                .iter()
                .map(|f| {
                    let mut edges = Vec::new();
                    for i in 0..f.size {
                        for j in i + 1..f.size {
                            edges.push((i, j, self.name(f.color(i, j)).to_string()));
                        }
                    }
                    ForbiddenDoc { size: f.size, edges }
                })
                .collect(),
        }
    }

    pub fn load(text: &str) -> Result<Self, TemplateError> {
        let doc: TemplateDoc =
            serde_json::from_str(text).map_err(|e| TemplateError::MalformedDocument(e.to_string()))?;
        Self::from_doc(&doc)
    }

    /// The consistency level: the largest forbidden size, but at least 3.
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn palette(&self) -> &[ColorSymbol] {
        &self.palette
    }

    pub fn forbidden(&self) -> &[ForbiddenStructure] {
        &self.forbidden
    }

    /// Number of orbitals, counting `=` and `N`.
    pub fn num_colors(&self) -> usize {
        self.palette.len()
    }

    /// All orbitals in canonical order.
    pub fn colors(&self) -> impl Iterator<Item = Color> + Clone {
        (0..self.palette.len() as u8).map(Color)
    }

    /// Orbitals other than `=`.
    pub fn distinct_colors(&self) -> impl Iterator<Item = Color> + Clone {
        (1..self.palette.len() as u8).map(Color)
    }

    pub fn real_colors(&self) -> impl Iterator<Item = Color> + Clone {
        (2..self.palette.len() as u8).map(Color)
    }

    pub fn color(&self, name: &str) -> Option<Color> {
        self.palette.iter().position(|s| s.name == name).map(|i| Color(i as u8))
    }

    pub fn name(&self, c: Color) -> &str {
        &self.palette[c.index()].name
    }

    /// Human-readable pair-color tuple, e.g. `(E,N,N,N,N,E)`.
    pub fn shape(&self, l: &OrbitLabel) -> String {
        let names: Vec<&str> = l.pair_colors().into_iter().map(|c| self.name(c)).collect();
        format!("({})", names.join(","))
    }

    pub fn is_in_age(&self, d: &ColoredStructure) -> Result<bool, TemplateError> {
        for i in 0..d.size() {
            for j in i + 1..d.size() {
                let c = d.get(i, j);
                if c.is_eq() || c.index() >= self.palette.len() {
                    return Err(TemplateError::UnknownColor(format!("#{}", c.0)));
                }
            }
        }
        let verts: Vec<usize> = (0..d.size()).collect();
        Ok(!self.hits_forbidden(&verts, &|a, b| d.get(a, b), &[]))
    }

    /// Whether some forbidden structure maps into the vertices `verts` of
    /// the structure described by `color`, with every anchor in the image.
    pub(crate) fn hits_forbidden(
        &self,
        verts: &[usize],
        color: &dyn Fn(usize, usize) -> Color,
        anchors: &[usize],
    ) -> bool {
        let mut image = [usize::MAX; MAX_ARITY];
        for f in &self.forbidden {
            if f.size > verts.len() || anchors.len() > f.size {
                continue;
            }
            if place_anchors(f, verts, color, anchors, 0, &mut image) {
                return true;
            }
        }
        false
    }

    /// Whether a label's quotient structure is in the age.
    pub fn admits(&self, l: &OrbitLabel) -> bool {
        if self.forbidden.is_empty() {
            return true;
        }
        let part = l.partition();
        let mut reps = Vec::new();
        for (p, &c) in part.iter().enumerate() {
            if c == reps.len() {
                reps.push(p);
            }
        }
        !self.hits_forbidden(&reps, &|a, b| l.color(a, b), &[])
    }

    /// Every label of arity `k` whose quotient lies in the age, in canonical
    /// order.
    pub fn enumerate_orbits(&self, k: usize) -> Result<OrbitRelation, AlgebraError> {
        if k > MAX_ARITY {
            return Err(AlgebraError::ArityCapExceeded { arity: k, cap: MAX_ARITY });
        }
        let f = crate::pp::PPFormula { variables: k, atoms: Vec::new(), free: (0..k).collect() };
        crate::pp::pp_eval(self, &f)
    }

    /// Glues `b2` onto `b1` along `overlap`, a list of identified vertex
    /// pairs `(vertex of b1, vertex of b2)`. Vertices of `b1` keep their
    /// numbers; the remaining vertices of `b2` follow in order. Cross pairs
    /// are colored `N`.
    pub fn free_amalgam(
        &self,
        b1: &ColoredStructure,
        b2: &ColoredStructure,
        overlap: &[(usize, usize)],
    ) -> Result<ColoredStructure, AlgebraError> {
        let mism = |s: String| AlgebraError::OverlapMismatch(s);
        let mut to_result: Vec<Option<usize>> = vec![None; b2.size()];
        let mut used1 = vec![false; b1.size()];
        for &(u, v) in overlap {
            if u >= b1.size() || v >= b2.size() {
                return Err(mism(format!("pair ({u},{v}) is out of range")));
            }
            if used1[u] || to_result[v].is_some() {
                return Err(mism(format!("pair ({u},{v}) is not injective")));
            }
            used1[u] = true;
            to_result[v] = Some(u);
        }
        for &(u, v) in overlap {
            for &(u2, v2) in overlap {
                if u < u2 && b1.get(u, u2) != b2.get(v, v2) {
                    return Err(mism(format!("pairs ({u},{u2}) and ({v},{v2}) carry different colors")));
                }
            }
        }
        let mut next = b1.size();
        for slot in to_result.iter_mut() {
            if slot.is_none() {
                *slot = Some(next);
                next += 1;
            }
        }
        let map: Vec<usize> = to_result.into_iter().map(Option::unwrap).collect();
        let mut out = ColoredStructure::empty(next);
        for i in 0..b1.size() {
            for j in i + 1..b1.size() {
                out.set(i, j, b1.get(i, j));
            }
        }
        for i in 0..b2.size() {
            for j in i + 1..b2.size() {
                out.set(map[i], map[j], b2.get(i, j));
            }
        }
        Ok(out)
    }
}

fn place_anchors(
    f: &ForbiddenStructure,
    verts: &[usize],
    color: &dyn Fn(usize, usize) -> Color,
    anchors: &[usize],
    next: usize,
    image: &mut [usize; MAX_ARITY],
) -> bool {
    if next == anchors.len() {
        return extend(f, verts, color, 0, image);
    }
    let a = anchors[next];
    for fv in 0..f.size {
        if image[fv] != usize::MAX {
            continue;
        }
        let ok = (0..f.size).all(|g| image[g] == usize::MAX || color(image[g], a) == f.color(g, fv));
        if ok {
            image[fv] = a;
            if place_anchors(f, verts, color, anchors, next + 1, image) {
                image[fv] = usize::MAX;
                return true;
            }
            image[fv] = usize::MAX;
        }
    }
    false
}

fn extend(
    f: &ForbiddenStructure,
    verts: &[usize],
    color: &dyn Fn(usize, usize) -> Color,
    fv: usize,
    image: &mut [usize; MAX_ARITY],
) -> bool {
    if fv == f.size {
        return true;
    }
    if image[fv] != usize::MAX {
        return extend(f, verts, color, fv + 1, image);
    }
    for &v in verts {
        if image[..f.size].contains(&v) {
            continue;
        }
        let ok = (0..f.size).all(|g| image[g] == usize::MAX || color(image[g], v) == f.color(g, fv));
        if ok {
            image[fv] = v;
            let found = extend(f, verts, color, fv + 1, image);
            image[fv] = usize::MAX;
            if found {
                return true;
            }
        }
    }
    false
}

/// The countable random graph: one real color, nothing forbidden.
pub fn random_graph() -> Template {
    Template::new(&["E"], &[]).unwrap()
}

/// The universal triangle-free graph.
pub fn triangle_free() -> Template {
    Template::new(&["E"], &[(3, vec![(0, 1, "E"), (0, 2, "E"), (1, 2, "E")])]).unwrap()
}

/// Two real colors `A`, `B`, forbidding the all-`A` triangle.
pub fn two_color_a_free() -> Template {
    Template::new(&["A", "B"], &[(3, vec![(0, 1, "A"), (0, 2, "A"), (1, 2, "A")])]).unwrap()
}
