//! Obstruction certificates: replayable derivations of relations that rule
//! out preservation by chains of quasi directed Jónsson operations.
//!
//! A certificate names two input relations `r0`, `r1`, a list of derivation
//! steps whose results are referred to as `s0`, `s1`, ..., the final
//! relation, and witness tuples with shapes and roles. Verification checks
//! the witnesses against the stated final relation, replays the steps, and
//! then checks the structural condition of the case.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::bipartite::{
    agree_on_projections, analyze_pair, has_symmetric_components, is_connected, is_self_complementary_for,
    self_complementary_endpoints, BipartiteGraph, ComponentKind, Direction, Side, Vertex,
};
use crate::compose::{compose_once, Kind};
use crate::error::AnalysisError;
use crate::label::{Color, OrbitLabel};
use crate::relation::{
    are_complementary, classify_tuple, plus, resolve_coords, ImplicationWitness, LabelDoc, OrbitRelation,
    OrbitalSet, RelationDoc,
};
use crate::template::Template;

pub const CONCLUSION: &str = "not preserved by any chain of quasi directed Jónsson operations";

/// Evaluations of candidate relations allowed during a derivation search.
pub const DEFAULT_BUDGET: usize = 4000;

const MAX_CHAIN: usize = 12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "nondegen-NN")]
    NondegenNN,
    #[serde(rename = "nondegen-EQ")]
    NondegenEQ,
    #[serde(rename = "degen-nonconnected")]
    DegenNonconnected,
    #[serde(rename = "degen-ternary")]
    DegenTernary,
    #[serde(rename = "degen-partialfree")]
    DegenPartialfree,
}

impl CaseTag {
    pub fn is_degenerate(self) -> bool {
        !matches!(self, CaseTag::NondegenNN | CaseTag::NondegenEQ)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Circ,
    Bowtie,
    Intersect,
    Permute,
    ReverseConj,
    ReachConj,
    Reach,
    Lift,
    Project,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Ref(String),
    Coords(Vec<i64>),
    Orbitals { orbitals: Vec<String> },
    Mode { mode: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub op: Op,
    pub args: Vec<Arg>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// `(A,N,N,N,N,A)` with `A` inside the endpoint.
    InsideFullyFree,
    /// `(B,N,N,N,N,B)` with `B` outside the endpoint.
    OutsideFullyFree,
    /// `(B,B,=,=,B,B)` with `B` outside the endpoint.
    OutsideDegenerated,
    NonDegenerated,
    PartiallyFree,
    /// Tuple of a degenerated component whose orbital is inside the endpoint.
    InsideComponent,
    /// Tuple of a degenerated component whose orbital is outside the endpoint.
    OutsideComponent,
    /// Ternary `(B,D,A)` with `D` anti-reflexive.
    Bridge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub orbit: LabelDoc,
    pub shape: String,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Audit {
    /// Orbital on the right side lying outside the starting endpoint.
    pub outside: String,
    pub above: Option<String>,
    pub below: Option<String>,
    pub path: Vec<String>,
    pub essential_length: usize,
    pub first_tuple_degenerated: bool,
    pub last_tuple_degenerated: bool,
    pub sorts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub case_tag: CaseTag,
    pub inputs: Vec<RelationDoc>,
    pub derivation: Vec<Step>,
    pub result: String,
    pub final_relation: RelationDoc,
    pub endpoint: Vec<String>,
    pub witness_tuples: Vec<Witness>,
    pub claimed_conclusion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<Audit>,
}

fn fully_free(c: Color) -> OrbitLabel {
    OrbitLabel::from_pairs(4, |i, j| match (i, j) {
        (0, 1) | (2, 3) => c,
        _ => Color::NULL,
    })
}

fn degenerated(c: Color) -> OrbitLabel {
    OrbitLabel::from_pairs(4, |i, j| match (i, j) {
        (0, 3) | (1, 2) => Color::EQ,
        _ => c,
    })
}

fn ternary_degenerated(c: Color) -> OrbitLabel {
    OrbitLabel::from_pairs(3, |i, j| if (i, j) == (0, 2) { Color::EQ } else { c })
}

fn parse_ref(s: &str, ninputs: usize, available: usize) -> Result<usize, String> {
    let bad = || format!("unknown operand {s:?}");
    if let Some(rest) = s.strip_prefix('r') {
        let i: usize = rest.parse().map_err(|_| bad())?;
        (i < ninputs).then_some(i).ok_or_else(bad)
    } else if let Some(rest) = s.strip_prefix('s') {
        let i: usize = rest.parse().map_err(|_| bad())?;
        (ninputs + i < available).then_some(ninputs + i).ok_or_else(bad)
    } else {
        Err(bad())
    }
}

/// Computes the result of one step from earlier values.
pub fn eval_step(t: &Template, step: &Step, values: &[OrbitRelation], ninputs: usize) -> Result<OrbitRelation, String> {
    let rel = |i: usize| -> Result<&OrbitRelation, String> {
        match step.args.get(i) {
            Some(Arg::Ref(s)) => Ok(&values[parse_ref(s, ninputs, values.len())?]),
            _ => Err(format!("argument {i} must be an operand")),
        }
    };
    let coords = |i: usize| -> Result<&Vec<i64>, String> {
        match step.args.get(i) {
            Some(Arg::Coords(c)) => Ok(c),
            _ => Err(format!("argument {i} must be a coordinate list")),
        }
    };
    let mode = |i: usize| -> Result<&str, String> {
        match step.args.get(i) {
            Some(Arg::Mode { mode }) => Ok(mode),
            _ => Err(format!("argument {i} must be a mode")),
        }
    };
    let arity = |n: usize| -> Result<(), String> {
        if step.args.len() == n {
            Ok(())
        } else {
            Err(format!("expected {n} arguments, found {}", step.args.len()))
        }
    };
    let e = |x: crate::error::AlgebraError| x.to_string();
    match step.op {
        Op::Circ | Op::Bowtie => {
            arity(2)?;
            let kind = if step.op == Op::Circ { Kind::Circ } else { Kind::Bowtie };
            compose_once(t, kind, rel(0)?, rel(1)?).map_err(e)
        }
        Op::Intersect => {
            arity(2)?;
            rel(0)?.intersect(rel(1)?).map_err(e)
        }
        Op::Permute => {
            arity(2)?;
            let r = rel(0)?;
            let z = resolve_coords(coords(1)?, r.arity()).map_err(e)?;
            r.permute(&z).map_err(e)
        }
        Op::Project => {
            arity(2)?;
            rel(0)?.project(coords(1)?).map_err(e)
        }
        Op::Lift => {
            arity(1)?;
            rel(0)?.lift_ternary().map_err(e)
        }
        Op::ReverseConj => {
            arity(1)?;
            let r = rel(0)?;
            r.intersect(&r.reverse()).map_err(e)
        }
        Op::Reach => {
            arity(4)?;
            let g = analyze_pair(rel(0)?, rel(1)?).map_err(|x| x.to_string())?;
            let (direction, side) = match mode(2)? {
                "forward-L" => (Direction::Forward, Side::L),
                "forward-R" => (Direction::Forward, Side::R),
                "backward-L" => (Direction::Backward, Side::L),
                "backward-R" => (Direction::Backward, Side::R),
                m => return Err(format!("unknown reach mode {m:?}")),
            };
            let o = match step.args.get(3) {
                Some(Arg::Orbitals { orbitals }) if orbitals.len() == 1 => {
                    t.color(&orbitals[0]).ok_or_else(|| format!("unknown color {:?}", orbitals[0]))?
                }
                _ => return Err("argument 3 must name one orbital".into()),
            };
            let s = g.reach(direction, Vertex { side, orbital: o }, side).map_err(|x| x.to_string())?;
            Ok(OrbitRelation::binary(s))
        }
        Op::ReachConj => {
            arity(4)?;
            let p = rel(0)?;
            let c = rel(2)?.orbitals().map_err(e)?;
            let d = rel(3)?.orbitals().map_err(e)?;
            if p.arity() != 4 {
                return Err(format!("reach-conj needs a quaternary relation, found arity {}", p.arity()));
            }
            match mode(1)? {
                "plain" => Ok(p.filter(|l| c.contains(l.color(0, 1)) && d.contains(l.color(2, 3)))),
                "diagonal" => Ok(p.filter(|l| {
                    l.color(1, 2).is_eq() && c.contains(l.color(0, 1)) && d.contains(l.color(2, 3))
                })),
                "ternary" => Ok(p
                    .filter(|l| l.color(1, 2).is_eq() && c.contains(l.color(0, 1)) && d.contains(l.color(2, 3)))
                    .project0(&[0, 1, 3])),
                m => Err(format!("unknown reach-conj mode {m:?}")),
            }
        }
    }
}

struct Deriver<'t> {
    t: &'t Template,
    ninputs: usize,
    values: Vec<OrbitRelation>,
    steps: Vec<Step>,
    memo: HashMap<Step, usize>,
    budget: usize,
    spent: usize,
}

struct Found {
    case: CaseTag,
    result: usize,
    endpoint: OrbitalSet,
    witnesses: Vec<(OrbitLabel, Role)>,
}

impl<'t> Deriver<'t> {
    fn name(&self, i: usize) -> String {
        if i < self.ninputs {
            format!("r{i}")
        } else {
            format!("s{}", i - self.ninputs)
        }
    }

    fn r(&self, i: usize) -> Arg {
        Arg::Ref(self.name(i))
    }

    fn tick(&mut self) -> Result<(), AnalysisError> {
        self.spent += 1;
        if self.spent > self.budget {
            return Err(AnalysisError::DerivationBudgetExceeded(format!("{} evaluations", self.budget)));
        }
        Ok(())
    }

    /// Runs a step, returning the index of its value, or `None` if the step
    /// does not apply.
    fn run(&mut self, op: Op, args: Vec<Arg>) -> Result<Option<usize>, AnalysisError> {
        let step = Step { op, args };
        if let Some(&i) = self.memo.get(&step) {
            return Ok(Some(i));
        }
        self.tick()?;
        match eval_step(self.t, &step, &self.values, self.ninputs) {
            Ok(v) => {
                let i = self.values.len();
                self.values.push(v);
                self.steps.push(step.clone());
                self.memo.insert(step, i);
                Ok(Some(i))
            }
            Err(_) => Ok(None),
        }
    }

    fn v(&self, i: usize) -> &OrbitRelation {
        &self.values[i]
    }

    /// Steps needed for `result`, renumbered densely.
    fn extract(&self, result: usize) -> (Vec<Step>, String) {
        let mut needed = BTreeSet::new();
        let mut stack = vec![result];
        while let Some(i) = stack.pop() {
            if i < self.ninputs || !needed.insert(i) {
                continue;
            }
            for a in &self.steps[i - self.ninputs].args {
                if let Arg::Ref(s) = a {
                    stack.push(parse_ref(s, self.ninputs, self.values.len()).unwrap());
                }
            }
        }
        let renumber: HashMap<usize, usize> =
            needed.iter().enumerate().map(|(new, &old)| (old, self.ninputs + new)).collect();
        let rename = |i: usize| -> String {
            if i < self.ninputs {
                format!("r{i}")
            } else {
                format!("s{}", renumber[&i] - self.ninputs)
            }
        };
        let steps = needed
            .iter()
            .map(|&i| {
                let s = &self.steps[i - self.ninputs];
                Step {
                    op: s.op,
                    args: s
                        .args
                        .iter()
                        .map(|a| match a {
                            Arg::Ref(r) => Arg::Ref(rename(parse_ref(r, self.ninputs, self.values.len()).unwrap())),
                            other => other.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        (steps, rename(result))
    }
}

fn normalize(d: &mut Deriver, i: usize) -> Result<usize, AnalysisError> {
    match d.v(i).arity() {
        4 => Ok(i),
        3 => d.run(Op::Lift, vec![d.r(i)])?.ok_or_else(|| AnalysisError::NoObstruction("lift failed".into())),
        k if k > 4 => d
            .run(Op::Project, vec![d.r(i), Arg::Coords(vec![1, 2, -2, -1])])?
            .ok_or_else(|| AnalysisError::NoObstruction("projection failed".into())),
        k => Err(AnalysisError::NoObstruction(format!("relation of arity {k} induces no implication"))),
    }
}

const SWAP_PAIRS: [i64; 4] = [2, 1, 4, 3];
const REVERSE3: [i64; 3] = [3, 2, 1];

fn variants(d: &mut Deriver, i: usize) -> Result<Vec<usize>, AnalysisError> {
    let mut out = vec![i];
    if let Some(j) = d.run(Op::Permute, vec![d.r(i), Arg::Coords(SWAP_PAIRS.to_vec())])? {
        if !out.contains(&j) {
            out.push(j);
        }
    }
    Ok(out)
}

/// Alternating chains `a, b, a, b, ...` of length 2 to `2 * MAX_CHAIN`,
/// stopping when the even-length values cycle.
fn chains(d: &mut Deriver, kind: Op, a: usize, b: usize) -> Result<Vec<usize>, AnalysisError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut cur = a;
    for _ in 0..MAX_CHAIN {
        let Some(x) = d.run(kind, vec![d.r(cur), d.r(b)])? else { break };
        if !seen.insert(d.v(x).clone()) {
            break;
        }
        out.push(x);
        let Some(y) = d.run(kind, vec![d.r(x), d.r(a)])? else { break };
        cur = y;
    }
    Ok(out)
}

fn check_nondegenerate(d: &mut Deriver, ti: usize) -> Result<Option<Found>, AnalysisError> {
    let mut cands = Vec::new();
    if let Some(r) = d.run(Op::ReverseConj, vec![d.r(ti)])? {
        cands.push(r);
    }
    cands.push(ti);
    for ci in cands {
        let t = d.v(ci).clone();
        if t.arity() != 4 || !has_symmetric_components(&t)? {
            continue;
        }
        let p = t.first_pair();
        for a in p.iter().filter(|&a| t.contains(&fully_free(a))) {
            let mut endpoints: Vec<OrbitalSet> = Vec::new();
            let mut s = OrbitalSet::single(a);
            loop {
                let n = s.union(plus(s, &t)?);
                if n == s {
                    break;
                }
                s = n;
            }
            if s.is_proper_subset(p) {
                endpoints.push(s);
            }
            for e in p.proper_subsets() {
                if e.contains(a) && !endpoints.contains(&e) && plus(e, &t)? == e {
                    endpoints.push(e);
                }
            }
            for e in endpoints {
                if plus(e, &t)? != e {
                    continue;
                }
                let outside = p.difference(e);
                let ff = outside.iter().find(|&b| t.contains(&fully_free(b)));
                let (case, lb, role) = match ff {
                    Some(b) => (CaseTag::NondegenNN, fully_free(b), Role::OutsideFullyFree),
                    None => match outside.iter().find(|&b| t.contains(&degenerated(b))) {
                        Some(b) => (CaseTag::NondegenEQ, degenerated(b), Role::OutsideDegenerated),
                        None => continue,
                    },
                };
                return Ok(Some(Found {
                    case,
                    result: ci,
                    endpoint: e,
                    witnesses: vec![(fully_free(a), Role::InsideFullyFree), (lb, role)],
                }));
            }
        }
    }
    Ok(None)
}

fn nondegenerate(d: &mut Deriver, p1: usize, p2: usize) -> Result<Option<Found>, AnalysisError> {
    for kind in [Op::Circ, Op::Bowtie] {
        for (a0, b0) in [(p1, p2), (p2, p1)] {
            for a in variants(d, a0)? {
                for b in variants(d, b0)? {
                    for x in chains(d, kind, a, b)? {
                        if let Some(f) = check_nondegenerate(d, x)? {
                            return Ok(Some(f));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

fn degenerated_orbitals(g: &BipartiteGraph) -> Vec<Color> {
    g.components()
        .iter()
        .filter_map(|c| match c.kind {
            ComponentKind::Degenerated(o) => Some(o),
            _ => None,
        })
        .collect()
}

fn check_partfree(d: &Deriver, xi: usize) -> Result<Option<Found>, AnalysisError> {
    let x = d.v(xi);
    if x.arity() != 4 {
        return Ok(None);
    }
    let Some(pf) = x.iter().find(|l| classify_tuple(l).is_ok_and(|s| s.partially_free)).copied() else {
        return Ok(None);
    };
    let endpoints = self_complementary_endpoints(x)?;
    if endpoints.is_empty() {
        return Ok(None);
    }
    let g = analyze_pair(x, x)?;
    let degs: Vec<Color> = degenerated_orbitals(&g).into_iter().filter(|c| !c.is_eq()).collect();
    for e in endpoints {
        let inside = degs.iter().find(|c| e.contains(**c));
        let outside = degs.iter().find(|c| !e.contains(**c));
        if let (Some(&a), Some(&b)) = (inside, outside) {
            return Ok(Some(Found {
                case: CaseTag::DegenPartialfree,
                result: xi,
                endpoint: e,
                witnesses: vec![
                    (pf, Role::PartiallyFree),
                    (degenerated(a), Role::InsideComponent),
                    (degenerated(b), Role::OutsideComponent),
                ],
            }));
        }
    }
    Ok(None)
}

fn check_ternary(d: &Deriver, yi: usize) -> Result<Option<Found>, AnalysisError> {
    let y = d.v(yi);
    if y.arity() != 3 || y.is_empty() {
        return Ok(None);
    }
    let q = y.lift_ternary()?;
    let endpoints = self_complementary_endpoints(&q)?;
    if endpoints.is_empty() {
        return Ok(None);
    }
    let g = analyze_pair(&q, &q)?;
    let degs = degenerated_orbitals(&g);
    for e in endpoints {
        for &a in degs.iter().filter(|c| e.contains(**c)) {
            for &b in degs.iter().filter(|c| !e.contains(**c)) {
                let bridge = y
                    .iter()
                    .find(|l| l.color(0, 1) == b && l.color(1, 2) == a && !l.color(0, 2).is_eq())
                    .copied();
                if let Some(br) = bridge {
                    return Ok(Some(Found {
                        case: CaseTag::DegenTernary,
                        result: yi,
                        endpoint: e,
                        witnesses: vec![
                            (br, Role::Bridge),
                            (ternary_degenerated(a), Role::InsideComponent),
                            (ternary_degenerated(b), Role::OutsideComponent),
                        ],
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn check_nonconnected(d: &Deriver, xi: usize) -> Result<Option<Found>, AnalysisError> {
    let x = d.v(xi);
    if x.arity() != 4 {
        return Ok(None);
    }
    let Some(nd) = x.iter().find(|l| classify_tuple(l).is_ok_and(|s| !s.degenerated)).copied() else {
        return Ok(None);
    };
    if is_connected(x)? {
        return Ok(None);
    }
    Ok(Some(Found {
        case: CaseTag::DegenNonconnected,
        result: xi,
        endpoint: OrbitalSet::EMPTY,
        witnesses: vec![(nd, Role::NonDegenerated)],
    }))
}

fn first_degenerated(g: &BipartiteGraph, from: Vertex, direction: Direction) -> Option<Color> {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    let mut hits = BTreeSet::new();
    while let Some(v) = queue.pop_front() {
        let next: Vec<Vertex> = match direction {
            Direction::Forward => g.successors(v).collect(),
            Direction::Backward => g.predecessors(v).collect(),
        };
        for w in next {
            if !seen.insert(w) {
                continue;
            }
            match g.component_of(w).map(|c| c.kind) {
                Some(ComponentKind::Degenerated(o)) => {
                    hits.insert(o);
                }
                _ => queue.push_back(w),
            }
        }
    }
    hits.into_iter().next()
}

struct PathChoice {
    path: Vec<Vertex>,
    tuples: Vec<OrbitLabel>,
    essential: usize,
}

fn best_direct_path(g: &BipartiteGraph, from: Vertex, to: Vertex) -> Option<PathChoice> {
    struct St<'a> {
        g: &'a BipartiteGraph,
        to: Vertex,
        path: Vec<Vertex>,
        tuples: Vec<OrbitLabel>,
        best: Option<PathChoice>,
        budget: usize,
    }
    fn is_degen(l: &OrbitLabel) -> bool {
        l.arity() == 4 && classify_tuple(l).is_ok_and(|s| s.degenerated)
    }
    fn go(s: &mut St, v: Vertex) {
        if s.budget == 0 {
            return;
        }
        s.budget -= 1;
        if v == s.to && !s.tuples.is_empty() {
            let n = s.tuples.len();
            let interior_ok = s.tuples.iter().enumerate().all(|(i, l)| i == 0 || i == n - 1 || !is_degen(l));
            if interior_ok {
                let essential = s.tuples.iter().filter(|l| !is_degen(l)).count();
                if s.best.as_ref().is_none_or(|b| essential > b.essential) {
                    s.best = Some(PathChoice { path: s.path.clone(), tuples: s.tuples.clone(), essential });
                }
            }
            return;
        }
        let arcs: Vec<_> = s.g.arcs().iter().filter(|a| a.from == v).cloned().collect();
        for a in arcs {
            if s.path.contains(&a.to) && a.to != s.to {
                continue;
            }
            let pick = a.witnesses.iter().find(|l| !is_degen(l)).copied().unwrap_or(a.witnesses[0]);
            s.path.push(a.to);
            s.tuples.push(pick);
            go(s, a.to);
            s.path.pop();
            s.tuples.pop();
        }
    }
    let mut s = St { g, to, path: vec![from], tuples: Vec::new(), best: None, budget: 20_000 };
    go(&mut s, from);
    s.best
}

fn vertex_name(t: &Template, v: Vertex) -> String {
    format!("{}_{}", t.name(v.orbital), if v.side == Side::L { "L" } else { "R" })
}

#[derive(PartialEq, Eq)]
enum Family {
    Ternary,
    PartFree,
    NonConnected,
}

fn degenerate(
    d: &mut Deriver,
    p1: usize,
    p2: usize,
    from: OrbitalSet,
    to: OrbitalSet,
) -> Result<(Option<Found>, Option<Audit>), AnalysisError> {
    let (p1, p2, from, to) = if to.difference(from).is_empty() { (p2, p1, to, from) } else { (p1, p2, from, to) };
    let t = d.t;
    let g = analyze_pair(d.v(p1), d.v(p2))?;
    let c = to.difference(from).first().expect("non-empty difference");
    let above = first_degenerated(&g, Vertex::right(c), Direction::Forward);
    let below = first_degenerated(&g, Vertex::right(c), Direction::Backward);
    let mut order = vec![Family::Ternary, Family::PartFree, Family::NonConnected];
    let mut audit = Audit {
        outside: t.name(c).to_string(),
        above: above.map(|o| t.name(o).to_string()),
        below: below.map(|o| t.name(o).to_string()),
        path: Vec::new(),
        essential_length: 0,
        first_tuple_degenerated: false,
        last_tuple_degenerated: false,
        sorts: Vec::new(),
    };
    if let (Some(dd), Some(ee)) = (above, below) {
        if let Some(pc) = best_direct_path(&g, Vertex::left(ee), Vertex::left(dd)) {
            audit.path = pc.path.iter().map(|v| vertex_name(t, *v)).collect();
            audit.essential_length = pc.essential;
            let sorts: Vec<_> = pc.tuples.iter().map(|l| classify_tuple(l).unwrap()).collect();
            audit.first_tuple_degenerated = sorts.first().is_some_and(|s| s.degenerated);
            audit.last_tuple_degenerated = sorts.last().is_some_and(|s| s.degenerated);
            audit.sorts = sorts
                .iter()
                .map(|s| {
                    if s.degenerated {
                        "degenerated"
                    } else if s.essentially_ternary {
                        "essentially-ternary"
                    } else if s.essentially_quaternary {
                        "essentially-quaternary"
                    } else {
                        "other"
                    }
                    .to_string()
                })
                .collect();
            let quaternary = sorts.iter().filter(|s| !s.degenerated && !s.essentially_ternary).count();
            order = if quaternary == 0 {
                vec![Family::Ternary, Family::PartFree, Family::NonConnected]
            } else if pc.essential <= 2 && quaternary == 1 {
                vec![Family::NonConnected, Family::Ternary, Family::PartFree]
            } else {
                vec![Family::PartFree, Family::Ternary, Family::NonConnected]
            };
        }
    }

    // Reach restrictions, the pair around the outside orbital first.
    let degs = degenerated_orbitals(&g);
    let mut ends: Vec<(Color, Color)> = Vec::new();
    if let (Some(dd), Some(ee)) = (above, below) {
        ends.push((ee, dd));
    }
    for &e in &degs {
        for &dd in &degs {
            if e != dd && !ends.contains(&(e, dd)) {
                let reach = g.reach(Direction::Forward, Vertex::left(e), Side::L)?;
                if reach.contains(dd) {
                    ends.push((e, dd));
                }
            }
        }
    }
    let mut restrictions = Vec::new();
    for (e, dd) in ends {
        let mut sets = Vec::new();
        for (mode, o) in [("forward-L", e), ("backward-L", dd), ("forward-R", e), ("backward-R", dd)] {
            let args = vec![
                d.r(p1),
                d.r(p2),
                Arg::Mode { mode: mode.into() },
                Arg::Orbitals { orbitals: vec![t.name(o).to_string()] },
            ];
            sets.push(d.run(Op::Reach, args)?);
        }
        let [Some(f1), Some(b1), Some(f2), Some(b2)] = sets[..] else { continue };
        let (Some(cc), Some(dd)) = (
            d.run(Op::Intersect, vec![d.r(f1), d.r(b1)])?,
            d.run(Op::Intersect, vec![d.r(f2), d.r(b2)])?,
        ) else {
            continue;
        };
        restrictions.push((cc, dd));
    }

    let mut bases = Vec::new();
    for x in [p1, p2] {
        for v in variants(d, x)? {
            bases.push(v);
        }
    }
    let kinds = if order[0] == Family::Ternary { [Op::Bowtie, Op::Circ] } else { [Op::Circ, Op::Bowtie] };
    for kind in kinds {
        for (a0, b0) in [(p1, p2), (p2, p1)] {
            for a in variants(d, a0)? {
                for b in variants(d, b0)? {
                    bases.extend(chains(d, kind, a, b)?);
                }
            }
        }
    }

    for fam in &order {
        for &x in &bases {
            let found = match fam {
                Family::PartFree => {
                    let mut r = check_partfree(d, x)?;
                    if r.is_none() {
                        if let Some(y) = d.run(Op::ReverseConj, vec![d.r(x)])? {
                            r = check_partfree(d, y)?;
                        }
                    }
                    r
                }
                Family::NonConnected => {
                    let mut r = None;
                    for &(cc, dd) in &restrictions {
                        for mode in ["diagonal", "plain"] {
                            if r.is_some() {
                                break;
                            }
                            let args = vec![d.r(x), Arg::Mode { mode: mode.into() }, d.r(cc), d.r(dd)];
                            if let Some(y) = d.run(Op::ReachConj, args)? {
                                r = check_nonconnected(d, y)?;
                            }
                        }
                    }
                    match r {
                        Some(f) => Some(f),
                        None => check_nonconnected(d, x)?,
                    }
                }
                Family::Ternary => {
                    let mut r = None;
                    for &(cc, dd) in &restrictions {
                        if r.is_some() {
                            break;
                        }
                        let args = vec![d.r(x), Arg::Mode { mode: "ternary".into() }, d.r(cc), d.r(dd)];
                        if let Some(y) = d.run(Op::ReachConj, args)? {
                            r = check_ternary(d, y)?;
                            if r.is_none() {
                                if let Some(z) = d.run(Op::Permute, vec![d.r(y), Arg::Coords(REVERSE3.to_vec())])? {
                                    r = check_ternary(d, z)?;
                                }
                            }
                        }
                    }
                    r
                }
            };
            if let Some(f) = found {
                return Ok((Some(f), Some(audit)));
            }
        }
    }
    Ok((None, Some(audit)))
}

/// Derives an obstruction certificate from a complementary pair of
/// implications with distinct endpoints.
pub fn derive_obstruction(t: &Template, w1: &ImplicationWitness, w2: &ImplicationWitness) -> Result<Certificate, AnalysisError> {
    derive_obstruction_with(t, w1, w2, DEFAULT_BUDGET)
}

pub fn derive_obstruction_with(
    t: &Template,
    w1: &ImplicationWitness,
    w2: &ImplicationWitness,
    budget: usize,
) -> Result<Certificate, AnalysisError> {
    if !are_complementary(w1, w2) {
        return Err(AnalysisError::NoObstruction("the implications are not complementary".into()));
    }
    if w1.from == w1.to {
        return Err(AnalysisError::NoObstruction("the implications have equal endpoints".into()));
    }
    let mut d = Deriver {
        t,
        ninputs: 2,
        values: vec![w1.relation.clone(), w2.relation.clone()],
        steps: Vec::new(),
        memo: HashMap::new(),
        budget,
        spent: 0,
    };
    let p1 = normalize(&mut d, 0)?;
    let p2 = normalize(&mut d, 1)?;
    if !agree_on_projections(d.v(p1), d.v(p2)) {
        return Err(AnalysisError::NoObstruction("the relations do not agree on projections".into()));
    }
    let g = analyze_pair(d.v(p1), d.v(p2))?;
    let (found, audit) = if g.has_nondegenerated_component() {
        (nondegenerate(&mut d, p1, p2)?, None)
    } else {
        degenerate(&mut d, p1, p2, w1.from, w1.to)?
    };
    let Some(f) = found else {
        return Err(AnalysisError::DerivationBudgetExceeded("no candidate met a case condition".into()));
    };
    let (derivation, result) = d.extract(f.result);
    let final_rel = d.v(f.result);
    Ok(Certificate {
        case_tag: f.case,
        inputs: vec![w1.relation.to_doc(t, "r0"), w2.relation.to_doc(t, "r1")],
        derivation,
        result,
        final_relation: final_rel.to_doc(t, "final"),
        endpoint: f.endpoint.names(t),
        witness_tuples: f
            .witnesses
            .iter()
            .map(|(l, role)| Witness { orbit: LabelDoc::from_label(t, l), shape: t.shape(l), role: *role })
            .collect(),
        claimed_conclusion: CONCLUSION.to_string(),
        audit,
    })
}

fn component_orbital(q: &OrbitRelation, o: Color) -> Result<bool, AnalysisError> {
    let g = analyze_pair(q, q)?;
    Ok(g.component_of(Vertex::left(o)).is_some_and(|c| c.kind == ComponentKind::Degenerated(o)))
}

/// Checks a certificate against its inputs. Returns `Ok(false)` when the
/// derivation and witnesses check out but the case condition does not hold.
pub fn verify_certificate(t: &Template, inputs: &[OrbitRelation], c: &Certificate) -> Result<bool, AnalysisError> {
    let replay = |step: usize, reason: String| AnalysisError::ReplayMismatch { step, reason };
    let final_rel = OrbitRelation::from_doc(t, &c.final_relation).map_err(|e| replay(0, e.to_string()))?;
    let endpoint =
        OrbitalSet::from_names(t, &c.endpoint).map_err(|e| AnalysisError::WitnessFailure { index: 0, reason: e.to_string() })?;
    let lifted = if final_rel.arity() == 3 { Some(final_rel.lift_ternary()?) } else { None };

    let mut labels = Vec::new();
    for (index, w) in c.witness_tuples.iter().enumerate() {
        let fail = |reason: String| AnalysisError::WitnessFailure { index, reason };
        let l = w.orbit.to_label(t).map_err(|e| fail(e.to_string()))?;
        if !final_rel.contains(&l) {
            return Err(fail("tuple is not in the final relation".into()));
        }
        if t.shape(&l) != w.shape {
            return Err(fail(format!("shape {} does not match {}", w.shape, t.shape(&l))));
        }
        let sort = (l.arity() == 4).then(|| classify_tuple(&l).unwrap());
        let o = l.color(0, 1);
        let ok = match w.role {
            Role::InsideFullyFree | Role::OutsideFullyFree => {
                sort.is_some_and(|s| s.fully_free)
                    && l.color(2, 3) == o
                    && endpoint.contains(o) == (w.role == Role::InsideFullyFree)
            }
            Role::OutsideDegenerated => sort.is_some_and(|s| s.degenerated) && !endpoint.contains(o),
            Role::NonDegenerated => sort.is_some_and(|s| !s.degenerated),
            Role::PartiallyFree => sort.is_some_and(|s| s.partially_free),
            Role::InsideComponent | Role::OutsideComponent => {
                let shape_ok = match l.arity() {
                    4 => sort.is_some_and(|s| s.degenerated),
                    3 => l.color(0, 2).is_eq(),
                    _ => false,
                };
                let q = lifted.as_ref().unwrap_or(&final_rel);
                shape_ok && endpoint.contains(o) == (w.role == Role::InsideComponent) && component_orbital(q, o)?
            }
            Role::Bridge => l.arity() == 3 && !l.color(0, 2).is_eq(),
        };
        if !ok {
            return Err(fail(format!("tuple {} does not have role {:?}", w.shape, w.role)));
        }
        labels.push((l, w.role));
    }

    let mut values = Vec::with_capacity(c.inputs.len() + c.derivation.len());
    for (i, doc) in c.inputs.iter().enumerate() {
        let r = OrbitRelation::from_doc(t, doc).map_err(|e| replay(0, e.to_string()))?;
        if let Some(given) = inputs.get(i) {
            if *given != r {
                return Err(replay(0, format!("input r{i} differs from the certificate")));
            }
        }
        values.push(r);
    }
    let ninputs = values.len();
    for (i, step) in c.derivation.iter().enumerate() {
        let v = eval_step(t, step, &values, ninputs).map_err(|e| replay(i + 1, e))?;
        values.push(v);
    }
    let idx = parse_ref(&c.result, ninputs, values.len()).map_err(|e| replay(c.derivation.len(), e))?;
    if values[idx] != final_rel {
        return Err(replay(c.derivation.len(), "replayed relation differs from the final relation".into()));
    }
    if c.claimed_conclusion != CONCLUSION {
        return Ok(false);
    }

    let role = |r: Role| labels.iter().filter(move |(_, x)| *x == r).map(|(l, _)| *l);
    let ok = match c.case_tag {
        CaseTag::NondegenNN | CaseTag::NondegenEQ => {
            let outside = if c.case_tag == CaseTag::NondegenNN { Role::OutsideFullyFree } else { Role::OutsideDegenerated };
            final_rel.arity() == 4
                && is_self_complementary_for(&final_rel, endpoint)?
                && role(Role::InsideFullyFree).next().is_some()
                && role(outside).next().is_some()
        }
        CaseTag::DegenNonconnected => {
            final_rel.arity() == 4 && !is_connected(&final_rel)? && role(Role::NonDegenerated).next().is_some()
        }
        CaseTag::DegenTernary => {
            let q = lifted.as_ref().unwrap();
            final_rel.arity() == 3
                && is_self_complementary_for(q, endpoint)?
                && role(Role::InsideComponent).any(|a| {
                    role(Role::OutsideComponent).any(|b| {
                        role(Role::Bridge).any(|br| br.color(0, 1) == b.color(0, 1) && br.color(1, 2) == a.color(0, 1))
                    })
                })
        }
        CaseTag::DegenPartialfree => {
            final_rel.arity() == 4
                && is_self_complementary_for(&final_rel, endpoint)?
                && role(Role::InsideComponent).any(|a| !a.color(0, 1).is_eq())
                && role(Role::OutsideComponent).any(|b| !b.color(0, 1).is_eq())
                && role(Role::PartiallyFree).next().is_some()
        }
    };
    Ok(ok)
}
