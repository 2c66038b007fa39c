//! Finite ternary operations: checking the quasi directed Jónsson chain
//! identities and relation preservation.
//!
//! For a chain `D1, ..., Dn` the identities are
//!
//! 1. `D1(x,x,y) = D1(x,x,x)`
//! 2. `Di(x,y,x) = Di(x,x,x)` for every `i`
//! 3. `Di(x,y,y) = Di+1(x,x,y)` for `i < n`
//! 4. `Dn(x,y,y) = Dn(y,y,y)`

use serde::{Deserialize, Serialize};

use crate::error::IdentityError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperationTable {
    domain: usize,
    values: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationDoc {
    pub domain: usize,
    pub arity: usize,
    /// Rows `[x, y, z, value]`.
    pub values: Vec<[usize; 4]>,
}

impl OperationTable {
    pub fn from_fn(domain: usize, f: impl Fn(usize, usize, usize) -> usize) -> Result<Self, IdentityError> {
        let mut values = Vec::with_capacity(domain.pow(3));
        for x in 0..domain {
            for y in 0..domain {
                for z in 0..domain {
                    let v = f(x, y, z);
                    if v >= domain {
                        return Err(IdentityError::Malformed(format!("value {v} outside a domain of size {domain}")));
                    }
                    values.push(v);
                }
            }
        }
        Ok(OperationTable { domain, values })
    }

    pub fn from_doc(doc: &OperationDoc) -> Result<Self, IdentityError> {
        if doc.arity != 3 {
            return Err(IdentityError::Malformed(format!("arity {} is not 3", doc.arity)));
        }
        let d = doc.domain;
        if d == 0 {
            return Err(IdentityError::Malformed("empty domain".into()));
        }
        let mut values = vec![None; d.pow(3)];
        for row in &doc.values {
            if row.iter().any(|&v| v >= d) {
                return Err(IdentityError::Malformed(format!("row {row:?} leaves the domain")));
            }
            let k = (row[0] * d + row[1]) * d + row[2];
            if values[k].replace(row[3]).is_some() {
                return Err(IdentityError::Malformed(format!("row {row:?} given twice")));
            }
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| IdentityError::Malformed(format!("table must have all {} rows", d.pow(3))))?;
        Ok(OperationTable { domain: d, values })
    }

    pub fn load(text: &str) -> Result<Self, IdentityError> {
        let doc: OperationDoc = serde_json::from_str(text).map_err(|e| IdentityError::Malformed(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> OperationDoc {
        let d = self.domain;
        let mut values = Vec::new();
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    values.push([x, y, z, self.apply(x, y, z)]);
                }
            }
        }
        OperationDoc { domain: d, arity: 3, values }
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn apply(&self, x: usize, y: usize, z: usize) -> usize {
        self.values[(x * self.domain + y) * self.domain + z]
    }

    /// The operation `x ↦ σ⁻¹(f(σx, σy, σz))`, for a permutation `σ` of the
    /// domain.
    pub fn relabel(&self, sigma: &[usize]) -> Result<Self, IdentityError> {
        let d = self.domain;
        let mut inv = vec![usize::MAX; d];
        for (i, &s) in sigma.iter().enumerate() {
            if s >= d || inv[s] != usize::MAX {
                return Err(IdentityError::Malformed(format!("{sigma:?} is not a permutation")));
            }
            inv[s] = i;
        }
        if sigma.len() != d {
            return Err(IdentityError::DomainMismatch(format!("{sigma:?} does not permute a domain of size {d}")));
        }
        Self::from_fn(d, |x, y, z| inv[self.apply(sigma[x], sigma[y], sigma[z])])
    }

    /// All `d^(d^3)` ternary tables on a domain of size `d`.
    pub fn all(d: usize) -> impl Iterator<Item = OperationTable> {
        let rows = d.pow(3);
        let total = d.checked_pow(rows as u32).expect("domain too large to enumerate");
        (0..total).map(move |mut code| {
            let mut values = vec![0; rows];
            for v in values.iter_mut() {
                *v = code % d;
                code /= d;
            }
            OperationTable { domain: d, values }
        })
    }
}

pub fn projection(domain: usize, coordinate: usize) -> OperationTable {
    OperationTable::from_fn(domain, |x, y, z| [x, y, z][coordinate]).unwrap()
}

/// Majority on a domain, returning the first argument when all differ.
pub fn majority(domain: usize) -> OperationTable {
    OperationTable::from_fn(domain, |x, y, z| if y == z { y } else { x }).unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JonssonChain {
    ops: Vec<OperationTable>,
}

impl JonssonChain {
    pub fn new(ops: Vec<OperationTable>) -> Result<Self, IdentityError> {
        let Some(first) = ops.first() else {
            return Err(IdentityError::Malformed("a chain needs at least one operation".into()));
        };
        if let Some((i, op)) = ops.iter().enumerate().find(|(_, o)| o.domain != first.domain) {
            return Err(IdentityError::DomainMismatch(format!(
                "operation {} has domain {}, operation 1 has domain {}",
                i + 1,
                op.domain,
                first.domain
            )));
        }
        Ok(JonssonChain { ops })
    }

    pub fn ops(&self) -> &[OperationTable] {
        &self.ops
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum ChainVerdict {
    Valid,
    Invalid {
        equation: u8,
        /// 1-based position of the operation on the left-hand side.
        index: usize,
        x: usize,
        y: usize,
        left: usize,
        right: usize,
    },
}

/// Checks the four identity families, in that order, over all `x, y` and
/// all positions in the chain.
pub fn verify_chain(c: &JonssonChain) -> ChainVerdict {
    let ops = &c.ops;
    let n = ops.len();
    let d = ops[0].domain;
    let mut first = None;
    let mut check = |equation: u8, index: usize, left: &dyn Fn(usize, usize) -> usize, right: &dyn Fn(usize, usize) -> usize| {
        if first.is_some() {
            return;
        }
        for x in 0..d {
            for y in 0..d {
                let (l, r) = (left(x, y), right(x, y));
                if l != r {
                    first = Some(ChainVerdict::Invalid { equation, index, x, y, left: l, right: r });
                    return;
                }
            }
        }
    };
    check(1, 1, &|x, y| ops[0].apply(x, x, y), &|x, _| ops[0].apply(x, x, x));
    for i in 0..n {
        check(2, i + 1, &|x, y| ops[i].apply(x, y, x), &|x, _| ops[i].apply(x, x, x));
    }
    for i in 0..n.saturating_sub(1) {
        check(3, i + 1, &|x, y| ops[i].apply(x, y, y), &|x, y| ops[i + 1].apply(x, x, y));
    }
    check(4, n, &|x, y| ops[n - 1].apply(x, y, y), &|_, y| ops[n - 1].apply(y, y, y));
    first.unwrap_or(ChainVerdict::Valid)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Preservation {
    Preserved,
    /// Indices of three rows whose image is not a row.
    Violated { rows: [usize; 3], image: Vec<usize> },
}

/// Applies `op` coordinatewise to every triple of rows of `rel`.
pub fn preserves_relation(op: &OperationTable, rel: &[Vec<usize>]) -> Result<Preservation, IdentityError> {
    let Some(k) = rel.first().map(Vec::len) else { return Ok(Preservation::Preserved) };
    for row in rel {
        if row.len() != k {
            return Err(IdentityError::Malformed("rows of different lengths".into()));
        }
        if let Some(v) = row.iter().find(|&&v| v >= op.domain) {
            return Err(IdentityError::DomainMismatch(format!("value {v} outside a domain of size {}", op.domain)));
        }
    }
    let rows: std::collections::HashSet<&Vec<usize>> = rel.iter().collect();
    for a in 0..rel.len() {
        for b in 0..rel.len() {
            for c in 0..rel.len() {
                let image: Vec<usize> = (0..k).map(|i| op.apply(rel[a][i], rel[b][i], rel[c][i])).collect();
                if !rows.contains(&image) {
                    return Ok(Preservation::Violated { rows: [a, b, c], image });
                }
            }
        }
    }
    Ok(Preservation::Preserved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ops: Vec<OperationTable>) -> JonssonChain {
        JonssonChain::new(ops).unwrap()
    }

    #[test]
    fn majority_is_a_chain() {
        assert_eq!(verify_chain(&chain(vec![majority(2)])), ChainVerdict::Valid);
    }

    #[test]
    fn first_projection_fails_the_last_identity() {
        let v = verify_chain(&chain(vec![projection(2, 0)]));
        assert_eq!(v, ChainVerdict::Invalid { equation: 4, index: 1, x: 0, y: 1, left: 0, right: 1 });
    }

    #[test]
    fn broken_link() {
        // D1(x,y,y) = x while D2(x,x,y) = y.
        let v = verify_chain(&chain(vec![projection(2, 0), projection(2, 2)]));
        assert_eq!(v, ChainVerdict::Invalid { equation: 3, index: 1, x: 0, y: 1, left: 0, right: 1 });
        assert_eq!(verify_chain(&chain(vec![projection(2, 0), majority(2)])), ChainVerdict::Valid);
    }

    #[test]
    fn documents() {
        let m = majority(2);
        let text = serde_json::to_string(&m.to_doc()).unwrap();
        assert_eq!(OperationTable::load(&text).unwrap(), m);
        let mut doc = m.to_doc();
        doc.values.pop();
        assert!(matches!(OperationTable::from_doc(&doc), Err(IdentityError::Malformed(_))));
        let mismatch = JonssonChain::new(vec![majority(2), majority(3)]);
        assert!(matches!(mismatch, Err(IdentityError::DomainMismatch(_))));
    }

    #[test]
    fn preservation() {
        let le = vec![vec![0, 0], vec![0, 1], vec![1, 1]];
        assert_eq!(preserves_relation(&majority(2), &le).unwrap(), Preservation::Preserved);
        // Three rows out of two always repeat one, which majority returns.
        let neq = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(preserves_relation(&majority(2), &neq).unwrap(), Preservation::Preserved);
        let one_in_three = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(
            preserves_relation(&majority(2), &one_in_three).unwrap(),
            Preservation::Violated { rows: [0, 1, 2], image: vec![0, 0, 0] }
        );
        assert_eq!(preserves_relation(&projection(2, 0), &neq).unwrap(), Preservation::Preserved);
    }

    #[test]
    fn enumeration_and_relabeling() {
        assert_eq!(OperationTable::all(2).count(), 256);
        let m = majority(2);
        assert_eq!(m.relabel(&[1, 0]).unwrap(), m);
        assert!(m.relabel(&[0, 0]).is_err());
    }
}
