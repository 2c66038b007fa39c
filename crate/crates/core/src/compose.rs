//! The two quaternary compositions and their powers.

use serde::{Deserialize, Serialize};

use crate::error::AlgebraError;
use crate::pp::{pp_eval, PPFormula};
use crate::relation::OrbitRelation;
use crate::template::Template;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// `∃y z. R1(x1, x2, y, z) ∧ R2(y, z, x3, x4)`
    Circ,
    /// `∃y1 y2. R1(x1, x2, y1, y2) ∧ R2(y2, y1, x3, x4)`
    Bowtie,
}

fn check_quaternary(r: &OrbitRelation) -> Result<(), AlgebraError> {
    if r.arity() != 4 {
        return Err(AlgebraError::WrongArity { expected: 4, found: r.arity() });
    }
    Ok(())
}

/// One composition step.
pub fn compose_once(t: &Template, kind: Kind, r1: &OrbitRelation, r2: &OrbitRelation) -> Result<OrbitRelation, AlgebraError> {
    check_quaternary(r1)?;
    check_quaternary(r2)?;
    if r1.last_pair() != r2.first_pair() {
        return Err(AlgebraError::ProjectionMismatch(format!(
            "last pair {:?} of the left operand differs from first pair {:?} of the right operand",
            r1.last_pair(),
            r2.first_pair()
        )));
    }
    let second: [usize; 4] = match kind {
        Kind::Circ => [4, 5, 2, 3],
        Kind::Bowtie => [5, 4, 2, 3],
    };
    let f = PPFormula::new(6, vec![0, 1, 2, 3]).atom(r1, &[0, 1, 4, 5]).atom(r2, &second);
    pp_eval(t, &f)
}

/// `r1, r2, r1, r2, ...` with `len` operands, composed left to right.
pub fn compose_chain(
    t: &Template,
    kind: Kind,
    r1: &OrbitRelation,
    r2: &OrbitRelation,
    len: usize,
) -> Result<OrbitRelation, AlgebraError> {
    check_quaternary(r1)?;
    check_quaternary(r2)?;
    let mut acc = r1.clone();
    for i in 1..len.max(1) {
        let next = if i % 2 == 1 { r2 } else { r1 };
        acc = compose_once(t, kind, &acc, next)?;
    }
    Ok(acc)
}

/// `(r1 ∘ r2)^n` or `(r1 ⋈ r2)^n`: each relation used `n` times, alternating.
pub fn compose(t: &Template, kind: Kind, r1: &OrbitRelation, r2: &OrbitRelation, n: usize) -> Result<OrbitRelation, AlgebraError> {
    if n == 0 {
        return Err(AlgebraError::Malformed("repetition count must be at least 1".into()));
    }
    compose_chain(t, kind, r1, r2, 2 * n)
}
