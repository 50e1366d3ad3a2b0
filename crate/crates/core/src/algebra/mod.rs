//! Exact symbolic algebra of multimode bosonic operator polynomials.

pub mod coeff;
pub mod expr;
pub mod fock;
pub mod meanfield;
pub mod parse;

use num_traits::Zero;
use thiserror::Error;

pub use coeff::{ratio, Coeff, Rational};
pub use expr::{Ladder, Mode, Monomial, OperatorExpr};
pub use fock::FockSpace;
pub use meanfield::{
    mean_field_reduce, AffineCombination, BasisElement, BasisSet, MeanFieldContext, PairWeight,
    Reducer,
};
pub use parse::parse_expr;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("unknown mode '{0}'")]
    UnknownMode(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("fock space: {0}")]
    Fock(String),
    #[error("no mean value for mode '{0}'")]
    MissingMean(String),
    #[error("invalid mean-field context: {0}")]
    InvalidContext(String),
    #[error("irreducible term {0}")]
    Irreducible(String),
    #[error("term {0} is outside the span of the basis")]
    Residual(String),
}

/// Normal-ordered product of raw ladder factors.
pub fn normal_order(
    factors: &[(Mode, Ladder)],
    coefficient: Coeff,
    declared: Option<&[Mode]>,
) -> Result<OperatorExpr, AlgebraError> {
    OperatorExpr::from_factors(factors, coefficient, declared)
}

/// `xy - yx`.
pub fn commute(x: &OperatorExpr, y: &OperatorExpr) -> OperatorExpr {
    x.commutator(y)
}

/// One antinormal-ordered term: `coeff · Π_mode a^q a†^p`, with the
/// monomial's `(p, q)` read as `(creators, annihilators)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntinormalTerm {
    pub coeff: Coeff,
    pub powers: Monomial,
}

fn binomial(n: u32, k: u32) -> i128 {
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// Rewrites a canonical expression with all annihilators to the left of the
/// creators of the same mode, using
/// `a†^p a^q = Σ_k (-1)^k C(p,k) C(q,k) k! a^(q-k) a†^(p-k)`.
pub fn antinormal_order(expr: &OperatorExpr) -> Vec<AntinormalTerm> {
    let mut acc: std::collections::BTreeMap<Monomial, Coeff> = Default::default();
    for (mono, c) in expr.terms() {
        let mut partial = vec![(c.clone(), Vec::new())];
        for (mode, &(p, q)) in mono.powers() {
            let mut next = Vec::new();
            for (pc, ms) in &partial {
                for k in 0..=p.min(q) {
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    let w = sign * binomial(p, k) * binomial(q, k) * factorial(k);
                    let mut ms: Vec<(Mode, (u32, u32))> = ms.clone();
                    ms.push((mode.clone(), (p - k, q - k)));
                    next.push((pc * &Coeff::int(w as i64), ms));
                }
            }
            partial = next;
        }
        for (pc, ms) in partial {
            let m = Monomial::from_powers(ms);
            let e = acc.entry(m).or_insert_with(Coeff::zero);
            *e += &pc;
        }
    }
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(powers, coeff)| AntinormalTerm { coeff, powers })
        .collect()
}

/// Normal-orders an antinormal term list.
pub fn from_antinormal(terms: &[AntinormalTerm]) -> OperatorExpr {
    let mut out = OperatorExpr::zero();
    for t in terms {
        let mut e = OperatorExpr::scalar(t.coeff.clone());
        for (mode, &(p, q)) in t.powers.powers() {
            let ann = OperatorExpr::term(Coeff::from(1), Monomial::single(mode, 0, q));
            let cre = OperatorExpr::term(Coeff::from(1), Monomial::single(mode, p, 0));
            e = &e * &(&ann * &cre);
        }
        out = &out + &e;
    }
    out
}

/// Outcome of reducing one commutator of basis elements.
#[derive(Clone, Debug)]
pub struct PairClosure {
    pub left: String,
    pub right: String,
    pub commutator: OperatorExpr,
    pub reduced: Result<AffineCombination, AlgebraError>,
}

impl PairClosure {
    pub fn closed(&self) -> bool {
        self.reduced.is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub pairs: Vec<PairClosure>,
}

impl ClosureReport {
    pub fn closed(&self) -> bool {
        self.pairs.iter().all(PairClosure::closed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PairClosure> {
        self.pairs.iter().filter(|p| !p.closed())
    }

    /// True when every reduction needed no mean values: each commutator is
    /// already an exact combination of basis elements.
    pub fn exact(&self, basis: &BasisSet) -> bool {
        self.pairs.iter().all(|p| match &p.reduced {
            Ok(r) => r.to_expr(basis) == p.commutator,
            Err(_) => false,
        })
    }
}

/// Commutes every unordered pair of basis elements and reduces the result.
pub fn verify_closure(basis: &BasisSet, ctx: &MeanFieldContext) -> ClosureReport {
    let reducer = Reducer::new(basis, ctx);
    let mut pairs = Vec::new();
    let els = &basis.elements;
    for i in 0..els.len() {
        for j in (i + 1)..els.len() {
            let comm = commute(&els[i].expr, &els[j].expr);
            let reduced = ctx.validate().and_then(|_| reducer.reduce(&comm));
            pairs.push(PairClosure {
                left: els[i].label.clone(),
                right: els[j].label.clone(),
                commutator: comm,
                reduced,
            });
        }
    }
    ClosureReport { pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antinormal_of_number() {
        let a = Mode::new("a");
        let t = antinormal_order(&OperatorExpr::number(&a));
        assert_eq!(t.len(), 2);
        assert!(t.contains(&AntinormalTerm { coeff: Coeff::int(1), powers: Monomial::single(&a, 1, 1) }));
        assert!(t.contains(&AntinormalTerm { coeff: Coeff::int(-1), powers: Monomial::identity() }));
    }

    #[test]
    fn antinormal_of_n_times_c() {
        let a = Mode::new("a");
        let nc = &OperatorExpr::number(&a) * &OperatorExpr::square(&a);
        let t = antinormal_order(&nc);
        assert!(t.contains(&AntinormalTerm { coeff: Coeff::frac(1, 2), powers: Monomial::single(&a, 1, 3) }));
        assert!(t.contains(&AntinormalTerm { coeff: Coeff::frac(-3, 2), powers: Monomial::single(&a, 0, 2) }));
        assert_eq!(from_antinormal(&t), nc);
    }

    #[test]
    fn amplifier_basis_is_exactly_closed() {
        let a = Mode::new("a");
        let c = OperatorExpr::square(&a);
        let basis = BasisSet::new()
            .push("n", OperatorExpr::number(&a))
            .push("c", c.clone())
            .push("cd", c.adjoint());
        let r = verify_closure(&basis, &MeanFieldContext::new());
        assert!(r.closed());
        assert!(r.exact(&basis));
    }

    #[test]
    fn single_element_basis() {
        let a = Mode::new("a");
        let basis = BasisSet::new().push("a", OperatorExpr::annihilator(&a));
        let r = verify_closure(&basis, &MeanFieldContext::new());
        assert!(r.closed());
        assert!(r.pairs.is_empty());
    }
}
