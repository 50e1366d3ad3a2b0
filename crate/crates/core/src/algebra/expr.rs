//! Normal-ordered multimode bosonic polynomials.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::coeff::{Coeff, Rational};
use super::AlgebraError;

/// Symbolic mode identifier, e.g. `"a"` or `"b"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode(pub String);

impl Mode {
    pub fn new(id: impl Into<String>) -> Self {
        Mode(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which ladder operator a raw factor is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Product of per-mode normal-ordered powers `a†^p a^q`.
///
/// Modes are kept sorted by id and `(0, 0)` entries are never stored, so two
/// monomials are equal exactly when their keys are.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    powers: BTreeMap<Mode, (u32, u32)>,
}

impl Monomial {
    pub fn identity() -> Self {
        Monomial::default()
    }

    pub fn from_powers<I: IntoIterator<Item = (Mode, (u32, u32))>>(it: I) -> Self {
        let mut m = Monomial::default();
        for (mode, (p, q)) in it {
            if p == 0 && q == 0 {
                continue;
            }
            let e = m.powers.entry(mode).or_insert((0, 0));
            e.0 += p;
            e.1 += q;
        }
        m
    }

    pub fn single(mode: &Mode, creators: u32, annihilators: u32) -> Self {
        Monomial::from_powers([(mode.clone(), (creators, annihilators))])
    }

    pub fn is_identity(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &BTreeMap<Mode, (u32, u32)> {
        &self.powers
    }

    /// `(creators, annihilators)` for a mode.
    pub fn power(&self, mode: &Mode) -> (u32, u32) {
        self.powers.get(mode).copied().unwrap_or((0, 0))
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().map(|(p, q)| p + q).sum()
    }

    pub fn modes(&self) -> impl Iterator<Item = &Mode> {
        self.powers.keys()
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial {
            powers: self.powers.iter().map(|(m, &(p, q))| (m.clone(), (q, p))).collect(),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return f.write_str("1");
        }
        let mut parts = Vec::new();
        for (mode, &(p, q)) in &self.powers {
            match p {
                0 => {}
                1 => parts.push(format!("{mode}d")),
                _ => parts.push(format!("{mode}d^{p}")),
            }
            match q {
                0 => {}
                1 => parts.push(mode.to_string()),
                _ => parts.push(format!("{mode}^{q}")),
            }
        }
        f.write_str(&parts.join("*"))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// Normal-ordered product of two monomials, as `(coefficient, monomial)` terms.
///
/// Per mode, `(a†^p a^q)(a†^r a^s) = Σ_k C(q,k) C(r,k) k! a†^(p+r-k) a^(q+s-k)`.
fn monomial_product(x: &Monomial, y: &Monomial) -> Vec<(u128, Monomial)> {
    let mut terms: Vec<(u128, Monomial)> = vec![(1, Monomial::identity())];
    let mut modes: Vec<&Mode> = x.powers.keys().chain(y.powers.keys()).collect();
    modes.sort();
    modes.dedup();
    for mode in modes {
        let (p, q) = x.power(mode);
        let (r, s) = y.power(mode);
        let kmax = q.min(r);
        let mut next = Vec::with_capacity(terms.len() * (kmax as usize + 1));
        for (c, mono) in &terms {
            for k in 0..=kmax {
                let w = binomial(q, k) * binomial(r, k) * factorial(k);
                let mut m = mono.clone();
                let (cp, cq) = (p + r - k, q + s - k);
                if cp != 0 || cq != 0 {
                    m.powers.insert(mode.clone(), (cp, cq));
                }
                next.push((c * w, m));
            }
        }
        terms = next;
    }
    terms
}

/// Exact-coefficient polynomial in bosonic ladder operators, always stored
/// normal-ordered with no zero coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct OperatorExpr {
    terms: BTreeMap<Monomial, Coeff>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr::default()
    }

    pub fn scalar(c: Coeff) -> Self {
        OperatorExpr::term(c, Monomial::identity())
    }

    pub fn one() -> Self {
        OperatorExpr::scalar(Coeff::one())
    }

    pub fn term(c: Coeff, m: Monomial) -> Self {
        let mut e = OperatorExpr::zero();
        e.add_term(m, c);
        e
    }

    pub fn annihilator(mode: &Mode) -> Self {
        OperatorExpr::term(Coeff::one(), Monomial::single(mode, 0, 1))
    }

    pub fn creator(mode: &Mode) -> Self {
        OperatorExpr::term(Coeff::one(), Monomial::single(mode, 1, 0))
    }

    /// Number operator `a†a`.
    pub fn number(mode: &Mode) -> Self {
        OperatorExpr::term(Coeff::one(), Monomial::single(mode, 1, 1))
    }

    /// Square field operator `a²/2`.
    pub fn square(mode: &Mode) -> Self {
        OperatorExpr::term(Coeff::frac(1, 2), Monomial::single(mode, 0, 2))
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Constant (identity) part.
    pub fn constant(&self) -> Coeff {
        self.coeff(&Monomial::identity())
    }

    /// Single-monomial view: `Some((c, m))` if the expression has exactly one term.
    pub fn as_single(&self) -> Option<(&Coeff, &Monomial)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (c, m))
        } else {
            None
        }
    }

    pub fn modes(&self) -> Vec<Mode> {
        let mut v: Vec<Mode> = self.terms.keys().flat_map(|m| m.modes().cloned()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest creator power per mode over all terms.
    pub fn max_creators(&self, mode: &Mode) -> u32 {
        self.terms.keys().map(|m| m.power(mode).0).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let mut out = OperatorExpr::zero();
        if c.is_zero() {
            return out;
        }
        for (m, k) in &self.terms {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.scale(&Coeff::real(r.clone()))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = OperatorExpr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.adjoint(), c.conj());
        }
        out
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.adjoint() == *self
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = OperatorExpr::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `xy - yx`.
    pub fn commutator(&self, other: &OperatorExpr) -> Self {
        &(self * other) - &(other * self)
    }

    /// Product of raw ladder factors, normal-ordered, rejecting modes not in
    /// `declared` (when given).
    pub fn from_factors(
        factors: &[(Mode, Ladder)],
        coefficient: Coeff,
        declared: Option<&[Mode]>,
    ) -> Result<Self, AlgebraError> {
        let mut acc = OperatorExpr::scalar(coefficient);
        for (mode, kind) in factors {
            if let Some(d) = declared {
                if !d.contains(mode) {
                    return Err(AlgebraError::UnknownMode(mode.0.clone()));
                }
            }
            let f = match kind {
                Ladder::Annihilate => OperatorExpr::annihilator(mode),
                Ladder::Create => OperatorExpr::creator(mode),
            };
            acc = &acc * &f;
        }
        Ok(acc)
    }
}

impl<'a> Add<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, o: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add for OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, o: OperatorExpr) -> OperatorExpr {
        &self + &o
    }
}

impl<'a> Sub<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, o: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, o: OperatorExpr) -> OperatorExpr {
        &self - &o
    }
}

impl<'a> Mul<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, o: &OperatorExpr) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (mx, cx) in &self.terms {
            for (my, cy) in &o.terms {
                let c = cx * cy;
                for (w, m) in monomial_product(mx, my) {
                    let w = Coeff::real(Rational::from_integer(w.into()));
                    out.add_term(m, &c * &w);
                }
            }
        }
        out
    }
}

impl Mul for OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, o: OperatorExpr) -> OperatorExpr {
        &self * &o
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&Coeff::int(-1))
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                if m.is_identity() {
                    c.to_string()
                } else if *c == Coeff::one() {
                    m.to_string()
                } else {
                    format!("{c}*{m}")
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Mode {
        Mode::new("a")
    }

    #[test]
    fn ccr_single_application() {
        let e = OperatorExpr::from_factors(
            &[(a(), Ladder::Annihilate), (a(), Ladder::Create)],
            Coeff::one(),
            None,
        )
        .unwrap();
        let expected = &OperatorExpr::number(&a()) + &OperatorExpr::one();
        assert_eq!(e, expected);
    }

    #[test]
    fn disjoint_modes_commute() {
        let b = Mode::new("b");
        let ab = OperatorExpr::annihilator(&a()) * OperatorExpr::annihilator(&b);
        let ba = OperatorExpr::annihilator(&b) * OperatorExpr::annihilator(&a());
        assert_eq!(ab, ba);
        assert_eq!(ab.len(), 1);
    }

    #[test]
    fn aa_adag_adag() {
        // a a a† a† = a†² a² + 4 a†a + 2
        let f = [
            (a(), Ladder::Annihilate),
            (a(), Ladder::Annihilate),
            (a(), Ladder::Create),
            (a(), Ladder::Create),
        ];
        let e = OperatorExpr::from_factors(&f, Coeff::one(), None).unwrap();
        let mut expected = OperatorExpr::term(Coeff::one(), Monomial::single(&a(), 2, 2));
        expected.add_term(Monomial::single(&a(), 1, 1), Coeff::int(4));
        expected.add_term(Monomial::identity(), Coeff::int(2));
        assert_eq!(e, expected);
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let r = OperatorExpr::from_factors(
            &[(Mode::new("z"), Ladder::Create)],
            Coeff::one(),
            Some(&[a()]),
        );
        assert!(matches!(r, Err(AlgebraError::UnknownMode(_))));
    }

    #[test]
    fn square_operator_commutator() {
        // [c, c†] = n + 1/2
        let c = OperatorExpr::square(&a());
        let lhs = c.commutator(&c.adjoint());
        let rhs = &OperatorExpr::number(&a()) + &OperatorExpr::scalar(Coeff::frac(1, 2));
        assert_eq!(lhs, rhs);
    }
}
