//! Mean-field reduction of operator polynomials onto a finite basis.
//!
//! Every normal-ordered monomial is rewritten as a pure ladder word times a
//! polynomial in number operators, kept left of annihilators and right of
//! creators so that the form commutes with the adjoint, e.g. `a†a³ = n·a²`
//! and `a†³a = a†²·n`. A term is identified by its key `(ladder word, number
//! monomial)`. Terms whose key does not occur in the basis are reduced by, in
//! order of preference:
//!
//! 1. the triple rule `4xyz → x̄·yz + x̄ȳ·z + ȳz̄·x + z̄x̄·y` for three number
//!    operators over at least two modes, when some `yz` is available;
//! 2. substitution of means for the number operators outside the largest
//!    available divisor;
//! 3. the pair rule `2xy → x̄y + ȳx` over two single-key basis elements whose
//!    ladder words multiply to the term's word.
//!
//! Higher-degree terms are reduced first. What remains is projected exactly
//! onto the span of the basis and the identity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::coeff::{rational_from_f64, Coeff, Rational};
use super::expr::{Mode, Monomial, OperatorExpr};
use super::AlgebraError;

/// Number-operator monomial: mode → power of `a†a`.
pub type NumberMonomial = BTreeMap<Mode, u32>;

/// Pure ladder word: mode → signed power (positive for annihilators,
/// negative for creators).
pub type LadderWord = BTreeMap<Mode, i32>;

/// Key of a term in number form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NumberKey {
    pub word: LadderWord,
    pub numbers: NumberMonomial,
}

impl NumberKey {
    pub fn identity() -> Self {
        NumberKey { word: LadderWord::new(), numbers: NumberMonomial::new() }
    }

    pub fn number_degree(&self) -> u32 {
        self.numbers.values().sum()
    }

    pub fn degree(&self) -> u32 {
        2 * self.number_degree() + self.word.values().map(|k| k.unsigned_abs()).sum::<u32>()
    }
}

impl fmt::Display for NumberKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (m, &k) in &self.numbers {
            if k == 1 {
                parts.push(format!("n_{m}"));
            } else {
                parts.push(format!("n_{m}^{k}"));
            }
        }
        for (m, &k) in &self.word {
            let (sym, k) = if k > 0 { (format!("{m}"), k) } else { (format!("{m}d"), -k) };
            if k == 1 {
                parts.push(sym);
            } else {
                parts.push(format!("{sym}^{k}"));
            }
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// Expression in number form.
pub type NumberForm = BTreeMap<NumberKey, Coeff>;

fn add_to(form: &mut NumberForm, key: NumberKey, c: Coeff) {
    if c.is_zero() {
        return;
    }
    let e = form.entry(key.clone()).or_insert_with(Coeff::zero);
    *e += &c;
    if e.is_zero() {
        form.remove(&key);
    }
}

/// Coefficients (by degree) of `Π_{j<q} (n - s - j)`.
fn shifted_falling_factorial(q: u32, s: u32) -> Vec<BigInt> {
    let mut poly = vec![BigInt::one()];
    for j in 0..q {
        let root = BigInt::from(s + j);
        let mut next = vec![BigInt::zero(); poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= c * &root;
        }
        poly = next;
    }
    poly
}

/// Number-form of a single mode factor `a†^p a^q`.
fn mode_number_form(p: u32, q: u32) -> (i32, Vec<BigInt>) {
    if q >= p {
        (q as i32 - p as i32, shifted_falling_factorial(p, 0))
    } else {
        (-(p as i32 - q as i32), shifted_falling_factorial(q, 0))
    }
}

fn monomial_number_form(m: &Monomial) -> Vec<(NumberKey, BigInt)> {
    let mut acc = vec![(NumberKey::identity(), BigInt::one())];
    for (mode, &(p, q)) in m.powers() {
        let (w, poly) = mode_number_form(p, q);
        let mut next = Vec::new();
        for (key, c) in &acc {
            for (deg, pc) in poly.iter().enumerate() {
                if pc.is_zero() {
                    continue;
                }
                let mut k = key.clone();
                if w != 0 {
                    k.word.insert(mode.clone(), w);
                }
                if deg > 0 {
                    k.numbers.insert(mode.clone(), deg as u32);
                }
                next.push((k, c * pc));
            }
        }
        acc = next;
    }
    acc
}

/// Rewrites an expression in number form.
pub fn number_form(expr: &OperatorExpr) -> NumberForm {
    let mut out = NumberForm::new();
    for (m, c) in expr.terms() {
        for (key, w) in monomial_number_form(m) {
            add_to(&mut out, key, c.scale(&Rational::from_integer(w)));
        }
    }
    out
}

/// How two tied reduction candidates are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairWeight {
    /// `xy → ½(x̄y + ȳx)`.
    #[default]
    Half,
    /// `xy → x̄y + ȳx`.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeMean {
    pub occupation: Rational,
    pub amplitude: Coeff,
}

/// Per-mode mean occupations and coherent amplitudes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MeanFieldContext {
    pub modes: BTreeMap<Mode, ModeMean>,
    pub pair_weight: PairWeight,
}

/// `√r` exactly when `r` is the square of a rational, otherwise the nearest
/// double converted exactly.
pub fn rational_sqrt(r: &Rational) -> Rational {
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &n * &n == *r.numer() && &d * &d == *r.denom() {
        return Rational::new(n, d);
    }
    let x = super::coeff::rational_to_f64(r).max(0.0).sqrt();
    rational_from_f64(x).unwrap_or_else(Rational::zero)
}

impl MeanFieldContext {
    pub fn new() -> Self {
        MeanFieldContext::default()
    }

    /// Adds a mode with amplitude `√occupation`.
    pub fn with_mode(self, mode: &Mode, occupation: Rational) -> Self {
        let amp = Coeff::real(rational_sqrt(&occupation));
        self.with_amplitude(mode, occupation, amp)
    }

    pub fn with_amplitude(mut self, mode: &Mode, occupation: Rational, amplitude: Coeff) -> Self {
        self.modes.insert(mode.clone(), ModeMean { occupation, amplitude });
        self
    }

    pub fn with_pair_weight(mut self, w: PairWeight) -> Self {
        self.pair_weight = w;
        self
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        for (m, mm) in &self.modes {
            if mm.occupation.is_negative() {
                return Err(AlgebraError::InvalidContext(format!("negative occupation for mode {m}")));
            }
        }
        Ok(())
    }

    fn mean(&self, mode: &Mode) -> Result<&ModeMean, AlgebraError> {
        self.modes.get(mode).ok_or_else(|| AlgebraError::MissingMean(mode.0.clone()))
    }

    fn numbers_mean(&self, u: &NumberMonomial) -> Result<Coeff, AlgebraError> {
        let mut acc = Rational::one();
        for (m, &k) in u {
            let occ = &self.mean(m)?.occupation;
            for _ in 0..k {
                acc *= occ;
            }
        }
        Ok(Coeff::real(acc))
    }

    fn word_mean(&self, w: &LadderWord) -> Result<Coeff, AlgebraError> {
        let mut acc = Coeff::one();
        for (m, &k) in w {
            let amp = &self.mean(m)?.amplitude;
            let f = if k > 0 { amp.clone() } else { amp.conj() };
            acc = &acc * &f.pow(k.unsigned_abs());
        }
        Ok(acc)
    }

    /// Coherent mean of a number-form key.
    pub fn key_mean(&self, key: &NumberKey) -> Result<Coeff, AlgebraError> {
        Ok(&self.numbers_mean(&key.numbers)? * &self.word_mean(&key.word)?)
    }

    /// Coherent mean of an expression: number operators become occupations,
    /// ladder operators become amplitudes.
    pub fn expr_mean(&self, expr: &OperatorExpr) -> Result<Coeff, AlgebraError> {
        let mut acc = Coeff::zero();
        for (key, c) in number_form(expr) {
            acc += &(&c * &self.key_mean(&key)?);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct BasisElement {
    pub label: String,
    pub expr: OperatorExpr,
}

/// Ordered list of operators spanning a truncation space.
#[derive(Clone, Debug, Default)]
pub struct BasisSet {
    pub elements: Vec<BasisElement>,
}

impl BasisSet {
    pub fn new() -> Self {
        BasisSet::default()
    }

    pub fn push(mut self, label: impl Into<String>, expr: OperatorExpr) -> Self {
        self.elements.push(BasisElement { label: label.into(), expr });
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(|e| e.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    pub fn expr(&self, label: &str) -> Option<&OperatorExpr> {
        self.elements.iter().find(|e| e.label == label).map(|e| &e.expr)
    }

    pub fn modes(&self) -> Vec<Mode> {
        let mut v: Vec<Mode> = self.elements.iter().flat_map(|e| e.expr.modes()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Exact affine combination `Σ coefficients[j]·basis[j] + constant`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineCombination {
    pub coefficients: Vec<Coeff>,
    pub constant: Coeff,
}

impl AffineCombination {
    pub fn zero(n: usize) -> Self {
        AffineCombination { coefficients: vec![Coeff::zero(); n], constant: Coeff::zero() }
    }

    pub fn to_expr(&self, basis: &BasisSet) -> OperatorExpr {
        let mut e = OperatorExpr::scalar(self.constant.clone());
        for (c, el) in self.coefficients.iter().zip(&basis.elements) {
            e = &e + &el.expr.scale(c);
        }
        e
    }

    pub fn coefficient(&self, basis: &BasisSet, label: &str) -> Option<&Coeff> {
        basis.index_of(label).map(|i| &self.coefficients[i])
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coefficients.iter().all(Zero::is_zero)
    }
}

struct SingleKey {
    key: NumberKey,
}

/// Precomputed reduction data for a basis.
pub struct Reducer<'a> {
    basis: &'a BasisSet,
    ctx: &'a MeanFieldContext,
    forms: Vec<NumberForm>,
    available: BTreeMap<LadderWord, BTreeSet<NumberMonomial>>,
    singles: Vec<SingleKey>,
}

fn divides(v: &NumberMonomial, u: &NumberMonomial) -> bool {
    v.iter().all(|(m, k)| u.get(m).copied().unwrap_or(0) >= *k)
}

fn quotient(u: &NumberMonomial, v: &NumberMonomial) -> NumberMonomial {
    let mut out = u.clone();
    for (m, k) in v {
        let e = out.get_mut(m).expect("divisor");
        *e -= k;
        if *e == 0 {
            out.remove(m);
        }
    }
    out
}

fn times(u: &NumberMonomial, v: &NumberMonomial) -> NumberMonomial {
    let mut out = u.clone();
    for (m, k) in v {
        *out.entry(m.clone()).or_insert(0) += k;
    }
    out
}

fn single_number(m: &Mode) -> NumberMonomial {
    NumberMonomial::from([(m.clone(), 1)])
}

fn word_product(x: &LadderWord, y: &LadderWord) -> Option<LadderWord> {
    let mut out = x.clone();
    for (m, &k) in y {
        let e = out.entry(m.clone()).or_insert(0);
        if *e != 0 && (*e > 0) != (k > 0) {
            return None;
        }
        *e += k;
    }
    Some(out)
}

const MAX_STEPS: usize = 100_000;

impl<'a> Reducer<'a> {
    pub fn new(basis: &'a BasisSet, ctx: &'a MeanFieldContext) -> Self {
        let forms: Vec<NumberForm> = basis.elements.iter().map(|e| number_form(&e.expr)).collect();
        let mut available: BTreeMap<LadderWord, BTreeSet<NumberMonomial>> = BTreeMap::new();
        available.entry(LadderWord::new()).or_default().insert(NumberMonomial::new());
        let mut singles = Vec::new();
        for f in &forms {
            for k in f.keys() {
                available.entry(k.word.clone()).or_default().insert(k.numbers.clone());
            }
            if f.len() == 1 {
                let k = f.keys().next().expect("one key");
                singles.push(SingleKey { key: k.clone() });
            }
        }
        Reducer { basis, ctx, forms, available, singles }
    }

    fn is_available(&self, key: &NumberKey) -> bool {
        self.available.get(&key.word).map(|s| s.contains(&key.numbers)).unwrap_or(false)
    }

    fn weight(&self) -> Coeff {
        match self.ctx.pair_weight {
            PairWeight::Half => Coeff::frac(1, 2),
            PairWeight::Unit => Coeff::one(),
        }
    }

    fn triple_rule(&self, key: &NumberKey, c: &Coeff) -> Result<Option<NumberForm>, AlgebraError> {
        if key.number_degree() != 3 || key.numbers.len() < 2 {
            return Ok(None);
        }
        let avail = match self.available.get(&key.word) {
            Some(a) => a,
            None => return Ok(None),
        };
        for x in key.numbers.keys() {
            let xm = single_number(x);
            let yz = quotient(&key.numbers, &xm);
            if !avail.contains(&yz) {
                continue;
            }
            let mut yz_modes = Vec::new();
            for (m, &k) in &yz {
                for _ in 0..k {
                    yz_modes.push(m.clone());
                }
            }
            let (y, z) = (&yz_modes[0], &yz_modes[1]);
            let mean = |m: &Mode| self.ctx.numbers_mean(&single_number(m));
            let (xb, yb, zb) = (mean(x)?, mean(y)?, mean(z)?);
            let quarter = c * &Coeff::frac(1, 4);
            let mut out = NumberForm::new();
            let with = |u: NumberMonomial| NumberKey { word: key.word.clone(), numbers: u };
            add_to(&mut out, with(yz.clone()), &quarter * &xb);
            add_to(&mut out, with(single_number(z)), &quarter * &(&xb * &yb));
            add_to(&mut out, with(xm.clone()), &quarter * &(&yb * &zb));
            add_to(&mut out, with(single_number(y)), &quarter * &(&zb * &xb));
            return Ok(Some(out));
        }
        Ok(None)
    }

    fn substitution(&self, key: &NumberKey, c: &Coeff) -> Result<Option<NumberForm>, AlgebraError> {
        let avail = match self.available.get(&key.word) {
            Some(a) => a,
            None => return Ok(None),
        };
        let divisors: Vec<&NumberMonomial> = avail.iter().filter(|v| divides(v, &key.numbers)).collect();
        let best = match divisors.iter().map(|v| v.values().sum::<u32>()).max() {
            Some(b) => b,
            None => return Ok(None),
        };
        let tied: Vec<&NumberMonomial> =
            divisors.into_iter().filter(|v| v.values().sum::<u32>() == best).collect();
        let w = if tied.len() > 1 { self.weight() } else { Coeff::one() };
        let mut out = NumberForm::new();
        for v in tied {
            let rest = quotient(&key.numbers, v);
            let m = self.ctx.numbers_mean(&rest)?;
            let k = NumberKey { word: key.word.clone(), numbers: v.clone() };
            add_to(&mut out, k, &(c * &w) * &m);
        }
        Ok(Some(out))
    }

    fn pair_rule(&self, key: &NumberKey, c: &Coeff) -> Result<Option<NumberForm>, AlgebraError> {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in 0..self.singles.len() {
            for j in i..self.singles.len() {
                let (x, y) = (&self.singles[i].key, &self.singles[j].key);
                if x.word.is_empty() || y.word.is_empty() {
                    continue;
                }
                match word_product(&x.word, &y.word) {
                    Some(w) if w == key.word => {}
                    _ => continue,
                }
                let uxy = times(&x.numbers, &y.numbers);
                if !divides(&uxy, &key.numbers) {
                    continue;
                }
                let score = uxy.values().sum::<u32>();
                if best.map(|(s, _, _)| score > s).unwrap_or(true) {
                    best = Some((score, i, j));
                }
            }
        }
        let (_, i, j) = match best {
            Some(b) => b,
            None => return Ok(None),
        };
        let (x, y) = (&self.singles[i].key, &self.singles[j].key);
        let rest = quotient(&key.numbers, &times(&x.numbers, &y.numbers));
        let pre = &(c * &self.weight()) * &self.ctx.numbers_mean(&rest)?;
        let mut out = NumberForm::new();
        add_to(&mut out, y.clone(), &pre * &self.ctx.key_mean(x)?);
        add_to(&mut out, x.clone(), &pre * &self.ctx.key_mean(y)?);
        Ok(Some(out))
    }

    fn reduce_key(&self, key: &NumberKey, c: &Coeff) -> Result<NumberForm, AlgebraError> {
        if let Some(r) = self.triple_rule(key, c)? {
            return Ok(r);
        }
        if let Some(r) = self.substitution(key, c)? {
            return Ok(r);
        }
        if let Some(r) = self.pair_rule(key, c)? {
            return Ok(r);
        }
        Err(AlgebraError::Irreducible(key.to_string()))
    }

    /// Reduces the number form until every key is available in the basis.
    pub fn reduce_form(&self, form: NumberForm) -> Result<NumberForm, AlgebraError> {
        let mut work = form;
        for _ in 0..MAX_STEPS {
            let next = work
                .keys()
                .filter(|k| !self.is_available(k))
                .max_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.cmp(b)))
                .cloned();
            let key = match next {
                Some(k) => k,
                None => return Ok(work),
            };
            let c = work.remove(&key).expect("present");
            for (k, v) in self.reduce_key(&key, &c)? {
                add_to(&mut work, k, v);
            }
        }
        Err(AlgebraError::Irreducible("reduction did not terminate".into()))
    }

    /// Exact projection of an available-key form onto the basis and identity.
    pub fn project(&self, form: &NumberForm) -> Result<AffineCombination, AlgebraError> {
        let n = self.forms.len();
        let mut keys: BTreeSet<NumberKey> = form.keys().cloned().collect();
        keys.insert(NumberKey::identity());
        for f in &self.forms {
            keys.extend(f.keys().cloned());
        }
        let keys: Vec<NumberKey> = keys.into_iter().collect();
        let id = NumberKey::identity();
        let mut rows: Vec<Vec<Coeff>> = keys
            .iter()
            .map(|k| {
                let mut row: Vec<Coeff> = self
                    .forms
                    .iter()
                    .map(|f| f.get(k).cloned().unwrap_or_else(Coeff::zero))
                    .collect();
                row.push(if *k == id { Coeff::one() } else { Coeff::zero() });
                row.push(form.get(k).cloned().unwrap_or_else(Coeff::zero));
                row
            })
            .collect();
        let cols = n + 1;
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..cols {
            let p = (r..rows.len()).find(|&i| !rows[i][col].is_zero());
            let p = match p {
                Some(p) => p,
                None => continue,
            };
            rows.swap(r, p);
            let inv = rows[r][col].inv().expect("nonzero pivot");
            for v in rows[r].iter_mut() {
                *v = &*v * &inv;
            }
            let pivot = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (v, p) in row.iter_mut().zip(&pivot) {
                        let d = &f * p;
                        *v -= &d;
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        for (i, row) in rows.iter().enumerate().skip(r) {
            if !row[cols].is_zero() {
                return Err(AlgebraError::Residual(keys[i].to_string()));
            }
        }
        let mut sol = vec![Coeff::zero(); cols];
        for (i, &col) in pivots.iter().enumerate() {
            sol[col] = rows[i][cols].clone();
        }
        let constant = sol.pop().expect("constant column");
        Ok(AffineCombination { coefficients: sol, constant })
    }

    /// Reduces an expression to an exact affine combination over the basis.
    pub fn reduce(&self, expr: &OperatorExpr) -> Result<AffineCombination, AlgebraError> {
        let reduced = self.reduce_form(number_form(expr))?;
        self.project(&reduced)
    }

    pub fn basis(&self) -> &BasisSet {
        self.basis
    }
}

/// Reduces `expr` onto `span(basis ∪ {1})`.
pub fn mean_field_reduce(
    expr: &OperatorExpr,
    ctx: &MeanFieldContext,
    basis: &BasisSet,
) -> Result<AffineCombination, AlgebraError> {
    ctx.validate()?;
    Reducer::new(basis, ctx).reduce(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::coeff::ratio;

    fn modes() -> (Mode, Mode) {
        (Mode::new("a"), Mode::new("b"))
    }

    #[test]
    fn number_form_of_shifted_creators() {
        let (a, _) = modes();
        // a†³a² = a†·(n² - n)
        let e = OperatorExpr::term(Coeff::one(), Monomial::single(&a, 3, 2));
        let f = number_form(&e);
        let word = LadderWord::from([(a.clone(), -1)]);
        let k2 = NumberKey { word: word.clone(), numbers: NumberMonomial::from([(a.clone(), 2)]) };
        let k1 = NumberKey { word, numbers: single_number(&a) };
        assert_eq!(f.len(), 2);
        assert_eq!(f.get(&k2), Some(&Coeff::one()));
        assert_eq!(f.get(&k1), Some(&Coeff::int(-1)));
    }

    #[test]
    fn basis_member_passes_through() {
        let (a, _) = modes();
        let basis = BasisSet::new().push("n", OperatorExpr::number(&a));
        let ctx = MeanFieldContext::new().with_mode(&a, ratio(2, 1));
        let r = mean_field_reduce(&OperatorExpr::number(&a), &ctx, &basis).unwrap();
        assert_eq!(r.coefficients, vec![Coeff::one()]);
        assert!(r.constant.is_zero());
    }

    #[test]
    fn triple_rule_example() {
        let (a, b) = modes();
        let (n, m) = (OperatorExpr::number(&a), OperatorExpr::number(&b));
        let basis = BasisSet::new().push("nm", &n * &m).push("m", m.clone()).push("n", n.clone());
        let ctx = MeanFieldContext::new().with_mode(&a, ratio(2, 1)).with_mode(&b, ratio(3, 1));
        let target = &(&n * &m) * &m;
        let r = mean_field_reduce(&target, &ctx, &basis).unwrap();
        // 4nm² → m̄·nm + 2m̄n̄·m + m̄²·n
        assert_eq!(r.coefficients, vec![Coeff::frac(3, 4), Coeff::int(3), Coeff::frac(9, 4)]);
    }

    #[test]
    fn pair_rule_uses_amplitudes() {
        let (a, b) = modes();
        let d = OperatorExpr::square(&b);
        let basis = BasisSet::new().push("a", OperatorExpr::annihilator(&a)).push("d", d.clone());
        let ctx = MeanFieldContext::new().with_mode(&a, ratio(4, 1)).with_mode(&b, ratio(9, 1));
        let r = mean_field_reduce(&(&OperatorExpr::annihilator(&a) * &d), &ctx, &basis).unwrap();
        // ad → ½(ā d + d̄ a) with ā = 2, d̄ = 9/2
        assert_eq!(r.coefficients, vec![Coeff::frac(9, 4), Coeff::one()]);
    }

    #[test]
    fn irreducible_term_is_named() {
        let (a, b) = modes();
        let basis = BasisSet::new().push("a", OperatorExpr::annihilator(&a));
        let ctx = MeanFieldContext::new().with_mode(&a, ratio(1, 1)).with_mode(&b, ratio(1, 1));
        let err = mean_field_reduce(&OperatorExpr::annihilator(&b), &ctx, &basis).unwrap_err();
        assert!(matches!(err, AlgebraError::Irreducible(ref s) if s == "b"));
    }
}
