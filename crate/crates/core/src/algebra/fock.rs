//! Truncated Fock-space representation, used as an independent oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::expr::{Ladder, Mode, OperatorExpr};
use super::AlgebraError;

/// Default cap on the tensor-product dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 14;

/// Ordered modes with their Fock cutoffs; the first mode is most significant
/// in the state index.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub modes: Vec<(Mode, usize)>,
    pub dimension_cap: usize,
}

impl FockSpace {
    pub fn new(modes: &[(Mode, usize)]) -> Self {
        FockSpace { modes: modes.to_vec(), dimension_cap: DEFAULT_DIMENSION_CAP }
    }

    /// Every listed mode shares one cutoff.
    pub fn uniform(modes: &[Mode], cutoff: usize) -> Self {
        FockSpace::new(&modes.iter().map(|m| (m.clone(), cutoff)).collect::<Vec<_>>())
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    pub fn dimension(&self) -> Result<usize, AlgebraError> {
        let mut d: usize = 1;
        for (mode, c) in &self.modes {
            if *c < 2 {
                return Err(AlgebraError::Fock(format!("cutoff for mode {mode} must be at least 2")));
            }
            d = d.checked_mul(*c).filter(|d| *d <= self.dimension_cap).ok_or_else(|| {
                AlgebraError::Fock(format!("dimension exceeds cap {}", self.dimension_cap))
            })?;
        }
        Ok(d)
    }

    fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (k, (_, c)) in self.modes.iter().enumerate().rev() {
            occ[k] = idx % c;
            idx /= c;
        }
        occ
    }

    fn index(&self, occ: &[usize]) -> usize {
        self.modes.iter().zip(occ).fold(0, |acc, ((_, c), n)| acc * c + n)
    }

    fn position(&self, mode: &Mode) -> Result<usize, AlgebraError> {
        self.modes
            .iter()
            .position(|(m, _)| m == mode)
            .ok_or_else(|| AlgebraError::UnknownMode(mode.0.clone()))
    }

    /// Matrix of an expression, applying `a^q` then `a†^p` per mode. Creation
    /// beyond the cutoff yields zero.
    pub fn matrix(&self, expr: &OperatorExpr) -> Result<DMatrix<Complex64>, AlgebraError> {
        let dim = self.dimension()?;
        let mut out = DMatrix::<Complex64>::zeros(dim, dim);
        let mut terms = Vec::new();
        for (mono, c) in expr.terms() {
            let mut per_mode = Vec::new();
            for (mode, &(p, q)) in mono.powers() {
                per_mode.push((self.position(mode)?, p as usize, q as usize));
            }
            terms.push((per_mode, c.to_c64()));
        }
        for col in 0..dim {
            let occ = self.occupations(col);
            'term: for (per_mode, c) in &terms {
                let mut target = occ.clone();
                let mut amp_sq = 1.0f64;
                for &(k, p, q) in per_mode {
                    let n = target[k];
                    if q > n {
                        continue 'term;
                    }
                    let mid = n - q;
                    let top = mid + p;
                    if top >= self.modes[k].1 {
                        continue 'term;
                    }
                    for j in (mid + 1)..=n {
                        amp_sq *= j as f64;
                    }
                    for j in (mid + 1)..=top {
                        amp_sq *= j as f64;
                    }
                    target[k] = top;
                }
                let row = self.index(&target);
                out[(row, col)] += c * amp_sq.sqrt();
            }
        }
        Ok(out)
    }

    /// Matrix of a single ladder factor.
    pub fn ladder(&self, mode: &Mode, kind: Ladder) -> Result<DMatrix<Complex64>, AlgebraError> {
        let e = match kind {
            Ladder::Annihilate => OperatorExpr::annihilator(mode),
            Ladder::Create => OperatorExpr::creator(mode),
        };
        self.matrix(&e)
    }

    /// Matrix product of raw factors, left to right.
    pub fn product(&self, factors: &[(Mode, Ladder)]) -> Result<DMatrix<Complex64>, AlgebraError> {
        let dim = self.dimension()?;
        let mut acc = DMatrix::<Complex64>::identity(dim, dim);
        for (mode, kind) in factors {
            acc *= self.ladder(mode, *kind)?;
        }
        Ok(acc)
    }

    /// State indices whose per-mode occupations are all at most `limit`.
    pub fn safe_indices(&self, limit: usize) -> Vec<usize> {
        let dim = self.modes.iter().map(|(_, c)| *c).product::<usize>();
        (0..dim).filter(|&i| self.occupations(i).iter().all(|&n| n <= limit)).collect()
    }

    /// Occupation limit guaranteeing that products of the given operands are
    /// free of truncation artifacts: `min(cap, cutoff - 1 - creators)`.
    pub fn safe_limit(&self, operands: &[&OperatorExpr], cap: usize) -> usize {
        let mut limit = cap;
        for (mode, c) in &self.modes {
            let margin: u32 = operands.iter().map(|e| e.max_creators(mode)).sum();
            let l = (*c as i64 - 1 - margin as i64).max(0) as usize;
            limit = limit.min(l);
        }
        limit
    }
}

/// Largest entrywise deviation between two matrices on a sub-block.
pub fn max_deviation(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>, idx: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for &r in idx {
        for &c in idx {
            worst = worst.max((x[(r, c)] - y[(r, c)]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_operator_is_diagonal() {
        let a = Mode::new("a");
        let fs = FockSpace::uniform(std::slice::from_ref(&a), 4);
        let m = fs.matrix(&OperatorExpr::number(&a)).unwrap();
        for k in 0..4 {
            assert_eq!(m[(k, k)], Complex64::new(k as f64, 0.0));
        }
        assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 3);
    }

    #[test]
    fn two_mode_annihilation() {
        let (a, b) = (Mode::new("a"), Mode::new("b"));
        let fs = FockSpace::uniform(&[a.clone(), b.clone()], 3);
        let ab = OperatorExpr::annihilator(&a) * OperatorExpr::annihilator(&b);
        let m = fs.matrix(&ab).unwrap();
        for j in 1..3 {
            for k in 1..3 {
                let col = j * 3 + k;
                let row = (j - 1) * 3 + (k - 1);
                assert!((m[(row, col)].re - ((j * k) as f64).sqrt()).abs() < 1e-15);
            }
        }
        assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let a = Mode::new("a");
        let fs = FockSpace::uniform(std::slice::from_ref(&a), 20).with_cap(10);
        assert!(fs.matrix(&OperatorExpr::number(&a)).is_err());
    }
}
