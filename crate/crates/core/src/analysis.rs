//! Derived quantities: zero-delay coherence, laser threshold, bistability
//! curves, sideband asymmetry and Q-function moments.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{antinormal_order, Mode, OperatorExpr};
use crate::error::{Error, Result};
use crate::models::{build_model, cubic_coefficients, cubic_roots, ModelId, ModelParams};
use crate::spectral::{output_spectra, spectrum_integral, FrequencyGrid, NoiseBank, SpectrumResult};

/// `g²(0) = (2/n̄²)Ψ₀(Ψ₀+Υ₀) - (4n̄+2)/n̄²`.
pub fn g2_zero(n_bar: f64, psi0: f64, upsilon0: f64) -> Result<f64> {
    check_occupation(n_bar)?;
    Ok((2.0 * psi0 * (psi0 + upsilon0) - 4.0 * n_bar - 2.0) / (n_bar * n_bar))
}

/// `g²(0) = (4/n̄²)∫S_CC dw - (4n̄+2)/n̄²` from a sampled `S_CC`.
pub fn g2_zero_from_spectrum(omega: &[f64], s_cc: &[f64], n_bar: f64) -> Result<f64> {
    check_occupation(n_bar)?;
    let area = spectrum_integral(omega, s_cc)?.value;
    Ok((4.0 * area - 4.0 * n_bar - 2.0) / (n_bar * n_bar))
}

fn check_occupation(n_bar: f64) -> Result<()> {
    if n_bar.is_finite() && n_bar > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("g2 needs a positive finite occupation".into()))
    }
}

/// Positive root of `g²(0) = 1`: `n̄ = √(2 + 2Ψ₀(Ψ₀+Υ₀)) - 2`.
pub fn laser_threshold(psi0: f64, upsilon0: f64) -> Result<f64> {
    let disc = 2.0 + 2.0 * psi0 * (psi0 + upsilon0);
    let n = disc.sqrt() - 2.0;
    if n.is_finite() && n > 0.0 {
        Ok(n)
    } else {
        Err(Error::InvalidParameter("no positive threshold for these correlations".into()))
    }
}

/// Parameter swept by [`bistability_curve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// `α = s·e^(iφ)` for `s` from `start` to `stop`.
    Alpha {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        phase: f64,
    },
    Detuning { start: f64, stop: f64, points: usize },
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>> {
        let (start, stop, points) = match *self {
            Sweep::Alpha { start, stop, points, .. } | Sweep::Detuning { start, stop, points } => (start, stop, points),
        };
        if points < 2 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter("sweep needs finite bounds and at least 2 points".into()));
        }
        Ok((0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect())
    }

    fn name(&self) -> &'static str {
        match self {
            Sweep::Alpha { .. } => "alpha",
            Sweep::Detuning { .. } => "detuning",
        }
    }
}

/// One real root on a continued branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub sweep: f64,
    pub branch: usize,
    pub n_bar: f64,
    pub x: f64,
    /// `|ig₀x³ + iBx - C|`, relative to `|C|` when `C ≠ 0`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCurve {
    pub parameter: String,
    pub sweep: Vec<f64>,
    /// Real roots found at each sweep point.
    pub roots_per_point: Vec<usize>,
    pub points: Vec<BranchPoint>,
}

impl BistabilityCurve {
    pub fn branch_count(&self) -> usize {
        self.points.iter().map(|p| p.branch + 1).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},branch,n_bar,x,residual\n", self.parameter);
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{}\n", p.sweep, p.branch, p.n_bar, p.x, p.residual));
        }
        out
    }
}

/// Real roots of the bistability cubic along a sweep, joined into branches
/// by nearest-neighbour continuation.
pub fn bistability_curve(p: &ModelParams, sweep: &Sweep) -> Result<BistabilityCurve> {
    let values = sweep.values()?;
    let g0 = p.req(p.g0, "g0")?;
    if g0 <= 0.0 {
        return Err(Error::InvalidParameter("g0 must be positive".into()));
    }
    let omega_m = p.req(p.omega_m, "omega_m")?;
    let gamma = p.rate(Some(p.kappa.unwrap_or(0.0)), "kappa")? + p.rate(Some(p.gamma_m.unwrap_or(0.0)), "gamma_m")?;
    let m_bar = p.mechanical_occupation()?;
    let mut points = Vec::new();
    let mut roots_per_point = Vec::with_capacity(values.len());
    let mut active: Vec<(usize, f64)> = Vec::new();
    let mut next_branch = 0;
    for &s in &values {
        let (detuning, alpha) = match *sweep {
            Sweep::Alpha { phase, .. } => (p.req(p.detuning, "detuning")?, Complex64::from_polar(s, phase)),
            Sweep::Detuning { .. } => {
                let a = p.alpha.ok_or_else(|| Error::MissingParameter("alpha".into()))?;
                (s, Complex64::new(a[0], a[1]))
            }
        };
        let (b, c) = cubic_coefficients(g0, omega_m, detuning, gamma, m_bar, alpha);
        let roots = cubic_roots(g0, b, c)?;
        let i = Complex64::i();
        let mut real: Vec<(f64, f64)> = roots
            .companion
            .iter()
            .filter(|r| r.is_real)
            .filter_map(|r| r.x.map(|x| x[0]))
            .map(|x| {
                let z = Complex64::new(x, 0.0);
                let res = (i * g0 * z * z * z + i * b * z - c).norm();
                (x, if c.norm() > 0.0 { res / c.norm() } else { res })
            })
            .collect();
        real.sort_by(|a, b| a.0.total_cmp(&b.0));
        real.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 * a.0.abs().max(1.0));
        roots_per_point.push(real.len());
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ri, (x, _)) in real.iter().enumerate() {
            for (ai, (_, last)) in active.iter().enumerate() {
                pairs.push(((x - last).abs(), ri, ai));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut root_branch = vec![None; real.len()];
        let mut used = vec![false; active.len()];
        for (_, ri, ai) in pairs {
            if root_branch[ri].is_none() && !used[ai] {
                root_branch[ri] = Some(active[ai].0);
                used[ai] = true;
            }
        }
        let mut next_active = Vec::with_capacity(real.len());
        for (ri, (x, res)) in real.iter().enumerate() {
            let branch = root_branch[ri].unwrap_or_else(|| {
                next_branch += 1;
                next_branch - 1
            });
            next_active.push((branch, *x));
            points.push(BranchPoint { sweep: s, branch, n_bar: x * x, x: *x, residual: *res });
        }
        active = next_active;
    }
    Ok(BistabilityCurve { parameter: sweep.name().into(), sweep: values, roots_per_point, points })
}

/// Optical output densities at `±Ω` about the pump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub pump_detuning: f64,
    pub probe: [f64; 2],
    pub column: String,
    /// Densities at `+Ω` and `-Ω`.
    pub density_plus: f64,
    pub density_minus: f64,
    /// `S(+Ω)/S(-Ω)`; absent when `S(-Ω)` is below the floor.
    pub ratio: Option<f64>,
}

pub const RATIO_FLOOR: f64 = 1e-15;

/// Quadratic interpolation through the grid point nearest `w0` and its
/// neighbours.
pub fn refine_at(omega: &[f64], values: &[f64], w0: f64) -> Result<f64> {
    if omega.len() < 3 || omega.len() != values.len() {
        return Err(Error::Dimension("refinement needs matching arrays of at least 3 points".into()));
    }
    if w0 < omega[0] || w0 > omega[omega.len() - 1] {
        return Err(Error::InvalidParameter(format!("frequency {w0} lies outside the grid")));
    }
    let k = omega.partition_point(|&w| w < w0);
    let nearest = if k == 0 {
        0
    } else if k == omega.len() || (w0 - omega[k - 1]) <= (omega[k] - w0) {
        k - 1
    } else {
        k
    };
    let c = nearest.clamp(1, omega.len() - 2);
    let (x0, x1, x2) = (omega[c - 1], omega[c], omega[c + 1]);
    let (y0, y1, y2) = (values[c - 1], values[c], values[c + 1]);
    let l0 = (w0 - x1) * (w0 - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (w0 - x0) * (w0 - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (w0 - x0) * (w0 - x1) / ((x2 - x0) * (x2 - x1));
    Ok(y0 * l0 + y1 * l1 + y2 * l2)
}

/// Reads one spectrum column at `±Ω`.
pub fn read_sidebands(spec: &SpectrumResult, column: &str, omega_m: f64, pump_detuning: f64) -> Result<AsymmetryReport> {
    let values = spec.column(column).ok_or_else(|| Error::Dimension(format!("no spectrum column '{column}'")))?;
    let plus = refine_at(&spec.omega, values, omega_m)?;
    let minus = refine_at(&spec.omega, values, -omega_m)?;
    Ok(AsymmetryReport {
        pump_detuning,
        probe: [omega_m, -omega_m],
        column: column.into(),
        density_plus: plus,
        density_minus: minus,
        ratio: (minus.abs() > RATIO_FLOOR).then(|| plus / minus),
    })
}

/// Builds the second-order optomechanical system, checks that every input
/// density is even in frequency and compares the optical output at `±Ω`.
pub fn sideband_asymmetry(p: &ModelParams, grid: &FrequencyGrid) -> Result<AsymmetryReport> {
    let sys = build_model(&ModelId::OmStd2, p)?;
    let omega = grid.values();
    let bank = NoiseBank::new(&sys.noise_models, &omega)?;
    for port in &sys.ports {
        for &w in &omega {
            let (a, b) = (bank.at(&port.noise, w)?, bank.at(&port.noise, -w)?);
            if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300) {
                return Err(Error::Noise(format!("input density '{}' is not even in frequency at w = {w}", port.noise)));
            }
        }
    }
    let omega_m = p.req(p.omega_m, "omega_m")?;
    let spec = output_spectra(&sys, grid)
        .map_err(|e| Error::InvalidParameter(format!("optical output near ±{omega_m} rad/s: {e}")))?;
    read_sidebands(&spec, "a_out", omega_m, p.detuning.unwrap_or(0.0))
}

/// Q-function moment: antinormal order, then `a → α_mode`, `a† → α_mode*`.
pub fn q_moment_modes(expr: &OperatorExpr, alpha: &BTreeMap<Mode, Complex64>) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for term in antinormal_order(expr) {
        let mut v = term.coeff.to_c64();
        for (mode, &(p, q)) in term.powers.powers() {
            let a = *alpha.get(mode).ok_or_else(|| Error::MissingParameter(format!("coherent amplitude for mode {mode}")))?;
            v *= a.powu(q) * a.conj().powu(p);
        }
        total += v;
    }
    Ok(total)
}

/// Single-amplitude Q-function moment, applying `α` to every mode.
pub fn q_moment(expr: &OperatorExpr, alpha: Complex64) -> Complex64 {
    let map = expr.modes().into_iter().map(|m| (m, alpha)).collect();
    q_moment_modes(expr, &map).expect("every mode has an amplitude")
}
