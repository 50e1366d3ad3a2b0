//! Frequency-domain evaluation: input noise models, the scattering matrix
//! `S(w) = I + Wᵀ (iwI + M)⁻¹ W` and output spectral densities.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembler::LinearLangevinSystem;
use crate::error::{Error, Result};

/// Normalization of a squared-noise spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SquaredForm {
    /// Closed form for Gaussian bases, plain self-convolution otherwise.
    #[default]
    Closed,
    /// `4 (S ⋆ S)`, the Wick-factorized spectrum of the squared field.
    Wick,
}

fn one() -> f64 {
    1.0
}

/// Spectral density of one input port.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Flat density 1.
    Vacuum,
    /// Flat density `n_th + ½`.
    Thermal { n_th: f64 },
    /// Gaussian line of fractional width `chi` centred at `omega`.
    CoherentGaussian {
        chi: f64,
        omega: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Spectrum of the square of another port's field.
    Squared {
        base: String,
        #[serde(default)]
        form: SquaredForm,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Product of two independent fields: convolution of their spectra.
    Product { left: String, right: String },
}

impl NoiseModel {
    fn dependencies(&self) -> Vec<&str> {
        match self {
            NoiseModel::Squared { base, .. } => vec![base],
            NoiseModel::Product { left, right } => vec![left, right],
            _ => vec![],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Noise(m.to_string()));
        match self {
            NoiseModel::Thermal { n_th } if !(n_th.is_finite() && *n_th >= 0.0) => bad("n_th must be finite and non-negative"),
            NoiseModel::CoherentGaussian { chi, omega, amplitude }
                if !(chi.is_finite() && *chi > 0.0 && omega.is_finite() && *omega != 0.0 && amplitude.is_finite()) =>
            {
                bad("coherent_gaussian needs finite chi > 0 and omega != 0")
            }
            NoiseModel::Squared { scale, .. } if !scale.is_finite() => bad("scale must be finite"),
            _ => Ok(()),
        }
    }
}

/// `S_FF(w)`: unit-area Gaussian of standard deviation `χ|ω|` centred at `ω`.
pub fn gaussian_density(chi: f64, omega: f64, amplitude: f64, w: f64) -> f64 {
    let s = chi * omega.abs();
    amplitude / ((2.0 * PI).sqrt() * s) * (-(w - omega).powi(2) / (2.0 * s * s)).exp()
}

/// Closed-form squared-noise density of a Gaussian line:
/// `χ/(π√π ω) exp(-(w-2ω)²/(4χ²ω²))`.
pub fn squared_gaussian_closed_form(chi: f64, omega: f64, w: f64) -> f64 {
    chi / (PI * PI.sqrt() * omega.abs()) * (-(w - 2.0 * omega).powi(2) / (4.0 * chi * chi * omega * omega)).exp()
}

/// `S ⋆ S` of a Gaussian line.
pub fn gaussian_self_convolution(chi: f64, omega: f64, amplitude: f64, w: f64) -> f64 {
    let s = chi * omega.abs();
    amplitude * amplitude / (2.0 * PI.sqrt() * s) * (-(w - 2.0 * omega).powi(2) / (4.0 * s * s)).exp()
}

/// Uniform frequency grid in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub w_min: f64,
    pub w_max: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn new(w_min: f64, w_max: f64, points: usize) -> Result<Self> {
        let g = FrequencyGrid { w_min, w_max, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_min.is_finite() && self.w_max.is_finite() && self.w_max > self.w_min && self.points >= 3) {
            return Err(Error::InvalidParameter("grid needs finite w_min < w_max and at least 3 points".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.w_max - self.w_min) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.w_min + k as f64 * h).collect()
    }
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[k + 1] - x[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

fn interpolate(x: &[f64], y: &[f64], t: f64) -> f64 {
    if x.is_empty() || t < x[0] || t > x[x.len() - 1] {
        return 0.0;
    }
    let k = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
    let (x0, x1) = (x[k - 1], x[k]);
    let f = if x1 > x0 { (t - x0) / (x1 - x0) } else { 0.0 };
    y[k - 1] + f * (y[k] - y[k - 1])
}

/// Evaluates registered noise models on a frequency grid. Composite models are
/// convolved numerically over the grid window, so their values depend on the
/// window.
pub struct NoiseBank<'a> {
    models: &'a BTreeMap<String, NoiseModel>,
    grid: Vec<f64>,
    weights: Vec<f64>,
    cache: RefCell<HashMap<String, Vec<f64>>>,
}

impl<'a> NoiseBank<'a> {
    pub fn new(models: &'a BTreeMap<String, NoiseModel>, grid: &[f64]) -> Result<Self> {
        if grid.windows(2).any(|p| p[1].partial_cmp(&p[0]) != Some(std::cmp::Ordering::Greater)) || grid.len() < 2 {
            return Err(Error::InvalidParameter("noise grid must be strictly increasing".into()));
        }
        let bank = NoiseBank { models, grid: grid.to_vec(), weights: trapezoid_weights(grid), cache: RefCell::new(HashMap::new()) };
        for (id, m) in models {
            m.validate().map_err(|e| Error::Noise(format!("'{id}': {e}")))?;
            bank.check_cycles(id, &mut BTreeSet::new())?;
        }
        Ok(bank)
    }

    fn model(&self, id: &str) -> Result<&NoiseModel> {
        self.models.get(id).ok_or_else(|| Error::Noise(format!("unknown noise model '{id}'")))
    }

    fn check_cycles(&self, id: &str, stack: &mut BTreeSet<String>) -> Result<()> {
        if !stack.insert(id.to_string()) {
            return Err(Error::Noise(format!("cyclic noise model reference through '{id}'")));
        }
        for dep in self.model(id)?.dependencies() {
            self.check_cycles(dep, stack)?;
        }
        stack.remove(id);
        Ok(())
    }

    /// Pointwise value: closed forms for base kinds, interpolation otherwise.
    pub fn at(&self, id: &str, w: f64) -> Result<f64> {
        match self.model(id)? {
            NoiseModel::Vacuum => Ok(1.0),
            NoiseModel::Thermal { n_th } => Ok(n_th + 0.5),
            NoiseModel::CoherentGaussian { chi, omega, amplitude } => Ok(gaussian_density(*chi, *omega, *amplitude, w)),
            _ => {
                let v = self.density(id)?;
                Ok(interpolate(&self.grid, &v, w))
            }
        }
    }

    /// `(f ⋆ g)(w_i) = ∫ f(u) g(w_i - u) du` with `u` on the grid.
    pub fn convolve(&self, left: &str, right: &str) -> Result<Vec<f64>> {
        let f: Vec<f64> = self.grid.iter().map(|&u| self.at(left, u)).collect::<Result<_>>()?;
        self.grid
            .iter()
            .map(|&w| {
                let mut acc = 0.0;
                for (k, &u) in self.grid.iter().enumerate() {
                    if f[k] != 0.0 {
                        acc += self.weights[k] * f[k] * self.at(right, w - u)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// Density of a model on the grid.
    pub fn density(&self, id: &str) -> Result<Vec<f64>> {
        if let Some(v) = self.cache.borrow().get(id) {
            return Ok(v.clone());
        }
        let v = match self.model(id)? {
            NoiseModel::Squared { base, form, scale } => {
                let gauss = match self.model(base)? {
                    NoiseModel::CoherentGaussian { chi, omega, amplitude } => Some((*chi, *omega, *amplitude)),
                    _ => None,
                };
                match (form, gauss) {
                    (SquaredForm::Closed, Some((chi, omega, amp))) => {
                        self.grid.iter().map(|&w| scale * amp * amp * squared_gaussian_closed_form(chi, omega, w)).collect()
                    }
                    (SquaredForm::Wick, Some((chi, omega, amp))) => {
                        self.grid.iter().map(|&w| 4.0 * scale * gaussian_self_convolution(chi, omega, amp, w)).collect()
                    }
                    (SquaredForm::Closed, None) => self.convolve(base, base)?.into_iter().map(|x| scale * x).collect(),
                    (SquaredForm::Wick, None) => self.convolve(base, base)?.into_iter().map(|x| 4.0 * scale * x).collect(),
                }
            }
            NoiseModel::Product { left, right } => self.convolve(left, right)?,
            _ => self.grid.iter().map(|&w| self.at(id, w)).collect::<Result<_>>()?,
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("noise density '{id}'")));
        }
        self.cache.borrow_mut().insert(id.to_string(), v.clone());
        Ok(v)
    }
}

/// Density of a registered noise model on a grid.
pub fn input_noise_spectrum(models: &BTreeMap<String, NoiseModel>, id: &str, grid: &[f64]) -> Result<Vec<f64>> {
    NoiseBank::new(models, grid)?.density(id)
}

/// `S(w) = I + Wᵀ (iwI + M)⁻¹ W`.
pub fn scattering_matrix(sys: &LinearLangevinSystem, w: f64) -> Result<DMatrix<Complex64>> {
    let n = sys.dim();
    let k = sys.n_ports();
    // Ports that do not couple to the system pass through unchanged.
    if sys.noise_weights.iter().all(|x| *x == 0.0) {
        return Ok(DMatrix::identity(k, k));
    }
    let mut a = sys.m.clone();
    for j in 0..n {
        a[(j, j)] += Complex64::new(0.0, w);
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let wc: DMatrix<Complex64> = sys.noise_weights.map(|x| Complex64::new(x, 0.0));
    let lu = a.lu();
    if (0..n).any(|j| lu.u()[(j, j)].norm() <= 1e-13 * scale) {
        return Err(Error::SingularResolvent { w });
    }
    let x = lu.solve(&wc).ok_or(Error::SingularResolvent { w })?;
    let s = DMatrix::<Complex64>::identity(k, k) + wc.transpose() * x;
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularResolvent { w });
    }
    Ok(s)
}

/// Run metadata written next to every table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model: String,
    pub crate_version: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

impl RunMetadata {
    pub fn new(model: impl Into<String>) -> Self {
        RunMetadata {
            model: model.into(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            tolerances: BTreeMap::new(),
            parameters: serde_json::Value::Null,
        }
    }
}

/// Output spectral densities, one column per input port's output field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub columns: Vec<String>,
    /// `values[c][i]`: column `c` at `omega[i]`.
    pub values: Vec<Vec<f64>>,
    pub metadata: RunMetadata,
}

impl SpectrumResult {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|k| self.values[k].as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, w) in self.omega.iter().enumerate() {
            out.push_str(&w.to_string());
            for col in &self.values {
                out.push(',');
                out.push_str(&col[i].to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn output_column_name(label: &str) -> String {
    match label.strip_suffix("_in_dag") {
        Some(s) => format!("{s}_out_dag"),
        None => match label.strip_suffix("_in") {
            Some(s) => format!("{s}_out"),
            None => format!("{label}_out"),
        },
    }
}

/// `S_out,k(w) = Σ_j |S_kj(w)|² S_in,j(w)` for every port, evaluated in
/// parallel over the grid.
pub fn output_spectra(sys: &LinearLangevinSystem, grid: &FrequencyGrid) -> Result<SpectrumResult> {
    grid.validate()?;
    let omega = grid.values();
    let bank = NoiseBank::new(&sys.noise_models, &omega)?;
    let inputs: Vec<Vec<f64>> = sys.ports.iter().map(|p| bank.density(&p.noise)).collect::<Result<_>>()?;
    let k = sys.n_ports();
    let rows: Vec<Vec<f64>> = omega
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let s = scattering_matrix(sys, w)?;
            Ok((0..k).map(|r| (0..k).map(|j| s[(r, j)].norm_sqr() * inputs[j][i]).sum()).collect())
        })
        .collect::<Result<_>>()?;
    let values = (0..k).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let mut metadata = RunMetadata::new(sys.provenance.model.clone());
    metadata.parameters = serde_json::json!({ "grid": grid, "provenance": sys.provenance });
    Ok(SpectrumResult {
        omega,
        columns: sys.ports.iter().map(|p| output_column_name(&p.label)).collect(),
        values,
        metadata,
    })
}

/// Trapezoidal integral with a Richardson error estimate from the half grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

pub fn spectrum_integral(omega: &[f64], values: &[f64]) -> Result<Integral> {
    if omega.len() != values.len() || omega.len() < 3 {
        return Err(Error::Dimension("integral needs matching arrays of at least 3 points".into()));
    }
    let trap = |xs: &[f64], ys: &[f64]| -> f64 { xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum() };
    let fine = trap(omega, values);
    let last = omega.len() - 1;
    let idx: Vec<usize> = (0..=last).step_by(2).collect();
    let mut xs: Vec<f64> = idx.iter().map(|&i| omega[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    if *idx.last().expect("non-empty") != last {
        xs.push(omega[last]);
        ys.push(values[last]);
    }
    let coarse = trap(&xs, &ys);
    Ok(Integral { value: fine, error_estimate: (fine - coarse).abs() / 3.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::{Port, Provenance};
    use nalgebra::DVector;

    fn cavity(kappa: f64) -> LinearLangevinSystem {
        let m = DMatrix::from_element(1, 1, Complex64::new(-kappa / 2.0, 0.0));
        let w = DMatrix::from_element(1, 1, kappa.sqrt());
        let port = Port { label: "a_in".into(), channel: "a".into(), dagger: false, noise: "vac".into() };
        LinearLangevinSystem::new(vec!["a".into()], m, DVector::zeros(1), w, vec![port], Provenance::new("cavity"))
            .unwrap()
            .with_noise_model("vac", NoiseModel::Vacuum)
    }

    #[test]
    fn lossless_cavity_scatters_with_unit_modulus() {
        let sys = cavity(2.0);
        for w in [-3.0, 0.0, 0.7, 10.0] {
            let s = scattering_matrix(&sys, w).unwrap();
            let expected = Complex64::new(1.0, 0.0) + 2.0 / Complex64::new(-1.0, w);
            assert!((s[(0, 0)] - expected).norm() < 1e-14);
            assert!((s[(0, 0)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pole_is_reported() {
        let m = DMatrix::from_element(1, 1, Complex64::new(0.0, -2.0));
        let port = Port { label: "x_in".into(), channel: "x".into(), dagger: false, noise: "v".into() };
        let sys = LinearLangevinSystem::new(vec!["x".into()], m, DVector::zeros(1), DMatrix::from_element(1, 1, 1.0), vec![port], Provenance::new("t")).unwrap();
        assert_eq!(scattering_matrix(&sys, 2.0).unwrap_err(), Error::SingularResolvent { w: 2.0 });
    }

    #[test]
    fn cycles_are_rejected() {
        let mut models = BTreeMap::new();
        models.insert("x".to_string(), NoiseModel::Squared { base: "y".into(), form: SquaredForm::Closed, scale: 1.0 });
        models.insert("y".to_string(), NoiseModel::Product { left: "x".into(), right: "x".into() });
        let err = input_noise_spectrum(&models, "x", &[0.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Noise(m) if m.contains("cyclic")));
    }

    #[test]
    fn squared_vacuum_is_window_width() {
        let mut models = BTreeMap::new();
        models.insert("v".to_string(), NoiseModel::Vacuum);
        models.insert("v2".to_string(), NoiseModel::Squared { base: "v".into(), form: SquaredForm::Closed, scale: 1.0 });
        let grid = FrequencyGrid::new(-2.0, 2.0, 41).unwrap().values();
        let d = input_noise_spectrum(&models, "v2", &grid).unwrap();
        assert!(d.iter().all(|x| (x - 4.0).abs() < 1e-12));
    }

    #[test]
    fn integral_of_parabola() {
        let x: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t).collect();
        let r = spectrum_integral(&x, &y).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 2e-5);
        assert!((r.value - 1.0 / 3.0).abs() < 1.5 * r.error_estimate);
    }

    #[test]
    fn csv_header() {
        let r = output_spectra(&cavity(1.0), &FrequencyGrid::new(-1.0, 1.0, 5).unwrap()).unwrap();
        assert!(r.to_csv().starts_with("omega_rad_s,a_out\n"));
        assert!(r.values[0].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
