//! Time-domain integration of assembled systems.
//!
//! Stochastic runs use Euler–Maruyama on `dx = (Mx + f(t)·drive) dt - W dξ`.
//! Each trajectory owns a ChaCha8 stream (`seed_from_u64(seed)`, stream =
//! trajectory index), and ensembles are reduced in fixed chunks so results
//! do not depend on the thread count.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembler::{check_stability, LinearLangevinSystem};
use crate::error::{Error, Result};
use crate::models::{build_model, ModelId, ModelParams};
use crate::spectral::RunMetadata;

/// Name of the generator recorded in run metadata.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha), seed_from_u64(seed), stream = trajectory index";

const CHUNK: usize = 32;

/// Time profile multiplying the system's drive vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Waveform {
    #[default]
    Constant,
    /// `e^(-αt) sin(ωt)`.
    DampedSine { alpha: f64, omega: f64 },
}

impl Waveform {
    /// `ω = 2π·1 kHz`, `α = ω/2π`.
    pub fn diode_default() -> Self {
        let omega = 2.0 * std::f64::consts::PI * 1.0e3;
        Waveform::DampedSine { alpha: omega / (2.0 * std::f64::consts::PI), omega }
    }

    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Waveform::Constant => 1.0,
            Waveform::DampedSine { alpha, omega } => (-alpha * t).exp() * (omega * t).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Waveform::Constant => Ok(()),
            Waveform::DampedSine { alpha, omega } if alpha.is_finite() && omega.is_finite() => Ok(()),
            Waveform::DampedSine { .. } => Err(Error::InvalidParameter("waveform parameters must be finite".into())),
        }
    }
}

fn one() -> usize {
    1
}

/// Integration settings shared by the stochastic and deterministic drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeRun {
    /// Step in seconds.
    pub dt: f64,
    /// Horizon in seconds.
    pub horizon: f64,
    #[serde(default = "one")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    /// Noise scale per decay channel; missing channels use 1.
    #[serde(default)]
    pub noise_scale: BTreeMap<String, f64>,
    #[serde(default)]
    pub waveform: Waveform,
    /// Initial state `[re, im]` per element; zero when absent.
    #[serde(default)]
    pub initial: Option<Vec<[f64; 2]>>,
    /// Keep every n-th step (the final step is always kept).
    #[serde(default = "one")]
    pub record_every: usize,
}

impl SdeRun {
    pub fn new(dt: f64, horizon: f64) -> Self {
        SdeRun {
            dt,
            horizon,
            trajectories: 1,
            seed: 0,
            noise_scale: BTreeMap::new(),
            waveform: Waveform::Constant,
            initial: None,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::InvalidParameter("horizon must be at least dt".into()));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("trajectory count must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        if let Some((k, _)) = self.noise_scale.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("noise scale for '{k}' must be non-negative")));
        }
        self.waveform.validate()
    }

    /// Number of steps, `round(horizon / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn recorded(&self) -> Vec<usize> {
        let n = self.steps();
        let mut idx: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if idx.last() != Some(&n) {
            idx.push(n);
        }
        idx
    }

    fn initial_state(&self, dim: usize) -> Result<DVector<Complex64>> {
        match &self.initial {
            None => Ok(DVector::zeros(dim)),
            Some(v) if v.len() == dim => Ok(DVector::from_iterator(dim, v.iter().map(|z| Complex64::new(z[0], z[1])))),
            Some(v) => Err(Error::Dimension(format!("initial state has {} entries, system has {dim}", v.len()))),
        }
    }
}

/// Ensemble mean and variance per element at the recorded times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub labels: Vec<String>,
    /// `mean[e][i]`: element `e` at `t[i]`.
    pub mean: Vec<Vec<Complex64>>,
    /// Sample variance `E|x - mean|²`; zero for deterministic runs.
    pub variance: Vec<Vec<f64>>,
    pub trajectories: usize,
    pub warnings: Vec<String>,
    pub metadata: RunMetadata,
}

impl TimeSeries {
    pub fn element(&self, label: &str) -> Option<&[Complex64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.mean[k].as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s");
        for l in &self.labels {
            out.push_str(&format!(",{l}_mean_re,{l}_mean_im,{l}_var"));
        }
        out.push('\n');
        for (i, t) in self.t.iter().enumerate() {
            out.push_str(&t.to_string());
            for e in 0..self.labels.len() {
                let z = self.mean[e][i];
                out.push_str(&format!(",{},{},{}", z.re, z.im, self.variance[e][i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Running mean and sum of squared deviations over a set of trajectories.
struct Moments {
    n: usize,
    mean: Vec<Complex64>,
    m2: Vec<f64>,
}

impl Moments {
    fn empty(len: usize) -> Self {
        Moments { n: 0, mean: vec![Complex64::new(0.0, 0.0); len], m2: vec![0.0; len] }
    }

    fn push(&mut self, x: &[Complex64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d.re * (v.re - m.re) + d.im * (v.im - m.im);
        }
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let (na, nb, nn) = (a.n as f64, b.n as f64, n as f64);
        let mut mean = a.mean;
        let mut m2 = a.m2;
        for i in 0..mean.len() {
            let d = b.mean[i] - mean[i];
            mean[i] += d * (nb / nn);
            m2[i] += b.m2[i] + d.norm_sqr() * na * nb / nn;
        }
        Moments { n, mean, m2 }
    }
}

fn pairwise(mut parts: Vec<Moments>) -> Moments {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => Moments::merge(a, b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

enum NoiseSlot {
    Real(usize),
    Pair(usize, usize),
}

fn noise_slots(sys: &LinearLangevinSystem, run: &SdeRun) -> Vec<(NoiseSlot, f64)> {
    let mut by_channel: BTreeMap<&str, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (k, p) in sys.ports.iter().enumerate() {
        let e = by_channel.entry(p.channel.as_str()).or_default();
        if p.dagger {
            e.1 = Some(k);
        } else {
            e.0 = Some(k);
        }
    }
    by_channel
        .into_iter()
        .filter_map(|(ch, pair)| {
            let scale = run.noise_scale.get(ch).copied().unwrap_or(1.0);
            let slot = match pair {
                (Some(a), Some(b)) => NoiseSlot::Pair(a, b),
                (Some(a), None) | (None, Some(a)) => NoiseSlot::Real(a),
                (None, None) => return None,
            };
            Some((slot, scale))
        })
        .collect()
}

fn check_finite(x: &DVector<Complex64>, step: usize) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { step })
    }
}

fn stability_warning(sys: &LinearLangevinSystem, run: &SdeRun) -> Result<Vec<String>> {
    let report = match sys.stability() {
        Some(r) => r.clone(),
        None => check_stability(sys, 1e-9)?,
    };
    if !report.stable && report.max_real_part * run.horizon > 1.0 {
        Ok(vec![format!(
            "system is unstable (max Re λ = {:e}) and the horizon spans {:.3} e-foldings",
            report.max_real_part,
            report.max_real_part * run.horizon
        )])
    } else {
        Ok(Vec::new())
    }
}

fn metadata(sys: &LinearLangevinSystem, run: &SdeRun, method: &str) -> RunMetadata {
    let mut m = RunMetadata::new(sys.provenance.model.clone());
    m.seed = Some(run.seed);
    m.parameters = serde_json::json!({
        "method": method,
        "dt": run.dt,
        "horizon": run.horizon,
        "trajectories": run.trajectories,
        "generator": GENERATOR,
        "waveform": run.waveform,
        "noise_scale": run.noise_scale,
        "provenance": sys.provenance,
    });
    m
}

fn trajectory(
    sys: &LinearLangevinSystem,
    run: &SdeRun,
    slots: &[(NoiseSlot, f64)],
    x0: &DVector<Complex64>,
    index: u64,
    out: &mut Moments,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    rng.set_stream(index);
    let dim = sys.dim();
    let w = sys.noise_weights.map(|v| Complex64::new(v, 0.0));
    let (dt, steps, every) = (run.dt, run.steps(), run.record_every);
    let sq = dt.sqrt();
    let half = (dt / 2.0).sqrt();
    let mut xi = DVector::<Complex64>::zeros(sys.n_ports());
    let mut x = x0.clone();
    let mut rec: Vec<Complex64> = Vec::with_capacity(dim * (steps / every + 2));
    rec.extend(x.iter());
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        for (slot, scale) in slots {
            match *slot {
                NoiseSlot::Real(k) => {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    xi[k] = Complex64::new(scale * sq * n, 0.0);
                }
                NoiseSlot::Pair(a, b) => {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let z = Complex64::new(re, im) * (scale * half);
                    xi[a] = z;
                    xi[b] = z.conj();
                }
            }
        }
        let f = run.waveform.at(t);
        let dx = (&sys.m * &x + &sys.drive * Complex64::new(f, 0.0)) * Complex64::new(dt, 0.0) - &w * &xi;
        x += dx;
        check_finite(&x, step)?;
        if step % every == 0 || step == steps {
            rec.extend(x.iter());
        }
    }
    out.push(&rec);
    Ok(())
}

/// Euler–Maruyama ensemble with per-element mean and variance.
pub fn integrate_sde(sys: &LinearLangevinSystem, run: &SdeRun) -> Result<TimeSeries> {
    run.validate()?;
    let dim = sys.dim();
    let x0 = run.initial_state(dim)?;
    let warnings = stability_warning(sys, run)?;
    let slots = noise_slots(sys, run);
    let times = run.recorded();
    let len = times.len() * dim;
    let chunks = run.trajectories.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::empty(len);
            for i in c * CHUNK..((c + 1) * CHUNK).min(run.trajectories) {
                trajectory(sys, run, &slots, &x0, i as u64, &mut m)?;
            }
            Ok(m)
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let total = pairwise(parts);
    let denom = if total.n > 1 { (total.n - 1) as f64 } else { 1.0 };
    let mut mean = vec![Vec::with_capacity(times.len()); dim];
    let mut variance = vec![Vec::with_capacity(times.len()); dim];
    for i in 0..times.len() {
        for e in 0..dim {
            mean[e].push(total.mean[i * dim + e]);
            variance[e].push(if total.n > 1 { total.m2[i * dim + e] / denom } else { 0.0 });
        }
    }
    Ok(TimeSeries {
        t: times.iter().map(|&s| s as f64 * run.dt).collect(),
        labels: sys.labels.clone(),
        mean,
        variance,
        trajectories: run.trajectories,
        warnings,
        metadata: metadata(sys, run, "euler_maruyama"),
    })
}

fn rk4_linear(
    m: &DMatrix<Complex64>,
    drive: &DVector<Complex64>,
    run: &SdeRun,
    x0: DVector<Complex64>,
) -> Result<Vec<DVector<Complex64>>> {
    let dt = run.dt;
    let c = |v: f64| Complex64::new(v, 0.0);
    let rhs = |x: &DVector<Complex64>, t: f64| m * x + drive * c(run.waveform.at(t));
    let mut x = x0;
    let mut out = vec![x.clone()];
    let steps = run.steps();
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        let k1 = rhs(&x, t);
        let k2 = rhs(&(&x + &k1 * c(dt / 2.0)), t + dt / 2.0);
        let k3 = rhs(&(&x + &k2 * c(dt / 2.0)), t + dt / 2.0);
        let k4 = rhs(&(&x + &k3 * c(dt)), t + dt);
        x += (k1 + (k2 + k3) * c(2.0) + k4) * c(dt / 6.0);
        check_finite(&x, step)?;
        if step % run.record_every == 0 || step == steps {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// Noise-free RK4 solution of the linear system.
pub fn integrate_ode(sys: &LinearLangevinSystem, run: &SdeRun) -> Result<TimeSeries> {
    run.validate()?;
    let dim = sys.dim();
    let x0 = run.initial_state(dim)?;
    let warnings = stability_warning(sys, run)?;
    let states = rk4_linear(&sys.m, &sys.drive, run, x0)?;
    let times = run.recorded();
    Ok(TimeSeries {
        t: times.iter().map(|&s| s as f64 * run.dt).collect(),
        labels: sys.labels.clone(),
        mean: (0..dim).map(|e| states.iter().map(|x| x[e]).collect()).collect(),
        variance: vec![vec![0.0; states.len()]; dim],
        trajectories: 1,
        warnings,
        metadata: metadata(sys, run, "rk4"),
    })
}

/// Diode parameters `τ du/dt = -μu - κ(e^u - 1) + V₀ w(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    pub mu: f64,
    pub kappa: f64,
    pub tau: f64,
    pub v0: f64,
}

impl DiodeParams {
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        let tau = p.req(p.tau, "tau")?;
        if tau <= 0.0 {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        Ok(DiodeParams { mu: p.rate(p.mu, "mu")?, kappa: p.rate(p.kappa, "kappa")?, tau, v0: p.req(p.v0, "v0")? })
    }
}

fn initial_u(run: &SdeRun) -> Result<f64> {
    match &run.initial {
        None => Ok(0.0),
        Some(v) if !v.is_empty() && v[0][1] == 0.0 => Ok(v[0][0]),
        Some(_) => Err(Error::InvalidParameter("diode initial state must be a real u(0)".into())),
    }
}

/// RK4 on the exact nonlinear mean-field equation; returns `⟨u⟩` at the
/// recorded times. `run.initial[0]` holds `u(0)`.
pub fn integrate_ode_meanfield(p: &ModelParams, run: &SdeRun) -> Result<Vec<f64>> {
    run.validate()?;
    let d = DiodeParams::from_params(p)?;
    let mut u = initial_u(run)?;
    let f = |u: f64, t: f64| (-d.mu * u - d.kappa * u.exp_m1() + d.v0 * run.waveform.at(t)) / d.tau;
    let dt = run.dt;
    let steps = run.steps();
    let mut out = vec![u];
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        let k1 = f(u, t);
        let k2 = f(u + dt / 2.0 * k1, t + dt / 2.0);
        let k3 = f(u + dt / 2.0 * k2, t + dt / 2.0);
        let k4 = f(u + dt * k3, t + dt);
        u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !u.is_finite() {
            return Err(Error::BlowUp { step });
        }
        if step % run.record_every == 0 || step == steps {
            out.push(u);
        }
    }
    Ok(out)
}

/// Chain solution for one order with the self-consistent time average `ū`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub order: usize,
    pub u_bar: f64,
    pub iterations: usize,
    pub converged: bool,
    pub u: Vec<f64>,
}

fn time_average(t: &[f64], u: &[f64]) -> f64 {
    let span = t[t.len() - 1] - t[0];
    let area: f64 = t.windows(2).zip(u.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum();
    area / span
}

/// Integrates `diode(order)` from `u^k(0) = u(0)^k`, iterating `ū` from zero
/// until `|Δū| < tol` or `max_iter` passes.
pub fn solve_diode_chain(order: usize, p: &ModelParams, run: &SdeRun, tol: f64, max_iter: usize) -> Result<ChainSolution> {
    run.validate()?;
    let u0 = initial_u(run)?;
    let times: Vec<f64> = run.recorded().iter().map(|&s| s as f64 * run.dt).collect();
    let x0 = DVector::from_iterator(order, (1..=order).map(|k| Complex64::new(u0.powi(k as i32), 0.0)));
    let mut u_bar = 0.0;
    let mut last = Vec::new();
    for it in 1..=max_iter {
        let params = ModelParams { u_bar: Some(u_bar), ..p.clone() };
        let sys = build_model(&ModelId::Diode(order), &params)?;
        let states = rk4_linear(&sys.m, &sys.drive, run, x0.clone())?;
        last = states.iter().map(|x| x[0].re).collect();
        let next = time_average(&times, &last);
        let delta = (next - u_bar).abs();
        u_bar = next;
        if delta < tol {
            return Ok(ChainSolution { order, u_bar, iterations: it, converged: true, u: last });
        }
    }
    Ok(ChainSolution { order, u_bar, iterations: max_iter, converged: false, u: last })
}

/// One row of the truncation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub max_error: f64,
    pub u_bar: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Truncated chains against the mean-field oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub t: Vec<f64>,
    pub oracle: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    pub series: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,max_abs_error,u_bar,iterations,converged\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.order, r.max_error, r.u_bar, r.iterations, r.converged));
        }
        out
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from("t_s,oracle");
        for r in &self.rows {
            out.push_str(&format!(",order_{}", r.order));
        }
        out.push('\n');
        for (i, t) in self.t.iter().enumerate() {
            out.push_str(&format!("{t},{}", self.oracle[i]));
            for s in &self.series {
                out.push_str(&format!(",{}", s[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn warnings(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.converged)
            .map(|r| format!("time average did not converge for order {}", r.order))
            .collect()
    }
}

/// Fixed-point tolerance and iteration cap for `ū`.
pub const U_BAR_TOL: f64 = 1e-6;
pub const U_BAR_MAX_ITER: usize = 20;

/// Max deviation of each truncated chain from the mean-field oracle.
pub fn truncation_convergence(orders: &[usize], p: &ModelParams, run: &SdeRun) -> Result<ConvergenceTable> {
    if orders.iter().any(|&n| n < 1) {
        return Err(Error::InvalidParameter("orders must be at least 1".into()));
    }
    let oracle = integrate_ode_meanfield(p, run)?;
    let t: Vec<f64> = run.recorded().iter().map(|&s| s as f64 * run.dt).collect();
    let solved: Vec<ChainSolution> = orders
        .par_iter()
        .map(|&n| solve_diode_chain(n, p, run, U_BAR_TOL, U_BAR_MAX_ITER))
        .collect::<Result<_>>()?;
    let rows = solved
        .iter()
        .map(|s| ConvergenceRow {
            order: s.order,
            max_error: s.u.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            u_bar: s.u_bar,
            iterations: s.iterations,
            converged: s.converged,
        })
        .collect();
    Ok(ConvergenceTable { t, oracle, rows, series: solved.into_iter().map(|s| s.u).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::{Port, Provenance};
    use crate::spectral::NoiseModel;

    fn decay(rate: f64, weight: f64) -> LinearLangevinSystem {
        let m = DMatrix::from_element(1, 1, Complex64::new(-rate, 0.0));
        let w = DMatrix::from_element(1, 1, weight);
        let port = Port { label: "x_in".into(), channel: "x".into(), dagger: false, noise: "vac".into() };
        LinearLangevinSystem::new(vec!["x".into()], m, DVector::zeros(1), w, vec![port], Provenance::new("decay"))
            .unwrap()
            .with_noise_model("vac", NoiseModel::Vacuum)
    }

    fn with_initial(mut run: SdeRun, x: f64) -> SdeRun {
        run.initial = Some(vec![[x, 0.0]]);
        run
    }

    #[test]
    fn noiseless_decay_is_exponential() {
        let sys = decay(1.0, 0.0);
        let run = with_initial(SdeRun::new(1e-3, 2.0), 1.5);
        let ts = integrate_sde(&sys, &run).unwrap();
        let last = ts.mean[0].last().unwrap().re;
        assert!((last - 1.5 * (-2.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn euler_error_halves_and_rk4_drops_sixteenfold() {
        let sys = decay(1.0, 0.0);
        let exact = (-1.0f64).exp();
        let err = |dt: f64, rk: bool| {
            let run = with_initial(SdeRun::new(dt, 1.0), 1.0);
            let ts = if rk { integrate_ode(&sys, &run) } else { integrate_sde(&sys, &run) }.unwrap();
            (ts.mean[0].last().unwrap().re - exact).abs()
        };
        let r = err(0.01, false) / err(0.005, false);
        assert!((r - 2.0).abs() < 0.05, "{r}");
        let r = err(0.1, true) / err(0.05, true);
        assert!((r - 16.0).abs() < 1.0, "{r}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let sys = decay(1.0, 1.0);
        let mut run = SdeRun::new(0.01, 1.0);
        run.trajectories = 70;
        run.seed = 9;
        let a = integrate_sde(&sys, &run).unwrap();
        let b = integrate_sde(&sys, &run).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        run.seed = 10;
        assert_ne!(integrate_sde(&sys, &run).unwrap().to_csv(), a.to_csv());
    }

    #[test]
    fn blow_up_reports_step() {
        let m = DMatrix::from_element(1, 1, Complex64::new(1.0e6, 0.0));
        let port = Port { label: "x_in".into(), channel: "x".into(), dagger: false, noise: "vac".into() };
        let sys = LinearLangevinSystem::new(vec!["x".into()], m, DVector::zeros(1), DMatrix::zeros(1, 1), vec![port], Provenance::new("grow"))
            .unwrap();
        let run = with_initial(SdeRun::new(1.0, 1000.0), 1.0);
        match integrate_sde(&sys, &run) {
            Err(Error::BlowUp { step }) => assert!(step > 1 && step < 1000),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ou_variance_is_stationary_value() {
        // dx = -x dt - dW: stationary variance 1/2.
        let sys = decay(1.0, 1.0);
        let mut run = SdeRun::new(1e-3, 6.0);
        run.trajectories = 2000;
        run.seed = 3;
        run.record_every = 6000;
        let ts = integrate_sde(&sys, &run).unwrap();
        let var = *ts.variance[0].last().unwrap();
        let se = 0.5 * (2.0 / (run.trajectories as f64 - 1.0)).sqrt();
        assert!((var - 0.5 * (1.0 - (-12.0f64).exp())).abs() < 3.0 * se + 1e-3, "{var}");
    }

    #[test]
    fn rejects_bad_runs() {
        assert!(SdeRun::new(0.0, 1.0).validate().is_err());
        assert!(SdeRun::new(0.1, 0.01).validate().is_err());
        let mut r = SdeRun::new(0.1, 1.0);
        r.trajectories = 0;
        assert!(r.validate().is_err());
    }

    fn diode_params(kappa: f64) -> ModelParams {
        ModelParams { mu: Some(1.0), kappa: Some(kappa), tau: Some(1.0), v0: Some(1.0), ..Default::default() }
    }

    #[test]
    fn meanfield_linear_limit_matches_driven_rc() {
        // τ u' = -u + sin(ωt), u(0) = 0.
        let w = 3.0;
        let mut run = SdeRun::new(1e-5, 2.0);
        run.waveform = Waveform::DampedSine { alpha: 0.0, omega: w };
        run.record_every = 200_000;
        let u = integrate_ode_meanfield(&diode_params(0.0), &run).unwrap();
        let t = 2.0f64;
        let exact = (w * (-t).exp() + (w * t).sin() - w * (w * t).cos()) / (1.0 + w * w);
        assert!((u.last().unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn meanfield_decays_monotonically() {
        let mut run = SdeRun::new(1e-3, 5.0);
        run.initial = Some(vec![[1.0, 0.0]]);
        let u = integrate_ode_meanfield(&diode_params(1.0), &run).unwrap();
        assert!(u.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn linear_chain_is_exact_at_every_order() {
        let mut run = SdeRun::new(1e-4, 1.0);
        run.waveform = Waveform::diode_default();
        run.initial = Some(vec![[0.5, 0.0]]);
        let table = truncation_convergence(&[1, 2, 3], &diode_params(0.0), &run).unwrap();
        for r in &table.rows {
            assert!(r.max_error < 1e-12, "{r:?}");
        }
    }
}
