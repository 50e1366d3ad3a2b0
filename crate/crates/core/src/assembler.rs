//! Langevin right-hand sides and their linearization over an operator basis.
//!
//! The linear system is written `dA/dt = M A + drive - W A_in`, with `W` the
//! real `N×K` matrix of noise weights and `A_in` the `K` input ports.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::coeff::{rational_from_f64, rational_to_f64};
use crate::algebra::{
    verify_closure, BasisSet, Coeff, MeanFieldContext, OperatorExpr, PairWeight, Reducer,
};
use crate::error::{Error, Result};
use crate::spectral::NoiseModel;

/// Rows of the basis a decay channel acts on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RowSelector {
    #[default]
    All,
    Labels(Vec<String>),
}

impl RowSelector {
    pub fn applies(&self, label: &str) -> bool {
        match self {
            RowSelector::All => true,
            RowSelector::Labels(ls) => ls.iter().any(|l| l == label),
        }
    }
}

/// One dissipation channel `x` with rate `Γ` and input noise bound to `noise`.
#[derive(Clone, Debug)]
pub struct DecayChannel {
    pub name: String,
    pub anchor: OperatorExpr,
    pub rate: f64,
    pub noise: String,
    pub rows: RowSelector,
}

impl DecayChannel {
    pub fn new(name: impl Into<String>, anchor: OperatorExpr, rate: f64, noise: impl Into<String>) -> Self {
        DecayChannel { name: name.into(), anchor, rate, noise: noise.into(), rows: RowSelector::All }
    }

    pub fn on_rows(mut self, rows: &[&str]) -> Self {
        self.rows = RowSelector::Labels(rows.iter().map(|s| s.to_string()).collect());
        self
    }

    fn exact_rate(&self) -> Result<Coeff> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("rate of channel '{}' must be finite and non-negative", self.name)));
        }
        Ok(Coeff::real(rational_from_f64(self.rate).expect("finite")))
    }
}

/// Noise contribution `coefficient · √Γ · x_in` (or `x_in†` when `dagger`).
#[derive(Clone, Debug)]
pub struct NoiseTerm {
    pub channel: usize,
    pub dagger: bool,
    pub coefficient: OperatorExpr,
}

/// `dz/dt = deterministic + Σ noise`, with `√Γ` kept out of the coefficients.
#[derive(Clone, Debug)]
pub struct LangevinRhs {
    pub deterministic: OperatorExpr,
    pub noise: Vec<NoiseTerm>,
}

/// Right-hand side of the Langevin equation for `z`:
/// `-i[z,H] - Σ_x ([z,x†](½Γx + √Γ x_in) - (½Γx† + √Γ x_in†)[z,x])`.
pub fn heisenberg_rhs(h: &OperatorExpr, z: &OperatorExpr, channels: &[DecayChannel]) -> Result<LangevinRhs> {
    if !h.is_self_adjoint() {
        return Err(Error::NotSelfAdjoint);
    }
    let minus_i = -Coeff::i();
    let mut det = z.commutator(h).scale(&minus_i);
    let mut noise = Vec::new();
    let half = Coeff::frac(1, 2);
    for (k, ch) in channels.iter().enumerate() {
        let g = ch.exact_rate()?;
        let x = &ch.anchor;
        let xd = x.adjoint();
        let zxd = z.commutator(&xd);
        let zx = z.commutator(x);
        let hg = &half * &g;
        det = &det - &(&zxd * x).scale(&hg);
        det = &det + &(&xd * &zx).scale(&hg);
        if !zxd.is_zero() {
            noise.push(NoiseTerm { channel: k, dagger: false, coefficient: -zxd });
        }
        if !zx.is_zero() {
            noise.push(NoiseTerm { channel: k, dagger: true, coefficient: zx });
        }
    }
    Ok(LangevinRhs { deterministic: det, noise })
}

/// One input port of a linear system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub label: String,
    pub channel: String,
    pub dagger: bool,
    pub noise: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: String,
    pub occupation: f64,
    pub amplitude: [f64; 2],
}

/// Where a system came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub model: String,
    #[serde(default)]
    pub order: Option<u32>,
    #[serde(default)]
    pub pair_weight: Option<PairWeight>,
    #[serde(default)]
    pub context: Vec<ModeSummary>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(model: impl Into<String>) -> Self {
        Provenance { model: model.into(), ..Default::default() }
    }

    pub fn with_context(mut self, ctx: &MeanFieldContext) -> Self {
        self.pair_weight = Some(ctx.pair_weight);
        self.context = ctx
            .modes
            .iter()
            .map(|(m, mm)| {
                let a = mm.amplitude.to_c64();
                ModeSummary { mode: m.0.clone(), occupation: rational_to_f64(&mm.occupation), amplitude: [a.re, a.im] }
            })
            .collect();
        self
    }
}

/// Eigenvalue summary of `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub max_real_part: f64,
    pub tolerance: f64,
    pub eigenvalues: Vec<[f64; 2]>,
}

/// Exact rows kept alongside the floating-point matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactRows {
    pub m: Vec<Vec<Coeff>>,
    pub drive: Vec<Coeff>,
}

/// Linear Langevin system `dA/dt = M A + drive - W A_in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SystemDoc", try_from = "SystemDoc")]
pub struct LinearLangevinSystem {
    pub labels: Vec<String>,
    pub m: DMatrix<Complex64>,
    pub drive: DVector<Complex64>,
    pub noise_weights: DMatrix<f64>,
    pub ports: Vec<Port>,
    pub noise_models: BTreeMap<String, NoiseModel>,
    pub provenance: Provenance,
    exact: Option<ExactRows>,
    stability: Option<StabilityReport>,
}

impl LinearLangevinSystem {
    pub fn new(
        labels: Vec<String>,
        m: DMatrix<Complex64>,
        drive: DVector<Complex64>,
        noise_weights: DMatrix<f64>,
        ports: Vec<Port>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = labels.len();
        if m.nrows() != n || m.ncols() != n || drive.len() != n {
            return Err(Error::Dimension(format!("{n} labels but M is {}x{} and drive has {}", m.nrows(), m.ncols(), drive.len())));
        }
        if noise_weights.nrows() != n || noise_weights.ncols() != ports.len() {
            return Err(Error::Dimension(format!(
                "noise weights are {}x{}, expected {n}x{}",
                noise_weights.nrows(),
                noise_weights.ncols(),
                ports.len()
            )));
        }
        if m.iter().chain(drive.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite())
            || noise_weights.iter().any(|w| !w.is_finite())
        {
            return Err(Error::NonFinite("system coefficients".into()));
        }
        Ok(LinearLangevinSystem {
            labels,
            m,
            drive,
            noise_weights,
            ports,
            noise_models: BTreeMap::new(),
            provenance,
            exact: None,
            stability: None,
        })
    }

    /// Builds from exact rows; the floating-point matrix is their conversion.
    pub fn from_exact(
        labels: Vec<String>,
        exact: ExactRows,
        noise_weights: DMatrix<f64>,
        ports: Vec<Port>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = labels.len();
        if exact.m.len() != n || exact.m.iter().any(|r| r.len() != n) || exact.drive.len() != n {
            return Err(Error::Dimension("exact rows do not match labels".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| exact.m[i][j].to_c64());
        let drive = DVector::from_fn(n, |i, _| exact.drive[i].to_c64());
        let mut sys = LinearLangevinSystem::new(labels, m, drive, noise_weights, ports, provenance)?;
        sys.exact = Some(exact);
        Ok(sys)
    }

    pub fn with_noise_model(mut self, id: impl Into<String>, model: NoiseModel) -> Self {
        self.noise_models.insert(id.into(), model);
        self
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn exact(&self) -> Option<&ExactRows> {
        self.exact.as_ref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn port_index(&self, label: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.label == label)
    }

    pub fn stability(&self) -> Option<&StabilityReport> {
        self.stability.as_ref()
    }

    /// Computes the stability report and records it on the system.
    pub fn assess_stability(&mut self, tol: f64) -> Result<&StabilityReport> {
        let r = check_stability(self, tol)?;
        self.stability = Some(r);
        Ok(self.stability.as_ref().expect("just set"))
    }

    /// Adds `-rate` to the diagonal entry of a row.
    pub fn add_row_damping(&mut self, row: usize, rate: f64) -> Result<()> {
        if row >= self.dim() || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("row damping {rate} on row {row}")));
        }
        self.m[(row, row)] -= Complex64::new(rate, 0.0);
        if let Some(ex) = self.exact.as_mut() {
            let r = Coeff::real(rational_from_f64(rate).expect("finite"));
            ex.m[row][row] -= &r;
        }
        self.stability = None;
        Ok(())
    }

    /// Replaces the drive, dropping the exact drive when it cannot be kept.
    pub fn set_drive(&mut self, drive: DVector<Complex64>) -> Result<()> {
        if drive.len() != self.dim() {
            return Err(Error::Dimension("drive length".into()));
        }
        if let Some(ex) = self.exact.as_mut() {
            match drive.iter().map(|z| Coeff::from_c64(*z)).collect::<Option<Vec<_>>>() {
                Some(d) => ex.drive = d,
                None => return Err(Error::NonFinite("drive".into())),
            }
        }
        self.drive = drive;
        Ok(())
    }

    /// Adds the mean input `-W ⟨A_in⟩` to the drive.
    pub fn apply_input_means(&mut self, means: &[Complex64]) -> Result<()> {
        if means.len() != self.n_ports() {
            return Err(Error::Dimension(format!("{} input means for {} ports", means.len(), self.n_ports())));
        }
        let mut d = self.drive.clone();
        for i in 0..self.dim() {
            for (k, mu) in means.iter().enumerate() {
                d[i] -= mu * self.noise_weights[(i, k)];
            }
        }
        self.set_drive(d)
    }
}

/// Options for [`linearize_system`].
#[derive(Clone, Debug)]
pub struct LinearizeOptions {
    pub model: String,
    /// Run the pairwise closure check on the basis first.
    pub check_closure: bool,
    /// Tolerance on the imaginary part of a noise weight.
    pub weight_imag_tol: f64,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        LinearizeOptions { model: "custom".into(), check_closure: true, weight_imag_tol: 1e-12 }
    }
}

fn port_label(ch: &DecayChannel, dagger: bool) -> String {
    if dagger {
        format!("{}_in_dag", ch.name)
    } else {
        format!("{}_in", ch.name)
    }
}

/// Linearizes the Langevin equations of every basis element.
pub fn linearize_system(
    h: &OperatorExpr,
    basis: &BasisSet,
    channels: &[DecayChannel],
    ctx: &MeanFieldContext,
    opts: &LinearizeOptions,
) -> Result<LinearLangevinSystem> {
    ctx.validate()?;
    if !h.is_self_adjoint() {
        return Err(Error::NotSelfAdjoint);
    }
    if opts.check_closure {
        let report = verify_closure(basis, ctx);
        let failure = report.failures().next().map(|f| {
            let why = f.reduced.as_ref().err().map(|e| e.to_string()).unwrap_or_default();
            format!("[{}, {}]: {why}", f.left, f.right)
        });
        if let Some(msg) = failure {
            return Err(Error::Closure(msg));
        }
    }
    let reducer = Reducer::new(basis, ctx);
    let n = basis.len();
    let mut rows = Vec::with_capacity(n);
    let mut drive = Vec::with_capacity(n);
    let mut port_keys: Vec<(usize, bool)> = Vec::new();
    let mut weights: Vec<BTreeMap<(usize, bool), f64>> = Vec::with_capacity(n);
    for el in &basis.elements {
        let active: Vec<DecayChannel> = channels.iter().filter(|c| c.rows.applies(&el.label)).cloned().collect();
        let index_map: Vec<usize> = channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.rows.applies(&el.label))
            .map(|(k, _)| k)
            .collect();
        let rhs = heisenberg_rhs(h, &el.expr, &active)?;
        let red = reducer.reduce(&rhs.deterministic)?;
        rows.push(red.coefficients);
        drive.push(red.constant);
        let mut row_w = BTreeMap::new();
        for t in &rhs.noise {
            let k = index_map[t.channel];
            let ch = &channels[k];
            let mean = ctx.expr_mean(&t.coefficient)?.to_c64();
            let w = -mean * ch.rate.sqrt();
            let port = port_label(ch, t.dagger);
            if w.im.abs() > opts.weight_imag_tol * w.re.abs().max(1.0) {
                return Err(Error::ComplexNoiseWeight { row: el.label.clone(), port, value: format!("{w}") });
            }
            if mean == Complex64::new(0.0, 0.0) {
                continue;
            }
            if !port_keys.contains(&(k, t.dagger)) {
                port_keys.push((k, t.dagger));
            }
            *row_w.entry((k, t.dagger)).or_insert(0.0) += w.re;
        }
        weights.push(row_w);
    }
    port_keys.sort();
    let ports: Vec<Port> = port_keys
        .iter()
        .map(|&(k, dagger)| Port {
            label: port_label(&channels[k], dagger),
            channel: channels[k].name.clone(),
            dagger,
            noise: channels[k].noise.clone(),
        })
        .collect();
    let w = DMatrix::from_fn(n, ports.len(), |i, j| weights[i].get(&port_keys[j]).copied().unwrap_or(0.0));
    let prov = Provenance::new(opts.model.clone()).with_context(ctx);
    LinearLangevinSystem::from_exact(basis.labels(), ExactRows { m: rows, drive }, w, ports, prov)
}

/// Eigenvalues of `M`; stable when every real part is at most `tol`.
pub fn check_stability(sys: &LinearLangevinSystem, tol: f64) -> Result<StabilityReport> {
    let eig = eigenvalues(&sys.m)?;
    let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        stable: max_re <= tol,
        max_real_part: max_re,
        tolerance: tol,
        eigenvalues: eig.iter().map(|z| [z.re, z.im]).collect(),
    })
}

/// Eigenvalues of a complex matrix via the Schur decomposition.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000).ok_or(Error::EigenFailure)?;
    let ev = schur.eigenvalues().ok_or(Error::EigenFailure)?;
    Ok(ev.iter().copied().collect())
}

/// Solves `M x = -drive`.
pub fn steady_state(sys: &LinearLangevinSystem) -> Result<DVector<Complex64>> {
    let n = sys.dim();
    let scale = sys.m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let lu = sys.m.clone().lu();
    let pivot_ok = (0..n).all(|k| lu.u()[(k, k)].norm() > 1e-13 * scale);
    let x = if pivot_ok { lu.solve(&(-&sys.drive)) } else { None };
    match x {
        Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(x),
        _ => {
            let rank = sys.m.clone().svd(false, false).rank(1e-12 * scale);
            Err(Error::Singular { rank, dim: n })
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    labels: Vec<String>,
    m: Vec<Vec<[f64; 2]>>,
    drive: Vec<[f64; 2]>,
    noise_weights: Vec<Vec<f64>>,
    ports: Vec<Port>,
    #[serde(default)]
    noise_models: BTreeMap<String, NoiseModel>,
    #[serde(default)]
    stability: Option<StabilityReport>,
    provenance: Provenance,
}

impl From<LinearLangevinSystem> for SystemDoc {
    fn from(s: LinearLangevinSystem) -> Self {
        let n = s.dim();
        SystemDoc {
            m: (0..n).map(|i| (0..n).map(|j| [s.m[(i, j)].re, s.m[(i, j)].im]).collect()).collect(),
            drive: s.drive.iter().map(|z| [z.re, z.im]).collect(),
            noise_weights: (0..n).map(|i| (0..s.n_ports()).map(|k| s.noise_weights[(i, k)]).collect()).collect(),
            labels: s.labels,
            ports: s.ports,
            noise_models: s.noise_models,
            stability: s.stability,
            provenance: s.provenance,
        }
    }
}

impl TryFrom<SystemDoc> for LinearLangevinSystem {
    type Error = Error;

    fn try_from(d: SystemDoc) -> Result<Self> {
        let n = d.labels.len();
        let k = d.ports.len();
        if d.m.len() != n || d.m.iter().any(|r| r.len() != n) || d.noise_weights.len() != n || d.noise_weights.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("serialized system has inconsistent shapes".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(d.m[i][j][0], d.m[i][j][1]));
        let drive = DVector::from_iterator(d.drive.len(), d.drive.iter().map(|z| Complex64::new(z[0], z[1])));
        let w = DMatrix::from_fn(n, k, |i, j| d.noise_weights[i][j]);
        let mut s = LinearLangevinSystem::new(d.labels, m, drive, w, d.ports, d.provenance)?;
        s.noise_models = d.noise_models;
        s.stability = d.stability;
        Ok(s)
    }
}

/// Exact affine row `Σ c_j basis_j + constant` for one element, handy in tests.
pub fn exact_row(sys: &LinearLangevinSystem, label: &str) -> Option<(Vec<Coeff>, Coeff)> {
    let i = sys.index_of(label)?;
    let ex = sys.exact()?;
    Some((ex.m[i].clone(), ex.drive[i].clone()))
}

/// True when every exact coefficient is zero.
pub fn is_zero_row(row: &[Coeff]) -> bool {
    row.iter().all(Zero::is_zero)
}
