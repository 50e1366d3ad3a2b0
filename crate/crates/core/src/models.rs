//! Catalog of ready-built Langevin systems and steady-state parameter helpers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::coeff::rational_from_f64;
use crate::algebra::meanfield::rational_sqrt;
use crate::algebra::{BasisSet, Coeff, MeanFieldContext, Mode, OperatorExpr, PairWeight, Rational};
use crate::assembler::{
    eigenvalues, linearize_system, DecayChannel, ExactRows, LinearLangevinSystem, LinearizeOptions, Port,
    Provenance,
};
use crate::error::{Error, Result};
use crate::spectral::{NoiseModel, SquaredForm};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Catalog identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelId {
    QuadStd1,
    QuadFull1,
    QuadStd2,
    Anharmonic,
    Amplifier,
    AmplifierKerr,
    Qnd,
    OmStd1a,
    OmStd1b,
    OmStd2,
    Diode(usize),
}

impl ModelId {
    pub const NAMES: [&'static str; 11] = [
        "quad_std_1",
        "quad_full_1",
        "quad_std_2",
        "anharmonic",
        "amplifier",
        "amplifier_kerr",
        "qnd",
        "om_std_1a",
        "om_std_1b",
        "om_std_2",
        "diode(N)",
    ];
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelId::QuadStd1 => "quad_std_1",
            ModelId::QuadFull1 => "quad_full_1",
            ModelId::QuadStd2 => "quad_std_2",
            ModelId::Anharmonic => "anharmonic",
            ModelId::Amplifier => "amplifier",
            ModelId::AmplifierKerr => "amplifier_kerr",
            ModelId::Qnd => "qnd",
            ModelId::OmStd1a => "om_std_1a",
            ModelId::OmStd1b => "om_std_1b",
            ModelId::OmStd2 => "om_std_2",
            ModelId::Diode(n) => return write!(f, "diode({n})"),
        };
        f.write_str(s)
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quad_std_1" => ModelId::QuadStd1,
            "quad_full_1" => ModelId::QuadFull1,
            "quad_std_2" => ModelId::QuadStd2,
            "anharmonic" => ModelId::Anharmonic,
            "amplifier" => ModelId::Amplifier,
            "amplifier_kerr" => ModelId::AmplifierKerr,
            "qnd" => ModelId::Qnd,
            "om_std_1a" => ModelId::OmStd1a,
            "om_std_1b" => ModelId::OmStd1b,
            "om_std_2" => ModelId::OmStd2,
            _ => {
                let n = s
                    .strip_prefix("diode(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|n| n.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Unsupported(format!("model id '{s}'")))?;
                if n == 0 {
                    return Err(Error::Unsupported("diode order must be at least 1".into()));
                }
                ModelId::Diode(n)
            }
        })
    }
}

impl Serialize for ModelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sign inside `(b ± b†)²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSign {
    #[default]
    Plus,
    Minus,
}

/// Physical parameters. Rates and frequencies are in rad/s; each model reads
/// only the fields it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Quadratic coupling γ, or the Kerr coefficient for `amplifier_kerr`.
    pub gamma: Option<f64>,
    /// Standard optomechanical rate g₀.
    pub g0: Option<f64>,
    /// Amplifier pump `[re, im]`.
    pub g: Option<[f64; 2]>,
    /// Anharmonicity ζ.
    pub zeta: Option<f64>,
    /// Cross-Kerr rate χ.
    pub chi: Option<f64>,
    /// Optical detuning Δ.
    pub detuning: Option<f64>,
    /// Mechanical frequency Ω.
    pub omega_m: Option<f64>,
    /// Optical or oscillator frequency ω.
    pub omega: Option<f64>,
    /// Optical decay κ, or the exponential coefficient of the diode model.
    pub kappa: Option<f64>,
    /// Mechanical decay Γ_m.
    pub gamma_m: Option<f64>,
    /// Decay of the photon channel Γ₁.
    pub gamma_1: Option<f64>,
    /// Decay of the phonon channel Γ₂.
    pub gamma_2: Option<f64>,
    /// Temperature in kelvin, used when `m_bar` is absent.
    pub temperature: Option<f64>,
    pub m_bar: Option<f64>,
    pub n_bar: Option<f64>,
    /// Drive amplitude `[re, im]` (photon-flux amplitude).
    pub alpha: Option<[f64; 2]>,
    /// Truncation order, or the diode chain length.
    pub order: Option<u32>,
    #[serde(default)]
    pub sign: CouplingSign,
    /// Adds the self-energy `Δn + Ωm` to quadratic models.
    #[serde(default)]
    pub self_energy: bool,
    /// Uses `L = G` instead of `L = G + g₀(m̄+1)`.
    #[serde(default)]
    pub ultracold: bool,
    pub pair_weight: Option<PairWeight>,
    /// Diode parameters: `τ du/dt = -μu - κ(e^u - 1) + v(t)`.
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub v0: Option<f64>,
    pub u_bar: Option<f64>,
}

impl ModelParams {
    pub(crate) fn req(&self, v: Option<f64>, name: &str) -> Result<f64> {
        let x = v.ok_or_else(|| Error::MissingParameter(name.into()))?;
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        Ok(x)
    }

    pub(crate) fn rate(&self, v: Option<f64>, name: &str) -> Result<f64> {
        let x = self.req(v, name)?;
        if x < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be non-negative")));
        }
        Ok(x)
    }

    fn complex(&self, v: Option<[f64; 2]>, name: &str) -> Result<Complex64> {
        let z = v.ok_or_else(|| Error::MissingParameter(name.into()))?;
        if !(z[0].is_finite() && z[1].is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        Ok(Complex64::new(z[0], z[1]))
    }

    /// Mechanical occupation: `m_bar`, or the Bose factor at `temperature`.
    pub fn mechanical_occupation(&self) -> Result<f64> {
        if let Some(m) = self.m_bar {
            return self.rate(Some(m), "m_bar");
        }
        let t = self.rate(self.temperature, "temperature").map_err(|_| Error::MissingParameter("m_bar or temperature".into()))?;
        thermal_occupation(self.rate(self.omega_m, "omega_m")?, t)
    }

    /// Photon occupation: `n_bar`, or `4|α|²/Γ` with the given decay.
    pub fn photon_occupation(&self, decay: f64) -> Result<f64> {
        if let Some(n) = self.n_bar {
            return self.rate(Some(n), "n_bar");
        }
        let a = self.complex(self.alpha, "alpha").map_err(|_| Error::MissingParameter("n_bar or alpha".into()))?;
        photon_number_linear(a, decay)
    }
}

/// Bose occupation `1/(exp(ħΩ/k_B T) - 1)`, zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter("mechanical frequency must be positive".into()));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::InvalidParameter("temperature must be non-negative".into()));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(bose_factor(HBAR * omega / (K_B * temperature)))
}

/// `1/(e^x - 1)`.
pub fn bose_factor(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// `4|α|²/Γ`.
pub fn photon_number_linear(alpha: Complex64, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter("decay rate must be positive".into()));
    }
    Ok(4.0 * alpha.norm_sqr() / gamma)
}

fn ex(x: f64) -> Coeff {
    Coeff::real(rational_from_f64(x).expect("validated finite"))
}

fn exi(x: f64) -> Coeff {
    ex(x).times_i()
}

fn exc(z: Complex64) -> Coeff {
    Coeff::from_c64(z).expect("validated finite")
}

fn exact_rat(x: f64) -> Rational {
    rational_from_f64(x).expect("validated finite")
}

fn ex_sqrt(x: f64) -> Coeff {
    Coeff::real(rational_sqrt(&exact_rat(x)))
}

/// Accumulates exact rows, noise weights and ports of a hand-built system.
struct Builder {
    labels: Vec<String>,
    m: Vec<Vec<Coeff>>,
    drive: Vec<Coeff>,
    ports: Vec<Port>,
    w: Vec<Vec<f64>>,
    models: BTreeMap<String, NoiseModel>,
}

impl Builder {
    fn new(labels: &[&str]) -> Self {
        let n = labels.len();
        Builder {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            m: vec![vec![Coeff::zero(); n]; n],
            drive: vec![Coeff::zero(); n],
            ports: Vec::new(),
            w: vec![Vec::new(); n],
            models: BTreeMap::new(),
        }
    }

    fn idx(&self, l: &str) -> usize {
        self.labels.iter().position(|x| x == l).expect("known label")
    }

    fn set(&mut self, r: &str, c: &str, v: Coeff) {
        let (i, j) = (self.idx(r), self.idx(c));
        self.m[i][j] = v;
    }

    fn add(&mut self, r: &str, c: &str, v: Coeff) {
        let (i, j) = (self.idx(r), self.idx(c));
        self.m[i][j] += &v;
    }

    fn drive(&mut self, r: &str, v: Coeff) {
        let i = self.idx(r);
        self.drive[i] = v;
    }

    fn port(&mut self, label: &str, channel: &str, dagger: bool, noise: &str) -> usize {
        self.ports.push(Port { label: label.into(), channel: channel.into(), dagger, noise: noise.into() });
        for row in &mut self.w {
            row.push(0.0);
        }
        self.ports.len() - 1
    }

    fn weight(&mut self, r: &str, port: usize, v: f64) {
        let i = self.idx(r);
        self.w[i][port] = v;
    }

    fn noise(&mut self, id: &str, m: NoiseModel) {
        self.models.insert(id.into(), m);
    }

    fn finish(self, prov: Provenance) -> Result<LinearLangevinSystem> {
        let n = self.labels.len();
        let k = self.ports.len();
        let w = DMatrix::from_fn(n, k, |i, j| self.w[i][j]);
        let mut sys = LinearLangevinSystem::from_exact(self.labels, ExactRows { m: self.m, drive: self.drive }, w, self.ports, prov)?;
        sys.noise_models = self.models;
        Ok(sys)
    }
}

fn standard_noise(sys: &mut LinearLangevinSystem, m_bar: f64) {
    sys.noise_models.insert("vac".into(), NoiseModel::Vacuum);
    sys.noise_models.insert("b_th".into(), NoiseModel::Thermal { n_th: m_bar });
    sys.noise_models.insert("a_sq".into(), NoiseModel::Squared { base: "vac".into(), form: SquaredForm::Closed, scale: 1.0 });
    sys.noise_models.insert("b_sq".into(), NoiseModel::Squared { base: "b_th".into(), form: SquaredForm::Closed, scale: 1.0 });
}

/// Builds a catalog system.
pub fn build_model(id: &ModelId, p: &ModelParams) -> Result<LinearLangevinSystem> {
    if let Some(o) = p.order {
        let ok = match id {
            ModelId::QuadStd1 | ModelId::QuadFull1 | ModelId::OmStd1a | ModelId::OmStd1b => o == 1,
            ModelId::QuadStd2 | ModelId::OmStd2 => o == 2,
            ModelId::Diode(n) => o as usize == *n,
            _ => true,
        };
        if !ok {
            return Err(Error::Unsupported(format!("order {o} for model {id}")));
        }
    }
    let mut sys = match id {
        ModelId::QuadStd1 => quad_std_1(p),
        ModelId::QuadFull1 => quad_full_1(p),
        ModelId::QuadStd2 => quad_std_2(p),
        ModelId::Anharmonic => anharmonic(p),
        ModelId::Amplifier => amplifier(p, false),
        ModelId::AmplifierKerr => amplifier(p, true),
        ModelId::Qnd => qnd(p),
        ModelId::OmStd1a => om_std_1(p, false),
        ModelId::OmStd1b => om_std_1(p, true),
        ModelId::OmStd2 => om_std_2(p),
        ModelId::Diode(n) => diode(*n, p),
    }?;
    sys.provenance.model = id.to_string();
    sys.provenance.order = match id {
        ModelId::QuadStd2 | ModelId::OmStd2 => Some(2),
        ModelId::Diode(n) => Some(*n as u32),
        _ => Some(1),
    };
    sys.provenance.notes.push(format!("parameters: {}", serde_json::to_string(p).unwrap_or_default()));
    Ok(sys)
}

/// Operators of the photon mode `a` and phonon mode `b`.
pub struct QuadOps {
    pub a: Mode,
    pub b: Mode,
    pub n: OperatorExpr,
    pub m: OperatorExpr,
    pub c: OperatorExpr,
    pub d: OperatorExpr,
}

pub fn quad_ops() -> QuadOps {
    let (a, b) = (Mode::new("a"), Mode::new("b"));
    QuadOps {
        n: OperatorExpr::number(&a),
        m: OperatorExpr::number(&b),
        c: OperatorExpr::square(&a),
        d: OperatorExpr::square(&b),
        a,
        b,
    }
}

fn sign_coeff(s: CouplingSign) -> Coeff {
    match s {
        CouplingSign::Plus => Coeff::one(),
        CouplingSign::Minus => -Coeff::one(),
    }
}

fn self_energy(p: &ModelParams, o: &QuadOps) -> Result<OperatorExpr> {
    if !p.self_energy {
        return Ok(OperatorExpr::zero());
    }
    let delta = p.req(p.detuning, "detuning")?;
    let big = p.req(p.omega_m, "omega_m")?;
    Ok(&o.n.scale(&ex(delta)) + &o.m.scale(&ex(big)))
}

fn quad_context(p: &ModelParams, n_bar: f64, m_bar: f64, amplitudes: bool, default: PairWeight) -> MeanFieldContext {
    let o = quad_ops();
    let w = p.pair_weight.unwrap_or(default);
    let ctx = MeanFieldContext::new().with_pair_weight(w);
    if amplitudes {
        ctx.with_mode(&o.a, exact_rat(n_bar)).with_mode(&o.b, exact_rat(m_bar))
    } else {
        ctx.with_amplitude(&o.a, exact_rat(n_bar), Coeff::zero()).with_amplitude(&o.b, exact_rat(m_bar), Coeff::zero())
    }
}

/// `H = 2γ n (d + d† ± m)` over `{a, d, d†, m}`.
fn quad_std_1(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let o = quad_ops();
    let gamma = p.req(p.gamma, "gamma")?;
    let g1 = p.rate(p.gamma_1, "gamma_1")?;
    let g2 = p.rate(p.gamma_2, "gamma_2")?;
    let n_bar = p.photon_occupation(g1)?;
    let m_bar = p.mechanical_occupation()?;
    let inner = &(&o.d + &o.d.adjoint()) + &o.m.scale(&sign_coeff(p.sign));
    let h = &(&o.n * &inner).scale(&ex(2.0 * gamma)) + &self_energy(p, &o)?;
    let basis = BasisSet::new()
        .push("a", OperatorExpr::annihilator(&o.a))
        .push("d", o.d.clone())
        .push("dd", o.d.adjoint())
        .push("m", o.m.clone());
    let ch = [
        DecayChannel::new("a", OperatorExpr::annihilator(&o.a), g1, "vac").on_rows(&["a"]),
        DecayChannel::new("d", o.d.clone(), g2, "b_sq").on_rows(&["d", "dd"]),
    ];
    let ctx = quad_context(p, n_bar, m_bar, true, PairWeight::Half);
    let mut sys = linearize_system(&h, &basis, &ch, &ctx, &LinearizeOptions::default())?;
    standard_noise(&mut sys, m_bar);
    Ok(sys)
}

fn quad_full_hamiltonian(p: &ModelParams, o: &QuadOps) -> Result<OperatorExpr> {
    let gamma = p.req(p.gamma, "gamma")?;
    let s = sign_coeff(p.sign);
    let left = &(&o.d + &o.d.adjoint()) + &o.m.scale(&s);
    let right = &(&o.c + &o.c.adjoint()) + &o.n.scale(&s);
    Ok(&(&left * &right).scale(&ex(4.0 * gamma)) + &self_energy(p, o)?)
}

fn quad_full_channels(o: &QuadOps, g1: f64, g2: f64) -> [DecayChannel; 2] {
    [
        DecayChannel::new("c", o.c.clone(), g1, "a_sq").on_rows(&["c", "cd"]),
        DecayChannel::new("d", o.d.clone(), g2, "b_sq").on_rows(&["d", "dd"]),
    ]
}

/// `H = 4γ(d + d† ± m)(c + c† ± n)` over `{c, c†, n, d, d†, m}`.
fn quad_full_1(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let o = quad_ops();
    let g1 = p.rate(p.gamma_1, "gamma_1")?;
    let g2 = p.rate(p.gamma_2, "gamma_2")?;
    let n_bar = p.photon_occupation(g1)?;
    let m_bar = p.mechanical_occupation()?;
    let h = quad_full_hamiltonian(p, &o)?;
    let basis = first_order_full_basis(&o);
    let ctx = quad_context(p, n_bar, m_bar, false, PairWeight::Unit);
    let mut sys = linearize_system(&h, &basis, &quad_full_channels(&o, g1, g2), &ctx, &LinearizeOptions::default())?;
    standard_noise(&mut sys, m_bar);
    Ok(sys)
}

fn first_order_full_basis(o: &QuadOps) -> BasisSet {
    BasisSet::new()
        .push("c", o.c.clone())
        .push("cd", o.c.adjoint())
        .push("n", o.n.clone())
        .push("d", o.d.clone())
        .push("dd", o.d.adjoint())
        .push("m", o.m.clone())
}

/// The 15-element second-order basis: the six first-order operators and
/// their nine photon-phonon products.
pub fn second_order_basis() -> BasisSet {
    let o = quad_ops();
    let photon = [("c", o.c.clone()), ("cd", o.c.adjoint()), ("n", o.n.clone())];
    let phonon = [("d", o.d.clone()), ("dd", o.d.adjoint()), ("m", o.m.clone())];
    let mut basis = first_order_full_basis(&o);
    for (lx, x) in &photon {
        for (ly, y) in &phonon {
            basis = basis.push(format!("{lx}_{ly}"), x * y);
        }
    }
    basis
}

fn quad_std_2(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let o = quad_ops();
    let g1 = p.rate(p.gamma_1, "gamma_1")?;
    let g2 = p.rate(p.gamma_2, "gamma_2")?;
    let n_bar = p.photon_occupation(g1)?;
    let m_bar = p.mechanical_occupation()?;
    let h = quad_full_hamiltonian(p, &o)?;
    let basis = second_order_basis();
    let ctx = quad_context(p, n_bar, m_bar, false, PairWeight::Unit);
    let lin = linearize_system(&h, &basis, &quad_full_channels(&o, g1, g2), &ctx, &LinearizeOptions::default())?;
    // Products damp at the sum of their factors' rates and see the product of
    // their factors' noises.
    let rate = |l: &str| match l {
        "c" | "cd" => 0.5 * (n_bar + 0.5) * g1,
        "d" | "dd" => 0.5 * (m_bar + 0.5) * g2,
        _ => 0.0,
    };
    let single_port = |l: &str| match l {
        "c" => Some("c_in"),
        "cd" => Some("c_in_dag"),
        "d" => Some("d_in"),
        "dd" => Some("d_in_dag"),
        _ => None,
    };
    let mut ports = lin.ports.clone();
    let mut extra: Vec<(usize, usize, f64)> = Vec::new();
    let mut products = Vec::new();
    for (i, label) in lin.labels.iter().enumerate() {
        let Some((x, y)) = label.split_once('_') else { continue };
        products.push((i, rate(x) + rate(y)));
        if let (Some(px), Some(py)) = (single_port(x), single_port(y)) {
            let (kx, ky) = (lin.port_index(px), lin.port_index(py));
            if let (Some(kx), Some(ky)) = (kx, ky) {
                let wx = lin.noise_weights[(basis.index_of(x).expect("factor"), kx)];
                let wy = lin.noise_weights[(basis.index_of(y).expect("factor"), ky)];
                ports.push(Port {
                    label: format!("{px}*{py}"),
                    channel: format!("{x}*{y}"),
                    dagger: false,
                    noise: format!("{}*{}", lin.ports[kx].noise, lin.ports[ky].noise),
                });
                extra.push((i, ports.len() - 1, wx * wy));
            }
        }
    }
    let n = lin.dim();
    let mut w = DMatrix::<f64>::zeros(n, ports.len());
    w.view_mut((0, 0), (n, lin.n_ports())).copy_from(&lin.noise_weights);
    for (i, k, v) in extra {
        w[(i, k)] = v;
    }
    let exact = lin.exact().cloned().expect("assembled systems are exact");
    let mut sys = LinearLangevinSystem::from_exact(lin.labels.clone(), exact, w, ports, lin.provenance.clone())?;
    for (i, r) in products {
        if r != 0.0 {
            sys.add_row_damping(i, r)?;
        }
    }
    standard_noise(&mut sys, m_bar);
    for port in sys.ports.clone() {
        if let Some((l, r)) = port.noise.split_once('*') {
            sys.noise_models.insert(port.noise.clone(), NoiseModel::Product { left: l.into(), right: r.into() });
        }
    }
    Ok(sys)
}

/// Operators of the anharmonic oscillator basis, in basis order.
pub fn anharmonic_basis() -> BasisSet {
    let a = Mode::new("a");
    let n = OperatorExpr::number(&a);
    let c = OperatorExpr::square(&a);
    BasisSet::new()
        .push("c", c.clone())
        .push("cd", c.adjoint())
        .push("n", n.clone())
        .push("n2", &n * &n)
        .push("c2", &c * &c)
        .push("cd2", &c.adjoint() * &c.adjoint())
        .push("nc", &n * &c)
        .push("cdn", &c.adjoint() * &n)
}

/// `H = (ω-3ζ)n - 3ζn² - 2ζ[c² + c†² + 3(c + c†)] - 4ζ(nc + c†n)`.
pub fn anharmonic_hamiltonian(omega: f64, zeta: f64) -> OperatorExpr {
    let b = anharmonic_basis();
    let e = |l: &str| b.expr(l).expect("basis label").clone();
    let z = ex(zeta);
    let mut h = e("n").scale(&(ex(omega) - &Coeff::int(3) * &z));
    h = &h - &e("n2").scale(&(&Coeff::int(3) * &z));
    let quad = &(&e("c2") + &e("cd2")) + &(&e("c") + &e("cd")).scale(&Coeff::int(3));
    h = &h - &quad.scale(&(&Coeff::int(2) * &z));
    &h - &(&e("nc") + &e("cdn")).scale(&(&Coeff::int(4) * &z))
}

/// Input moments `⟨a_in⟩, ⟨c_in⟩, ⟨n_in⟩, ⟨c²_in⟩, ⟨n_in c_in⟩` of a coherent
/// drive with `β = α/√2` and `Γ₃ = 2Γ₂ = 4Γ₁`.
pub fn anharmonic_input_moments(alpha: Complex64, gamma_1: f64) -> Vec<(&'static str, Complex64)> {
    let beta = alpha / 2f64.sqrt();
    let (g2, g3) = (2.0 * gamma_1, 4.0 * gamma_1);
    let b2 = beta.norm_sqr();
    vec![
        ("a_in", (2.0 * gamma_1).sqrt() * beta),
        ("c_in", g2.sqrt() * beta),
        ("n_in", Complex64::new(g2.sqrt() * (2.0 * b2 + 1.0), 0.0)),
        ("c2_in", g3.sqrt() * beta * beta),
        ("nc_in", g3.sqrt() * beta * beta * (2.0 * b2 + 3.0)),
    ]
}

fn anharmonic(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let omega = p.req(p.omega, "omega")?;
    let zeta = p.req(p.zeta, "zeta")?;
    let g1 = p.rate(p.gamma_1, "gamma_1")?;
    let n_bar = p.req(p.n_bar, "n_bar")?;
    if n_bar < 0.0 {
        return Err(Error::InvalidParameter("n_bar must be non-negative".into()));
    }
    let (g2, g3) = (2.0 * g1, 4.0 * g1);
    let basis = anharmonic_basis();
    let h = anharmonic_hamiltonian(omega, zeta);
    let ch = [
        DecayChannel::new("c", basis.expr("c").expect("c").clone(), g2, "a_sq").on_rows(&["c", "cd"]),
        DecayChannel::new("c2", basis.expr("c2").expect("c2").clone(), g3, "c_sq").on_rows(&["c2", "cd2"]),
        DecayChannel::new("nc", basis.expr("nc").expect("nc").clone(), g3, "nc_noise").on_rows(&["nc", "cdn"]),
    ];
    let a = Mode::new("a");
    let ctx = MeanFieldContext::new()
        .with_pair_weight(p.pair_weight.unwrap_or(PairWeight::Half))
        .with_amplitude(&a, exact_rat(n_bar), Coeff::zero());
    let mut sys = linearize_system(&h, &basis, &ch, &ctx, &LinearizeOptions::default())?;
    standard_noise(&mut sys, 0.0);
    sys.noise_models.insert("c_sq".into(), NoiseModel::Squared { base: "a_sq".into(), form: SquaredForm::Closed, scale: 1.0 });
    sys.noise_models.insert("nc_noise".into(), NoiseModel::Product { left: "vac".into(), right: "a_sq".into() });
    if let Some(al) = p.alpha {
        let alpha = p.complex(Some(al), "alpha")?;
        let moments: BTreeMap<&str, Complex64> = anharmonic_input_moments(alpha, g1).into_iter().collect();
        let per_port = |label: &str| -> Complex64 {
            let (key, rate, conj) = match label {
                "c_in" => ("c_in", g2, false),
                "c_in_dag" => ("c_in", g2, true),
                "c2_in" => ("c2_in", g3, false),
                "c2_in_dag" => ("c2_in", g3, true),
                "nc_in" => ("nc_in", g3, false),
                "nc_in_dag" => ("nc_in", g3, true),
                _ => return Complex64::zero(),
            };
            if rate == 0.0 {
                return Complex64::zero();
            }
            let v = moments[key] / rate.sqrt();
            if conj {
                v.conj()
            } else {
                v
            }
        };
        let means: Vec<Complex64> = sys.ports.iter().map(|pt| per_port(&pt.label)).collect();
        sys.apply_input_means(&means)?;
    }
    Ok(sys)
}

/// Degenerate amplifier over `{n, c, c†}`, optionally with the Kerr term
/// `γ c†c` over `{n, n², c, c†}` using `[n², c] ≈ -½(6n̄+7)c`.
fn amplifier(p: &ModelParams, kerr: bool) -> Result<LinearLangevinSystem> {
    let omega = p.req(p.omega, "omega")?;
    let g = p.complex(p.g, "g")?;
    let g2 = p.rate(p.gamma_2, "gamma_2")?;
    let n_bar = p.req(p.n_bar, "n_bar")?;
    if n_bar < 0.0 {
        return Err(Error::InvalidParameter("n_bar must be non-negative".into()));
    }
    let labels: &[&str] = if kerr { &["n", "n2", "c", "cd"] } else { &["n", "c", "cd"] };
    let mut b = Builder::new(labels);
    let (gc, gs) = (exc(g), exc(g.conj()));
    let i = Coeff::i();
    let two_i = &Coeff::int(2) * &i;
    let nb = ex(n_bar);
    let damp = &(&(&Coeff::int(2) * &nb + Coeff::one()) * &ex(g2)) * &Coeff::frac(1, 4);
    b.set("n", "c", -(&two_i * &gc));
    b.set("n", "cd", &two_i * &gs);
    b.set("c", "c", -(&(&two_i * &ex(omega)) + &damp));
    b.set("cd", "cd", &(&two_i * &ex(omega)) - &damp);
    b.set("c", "n", -(&i * &gs));
    b.set("cd", "n", &i * &gc);
    b.drive("c", -(&(&i * &gs) * &Coeff::frac(1, 2)));
    b.drive("cd", &(&i * &gc) * &Coeff::frac(1, 2));
    if kerr {
        let gamma = p.req(p.gamma, "gamma")?;
        let k = &(&Coeff::int(6) * &nb + Coeff::int(7)) * &Coeff::frac(1, 2);
        b.set("n2", "c", &(&i * &gc) * &k);
        b.set("n2", "cd", -(&(&i * &gs) * &k));
        // γc†c = ¼γ(n² - n) adds -(iγ/4)([c,n²] - 2c) to the c row.
        let shift = &(&(&i * &ex(gamma)) * &Coeff::frac(1, 4)) * &(&k - &Coeff::int(2));
        b.add("c", "c", -shift.clone());
        b.add("cd", "cd", shift);
    }
    let w = (n_bar + 0.5) * g2.sqrt();
    let kc = b.port("c_in", "c", false, "a_sq");
    let kd = b.port("c_in_dag", "c", true, "a_sq");
    b.weight("c", kc, w);
    b.weight("cd", kd, w);
    b.noise("vac", NoiseModel::Vacuum);
    b.noise("a_sq", NoiseModel::Squared { base: "vac".into(), form: SquaredForm::Closed, scale: 1.0 });
    let a = Mode::new("a");
    let ctx = MeanFieldContext::new().with_amplitude(&a, exact_rat(n_bar), Coeff::zero());
    b.finish(Provenance::new("amplifier").with_context(&ctx))
}

/// Cross-Kerr readout over `{n, m, C, S}` with the quadratures
/// `C = ½[(n+1)^(-½)a + a†(n+1)^(-½)]`, `S = (1/2i)[(n+1)^(-½)a - a†(n+1)^(-½)]`.
fn qnd(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let omega = p.req(p.omega, "omega")?;
    let chi = p.req(p.chi, "chi")?;
    let kappa = p.rate(p.kappa, "kappa")?;
    let gm = p.rate(p.gamma_m, "gamma_m")?;
    let n_bar = p.photon_occupation(kappa)?;
    let m_bar = p.mechanical_occupation()?;
    let mut b = Builder::new(&["n", "m", "C", "S"]);
    let freq = ex(omega) + &ex(chi) * &ex(m_bar);
    // Real probe amplitude: C̄ = √(n̄/(n̄+1)), S̄ = 0.
    let c_bar = (n_bar / (n_bar + 1.0)).sqrt();
    let half_k = ex(0.5 * kappa);
    b.set("n", "n", -ex(kappa));
    b.drive("n", ex(kappa * n_bar));
    b.set("m", "m", -ex(gm));
    b.drive("m", ex(gm * m_bar));
    b.set("C", "C", -half_k.clone());
    b.set("C", "S", freq.clone());
    b.set("S", "S", -half_k);
    b.set("S", "C", -freq);
    b.set("S", "m", -ex(chi * c_bar));
    let kx = b.port("a_x", "a", false, "vac");
    let ky = b.port("a_y", "a", true, "vac");
    let kb = b.port("b_x", "b", false, "b_th");
    b.weight("n", kx, 2.0 * (kappa * n_bar).sqrt());
    b.weight("C", kx, (kappa / (n_bar + 1.0)).sqrt());
    b.weight("S", ky, (kappa / (n_bar + 1.0)).sqrt());
    b.weight("m", kb, 2.0 * (gm * m_bar).sqrt());
    b.noise("vac", NoiseModel::Vacuum);
    b.noise("b_th", NoiseModel::Thermal { n_th: m_bar });
    let mut prov = Provenance::new("qnd");
    prov.notes.push("input ports are the quadratures (a_in ± a_in†)/2 and (a_in - a_in†)/2i".into());
    b.finish(prov)
}

/// `(x, y, linear part, constant)` of one commutator `[x, y]`.
pub type CommutatorEntry = (&'static str, &'static str, Vec<(&'static str, Coeff)>, Coeff);

/// `[C,S] ≈ ½i(n̄+2)⁻¹`, `[n,C] = -iS`, `[n,S] = iC`, all other pairs zero.
pub fn qnd_commutator_table(n_bar: &Rational) -> Vec<CommutatorEntry> {
    let cs = Coeff::new(Rational::zero(), (Rational::one() / (n_bar + Rational::from_integer(2.into()))) / Rational::from_integer(2.into()));
    vec![
        ("n", "m", vec![], Coeff::zero()),
        ("n", "C", vec![("S", -Coeff::i())], Coeff::zero()),
        ("n", "S", vec![("C", Coeff::i())], Coeff::zero()),
        ("m", "C", vec![], Coeff::zero()),
        ("m", "S", vec![], Coeff::zero()),
        ("C", "S", vec![], cs),
    ]
}

struct OmParams {
    delta: f64,
    big: f64,
    kappa: f64,
    gm: f64,
    g0: f64,
    n_bar: f64,
    m_bar: f64,
}

fn om_params(p: &ModelParams) -> Result<OmParams> {
    let kappa = p.rate(p.kappa, "kappa")?;
    Ok(OmParams {
        delta: p.req(p.detuning, "detuning")?,
        big: p.req(p.omega_m, "omega_m")?,
        kappa,
        gm: p.rate(p.gamma_m, "gamma_m")?,
        g0: p.req(p.g0, "g0")?,
        n_bar: p.photon_occupation(kappa)?,
        m_bar: p.mechanical_occupation()?,
    })
}

/// First-order optomechanics over `{a, b, b†}`; the `b`-row coupling variant
/// when `coupled`.
fn om_std_1(p: &ModelParams, coupled: bool) -> Result<LinearLangevinSystem> {
    let q = om_params(p)?;
    let i = Coeff::i();
    let f = &ex(q.g0) * &ex_sqrt(q.n_bar);
    let g = &ex(q.g0) * &ex(q.n_bar);
    let mut b = Builder::new(&["a", "b", "bd"]);
    b.set("a", "a", -(&exi(q.delta) + &ex(q.kappa / 2.0)));
    b.set("a", "b", &i * &f);
    b.set("a", "bd", &i * &f);
    b.set("b", "b", &exi(q.big) - &ex(q.gm / 2.0));
    b.set("bd", "bd", -(&exi(q.big) + &ex(q.gm / 2.0)));
    if coupled {
        b.set("b", "a", &i * &f);
        b.set("bd", "b", &i * &f);
    } else {
        b.drive("b", &i * &g);
        b.drive("bd", -(&i * &g));
    }
    let ka = b.port("a_in", "a", false, "vac");
    let kb = b.port("b_in", "b", false, "b_th");
    let kbd = b.port("b_in_dag", "b", true, "b_th");
    b.weight("a", ka, q.kappa.sqrt());
    b.weight("b", kb, q.gm.sqrt());
    b.weight("bd", kbd, q.gm.sqrt());
    b.noise("vac", NoiseModel::Vacuum);
    b.noise("b_th", NoiseModel::Thermal { n_th: q.m_bar });
    b.finish(Provenance::new("om_std_1"))
}

/// Second-order optomechanics over `{a, b, ab, ab†, n, c}`.
fn om_std_2(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let q = om_params(p)?;
    let i = Coeff::i();
    let g0 = ex(q.g0);
    let ig0 = &i * &g0;
    let f = &g0 * &ex_sqrt(q.n_bar);
    let big_g = &g0 * &ex(q.n_bar);
    let l = if p.ultracold { big_g.clone() } else { &big_g + &(&g0 * &ex(q.m_bar + 1.0)) };
    let gam = q.kappa + q.gm;
    let mut b = Builder::new(&["a", "b", "ab", "abd", "n", "c"]);
    b.set("a", "a", -(&exi(q.delta) + &ex(q.kappa / 2.0)));
    b.set("a", "ab", ig0.clone());
    b.set("a", "abd", ig0.clone());
    b.set("b", "b", &exi(q.big) - &ex(q.gm / 2.0));
    b.set("b", "n", ig0.clone());
    b.set("ab", "a", &i * &l);
    b.set("ab", "ab", &exi(q.big - q.delta) - &ex(gam / 2.0));
    b.set("ab", "abd", ig0.clone());
    b.set("abd", "a", &i * &l);
    b.set("abd", "ab", ig0);
    b.set("abd", "abd", -(&exi(q.big + q.delta) + &ex(gam / 2.0)));
    b.set("n", "n", -ex(q.kappa));
    let two_f = &(&Coeff::int(2) * &i) * &f;
    b.set("c", "ab", two_f.clone());
    b.set("c", "abd", two_f);
    b.set("c", "c", -(&exi(2.0 * q.delta) + &ex(q.kappa)));
    let k = 4.0 * q.n_bar * q.kappa;
    let ka = b.port("a_in", "a", false, "vac");
    let kb = b.port("b_in", "b", false, "b_th");
    let ka2 = b.port("a_in_sq", "a", false, "a_sq");
    b.weight("a", ka, q.kappa.sqrt());
    b.weight("b", kb, q.gm.sqrt());
    for r in ["ab", "abd"] {
        b.weight(r, kb, (q.gm * q.n_bar).sqrt());
        b.weight(r, ka, (q.kappa * q.m_bar).sqrt());
    }
    b.weight("n", ka, k.sqrt());
    b.weight("c", ka, (2.0 * k).sqrt());
    b.weight("c", ka2, (8.0 * q.kappa).sqrt());
    b.noise("vac", NoiseModel::Vacuum);
    b.noise("b_th", NoiseModel::Thermal { n_th: q.m_bar });
    b.noise("a_sq", NoiseModel::Squared { base: "vac".into(), form: SquaredForm::Closed, scale: 1.0 });
    b.finish(Provenance::new("om_std_2"))
}

/// Truncates the second-order optomechanical system to `{a, b, b†}` by
/// `ab → √n̄ b`, `ab† → √n̄ b†`, `n → n̄` and conjugating the `b` row.
pub fn truncate_om_second_to_first(p: &ModelParams) -> Result<LinearLangevinSystem> {
    let q = om_params(p)?;
    let sys = build_model(&ModelId::OmStd2, p)?;
    let ex9 = sys.exact().expect("exact").clone();
    let ix = |l: &str| sys.index_of(l).expect("label");
    let root = ex_sqrt(q.n_bar);
    let nb = ex(q.n_bar);
    let labels = ["a", "b", "bd"];
    let mut m = vec![vec![Coeff::zero(); 3]; 3];
    let mut drive = vec![Coeff::zero(); 3];
    for (r, src) in [(0usize, "a"), (1, "b")] {
        let row = &ex9.m[ix(src)];
        m[r][0] = row[ix("a")].clone();
        m[r][1] = &row[ix("b")] + &(&row[ix("ab")] * &root);
        m[r][2] = &row[ix("abd")] * &root;
        drive[r] = &ex9.drive[ix(src)] + &(&row[ix("n")] * &nb);
        for other in ["c"] {
            if !row[ix(other)].is_zero() {
                return Err(Error::Unsupported(format!("row {src} depends on {other}")));
            }
        }
    }
    m[2] = vec![m[1][0].conj(), m[1][2].conj(), m[1][1].conj()];
    drive[2] = drive[1].conj();
    let ka = sys.port_index("a_in").expect("a_in");
    let kb = sys.port_index("b_in").expect("b_in");
    let ports = vec![
        sys.ports[ka].clone(),
        sys.ports[kb].clone(),
        Port { label: "b_in_dag".into(), channel: "b".into(), dagger: true, noise: sys.ports[kb].noise.clone() },
    ];
    let w = DMatrix::from_row_slice(3, 3, &[
        sys.noise_weights[(ix("a"), ka)], 0.0, 0.0,
        0.0, sys.noise_weights[(ix("b"), kb)], 0.0,
        0.0, 0.0, sys.noise_weights[(ix("b"), kb)],
    ]);
    let mut out = LinearLangevinSystem::from_exact(
        labels.iter().map(|s| s.to_string()).collect(),
        ExactRows { m, drive },
        w,
        ports,
        Provenance::new("om_std_2 truncated"),
    )?;
    out.noise_models = sys.noise_models.clone();
    Ok(out)
}

/// Diode chain `u, u², …, u^N` linearized about `ū`: `M_kk = -k(μ+κ)/τ`,
/// `M_{k,k+i} = -kκ/((i+1)! τ)`, drive and noise weight `k ū^(k-1)/τ`.
fn diode(order: usize, p: &ModelParams) -> Result<LinearLangevinSystem> {
    let mu = p.rate(p.mu, "mu")?;
    let kappa = p.rate(p.kappa, "kappa")?;
    let tau = p.req(p.tau, "tau")?;
    if tau <= 0.0 {
        return Err(Error::InvalidParameter("tau must be positive".into()));
    }
    let v0 = p.req(p.v0, "v0")?;
    let u_bar = p.u_bar.unwrap_or(0.0);
    if !u_bar.is_finite() {
        return Err(Error::InvalidParameter("u_bar must be finite".into()));
    }
    let labels: Vec<String> = (1..=order).map(|k| format!("u{k}")).collect();
    let lr: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut b = Builder::new(&lr);
    let t = ex(tau);
    let inv_t = t.inv().expect("tau > 0");
    for k in 1..=order {
        let kk = Coeff::int(k as i64);
        b.set(&labels[k - 1], &labels[k - 1], -(&(&kk * &(ex(mu) + ex(kappa))) * &inv_t));
        let mut fact = Rational::one();
        for i in 1..=(order - k) {
            fact *= Rational::from_integer(((i + 1) as i64).into());
            let v = &(&(&kk * &ex(kappa)) * &Coeff::real(Rational::one() / &fact)) * &inv_t;
            b.set(&labels[k - 1], &labels[k - 1 + i], -v);
        }
        let lin = &(&kk * &ex(u_bar).pow((k - 1) as u32)) * &inv_t;
        b.drive(&labels[k - 1], &lin * &ex(v0));
    }
    let kn = b.port("n", "n", false, "white");
    for k in 1..=order {
        b.weight(&labels[k - 1], kn, k as f64 * u_bar.powi(k as i32 - 1) / tau);
    }
    b.noise("white", NoiseModel::Vacuum);
    b.finish(Provenance::new(format!("diode({order})")))
}

/// One root of the bistability cubic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicRoot {
    pub n_bar: f64,
    pub x: Option<[f64; 2]>,
    pub is_real: bool,
    pub branch: usize,
}

/// Roots of `ig₀x³ + iBx = C` from the closed form and a companion matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicRoots {
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub closed_form: Vec<CubicRoot>,
    pub companion: Vec<CubicRoot>,
    pub degenerate: bool,
}

/// `B = g₀(m̄+1)√m̄ + (g₀+Ω-Δ) + iγ/2` and `C = √m̄ α`.
pub fn cubic_coefficients(g0: f64, omega_m: f64, detuning: f64, gamma: f64, m_bar: f64, alpha: Complex64) -> (Complex64, Complex64) {
    let r = m_bar.sqrt();
    let b = Complex64::new(g0 * (m_bar + 1.0) * r + (g0 + omega_m - detuning), gamma / 2.0);
    (b, r * alpha)
}

const REAL_TOL: f64 = 1e-9;

fn root_record(x: Complex64, branch: usize) -> CubicRoot {
    CubicRoot {
        n_bar: x.norm_sqr(),
        x: Some([x.re, x.im]),
        is_real: x.im.abs() <= REAL_TOL * x.norm().max(f64::MIN_POSITIVE) || x.im == 0.0,
        branch,
    }
}

/// Roots of `x³ + px + q` by companion-matrix eigenvalues, Newton-polished.
pub fn depressed_cubic_roots(p: Complex64, q: Complex64) -> Result<[Complex64; 3]> {
    let z = Complex64::zero();
    let one = Complex64::new(1.0, 0.0);
    let comp = DMatrix::from_row_slice(3, 3, &[z, z, -q, one, z, -p, z, one, z]);
    let ev = eigenvalues(&comp)?;
    let mut roots = [ev[0], ev[1], ev[2]];
    for r in &mut roots {
        for _ in 0..3 {
            let f = *r * *r * *r + p * *r + q;
            let df = 3.0 * *r * *r + p;
            if df.norm() == 0.0 {
                break;
            }
            let next = *r - f / df;
            if !(next.re.is_finite() && next.im.is_finite()) {
                break;
            }
            let fn_ = next * next * next + p * next + q;
            if fn_.norm() < f.norm() {
                *r = next;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Solves the bistability cubic for the given parameters.
pub fn photon_number_cubic(p: &ModelParams) -> Result<CubicRoots> {
    let g0 = p.req(p.g0, "g0")?;
    if g0 <= 0.0 {
        return Err(Error::InvalidParameter("g0 must be positive".into()));
    }
    let big = p.req(p.omega_m, "omega_m")?;
    let delta = p.req(p.detuning, "detuning")?;
    // γ = κ + Γ_m
    let gamma = p.rate(Some(p.kappa.unwrap_or(0.0)), "kappa")? + p.rate(Some(p.gamma_m.unwrap_or(0.0)), "gamma_m")?;
    let m_bar = p.mechanical_occupation()?;
    let alpha = p.complex(p.alpha, "alpha")?;
    let (b, c) = cubic_coefficients(g0, big, delta, gamma, m_bar, alpha);
    cubic_roots(g0, b, c)
}

/// Closed-form and companion roots of `ig₀x³ + iBx = C`.
pub fn cubic_roots(g0: f64, b: Complex64, c: Complex64) -> Result<CubicRoots> {
    let i = Complex64::i();
    let p = b / g0;
    let q = -c / (i * g0);
    let comp = depressed_cubic_roots(p, q)?;
    let companion: Vec<CubicRoot> = comp.iter().enumerate().map(|(k, x)| root_record(*x, k)).collect();
    if c.norm() == 0.0 {
        // x(g₀x² + B) = 0
        let s = (-b / g0).sqrt();
        let closed = [Complex64::zero(), s, -s].iter().enumerate().map(|(k, x)| root_record(*x, k)).collect();
        return Ok(CubicRoots { b: [b.re, b.im], c: [c.re, c.im], closed_form: closed, companion, degenerate: true });
    }
    let r = 1.0 - 4.0 * b * b * b / (27.0 * g0 * c * c);
    // 1 - √r rewritten as (1 - r)/(1 + √r) to avoid cancellation.
    let one_minus = (1.0 - r) / (1.0 + r.sqrt());
    let z = (9.0 * g0 * g0 * c * one_minus).powf(1.0 / 3.0);
    let z2 = z * z;
    let cb = 12f64.cbrt();
    let s3 = Complex64::new(0.0, 3f64.sqrt());
    let one = Complex64::new(1.0, 0.0);
    let zn = z.norm_sqr();
    let n1 = (cb * g0 * b + z2).norm_sqr() / (3.0 * cb * g0 * g0 * zn);
    let n2 = (cb * (one + s3) * g0 * b + (one - s3) * z2).norm_sqr() / (12.0 * cb * g0 * g0 * zn);
    let n3 = (cb * (one - s3) * g0 * b + (one + s3) * z2).norm_sqr() / (12.0 * cb * g0 * g0 * zn);
    let closed = [n1, n2, n3]
        .iter()
        .enumerate()
        .map(|(k, n)| CubicRoot { n_bar: *n, x: None, is_real: false, branch: k })
        .collect();
    Ok(CubicRoots { b: [b.re, b.im], c: [c.re, c.im], closed_form: closed, companion, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_params() -> ModelParams {
        ModelParams {
            gamma: Some(0.75),
            gamma_1: Some(0.25),
            gamma_2: Some(0.5),
            n_bar: Some(4.0),
            m_bar: Some(9.0),
            ..Default::default()
        }
    }

    #[test]
    fn model_ids_round_trip() {
        for s in ["quad_std_1", "om_std_2", "diode(4)", "amplifier_kerr"] {
            assert_eq!(s.parse::<ModelId>().unwrap().to_string(), s);
        }
        assert!("diode(0)".parse::<ModelId>().is_err());
        assert!("laser".parse::<ModelId>().is_err());
    }

    #[test]
    fn thermal_occupation_values() {
        assert!((bose_factor(2f64.ln()) - 1.0).abs() < 1e-14);
        assert_eq!(thermal_occupation(1e6, 0.0).unwrap(), 0.0);
        let x: f64 = 0.01;
        let series = 1.0 / x - 0.5 + x / 12.0 - x.powi(3) / 720.0;
        assert!((bose_factor(x) - series).abs() < 1e-9);
        assert!((bose_factor(x) - 99.5008).abs() < 1e-4);
    }

    #[test]
    fn linear_photon_number() {
        assert_eq!(photon_number_linear(Complex64::new(1.0, 0.0), 4.0).unwrap(), 1.0);
        assert_eq!(photon_number_linear(Complex64::zero(), 4.0).unwrap(), 0.0);
        assert!((photon_number_linear(Complex64::new(2.0, 1.0), 10.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(photon_number_linear(Complex64::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn quad_std_1_corner_entry() {
        let sys = build_model(&ModelId::QuadStd1, &quad_params()).unwrap();
        let e = sys.exact().unwrap();
        let expected = Coeff::new(-Rational::new(1.into(), 8.into()), -Rational::new(81.into(), 4.into()));
        assert_eq!(e.m[0][0], expected);
    }

    #[test]
    fn diode_without_exponential_is_rc_chain() {
        let p = ModelParams { mu: Some(1.0), kappa: Some(0.0), tau: Some(2.0), v0: Some(1.0), u_bar: Some(0.3), ..Default::default() };
        let sys = build_model(&ModelId::Diode(4), &p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v = sys.m[(i, j)];
                if i == j {
                    assert_eq!(v, Complex64::new(-((i + 1) as f64) / 2.0, 0.0));
                } else {
                    assert_eq!(v, Complex64::zero());
                }
            }
        }
    }

    #[test]
    fn diode_orders_embed() {
        let p = ModelParams { mu: Some(1.0), kappa: Some(1.0), tau: Some(1.0), v0: Some(1.0), u_bar: Some(0.2), ..Default::default() };
        let small = build_model(&ModelId::Diode(3), &p).unwrap();
        let big = build_model(&ModelId::Diode(4), &p).unwrap();
        assert_eq!(big.exact().unwrap().m[..3].iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>(), small.exact().unwrap().m);
    }

    #[test]
    fn cubic_degenerate_factorization() {
        let r = cubic_roots(2.0, Complex64::new(-8.0, 0.0), Complex64::zero()).unwrap();
        assert!(r.degenerate);
        let mut n: Vec<f64> = r.closed_form.iter().map(|c| c.n_bar).collect();
        n.sort_by(f64::total_cmp);
        assert_eq!(n[0], 0.0);
        assert!((n[1] - 4.0).abs() < 1e-12 && (n[2] - 4.0).abs() < 1e-12);
        assert!(r.closed_form.iter().all(|c| c.is_real));
    }

    #[test]
    fn wrong_order_is_rejected() {
        let p = ModelParams { order: Some(2), ..quad_params() };
        assert!(matches!(build_model(&ModelId::QuadStd1, &p), Err(Error::Unsupported(_))));
        assert!(matches!(build_model(&ModelId::QuadStd1, &ModelParams::default()), Err(Error::MissingParameter(_))));
    }
}
