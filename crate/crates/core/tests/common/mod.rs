#![allow(dead_code)]

use hilange_core::models::ModelParams;
use hilange_core::Coeff;

pub fn c(re: f64, im: f64) -> Coeff {
    Coeff::from_f64(re, im).expect("finite")
}

pub fn zero() -> Coeff {
    c(0.0, 0.0)
}

/// Quadratic-coupling parameters with dyadic values so every entry is exact.
pub fn quad_params() -> ModelParams {
    ModelParams {
        gamma: Some(0.75),
        gamma_1: Some(0.25),
        gamma_2: Some(0.5),
        n_bar: Some(4.0),
        m_bar: Some(9.0),
        ..Default::default()
    }
}

/// Optomechanical parameters with `√n̄ = 2`.
pub fn om_params() -> ModelParams {
    ModelParams {
        detuning: Some(0.5),
        omega_m: Some(10.0),
        kappa: Some(1.0),
        gamma_m: Some(0.25),
        g0: Some(0.5),
        n_bar: Some(4.0),
        m_bar: Some(2.0),
        ..Default::default()
    }
}

/// Matrix over `{a, d, d†, m}` as printed for the first-order standard model.
pub fn quad_std_1_rows(p: &ModelParams) -> Vec<Vec<Coeff>> {
    let (g, g1, g2) = (p.gamma.unwrap(), p.gamma_1.unwrap(), p.gamma_2.unwrap());
    let (n, m) = (p.n_bar.unwrap(), p.m_bar.unwrap());
    let a = n.sqrt();
    let dd = 0.5 * (m + 0.5) * g2;
    vec![
        vec![c(-0.5 * g1, -3.0 * g * m), c(0.0, -g * a), c(0.0, -g * a), zero()],
        vec![zero(), c(-dd, -4.0 * g * n), zero(), c(0.0, -2.0 * g * n)],
        vec![zero(), zero(), c(-dd, 4.0 * g * n), c(0.0, 2.0 * g * n)],
        vec![zero(), c(0.0, 4.0 * g * n), c(0.0, -4.0 * g * n), zero()],
    ]
}

/// Matrix over `{c, c†, n, d, d†, m}` as printed for the full first-order model.
pub fn quad_full_1_rows(p: &ModelParams) -> Vec<Vec<Coeff>> {
    let (g, g1, g2) = (p.gamma.unwrap(), p.gamma_1.unwrap(), p.gamma_2.unwrap());
    let (n, m) = (p.n_bar.unwrap(), p.m_bar.unwrap());
    let (dc, dd) = ((2.0 * n + 1.0) / 4.0 * g1, (2.0 * m + 1.0) / 4.0 * g2);
    let (xn, xm) = (2.0 * g * (2.0 * n + 1.0), 2.0 * g * (2.0 * m + 1.0));
    let i = |v: f64| c(0.0, v);
    vec![
        vec![c(-dc, -8.0 * g * m), zero(), i(-4.0 * g * m), i(-xn), i(-xn), i(-xn)],
        vec![zero(), c(-dc, 8.0 * g * m), i(4.0 * g * m), i(xn), i(xn), i(xn)],
        vec![i(8.0 * g * m), i(-8.0 * g * m), zero(), zero(), zero(), zero()],
        vec![i(-xm), i(-xm), i(-xm), c(-dd, -8.0 * g * n), zero(), i(-4.0 * g * n)],
        vec![i(xm), i(xm), i(xm), zero(), c(-dd, 8.0 * g * n), i(4.0 * g * n)],
        vec![zero(), zero(), zero(), i(8.0 * g * n), i(-8.0 * g * n), zero()],
    ]
}

struct Om {
    delta: f64,
    big: f64,
    kappa: f64,
    gm: f64,
    g0: f64,
    f: f64,
    g: f64,
    l: f64,
}

fn om(p: &ModelParams) -> Om {
    let (g0, n, m) = (p.g0.unwrap(), p.n_bar.unwrap(), p.m_bar.unwrap());
    let g = g0 * n;
    Om {
        delta: p.detuning.unwrap(),
        big: p.omega_m.unwrap(),
        kappa: p.kappa.unwrap(),
        gm: p.gamma_m.unwrap(),
        g0,
        f: g0 * n.sqrt(),
        g,
        l: if p.ultracold { g } else { g + g0 * (m + 1.0) },
    }
}

/// Second-order optomechanical matrix over `{a, b, ab, ab†, n, c}`.
pub fn om_std_2_rows(p: &ModelParams) -> Vec<Vec<Coeff>> {
    let o = om(p);
    let gam = o.kappa + o.gm;
    let i = |v: f64| c(0.0, v);
    vec![
        vec![c(-o.kappa / 2.0, -o.delta), zero(), i(o.g0), i(o.g0), zero(), zero()],
        vec![zero(), c(-o.gm / 2.0, o.big), zero(), zero(), i(o.g0), zero()],
        vec![i(o.l), zero(), c(-gam / 2.0, o.big - o.delta), i(o.g0), zero(), zero()],
        vec![i(o.l), zero(), i(o.g0), c(-gam / 2.0, -(o.big + o.delta)), zero(), zero()],
        vec![zero(), zero(), zero(), zero(), c(-o.kappa, 0.0), zero()],
        vec![zero(), zero(), i(2.0 * o.f), i(2.0 * o.f), zero(), c(-o.kappa, -2.0 * o.delta)],
    ]
}

/// First-order optomechanical matrix and drive over `{a, b, b†}`; the
/// `coupled` variant puts `iF` below the diagonal and has no drive.
pub fn om_std_1_rows(p: &ModelParams, coupled: bool) -> (Vec<Vec<Coeff>>, Vec<Coeff>) {
    let o = om(p);
    let i = |v: f64| c(0.0, v);
    let below = if coupled { i(o.f) } else { zero() };
    let m = vec![
        vec![c(-o.kappa / 2.0, -o.delta), i(o.f), i(o.f)],
        vec![below.clone(), c(-o.gm / 2.0, o.big), zero()],
        vec![zero(), below, c(-o.gm / 2.0, -o.big)],
    ];
    let drive = if coupled { vec![zero(); 3] } else { vec![zero(), i(o.g), i(-o.g)] };
    (m, drive)
}

/// Lists the entries where `got` differs from `want`.
pub fn mismatches(labels: &[String], got: &[Vec<Coeff>], want: &[Vec<Coeff>]) -> Vec<String> {
    let mut out = Vec::new();
    if got.len() != want.len() {
        out.push(format!("dimension {} != {}", got.len(), want.len()));
        return out;
    }
    for (r, (gr, wr)) in got.iter().zip(want).enumerate() {
        for (k, (g, w)) in gr.iter().zip(wr).enumerate() {
            if g != w {
                out.push(format!("({}, {}): {} != {}", labels[r], labels[k], g, w));
            }
        }
    }
    out
}
