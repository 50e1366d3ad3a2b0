mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use hilange_core::analysis::{
    bistability_curve, g2_zero, g2_zero_from_spectrum, laser_threshold, read_sidebands, sideband_asymmetry, Sweep,
};
use hilange_core::assembler::{check_stability, LinearLangevinSystem, Port, Provenance};
use hilange_core::models::{build_model, cubic_roots, truncate_om_second_to_first, ModelId, ModelParams};
use hilange_core::spectral::{
    gaussian_self_convolution, input_noise_spectrum, output_spectra, scattering_matrix, spectrum_integral,
    squared_gaussian_closed_form, FrequencyGrid, NoiseModel, SquaredForm,
};
use hilange_core::timedomain::{integrate_ode, integrate_sde, truncation_convergence, SdeRun, Waveform};
use hilange_core::verify::{self, Verdict, VerifyOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = verify::run(&VerifyOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let in_table = |t: &str| report.table(t).collect::<Vec<_>>();
    let exact_tables = ["pair_a", "pair_b"].iter().all(|t| in_table(t).iter().all(|c| c.verdict == Verdict::Pass));
    let oracle_tables = ["quadratic", "anharmonic", "optomechanical", "quadratic_reduced", "anharmonic_reduced", "antinormal", "q_moment"]
        .iter()
        .all(|t| in_table(t).iter().all(|c| c.verdict != Verdict::Fail));
    let deviates = |t: &str, item: &str| report.table(t).any(|c| c.item == item && c.verdict == Verdict::Deviates);
    let expected = deviates("quadratic", "[C*D, N*M]") && deviates("antinormal", "N^2");
    let listed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.verdict == Verdict::Deviates && matches!(c.table.as_str(), "quadratic" | "anharmonic" | "antinormal"))
        .map(|c| format!("{} {}", c.table, c.item))
        .collect();
    outcome(
        exact_tables && oracle_tables && expected && secs < 10.0,
        format!("{} pass, {} deviate, {} fail in {secs:.2} s; printed-table deviations: {}", report.count(Verdict::Pass), report.count(Verdict::Deviates), report.count(Verdict::Fail), listed.join("; ")),
    )
}

fn criterion_2() -> Outcome {
    let report = verify::run(&VerifyOptions::default());
    let closures: Vec<_> = report.table("closure").collect();
    let ok = closures.len() == 5 && closures.iter().all(|c| c.verdict == Verdict::Pass);
    let names: Vec<String> = closures.iter().map(|c| format!("{} {:?}", c.item, c.verdict)).collect();
    outcome(ok, names.join(", "))
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    let mut compare = |name: &str, sys: &LinearLangevinSystem, want: Vec<Vec<hilange_core::Coeff>>| {
        let m = mismatches(&sys.labels, &sys.exact().expect("exact rows").m, &want);
        if !m.is_empty() {
            bad.push(format!("{name}: {}", m.join(", ")));
        }
    };
    let q = quad_params();
    compare("quad_std_1", &build_model(&ModelId::QuadStd1, &q).unwrap(), quad_std_1_rows(&q));
    compare("quad_full_1", &build_model(&ModelId::QuadFull1, &q).unwrap(), quad_full_1_rows(&q));
    let o = om_params();
    compare("om_std_2", &build_model(&ModelId::OmStd2, &o).unwrap(), om_std_2_rows(&o));
    compare("om_std_1a", &build_model(&ModelId::OmStd1a, &o).unwrap(), om_std_1_rows(&o, false).0);
    compare("om_std_1b", &build_model(&ModelId::OmStd1b, &o).unwrap(), om_std_1_rows(&o, true).0);
    let t = truncate_om_second_to_first(&o).unwrap();
    compare("om_std_2 truncated", &t, om_std_1_rows(&o, false).0);
    let drive_ok = t.exact().unwrap().drive == om_std_1_rows(&o, false).1;
    let pass = bad.is_empty() && drive_ok;
    outcome(pass, if pass { "6 matrices match entrywise in exact arithmetic".into() } else { bad.join("; ") })
}

fn criterion_4() -> Outcome {
    let n = laser_threshold(1.0, 1.0).unwrap();
    let err = (n - (6f64.sqrt() - 2.0)).abs();
    let mut models = BTreeMap::new();
    models.insert("f".to_string(), NoiseModel::CoherentGaussian { chi: 0.1, omega: 5.0, amplitude: 1.0 });
    models.insert("cc".to_string(), NoiseModel::Squared { base: "f".into(), form: SquaredForm::Wick, scale: 0.25 });
    let grid = FrequencyGrid::new(0.0, 20.0, 4001).unwrap().values();
    let s = input_noise_spectrum(&models, "cc", &grid).unwrap();
    let worst = [0.2, 0.45, 0.8, 2.0]
        .iter()
        .map(|&nb| (g2_zero_from_spectrum(&grid, &s, nb).unwrap() - g2_zero(nb, 1.0, 1.0).unwrap()).abs())
        .fold(0.0, f64::max);
    outcome(err <= 1e-9 && worst <= 1e-3, format!("threshold n = {n:.12} (error {err:.1e}); closed vs spectrum g2 max difference {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let (chi, omega) = (0.1, 5.0);
    let mut models = BTreeMap::new();
    models.insert("f".to_string(), NoiseModel::CoherentGaussian { chi, omega, amplitude: 1.0 });
    models.insert("f2".to_string(), NoiseModel::Squared { base: "f".into(), form: SquaredForm::Closed, scale: 1.0 });
    models.insert("ff".to_string(), NoiseModel::Product { left: "f".into(), right: "f".into() });
    let grid = FrequencyGrid::new(0.0, 20.0, 4001).unwrap().values();
    let step = grid[1] - grid[0];
    let s_ff = input_noise_spectrum(&models, "f", &grid).unwrap();
    let s_sq = input_noise_spectrum(&models, "f2", &grid).unwrap();
    let conv = input_noise_spectrum(&models, "ff", &grid).unwrap();
    let i1 = spectrum_integral(&grid, &s_ff).unwrap().value;
    let i2 = spectrum_integral(&grid, &s_sq).unwrap().value;
    let target = 2.0 * chi * chi / PI;
    let rel2 = (i2 - target).abs() / target;
    let peak = grid[s_sq.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    let closed_ok = grid.iter().zip(&s_sq).all(|(&w, &v)| v == squared_gaussian_closed_form(chi, omega, w));
    // The closed form is the self-convolution rescaled to area 2χ²/π.
    let conv_rel = grid
        .iter()
        .zip(&conv)
        .filter(|(&w, _)| (w - 2.0 * omega).abs() <= 4.0 * chi * omega)
        .map(|(&w, &v)| {
            let a = (v - gaussian_self_convolution(chi, omega, 1.0, w)).abs() / gaussian_self_convolution(chi, omega, 1.0, w);
            let b = (v * target - squared_gaussian_closed_form(chi, omega, w)).abs() / squared_gaussian_closed_form(chi, omega, w);
            a.max(b)
        })
        .fold(0.0, f64::max);
    let pass = (i1 - 1.0).abs() <= 1e-6 && rel2 <= 1e-6 && (peak - 2.0 * omega).abs() <= step && closed_ok && conv_rel <= 1e-4;
    outcome(
        pass,
        format!("int S_FF = {i1:.9}; int S_F2F2 relative error {rel2:.1e}; peak at {peak} (2w = {}); self-convolution relative error {conv_rel:.1e}", 2.0 * omega),
    )
}

fn cavity(kappa: f64) -> LinearLangevinSystem {
    let m = DMatrix::from_element(1, 1, Complex64::new(-kappa / 2.0, 0.0));
    let w = DMatrix::from_element(1, 1, kappa.sqrt());
    let port = Port { label: "a_in".into(), channel: "a".into(), dagger: false, noise: "vac".into() };
    LinearLangevinSystem::new(vec!["a".into()], m, DVector::zeros(1), w, vec![port], Provenance::new("cavity")).unwrap()
}

fn criterion_6() -> Outcome {
    let closed = ModelParams { gamma_1: Some(0.0), gamma_2: Some(0.0), ..quad_params() };
    let sys = build_model(&ModelId::QuadStd1, &closed).unwrap();
    let identity = [0.0, 0.3, 7.0].iter().all(|&w| {
        let s = scattering_matrix(&sys, w).unwrap();
        s == DMatrix::identity(s.nrows(), s.ncols())
    });
    let cav = cavity(2.0);
    let res = scattering_matrix(&cav, 0.0).unwrap()[(0, 0)];
    let res_err = (res + 1.0).norm();
    let tail = [-1e6, 1e6].iter().map(|&w| (scattering_matrix(&cav, w).unwrap()[(0, 0)].norm() - 1.0).abs()).fold(0.0, f64::max);
    let tail_near = (scattering_matrix(&cav, 1e6).unwrap()[(0, 0)] - 1.0).norm();
    outcome(
        identity && res_err <= 1e-12 && tail <= 1e-12 && tail_near <= 1e-5,
        format!("closed system S = I: {identity}; S(resonance) = {res:.3} (error {res_err:.1e}); |S| - 1 in tails {tail:.1e}, |S - 1| at 1e6 {tail_near:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g0 = rng.random_range(0.1..2.0);
        let b = Complex64::new(rng.random_range(-10.0..10.0), rng.random_range(0.01..2.0));
        let c = Complex64::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let r = cubic_roots(g0, b, c).unwrap();
        let mut closed: Vec<f64> = r.closed_form.iter().map(|x| x.n_bar).collect();
        let mut comp: Vec<f64> = r.companion.iter().map(|x| x.n_bar).collect();
        closed.sort_by(f64::total_cmp);
        comp.sort_by(f64::total_cmp);
        for (a, b) in closed.iter().zip(&comp) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    let s_curve = ModelParams { g0: Some(1.0), omega_m: Some(0.0), detuning: Some(10.0), m_bar: Some(1.0), ..Default::default() };
    let sweep = Sweep::Alpha { start: 0.0, stop: 15.0, points: 301, phase: PI / 2.0 };
    let curve = bistability_curve(&s_curve, &sweep).unwrap();
    let three: Vec<f64> = curve.sweep.iter().zip(&curve.roots_per_point).filter(|(_, &k)| k == 3).map(|(a, _)| *a).collect();
    let positive = curve.points.iter().all(|p| p.n_bar >= 0.0);
    let secs = start.elapsed().as_secs_f64();
    let interval = match (three.first(), three.last()) {
        (Some(a), Some(b)) => format!("[{a:.2}, {b:.2}]"),
        _ => "none".into(),
    };
    outcome(
        worst <= 1e-8 && !three.is_empty() && positive && secs < 5.0,
        format!("closed vs companion max relative difference {worst:.1e} over 1000 draws; three-root interval in |alpha|: {interval}; {secs:.2} s"),
    )
}

fn diode(kappa: f64) -> ModelParams {
    ModelParams { mu: Some(1.0), kappa: Some(kappa), tau: Some(1.0), v0: Some(1.0), ..Default::default() }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut run = SdeRun::new(1e-4, 10.0);
    run.waveform = Waveform::diode_default();
    run.initial = Some(vec![[1.0, 0.0]]);
    let orders = [2, 3, 4, 5, 6];
    let table = truncation_convergence(&orders, &diode(1.0), &run).unwrap();
    let errs: Vec<f64> = table.rows.iter().map(|r| r.max_error).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    let ratio = errs[4] / errs[0];
    let control = truncation_convergence(&orders, &diode(0.0), &run).unwrap();
    let control_max = control.rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let listed: Vec<String> = table.rows.iter().map(|r| format!("N{}={:.2e}", r.order, r.max_error)).collect();
    outcome(
        monotone && ratio <= 0.1 && control_max <= 1e-12 && secs < 30.0,
        format!("{}; error(6)/error(2) = {ratio:.4}; linear control max error {control_max:.1e}; {secs:.1} s", listed.join(" ")),
    )
}

fn om_asymmetry(g0: f64, detuning: f64) -> ModelParams {
    ModelParams {
        detuning: Some(detuning),
        omega_m: Some(10.0),
        kappa: Some(1.0),
        gamma_m: Some(0.1),
        g0: Some(g0),
        n_bar: Some(4.0),
        m_bar: Some(2.0),
        ..Default::default()
    }
}

fn criterion_9() -> Outcome {
    let grid = FrequencyGrid::new(-20.0, 20.0, 4001).unwrap();
    let on = sideband_asymmetry(&om_asymmetry(0.3, 0.0), &grid).unwrap();
    let off = sideband_asymmetry(&om_asymmetry(0.0, 0.0), &grid).unwrap();
    let r_on = on.ratio.unwrap_or(f64::NAN);
    let r_off = off.ratio.unwrap_or(f64::NAN);
    let side = |d: f64| {
        let sys = build_model(&ModelId::OmStd2, &om_asymmetry(0.3, d)).unwrap();
        read_sidebands(&output_spectra(&sys, &grid).unwrap(), "a_out", 10.0, d).unwrap()
    };
    let (red, blue) = (side(-10.0), side(10.0));
    let differ = (red.density_plus - blue.density_plus).abs() > 1e-6 * red.density_plus.abs().max(blue.density_plus.abs())
        && (red.density_minus - blue.density_minus).abs() > 1e-6 * red.density_minus.abs().max(blue.density_minus.abs());
    outcome(
        (r_on - 1.0).abs() > 0.1 && (r_off - 1.0).abs() <= 1e-9 && differ,
        format!(
            "S(+W)/S(-W) = {r_on:.4} at resonant pump, {r_off:.12} with g0 = 0; red pump ({:.4e}, {:.4e}) vs blue pump ({:.4e}, {:.4e})",
            red.density_plus, red.density_minus, blue.density_plus, blue.density_minus
        ),
    )
}

fn quad_drive(n_bar: f64) -> ModelParams {
    ModelParams {
        gamma: Some(1e-4),
        gamma_1: Some(0.1),
        gamma_2: Some(1e-3),
        m_bar: Some(0.1),
        n_bar: Some(n_bar),
        omega_m: Some(1.0),
        detuning: Some(-1.0),
        self_energy: true,
        ..Default::default()
    }
}

fn criterion_10() -> Outcome {
    let max_re = |id: ModelId, p: &ModelParams| check_stability(&build_model(&id, p).unwrap(), 1e-9).unwrap().max_real_part;
    let low = max_re(ModelId::QuadStd1, &quad_drive(1.0));
    let drives = [0.0, 0.01, 1.0, 10.0, 100.0];
    let full: Vec<f64> = drives.iter().map(|&n| max_re(ModelId::QuadFull1, &quad_drive(n))).collect();
    let flags: Vec<bool> = full.iter().map(|&r| r <= 1e-9).collect();
    let flips = flags[0] && !flags[flags.len() - 1] && flags.windows(2).filter(|w| w[0] != w[1]).count() == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut amp_worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let g = Complex64::from_polar(rng.random_range(0.0..5.0), rng.random_range(0.0..2.0 * PI));
        let p = ModelParams {
            omega: Some(rng.random_range(0.1..10.0)),
            g: Some([g.re, g.im]),
            gamma_2: Some(rng.random_range(0.0..2.0)),
            n_bar: Some(rng.random_range(0.0..10.0)),
            ..Default::default()
        };
        amp_worst = amp_worst.max(max_re(ModelId::Amplifier, &p));
    }
    let listed: Vec<String> = drives.iter().zip(&full).map(|(n, r)| format!("n={n}: {r:.1e}")).collect();
    outcome(
        low <= 1e-9 && flips && amp_worst <= 1e-9,
        format!("first-order standard max Re {low:.1e}; full model max Re by drive {}; amplifier worst {amp_worst:.1e}", listed.join(", ")),
    )
}

fn linear_test_system() -> LinearLangevinSystem {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let m = DMatrix::from_row_slice(2, 2, &[-one, 0.5 * i, 0.5 * i, -2.0 * one]);
    let drive = DVector::from_vec(vec![one, 0.5 * one]);
    let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
    let ports = vec![
        Port { label: "x_in".into(), channel: "x".into(), dagger: false, noise: "vac".into() },
        Port { label: "y_in".into(), channel: "y".into(), dagger: false, noise: "vac".into() },
    ];
    LinearLangevinSystem::new(vec!["x".into(), "y".into()], m, drive, w, ports, Provenance::new("linear test"))
        .unwrap()
        .with_noise_model("vac", NoiseModel::Vacuum)
}

fn criterion_11() -> Outcome {
    let sys = linear_test_system();
    let mut run = SdeRun::new(1e-3, 3.0);
    run.trajectories = 1000;
    run.seed = 11;
    run.record_every = 500;
    run.initial = Some(vec![[1.0, 0.0], [0.0, -1.0]]);
    let sde = integrate_sde(&sys, &run).unwrap();
    let ode = integrate_ode(&sys, &run).unwrap();
    let n = run.trajectories as f64;
    let mut worst: f64 = 0.0;
    for k in 0..sde.labels.len() {
        for j in 1..sde.t.len() {
            let se = (sde.variance[k][j] / n).sqrt();
            let d = (sde.mean[k][j] - ode.mean[k][j]).norm();
            worst = worst.max(d / se);
        }
    }
    let again = integrate_sde(&sys, &run).unwrap();
    let identical = again.to_csv() == sde.to_csv();
    outcome(worst <= 3.0 && identical, format!("largest mean deviation {worst:.2} standard errors; same seed bit-identical: {identical}"))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut failed = 0;
    for (k, f) in criteria {
        let o = f();
        println!("criterion {k}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
