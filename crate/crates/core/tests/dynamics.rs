use hilange_core::assembler::{LinearLangevinSystem, Port, Provenance};
use hilange_core::spectral::{scattering_matrix, NoiseModel};
use hilange_core::timedomain::{integrate_ode, integrate_sde, SdeRun};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn port(i: usize) -> Port {
    Port { label: format!("x{i}_in"), channel: format!("x{i}"), dagger: false, noise: "vac".into() }
}

/// `M = -iH - W Wᵀ / 2` for Hermitian `H`.
fn passive(h: [f64; 4], w: [f64; 4]) -> LinearLangevinSystem {
    let hm = DMatrix::from_row_slice(2, 2, &[
        Complex64::new(h[0], 0.0),
        Complex64::new(h[2], h[3]),
        Complex64::new(h[2], -h[3]),
        Complex64::new(h[1], 0.0),
    ]);
    let wm = DMatrix::from_row_slice(2, 2, &w);
    let wc = wm.map(|x| Complex64::new(x, 0.0));
    let m = hm * Complex64::new(0.0, -1.0) - &wc * wc.transpose() * Complex64::new(0.5, 0.0);
    LinearLangevinSystem::new(vec!["x0".into(), "x1".into()], m, DVector::zeros(2), wm, vec![port(0), port(1)], Provenance::new("passive"))
        .unwrap()
        .with_noise_model("vac", NoiseModel::Vacuum)
}

fn weights() -> impl Strategy<Value = [f64; 4]> {
    [0.5f64..2.0, -0.5f64..0.5, -0.5f64..0.5, 0.5f64..2.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn passive_scattering_is_unitary(h in [-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0, -1.0f64..1.0], w in weights(), omega in -10.0f64..10.0) {
        let sys = passive(h, w);
        let s = scattering_matrix(&sys, omega).unwrap();
        let err = (s.adjoint() * &s - DMatrix::identity(2, 2)).norm();
        prop_assert!(err < 1e-9, "{}", err);
    }

    #[test]
    fn deterministic_evolution_is_linear(h in [-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0, -1.0f64..1.0], w in weights(), c in -3.0f64..3.0) {
        let sys = passive(h, w);
        let mut run = SdeRun::new(1e-2, 1.0);
        run.initial = Some(vec![[1.0, 0.0], [0.0, 1.0]]);
        let base = integrate_ode(&sys, &run).unwrap();
        run.initial = Some(vec![[c, 0.0], [0.0, c]]);
        let scaled = integrate_ode(&sys, &run).unwrap();
        for k in 0..2 {
            for (x, y) in base.mean[k].iter().zip(&scaled.mean[k]) {
                prop_assert!((x * c - y).norm() < 1e-12 * (1.0 + y.norm()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sde_is_reproducible_per_seed(seed in any::<u64>()) {
        let sys = passive([0.5, -0.5, 0.2, 0.1], [1.0, 0.0, 0.0, 1.0]);
        let mut run = SdeRun::new(1e-2, 0.5);
        run.trajectories = 70;
        run.seed = seed;
        let a = integrate_sde(&sys, &run).unwrap();
        let b = integrate_sde(&sys, &run).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        run.seed = seed.wrapping_add(1);
        let c = integrate_sde(&sys, &run).unwrap();
        prop_assert_ne!(a.to_csv(), c.to_csv());
    }
}
