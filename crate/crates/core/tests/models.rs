mod common;

use common::*;
use hilange_core::models::{build_model, truncate_om_second_to_first, ModelId, ModelParams};

fn check(id: ModelId, p: &ModelParams, want: Vec<Vec<hilange_core::Coeff>>) {
    let sys = build_model(&id, p).unwrap();
    let got = &sys.exact().unwrap().m;
    let bad = mismatches(&sys.labels, got, &want);
    assert!(bad.is_empty(), "{id}: {bad:#?}");
}

#[test]
fn first_order_standard_matrix() {
    check(ModelId::QuadStd1, &quad_params(), quad_std_1_rows(&quad_params()));
}

#[test]
fn first_order_standard_noise_weights() {
    let p = quad_params();
    let sys = build_model(&ModelId::QuadStd1, &p).unwrap();
    let w = |row: &str, port: &str| sys.noise_weights[(sys.index_of(row).unwrap(), sys.port_index(port).unwrap())];
    assert_eq!(w("a", "a_in"), 0.5);
    assert_eq!(w("d", "d_in"), 9.5 * 0.5f64.sqrt());
    assert_eq!(w("dd", "d_in_dag"), 9.5 * 0.5f64.sqrt());
    assert!(sys.noise_weights.row(sys.index_of("m").unwrap()).iter().all(|v| *v == 0.0));
}

#[test]
fn first_order_full_matrix() {
    check(ModelId::QuadFull1, &quad_params(), quad_full_1_rows(&quad_params()));
    let zero_bath = ModelParams { n_bar: Some(0.0), m_bar: Some(0.0), ..quad_params() };
    check(ModelId::QuadFull1, &zero_bath, quad_full_1_rows(&zero_bath));
}

#[test]
fn second_order_optomechanics_matrix() {
    check(ModelId::OmStd2, &om_params(), om_std_2_rows(&om_params()));
    let cold = ModelParams { ultracold: true, ..om_params() };
    check(ModelId::OmStd2, &cold, om_std_2_rows(&cold));
}

#[test]
fn first_order_optomechanics_variants() {
    for (id, coupled) in [(ModelId::OmStd1a, false), (ModelId::OmStd1b, true)] {
        let (m, drive) = om_std_1_rows(&om_params(), coupled);
        let sys = build_model(&id, &om_params()).unwrap();
        assert_eq!(sys.exact().unwrap().drive, drive, "{id}");
        check(id, &om_params(), m);
    }
}

#[test]
fn truncation_recovers_first_order() {
    let p = om_params();
    let t = truncate_om_second_to_first(&p).unwrap();
    let (m, drive) = om_std_1_rows(&p, false);
    assert!(mismatches(&t.labels, &t.exact().unwrap().m, &m).is_empty());
    assert_eq!(t.exact().unwrap().drive, drive);
    let direct = build_model(&ModelId::OmStd1a, &p).unwrap();
    assert_eq!(t.noise_weights, direct.noise_weights);
}

#[test]
fn conjugate_rows_are_conjugate() {
    let sys = build_model(&ModelId::QuadStd2, &quad_params()).unwrap();
    let e = sys.exact().unwrap();
    let ix = |l: &str| sys.index_of(l).unwrap();
    let partner = |l: &str| -> String {
        l.split('_')
            .map(|f| match f {
                "c" => "cd",
                "cd" => "c",
                "d" => "dd",
                "dd" => "d",
                x => x,
            })
            .collect::<Vec<_>>()
            .join("_")
    };
    for r in &sys.labels {
        let pr = partner(r);
        let Some(pi) = sys.labels.iter().position(|l| *l == pr) else { continue };
        for k in &sys.labels {
            let Some(pk) = sys.labels.iter().position(|l| *l == partner(k)) else { continue };
            assert_eq!(e.m[ix(r)][ix(k)].conj(), e.m[pi][pk], "({r}, {k})");
        }
    }
}
