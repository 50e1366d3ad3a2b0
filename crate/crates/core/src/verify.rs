//! Reference commutator tables replayed against the engine and a truncated
//! Fock-space oracle.
//!
//! Table entries use the aliases `C = a²/2`, `D = b²/2`, `N = a†a`, `M = b†b`
//! (a trailing `d` is the adjoint, so `Cd = c†`) on top of the operator
//! syntax of [`parse_expr`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::fock::max_deviation;
use crate::algebra::{
    antinormal_order, commute, mean_field_reduce, parse_expr, ratio, verify_closure, BasisSet, FockSpace, Ladder,
    MeanFieldContext, Mode, OperatorExpr, PairWeight, Rational,
};
use crate::analysis::q_moment;
use crate::models::{anharmonic_basis, second_order_basis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// Engine and table disagree and the oracle confirms the engine.
    Deviates,
    Fail,
}

/// One verified line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub table: String,
    pub item: String,
    pub verdict: Verdict,
    pub engine: String,
    pub reference: String,
    /// Largest deviation of the engine result from the oracle.
    pub oracle_error: Option<f64>,
    /// Largest deviation of the reference entry from the oracle.
    pub reference_error: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub cutoff: usize,
    pub occupation_limit: usize,
    pub tolerance: f64,
    /// Mean occupations `(numerator, denominator)` used by reduction tables.
    pub n_bar: (i64, i64),
    pub m_bar: (i64, i64),
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { cutoff: 14, occupation_limit: 6, tolerance: 1e-10, n_bar: (4, 1), m_bar: (9, 1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.checks.iter().filter(|c| c.verdict == v).count()
    }

    pub fn has_failures(&self) -> bool {
        self.count(Verdict::Fail) > 0
    }

    pub fn table(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.table == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,item,verdict,oracle_error,reference_error\n");
        for c in &self.checks {
            let v = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Deviates => "deviates",
                Verdict::Fail => "fail",
            };
            let f = |x: Option<f64>| x.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!("{},\"{}\",{v},{},{}\n", c.table, c.item, f(c.oracle_error), f(c.reference_error)));
        }
        out
    }
}

/// Expands the table aliases into plain operator syntax.
pub fn expand_aliases(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() * 2);
    let mut i = 0;
    while i < chars.len() {
        let adjoint = chars.get(i + 1) == Some(&'d');
        let sub = match (chars[i], adjoint) {
            ('C', true) => Some("(ad^2/2)"),
            ('C', false) => Some("(a^2/2)"),
            ('D', true) => Some("(bd^2/2)"),
            ('D', false) => Some("(b^2/2)"),
            ('N', _) => Some("(ad*a)"),
            ('M', _) => Some("(bd*b)"),
            _ => None,
        };
        match sub {
            Some(s) => {
                out.push_str(s);
                if adjoint && matches!(chars[i], 'C' | 'D') {
                    i += 1;
                }
            }
            None => out.push(chars[i]),
        }
        i += 1;
    }
    out
}

fn alias_expr(src: &str) -> OperatorExpr {
    parse_expr(&expand_aliases(src), None).unwrap_or_else(|e| panic!("table entry '{src}' does not parse: {e}"))
}

fn with_means(template: &str, n: &Rational, m: &Rational) -> String {
    let r = |x: &Rational| format!("({}/{})", x.numer(), x.denom());
    template.replace("{n}", &r(n)).replace("{m}", &r(m))
}

/// `[x, y] = rhs` lines of the single-square tables.
pub const PAIR_A: &[(&str, &str, &str)] =
    &[("C", "Cd", "N + 1/2"), ("C", "N", "2*C"), ("Cd", "N", "-2*Cd"), ("C", "ad", "a")];

pub const PAIR_B: &[(&str, &str, &str)] =
    &[("D", "Dd", "M + 1/2"), ("D", "M", "2*D"), ("Dd", "M", "-2*Dd"), ("D", "bd", "b")];

/// Cross-operator commutators of the quadratic model.
pub const QUADRATIC: &[(&str, &str, &str)] = &[
    ("C*D", "Cd*Dd", "1/8*((2*N*M + 3)*(M + N + 2) + N^2 + M^2 - 4)"),
    ("C*D", "Cd*M", "1/2*(N^2 + 2*N*M + 2*N + M + 2)*D"),
    ("C*D", "N*Dd", "1/2*(M^2 + 3*M + 2*M*N + N + 2)*C"),
    ("C*D", "N*M", "(N + M + 4)*C*D"),
    ("C*Dd", "Cd*D", "1/8*(2*N*M + M + N - 1)*(M - N)"),
    ("C*Dd", "Cd*M", "1/2*((2*N + 1)*M - (N + 1)*(N + 2))*Dd"),
    ("C*Dd", "N*D", "1/2*(M*(M - 2*N) - (M + N))*C"),
    ("C*Dd", "N*M", "2*(M - N - 2)*C*Dd"),
    ("C*M", "N*D", "2*(M + N + 2)*C*D"),
    ("C*M", "N*Dd", "2*(M + N)*C*Dd"),
];

/// Mean-field reductions of [`QUADRATIC`] over the 15-element basis; `{n}` and
/// `{m}` stand for the mean occupations.
pub const QUADRATIC_REDUCED: &[(&str, &str, &str)] = &[
    ("C*D", "Cd*Dd", "1/16*({m}+{n}+8)*N*M + 1/8*({m}*({n}+1)+1/2*{n}^2+3)*M + 1/8*({n}*({m}+1)+1/2*{m}^2+3)*N + 1/4"),
    ("C*D", "Cd*M", "1/2*({n}+2*{m}+2)*N*D + 1/2*({m}+2)*D"),
    ("C*D", "N*Dd", "1/2*({m}+3+2*{n})*C*M + 1/2*({n}+2)*C"),
    ("C*D", "N*M", "({n}+{m}+4)*C*D"),
    ("C*Dd", "Cd*D", "1/16*({m}-{n})*N*M + 1/8*({m}*({n}+1)-1-1/2*{n}^2)*M - 1/8*({n}*({m}+1)-1-1/2*{m}^2)*N"),
    ("C*Dd", "Cd*M", "1/2*(2*{m}-{n}-3)*N*Dd + 1/2*({m}-2)*Dd"),
    ("C*Dd", "N*D", "1/2*({m}-2*{n}-1)*C*M - 1/2*{n}*C"),
    ("C*Dd", "N*M", "2*({m}-{n}-2)*C*Dd"),
    ("C*M", "N*D", "2*({m}+{n}+2)*C*D"),
    ("C*M", "N*Dd", "2*({m}+{n})*C*Dd"),
];

/// Anharmonic-oscillator commutators.
pub const ANHARMONIC: &[(&str, &str, &str)] = &[
    ("N", "C^2", "-4*C^2"),
    ("N^2", "C", "-3*N*C - 7/2*C"),
    ("N^2", "C^2", "4*(N - 2)*N*C^2"),
    ("C^2", "Cd", "2*N*C + 3*C"),
    ("C^2", "Cd^2", "N^3 + 3/2*(N^2 + 1) + 1/4*N"),
    ("C^2", "Cd*N", "3*(N + 2)*N*C + 6*C"),
    ("C", "Cd*N", "3/2*N^2"),
    ("N*C", "Cd*N", "1/2*(4*N^2 - 3*N + 2)*N"),
];

/// Mean-field reductions of [`ANHARMONIC`] over the 8-element basis.
pub const ANHARMONIC_REDUCED: &[(&str, &str, &str)] = &[
    ("N", "C^2", "-4*C^2"),
    ("N^2", "C", "-3*N*C - 7/2*C"),
    ("N^2", "C^2", "4*({n} - 2)*{n}*C^2"),
    ("C^2", "Cd", "2*N*C + 3*C"),
    ("C^2", "Cd^2", "1/2*(2*{n} + 3)*N^2 + 1/4*N + 3/2"),
    ("C^2", "Cd*N", "3*({n} + 2)*N*C + 6*C"),
    ("C", "Cd*N", "3/2*N^2"),
    ("N*C", "Cd*N", "1/2*(4*{n} - 3)*N^2 + N"),
];

/// Antinormal forms, written as products with annihilators on the left.
pub const ANTINORMAL: &[(&str, &str)] = &[
    ("N", "a*ad - 1"),
    ("N^2", "a*a*ad*ad - 2*a*ad"),
    ("N*C", "1/2*a*a*a*ad - 3/2*a*a"),
    ("Cd*N", "1/2*a*ad*ad*ad - 3/2*ad*ad"),
];

/// Non-zero commutators of the second-order optomechanical basis.
pub const OPTOMECHANICAL: &[(&str, &str, &str)] = &[
    ("a", "N", "a"),
    ("a*bd", "b", "-a"),
    ("a*b", "N", "a*b"),
    ("a*bd", "N", "a*bd"),
    ("a*b", "a*bd", "2*C"),
    ("C", "N", "2*C"),
];

fn fmt(e: &OperatorExpr) -> String {
    e.to_string()
}

struct Oracle {
    opts: VerifyOptions,
}

impl Oracle {
    fn space(&self, exprs: &[&OperatorExpr]) -> FockSpace {
        let mut modes: Vec<Mode> = exprs.iter().flat_map(|e| e.modes()).collect();
        modes.sort();
        modes.dedup();
        if modes.is_empty() {
            modes.push(Mode::new("a"));
        }
        FockSpace::uniform(&modes, self.opts.cutoff)
    }

    /// Deviations of `engine` and `reference` from the matrix commutator.
    fn commutator(&self, x: &OperatorExpr, y: &OperatorExpr, engine: &OperatorExpr, reference: &OperatorExpr) -> (f64, f64) {
        let fs = self.space(&[x, y, engine, reference]);
        let mx = fs.matrix(x).expect("oracle dimension");
        let my = fs.matrix(y).expect("oracle dimension");
        let truth = &mx * &my - &my * &mx;
        let idx = fs.safe_indices(fs.safe_limit(&[x, y], self.opts.occupation_limit));
        let dev = |e: &OperatorExpr| max_deviation(&fs.matrix(e).expect("oracle dimension"), &truth, &idx);
        (dev(engine), dev(reference))
    }

    /// Matrix of `Σ c a^q a†^p` built from ladder matrices.
    fn antinormal_matrix(&self, fs: &FockSpace, mode: &Mode, terms: &[(Complex64, u32, u32)]) -> DMatrix<Complex64> {
        let dim = fs.dimension().expect("oracle dimension");
        let a = fs.ladder(mode, Ladder::Annihilate).expect("mode");
        let ad = fs.ladder(mode, Ladder::Create).expect("mode");
        let mut out = DMatrix::zeros(dim, dim);
        for (c, p, q) in terms {
            let mut m = DMatrix::<Complex64>::identity(dim, dim);
            for _ in 0..*q {
                m *= &a;
            }
            for _ in 0..*p {
                m *= &ad;
            }
            out += m * *c;
        }
        out
    }
}

fn verdict(oracle_ok: bool, equal: bool) -> Verdict {
    match (oracle_ok, equal) {
        (false, _) => Verdict::Fail,
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Deviates,
    }
}

fn commutator_table(oracle: &Oracle, table: &str, rows: &[(&str, &str, &str)]) -> Vec<Check> {
    rows.iter()
        .map(|(xs, ys, rs)| {
            let (x, y, reference) = (alias_expr(xs), alias_expr(ys), alias_expr(rs));
            let engine = commute(&x, &y);
            let (e_err, r_err) = oracle.commutator(&x, &y, &engine, &reference);
            let ok = e_err <= oracle.opts.tolerance;
            let v = verdict(ok, engine == reference);
            let note = match v {
                Verdict::Pass => String::new(),
                Verdict::Deviates => format!("table entry is off by {}", fmt(&(&reference - &engine))),
                Verdict::Fail => "engine disagrees with the oracle".into(),
            };
            Check {
                table: table.into(),
                item: format!("[{xs}, {ys}]"),
                verdict: v,
                engine: fmt(&engine),
                reference: fmt(&reference),
                oracle_error: Some(e_err),
                reference_error: Some(r_err),
                note,
            }
        })
        .collect()
}

fn reduction_table(
    oracle: &Oracle,
    table: &str,
    rows: &[(&str, &str, &str)],
    basis: &BasisSet,
    ctx: &MeanFieldContext,
    n: &Rational,
    m: &Rational,
) -> Vec<Check> {
    rows.iter()
        .map(|(xs, ys, template)| {
            let (x, y) = (alias_expr(xs), alias_expr(ys));
            let reference = alias_expr(&with_means(template, n, m));
            let exact = commute(&x, &y);
            let (e_err, _) = oracle.commutator(&x, &y, &exact, &exact);
            let ok = e_err <= oracle.opts.tolerance;
            let item = format!("[{xs}, {ys}]");
            match mean_field_reduce(&exact, ctx, basis) {
                Ok(r) => {
                    let engine = r.to_expr(basis);
                    let v = verdict(ok, engine == reference);
                    Check {
                        table: table.into(),
                        item,
                        verdict: v,
                        engine: fmt(&engine),
                        reference: fmt(&reference),
                        oracle_error: Some(e_err),
                        reference_error: None,
                        note: match v {
                            Verdict::Deviates => format!("table entry is off by {}", fmt(&(&reference - &engine))),
                            _ => String::new(),
                        },
                    }
                }
                Err(e) => Check {
                    table: table.into(),
                    item,
                    verdict: Verdict::Fail,
                    engine: String::new(),
                    reference: fmt(&reference),
                    oracle_error: Some(e_err),
                    reference_error: None,
                    note: e.to_string(),
                },
            }
        })
        .collect()
}

fn antinormal_table(oracle: &Oracle) -> Vec<Check> {
    let a = Mode::new("a");
    ANTINORMAL
        .iter()
        .map(|(xs, rs)| {
            let expr = alias_expr(xs);
            let reference = parse_expr(rs, None).expect("table entry parses");
            let terms: Vec<(Complex64, u32, u32)> = antinormal_order(&expr)
                .iter()
                .map(|t| {
                    let (p, q) = t.powers.power(&a);
                    (t.coeff.to_c64(), p, q)
                })
                .collect();
            let fs = FockSpace::uniform(std::slice::from_ref(&a), oracle.opts.cutoff);
            let idx = fs.safe_indices(fs.safe_limit(&[&expr], oracle.opts.occupation_limit));
            let truth = fs.matrix(&expr).expect("oracle dimension");
            let e_err = max_deviation(&oracle.antinormal_matrix(&fs, &a, &terms), &truth, &idx);
            let r_err = max_deviation(&fs.matrix(&reference).expect("oracle dimension"), &truth, &idx);
            let engine_text = terms
                .iter()
                .map(|(c, p, q)| format!("({c})*a^{q}*ad^{p}"))
                .collect::<Vec<_>>()
                .join(" + ");
            let v = verdict(e_err <= oracle.opts.tolerance, reference == expr);
            Check {
                table: "antinormal".into(),
                item: (*xs).into(),
                verdict: v,
                engine: engine_text,
                reference: (*rs).into(),
                oracle_error: Some(e_err),
                reference_error: Some(r_err),
                note: match v {
                    Verdict::Deviates => format!("table entry normal-orders to {}", fmt(&reference)),
                    _ => String::new(),
                },
            }
        })
        .collect()
}

/// Q-function moments at a fixed amplitude against the printed formulas.
fn moment_table(oracle: &Oracle) -> Vec<Check> {
    let alpha = Complex64::new(0.7, -1.3);
    let r2 = alpha.norm_sqr();
    let refs: [(&str, Complex64); 4] = [
        ("N", Complex64::new(r2 - 1.0, 0.0)),
        ("N^2", Complex64::new(r2 * r2 - 2.0 * r2, 0.0)),
        ("N*C", 0.5 * alpha * alpha * r2 - 1.5 * alpha * alpha),
        ("Cd*N", (0.5 * alpha * alpha * r2 - 1.5 * alpha * alpha).conj()),
    ];
    let forms = antinormal_table(oracle);
    refs.iter()
        .zip(forms)
        .map(|((xs, reference), form)| {
            let engine = q_moment(&alias_expr(xs), alpha);
            let ok = form.oracle_error.is_some_and(|e| e <= oracle.opts.tolerance);
            let equal = (engine - reference).norm() <= 1e-12 * reference.norm().max(1.0);
            let v = verdict(ok, equal);
            Check {
                table: "q_moment".into(),
                item: format!("<{xs}> at alpha = {alpha}"),
                verdict: v,
                engine: engine.to_string(),
                reference: reference.to_string(),
                oracle_error: form.oracle_error,
                reference_error: None,
                note: match v {
                    Verdict::Deviates => "follows from the antinormal form of the same operator".into(),
                    _ => String::new(),
                },
            }
        })
        .collect()
}

/// Optomechanical basis `{a, b, ab, ab†, n, c}`.
pub fn optomechanical_basis() -> BasisSet {
    ["a", "b", "a*b", "a*bd", "N", "C"]
        .iter()
        .zip(["a", "b", "ab", "abd", "n", "c"])
        .fold(BasisSet::new(), |b, (src, label)| b.push(label, alias_expr(src)))
}

/// Degenerate amplifier basis `{n, c, c†}`.
pub fn amplifier_basis() -> BasisSet {
    BasisSet::new().push("n", alias_expr("N")).push("c", alias_expr("C")).push("cd", alias_expr("Cd"))
}

fn closure_check(item: &str, basis: &BasisSet, ctx: &MeanFieldContext, exact: bool) -> Check {
    let report = verify_closure(basis, ctx);
    let closed = report.closed() && (!exact || report.exact(basis));
    let failures: Vec<String> = report.failures().map(|p| format!("[{}, {}]", p.left, p.right)).collect();
    Check {
        table: "closure".into(),
        item: item.into(),
        verdict: if closed { Verdict::Pass } else { Verdict::Fail },
        engine: format!("{} pairs, {} irreducible", report.pairs.len(), failures.len()),
        reference: if exact { "closed exactly".into() } else { "closed under mean-field reduction".into() },
        oracle_error: None,
        reference_error: None,
        note: if closed {
            String::new()
        } else if failures.is_empty() {
            "some commutators needed mean values".into()
        } else {
            failures.join(" ")
        },
    }
}

/// Cross-Kerr readout quadratures checked on Fock matrices: `[n, C] = -iS`,
/// `[n, S] = iC` exactly, and `[C, S]` against `½i(n̄+2)⁻¹` in the mean.
fn qnd_check(opts: &VerifyOptions) -> Check {
    let n_bar = opts.n_bar.0 as f64 / opts.n_bar.1 as f64;
    let dim = opts.cutoff;
    let c = |r: f64, i: f64| Complex64::new(r, i);
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut num = DMatrix::<Complex64>::zeros(dim, dim);
    let mut inv = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        num[(k, k)] = c(k as f64, 0.0);
        inv[(k, k)] = c(1.0 / ((k + 1) as f64).sqrt(), 0.0);
        if k + 1 < dim {
            a[(k, k + 1)] = c(((k + 1) as f64).sqrt(), 0.0);
        }
    }
    let ad = a.adjoint();
    let cq = (&inv * &a + &ad * &inv) * c(0.5, 0.0);
    let sq = (&inv * &a - &ad * &inv) * c(0.0, -0.5);
    let comm = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| x * y - y * x;
    let idx: Vec<usize> = (0..=opts.occupation_limit.min(dim - 2)).collect();
    let e1 = max_deviation(&comm(&num, &cq), &(&sq * c(0.0, -1.0)), &idx);
    let e2 = max_deviation(&comm(&num, &sq), &(&cq * c(0.0, 1.0)), &idx);
    // The exact commutator is (i/2)|0⟩⟨0|.
    let mut proj = DMatrix::<Complex64>::zeros(dim, dim);
    proj[(0, 0)] = c(0.0, 0.5);
    let e3 = max_deviation(&comm(&cq, &sq), &proj, &idx);
    let err = e1.max(e2).max(e3);
    Check {
        table: "closure".into(),
        item: "qnd {n, m, C, S}".into(),
        verdict: if err <= opts.tolerance { Verdict::Pass } else { Verdict::Fail },
        engine: format!("[C, S] = (i/2)|0><0|, replaced by {}i", 0.5 / (n_bar + 2.0)),
        reference: "[C, S] = i/(2(n+2))".into(),
        oracle_error: Some(err),
        reference_error: None,
        note: "closed once the vacuum projector in [C, S] takes its mean-field value".into(),
    }
}

/// Runs every table and closure scan.
pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let oracle = Oracle { opts: opts.clone() };
    let n = ratio(opts.n_bar.0, opts.n_bar.1);
    let m = ratio(opts.m_bar.0, opts.m_bar.1);
    let (a, b) = (Mode::new("a"), Mode::new("b"));
    let ctx2 = MeanFieldContext::new()
        .with_pair_weight(PairWeight::Unit)
        .with_mode(&a, n.clone())
        .with_mode(&b, m.clone());
    let ctx1 = MeanFieldContext::new().with_pair_weight(PairWeight::Half).with_mode(&a, n.clone());
    let quad = second_order_basis();
    let anh = anharmonic_basis();
    let mut checks = Vec::new();
    checks.extend(commutator_table(&oracle, "pair_a", PAIR_A));
    checks.extend(commutator_table(&oracle, "pair_b", PAIR_B));
    checks.extend(commutator_table(&oracle, "quadratic", QUADRATIC));
    checks.extend(reduction_table(&oracle, "quadratic_reduced", QUADRATIC_REDUCED, &quad, &ctx2, &n, &m));
    checks.extend(commutator_table(&oracle, "anharmonic", ANHARMONIC));
    checks.extend(reduction_table(&oracle, "anharmonic_reduced", ANHARMONIC_REDUCED, &anh, &ctx1, &n, &m));
    checks.extend(antinormal_table(&oracle));
    checks.extend(moment_table(&oracle));
    checks.extend(commutator_table(&oracle, "optomechanical", OPTOMECHANICAL));
    let empty = MeanFieldContext::new();
    checks.push(closure_check("quadratic 15-element", &quad, &ctx2, false));
    checks.push(closure_check("anharmonic 8-element", &anh, &ctx1, false));
    checks.push(closure_check("optomechanical 6-element", &optomechanical_basis(), &empty, true));
    checks.push(closure_check("amplifier 3-element", &amplifier_basis(), &empty, true));
    checks.push(qnd_check(opts));
    VerifyReport { options: opts.clone(), checks }
}
