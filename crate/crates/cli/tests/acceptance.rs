//! Acceptance gate: one test per release criterion, each printing a
//! single PASS line (the harness line itself is the FAIL signal). The
//! criteria exercise the library and the installed binary end to end,
//! with the stated tolerances and wall-clock budgets.

use std::process::Command;
use std::time::{Duration, Instant};

use nllab_core::experiments::{
    mollification_convergence, remainder_decay, riesz_potential_field, symmetry_check, verify_ibp,
    MembershipPolicy,
};
use nllab_core::fields::{make_bump, make_gaussian, make_inner_power_field, mollify};
use nllab_core::oracle::{compare, oracle_frac_laplacian, PeriodicGrid};
use nllab_core::params::gamma_fn;
use nllab_core::quadrature::integrate_radial;
use nllab_core::{
    frac_laplacian, frac_laplacian_field, remainder_predicted_slope, riesz_potential, Mollifier,
    PowerWeight, ProblemParams, QuadratureSpec, ScalarField, Verdict,
};

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

// --- binary helpers -----------------------------------------------------------------

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_nllab"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

#[derive(Debug)]
struct Row {
    input: String,
    measured: f64,
    expected: Option<f64>,
    verdict: String,
}

fn parse_csv(text: &str) -> Vec<Row> {
    let mut lines = text.lines();
    let header = lines.next().expect("csv has a header");
    assert_eq!(
        header,
        "experiment,d,s,p,gamma0,gamma,input_id,measured,expected,tolerance,error_estimate,verdict"
    );
    lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 12, "malformed row: {line}");
            Row {
                input: cells[6].to_string(),
                measured: cells[7].parse().expect("measured parses"),
                expected: if cells[8].is_empty() {
                    None
                } else {
                    Some(cells[8].parse().expect("expected parses"))
                },
                verdict: cells[11].to_string(),
            }
        })
        .collect()
}

// --- criteria -----------------------------------------------------------------------

// Quadrature evaluations of the operator agree with an independent
// spectral (Fourier) reference on a periodic box: both field shapes, both
// dimensions, three orders, 20 interior points each, max 1e-2 relative
// to the reference's scale, inside two minutes.
#[test]
fn criterion_01_operator_agrees_with_spectral_reference() {
    let t0 = Instant::now();
    let sp = spec();
    let mut worst = 0.0_f64;
    for d in [1usize, 2] {
        let (n, l) = if d == 1 { (8192, 60.0) } else { (1024, 8.0) };
        let grid = PeriodicGrid::new(d, n, l).unwrap();
        let dir = if d == 1 {
            [1.0, 0.0, 0.0]
        } else {
            [0.6_f64.cos(), 0.6_f64.sin(), 0.0]
        };
        for s in [0.25, 0.5, 0.75] {
            let params = ProblemParams::new(d, s, 2.0).unwrap();
            for field in [make_gaussian([0.0; 3], 1.0, d), make_bump([0.0; 3], 1.2, d)] {
                let sampled = grid.sample(&field).unwrap();
                let reference = oracle_frac_laplacian(&sampled, s).unwrap();
                let samples: Vec<([f64; 3], f64)> = (0..20)
                    .map(|j| {
                        let r = 0.1 + 2.4 * j as f64 / 19.0;
                        let x = [dir[0] * r, dir[1] * r, 0.0];
                        let ev = frac_laplacian(&field, x, &params, &sp).unwrap();
                        (x, ev.value)
                    })
                    .collect();
                let stats = compare(&samples, &reference);
                assert!(
                    stats.max_rel <= 1e-2,
                    "d={d} s={s}: max rel {:.3e} above 1e-2",
                    stats.max_rel
                );
                worst = worst.max(stats.max_rel);
            }
        }
    }
    assert!(t0.elapsed() <= Duration::from_secs(120), "over budget");
    println!("criterion 01: PASS — spectral agreement, worst rel {worst:.2e} <= 1e-2");
}

// The closed-form anchor: the operator of the unit Gaussian on the line
// at order one half, evaluated at the origin, equals 2/sqrt(pi).
#[test]
fn criterion_02_gaussian_anchor_value() {
    let params = ProblemParams::new(1, 0.5, 2.0).unwrap();
    let f = make_gaussian([0.0; 3], 1.0, 1);
    let value = frac_laplacian(&f, [0.0; 3], &params, &spec())
        .unwrap()
        .value;
    let anchor = 1.128_379_167_095_512_6_f64; // 2/sqrt(pi)
    assert!(
        (value - anchor).abs() <= 1e-3,
        "origin value {value:.10e} vs anchor {anchor:.10e}"
    );
    println!("criterion 02: PASS — Gaussian anchor within 1e-3");
}

// Dilation identities for both operators, at three scales and ten points
// each, to 1e-6 relative accuracy.
#[test]
fn criterion_03_scaling_identities() {
    let sp = spec();
    let base_points = [0.0, 0.15, 0.3, 0.45, 0.6, 1.0, 1.3, 1.7, 2.2, 3.0];
    let mut worst = 0.0_f64;

    // Differential side: L[f(./R)](R u) = R^{-2s} (L f)(u).
    let params = ProblemParams::new(1, 0.5, 2.0).unwrap();
    let unit = make_bump([0.0; 3], 1.0, 1);
    for r_scale in [2.0, 5.0, 10.0] {
        let dilated = make_bump([0.0; 3], r_scale, 1);
        for &u in &base_points {
            let lhs = frac_laplacian(&dilated, [r_scale * u, 0.0, 0.0], &params, &sp)
                .unwrap()
                .value;
            let rhs = r_scale.powf(-2.0 * params.s)
                * frac_laplacian(&unit, [u, 0.0, 0.0], &params, &sp)
                    .unwrap()
                    .value;
            let rel = (lhs - rhs).abs() / rhs.abs();
            assert!(rel <= 1e-6, "L scaling at R={r_scale}, u={u}: rel {rel:.3e}");
            worst = worst.max(rel);
        }
    }

    // Potential side: I[f(./R)](R u) = R^{2s} (I f)(u), taken at an order
    // below the dimension so the potential exists.
    let params = ProblemParams::new(1, 0.25, 2.0).unwrap();
    for r_scale in [2.0, 5.0, 10.0] {
        let dilated = make_bump([0.0; 3], r_scale, 1);
        for &u in &base_points {
            let lhs = riesz_potential(&dilated, [r_scale * u, 0.0, 0.0], &params, &sp)
                .unwrap()
                .value;
            let rhs = r_scale.powf(2.0 * params.s)
                * riesz_potential(&unit, [u, 0.0, 0.0], &params, &sp)
                    .unwrap()
                    .value;
            let rel = (lhs - rhs).abs() / rhs.abs();
            assert!(rel <= 1e-6, "I scaling at R={r_scale}, u={u}: rel {rel:.3e}");
            worst = worst.max(rel);
        }
    }
    println!("criterion 03: PASS — both dilation identities, worst rel {worst:.2e} <= 1e-6");
}

// The four far-field decay exponents, fitted over doubling radii by the
// binary, each within 0.15 of its prediction, inside five minutes.
#[test]
fn criterion_04_decay_slopes_match_predictions() {
    let t0 = Instant::now();
    let (code, stdout, stderr) = run_cli(&["decay", "--d", "3", "--s", "0.5", "--p", "1.25"]);
    assert_eq!(code, 0, "decay run failed: {stderr}");
    let rows = parse_csv(&stdout);
    assert_eq!(rows.len(), 4, "expected four fitted slopes");
    let predictions = [
        ("slope=a-frac", -4.0),
        ("slope=b-power-form", -3.625),
        ("slope=c-potential", -2.0),
        ("slope=d-power-form-of-potential", -3.125),
    ];
    for (input, predicted) in predictions {
        let row = rows
            .iter()
            .find(|r| r.input == input)
            .unwrap_or_else(|| panic!("missing fit {input}"));
        assert_eq!(row.verdict, "PASS", "{input} verdict");
        assert_eq!(row.expected, Some(predicted));
        assert!(
            (row.measured - predicted).abs() <= 0.15,
            "{input}: slope {:.4} vs predicted {predicted:.4}",
            row.measured
        );
    }
    assert!(t0.elapsed() <= Duration::from_secs(300), "over budget");
    println!("criterion 04: PASS — four decay slopes within 0.15 of prediction");
}

// The potential inverts the operator at the origin (the point-mass
// identity) to 1e-3 relative accuracy.
#[test]
fn criterion_05_potential_recovers_origin_value() {
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    let sp = spec();
    let phi = make_bump([0.0; 3], 1.0, 3);
    let point_value = phi.eval([0.0; 3]);
    let (image, _) = frac_laplacian_field(&phi, &params, &sp).unwrap();
    let recovered = riesz_potential(&image, [0.0; 3], &params, &sp)
        .unwrap()
        .value;
    assert!(
        (recovered - point_value).abs() <= 1e-3 * point_value.abs(),
        "recovered {recovered:.8e} vs {point_value:.8e}"
    );
    println!("criterion 05: PASS — origin value recovered within 1e-3 relative");
}

// Potential-of-operator inversion at five interior points, each to 1e-3
// relative accuracy.
#[test]
fn criterion_06_potential_inverts_operator_pointwise() {
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    let sp = spec();
    let phi = make_bump([0.0; 3], 1.0, 3);
    let (image, _) = frac_laplacian_field(&phi, &params, &sp).unwrap();
    let mut worst = 0.0_f64;
    for &r in &[0.0, 0.2, 0.4, 0.6, 0.8] {
        let x = [r, 0.0, 0.0];
        let truth = phi.eval(x);
        let recovered = riesz_potential(&image, x, &params, &sp).unwrap().value;
        let rel = (recovered - truth).abs() / truth.abs();
        assert!(rel <= 1e-3, "at r={r}: rel {rel:.3e}");
        worst = worst.max(rel);
    }
    println!("criterion 06: PASS — inversion at 5 points, worst rel {worst:.2e} <= 1e-3");
}

// Mollification converges in the weighted norm across the admissible
// window (strictly decreasing errors, final below 1% of the field norm),
// and the witness at the lower edge diverges as predicted.
#[test]
fn criterion_07_mollification_convergence_and_witness() {
    let sp = spec();
    let f = make_bump([0.0; 3], 1.0, 1);
    let eps = [0.2, 0.1, 0.05];
    let p = 2.0;
    // lambda in { -0.5, 0, 0.45 (p-1) d } for d = 1, p = 2.
    for lambda in [-0.5, 0.0, 0.45] {
        let rep = mollification_convergence(&f, lambda, p, &eps, &sp).unwrap();
        assert_eq!(rep.count(Verdict::Fail), 0, "lambda={lambda}");
        assert_eq!(rep.count(Verdict::Unresolved), 0, "lambda={lambda}");
        let final_row = rep
            .records
            .iter()
            .find(|r| r.input == "target=final")
            .expect("final record");
        assert!(final_row.measured < 1e-2, "lambda={lambda}: final ratio");
    }
    // Witness at lambda = -d: truncated weighted norms of the mollified
    // field grow decade over decade.
    let witness = make_inner_power_field(-1.0, p, 1);
    let rep = mollification_convergence(&witness, -1.0, p, &eps, &sp).unwrap();
    assert!(rep.records.len() >= 4, "witness records");
    assert_eq!(rep.count(Verdict::Fail), 0, "witness diverges as predicted");
    println!("criterion 07: PASS — convergence on the window, divergence witness at the edge");
}

// Smoothing commutes with the operator at five points to 1e-3 relative.
#[test]
fn criterion_08_mollification_commutes_with_operator() {
    let params = ProblemParams::new(1, 0.5, 2.0).unwrap();
    let sp = spec();
    let f = make_bump([0.0; 3], 1.0, 1);
    let m = Mollifier::new(1, 0.1).unwrap();
    let smoothed = mollify(&f, &m, &sp).unwrap();
    let mut worst = 0.0_f64;
    for &x in &[0.0, 0.3, 0.6, 1.8, 2.6] {
        let lhs = frac_laplacian(&smoothed, [x, 0.0, 0.0], &params, &sp)
            .unwrap()
            .value;
        let g = |r: f64| {
            let left = frac_laplacian(&f, [x - r, 0.0, 0.0], &params, &sp)
                .unwrap()
                .value;
            let right = frac_laplacian(&f, [x + r, 0.0, 0.0], &params, &sp)
                .unwrap()
                .value;
            m.eval([r, 0.0, 0.0]) * (left + right)
        };
        let rhs = integrate_radial(&g, 0.0, 0.1, &sp).unwrap().value;
        let rel = (lhs - rhs).abs() / rhs.abs();
        assert!(rel <= 1e-3, "at x={x}: rel {rel:.3e}");
        worst = worst.max(rel);
    }
    println!("criterion 08: PASS — commutation at 5 points, worst rel {worst:.2e} <= 1e-3");
}

// The three ways of writing the identity's two sides agree pairwise
// within 5e-3 for two bump pairs and a potential pair, across the
// subcritical-to-critical weight range, inside ten minutes.
#[test]
fn criterion_09_identity_holds_across_subcritical_weights() {
    let t0 = Instant::now();
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    let sp = spec();
    let gamma_c = params.critical_gamma();
    assert!((gamma_c - 1.0).abs() < 1e-12);
    let potential = riesz_potential_field(&make_bump([0.0; 3], 1.0, 3), &params, &sp)
        .unwrap()
        .0;
    let pairs: Vec<(ScalarField, ScalarField, &str)> = vec![
        (make_bump([0.0; 3], 1.0, 3), make_bump([0.0; 3], 1.3, 3), "bumps-a"),
        (make_bump([0.0; 3], 0.7, 3), make_bump([0.0; 3], 1.1, 3), "bumps-b"),
        (potential, make_bump([0.0; 3], 1.0, 3), "potential"),
    ];
    for gamma in [0.0, 0.5 * gamma_c, gamma_c] {
        let weight = PowerWeight::new(gamma, gamma, params.p).unwrap();
        for (v, w, label) in &pairs {
            let rep = verify_ibp(v, w, &params, &weight, &sp, MembershipPolicy::Require).unwrap();
            assert_eq!(rep.count(Verdict::Fail), 0, "{label} at gamma={gamma}");
            assert_eq!(rep.count(Verdict::Unresolved), 0, "{label} at gamma={gamma}");
            for rec in rep
                .records
                .iter()
                .filter(|r| r.input.starts_with("pair="))
            {
                assert!(
                    rec.measured <= 5e-3,
                    "{label} at gamma={gamma}, {}: {:.3e}",
                    rec.input,
                    rec.measured
                );
            }
        }
    }
    assert!(t0.elapsed() <= Duration::from_secs(600), "over budget");
    println!("criterion 09: PASS — pairwise form agreement <= 5e-3 at gamma in {{0, c/2, c}}");
}

// The breakdown demonstration: in the supercritical window the binary
// reproduces the failure (positive operator mass with both memberships
// finite) and the scan classifies the partition, both exiting 0.
#[test]
fn criterion_10_breakdown_demonstration_via_binary() {
    let (code, stdout, stderr) = run_cli(&[
        "ibp", "--d", "3", "--s", "0.5", "--p", "2", "--gamma", "3.5",
    ]);
    assert_eq!(code, 0, "demonstration run failed: {stderr}");
    let rows = parse_csv(&stdout);
    for row in &rows {
        assert_eq!(row.verdict, "PASS", "{} should pass", row.input);
        assert!(row.measured.is_finite());
    }
    let source = rows
        .iter()
        .find(|r| r.input == "mass=a-source")
        .expect("source mass");
    let operator = rows
        .iter()
        .find(|r| r.input == "mass=b-operator")
        .expect("operator mass");
    assert!(
        operator.measured >= 0.99 * source.measured,
        "operator mass {:.6e} below 0.99 x source mass {:.6e}",
        operator.measured,
        source.measured
    );

    let (code, stdout, _) = run_cli(&[
        "scan-gamma", "--d", "3", "--s", "0.5", "--p", "2", "--gammas", "1,2,2.95,3.5,4",
    ]);
    assert_eq!(code, 0, "scan exits 0");
    let verdicts: Vec<String> = parse_csv(&stdout).iter().map(|r| r.verdict.clone()).collect();
    assert_eq!(verdicts, ["HOLD", "HOLD", "HOLD", "FAIL", "FAIL"]);
    println!("criterion 10: PASS — failure reproduced and partition scan exact, exit 0");
}

// Cutoff-remainder integrals decay at least as fast as the predicted
// exponent (within the slope slack) for the neutral and weighted cases.
#[test]
fn criterion_11_remainder_decay_slopes() {
    let params = ProblemParams::new(1, 0.5, 2.0).unwrap();
    let sp = spec();
    let v = make_bump([0.0; 3], 1.0, 1);
    let scales = [1.0, 2.0, 4.0, 8.0, 16.0];
    for gamma in [0.0, params.s] {
        let weight = PowerWeight::new(0.0, gamma, params.p).unwrap();
        let record = remainder_decay(&v, &params, &weight, &scales, &sp).unwrap();
        let predicted = remainder_predicted_slope(&params, gamma);
        assert!(
            (predicted - (gamma - 2.0 * params.s)).abs() < 1e-12,
            "prediction formula at p = 2"
        );
        assert!(
            record.fitted_slope <= predicted + 0.15,
            "gamma={gamma}: fitted {:.4} vs predicted {predicted:.4}",
            record.fitted_slope
        );
        assert_eq!(record.verdict, Verdict::Pass, "gamma={gamma}");
    }
    println!("criterion 11: PASS — remainder slopes at least as fast as predicted");
}

// Operator symmetry: the adjoint pairings agree and the quadratic form is
// nonnegative in the admissible regime; with an integrable weight the
// constant direction joins the space and symmetry measurably fails.
#[test]
fn criterion_12_symmetry_and_its_breakdown() {
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    let sp = spec();
    let f = make_bump([0.0; 3], 1.0, 3);
    let g = make_bump([0.0; 3], 1.3, 3);

    // gamma <= 2s: everything holds.
    let weight = PowerWeight::new(0.0, 2.0 * params.s, params.p).unwrap();
    let rep = symmetry_check(&f, &g, &params, &weight, &sp).unwrap();
    assert_eq!(rep.count(Verdict::Fail), 0);
    assert_eq!(rep.count(Verdict::Unresolved), 0);
    let adjoint = rep
        .records
        .iter()
        .find(|r| r.input == "pair=adjoint")
        .expect("adjoint record");
    assert!(adjoint.measured <= 5e-3);

    // gamma = d + s: the constant direction exposes the breakdown.
    let potential = riesz_potential_field(&f, &params, &sp).unwrap().0;
    let weight = PowerWeight::new(0.0, params.d as f64 + params.s, params.p).unwrap();
    let rep = symmetry_check(&potential, &g, &params, &weight, &sp).unwrap();
    let constant = rep
        .records
        .iter()
        .find(|r| r.input == "pair=d-constant-direction")
        .expect("constant-direction record");
    assert_eq!(
        constant.verdict,
        Verdict::Fail,
        "constant direction must expose the failure"
    );
    let adjoint = rep
        .records
        .iter()
        .find(|r| r.input == "pair=adjoint")
        .expect("adjoint record");
    assert_eq!(adjoint.verdict, Verdict::Pass, "pairings stay symmetric");
    println!("criterion 12: PASS — symmetry holds at gamma <= 2s, breaks at gamma = d + s");
}

// Rerunning every campaign with the same configuration yields
// byte-identical reports.
#[test]
fn criterion_13_reruns_are_byte_identical() {
    let runs: [&[&str]; 9] = [
        &["eval", "--d", "1", "--s", "0.5"],
        &["ibp", "--d", "1", "--s", "0.25", "--p", "2", "--gamma", "0"],
        &["scan-gamma", "--d", "1", "--s", "0.25", "--p", "2", "--gammas", "0,0.25,0.5"],
        &["remainder", "--d", "1", "--s", "0.5", "--p", "2", "--gamma", "0", "--scales", "1,2,4,8"],
        &["mollify", "--d", "1", "--lambda", "0"],
        &["decay", "--d", "1", "--s", "0.25", "--p", "1.25"],
        &["membership", "--d", "1", "--s", "0.5", "--p", "2", "--gamma0", "0.25", "--gamma", "0.25"],
        &["symmetry", "--d", "1", "--s", "0.5", "--p", "2", "--gamma", "0"],
        &["oracle-check", "--d", "1"],
    ];
    for args in runs {
        let (code_a, out_a, err_a) = run_cli(args);
        let (code_b, out_b, _) = run_cli(args);
        assert_eq!(code_a, 0, "{args:?} failed: {err_a}");
        assert_eq!(code_b, 0);
        assert_eq!(out_a.as_bytes(), out_b.as_bytes(), "rerun differs: {args:?}");
        assert!(!out_a.is_empty());
    }
    println!("criterion 13: PASS — all nine campaigns rerun byte-identical");
}

// In the open window (d <= 2s, gamma above critical) the scan reports
// UNRESOLVED only, exiting 0 with warnings.
#[test]
fn criterion_14_open_window_scan_is_unresolved() {
    let (code, stdout, stderr) = run_cli(&[
        "scan-gamma", "--d", "1", "--s", "0.75", "--p", "2", "--gammas", "1.6,2,3",
    ]);
    assert_eq!(code, 0, "open-window scan exits 0");
    let rows = parse_csv(&stdout);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row.verdict, "UNRESOLVED", "{}", row.input);
    }
    assert!(
        stderr.to_lowercase().contains("unresolved"),
        "warnings on stderr"
    );
    println!("criterion 14: PASS — open-window scan abstains (UNRESOLVED only)");
}

// Sanity shared by several criteria: the critical exponent used above is
// the affine formula evaluated at these parameters.
#[test]
fn criterion_support_critical_exponent_value() {
    let params = ProblemParams::new(3, 0.5, 2.0).unwrap();
    assert!((params.critical_gamma() - 1.0).abs() < 1e-12);
    let open = ProblemParams::new(1, 0.75, 2.0).unwrap();
    assert!((open.critical_gamma() - 1.5).abs() < 1e-12);
    let _ = gamma_fn(0.5);
}
