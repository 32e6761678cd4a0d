//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with the measured quantities. Run with `--nocapture` to see the
//! lines for passing tests too.

use std::time::{Duration, Instant};

use webster::cli::{parse_field, verify};
use webster::gluing::{convergence_study, glue, glued_curvature};
use webster::hgroup::{koranyi_gauge, HPoint, ScalarField};
use webster::phcalc::{default_probes, scalar_curvature, DeformationTensor};
use webster::yamabe::{
    gradient_comparison, lambda_comparison_study, minimize_quotient, BoxGrid, GridField,
    MinimizeOpts,
};

fn demo_tensor() -> DeformationTensor {
    DeformationTensor::new(
        parse_field("0.1*(x^2+y^2) + 0.05i*x*y").unwrap(),
        default_probes(1.0),
    )
    .unwrap()
}

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion}: {detail}");
}

fn run_suite(criterion: &str, result: verify::SuiteResult, budget: Option<Duration>, t0: Instant) {
    let elapsed = t0.elapsed();
    let mut passed = result.passed;
    let mut detail = result.detail.clone();
    if let Some(limit) = budget {
        if elapsed > limit {
            passed = false;
        }
        detail = format!("{detail}; runtime {elapsed:.1?} (budget {limit:?})");
    }
    report(criterion, passed, &detail);
}

#[test]
fn criterion_01_structure_equation_suite() {
    let t0 = Instant::now();
    run_suite(
        "1 (structure equations)",
        verify::suite_structure_equation(),
        Some(Duration::from_secs(10)),
        t0,
    );
}

#[test]
fn criterion_02_curvature_oracle() {
    run_suite(
        "2 (curvature oracle)",
        verify::suite_curvature_oracle(),
        None,
        Instant::now(),
    );
}

#[test]
fn criterion_03_sublaplacian_cross_derivation() {
    run_suite(
        "3 (sublaplacian cross-derivation)",
        verify::suite_sublaplacian(),
        None,
        Instant::now(),
    );
}

#[test]
fn criterion_04_duality_pinning() {
    run_suite("4 (duality pinning)", verify::suite_duality(), None, Instant::now());
}

#[test]
fn criterion_05_flat_and_constant_curvature() {
    run_suite(
        "5 (flat and constant cases)",
        verify::suite_flat_curvature(),
        None,
        Instant::now(),
    );
}

#[test]
fn criterion_06_small_phi_expansion() {
    run_suite(
        "6 (small-deformation expansion)",
        verify::suite_small_phi(),
        None,
        Instant::now(),
    );
}

#[test]
fn criterion_07_cutoff_bounds() {
    // The suite sweeps δ ∈ {0.05, 0.1, 0.2, 0.4, 0.5} with 10⁴ log-spaced
    // samples each and checks plateau/support exactness.
    run_suite(
        "7 (cutoff bounds)",
        verify::suite_cutoff_bounds(),
        None,
        Instant::now(),
    );
}

#[test]
fn criterion_08_gluing_normalization() {
    let phi = demo_tensor();
    let r0 = scalar_curvature(&phi, HPoint::ORIGIN).unwrap();
    let delta = 0.2;
    let gs = glue(&phi, r0, delta).unwrap();

    let origin_gap = (glued_curvature(&gs, HPoint::ORIGIN).unwrap() - r0).abs();

    // Region identities: bitwise outside the gauge ball, plateau exact.
    let outside = HPoint::new(0.5, 0.3, 0.4);
    assert!(koranyi_gauge(outside).1 >= delta);
    let phi_same = gs.phi_delta().phi().eval(outside).unwrap()
        == phi.phi().eval(outside).unwrap();
    let v_one = gs.v_delta().eval_real(outside).unwrap() == 1.0;

    let inside = HPoint::new(gs.cutoff().inner() * 0.5, 0.0, 0.0);
    let phi_zero = gs.phi_delta().phi().eval(inside).unwrap().norm() == 0.0;
    let v_matches_u = (gs.v_delta().eval_real(inside).unwrap()
        - gs.matching().eval_real(inside).unwrap())
    .abs()
        < 1e-13;

    let passed = origin_gap <= 1e-8 && phi_same && v_one && phi_zero && v_matches_u;
    report(
        "8 (gluing normalization)",
        passed,
        &format!(
            "|R^δ(0) − R(0)| = {origin_gap:.3e}; outside identity {}; plateau identity {}",
            phi_same && v_one,
            phi_zero && v_matches_u
        ),
    );
}

#[test]
fn criterion_09_c0_convergence() {
    let t0 = Instant::now();
    let phi = demo_tensor();
    let r0 = scalar_curvature(&phi, HPoint::ORIGIN).unwrap();
    let grid = BoxGrid::new(1.0, 33).unwrap();
    let deltas = [0.4, 0.2, 0.1, 0.05];
    let report_data = convergence_study(&phi, r0, &deltas, &grid.points()).unwrap();
    let elapsed = t0.elapsed();

    let errs: Vec<f64> = report_data.rows.iter().map(|r| r.sup_r_err).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let passed = monotone && report_data.slope >= 0.8 && elapsed < Duration::from_secs(120);
    report(
        "9 (C⁰ convergence)",
        passed,
        &format!(
            "sup|R^δ − R| = {errs:?}, slope {:.2} (≥ 0.8), runtime {elapsed:.1?} (< 2 min)",
            report_data.slope
        ),
    );
}

#[test]
fn criterion_10_gradient_comparison() {
    let phi = demo_tensor();
    let r0 = scalar_curvature(&phi, HPoint::ORIGIN).unwrap();
    let grid = BoxGrid::new(1.0, 17).unwrap();
    let u = GridField::bump(grid);

    let mut widths = Vec::new();
    let mut all_contained = true;
    for delta in [0.4, 0.2, 0.1, 0.05] {
        let gs = glue(&phi, r0, delta).unwrap();
        let cmp = gradient_comparison(&phi, &gs, &u).unwrap();
        all_contained &= cmp.contained;
        widths.push(cmp.envelope_upper_max);
    }
    let shrinking = widths.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let tight = *widths.last().unwrap() < 1.01;
    let passed = all_contained && shrinking && tight;
    report(
        "10 (gradient comparison)",
        passed,
        &format!("contained at every node: {all_contained}; envelope upper maxima {widths:?} → 1"),
    );
}

#[test]
fn criterion_11_lambda_convergence() {
    let t0 = Instant::now();
    // Demo: relative gap at the smallest δ.
    let phi = demo_tensor();
    let r0 = scalar_curvature(&phi, HPoint::ORIGIN).unwrap();
    let grid = BoxGrid::new(1.0, 33).unwrap();
    let opts = MinimizeOpts::default();
    let study = lambda_comparison_study(&phi, r0, &[0.4, 0.2, 0.1, 0.05], grid, &opts).unwrap();
    let final_gap = study.rows.last().unwrap().lambda_gap_rel;

    // Trivial family: bitwise-zero gaps.
    let flat = DeformationTensor::new(ScalarField::zero(), default_probes(1.0)).unwrap();
    let small = BoxGrid::new(1.0, 17).unwrap();
    let trivial = lambda_comparison_study(&flat, 0.0, &[0.4, 0.2, 0.1], small, &opts).unwrap();
    let trivial_exact = trivial.rows.iter().all(|r| r.lambda_gap_rel == 0.0);

    let elapsed = t0.elapsed();
    let passed = final_gap <= 0.05 && trivial_exact && elapsed < Duration::from_secs(600);
    report(
        "11 (λ convergence: demo gap and trivial family)",
        passed,
        &format!(
            "demo relative gap at δ=0.05: {final_gap:.3e} (≤ 5%); trivial family exact: {trivial_exact}; runtime {elapsed:.1?} (< 10 min)"
        ),
    );
}

#[test]
fn criterion_11_mesh_self_convergence() {
    // Faithful transcription of the remaining sub-criterion: λ_Ω at 17³
    // and 33³ within 2%. The quotient has the critical exponent, so the
    // discrete minimum concentrates at grid scale and keeps decreasing
    // under refinement; see the failure message for the measured values.
    let phi = demo_tensor();
    let r0 = scalar_curvature(&phi, HPoint::ORIGIN).unwrap();
    let one = ScalarField::one();
    let opts = MinimizeOpts::default();
    let coarse = minimize_quotient(&phi, &one, BoxGrid::new(1.0, 17).unwrap(), &opts)
        .unwrap()
        .lambda;
    let fine = minimize_quotient(&phi, &one, BoxGrid::new(1.0, 33).unwrap(), &opts)
        .unwrap()
        .lambda;
    let rel = (coarse - fine).abs() / fine.abs();

    // Supplementary: the study's conclusion — the relative λ gap between
    // the glued and base structures — IS mesh-stable, even though the
    // λ values themselves are not.
    for n in [17usize, 33] {
        let grid = BoxGrid::new(1.0, n).unwrap();
        let study = lambda_comparison_study(&phi, r0, &[0.1], grid, &opts).unwrap();
        println!(
            "  (supplementary) {n}³ relative λ gap at δ=0.1: {:.3e}",
            study.rows[0].lambda_gap_rel
        );
    }

    report(
        "11 (mesh self-convergence)",
        rel <= 0.02,
        &format!(
            "λ(17³) = {coarse:.6}, λ(33³) = {fine:.6}, relative difference {rel:.3} (criterion: ≤ 0.02; \
             unattainable for the critical-exponent quotient — the Dirichlet-box infimum is the \
             scale-invariant sharp constant, approached by grid-scale bubbles, so the discrete \
             minimum drifts down under refinement; see the decisions ledger)"
        ),
    );
}

#[test]
fn criterion_12_convention_constants() {
    run_suite(
        "12 (convention constants κ, σ, ν)",
        verify::suite_constants(),
        None,
        Instant::now(),
    );
}
