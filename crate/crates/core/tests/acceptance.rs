//! Acceptance gate: one test per shipping criterion, each printing a
//! `criterion NN PASS — ...` line with the measured numbers (visible under
//! `--nocapture`). Tolerances are fixed here and must not be loosened to
//! make a failing build pass; a red criterion means the product regressed.
//!
//! Criterion 2's stated precondition (background curvature negative at
//! every vertex) cannot hold on any closed mesh embedded in 3-space — some
//! vertex of the convex hull has nonnegative angle defect — so that test
//! verifies the precondition, reports the violation count, and runs the
//! equivalent exact-recovery check against a constructible exact solution
//! instead (see `criterion_02`).

use prescurv::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn conformal_area(geom: &BackgroundGeometry, sigma: &[f64]) -> f64 {
    sigma.iter().zip(&geom.vertex_areas).map(|(s, a)| s.exp() * a).sum()
}

/// Criterion 1: Newton with K = -1 on the refined resolution-8 genus-2 and
/// genus-3 surfaces converges below 1e-10 in the residual max-norm and the
/// conformal area matches -2*pi*chi (4*pi resp. 8*pi) to 1e-8 relative,
/// within 30 seconds per mesh.
#[test]
fn criterion_01_uniformization_area() {
    let mut notes = Vec::new();
    for (g, expected) in [(2usize, 4.0 * PI), (3, 8.0 * PI)] {
        let start = Instant::now();
        let mesh = generate_genus_g(g, 8).unwrap().refine();
        let geom = build_geometry(&mesh);
        let target = TargetCurvature::constant(-1.0, &geom).unwrap();
        let config = SolverConfig { residual_tol: 1e-10, ..Default::default() };
        let report = newton_solve(&geom, &target, &config).unwrap();
        let elapsed = start.elapsed().as_secs_f64();

        assert_eq!(report.status, SolveStatus::Converged, "genus {g} did not converge");
        assert!(report.final_b_inf <= 1e-10, "genus {g} residual {}", report.final_b_inf);
        let area = conformal_area(&geom, &report.sigma);
        let rel = (area - expected).abs() / expected;
        assert!(rel <= 1e-8, "genus {g} area off by {rel:.3e} relative");
        assert!(elapsed <= 30.0, "genus {g} took {elapsed:.1}s");
        notes.push(format!(
            "g{g}: V={} area_rel={rel:.2e} b_inf={:.2e} {elapsed:.1}s",
            geom.vertex_count, report.final_b_inf
        ));
    }
    println!("criterion 01 PASS — uniformization area: {}", notes.join("; "));
}

/// Criterion 2: exact-solution recovery, sigma error below 1e-9 for the
/// shifts c in {-0.5, 0.3, 1.0}. The stated precondition (K0 < 0
/// everywhere) is verified and reported: it fails on the embedded
/// generator mesh as it must on any closed embedded surface, so the exact
/// pair is built from an attained curvature instead. Solving K = -1 gives
/// sigma1 whose attained curvature K1 = curvature_of(sigma1) is strictly
/// negative and satisfies the discrete equation exactly; the target
/// e^{-c} K1 then has the exact solution sigma1 + c, recovered from zeros.
#[test]
fn criterion_02_exact_discrete_solution() {
    let mesh = generate_genus_g(2, 8).unwrap();
    let geom = build_geometry(&mesh);
    let zeros = vec![0.0; geom.vertex_count];
    let background = geom.curvature_of(&zeros).unwrap();
    let violations = background.iter().filter(|k| **k >= 0.0).count();
    assert!(violations > 0, "embedded mesh unexpectedly had all-negative background curvature");

    let config = SolverConfig { residual_tol: 1e-11, ..Default::default() };
    let target = TargetCurvature::constant(-1.0, &geom).unwrap();
    let base = newton_solve(&geom, &target, &config).unwrap();
    assert_eq!(base.status, SolveStatus::Converged);
    let attained = geom.curvature_of(&base.sigma).unwrap();
    assert!(attained.iter().all(|k| *k < 0.0), "attained curvature must be negative");

    let mut worst = 0.0f64;
    for c in [-0.5, 0.3, 1.0] {
        let shifted: Vec<f64> = attained.iter().map(|k| k * (-c as f64).exp()).collect();
        let target = TargetCurvature::from_values(shifted, &geom).unwrap();
        let report = newton_solve(&geom, &target, &config).unwrap();
        assert_eq!(report.status, SolveStatus::Converged, "shift {c} did not converge");
        let exact: Vec<f64> = base.sigma.iter().map(|s| s + c).collect();
        let err = max_abs_diff(&report.sigma, &exact);
        assert!(err <= 1e-9, "shift {c} recovered sigma off by {err:.3e}");
        worst = worst.max(err);
    }
    println!(
        "criterion 02 PASS — exact recovery via attained-curvature pair \
         (stated K0<0 precondition verified and reported: fails at {violations}/{} vertices, \
         as it must on any closed embedded mesh): worst sigma error {worst:.2e}",
        geom.vertex_count
    );
}

/// Criterion 3: five random initializations in [-1,1]^V all reach the same
/// solution within 1e-8, for constant K = -1 and a non-constant target.
#[test]
fn criterion_03_uniqueness_across_initializations() {
    let mesh = generate_genus_g(2, 4).unwrap();
    let geom = build_geometry(&mesh);
    let constant = TargetCurvature::constant(-1.0, &geom).unwrap();
    let varying = TargetCurvature::from_expression("-1-0.5*tanh(x)", &mesh, &geom).unwrap();

    let mut notes = Vec::new();
    for (name, target) in [("K=-1", &constant), ("K=-1-0.5*tanh(x)", &varying)] {
        let mut reference: Option<Vec<f64>> = None;
        let mut spread = 0.0f64;
        for seed in 0..5u64 {
            let init = random_field(geom.vertex_count, 1900 + seed);
            let config = SolverConfig {
                residual_tol: 1e-11,
                initial_sigma: InitialSigma::Field(init),
                ..Default::default()
            };
            let report = newton_solve(&geom, target, &config).unwrap();
            assert_eq!(report.status, SolveStatus::Converged, "{name} seed {seed}");
            match &reference {
                None => reference = Some(report.sigma),
                Some(first) => {
                    let diff = max_abs_diff(first, &report.sigma);
                    assert!(diff <= 1e-8, "{name} seed {seed} differs by {diff:.3e}");
                    spread = spread.max(diff);
                }
            }
        }
        notes.push(format!("{name}: spread {spread:.2e}"));
    }
    println!("criterion 03 PASS — uniqueness over 5 random starts: {}", notes.join("; "));
}

/// Criterion 4: the total curvature identity sum K(sigma_k) e^{sigma_k} A
/// = 2*pi*chi holds to 1e-8 at every accepted iterate of both methods.
#[test]
fn criterion_04_gauss_bonnet_along_traces() {
    let mesh = generate_genus_g(2, 2).unwrap();
    let geom = build_geometry(&mesh);
    let target = TargetCurvature::constant(-1.0, &geom).unwrap();

    let mut notes = Vec::new();
    for method in [Method::Newton, Method::Descent] {
        let config = SolverConfig {
            method,
            residual_tol: 1e-9,
            ..Default::default()
        };
        let report = solve(&geom, &target, &config).unwrap();
        assert_eq!(report.status, SolveStatus::Converged, "{method:?}");
        assert!(!report.snapshots.is_empty());
        let worst = report
            .snapshots
            .iter()
            .map(|s| s.gauss_bonnet_defect.abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-8, "{method:?} trace defect {worst:.3e}");
        notes.push(format!("{method:?}: {} iterates, worst defect {worst:.2e}", report.snapshots.len()));
    }
    println!("criterion 04 PASS — Gauss–Bonnet conserved along traces: {}", notes.join("; "));
}

/// Criterion 5: the analytic gradient of S matches central finite
/// differences along 20 random directions to 1e-5 relative on a small mesh.
#[test]
fn criterion_05_gradient_matches_finite_differences() {
    let mesh = generate_genus_g(2, 2).unwrap();
    let geom = build_geometry(&mesh);
    assert!(geom.vertex_count <= 100);
    let target = TargetCurvature::constant(-1.5, &geom).unwrap();
    let sigma = random_field(geom.vertex_count, 501);
    let grad = functional_gradient(&geom, &target, &sigma).unwrap();

    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let dir = random_field(geom.vertex_count, 7700 + k);
        let shift = |t: f64| -> f64 {
            let moved: Vec<f64> = sigma.iter().zip(&dir).map(|(s, d)| s + t * d).collect();
            functional_value(&geom, &target, &moved).unwrap()
        };
        let numeric = (shift(h) - shift(-h)) / (2.0 * h);
        let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let rel = (numeric - analytic).abs() / analytic.abs().max(1e-12);
        assert!(rel <= 1e-5, "direction {k}: relative error {rel:.3e}");
        worst = worst.max(rel);
    }
    println!("criterion 05 PASS — gradient vs finite differences, 20 directions: worst rel {worst:.2e}");
}

/// Criterion 6: the Newton matrix M = L/2 + diag(-K e^sigma A) is positive
/// definite at random fields. The stiffness matrix is positive
/// semidefinite as a Dirichlet form even when individual cotangent weights
/// are negative, and the diagonal addition is strictly positive for K < 0,
/// so the minimum eigenvalue is asserted positive unconditionally; the
/// negative-weight count and observed minimum are reported alongside.
#[test]
fn criterion_06_newton_matrix_positive_definite() {
    let mesh = generate_genus_g(2, 2).unwrap();
    let geom = build_geometry(&mesh);
    let n = geom.vertex_count;
    assert!(n <= 200);
    let target = TargetCurvature::constant(-1.0, &geom).unwrap();

    let mut min_seen = f64::INFINITY;
    for seed in 0..10u64 {
        let sigma = random_field(n, 42 + seed);
        let extra: Vec<f64> = target
            .values
            .iter()
            .zip(&sigma)
            .zip(&geom.vertex_areas)
            .map(|((k, s), a)| -k * s.exp() * a)
            .collect();
        let newton = geom.stiffness.scaled_with_diag_added(0.5, &extra);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in newton.entries() {
            dense[(i, j)] = v;
        }
        let eigen = dense.symmetric_eigen();
        let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eig > 0.0, "seed {seed}: min eigenvalue {min_eig:.3e}");
        min_seen = min_seen.min(min_eig);
    }
    println!(
        "criterion 06 PASS — Newton matrix SPD at 10 random fields: min eigenvalue {min_seen:.3e} \
         (mesh has {} negative cotangent weights; positivity asserted regardless via the \
         Dirichlet-form bound)",
        geom.negative_weight_count
    );
}

/// Criterion 7: descent decreases S strictly on every accepted step and
/// lands on the Newton solution to 1e-6 in the max-norm.
#[test]
fn criterion_07_descent_monotone_and_consistent() {
    let mesh = generate_genus_g(2, 2).unwrap();
    let geom = build_geometry(&mesh);
    let target = TargetCurvature::constant(-1.0, &geom).unwrap();

    let newton = newton_solve(&geom, &target, &SolverConfig::default()).unwrap();
    assert_eq!(newton.status, SolveStatus::Converged);

    let config = SolverConfig {
        method: Method::Descent,
        residual_tol: 1e-9,
        ..Default::default()
    };
    let descent = descent_minimize(&geom, &target, &config).unwrap();
    assert_eq!(descent.status, SolveStatus::Converged);
    for pair in descent.trace.windows(2) {
        assert!(
            pair[1].s < pair[0].s,
            "S rose from {:.6e} to {:.6e} at iteration {}",
            pair[0].s,
            pair[1].s,
            pair[1].iteration
        );
    }
    let diff = max_abs_diff(&descent.sigma, &newton.sigma);
    assert!(diff <= 1e-6, "descent vs Newton differ by {diff:.3e}");
    println!(
        "criterion 07 PASS — descent monotone over {} accepted steps, matches Newton to {diff:.2e}",
        descent.trace.len() - 1
    );
}

/// Criterion 8: Green-operator identities on random fields, partition
/// masses summing to one, an empty third region with zero mass term for
/// constant targets, and the bound |B3| <= 3 D^2 on the non-constant run.
#[test]
fn criterion_08_proof_diagnostics() {
    let mesh = generate_genus_g(2, 4).unwrap();
    let geom = build_geometry(&mesh);
    let n = geom.vertex_count;

    // G(Delta sigma) recovers the mean-zero part; Delta(G f) recovers the
    // mean-centered field.
    let mut worst_identity = 0.0f64;
    for seed in 0..3u64 {
        let sigma = random_field(n, 880 + seed);
        let (_, tilde) = mean_value_split(&geom, &sigma).unwrap();
        let laplacian = geom.laplacian_apply(&sigma).unwrap();
        let recovered = green_apply(&geom, &laplacian).unwrap();
        worst_identity = worst_identity.max(max_abs_diff(&recovered, &tilde));

        let field = random_field(n, 990 + seed);
        let (mean, _) = mean_value_split(&geom, &field).unwrap();
        let green = green_apply(&geom, &field).unwrap();
        let back = geom.laplacian_apply(&green).unwrap();
        let centered: Vec<f64> = field.iter().map(|f| f - mean).collect();
        worst_identity = worst_identity.max(max_abs_diff(&back, &centered));
    }
    assert!(worst_identity <= 1e-10, "Green identity error {worst_identity:.3e}");

    // Constant target at its solution: masses sum to one, third region empty.
    let constant = TargetCurvature::constant(-1.0, &geom).unwrap();
    let solved = newton_solve(&geom, &constant, &SolverConfig::default()).unwrap();
    let partition = omega_partition(&geom, &constant, &solved.sigma).unwrap();
    let mass_sum: f64 = partition.masses.iter().sum();
    assert!((mass_sum - 1.0).abs() <= 1e-12, "masses sum to {mass_sum}");
    let region3 = partition.labels.iter().filter(|l| **l == 3).count();
    assert_eq!(region3, 0, "constant target produced a nonempty third region");
    assert_eq!(partition.b_terms[2], 0.0);

    // Non-constant target of criterion 3: the third mass term is bounded
    // by three times the gradient-ratio energy (roundoff slack scaled at
    // 1e-9 of the magnitudes involved).
    let varying = TargetCurvature::from_expression("-1-0.5*tanh(x)", &mesh, &geom).unwrap();
    let solved = newton_solve(&geom, &varying, &SolverConfig::default()).unwrap();
    assert_eq!(solved.status, SolveStatus::Converged);
    let partition = omega_partition(&geom, &varying, &solved.sigma).unwrap();
    let b3 = partition.b_terms[2];
    let bound = 3.0 * partition.d_squared;
    let slack = 1e-9 * (1.0 + b3.abs() + bound);
    assert!(b3.abs() <= bound + slack, "|B3| = {:.3e} exceeds 3 D^2 = {bound:.3e}", b3.abs());
    println!(
        "criterion 08 PASS — Green identities to {worst_identity:.2e}; masses sum 1±{:.1e}; \
         constant K: region 3 empty; tanh K: |B3| = {:.2e} <= 3 D^2 = {bound:.2e}",
        (mass_sum - 1.0).abs(),
        b3.abs()
    );
}

/// Criterion 9: the hypothesis guards speak plainly — a nonnegative target
/// names the violated negativity hypothesis, and a low-genus mesh names
/// the topology hypothesis (overridable only by explicit configuration).
#[test]
fn criterion_09_hypothesis_guards() {
    let mesh = generate_genus_g(2, 2).unwrap();
    let geom = build_geometry(&mesh);
    let err = TargetCurvature::constant(0.5, &geom).unwrap_err();
    let negativity = err.to_string();
    assert!(negativity.contains("K < 0"), "negativity message: {negativity}");

    let torus = generate_genus_g(1, 3).unwrap();
    let torus_geom = build_geometry(&torus);
    let values = vec![-1.0; torus_geom.vertex_count];
    let target = TargetCurvature::from_values(values, &torus_geom).unwrap();
    let err = solve(&torus_geom, &target, &SolverConfig::default()).unwrap_err();
    let guard = err.to_string();
    assert!(matches!(err, SolverError::GenusNotHyperbolic { genus: 1 }));
    assert!(guard.contains("genus g > 1"), "genus guard message: {guard}");
    println!(
        "criterion 09 PASS — guards cite their hypotheses: \"{negativity}\" / \"{guard}\""
    );
}

/// Criterion 10: refinement convergence. On the rounded genus-2 surface
/// (whose projected refinements converge to a smooth metric, unlike the
/// raw polyhedral plate, where solutions drift logarithmically at the
/// permanent cone vertices — see the rounded-mesh module), solving K = -1
/// across four levels yields sigma fields whose successive differences at
/// the shared base vertices shrink by at least 1.5x per level.
///
/// The solve tolerance 2e-8 sits three orders below the ~1e-2 differences
/// measured here and above the Newton residual floor at the finest level
/// (roundoff in the cotangent sums reaches ~1e-8 at eighty thousand
/// vertices), so every level reports convergence honestly.
#[test]
fn criterion_10_refinement_cauchy_sequence() {
    let (mut mesh, surface) = generate_genus_g_rounded(2, 8).unwrap();
    let base_vertices = mesh.vertex_count();
    let mut sigmas: Vec<Vec<f64>> = Vec::new();
    let mut init = InitialSigma::Zeros;

    for level in 0..4 {
        let geom = build_geometry(&mesh);
        let target = TargetCurvature::constant(-1.0, &geom).unwrap();
        let config = SolverConfig {
            residual_tol: 2e-8,
            initial_sigma: init.clone(),
            ..Default::default()
        };
        let report = newton_solve(&geom, &target, &config).unwrap();
        assert_eq!(
            report.status,
            SolveStatus::Converged,
            "level {level} (V = {}) did not converge",
            geom.vertex_count
        );
        sigmas.push(report.sigma.clone());
        if level < 3 {
            init = InitialSigma::Field(mesh.prolong_refined(&report.sigma));
            mesh = surface.refine_projected(&mesh);
        }
    }

    let diffs: Vec<f64> = sigmas
        .windows(2)
        .map(|pair| max_abs_diff(&pair[0][..base_vertices], &pair[1][..base_vertices]))
        .collect();
    let mut ratios = Vec::new();
    for pair in diffs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(
            ratio >= 1.5,
            "contraction ratio {ratio:.3} below 1.5 (diffs {diffs:?})"
        );
        ratios.push(ratio);
    }
    println!(
        "criterion 10 PASS — refinement Cauchy sequence on the rounded surface \
         (V {base_vertices} -> {}): diffs {:.5} / {:.5} / {:.5}, ratios {:.3} / {:.3}",
        sigmas.last().map(|s| s.len()).unwrap_or(0),
        diffs[0],
        diffs[1],
        diffs[2],
        ratios[0],
        ratios[1]
    );
}
