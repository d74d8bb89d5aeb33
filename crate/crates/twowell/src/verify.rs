//! Self-contained verification battery.
//!
//! Each suite cross-checks one claim the closed forms make, against brute
//! force, finite differences, or an algebraic identity that has to hold
//! exactly. All suites are deterministic in (lambda, seed, samples) and
//! report the worst defect they saw, so a failure message localizes the
//! problem without rerunning.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{dist2_two_wells, g_eval, EnergyValue, ThetaSpec, WellParams};
use crate::laminate::{build_laminate, verify_laminate};
use crate::mat2::{coords, matrix_with_coords, signed_singular_values, Coords, Mat2, Vec2};
use crate::oracle::{oracle_dist2, oracle_h, probe_hessian_psd_on_v, probe_xi_nonneg, GridSpec};
use crate::relaxation::{PhaseRegion, Relaxation};

/// One suite's verdict.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{tag}  {:<22} {}", self.name, self.detail)
    }
}

pub fn all_passed(results: &[SuiteResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn random_mat(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
    Mat2::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn random_admissible(rng: &mut ChaCha8Rng, max_xy: f64, max_d: f64) -> Coords {
    let x = rng.gen_range(0.05..max_xy);
    let y = rng.gen_range(0.05..max_xy);
    let d = rng.gen_range(-1.0..1.0) * (0.95 * x * y).min(max_d);
    Coords::new(x, y, d)
}

/// The pointwise energy's two faces agree: the rotation-reduced well
/// distance equals g composed with the coordinate map.
pub fn suite_energy_identity(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let f = random_mat(&mut rng, 10.0 / 2.0_f64.sqrt());
        let direct = dist2_two_wells(f, rel.params());
        let via_coords = g_eval(coords(f), rel.params()).expect("real-matrix coordinates");
        let scale = f.norm_sq().max(1.0);
        worst = worst.max((direct - via_coords).abs() / scale);
    }
    SuiteResult {
        name: "energy_identity",
        passed: worst <= 1e-10,
        detail: format!("max |dist2 - g(coords)| / max(1, |F|^2) = {worst:.3e} over {samples}"),
    }
}

/// The closed-form well distance against the rotation-angle scan.
pub fn suite_well_distance_oracle(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let samples = samples.min(10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let f = random_mat(&mut rng, 10.0 / 2.0_f64.sqrt());
        let slow = oracle_dist2(f, rel.params(), 10_000);
        let fast = dist2_two_wells(f, rel.params());
        worst = worst.max((slow - fast).abs());
    }
    SuiteResult {
        name: "well_distance_oracle",
        passed: worst <= 1e-6,
        detail: format!("max |scan - closed form| = {worst:.3e} over {samples}"),
    }
}

/// Coordinates and signed singular values against Gram-matrix eigenvalues.
pub fn suite_coordinate_map(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let _ = rel;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples.min(5_000) {
        let f = random_mat(&mut rng, 5.0);
        let c = coords(f);
        let sv = signed_singular_values(f);
        let scale = f.norm_sq().max(1.0);

        // Eigenvalues of F^T F are the squared singular values.
        let g11 = f.m11 * f.m11 + f.m21 * f.m21;
        let g22 = f.m12 * f.m12 + f.m22 * f.m22;
        let g12 = f.m11 * f.m12 + f.m21 * f.m22;
        let mean = 0.5 * (g11 + g22);
        let spread = (0.25 * (g11 - g22) * (g11 - g22) + g12 * g12).sqrt();
        worst = worst.max((sv.large * sv.large - (mean + spread)).abs() / scale);
        worst = worst.max((sv.small * sv.small - (mean - spread).max(0.0)).abs() / scale);

        // x^2 + y^2 = |F|^2 and x^2 - y^2 = twice the cross term.
        worst = worst.max((c.x * c.x + c.y * c.y - f.norm_sq()).abs() / scale);
        worst = worst.max((c.d - f.det()).abs() / scale);
        worst = worst.max((c.admissibility_margin()).min(0.0).abs() / scale);
    }
    SuiteResult {
        name: "coordinate_map",
        passed: worst <= 1e-10,
        detail: format!("max defect against Gram eigenvalues = {worst:.3e}"),
    }
}

/// The well coordinate is both stationary and fixed: phi(w, 1) = w = p(1),
/// and p(0) has the closed form lambda / sqrt(2).
pub fn suite_curve_anchors(rel: &Relaxation, _seed: u64, _samples: usize) -> SuiteResult {
    let wc = rel.params().well_coordinate();
    let phi = rel.phi(wc, 1.0).map(|s| s.x_star);
    let p1 = rel.p_of_d(1.0);
    let p0 = rel.p_of_d(0.0);
    let closed_p0 = rel.params().lambda() / 2.0_f64.sqrt();
    let (worst, ok) = match (phi, p1, p0) {
        (Ok(phi), Ok(p1), Ok(p0)) => {
            let worst = (phi - wc).abs().max((p1 - wc).abs()).max((p0 - closed_p0).abs());
            (worst, worst <= 1e-10)
        }
        _ => (f64::INFINITY, false),
    };
    SuiteResult {
        name: "curve_anchors",
        passed: ok,
        detail: format!("max |anchor defect| = {worst:.3e} at the well coordinate {wc:.12}"),
    }
}

/// The envelope against the grid-search oracle on random admissible triples.
pub fn suite_envelope_oracle(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let samples = samples.min(1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let c = random_admissible(&mut rng, 5.0, 4.0);
        let p = rel.p_of_d(c.d).expect("fixed point");
        let grid = GridSpec { extent: 3.0 * p, n: 200, refine_levels: 3 };
        let slow = oracle_h(rel, c, &grid).expect("window sized from p(d)");
        let fast = rel.h_eval(c).expect("sampled inside the cone");
        worst = worst.max((slow - fast).abs());
    }
    SuiteResult {
        name: "envelope_oracle",
        passed: worst <= 1e-6,
        detail: format!("max |grid min - envelope| = {worst:.3e} over {samples}"),
    }
}

/// 0 <= h <= g, h = g on the already-quasiconvex region, and h is
/// nondecreasing when either coordinate is raised.
pub fn suite_envelope_ordering(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples.min(5_000) {
        let c = random_admissible(&mut rng, 5.0, 4.0);
        let h = rel.h_eval(c).expect("admissible");
        let g = g_eval(c, rel.params()).expect("admissible");
        worst = worst.max(-h).max(h - g - 1e-12 * g.abs().max(1.0));
        if rel.classify(c) == PhaseRegion::Unrelaxed {
            worst = worst.max((h - g).abs());
        }
        let raised = Coords::new(c.x + rng.gen_range(0.0..1.0), c.y + rng.gen_range(0.0..1.0), c.d);
        worst = worst.max(h - rel.h_eval(raised).expect("still admissible") - 1e-10);
    }
    SuiteResult {
        name: "envelope_ordering",
        passed: worst <= 1e-10,
        detail: format!("max ordering violation = {worst:.3e}"),
    }
}

/// The stationarity curve is strictly decreasing in y and stays above the
/// admissibility floor |d| / y.
pub fn suite_curve_monotonicity(rel: &Relaxation, _seed: u64, _samples: usize) -> SuiteResult {
    let mut worst = f64::NEG_INFINITY;
    for d in [-1.0, 0.0, 1.0, 2.0] {
        let mut prev = f64::INFINITY;
        for k in 0..120 {
            let y = 0.05 * 1.08_f64.powi(k);
            let x = rel.phi(y, d).expect("solver").x_star;
            if x - prev > worst {
                worst = x - prev;
            }
            assert!(x > d.abs() / y, "curve dipped below the cone at y = {y}, d = {d}");
            prev = x;
        }
    }
    SuiteResult {
        name: "curve_monotonicity",
        passed: worst <= 1e-10,
        detail: format!("max increase along y grids = {worst:.3e}"),
    }
}

/// Sign and finite-difference validation of the cross derivative of g.
pub fn suite_cross_derivative(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let report = probe_xi_nonneg(rel.params(), samples, seed);
    SuiteResult {
        name: "cross_derivative",
        passed: report.passes(),
        detail: format!(
            "min scaled bracket = {:.3e}, fd mismatch {:.3e}, on-curve {:.3e}",
            report.min_scaled_xi, report.max_fd_mismatch, report.max_on_curve_mismatch
        ),
    }
}

/// The Hessian of g is positive semidefinite where the energy is already
/// quasiconvex.
pub fn suite_hessian_psd(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let report = probe_hessian_psd_on_v(rel, samples.min(10_000), seed);
    SuiteResult {
        name: "hessian_psd",
        passed: report.passes(),
        detail: format!(
            "min scaled eigenvalue = {:.3e} over {} accepted ({} attempts), fd {:.3e}",
            report.min_scaled_eigenvalue, report.samples, report.attempts, report.max_fd_mismatch
        ),
    }
}

/// Midpoint convexity of the relaxed energy along rank-one lines, the
/// defining necessary condition for quasiconvexity.
pub fn suite_rank_one_convexity(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let f = random_mat(&mut rng, 3.0);
        let angle_a = rng.gen_range(0.0..std::f64::consts::TAU);
        let angle_b = rng.gen_range(0.0..std::f64::consts::TAU);
        let a = Vec2::new(angle_a.cos(), angle_a.sin());
        let b = Vec2::new(angle_b.cos(), angle_b.sin());
        let eps = 1e-2 * f.norm().max(0.1);
        let step = Mat2::outer(a, b) * eps;
        let mid = rel.wqc_eval(f, &ThetaSpec::Zero).finite().expect("finite theta");
        let hi = rel.wqc_eval(f + step, &ThetaSpec::Zero).finite().expect("finite theta");
        let lo = rel.wqc_eval(f - step, &ThetaSpec::Zero).finite().expect("finite theta");
        worst = worst.max(mid - 0.5 * (hi + lo));
    }
    SuiteResult {
        name: "rank_one_convexity",
        passed: worst <= 1e-8,
        detail: format!("max midpoint defect = {worst:.3e} over {samples} rank-one segments"),
    }
}

/// Midpoint convexity of the extended envelope on all of coordinate space.
pub fn suite_extension_convexity(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let a = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let b = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let fa = rel.f_extended(a.0, a.1, a.2);
        let fb = rel.f_extended(b.0, b.1, b.2);
        let fm = rel.f_extended(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1), 0.5 * (a.2 + b.2));
        worst = worst.max(fm - 0.5 * (fa + fb));
    }
    SuiteResult {
        name: "extension_convexity",
        passed: worst <= 1e-8,
        detail: format!("max midpoint defect = {worst:.3e} over {samples} segments"),
    }
}

/// One-sided derivatives match across both region interfaces: the envelope
/// pieces glue to a C^1 function.
pub fn suite_c1_matching(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let samples = samples.min(1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let h = 1e-7;
    for k in 0..samples {
        let d = rng.gen_range(-1.5..2.5);
        let p = rel.p_of_d(d).expect("fixed point");
        if k % 2 == 0 {
            // Interface between the two-coordinate and one-coordinate pieces:
            // y crosses p at fixed x < p.
            let x = rng.gen_range((d.abs() / p).min(p * 0.9)..p);
            let step = h * p.max(1.0);
            let fwd = (rel.f_extended(x, p + step, d) - rel.f_extended(x, p, d)) / step;
            let bwd = (rel.f_extended(x, p, d) - rel.f_extended(x, p - step, d)) / step;
            worst = worst.max((fwd - bwd).abs());
        } else {
            // Interface between the raised piece and the untouched energy:
            // x crosses the curve at fixed y > p.
            let y = rng.gen_range(p * 1.02..4.0 * p);
            let cut = rel.phi(y, d).expect("solver").x_star;
            let step = h * cut.max(1.0);
            let fwd = (rel.f_extended(cut + step, y, d) - rel.f_extended(cut, y, d)) / step;
            let bwd = (rel.f_extended(cut, y, d) - rel.f_extended(cut - step, y, d)) / step;
            worst = worst.max((fwd - bwd).abs());
        }
    }
    SuiteResult {
        name: "c1_matching",
        passed: worst <= 1e-5,
        detail: format!("max one-sided derivative mismatch = {worst:.3e} over {samples}"),
    }
}

/// The polynomial route to the stationarity curve agrees with the bracketed
/// solver, and exactly one quartic root survives the residual filter.
pub fn suite_quartic_crosscheck(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let samples = samples.min(1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut bad_count = 0_usize;
    for _ in 0..samples {
        let y = rng.gen_range(0.2..4.0);
        let d = rng.gen_range(-2.0..3.0);
        let direct = rel.phi(y, d).expect("solver").x_star;
        let candidates = rel.phi_quartic(y, d);
        let survivors = rel.filter_stationary_candidates(y, d, &candidates, 1e-6);
        if survivors.len() != 1 {
            bad_count += 1;
            continue;
        }
        worst = worst.max((survivors[0] - direct).abs() / direct.max(1.0));
    }
    SuiteResult {
        name: "quartic_crosscheck",
        passed: bad_count == 0 && worst <= 1e-7,
        detail: format!("max relative gap = {worst:.3e}, {bad_count} multi-survivor cases"),
    }
}

/// Optimal laminates audit clean: barycenter, rank-one structure, energy.
pub fn suite_laminate_audit(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let samples = samples.min(1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0_usize;
    let mut worst_gap = 0.0_f64;
    for _ in 0..samples {
        let f = random_mat(&mut rng, 3.0);
        let lam = build_laminate(rel, f);
        let report = verify_laminate(rel, &ThetaSpec::Zero, &lam);
        if !report.passes() {
            failures += 1;
        }
        worst_gap = worst_gap.max(report.energy_gap);
    }
    SuiteResult {
        name: "laminate_audit",
        passed: failures == 0,
        detail: format!("{failures} failing audits, max energy gap {worst_gap:.3e} over {samples}"),
    }
}

/// The relaxed incompressible energy vanishes exactly on its predicted zero
/// set, sampled over determinant-one matrices away from the set's boundary.
pub fn suite_zero_set(rel: &Relaxation, seed: u64, samples: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rel.params().l();
    let mut mismatches = 0_usize;
    let mut tested = 0_usize;
    let mut k = 0_usize;
    while tested < samples.min(5_000) && k < samples * 50 {
        k += 1;
        // Alternate free random matrices with triples built inside the cone,
        // then normalize the determinant to exactly +1's rounding ball.
        let f = if k.is_multiple_of(2) {
            let g = random_mat(&mut rng, 2.0);
            let det = g.det();
            if det.abs() < 0.05 {
                continue;
            }
            let scaled = g * (1.0 / det.abs().sqrt());
            if scaled.det() < 0.0 {
                Mat2::new(-scaled.m11, -scaled.m12, scaled.m21, scaled.m22)
            } else {
                scaled
            }
        } else {
            let x: f64 = rng.gen_range(0.7..1.8);
            let y = rng.gen_range((1.0 / x).min(1.8)..2.0);
            matrix_with_coords(Coords::new(x, y, 1.0))
        };
        let c = coords(f);
        // Skip the measure-zero boundary band where "zero" and "tiny" blur.
        if (2.0 * c.x * c.x - l).abs() <= 1e-3 || (2.0 * c.y * c.y - l).abs() <= 1e-3 {
            continue;
        }
        tested += 1;
        let wqc = rel.wqc_eval(f, &ThetaSpec::IndicatorDetOne);
        let vanishes = matches!(wqc, EnergyValue::Finite(v) if v <= 1e-10);
        if vanishes != rel.kqc_member(f, 1e-9) {
            mismatches += 1;
        }
    }
    SuiteResult {
        name: "zero_set",
        passed: mismatches == 0 && tested > 0,
        detail: format!("{mismatches} membership mismatches over {tested} determinant-one samples"),
    }
}

type Suite = fn(&Relaxation, u64, usize) -> SuiteResult;

/// Run every suite at the given well parameter.
pub fn run_all(lambda: f64, seed: u64, samples: usize) -> Vec<SuiteResult> {
    let params = WellParams::new(lambda).expect("validated by the caller");
    let rel = Relaxation::new(params);
    let suites: [(&'static str, Suite); 15] = [
        ("energy_identity", suite_energy_identity),
        ("well_distance_oracle", suite_well_distance_oracle),
        ("coordinate_map", suite_coordinate_map),
        ("curve_anchors", suite_curve_anchors),
        ("envelope_oracle", suite_envelope_oracle),
        ("envelope_ordering", suite_envelope_ordering),
        ("curve_monotonicity", suite_curve_monotonicity),
        ("cross_derivative", suite_cross_derivative),
        ("hessian_psd", suite_hessian_psd),
        ("rank_one_convexity", suite_rank_one_convexity),
        ("extension_convexity", suite_extension_convexity),
        ("c1_matching", suite_c1_matching),
        ("quartic_crosscheck", suite_quartic_crosscheck),
        ("laminate_audit", suite_laminate_audit),
        ("zero_set", suite_zero_set),
    ];
    suites
        .iter()
        .map(|(name, suite)| {
            let result = suite(&rel, seed, samples);
            debug_assert_eq!(result.name, *name);
            result
        })
        .collect()
}
