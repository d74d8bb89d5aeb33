//! Brute-force reference computations and randomized analytic probes.
//!
//! Everything here recomputes quantities the fast paths produce in closed
//! form, using nothing but dense search or finite differences, so the two
//! routes can be compared: distance to the wells by scanning rotation angles,
//! the relaxed envelope by minimizing g over a grid, and the convexity
//! structure of g by sampling its Hessian and cross derivative.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{g_eval, g_gradient, g_hessian, rank_deficient_term, WellParams};
use crate::mat2::{Coords, Mat2};
use crate::relaxation::{PhaseRegion, Relaxation};

/// Search box for [`oracle_h`]: a square window of side `extent` anchored at
/// the query point, scanned at `n` points per axis and re-scanned around the
/// best cell `refine_levels` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub extent: f64,
    pub n: usize,
    pub refine_levels: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { extent: 6.0, n: 160, refine_levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// The search window cannot contain the minimizer, whose coordinates may
    /// reach up to the fixed point of the stationarity curve.
    BoxTooSmall { needed: f64, extent: f64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BoxTooSmall { needed, extent } => {
                write!(f, "search window {extent} cannot reach the minimizer ({needed} needed)")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Squared distance from `f` to the two wells by scanning `n_angles`
/// rotations per well and polishing the best bracket by golden section.
/// Knows nothing about the closed form it is checked against.
pub fn oracle_dist2(f: Mat2, params: &WellParams, n_angles: usize) -> f64 {
    assert!(n_angles >= 8, "angle scan needs a reasonable resolution");
    let tau = std::f64::consts::TAU;
    let mut best = f64::INFINITY;
    for well in [params.first_well(), params.second_well()] {
        let objective = |alpha: f64| (f - Mat2::rotation(alpha) * well).norm_sq();
        let mut best_k = 0;
        let mut best_v = f64::INFINITY;
        for k in 0..n_angles {
            let v = objective(k as f64 * tau / n_angles as f64);
            if v < best_v {
                best_v = v;
                best_k = k;
            }
        }
        let center = best_k as f64 * tau / n_angles as f64;
        let width = tau / n_angles as f64;
        best = best.min(golden_min(objective, center - width, center + width));
    }
    best.max(0.0)
}

/// Golden-section minimum of a locally unimodal objective on [a, b].
fn golden_min(obj: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = obj(c);
    let mut fd = obj(d);
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = obj(d);
        }
        if b - a <= 1e-13 {
            break;
        }
    }
    fc.min(fd)
}

/// The envelope by brute force: minimize g over the quadrant of coordinates
/// at least (x, y) at fixed determinant, scanning the [`GridSpec`] window.
pub fn oracle_h(rel: &Relaxation, c: Coords, grid: &GridSpec) -> Result<f64, OracleError> {
    assert!(grid.extent > 0.0 && grid.n >= 2);
    let p = rel.p_of_d(c.d).expect("fixed-point solve failed");
    let needed = (p - c.x.min(c.y)).max(0.0);
    if grid.extent <= needed {
        return Err(OracleError::BoxTooSmall { needed, extent: grid.extent });
    }

    let value = |xi: f64, eta: f64| {
        g_eval(Coords::new(xi, eta, c.d), rel.params())
            .expect("raising coordinates preserves admissibility")
    };
    let mut lo = (c.x, c.y);
    let mut ext = grid.extent;
    let mut best = (c.x, c.y, f64::INFINITY);
    for _ in 0..=grid.refine_levels {
        let step = ext / (grid.n - 1) as f64;
        for i in 0..grid.n {
            let xi = lo.0 + i as f64 * step;
            for j in 0..grid.n {
                let eta = lo.1 + j as f64 * step;
                let v = value(xi, eta);
                if v < best.2 {
                    best = (xi, eta, v);
                }
            }
        }
        lo = ((best.0 - step).max(c.x), (best.1 - step).max(c.y));
        ext = 2.0 * step;
    }
    Ok(best.2)
}

/// Stationarity curve by plain bisection on the unsquared equation, sharing
/// no code with the production solver.
fn phi_bisect(params: &WellParams, y: f64, d: f64) -> f64 {
    let (l, m) = (params.l(), params.m());
    let residual = |x: f64| {
        let zsq = (x * y - d) * (x * y + d);
        if zsq <= 0.0 {
            return f64::INFINITY;
        }
        let z = zsq.sqrt();
        let a = (x * x + y * y) * l / 2.0 + m * z + 2.0 * d;
        l + m * y * y / z - 2.0 * a.max(0.0).sqrt()
    };
    let lower = d.abs() / y;
    let mut hi = y.max(lower) + 1.0;
    while residual(hi) > 0.0 {
        hi = lower + 2.0 * (hi - lower);
    }
    let mut lo = lower;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Results of sampling the cross derivative of g.
///
/// The quantity `xi` is the bracket in
/// d^2 g / dx dy = x y / (2 A^(3/2)) * xi; its sign decides whether raising
/// one coordinate can ever lower the optimal choice of the other.
#[derive(Debug, Clone, PartialEq)]
pub struct XiReport {
    pub samples: usize,
    pub seed: u64,
    /// Smallest xi / max(1, x^2 + y^2 + |d|) seen.
    pub min_scaled_xi: f64,
    /// Largest relative gap between the analytic cross derivative and a
    /// centered finite difference of the gradient.
    pub max_fd_mismatch: f64,
    /// Same gap sampled on the stationarity curve itself, where the cross
    /// derivative controls the curve's slope.
    pub max_on_curve_mismatch: f64,
}

impl XiReport {
    pub fn passes(&self) -> bool {
        self.min_scaled_xi >= -1e-9
            && self.max_fd_mismatch <= 1e-4
            && self.max_on_curve_mismatch <= 1e-4
    }
}

fn xi_value(params: &WellParams, x: f64, y: f64, d: f64) -> (f64, f64) {
    let (l, m) = (params.l(), params.m());
    let zsq = (x * y - d) * (x * y + d);
    let z = zsq.sqrt();
    let a = (x * x + y * y) * l / 2.0 + m * z + 2.0 * d;
    let da_dx_over_x = l + m * y * y / z;
    let da_dy_over_y = l + m * x * x / z;
    let xi = da_dx_over_x * da_dy_over_y + 2.0 * a * m * (2.0 * d * d - x * x * y * y) / (z * zsq);
    let cross = x * y / (2.0 * a * a.sqrt()) * xi;
    (xi, cross)
}

/// Sample xi across the admissible cone and validate the analytic cross
/// derivative against finite differences, including on the curve itself.
pub fn probe_xi_nonneg(params: &WellParams, samples: usize, seed: u64) -> XiReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_scaled = f64::INFINITY;
    let mut max_fd = 0.0_f64;
    for _ in 0..samples {
        let x = rng.gen_range(0.1..5.0);
        let y = rng.gen_range(0.1..5.0);
        let d = rng.gen_range(-0.99..0.99) * x * y;
        let (xi, cross) = xi_value(params, x, y, d);
        let scale = (x * x + y * y + d.abs()).max(1.0);
        min_scaled = min_scaled.min(xi / scale);

        let h = 1e-6 * y.max(1.0);
        let up = g_gradient(Coords::new(x, y + h, d), params).expect("interior point");
        let dn = g_gradient(Coords::new(x, y - h, d), params).expect("interior point");
        let fd = (up[0] - dn[0]) / (2.0 * h);
        max_fd = max_fd.max((fd - cross).abs() / cross.abs().max(1.0));
    }

    let mut max_curve = 0.0_f64;
    let curve_samples = (samples / 100).clamp(10, 2000);
    for _ in 0..curve_samples {
        let y = rng.gen_range(0.3..4.0);
        let d = rng.gen_range(-1.5..2.5);
        let x = phi_bisect(params, y, d);
        if x * x * y * y - d * d < 1e-2 * x * x * y * y {
            continue;
        }
        let grad = g_gradient(Coords::new(x, y, d), params).expect("curve is interior");
        assert!(grad[0].abs() <= 1e-6 * (1.0 + grad[1].abs()), "curve point not stationary");
        let (_, cross) = xi_value(params, x, y, d);
        let h = 1e-6 * y.max(1.0);
        let up = g_gradient(Coords::new(x, y + h, d), params).expect("interior point");
        let dn = g_gradient(Coords::new(x, y - h, d), params).expect("interior point");
        let fd = (up[0] - dn[0]) / (2.0 * h);
        max_curve = max_curve.max((fd - cross).abs() / cross.abs().max(1.0));
    }

    XiReport {
        samples,
        seed,
        min_scaled_xi: min_scaled,
        max_fd_mismatch: max_fd,
        max_on_curve_mismatch: max_curve,
    }
}

/// Results of sampling the Hessian of g on the region where the energy is
/// already quasiconvex.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    pub samples: usize,
    pub attempts: usize,
    pub seed: u64,
    /// Smallest eigenvalue seen, relative to the Hessian's norm.
    pub min_scaled_eigenvalue: f64,
    /// Largest relative gap between the analytic Hessian and second
    /// differences of g.
    pub max_fd_mismatch: f64,
    /// Largest |det| of the rank-deficient term, relative to its norm cubed;
    /// the term is singular by construction.
    pub max_rank_term_det: f64,
    /// Largest negativity of the rank-deficient term's leading 2x2 block
    /// (entry and determinant, scaled); the block is positive semidefinite.
    pub max_rank_term_block_violation: f64,
}

impl HessianReport {
    pub fn passes(&self) -> bool {
        self.min_scaled_eigenvalue >= -1e-8
            && self.max_fd_mismatch <= 1e-4
            && self.max_rank_term_det <= 1e-9
            && self.max_rank_term_block_violation <= 1e-10
    }
}

/// Smallest eigenvalue of a symmetric 3x3 matrix, by the trigonometric
/// solution of its characteristic cubic.
pub fn sym3_min_eig(m: [[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (m[i][j] - if i == j { q } else { 0.0 }) / p;
    let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(1, 2))
        - b(0, 1) * (b(0, 1) * b(2, 2) - b(1, 2) * b(0, 2))
        + b(0, 2) * (b(0, 1) * b(1, 2) - b(1, 1) * b(0, 2));
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos()
}

/// Sample the analytic Hessian of g on the already-quasiconvex region,
/// checking positive semidefiniteness, the finite-difference match, and the
/// structure of the rank-deficient term.
pub fn probe_hessian_psd_on_v(rel: &Relaxation, samples: usize, seed: u64) -> HessianReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0_usize;
    let mut accepted = 0_usize;
    let mut min_eig = f64::INFINITY;
    let mut max_fd = 0.0_f64;
    let mut max_det = 0.0_f64;
    let mut max_block = 0.0_f64;
    while accepted < samples && attempts < samples.saturating_mul(200) {
        attempts += 1;
        let x = rng.gen_range(0.05..6.0);
        let y = rng.gen_range(0.05..6.0);
        let d = rng.gen_range(-0.95..0.95) * x * y;
        let c = Coords::new(x, y, d);
        if rel.classify(c) != PhaseRegion::Unrelaxed {
            continue;
        }
        accepted += 1;

        let hess = g_hessian(c, rel.params()).expect("interior point");
        let norm: f64 = hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        min_eig = min_eig.min(sym3_min_eig(hess) / norm.max(1.0));

        let steps = [1e-4 * x.max(1.0), 1e-4 * y.max(1.0), 1e-4 * d.abs().max(1.0)];
        let fd = fd_hessian(c, rel.params(), steps);
        for i in 0..3 {
            for j in 0..3 {
                max_fd = max_fd.max((fd[i][j] - hess[i][j]).abs() / norm.max(1.0));
            }
        }

        let s = rank_deficient_term(c);
        let s_norm = s.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
        let det_s = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[1][2])
            - s[0][1] * (s[0][1] * s[2][2] - s[1][2] * s[0][2])
            + s[0][2] * (s[0][1] * s[1][2] - s[1][1] * s[0][2]);
        max_det = max_det.max(det_s.abs() / (s_norm * s_norm * s_norm));
        let block_det = s[0][0] * s[1][1] - s[0][1] * s[0][1];
        max_block = max_block.max(-s[0][0] / s_norm).max(-block_det / (s_norm * s_norm)).max(0.0);
    }
    assert!(accepted == samples, "rejection sampling starved: {accepted}/{samples}");
    HessianReport {
        samples,
        attempts,
        seed,
        min_scaled_eigenvalue: min_eig,
        max_fd_mismatch: max_fd,
        max_rank_term_det: max_det,
        max_rank_term_block_violation: max_block,
    }
}

fn fd_hessian(c: Coords, params: &WellParams, steps: [f64; 3]) -> [[f64; 3]; 3] {
    let at = |dx: f64, dy: f64, dd: f64| {
        g_eval(Coords::new(c.x + dx, c.y + dy, c.d + dd), params).expect("stencil stays admissible")
    };
    let shift = |i: usize, t: f64| match i {
        0 => (t, 0.0, 0.0),
        1 => (0.0, t, 0.0),
        _ => (0.0, 0.0, t),
    };
    let mut out = [[0.0; 3]; 3];
    let base = at(0.0, 0.0, 0.0);
    for i in 0..3 {
        let (dx, dy, dd) = shift(i, steps[i]);
        out[i][i] = (at(dx, dy, dd) - 2.0 * base + at(-dx, -dy, -dd)) / (steps[i] * steps[i]);
        for j in (i + 1)..3 {
            let (ex, ey, ed) = shift(j, steps[j]);
            let pp = at(dx + ex, dy + ey, dd + ed);
            let pm = at(dx - ex, dy - ey, dd - ed);
            let mp = at(-dx + ex, -dy + ey, -dd + ed);
            let mm = at(-dx - ex, -dy - ey, -dd - ed);
            let v = (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::dist2_two_wells;
    use crate::mat2::coords;

    fn params() -> WellParams {
        WellParams::new(1.5).unwrap()
    }

    fn rel() -> Relaxation {
        Relaxation::new(params())
    }

    #[test]
    fn angle_scan_hits_known_distances() {
        let p = params();
        assert!((oracle_dist2(Mat2::identity(), &p, 4096) - 13.0 / 36.0).abs() < 1e-9);
        assert!((oracle_dist2(Mat2::diag(2.0, 0.5), &p, 4096) - 5.0 / 18.0).abs() < 1e-9);
        assert!(oracle_dist2(p.first_well(), &p, 4096) < 1e-12);
        assert!(oracle_dist2(Mat2::rotation(0.7) * p.second_well(), &p, 4096) < 1e-12);
    }

    #[test]
    fn angle_scan_matches_closed_form_on_random_matrices() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let f = Mat2::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let slow = oracle_dist2(f, &p, 4096);
            let fast = dist2_two_wells(f, &p);
            assert!((slow - fast).abs() < 1e-7, "{f:?}: {slow} vs {fast}");
        }
    }

    #[test]
    fn finer_scans_do_not_get_worse() {
        let p = params();
        let f = Mat2::new(0.3, -1.1, 0.8, 0.9);
        let coarse = oracle_dist2(f, &p, 64);
        let fine = oracle_dist2(f, &p, 8192);
        assert!(fine <= coarse + 1e-12);
    }

    #[test]
    fn grid_search_reproduces_the_envelope() {
        let r = rel();
        let grid = GridSpec { extent: 3.0, n: 120, refine_levels: 3 };
        for c in [
            Coords::new(1.0, 1.0, 1.0),
            Coords::new(0.5, 2.0, 1.0),
            Coords::new(2.0, 0.5, 1.0),
            Coords::new(0.3, 0.4, 0.0),
        ] {
            let slow = oracle_h(&r, c, &grid).unwrap();
            let fast = r.h_eval(c).unwrap();
            assert!((slow - fast).abs() < 1e-7, "{c:?}: {slow} vs {fast}");
        }
    }

    #[test]
    fn grid_search_at_an_unrelaxed_point_stays_put() {
        let r = rel();
        let s = (2.125_f64).sqrt();
        let grid = GridSpec { extent: 2.0, n: 100, refine_levels: 3 };
        let slow = oracle_h(&r, Coords::new(s, s, 1.0), &grid).unwrap();
        assert!((slow - 5.0 / 18.0).abs() < 1e-9);
    }

    #[test]
    fn undersized_window_is_rejected() {
        let r = rel();
        let grid = GridSpec { extent: 0.05, n: 50, refine_levels: 1 };
        let err = oracle_h(&r, Coords::new(0.2, 0.2, 0.01), &grid).unwrap_err();
        assert!(matches!(err, OracleError::BoxTooSmall { .. }));
    }

    #[test]
    fn curve_bisection_matches_production_solver() {
        let r = rel();
        for (y, d) in [(2.0, 1.0), (0.7, -0.3), (1.2, 0.0)] {
            let slow = phi_bisect(r.params(), y, d);
            let fast = r.phi(y, d).unwrap().x_star;
            assert!((slow - fast).abs() < 1e-10, "({y}, {d}): {slow} vs {fast}");
        }
    }

    #[test]
    fn smallest_eigenvalue_of_known_matrices() {
        assert!(
            (sym3_min_eig([[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]) - 1.0).abs() < 1e-12
        );
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        assert!((sym3_min_eig(m) - 1.0).abs() < 1e-10);
        let rank1 = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        assert!(sym3_min_eig(rank1).abs() < 1e-10);
    }

    #[test]
    fn xi_probe_smoke() {
        let a = probe_xi_nonneg(&params(), 500, 7);
        assert!(a.passes(), "{a:?}");
        let b = probe_xi_nonneg(&params(), 500, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn hessian_probe_smoke() {
        let r = rel();
        let a = probe_hessian_psd_on_v(&r, 300, 11);
        assert!(a.passes(), "{a:?}");
        let b = probe_hessian_psd_on_v(&r, 300, 11);
        assert_eq!(a, b);
        assert!(a.attempts >= a.samples);
    }

    #[test]
    fn coordinates_of_probe_samples_are_admissible() {
        // The sampling scheme used by the probes never leaves the cone.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let x = rng.gen_range(0.1..5.0);
            let y = rng.gen_range(0.1..5.0);
            let d = rng.gen_range(-0.99..0.99) * x * y;
            assert!(Coords::new(x, y, d).admissibility_margin() > 0.0);
        }
        let f = Mat2::new(0.2, 1.4, -0.7, 0.9);
        assert!(coords(f).admissibility_margin() >= 0.0);
    }
}
