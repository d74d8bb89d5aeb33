//! The relaxed envelope.
//!
//! Minimizing g over {xi >= x, eta >= y} at fixed determinant gives the
//! relaxed energy. The minimizer structure is controlled by the curve
//! phi(y, d): the unique x at which d/dx g(x, y, d) = 0, equivalently
//!
//!   L + M y^2 / z = 2 sqrt(A),   z = sqrt(x^2 y^2 - d^2),          (*)
//!
//! whose left side strictly decreases and right side strictly increases in x.
//! phi(., d) is strictly decreasing with a unique fixed point p(d) =
//! phi(p(d), d), and the plane splits into four regions:
//!
//! - x <= p, y <= p: raise both coordinates to p (a second-order laminate);
//!   value g(p, p, d),
//! - y >= p, x <= phi(y, d): raise x to phi(y, d); value g(phi(y, d), y, d),
//! - x >= p, y <= phi(x, d): raise y to phi(x, d); value g(x, phi(x, d), d),
//! - otherwise: already relaxed; value g(x, y, d).
//!
//! The pieces glue to a C^1 convex function of (x, y, d), nondecreasing in x
//! and y, which is what the envelope evaluation returns.
//!
//! Two independent routes compute phi: a safeguarded Newton iteration on the
//! unsquared equation (*) (the production path), and the real roots of the
//! quartic polynomial in u = x^2 obtained by squaring (*) twice
//! ([`Relaxation::phi_quartic`], kept as a cross-check).

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use crate::energy::{g_eval, EnergyValue, ThetaSpec, WellParams};
use crate::mat2::{coords, Coords, Mat2};

/// Default absolute tolerance on the stationarity residual.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;

/// Iteration cap for the bracketed solvers; hitting it signals a bug, not an
/// unlucky input, because the bracket halves at least every other step.
const MAX_ITER: u32 = 200;

/// Entries kept per memo table before it is dropped and rebuilt.
const CACHE_CAP: usize = 1 << 18;

/// Errors from the envelope solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaxError {
    /// A bracketed solve ran out of iterations.
    ConvergenceFailure { iterations: u32, residual: f64 },
    /// The coordinate triple violates x*y >= |d| beyond rounding.
    Inadmissible { x: f64, y: f64, d: f64 },
}

impl fmt::Display for RelaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelaxError::ConvergenceFailure { iterations, residual } => write!(
                f,
                "stationarity solve stalled after {iterations} iterations (residual {residual:e})"
            ),
            RelaxError::Inadmissible { x, y, d } => {
                write!(f, "({x}, {y}, {d}) violates x*y >= |d|: no matrix has these coordinates")
            }
        }
    }
}

impl std::error::Error for RelaxError {}

/// Result of one stationarity solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSolve {
    /// The stationary x value phi(y, d).
    pub x_star: f64,
    /// Signed residual of (*) at `x_star`; within the solver tolerance unless
    /// the bracket collapsed to machine width first.
    pub residual: f64,
    /// Residual evaluations spent.
    pub iterations: u32,
    /// Final bracket around the root.
    pub bracket: (f64, f64),
}

/// Which piece of the envelope a coordinate triple falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRegion {
    /// Both coordinates below p(d); relaxed by a second-order laminate.
    SecondOrder,
    /// x below the stationarity curve at (y, d); one split raising x.
    FirstOrderRaiseX,
    /// y below the stationarity curve at (x, d); one split raising y.
    FirstOrderRaiseY,
    /// The energy is already quasiconvex here; no lamination lowers it.
    Unrelaxed,
    /// x*y < |d|: no matrix has these coordinates.
    Inadmissible,
}

impl PhaseRegion {
    pub fn label(self) -> &'static str {
        match self {
            PhaseRegion::SecondOrder => "second_order",
            PhaseRegion::FirstOrderRaiseX => "first_order_raise_x",
            PhaseRegion::FirstOrderRaiseY => "first_order_raise_y",
            PhaseRegion::Unrelaxed => "unrelaxed",
            PhaseRegion::Inadmissible => "inadmissible",
        }
    }
}

impl fmt::Display for PhaseRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Envelope evaluator for one set of well parameters.
///
/// Owns bounded memo tables for phi and p(d), keyed by exact input bits, so
/// repeated evaluations (grids, probes) do not re-run the solvers. Shared
/// references are safe to use from multiple threads.
#[derive(Debug)]
pub struct Relaxation {
    params: WellParams,
    tol: f64,
    phi_cache: Mutex<HashMap<(u64, u64), PhiSolve>>,
    p_cache: Mutex<HashMap<u64, f64>>,
}

impl Relaxation {
    pub fn new(params: WellParams) -> Self {
        Self::with_tolerance(params, DEFAULT_SOLVER_TOL)
    }

    /// `tol` is the absolute residual tolerance for both bracketed solvers.
    pub fn with_tolerance(params: WellParams, tol: f64) -> Self {
        Self {
            params,
            tol,
            phi_cache: Mutex::new(HashMap::new()),
            p_cache: Mutex::new(HashMap::new()),
        }
    }

    #[inline]
    pub fn params(&self) -> &WellParams {
        &self.params
    }

    /// Signed residual of the stationarity equation (*) at x, for fixed
    /// (y, d). Positive left of the curve, negative right of it; +inf on or
    /// below the admissibility boundary x*y <= |d| where the equation blows up.
    pub fn stationarity_residual(&self, x: f64, y: f64, d: f64) -> f64 {
        self.residual_and_slope(x, y, d).0
    }

    fn residual_and_slope(&self, x: f64, y: f64, d: f64) -> (f64, f64) {
        let (l, m) = (self.params.l(), self.params.m());
        let xy = x * y;
        let zsq = (xy - d) * (xy + d);
        if zsq <= 0.0 {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        let z = zsq.sqrt();
        let y2 = y * y;
        let lhs = l + m * y2 / z;
        let a = (x * x + y2) * l / 2.0 + m * z + 2.0 * d;
        let sqrt_a = a.max(0.0).sqrt();
        let e = lhs - 2.0 * sqrt_a;
        let de = -m * x * y2 * y2 / (z * zsq) - x * lhs / sqrt_a;
        (e, de)
    }

    /// The stationarity curve: the unique x > |d|/y solving (*).
    ///
    /// Bracketed Newton: the lower end |d|/y has residual +inf, the upper end
    /// grows geometrically until the residual turns negative, and Newton steps
    /// are accepted only inside the bracket. Requires y > 0.
    pub fn phi(&self, y: f64, d: f64) -> Result<PhiSolve, RelaxError> {
        assert!(y > 0.0 && y.is_finite() && d.is_finite(), "phi needs finite input with y > 0");
        let key = (y.to_bits(), d.to_bits());
        if let Some(hit) = self.phi_cache.lock().expect("phi cache lock").get(&key) {
            return Ok(*hit);
        }
        let solved = self.phi_uncached(y, d)?;
        let mut cache = self.phi_cache.lock().expect("phi cache lock");
        if cache.len() >= CACHE_CAP {
            cache.clear();
        }
        cache.insert(key, solved);
        Ok(solved)
    }

    fn phi_uncached(&self, y: f64, d: f64) -> Result<PhiSolve, RelaxError> {
        let lower = d.abs() / y;
        let mut iterations = 0_u32;

        let mut hi = y.max(lower) + 1.0;
        loop {
            iterations += 1;
            if iterations > MAX_ITER {
                return Err(RelaxError::ConvergenceFailure { iterations, residual: f64::INFINITY });
            }
            if self.residual_and_slope(hi, y, d).0 < 0.0 {
                break;
            }
            hi = lower + 2.0 * (hi - lower);
        }

        let mut lo = lower;
        let mut x = 0.5 * (lo + hi);
        let mut best = (x, f64::INFINITY);
        while iterations < MAX_ITER {
            iterations += 1;
            let (e, de) = self.residual_and_slope(x, y, d);
            if e.abs() < best.1.abs() {
                best = (x, e);
            }
            if e.abs() <= self.tol {
                return Ok(PhiSolve { x_star: x, residual: e, iterations, bracket: (lo, hi) });
            }
            if e > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1e-300) {
                return Ok(PhiSolve {
                    x_star: best.0,
                    residual: best.1,
                    iterations,
                    bracket: (lo, hi),
                });
            }
            let newton = x - e / de;
            x = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(RelaxError::ConvergenceFailure { iterations, residual: best.1 })
    }

    /// The fixed point p(d) = phi(p(d), d), found by bracketed secant /
    /// bisection on phi(y, d) - y, which is strictly decreasing in y.
    pub fn p_of_d(&self, d: f64) -> Result<f64, RelaxError> {
        assert!(d.is_finite(), "p_of_d needs finite d");
        let key = d.to_bits();
        if let Some(hit) = self.p_cache.lock().expect("p cache lock").get(&key) {
            return Ok(*hit);
        }
        let p = self.p_uncached(d)?;
        let mut cache = self.p_cache.lock().expect("p cache lock");
        if cache.len() >= CACHE_CAP {
            cache.clear();
        }
        cache.insert(key, p);
        Ok(p)
    }

    fn p_uncached(&self, d: f64) -> Result<f64, RelaxError> {
        let psi = |y: f64| -> Result<f64, RelaxError> { Ok(self.phi(y, d)?.x_star - y) };

        // p(d)^2 > |d|, so sqrt(|d|) sits left of the fixed point whenever
        // d != 0; for small |d| shrink until the sign is positive.
        let mut lo = d.abs().sqrt().max(1e-3);
        let mut f_lo = psi(lo)?;
        let mut guard = 0;
        while f_lo <= 0.0 {
            lo *= 0.5;
            f_lo = psi(lo)?;
            guard += 1;
            if guard > MAX_ITER {
                return Err(RelaxError::ConvergenceFailure { iterations: guard, residual: f_lo });
            }
        }
        let mut hi = (2.0 * lo).max(2.0);
        let mut f_hi = psi(hi)?;
        guard = 0;
        while f_hi >= 0.0 {
            hi *= 2.0;
            f_hi = psi(hi)?;
            guard += 1;
            if guard > MAX_ITER {
                return Err(RelaxError::ConvergenceFailure { iterations: guard, residual: f_hi });
            }
        }

        for iter in 0..MAX_ITER {
            // Alternate secant and bisection so the bracket provably shrinks.
            let mut mid =
                if iter % 2 == 0 { 0.5 * (lo + hi) } else { hi - f_hi * (hi - lo) / (f_hi - f_lo) };
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let f_mid = psi(mid)?;
            if f_mid.abs() <= self.tol {
                return Ok(mid);
            }
            if f_mid > 0.0 {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(RelaxError::ConvergenceFailure { iterations: MAX_ITER, residual: f_lo.min(-f_hi) })
    }

    /// All real roots u > d^2/y^2 of the quartic obtained by squaring (*)
    /// twice, returned as candidate x = sqrt(u) values in increasing order.
    ///
    /// Squaring introduces spurious candidates; keep only those passing the
    /// unsquared residual, e.g. via [`Relaxation::filter_stationary_candidates`].
    pub fn phi_quartic(&self, y: f64, d: f64) -> Vec<f64> {
        assert!(y > 0.0 && y.is_finite() && d.is_finite(), "phi_quartic needs finite input, y > 0");
        let (l, m) = (self.params.l(), self.params.m());
        let y2 = y * y;
        let d2 = d * d;

        // z^2(u) and the linear-in-u factors of the twice-squared equation.
        let zsq = [-d2, y2];
        let q = l * l - 2.0 * l * y2 - 8.0 * d;
        let inner = {
            // (L^2 - G) z^2 + M^2 y^4 with G = 2L u + (2L y^2 + 8d)
            let lg = [q, -2.0 * l];
            let mut c = poly::conv(&lg, &zsq);
            c[0] += m * m * y2 * y2;
            c
        };
        let r1 = [-4.0 * m * d2 - 2.0 * l * m * y2, 4.0 * m * y2];
        let lhs = poly::conv(&inner, &inner);
        let rhs = poly::conv(&poly::conv(&r1, &r1), &zsq);
        let mut quartic = vec![0.0_f64; 5];
        for (i, slot) in quartic.iter_mut().enumerate() {
            *slot = lhs.get(i).copied().unwrap_or(0.0) - rhs.get(i).copied().unwrap_or(0.0);
        }
        let peak = quartic.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        if peak > 0.0 {
            for c in &mut quartic {
                *c /= peak;
            }
        }

        let mut out: Vec<f64> = poly::real_roots(&quartic)
            .into_iter()
            .filter(|&u| u > 0.0 && u * y2 - d2 > 0.0)
            .map(f64::sqrt)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
        out
    }

    /// Keep the candidates whose unsquared stationarity residual is small,
    /// merging clusters the quartic cannot separate into one root each.
    ///
    /// A candidate passes when its residual is within `rel_tol` of the
    /// equation's own magnitude, or when it lies within `rel_tol * max(1, x)`
    /// of a residual zero (the slope term): near the cone boundary the
    /// residual's slope blows up like 1/z^3, so an accurately placed root can
    /// still carry a sizable residual. Survivors closer together than the
    /// filter can resolve are one stationary point; the member with the
    /// smallest residual represents the cluster.
    pub fn filter_stationary_candidates(
        &self,
        y: f64,
        d: f64,
        candidates: &[f64],
        rel_tol: f64,
    ) -> Vec<f64> {
        let (l, m) = (self.params.l(), self.params.m());
        let mut kept: Vec<(f64, f64)> = Vec::new();
        for &x in candidates {
            let zsq = (x * y - d) * (x * y + d);
            if zsq <= 0.0 {
                continue;
            }
            let magnitude = (l + m * y * y / zsq.sqrt()).max(1.0);
            let (e, de) = self.residual_and_slope(x, y, d);
            if e.abs() <= rel_tol * magnitude.max(de.abs() * x.max(1.0)) {
                kept.push((x, e.abs()));
            }
        }
        kept.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("residuals are finite"));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (x, e) in kept {
            match merged.last_mut() {
                Some(last) if x - last.0 <= 4.0 * rel_tol * x.max(1.0) => {
                    if e < last.1 {
                        *last = (x, e);
                    }
                }
                _ => merged.push((x, e)),
            }
        }
        merged.into_iter().map(|(x, _)| x).collect()
    }

    fn phi_value(&self, y: f64, d: f64) -> f64 {
        self.phi(y, d).expect("stationarity solve failed: solver bug").x_star
    }

    fn p_value(&self, d: f64) -> f64 {
        self.p_of_d(d).expect("fixed-point solve failed: solver bug")
    }

    /// Which envelope piece the triple falls in. Boundary ties resolve to the
    /// earlier case in the order SecondOrder, FirstOrderRaiseX,
    /// FirstOrderRaiseY, Unrelaxed. Inadmissibility means x*y < |d| beyond
    /// rounding: matrices with orthogonal diagonal images land exactly on the
    /// cone boundary and the product x*y can come out an ulp short there.
    pub fn classify(&self, c: Coords) -> PhaseRegion {
        let xy = c.x * c.y;
        let zsq = (xy - c.d) * (xy + c.d);
        let scale = (xy * xy).max(c.d * c.d).max(1.0);
        if zsq < -1e-12 * scale {
            return PhaseRegion::Inadmissible;
        }
        let p = self.p_value(c.d);
        if c.x <= p && c.y <= p {
            return PhaseRegion::SecondOrder;
        }
        if c.y >= p && c.x <= self.phi_value(c.y, c.d) {
            return PhaseRegion::FirstOrderRaiseX;
        }
        if c.x >= p && c.y <= self.phi_value(c.x, c.d) {
            return PhaseRegion::FirstOrderRaiseY;
        }
        PhaseRegion::Unrelaxed
    }

    /// The coordinates the optimal laminate's leaves reach: the argmin of g
    /// over {xi >= x, eta >= y} at this determinant.
    pub fn relaxed_target(&self, c: Coords) -> Coords {
        match self.classify(c) {
            PhaseRegion::SecondOrder => {
                let p = self.p_value(c.d);
                Coords::new(p, p, c.d)
            }
            PhaseRegion::FirstOrderRaiseX => Coords::new(self.phi_value(c.y, c.d), c.y, c.d),
            PhaseRegion::FirstOrderRaiseY => Coords::new(c.x, self.phi_value(c.x, c.d), c.d),
            PhaseRegion::Unrelaxed | PhaseRegion::Inadmissible => c,
        }
    }

    /// The envelope restricted to admissible triples; errors when x*y < |d|
    /// beyond rounding.
    pub fn h_eval(&self, c: Coords) -> Result<f64, RelaxError> {
        let xy = c.x * c.y;
        let zsq = (xy - c.d) * (xy + c.d);
        let scale = (xy * xy).max(c.d * c.d).max(1.0);
        if zsq < -1e-12 * scale {
            return Err(RelaxError::Inadmissible { x: c.x, y: c.y, d: c.d });
        }
        Ok(self.f_extended(c.x, c.y, c.d))
    }

    /// The convex C^1 extension of the envelope to all of (x, y, d)-space.
    ///
    /// The three capped pieces cover everything outside the admissible cone,
    /// so this is total: any point escaping them satisfies x*y > |d|.
    pub fn f_extended(&self, x: f64, y: f64, d: f64) -> f64 {
        let p = self.p_value(d);
        let value_at =
            |c: Coords| g_eval(c, &self.params).expect("region arithmetic stays admissible");
        if x <= p && y <= p {
            return value_at(Coords::new(p, p, d));
        }
        if y >= p {
            let cut = self.phi_value(y, d);
            if x <= cut {
                return value_at(Coords::new(cut, y, d));
            }
        }
        if x >= p {
            let cut = self.phi_value(x, d);
            if y <= cut {
                return value_at(Coords::new(x, cut, d));
            }
        }
        value_at(Coords::new(x, y, d))
    }

    /// The relaxed energy of a matrix: envelope plus determinant penalty.
    /// Satisfies 0 <= result <= pointwise energy for every matrix.
    pub fn wqc_eval(&self, f: Mat2, theta: &ThetaSpec) -> EnergyValue {
        let c = coords(f);
        let h = self.h_eval(c).expect("coordinates of a real matrix are admissible");
        theta.eval(f.det()) + h
    }

    /// Membership in the zero set of the relaxed incompressible energy:
    /// det F = 1 and both diagonal images no longer than the well's,
    /// |F(e1 +/- e2)|^2 <= L, all within `tol`.
    pub fn kqc_member(&self, f: Mat2, tol: f64) -> bool {
        let plus = (f.m11 + f.m12).powi(2) + (f.m21 + f.m22).powi(2);
        let minus = (f.m11 - f.m12).powi(2) + (f.m21 - f.m22).powi(2);
        (f.det() - 1.0).abs() <= tol
            && plus <= self.params.l() + tol
            && minus <= self.params.l() + tol
    }
}

/// Dense real-root extraction for the low-degree polynomials used by the
/// quartic cross-check route.
mod poly {
    /// Product of two coefficient arrays (ascending powers).
    pub fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] += ai * bj;
            }
        }
        out
    }

    fn eval(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    fn deriv(c: &[f64]) -> Vec<f64> {
        c.iter().enumerate().skip(1).map(|(i, &ci)| ci * i as f64).collect()
    }

    /// Magnitude of the polynomial's terms at x, for relative tolerances.
    fn term_scale(c: &[f64], x: f64) -> f64 {
        let mut pow = 1.0;
        let mut s = 0.0;
        for &ci in c {
            s += ci.abs() * pow;
            pow *= x.abs();
        }
        s.max(1e-300)
    }

    /// All real roots, found by recursive monotone splitting: the roots of
    /// the derivative cut the line into intervals where the polynomial is
    /// monotone, and each sign change is then bisected and Newton-polished.
    /// Critical points where the value vanishes (tangencies) count as roots.
    pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
        let mut c = coeffs.to_vec();
        while c.last().is_some_and(|v| *v == 0.0) {
            c.pop();
        }
        if c.len() <= 1 {
            return Vec::new();
        }
        if c.len() == 2 {
            return vec![-c[0] / c[1]];
        }

        let lead = *c.last().expect("nonempty");
        let bound = 1.0 + c[..c.len() - 1].iter().fold(0.0_f64, |a, v| a.max((v / lead).abs()));
        let mut cuts = real_roots(&deriv(&c));
        cuts.retain(|r| r.abs() < bound);
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

        let mut points = Vec::with_capacity(cuts.len() + 2);
        points.push(-bound);
        points.extend(cuts.iter().copied());
        points.push(bound);

        let mut roots = Vec::new();
        for &cut in &cuts {
            if eval(&c, cut).abs() <= 1e-9 * term_scale(&c, cut) {
                roots.push(cut);
            }
        }
        for pair in points.windows(2) {
            let (mut a, mut b) = (pair[0], pair[1]);
            let (fa, fb) = (eval(&c, a), eval(&c, b));
            let product = fa * fb;
            if product >= 0.0 || product.is_nan() {
                continue;
            }
            let positive_left = fa > 0.0;
            for _ in 0..120 {
                let mid = 0.5 * (a + b);
                let fm = eval(&c, mid);
                if (fm > 0.0) == positive_left {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= f64::EPSILON * b.abs().max(1.0) {
                    break;
                }
            }
            let mut root = 0.5 * (a + b);
            let dc = deriv(&c);
            for _ in 0..3 {
                let f = eval(&c, root);
                let df = eval(&dc, root);
                let next = root - f / df;
                if next.is_finite() && next > a - (b - a) && next < b + (b - a) {
                    root = next;
                }
            }
            roots.push(root);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
        roots
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::w_eval;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel() -> Relaxation {
        Relaxation::new(WellParams::new(1.5).unwrap())
    }

    #[test]
    fn well_coordinate_is_stationary_and_fixed() {
        for lam in [1.1, 1.5, 2.0, 5.0] {
            let r = Relaxation::new(WellParams::new(lam).unwrap());
            let wc = r.params().well_coordinate();
            let solve = r.phi(wc, 1.0).unwrap();
            assert!(
                (solve.x_star - wc).abs() <= 1e-10,
                "lambda {lam}: phi({wc}, 1) = {} off by {:e}",
                solve.x_star,
                (solve.x_star - wc).abs()
            );
            let p = r.p_of_d(1.0).unwrap();
            assert!((p - wc).abs() <= 1e-10, "lambda {lam}: p(1) = {p}, want {wc}");
        }
    }

    #[test]
    fn frozen_regressions() {
        // Pinned by an independent high-precision bisection on (*).
        let r = rel();
        let phi21 = r.phi(2.0, 1.0).unwrap().x_star;
        assert!((phi21 - 0.996_771_979_641_104_7).abs() < 1e-9);
        let p0 = r.p_of_d(0.0).unwrap();
        assert!((p0 - 1.060_660_171_779_821_3).abs() < 1e-9);
        // For d = 0 the fixed point has the closed form lambda / sqrt(2).
        assert!((p0 - 1.5 / std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn residual_meets_tolerance() {
        let r = rel();
        for (y, d) in [(0.5, 0.2), (2.0, 1.0), (5.0, -3.0), (1.2, 0.0), (0.3, -0.01)] {
            let s = r.phi(y, d).unwrap();
            assert!(s.residual.abs() <= 1e-11, "({y}, {d}): residual {:e}", s.residual);
            assert!(s.x_star * y > d.abs());
            assert!(s.iterations <= 200);
        }
    }

    #[test]
    fn phi_decreases_in_y() {
        let r = rel();
        for d in [-1.0, 0.0, 1.0, 2.0] {
            let mut prev = f64::INFINITY;
            for k in 0..80 {
                let y = 0.05 * 1.12_f64.powi(k);
                let x = r.phi(y, d).unwrap().x_star;
                assert!(x <= prev + 1e-10, "phi({y}, {d}) = {x} rose above {prev}");
                prev = x;
            }
        }
    }

    #[test]
    fn curve_swap_inequality() {
        // If phi(y, d) <= x <= y then phi(x, d) <= y.
        let r = rel();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let d = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(0.3..4.0);
            let cut = r.phi(y, d).unwrap().x_star;
            if cut > y {
                continue;
            }
            let x = rng.gen_range(cut..=y);
            if x <= 0.0 {
                continue;
            }
            assert!(r.phi(x, d).unwrap().x_star <= y + 1e-9);
        }
    }

    #[test]
    fn fixed_point_property() {
        let r = rel();
        for d in [-1.0, 0.0, 0.5, 2.0] {
            let p = r.p_of_d(d).unwrap();
            assert!((r.phi(p, d).unwrap().x_star - p).abs() < 1e-8);
            assert!(p * p > d.abs());
        }
    }

    #[test]
    fn classify_examples() {
        let r = rel();
        assert_eq!(r.classify(Coords::new(1.0, 1.0, 1.0)), PhaseRegion::SecondOrder);
        let s = (2.125_f64).sqrt();
        assert_eq!(r.classify(Coords::new(s, s, 1.0)), PhaseRegion::Unrelaxed);
        assert_eq!(r.classify(Coords::new(0.5, 2.0, 1.0)), PhaseRegion::FirstOrderRaiseX);
        assert_eq!(r.classify(Coords::new(2.0, 0.5, 1.0)), PhaseRegion::FirstOrderRaiseY);
        assert_eq!(r.classify(Coords::new(1.0, 1.0, 5.0)), PhaseRegion::Inadmissible);
    }

    #[test]
    fn envelope_vanishes_inside_zero_set() {
        let r = rel();
        assert!(r.h_eval(Coords::new(1.0, 1.0, 1.0)).unwrap() < 1e-12);
        let wc = r.params().well_coordinate();
        assert!(r.h_eval(Coords::new(wc, wc, 1.0)).unwrap() < 1e-12);
        assert!(r.h_eval(Coords::new(0.2, 0.9, 0.1)).unwrap() > 0.0);
    }

    #[test]
    fn envelope_matches_unrelaxed_point() {
        let r = rel();
        let s = (2.125_f64).sqrt();
        let c = Coords::new(s, s, 1.0);
        let h = r.h_eval(c).unwrap();
        assert!((h - 5.0 / 18.0).abs() < 1e-13);
        assert!((h - g_eval(c, r.params()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn envelope_is_x_independent_in_the_raise_x_stripe() {
        let r = rel();
        let base = r.h_eval(Coords::new(0.51, 2.0, 1.0)).unwrap();
        for x in [0.6, 0.75, 0.9, 0.95] {
            let h = r.h_eval(Coords::new(x, 2.0, 1.0)).unwrap();
            assert!((h - base).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_bounds_and_monotonicity() {
        let r = rel();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..500 {
            let x = rng.gen_range(0.05..4.0);
            let y = rng.gen_range(0.05..4.0);
            let d = rng.gen_range(-0.999..0.999) * x * y;
            let c = Coords::new(x, y, d);
            let h = r.h_eval(c).unwrap();
            let g = g_eval(c, r.params()).unwrap();
            assert!(h >= 0.0);
            assert!(h <= g + 1e-12 * g.abs().max(1.0));
            let dx = rng.gen_range(0.0..1.5);
            let dy = rng.gen_range(0.0..1.5);
            let raised = r.h_eval(Coords::new(x + dx, y + dy, d)).unwrap();
            assert!(raised >= h - 1e-10);
        }
    }

    #[test]
    fn inadmissible_input_is_rejected() {
        let r = rel();
        assert!(matches!(
            r.h_eval(Coords::new(1.0, 1.0, 5.0)),
            Err(RelaxError::Inadmissible { .. })
        ));
    }

    #[test]
    fn relaxed_energy_examples() {
        let r = rel();
        let wqc = r.wqc_eval(Mat2::identity(), &ThetaSpec::IndicatorDetOne);
        assert!(wqc.finite().unwrap() < 1e-12);

        let f = Mat2::diag(2.0, 0.5);
        let wqc = r.wqc_eval(f, &ThetaSpec::Zero).finite().unwrap();
        assert!((wqc - 5.0 / 18.0).abs() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..300 {
            let f = Mat2::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let w = w_eval(f, r.params(), &ThetaSpec::Zero);
            let wqc = r.wqc_eval(f, &ThetaSpec::Zero);
            assert!(wqc <= w + 1e-10);
            assert!(wqc.finite().unwrap() >= 0.0);
        }
    }

    #[test]
    fn zero_set_membership() {
        let r = rel();
        assert!(r.kqc_member(Mat2::identity(), 1e-9));
        assert!(r.kqc_member(r.params().first_well(), 1e-9));
        assert!(r.kqc_member(r.params().second_well(), 1e-9));
        assert!(!r.kqc_member(Mat2::diag(2.0, 0.5), 1e-9));
        assert!(!r.kqc_member(Mat2::identity() * 1.01, 1e-9));
        let sheared = Mat2::new(1.0, 0.3, 0.0, 1.0);
        assert_eq!(r.kqc_member(sheared, 1e-9), {
            let c = coords(sheared);
            c.x <= r.params().well_coordinate() && c.y <= r.params().well_coordinate()
        });
    }

    #[test]
    fn quartic_route_agrees_with_solver() {
        let r = rel();
        let wc = r.params().well_coordinate();
        let anchors = [(wc, 1.0), (2.0, 1.0), (0.7, -0.3), (3.0, 2.0), (1.0, 0.0)];
        for (y, d) in anchors {
            let direct = r.phi(y, d).unwrap().x_star;
            let candidates = r.phi_quartic(y, d);
            let survivors = r.filter_stationary_candidates(y, d, &candidates, 1e-6);
            assert_eq!(survivors.len(), 1, "({y}, {d}): survivors {survivors:?}");
            assert!(
                (survivors[0] - direct).abs() <= 1e-7 * direct.max(1.0),
                "({y}, {d}): {} vs {}",
                survivors[0],
                direct
            );
        }
    }

    #[test]
    fn extension_is_defined_everywhere() {
        let r = rel();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..500 {
            let x = rng.gen_range(-3.0..5.0);
            let y = rng.gen_range(-3.0..5.0);
            let d = rng.gen_range(-4.0..4.0);
            let v = r.f_extended(x, y, d);
            assert!(v.is_finite() && v >= 0.0, "f({x}, {y}, {d}) = {v}");
        }
    }
}
