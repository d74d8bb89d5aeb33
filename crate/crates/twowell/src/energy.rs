//! The unrelaxed energy: squared distance to the two wells plus a convex
//! penalty on the determinant.
//!
//! The wells are the rotation orbits of diag(lambda, 1/lambda) and
//! diag(1/lambda, lambda). Everything here reduces to two constants,
//! L = lambda^2 + 1/lambda^2 and M = lambda^2 - 1/lambda^2 (so L^2 - M^2 = 4),
//! and to the scalar fields
//!
//!   A(x, y, d) = (x^2 + y^2) L / 2 + M z + 2 d,   z = sqrt(x^2 y^2 - d^2)
//!   g(x, y, d) = x^2 + y^2 + L - 2 sqrt(A)
//!
//! on the diagonal-frame coordinates of `mat2`. g composed with the
//! coordinates equals the squared two-well distance exactly, which is the
//! identity `dist2_two_wells` and the tests keep pinned against each other.

use std::fmt;
use std::ops::Add;

use crate::mat2::{clamped_sqrt, coords, Mat2};

/// Absolute tolerance on |det - 1| inside the determinant-one indicator.
/// Floating-point products of a matrix built to have unit determinant land
/// within a few ulps of 1, never exactly on it.
pub const DET_ONE_TOL: f64 = 1e-9;

/// Errors for energy evaluation and parameter construction.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyError {
    /// Well stretch must be finite and strictly greater than one.
    InvalidLambda { lambda: f64 },
    /// The coordinate triple violates x*y >= |d| beyond rounding, so no
    /// matrix realizes it.
    OutsideDomain { x: f64, y: f64, d: f64 },
    /// Derivatives need the strict interior x*y > |d|; the triple sits on
    /// (or within rounding of) the boundary.
    OnBoundary { x: f64, y: f64, d: f64 },
}

impl fmt::Display for EnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyError::InvalidLambda { lambda } => {
                write!(f, "well stretch must be finite and > 1, got {lambda}")
            }
            EnergyError::OutsideDomain { x, y, d } => {
                write!(f, "({x}, {y}, {d}) violates x*y >= |d|: no matrix has these coordinates")
            }
            EnergyError::OnBoundary { x, y, d } => {
                write!(
                    f,
                    "({x}, {y}, {d}) lies on the boundary x*y = |d| where derivatives blow up"
                )
            }
        }
    }
}

impl std::error::Error for EnergyError {}

/// The two wells diag(lambda, 1/lambda), diag(1/lambda, lambda) and their
/// derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellParams {
    lambda: f64,
    l: f64,
    m: f64,
}

impl WellParams {
    /// Requires a finite stretch lambda > 1.
    pub fn new(lambda: f64) -> Result<Self, EnergyError> {
        if !lambda.is_finite() || lambda <= 1.0 {
            return Err(EnergyError::InvalidLambda { lambda });
        }
        let inv_sq = 1.0 / (lambda * lambda);
        Ok(Self { lambda, l: lambda * lambda + inv_sq, m: lambda * lambda - inv_sq })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// L = lambda^2 + 1/lambda^2, the squared Frobenius norm of either well.
    #[inline]
    pub fn l(&self) -> f64 {
        self.l
    }

    /// M = lambda^2 - 1/lambda^2; satisfies L^2 - M^2 = 4.
    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    /// diag(lambda, 1/lambda).
    #[inline]
    pub fn first_well(&self) -> Mat2 {
        Mat2::diag(self.lambda, 1.0 / self.lambda)
    }

    /// diag(1/lambda, lambda).
    #[inline]
    pub fn second_well(&self) -> Mat2 {
        Mat2::diag(1.0 / self.lambda, self.lambda)
    }

    /// sqrt(L/2): both diagonal-frame coordinates of either well matrix.
    #[inline]
    pub fn well_coordinate(&self) -> f64 {
        (self.l / 2.0).sqrt()
    }
}

/// Energy with an explicit infinity, ordered above every finite value.
///
/// Finite payloads are expected to be nonnegative and never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyValue {
    Finite(f64),
    Infinite,
}

impl EnergyValue {
    #[inline]
    pub fn is_finite(self) -> bool {
        matches!(self, EnergyValue::Finite(_))
    }

    #[inline]
    pub fn finite(self) -> Option<f64> {
        match self {
            EnergyValue::Finite(v) => Some(v),
            EnergyValue::Infinite => None,
        }
    }

    /// Collapse to f64, mapping the infinite variant to `f64::INFINITY`.
    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            EnergyValue::Finite(v) => v,
            EnergyValue::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for EnergyValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl Add for EnergyValue {
    type Output = EnergyValue;
    fn add(self, rhs: EnergyValue) -> EnergyValue {
        match (self, rhs) {
            (EnergyValue::Finite(a), EnergyValue::Finite(b)) => EnergyValue::Finite(a + b),
            _ => EnergyValue::Infinite,
        }
    }
}

impl Add<f64> for EnergyValue {
    type Output = EnergyValue;
    fn add(self, rhs: f64) -> EnergyValue {
        match self {
            EnergyValue::Finite(a) => EnergyValue::Finite(a + rhs),
            EnergyValue::Infinite => EnergyValue::Infinite,
        }
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyValue::Finite(v) => write!(f, "{v}"),
            EnergyValue::Infinite => f.write_str("inf"),
        }
    }
}

/// How a piecewise-linear determinant penalty behaves past its last knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableEnd {
    /// Infinite outside the knot range.
    Wall,
    /// Continue the boundary segment's slope forever.
    Extend,
}

/// Validation errors for [`ConvexTable`].
#[derive(Debug, Clone, PartialEq)]
pub enum TableError {
    TooFewKnots,
    NotSorted {
        index: usize,
    },
    NotFinite {
        index: usize,
    },
    NegativeValue {
        index: usize,
    },
    /// Slopes must be nondecreasing; the segment starting at `index` breaks that.
    NotConvex {
        index: usize,
    },
    /// An extended end slopes toward negative values at infinity.
    ExtensionGoesNegative,
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::TooFewKnots => f.write_str("a table needs at least two knots"),
            TableError::NotSorted { index } => write!(f, "knot {index} is not strictly increasing"),
            TableError::NotFinite { index } => write!(f, "knot {index} has a non-finite entry"),
            TableError::NegativeValue { index } => write!(f, "knot {index} has a negative value"),
            TableError::NotConvex { index } => {
                write!(f, "slope decreases at segment {index}: table is not convex")
            }
            TableError::ExtensionGoesNegative => {
                f.write_str("extending this end would send the value below zero")
            }
        }
    }
}

impl std::error::Error for TableError {}

/// User-supplied convex piecewise-linear determinant penalty.
///
/// Construction validates convexity (nondecreasing slopes), nonnegativity,
/// and that extended ends cannot dip below zero, so every accepted table is a
/// convex, lower-semicontinuous, nonnegative function of the determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexTable {
    knots: Vec<(f64, f64)>,
    left: TableEnd,
    right: TableEnd,
}

impl ConvexTable {
    pub fn new(
        knots: Vec<(f64, f64)>,
        left: TableEnd,
        right: TableEnd,
    ) -> Result<Self, TableError> {
        if knots.len() < 2 {
            return Err(TableError::TooFewKnots);
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(TableError::NotFinite { index: i });
            }
            if v < 0.0 {
                return Err(TableError::NegativeValue { index: i });
            }
            if i > 0 && t <= knots[i - 1].0 {
                return Err(TableError::NotSorted { index: i });
            }
        }
        let slope = |i: usize| (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0);
        for i in 0..knots.len() - 2 {
            if slope(i + 1) < slope(i) {
                return Err(TableError::NotConvex { index: i + 1 });
            }
        }
        if left == TableEnd::Extend && slope(0) > 0.0 {
            return Err(TableError::ExtensionGoesNegative);
        }
        if right == TableEnd::Extend && slope(knots.len() - 2) < 0.0 {
            return Err(TableError::ExtensionGoesNegative);
        }
        Ok(Self { knots, left, right })
    }

    pub fn eval(&self, t: f64) -> EnergyValue {
        let first = self.knots[0];
        let last = *self.knots.last().expect("validated: at least two knots");
        if t < first.0 {
            return match self.left {
                TableEnd::Wall => EnergyValue::Infinite,
                TableEnd::Extend => {
                    let next = self.knots[1];
                    let slope = (next.1 - first.1) / (next.0 - first.0);
                    EnergyValue::Finite(first.1 + slope * (t - first.0))
                }
            };
        }
        if t > last.0 {
            return match self.right {
                TableEnd::Wall => EnergyValue::Infinite,
                TableEnd::Extend => {
                    let prev = self.knots[self.knots.len() - 2];
                    let slope = (last.1 - prev.1) / (last.0 - prev.0);
                    EnergyValue::Finite(last.1 + slope * (t - last.0))
                }
            };
        }
        let hi = self.knots.partition_point(|&(k, _)| k < t).min(self.knots.len() - 1);
        let lo = hi.saturating_sub(1);
        let (t0, v0) = self.knots[lo];
        let (t1, v1) = self.knots[hi.max(1)];
        if t1 == t0 {
            return EnergyValue::Finite(v0);
        }
        let w = (t - t0) / (t1 - t0);
        EnergyValue::Finite(v0 + w * (v1 - v0))
    }
}

/// Convex penalty on the determinant.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    /// No penalty.
    Zero,
    /// 0 when |det - 1| <= DET_ONE_TOL, infinite otherwise (incompressible).
    IndicatorDetOne,
    /// ln(det)^2 for det > 0, infinite otherwise.
    LogSquared,
    /// Piecewise-linear table, validated convex at construction.
    TableConvex(ConvexTable),
}

impl ThetaSpec {
    pub fn eval(&self, t: f64) -> EnergyValue {
        match self {
            ThetaSpec::Zero => EnergyValue::Finite(0.0),
            ThetaSpec::IndicatorDetOne => {
                if (t - 1.0).abs() <= DET_ONE_TOL {
                    EnergyValue::Finite(0.0)
                } else {
                    EnergyValue::Infinite
                }
            }
            ThetaSpec::LogSquared => {
                if t > 0.0 {
                    let l = t.ln();
                    EnergyValue::Finite(l * l)
                } else {
                    EnergyValue::Infinite
                }
            }
            ThetaSpec::TableConvex(table) => table.eval(t),
        }
    }
}

/// Squared Frobenius distance from `f` to the union of the two wells:
///
///   |F|^2 + L - 2 max_i sqrt(|F U_i|^2 + 2 det F)
///
/// using that the closest rotation to a matrix B has alignment
/// sqrt(|B|^2 + 2 det B) (sum of signed singular values). Tiny negative
/// radicands and results are rounding noise and clamp to zero.
pub fn dist2_two_wells(f: Mat2, p: &WellParams) -> f64 {
    let d = f.det();
    let lam_sq = p.lambda() * p.lambda();
    let col1 = f.m11 * f.m11 + f.m21 * f.m21;
    let col2 = f.m12 * f.m12 + f.m22 * f.m22;
    let fu1 = lam_sq * col1 + col2 / lam_sq;
    let fu2 = col1 / lam_sq + lam_sq * col2;
    let align1 = clamped_sqrt(fu1 + 2.0 * d, fu1.max(1.0));
    let align2 = clamped_sqrt(fu2 + 2.0 * d, fu2.max(1.0));
    (f.norm_sq() + p.l() - 2.0 * align1.max(align2)).max(0.0)
}

#[inline]
fn z_squared(c: crate::mat2::Coords) -> (f64, f64) {
    let xy = c.x * c.y;
    let zsq = (xy - c.d) * (xy + c.d);
    let scale = (xy * xy).max(c.d * c.d).max(1.0);
    (zsq, scale)
}

/// The inner field A(x, y, d) = (x^2 + y^2) L/2 + M z + 2d with
/// z = sqrt(x^2 y^2 - d^2). Errors when x*y < |d| beyond rounding.
pub fn a_eval(c: crate::mat2::Coords, p: &WellParams) -> Result<f64, EnergyError> {
    let (zsq, scale) = z_squared(c);
    if zsq < -1e-12 * scale {
        return Err(EnergyError::OutsideDomain { x: c.x, y: c.y, d: c.d });
    }
    let z = zsq.max(0.0).sqrt();
    let a = (c.x * c.x + c.y * c.y) * p.l() / 2.0 + p.m() * z + 2.0 * c.d;
    Ok(a.max(0.0))
}

/// g(x, y, d) = x^2 + y^2 + L - 2 sqrt(A); equals the squared two-well
/// distance of any matrix with these coordinates.
pub fn g_eval(c: crate::mat2::Coords, p: &WellParams) -> Result<f64, EnergyError> {
    let a = a_eval(c, p)?;
    Ok((c.x * c.x + c.y * c.y + p.l() - 2.0 * a.sqrt()).max(0.0))
}

/// Partial derivatives of A, valid in the strict interior (z > 0).
#[inline]
fn a_gradient(c: crate::mat2::Coords, p: &WellParams, z: f64) -> [f64; 3] {
    [
        c.x * (p.l() + p.m() * c.y * c.y / z),
        c.y * (p.l() + p.m() * c.x * c.x / z),
        2.0 - p.m() * c.d / z,
    ]
}

fn interior_z(c: crate::mat2::Coords) -> Result<f64, EnergyError> {
    let (zsq, scale) = z_squared(c);
    if zsq < -1e-12 * scale {
        return Err(EnergyError::OutsideDomain { x: c.x, y: c.y, d: c.d });
    }
    if zsq <= 1e-12 * scale {
        return Err(EnergyError::OnBoundary { x: c.x, y: c.y, d: c.d });
    }
    Ok(zsq.sqrt())
}

/// Gradient (d/dx, d/dy, d/dd) of g in the strict interior x*y > |d|.
pub fn g_gradient(c: crate::mat2::Coords, p: &WellParams) -> Result<[f64; 3], EnergyError> {
    let z = interior_z(c)?;
    let a = a_eval(c, p)?;
    let sqrt_a = a.sqrt();
    if sqrt_a.is_nan() || sqrt_a <= 0.0 {
        return Err(EnergyError::OnBoundary { x: c.x, y: c.y, d: c.d });
    }
    let da = a_gradient(c, p, z);
    Ok([2.0 * c.x - da[0] / sqrt_a, 2.0 * c.y - da[1] / sqrt_a, -da[2] / sqrt_a])
}

/// Hessian of g in the strict interior, assembled from the decomposition
///
///   D^2 g = diag(g_x / x, g_y / y, 0) + (DA (x) DA) / (2 A^(3/2))
///           + M / (z^3 sqrt(A)) * S
///
/// where S is the symmetric rank-deficient matrix with rows
/// [x^2 y^4, 2 d^2 x y - x^3 y^3, -d x y^2], [., x^4 y^2, -d x^2 y],
/// [., ., x^2 y^2]. S has determinant zero and a positive-semidefinite
/// leading 2x2 block on the admissible cone.
pub fn g_hessian(c: crate::mat2::Coords, p: &WellParams) -> Result<[[f64; 3]; 3], EnergyError> {
    let z = interior_z(c)?;
    let a = a_eval(c, p)?;
    let sqrt_a = a.sqrt();
    if sqrt_a.is_nan() || sqrt_a <= 0.0 {
        return Err(EnergyError::OnBoundary { x: c.x, y: c.y, d: c.d });
    }
    let da = a_gradient(c, p, z);
    let gx = 2.0 * c.x - da[0] / sqrt_a;
    let gy = 2.0 * c.y - da[1] / sqrt_a;

    let (x, y, d) = (c.x, c.y, c.d);
    let s = rank_deficient_term(c);
    let z3 = z * z * z;
    let m_factor = p.m() / (z3 * sqrt_a);
    let outer_factor = 1.0 / (2.0 * a * sqrt_a);

    let mut h = [[0.0_f64; 3]; 3];
    // x = 0 or y = 0 cannot reach this point: z > 0 forces x*y > 0.
    h[0][0] = gx / x;
    h[1][1] = gy / y;
    let _ = d;
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] += outer_factor * da[i] * da[j] + m_factor * s[i][j];
        }
    }
    Ok(h)
}

/// The rank-deficient matrix S from the Hessian decomposition.
pub fn rank_deficient_term(c: crate::mat2::Coords) -> [[f64; 3]; 3] {
    let (x, y, d) = (c.x, c.y, c.d);
    let (x2, y2) = (x * x, y * y);
    let s12 = 2.0 * d * d * x * y - x2 * x * y2 * y;
    let s13 = -d * x * y2;
    let s23 = -d * x2 * y;
    [[x2 * y2 * y2, s12, s13], [s12, x2 * x2 * y2, s23], [s13, s23, x2 * y2]]
}

/// Full pointwise energy: squared two-well distance plus determinant penalty.
pub fn w_eval(f: Mat2, p: &WellParams, theta: &ThetaSpec) -> EnergyValue {
    let c = coords(f);
    let g = g_eval(c, p).expect("coordinates of a real matrix are admissible");
    theta.eval(f.det()) + g
}
