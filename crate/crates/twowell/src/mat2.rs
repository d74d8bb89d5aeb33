//! Small dense 2x2 matrices and the diagonal-frame quantities the energy
//! formulas are written in.
//!
//! Every matrix F is summarized by three scalars: the norms of its action on
//! the two diagonal directions (e1 +/- e2)/sqrt(2) and its determinant. All
//! closed-form energy expressions in this crate depend on F only through that
//! triple, so it gets its own type ([`Coords`]).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Relative tolerance below which an image vector counts as zero when
/// selecting the degenerate rank-one line.
pub const DEGENERATE_IMAGE_TOL: f64 = 1e-10;

/// Plane vector with named components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Unit vector (e1 + e2)/sqrt(2); its image norm is the `x` coordinate.
pub const DIAG_PLUS: Vec2 =
    Vec2 { x: std::f64::consts::FRAC_1_SQRT_2, y: std::f64::consts::FRAC_1_SQRT_2 };

/// Unit vector (e1 - e2)/sqrt(2); its image norm is the `y` coordinate.
pub const DIAG_MINUS: Vec2 =
    Vec2 { x: std::f64::consts::FRAC_1_SQRT_2, y: -std::f64::consts::FRAC_1_SQRT_2 };

impl Vec2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Row-major 2x2 matrix: [[m11, m12], [m21, m22]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    #[inline]
    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    #[inline]
    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    #[inline]
    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    /// Counterclockwise rotation by `angle` radians.
    #[inline]
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Outer product a b^T; always rank one (or zero).
    #[inline]
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Self::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
    }

    #[inline]
    pub fn det(self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22
    }

    /// Frobenius norm.
    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn transpose(self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    #[inline]
    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.m11 * v.x + self.m12 * v.y, self.m21 * v.x + self.m22 * v.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    /// Rows as nested arrays, the layout used by the JSON records.
    #[inline]
    pub fn rows(self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.m11 + rhs.m11, self.m12 + rhs.m12, self.m21 + rhs.m21, self.m22 + rhs.m22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.m11 - rhs.m11, self.m12 - rhs.m12, self.m21 - rhs.m21, self.m22 - rhs.m22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        Mat2::new(-self.m11, -self.m12, -self.m21, -self.m22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        self.mul_vec(v)
    }
}

/// Diagonal-frame summary of a matrix: x = |F (e1+e2)/sqrt(2)|,
/// y = |F (e1-e2)/sqrt(2)|, d = det F.
///
/// For any real matrix the triple satisfies x, y >= 0 and x*y >= |d|
/// (Cauchy-Schwarz applied to the images of the two unit directions), so
/// inputs violating that inequality beyond rounding describe no matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coords {
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

impl Coords {
    #[inline]
    pub const fn new(x: f64, y: f64, d: f64) -> Self {
        Self { x, y, d }
    }

    /// How far the triple sits inside the admissible cone: x*y - |d|.
    /// Negative values beyond rounding mean no matrix has these coordinates.
    #[inline]
    pub fn admissibility_margin(self) -> f64 {
        self.x * self.y - self.d.abs()
    }
}

/// Compute the diagonal-frame coordinates of `f`.
pub fn coords(f: Mat2) -> Coords {
    Coords::new(f.mul_vec(DIAG_PLUS).norm(), f.mul_vec(DIAG_MINUS).norm(), f.det())
}

/// One matrix realizing an admissible coordinate triple: the first diagonal
/// image is pinned along e1 and the second is tilted until the determinant
/// matches. Requires x, y >= 0; a determinant slightly outside [-x*y, x*y]
/// is clamped to the cone boundary.
pub fn matrix_with_coords(c: Coords) -> Mat2 {
    assert!(c.x >= 0.0 && c.y >= 0.0, "coordinates are norms");
    let xy = c.x * c.y;
    let sin_b = if xy == 0.0 { 0.0 } else { (-c.d / xy).clamp(-1.0, 1.0) };
    let cos_b = (1.0 - sin_b * sin_b).max(0.0).sqrt();
    let images = Mat2::new(c.x, c.y * cos_b, 0.0, c.y * sin_b);
    let frame_t = Mat2::new(DIAG_PLUS.x, DIAG_PLUS.y, DIAG_MINUS.x, DIAG_MINUS.y);
    images * frame_t
}

/// Signed singular values: `large` is the largest singular value, `small`
/// the other one signed so that large * small = det F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedSingularValues {
    pub small: f64,
    pub large: f64,
}

/// Signed singular values via the identities
/// large + small = sqrt(|F|^2 + 2 det F), large - small = sqrt(|F|^2 - 2 det F).
///
/// Both radicands are nonnegative for every real matrix; tiny negative values
/// produced by rounding are clamped to zero.
pub fn signed_singular_values(f: Mat2) -> SignedSingularValues {
    let n = f.norm_sq();
    let d = f.det();
    let scale = n.max(1.0);
    let sum = clamped_sqrt(n + 2.0 * d, scale);
    let diff = clamped_sqrt(n - 2.0 * d, scale);
    SignedSingularValues { small: 0.5 * (sum - diff), large: 0.5 * (sum + diff) }
}

/// sqrt with tiny negative radicands (>= -1e-12 * scale) clamped to zero.
#[inline]
pub(crate) fn clamped_sqrt(r: f64, scale: f64) -> f64 {
    if r < 0.0 && r >= -1e-12 * scale {
        0.0
    } else {
        r.sqrt()
    }
}

/// Which coordinate a rank-one line moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineDirection {
    /// Moves x, keeps y and det.
    RaiseX,
    /// Moves y, keeps x and det.
    RaiseY,
}

impl fmt::Display for LineDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineDirection::RaiseX => "raise_x",
            LineDirection::RaiseY => "raise_y",
        })
    }
}

/// Point on the rank-one line through `f` that moves one coordinate and
/// freezes the other one together with the determinant:
///
/// - `RaiseY`: F + t (F a_plus) (x) a_minus, so y(t) = |F a_minus + t F a_plus|
/// - `RaiseX`: F + t (F a_minus) (x) a_plus, so x(t) = |F a_plus + t F a_minus|
///
/// where a_plus/a_minus are the two diagonal unit vectors. The perturbation is
/// rank one, hence the determinant is constant along the line.
pub fn rank_one_line(f: Mat2, direction: LineDirection, t: f64) -> Mat2 {
    match direction {
        LineDirection::RaiseY => f + Mat2::outer(f.mul_vec(DIAG_PLUS), DIAG_MINUS) * t,
        LineDirection::RaiseX => f + Mat2::outer(f.mul_vec(DIAG_MINUS), DIAG_PLUS) * t,
    }
}

/// Error for operations with a checked matrix precondition.
#[derive(Debug, Clone, PartialEq)]
pub enum Mat2Error {
    /// The degenerate line requires the image of one diagonal direction to
    /// vanish; it had the given norm against the given absolute tolerance.
    PreconditionViolated { image_norm: f64, tolerance: f64 },
}

impl fmt::Display for Mat2Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mat2Error::PreconditionViolated { image_norm, tolerance } => write!(
                f,
                "degenerate line needs a vanishing image: norm {image_norm:e} exceeds {tolerance:e}"
            ),
        }
    }
}

impl std::error::Error for Mat2Error {}

/// Rank-one line for matrices that annihilate the moving direction's partner.
///
/// The regular `RaiseY` line moves y through the image of the plus direction;
/// when that image is zero (F a_plus = 0) the line degenerates and
/// F + t a_minus (x) a_minus moves y instead (resp. F + t a_plus (x) a_plus
/// for `RaiseX` when F a_minus = 0). Requires the corresponding image norm to
/// be at most `DEGENERATE_IMAGE_TOL * max(1, |F|)`.
pub fn degenerate_line(f: Mat2, direction: LineDirection, t: f64) -> Result<Mat2, Mat2Error> {
    let (must_vanish, mover) = match direction {
        LineDirection::RaiseY => (DIAG_PLUS, DIAG_MINUS),
        LineDirection::RaiseX => (DIAG_MINUS, DIAG_PLUS),
    };
    let image_norm = f.mul_vec(must_vanish).norm();
    let tolerance = DEGENERATE_IMAGE_TOL * f.norm().max(1.0);
    if image_norm > tolerance {
        return Err(Mat2Error::PreconditionViolated { image_norm, tolerance });
    }
    Ok(f + Mat2::outer(mover, mover) * t)
}
