//! Laminates witnessing the relaxed energy.
//!
//! A laminate is a weighted binary tree of matrices in which each parent is a
//! convex combination of its two children and the children differ by a
//! rank-one matrix. The relaxed energy at F is attained by such a tree whose
//! leaves carry the target coordinates from [`Relaxation::relaxed_target`]:
//! one split raises a single coordinate (first order), two nested splits
//! raise both (second order), and an already-relaxed matrix is its own leaf.
//!
//! Every split moves along a line that changes exactly one of |F v|, |F w|
//! while fixing the other and the determinant, so the leaf coordinates are
//! reached exactly and the split parameters solve a scalar quadratic.

use std::fmt;

use crate::energy::{w_eval, EnergyValue, ThetaSpec};
use crate::mat2::{
    coords, degenerate_line, rank_one_line, signed_singular_values, LineDirection, Mat2,
    DEGENERATE_IMAGE_TOL, DIAG_MINUS, DIAG_PLUS,
};
use crate::relaxation::{PhaseRegion, Relaxation};

/// An interior node: `matrix` splits into `plus` (carrying `weight`) and
/// `minus` (carrying `1 - weight`) along the stored rank-one line.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNode {
    pub matrix: Mat2,
    pub direction: LineDirection,
    /// Convex weight of the `plus` child, in (0, 1).
    pub weight: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    /// True when the fixed image vanishes and the split steps along the
    /// coordinate covector itself instead of the (zero) image.
    pub degenerate: bool,
    pub plus: LaminateNode,
    pub minus: LaminateNode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LaminateNode {
    Leaf(Mat2),
    Split(Box<SplitNode>),
}

impl LaminateNode {
    pub fn matrix(&self) -> Mat2 {
        match self {
            LaminateNode::Leaf(f) => *f,
            LaminateNode::Split(s) => s.matrix,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LaminateNode::Leaf(_) => 0,
            LaminateNode::Split(s) => 1 + s.plus.depth().max(s.minus.depth()),
        }
    }

    fn collect_leaves(&self, weight: f64, out: &mut Vec<(f64, Mat2)>) {
        match self {
            LaminateNode::Leaf(f) => out.push((weight, *f)),
            LaminateNode::Split(s) => {
                s.plus.collect_leaves(weight * s.weight, out);
                s.minus.collect_leaves(weight * (1.0 - s.weight), out);
            }
        }
    }

    fn for_each_split(&self, visit: &mut impl FnMut(&SplitNode)) {
        if let LaminateNode::Split(s) = self {
            visit(s);
            s.plus.for_each_split(visit);
            s.minus.for_each_split(visit);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laminate {
    pub root: LaminateNode,
}

impl Laminate {
    pub fn root_matrix(&self) -> Mat2 {
        self.root.matrix()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves in tree order with their accumulated convex weights.
    pub fn leaves(&self) -> Vec<(f64, Mat2)> {
        let mut out = Vec::new();
        self.root.collect_leaves(1.0, &mut out);
        out
    }
}

/// Split `f` along `direction` until the raised coordinate reaches `target`;
/// returns a leaf when the coordinate is already there.
fn raise_node(f: Mat2, direction: LineDirection, target: f64) -> LaminateNode {
    let (moved, step) = match direction {
        LineDirection::RaiseX => (f.mul_vec(DIAG_PLUS), f.mul_vec(DIAG_MINUS)),
        LineDirection::RaiseY => (f.mul_vec(DIAG_MINUS), f.mul_vec(DIAG_PLUS)),
    };
    let current = moved.norm();
    if target <= current + 1e-13 * target.max(1.0) {
        return LaminateNode::Leaf(f);
    }
    let degenerate = step.norm() <= DEGENERATE_IMAGE_TOL * f.norm().max(1.0);
    let step = if degenerate {
        match direction {
            LineDirection::RaiseX => DIAG_PLUS,
            LineDirection::RaiseY => DIAG_MINUS,
        }
    } else {
        step
    };

    // |moved + t step|^2 = target^2, written to avoid cancellation between
    // the two roots; target > current makes the constant term negative, so
    // the roots straddle zero and the parent is interior to the segment.
    let a = step.norm_sq();
    let b = 2.0 * moved.dot(step);
    let c = current * current - target * target;
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = (q / a, c / q);
    let (t_minus, t_plus) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let child = |t: f64| {
        if degenerate {
            degenerate_line(f, direction, t).expect("degeneracy was just established")
        } else {
            rank_one_line(f, direction, t)
        }
    };
    LaminateNode::Split(Box::new(SplitNode {
        matrix: f,
        direction,
        weight: -t_minus / (t_plus - t_minus),
        t_plus,
        t_minus,
        degenerate,
        plus: LaminateNode::Leaf(child(t_plus)),
        minus: LaminateNode::Leaf(child(t_minus)),
    }))
}

/// The optimal laminate under `f`: leaves realize the relaxed target
/// coordinates, parents are convex combinations along rank-one lines.
pub fn build_laminate(rel: &Relaxation, f: Mat2) -> Laminate {
    assert!(f.is_finite(), "laminate construction needs a finite matrix");
    let c = coords(f);
    let root = match rel.classify(c) {
        PhaseRegion::Unrelaxed | PhaseRegion::Inadmissible => LaminateNode::Leaf(f),
        PhaseRegion::FirstOrderRaiseX => {
            let target = rel.relaxed_target(c);
            raise_node(f, LineDirection::RaiseX, target.x)
        }
        PhaseRegion::FirstOrderRaiseY => {
            let target = rel.relaxed_target(c);
            raise_node(f, LineDirection::RaiseY, target.y)
        }
        PhaseRegion::SecondOrder => {
            let target = rel.relaxed_target(c);
            let mut first = raise_node(f, LineDirection::RaiseY, target.y);
            match &mut first {
                LaminateNode::Leaf(g) => raise_node(*g, LineDirection::RaiseX, target.x),
                LaminateNode::Split(s) => {
                    s.plus = raise_node(s.plus.matrix(), LineDirection::RaiseX, target.x);
                    s.minus = raise_node(s.minus.matrix(), LineDirection::RaiseX, target.x);
                    first
                }
            }
        }
    };
    Laminate { root }
}

/// Independent audit of a laminate against the relaxed energy.
#[derive(Debug, Clone)]
pub struct LaminateReport {
    pub region: PhaseRegion,
    pub depth: usize,
    /// Frobenius distance between the weighted leaf average and the root.
    pub barycenter_error: f64,
    /// Relaxed energy of the root matrix.
    pub relaxed_energy: EnergyValue,
    /// Weighted pointwise energy of the leaves.
    pub leaf_energy: EnergyValue,
    /// |leaf_energy - relaxed_energy|; 0 when both are infinite, infinite
    /// when exactly one is.
    pub energy_gap: f64,
    /// Smaller signed singular value of each split's child difference,
    /// in absolute value and tree order; zero means exactly rank one.
    pub rank_one_defects: Vec<f64>,
    /// Largest componentwise gap between leaf coordinates and the target.
    pub max_leaf_coord_error: f64,
    /// Largest entry difference between stored children and children
    /// recomputed from each split's parameters.
    pub rederive_error: f64,
}

impl LaminateReport {
    pub fn max_rank_one_defect(&self) -> f64 {
        self.rank_one_defects.iter().fold(0.0, |a, d| a.max(*d))
    }

    /// The audit thresholds used by the command-line runner.
    pub fn passes(&self) -> bool {
        let scale = match self.relaxed_energy {
            EnergyValue::Finite(v) => v.abs().max(1.0),
            EnergyValue::Infinite => 1.0,
        };
        self.depth <= 2
            && self.barycenter_error <= 1e-10
            && self.energy_gap <= 1e-6 * scale
            && self.max_rank_one_defect() <= 1e-10
            && self.max_leaf_coord_error <= 1e-8
            && self.rederive_error <= 1e-10
    }
}

impl fmt::Display for LaminateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "region {} depth {} barycenter {:.3e} gap {:.3e} rank-one {:.3e} leaf-coords {:.3e} rederive {:.3e}",
            self.region,
            self.depth,
            self.barycenter_error,
            self.energy_gap,
            self.max_rank_one_defect(),
            self.max_leaf_coord_error,
            self.rederive_error,
        )
    }
}

/// Recompute every claim a laminate makes: barycenters, rank-one differences,
/// leaf targets, split parameters, and the energy identity.
pub fn verify_laminate(rel: &Relaxation, theta: &ThetaSpec, lam: &Laminate) -> LaminateReport {
    let root = lam.root_matrix();
    let c = coords(root);
    let region = rel.classify(c);
    let target = rel.relaxed_target(c);
    let leaves = lam.leaves();

    let mut bary = Mat2::zero();
    let mut leaf_energy = EnergyValue::Finite(0.0);
    let mut coord_err = 0.0_f64;
    for &(w, leaf) in &leaves {
        bary = bary + leaf * w;
        leaf_energy = match w_eval(leaf, rel.params(), theta) {
            EnergyValue::Finite(v) => leaf_energy + w * v,
            EnergyValue::Infinite => EnergyValue::Infinite,
        };
        let lc = coords(leaf);
        coord_err = coord_err
            .max((lc.x - target.x).abs())
            .max((lc.y - target.y).abs())
            .max((lc.d - target.d).abs());
    }
    let barycenter_error = (bary - root).norm();

    let relaxed_energy = rel.wqc_eval(root, theta);
    let energy_gap = match (leaf_energy.finite(), relaxed_energy.finite()) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };

    let mut rank_one_defects = Vec::new();
    let mut rederive_error = 0.0_f64;
    lam.root.for_each_split(&mut |s| {
        let diff = s.plus.matrix() - s.minus.matrix();
        rank_one_defects.push(signed_singular_values(diff).small.abs());
        for (t, stored) in [(s.t_plus, s.plus.matrix()), (s.t_minus, s.minus.matrix())] {
            let derived = if s.degenerate {
                degenerate_line(s.matrix, s.direction, t)
            } else {
                Ok(rank_one_line(s.matrix, s.direction, t))
            };
            rederive_error = match derived {
                Ok(d) => rederive_error.max((d - stored).norm()),
                Err(_) => f64::INFINITY,
            };
        }
    });

    LaminateReport {
        region,
        depth: lam.depth(),
        barycenter_error,
        relaxed_energy,
        leaf_energy,
        energy_gap,
        rank_one_defects,
        max_leaf_coord_error: coord_err,
        rederive_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::WellParams;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel() -> Relaxation {
        Relaxation::new(WellParams::new(1.5).unwrap())
    }

    #[test]
    fn identity_needs_a_second_order_laminate() {
        let r = rel();
        let lam = build_laminate(&r, Mat2::identity());
        assert_eq!(lam.depth(), 2);
        let leaves = lam.leaves();
        assert_eq!(leaves.len(), 4);
        let total: f64 = leaves.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);

        let report = verify_laminate(&r, &ThetaSpec::IndicatorDetOne, &lam);
        assert_eq!(report.region, PhaseRegion::SecondOrder);
        assert!(report.barycenter_error < 1e-12, "{report}");
        assert!(report.energy_gap < 1e-12, "{report}");
        assert!(report.max_rank_one_defect() < 1e-12, "{report}");
        assert!(report.max_leaf_coord_error < 1e-9, "{report}");
        assert!(report.rederive_error == 0.0, "{report}");
        assert!(report.passes());

        // The leaves of an optimal laminate for a zero-set matrix are
        // zero-energy states themselves.
        for (_, leaf) in leaves {
            let e = w_eval(leaf, r.params(), &ThetaSpec::IndicatorDetOne);
            assert!(e.finite().unwrap() < 1e-12);
        }
    }

    #[test]
    fn unrelaxed_matrix_is_its_own_laminate() {
        let r = rel();
        let lam = build_laminate(&r, Mat2::diag(2.0, 0.5));
        assert_eq!(lam.depth(), 0);
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert_eq!(report.region, PhaseRegion::Unrelaxed);
        assert_eq!(report.energy_gap, 0.0);
        assert!(report.passes());
    }

    #[test]
    fn first_order_split_reaches_the_curve() {
        let r = rel();
        // Symmetric matrix with coordinates (0.5, 2, 1).
        let f = Mat2::new(1.25, -0.75, -0.75, 1.25);
        let c = coords(f);
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 2.0).abs() < 1e-12);

        let lam = build_laminate(&r, f);
        assert_eq!(lam.depth(), 1);
        assert_eq!(lam.leaves().len(), 2);
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert_eq!(report.region, PhaseRegion::FirstOrderRaiseX);
        assert!(report.passes(), "{report}");

        let cut = r.phi(2.0, 1.0).unwrap().x_star;
        for (_, leaf) in lam.leaves() {
            assert!((coords(leaf).x - cut).abs() < 1e-10);
            assert!((coords(leaf).y - 2.0).abs() < 1e-10);
            assert!((leaf.det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_matrix_uses_the_degenerate_direction() {
        let r = rel();
        let lam = build_laminate(&r, Mat2::zero());
        assert_eq!(lam.depth(), 2);
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert!(report.passes(), "{report}");
        let p = r.p_of_d(0.0).unwrap();
        for (w, leaf) in lam.leaves() {
            assert!((w - 0.25).abs() < 1e-12);
            let lc = coords(leaf);
            assert!((lc.x - p).abs() < 1e-10 && (lc.y - p).abs() < 1e-10);
            assert!(lc.d.abs() < 1e-12);
        }
        match &lam.root {
            LaminateNode::Split(s) => assert!(s.degenerate),
            LaminateNode::Leaf(_) => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn rank_one_image_matrix_splits_cleanly() {
        let r = rel();
        // F v = 0, F w = (2, 0): coordinates (0, 2, 0).
        let f = Mat2::outer(crate::mat2::Vec2::new(2.0, 0.0), DIAG_MINUS);
        let c = coords(f);
        assert!(c.x.abs() < 1e-15 && (c.y - 2.0).abs() < 1e-12 && c.d.abs() < 1e-15);
        let lam = build_laminate(&r, f);
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert_eq!(report.region, PhaseRegion::FirstOrderRaiseX);
        assert!(report.passes(), "{report}");
    }

    #[test]
    fn random_matrices_pass_the_audit() {
        let r = rel();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..200 {
            let f = Mat2::new(
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
            );
            let lam = build_laminate(&r, f);
            assert!(lam.depth() <= 2);
            let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
            assert!(report.passes(), "matrix {f:?}: {report}");
        }
    }

    #[test]
    fn audit_catches_a_perturbed_weight() {
        let r = rel();
        let mut lam = build_laminate(&r, Mat2::identity());
        if let LaminateNode::Split(s) = &mut lam.root {
            s.weight += 1e-3;
        }
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert!(report.barycenter_error > 1e-6);
        assert!(!report.passes());
    }

    #[test]
    fn audit_catches_a_tampered_leaf() {
        let r = rel();
        let mut lam = build_laminate(&r, Mat2::identity());
        if let LaminateNode::Split(s) = &mut lam.root {
            if let LaminateNode::Split(inner) = &mut s.plus {
                inner.plus = LaminateNode::Leaf(inner.plus.matrix() + Mat2::diag(1e-4, 0.0));
            }
        }
        let report = verify_laminate(&r, &ThetaSpec::Zero, &lam);
        assert!(report.rederive_error > 1e-6);
        assert!(!report.passes());
    }

    #[test]
    fn infinite_energies_on_both_sides_cancel() {
        let r = rel();
        // Unrelaxed with determinant far from 1: both sides infinite.
        let f = Mat2::diag(3.0, 0.1);
        let lam = build_laminate(&r, f);
        let report = verify_laminate(&r, &ThetaSpec::IndicatorDetOne, &lam);
        assert_eq!(report.energy_gap, 0.0);
        assert!(report.passes(), "{report}");
    }
}
