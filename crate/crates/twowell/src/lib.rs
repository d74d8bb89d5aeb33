//! Closed-form quasiconvex relaxation of a planar two-well elastic energy.
//!
//! The pointwise energy is the squared Frobenius distance to the two wells
//! SO(2) diag(lambda, 1/lambda) and SO(2) diag(1/lambda, lambda) plus a convex
//! penalty on the determinant. This crate evaluates that energy, its exact
//! relaxation (the largest quasiconvex function below it), the optimal
//! first- and second-order laminates that realize the relaxed value, and
//! independent brute-force oracles that check all of it numerically.
//!
//! Modules, bottom to top:
//!
//! - [`mat2`]: 2x2 matrices, diagonal-frame coordinates (x, y, d), signed
//!   singular values, rank-one lines.
//! - [`energy`]: well parameters, determinant penalties, the fields A and g,
//!   their derivatives, and the pointwise energy.
//! - [`relaxation`]: the stationarity curve phi, its fixed point p(d), region
//!   classification, and the relaxed envelope.
//! - [`laminate`]: optimal laminate construction and verification.
//! - [`oracle`]: brute-force references (angle-scan well distance, grid
//!   envelope minimization) and convexity probes.
//! - [`verify`]: named check suites combining all of the above.
//! - [`cli`]: records, phase-diagram slices, CSV/JSON writers behind the
//!   `twowell` binary.
//!
//! Runnable walkthroughs live in `examples/` (one per capability):
//!
//! ```text
//! cargo run -p twowell --example eval_point
//! cargo run -p twowell --example phase_diagram
//! cargo run -p twowell --example laminate_tree
//! cargo run -p twowell --example envelope_vs_oracle
//! cargo run -p twowell --example stationarity_curve
//! cargo run -p twowell --example verify_battery
//! ```
//!
//! Quick taste:
//!
//! ```
//! use twowell::energy::{ThetaSpec, WellParams};
//! use twowell::mat2::Mat2;
//! use twowell::relaxation::Relaxation;
//!
//! let rel = Relaxation::new(WellParams::new(1.5).unwrap());
//! let f = Mat2::diag(2.0, 0.5);
//! let w = twowell::energy::w_eval(f, rel.params(), &ThetaSpec::Zero);
//! let wqc = rel.wqc_eval(f, &ThetaSpec::Zero);
//! assert!(wqc <= w);
//! ```

#![forbid(unsafe_code)]

pub mod cli;
pub mod energy;
pub mod laminate;
pub mod mat2;
pub mod oracle;
pub mod relaxation;
pub mod verify;
