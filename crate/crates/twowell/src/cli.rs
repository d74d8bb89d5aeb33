//! Shared plumbing for the command-line binary and the examples: output
//! records, the phase-diagram slice evaluation, and text serialization.
//!
//! The slice walks matrices (a, b; 0, 1/a), whose determinant is 1 by
//! construction, over a rectangle of (a, b). Energies on the slice pin the
//! determinant coordinate to exactly 1 so the incompressible penalty never
//! fires on rounding noise.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::energy::{g_eval, EnergyValue, ThetaSpec, WellParams};
use crate::laminate::{Laminate, LaminateNode, LaminateReport};
use crate::mat2::{coords, Coords, Mat2};
use crate::relaxation::{PhaseRegion, Relaxation};
use crate::verify::SuiteResult;

/// Version tag stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: &str = "1";

/// Environment variable selecting the phase-diagram worker count.
pub const THREADS_ENV: &str = "TWOWELL_THREADS";

/// The penalty names accepted on the command line.
pub const THETA_NAMES: [&str; 3] = ["zero", "indicator_det1", "log_squared"];

pub fn parse_theta(name: &str) -> Result<ThetaSpec, String> {
    match name {
        "zero" => Ok(ThetaSpec::Zero),
        "indicator_det1" => Ok(ThetaSpec::IndicatorDetOne),
        "log_squared" => Ok(ThetaSpec::LogSquared),
        other => Err(format!(
            "unknown determinant penalty {other:?}; expected one of {}",
            THETA_NAMES.join(", ")
        )),
    }
}

/// Worker count from a raw setting: clamped to [1, 64], defaulting to 1 on
/// absence or malformed input.
pub fn parse_thread_count(raw: Option<&str>) -> usize {
    raw.and_then(|s| s.trim().parse::<usize>().ok()).map_or(1, |n| n.clamp(1, 64))
}

pub fn thread_count_from_env() -> usize {
    parse_thread_count(std::env::var(THREADS_ENV).ok().as_deref())
}

/// Rectangle of slice parameters; `a` indexes the outer (row) loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    pub a_lo: f64,
    pub a_hi: f64,
    pub a_n: usize,
    pub b_lo: f64,
    pub b_hi: f64,
    pub b_n: usize,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec { a_lo: 0.4, a_hi: 2.0, a_n: 201, b_lo: -1.0, b_hi: 1.0, b_n: 201 }
    }
}

/// One evaluated slice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceRow {
    pub a: f64,
    pub b: f64,
    pub w: EnergyValue,
    pub wqc: EnergyValue,
    pub region: PhaseRegion,
    pub kqc: bool,
}

/// Interpolated grid value with exact endpoints (and exact midpoint when the
/// rectangle is symmetric).
fn lerp_grid(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let t = i as f64 / (n - 1) as f64;
    lo * (1.0 - t) + hi * t
}

pub fn slice_matrix(a: f64, b: f64) -> Mat2 {
    Mat2::new(a, b, 0.0, 1.0 / a)
}

fn eval_slice_point(rel: &Relaxation, theta: &ThetaSpec, a: f64, b: f64) -> SliceRow {
    let f = slice_matrix(a, b);
    let raw = coords(f);
    // det = a * (1/a) = 1 exactly on this slice; the coordinate product can
    // still round a hair below it, so clamp rather than classify as noise.
    let c = Coords::new(raw.x, raw.y, (raw.x * raw.y).min(1.0));
    let penalty = theta.eval(1.0);
    let w = penalty + g_eval(c, rel.params()).expect("slice point is admissible");
    let wqc = penalty + rel.h_eval(c).expect("slice point is admissible");
    SliceRow { a, b, w, wqc, region: rel.classify(c), kqc: rel.kqc_member(f, 1e-9) }
}

/// Evaluate the full slice, row-major in (a, b), splitting rows across
/// `threads` workers. The output order does not depend on the worker count.
pub fn phase_diagram_rows(
    rel: &Relaxation,
    slice: &SliceSpec,
    theta: &ThetaSpec,
    threads: usize,
) -> Vec<SliceRow> {
    assert!(slice.a_lo > 0.0, "slice needs a > 0 for the 1/a entry");
    assert!(slice.a_hi > slice.a_lo && slice.b_hi > slice.b_lo);
    assert!(slice.a_n >= 2 && slice.b_n >= 2);
    let threads = threads.clamp(1, slice.a_n);
    let a_indices: Vec<usize> = (0..slice.a_n).collect();
    let chunk_len = slice.a_n.div_ceil(threads);

    let mut chunks: Vec<Vec<SliceRow>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = a_indices
            .chunks(chunk_len)
            .map(|idx_chunk| {
                scope.spawn(move || {
                    let mut rows = Vec::with_capacity(idx_chunk.len() * slice.b_n);
                    for &i in idx_chunk {
                        let a = lerp_grid(slice.a_lo, slice.a_hi, slice.a_n, i);
                        for j in 0..slice.b_n {
                            let b = lerp_grid(slice.b_lo, slice.b_hi, slice.b_n, j);
                            rows.push(eval_slice_point(rel, theta, a, b));
                        }
                    }
                    rows
                })
            })
            .collect();
        chunks = handles.into_iter().map(|h| h.join().expect("slice worker panicked")).collect();
    });
    chunks.concat()
}

/// The two analytic boundary arcs of the relaxed energy's zero set on the
/// slice, each sampled at `n` points of a in [1/lambda, lambda]:
/// b = -a + sqrt(L - 1/a^2) ("plus") and b = a - sqrt(L - 1/a^2) ("minus").
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurves {
    pub plus: Vec<(f64, f64)>,
    pub minus: Vec<(f64, f64)>,
}

pub fn boundary_polylines(params: &WellParams, n: usize) -> BoundaryCurves {
    assert!(n >= 2);
    let (lo, hi) = (1.0 / params.lambda(), params.lambda());
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        let a = lerp_grid(lo, hi, n, i);
        let root = (params.l() - 1.0 / (a * a)).max(0.0).sqrt();
        plus.push((a, -a + root));
        minus.push((a, a - root));
    }
    BoundaryCurves { plus, minus }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_energy(v: EnergyValue) -> String {
    match v {
        EnergyValue::Finite(x) => fmt_float(x),
        EnergyValue::Infinite => "inf".to_string(),
    }
}

fn energy_json(v: EnergyValue) -> Value {
    match v {
        EnergyValue::Finite(x) => json!(x),
        EnergyValue::Infinite => json!("inf"),
    }
}

/// CSV for the slice rows; one line per point, `a` varying slowest.
pub fn slice_csv(rows: &[SliceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 96 + 64);
    out.push_str("a,b,W,Wqc,region,kqc_member\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(r.a),
            fmt_float(r.b),
            fmt_energy(r.w),
            fmt_energy(r.wqc),
            r.region.label(),
            r.kqc
        ));
    }
    out
}

/// CSV for the boundary arcs, written next to the slice CSV.
pub fn boundaries_csv(curves: &BoundaryCurves) -> String {
    let mut out = String::from("curve,a,b\n");
    for (name, pts) in [("plus", &curves.plus), ("minus", &curves.minus)] {
        for (a, b) in pts {
            out.push_str(&format!("{name},{},{}\n", fmt_float(*a), fmt_float(*b)));
        }
    }
    out
}

fn curve_json(pts: &[(f64, f64)]) -> Value {
    Value::Array(pts.iter().map(|(a, b)| json!([a, b])).collect())
}

/// The whole slice as one JSON document, boundaries included.
pub fn slice_json(
    lambda: f64,
    theta_name: &str,
    slice: &SliceSpec,
    rows: &[SliceRow],
    curves: &BoundaryCurves,
) -> Value {
    let mut region_counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for r in rows {
        *region_counts.entry(r.region.label()).or_insert(0) += 1;
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "lambda": lambda,
        "theta": theta_name,
        "a": {"lo": slice.a_lo, "hi": slice.a_hi, "n": slice.a_n},
        "b": {"lo": slice.b_lo, "hi": slice.b_hi, "n": slice.b_n},
        "region_counts": region_counts,
        "rows": rows.iter().map(|r| json!({
            "a": r.a,
            "b": r.b,
            "W": energy_json(r.w),
            "Wqc": energy_json(r.wqc),
            "region": r.region.label(),
            "kqc_member": r.kqc,
        })).collect::<Vec<_>>(),
        "boundaries": {
            "plus": curve_json(&curves.plus),
            "minus": curve_json(&curves.minus),
        },
    })
}

fn matrix_json(f: Mat2) -> Value {
    let rows = f.rows();
    json!([[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]])
}

/// Evaluation record for one matrix: both energies plus the classification.
pub fn eval_record(rel: &Relaxation, f: Mat2, theta_name: &str, theta: &ThetaSpec) -> Value {
    let c = coords(f);
    let w = crate::energy::w_eval(f, rel.params(), theta);
    let wqc = rel.wqc_eval(f, theta);
    json!({
        "schema_version": SCHEMA_VERSION,
        "matrix": matrix_json(f),
        "lambda": rel.params().lambda(),
        "theta": theta_name,
        "W": energy_json(w),
        "Wqc": energy_json(wqc),
        "coords": {"x": c.x, "y": c.y, "d": c.d},
        "region": rel.classify(c).label(),
        "kqc_member": rel.kqc_member(f, 1e-9),
    })
}

fn node_json(node: &LaminateNode) -> Value {
    match node {
        LaminateNode::Leaf(f) => json!({"type": "leaf", "matrix": matrix_json(*f)}),
        LaminateNode::Split(s) => json!({
            "type": "split",
            "matrix": matrix_json(s.matrix),
            "direction": s.direction.to_string(),
            "weight": s.weight,
            "t_plus": s.t_plus,
            "t_minus": s.t_minus,
            "degenerate": s.degenerate,
            "plus": node_json(&s.plus),
            "minus": node_json(&s.minus),
        }),
    }
}

/// A laminate with its audit, as one JSON document.
pub fn laminate_record(
    rel: &Relaxation,
    theta_name: &str,
    lam: &Laminate,
    report: &LaminateReport,
) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "lambda": rel.params().lambda(),
        "theta": theta_name,
        "laminate": node_json(&lam.root),
        "report": {
            "region": report.region.label(),
            "depth": report.depth,
            "barycenter_error": report.barycenter_error,
            "relaxed_energy": energy_json(report.relaxed_energy),
            "leaf_energy": energy_json(report.leaf_energy),
            "energy_gap": if report.energy_gap.is_finite() {
                json!(report.energy_gap)
            } else {
                json!("inf")
            },
            "rank_one_defects": report.rank_one_defects,
            "max_leaf_coord_error": report.max_leaf_coord_error,
            "rederive_error": report.rederive_error,
        },
        "passed": report.passes(),
    })
}

/// Verification battery outcome as one JSON document.
pub fn verify_record(lambda: f64, seed: u64, samples: usize, results: &[SuiteResult]) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "lambda": lambda,
        "seed": seed,
        "samples": samples,
        "suites": results.iter().map(|r| json!({
            "name": r.name,
            "passed": r.passed,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
        "all_passed": results.iter().all(|r| r.passed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel() -> Relaxation {
        Relaxation::new(WellParams::new(1.5).unwrap())
    }

    #[test]
    fn theta_names_round_trip() {
        for name in THETA_NAMES {
            assert!(parse_theta(name).is_ok(), "{name}");
        }
        assert!(parse_theta("quadratic").is_err());
    }

    #[test]
    fn thread_count_parsing() {
        assert_eq!(parse_thread_count(None), 1);
        assert_eq!(parse_thread_count(Some("4")), 4);
        assert_eq!(parse_thread_count(Some(" 8 ")), 8);
        assert_eq!(parse_thread_count(Some("0")), 1);
        assert_eq!(parse_thread_count(Some("10000")), 64);
        assert_eq!(parse_thread_count(Some("lots")), 1);
    }

    #[test]
    fn grid_hits_endpoints_and_center_exactly() {
        assert_eq!(lerp_grid(0.4, 2.0, 201, 0), 0.4);
        assert_eq!(lerp_grid(0.4, 2.0, 201, 200), 2.0);
        assert_eq!(lerp_grid(-1.0, 1.0, 201, 100), 0.0);
        assert_eq!(lerp_grid(0.4, 2.0, 201, 75), 1.0);
    }

    #[test]
    fn slice_rows_are_thread_count_invariant() {
        let r = rel();
        let slice = SliceSpec { a_n: 11, b_n: 9, ..SliceSpec::default() };
        let theta = ThetaSpec::IndicatorDetOne;
        let one = phase_diagram_rows(&r, &slice, &theta, 1);
        let four = phase_diagram_rows(&r, &slice, &theta, 4);
        assert_eq!(one.len(), 99);
        assert_eq!(one, four);
    }

    #[test]
    fn slice_rows_relax_and_classify_consistently() {
        let r = rel();
        // a_n = 25 keeps a = 1.0 on the grid: (1.0 - 0.4) / (2.0 - 0.4) = 9/24.
        let slice = SliceSpec { a_n: 25, b_n: 21, ..SliceSpec::default() };
        let rows = phase_diagram_rows(&r, &slice, &ThetaSpec::IndicatorDetOne, 2);
        for row in &rows {
            assert_ne!(row.region, PhaseRegion::Inadmissible, "at ({}, {})", row.a, row.b);
            assert!(row.wqc <= row.w + 1e-12);
            // On the determinant-one slice the zero set and the second-order
            // region coincide.
            assert_eq!(
                row.kqc,
                row.region == PhaseRegion::SecondOrder,
                "at ({}, {})",
                row.a,
                row.b
            );
            if row.kqc {
                assert!(row.wqc.finite().unwrap() <= 1e-10);
            }
        }
        let center = rows.iter().find(|r| r.a == 1.0 && r.b == 0.0).expect("center on grid");
        assert_eq!(center.region, PhaseRegion::SecondOrder);
        assert!(center.w.finite().unwrap() > 1e-3);
    }

    #[test]
    fn csv_has_header_and_formats_infinities() {
        let r = rel();
        let slice = SliceSpec { a_n: 3, b_n: 2, ..SliceSpec::default() };
        let rows = phase_diagram_rows(&r, &slice, &ThetaSpec::IndicatorDetOne, 1);
        let csv = slice_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("a,b,W,Wqc,region,kqc_member"));
        assert_eq!(csv.lines().count(), 7);

        assert_eq!(fmt_energy(EnergyValue::Infinite), "inf");
        let one = fmt_energy(EnergyValue::Finite(1.0));
        assert_eq!(one.parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn boundary_arcs_close_at_the_corners() {
        let curves = boundary_polylines(rel().params(), 33);
        for pts in [&curves.plus, &curves.minus] {
            let (a0, b0) = pts[0];
            let (a1, b1) = pts[pts.len() - 1];
            assert!((a0 - 1.0 / 1.5).abs() < 1e-15 && b0.abs() < 1e-12);
            assert!((a1 - 1.5).abs() < 1e-15 && b1.abs() < 1e-12);
        }
        // At a = 1 the arcs sit symmetrically at +/- (sqrt(L - 1) - 1).
        let mid_plus = curves.plus[16].1;
        let mid_minus = curves.minus[16].1;
        assert!((mid_plus + mid_minus).abs() < 1e-14);
        assert!(mid_plus > 0.0);
    }

    #[test]
    fn boundaries_csv_lists_both_curves() {
        let curves = boundary_polylines(rel().params(), 5);
        let csv = boundaries_csv(&curves);
        assert_eq!(csv.lines().next(), Some("curve,a,b"));
        assert_eq!(csv.lines().filter(|l| l.starts_with("plus,")).count(), 5);
        assert_eq!(csv.lines().filter(|l| l.starts_with("minus,")).count(), 5);
    }

    #[test]
    fn json_documents_carry_the_schema_version() {
        let r = rel();
        let slice = SliceSpec { a_n: 3, b_n: 3, ..SliceSpec::default() };
        let theta = ThetaSpec::IndicatorDetOne;
        let rows = phase_diagram_rows(&r, &slice, &theta, 1);
        let curves = boundary_polylines(r.params(), 4);

        let doc = slice_json(1.5, "indicator_det1", &slice, &rows, &curves);
        assert_eq!(doc["schema_version"], SCHEMA_VERSION);
        assert_eq!(doc["rows"].as_array().unwrap().len(), 9);
        assert_eq!(doc["boundaries"]["plus"].as_array().unwrap().len(), 4);

        let record = eval_record(&r, Mat2::identity(), "indicator_det1", &theta);
        assert_eq!(record["schema_version"], SCHEMA_VERSION);
        assert_eq!(record["region"], "second_order");
        assert_eq!(record["kqc_member"], true);
        assert!(record["Wqc"].as_f64().unwrap() < 1e-10);

        let infinite = eval_record(&r, Mat2::diag(2.0, 2.0), "indicator_det1", &theta);
        assert_eq!(infinite["W"], "inf");
        assert_eq!(infinite["Wqc"], "inf");
    }

    #[test]
    fn laminate_and_verify_records_serialize() {
        let r = rel();
        let lam = crate::laminate::build_laminate(&r, Mat2::identity());
        let report = crate::laminate::verify_laminate(&r, &ThetaSpec::Zero, &lam);
        let doc = laminate_record(&r, "zero", &lam, &report);
        assert_eq!(doc["passed"], true);
        assert_eq!(doc["laminate"]["type"], "split");
        assert_eq!(doc["laminate"]["plus"]["type"], "split");

        let results = vec![
            SuiteResult { name: "a", passed: true, detail: "ok".into() },
            SuiteResult { name: "b", passed: false, detail: "bad".into() },
        ];
        let doc = verify_record(1.5, 7, 100, &results);
        assert_eq!(doc["all_passed"], false);
        assert_eq!(doc["suites"].as_array().unwrap().len(), 2);
    }
}
