// Sweep the benchmark slice F = [[a, b], [0, 1/a]] of determinant-one
// matrices, classify every grid point, and write the phase diagram as CSV.
//
// The full-resolution sweep behind `twowell phase-diagram` uses a 201 x 201
// grid; this walkthrough runs a coarser one and prints the region census.

use std::collections::BTreeMap;
use std::io::Write;

use twowell::cli::{
    boundaries_csv, boundary_polylines, phase_diagram_rows, slice_csv, thread_count_from_env,
    SliceSpec,
};
use twowell::energy::{ThetaSpec, WellParams};
use twowell::relaxation::Relaxation;

fn main() {
    let params = WellParams::new(1.5).expect("lambda > 1");
    let rel = Relaxation::new(params);
    let slice = SliceSpec { a_n: 101, b_n: 101, ..SliceSpec::default() };
    let threads = thread_count_from_env();

    let rows = phase_diagram_rows(&rel, &slice, &ThetaSpec::IndicatorDetOne, threads);

    let mut census: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut zero_set = 0usize;
    for row in &rows {
        *census.entry(row.region.label()).or_insert(0) += 1;
        if row.kqc {
            zero_set += 1;
        }
    }

    println!(
        "slice a in [{}, {}] x b in [{}, {}], {} x {} points, {} threads",
        slice.a_lo, slice.a_hi, slice.b_lo, slice.b_hi, slice.a_n, slice.b_n, threads
    );
    for (label, count) in &census {
        println!("{label:<22} {count:>6}");
    }
    println!("{:<22} {zero_set:>6} (matches second_order on this slice)", "kqc members");

    let dir = std::env::temp_dir();
    let grid_path = dir.join("twowell_phase_diagram.csv");
    let curves_path = dir.join("twowell_phase_diagram.boundaries.csv");
    let curves = boundary_polylines(&params, slice.a_n.max(64));
    std::fs::File::create(&grid_path)
        .and_then(|mut f| f.write_all(slice_csv(&rows).as_bytes()))
        .expect("write grid csv");
    std::fs::File::create(&curves_path)
        .and_then(|mut f| f.write_all(boundaries_csv(&curves).as_bytes()))
        .expect("write boundary csv");
    println!("\ngrid:       {}", grid_path.display());
    println!("boundaries: {}", curves_path.display());
    println!("The boundaries trace (a + b)^2 + 1/a^2 = L and (a - b)^2 + 1/a^2 = L,");
    println!("the edges of the zero set of Wqc on this slice.");
}
