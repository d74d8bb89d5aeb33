// Trace the stationarity curve phi(y, d) that separates the laminate regions,
// show its fixed points p(d), and cross-check one solve against the
// independent quartic route.

use twowell::energy::WellParams;
use twowell::relaxation::Relaxation;

fn main() {
    let params = WellParams::new(1.5).expect("lambda > 1");
    let rel = Relaxation::new(params);

    println!("phi(y, d): the x that makes raising x stop lowering g (lambda = 1.5)");
    print!("{:>6}", "y");
    let dets = [0.0, 1.0, 2.0];
    for d in dets {
        print!("  {:>12}", format!("d = {d}"));
    }
    println!();
    for k in 0..9 {
        let y = 0.5 + 0.5 * k as f64;
        print!("{y:>6.2}");
        for d in dets {
            match rel.phi(y, d) {
                Ok(solve) => print!("  {:>12.8}", solve.x_star),
                Err(e) => print!("  {:>12}", format!("({e})")),
            }
        }
        println!();
    }

    println!("\nfixed points p(d) = phi(p(d), d), the corner of the second-order region:");
    for d in [-1.0, 0.0, 1.0, 2.0] {
        let p = rel.p_of_d(d).expect("fixed point");
        println!("  p({d:>4}) = {p:.12}");
    }
    let wc = (params.l() / 2.0).sqrt();
    println!("  p(1) equals the well coordinate sqrt(L/2) = {wc:.12}");

    let (y, d) = (2.0, 1.0);
    println!("\nquartic cross-check at y = {y}, d = {d}:");
    let solve = rel.phi(y, d).expect("solve");
    println!("  bracketed Newton: x = {:.12} ({} iterations)", solve.x_star, solve.iterations);
    let candidates = rel.phi_quartic(y, d);
    println!("  quartic candidates: {candidates:?}");
    let survivors = rel.filter_stationary_candidates(y, d, &candidates, 1e-6);
    println!("  after residual filter: {survivors:?}");
    assert_eq!(survivors.len(), 1, "the squared equation keeps exactly one true root");
    assert!((survivors[0] - solve.x_star).abs() <= 1e-7 * solve.x_star.max(1.0));
    println!("  routes agree to {:.2e}", (survivors[0] - solve.x_star).abs());
}
