// Evaluate the pointwise energy W and its quasiconvex relaxation Wqc at a few
// deformation gradients, both with and without the determinant penalty.

use twowell::energy::{w_eval, ThetaSpec, WellParams};
use twowell::mat2::{coords, Mat2};
use twowell::relaxation::Relaxation;

fn main() {
    let params = WellParams::new(1.5).expect("lambda > 1");
    let rel = Relaxation::new(params);

    let samples: [(&str, Mat2); 5] = [
        ("first well", params.first_well()),
        ("well midpoint", Mat2::new(0.5 * (1.5 + 1.0 / 1.5), 0.0, 0.0, 0.5 * (1.5 + 1.0 / 1.5))),
        ("sheared", Mat2::new(1.0, 0.6, 0.0, 1.0)),
        ("stretched", Mat2::diag(2.0, 0.5)),
        ("expanded", Mat2::diag(2.0, 2.0)),
    ];

    for theta in [ThetaSpec::Zero, ThetaSpec::IndicatorDetOne] {
        let theta_name = match theta {
            ThetaSpec::Zero => "zero",
            ThetaSpec::IndicatorDetOne => "indicator_det1",
            _ => unreachable!(),
        };
        println!("lambda = {}, theta = {theta_name}", params.lambda());
        println!(
            "{:<14} {:>9} {:>9} {:>9} {:>12} {:>12} {:<22} kqc",
            "matrix", "|Fv|", "|Fw|", "det", "W", "Wqc", "region"
        );
        for (name, f) in samples {
            let c = coords(f);
            let w = w_eval(f, &params, &theta);
            let wqc = rel.wqc_eval(f, &theta);
            let region = rel.classify(c);
            println!(
                "{:<14} {:>9.5} {:>9.5} {:>9.5} {:>12.6} {:>12.6} {:<22} {}",
                name,
                c.x,
                c.y,
                c.d,
                w.as_f64(),
                wqc.as_f64(),
                region.label(),
                rel.kqc_member(f, 1e-9),
            );
        }
        println!();
    }

    println!("Wqc vanishes exactly on the quasiconvex hull of the wells;");
    println!("elsewhere it is the energy of the best laminate (see laminate_tree).");
}
