//! Thin command-line front end over the library: evaluate one matrix, map
//! the determinant-one slice, build a laminate, or run the verification
//! battery. Exit codes: 0 success, 1 a report or suite failed, 2 malformed
//! arguments, 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twowell::cli::{
    boundaries_csv, boundary_polylines, eval_record, laminate_record, parse_theta,
    phase_diagram_rows, slice_csv, slice_json, thread_count_from_env, verify_record, SliceSpec,
};
use twowell::energy::WellParams;
use twowell::laminate::{build_laminate, verify_laminate};
use twowell::mat2::Mat2;
use twowell::relaxation::Relaxation;
use twowell::verify::{all_passed, run_all};

#[derive(Parser)]
#[command(
    name = "twowell",
    version,
    about = "Planar two-well energies: pointwise evaluation, relaxation, laminates, verification"
)]
struct TopLevel {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the energy and its relaxation at one matrix
    Eval(EvalArgs),
    /// Map energies and regions over the determinant-one slice (a, b; 0, 1/a)
    PhaseDiagram(PhaseDiagramArgs),
    /// Build and audit the optimal laminate under one matrix
    Laminate(LaminateArgs),
    /// Run the verification battery
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Row-major matrix entries: m11 m12 m21 m22
    #[arg(long, num_args = 4, required = true, allow_negative_numbers = true,
          value_names = ["M11", "M12", "M21", "M22"])]
    matrix: Vec<f64>,
    /// Well stretch, must exceed 1
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    /// Determinant penalty: zero, indicator_det1, or log_squared
    #[arg(long, default_value = "indicator_det1")]
    theta: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    a_lo: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    a_hi: f64,
    #[arg(long, default_value_t = 201)]
    a_n: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    b_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b_hi: f64,
    #[arg(long, default_value_t = 201)]
    b_n: usize,
    /// Well stretch, must exceed 1
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    /// Determinant penalty: zero, indicator_det1, or log_squared
    #[arg(long, default_value = "indicator_det1")]
    theta: String,
    /// Output file; CSV puts the boundary arcs in <OUT>.boundaries.csv
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct LaminateArgs {
    /// Row-major matrix entries: m11 m12 m21 m22
    #[arg(long, num_args = 4, required = true, allow_negative_numbers = true,
          value_names = ["M11", "M12", "M21", "M22"])]
    matrix: Vec<f64>,
    /// Well stretch, must exceed 1
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    /// Determinant penalty: zero, indicator_det1, or log_squared
    #[arg(long, default_value = "zero")]
    theta: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Well stretch, must exceed 1
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random draws per suite (heavy suites cap themselves lower)
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Optional JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CmdError {
    Usage(String),
    Io(std::io::Error, PathBuf),
}

impl CmdError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CmdError::Usage(_) => ExitCode::from(2),
            CmdError::Io(..) => ExitCode::from(3),
        }
    }
}

fn usage<E: std::fmt::Display>(err: E) -> CmdError {
    CmdError::Usage(err.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    std::fs::write(path, contents).map_err(|e| CmdError::Io(e, path.to_path_buf()))
}

fn matrix_from_args(entries: &[f64]) -> Result<Mat2, CmdError> {
    if entries.len() != 4 {
        return Err(CmdError::Usage(format!(
            "--matrix takes exactly 4 entries, got {}",
            entries.len()
        )));
    }
    let f = Mat2::new(entries[0], entries[1], entries[2], entries[3]);
    if !f.is_finite() {
        return Err(CmdError::Usage("matrix entries must be finite".into()));
    }
    Ok(f)
}

fn cmd_eval(args: EvalArgs) -> Result<bool, CmdError> {
    let f = matrix_from_args(&args.matrix)?;
    let params = WellParams::new(args.lambda).map_err(usage)?;
    let theta = parse_theta(&args.theta).map_err(usage)?;
    let rel = Relaxation::new(params);
    let record = eval_record(&rel, f, &args.theta, &theta);
    println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    Ok(true)
}

fn cmd_phase_diagram(args: PhaseDiagramArgs) -> Result<bool, CmdError> {
    let params = WellParams::new(args.lambda).map_err(usage)?;
    let theta = parse_theta(&args.theta).map_err(usage)?;
    if [args.a_lo, args.a_hi, args.b_lo, args.b_hi].iter().any(|v| !v.is_finite()) {
        return Err(CmdError::Usage("range endpoints must be finite".into()));
    }
    if args.a_lo <= 0.0 {
        return Err(CmdError::Usage("a-lo must be positive (the slice contains 1/a)".into()));
    }
    if args.a_hi <= args.a_lo || args.b_hi <= args.b_lo {
        return Err(CmdError::Usage("ranges must satisfy lo < hi".into()));
    }
    if args.a_n < 2 || args.b_n < 2 {
        return Err(CmdError::Usage("grids need at least 2 points per axis".into()));
    }

    let slice = SliceSpec {
        a_lo: args.a_lo,
        a_hi: args.a_hi,
        a_n: args.a_n,
        b_lo: args.b_lo,
        b_hi: args.b_hi,
        b_n: args.b_n,
    };
    let rel = Relaxation::new(params);
    let rows = phase_diagram_rows(&rel, &slice, &theta, thread_count_from_env());
    let curves = boundary_polylines(rel.params(), args.a_n.max(64));

    match args.format {
        OutputFormat::Csv => {
            write_file(&args.out, &slice_csv(&rows))?;
            let mut boundary_path = args.out.clone().into_os_string();
            boundary_path.push(".boundaries.csv");
            let boundary_path = PathBuf::from(boundary_path);
            write_file(&boundary_path, &boundaries_csv(&curves))?;
            println!(
                "wrote {} slice points to {} and boundary arcs to {}",
                rows.len(),
                args.out.display(),
                boundary_path.display()
            );
        }
        OutputFormat::Json => {
            let doc = slice_json(args.lambda, &args.theta, &slice, &rows, &curves);
            write_file(
                &args.out,
                &serde_json::to_string_pretty(&doc).expect("document serializes"),
            )?;
            println!("wrote {} slice points to {}", rows.len(), args.out.display());
        }
    }
    Ok(true)
}

fn cmd_laminate(args: LaminateArgs) -> Result<bool, CmdError> {
    let f = matrix_from_args(&args.matrix)?;
    let params = WellParams::new(args.lambda).map_err(usage)?;
    let theta = parse_theta(&args.theta).map_err(usage)?;
    let rel = Relaxation::new(params);
    let lam = build_laminate(&rel, f);
    let report = verify_laminate(&rel, &theta, &lam);
    let record = laminate_record(&rel, &args.theta, &lam, &report);
    println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    Ok(report.passes())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, CmdError> {
    WellParams::new(args.lambda).map_err(usage)?;
    if args.samples == 0 {
        return Err(CmdError::Usage("samples must be positive".into()));
    }
    let results = run_all(args.lambda, args.seed, args.samples);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} suites passed", results.len());
    if let Some(path) = &args.out {
        let doc = verify_record(args.lambda, args.seed, args.samples, &results);
        write_file(path, &serde_json::to_string_pretty(&doc).expect("record serializes"))?;
    }
    Ok(all_passed(&results))
}

fn main() -> ExitCode {
    let top = TopLevel::parse();
    let outcome = match top.command {
        Command::Eval(args) => cmd_eval(args),
        Command::PhaseDiagram(args) => cmd_phase_diagram(args),
        Command::Laminate(args) => cmd_laminate(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let message = match &err {
                CmdError::Usage(m) => m.clone(),
                CmdError::Io(e, path) => format!("{}: {e}", path.display()),
            };
            eprintln!("error: {message}");
            err.exit_code()
        }
    }
}
