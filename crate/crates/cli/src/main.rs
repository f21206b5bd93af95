use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use endperiodic::pipeline::{
    construct, verify_record, Check, ConstructionRecord, InputSpec, PipelineConfig, VerificationReport,
};
use endperiodic::render::{render, DiagramKind, DiagramSpec};
use endperiodic::spectral::{
    char_poly, determinant, imprimitivity_index, is_irreducible, is_primitive, perron_eigendata, IntMatrix,
};
use endperiodic::Error;

const OUT_DIR_VAR: &str = "ENDPERIODIC_OUT_DIR";

#[derive(Parser)]
#[command(name = "endperiodic", version, about = "Build and check end-periodic maps from non-negative integer matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the construction and write the JSON record.
    Construct(ConstructArgs),
    /// Re-check a stored record.
    Verify {
        record: PathBuf,
        /// Write the verification report as JSON to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Draw a diagram of a stored record.
    Render {
        record: PathBuf,
        #[arg(long, value_parser = parse_fig)]
        fig: DiagramKind,
        /// Output file; defaults to <kind>.svg in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print spectral data of the input matrix.
    Spectral {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputSource {
    /// Matrix file: whitespace-separated rows or a JSON array of rows.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// The 1×1 matrix [[d]].
    #[arg(long)]
    integer: Option<u64>,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    source: InputSource,
    /// Replace the matrix by its k-fold cyclic block lift.
    #[arg(long)]
    lift: Option<usize>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Identification depth; defaults to the certified depth plus three nesting periods.
    #[arg(long)]
    depth: Option<usize>,
    /// Use the corner-periodic bijections (on by default).
    #[arg(long, overrides_with = "no_corner_selection")]
    corner_selection: bool,
    #[arg(long)]
    no_corner_selection: bool,
    /// Skip the genus insertion.
    #[arg(long)]
    no_genus: bool,
    /// Re-check the record after building it.
    #[arg(long)]
    verify: bool,
    /// Diagram kinds to draw: piecemap, digraphs, orbits, expanded, complex.
    #[arg(long, value_parser = parse_fig)]
    fig: Vec<DiagramKind>,
    /// Output directory; defaults to $ENDPERIODIC_OUT_DIR or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave created_at empty so repeated runs are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

fn parse_fig(s: &str) -> Result<DiagramKind, String> {
    DiagramKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = DiagramKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown figure kind {s:?}, expected one of {}", names.join(", "))
    })
}

/// Failure of a run, split by exit status.
enum Failure {
    Verification(anyhow::Error),
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn error_code(e: &Error) -> String {
    match e {
        Error::InvalidInput(_) => "invalid-input".into(),
        Error::Precondition(_) => "precondition".into(),
        Error::Convergence { .. } => "convergence".into(),
        Error::Verification { invariant, .. } => format!("verification:{invariant}"),
        Error::Internal(_) => "internal".into(),
        Error::MissingData(_) => "missing-data".into(),
    }
}

/// Errors about the input itself are usage errors; everything else means a
/// check did not pass.
fn classify(e: Error) -> Failure {
    let code = error_code(&e);
    let err = anyhow::Error::new(e).context(format!("[{code}]"));
    match code.as_str() {
        "invalid-input" | "precondition" => Failure::Usage(err),
        _ => Failure::Verification(err),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_matrix(path: &Path) -> anyhow::Result<IntMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    IntMatrix::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn input_spec(args: &InputArgs) -> anyhow::Result<InputSpec> {
    let spec = match (&args.source.matrix, args.source.integer, args.lift) {
        (Some(path), None, None) => InputSpec::Matrix(read_matrix(path)?),
        (Some(path), None, Some(k)) => InputSpec::Lift {
            base: read_matrix(path)?,
            k,
        },
        (None, Some(d), None) => InputSpec::Integer(d),
        (None, Some(d), Some(k)) => InputSpec::Lift {
            base: IntMatrix::scalar(d),
            k,
        },
        _ => anyhow::bail!("give exactly one of --matrix or --integer"),
    };
    Ok(spec)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
}

fn summarize(record: &ConstructionRecord) {
    let e = &record.spectral.eigen;
    let census = &record.census;
    let surface = &record.surface;
    println!("matrix: {:?}", record.matrix.rows());
    println!("lambda: {:.12}", e.lambda);
    println!("stretch factor: {:.12}", record.incidence.spectral_radius);
    if let Some(s) = record.incidence.exact_stretch {
        println!("stretch factor (exact): {s}");
    }
    println!(
        "ends: {} attracting, {} repelling",
        surface.attracting_ends, surface.repelling_ends
    );
    println!("connected: {}", surface.connected);
    println!("infinite type: {}", surface.infinite_type);
    println!(
        "classes: {} infinite, largest finite {}",
        census.infinite_classes.len(),
        census.largest_finite_class
    );
    println!(
        "escape depth: {} (depth cap {})",
        record.certificates.escape_depth, record.certificates.depth_cap
    );
}

fn run_construct(args: ConstructArgs) -> Result<(), Failure> {
    let mut config = PipelineConfig::new(input_spec(&args.input)?);
    config.tol = args.tol;
    config.depth = args.depth;
    config.corner_selection = !args.no_corner_selection;
    config.insert_genus = !args.no_genus;
    let mut record = construct(&config).map_err(classify)?;
    if !args.no_timestamp {
        record.created_at = Some(chrono::Utc::now().to_rfc3339());
    }
    let dir = out_dir(args.out);
    let record_path = dir.join("record.json");
    write(&record_path, &record.to_json())?;
    summarize(&record);
    println!("record: {}", record_path.display());
    for kind in &args.fig {
        let svg = render(&DiagramSpec { kind: *kind, record: &record }).map_err(classify)?;
        let path = dir.join(format!("{}.svg", kind.name()));
        write(&path, &svg)?;
        println!("figure: {}", path.display());
    }
    if args.verify {
        let report = verify_or_report(&record);
        let path = dir.join("verification.json");
        write(&path, &serde_json::to_string_pretty(&report).expect("reports serialize"))?;
        println!("verification: {}", if report.passed { "pass" } else { "FAIL" });
        print_checks(&report.checks);
        if !report.passed {
            return Err(Failure::Verification(anyhow::anyhow!("record failed verification")));
        }
    }
    Ok(())
}

/// Turns a verification error into a report with a failing last check.
fn verify_or_report(record: &ConstructionRecord) -> VerificationReport {
    match verify_record(record) {
        Ok(r) => r,
        Err(e) => {
            let name = error_code(&e);
            VerificationReport {
                checks: vec![Check {
                    name,
                    passed: false,
                    detail: e.to_string(),
                }],
                passed: false,
            }
        }
    }
}

fn load_record(path: &Path) -> Result<ConstructionRecord, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)?;
    ConstructionRecord::from_json(&text).map_err(|e| {
        let code = error_code(&e);
        Failure::Verification(anyhow::Error::new(e).context(format!("[{code}]")))
    })
}

fn run_verify(record: PathBuf, report_path: Option<PathBuf>) -> Result<(), Failure> {
    let record = load_record(&record)?;
    let report = verify_or_report(&record);
    if let Some(p) = report_path {
        write(&p, &serde_json::to_string_pretty(&report).expect("reports serialize"))?;
    }
    println!("verification: {}", if report.passed { "pass" } else { "FAIL" });
    print_checks(&report.checks);
    if report.passed {
        Ok(())
    } else {
        let detail = report.checks.last().map(|c| c.detail.clone()).unwrap_or_default();
        Err(Failure::Verification(anyhow::anyhow!(detail)))
    }
}

fn run_render(record: PathBuf, fig: DiagramKind, out: Option<PathBuf>) -> Result<(), Failure> {
    let record = load_record(&record)?;
    let svg = render(&DiagramSpec { kind: fig, record: &record }).map_err(classify)?;
    let path = out.unwrap_or_else(|| out_dir(None).join(format!("{}.svg", fig.name())));
    write(&path, &svg)?;
    println!("figure: {}", path.display());
    Ok(())
}

fn run_spectral(input: InputArgs, tol: f64) -> Result<(), Failure> {
    let config = PipelineConfig::new(input_spec(&input)?);
    let (m, _) = config.resolve().map_err(classify)?;
    let irreducible = is_irreducible(&m).map_err(classify)?;
    let mut out = serde_json::json!({
        "matrix": m.rows(),
        "char_poly": char_poly(&m).to_string(),
        "determinant": determinant(&m).to_string(),
        "irreducible": irreducible,
    });
    if irreducible {
        let eigen = perron_eigendata(&m, tol).map_err(classify)?;
        out["primitive"] = is_primitive(&m).map_err(classify)?.into();
        out["imprimitivity_index"] = imprimitivity_index(&m).map_err(classify)?.into();
        out["lambda"] = eigen.lambda.into();
        out["eta"] = eigen.eta.clone().into();
        out["omega"] = eigen.omega.clone().into();
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("json serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(args) => run_construct(args),
        Command::Verify { record, report } => run_verify(record, report),
        Command::Render { record, fig, out } => run_render(record, fig, out),
        Command::Spectral { input, tol } => run_spectral(input, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
