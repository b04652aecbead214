use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modrelu::compiler::{catalog, compile};
use modrelu::harness::suites::run_suite;
use modrelu::harness::sweep::{sweep, SweepConfig};
use modrelu::harness::init_threads;
use modrelu::json::{parse_network, AnyNet};
use modrelu::primitives::{PrimitiveKind, PrimitiveSpec};
use modrelu::{Error, C64};

#[derive(Parser)]
#[command(name = "modrelu", version, about = "Build and verify complex modReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a primitive network or compile a target and write it as JSON
    Build(BuildArgs),
    /// Evaluate a network at the points of a file
    Eval {
        network: PathBuf,
        /// One point per line, coordinates "re,im" separated by ';'
        points: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a named verification suite and write JSON-line reports
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a target at several accuracies and write a CSV of sizes and errors
    Sweep {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "quad")]
        target: String,
        /// Comma-separated accuracies
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the rows and fits as JSON lines
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the architecture statistics of a network file as JSON
    Stats { network: PathBuf },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, conflicts_with = "target")]
    primitive: Option<String>,
    #[arg(long, required_unless_present = "primitive")]
    target: Option<String>,
    #[arg(long = "R", default_value_t = 2.0)]
    radius: f64,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "c")]
    shift: Option<f64>,
    #[arg(long = "M")]
    bound: Option<f64>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes via a temporary file in the target directory, so a failed run
/// leaves no partial output.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let Some(path) = path else {
        print!("{text}");
        return Ok(());
    };
    let io = |e: std::io::Error| Failure::Input(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn build(a: &BuildArgs) -> Result<String, Failure> {
    let eps = a.eps;
    if let Some(name) = &a.primitive {
        let kind: PrimitiveKind = name.parse()?;
        let needs_eps = !matches!(kind, PrimitiveKind::Identity | PrimitiveKind::PsiRe | PrimitiveKind::PsiIm);
        let eps = match eps {
            Some(e) => e,
            None if needs_eps => return Err(Failure::Input(format!("--eps is required for {name}"))),
            None => 0.0,
        };
        let mut spec = PrimitiveSpec::new(kind, a.radius, eps);
        spec.shift = a.shift.or(matches!(kind, PrimitiveKind::ReluRe | PrimitiveKind::ReluIm).then_some(0.0));
        spec.bound = a.bound.or(matches!(kind, PrimitiveKind::ProductRe | PrimitiveKind::Product).then_some(1.0));
        return Ok(spec.build()?.to_json());
    }
    let target = a.target.as_deref().expect("clap requires a target");
    let eps = eps.ok_or_else(|| Failure::Input("--eps is required".into()))?;
    let t = catalog(target, a.d, a.n)?;
    Ok(AnyNet::Structured(std::sync::Arc::new(compile(&t, eps)?)).to_json())
}

fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<C64>>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Failure::Input(format!("points line {}: {msg}", i + 1));
        let point = line
            .split(';')
            .map(|entry| {
                let (re, im) = entry.split_once(',').ok_or_else(|| bad("expected re,im"))?;
                let re: f64 = re.trim().parse().map_err(|_| bad("bad real part"))?;
                let im: f64 = im.trim().parse().map_err(|_| bad("bad imaginary part"))?;
                Ok(C64::new(re, im))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        if point.len() != dim {
            return Err(bad(&format!("expected {dim} coordinates, got {}", point.len())));
        }
        out.push(point);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build(a) => {
            let text = build(&a)?;
            emit(a.output.as_deref(), &text)
        }
        Command::Eval { network, points, output } => {
            let net = parse_network(&read(&network)?)?;
            let pts = parse_points(&read(&points)?, net.d_in())?;
            let mut text = String::new();
            for p in &pts {
                let out = net.evaluate(p)?;
                let line: Vec<String> = out.iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
                text.push_str(&line.join(";"));
                text.push('\n');
            }
            emit(output.as_deref(), &text)
        }
        Command::Verify { suite, seed, samples, output } => {
            let reports = run_suite(&suite, samples, seed)?;
            let mut text = String::new();
            for r in &reports {
                eprintln!("{}", r.summary());
                text.push_str(&r.to_json_line());
                text.push('\n');
            }
            emit(output.as_deref(), &text)?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(Failure::Verification(format!("{failed} of {} checks failed", reports.len())));
            }
            Ok(())
        }
        Command::Sweep { d, n, target, eps, samples, seed, output, json } => {
            let cfg = SweepConfig { eps, d, n, target, samples, seed };
            let result = sweep(&cfg)?;
            for r in &result.rows {
                match &r.failure {
                    Some(f) => eprintln!("eps {}: failed: {f}", r.epsilon),
                    None => eprintln!(
                        "eps {}: depth {} weights {} sup error {:.3e}",
                        r.epsilon, r.depth, r.weights, r.sup_error
                    ),
                }
            }
            eprintln!(
                "weight slope {:.3}, max weight slope {:.3}, depth constant {:.3} (worst ratio {:.3})",
                result.weight_slope, result.max_weight_slope, result.depth_constant, result.depth_ratio_max
            );
            if let Some(path) = json {
                let mut text = String::new();
                for r in &result.rows {
                    text.push_str(&serde_json::to_string(r).expect("row serializes"));
                    text.push('\n');
                }
                let fits = serde_json::json!({
                    "weight_slope": result.weight_slope,
                    "max_weight_slope": result.max_weight_slope,
                    "depth_constant": result.depth_constant,
                    "depth_ratio_max": result.depth_ratio_max,
                });
                text.push_str(&fits.to_string());
                text.push('\n');
                emit(Some(&path), &text)?;
            }
            emit(output.as_deref(), &result.to_csv())?;
            if !result.all_within_bound() {
                return Err(Failure::Verification("some accuracies exceeded their bound".into()));
            }
            Ok(())
        }
        Command::Stats { network } => {
            let net = parse_network(&read(&network)?)?;
            let stats = serde_json::to_string_pretty(&net.stats()).expect("stats serialize");
            println!("{stats}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
