mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hoqmc::bounds::optimize_lambda;
use hoqmc::cbc::{cbc_product, cbc_spod};
use hoqmc::formats::{points_csv, VectorFile};
use hoqmc::integrands::{convergence_experiment, ConvergenceConfig, IntegrandKind};
use hoqmc::pointgen::interlaced_points;
use hoqmc::verify::{run_preset, verify_file, Preset, VerifyReport};
use hoqmc::weights::{check_smallness, smallness_threshold, WeightFamily, WeightSpec};

use config::RunConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_ENVELOPE: u8 = 3;

#[derive(Parser)]
#[command(name = "hoqmc", version, about = "Interlaced polynomial lattice rules: construction, points, bounds, verification")]
struct Cli {
    /// Worker threads for construction and experiments
    #[arg(long, global = true, env = "HOQMC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Default)]
struct ParamArgs {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Prime base (default 2)
    #[arg(long)]
    b: Option<u32>,
    /// Rule has b^m points
    #[arg(long)]
    m: Option<usize>,
    /// Dimension
    #[arg(long)]
    s: Option<usize>,
    /// Summability exponent of beta
    #[arg(long)]
    p: Option<f64>,
    /// Interlacing factor; defaults to floor(1/p) + 1
    #[arg(long)]
    alpha: Option<usize>,
    /// spod (default) or product
    #[arg(long, value_parser = parse_family)]
    weights: Option<WeightFamily>,
    /// beta_j = c j^-theta
    #[arg(long)]
    beta_c: Option<f64>,
    #[arg(long)]
    beta_theta: Option<f64>,
    /// Output file (converge: prefix for .csv and .json); stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ParamArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let flags = RunConfig {
            b: self.b,
            m: self.m,
            s: self.s,
            p: self.p,
            alpha: self.alpha,
            weights: self.weights,
            beta_c: self.beta_c,
            beta_theta: self.beta_theta,
            out: self.out.clone(),
            ..Default::default()
        };
        Ok(match &self.config {
            Some(path) => RunConfig::load(path)?.merged(flags),
            None => flags,
        })
    }
}

fn parse_family(s: &str) -> Result<WeightFamily, String> {
    s.parse().map_err(|e: hoqmc::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Build a generating vector by fast CBC and write it as JSON
    Construct {
        #[command(flatten)]
        params: ParamArgs,
        /// Record the construction wall time in the file
        #[arg(long)]
        timing: bool,
    },
    /// Emit the points of a generating-vector file as CSV
    Points {
        /// Generating-vector JSON
        vector: PathBuf,
        /// Number of leading points to emit
        #[arg(long)]
        count: Option<usize>,
        /// Write numerator/denominator pairs instead of floats
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified CBC error bound over the lambda grid
    Bound {
        /// Generating-vector JSON carrying its weights; otherwise parameters come from flags
        #[arg(long)]
        vector: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the oracle suites at a preset scale, or check a generating-vector file
    Verify {
        #[arg(long, default_value = "smoke")]
        preset: String,
        /// Check this generating-vector file instead of a preset
        #[arg(long)]
        vector: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Convergence experiment: one rule per m, errors, fitted slope
    Converge {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        m_min: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        /// model or product
        #[arg(long)]
        integrand: Option<String>,
        /// Add a non-interlaced (order 1) rule for comparison
        #[arg(long)]
        baseline: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let envelope = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<hoqmc::Error>(),
                    Some(hoqmc::Error::Envelope(_) | hoqmc::Error::ScaleGuard(_))
                )
            });
            ExitCode::from(if envelope { EXIT_ENVELOPE } else { EXIT_USAGE })
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_vector(path: &Path) -> anyhow::Result<VectorFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(VectorFile::from_json(&text)?)
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Construct { params, timing } => cmd_construct(&params.resolve()?, timing),
        Command::Points { vector, count, exact, out } => {
            let file = read_vector(&vector)?;
            let pts = interlaced_points(&file.rule()?);
            emit(out.as_deref(), &points_csv(&pts, count, exact))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { vector, params, format } => cmd_bound(vector.as_deref(), &params.resolve()?, format),
        Command::Verify { preset, vector, format } => {
            let report = match vector {
                Some(path) => verify_file(&read_vector(&path)?),
                None => run_preset(preset.parse::<Preset>()?)?,
            };
            print_verify(&report, format)?;
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
        }
        Command::Converge { params, m_min, m_max, integrand, baseline, format } => {
            let mut cfg = params.resolve()?;
            cfg = cfg.merged(RunConfig {
                m_min,
                m_max,
                integrand: integrand.map(|s| s.parse::<IntegrandKind>()).transpose()?,
                baseline: baseline.then_some(true),
                ..Default::default()
            });
            cmd_converge(&cfg, format)
        }
    }
}

fn smallness_warning(spec: &WeightSpec) {
    if spec.p() == 1.0 && !check_smallness(spec.beta(), spec.b()) {
        eprintln!(
            "warning: p = 1 needs sum beta_j = {:.6} below {:.6} (smallness condition); constructing anyway",
            spec.beta().total(),
            smallness_threshold(spec.b())
        );
    }
}

fn cmd_construct(cfg: &RunConfig, timing: bool) -> anyhow::Result<ExitCode> {
    let spec = cfg.spec()?;
    smallness_warning(&spec);
    let m = cfg.require_m()?;
    let s = cfg.require_s()?;
    let res = match spec.family() {
        WeightFamily::Spod => cbc_spod(m, s, &spec)?,
        WeightFamily::Product => cbc_product(m, s, &spec)?,
    };
    if timing {
        eprintln!("constructed in {:.3} s", res.wall_time);
    }
    let file = VectorFile::from_result(&res, Some(&spec), timing);
    emit(cfg.out.as_deref(), &file.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(vector: Option<&Path>, cfg: &RunConfig, format: Format) -> anyhow::Result<ExitCode> {
    let (spec, m, s) = match vector {
        Some(path) => {
            let file = read_vector(path)?;
            let w = file
                .construction
                .as_ref()
                .and_then(|c| c.weights.as_ref())
                .context("vector file records no weights")?;
            (WeightSpec::from_file(w)?, file.m, file.s)
        }
        None => (cfg.spec()?, cfg.require_m()?, cfg.require_s()?),
    };
    smallness_warning(&spec);
    let report = optimize_lambda(&spec, m, s)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let mut t = String::from("lambda,bound\n");
            for (l, v) in report.lambdas.iter().zip(&report.bounds) {
                t.push_str(&format!("{l:.6},{v:.10e}\n"));
            }
            t.push_str(&format!(
                "# certified minimum {:.10e} at lambda = {:.6}; at lambda = p = {}: {:.10e}\n",
                report.best_bound, report.best_lambda, report.p, report.bound_at_p
            ));
            t
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn print_verify(report: &VerifyReport, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
        Format::Csv => {
            for s in &report.suites {
                println!(
                    "{:<16} {} checks={} failures={} time={:.2}s",
                    s.name,
                    if s.passed() { "PASS" } else { "FAIL" },
                    s.checks,
                    s.failures,
                    s.seconds
                );
                if let Some(f) = &s.first_failure {
                    println!("  first failure: {f}");
                }
            }
            println!("{}", if report.passed() { "all suites passed" } else { "verification FAILED" });
        }
    }
    Ok(())
}

fn cmd_converge(cfg: &RunConfig, format: Format) -> anyhow::Result<ExitCode> {
    let (m_min, m_max) = cfg.m_range()?;
    let config = ConvergenceConfig {
        integrand: cfg.integrand.unwrap_or(IntegrandKind::Model),
        family: cfg.family(),
        b: cfg.b(),
        s: cfg.require_s()?,
        m_min,
        m_max,
        beta: cfg.beta()?,
        alpha: cfg.alpha,
        baseline: cfg.baseline.unwrap_or(false),
    };
    let report = convergence_experiment(&config)?;
    let csv = report.to_csv();
    let json = serde_json::to_string_pretty(&report.summary_json())? + "\n";
    match &cfg.out {
        Some(prefix) => {
            emit(Some(&prefix.with_extension("csv")), &csv)?;
            emit(Some(&prefix.with_extension("json")), &json)?;
        }
        None => match format {
            Format::Csv => {
                print!("{csv}");
                match report.slope {
                    Some(v) => println!("# slope {v:.4}"),
                    None => println!("# slope unavailable (fewer than 4 usable points)"),
                }
                if let Some(v) = report.baseline_slope {
                    println!("# baseline slope {v:.4}");
                }
            }
            Format::Json => print!("{json}"),
        },
    }
    Ok(ExitCode::SUCCESS)
}
