use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use metralg::constructions::{direct_sum, random_metrised, rsquare, spin_factor, sym_jordan, zero_algebra};
use metralg::report::{self, AnalysisConfig, AnalysisReport, Stage};
use metralg::{io, AlgebraSpec, Error, SearchConfig};

#[derive(Parser)]
#[command(name = "metralg", version, about = "Idempotents, minimality and spin-factor structure of metrised algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check commutativity, form associativity and positive definiteness.
    Validate(Target),
    /// Full pipeline: validate, search, minimality, identities, isomorphism.
    Analyze(Target),
    /// Validate and enumerate idempotents.
    Idempotents(Target),
    /// Run through the minimality test and identity checks.
    Minimality(Target),
    /// Full pipeline (alias of analyze).
    Isomorphism(Target),
    /// Write a fixture algebra file.
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Args)]
struct Target {
    /// Algebra file (JSON).
    file: PathBuf,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args)]
struct Options {
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ascent starts (default 50·dim).
    #[arg(long)]
    multistart: Option<usize>,
    /// Direct Newton starts (default: the ascent count).
    #[arg(long)]
    newton_starts: Option<usize>,
    /// Axiom tolerance for validation.
    #[arg(long, default_value_t = metralg::algebra::DEFAULT_AXIOM_TOL)]
    tol: f64,
    /// Tolerance for length comparisons, unit and manifold detection.
    #[arg(long, default_value_t = metralg::algebra::DEFAULT_CLASSIFY_TOL)]
    classify_tol: f64,
    /// Newton residual target.
    #[arg(long, default_value_t = 1e-12)]
    newton_tol: f64,
    /// Distance below which two idempotents are merged.
    #[arg(long, default_value_t = 1e-6)]
    dedup_distance: f64,
    /// Random samples for the sampled identity checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Do not add e − c for each found c.
    #[arg(long)]
    no_conjugates: bool,
    /// Halve every tolerance.
    #[arg(long)]
    strict: bool,
    /// Include wall-clock time per stage (breaks byte-identical reports).
    #[arg(long)]
    timings: bool,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Options {
    fn config(&self, through: Stage) -> AnalysisConfig {
        let search = SearchConfig {
            multistart_count: self.multistart,
            saddle_starts: self.newton_starts,
            add_conjugates: !self.no_conjugates,
            seed: self.seed,
            newton_tol: self.newton_tol,
            dedup_distance: self.dedup_distance,
            classify_tol: self.classify_tol,
            ..SearchConfig::default()
        };
        let cfg = AnalysisConfig {
            search,
            axiom_tol: self.tol,
            samples: self.samples,
            through,
            timings: self.timings,
            ..AnalysisConfig::default()
        };
        if self.strict {
            cfg.strict()
        } else {
            cfg
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    SpinFactor,
    SymJordan,
    DirectSum,
    Rsquare,
    Zero,
    Random,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(value_enum)]
    kind: FixtureKind,
    /// Dimension m of the form space (spin-factor), or of the algebra (zero, random).
    #[arg(long)]
    dim: Option<usize>,
    /// Matrix size (sym-jordan).
    #[arg(long)]
    n: Option<usize>,
    /// Row-major m×m form for spin-factor (default identity).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    form: Option<Vec<f64>>,
    /// Summand files (direct-sum).
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    right: Option<PathBuf>,
    /// Seed (random).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, Error> {
    match v {
        Some(0) => Err(Error::InvalidParameter(format!("--{flag} must be positive"))),
        Some(v) => Ok(v),
        None => Err(Error::InvalidParameter(format!("--{flag} is required"))),
    }
}

fn load_algebra(path: &Path) -> Result<AlgebraSpec, Error> {
    Ok(io::load(path)?.algebra)
}

fn make_fixture(args: &FixtureArgs) -> Result<AlgebraSpec, Error> {
    match args.kind {
        FixtureKind::SpinFactor => {
            let m = need(args.dim, "dim")?;
            let f = match &args.form {
                Some(v) if v.len() == m * m => DMatrix::from_row_slice(m, m, v),
                Some(v) => {
                    return Err(Error::ShapeMismatch {
                        field: "form",
                        expected: m * m,
                        got: v.len(),
                    })
                }
                None => DMatrix::identity(m, m),
            };
            spin_factor(&f)
        }
        FixtureKind::SymJordan => sym_jordan(need(args.n, "n")?),
        FixtureKind::DirectSum => {
            let left = args.left.as_deref().ok_or_else(|| Error::InvalidParameter("--left is required".into()))?;
            let right = args.right.as_deref().ok_or_else(|| Error::InvalidParameter("--right is required".into()))?;
            Ok(direct_sum(&load_algebra(left)?, &load_algebra(right)?))
        }
        FixtureKind::Rsquare => Ok(rsquare()),
        FixtureKind::Zero => Ok(zero_algebra(need(args.dim, "dim")?)),
        FixtureKind::Random => Ok(random_metrised(need(args.dim, "dim")?, args.seed)),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_target(t: &Target, through: Stage) -> ExitCode {
    let cfg = t.opts.config(through);
    let rep: AnalysisReport = report::run_analysis(&t.file, &cfg);
    let text = match t.opts.format {
        Format::Human => report::render_human(&rep),
        Format::Machine => rep.to_json(),
    };
    if let Err(e) = emit(&text, t.opts.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if let Some(s) = &rep.stopped {
        eprintln!("error at {}: {}", s.stage, s.reason);
    }
    ExitCode::from(rep.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Validate(t) => run_target(t, Stage::Validate),
        Command::Idempotents(t) => run_target(t, Stage::Idempotents),
        Command::Minimality(t) => run_target(t, Stage::Minimality),
        Command::Analyze(t) | Command::Isomorphism(t) => run_target(t, Stage::Isomorphism),
        Command::Fixture(args) => {
            let result = make_fixture(args)
                .and_then(|a| io::to_json(&a, Default::default()))
                .and_then(|text| emit(&text, args.out.as_deref()));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(report::exit_code(&e) as u8)
                }
            }
        }
    }
}
