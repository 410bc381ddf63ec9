use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tanglesim::attack::H2lrMode;
use tanglesim::experiment::{
    compare_files, run_and_write, CompareReport, ExperimentKind, ExperimentSpec, Figure, OutputFormat, ResultTable,
};
use tanglesim::{Error, LoadRegime};

#[derive(Parser)]
#[command(name = "tanglesim", version, about = "DAG ledger confirmation and double-spending experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate weight curves, tip counts or confirmation delays.
    Simulate {
        #[arg(long, value_enum, default_value_t = SimKind::Weight)]
        kind: SimKind,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the analytic weight curves or confirmation delays.
    Analytic {
        #[arg(long, value_enum, default_value_t = AnalyticKind::Weight)]
        kind: AnalyticKind,
        #[command(flatten)]
        common: Common,
    },
    /// Attack success probability against attacker rate.
    #[command(alias = "attack-sweep")]
    Attack {
        #[arg(long, value_enum, default_value_t = ModeArg::Distribution)]
        h2lr_mode: ModeArg,
        #[command(flatten)]
        common: Common,
    },
    /// Data behind one of the evaluation figures.
    Figure {
        #[arg(value_enum)]
        figure: FigureArg,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two result tables row by row.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Run an experiment spec file (TOML, or JSON by extension).
    Run {
        spec: PathBuf,
        /// Overrides the spec's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Weight,
    Tips,
    Delay,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyticKind {
    Weight,
    Delay,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Distribution,
    Expected,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Hr,
    Lr,
    H2lr,
    L2hr,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
    Fig14,
    Fig15,
}

#[derive(Args)]
struct Common {
    /// High arrival rate (transactions/s).
    #[arg(long)]
    lambda_high: Option<f64>,
    /// Low arrival rate (transactions/s).
    #[arg(long)]
    lambda_low: Option<f64>,
    /// Reveal delay (s).
    #[arg(long)]
    reveal_delay: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    regime: Vec<RegimeArg>,
    /// Confirmation thresholds, comma separated.
    #[arg(short = 'm', long = "threshold", visible_alias = "m", value_delimiter = ',')]
    threshold: Vec<u32>,
    /// Attacker rates (transactions/s), comma separated.
    #[arg(long, value_delimiter = ',')]
    mu: Vec<f64>,
    /// Attacker rates as fractions of the honest rate, comma separated.
    #[arg(long, value_delimiter = ',')]
    mu_ratio: Vec<f64>,
    /// Sample times (s after the reveal), comma separated.
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long)]
    replications: Option<u64>,
    /// Simulated time span (s).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Self::Csv,
            FormatArg::Json => Self::Json,
        }
    }
}

impl From<RegimeArg> for LoadRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Hr => Self::Hr,
            RegimeArg::Lr => Self::Lr,
            RegimeArg::H2lr => Self::H2lr,
            RegimeArg::L2hr => Self::L2hr,
        }
    }
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        Figure::ALL[f as usize]
    }
}

impl Common {
    fn into_spec(self, mut spec: ExperimentSpec) -> ExperimentSpec {
        if let Some(v) = self.lambda_high {
            spec.params.lambda_high = v;
        }
        if let Some(v) = self.lambda_low {
            spec.params.lambda_low = v;
        }
        if let Some(v) = self.reveal_delay {
            spec.params.reveal_delay = v;
        }
        spec.regimes = self.regime.into_iter().map(Into::into).collect();
        spec.thresholds = self.threshold;
        spec.mu = self.mu;
        spec.mu_ratios = self.mu_ratio;
        spec.times = self.times;
        spec.replications = self.replications.or(spec.replications);
        spec.horizon = self.horizon;
        spec.seed = self.seed;
        spec.output = self.out;
        spec.format = self.format.map(Into::into);
        spec
    }
}

fn build_spec(command: Command) -> Result<ExperimentSpec, Error> {
    Ok(match command {
        Command::Simulate { kind, common } => {
            let kind = match kind {
                SimKind::Weight => ExperimentKind::WeightCurve,
                SimKind::Tips => ExperimentKind::TipSeries,
                SimKind::Delay => ExperimentKind::ConfirmationDelay,
            };
            common.into_spec(ExperimentSpec::new(kind))
        }
        Command::Analytic { kind, common } => {
            let kind = match kind {
                AnalyticKind::Weight => ExperimentKind::WeightCurve,
                AnalyticKind::Delay => ExperimentKind::ConfirmationDelay,
            };
            let mut spec = common.into_spec(ExperimentSpec::new(kind));
            spec.replications = Some(0);
            spec
        }
        Command::Attack { h2lr_mode, common } => {
            let mut spec = common.into_spec(ExperimentSpec::new(ExperimentKind::AttackSweep));
            spec.h2lr_mode = match h2lr_mode {
                ModeArg::Distribution => H2lrMode::Distribution,
                ModeArg::Expected => H2lrMode::ExpectedValue,
            };
            spec
        }
        Command::Figure { figure, common } => common.into_spec(ExperimentSpec::figure(figure.into())),
        Command::Run { spec, out, format } => {
            let mut s = ExperimentSpec::from_path(&spec)?;
            if out.is_some() {
                s.output = out;
            }
            if let Some(f) = format {
                s.format = Some(f.into());
            }
            s
        }
        Command::Compare { .. } => unreachable!("handled separately"),
    })
}

fn print_report(report: &CompareReport) {
    for r in &report.rows {
        println!(
            "row {} [{}] reference {} candidate {} error {:.3e} {}",
            r.row,
            r.key,
            r.reference,
            r.candidate,
            r.error,
            if r.passed { "ok" } else { "FAIL" }
        );
    }
    println!(
        "{} rows ({} schema), max error {:.3e}, tolerance {}: {}",
        report.rows.len(),
        report.schema,
        report.max_error,
        report.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
}

fn summarize(spec: &ExperimentSpec, table: &ResultTable) {
    let path = spec.output.as_ref().expect("output path");
    println!(
        "wrote {} {} rows to {} (seed {}, spec {})",
        table.len(),
        table.schema(),
        path.display(),
        spec.seed,
        spec.spec_hash()
    );
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Command::Compare {
        reference,
        candidate,
        tolerance,
    } = cli.command
    {
        let report = compare_files(&reference, &candidate, tolerance)?;
        print_report(&report);
        return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(4) });
    }
    let spec = build_spec(cli.command)?;
    let (table, bytes) = run_and_write(&spec)?;
    if spec.output.is_some() {
        summarize(&spec, &table);
    } else {
        std::io::stdout().write_all(&bytes)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
