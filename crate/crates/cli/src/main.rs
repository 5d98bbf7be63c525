use std::error::Error;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tcsa_core::design::generate_design;
use tcsa_core::harness::{
    asymptotic_reference, default_reference_ranking, ordering_table, run_experiment, run_on_sample,
    suite, summarize, ExperimentConfig, SensitivityResult, WeightChoice,
};
use tcsa_core::io::{
    format_summary_table, read_results_jsonl, read_sample, write_design_csv, write_long_csv,
    write_reference_csv, write_results_jsonl, write_summary_csv,
};
use tcsa_core::measures::{MeasureId, MeasureSpec};
use tcsa_core::models::ModelSpec;
use tcsa_core::{FactorGroup, Matrix, Mode, Order, Scheme};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "tcsa",
    version,
    about = "Global, target and conditional sensitivity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a factor design for a benchmark model as CSV.
    Design(DesignArgs),
    /// Run a benchmark experiment over repetitions and sample sizes.
    Bench(BenchArgs),
    /// Compute measures on a sample file.
    Measure(MeasureArgs),
    /// Box-plot summaries of a result file.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    SobolG,
    Ishigami,
    MinNormalUniform,
}

impl ModelName {
    fn spec(self) -> ModelSpec {
        match self {
            ModelName::SobolG => ModelSpec::sobol_g_default(),
            ModelName::Ishigami => ModelSpec::ishigami_default(),
            ModelName::MinNormalUniform => ModelSpec::MinNormalUniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Lhs,
    Random,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Lhs => Scheme::LatinHypercube,
            SchemeName::Random => Scheme::PseudoRandom,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeName {
    Global,
    Target,
    Conditional,
    Hybrid,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Global => Mode::Global,
            ModeName::Target => Mode::Target,
            ModeName::Conditional => Mode::Conditional,
            ModeName::Hybrid => Mode::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderName {
    First,
    Total,
}

impl From<OrderName> for Order {
    fn from(o: OrderName) -> Self {
        match o {
            OrderName::First => Order::First,
            OrderName::Total => Order::Total,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightName {
    Indicator,
    Smooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Table1,
    Table2,
    Table3,
    Rmc,
}

impl SuiteName {
    fn as_str(self) -> &'static str {
        match self {
            SuiteName::Table1 => "table1",
            SuiteName::Table2 => "table2",
            SuiteName::Table3 => "table3",
            SuiteName::Rmc => "rmc",
        }
    }
}

/// Measure selection shared by `bench` and `measure`.
#[derive(Args)]
struct MeasureSelection {
    /// Comma-separated measure names (pf, rmc-eta, qdm-g, qdm-cg, mi-g, mi-cnn, rmc-cgs, cdm-g).
    #[arg(long, value_delimiter = ',')]
    measures: Vec<String>,
    /// Analysis modes applied to every listed measure.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "global")]
    mode: Vec<ModeName>,
    /// Index orders applied to every listed measure.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "first")]
    order: Vec<OrderName>,
}

impl MeasureSelection {
    /// Every compatible combination of measure, mode and order.
    fn specs(&self) -> CliResult<Vec<MeasureSpec>> {
        let mut out = Vec::new();
        for name in &self.measures {
            let id: MeasureId = name.trim().parse()?;
            for &mode in &self.mode {
                for &order in &self.order {
                    let spec = MeasureSpec::new(id, mode.into(), order.into());
                    match spec.check() {
                        Ok(()) => out.push(spec),
                        Err(e) => eprintln!("skipping {}: {e}", spec.label()),
                    }
                }
            }
        }
        if out.is_empty() {
            return Err("no compatible measure selected".into());
        }
        Ok(out)
    }
}

/// Critical-domain weight shared by `bench` and `measure`.
#[derive(Args)]
struct WeightArgs {
    /// Weight function of the critical domain `Y ≥ c`.
    #[arg(long, value_enum)]
    weight: Option<WeightName>,
    /// Relative width of the smooth weight.
    #[arg(long, default_value_t = 0.2)]
    smooth_s: f64,
    /// Level of the empirical quantile used as threshold `c`.
    #[arg(long)]
    quantile: Option<f64>,
}

impl WeightArgs {
    fn choice(&self) -> Option<WeightChoice> {
        self.weight.map(|w| match w {
            WeightName::Indicator => WeightChoice::Indicator,
            WeightName::Smooth => WeightChoice::Smooth { s: self.smooth_s },
        })
    }
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lhs")]
    scheme: SchemeName,
    /// Append the model response as column `Y`.
    #[arg(long)]
    evaluate: bool,
    /// Output CSV file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    /// Named measure suite, used when `--measures` is absent.
    #[arg(long, value_enum, default_value = "table1")]
    suite: SuiteName,
    #[command(flatten)]
    selection: MeasureSelection,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[command(flatten)]
    weight: WeightArgs,
    /// Experiment file (TOML); command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample size of an additional asymptotic reference run.
    #[arg(long)]
    reference_n: Option<usize>,
    /// Repetitions of the reference run.
    #[arg(long, default_value_t = 10)]
    reference_reps: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    /// Sample CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML file naming `factors`, `categorical` and `response` columns.
    #[arg(long)]
    schema: PathBuf,
    #[command(flatten)]
    selection: MeasureSelection,
    /// Factor groups separated by `;`, factors within a group by `,`; every
    /// single factor when absent.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    weight: WeightArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Result file written by `bench` or `measure`.
    #[arg(long)]
    input: PathBuf,
    /// Expected ranking of groups, most influential first, separated by `;`.
    #[arg(long)]
    ranking: Option<String>,
    /// Output directory; only the text table is printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot create {}: {e}", path.display()).into())
}

fn write_outputs(
    dir: &Path,
    results: &[SensitivityResult],
    ranking: Option<&[String]>,
) -> CliResult<String> {
    fs::create_dir_all(dir)?;
    write_results_jsonl(create(&dir.join("results.jsonl"))?, results)?;
    report(Some(dir), results, ranking)
}

/// Summary table text, also written as files when `dir` is given.
fn report(
    dir: Option<&Path>,
    results: &[SensitivityResult],
    ranking: Option<&[String]>,
) -> CliResult<String> {
    let rows = summarize(results);
    let orderings = match ranking {
        Some(r) => ordering_table(results, r)?,
        None => Vec::new(),
    };
    let table = format_summary_table(&rows, &orderings);
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        write_summary_csv(create(&dir.join("summary.csv"))?, &rows)?;
        write_long_csv(create(&dir.join("long.csv"))?, results)?;
        fs::write(dir.join("summary.txt"), &table)?;
    }
    Ok(table)
}

fn design(args: DesignArgs) -> CliResult<()> {
    let model = args.model.spec();
    let x = generate_design(&model.design(args.n, args.scheme.into(), args.seed))?;
    let mut names = model.factor_names();
    let table = if args.evaluate {
        let y = model.eval_rows(&x)?;
        names.push("Y".into());
        let d = x.ncols();
        Matrix::from_fn(
            x.nrows(),
            d + 1,
            |i, j| if j < d { x[(i, j)] } else { y[i] },
        )
    } else {
        x
    };
    match args.out {
        Some(path) => write_design_csv(create(&path)?, &table, &names)?,
        None => write_design_csv(io::stdout().lock(), &table, &names)?,
    }
    Ok(())
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => toml::from_str::<ExperimentConfig>(&fs::read_to_string(path)?)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            let model = args.model.ok_or("--model or --config is required")?;
            ExperimentConfig::new(
                model.spec(),
                suite(args.suite.as_str())?,
                vec![1000],
                100,
                0,
            )
        }
    };
    if let Some(m) = args.model {
        if args.config.is_some() {
            cfg.model = m.spec();
            cfg.reference_ranking = None;
        }
    }
    if !args.selection.measures.is_empty() {
        cfg.measures = args.selection.specs()?;
    }
    if !args.n.is_empty() {
        cfg.sizes = args.n.clone();
    }
    if let Some(r) = args.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.scheme {
        cfg.scheme = s.into();
    }
    if let Some(w) = args.weight.choice() {
        cfg.weight = w;
    }
    if let Some(q) = args.weight.quantile {
        cfg.quantile = q;
    }
    let ranking = cfg
        .reference_ranking
        .clone()
        .or_else(|| default_reference_ranking(&cfg.model));
    let results = run_experiment(&cfg)?;
    let table = write_outputs(&args.out, &results, ranking.as_deref())?;
    fs::write(args.out.join("config.toml"), toml::to_string(&cfg)?)?;
    if let Some(n_ref) = args.reference_n {
        let reference = asymptotic_reference(&cfg, n_ref, args.reference_reps)?;
        write_reference_csv(create(&args.out.join("reference.csv"))?, &reference)?;
    }
    print!("{table}");
    Ok(())
}

fn parse_groups(spec: &str, names: &[String]) -> CliResult<Vec<FactorGroup>> {
    spec.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            let idx = g
                .split(',')
                .map(|f| {
                    let f = f.trim();
                    names
                        .iter()
                        .position(|n| n == f)
                        .ok_or_else(|| format!("unknown factor {f:?}").into())
                })
                .collect::<CliResult<Vec<usize>>>()?;
            Ok(FactorGroup::new(idx)?)
        })
        .collect()
}

fn measure(args: MeasureArgs) -> CliResult<()> {
    let sample = read_sample(&args.data, &args.schema)?;
    let groups = match &args.groups {
        Some(g) => parse_groups(g, sample.factor_names())?,
        None => (0..sample.d()).map(FactorGroup::single).collect(),
    };
    let specs = args.selection.specs()?;
    let weight = args.weight.choice().unwrap_or_default();
    let quantile = args.weight.quantile.unwrap_or(0.9);
    let results = run_on_sample(&sample, &specs, &groups, weight, quantile, args.seed)?;
    for r in results.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "{} {} {} {}: {}",
            r.measure,
            r.mode.as_str(),
            r.order.as_str(),
            r.group,
            r.error.as_deref().unwrap_or_default()
        );
    }
    print!("{}", write_outputs(&args.out, &results, None)?);
    Ok(())
}

fn summarize_cmd(args: SummarizeArgs) -> CliResult<()> {
    let file = File::open(&args.input)
        .map_err(|e| format!("cannot open {}: {e}", args.input.display()))?;
    let results = read_results_jsonl(BufReader::new(file))?;
    let ranking: Option<Vec<String>> = args
        .ranking
        .as_ref()
        .map(|r| r.split(';').map(|g| g.trim().to_string()).collect());
    let table = report(args.out.as_deref(), &results, ranking.as_deref())?;
    let mut out = io::stdout().lock();
    out.write_all(table.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design(a) => design(a),
        Command::Bench(a) => bench(a),
        Command::Measure(a) => measure(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
