use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otrefine::bench::{intra_class_pairs, load_image_dir, run_pairs, summarize, synthetic_images};
use otrefine::compare::{run_compare, CompareConfig};
use otrefine::flow::solve_exact;
use otrefine::io::{load_measure, write_cloud, write_csv_image, InputFormat};
use otrefine::measure::DiscreteMeasure;
use otrefine::multiscale::{approx_wp, MultiscaleConfig};
use otrefine::report::{emit_outputs, write_reports, DistanceReport, Method, OutputPaths};
use otrefine::synth::{generate_image, generate_synthetic, ImageClass, SyntheticKind};
use otrefine::Error;

#[derive(Parser, Debug)]
#[command(name = "otrefine", version, about = "Exact and multiscale approximate Wasserstein distances")]
struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "OTREFINE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact W_p by network simplex.
    Exact(ExactArgs),
    /// Multiscale approximation.
    Approx(ApproxArgs),
    /// Exact and approximate estimates side by side.
    Compare(CompareArgs),
    /// Pairwise comparison over an image collection.
    Bench(BenchArgs),
    /// Write a synthetic measure.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Cloud,
    CsvImage,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Cloud => InputFormat::Cloud,
            FormatArg::CsvImage => InputFormat::CsvImage,
        }
    }
}

#[derive(Args, Debug)]
struct Inputs {
    /// Source measure.
    x: PathBuf,
    /// Target measure.
    y: PathBuf,
    #[arg(long, value_enum, default_value = "cloud")]
    format: FormatArg,
    /// Exponent of the ground cost.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

impl Inputs {
    fn load(&self) -> Result<(DiscreteMeasure, DiscreteMeasure), Error> {
        let format = self.format.into();
        Ok((load_measure(&self.x, format)?, load_measure(&self.y, format)?))
    }
}

#[derive(Args, Debug)]
struct Outputs {
    /// Write the transport plan as `i j mass` lines.
    #[arg(long)]
    out_plan: Option<PathBuf>,
    /// Write the report records.
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    outputs: Outputs,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Hub count of every clustering level.
    #[arg(long, default_value_t = 16)]
    kappa: usize,
    /// Cluster pairs with fewer atoms than this are solved exactly.
    #[arg(long, default_value_t = 2000)]
    threshold: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    outputs: Outputs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Hub counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 16])]
    kappa: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    threshold: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the exact solve; relative errors are then omitted.
    #[arg(long)]
    no_exact: bool,
    /// Plot data as CSV.
    #[arg(long)]
    out_plot: Option<PathBuf>,
    #[command(flatten)]
    outputs: Outputs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory of CSV images, one subdirectory per class; synthetic classes when absent.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Synthetic images per class.
    #[arg(long, default_value_t = 7)]
    per_class: usize,
    /// Side length of the synthetic images.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Use at most this many pairs.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [16])]
    kappa: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    threshold: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_report: Option<PathBuf>,
    #[arg(long)]
    out_plot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Smooth,
    Random,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Point cloud weight profile; ignored with `--class`.
    #[arg(long, value_enum, default_value = "smooth")]
    kind: KindArg,
    /// Write a CSV image of this class instead of a point cloud.
    #[arg(long)]
    class: Option<String>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Image side length.
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn print_reports(reports: &[DistanceReport]) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    write_reports(&mut out, reports)?;
    out.flush()?;
    Ok(())
}

fn output_paths(outputs: &Outputs, plot: Option<&PathBuf>) -> OutputPaths {
    OutputPaths {
        report: outputs.out_report.clone(),
        plan: outputs.out_plan.clone(),
        plot: plot.cloned(),
    }
}

fn exact(args: &ExactArgs) -> Result<(), Error> {
    let (x, y) = args.inputs.load()?;
    let started = Instant::now();
    let sol = solve_exact(&x, &y, args.inputs.p)?;
    let mut report = DistanceReport::new(Method::Exact, args.inputs.p, sol.cost, started.elapsed());
    report.plan_entries = Some(sol.plan.nnz());
    log::info!("{} pivots", sol.pivots);
    let reports = [report];
    print_reports(&reports)?;
    emit_outputs(&reports, Some(&sol.plan), &output_paths(&args.outputs, None))
}

fn approx(args: &ApproxArgs, threads: usize) -> Result<(), Error> {
    let (x, y) = args.inputs.load()?;
    let mut cfg = MultiscaleConfig::new(args.kappa, args.inputs.p)
        .with_threshold(args.threshold)
        .with_seed(args.seed);
    cfg.threads = threads;
    let started = Instant::now();
    let res = approx_wp(&x, &y, &cfg)?;
    let mut report = DistanceReport::new(Method::Multiscale, args.inputs.p, res.cost_hat, started.elapsed());
    report.kappa = res.kappa.or(Some(args.kappa));
    report.threshold = Some(args.threshold);
    report.plan_entries = Some(res.plan.nnz());
    report.seed = Some(args.seed);
    if res.stats.block_fallbacks > 0 {
        log::warn!("{} clusters fell back to block plans", res.stats.block_fallbacks);
    }
    log::info!("cluster stats: {:?}", res.stats);
    let reports = [report];
    print_reports(&reports)?;
    emit_outputs(&reports, Some(&res.plan), &output_paths(&args.outputs, None))
}

fn compare(args: &CompareArgs, threads: usize) -> Result<(), Error> {
    let (x, y) = args.inputs.load()?;
    let mut cfg = CompareConfig::new(args.inputs.p, args.kappa.clone());
    cfg.threshold = args.threshold;
    cfg.seed = args.seed;
    cfg.threads = threads;
    cfg.reference = !args.no_exact;
    let cmp = run_compare(&x, &y, &cfg)?;
    print_reports(&cmp.reports)?;
    let plan = cmp.multiscale_plans.last().or(cmp.exact_plan.as_ref());
    emit_outputs(&cmp.reports, plan, &output_paths(&args.outputs, args.out_plot.as_ref()))
}

fn bench(args: &BenchArgs, threads: usize) -> Result<(), Error> {
    let images = match &args.dir {
        Some(dir) => load_image_dir(dir)?,
        None => synthetic_images(args.per_class, args.size, args.seed)?,
    };
    let mut pairs = intra_class_pairs(&images);
    if let Some(limit) = args.pairs {
        pairs.truncate(limit);
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no image pairs share a class".into()));
    }
    log::info!("{} images, {} pairs", images.len(), pairs.len());
    let mut cfg = CompareConfig::new(args.p, args.kappa.clone());
    cfg.threshold = args.threshold;
    cfg.seed = args.seed;
    let results = run_pairs(&images, &pairs, &cfg, threads)?;
    let reports: Vec<DistanceReport> = results.iter().flat_map(|r| r.reports.iter().cloned()).collect();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "method kappa pairs mean_rel_error median_rel_error")?;
    for s in summarize(&results) {
        writeln!(
            out,
            "{} {} {} {:.6} {:.6}",
            s.method,
            s.kappa.map_or_else(|| "-".into(), |k| k.to_string()),
            s.pairs,
            s.mean,
            s.median
        )?;
    }
    out.flush()?;
    let paths = OutputPaths {
        report: args.out_report.clone(),
        plan: None,
        plot: args.out_plot.clone(),
    };
    emit_outputs(&reports, None, &paths)
}

fn write_to(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut out = BufWriter::new(fs::File::create(p)?);
            f(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            f(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<(), Error> {
    match &args.class {
        Some(name) => {
            let class: ImageClass = name.parse()?;
            let values = generate_image(class, args.size, args.seed)?;
            write_to(args.out.as_deref(), |out| write_csv_image(out, &values, args.size))
        }
        None => {
            let kind = match args.kind {
                KindArg::Smooth => SyntheticKind::Smooth,
                KindArg::Random => SyntheticKind::Random,
            };
            let mu = generate_synthetic(kind, args.n, args.d, args.seed)?;
            write_to(args.out.as_deref(), |out| write_cloud(out, &mu))
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Exact(a) => exact(a),
        Command::Approx(a) => approx(a, cli.threads),
        Command::Compare(a) => compare(a, cli.threads),
        Command::Bench(a) => bench(a, cli.threads),
        Command::Gen(a) => gen(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() { 2 } else { 1 })
        }
    }
}
