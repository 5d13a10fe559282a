//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use crate::dataset::{self, LabelingSetup, SpeedClass, SweepSpec, DEFAULT_LENGTH};
use crate::error::Error;
use crate::eval::{emit_scatter_csv, evaluate_model, requests_from_samples};
use crate::geometry::{from_point_cloud, read_offsets_csv, write_offsets_csv, GridSpec, HullGrid, HullPointCloud};
use crate::hydro::{displacement_tonnage, knots_to_ms, label_hull, total_cd, HullLabel, HydroEnv, QuadratureSpec};
use crate::plot::emit_lineplan_svg;
use crate::wgan::{generate, load_checkpoint, save_checkpoint, train_with, TrainConfig, TrainHooks};
use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "hullgan", version, about = "Conditional GAN ship hull generator", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a labeled hull corpus from the parameter sweep of a speed class.
    Dataset(DatasetArgs),
    /// Train a conditional WGAN-gp on a corpus.
    Train(TrainArgs),
    /// Generate hulls for one requested (Cd, W, U).
    Generate(GenerateArgs),
    /// Score a checkpoint on the labels of a (held-out) corpus.
    Evaluate(EvaluateArgs),
    /// Drag breakdown and displacement of hulls in an offset file.
    Hydro(HydroArgs),
    /// Body-plan SVG of one hull.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassArg {
    High,
    Mid,
    Low,
    All,
}

impl ClassArg {
    fn classes(self) -> Vec<SpeedClass> {
        match self {
            ClassArg::High => vec![SpeedClass::High],
            ClassArg::Mid => vec![SpeedClass::Medium],
            ClassArg::Low => vec![SpeedClass::Low],
            ClassArg::All => SpeedClass::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
struct QuadratureArgs {
    /// Simpson panels over the wave angle.
    #[arg(long)]
    n_theta: Option<usize>,
    /// Upper wave-angle cutoff [rad].
    #[arg(long)]
    theta_max: Option<f64>,
}

impl QuadratureArgs {
    fn spec(&self) -> QuadratureSpec<f64> {
        let mut q = QuadratureSpec::default();
        if let Some(n) = self.n_theta {
            q.n_theta = n;
        }
        if let Some(t) = self.theta_max {
            q.theta_max = t;
        }
        q
    }
}

#[derive(Debug, Args)]
struct DatasetArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    /// Output CSV; the statistics go to the same path with a `.stats` extension.
    #[arg(long)]
    out: PathBuf,
    /// Ship length [m].
    #[arg(long, default_value_t = DEFAULT_LENGTH)]
    length: f64,
    #[command(flatten)]
    quadrature: QuadratureArgs,
    /// Fraction of samples written to `<out>.holdout.csv` instead of `<out>`.
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    /// Seed of the holdout split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep at most this many evenly spaced combinations per class.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// `key=value` file overriding the training defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Train on a seeded subset of at most this many samples.
    #[arg(long)]
    max_samples: Option<usize>,
    /// CSV of per-iteration losses.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Requested drag coefficient.
    #[arg(long, allow_negative_numbers = true)]
    cd: f64,
    /// Requested displacement [t].
    #[arg(long, allow_negative_numbers = true)]
    w: f64,
    /// Design speed [kn].
    #[arg(long)]
    speed_knots: f64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives `points.csv`, `offsets.csv` and one body plan per hull.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Corpus whose labels are requested.
    #[arg(long)]
    requests: PathBuf,
    /// Hulls generated per request.
    #[arg(long, default_value_t = 1)]
    n_per_label: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Requested vs recomputed labels.
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HydroArgs {
    /// Offset CSV (`L,B,d,y_001,...`).
    #[arg(long)]
    hull: PathBuf,
    #[arg(long)]
    speed_knots: f64,
    /// Scale each hull geometrically to this length [m].
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[command(flatten)]
    quadrature: QuadratureArgs,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["offsets", "data", "points"])))]
struct PlotArgs {
    /// Offset CSV.
    #[arg(long)]
    offsets: Option<PathBuf>,
    /// Corpus CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Generated `points.csv`.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Row of the input file, from 0.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let out = match cli.command {
        Command::Dataset(a) => run_dataset(a),
        Command::Train(a) => run_train(a),
        Command::Generate(a) => run_generate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Hydro(a) => run_hydro(a),
        Command::Plot(a) => run_plot(a),
    };
    match out {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Every `ceil(n / limit)`-th element, at most `limit` of them.
fn stride<T>(v: Vec<T>, limit: Option<usize>) -> Vec<T> {
    match limit {
        Some(l) if l < v.len() => {
            let step = v.len().div_ceil(l);
            v.into_iter().step_by(step).take(l).collect()
        }
        _ => v,
    }
}

fn holdout_path(out: &Path) -> PathBuf {
    out.with_extension("holdout.csv")
}

fn run_dataset(a: DatasetArgs) -> CliResult {
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(usage(format!("--holdout must lie in [0, 1), got {}", a.holdout)));
    }
    if a.limit == Some(0) {
        return Err(usage("--limit must be positive"));
    }
    if !(a.length > 0.0) {
        return Err(usage(format!("--length must be positive, got {}", a.length)));
    }
    let setup = LabelingSetup { env: HydroEnv::default(), quadrature: a.quadrature.spec() };
    setup.quadrature.validate().map_err(|e| usage(e.to_string()))?;
    let grid = GridSpec::standard();
    let mut all = dataset::DatasetBuild::default();
    for class in a.class.classes() {
        let spec = SweepSpec::table(class).with_length(a.length);
        let combos = stride(dataset::enumerate_sweep(&spec), a.limit);
        let b = dataset::label_params(&spec, combos, &grid, &setup);
        eprintln!("{class}: {} combinations, {} accepted, {} rejected", b.raw_count, b.samples.len(), b.rejections.len());
        all.extend(b);
    }
    if all.samples.is_empty() {
        return Err(Failure::Runtime(Error::DegenerateStats("no hull survived the filter".into())));
    }
    let (kept, held) = dataset::split_holdout(&all.samples, a.holdout, a.seed);
    let stats = dataset::DatasetStats::compute(&kept)?;
    dataset::write_csv(&a.out, &kept, &stats, &setup)?;
    if !held.is_empty() {
        let path = holdout_path(&a.out);
        dataset::write_csv(&path, &held, &dataset::DatasetStats::compute(&held)?, &setup)?;
        eprintln!("held out {} samples in {}", held.len(), path.display());
    }
    println!("{}", kept.len());
    Ok(())
}

fn run_train(a: TrainArgs) -> CliResult {
    let mut cfg = TrainConfig::default();
    if let Some(p) = &a.config {
        let text = std::fs::read_to_string(p)?;
        let unknown = cfg.apply_file_text(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        if let Some((k, _)) = unknown.first() {
            return Err(usage(format!("{}: unknown key {k:?}", p.display())));
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if a.max_samples.is_some() {
        cfg.max_samples = a.max_samples;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let ds = dataset::read_csv(&a.data)?;
    let grid = GridSpec::standard();
    let mut metrics = match &a.metrics {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let every = (cfg.iterations / 20).max(1);
    let mut progress = |m: &crate::wgan::IterationMetrics| {
        if m.iteration % every == 0 {
            log::info!("iteration {}: d_loss {:.5} g_loss {:.5} gp {:.5}", m.iteration, m.d_loss, m.g_loss, m.gp);
        }
    };
    let hooks = TrainHooks {
        metrics: metrics.as_mut().map(|w| w as &mut dyn Write),
        diagnostic_path: Some(a.out.with_extension("diag.hfgn")),
        regularizer: None,
        progress: Some(&mut progress),
    };
    let ckpt = train_with(&ds, &grid, &cfg, hooks)?;
    if let Some(mut w) = metrics {
        w.flush()?;
    }
    save_checkpoint(&a.out, &ckpt)?;
    eprintln!("trained {} iterations on {} samples", ckpt.iteration, ds.samples.len().min(cfg.max_samples.unwrap_or(usize::MAX)));
    Ok(())
}

fn points_header(dim: usize) -> Vec<String> {
    let mut h = vec!["L".to_string()];
    h.extend((1..=dim).map(|k| format!("v_{k:04}")));
    h
}

fn write_points_csv(path: &Path, clouds: &[HullPointCloud<f64>]) -> crate::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    let dim = clouds.first().map_or(0, |c| 2 * c.points.len());
    w.write_record(points_header(dim)).map_err(csv_err)?;
    for c in clouds {
        let mut rec = vec![format!("{:.16e}", c.length)];
        rec.extend(c.to_flat().iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_points_csv(path: &Path, grid: &GridSpec<f64>) -> crate::Result<Vec<HullPointCloud<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let want = points_header(grid.flat_len());
    let got: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if got != want {
        return Err(Error::Format(format!("{}: expected columns L,v_0001..v_{:04}", path.display(), grid.flat_len())));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let vals: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(col, v)| {
                v.parse().map_err(|_| Error::Format(format!("row {}, column {}: not a number", row + 2, want[col])))
            })
            .collect::<crate::Result<_>>()?;
        out.push(HullPointCloud::from_flat(&vals[1..], vals[0], grid)?);
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn run_generate(a: GenerateArgs) -> CliResult {
    if a.count == 0 {
        return Err(usage("--count must be positive"));
    }
    let ckpt = load_checkpoint(&a.ckpt)?;
    let request = HullLabel { cd: a.cd, w: a.w, u: a.speed_knots };
    let clouds = generate(&ckpt, &[request], a.count, a.seed)?;
    std::fs::create_dir_all(&a.out_dir)?;
    write_points_csv(&a.out_dir.join("points.csv"), &clouds)?;
    let setup = ckpt.labeling;
    let mut grids = Vec::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "index,cd,w")?;
    for (k, c) in clouds.iter().enumerate() {
        let relabeled =
            from_point_cloud(c, &ckpt.grid).and_then(|h| Ok((label_hull(&h, a.speed_knots, &setup.env, &setup.quadrature)?, h)));
        match relabeled {
            Ok((l, h)) => {
                writeln!(out, "{k},{:.10e},{:.10e}", l.cd, l.w)?;
                emit_lineplan_svg(&h, &a.out_dir.join(format!("hull_{k:04}.svg")))?;
                grids.push(h);
            }
            Err(Error::DegenerateHull(why)) => {
                writeln!(out, "{k},,")?;
                log::warn!("hull {k} is degenerate: {why}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_offsets_csv(BufWriter::new(File::create(a.out_dir.join("offsets.csv"))?), &grids)?;
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> CliResult {
    if a.n_per_label == 0 {
        return Err(usage("--n-per-label must be positive"));
    }
    let ckpt = load_checkpoint(&a.ckpt)?;
    let ds = dataset::read_csv(&a.requests)?;
    let requests = requests_from_samples(&ds.samples);
    let setup = ckpt.labeling;
    let (report, scatter) = evaluate_model(&ckpt, &requests, a.n_per_label, &setup.env, &setup.quadrature, a.seed)?;
    print!("{report}");
    if let Some(p) = &a.report {
        let mut w = BufWriter::new(File::create(p)?);
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &a.scatter {
        emit_scatter_csv(&scatter, p)?;
    }
    Ok(())
}

fn scale_hull(h: &HullGrid<f64>, length: f64) -> HullGrid<f64> {
    let f = length / h.length;
    HullGrid {
        grid: h.grid.clone(),
        y: h.y.iter().map(|v| v * f).collect(),
        length,
        beam_nominal: h.beam_nominal * f,
        draft_nominal: h.draft_nominal * f,
    }
}

fn run_hydro(a: HydroArgs) -> CliResult {
    let mut env = HydroEnv::default();
    if let Some(v) = a.rho {
        env.rho = v;
    }
    if let Some(v) = a.nu {
        env.nu = v;
    }
    if let Some(v) = a.g {
        env.g = v;
    }
    env.validate().map_err(|e| usage(e.to_string()))?;
    let q = a.quadrature.spec();
    q.validate().map_err(|e| usage(e.to_string()))?;
    if let Some(l) = a.length {
        if !(l > 0.0) {
            return Err(usage(format!("--length must be positive, got {l}")));
        }
    }
    let grid = GridSpec::standard();
    let hulls = read_offsets_csv(BufReader::new(File::open(&a.hull)?), &grid)?;
    let u = knots_to_ms(a.speed_knots);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "K,Cdf,Cdw,Cd,Fn,Rn,W")?;
    for h in &hulls {
        let h = match a.length {
            Some(l) => scale_hull(h, l),
            None => h.clone(),
        };
        let b = total_cd(&h, u, &env, &q)?;
        let w = displacement_tonnage(&h, &env)?;
        writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", b.k, b.cdf, b.cdw, b.cd, b.fn_, b.rn, w)?;
    }
    Ok(())
}

fn pick<T: Clone>(items: &[T], index: usize, what: &str) -> std::result::Result<T, Failure> {
    items.get(index).cloned().ok_or_else(|| usage(format!("--index {index} out of range: {what} has {} rows", items.len())))
}

fn run_plot(a: PlotArgs) -> CliResult {
    let grid = GridSpec::standard();
    let hull = if let Some(p) = &a.offsets {
        pick(&read_offsets_csv(BufReader::new(File::open(p)?), &grid)?, a.index, "offset file")?
    } else if let Some(p) = &a.data {
        let ds = dataset::read_csv(p)?;
        let s = pick(&ds.samples, a.index, "corpus")?;
        from_point_cloud(&s.cloud(&grid)?, &grid)?
    } else if let Some(p) = &a.points {
        from_point_cloud(&pick(&read_points_csv(p, &grid)?, a.index, "points file")?, &grid)?
    } else {
        unreachable!("clap enforces one source")
    };
    emit_lineplan_svg(&hull, &a.out)?;
    Ok(())
}
