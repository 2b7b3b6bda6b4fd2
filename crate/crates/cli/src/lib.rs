//! `tradeoff` command line.
//!
//! Every subcommand is a thin wrapper over `tradeoff-core`, `tradeoff-ores`
//! or `tradeoff-service`; nothing is computed here. [`run`] is the whole
//! program minus process setup, so tests drive it directly.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tradeoff_core::ingest::{fixture_t04, parse_auto, synthesize, write_csv};
use tradeoff_core::{
    allocate_icons, inverse_for_metric, optimize, Color, Constraint, Dataset, Label, MetricId,
    OperatingPoint, PreviewCategory, PreviewGrid, Shape, SynthConfig, Threshold, ThresholdCurve,
};
use tradeoff_ores::{build_dataset, FixtureStore, OresClient, ScoreRequest};
use tradeoff_service::ServiceConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tradeoff",
    version,
    about = "Explore precision/recall/FPR trade-offs of a scored classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset and report its counts or the first error.
    Validate { file: PathBuf },
    /// Confusion counts and metrics at one threshold.
    Metrics {
        file: PathBuf,
        #[arg(long, value_parser = unit_interval)]
        threshold: f64,
    },
    /// The full threshold curve.
    Sweep {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Threshold reaching a target value of one metric.
    Inverse {
        file: PathBuf,
        #[arg(long)]
        metric: MetricId,
        #[arg(long, value_parser = unit_interval)]
        target: f64,
    },
    /// Maximize a metric subject to constraints such as "precision>=0.9".
    Optimize {
        file: PathBuf,
        #[arg(long, value_enum)]
        maximize: Objective,
        #[arg(long = "constraint")]
        constraints: Vec<Constraint>,
    },
    /// Icon-grid preview of the confusion matrix at a threshold.
    Preview {
        file: PathBuf,
        #[arg(long, value_parser = unit_interval)]
        threshold: f64,
        #[arg(long, default_value_t = tradeoff_service::DEFAULT_ICONS,
              value_parser = clap::value_parser!(u64).range(1..))]
        icons: u64,
    },
    /// Score revisions with the scoring service and join them with labels.
    Fetch(FetchArgs),
    /// Write a seeded synthetic dataset.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = unit_interval)]
        prevalence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the 1000-example reference fixture.
    Fixture {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = tradeoff_service::DEFAULT_ADDR)]
        addr: SocketAddr,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long, default_value = "https://ores.wikimedia.org")]
    pub base_url: String,
    #[arg(long, default_value = "enwiki")]
    pub context: String,
    #[arg(long, default_value = "damaging")]
    pub model: String,
    /// One revision id per line.
    #[arg(long)]
    pub revids: PathBuf,
    /// CSV of `rev_id,label`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Read recorded responses from `--fixtures` instead of the network.
    #[arg(long, requires = "fixtures")]
    pub offline: bool,
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 10)]
    pub timeout: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Recall,
    Precision,
}

impl From<Objective> for MetricId {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Recall => MetricId::Recall,
            Objective::Precision => MetricId::Precision,
        }
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Domain failure: reported as `error: ...` (or the message itself for
/// infeasible queries) and exit code 1.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Run one invocation. `color` enables terminal escapes in `preview`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString>,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
        Err(e) => {
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let _ = write!(err, "{text}");
            if !text.contains("Usage:") {
                let _ = write!(err, "\n{}", synopsis(&args));
            }
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command, out, err, color) {
        Ok(()) => EXIT_OK,
        Err(Failure(msg)) => {
            if msg.starts_with("infeasible") {
                let _ = writeln!(err, "{msg}");
            } else {
                let _ = writeln!(err, "error: {msg}");
            }
            EXIT_DOMAIN
        }
    }
}

/// Usage line of the subcommand named in `args`, or of the whole program.
fn synopsis(args: &[std::ffi::OsString]) -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    cmd.build();
    let name = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_owned);
    match name.and_then(|n| cmd.find_subcommand_mut(&n)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> Outcome {
    match cmd {
        Command::Validate { file } => {
            let d = load(&file)?;
            writeln!(
                out,
                "ok: {} examples ({} damaging, {} good)",
                d.n_total(),
                d.n_damaging(),
                d.n_good()
            )?;
        }
        Command::Metrics { file, threshold } => {
            let curve = load_curve(&file)?;
            write_point(out, &curve.point_at(threshold)?)?;
        }
        Command::Sweep { file, format } => {
            let curve = load_curve(&file)?;
            match format {
                Format::Csv => write_sweep_csv(out, curve.points())?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut *out, curve.points())?;
                    writeln!(out)?;
                }
            }
        }
        Command::Inverse {
            file,
            metric,
            target,
        } => {
            let curve = load_curve(&file)?;
            let r = inverse_for_metric(&curve, metric, target)?;
            write_point(out, &r.point)?;
        }
        Command::Optimize {
            file,
            maximize,
            constraints,
        } => {
            let curve = load_curve(&file)?;
            let r = optimize(&curve, maximize.into(), &constraints)?;
            write_point(out, &r.point)?;
        }
        Command::Preview {
            file,
            threshold,
            icons,
        } => {
            let curve = load_curve(&file)?;
            let point = curve.point_at(threshold)?;
            let grid = allocate_icons(&point.counts, icons)?;
            writeln!(out, "threshold={} icons={}", point.threshold, grid.n_icons)?;
            write_preview(out, &grid, color)?;
        }
        Command::Fetch(args) => fetch(args, out, err)?,
        Command::Synth {
            n,
            prevalence,
            seed,
            out: path,
        } => {
            let d = synthesize(&SynthConfig::new(n, prevalence, seed))?;
            write_dataset(&path, &d)?;
            writeln!(out, "wrote {} examples to {}", d.n_total(), path.display())?;
        }
        Command::Fixture { out: path } => {
            let d = fixture_t04();
            write_dataset(&path, &d)?;
            writeln!(out, "wrote {} examples to {}", d.n_total(), path.display())?;
        }
        Command::Serve {
            addr,
            ui_dir,
            snapshot,
            cors_origin,
        } => {
            let _ = tracing_subscriber::fmt().with_writer(io::stderr).try_init();
            let config = ServiceConfig {
                addr,
                ui_dir,
                cors_origin,
                snapshot,
            };
            runtime(true)?.block_on(tradeoff_service::serve(config))?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_auto(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_curve(path: &Path) -> Result<ThresholdCurve, Failure> {
    Ok(ThresholdCurve::new(load(path)?)?)
}

fn write_dataset(path: &Path, d: &Dataset) -> Outcome {
    let file = File::create(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    write_csv(d, BufWriter::new(file))?;
    Ok(())
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

fn write_point(out: &mut dyn Write, p: &OperatingPoint) -> io::Result<()> {
    let c = &p.counts;
    let m = &p.metrics;
    writeln!(out, "threshold={}", p.threshold)?;
    writeln!(out, "tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_)?;
    writeln!(
        out,
        "precision={} recall={} fpr={}",
        fmt3(m.precision),
        fmt3(m.recall),
        fmt3(m.fpr)
    )
}

/// Machine format: full precision, `above_max` for the sentinel threshold,
/// empty fields for undefined metrics.
fn write_sweep_csv(out: &mut dyn Write, points: &[OperatingPoint]) -> csv::Result<()> {
    let full = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "threshold",
        "tp",
        "fp",
        "tn",
        "fn",
        "recall",
        "precision",
        "fpr",
    ])?;
    for p in points {
        let threshold = match p.threshold {
            Threshold::At(t) => t.to_string(),
            Threshold::AboveMax => "above_max".to_string(),
        };
        let c = &p.counts;
        w.write_record([
            threshold,
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            full(p.metrics.recall),
            full(p.metrics.precision),
            full(p.metrics.fpr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const GRID_WIDTH: u64 = 10;

fn write_preview(out: &mut dyn Write, grid: &PreviewGrid, color: bool) -> io::Result<()> {
    if !color {
        for cat in PreviewCategory::ALL {
            writeln!(out, "{cat} {:>3}  {}", grid.icons(cat), cat.caption())?;
        }
        return Ok(());
    }
    let cells: Vec<PreviewCategory> = PreviewCategory::ALL
        .into_iter()
        .flat_map(|cat| std::iter::repeat_n(cat, grid.icons(cat) as usize))
        .collect();
    for row in cells.chunks(GRID_WIDTH as usize) {
        let line: Vec<String> = row.iter().map(|&cat| glyph(cat)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    writeln!(out)?;
    for cat in PreviewCategory::ALL {
        writeln!(
            out,
            "{} {cat} {:>3}  {}",
            glyph(cat),
            grid.icons(cat),
            cat.caption()
        )?;
    }
    Ok(())
}

fn glyph(cat: PreviewCategory) -> String {
    let symbol = match cat.shape() {
        Shape::Circle => 'o',
        Shape::Triangle => '^',
    };
    let escape = match cat.color() {
        Color::Blue => "\x1b[34m",
        Color::Red => "\x1b[31m",
    };
    format!("{escape}{symbol}\x1b[0m")
}

fn runtime(multi_thread: bool) -> io::Result<tokio::runtime::Runtime> {
    let mut b = if multi_thread {
        tokio::runtime::Builder::new_multi_thread()
    } else {
        tokio::runtime::Builder::new_current_thread()
    };
    b.enable_all().build()
}

fn read_revids(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            l.parse().map_err(|_| {
                Failure(format!(
                    "{}: line {n}: bad revision id {l:?}",
                    path.display()
                ))
            })
        })
        .collect()
}

/// `rev_id,label` rows; a leading header row is skipped.
fn read_labels(path: &Path) -> Result<BTreeMap<u64, Label>, Failure> {
    let ctx = |e: &dyn std::fmt::Display| Failure(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ctx(&e))?;
    let mut labels = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ctx(&e))?;
        let line = i + 1;
        if line == 1 && rec.get(0) == Some("rev_id") {
            continue;
        }
        if rec.len() != 2 {
            return Err(ctx(&format!("line {line}: expected rev_id,label")));
        }
        let id: u64 = rec[0]
            .parse()
            .map_err(|_| ctx(&format!("line {line}: bad revision id {:?}", &rec[0])))?;
        let label: Label = rec[1]
            .parse()
            .map_err(|_| ctx(&format!("line {line}: label must be good or damaging")))?;
        labels.insert(id, label);
    }
    Ok(labels)
}

fn fetch(args: FetchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let rev_ids = read_revids(&args.revids)?;
    let labels = read_labels(&args.labels)?;
    let client = match (&args.fixtures, args.offline) {
        (Some(dir), true) => OresClient::offline(
            FixtureStore::load(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?,
        ),
        _ => OresClient::http_with_timeout(Duration::from_secs(args.timeout))?,
    };
    let request = ScoreRequest::new(args.base_url, args.context, args.model, rev_ids);
    let outcomes = runtime(false)?.block_on(client.fetch_scores(&request))?;

    let mut scores = BTreeMap::new();
    let mut failed = 0usize;
    for (id, outcome) in outcomes {
        match outcome {
            Ok(s) => {
                scores.insert(id, s);
            }
            Err(e) => {
                failed += 1;
                writeln!(err, "warning: revision {id}: {e}")?;
            }
        }
    }
    let joined = build_dataset(&scores, &labels)?;
    write_dataset(&args.out, &joined.dataset)?;
    writeln!(
        out,
        "wrote {} examples to {} ({} failed, {} unmatched)",
        joined.dataset.n_total(),
        args.out.display(),
        failed,
        joined.skipped.len()
    )?;
    Ok(())
}
