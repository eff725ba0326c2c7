use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use blurev::commands::{cmd_eval, cmd_render, cmd_simulate, cmd_train, uniform_times, Warnings};
use blurev::config::RunConfig;
use blurev::dataset::load_dataset;
use blurev::{Error, Result};
use blurev_core::TrajectoryKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Deblur one frame with its events: simulate datasets, train the field and
/// trajectory, render sharp frames, evaluate against ground truth.
#[derive(Parser, Debug)]
#[command(name = "blurev", version)]
struct Cli {
    /// Worker threads for rendering and simulation.
    #[arg(long, global = true, env = "BLUREV_THREADS")]
    threads: Option<usize>,
    /// Exit with status 2 when the data is degenerate (e.g. no events).
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Jointly optimize the field and the trajectory on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render sharp frames at normalized exposure times.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated times in [0, 1].
        #[arg(long, value_delimiter = ',', conflicts_with = "count")]
        times: Vec<f64>,
        /// Uniformly spaced frames over the exposure.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Compare a checkpoint against the dataset's ground truth.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    /// Documented defaults.
    Default,
    /// Settings sized for a single CPU core.
    Desk,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base settings when no config file is given.
    #[arg(long, value_enum, default_value = "default")]
    profile: Profile,
    /// Override any key, e.g. `--set train.render.n_samples=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    n_virtual: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    trajectory: Option<TrajectoryArg>,
    /// 80K iterations.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TrajectoryArg {
    Spline,
    Linear,
}

fn set_key(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .and_then(|t| t.get_mut(*part))
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
    }
    let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("`{key}` is not inside a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, self.profile) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Profile::Default) => RunConfig::default(),
            (None, Profile::Desk) => RunConfig::desk(),
        };
        if !self.overrides.is_empty() {
            let mut v = toml::Value::try_from(&c).map_err(|e| Error::Config(e.to_string()))?;
            for o in &self.overrides {
                let (k, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("`{o}` is not KEY=VALUE")))?;
                set_key(&mut v, k.trim(), parse_value(raw.trim()))?;
            }
            c = v.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        }
        if let Some(n) = self.iterations {
            c.train.iterations = n;
        }
        if let Some(n) = self.n_virtual {
            c.train.n_virtual = n;
        }
        if let Some(a) = self.alpha {
            c.train.alpha = a;
        }
        if let Some(b) = self.beta {
            c.train.beta = b;
        }
        if let Some(s) = self.seed {
            c.train.seed = s;
        }
        if let Some(t) = self.trajectory {
            c.train.trajectory = match t {
                TrajectoryArg::Spline => TrajectoryKind::Spline,
                TrajectoryArg::Linear => TrajectoryKind::Linear,
            };
        }
        if self.paper_scale {
            c = c.paper_scale();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Prints to stdout and appends to a log file when one is open.
struct Log(Option<fs::File>);

impl Log {
    fn line(&mut self, s: &str) {
        println!("{s}");
        if let Some(f) = &mut self.0 {
            let _ = writeln!(f, "{s}");
        }
    }
}

enum Outcome {
    Done,
    Degenerate,
}

fn warn(log: &mut Log, w: &Warnings) {
    for m in &w.0 {
        log.line(&format!("warning: {m}"));
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate { out, config } => {
            let c = config.resolve()?;
            let start = Instant::now();
            let r = cmd_simulate(&c, out)?;
            let mut log = Log(None);
            log.line(&format!(
                "dataset {}: {} events, blurry vs mid-exposure PSNR {:.2} dB ({:.1}s)",
                out.display(),
                r.summary.events,
                r.summary.blur_psnr,
                start.elapsed().as_secs_f64()
            ));
            warn(&mut log, &r.warnings);
            // An eventless dataset cannot drive the event term; always flagged.
            Ok(if r.warnings.is_empty() { Outcome::Done } else { Outcome::Degenerate })
        }
        Command::Train { dataset, out, resume, config } => {
            let c = config.resolve()?;
            let d = load_dataset(dataset)?;
            fs::create_dir_all(out).map_err(|source| Error::Io { path: out.clone(), source })?;
            let log_path = out.join("train.log");
            let file = fs::OpenOptions::new().create(true).append(true).open(&log_path);
            let mut log = Log(Some(file.map_err(|source| Error::Io { path: log_path, source })?));
            log.line(&format!("training on {} for {} iterations", dataset.display(), c.train.iterations));
            let start = Instant::now();
            let mut progress = |r: &blurev::commands::LossRecord| {
                let mut s = format!("it {:>6} loss {:.6e} photometric {:.6e}", r.iteration, r.report.loss, r.report.photometric);
                match r.report.event {
                    Some(e) => write!(s, " event {e:.6e}").unwrap(),
                    None => s.push_str(" event skipped"),
                }
                write!(s, " ({:.1}s)", start.elapsed().as_secs_f64()).unwrap();
                log.line(&s);
            };
            let r = cmd_train(&d, &c, out, resume.as_deref(), &mut progress)?;
            log.line(&format!("wrote {}", out.display()));
            warn(&mut log, &r.warnings);
            Ok(degenerate_if_strict(cli, r.warnings))
        }
        Command::Render { checkpoint, out, times, count } => {
            let times = match count {
                Some(n) => uniform_times(*n),
                None if times.is_empty() => vec![0.5],
                None => times.clone(),
            };
            let paths = cmd_render(checkpoint, &times, out)?;
            println!("rendered {} frames into {}", paths.len(), out.display());
            Ok(Outcome::Done)
        }
        Command::Eval { checkpoint, dataset, out } => {
            let d = load_dataset(dataset)?;
            let report = cmd_eval(checkpoint, &d, out)?;
            print!("{}", report.summary());
            let mut w = Warnings::default();
            if d.events.is_empty() {
                w.0.push("empty event stream".into());
            }
            warn(&mut Log(None), &w);
            Ok(degenerate_if_strict(cli, w))
        }
    }
}

fn degenerate_if_strict(cli: &Cli, w: Warnings) -> Outcome {
    if cli.strict && !w.is_empty() {
        Outcome::Degenerate
    } else {
        Outcome::Done
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
