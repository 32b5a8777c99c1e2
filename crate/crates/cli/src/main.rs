use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

mod commands;
mod config;
mod error;
mod output;
mod report;

use config::{FieldSampler, FieldSection, FockSection, ModelKind, RateSection, RunConfig, SpectralSection};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "selfrepel", version, about = "Self-repelling walk and polymer experiments")]
struct Cli {
    /// Worker threads for replica loops (default: all cores).
    #[arg(long, global = true, env = "SELFREPEL_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a configuration file as is.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the configuration of a preset.
    Config {
        #[arg(long)]
        preset: String,
    },
    /// Evaluate the standing conditions on a rate function.
    CheckRates {
        #[arg(long, default_value = "gaussian-d3")]
        preset: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replicas of the lattice walk; records plus a summary report.
    SimulateTsaw {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        s4: Option<f64>,
        /// Shift the even part so that inf w = gamma.
        #[arg(long)]
        normalize: bool,
    },
    /// Replicas of the continuum polymer; records plus a summary report.
    SimulateSrbp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        box_len: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Lattice and continuum kernel constants as JSON.
    Spectral {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graded operator norms and the resolvent variance.
    Fock {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        side: usize,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.25)]
        s4: f64,
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a field and write a snapshot with a 2d slice.
    Field {
        #[arg(long, value_enum, default_value = "gaussian")]
        sampler: SamplerArg,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 32)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long)]
        box_len: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize stored records as a Markdown table.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        burn_in: f64,
    },
    /// One-dimensional walk: growth exponent of the mean square displacement.
    ExploreD1 {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum SamplerArg {
    Gaussian,
    Gibbs,
    Continuum,
}

fn load(path: &Path) -> CliResult<RunConfig> {
    RunConfig::from_toml(&std::fs::read_to_string(path)?)
}

fn base_config(common: &Common, default_preset: &str) -> CliResult<RunConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(p), _) => load(p)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::preset(default_preset)?,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.replicas {
        cfg.replicas = r;
    }
    if let Some(h) = common.horizon {
        if let Some(w) = cfg.walk.as_mut() {
            w.horizon = h;
            w.record_dt = w.record_dt.min(h.max(f64::MIN_POSITIVE));
        }
        if let Some(p) = cfg.polymer.as_mut() {
            p.horizon = h;
            p.record_dt = p.record_dt.min(h.max(p.dt));
        }
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, flag: &Option<PathBuf>, name: &str) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{name}-{}", cfg.seed)))
}

fn execute(cmd: Command) -> CliResult<Value> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, &out, "run");
            commands::run(&cfg, "run", &dir)
        }
        Command::Config { preset } => {
            let text = RunConfig::preset(&preset)?.to_toml()?;
            Ok(Value::String(text))
        }
        Command::CheckRates { preset, config } => {
            let cfg = match config {
                Some(p) => load(&p)?,
                None => RunConfig::preset(&preset)?,
            };
            commands::check_rates(&cfg)
        }
        Command::SimulateTsaw {
            common,
            d,
            l,
            gamma,
            s4,
            normalize,
        } => {
            let mut cfg = base_config(&common, "gaussian-d3")?;
            if cfg.model != ModelKind::Tsaw {
                return Err(CliError::Config("simulate-tsaw needs a walk configuration".into()));
            }
            let w = cfg.walk.as_mut().expect("walk preset");
            if let Some(d) = d {
                w.d = d;
            }
            if let Some(l) = l {
                w.l = l;
            }
            let rate = cfg.rate.get_or_insert_with(|| RateSection::gaussian(1.0, 0.25, false));
            if gamma.is_some() {
                rate.gamma = gamma;
            }
            if s4.is_some() {
                rate.s4 = s4;
            }
            rate.normalize |= normalize;
            let dir = out_dir(&cfg, &common.out, "tsaw");
            commands::run(&cfg, "simulate-tsaw", &dir)
        }
        Command::SimulateSrbp {
            common,
            dt,
            box_len,
            grid,
        } => {
            let mut cfg = base_config(&common, "srbp-gauss-d3")?;
            let p = cfg
                .polymer
                .as_mut()
                .ok_or_else(|| CliError::Config("simulate-srbp needs a polymer configuration".into()))?;
            if let Some(dt) = dt {
                p.dt = dt;
                p.record_dt = p.record_dt.max(dt);
            }
            if let Some(b) = box_len {
                p.box_len = b;
            }
            if let Some(g) = grid {
                p.grid = g;
            }
            let dir = out_dir(&cfg, &common.out, "srbp");
            commands::run(&cfg, "simulate-srbp", &dir)
        }
        Command::Spectral { d, ladder, out } => {
            let sec = SpectralSection {
                d,
                ladder: ladder.unwrap_or_else(|| SpectralSection::default().ladder),
            };
            let table = commands::spectral_table(&sec)?;
            if let Some(path) = out {
                selfrepel_core::record::atomic_write(&path, serde_json::to_string_pretty(&table)?.as_bytes())?;
            }
            Ok(table)
        }
        Command::Fock {
            config,
            side,
            n_max,
            theta,
            gamma,
            s4,
            normalize,
            degrees,
            lambdas,
            out,
        } => {
            let cfg = match config {
                Some(p) => load(&p)?,
                None => {
                    let mut c = RunConfig::preset("gaussian-d3")?;
                    c.model = ModelKind::Fock;
                    c.walk = None;
                    c.replicas = 1;
                    c.rate = Some(RateSection::gaussian(gamma, s4, normalize));
                    let def = FockSection::default();
                    c.fock = Some(FockSection {
                        d: 3,
                        side,
                        theta,
                        n_max,
                        degrees: degrees.unwrap_or(def.degrees),
                        lambdas: lambdas.unwrap_or(def.lambdas),
                    });
                    c
                }
            };
            let dir = out_dir(&cfg, &out, "fock");
            commands::run(&cfg, "fock", &dir)
        }
        Command::Field {
            sampler,
            d,
            l,
            theta,
            box_len,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::preset("gaussian-d3")?;
            cfg.model = ModelKind::Field;
            cfg.walk = None;
            cfg.replicas = 1;
            cfg.seed = seed;
            cfg.field = Some(FieldSection {
                sampler: match sampler {
                    SamplerArg::Gaussian => FieldSampler::Gaussian,
                    SamplerArg::Gibbs => FieldSampler::Gibbs,
                    SamplerArg::Continuum => FieldSampler::Continuum,
                },
                d,
                l,
                theta,
                box_len,
            });
            let dir = out_dir(&cfg, &out, "field");
            commands::run(&cfg, "field", &dir)
        }
        Command::Report { dir, burn_in } => {
            let records = report::load_records(&dir)?;
            let rep = report::summarize(&records, burn_in)?;
            let md = report::to_markdown(&rep);
            selfrepel_core::record::atomic_write(&dir.join("report.md"), md.as_bytes())?;
            selfrepel_core::record::atomic_write(&dir.join("report.json"), serde_json::to_string_pretty(&rep)?.as_bytes())?;
            Ok(Value::String(md))
        }
        Command::ExploreD1 { common } => {
            let cfg = base_config(&common, "d1-explore")?;
            let dir = out_dir(&cfg, &common.out, "d1");
            commands::run(&cfg, "explore-d1", &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", CliError::Config(format!("worker pool: {e}")).to_json());
            return ExitCode::from(2);
        }
    }
    // a closed stdout (e.g. piped into `head`) is not an error of the run
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command) {
        Ok(Value::String(text)) => {
            let _ = write!(stdout, "{text}");
            ExitCode::SUCCESS
        }
        Ok(v) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
