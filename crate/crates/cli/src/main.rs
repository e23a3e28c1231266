use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use tatfast::bench::{bench_csv, run_bench, BenchOptions};
use tatfast::io::{write_atomic, write_csv, write_pgm, Tatb};
use tatfast::operators::{degrade, AdjointPlan, DegradationSpec, Eta, ForwardPlan, InversePlan, OperatorOptions};
use tatfast::oracle::slow_forward;
use tatfast::phantom::{half_phantom_spec, paper_phantom_spec, random_ellipses_spec, EllipseRanges, PhantomSpec};
use tatfast::recon::{add_noise, reconstruct, ReconConfig, ReconPlans};
use tatfast::selftest::run_selftest;
use tatfast::{Data, GeometryConfig, Image};

#[derive(Parser)]
#[command(name = "tatfast", version, about = "Fast photoacoustic forward, adjoint and inverse operators")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    PaperDisks,
    HalfDisks,
    RandomEllipses,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pgm,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render a phantom.
    Phantom {
        #[arg(long, value_enum, default_value = "paper-disks")]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Phantom descriptor JSON; overrides --preset.
        #[arg(long)]
        descriptor: Option<PathBuf>,
        #[arg(long, default_value_t = 257)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// g = 𝒜f.
    Forward {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use the slow reference propagator.
        #[arg(long)]
        slow: bool,
    },
    /// u = 𝒜*g.
    Adjoint {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// f = 𝒜⁻¹g.
    Invert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add white noise with a given relative L² level.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Damping e^{−γt} followed by a temporal filter η.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// η as JSON, e.g. {"kind":"gaussian","sigma":0.02}; identity when omitted.
        #[arg(long)]
        eta_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterative reconstruction.
    Recon {
        #[arg(long, value_parser = ["nnls", "tv"])]
        method: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        recon: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Consistency checks; prints a JSON report, exit code 0 iff all pass.
    Selftest {
        #[arg(long)]
        small: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator timings as CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "129,257,513")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Largest size at which the slow oracle is also timed.
        #[arg(long, default_value_t = 257)]
        slow_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export an array as 16-bit PGM (with a .json sidecar) or CSV.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

/// TV weight used by `recon --method tv` when no recon config supplies one.
const DEFAULT_TV_ALPHA: f64 = 5e-4;

/// Geometry JSON, optionally with an `operator_options` block.
#[derive(Deserialize)]
struct RunConfig {
    #[serde(flatten)]
    geometry: GeometryConfig,
    #[serde(default)]
    operator_options: OperatorOptions,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let c: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    c.geometry.validate()?;
    Ok(c)
}

fn read(path: &Path) -> Result<Tatb> {
    Tatb::read(path).with_context(|| format!("reading {}", path.display()))
}

fn geometry_meta(cfg: &GeometryConfig) -> serde_json::Value {
    json!({ "geometry": cfg })
}

fn write_image(path: &Path, f: &Image, cfg: Option<&GeometryConfig>) -> Result<()> {
    let meta = cfg.map(geometry_meta).unwrap_or(serde_json::Value::Null);
    Tatb::from_image(f, meta)?.write(path).with_context(|| format!("writing {}", path.display()))
}

fn write_sinogram(path: &Path, g: &Data, cfg: &GeometryConfig) -> Result<()> {
    Tatb::from_sinogram(g, geometry_meta(cfg))?
        .write(path)
        .with_context(|| format!("writing {}", path.display()))
}

/// Reads a sinogram; the active arc is taken from the config.
fn read_sinogram(path: &Path, cfg: &GeometryConfig) -> Result<Data> {
    let mut g: Data = read(path)?.to_sinogram()?;
    if g.values.dim() != (cfg.n_time, cfg.n_theta) {
        bail!(
            "{} has shape {:?}, config expects {:?}",
            path.display(),
            g.values.dim(),
            (cfg.n_time, cfg.n_theta)
        );
    }
    g.arc_mask = tatfast::geometry::arc_mask(cfg);
    Ok(g)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Phantom { preset, seed, descriptor, n, out } => {
            let spec = match descriptor {
                Some(p) => PhantomSpec::from_json(&fs::read_to_string(&p)?)?,
                None => match preset {
                    Preset::PaperDisks => paper_phantom_spec(),
                    Preset::HalfDisks => half_phantom_spec(),
                    Preset::RandomEllipses => random_ellipses_spec(seed, &EllipseRanges::default()),
                },
            };
            spec.validate(GeometryConfig::default().support_radius)?;
            let f: Image = spec.render(n, 1.0);
            let meta = json!({ "phantom": spec });
            Tatb::from_image(&f, meta)?.write(&out)?;
        }
        Cmd::Forward { input, config, out, slow } => {
            let c = load_config(&config)?;
            let f: Image = read(&input)?.to_image()?;
            let g = if slow {
                slow_forward(&f, &c.geometry)?
            } else {
                ForwardPlan::new(&c.geometry, c.operator_options)?.apply(&f)?
            };
            write_sinogram(&out, &g, &c.geometry)?;
        }
        Cmd::Adjoint { input, config, out } => {
            let c = load_config(&config)?;
            let g = read_sinogram(&input, &c.geometry)?;
            let u = AdjointPlan::new(&c.geometry, c.operator_options)?.apply(&g)?;
            write_image(&out, &u, Some(&c.geometry))?;
        }
        Cmd::Invert { input, config, out } => {
            let c = load_config(&config)?;
            let g = read_sinogram(&input, &c.geometry)?;
            let (f, constant) = InversePlan::new(&c.geometry, c.operator_options)?.apply_with_constant(&g)?;
            log::info!("annulus constant {constant:.6e}");
            write_image(&out, &f, Some(&c.geometry))?;
        }
        Cmd::Noise { input, level, seed, out } => {
            let t = read(&input)?;
            let g: Data = t.to_sinogram()?;
            let noisy = add_noise(&g, level, seed)?;
            let mut meta = t.header.meta.clone();
            meta["noise"] = json!({ "level": level, "seed": seed });
            Tatb::from_sinogram(&noisy, meta)?.write(&out)?;
        }
        Cmd::Degrade { input, gamma, eta_file, out } => {
            let t = read(&input)?;
            let g: Data = t.to_sinogram()?;
            let eta: Eta = match eta_file {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?).context("parsing η file")?,
                None => Eta::Identity,
            };
            let spec = DegradationSpec { gamma, eta };
            let d = degrade(&g, &spec)?;
            let mut meta = t.header.meta.clone();
            meta["degradation"] = json!({ "gamma": gamma });
            Tatb::from_sinogram(&d, meta)?.write(&out)?;
        }
        Cmd::Recon { method, input, config, recon, out, trace, truth } => {
            let c = load_config(&config)?;
            let mut rc = match recon {
                Some(p) => ReconConfig::from_json(&fs::read_to_string(&p)?)?,
                None => ReconConfig::default(),
            };
            match method.as_deref() {
                Some("nnls") => rc.method = tatfast::recon::Method::Nnls,
                Some("tv") => {
                    rc.method = tatfast::recon::Method::Tv;
                    if rc.alpha <= 0.0 {
                        rc.alpha = DEFAULT_TV_ALPHA;
                    }
                }
                _ => {}
            }
            let g = read_sinogram(&input, &c.geometry)?;
            let truth: Option<Image> = truth.map(|p| -> Result<Image> { Ok(read(&p)?.to_image()?) }).transpose()?;
            let plans = ReconPlans::new(&c.geometry, c.operator_options)?;
            let (f, tr) = reconstruct(&g, &rc, &plans, truth.as_ref())?;
            write_image(&out, &f, Some(&c.geometry))?;
            if let Some(p) = trace {
                write_atomic(&p, tr.to_csv().as_bytes())?;
            }
            let summary = json!({
                "iterations": tr.iterations,
                "converged": tr.converged,
                "operator_norm": tr.operator_norm,
                "step_primal": tr.step_primal,
                "step_dual": tr.step_dual,
                "metrics": tr.metrics,
                "threads": rayon::current_num_threads(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Cmd::Selftest { small, out } => {
            let report = run_selftest(small);
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(p) = out {
                write_atomic(&p, text.as_bytes())?;
            }
            println!("{text}");
            return Ok(report.passed);
        }
        Cmd::Bench { sizes, reps, slow_max, out } => {
            let opts = BenchOptions {
                reps,
                slow_max,
                ..BenchOptions::default()
            };
            let csv = bench_csv(&run_bench(&sizes, &opts)?);
            match out {
                Some(p) => write_atomic(&p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
        Cmd::Export { input, format, out } => {
            let a = read(&input)?.to_matrix()?;
            match format {
                Format::Pgm => {
                    write_pgm(&out, &a)?;
                }
                Format::Csv => write_csv(&out, &a)?,
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
