use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kinetic::autotune::{ascii_table, svg_heatmap, TuneReport};
use kinetic::config::SceneConfig;
use kinetic::decomp::{workers_from_env, WORKERS_ENV};
use kinetic::output;
use kinetic::run::{exit_code, run, Scene};
use kinetic::Result;

#[derive(Parser)]
#[command(name = "kinetic", version, about = "D3Q27 lattice Boltzmann runs with immersed solids")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a scene: optional tuning, time loop, artifacts.
    Run {
        config: PathBuf,
        /// Output directory, overriding `run.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Region count, overriding the scene file and the environment.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Measure the (ell, alpha) grid and write `tune.json` and `tune.svg`.
    Tune {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scene file, then print its hash.
    ValidateConfig { config: PathBuf },
    /// Sample every solid and write one sample file per solid.
    ExportSamples {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Block edge for the stored order (default: the scene's `grid.ell`).
        #[arg(long)]
        ell: Option<usize>,
    },
    /// Print a tuning report as a table and write its heatmap.
    PlotCosts {
        report: PathBuf,
        /// Heatmap path (default: next to the report, `.svg`).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<SceneConfig> {
    let mut cfg = SceneConfig::load(path)?;
    if let Some(o) = out {
        cfg.run.output_dir = o;
    }
    Ok(cfg)
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| kinetic::Error::io(dir, e))
}

fn execute(verb: Verb) -> Result<()> {
    match verb {
        Verb::Run { config, out, workers } => {
            let mut cfg = load(&config, out)?;
            if let Some(m) = workers.or_else(workers_from_env) {
                cfg.run.regions = m;
            }
            let s = run(cfg)?;
            println!(
                "completed {} steps in {:.2} s, {} region(s), ell {} alpha {}, config {}",
                s.steps_completed, s.seconds, s.regions, s.ell, s.alpha, s.config_hash
            );
        }
        Verb::Tune { config, out } => {
            let cfg = load(&config, out)?;
            let dir = cfg.run.output_dir.clone();
            mkdir(&dir)?;
            let mut scene = Scene::build(cfg)?;
            let report = scene.tune()?;
            report.save(&dir.join("tune.json"))?;
            output::write_text(&dir.join("tune.svg"), &svg_heatmap(&report))?;
            print!("{}", ascii_table(&report));
            println!("best ell {} alpha {}, config {}", report.best_ell, report.best_alpha, scene.hash);
        }
        Verb::ValidateConfig { config } => {
            let cfg = SceneConfig::load(&config)?;
            let d = cfg.grid.dims;
            println!(
                "ok {}: {}x{}x{} {} nu {}, {} solid(s), {} tracer emitter(s), {} steps",
                cfg.hash(),
                d[0],
                d[1],
                d[2],
                cfg.collision.kind,
                cfg.physics.nu,
                cfg.solids.len(),
                cfg.tracers.len(),
                cfg.run.steps
            );
        }
        Verb::ExportSamples { config, out, ell } => {
            let cfg = load(&config, out)?;
            let dir = cfg.run.output_dir.clone();
            mkdir(&dir)?;
            let hash = cfg.hash();
            for (mut solid, rep) in cfg.build_solids()? {
                solid.reorder(ell.unwrap_or(cfg.grid.ell));
                let p = dir.join(format!("samples_{}.txt", solid.name));
                output::write_samples(&p, &solid.samples, &hash)?;
                println!(
                    "{}: {} samples, area {:.3}, per cell min {} mean {:.1} max {} -> {}",
                    solid.name,
                    rep.samples,
                    rep.area,
                    rep.per_cell.0,
                    rep.per_cell.1,
                    rep.per_cell.2,
                    p.display()
                );
            }
        }
        Verb::PlotCosts { report, svg } => {
            let r = TuneReport::load(&report)?;
            let svg = svg.unwrap_or_else(|| report.with_extension("svg"));
            output::write_text(&svg, &svg_heatmap(&r))?;
            print!("{}", ascii_table(&r));
            println!("heatmap: {}", svg.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kinetic: {e}");
            if matches!(e, kinetic::Error::Config { .. }) && std::env::var_os(WORKERS_ENV).is_some() {
                eprintln!("(note: {WORKERS_ENV} is set)");
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
