//! Run orchestration: optional tuning, then the time loop with snapshots,
//! tracer advection, density volumes and the timing log.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autotune::{self, TuneReport};
use crate::config::SceneConfig;
use crate::decomp::DecomposedSimulation;
use crate::error::{Error, Result};
use crate::ib::{IbReport, SamplingReport};
use crate::output::{self, SnapshotMeta};
use crate::solver::{Simulation, TimingLog};
use crate::tracer::TracerCloud;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Invalid configuration, unreadable assets, failed writes.
pub const EXIT_FAILURE: i32 = 1;
/// The flow diverged; artifacts up to that step were written.
pub const EXIT_DIVERGED: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_divergence() {
        EXIT_DIVERGED
    } else {
        EXIT_FAILURE
    }
}

/// Written to `summary.json` at the end of every run, diverged or not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub steps_completed: u64,
    pub diverged: Option<String>,
    pub ell: usize,
    pub alpha: usize,
    pub regions: usize,
    pub samples: Vec<usize>,
    pub tracers_live: usize,
    pub tracers_emitted: u64,
    pub total_mass: f64,
    pub last_force: [f64; 3],
    pub seconds: f64,
    pub artifacts: Vec<PathBuf>,
}

/// A configured scene ready to step.
pub struct Scene {
    pub config: SceneConfig,
    pub hash: String,
    pub sim: DecomposedSimulation,
    pub sampling: Vec<SamplingReport>,
    pub ell: usize,
    pub alpha: usize,
}

fn single_region(cfg: &SceneConfig, solids: &[crate::ib::Solid]) -> Result<Simulation> {
    let mut sim = Simulation::new(cfg.dims(), cfg.solver_config()?, cfg.grid.alpha)?;
    let u0 = cfg.physics.initial_velocity;
    sim.state.init_equilibrium(|_, _, _| (1.0, u0));
    for s in solids {
        sim.add_solid(s.clone());
    }
    sim.set_ell(cfg.grid.ell);
    Ok(sim)
}

impl Scene {
    pub fn build(config: SceneConfig) -> Result<Self> {
        config.validate()?;
        let (solids, sampling): (Vec<_>, Vec<_>) = config.build_solids()?.into_iter().unzip();
        let mut sim = DecomposedSimulation::new(config.dims(), config.solver_config()?, config.grid.alpha, config.run.regions)?
            .with_timing();
        let u0 = config.physics.initial_velocity;
        sim.init_equilibrium(|_, _, _| (1.0, u0));
        for s in solids {
            sim.add_solid(s);
        }
        sim.set_ell(config.grid.ell);
        Ok(Scene {
            hash: config.hash(),
            ell: config.grid.ell,
            alpha: config.grid.alpha,
            config,
            sim,
            sampling,
        })
    }

    /// The scene as one undecomposed simulation at its initial state, as
    /// measured by the tuner.
    pub fn tuning_scene(&self) -> Result<Simulation> {
        let solids: Vec<_> = self.sim.regions[0].solids.clone();
        single_region(&self.config, &solids)
    }

    /// Measures the configured (ell, alpha) grid and applies the best pair.
    pub fn tune(&mut self) -> Result<TuneReport> {
        let scene = self.tuning_scene()?;
        let spec = self.config.tune_spec(autotune::l_m(&scene));
        let report = autotune::search(&scene, &spec)?;
        self.apply_layout(report.best_ell, report.best_alpha)?;
        Ok(report)
    }

    pub fn apply_layout(&mut self, ell: usize, alpha: usize) -> Result<()> {
        self.sim.set_alpha(alpha)?;
        self.sim.set_ell(ell);
        self.ell = ell;
        self.alpha = alpha;
        Ok(())
    }
}

/// Loads `path`, runs it, writes artifacts into the configured output
/// directory (or `out_override`).
pub fn run_file(path: &Path, out_override: Option<&Path>) -> Result<RunSummary> {
    let mut cfg = SceneConfig::load(path)?;
    if let Some(o) = out_override {
        cfg.run.output_dir = o.to_path_buf();
    }
    run(cfg)
}

/// Runs a scene to completion. On divergence the timing log and summary are
/// still written and the divergence error is returned.
pub fn run(config: SceneConfig) -> Result<RunSummary> {
    let clock = Instant::now();
    let out = config.run.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut scene = Scene::build(config)?;
    let hash = scene.hash.clone();
    let mut artifacts = Vec::new();

    if scene.config.tune.enabled {
        let report = scene.tune()?;
        let p = out.join("tune.json");
        report.save(&p)?;
        artifacts.push(p);
        let p = out.join("tune.svg");
        output::write_text(&p, &autotune::svg_heatmap(&report))?;
        artifacts.push(p);
    }

    let dims = scene.config.dims();
    let steps = scene.config.run.steps;
    let snap_every = scene.config.run.snapshot_every;
    let vol_every = scene.config.run.volume_every;
    let mut tracers = TracerCloud::from_config(&scene.config.tracers);
    let has_tracers = !scene.config.tracers.is_empty();
    let mut extra = TimingLog::default();
    let mut last_ib = IbReport::default();
    let mut failure = None;

    let mut done = 0u64;
    while done < steps {
        // Advance to the next output event; tracers need every step.
        let mut chunk = steps - done;
        for every in [snap_every, vol_every] {
            if every > 0 {
                chunk = chunk.min(every - done % every);
            }
        }
        if has_tracers {
            chunk = 1;
        }
        match scene.sim.run(chunk) {
            Ok(reports) => {
                if let Some(r) = reports.last() {
                    last_ib = r.ib;
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        done += chunk;
        if has_tracers {
            let t0 = Instant::now();
            let (_, u) = scene.sim.fields();
            tracers.emit(dims);
            tracers.advect(&u, dims, 1.0);
            extra.push("tracers", done - 1, t0.elapsed().as_secs_f64());
        }
        if vol_every > 0 && done % vol_every == 0 {
            let p = out.join(format!("density_{done:06}.nrrd"));
            output::write_volume(&p, dims, &tracers.rasterize_density(dims), done, &hash)?;
            artifacts.push(p);
        }
        if snap_every > 0 && done % snap_every == 0 {
            let meta = SnapshotMeta {
                step: done,
                dims: dims.as_array(),
                nu: scene.config.physics.nu,
                model: scene.config.collision.kind.to_string(),
                config_hash: hash.clone(),
            };
            artifacts.extend(output::write_snapshot(&out, dims, &scene.sim.distributions(), &meta)?);
        }
    }

    let mut timing = scene.sim.timing();
    timing.rows.extend(extra.rows);
    timing.rows.sort_by_key(|r| r.1);
    let p = out.join("timing.csv");
    timing.save(&p, &hash)?;
    artifacts.push(p);

    let completed = scene.sim.t();
    let summary = RunSummary {
        config_hash: hash,
        steps_completed: completed,
        diverged: failure.as_ref().map(|e| e.to_string()),
        ell: scene.ell,
        alpha: scene.alpha,
        regions: scene.sim.region_count(),
        samples: scene.sim.regions[0].solids.iter().map(|s| s.samples.len()).collect(),
        tracers_live: tracers.len(),
        tracers_emitted: tracers.emitted,
        total_mass: scene.sim.fields().0.iter().sum(),
        last_force: last_ib.force,
        seconds: clock.elapsed().as_secs_f64(),
        artifacts: artifacts.clone(),
    };
    let p = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    output::write_text(&p, &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
