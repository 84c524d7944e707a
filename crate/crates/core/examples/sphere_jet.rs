//! A jet hitting a resting sphere, with smoke carried by the flow. Loads a
//! scene file (default `scenes/sphere_jet.toml`), steps it by hand and prints
//! the drag on the sphere and the smoke count as the jet develops. The final
//! smoke density is written as an NRRD volume.
//!
//!     cargo run --release --example sphere_jet -- [scene.toml] [steps]

use std::path::PathBuf;

use kinetic::config::SceneConfig;
use kinetic::output::write_volume;
use kinetic::run::Scene;
use kinetic::tracer::TracerCloud;

fn main() -> kinetic::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes/sphere_jet.toml"),
        PathBuf::from,
    );
    let cfg = SceneConfig::load(&path)?;
    let steps: u64 = args.next().map_or(cfg.run.steps, |s| s.parse().expect("steps"));
    let out = cfg.run.output_dir.clone();

    let mut scene = Scene::build(cfg)?;
    let dims = scene.config.dims();
    let mut smoke = TracerCloud::from_config(&scene.config.tracers);
    for (solid, rep) in scene.sim.regions[0].solids.iter().zip(&scene.sampling) {
        println!("{}: {} samples, {:.1} per occupied cell", solid.name, rep.samples, rep.per_cell.1);
    }
    println!("{:>6} {:>11} {:>11} {:>8} {:>8}", "step", "drag x", "lift y", "smoke", "umax");
    for step in 1..=steps {
        let reports = scene.sim.run(1)?;
        let (_, u) = scene.sim.fields();
        smoke.emit(dims);
        smoke.advect(&u, dims, 1.0);
        if step % 25 == 0 || step == steps {
            let f = reports.last().map(|r| r.ib.force).unwrap_or_default();
            let umax = u.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).fold(0.0, f64::max);
            println!("{step:>6} {:>11.4e} {:>11.4e} {:>8} {umax:>8.4}", -f[0], -f[1], smoke.len());
        }
    }

    std::fs::create_dir_all(&out).map_err(|e| kinetic::Error::io(&out, e))?;
    let p = out.join("smoke_final.nrrd");
    write_volume(&p, dims, &smoke.rasterize_density(dims), steps, &scene.hash)?;
    println!("wrote {}", p.display());
    Ok(())
}
