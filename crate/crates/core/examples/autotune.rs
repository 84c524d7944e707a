//! Searching sample block edge and storage group size for the fastest step.
//! Measures every candidate on copies of a small sphere scene, prints the cost
//! table and writes the heatmap.
//!
//!     cargo run --release --example autotune -- [heatmap.svg]

use kinetic::autotune::{ascii_table, l_m, search, svg_heatmap, TuneSpec};
use kinetic::boundary::BoundarySet;
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::ib::{PoissonMethod, RigidMotion, Solid, TriMesh};
use kinetic::layout::Dims;
use kinetic::solver::{Simulation, SolverConfig};

fn main() -> kinetic::Result<()> {
    let dims = Dims::new(24, 24, 24);
    let model = CollisionModel::new(CollisionKind::CmMrt, 0.02)?;
    let mut sim = Simulation::new(dims, SolverConfig::new(model, BoundarySet::periodic()), 1)?;
    sim.state.init_equilibrium(|_, _, _| (1.0, [0.03, 0.0, 0.0]));
    let c = [11.5; 3];
    let (solid, rep) = Solid::from_mesh("ball", &TriMesh::sphere(c, 3.0, 24), 0.3, 2, PoissonMethod::DartThrowing, RigidMotion::fixed(c));
    sim.add_solid(solid);

    let spec = TuneSpec::for_simulation(&sim, 5);
    println!(
        "{} samples, bounding edge {} cells: {} ell x {} alpha = {} candidates",
        rep.samples,
        l_m(&sim),
        spec.ell.len(),
        spec.alpha.len(),
        spec.candidates()
    );
    let report = search(&sim, &spec)?;
    print!("{}", ascii_table(&report));
    println!("best: ell {} alpha {} at {:.3} ms/step", report.best_ell, report.best_alpha, report.best_seconds * 1e3);

    if let Some(p) = std::env::args().nth(1) {
        std::fs::write(&p, svg_heatmap(&report)).map_err(|e| kinetic::Error::io(&p, e))?;
        println!("wrote {p}");
    }
    Ok(())
}
