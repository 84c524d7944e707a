//! Splitting the grid into z slabs, one worker each. Runs the same scene with
//! 1 to 4 regions and compares the final state with the single-region run
//! bit for bit.
//!
//!     cargo run --release --example decomposition -- [steps]

use std::time::Instant;

use kinetic::boundary::{BoundarySet, Condition, Face};
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::decomp::DecomposedSimulation;
use kinetic::ib::{PoissonMethod, RigidMotion, Solid, TriMesh};
use kinetic::layout::Dims;
use kinetic::solver::SolverConfig;

fn build(m: usize) -> kinetic::Result<DecomposedSimulation> {
    let dims = Dims::new(32, 24, 24);
    let mut faces = [Condition::Periodic; 6];
    faces[Face::NegX.index()] = Condition::Inlet { velocity: [0.05, 0.0, 0.0], radius: Some(6.0) };
    faces[Face::PosX.index()] = Condition::Outflow;
    let cfg = SolverConfig::new(CollisionModel::new(CollisionKind::CmMrt, 0.01)?, BoundarySet::new(faces)?);
    let mut sim = DecomposedSimulation::new(dims, cfg, 32, m)?;
    sim.init_equilibrium(|_, _, _| (1.0, [0.0; 3]));
    let c = [12.0, 11.5, 11.5];
    let (solid, _) = Solid::from_mesh("ball", &TriMesh::sphere(c, 4.0, 32), 0.4, 5, PoissonMethod::DartThrowing, RigidMotion::fixed(c));
    sim.add_solid(solid);
    sim.set_ell(2);
    Ok(sim)
}

fn main() -> kinetic::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(100, |s| s.parse().expect("steps"));
    let mut reference = None;
    for m in 1..=4 {
        let mut sim = build(m)?;
        let slabs: Vec<_> = sim.regions.iter().map(|r| r.z_range()).collect();
        let t = Instant::now();
        sim.run(steps)?;
        let secs = t.elapsed().as_secs_f64();
        let f = sim.distributions();
        let same = match &reference {
            None => {
                reference = Some(f);
                "reference".to_string()
            }
            Some(r) => {
                let diff = f.iter().zip(r).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
                format!("{diff} differing values")
            }
        };
        println!("m {m}: slabs {slabs:?}, {secs:.2} s, {same}");
    }
    Ok(())
}
