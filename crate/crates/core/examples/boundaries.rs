//! Face boundary conditions. Checks the six per-face passes against the
//! single-sweep reference on random data, runs a jet between an inlet and an
//! outflow with periodic sides and reports the flux through both ends, then
//! stirs a closed no-slip box and reports its mass.
//!
//!     cargo run --release --example boundaries

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinetic::boundary::{apply_single_pass, BoundarySet, Condition, Face};
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::lattice::Q;
use kinetic::layout::Dims;
use kinetic::solver::{Simulation, SolverConfig};

fn main() -> kinetic::Result<()> {
    let dims = Dims::new(40, 20, 20);
    let mut faces = [Condition::Periodic; 6];
    faces[Face::NegX.index()] = Condition::Inlet { velocity: [0.05, 0.0, 0.0], radius: Some(6.0) };
    faces[Face::PosX.index()] = Condition::Outflow;
    let bc = BoundarySet::new(faces)?;
    for face in Face::ALL {
        println!("{:>3}: {:?}", face.name(), bc.condition(face));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pre: Vec<f64> = (0..dims.len() * Q).map(|_| rng.gen()).collect();
    let read = |p: [usize; 3], i: usize| pre[dims.node_index(p[0], p[1], p[2]) * Q + i];
    let mut by_face = HashMap::new();
    let t = Instant::now();
    bc.apply_all(dims, 0..dims.nz, &read, &mut |p, i, v| {
        by_face.insert((p, i), v);
    });
    let t_faces = t.elapsed();
    let mut single = HashMap::new();
    let t = Instant::now();
    apply_single_pass(&bc, dims, &read, &mut |p, i, v| {
        single.insert((p, i), v);
    });
    let t_single = t.elapsed();
    println!(
        "\n{} boundary values; per-face passes {:?}, single sweep {:?}, identical: {}",
        by_face.len(),
        t_faces,
        t_single,
        by_face == single
    );

    let model = CollisionModel::new(CollisionKind::CmMrt, 0.02)?;
    let mut sim = Simulation::new(dims, SolverConfig::new(model.clone(), bc), 16)?;
    sim.state.init_equilibrium(|_, _, _| (1.0, [0.0; 3]));
    let flux = |sim: &Simulation, x: usize| -> f64 {
        let (rho, u) = sim.fields();
        (0..dims.nz)
            .flat_map(|z| (0..dims.ny).map(move |y| (y, z)))
            .map(|(y, z)| {
                let k = dims.node_index(x, y, z);
                rho[k] * u[k][0]
            })
            .sum()
    };
    println!("\n{:>6} {:>10} {:>10} {:>10}", "step", "in flux", "out flux", "mass");
    for _ in 0..8 {
        sim.run(100)?;
        let t = sim.state.t;
        println!("{t:>6} {:>10.4} {:>10.4} {:>10.2}", flux(&sim, 1), flux(&sim, dims.nx - 2), sim.total_mass());
    }

    let closed = BoundarySet::new([Condition::NoSlip; 6])?;
    let mut sim = Simulation::new(Dims::new(16, 16, 16), SolverConfig::new(model, closed), 16)?;
    sim.state.init_equilibrium(|x, y, _| {
        let (x, y) = (x as f64 - 7.5, y as f64 - 7.5);
        (1.0, [-0.004 * y, 0.004 * x, 0.0])
    });
    let m0 = sim.total_mass();
    sim.run(500)?;
    println!("\nclosed box after 500 steps: relative mass change {:.2e}", (sim.total_mass() - m0) / m0);
    Ok(())
}
