//! Body-force driven channel between two no-slip walls. Runs to steady state
//! and prints the profile against the parabola.
//!
//!     cargo run --release --example poiseuille -- [width] [bgk|rm-mrt|cm-mrt]

use kinetic::boundary::{BoundarySet, Condition, Face};
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::layout::Dims;
use kinetic::solver::{Simulation, SolverConfig};

fn main() -> kinetic::Result<()> {
    let mut args = std::env::args().skip(1);
    let h: usize = args.next().map_or(24, |s| s.parse().expect("width"));
    let kind: CollisionKind = args.next().map_or(CollisionKind::CmMrt, |s| s.parse().expect("model"));
    let (nu, u_c) = (0.1, 0.01);

    let mut faces = [Condition::Periodic; 6];
    faces[Face::NegY.index()] = Condition::NoSlip;
    faces[Face::PosY.index()] = Condition::NoSlip;
    let mut cfg = SolverConfig::new(CollisionModel::new(kind, nu)?, BoundarySet::new(faces)?);
    // Walls sit halfway between nodes, so the channel is h cells wide.
    let half = h as f64 / 2.0;
    let g = 2.0 * nu * u_c / (half * half);
    cfg.body_force = [g, 0.0, 0.0];
    let dims = Dims::new(4, h, 4);
    let mut sim = Simulation::new(dims, cfg, 8)?;

    let profile = |sim: &Simulation| -> Vec<f64> {
        let (_, u) = sim.fields();
        (0..h).map(|y| u[dims.node_index(0, y, 0)][0]).collect()
    };
    let mut prev = profile(&sim);
    let mut steps = 0;
    loop {
        sim.run(200)?;
        steps += 200;
        let p = profile(&sim);
        let change = p.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = p;
        if change < 1e-10 || steps >= 100_000 {
            break;
        }
    }

    println!("{kind}, width {h}, steady after {steps} steps");
    println!("{:>3} {:>12} {:>12}  profile", "y", "u", "exact");
    let mut worst = 0.0f64;
    for (y, u) in prev.iter().enumerate() {
        let yc = y as f64 + 0.5;
        let exact = g / (2.0 * nu) * yc * (h as f64 - yc);
        worst = worst.max((u - exact).abs() / u_c);
        let bar = "#".repeat((40.0 * u / u_c).round().max(0.0) as usize);
        println!("{y:>3} {u:>12.6e} {exact:>12.6e}  {bar}");
    }
    println!("max error {:.4}% of centreline speed", 100.0 * worst);
    Ok(())
}
