//! Decaying Taylor-Green vortex on a periodic box, one run per collision
//! model. Prints the measured kinetic-energy decay rate next to the viscous
//! prediction `4 nu k^2`.
//!
//!     cargo run --release --example taylor_green -- [n] [nu]

use std::f64::consts::PI;

use kinetic::boundary::BoundarySet;
use kinetic::collision::{AdaptivePolicy, CollisionKind, CollisionModel};
use kinetic::layout::Dims;
use kinetic::solver::{Simulation, SolverConfig};

fn energy(sim: &Simulation) -> f64 {
    let (rho, u) = sim.fields();
    rho.iter().zip(&u).map(|(r, v)| 0.5 * r * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).sum()
}

fn main() -> kinetic::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(32, |s| s.parse().expect("n"));
    let nu: f64 = args.next().map_or(0.02, |s| s.parse().expect("nu"));
    let (u0, k) = (0.02, 2.0 * PI / n as f64);
    let steps = (0.5 / (nu * k * k)) as u64;
    let expected = 4.0 * nu * k * k;

    let models = [
        (CollisionKind::Bgk, AdaptivePolicy::Constant),
        (CollisionKind::RmMrt, AdaptivePolicy::Constant),
        (CollisionKind::CmMrt, AdaptivePolicy::Constant),
        (CollisionKind::CmMrt, AdaptivePolicy::activity()),
    ];
    println!("{n}x{n}x4, nu {nu}, {steps} steps, expected rate {expected:.4e}");
    for (kind, policy) in models {
        let model = CollisionModel::new(kind, nu)?.with_policy(policy);
        let mut sim = Simulation::new(Dims::new(n, n, 4), SolverConfig::new(model, BoundarySet::periodic()), 64)?;
        sim.state.init_equilibrium(|x, y, _| {
            let (x, y) = (x as f64, y as f64);
            let rho = 1.0 - 0.75 * u0 * u0 * ((2.0 * k * x).cos() + (2.0 * k * y).cos());
            (rho, [-u0 * (k * x).cos() * (k * y).sin(), u0 * (k * x).sin() * (k * y).cos(), 0.0])
        });
        // Skip the initial acoustic transient.
        sim.run(steps / 10)?;
        let e0 = energy(&sim);
        sim.run(steps - steps / 10)?;
        let rate = (e0 / energy(&sim)).ln() / (steps - steps / 10) as f64;
        println!(
            "{:>7} {:>8}  rate {rate:.4e}  error {:.2}%",
            kind.name(),
            policy.name(),
            100.0 * (rate - expected).abs() / expected
        );
    }
    Ok(())
}
