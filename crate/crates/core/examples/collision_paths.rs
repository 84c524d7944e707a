//! The collision operator through its independent routes: the factorized
//! shift-and-relax path used by the solver, the dense matrix reference, the
//! precomputed monomial table and the two-pass split. Prints their largest
//! disagreement and per-node cost.
//!
//!     cargo run --release --example collision_paths

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinetic::collision::{
    build_monomial_table, collide, collide_dense, collide_split, collide_table, equilibrium, AdaptivePolicy,
    CollisionKind, CollisionModel, SplitPass,
};
use kinetic::lattice::Q;
use kinetic::solver::node_moments;

fn main() -> kinetic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<[f64; Q]> = (0..2000)
        .map(|_| {
            let u = [rng.gen_range(-0.08..0.08), rng.gen_range(-0.08..0.08), rng.gen_range(-0.08..0.08)];
            let mut f = equilibrium(rng.gen_range(0.95..1.05), u);
            for v in &mut f {
                *v *= 1.0 + rng.gen_range(-0.02..0.02);
            }
            f
        })
        .collect();

    let models = [
        CollisionModel::new(CollisionKind::Bgk, 0.01)?,
        CollisionModel::new(CollisionKind::RmMrt, 0.01)?,
        CollisionModel::new(CollisionKind::CmMrt, 0.01)?,
        CollisionModel::new(CollisionKind::CmMrt, 0.01)?.with_policy(AdaptivePolicy::activity()),
    ];
    println!("{:>16} {:>11} {:>11} {:>11}   ns/node fact dense table", "model", "dense", "table", "split");
    for model in &models {
        let table = build_monomial_table(model);
        let mut worst = [0.0f64; 3];
        let mut times = [0.0; 3];
        for f in &states {
            let (rho, u) = node_moments(f);
            let reference = collide(f, rho, u, model);
            let dense = collide_dense(f, rho, u, model)?;
            let tab = collide_table(&table, f, rho, u, model);
            let mut split = collide_split(f, rho, u, model, SplitPass::First);
            split.extend(collide_split(f, rho, u, model, SplitPass::Second));
            for i in 0..Q {
                worst[0] = worst[0].max((dense[i] - reference[i]).abs());
                worst[1] = worst[1].max((tab[i] - reference[i]).abs());
                worst[2] = worst[2].max((split[i] - reference[i]).abs());
            }
        }
        for (slot, route) in times.iter_mut().zip(0..3) {
            let t = Instant::now();
            let mut sink = 0.0;
            for f in &states {
                let (rho, u) = node_moments(f);
                sink += match route {
                    0 => collide(f, rho, u, model)[5],
                    1 => collide_dense(f, rho, u, model)?[5],
                    _ => collide_table(&table, f, rho, u, model)[5],
                };
            }
            std::hint::black_box(sink);
            *slot = t.elapsed().as_secs_f64() * 1e9 / states.len() as f64;
        }
        let name = format!("{} {}", model.kind.name(), model.policy.name());
        println!(
            "{name:>16} {:>11.2e} {:>11.2e} {:>11.2e}   {:>7.0} {:>5.0} {:>5.0}",
            worst[0], worst[1], worst[2], times[0], times[1], times[2]
        );
    }
    Ok(())
}
