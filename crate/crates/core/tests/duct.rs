use kinetic::boundary::{BoundarySet, Condition, Face};
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::layout::Dims;
use kinetic::solver::{Simulation, SolverConfig};

fn flux(sim: &Simulation, x: usize) -> f64 {
    let d = sim.dims();
    let (rho, u) = sim.fields();
    let mut s = 0.0;
    for z in 0..d.nz {
        for y in 0..d.ny {
            let k = d.node_index(x, y, z);
            s += rho[k] * u[k][0];
        }
    }
    s
}

/// Inlet and outflow faces sharing edges with no-slip walls must neither
/// drain the duct nor accelerate it.
///
/// Nothing here fixes the pressure: the outflow copies its neighbour and the
/// inlet only sets incoming populations at unit density. Wall friction
/// therefore slowly brakes the flow while density rises towards the level at
/// which the inlet's net inflow vanishes. The bounds allow that drift but not
/// a leak.
#[test]
fn walled_duct_neither_drains_nor_runs_away() {
    let dims = Dims::new(24, 12, 12);
    let mut faces = [Condition::NoSlip; 6];
    faces[Face::NegX.index()] = Condition::Inlet { velocity: [0.05, 0.0, 0.0], radius: None };
    faces[Face::PosX.index()] = Condition::Outflow;
    let cfg = SolverConfig::new(CollisionModel::new(CollisionKind::CmMrt, 0.02).unwrap(), BoundarySet::new(faces).unwrap());
    let mut sim = Simulation::new(dims, cfg, 16).unwrap();
    sim.state.init_equilibrium(|_, _, _| (1.0, [0.0; 3]));
    let mut last = sim.total_mass();
    for _ in 0..5 {
        sim.run(200).unwrap();
        let m = sim.total_mass();
        assert!(m >= last, "mass fell from {last} to {m}");
        last = m;
        assert!(flux(&sim, 1) > 0.0 && flux(&sim, dims.nx - 2) > 0.0);
        let (rho, u) = sim.fields();
        assert!(rho.iter().all(|r| (0.98..1.2).contains(r)), "density out of band");
        let umax = u.iter().map(|v| v[0].abs().max(v[1].abs()).max(v[2].abs())).fold(0.0, f64::max);
        assert!(umax < 0.08, "velocity {umax}");
    }
}
