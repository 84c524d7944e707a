//! Grouped (CSoA) storage: where components land for a few `alpha`, lossless
//! conversion between layouts, a dump round trip, and step time per layout.
//!
//!     cargo run --release --example layouts

use std::time::Instant;

use kinetic::boundary::BoundarySet;
use kinetic::collision::{CollisionKind, CollisionModel};
use kinetic::lattice::Q;
use kinetic::layout::{convert_layout, read_dump, remap_index, write_dump, Dims, FieldStore, LayoutParams};
use kinetic::solver::{Simulation, SolverConfig};

fn main() -> kinetic::Result<()> {
    let n = 10;
    println!("offset of (node k, component i) for {n} nodes, beta {Q}");
    println!("{:>8} {:>8} {:>8} {:>8} {:>8}", "alpha", "(0,0)", "(0,1)", "(1,0)", "(9,26)");
    for alpha in [1, 2, 4, n] {
        let p = LayoutParams::new(alpha, Q, n)?;
        let at = |k, i| remap_index(k, i, &p);
        println!("{alpha:>8} {:>8} {:>8} {:>8} {:>8}", at(0, 0), at(0, 1), at(1, 0), at(9, 26));
    }

    let nodes = 1000;
    let values: Vec<f64> = (0..nodes * Q).map(|v| v as f64 * 0.5).collect();
    let aos = FieldStore::from_aos(LayoutParams::aos(Q, nodes), &values)?;
    let mut store = aos.clone();
    for alpha in [8, 64, 3, nodes] {
        store = convert_layout(&store, LayoutParams::new(alpha, Q, nodes)?)?;
    }
    println!("\nAoS -> 8 -> 64 -> 3 -> SoA keeps every value: {}", store.to_aos() == values);

    let mut buf = Vec::new();
    write_dump(&mut buf, Dims::new(10, 10, 10), &store).map_err(|e| kinetic::Error::io("memory", e))?;
    let (header, back) = read_dump(&mut buf.as_slice()).expect("dump");
    println!("dump: {} bytes, header alpha {} dims {:?}, equal {}", buf.len(), header.alpha, header.dims, back.to_aos() == values);

    let dims = Dims::new(32, 32, 32);
    println!("\nmean step time on {}x{}x{}, CM-MRT", 32, 32, 32);
    let model = CollisionModel::new(CollisionKind::CmMrt, 0.02)?;
    for alpha in [1, 8, 32, 128, dims.len()] {
        let mut sim = Simulation::new(dims, SolverConfig::new(model.clone(), BoundarySet::periodic()), alpha)?;
        sim.state.init_equilibrium(|x, _, _| (1.0, [0.02 * (x as f64 * 0.2).sin(), 0.0, 0.0]));
        sim.run(2)?;
        let t = Instant::now();
        sim.run(10)?;
        println!("  alpha {alpha:>6}: {:.2} ms", t.elapsed().as_secs_f64() * 100.0);
    }
    Ok(())
}
