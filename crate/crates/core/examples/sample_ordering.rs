//! Surface sampling of a bumpy sphere and the block/Morton storage order.
//! Shows how many samples neighbour each other in memory for several block
//! edges, and the work of scatter-style against gather-style force spreading.
//!
//!     cargo run --release --example sample_ordering -- [out.txt]

use kinetic::ib::sampling::{expected_count, min_pair_distance};
use kinetic::ib::{gather_forces, scatter_loop_counts, PoissonMethod, RigidMotion, Solid, TriMesh};
use kinetic::layout::Dims;

/// Fraction of consecutive stored samples whose base cells are at most one
/// cell apart on every axis.
fn locality(positions: &[[f64; 3]]) -> f64 {
    let near = positions
        .windows(2)
        .filter(|w| (0..3).all(|a| (w[0][a].floor() - w[1][a].floor()).abs() <= 1.0))
        .count();
    near as f64 / (positions.len() - 1) as f64
}

fn main() -> kinetic::Result<()> {
    let dims = Dims::new(40, 40, 40);
    let c = [19.5; 3];
    let mesh = TriMesh::bumpy_sphere(c, 13.0, 0.3, 6.0, 96);
    let (mut solid, rep) = Solid::from_mesh("bumpy", &mesh, 0.17, 11, PoissonMethod::DartThrowing, RigidMotion::fixed(c));
    println!(
        "{} triangles, area {:.1}: {} samples ({:.0} expected), min distance {:.3}",
        mesh.triangles.len(),
        rep.area,
        rep.samples,
        expected_count(rep.area, 0.17),
        min_pair_distance(&solid.samples.positions)
    );
    println!("samples per occupied cell: min {} mean {:.1} max {}", rep.per_cell.0, rep.per_cell.1, rep.per_cell.2);

    println!("\nstored order locality (neighbouring cells):");
    println!("  sampling order  {:.3}", locality(&solid.samples.positions));
    for ell in [1, 2, 4, 8, 16] {
        let mut s = solid.clone();
        s.reorder(ell);
        println!("  block edge {ell:>3}  {:.3}", locality(&s.samples.positions));
    }

    solid.reorder(4);
    for f in &mut solid.samples.penalty_force {
        *f = [1.0, 0.0, 0.0];
    }
    let scatter: u64 = scatter_loop_counts(&solid.samples, dims).iter().map(|&v| v as u64).sum();
    let (_, gather) = gather_forces(&solid.samples, dims);
    let gather: u64 = gather.iter().map(|&v| v as u64).sum();
    let touched = dims.len();
    println!("\nspreading work: scatter {scatter} corner updates, gather {gather} sample visits over {touched} nodes");

    if let Some(path) = std::env::args().nth(1) {
        let mut f = std::fs::File::create(&path).map_err(|e| kinetic::Error::io(&path, e))?;
        solid.samples.write_samples(&mut f).map_err(|e| kinetic::Error::io(&path, e))?;
        println!("wrote {path}");
    }
    Ok(())
}
