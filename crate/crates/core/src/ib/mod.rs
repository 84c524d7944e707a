//! Immersed-boundary coupling through surface samples.
//!
//! Per step: place the samples on their trajectory, interpolate `u` and `rho`
//! with the 2x2x2 hat kernel, form the penalty force `rho (u_b - u)` and
//! scatter it back into the node force field.
//!
//! Each sample carries an area weight `dA`; the force deposited is
//! `K * dA * g_s`. With `dA = 1` this is the plain kernel spreading.

pub mod kernel;
pub mod mesh;
pub mod morton;
pub mod motion;
pub mod sampling;

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::layout::Dims;
use crate::solver::Slab;
pub use kernel::Stencil;
pub use mesh::TriMesh;
pub use morton::morton3;
pub use motion::RigidMotion;
pub use sampling::{sample_surface, PoissonMethod, SamplingReport};

/// How spread forces are summed into shared nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulation {
    /// Compare-and-swap adds from all samples at once. Summation order, and so
    /// the last bits, vary between runs.
    Atomic,
    /// Samples grouped by base cell; the eight parity classes of cells run one
    /// after another so concurrent cells never share a node. Samples inside a
    /// cell are summed in their original sampling order.
    #[default]
    Deterministic,
}

/// Surface samples of one solid, in stored order.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidSampleSet {
    pub positions: Vec<[f64; 3]>,
    pub boundary_velocity: Vec<[f64; 3]>,
    pub penalty_force: Vec<[f64; 3]>,
    /// `ordering[s]` is the original sampling index of stored sample `s`.
    pub ordering: Vec<usize>,
    pub block_edge: usize,
    pub bbox: ([f64; 3], [f64; 3]),
    /// Body-frame offsets from the motion centre.
    pub reference_positions: Vec<[f64; 3]>,
    /// `dA` per sample.
    pub area_weight: f64,
    pub interpolated_velocity: Vec<[f64; 3]>,
    pub interpolated_density: Vec<f64>,
    /// Samples whose support leaves the grid.
    pub flagged: Vec<bool>,
}

fn bbox_of(p: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in p {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    (lo, hi)
}

impl SolidSampleSet {
    pub fn new(positions: Vec<[f64; 3]>, center: [f64; 3], area_weight: f64) -> Self {
        let n = positions.len();
        let reference = positions
            .iter()
            .map(|p| [p[0] - center[0], p[1] - center[1], p[2] - center[2]])
            .collect();
        SolidSampleSet {
            bbox: bbox_of(&positions),
            positions,
            boundary_velocity: vec![[0.0; 3]; n],
            penalty_force: vec![[0.0; 3]; n],
            ordering: (0..n).collect(),
            block_edge: 1,
            reference_positions: reference,
            area_weight,
            interpolated_velocity: vec![[0.0; 3]; n],
            interpolated_density: vec![0.0; n],
            flagged: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Smallest bounding-box edge in cells spanned.
    pub fn min_edge_cells(&self) -> usize {
        let (lo, hi) = self.bbox;
        (0..3)
            .map(|a| (hi[a].floor() - lo[a].floor()) as usize + 1)
            .min()
            .unwrap_or(1)
    }

    /// Sort key of each stored sample for block edge `ell`.
    pub fn sort_keys(&self, ell: usize) -> Vec<(u64, u64)> {
        assert!(ell >= 1, "block edge must be >= 1");
        let (lo, hi) = bbox_of(&self.positions);
        let origin = [lo[0].floor() as i64, lo[1].floor() as i64, lo[2].floor() as i64];
        let mut nb = [1usize; 3];
        for a in 0..3 {
            let span = (hi[a].floor() as i64 - origin[a] + 1).max(1) as usize;
            nb[a] = span.div_ceil(ell);
        }
        self.positions
            .iter()
            .map(|p| {
                let cell = [p[0].floor() as i64, p[1].floor() as i64, p[2].floor() as i64];
                morton::block_key(cell, origin, ell, nb)
            })
            .collect()
    }

    /// Reorders every per-sample array by `(block, morton, original index)`.
    pub fn reorder(&mut self, ell: usize) {
        let keys = self.sort_keys(ell);
        let mut perm: Vec<usize> = (0..self.len()).collect();
        perm.sort_by_key(|&s| (keys[s], self.ordering[s]));
        fn apply<T: Copy>(v: &mut Vec<T>, perm: &[usize]) {
            *v = perm.iter().map(|&s| v[s]).collect();
        }
        apply(&mut self.positions, &perm);
        apply(&mut self.boundary_velocity, &perm);
        apply(&mut self.penalty_force, &perm);
        apply(&mut self.ordering, &perm);
        apply(&mut self.reference_positions, &perm);
        apply(&mut self.interpolated_velocity, &perm);
        apply(&mut self.interpolated_density, &perm);
        apply(&mut self.flagged, &perm);
        self.block_edge = ell;
        self.bbox = bbox_of(&self.positions);
    }

    /// Positions and boundary velocities on the trajectory at time `t`.
    pub fn update_rigid_motion(&mut self, motion: &RigidMotion, t: f64) {
        if motion.is_static() {
            self.boundary_velocity.iter_mut().for_each(|v| *v = [0.0; 3]);
            return;
        }
        let rot = motion.rotation_at(t);
        let c = motion.center_at(t);
        let refs = &self.reference_positions;
        self.positions
            .par_iter_mut()
            .zip(self.boundary_velocity.par_iter_mut())
            .zip(refs.par_iter())
            .for_each(|((p, ub), r)| {
                let q = rot * nalgebra::Vector3::from(*r);
                *p = [q[0] + c[0], q[1] + c[1], q[2] + c[2]];
                *ub = motion.velocity_at(*p, t);
            });
    }

    /// `u(x_s)` and `rho(x_s)` for every sample whose support is stored in
    /// `slab`. Samples whose support leaves the grid are flagged and skipped.
    pub fn interpolate_velocity(&mut self, slab: &Slab, rho: &[f64], u: &[[f64; 3]]) {
        let n = slab.global.as_array();
        let lo = slab.z0 as i64 - 1;
        let hi = slab.z1 as i64 - 1;
        self.positions
            .par_iter()
            .zip(self.interpolated_velocity.par_iter_mut())
            .zip(self.interpolated_density.par_iter_mut())
            .zip(self.flagged.par_iter_mut())
            .for_each(|(((p, us), rs), flag)| {
                let st = Stencil::new(*p);
                *flag = !st.inside(n);
                if *flag || st.base[2] < lo || st.base[2] > hi {
                    return;
                }
                let corners: [[f64; 4]; 8] = std::array::from_fn(|c| {
                    let (node, _) = st.corner(c);
                    let k = slab
                        .storage_index(node[0] as usize, node[1] as usize, node[2])
                        .expect("support outside slab storage");
                    [u[k][0], u[k][1], u[k][2], rho[k]]
                });
                let v = st.lerp(&corners);
                *us = [v[0], v[1], v[2]];
                *rs = v[3];
            });
    }

    /// `g_s = rho_s (u_b - u_s)`.
    pub fn penalty_forces(&mut self) {
        let ub = &self.boundary_velocity;
        let us = &self.interpolated_velocity;
        let rs = &self.interpolated_density;
        let fl = &self.flagged;
        self.penalty_force.par_iter_mut().enumerate().for_each(|(s, g)| {
            *g = if fl[s] {
                [0.0; 3]
            } else {
                [
                    rs[s] * (ub[s][0] - us[s][0]),
                    rs[s] * (ub[s][1] - us[s][1]),
                    rs[s] * (ub[s][2] - us[s][2]),
                ]
            };
        });
    }

    /// Whether `slab` processes stored sample `s`.
    fn processed_by(&self, s: usize, slab: &Slab) -> Option<Stencil> {
        if self.flagged[s] {
            return None;
        }
        let st = Stencil::new(self.positions[s]);
        (st.base[2] >= slab.z0 as i64 - 1 && st.base[2] < slab.z1 as i64).then_some(st)
    }

    /// Adds `K dA g_s` into `g` at owned nodes of `slab`.
    pub fn spread_forces(&self, slab: &Slab, g: &mut [[f64; 3]], mode: Accumulation) {
        match mode {
            Accumulation::Atomic => self.spread_atomic(slab, g),
            Accumulation::Deterministic => self.spread_colored(slab, g),
        }
    }

    fn deposit(&self, s: usize, st: &Stencil, slab: &Slab, mut add: impl FnMut(usize, [f64; 3])) {
        let f = self.penalty_force[s];
        let da = self.area_weight;
        let fw = [da * f[0], da * f[1], da * f[2]];
        for c in 0..8 {
            let (node, w) = st.corner(c);
            if !slab.owns_z(node[2] as usize) {
                continue;
            }
            let k = slab.owned_index(node[0] as usize, node[1] as usize, node[2] as usize);
            add(k, [w * fw[0], w * fw[1], w * fw[2]]);
        }
    }

    fn spread_atomic(&self, slab: &Slab, g: &mut [[f64; 3]]) {
        // SAFETY: AtomicU64 has the size and alignment of f64 on supported
        // targets, and `g` is exclusively borrowed for the duration.
        let cells: &[AtomicU64] = unsafe { std::slice::from_raw_parts(g.as_mut_ptr() as *const AtomicU64, g.len() * 3) };
        (0..self.len()).into_par_iter().for_each(|s| {
            if let Some(st) = self.processed_by(s, slab) {
                self.deposit(s, &st, slab, |k, v| {
                    for a in 0..3 {
                        atomic_add(&cells[3 * k + a], v[a]);
                    }
                });
            }
        });
    }

    fn spread_colored(&self, slab: &Slab, g: &mut [[f64; 3]]) {
        let d = slab.global;
        let mut items: Vec<(u8, u64, usize, usize, Stencil)> = (0..self.len())
            .filter_map(|s| {
                let st = self.processed_by(s, slab)?;
                let b = st.base;
                let color = ((b[0] & 1) | (b[1] & 1) << 1 | (b[2] & 1) << 2) as u8;
                let cell = ((b[2] as u64 * d.ny as u64) + b[1] as u64) * d.nx as u64 + b[0] as u64;
                Some((color, cell, self.ordering[s], s, st))
            })
            .collect();
        items.sort_unstable_by_key(|it| (it.0, it.1, it.2));
        let mut groups: Vec<(u8, std::ops::Range<usize>)> = Vec::new();
        let mut start = 0;
        for i in 1..=items.len() {
            if i == items.len() || (items[i].0, items[i].1) != (items[start].0, items[start].1) {
                groups.push((items[start].0, start..i));
                start = i;
            }
        }
        let ptr = SyncPtr(g.as_mut_ptr());
        let len = g.len();
        for color in 0..8u8 {
            groups.par_iter().filter(|(c, _)| *c == color).for_each(|(_, r)| {
                let ptr = &ptr;
                for it in &items[r.clone()] {
                    self.deposit(it.3, &it.4, slab, |k, v| {
                        assert!(k < len);
                        // SAFETY: cells of one parity class have disjoint supports.
                        unsafe {
                            let cell = &mut *ptr.0.add(k);
                            cell[0] += v[0];
                            cell[1] += v[1];
                            cell[2] += v[2];
                        }
                    });
                }
            });
        }
    }

    /// Fluid reaction on the solid: `-sum dA g_s` and `-sum (x_s - c) x dA g_s`,
    /// over samples whose base cell lies in the owned slab.
    pub fn total_force_and_torque(&self, center: [f64; 3], slab: &Slab) -> ([f64; 3], [f64; 3]) {
        let mut f = [0.0; 3];
        let mut tq = [0.0; 3];
        for s in 0..self.len() {
            let Some(st) = self.processed_by(s, slab) else { continue };
            if !slab.owns_z(st.base[2].max(0) as usize) {
                continue;
            }
            let g = self.penalty_force[s];
            let da = self.area_weight;
            let gw = [da * g[0], da * g[1], da * g[2]];
            let p = self.positions[s];
            let r = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
            for a in 0..3 {
                f[a] -= gw[a];
            }
            tq[0] -= r[1] * gw[2] - r[2] * gw[1];
            tq[1] -= r[2] * gw[0] - r[0] * gw[2];
            tq[2] -= r[0] * gw[1] - r[1] * gw[0];
        }
        (f, tq)
    }

    /// Sample dump: `count ell`, then `x y z ux uy uz` per stored sample.
    pub fn write_samples<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.block_edge)?;
        for (p, v) in self.positions.iter().zip(&self.boundary_velocity) {
            writeln!(w, "{} {} {} {} {} {}", p[0], p[1], p[2], v[0], v[1], v[2])?;
        }
        Ok(())
    }
}

struct SyncPtr(*mut [f64; 3]);
unsafe impl Sync for SyncPtr {}
unsafe impl Send for SyncPtr {}

#[inline]
fn atomic_add(cell: &AtomicU64, v: f64) {
    let mut cur = cell.load(Ordering::Relaxed);
    loop {
        let next = (f64::from_bits(cur) + v).to_bits();
        match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return,
            Err(x) => cur = x,
        }
    }
}

/// A sampled solid on a prescribed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Solid {
    pub name: String,
    pub samples: SolidSampleSet,
    pub motion: RigidMotion,
}

impl Solid {
    /// Samples `mesh` and weights each sample by `area / count`.
    pub fn from_mesh(
        name: impl Into<String>,
        mesh: &TriMesh,
        radius: f64,
        seed: u64,
        method: PoissonMethod,
        motion: RigidMotion,
    ) -> (Self, SamplingReport) {
        let (pts, rep) = sample_surface(mesh, radius, seed, method);
        let da = if pts.is_empty() { 0.0 } else { rep.area / pts.len() as f64 };
        let solid = Solid {
            name: name.into(),
            samples: SolidSampleSet::new(pts, motion.center, da),
            motion,
        };
        (solid, rep)
    }

    pub fn reorder(&mut self, ell: usize) {
        self.samples.reorder(ell);
    }
}

/// Per-step IB totals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IbReport {
    pub force: [f64; 3],
    pub torque: [f64; 3],
    pub flagged: usize,
}

/// Full IB treatment for all solids on one slab; adds into `g`.
pub fn ib_phase(
    solids: &mut [Solid],
    slab: &Slab,
    rho: &[f64],
    u: &[[f64; 3]],
    g: &mut [[f64; 3]],
    t: f64,
    mode: Accumulation,
) -> IbReport {
    let mut rep = IbReport::default();
    for solid in solids.iter_mut() {
        let set = &mut solid.samples;
        set.update_rigid_motion(&solid.motion, t);
        set.interpolate_velocity(slab, rho, u);
        set.penalty_forces();
        set.spread_forces(slab, g, mode);
        let (f, tq) = set.total_force_and_torque(solid.motion.center_at(t), slab);
        for a in 0..3 {
            rep.force[a] += f[a];
            rep.torque[a] += tq[a];
        }
        rep.flagged += set.flagged.iter().filter(|f| **f).count();
    }
    rep
}

/// Reference spreading by gathering: every node loops over the samples of its
/// eight adjacent cells. Returns per-node forces (excluding any body force)
/// and the number of samples each node visited.
pub fn gather_forces(set: &SolidSampleSet, dims: Dims) -> (Vec<[f64; 3]>, Vec<u32>) {
    let n = dims.as_array();
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for s in 0..set.len() {
        let st = Stencil::new(set.positions[s]);
        if st.inside(n) {
            buckets.entry(st.base).or_default().push(s);
        }
    }
    let plane = dims.plane();
    let rows: Vec<(Vec<[f64; 3]>, Vec<u32>)> = (0..dims.nz)
        .into_par_iter()
        .map(|z| {
            let mut g = vec![[0.0; 3]; plane];
            let mut loops = vec![0u32; plane];
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    let j = y * dims.nx + x;
                    let node = [x as f64, y as f64, z as f64];
                    for dz in 0..2i64 {
                        for dy in 0..2i64 {
                            for dx in 0..2i64 {
                                let key = [x as i64 - dx, y as i64 - dy, z as i64 - dz];
                                let Some(list) = buckets.get(&key) else { continue };
                                for &s in list {
                                    loops[j] += 1;
                                    let w = kernel::weight(set.positions[s], node);
                                    let f = set.penalty_force[s];
                                    for a in 0..3 {
                                        g[j][a] += w * set.area_weight * f[a];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            (g, loops)
        })
        .collect();
    let mut g = Vec::with_capacity(dims.len());
    let mut loops = Vec::with_capacity(dims.len());
    for (a, b) in rows {
        g.extend(a);
        loops.extend(b);
    }
    (g, loops)
}

/// Loop iterations of the scattering kernel per sample, counted by running
/// its corner loop.
pub fn scatter_loop_counts(set: &SolidSampleSet, dims: Dims) -> Vec<u32> {
    let n = dims.as_array();
    set.positions
        .par_iter()
        .filter_map(|p| {
            let st = Stencil::new(*p);
            st.inside(n).then(|| (0..8).map(|c| st.corner(c)).count() as u32)
        })
        .collect()
}
