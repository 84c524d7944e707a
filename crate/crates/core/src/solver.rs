//! Time stepping: pull streaming, face passes, moments, immersed-boundary
//! forcing and collision over layout-aware stores.
//!
//! A step runs
//! `stream -> face passes -> moments + force reset -> IB -> collision + G -> swap`.
//! The face passes sit right after streaming because they fill the
//! populations whose pull source is outside the domain and the moments need
//! them.

use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundarySet;
use crate::collision::batch::{collide_batch, NodeBatch, LANES};
use crate::collision::{equilibrium, MACH_LIMIT, finish_from_intermediate, relax, CollisionModel};
use crate::error::{Error, Result};
use crate::ib::{self, Accumulation, IbReport, Solid};
use crate::lattice::{Q, SPLIT_INDEX, VELOCITIES, VELOCITIES_F64, WEIGHTS};
use crate::layout::{convert_layout, Dims, DoubleBuffer, FieldStore, LayoutParams};

/// Owned z-range of the global grid, optionally framed by one ghost plane on
/// each side. A plain single-domain run uses the whole grid without ghosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slab {
    pub global: Dims,
    pub z0: usize,
    pub z1: usize,
    pub ghosts: bool,
}

impl Slab {
    pub fn whole(global: Dims) -> Self {
        Slab {
            global,
            z0: 0,
            z1: global.nz,
            ghosts: false,
        }
    }

    pub fn region(global: Dims, z0: usize, z1: usize) -> Self {
        Slab {
            global,
            z0,
            z1,
            ghosts: true,
        }
    }

    #[inline]
    fn g(&self) -> usize {
        self.ghosts as usize
    }

    pub fn storage_dims(&self) -> Dims {
        Dims::new(self.global.nx, self.global.ny, self.z1 - self.z0 + 2 * self.g())
    }

    pub fn owned_nodes(&self) -> usize {
        self.global.plane() * (self.z1 - self.z0)
    }

    /// Storage plane indices of owned planes.
    pub fn owned_planes(&self) -> Range<usize> {
        self.g()..self.g() + self.z1 - self.z0
    }

    #[inline]
    pub fn global_z(&self, lz: usize) -> i64 {
        lz as i64 - self.g() as i64 + self.z0 as i64
    }

    /// Storage plane holding global plane `gz`, trying the periodic images
    /// `gz +- nz` when `gz` itself is not stored.
    #[inline]
    pub fn local_z(&self, gz: i64) -> Option<usize> {
        let lo = self.z0 as i64 - self.g() as i64;
        let hi = self.z1 as i64 + self.g() as i64;
        let nz = self.global.nz as i64;
        [gz, gz - nz, gz + nz]
            .into_iter()
            .find(|z| *z >= lo && *z < hi)
            .map(|z| (z - lo) as usize)
    }

    /// Storage node index of global `(x, y, gz)`.
    #[inline]
    pub fn storage_index(&self, x: usize, y: usize, gz: i64) -> Option<usize> {
        let lz = self.local_z(gz)?;
        Some((lz * self.global.ny + y) * self.global.nx + x)
    }

    /// Storage index of an owned node; panics otherwise.
    #[inline]
    pub fn owned_index(&self, x: usize, y: usize, gz: usize) -> usize {
        assert!(gz >= self.z0 && gz < self.z1, "plane {gz} not owned");
        ((gz - self.z0 + self.g()) * self.global.ny + y) * self.global.nx + x
    }

    pub fn owns_z(&self, gz: usize) -> bool {
        gz >= self.z0 && gz < self.z1
    }
}

/// Double-buffered distributions plus macroscopic fields, all in storage
/// indexing of a [`Slab`].
#[derive(Debug, Clone)]
pub struct SimState {
    pub slab: Slab,
    pub f: DoubleBuffer,
    pub rho: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub g: Vec<[f64; 3]>,
    pub t: u64,
    scratch: Option<FieldStore>,
}

impl SimState {
    /// A slab of fluid at rest at unit density.
    pub fn new(slab: Slab, alpha: usize) -> Result<Self> {
        let n = slab.storage_dims().len();
        let layout = LayoutParams::new(alpha, Q, n)?;
        let mut state = SimState {
            slab,
            f: DoubleBuffer::new(layout),
            rho: vec![1.0; n],
            u: vec![[0.0; 3]; n],
            g: vec![[0.0; 3]; n],
            t: 0,
            scratch: None,
        };
        state.init_equilibrium(|_, _, _| (1.0, [0.0; 3]));
        Ok(state)
    }

    pub fn layout(&self) -> &LayoutParams {
        self.f.current.layout()
    }

    /// Sets every stored node (ghosts included) to `f_eq(rho, u)` given per
    /// global coordinate.
    pub fn init_equilibrium<F>(&mut self, field: F)
    where
        F: Fn(usize, usize, usize) -> (f64, [f64; 3]) + Sync,
    {
        let sd = self.slab.storage_dims();
        let nz = self.slab.global.nz as i64;
        for lz in 0..sd.nz {
            let gz = self.slab.global_z(lz).rem_euclid(nz) as usize;
            for y in 0..sd.ny {
                for x in 0..sd.nx {
                    let k = sd.node_index(x, y, lz);
                    let (r, u) = field(x, y, gz);
                    self.f.current.write_node(k, &equilibrium(r, u));
                    self.rho[k] = r;
                    self.u[k] = u;
                }
            }
        }
        self.f.next = self.f.current.clone();
    }

    pub fn set_alpha(&mut self, alpha: usize) -> Result<()> {
        let layout = LayoutParams::new(alpha, Q, self.layout().n_nodes())?;
        self.f.current = convert_layout(&self.f.current, layout)?;
        self.f.next = convert_layout(&self.f.next, layout)?;
        self.scratch = None;
        Ok(())
    }

    /// Density and velocity of the current distributions at owned nodes, in
    /// global x-fastest order of the owned slab.
    pub fn fields(&self) -> (Vec<f64>, Vec<[f64; 3]>) {
        let n = self.slab.owned_nodes();
        let plane = self.slab.global.plane();
        let first = self.slab.owned_planes().start * plane;
        let mut rho = vec![0.0; n];
        let mut u = vec![[0.0; 3]; n];
        let mut buf = [0.0; Q];
        for j in 0..n {
            self.f.current.read_node(first + j, &mut buf);
            let (r, v) = node_moments(&buf);
            rho[j] = r;
            u[j] = v;
        }
        (rho, u)
    }

    /// Current distributions of owned nodes in canonical order.
    pub fn owned_distributions(&self) -> Vec<f64> {
        let n = self.slab.owned_nodes();
        let first = self.slab.owned_planes().start * self.slab.global.plane();
        let mut out = vec![0.0; n * Q];
        for j in 0..n {
            self.f.current.read_node(first + j, &mut out[j * Q..(j + 1) * Q]);
        }
        out
    }
}

/// `rho = sum f`, `u = sum c f / rho`.
#[inline]
pub fn node_moments(f: &[f64; Q]) -> (f64, [f64; 3]) {
    let mut rho = 0.0;
    let mut j = [0.0; 3];
    for i in 0..Q {
        rho += f[i];
        j[0] += VELOCITIES_F64[i][0] * f[i];
        j[1] += VELOCITIES_F64[i][1] * f[i];
        j[2] += VELOCITIES_F64[i][2] * f[i];
    }
    (rho, [j[0] / rho, j[1] / rho, j[2] / rho])
}

/// First-moment forcing `G_i = w_i (c_i . g) / c_s^2`. The velocity is not used
/// by this scheme.
#[inline]
pub fn forcing_term(g: [f64; 3], _u: [f64; 3]) -> [f64; Q] {
    let mut out = [0.0; Q];
    if g == [0.0; 3] {
        return out;
    }
    for i in 0..Q {
        let c = VELOCITIES_F64[i];
        out[i] = WEIGHTS[i] * (c[0] * g[0] + c[1] * g[1] + c[2] * g[2]) * 3.0;
    }
    out
}

/// Pull streaming over a whole grid: `f_out_i(x) = f_prev_i(x - c_i)` wherever
/// the source is inside the grid. Other slots are left as they are.
pub fn stream(f_prev: &FieldStore, f_out: &mut FieldStore, dims: Dims) {
    stream_slab(&Slab::whole(dims), f_prev, f_out, None);
}

/// Owned-range views of the macroscopic fields filled by the moment sweeps.
struct MomentTarget<'a> {
    rho: &'a mut [f64],
    u: &'a mut [[f64; 3]],
    g: &'a mut [[f64; 3]],
    body_force: [f64; 3],
}

impl<'a> MomentTarget<'a> {
    fn new(state: &'a mut SimState, body_force: [f64; 3]) -> (MomentTarget<'a>, &'a mut DoubleBuffer, Slab) {
        let slab = state.slab;
        let plane = slab.global.plane();
        let owned = slab.owned_planes();
        let range = owned.start * plane..owned.end * plane;
        (
            MomentTarget {
                rho: &mut state.rho[range.clone()],
                u: &mut state.u[range.clone()],
                g: &mut state.g[range],
                body_force,
            },
            &mut state.f,
            slab,
        )
    }
}

/// Running totals behind [`MomentStats`] and the divergence check.
#[derive(Debug, Clone, Copy)]
struct Tally {
    mach: u64,
    min_rho: f64,
    bad: bool,
}

impl Tally {
    const EMPTY: Tally = Tally {
        mach: 0,
        min_rho: f64::INFINITY,
        bad: false,
    };

    fn merge(self, o: Tally) -> Tally {
        Tally {
            mach: self.mach + o.mach,
            min_rho: self.min_rho.min(o.min_rho),
            bad: self.bad || o.bad,
        }
    }

    fn record(&mut self, r: f64, v: [f64; 3]) {
        if !(r.is_finite() && v.iter().all(|c| c.is_finite())) {
            self.bad = true;
        }
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] >= MACH_LIMIT * MACH_LIMIT {
            self.mach += 1;
        }
        self.min_rho = self.min_rho.min(r);
    }

    fn finish(self, step: u64) -> Result<MomentStats> {
        if self.bad {
            return Err(Error::Diverged {
                step,
                reason: "non-finite density or velocity".into(),
            });
        }
        if self.min_rho <= 0.0 {
            return Err(Error::Diverged {
                step,
                reason: format!("density {} <= 0", self.min_rho),
            });
        }
        Ok(MomentStats {
            mach_warnings: self.mach,
            min_rho: self.min_rho,
        })
    }
}

/// Moments of nodes `k0..k0 + rho.len()` read through `get(offset)`, with the
/// per-node operation order of [`node_moments`]. Runs inside one CSoA group
/// are processed together so the component reads are contiguous.
#[inline(always)]
fn run_moments<F: Fn(usize) -> f64>(lay: &LayoutParams, k0: usize, rho: &mut [f64], u: &mut [[f64; 3]], get: F) {
    const W: usize = 8;
    let n = rho.len();
    let alpha = lay.alpha();
    let mut j = 0;
    while j < n {
        let k = k0 + j;
        let len = lay.run_len(k, k0 + n).min(W);
        let base = lay.node_base(k);
        let mut r = [0.0; W];
        let mut v = [[0.0; W]; 3];
        for i in 0..Q {
            let c = VELOCITIES_F64[i];
            let o = base + i * alpha;
            let mut fi = [0.0; W];
            for (l, x) in fi.iter_mut().enumerate().take(len) {
                *x = get(o + l);
            }
            for l in 0..W {
                r[l] += fi[l];
                v[0][l] += c[0] * fi[l];
                v[1][l] += c[1] * fi[l];
                v[2][l] += c[2] * fi[l];
            }
        }
        for l in 0..len {
            rho[j + l] = r[l];
            u[j + l] = [v[0][l] / r[l], v[1][l] / r[l], v[2][l] / r[l]];
        }
        j += len;
    }
}

/// Whether owned node `(x, y, gz)` lies on a face layer of the global grid and
/// can therefore be rewritten by a face pass.
#[inline]
fn on_face_layer(global: Dims, x: usize, y: usize, gz: i64) -> bool {
    x == 0 || y == 0 || gz == 0 || x + 1 == global.nx || y + 1 == global.ny || gz + 1 == global.nz as i64
}

/// Streams the owned planes of `slab`. With `moments`, each row's interior
/// nodes also get `rho`, `u` and the force reset while the row is in cache;
/// face-layer nodes are left to [`face_moments`] after the face passes.
fn stream_slab(slab: &Slab, src: &FieldStore, dst: &mut FieldStore, moments: Option<&mut MomentTarget>) -> Tally {
    let sd = slab.storage_dims();
    let (nx, ny) = (sd.nx, sd.ny);
    let nz = slab.global.nz as i64;
    let plane = sd.plane();
    let lay = *src.layout();
    assert_eq!(lay, *dst.layout(), "stream needs matching layouts");
    let alpha = lay.alpha();
    let data = src.raw();
    let out = dst.shared();
    let owned = slab.owned_planes();
    let first = owned.start;

    let stream_plane = |lz: usize, mut fields: Option<(&mut [f64], &mut [[f64; 3]], &mut [[f64; 3]], [f64; 3])>| {
        let gz = slab.global_z(lz);
        let mut tally = Tally::EMPTY;
        for y in 0..ny {
            let row = (lz * ny + y) * nx;
            for i in 0..Q {
                let c = VELOCITIES[i];
                let sy = y as i64 - c[1] as i64;
                let sz = gz - c[2] as i64;
                if sy < 0 || sy >= ny as i64 || sz < 0 || sz >= nz {
                    continue;
                }
                let x0 = c[0].max(0) as usize;
                let x1 = (nx as i64 + c[0].min(0) as i64) as usize;
                let delta = c[0] as isize + c[1] as isize * nx as isize + c[2] as isize * plane as isize;
                let mut x = x0;
                while x < x1 {
                    let k = row + x;
                    let ks = (k as isize - delta) as usize;
                    let end = row + x1;
                    let len = lay.run_len(k, end).min(lay.run_len(ks, ks + end - k));
                    let so = lay.node_base(ks) + i * alpha;
                    let o = lay.node_base(k) + i * alpha;
                    // SAFETY: the run belongs to nodes of this plane, written only by this task.
                    unsafe { out.copy_in(o, &data[so..so + len]) };
                    x += len;
                }
            }
            let Some((rho, u, g, body)) = fields.as_mut() else {
                continue;
            };
            if nx < 3 || on_face_layer(slab.global, 1, y, gz) {
                continue;
            }
            let (a, b) = (y * nx + 1, (y + 1) * nx - 1);
            // SAFETY: reads slots of this task's own row, already written above.
            run_moments(&lay, row + 1, &mut rho[a..b], &mut u[a..b], |o| unsafe { out.get_offset(o) });
            for j in a..b {
                g[j] = *body;
                tally.record(rho[j], u[j]);
            }
        }
        tally
    };

    match moments {
        None => {
            owned.into_par_iter().for_each(|lz| {
                stream_plane(lz, None);
            });
            Tally::EMPTY
        }
        Some(m) => {
            let body = m.body_force;
            m.rho
                .par_chunks_mut(plane)
                .zip(m.u.par_chunks_mut(plane))
                .zip(m.g.par_chunks_mut(plane))
                .enumerate()
                .map(|(p, ((rho, u), g))| stream_plane(first + p, Some((rho, u, g, body))))
                .reduce(|| Tally::EMPTY, Tally::merge)
        }
    }
}

/// Moments of owned face-layer nodes, read from `f` after the face passes.
fn face_moments(slab: &Slab, f: &FieldStore, m: &mut MomentTarget) -> Tally {
    let global = slab.global;
    let (nx, ny) = (global.nx, global.ny);
    let plane = global.plane();
    let first = slab.owned_planes().start;
    let lay = *f.layout();
    let data = f.raw();
    let body = m.body_force;
    m.rho
        .par_chunks_mut(plane)
        .zip(m.u.par_chunks_mut(plane))
        .zip(m.g.par_chunks_mut(plane))
        .enumerate()
        .map(|(p, ((rho, u), g))| {
            let lz = first + p;
            let gz = slab.global_z(lz);
            let mut tally = Tally::EMPTY;
            for y in 0..ny {
                let row = y * nx;
                let mut visit = |a: usize, b: usize| {
                    run_moments(&lay, lz * plane + a, &mut rho[a..b], &mut u[a..b], |o| data[o]);
                    for j in a..b {
                        g[j] = body;
                        tally.record(rho[j], u[j]);
                    }
                };
                if nx < 3 || on_face_layer(global, 1, y, gz) {
                    visit(row, row + nx);
                } else {
                    visit(row, row + 1);
                    visit(row + nx - 1, row + nx);
                }
            }
            tally
        })
        .reduce(|| Tally::EMPTY, Tally::merge)
}

/// Face passes of `bc` over the owned part of `slab`, reading `src` (pre-stream).
pub fn apply_boundaries(slab: &Slab, bc: &BoundarySet, src: &FieldStore, dst: &mut FieldStore) {
    let dims = slab.global;
    let read = |p: [usize; 3], j: usize| {
        let k = slab.storage_index(p[0], p[1], p[2] as i64).expect("boundary read outside storage");
        src.get(k, j)
    };
    let mut write = |p: [usize; 3], i: usize, v: f64| dst.set(slab.owned_index(p[0], p[1], p[2]), i, v);
    bc.apply_all(dims, slab.z0..slab.z1, &read, &mut write);
}

/// Collision evaluation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// One sweep computes all 27 outputs per node.
    #[default]
    Fused,
    /// A relaxation sweep stores intermediates, then two sweeps finish
    /// outputs `0..14` and `14..27`.
    Split,
}

/// Counters from one moments sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentStats {
    pub mach_warnings: u64,
    pub min_rho: f64,
}

/// `rho`, `u` from the post-stream distributions and `g` reset to the body
/// force, for owned nodes. Non-finite values or `rho <= 0` abort the step.
///
/// This is the plain full sweep; [`Simulation::step`] computes the same values
/// during streaming and a face-layer pass.
pub fn moments_phase(state: &mut SimState, body_force: [f64; 3]) -> Result<MomentStats> {
    let step = state.t;
    let (target, f, slab) = MomentTarget::new(state, body_force);
    let plane = slab.global.plane();
    let first = slab.owned_planes().start;
    let lay = *f.next.layout();
    let data = f.next.raw();
    let body = target.body_force;
    let tally = target
        .rho
        .par_chunks_mut(plane)
        .zip(target.u.par_chunks_mut(plane))
        .zip(target.g.par_chunks_mut(plane))
        .enumerate()
        .map(|(p, ((rho, u), g))| {
            run_moments(&lay, (first + p) * plane, rho, u, |o| data[o]);
            let mut tally = Tally::EMPTY;
            for j in 0..rho.len() {
                g[j] = body;
                tally.record(rho[j], u[j]);
            }
            tally
        })
        .reduce(|| Tally::EMPTY, Tally::merge);
    tally.finish(step)
}

/// `f = f* + Omega + G` at owned nodes, in place on `state.f.next`.
pub fn collide_phase(state: &mut SimState, model: &CollisionModel, schedule: Schedule) {
    let slab = state.slab;
    let plane = slab.global.plane();
    let planes: Vec<usize> = slab.owned_planes().collect();
    let rho = &state.rho;
    let u = &state.u;
    let g = &state.g;
    match schedule {
        Schedule::Fused => {
            let out = state.f.next.shared();
            let lay = *out.layout();
            let alpha = lay.alpha();
            planes.into_par_iter().for_each(|lz| {
                let mut b = NodeBatch::new();
                let end = (lz + 1) * plane;
                let mut k0 = lz * plane;
                while k0 < end {
                    let n = LANES.min(end - k0);
                    let contiguous = lay.run_len(k0, end) >= n;
                    let base: [usize; LANES] = std::array::from_fn(|l| lay.node_base(k0 + l.min(n - 1)));
                    for l in 0..n {
                        let k = k0 + l;
                        b.rho[l] = rho[k];
                        for a in 0..3 {
                            b.u[a][l] = u[k][a];
                            b.g[a][l] = g[k][a];
                        }
                    }
                    // SAFETY: one task per plane, node slots are disjoint.
                    unsafe {
                        for i in 0..Q {
                            if contiguous {
                                out.copy_out(base[0] + i * alpha, &mut b.f[i][..n]);
                            } else {
                                for l in 0..n {
                                    b.f[i][l] = out.get_offset(base[l] + i * alpha);
                                }
                            }
                        }
                    }
                    collide_batch(&mut b, model);
                    unsafe {
                        for i in 0..Q {
                            if contiguous {
                                out.copy_in(base[0] + i * alpha, &b.f[i][..n]);
                            } else {
                                for l in 0..n {
                                    out.set_offset(base[l] + i * alpha, b.f[i][l]);
                                }
                            }
                        }
                    }
                    k0 += n;
                }
            });
        }
        Schedule::Split => {
            let layout = *state.f.next.layout();
            if state.scratch.as_ref().map(|s| *s.layout()) != Some(layout) {
                state.scratch = Some(FieldStore::zeros(layout));
            }
            let scratch = state.scratch.as_mut().unwrap();
            let kind = model.kind;
            {
                let f = &state.f.next;
                let h = scratch.shared();
                planes.par_iter().for_each(|&lz| {
                    let mut buf = [0.0; Q];
                    for k in lz * plane..(lz + 1) * plane {
                        f.read_node(k, &mut buf);
                        let r = relax(&buf, rho[k], u[k], model);
                        // SAFETY: disjoint nodes per task.
                        unsafe { h.write_node(k, r.intermediate()) };
                    }
                });
            }
            let h = &*scratch;
            let out = state.f.next.shared();
            for range in [0..SPLIT_INDEX, SPLIT_INDEX..Q] {
                planes.par_iter().for_each(|&lz| {
                    let mut hb = [0.0; Q];
                    for k in lz * plane..(lz + 1) * plane {
                        h.read_node(k, &mut hb);
                        let gi = forcing_term(g[k], u[k]);
                        for i in range.clone() {
                            // SAFETY: disjoint nodes per task.
                            unsafe {
                                let fi = out.get(k, i);
                                out.set(k, i, fi + finish_from_intermediate(kind, &hb, u[k], i) + gi[i]);
                            }
                        }
                    }
                });
            }
        }
    }
}

/// Static description of the physics of a run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub model: CollisionModel,
    pub boundaries: BoundarySet,
    pub body_force: [f64; 3],
    pub schedule: Schedule,
    pub accumulation: Accumulation,
}

impl SolverConfig {
    pub fn new(model: CollisionModel, boundaries: BoundarySet) -> Self {
        SolverConfig {
            model,
            boundaries,
            body_force: [0.0; 3],
            schedule: Schedule::Fused,
            accumulation: Accumulation::Deterministic,
        }
    }
}

/// Phase names used in timing rows.
pub const PHASES: [&str; 5] = ["stream", "boundary", "moments", "ib", "collision"];

/// Per-phase wall times, one row per phase and step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingLog {
    pub rows: Vec<(String, u64, f64)>,
}

impl TimingLog {
    pub fn push(&mut self, phase: &str, step: u64, seconds: f64) {
        self.rows.push((phase.to_string(), step, seconds));
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, config_hash: &str) -> std::io::Result<()> {
        writeln!(w, "# config_hash={config_hash}")?;
        writeln!(w, "phase,step,seconds")?;
        for (p, s, t) in &self.rows {
            writeln!(w, "{p},{s},{t:.9}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path, config_hash: &str) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_csv(&mut f, config_hash).map_err(|e| Error::io(path, e))
    }

    pub fn total(&self, phase: &str) -> f64 {
        self.rows.iter().filter(|r| r.0 == phase).map(|r| r.2).sum()
    }
}

/// Records the wall time since the previous lap under a phase name.
pub struct PhaseClock<'a> {
    log: Option<&'a mut TimingLog>,
    step: u64,
    clock: Instant,
}

impl<'a> PhaseClock<'a> {
    pub fn new(log: Option<&'a mut TimingLog>, step: u64) -> Self {
        PhaseClock {
            log,
            step,
            clock: Instant::now(),
        }
    }

    pub fn lap(&mut self, phase: &str) {
        if let Some(t) = self.log.as_deref_mut() {
            t.push(phase, self.step, self.clock.elapsed().as_secs_f64());
        }
        self.clock = Instant::now();
    }
}

/// First half of a step on one slab: streaming, face passes and moments.
/// Leaves `f.next` post-stream and `rho`, `u`, `g` set at owned nodes.
pub fn step_front(state: &mut SimState, config: &SolverConfig, clock: &mut PhaseClock) -> Result<MomentStats> {
    let step = state.t;
    let slab = state.slab;
    let (mut target, f, _) = MomentTarget::new(state, config.body_force);
    let (cur, next) = f.split();
    let inner = stream_slab(&slab, cur, next, Some(&mut target));
    clock.lap("stream");
    apply_boundaries(&slab, &config.boundaries, cur, next);
    clock.lap("boundary");
    let faces = face_moments(&slab, next, &mut target);
    let moments = inner.merge(faces).finish(step);
    clock.lap("moments");
    moments
}

/// Second half of a step: IB forcing and collision in place on `f.next`.
/// The caller swaps buffers and advances `t`.
pub fn step_back(state: &mut SimState, config: &SolverConfig, solids: &mut [Solid], clock: &mut PhaseClock) -> IbReport {
    let slab = state.slab;
    let ib = ib::ib_phase(
        solids,
        &slab,
        &state.rho,
        &state.u,
        &mut state.g,
        state.t as f64,
        config.accumulation,
    );
    clock.lap("ib");
    collide_phase(state, &config.model, config.schedule);
    clock.lap("collision");
    ib
}

/// Outcome of one step.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub step: u64,
    pub moments: MomentStats,
    pub ib: IbReport,
}

/// A single-domain simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub state: SimState,
    pub config: SolverConfig,
    pub solids: Vec<Solid>,
    pub timing: Option<TimingLog>,
}

impl Simulation {
    pub fn new(dims: Dims, config: SolverConfig, alpha: usize) -> Result<Self> {
        config.model.validate()?;
        Ok(Simulation {
            state: SimState::new(Slab::whole(dims), alpha)?,
            config,
            solids: Vec::new(),
            timing: None,
        })
    }

    pub fn dims(&self) -> Dims {
        self.state.slab.global
    }

    pub fn with_timing(mut self) -> Self {
        self.timing = Some(TimingLog::default());
        self
    }

    pub fn add_solid(&mut self, solid: Solid) {
        self.solids.push(solid);
    }

    pub fn set_ell(&mut self, ell: usize) {
        for s in &mut self.solids {
            s.reorder(ell);
        }
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let step = self.state.t;
        let mut clock = PhaseClock::new(self.timing.as_mut(), step);
        let moments = step_front(&mut self.state, &self.config, &mut clock)?;
        let ib = step_back(&mut self.state, &self.config, &mut self.solids, &mut clock);
        self.state.f.swap();
        self.state.t += 1;
        Ok(StepReport { step, moments, ib })
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn fields(&self) -> (Vec<f64>, Vec<[f64; 3]>) {
        self.state.fields()
    }

    pub fn total_mass(&self) -> f64 {
        self.fields().0.iter().sum()
    }

    pub fn total_momentum(&self) -> [f64; 3] {
        let (rho, u) = self.fields();
        let mut m = [0.0; 3];
        for (r, v) in rho.iter().zip(&u) {
            for a in 0..3 {
                m[a] += r * v[a];
            }
        }
        m
    }
}
