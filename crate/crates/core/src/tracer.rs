//! Passive smoke tracers: emitted in boxes, carried by the interpolated fluid
//! velocity, deposited into a density volume. They never feed back into the
//! flow.
//!
//! The domain is the node hull `[0, n - 1]` on each axis, so every live
//! particle's 2x2x2 stencil lies on the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::TracerConfig;
use crate::ib::Stencil;
use crate::layout::Dims;

/// Box emitter with a fractional per-step rate.
#[derive(Debug, Clone)]
pub struct Emitter {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub rate: f64,
    carry: f64,
    rng: ChaCha8Rng,
}

impl Emitter {
    pub fn new(lo: [f64; 3], hi: [f64; 3], rate: f64, seed: u64) -> Self {
        Emitter {
            lo,
            hi,
            rate,
            carry: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_config(c: &TracerConfig) -> Self {
        Self::new(c.lo, c.hi, c.rate, c.seed)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TracerCloud {
    pub positions: Vec<[f64; 3]>,
    /// Steps since emission.
    pub ages: Vec<u64>,
    pub emitters: Vec<Emitter>,
    /// Particles emitted and retired so far.
    pub emitted: u64,
    pub retired: u64,
}

fn in_domain(p: [f64; 3], dims: Dims) -> bool {
    let n = dims.as_array();
    (0..3).all(|a| p[a] >= 0.0 && p[a] <= (n[a] - 1) as f64)
}

/// Velocity at `p` by trilinear interpolation of node values. Corners beyond
/// the grid carry zero weight for in-domain points; they repeat the base node.
pub fn interpolate(u: &[[f64; 3]], dims: Dims, p: [f64; 3]) -> [f64; 3] {
    let st = Stencil::new(p);
    let n = dims.as_array();
    st.lerp(&std::array::from_fn(|c| {
        let (node, _) = st.corner(c);
        let at = |a: usize| node[a].clamp(0, n[a] as i64 - 1) as usize;
        u[dims.node_index(at(0), at(1), at(2))]
    }))
}

impl TracerCloud {
    pub fn new(emitters: Vec<Emitter>) -> Self {
        TracerCloud {
            emitters,
            ..Default::default()
        }
    }

    pub fn from_config(cfgs: &[TracerConfig]) -> Self {
        Self::new(cfgs.iter().map(Emitter::from_config).collect())
    }

    /// Places particles directly, e.g. for tests. Out-of-domain ones are kept
    /// until the next advection.
    pub fn with_particles(positions: Vec<[f64; 3]>) -> Self {
        let n = positions.len();
        TracerCloud {
            positions,
            ages: vec![0; n],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Adds this step's particles from every emitter, uniformly in its box.
    pub fn emit(&mut self, dims: Dims) {
        for e in &mut self.emitters {
            e.carry += e.rate;
            let n = e.carry.floor();
            e.carry -= n;
            for _ in 0..n as u64 {
                let p: [f64; 3] = std::array::from_fn(|a| {
                    if e.hi[a] > e.lo[a] {
                        e.rng.gen_range(e.lo[a]..e.hi[a])
                    } else {
                        e.lo[a]
                    }
                });
                self.emitted += 1;
                if in_domain(p, dims) {
                    self.positions.push(p);
                    self.ages.push(0);
                } else {
                    self.retired += 1;
                }
            }
        }
    }

    /// One explicit Euler step of length `dt` through `u`, then retirement of
    /// particles that left the domain.
    pub fn advect(&mut self, u: &[[f64; 3]], dims: Dims, dt: f64) {
        assert_eq!(u.len(), dims.len(), "velocity field shape");
        self.positions.par_iter_mut().for_each(|p| {
            if in_domain(*p, dims) {
                let v = interpolate(u, dims, *p);
                for a in 0..3 {
                    p[a] += dt * v[a];
                }
            }
        });
        let before = self.positions.len();
        let mut keep = self.positions.iter().map(|p| in_domain(*p, dims));
        self.ages.retain(|_| keep.next().unwrap());
        self.positions.retain(|p| in_domain(*p, dims));
        for a in &mut self.ages {
            *a += 1;
        }
        self.retired += (before - self.positions.len()) as u64;
    }

    /// Deposits one unit per live particle with the trilinear kernel.
    ///
    /// Particles are grouped by base cell and the eight parity classes of
    /// cells run in turn, so no two concurrent groups touch the same node and
    /// the sum order is fixed.
    pub fn rasterize_density(&self, dims: Dims) -> Vec<f64> {
        let mut vol = vec![0.0; dims.len()];
        let mut items: Vec<(u8, usize, usize, Stencil)> = self
            .positions
            .iter()
            .enumerate()
            .filter(|(_, p)| in_domain(**p, dims))
            .map(|(i, p)| {
                let st = Stencil::new(*p);
                let b = st.base;
                let color = ((b[0] & 1) | (b[1] & 1) << 1 | (b[2] & 1) << 2) as u8;
                let cell = dims.node_index(b[0] as usize, b[1] as usize, b[2] as usize);
                (color, cell, i, st)
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
        let out = VolPtr(vol.as_mut_ptr());
        let len = vol.len();
        for color in 0..8u8 {
            groups.par_iter().filter(|(c, _)| *c == color).for_each(|(_, r)| {
                let out = &out;
                for it in &items[r.clone()] {
                    for c in 0..8 {
                        let (node, w) = it.3.corner(c);
                        if w == 0.0 || !dims.contains(node) {
                            continue;
                        }
                        let k = dims.node_index(node[0] as usize, node[1] as usize, node[2] as usize);
                        assert!(k < len);
                        // SAFETY: cells of one parity class have disjoint supports.
                        unsafe { *out.0.add(k) += w };
                    }
                }
            });
        }
        vol
    }
}

struct VolPtr(*mut f64);
unsafe impl Sync for VolPtr {}
unsafe impl Send for VolPtr {}
