//! Node-batched collision for the solver's fused sweep.
//!
//! Evaluates the same per-node arithmetic as [`super::relax`] followed by
//! `f + Omega + G`, lane by lane, so results are bit-identical to the scalar
//! route while the lane loops vectorize.

use super::adaptive::{clamp_rate, AdaptivePolicy};
use super::basis::{FIRST_HIGH_ORDER_ROW, ROW_DEV_XY, ROW_DEV_XZ, ROW_TO_GRID, ROW_TRACE, VEL_TO_GRID};
use super::{CollisionKind, CollisionModel};
use crate::lattice::{CS2, Q, VELOCITIES_F64, WEIGHTS};

pub const LANES: usize = 8;

type Lanes = [f64; LANES];

/// Inputs and outputs of up to [`LANES`] nodes. Unused lanes must hold a
/// harmless state (see [`NodeBatch::new`]).
#[derive(Debug, Clone)]
pub struct NodeBatch {
    pub f: [Lanes; Q],
    pub rho: Lanes,
    pub u: [Lanes; 3],
    pub g: [Lanes; 3],
}

impl Default for NodeBatch {
    fn default() -> Self {
        Self::new()
    }
}

impl NodeBatch {
    /// Every lane at rest with unit density.
    pub fn new() -> Self {
        let mut f = [[0.0; LANES]; Q];
        for (fi, w) in f.iter_mut().zip(WEIGHTS) {
            *fi = [w; LANES];
        }
        NodeBatch {
            f,
            rho: [1.0; LANES],
            u: [[0.0; LANES]; 3],
            g: [[0.0; LANES]; 3],
        }
    }
}

#[inline(always)]
fn axis_forward(a: &mut [Lanes; Q], starts: [usize; 9], stride: usize, u: &Lanes) {
    for base in starts {
        for l in 0..LANES {
            let vm = a[base][l];
            let v0 = a[base + stride][l];
            let vp = a[base + 2 * stride][l];
            let s0 = vm + v0 + vp;
            let d = vp - vm;
            let s2 = vp + vm;
            a[base][l] = s0;
            a[base + stride][l] = d - u[l] * s0;
            a[base + 2 * stride][l] = s2 - 2.0 * u[l] * d + u[l] * u[l] * s0;
        }
    }
}

#[inline(always)]
fn axis_inverse(a: &mut [Lanes; Q], starts: [usize; 9], stride: usize, u: &Lanes) {
    for base in starts {
        for l in 0..LANES {
            let k0 = a[base][l];
            let k1 = a[base + stride][l];
            let k2 = a[base + 2 * stride][l];
            let r1 = k1 + u[l] * k0;
            let r2 = k2 + 2.0 * u[l] * k1 + u[l] * u[l] * k0;
            a[base][l] = 0.5 * (r2 - r1);
            a[base + stride][l] = k0 - r2;
            a[base + 2 * stride][l] = 0.5 * (r2 + r1);
        }
    }
}

const X_LINES: [usize; 9] = [0, 3, 6, 9, 12, 15, 18, 21, 24];
const Y_LINES: [usize; 9] = [0, 1, 2, 9, 10, 11, 18, 19, 20];
const Z_LINES: [usize; 9] = [0, 1, 2, 3, 4, 5, 6, 7, 8];

/// Replaces `b.f` with `f + Omega + G` in every lane.
pub fn collide_batch(b: &mut NodeBatch, model: &CollisionModel) {
    let (rho, u) = (b.rho, b.u);
    let mut base = [0.0; LANES];
    let mut forced = [false; LANES];
    for l in 0..LANES {
        let usq = u[0][l] * u[0][l] + u[1][l] * u[1][l] + u[2][l] * u[2][l];
        base[l] = 1.0 - 1.5 * usq;
        forced[l] = [b.g[0][l], b.g[1][l], b.g[2][l]] != [0.0; 3];
    }
    let feq = |i: usize, l: usize| {
        let c = VELOCITIES_F64[i];
        let cu = c[0] * u[0][l] + c[1] * u[1][l] + c[2] * u[2][l];
        WEIGHTS[i] * rho[l] * (base[l] + 3.0 * cu + 4.5 * cu * cu)
    };
    let force = |i: usize, l: usize, g: &[Lanes; 3]| {
        let c = VELOCITIES_F64[i];
        let v = WEIGHTS[i] * (c[0] * g[0][l] + c[1] * g[1][l] + c[2] * g[2][l]) * 3.0;
        if forced[l] {
            v
        } else {
            0.0
        }
    };

    if model.kind == CollisionKind::Bgk {
        let w = model.omega_nu();
        for i in 0..Q {
            for l in 0..LANES {
                let f = b.f[i][l];
                b.f[i][l] = f + -w * (f - feq(i, l)) + force(i, l, &b.g);
            }
        }
        return;
    }

    // Moments stay in velocity-grid order throughout; only the row positions
    // of rates and the trace recombination are remapped.
    let mut m = [[0.0; LANES]; Q];
    for i in 0..Q {
        for l in 0..LANES {
            m[VEL_TO_GRID[i]][l] = b.f[i][l] - feq(i, l);
        }
    }
    let mut rates = [[0.0; LANES]; Q];
    for r in 0..Q {
        rates[r] = [model.rates[r]; LANES];
    }
    match model.policy {
        AdaptivePolicy::Constant => {
            for rate in &mut rates[FIRST_HIGH_ORDER_ROW..] {
                for v in rate.iter_mut() {
                    *v = clamp_rate(*v);
                }
            }
        }
        AdaptivePolicy::Activity { gain } => {
            for l in 0..LANES {
                let speed = (u[0][l] * u[0][l] + u[1][l] * u[1][l] + u[2][l] * u[2][l]).sqrt();
                let mut n2 = 0.0;
                for i in 0..Q {
                    let d = m[VEL_TO_GRID[i]][l];
                    n2 += d * d;
                }
                let activity = speed / CS2.sqrt() * n2.sqrt() / rho[l];
                let blend = 1.0 - (-gain * activity).exp();
                for rate in &mut rates[FIRST_HIGH_ORDER_ROW..] {
                    rate[l] = clamp_rate(rate[l] + (1.0 - rate[l]) * blend);
                }
            }
        }
    }
    let shift = if model.kind == CollisionKind::CmMrt { u } else { [[0.0; LANES]; 3] };
    axis_forward(&mut m, X_LINES, 1, &shift[0]);
    axis_forward(&mut m, Y_LINES, 3, &shift[1]);
    axis_forward(&mut m, Z_LINES, 9, &shift[2]);
    let [g7, g8, g9] = [ROW_TO_GRID[7], ROW_TO_GRID[8], ROW_TO_GRID[9]];
    let [gxy, gxz, gtr] = [ROW_TO_GRID[ROW_DEV_XY], ROW_TO_GRID[ROW_DEV_XZ], ROW_TO_GRID[ROW_TRACE]];
    for l in 0..LANES {
        let (xx, yy, zz) = (m[g7][l], m[g8][l], m[g9][l]);
        m[gxy][l] = xx - yy;
        m[gxz][l] = xx - zz;
        m[gtr][l] = xx + yy + zz;
    }
    for r in 0..Q {
        let gr = ROW_TO_GRID[r];
        for l in 0..LANES {
            m[gr][l] *= -rates[r][l];
        }
    }
    for l in 0..LANES {
        let (p, q, s) = (m[gxy][l], m[gxz][l], m[gtr][l]);
        m[g7][l] = (p + q + s) / 3.0;
        m[g8][l] = (-2.0 * p + q + s) / 3.0;
        m[g9][l] = (p - 2.0 * q + s) / 3.0;
    }
    axis_inverse(&mut m, Z_LINES, 9, &shift[2]);
    axis_inverse(&mut m, Y_LINES, 3, &shift[1]);
    axis_inverse(&mut m, X_LINES, 1, &shift[0]);
    for i in 0..Q {
        for l in 0..LANES {
            b.f[i][l] = b.f[i][l] + m[VEL_TO_GRID[i]][l] + force(i, l, &b.g);
        }
    }
}
