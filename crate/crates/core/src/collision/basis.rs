//! Moment bases over D3Q27.
//!
//! Rows are the monomials `(c_x-u_x)^p0 (c_y-u_y)^p1 (c_z-u_z)^p2` with
//! `p in {0,1,2}^3`, ordered by total degree. The three diagonal second-order
//! rows are recombined into two deviatoric differences and the trace so shear
//! and bulk relaxation can be set independently. With `u = 0` this is the
//! raw-moment basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{Q, VELOCITIES, VELOCITIES_F64};

/// Exponents of the underlying monomial for every basis row. Rows 7, 8, 9 hold
/// `xx`, `yy`, `zz` before recombination.
pub const EXPONENTS: [[u8; 3]; Q] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
    [1, 1, 1],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [0, 2, 1],
    [1, 0, 2],
    [0, 1, 2],
    [2, 2, 0],
    [2, 0, 2],
    [0, 2, 2],
    [2, 1, 1],
    [1, 2, 1],
    [1, 1, 2],
    [2, 2, 1],
    [2, 1, 2],
    [1, 2, 2],
    [2, 2, 2],
];

/// Row `xx - yy`.
pub const ROW_DEV_XY: usize = 7;
/// Row `xx - zz`.
pub const ROW_DEV_XZ: usize = 8;
/// Row `xx + yy + zz`.
pub const ROW_TRACE: usize = 9;
/// First row of third or higher order.
pub const FIRST_HIGH_ORDER_ROW: usize = 10;

/// Total polynomial degree of a basis row.
pub fn row_degree(row: usize) -> u8 {
    EXPONENTS[row].iter().sum()
}

/// Position of velocity `i` in the 3x3x3 grid `(cz+1)*9 + (cy+1)*3 + (cx+1)`.
pub const VEL_TO_GRID: [usize; Q] = {
    let mut out = [0usize; Q];
    let mut i = 0;
    while i < Q {
        let c = VELOCITIES[i];
        out[i] = ((c[2] + 1) * 9 + (c[1] + 1) * 3 + (c[0] + 1)) as usize;
        i += 1;
    }
    out
};

pub const GRID_TO_VEL: [usize; Q] = {
    let mut out = [0usize; Q];
    let mut i = 0;
    while i < Q {
        out[VEL_TO_GRID[i]] = i;
        i += 1;
    }
    out
};

/// Position of basis row's monomial in the moment grid `p2*9 + p1*3 + p0`.
pub const ROW_TO_GRID: [usize; Q] = {
    let mut out = [0usize; Q];
    let mut r = 0;
    while r < Q {
        let e = EXPONENTS[r];
        out[r] = e[2] as usize * 9 + e[1] as usize * 3 + e[0] as usize;
        r += 1;
    }
    out
};

/// Whether the basis is shifted by the local velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSpace {
    Raw,
    Central,
}

/// Dense `M` and `M^-1` for one velocity. Used as the reference route.
#[derive(Debug, Clone)]
pub struct MomentBasis {
    pub forward: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl MomentBasis {
    pub fn new(space: MomentSpace, u: [f64; 3]) -> Result<Self> {
        let shift = match space {
            MomentSpace::Raw => [0.0; 3],
            MomentSpace::Central => u,
        };
        let forward = dense_forward(shift);
        let inverse = forward.clone().try_inverse().ok_or(Error::SingularBasis)?;
        Ok(MomentBasis { forward, inverse })
    }
}

fn monomial(c: [f64; 3], u: [f64; 3], e: [u8; 3]) -> f64 {
    (0..3)
        .map(|a| (c[a] - u[a]).powi(e[a] as i32))
        .product()
}

/// Entry-wise construction of `M(u)`.
pub fn dense_forward(u: [f64; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(Q, Q, |row, i| {
        let c = VELOCITIES_F64[i];
        match row {
            ROW_DEV_XY => monomial(c, u, [2, 0, 0]) - monomial(c, u, [0, 2, 0]),
            ROW_DEV_XZ => monomial(c, u, [2, 0, 0]) - monomial(c, u, [0, 0, 2]),
            ROW_TRACE => {
                monomial(c, u, [2, 0, 0]) + monomial(c, u, [0, 2, 0]) + monomial(c, u, [0, 0, 2])
            }
            _ => monomial(c, u, EXPONENTS[row]),
        }
    })
}

#[inline(always)]
fn axis_forward(a: &mut [f64; Q], stride: usize, u: f64) {
    // lines along one axis: three entries `stride` apart
    for base in line_starts(stride) {
        let vm = a[base];
        let v0 = a[base + stride];
        let vp = a[base + 2 * stride];
        let s0 = vm + v0 + vp;
        let d = vp - vm;
        let s2 = vp + vm;
        a[base] = s0;
        a[base + stride] = d - u * s0;
        a[base + 2 * stride] = s2 - 2.0 * u * d + u * u * s0;
    }
}

#[inline(always)]
fn axis_inverse(a: &mut [f64; Q], stride: usize, u: f64) {
    for base in line_starts(stride) {
        let k0 = a[base];
        let k1 = a[base + stride];
        let k2 = a[base + 2 * stride];
        let r1 = k1 + u * k0;
        let r2 = k2 + 2.0 * u * k1 + u * u * k0;
        a[base] = 0.5 * (r2 - r1);
        a[base + stride] = k0 - r2;
        a[base + 2 * stride] = 0.5 * (r2 + r1);
    }
}

#[inline(always)]
fn line_starts(stride: usize) -> [usize; 9] {
    match stride {
        1 => [0, 3, 6, 9, 12, 15, 18, 21, 24],
        3 => [0, 1, 2, 9, 10, 11, 18, 19, 20],
        _ => [0, 1, 2, 3, 4, 5, 6, 7, 8],
    }
}

/// `m = M(u) d` by three one-dimensional transforms.
#[inline]
pub fn forward_factorized(d: &[f64; Q], u: [f64; 3], m: &mut [f64; Q]) {
    let mut g = [0.0; Q];
    for i in 0..Q {
        g[VEL_TO_GRID[i]] = d[i];
    }
    axis_forward(&mut g, 1, u[0]);
    axis_forward(&mut g, 3, u[1]);
    axis_forward(&mut g, 9, u[2]);
    for r in 0..Q {
        m[r] = g[ROW_TO_GRID[r]];
    }
    let (xx, yy, zz) = (m[7], m[8], m[9]);
    m[ROW_DEV_XY] = xx - yy;
    m[ROW_DEV_XZ] = xx - zz;
    m[ROW_TRACE] = xx + yy + zz;
}

/// Undoes the row recombination and the z and y stages of `M(u)^-1`. The
/// result is indexed like the velocity grid in `(cz, cy)` and like moment
/// order in x; [`finish_inverse`] completes one output from it.
#[inline]
pub fn partial_inverse(m: &[f64; Q], u: [f64; 3], h: &mut [f64; Q]) {
    let mut mm = *m;
    let (p, q, s) = (m[ROW_DEV_XY], m[ROW_DEV_XZ], m[ROW_TRACE]);
    mm[7] = (p + q + s) / 3.0;
    mm[8] = (-2.0 * p + q + s) / 3.0;
    mm[9] = (p - 2.0 * q + s) / 3.0;
    for r in 0..Q {
        h[ROW_TO_GRID[r]] = mm[r];
    }
    axis_inverse(h, 9, u[2]);
    axis_inverse(h, 3, u[1]);
}

/// Final x stage for velocity `i`.
#[inline(always)]
pub fn finish_inverse(h: &[f64; Q], ux: f64, i: usize) -> f64 {
    let g = VEL_TO_GRID[i];
    let cx = g % 3;
    let base = g - cx;
    let k0 = h[base];
    let k1 = h[base + 1];
    let k2 = h[base + 2];
    let r1 = k1 + ux * k0;
    let r2 = k2 + 2.0 * ux * k1 + ux * ux * k0;
    match cx {
        0 => 0.5 * (r2 - r1),
        1 => k0 - r2,
        _ => 0.5 * (r2 + r1),
    }
}

/// `d = M(u)^-1 m` by three one-dimensional transforms.
#[inline]
pub fn inverse_factorized(m: &[f64; Q], u: [f64; 3], d: &mut [f64; Q]) {
    let mut h = [0.0; Q];
    partial_inverse(m, u, &mut h);
    axis_inverse(&mut h, 1, u[0]);
    for i in 0..Q {
        d[i] = h[VEL_TO_GRID[i]];
    }
}
