//! Two-point linear hat kernel, product form in 3D.

/// Points of support per axis.
pub const SUPPORT: usize = 2;

/// `max(0, 1 - |d|)`.
#[inline(always)]
pub fn hat(d: f64) -> f64 {
    (1.0 - d.abs()).max(0.0)
}

/// Weight of node `node` for a sample at `x`.
#[inline]
pub fn weight(x: [f64; 3], node: [f64; 3]) -> f64 {
    hat(x[0] - node[0]) * hat(x[1] - node[1]) * hat(x[2] - node[2])
}

/// The 2x2x2 stencil of one sample: lowest node and per-axis weights for the
/// lower and upper node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub base: [i64; 3],
    pub w: [[f64; 2]; 3],
}

impl Stencil {
    #[inline]
    pub fn new(x: [f64; 3]) -> Self {
        let mut base = [0i64; 3];
        let mut w = [[0.0; 2]; 3];
        for a in 0..3 {
            let b = x[a].floor();
            let t = x[a] - b;
            base[a] = b as i64;
            w[a] = [1.0 - t, t];
        }
        Stencil { base, w }
    }

    /// Corner `c` in `0..8`, x in the low bit.
    #[inline(always)]
    pub fn corner(&self, c: usize) -> ([i64; 3], f64) {
        let (i, j, k) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
        (
            [self.base[0] + i as i64, self.base[1] + j as i64, self.base[2] + k as i64],
            self.w[0][i] * self.w[1][j] * self.w[2][k],
        )
    }

    /// Trilinear interpolation of `D` channels from corner values (indexed as
    /// in [`Stencil::corner`]) as nested `a + t (b - a)` along x, y, z. Equal to
    /// the weighted sum, and exact for constant data.
    #[inline]
    pub fn lerp<const D: usize>(&self, v: &[[f64; D]; 8]) -> [f64; D] {
        let t = [self.w[0][1], self.w[1][1], self.w[2][1]];
        let mix = |a: &[f64; D], b: &[f64; D], t: f64| -> [f64; D] { std::array::from_fn(|d| a[d] + t * (b[d] - a[d])) };
        let x: [[f64; D]; 4] = std::array::from_fn(|j| mix(&v[2 * j], &v[2 * j + 1], t[0]));
        let y = [mix(&x[0], &x[1], t[1]), mix(&x[2], &x[3], t[1])];
        mix(&y[0], &y[1], t[2])
    }

    /// Whether all eight nodes lie in `[0, n)`.
    #[inline]
    pub fn inside(&self, n: [usize; 3]) -> bool {
        (0..3).all(|a| self.base[a] >= 0 && self.base[a] + 1 < n[a] as i64)
    }
}
