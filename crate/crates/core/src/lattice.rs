//! D3Q27 lattice constants.
//!
//! Velocity order: the rest velocity sits at index 0, the remaining 26
//! velocities follow in lexicographic order of `(c_z, c_y, c_x)`. This order is
//! canonical for every file format written by this crate.

/// Number of discrete velocities.
pub const Q: usize = 27;

/// Squared lattice sound speed.
pub const CS2: f64 = 1.0 / 3.0;

/// First distribution index handled by the second collision pass.
pub const SPLIT_INDEX: usize = 14;

const fn build_velocities() -> [[i32; 3]; Q] {
    let mut out = [[0i32; 3]; Q];
    let mut idx = 1;
    let mut z = -1;
    while z <= 1 {
        let mut y = -1;
        while y <= 1 {
            let mut x = -1;
            while x <= 1 {
                if !(x == 0 && y == 0 && z == 0) {
                    out[idx] = [x, y, z];
                    idx += 1;
                }
                x += 1;
            }
            y += 1;
        }
        z += 1;
    }
    out
}

const fn build_weights(c: &[[i32; 3]; Q]) -> [f64; Q] {
    let mut w = [0.0; Q];
    let mut i = 0;
    while i < Q {
        let m = c[i][0] * c[i][0] + c[i][1] * c[i][1] + c[i][2] * c[i][2];
        w[i] = match m {
            0 => 8.0 / 27.0,
            1 => 2.0 / 27.0,
            2 => 1.0 / 54.0,
            _ => 1.0 / 216.0,
        };
        i += 1;
    }
    w
}

const fn build_opposite(c: &[[i32; 3]; Q]) -> [usize; Q] {
    let mut opp = [0usize; Q];
    let mut i = 0;
    while i < Q {
        let mut j = 0;
        while j < Q {
            if c[j][0] == -c[i][0] && c[j][1] == -c[i][1] && c[j][2] == -c[i][2] {
                opp[i] = j;
            }
            j += 1;
        }
        i += 1;
    }
    opp
}

/// Discrete velocities `c_i`.
pub const VELOCITIES: [[i32; 3]; Q] = build_velocities();
/// Quadrature weights `w_i`.
pub const WEIGHTS: [f64; Q] = build_weights(&VELOCITIES);
/// `OPPOSITE[i]` is the direction with `c = -c_i`.
pub const OPPOSITE: [usize; Q] = build_opposite(&VELOCITIES);

/// Velocities as floats, convenient for moment sums.
pub const VELOCITIES_F64: [[f64; 3]; Q] = {
    let mut out = [[0.0; 3]; Q];
    let mut i = 0;
    while i < Q {
        out[i] = [
            VELOCITIES[i][0] as f64,
            VELOCITIES[i][1] as f64,
            VELOCITIES[i][2] as f64,
        ];
        i += 1;
    }
    out
};

/// Zero-sized handle on the D3Q27 tables, for APIs that prefer a value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LatticeD3Q27;

impl LatticeD3Q27 {
    pub fn velocities(&self) -> &'static [[i32; 3]; Q] {
        &VELOCITIES
    }

    pub fn weights(&self) -> &'static [f64; Q] {
        &WEIGHTS
    }

    pub fn opposite(&self) -> &'static [usize; Q] {
        &OPPOSITE
    }

    pub fn cs2(&self) -> f64 {
        CS2
    }

    /// Index of the velocity `c`, if `c` is in `{-1,0,1}^3`.
    pub fn index_of(&self, c: [i32; 3]) -> Option<usize> {
        VELOCITIES.iter().position(|v| *v == c)
    }
}

/// Index `i'` with `c_{i'} = -c_i`.
///
/// Panics when `i >= 27`.
#[inline]
pub fn opposite_index(i: usize) -> usize {
    assert!(i < Q, "direction index {i} out of range");
    OPPOSITE[i]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_is_index_zero_and_self_opposite() {
        assert_eq!(VELOCITIES[0], [0, 0, 0]);
        assert_eq!(opposite_index(0), 0);
    }

    #[test]
    fn opposite_of_plus_x() {
        let i = LatticeD3Q27.index_of([1, 0, 0]).unwrap();
        assert_eq!(VELOCITIES[opposite_index(i)], [-1, 0, 0]);
    }

    #[test]
    fn opposite_table_brute_force() {
        for i in 0..Q {
            let j = opposite_index(i);
            for a in 0..3 {
                assert_eq!(VELOCITIES[i][a] + VELOCITIES[j][a], 0);
            }
            assert_eq!(opposite_index(j), i);
        }
    }

    #[test]
    #[should_panic]
    fn opposite_out_of_range() {
        opposite_index(27);
    }

    #[test]
    fn velocities_cover_cube_once() {
        let mut seen = std::collections::HashSet::new();
        for c in VELOCITIES {
            assert!(c.iter().all(|v| (-1..=1).contains(v)));
            assert!(seen.insert(c));
        }
        assert_eq!(seen.len(), 27);
    }

    #[test]
    fn lexicographic_zyx_after_rest() {
        let key = |c: [i32; 3]| (c[2], c[1], c[0]);
        for i in 2..Q {
            assert!(key(VELOCITIES[i - 1]) < key(VELOCITIES[i]));
        }
    }

    // Weight identities checked in exact rational arithmetic (denominator 216).
    #[test]
    fn weight_identities_rational() {
        let num: Vec<i64> = VELOCITIES
            .iter()
            .map(|c| match c.iter().map(|v| v * v).sum::<i32>() {
                0 => 64,
                1 => 16,
                2 => 4,
                _ => 1,
            })
            .collect();
        assert_eq!(num.iter().sum::<i64>(), 216);
        for a in 0..3 {
            let first: i64 = (0..Q).map(|i| num[i] * VELOCITIES[i][a] as i64).sum();
            assert_eq!(first, 0);
            for b in 0..3 {
                let second: i64 = (0..Q)
                    .map(|i| num[i] * (VELOCITIES[i][a] * VELOCITIES[i][b]) as i64)
                    .sum();
                // cs2 = 1/3 -> 72/216
                assert_eq!(second, if a == b { 72 } else { 0 });
            }
        }
    }

    #[test]
    fn weight_identities_float() {
        let s: f64 = WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() <= 1e-15);
        for a in 0..3 {
            let m1: f64 = (0..Q).map(|i| WEIGHTS[i] * VELOCITIES_F64[i][a]).sum();
            assert!(m1.abs() <= 1e-15);
            for b in 0..3 {
                let m2: f64 = (0..Q)
                    .map(|i| WEIGHTS[i] * VELOCITIES_F64[i][a] * VELOCITIES_F64[i][b])
                    .sum();
                let expect = if a == b { CS2 } else { 0.0 };
                assert!((m2 - expect).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn fourth_order_isotropy() {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..3 {
                    for e in 0..3 {
                        let m4: f64 = (0..Q)
                            .map(|i| {
                                let c = VELOCITIES_F64[i];
                                WEIGHTS[i] * c[a] * c[b] * c[g] * c[e]
                            })
                            .sum();
                        let expect =
                            CS2 * CS2 * (d(a, b) * d(g, e) + d(a, g) * d(b, e) + d(a, e) * d(b, g));
                        assert!((m4 - expect).abs() <= 1e-15, "{a}{b}{g}{e}: {m4} vs {expect}");
                    }
                }
            }
        }
    }
}
