//! Collision output as a sum of velocity monomials.
//!
//! With `ft = D M(u) (f - f_eq)` each output is
//! `Omega_i = sum_p u_x^p0 u_y^p1 u_z^p2 * w_{i,p}(ft)` where every weight
//! `w_{i,p}` is a fixed linear combination of `ft`. Terms sharing the same
//! exponent triple are merged when the table is built, so at most 27 distinct
//! monomials appear.

use std::fmt::Write as _;
use std::ops::Range;

use super::basis::{MomentSpace, EXPONENTS, ROW_DEV_XY, ROW_DEV_XZ, ROW_TRACE, VEL_TO_GRID};
use crate::lattice::Q;

/// Weight of one monomial in one output, as sparse coefficients over `ft`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialTerm {
    pub monomial: usize,
    pub weights: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct MonomialTable {
    space: MomentSpace,
    monomials: Vec<[u8; 3]>,
    rows: Vec<Vec<MonomialTerm>>,
}

// Inverse of the one-dimensional moment map, rows c = -1, 0, 1, columns p.
const VINV: [[f64; 3]; 3] = [[0.0, -0.5, 0.5], [1.0, 0.0, -1.0], [0.0, 0.5, 0.5]];

fn binom(n: u8, k: u8) -> f64 {
    match (n, k) {
        (_, 0) => 1.0,
        (1, 1) | (2, 2) => 1.0,
        (2, 1) => 2.0,
        _ => 0.0,
    }
}

fn grid_of(e: [u8; 3]) -> usize {
    e[2] as usize * 9 + e[1] as usize * 3 + e[0] as usize
}

fn exps_of(g: usize) -> [u8; 3] {
    [(g % 3) as u8, ((g / 3) % 3) as u8, (g / 9) as u8]
}

/// Coefficients of pure monomial moment `g` (grid order) in terms of basis rows.
fn pure_from_rows(g: usize) -> Vec<(usize, f64)> {
    let third = 1.0 / 3.0;
    match exps_of(g) {
        [2, 0, 0] => vec![(ROW_DEV_XY, third), (ROW_DEV_XZ, third), (ROW_TRACE, third)],
        [0, 2, 0] => vec![
            (ROW_DEV_XY, -2.0 * third),
            (ROW_DEV_XZ, third),
            (ROW_TRACE, third),
        ],
        [0, 0, 2] => vec![
            (ROW_DEV_XY, third),
            (ROW_DEV_XZ, -2.0 * third),
            (ROW_TRACE, third),
        ],
        e => vec![(EXPONENTS.iter().position(|x| *x == e).unwrap(), 1.0)],
    }
}

/// Builds the merged table for a moment space. In raw space only the constant
/// monomial survives.
pub fn build_for_space(space: MomentSpace) -> MonomialTable {
    // dense accumulation [i][p][b]
    let mut acc = vec![[[0.0f64; Q]; Q]; Q];
    for i in 0..Q {
        let cg = VEL_TO_GRID[i];
        let cvel = [cg % 3, (cg / 3) % 3, cg / 9];
        for a in 0..Q {
            let ae = exps_of(a);
            let minv: f64 = (0..3).map(|ax| VINV[cvel[ax]][ae[ax] as usize]).product();
            if minv == 0.0 {
                continue;
            }
            for p in 0..Q {
                let pe = exps_of(p);
                if (0..3).any(|ax| pe[ax] > ae[ax]) {
                    continue;
                }
                if space == MomentSpace::Raw && p != 0 {
                    continue;
                }
                let ce = [ae[0] - pe[0], ae[1] - pe[1], ae[2] - pe[2]];
                let bc: f64 = (0..3).map(|ax| binom(ae[ax], ce[ax])).product();
                for (b, r) in pure_from_rows(grid_of(ce)) {
                    acc[i][p][b] -= minv * bc * r;
                }
            }
        }
    }

    let mut used = [false; Q];
    for row in &acc {
        for (p, w) in row.iter().enumerate() {
            if w.iter().any(|c| *c != 0.0) {
                used[p] = true;
            }
        }
    }
    let monomials: Vec<[u8; 3]> = (0..Q).filter(|p| used[*p]).map(exps_of).collect();
    let rows = acc
        .iter()
        .map(|row| {
            monomials
                .iter()
                .enumerate()
                .filter_map(|(mi, e)| {
                    let weights: Vec<(usize, f64)> = row[grid_of(*e)]
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| **c != 0.0)
                        .map(|(b, c)| (b, *c))
                        .collect();
                    (!weights.is_empty()).then_some(MonomialTerm {
                        monomial: mi,
                        weights,
                    })
                })
                .collect()
        })
        .collect();
    MonomialTable {
        space,
        monomials,
        rows,
    }
}

impl MonomialTable {
    pub fn monomials(&self) -> &[[u8; 3]] {
        &self.monomials
    }

    pub fn terms(&self, i: usize) -> &[MonomialTerm] {
        &self.rows[i]
    }

    pub fn nonzeros(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|t| t.weights.len()))
            .sum()
    }

    /// Values of all monomials at `u`; computed once and shared by every output.
    pub fn monomial_values(&self, u: [f64; 3]) -> Vec<f64> {
        let u = match self.space {
            MomentSpace::Raw => [0.0; 3],
            MomentSpace::Central => u,
        };
        self.monomials
            .iter()
            .map(|e| (0..3).map(|a| u[a].powi(e[a] as i32)).product())
            .collect()
    }

    /// Writes `Omega_i` for `i` in `range` into `out[i - range.start]`.
    pub fn evaluate_range(&self, u: [f64; 3], ft: &[f64; Q], range: Range<usize>, out: &mut [f64]) {
        let mono = self.monomial_values(u);
        for (o, i) in out.iter_mut().zip(range) {
            *o = self.rows[i]
                .iter()
                .map(|t| mono[t.monomial] * t.weights.iter().map(|(b, c)| c * ft[*b]).sum::<f64>())
                .sum();
        }
    }

    pub fn evaluate(&self, u: [f64; 3], ft: &[f64; Q]) -> [f64; Q] {
        let mut out = [0.0; Q];
        self.evaluate_range(u, ft, 0..Q, &mut out);
        out
    }

    /// Human-readable weight of monomial `e` in output `i`, e.g. `0.5*ft4 - ft9`.
    pub fn describe(&self, i: usize, e: [u8; 3]) -> Option<String> {
        let mi = self.monomials.iter().position(|m| *m == e)?;
        let term = self.rows[i].iter().find(|t| t.monomial == mi)?;
        let mut s = String::new();
        for (n, (b, c)) in term.weights.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else if n > 0 { "+" } else { "" };
            let mag = c.abs();
            if (mag - 1.0).abs() < 1e-15 {
                let _ = write!(s, "{sign}ft{b}");
            } else {
                let _ = write!(s, "{sign}{}*ft{b}", format_coef(mag));
            }
        }
        Some(s)
    }
}

fn format_coef(c: f64) -> String {
    for den in [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 9.0, 12.0, 16.0, 18.0, 24.0, 36.0] {
        let num = c * den;
        if (num - num.round()).abs() < 1e-12 {
            return if den == 1.0 {
                format!("{}", num.round())
            } else {
                format!("{}/{}", num.round(), den)
            };
        }
    }
    format!("{c}")
}
