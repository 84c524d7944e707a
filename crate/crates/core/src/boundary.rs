//! Domain faces: halfway bounce-back, velocity inlet, outflow and periodic.
//!
//! All rules read the pre-streaming field `f_prev` only, so the order of the
//! six face passes cannot change the result. A `(node, direction)` pair whose
//! pull source lies outside the domain is owned by exactly one face: after
//! wrapping periodic axes, the first violated non-periodic face in the order
//! `-x, +x, -y, +y, -z, +z`; failing that, the first periodic face crossed.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::collision::{equilibrium, equilibrium_component};
use crate::error::{Error, Result};
use crate::lattice::{opposite_index, Q, VELOCITIES};
use crate::layout::Dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-z")]
    NegZ,
    #[serde(rename = "+z")]
    PosZ,
}

impl Face {
    /// Pass order.
    pub const ALL: [Face; 6] = [Face::NegX, Face::PosX, Face::NegY, Face::PosY, Face::NegZ, Face::PosZ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    pub fn is_high(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn opposite(self) -> Face {
        Face::ALL[self.index() ^ 1]
    }

    /// Outward unit normal.
    pub fn normal(self) -> [i64; 3] {
        let mut n = [0; 3];
        n[self.axis()] = if self.is_high() { 1 } else { -1 };
        n
    }

    pub fn name(self) -> &'static str {
        ["-x", "+x", "-y", "+y", "-z", "+z"][self.index()]
    }

    /// Directions whose pull source crosses this face from its boundary layer.
    pub fn incoming_directions(self) -> Vec<usize> {
        let want = -self.normal()[self.axis()] as i32;
        (0..Q).filter(|&i| VELOCITIES[i][self.axis()] == want).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Condition {
    NoSlip,
    /// Equilibrium at unit density and the given velocity. With `radius` the
    /// velocity is confined to a disk centred on the face, softened over one cell.
    Inlet {
        velocity: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    Outflow,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSpec {
    pub face: Face,
    pub condition: Condition,
}

/// Conditions on all six faces, indexed by [`Face::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySet {
    conditions: [Condition; 6],
}

impl BoundarySet {
    pub fn new(conditions: [Condition; 6]) -> Result<Self> {
        for axis in 0..3 {
            let lo = matches!(conditions[2 * axis], Condition::Periodic);
            let hi = matches!(conditions[2 * axis + 1], Condition::Periodic);
            if lo != hi {
                return Err(Error::config(
                    format!("boundary.{}", Face::ALL[2 * axis].name()),
                    "periodic faces must come in opposing pairs",
                ));
            }
        }
        for (f, c) in Face::ALL.iter().zip(&conditions) {
            if let Condition::Inlet { velocity, radius } = c {
                if velocity.iter().any(|v| !v.is_finite()) || radius.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
                    return Err(Error::config(format!("boundary.{}", f.name()), "inlet values must be finite, radius > 0"));
                }
            }
        }
        Ok(BoundarySet { conditions })
    }

    pub fn from_specs(specs: &[FaceSpec]) -> Result<Self> {
        let mut c = [Condition::Periodic; 6];
        for s in specs {
            c[s.face.index()] = s.condition;
        }
        Self::new(c)
    }

    pub fn periodic() -> Self {
        BoundarySet {
            conditions: [Condition::Periodic; 6],
        }
    }

    pub fn condition(&self, face: Face) -> Condition {
        self.conditions[face.index()]
    }

    pub fn specs(&self) -> Vec<FaceSpec> {
        Face::ALL
            .iter()
            .map(|&face| FaceSpec {
                face,
                condition: self.condition(face),
            })
            .collect()
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        matches!(self.conditions[2 * axis], Condition::Periodic)
    }

    /// Face responsible for direction `i` at node `x`, or `None` when the pull
    /// source is inside the domain.
    ///
    /// A source beyond several faces (edges, corners) goes to a crossed
    /// no-slip face first, then to the first other non-periodic face in pass
    /// order, then to the first periodic one. Walls win so that an edge shared
    /// with an inlet or outflow stays closed; otherwise those faces leak or
    /// inject mass along the wall.
    #[inline]
    pub fn owner(&self, x: [usize; 3], i: usize, dims: Dims) -> Option<Face> {
        let n = dims.as_array();
        let c = VELOCITIES[i];
        let mut periodic_hit = None;
        let mut hard = None;
        for face in Face::ALL {
            let a = face.axis();
            let s = x[a] as i64 - c[a] as i64;
            let crossed = if face.is_high() { s >= n[a] as i64 } else { s < 0 };
            if !crossed {
                continue;
            }
            if self.is_periodic(a) {
                periodic_hit.get_or_insert(face);
            } else if matches!(self.conditions[face.index()], Condition::NoSlip) {
                return Some(face);
            } else {
                hard.get_or_insert(face);
            }
        }
        hard.or(periodic_hit)
    }

    /// Inlet velocity at boundary node `x`.
    pub fn inlet_velocity(&self, face: Face, x: [usize; 3], dims: Dims) -> [f64; 3] {
        match self.condition(face) {
            Condition::Inlet { velocity, radius: None } => velocity,
            Condition::Inlet {
                velocity,
                radius: Some(r),
            } => {
                let n = dims.as_array();
                let mut d2 = 0.0;
                for a in (0..3).filter(|&a| a != face.axis()) {
                    let c = (n[a] as f64 - 1.0) / 2.0;
                    d2 += (x[a] as f64 - c).powi(2);
                }
                let s = (r + 0.5 - d2.sqrt()).clamp(0.0, 1.0);
                [velocity[0] * s, velocity[1] * s, velocity[2] * s]
            }
            _ => [0.0; 3],
        }
    }

    /// Value of `f*_i(x)` under `face`'s rule. `read(p, j)` returns the
    /// pre-streaming value of direction `j` at in-domain node `p`.
    #[inline]
    pub fn reconstruct<R>(&self, face: Face, x: [usize; 3], i: usize, dims: Dims, read: &R) -> f64
    where
        R: Fn([usize; 3], usize) -> f64,
    {
        match self.condition(face) {
            Condition::NoSlip => read(x, opposite_index(i)),
            Condition::Inlet { .. } => equilibrium_component(1.0, self.inlet_velocity(face, x, dims), i),
            Condition::Outflow => {
                let nrm = face.normal();
                let c = VELOCITIES[i];
                let mut p = [0usize; 3];
                let n = dims.as_array();
                for a in 0..3 {
                    let s = x[a] as i64 - nrm[a] - c[a] as i64;
                    p[a] = if self.is_periodic(a) {
                        s.rem_euclid(n[a] as i64) as usize
                    } else {
                        s.clamp(0, n[a] as i64 - 1) as usize
                    };
                }
                read(p, i)
            }
            Condition::Periodic => {
                let c = VELOCITIES[i];
                let n = dims.as_array();
                let mut p = [0usize; 3];
                for a in 0..3 {
                    p[a] = (x[a] as i64 - c[a] as i64).rem_euclid(n[a] as i64) as usize;
                }
                read(p, i)
            }
        }
    }

    /// One face pass over the face layer, restricted to global `z` in `zs`.
    pub fn apply_face<R, W>(&self, face: Face, dims: Dims, zs: Range<usize>, read: &R, write: &mut W)
    where
        R: Fn([usize; 3], usize) -> f64,
        W: FnMut([usize; 3], usize, f64),
    {
        let dirs = face.incoming_directions();
        let n = dims.as_array();
        let a = face.axis();
        let layer = if face.is_high() { n[a] - 1 } else { 0 };
        let mut lo = [0usize, 0, zs.start];
        let mut hi = [n[0], n[1], zs.end.min(n[2])];
        if lo[a] > layer || hi[a] <= layer {
            return;
        }
        lo[a] = layer;
        hi[a] = layer + 1;
        // Ownership depends only on whether each coordinate sits on the low
        // layer, the high layer or neither, so it is cached per class.
        let class = |p: [usize; 3]| -> usize {
            (0..3)
                .map(|b| if p[b] == 0 { 0 } else if p[b] + 1 == n[b] { 1 } else { 2 })
                .fold(0, |acc, c| acc * 3 + c)
        };
        let mut owned: [Option<Vec<usize>>; 27] = Default::default();
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    let p = [x, y, z];
                    let list = owned[class(p)]
                        .get_or_insert_with(|| dirs.iter().copied().filter(|&i| self.owner(p, i, dims) == Some(face)).collect());
                    for &i in list.iter() {
                        write(p, i, self.reconstruct(face, p, i, dims, read));
                    }
                }
            }
        }
    }

    /// All six passes in order.
    pub fn apply_all<R, W>(&self, dims: Dims, zs: Range<usize>, read: &R, write: &mut W)
    where
        R: Fn([usize; 3], usize) -> f64,
        W: FnMut([usize; 3], usize, f64),
    {
        for face in Face::ALL {
            self.apply_face(face, dims, zs.clone(), read, write);
        }
    }
}

/// Single sweep over every node with one conditional per direction. Kept as
/// the reference for the per-face passes.
pub fn apply_single_pass<R, W>(bc: &BoundarySet, dims: Dims, read: &R, write: &mut W)
where
    R: Fn([usize; 3], usize) -> f64,
    W: FnMut([usize; 3], usize, f64),
{
    let n = [dims.nx as i64, dims.ny as i64, dims.nz as i64];
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let p = [x, y, z];
                for i in 0..Q {
                    let c = VELOCITIES[i];
                    let src = [x as i64 - c[0] as i64, y as i64 - c[1] as i64, z as i64 - c[2] as i64];
                    let out_lo: Vec<bool> = (0..3).map(|a| src[a] < 0).collect();
                    let out_hi: Vec<bool> = (0..3).map(|a| src[a] >= n[a]).collect();
                    let crossed: Vec<Face> = (0..3)
                        .filter_map(|a| {
                            if out_lo[a] {
                                Some(Face::ALL[2 * a])
                            } else if out_hi[a] {
                                Some(Face::ALL[2 * a + 1])
                            } else {
                                None
                            }
                        })
                        .collect();
                    let mut chosen = crossed.iter().copied().find(|f| bc.condition(*f) == Condition::NoSlip);
                    if chosen.is_none() {
                        chosen = crossed.iter().copied().find(|f| !bc.is_periodic(f.axis()));
                    }
                    if chosen.is_none() {
                        for a in 0..3 {
                            if out_lo[a] {
                                chosen = Some(Face::ALL[2 * a]);
                                break;
                            }
                            if out_hi[a] {
                                chosen = Some(Face::ALL[2 * a + 1]);
                                break;
                            }
                        }
                    }
                    let Some(face) = chosen else { continue };
                    let wrap = |v: i64, a: usize| v.rem_euclid(n[a]) as usize;
                    let value = match bc.condition(face) {
                        Condition::NoSlip => read(p, opposite_index(i)),
                        Condition::Inlet { .. } => equilibrium(1.0, bc.inlet_velocity(face, p, dims))[i],
                        Condition::Periodic => read([wrap(src[0], 0), wrap(src[1], 1), wrap(src[2], 2)], i),
                        Condition::Outflow => {
                            let nrm = face.normal();
                            let mut q = [0usize; 3];
                            for a in 0..3 {
                                let s = src[a] - nrm[a];
                                q[a] = if bc.is_periodic(a) { wrap(s, a) } else { s.clamp(0, n[a] - 1) as usize };
                            }
                            read(q, i)
                        }
                    };
                    write(p, i, value);
                }
            }
        }
    }
}
