//! Scene files: one TOML document fully describes a run, apart from mesh
//! assets it points to.
//!
//! Every table rejects unknown keys. [`SceneConfig::validate`] reports the
//! first bad value by its dotted path, e.g. `physics.nu`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autotune::{TuneSpec, DEFAULT_WARMUP};
use crate::boundary::{BoundarySet, Condition};
use crate::collision::{AdaptivePolicy, CollisionKind, CollisionModel};
use crate::error::{Error, Result};
use crate::ib::{Accumulation, PoissonMethod, RigidMotion, Solid, SamplingReport, TriMesh};
use crate::layout::Dims;
use crate::solver::{Schedule, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub collision: CollisionConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default, rename = "solid")]
    pub solids: Vec<SolidConfig>,
    #[serde(default, rename = "tracer")]
    pub tracers: Vec<TracerConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub tune: TuneConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    /// CSoA group size used when the tuner is off.
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    /// Sample block edge used when the tuner is off.
    #[serde(default = "default_ell")]
    pub ell: usize,
}

fn default_alpha() -> usize {
    32
}

fn default_ell() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nu: f64,
    #[serde(default)]
    pub body_force: [f64; 3],
    /// Uniform velocity of the initial equilibrium.
    #[serde(default)]
    pub initial_velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    #[serde(default = "default_kind")]
    pub kind: CollisionKind,
    #[serde(default)]
    pub bulk_rate: Option<f64>,
    #[serde(default)]
    pub high_order_rate: Option<f64>,
    #[serde(default)]
    pub policy: AdaptivePolicy,
    #[serde(default)]
    pub schedule: Schedule,
}

fn default_kind() -> CollisionKind {
    CollisionKind::CmMrt
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig {
            kind: default_kind(),
            bulk_rate: None,
            high_order_rate: None,
            policy: AdaptivePolicy::Constant,
            schedule: Schedule::Fused,
        }
    }
}

/// Face conditions; omitted faces are periodic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BoundaryConfig {
    pub neg_x: Option<Condition>,
    pub pos_x: Option<Condition>,
    pub neg_y: Option<Condition>,
    pub pos_y: Option<Condition>,
    pub neg_z: Option<Condition>,
    pub pos_z: Option<Condition>,
}

impl BoundaryConfig {
    pub fn to_set(&self) -> Result<BoundarySet> {
        let faces = [self.neg_x, self.pos_x, self.neg_y, self.pos_y, self.neg_z, self.pos_z];
        BoundarySet::new(faces.map(|c| c.unwrap_or(Condition::Periodic)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Sphere with radius `r (1 + amp sin(k theta) sin(k phi))`.
    BumpySphere {
        center: [f64; 3],
        radius: f64,
        amp: f64,
        k: f64,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// STL or OBJ file, scaled then shifted. Relative paths resolve against
    /// the scene file's directory.
    Mesh {
        path: PathBuf,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        offset: [f64; 3],
    },
}

fn default_resolution() -> usize {
    48
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidConfig {
    pub name: String,
    pub shape: Shape,
    pub poisson_radius: f64,
    #[serde(default)]
    pub method: PoissonMethod,
    #[serde(default)]
    pub seed: u64,
    /// Trajectory; defaults to resting at the shape centre (mesh: bbox centre).
    #[serde(default)]
    pub motion: Option<RigidMotion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracerConfig {
    /// Emission box in grid coordinates.
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Particles per step; fractional rates accumulate.
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub steps: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Steps between canonical field dumps; 0 disables them.
    #[serde(default)]
    pub snapshot_every: u64,
    /// Steps between tracer density volumes; 0 disables them.
    #[serde(default)]
    pub volume_every: u64,
    /// Number of z-slab regions.
    #[serde(default = "default_regions")]
    pub regions: usize,
    #[serde(default)]
    pub accumulation: Accumulation,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_regions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_tune_steps")]
    pub n_steps: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Explicit candidate lists; default to the full ranges of the scene.
    #[serde(default)]
    pub ell: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha: Option<Vec<usize>>,
}

fn default_tune_steps() -> usize {
    10
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            enabled: false,
            n_steps: default_tune_steps(),
            warmup: default_warmup(),
            ell: None,
            alpha: None,
        }
    }
}

fn finite(field: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite"))
    }
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SceneConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // Unknown keys are reported as the key itself.
            let field = msg
                .strip_prefix("unknown field `")
                .and_then(|s| s.split('`').next())
                .unwrap_or("scene");
            Error::config(field, msg.trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a scene file. Relative mesh paths and the output
    /// directory are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.solids {
            if let Shape::Mesh { path: p, .. } = &mut s.shape {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if cfg.run.output_dir.is_relative() {
            cfg.run.output_dir = base.join(&cfg.run.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.grid.dims;
        if d.iter().any(|&n| n == 0) {
            return Err(Error::config("grid.dims", "every extent must be >= 1"));
        }
        if self.grid.alpha == 0 {
            return Err(Error::config("grid.alpha", "must be >= 1"));
        }
        if self.grid.ell == 0 {
            return Err(Error::config("grid.ell", "must be >= 1"));
        }
        let p = &self.physics;
        if !(p.nu.is_finite() && p.nu > 0.0) {
            return Err(Error::config("physics.nu", format!("must be finite and > 0, got {}", p.nu)));
        }
        finite("physics.body_force", &p.body_force)?;
        finite("physics.initial_velocity", &p.initial_velocity)?;
        let c = &self.collision;
        for (name, r) in [("collision.bulk_rate", c.bulk_rate), ("collision.high_order_rate", c.high_order_rate)] {
            if let Some(r) = r {
                if !(r.is_finite() && r > 0.0 && r < 2.0) {
                    return Err(Error::config(name, format!("must lie in (0, 2), got {r}")));
                }
            }
        }
        if let AdaptivePolicy::Activity { gain } = c.policy {
            if !(gain.is_finite() && gain >= 0.0) {
                return Err(Error::config("collision.policy.gain", "must be finite and >= 0"));
            }
        }
        self.boundary.to_set()?;
        for (i, s) in self.solids.iter().enumerate() {
            let at = |f: &str| format!("solid[{i}].{f}");
            if !(s.poisson_radius.is_finite() && s.poisson_radius > 0.0) {
                return Err(Error::config(at("poisson_radius"), "must be finite and > 0"));
            }
            match &s.shape {
                Shape::Sphere { center, radius, resolution } => {
                    finite(&at("shape.center"), center)?;
                    if !(radius.is_finite() && *radius > 0.0) {
                        return Err(Error::config(at("shape.radius"), "must be finite and > 0"));
                    }
                    if *resolution < 4 {
                        return Err(Error::config(at("shape.resolution"), "must be >= 4"));
                    }
                }
                Shape::BumpySphere { center, radius, amp, k, resolution } => {
                    finite(&at("shape.center"), center)?;
                    finite(&at("shape.amp"), &[*amp])?;
                    finite(&at("shape.k"), &[*k])?;
                    if !(radius.is_finite() && *radius > 0.0) {
                        return Err(Error::config(at("shape.radius"), "must be finite and > 0"));
                    }
                    if amp.abs() >= 1.0 {
                        return Err(Error::config(at("shape.amp"), "must satisfy |amp| < 1"));
                    }
                    if *resolution < 4 {
                        return Err(Error::config(at("shape.resolution"), "must be >= 4"));
                    }
                }
                Shape::Mesh { scale, offset, .. } => {
                    finite(&at("shape.offset"), offset)?;
                    if !(scale.is_finite() && *scale > 0.0) {
                        return Err(Error::config(at("shape.scale"), "must be finite and > 0"));
                    }
                }
            }
            if let Some(m) = &s.motion {
                finite(&at("motion.center"), &m.center)?;
                finite(&at("motion.velocity"), &m.velocity)?;
                finite(&at("motion.angular_velocity"), &m.angular_velocity)?;
            }
        }
        for (i, t) in self.tracers.iter().enumerate() {
            let at = |f: &str| format!("tracer[{i}].{f}");
            finite(&at("lo"), &t.lo)?;
            finite(&at("hi"), &t.hi)?;
            if (0..3).any(|a| t.lo[a] > t.hi[a]) {
                return Err(Error::config(at("hi"), "must be >= lo on every axis"));
            }
            if !(t.rate.is_finite() && t.rate >= 0.0) {
                return Err(Error::config(at("rate"), "must be finite and >= 0"));
            }
        }
        if self.run.regions == 0 || self.run.regions > d[2] {
            return Err(Error::config("run.regions", format!("must lie in 1..={}", d[2])));
        }
        let t = &self.tune;
        if t.n_steps == 0 {
            return Err(Error::config("tune.n_steps", "must be >= 1"));
        }
        for (name, list) in [("tune.ell", &t.ell), ("tune.alpha", &t.alpha)] {
            if let Some(l) = list {
                if l.is_empty() || l.contains(&0) {
                    return Err(Error::config(name, "must be a non-empty list of values >= 1"));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as 64 hex digits. Formatting and
    /// key order of the source file do not affect it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dims(&self) -> Dims {
        let [nx, ny, nz] = self.grid.dims;
        Dims::new(nx, ny, nz)
    }

    pub fn collision_model(&self) -> Result<CollisionModel> {
        let c = &self.collision;
        let mut m = CollisionModel::new(c.kind, self.physics.nu)?;
        if let Some(r) = c.bulk_rate {
            m = m.with_bulk_rate(r)?;
        }
        if let Some(r) = c.high_order_rate {
            m = m.with_high_order_rate(r)?;
        }
        Ok(m.with_policy(c.policy))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut s = SolverConfig::new(self.collision_model()?, self.boundary.to_set()?);
        s.body_force = self.physics.body_force;
        s.schedule = self.collision.schedule;
        s.accumulation = self.run.accumulation;
        Ok(s)
    }

    /// Samples every configured solid.
    pub fn build_solids(&self) -> Result<Vec<(Solid, SamplingReport)>> {
        self.solids.iter().map(|s| s.build()).collect()
    }

    /// Tuning grid for a scene with shortest solid edge `l_m` cells.
    pub fn tune_spec(&self, l_m: usize) -> TuneSpec {
        let mut spec = TuneSpec::new(l_m, self.dims().len(), self.tune.n_steps);
        spec.warmup = self.tune.warmup;
        if let Some(l) = &self.tune.ell {
            spec.ell = l.clone();
        }
        if let Some(a) = &self.tune.alpha {
            spec.alpha = a.clone();
        }
        spec
    }
}

impl SolidConfig {
    pub fn mesh(&self) -> Result<TriMesh> {
        Ok(match &self.shape {
            Shape::Sphere { center, radius, resolution } => TriMesh::sphere(*center, *radius, *resolution),
            Shape::BumpySphere {
                center,
                radius,
                amp,
                k,
                resolution,
            } => TriMesh::bumpy_sphere(*center, *radius, *amp, *k, *resolution),
            Shape::Mesh { path, scale, offset } => TriMesh::load(path)?.transformed(*scale, *offset),
        })
    }

    pub fn build(&self) -> Result<(Solid, SamplingReport)> {
        let mesh = self.mesh()?;
        let motion = self.motion.unwrap_or_else(|| {
            let center = match &self.shape {
                Shape::Sphere { center, .. } | Shape::BumpySphere { center, .. } => *center,
                Shape::Mesh { .. } => {
                    let (lo, hi) = mesh.bbox();
                    [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]))
                }
            };
            RigidMotion::fixed(center)
        });
        Ok(Solid::from_mesh(&self.name, &mesh, self.poisson_radius, self.seed, self.method, motion))
    }
}
