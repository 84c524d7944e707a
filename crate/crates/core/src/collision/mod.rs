//! Collision operators.
//!
//! Every operator returns `Omega = -M^-1 D M (f - f_eq)`. Three evaluation
//! routes exist: dense matrices (reference), per-axis factorized transforms
//! (used by the solver) and the merged monomial table.

pub mod adaptive;
pub mod basis;
pub mod batch;
pub mod monomial;

use serde::{Deserialize, Serialize};

pub use adaptive::{adaptive_rates, AdaptivePolicy, LocalState};
pub use basis::{MomentBasis, MomentSpace};
pub use monomial::{MonomialTable, MonomialTerm};

use crate::error::{Error, Result};
use crate::lattice::{Q, SPLIT_INDEX, VELOCITIES_F64, WEIGHTS};
use basis::{finish_inverse, forward_factorized, partial_inverse, FIRST_HIGH_ORDER_ROW};

/// Speed at or above which the truncated equilibrium is flagged.
pub const MACH_LIMIT: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionKind {
    Bgk,
    RmMrt,
    CmMrt,
}

impl CollisionKind {
    pub const ALL: [CollisionKind; 3] = [CollisionKind::Bgk, CollisionKind::RmMrt, CollisionKind::CmMrt];

    pub fn space(self) -> Option<MomentSpace> {
        match self {
            CollisionKind::Bgk => None,
            CollisionKind::RmMrt => Some(MomentSpace::Raw),
            CollisionKind::CmMrt => Some(MomentSpace::Central),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CollisionKind::Bgk => "bgk",
            CollisionKind::RmMrt => "rm-mrt",
            CollisionKind::CmMrt => "cm-mrt",
        }
    }
}

impl std::fmt::Display for CollisionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CollisionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bgk" => Ok(CollisionKind::Bgk),
            "rm-mrt" => Ok(CollisionKind::RmMrt),
            "cm-mrt" => Ok(CollisionKind::CmMrt),
            _ => Err(Error::config("collision.kind", format!("unknown kind {s:?}"))),
        }
    }
}

/// Operator kind with its relaxation rates and adaptive policy.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionModel {
    pub kind: CollisionKind,
    pub nu: f64,
    /// Diagonal of `D` in basis-row order. Ignored by BGK.
    pub rates: [f64; Q],
    pub policy: AdaptivePolicy,
}

/// `1 / (3 nu + 1/2)`.
#[inline]
pub fn omega_from_nu(nu: f64) -> f64 {
    1.0 / (3.0 * nu + 0.5)
}

impl CollisionModel {
    /// Shear rows get `omega_from_nu(nu)`; every other row relaxes at 1.
    pub fn new(kind: CollisionKind, nu: f64) -> Result<Self> {
        let w = omega_from_nu(nu);
        let mut rates = [1.0; Q];
        for r in &mut rates[4..=8] {
            *r = w;
        }
        let m = CollisionModel {
            kind,
            nu,
            rates,
            policy: AdaptivePolicy::Constant,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_rates(mut self, rates: [f64; Q]) -> Result<Self> {
        self.rates = rates;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bulk_rate(mut self, r: f64) -> Result<Self> {
        self.rates[basis::ROW_TRACE] = r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_high_order_rate(mut self, r: f64) -> Result<Self> {
        for v in &mut self.rates[FIRST_HIGH_ORDER_ROW..] {
            *v = r;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: AdaptivePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn omega_nu(&self) -> f64 {
        omega_from_nu(self.nu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::config("fluid.nu", format!("must be finite and > 0, got {}", self.nu)));
        }
        for (r, v) in self.rates.iter().enumerate().skip(4) {
            if !(v.is_finite() && *v > 0.0 && *v < 2.0) {
                return Err(Error::config(
                    "collision.rates",
                    format!("rate for row {r} must lie in (0, 2), got {v}"),
                ));
            }
        }
        if let AdaptivePolicy::Activity { gain } = self.policy {
            if !(gain.is_finite() && gain >= 0.0) {
                return Err(Error::config("collision.policy.gain", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Rates used at one node after the adaptive policy.
    #[inline]
    pub fn local_rates(&self, rho: f64, u: [f64; 3], dev: &[f64; Q]) -> [f64; Q] {
        adaptive_rates(&self.policy, &self.rates, &LocalState { rho, u, dev })
    }
}

/// Second-order truncated Maxwellian.
#[inline]
pub fn equilibrium(rho: f64, u: [f64; 3]) -> [f64; Q] {
    let mut out = [0.0; Q];
    equilibrium_into(rho, u, &mut out);
    out
}

#[inline]
pub fn equilibrium_into(rho: f64, u: [f64; 3], out: &mut [f64; Q]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = equilibrium_component(rho, u, i);
    }
}

/// Component `i` of [`equilibrium`], bit-identical to the full evaluation.
#[inline(always)]
pub fn equilibrium_component(rho: f64, u: [f64; 3], i: usize) -> f64 {
    let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let base = 1.0 - 1.5 * usq;
    let c = VELOCITIES_F64[i];
    let cu = c[0] * u[0] + c[1] * u[1] + c[2] * u[2];
    WEIGHTS[i] * rho * (base + 3.0 * cu + 4.5 * cu * cu)
}

/// Returned when the equilibrium is evaluated beyond [`MACH_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachWarning {
    pub speed: f64,
}

pub fn check_mach(u: [f64; 3]) -> Option<MachWarning> {
    let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    (speed >= MACH_LIMIT).then_some(MachWarning { speed })
}

/// Post-relaxation state of one node, ready to produce any `Omega_i`.
#[derive(Debug, Clone, Copy)]
pub struct Relaxed {
    pub(crate) h: [f64; Q],
    pub(crate) ux: f64,
    pub(crate) direct: bool,
}

impl Relaxed {
    #[inline(always)]
    pub fn omega(&self, i: usize) -> f64 {
        if self.direct {
            self.h[i]
        } else {
            finish_inverse(&self.h, self.ux, i)
        }
    }

    /// Intermediate values a split solver keeps between passes.
    pub fn intermediate(&self) -> &[f64; Q] {
        &self.h
    }
}

/// Last stage of a split evaluation from stored intermediates. `u` is the
/// node velocity; only central moments shift by it.
#[inline(always)]
pub fn finish_from_intermediate(kind: CollisionKind, h: &[f64; Q], u: [f64; 3], i: usize) -> f64 {
    match kind {
        CollisionKind::Bgk => h[i],
        CollisionKind::RmMrt => finish_inverse(h, 0.0, i),
        CollisionKind::CmMrt => finish_inverse(h, u[0], i),
    }
}

/// Relaxes the moments of one node through the factorized transforms.
#[inline]
pub fn relax(f: &[f64; Q], rho: f64, u: [f64; 3], model: &CollisionModel) -> Relaxed {
    let mut dev = equilibrium(rho, u);
    for i in 0..Q {
        dev[i] = f[i] - dev[i];
    }
    match model.kind {
        CollisionKind::Bgk => {
            let w = model.omega_nu();
            let mut h = [0.0; Q];
            for i in 0..Q {
                h[i] = -w * dev[i];
            }
            Relaxed { h, ux: 0.0, direct: true }
        }
        kind => {
            let rates = model.local_rates(rho, u, &dev);
            let shift = if kind == CollisionKind::CmMrt { u } else { [0.0; 3] };
            let mut m = [0.0; Q];
            forward_factorized(&dev, shift, &mut m);
            for r in 0..Q {
                m[r] *= -rates[r];
            }
            let mut h = [0.0; Q];
            partial_inverse(&m, shift, &mut h);
            Relaxed { h, ux: shift[0], direct: false }
        }
    }
}

/// `Omega` for one node.
#[inline]
pub fn collide(f: &[f64; Q], rho: f64, u: [f64; 3], model: &CollisionModel) -> [f64; Q] {
    let r = relax(f, rho, u, model);
    let mut out = [0.0; Q];
    for (i, o) in out.iter_mut().enumerate() {
        *o = r.omega(i);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPass {
    First,
    Second,
}

impl SplitPass {
    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            SplitPass::First => 0..SPLIT_INDEX,
            SplitPass::Second => SPLIT_INDEX..Q,
        }
    }
}

/// One half of `Omega`: indices 0..14 or 14..27.
pub fn collide_split(
    f: &[f64; Q],
    rho: f64,
    u: [f64; 3],
    model: &CollisionModel,
    pass: SplitPass,
) -> Vec<f64> {
    let r = relax(f, rho, u, model);
    pass.range().map(|i| r.omega(i)).collect()
}

/// Reference route through dense `M`, `M^-1`.
pub fn collide_dense(f: &[f64; Q], rho: f64, u: [f64; 3], model: &CollisionModel) -> Result<[f64; Q]> {
    let feq = equilibrium(rho, u);
    let mut dev = [0.0; Q];
    for i in 0..Q {
        dev[i] = f[i] - feq[i];
    }
    let mut out = [0.0; Q];
    match model.kind.space() {
        None => {
            let w = model.omega_nu();
            for i in 0..Q {
                out[i] = -w * dev[i];
            }
        }
        Some(space) => {
            let b = MomentBasis::new(space, u)?;
            let rates = model.local_rates(rho, u, &dev);
            let mut m = &b.forward * nalgebra::DVector::from_column_slice(&dev);
            for r in 0..Q {
                m[r] *= -rates[r];
            }
            let o = &b.inverse * m;
            out.copy_from_slice(o.as_slice());
        }
    }
    Ok(out)
}

/// Table for the model's moment space. BGK uses the raw-space table with
/// every rate equal to `omega_nu`.
pub fn build_monomial_table(model: &CollisionModel) -> MonomialTable {
    monomial::build_for_space(model.kind.space().unwrap_or(MomentSpace::Raw))
}

/// `Omega` through a monomial table: `ft = D M(u)(f - f_eq)` then the merged sum.
pub fn collide_table(
    table: &MonomialTable,
    f: &[f64; Q],
    rho: f64,
    u: [f64; 3],
    model: &CollisionModel,
) -> [f64; Q] {
    let feq = equilibrium(rho, u);
    let mut dev = [0.0; Q];
    for i in 0..Q {
        dev[i] = f[i] - feq[i];
    }
    let (shift, rates) = match model.kind {
        CollisionKind::Bgk => ([0.0; 3], [model.omega_nu(); Q]),
        CollisionKind::RmMrt => ([0.0; 3], model.local_rates(rho, u, &dev)),
        CollisionKind::CmMrt => (u, model.local_rates(rho, u, &dev)),
    };
    let mut ft = [0.0; Q];
    forward_factorized(&dev, shift, &mut ft);
    for r in 0..Q {
        ft[r] *= rates[r];
    }
    table.evaluate(shift, &ft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(seed: u64) -> ([f64; Q], f64, [f64; 3]) {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(7);
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let u = [0.1 * (next() - 0.5), 0.1 * (next() - 0.5), 0.1 * (next() - 0.5)];
        let rho = 0.9 + 0.2 * next();
        let mut f = equilibrium(rho, u);
        for v in f.iter_mut() {
            *v *= 1.0 + 0.2 * (next() - 0.5);
        }
        // recompute moments so the passed rho/u match f
        let rho: f64 = f.iter().sum();
        let mut j = [0.0; 3];
        for i in 0..Q {
            for a in 0..3 {
                j[a] += VELOCITIES_F64[i][a] * f[i];
            }
        }
        (f, rho, [j[0] / rho, j[1] / rho, j[2] / rho])
    }

    fn mixed_model(kind: CollisionKind) -> CollisionModel {
        let mut rates = [1.0; Q];
        for (r, v) in rates.iter_mut().enumerate().skip(4) {
            *v = 0.6 + 0.045 * r as f64;
        }
        CollisionModel::new(kind, 0.01).unwrap().with_rates(rates).unwrap()
    }

    fn moments_of(o: &[f64; Q]) -> (f64, [f64; 3]) {
        let mut j = [0.0; 3];
        for i in 0..Q {
            for a in 0..3 {
                j[a] += VELOCITIES_F64[i][a] * o[i];
            }
        }
        (o.iter().sum(), j)
    }

    #[test]
    fn equilibrium_at_rest_is_weights() {
        assert_eq!(equilibrium(1.0, [0.0; 3]), WEIGHTS);
        let two = equilibrium(2.0, [0.0; 3]);
        for i in 0..Q {
            assert_eq!(two[i], 2.0 * WEIGHTS[i]);
        }
    }

    #[test]
    fn equilibrium_moments() {
        let f = equilibrium(1.0, [0.05, 0.0, 0.0]);
        let (rho, j) = moments_of(&f);
        assert!((rho - 1.0).abs() < 1e-15);
        assert!((j[0] - 0.05).abs() < 1e-15 && j[1].abs() < 1e-15 && j[2].abs() < 1e-15);
    }

    #[test]
    fn mach_flag() {
        assert!(check_mach([0.1, 0.0, 0.0]).is_none());
        assert!(check_mach([0.3, 0.3, 0.0]).is_some());
    }

    #[test]
    fn zero_deviation_zero_omega() {
        let feq = equilibrium(1.1, [0.02, 0.01, -0.03]);
        for kind in CollisionKind::ALL {
            let m = mixed_model(kind);
            let o = collide(&feq, 1.1, [0.02, 0.01, -0.03], &m);
            assert!(o.iter().all(|v| v.abs() < 1e-15), "{kind}");
            for pass in [SplitPass::First, SplitPass::Second] {
                let p = collide_split(&feq, 1.1, [0.02, 0.01, -0.03], &m, pass);
                assert!(p.iter().all(|v| v.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn equal_rates_reduce_to_bgk() {
        let tau = 0.83;
        for seed in 0..1000 {
            let (f, rho, u) = random_state(seed);
            let feq = equilibrium(rho, u);
            for kind in [CollisionKind::RmMrt, CollisionKind::CmMrt] {
                let m = CollisionModel::new(kind, 0.01)
                    .unwrap()
                    .with_rates([1.0 / tau; Q])
                    .unwrap();
                let o = collide(&f, rho, u, &m);
                for i in 0..Q {
                    let expect = -(f[i] - feq[i]) / tau;
                    assert!((o[i] - expect).abs() <= 1e-13, "{kind} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn conservation_all_kinds() {
        for seed in 0..200 {
            let (f, rho, u) = random_state(seed);
            for kind in CollisionKind::ALL {
                let (m, j) = moments_of(&collide(&f, rho, u, &mixed_model(kind)));
                assert!(m.abs() <= 1e-12);
                assert!(j.iter().all(|v| v.abs() <= 1e-12));
            }
        }
    }

    #[test]
    fn conserved_rates_do_not_matter() {
        let (f, rho, u) = random_state(42);
        for kind in [CollisionKind::RmMrt, CollisionKind::CmMrt] {
            let a = mixed_model(kind);
            let mut rates = a.rates;
            rates[0] = 0.3;
            rates[1] = 1.7;
            rates[2] = 0.1;
            rates[3] = 1.2;
            let b = a.clone().with_rates(rates).unwrap();
            let oa = collide(&f, rho, u, &a);
            let ob = collide(&f, rho, u, &b);
            for i in 0..Q {
                assert!((oa[i] - ob[i]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn fast_route_matches_dense() {
        for seed in 0..300 {
            let (f, rho, u) = random_state(seed);
            for kind in CollisionKind::ALL {
                for policy in [AdaptivePolicy::Constant, AdaptivePolicy::activity()] {
                    let m = mixed_model(kind).with_policy(policy);
                    let fast = collide(&f, rho, u, &m);
                    let dense = collide_dense(&f, rho, u, &m).unwrap();
                    for i in 0..Q {
                        assert!((fast[i] - dense[i]).abs() <= 1e-13, "{kind} {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn table_matches_dense() {
        for kind in CollisionKind::ALL {
            let m = mixed_model(kind);
            let t = build_monomial_table(&m);
            for seed in 0..300 {
                let (f, rho, u) = random_state(seed);
                let a = collide_table(&t, &f, rho, u, &m);
                let d = collide_dense(&f, rho, u, &m).unwrap();
                for i in 0..Q {
                    assert!((a[i] - d[i]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_is_bitwise_concatenation() {
        for seed in 0..300 {
            let (f, rho, u) = random_state(seed);
            for kind in CollisionKind::ALL {
                let m = mixed_model(kind);
                let full = collide(&f, rho, u, &m);
                let a = collide_split(&f, rho, u, &m, SplitPass::First);
                let b = collide_split(&f, rho, u, &m, SplitPass::Second);
                assert_eq!(a.len(), 14);
                assert_eq!(b.len(), 13);
                let cat: Vec<f64> = a.into_iter().chain(b).collect();
                assert_eq!(cat.as_slice(), &full[..]);
            }
        }
    }

    #[test]
    fn validation_rejects_bad_values() {
        assert!(CollisionModel::new(CollisionKind::Bgk, 0.0).is_err());
        assert!(CollisionModel::new(CollisionKind::Bgk, f64::NAN).is_err());
        let m = CollisionModel::new(CollisionKind::CmMrt, 0.01).unwrap();
        assert!(m.clone().with_high_order_rate(2.0).is_err());
        assert!(m.with_bulk_rate(0.0).is_err());
    }

    proptest! {
        #[test]
        fn conservation_prop(
            seed in 0u64..u64::MAX,
            k in 0usize..3,
            w in 0.1f64..1.9,
        ) {
            let (f, rho, u) = random_state(seed);
            let m = CollisionModel::new(CollisionKind::ALL[k], 0.01).unwrap()
                .with_high_order_rate(w).unwrap()
                .with_policy(AdaptivePolicy::activity());
            let (mass, j) = moments_of(&collide(&f, rho, u, &m));
            prop_assert!(mass.abs() <= 1e-12);
            prop_assert!(j.iter().all(|v| v.abs() <= 1e-12));
        }
    }
}
