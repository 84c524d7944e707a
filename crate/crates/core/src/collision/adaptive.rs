//! Relaxation-rate policies for the high-order moments.

use serde::{Deserialize, Serialize};

use super::basis::FIRST_HIGH_ORDER_ROW;
use crate::lattice::{CS2, Q};

pub const RATE_MIN: f64 = 0.05;
pub const RATE_MAX: f64 = 1.95;

/// Local fields seen by a policy at one node.
#[derive(Debug, Clone, Copy)]
pub struct LocalState<'a> {
    pub rho: f64,
    pub u: [f64; 3],
    pub dev: &'a [f64; Q],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdaptivePolicy {
    /// Configured rates, unchanged.
    #[default]
    Constant,
    /// Pushes high-order rates toward 1 as the local non-equilibrium grows.
    ///
    /// `activity = (|u| / c_s) * ||f - f_eq|| / rho`, and each high-order rate
    /// becomes `base + (1 - base) * (1 - exp(-gain * activity))`.
    Activity { gain: f64 },
}

impl AdaptivePolicy {
    pub const DEFAULT_GAIN: f64 = 50.0;

    pub fn activity() -> Self {
        AdaptivePolicy::Activity {
            gain: Self::DEFAULT_GAIN,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AdaptivePolicy::Constant)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdaptivePolicy::Constant => "constant",
            AdaptivePolicy::Activity { .. } => "activity",
        }
    }
}

#[inline]
pub fn clamp_rate(r: f64) -> f64 {
    r.clamp(RATE_MIN, RATE_MAX)
}

/// Rates for one node. Rows below the high-order block are returned as given;
/// high-order rows pass through the policy and the clamp.
pub fn adaptive_rates(policy: &AdaptivePolicy, base: &[f64; Q], local: &LocalState) -> [f64; Q] {
    let mut out = *base;
    match *policy {
        AdaptivePolicy::Constant => {
            for r in &mut out[FIRST_HIGH_ORDER_ROW..] {
                *r = clamp_rate(*r);
            }
        }
        AdaptivePolicy::Activity { gain } => {
            let speed = (local.u[0] * local.u[0] + local.u[1] * local.u[1] + local.u[2] * local.u[2]).sqrt();
            let norm = local.dev.iter().map(|d| d * d).sum::<f64>().sqrt();
            let activity = speed / CS2.sqrt() * norm / local.rho;
            let blend = 1.0 - (-gain * activity).exp();
            for r in &mut out[FIRST_HIGH_ORDER_ROW..] {
                *r = clamp_rate(*r + (1.0 - *r) * blend);
            }
        }
    }
    out
}
