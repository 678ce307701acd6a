//! Private-signal models, described through the conditional laws of the
//! private log-likelihood ratio L.
//!
//! Each model exposes G_+ and G_- (the CDFs of L given the state) together
//! with log-space versions of both tails, a sampler, and the tilted integral
//! used to verify that the log-likelihood ratio of L is L itself.

mod gaussian;
mod polytail;
mod ratetarget;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gaussian::GaussianSignalModel;
pub use polytail::{poly_tail_normalizer, PolyTailSignalModel};
pub use ratetarget::{build_rate_target, RateTargetSignalModel, DEFAULT_CUTOFF_MASS, DEFAULT_MAX_SUPPORT};

/// The binary state of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateOfWorld {
    Minus,
    Plus,
}

impl StateOfWorld {
    pub fn sign(self) -> i8 {
        match self {
            StateOfWorld::Minus => -1,
            StateOfWorld::Plus => 1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            -1 => Some(StateOfWorld::Minus),
            1 => Some(StateOfWorld::Plus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            StateOfWorld::Minus => StateOfWorld::Plus,
            StateOfWorld::Plus => StateOfWorld::Minus,
        }
    }
}

impl Serialize for StateOfWorld {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for StateOfWorld {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        StateOfWorld::from_sign(v)
            .ok_or_else(|| serde::de::Error::custom(format!("state must be -1 or +1, got {v}")))
    }
}

/// Conditional distributions of the private log-likelihood ratio.
///
/// Implementations are immutable after construction, so one instance can be
/// shared by every worker; randomness always comes from the caller.
pub trait SignalModel: Send + Sync {
    /// G_state(x) = P(L <= x | state).
    fn cdf(&self, state: StateOfWorld, x: f64) -> f64;

    /// ln G_state(x), accurate when G underflows.
    fn ln_cdf(&self, state: StateOfWorld, x: f64) -> f64;

    /// ln(1 - G_state(x)), accurate when the survival underflows.
    fn ln_sf(&self, state: StateOfWorld, x: f64) -> f64;

    fn sf(&self, state: StateOfWorld, x: f64) -> f64 {
        self.ln_sf(state, x).exp()
    }

    /// Draws one L from the conditional law given `state`.
    fn sample(&self, state: StateOfWorld, rng: &mut dyn RngCore) -> f64;

    /// The integral of e^z against the law of L given the minus state, over
    /// (-inf, x]. Equals G_+(x) for a genuine log-likelihood ratio.
    fn tilted_minus_cdf(&self, x: f64) -> Result<f64>;

    /// Whether L has atoms (tolerances for identity checks differ).
    fn is_discrete(&self) -> bool;

    /// The serializable description this model was built from.
    fn spec(&self) -> ModelSpec;
}

/// JSON description of a model: `{"family": "gaussian", "sigma": 2.0}` etc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Gaussian {
        sigma: f64,
    },
    Polytail {
        k: f64,
    },
    Ratetarget {
        q_table: Vec<f64>,
        #[serde(default = "default_cutoff")]
        cutoff_mass: f64,
        #[serde(default = "default_max_support")]
        max_support: usize,
    },
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF_MASS
}

fn default_max_support() -> usize {
    DEFAULT_MAX_SUPPORT
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Gaussian { .. } => "gaussian",
            ModelSpec::Polytail { .. } => "polytail",
            ModelSpec::Ratetarget { .. } => "ratetarget",
        }
    }

    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            ModelSpec::Gaussian { sigma } => Model::Gaussian(GaussianSignalModel::new(*sigma)?),
            ModelSpec::Polytail { k } => Model::PolyTail(PolyTailSignalModel::new(*k)?),
            ModelSpec::Ratetarget {
                q_table,
                cutoff_mass,
                max_support,
            } => Model::RateTarget(build_rate_target(q_table, *cutoff_mass, *max_support)?),
        })
    }
}

/// Any of the built-in models.
#[derive(Debug, Clone)]
pub enum Model {
    Gaussian(GaussianSignalModel),
    PolyTail(PolyTailSignalModel),
    RateTarget(RateTargetSignalModel),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Gaussian($m) => $e,
            Model::PolyTail($m) => $e,
            Model::RateTarget($m) => $e,
        }
    };
}

impl SignalModel for Model {
    fn cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        dispatch!(self, m => m.cdf(state, x))
    }
    fn ln_cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        dispatch!(self, m => m.ln_cdf(state, x))
    }
    fn ln_sf(&self, state: StateOfWorld, x: f64) -> f64 {
        dispatch!(self, m => m.ln_sf(state, x))
    }
    fn sf(&self, state: StateOfWorld, x: f64) -> f64 {
        dispatch!(self, m => m.sf(state, x))
    }
    fn sample(&self, state: StateOfWorld, rng: &mut dyn RngCore) -> f64 {
        dispatch!(self, m => m.sample(state, rng))
    }
    fn tilted_minus_cdf(&self, x: f64) -> Result<f64> {
        dispatch!(self, m => m.tilted_minus_cdf(x))
    }
    fn is_discrete(&self) -> bool {
        dispatch!(self, m => m.is_discrete())
    }
    fn spec(&self) -> ModelSpec {
        dispatch!(self, m => m.spec())
    }
}

/// Free-function form of [`SignalModel::cdf`].
pub fn llr_cdf<M: SignalModel + ?Sized>(model: &M, state: StateOfWorld, x: f64) -> f64 {
    model.cdf(state, x)
}

/// Free-function form of [`SignalModel::ln_sf`].
pub fn llr_log_sf<M: SignalModel + ?Sized>(model: &M, state: StateOfWorld, x: f64) -> f64 {
    model.ln_sf(state, x)
}

/// Free-function form of [`SignalModel::sample`].
pub fn sample_llr<M: SignalModel + ?Sized>(
    model: &M,
    state: StateOfWorld,
    rng: &mut dyn RngCore,
) -> f64 {
    model.sample(state, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub max_error: f64,
    pub worst_x: f64,
}

/// Checks G_+(x) against the tilted minus-state integral on `grid` and
/// returns the largest absolute discrepancy.
pub fn check_llr_identity<M: SignalModel + ?Sized>(model: &M, grid: &[f64]) -> Result<IdentityReport> {
    let mut report = IdentityReport {
        max_error: 0.0,
        worst_x: f64::NAN,
    };
    for &x in grid {
        if !x.is_finite() {
            return Err(Error::validation("grid", format!("non-finite grid point {x}")));
        }
        let err = (model.cdf(StateOfWorld::Plus, x) - model.tilted_minus_cdf(x)?).abs();
        if err > report.max_error || report.worst_x.is_nan() {
            report = IdentityReport {
                max_error: err,
                worst_x: x,
            };
        }
    }
    Ok(report)
}
