//! Time evolution of the channel: fixed, finite-state i.i.d., or a clipped
//! random walk on the QBER matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ChannelState, NetworkConfig};
use crate::error::{Error, Result};
use crate::pairs::PairMatrix;

/// Identifier of the deterministic generator backing every random draw;
/// recorded in run metadata so traces can be reproduced.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Seeded deterministic random stream. Identical seed and draw order give an
/// identical sequence; the stream is single-owner.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw on the closed interval `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random_range(0.0..1.0)
    }
}

/// Generator of the channel-state sequence.
///
/// `Fixed` and `FiniteIid` are memoryless; `PerturbationWalk` keeps its
/// current state and re-perturbs every `period` steps, so a run owns its
/// process instance.
#[derive(Clone, Debug)]
pub enum ChannelProcess {
    Fixed(ChannelState),
    FiniteIid { states: Vec<ChannelState>, pi: Vec<f64> },
    PerturbationWalk { current: ChannelState, delta_max: f64, period: u64 },
}

impl ChannelProcess {
    pub fn fixed(state: ChannelState) -> Self {
        ChannelProcess::Fixed(state)
    }

    pub fn finite_iid(states: Vec<ChannelState>, pi: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("finite_iid needs at least one state".into()));
        }
        if states.len() != pi.len() {
            return Err(Error::Config(format!(
                "finite_iid has {} states but {} probabilities",
                states.len(),
                pi.len()
            )));
        }
        if pi.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Config("finite_iid probabilities must be nonnegative".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("finite_iid probabilities sum to {total}, expected 1")));
        }
        Ok(ChannelProcess::FiniteIid { states, pi })
    }

    pub fn perturbation_walk(initial: ChannelState, delta_max: f64, period: u64) -> Result<Self> {
        if !(delta_max > 0.0) {
            return Err(Error::Config(format!("delta_max must be positive, got {delta_max}")));
        }
        if period < 1 {
            return Err(Error::Config("perturbation period must be at least 1".into()));
        }
        Ok(ChannelProcess::PerturbationWalk { current: initial, delta_max, period })
    }

    /// Channel state for step `t`.
    ///
    /// The walk perturbs its state just before returning it whenever
    /// `t > 0` and `t % period == 0`; between perturbations the state
    /// persists unchanged.
    pub fn sample(&mut self, t: u64, rng: &mut RngState) -> ChannelState {
        match self {
            ChannelProcess::Fixed(state) => state.clone(),
            ChannelProcess::FiniteIid { states, pi } => {
                let u = rng.unit();
                let mut cum = 0.0;
                let mut chosen = states.len() - 1;
                for (k, &p) in pi.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        chosen = k;
                        break;
                    }
                }
                states[chosen].clone()
            }
            ChannelProcess::PerturbationWalk { current, delta_max, period } => {
                if t > 0 && t.is_multiple_of(*period) {
                    let next = perturb_qber(current.qber(), *delta_max, rng);
                    *current = ChannelState::new(next, None).expect("perturbation preserves bounds");
                }
                current.clone()
            }
        }
    }
}

/// Adds one uniform draw from `[-delta_max, +delta_max]` to each pair's QBER
/// (in canonical pair order) and clips the result to `[0, 0.5]`. Symmetry
/// and the zero diagonal are preserved by construction.
pub fn perturb_qber(qber: &PairMatrix, delta_max: f64, rng: &mut RngState) -> PairMatrix {
    let mut out = qber.clone();
    for v in out.values_mut() {
        let delta = if delta_max == 0.0 { 0.0 } else { rng.uniform(-delta_max, delta_max) };
        *v = (*v + delta).clamp(0.0, 0.5);
    }
    out
}

/// Channel-process selection as it appears in the config document under the
/// `channel_process` key.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelProcessSpec {
    /// A constant channel. Defaults to the network's base QBER matrix.
    Fixed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qber: Option<Vec<Vec<f64>>>,
    },
    /// A fresh state drawn from `pi` at every step.
    FiniteIid { states: Vec<RawStateSpec>, pi: Vec<f64> },
    /// Clipped random walk on the QBER matrix, perturbed every `period_t`
    /// steps.
    PerturbationWalk { delta_max: f64, period_t: u64 },
}

/// One labeled state inside a `finite_iid` block.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStateSpec {
    pub qber: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl ChannelProcessSpec {
    /// Resolves the spec against a network into a runnable process.
    pub fn build(&self, config: &NetworkConfig) -> Result<ChannelProcess> {
        match self {
            ChannelProcessSpec::Fixed { qber } => {
                let state = match qber {
                    None => config.base_state(),
                    Some(rows) => ChannelState::new(PairMatrix::from_rows(rows)?, None)?,
                };
                Ok(ChannelProcess::fixed(state))
            }
            ChannelProcessSpec::FiniteIid { states, pi } => {
                let states = states
                    .iter()
                    .map(|s| {
                        let m = PairMatrix::from_rows(&s.qber)?;
                        if m.n() != config.n() {
                            return Err(Error::Config(format!(
                                "channel state matrix is {}x{0}, expected {1}x{1}",
                                m.n(),
                                config.n()
                            )));
                        }
                        ChannelState::new(m, s.id.clone())
                    })
                    .collect::<Result<Vec<_>>>()?;
                ChannelProcess::finite_iid(states, pi.clone())
            }
            ChannelProcessSpec::PerturbationWalk { delta_max, period_t } => {
                ChannelProcess::perturbation_walk(config.base_state(), *delta_max, *period_t)
            }
        }
    }
}
