//! The gradient-based pumping loop: observe the channel, weight each pair by
//! the derivative of its utility at the current average rate, pump the
//! top-weighted feasible edge set, and fold the served rates into the
//! running averages.

use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelProcess, RngState};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::pairs::PairMatrix;
use crate::select::{select_topology, WeightMatrix};
use crate::skr::skr_if_pumped;
use crate::trace::{Metrics, TraceRecord};

/// Relative size of the default average-rate initialization.
pub const INIT_SCALE: f64 = 1e-6;

/// Relative size of the positivity floor applied after every update. Keeps
/// the fairness weights finite when a pair is never served; regularization
/// at the artifact level, far below any achievable rate.
pub const FLOOR_SCALE: f64 = 1e-12;

/// Utility family the gradient weights come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strategy {
    /// Logarithmic utility; weight `1/xbar`. Balances fairness and
    /// throughput.
    ProportionalFair,
    /// Linear utility; weight 1. Maximizes the instantaneous total rate.
    Greedy,
    /// Rate-weighted logarithmic utility; weight `1/(S*xbar)`. Serves the
    /// least-served pairs regardless of their current rate.
    RoundRobin,
    /// `alpha`-fair utility; weight `xbar^(-alpha)`. `alpha = 0` matches
    /// Greedy, `alpha = 1` matches ProportionalFair.
    AlphaFair(f64),
}

impl Strategy {
    /// Exponent of the alpha-fair family this strategy's utility belongs
    /// to, when it does (RoundRobin's rate-weighted utility does not).
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Strategy::ProportionalFair => Some(1.0),
            Strategy::Greedy => Some(0.0),
            Strategy::AlphaFair(a) => Some(*a),
            Strategy::RoundRobin => None,
        }
    }

    /// Short token used in CLI arguments, file names and CSV columns.
    pub fn label(&self) -> String {
        match self {
            Strategy::ProportionalFair => "pf".into(),
            Strategy::Greedy => "greedy".into(),
            Strategy::RoundRobin => "rr".into(),
            Strategy::AlphaFair(a) => format!("alpha:{a}"),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pf" => Ok(Strategy::ProportionalFair),
            "greedy" => Ok(Strategy::Greedy),
            "rr" => Ok(Strategy::RoundRobin),
            _ => {
                let a = s
                    .strip_prefix("alpha:")
                    .ok_or_else(|| Error::Domain(format!("unknown strategy {s:?} (expected pf|greedy|rr|alpha:<a>)")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad alpha in {s:?}: {e}")))?;
                if !(a >= 0.0) {
                    return Err(Error::Domain(format!("alpha must be nonnegative, got {a}")));
                }
                Ok(Strategy::AlphaFair(a))
            }
        }
    }
}

/// Step-size schedule for the average update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// Constant gamma in (0, 1]: an exponential moving average.
    Fixed(f64),
    /// `gamma(t) = 1/(t+1)`: a cumulative moving average.
    Harmonic,
}

impl StepSchedule {
    pub fn fixed(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!("fixed step size must be in (0, 1], got {gamma}")));
        }
        Ok(StepSchedule::Fixed(gamma))
    }

    pub fn gamma(&self, t: u64) -> f64 {
        match self {
            StepSchedule::Fixed(g) => *g,
            StepSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StepSchedule::Fixed(g) => format!("fixed:{g}"),
            StepSchedule::Harmonic => "harmonic".into(),
        }
    }
}

impl FromStr for StepSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(StepSchedule::Harmonic),
            _ => {
                let g = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::Domain(format!("unknown schedule {s:?} (expected harmonic|fixed:<g>)")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad step size in {s:?}: {e}")))?;
                StepSchedule::fixed(g)
            }
        }
    }
}

/// Initialization of the running averages.
#[derive(Clone, Debug)]
pub enum XbarInit {
    /// The same positive value for every pair.
    Uniform(f64),
    /// A per-pair matrix of positive values.
    PerPair(PairMatrix),
    /// `INIT_SCALE` times the network's best achievable rate.
    Default,
}

/// Running per-pair average rates and the step count; the scheduler's whole
/// memory.
#[derive(Clone, Debug)]
pub struct AvgSkrState {
    pub xbar: PairMatrix,
    pub t: u64,
}

impl AvgSkrState {
    pub fn metrics(&self) -> crate::error::Result<Metrics> {
        Metrics::of(&self.xbar)
    }
}

/// Gradient weights `U'(xbar)` for one step.
///
/// RoundRobin pairs whose pumped rate would be zero are marked ineligible
/// (weight 0) rather than dividing by zero; they would yield no keys anyway.
pub fn gradient_weights(
    strategy: Strategy,
    xbar: &PairMatrix,
    skr_if_pumped: &PairMatrix,
) -> Result<WeightMatrix> {
    if let Strategy::AlphaFair(a) = strategy {
        if !(a >= 0.0) {
            return Err(Error::Domain(format!("alpha must be nonnegative, got {a}")));
        }
    }
    let n = xbar.n();
    let mut w = PairMatrix::zeros(n);
    for ((p, x), &s) in xbar.entries().zip(skr_if_pumped.values()) {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("average SKR for pair {p} must be positive, got {x}")));
        }
        let weight = match strategy {
            Strategy::ProportionalFair => 1.0 / x,
            Strategy::Greedy => 1.0,
            Strategy::RoundRobin => {
                if s > 0.0 {
                    1.0 / (s * x)
                } else {
                    0.0
                }
            }
            Strategy::AlphaFair(a) => x.powf(-a),
        };
        w.set(p, weight);
    }
    Ok(w)
}

/// One average update: `xbar + gamma * (served - xbar)`, floored at `floor`.
pub fn update_average(xbar: f64, served: f64, gamma: f64, floor: f64) -> f64 {
    debug_assert!(gamma > 0.0 && gamma <= 1.0);
    debug_assert!(served >= 0.0);
    (xbar + gamma * (served - xbar)).max(floor)
}

/// Everything one run needs besides the network itself.
#[derive(Clone, Debug)]
pub struct RunParams {
    pub strategy: Strategy,
    pub schedule: StepSchedule,
    pub process: ChannelProcess,
    pub horizon: u64,
    pub seed: u64,
    pub xbar_init: XbarInit,
}

/// Executes the pumping loop for `horizon` steps and returns the full trace.
///
/// Record 0 holds the initial state; records 1..=horizon each hold the
/// sampled channel, the pumped edges with their served rates, and the
/// post-update averages. Deterministic given the seed.
pub fn run(config: &NetworkConfig, params: &RunParams) -> Result<Vec<TraceRecord>> {
    if params.horizon < 1 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let max_s = config.max_achievable_skr();
    let floor = FLOOR_SCALE * max_s;
    let xbar = match &params.xbar_init {
        XbarInit::Uniform(v) => {
            if !(*v > 0.0) {
                return Err(Error::Domain(format!("xbar_init must be positive, got {v}")));
            }
            PairMatrix::uniform(config.n(), *v)
        }
        XbarInit::PerPair(m) => {
            if m.n() != config.n() {
                return Err(Error::Domain("xbar_init matrix size mismatch".into()));
            }
            if m.values().iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain("xbar_init entries must be positive".into()));
            }
            m.clone()
        }
        XbarInit::Default => {
            if !(max_s > 0.0) {
                return Err(Error::Domain("default xbar_init needs a nonzero achievable rate".into()));
            }
            PairMatrix::uniform(config.n(), INIT_SCALE * max_s)
        }
    };

    let mut rng = RngState::new(params.seed);
    let mut process = params.process.clone();
    let mut state = AvgSkrState { xbar, t: 0 };
    let mut records = Vec::with_capacity(params.horizon as usize + 1);
    records.push(TraceRecord {
        t: 0,
        state: "init".into(),
        edges: Vec::new(),
        served: Vec::new(),
        xbar: state.xbar.clone(),
        metrics: state.metrics()?,
    });

    for t in 1..=params.horizon {
        let chi = process.sample(t, &mut rng);
        let rates = skr_if_pumped(config, &chi);
        let weights = gradient_weights(params.strategy, &state.xbar, &rates)?;
        let topo = select_topology(&weights, &rates, config.capacity());
        let gamma = params.schedule.gamma(t);
        for (p, s) in rates.entries() {
            let served = if topo.contains(p) { s } else { 0.0 };
            let updated = update_average(state.xbar.get_pair(p), served, gamma, floor);
            state.xbar.set(p, updated);
        }
        state.t = t;
        let served: Vec<f64> = topo.edges().iter().map(|&e| rates.get_pair(e)).collect();
        records.push(TraceRecord {
            t,
            state: chi.token(),
            edges: topo.edges().to_vec(),
            served,
            xbar: state.xbar.clone(),
            metrics: state.metrics()?,
        });
    }
    Ok(records)
}
