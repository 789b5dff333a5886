//! Simulation and optimization of entangled-photon pumping schedules in a
//! QKD network served by one capacity-limited photon source.
//!
//! The source can pump at most C node pairs per step. Each pumped pair
//! earns secret keys at a rate set by its fiber loss and quantum bit error
//! rate; unpumped pairs earn nothing. A scheduler decides, step by step,
//! which pairs to pump: it weights every pair by the derivative of a
//! utility of its running-average rate, picks the feasible edge set with
//! the largest weighted rate sum, and folds the served rates back into the
//! averages. Different utilities give different behavior: proportional
//! fairness (`pf`), pure throughput (`greedy`), strict even-handedness
//! (`rr`), or anything on the alpha-fairness spectrum.
//!
//! The crate also ships an exact rate-region solver (a pairwise Frank-Wolfe
//! whose linear subproblem is the same topology selection) so long-run
//! scheduler behavior can be checked against the true utility optimum, and
//! channel processes for constant, i.i.d., and slowly drifting QBER.
//!
//! Batches of runs execute in parallel via rayon under the `parallel`
//! feature (enabled by default); disable default features for a fully
//! sequential build.

// `!(x > 0.0)` rejects NaN along with zero and negatives; the partial_cmp
// form clippy suggests hides that. Index loops over (i, j) are the natural
// way to scan symmetric matrices.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod batch;
pub mod channel;
pub mod config;
pub mod error;
pub mod oracle;
pub mod pairs;
pub mod scenarios;
pub mod select;
pub mod scheduler;
pub mod skr;
pub mod trace;

pub use batch::{run_batch, run_batch_sequential};
pub use channel::{perturb_qber, ChannelProcess, ChannelProcessSpec, RngState, RNG_ALGORITHM};
pub use config::{
    load_config, parse_config, validate_config, ChannelState, ConfigDocument, NetworkConfig,
    SkrMode, Topology,
};
pub use error::{Error, Result};
pub use oracle::{
    evaluate_objective, region_vertices, solve_utility_optimum, RateRegionSolution, SolveOptions,
};
pub use pairs::{enumerate_pairs, pair_count, NodeId, Pair, PairMatrix};
pub use scenarios::Scenario;
pub use select::{
    enumerate_feasible, feasible_count, select_topology, select_topology_exhaustive, WeightMatrix,
};
pub use scheduler::{
    gradient_weights, run, update_average, AvgSkrState, RunParams, StepSchedule, Strategy,
    XbarInit,
};
pub use skr::{binary_entropy, instantaneous_skr, raw_key_rate, skr_if_pumped, transmissivity, SkrMatrix};
pub use trace::{trace_csv_string, write_trace_csv, Metrics, TraceRecord};
