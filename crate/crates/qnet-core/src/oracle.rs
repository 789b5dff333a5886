//! Exact optimum of the utility maximization over the achievable rate
//! region, for verifying scheduler convergence and benchmarking strategies.
//!
//! The region is the convex hull of the per-state instantaneous rate
//! vectors, mixed over channel states by their stationary probabilities. The
//! solver is a pairwise Frank-Wolfe: its linear subproblem is exactly the
//! weighted topology selection the schedulers already use, forward steps add
//! the current best topology, away steps drain the worst one in the tracked
//! mixture, and the standard Frank-Wolfe gap certifies optimality. Pairwise
//! steps are used because the plain method zigzags between region vertices
//! and cannot certify tight gaps within a reasonable iteration budget.

use std::collections::BTreeMap;

use serde_json::json;

use crate::config::{ChannelState, NetworkConfig, Topology};
use crate::error::{Error, Result};
use crate::pairs::{enumerate_pairs, Pair, PairMatrix};
use crate::select::{enumerate_feasible, select_topology};
use crate::skr::skr_if_pumped;

/// Stop when the Frank-Wolfe gap falls below `tol` (default
/// `1e-6 * |F(x0)|`), giving up after `max_iters`.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: Option<f64>,
    pub max_iters: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: None, max_iters: 100_000 }
    }
}

/// Optimum returned by `solve_utility_optimum`.
#[derive(Clone, Debug)]
pub struct RateRegionSolution {
    /// Node count of the solved network.
    pub n: usize,
    /// Utility exponent the problem was solved for.
    pub alpha: f64,
    /// Optimal average rate per pair, canonical order.
    pub x_star: Vec<f64>,
    /// For each channel state, the active topology mixture (probabilities
    /// sum to 1).
    pub distributions: Vec<Vec<(Topology, f64)>>,
    /// Token of each state, aligned with `distributions`.
    pub state_tokens: Vec<String>,
    /// Utility value at `x_star`, summed over included pairs.
    pub objective: f64,
    /// Frank-Wolfe gap certified for the returned `x_star`.
    pub duality_gap: f64,
    /// Gap threshold the solve aimed for.
    pub tolerance: f64,
    pub iterations: u64,
    /// False when `max_iters` ran out first; `x_star` is then the best
    /// iterate found.
    pub converged: bool,
    /// Pairs with zero rate in every state, dropped from the objective.
    pub excluded_pairs: Vec<Pair>,
}

impl RateRegionSolution {
    /// Structured-text form of the solution for export.
    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<Pair> = enumerate_pairs(self.n).collect();
        let x_star: serde_json::Map<String, serde_json::Value> = pairs
            .iter()
            .zip(&self.x_star)
            .map(|(p, v)| (p.to_string(), json!(v)))
            .collect();
        let distributions: Vec<serde_json::Value> = self
            .distributions
            .iter()
            .zip(&self.state_tokens)
            .map(|(support, token)| {
                let support: Vec<serde_json::Value> = support
                    .iter()
                    .map(|(t, w)| json!({"edges": t.edge_list_string(), "probability": w}))
                    .collect();
                json!({"state": token, "support": support})
            })
            .collect();
        json!({
            "alpha": self.alpha,
            "x_star": x_star,
            "excluded_pairs": self.excluded_pairs.iter().map(Pair::to_string).collect::<Vec<_>>(),
            "distributions": distributions,
            "objective": self.objective,
            "duality_gap": self.duality_gap,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "converged": self.converged,
        })
    }
}

/// For each state, the instantaneous rate vector of every feasible topology
/// (pair-indexed, canonical order). Subject to the enumeration guard.
pub fn region_vertices(
    config: &NetworkConfig,
    states: &[ChannelState],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let topologies: Vec<Topology> =
        enumerate_feasible(config.n(), config.capacity())?.collect();
    let mut out = Vec::with_capacity(states.len());
    for chi in states {
        let rates = skr_if_pumped(config, chi);
        let vectors = topologies
            .iter()
            .map(|t| masked_rates(&rates, t))
            .collect();
        out.push(vectors);
    }
    Ok(out)
}

fn masked_rates(rates: &PairMatrix, topology: &Topology) -> Vec<f64> {
    rates
        .entries()
        .map(|(p, v)| if topology.contains(p) { v } else { 0.0 })
        .collect()
}

/// Total alpha-fair utility of a rate vector: `sum x^(1-alpha)/(1-alpha)`,
/// or `sum ln(x)` at `alpha = 1`.
pub fn evaluate_objective(x: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be nonnegative, got {alpha}")));
    }
    let mut total = 0.0;
    for &v in x {
        if alpha >= 1.0 && !(v > 0.0) {
            return Err(Error::Domain(format!(
                "utility with alpha = {alpha} needs positive rates, got {v}"
            )));
        }
        total += utility(v, alpha);
    }
    Ok(total)
}

fn utility(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x.ln()
    } else {
        x.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

fn marginal_utility(x: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        1.0 / x.max(f64::MIN_POSITIVE)
    } else {
        x.max(f64::MIN_POSITIVE).powf(-alpha)
    }
}

/// Maximizes the total alpha-fair utility of the average rates over the
/// region, as a joint optimization over per-state topology distributions.
pub fn solve_utility_optimum(
    config: &NetworkConfig,
    states: &[ChannelState],
    pi: &[f64],
    alpha: f64,
    opts: SolveOptions,
) -> Result<RateRegionSolution> {
    if states.is_empty() || states.len() != pi.len() {
        return Err(Error::Domain(format!(
            "need matching states and probabilities, got {} and {}",
            states.len(),
            pi.len()
        )));
    }
    if pi.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Domain("state probabilities must be nonnegative".into()));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("state probabilities sum to {total}, expected 1")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be nonnegative, got {alpha}")));
    }

    let n = config.n();
    let m = config.pair_count();
    let capacity = config.capacity();
    let pairs: Vec<Pair> = enumerate_pairs(n).collect();
    let rates: Vec<PairMatrix> = states.iter().map(|chi| skr_if_pumped(config, chi)).collect();

    // Pairs that cannot earn a positive rate in any occurring state are
    // dropped from the objective (their log would be unbounded below).
    let included: Vec<bool> = (0..m)
        .map(|j| rates.iter().zip(pi).any(|(r, &p)| p > 0.0 && r.values()[j] > 0.0))
        .collect();
    let excluded_pairs: Vec<Pair> = pairs
        .iter()
        .zip(&included)
        .filter_map(|(&p, &inc)| (!inc).then_some(p))
        .collect();
    if included.iter().all(|&inc| !inc) {
        return Err(Error::Domain("no pair is achievable at a positive rate".into()));
    }

    // Interior start: a uniform mixture over all single-edge topologies.
    let mut supports: Vec<BTreeMap<Topology, f64>> = (0..states.len())
        .map(|_| {
            pairs
                .iter()
                .map(|&p| (Topology::new([p]), 1.0 / m as f64))
                .collect()
        })
        .collect();

    let x_from_supports = |supports: &[BTreeMap<Topology, f64>]| -> Vec<f64> {
        let mut x = vec![0.0; m];
        for ((support, r), &pk) in supports.iter().zip(&rates).zip(pi) {
            for (topo, wt) in support {
                for &e in topo.edges() {
                    let j = e.index(n);
                    x[j] += pk * wt * r.values()[j];
                }
            }
        }
        x
    };
    let weights_of = |x: &[f64]| -> PairMatrix {
        let mut w = PairMatrix::zeros(n);
        for (&p, (j, &inc)) in pairs.iter().zip(included.iter().enumerate()) {
            if inc {
                w.set(p, marginal_utility(x[j], alpha));
            }
        }
        w
    };
    let objective_of = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&included)
            .filter(|(_, &inc)| inc)
            .map(|(&v, _)| utility(v, alpha))
            .sum()
    };
    // Frank-Wolfe gap of the current iterate: the best forward vertex minus
    // the iterate, measured in the gradient.
    let gap_of = |x: &[f64], w: &PairMatrix| -> f64 {
        let mut gap = 0.0;
        for (r, &pk) in rates.iter().zip(pi) {
            if pk == 0.0 {
                continue;
            }
            let fw = select_topology(w, r, capacity);
            let forward: f64 = fw
                .edges()
                .iter()
                .map(|&e| w.get_pair(e) * r.get_pair(e))
                .sum();
            gap += pk * forward;
        }
        for j in 0..m {
            if included[j] {
                gap -= marginal_utility(x[j], alpha) * x[j];
            }
        }
        gap
    };

    let mut x = x_from_supports(&supports);
    let f0 = objective_of(&x);
    let tol = opts.tol.unwrap_or(1e-6 * f0.abs()).max(1e-12);

    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iters {
        iterations = it;
        let w = weights_of(&x);
        if gap_of(&x, &w) <= tol {
            converged = true;
            break;
        }
        for k in 0..states.len() {
            if pi[k] == 0.0 {
                continue;
            }
            pairwise_step(&mut supports[k], &mut x, &rates[k], pi[k], &included, alpha, capacity, n);
        }
        // Resync with the exact mixture so drift never accumulates.
        x = x_from_supports(&supports);
    }

    // Normalize supports (sums stay at 1 up to rounding) and certify the
    // returned point.
    for support in &mut supports {
        support.retain(|_, wt| *wt > 1e-12);
        let sum: f64 = support.values().sum();
        for wt in support.values_mut() {
            *wt /= sum;
        }
    }
    let x = x_from_supports(&supports);
    let w = weights_of(&x);
    let duality_gap = gap_of(&x, &w);
    if duality_gap <= tol {
        converged = true;
    }

    Ok(RateRegionSolution {
        n,
        alpha,
        x_star: x.clone(),
        distributions: supports
            .into_iter()
            .map(|s| s.into_iter().collect::<Vec<_>>())
            .collect(),
        state_tokens: states.iter().map(ChannelState::token).collect(),
        objective: objective_of(&x),
        duality_gap,
        tolerance: tol,
        iterations,
        converged,
        excluded_pairs,
    })
}

/// One pairwise Frank-Wolfe step inside one state's simplex: shift mass from
/// the worst supported topology toward the current best one, with an exact
/// line search on the concave slice.
#[allow(clippy::too_many_arguments)]
fn pairwise_step(
    support: &mut BTreeMap<Topology, f64>,
    x: &mut [f64],
    rates: &PairMatrix,
    pk: f64,
    included: &[bool],
    alpha: f64,
    capacity: usize,
    n: usize,
) {
    let mut w = PairMatrix::zeros(n);
    for ((p, _), (j, &inc)) in rates.entries().zip(included.iter().enumerate()) {
        if inc {
            w.set(p, marginal_utility(x[j], alpha));
        }
    }
    let forward = select_topology(&w, rates, capacity);
    let score = |topo: &Topology| -> f64 {
        topo.edges().iter().map(|&e| w.get_pair(e) * rates.get_pair(e)).sum()
    };
    let (away, away_weight) = match support
        .iter()
        .min_by(|a, b| score(a.0).total_cmp(&score(b.0)))
    {
        Some((t, wt)) => (t.clone(), *wt),
        None => return,
    };
    if away == forward {
        return;
    }

    // Direction of transferring one unit of mass from `away` to `forward`.
    let mut d = vec![0.0; x.len()];
    for &e in forward.edges() {
        d[e.index(n)] += pk * rates.get_pair(e);
    }
    for &e in away.edges() {
        d[e.index(n)] -= pk * rates.get_pair(e);
    }
    if d.iter().all(|&v| v == 0.0) {
        // Equivalent atoms (identical masked rates): merge them.
        *support.entry(forward).or_insert(0.0) += away_weight;
        support.remove(&away);
        return;
    }

    let deriv = |u: f64| -> f64 {
        let mut s = 0.0;
        for (j, &dj) in d.iter().enumerate() {
            if dj == 0.0 || !included[j] {
                continue;
            }
            if alpha == 0.0 {
                s += dj;
                continue;
            }
            let y = x[j] + u * dj;
            if y <= 0.0 {
                return if dj < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            }
            s += dj * marginal_utility(y, alpha);
        }
        s
    };
    if deriv(0.0) <= 0.0 {
        return;
    }
    let gamma_max = away_weight;
    let gamma = if deriv(gamma_max) >= 0.0 {
        gamma_max
    } else {
        let (mut lo, mut hi) = (0.0, gamma_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if deriv(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    if gamma <= 0.0 {
        return;
    }

    *support.entry(forward).or_insert(0.0) += gamma;
    let remaining = away_weight - gamma;
    if remaining <= 1e-15 {
        support.remove(&away);
    } else {
        support.insert(away, remaining);
    }
    for (xj, dj) in x.iter_mut().zip(&d) {
        *xj += gamma * dj;
    }
}
