//! Per-step topology selection: maximize the weighted sum of pumped-pair
//! rates over all edge sets of size at most C.
//!
//! Because each pair's rate is edge-local (pumping one pair does not change
//! another's rate), the argmax decomposes: score every pair by
//! `weight * rate`, drop nonpositive scores, keep the top C. The exhaustive
//! search over all feasible edge sets exists as a reference oracle and must
//! agree with the fast path, including tie-breaks.

use itertools::Itertools;

use crate::config::Topology;
use crate::error::{Error, Result};
use crate::pairs::{enumerate_pairs, pair_count, PairMatrix};

/// Per-pair gradient weights; symmetric, nonnegative, finite.
pub type WeightMatrix = PairMatrix;

/// Largest feasible-set size `enumerate_feasible` will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Feasible topology maximizing the weighted rate sum.
///
/// Pairs are scored by `weights * skr_per_edge`; only strictly positive
/// scores are ever selected (pumping a zero-rate pair gains nothing even
/// when capacity is spare). Ties break in canonical pair order.
pub fn select_topology(
    weights: &WeightMatrix,
    skr_per_edge: &PairMatrix,
    capacity: usize,
) -> Topology {
    let mut scored: Vec<(crate::pairs::Pair, f64)> = weights
        .entries()
        .zip(skr_per_edge.values())
        .filter_map(|((p, w), &s)| {
            let score = w * s;
            (score > 0.0).then_some((p, score))
        })
        .collect();
    // Stable sort keeps canonical order within equal scores.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Topology::new(scored.into_iter().take(capacity).map(|(p, _)| p))
}

/// Number of edge sets of size `0..=capacity` on `n` nodes.
pub fn feasible_count(n: usize, capacity: usize) -> u128 {
    let m = pair_count(n) as u128;
    let mut total: u128 = 0;
    for k in 0..=capacity.min(pair_count(n)) {
        let mut c: u128 = 1;
        for i in 0..k as u128 {
            c = c.saturating_mul(m - i) / (i + 1);
        }
        total = total.saturating_add(c);
    }
    total
}

/// Every feasible topology, exactly once, ordered by size and then
/// lexicographically by canonical pair rank. Guarded so the enumeration
/// stays tractable.
pub fn enumerate_feasible(
    n: usize,
    capacity: usize,
) -> Result<impl Iterator<Item = Topology>> {
    let count = feasible_count(n, capacity);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { count, limit: ENUMERATION_LIMIT });
    }
    let pairs: Vec<_> = enumerate_pairs(n).collect();
    let max_k = capacity.min(pairs.len());
    Ok((0..=max_k).flat_map(move |k| {
        pairs
            .clone()
            .into_iter()
            .combinations(k)
            .map(Topology::new)
    }))
}

/// Brute-force argmax over `enumerate_feasible`, taking the first maximizer
/// in enumeration order. The size-then-lex order makes its tie-break match
/// `select_topology`.
pub fn select_topology_exhaustive(
    weights: &WeightMatrix,
    skr_per_edge: &PairMatrix,
    capacity: usize,
) -> Result<Topology> {
    let n = weights.n();
    let mut best = Topology::empty();
    let mut best_score = 0.0;
    for topo in enumerate_feasible(n, capacity)? {
        let score: f64 = topo
            .edges()
            .iter()
            .map(|&e| weights.get_pair(e) * skr_per_edge.get_pair(e))
            .sum();
        if score > best_score {
            best_score = score;
            best = topo;
        }
    }
    Ok(best)
}
