//! Secret-key-rate physics: transmissivity, binary entropy, and the
//! instantaneous per-pair rate matrix.
//!
//! In physics mode a pumped pair (i,j) produces keys at
//! `eta_ij * r * (1 - h(qber_ij))` bits/s, where `eta_ij = 10^(-beta*L/10)`
//! is the fiber transmissivity and `h` is the base-2 binary entropy. A QBER
//! of 0.5 makes the entropy penalty total: no secure keys. Pairs the source
//! is not pumping produce nothing.

use crate::config::{ChannelState, NetworkConfig, SkrMode, Topology};
use crate::error::{Error, Result};
use crate::pairs::PairMatrix;

/// Instantaneous SKR matrix: zero on every pair outside the pumped topology.
pub type SkrMatrix = PairMatrix;

/// Base-2 binary entropy with the limit convention `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument must be in [0, 1], got {x}")));
    }
    Ok(entropy_unchecked(x))
}

fn entropy_unchecked(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Fraction of photons surviving `length` km of fiber at the given
/// attenuation: `10^(-attenuation * length / 10)`.
pub fn transmissivity(length_km: f64, attenuation_db_per_km: f64) -> Result<f64> {
    if length_km < 0.0 {
        return Err(Error::Domain(format!("fiber length must be nonnegative, got {length_km}")));
    }
    if !(attenuation_db_per_km > 0.0) {
        return Err(Error::Domain(format!(
            "attenuation must be positive, got {attenuation_db_per_km}"
        )));
    }
    Ok(10f64.powf(-attenuation_db_per_km * length_km / 10.0))
}

/// Raw key rate: transmissivity times pulse repetition rate.
pub fn raw_key_rate(eta: f64, rep_rate_hz: f64) -> f64 {
    debug_assert!(eta > 0.0 && eta <= 1.0);
    debug_assert!(rep_rate_hz > 0.0);
    eta * rep_rate_hz
}

/// The SKR every pair would get if it were pumped under channel state `chi`.
/// Edge-local: independent of which other pairs are pumped.
pub fn skr_if_pumped(config: &NetworkConfig, chi: &ChannelState) -> PairMatrix {
    let mut out = PairMatrix::zeros(config.n());
    match config.skr_mode() {
        SkrMode::DirectMatrix(s) => {
            for (p, v) in s.entries() {
                out.set(p, v);
            }
        }
        SkrMode::Physics => {
            let d = config.distances_km().expect("physics mode has distances");
            let beta = config.attenuation_db_per_km();
            let r = config.repetition_rate_hz();
            for (p, length) in d.entries() {
                let eta = transmissivity(length, beta).expect("validated at construction");
                let q = chi.qber().get_pair(p);
                out.set(p, raw_key_rate(eta, r) * (1.0 - entropy_unchecked(q)));
            }
        }
    }
    out
}

/// Instantaneous SKR matrix `S(G, chi)`: the pumped-pair rate on every edge
/// of `topology`, zero elsewhere.
pub fn instantaneous_skr(
    config: &NetworkConfig,
    chi: &ChannelState,
    topology: &Topology,
) -> Result<SkrMatrix> {
    topology.check_feasible(config)?;
    let full = skr_if_pumped(config, chi);
    let mut out = PairMatrix::zeros(config.n());
    for &e in topology.edges() {
        out.set(e, full.get_pair(e));
    }
    Ok(out)
}
