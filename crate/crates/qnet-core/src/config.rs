//! Network description, validation, and config-file ingestion.

use std::path::Path;

use serde::Deserialize;

use crate::channel::ChannelProcessSpec;
use crate::error::{Error, Result};
use crate::pairs::{enumerate_pairs, Pair, PairMatrix};

/// Default pulse repetition rate when a config omits it. Only relative rates
/// matter to the schedulers; the absolute scale is presentation.
pub const DEFAULT_REPETITION_RATE_HZ: f64 = 1e6;

/// Default fiber attenuation, dB/km, used only when a direct-matrix config
/// omits the physics fields entirely.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Where instantaneous secret-key rates come from.
#[derive(Clone, Debug)]
pub enum SkrMode {
    /// Rates derived from fiber length, attenuation and QBER.
    Physics,
    /// Rates taken verbatim from a per-pair matrix (bits/s).
    DirectMatrix(PairMatrix),
}

/// Static description of the network: node count, source capacity, and the
/// per-pair channel parameters. Immutable after construction and safe to
/// share across threads.
#[derive(Clone, Debug)]
pub struct NetworkConfig {
    n: usize,
    capacity: usize,
    attenuation_db_per_km: f64,
    repetition_rate_hz: f64,
    distances_km: Option<PairMatrix>,
    base_qber: Option<PairMatrix>,
    skr_mode: SkrMode,
}

impl NetworkConfig {
    /// Physics-mode network: SKR computed from distances and QBER.
    pub fn physics(
        n: usize,
        capacity: usize,
        attenuation_db_per_km: f64,
        repetition_rate_hz: f64,
        distances_km: PairMatrix,
        base_qber: PairMatrix,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            n,
            capacity,
            attenuation_db_per_km,
            repetition_rate_hz,
            distances_km: Some(distances_km),
            base_qber: Some(base_qber),
            skr_mode: SkrMode::Physics,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Direct-matrix network: SKR taken from an explicit per-pair matrix.
    pub fn direct(n: usize, capacity: usize, direct_skr: PairMatrix) -> Result<Self> {
        let cfg = NetworkConfig {
            n,
            capacity,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            repetition_rate_hz: DEFAULT_REPETITION_RATE_HZ,
            distances_km: None,
            base_qber: None,
            skr_mode: SkrMode::DirectMatrix(direct_skr),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 nodes, got {}", self.n)));
        }
        if self.capacity < 1 {
            return Err(Error::Config("source capacity must be at least 1".into()));
        }
        if !(self.attenuation_db_per_km > 0.0) {
            return Err(Error::Config(format!(
                "attenuation must be positive, got {}",
                self.attenuation_db_per_km
            )));
        }
        if !(self.repetition_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "repetition rate must be positive, got {}",
                self.repetition_rate_hz
            )));
        }
        if let SkrMode::Physics = self.skr_mode {
            if self.distances_km.is_none() || self.base_qber.is_none() {
                return Err(Error::Config(
                    "physics mode requires distances_km and qber matrices".into(),
                ));
            }
        }
        if let Some(d) = &self.distances_km {
            check_matrix_n(d, self.n, "distances_km")?;
            for (p, v) in d.entries() {
                if v < 0.0 {
                    return Err(Error::Config(format!("distance for pair {p} is negative: {v}")));
                }
            }
        }
        if let Some(q) = &self.base_qber {
            check_matrix_n(q, self.n, "qber")?;
            check_qber_bounds(q)?;
        }
        if let SkrMode::DirectMatrix(s) = &self.skr_mode {
            check_matrix_n(s, self.n, "direct_skr")?;
            for (p, v) in s.entries() {
                if v < 0.0 {
                    return Err(Error::Config(format!("direct SKR for pair {p} is negative: {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn attenuation_db_per_km(&self) -> f64 {
        self.attenuation_db_per_km
    }

    pub fn repetition_rate_hz(&self) -> f64 {
        self.repetition_rate_hz
    }

    pub fn distances_km(&self) -> Option<&PairMatrix> {
        self.distances_km.as_ref()
    }

    pub fn base_qber(&self) -> Option<&PairMatrix> {
        self.base_qber.as_ref()
    }

    pub fn skr_mode(&self) -> &SkrMode {
        &self.skr_mode
    }

    /// Pairs of this network in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = Pair> {
        enumerate_pairs(self.n)
    }

    pub fn pair_count(&self) -> usize {
        crate::pairs::pair_count(self.n)
    }

    /// Channel state the network starts in: the configured QBER matrix, or
    /// an error-free channel when none is given (direct-matrix mode).
    pub fn base_state(&self) -> ChannelState {
        match &self.base_qber {
            Some(q) => ChannelState::new(q.clone(), None).expect("validated at construction"),
            None => ChannelState::new(PairMatrix::zeros(self.n), None).expect("zeros are valid"),
        }
    }

    /// Upper bound on any achievable instantaneous SKR, used to scale the
    /// scheduler's initialization and positivity floor.
    pub fn max_achievable_skr(&self) -> f64 {
        match &self.skr_mode {
            SkrMode::DirectMatrix(s) => s.values().iter().copied().fold(0.0, f64::max),
            SkrMode::Physics => {
                let d = self.distances_km.as_ref().expect("physics mode has distances");
                d.values()
                    .iter()
                    .map(|&l| {
                        crate::skr::transmissivity(l, self.attenuation_db_per_km)
                            .expect("validated at construction")
                            * self.repetition_rate_hz
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn check_matrix_n(m: &PairMatrix, n: usize, name: &str) -> Result<()> {
    if m.n() != n {
        return Err(Error::Config(format!("{name} matrix is {}x{0}, expected {n}x{n}", m.n())));
    }
    Ok(())
}

fn check_qber_bounds(q: &PairMatrix) -> Result<()> {
    for (p, v) in q.entries() {
        if !(0.0..=0.5).contains(&v) {
            return Err(Error::Config(format!("QBER out of range [0, 0.5] for pair {p}: {v}")));
        }
    }
    Ok(())
}

/// One realization of the per-pair channel conditions: a QBER matrix plus an
/// optional label for finite-state sets.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState {
    qber: PairMatrix,
    state_id: Option<String>,
}

impl ChannelState {
    pub fn new(qber: PairMatrix, state_id: Option<String>) -> Result<Self> {
        check_qber_bounds(&qber)?;
        Ok(ChannelState { qber, state_id })
    }

    pub fn qber(&self) -> &PairMatrix {
        &self.qber
    }

    pub fn qber_mut(&mut self) -> &mut PairMatrix {
        &mut self.qber
    }

    pub fn state_id(&self) -> Option<&str> {
        self.state_id.as_deref()
    }

    /// Stable token identifying this state in traces: the label when one was
    /// given, otherwise an FNV-1a hash of the QBER entries.
    pub fn token(&self) -> String {
        match &self.state_id {
            Some(id) => id.clone(),
            None => format!("{:016x}", fnv1a64(self.qber.values())),
        }
    }
}

fn fnv1a64(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// An edge set the source pumps: at most `capacity` pairs, no duplicates,
/// kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Topology {
    edges: Vec<Pair>,
}

impl Topology {
    pub fn new(edges: impl IntoIterator<Item = Pair>) -> Self {
        let mut edges: Vec<Pair> = edges.into_iter().collect();
        edges.sort();
        edges.dedup();
        Topology { edges }
    }

    pub fn empty() -> Self {
        Topology { edges: Vec::new() }
    }

    pub fn edges(&self) -> &[Pair] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.edges.binary_search(&p).is_ok()
    }

    /// `i-j` tokens joined by `;`, the form used in CSV traces.
    pub fn edge_list_string(&self) -> String {
        self.edges.iter().map(Pair::to_string).collect::<Vec<_>>().join(";")
    }

    /// Checks `|E| <= C` and that all endpoints are in range.
    pub fn check_feasible(&self, config: &NetworkConfig) -> Result<()> {
        if self.edges.len() > config.capacity() {
            return Err(Error::Infeasible(format!(
                "{} edges exceed source capacity {}",
                self.edges.len(),
                config.capacity()
            )));
        }
        for e in &self.edges {
            if e.b() >= config.n() {
                return Err(Error::Infeasible(format!("edge {e} references node outside [0, {})", config.n())));
            }
        }
        Ok(())
    }
}

/// Raw shape of the JSON config document. Matrices are full `n x n`; the
/// loader verifies symmetry rather than assuming it. Presence of
/// `direct_skr` selects direct-matrix mode.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: usize,
    pub capacity: usize,
    #[serde(default)]
    pub attenuation_db_per_km: Option<f64>,
    #[serde(default)]
    pub repetition_rate_hz: Option<f64>,
    #[serde(default)]
    pub distances_km: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub qber: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub direct_skr: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub channel_process: Option<ChannelProcessSpec>,
}

/// A validated config document: the network plus the optional channel
/// process selection that rides along in the same file.
#[derive(Clone, Debug)]
pub struct ConfigDocument {
    pub network: NetworkConfig,
    pub channel_process: Option<ChannelProcessSpec>,
}

/// Validates a parsed config document into a `NetworkConfig`.
pub fn validate_config(raw: RawConfig) -> Result<ConfigDocument> {
    let parse = |rows: &Option<Vec<Vec<f64>>>, name: &str| -> Result<Option<PairMatrix>> {
        match rows {
            None => Ok(None),
            Some(r) => {
                let m = PairMatrix::from_rows(r)
                    .map_err(|e| Error::Config(format!("{name}: {e}")))?;
                Ok(Some(m))
            }
        }
    };
    let distances = parse(&raw.distances_km, "distances_km")?;
    let qber = parse(&raw.qber, "qber")?;
    let direct = parse(&raw.direct_skr, "direct_skr")?;

    let network = match direct {
        Some(s) => {
            let mut cfg = NetworkConfig::direct(raw.n, raw.capacity, s)?;
            // Physics fields are optional here but carried through if given.
            if let Some(a) = raw.attenuation_db_per_km {
                cfg.attenuation_db_per_km = a;
            }
            if let Some(r) = raw.repetition_rate_hz {
                cfg.repetition_rate_hz = r;
            }
            cfg.distances_km = distances;
            cfg.base_qber = qber;
            cfg.validate()?;
            cfg
        }
        None => {
            let attenuation = raw.attenuation_db_per_km.ok_or_else(|| {
                Error::Config("physics mode requires attenuation_db_per_km".into())
            })?;
            let rep = raw.repetition_rate_hz.unwrap_or(DEFAULT_REPETITION_RATE_HZ);
            let distances = distances.ok_or_else(|| {
                Error::Config("physics mode requires distances_km".into())
            })?;
            let qber = qber.ok_or_else(|| Error::Config("physics mode requires qber".into()))?;
            NetworkConfig::physics(raw.n, raw.capacity, attenuation, rep, distances, qber)?
        }
    };
    Ok(ConfigDocument { network, channel_process: raw.channel_process })
}

/// Parses and validates a JSON config document.
pub fn parse_config(json: &str) -> Result<ConfigDocument> {
    let raw: RawConfig = serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    validate_config(raw)
}

/// Loads and validates a JSON config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
