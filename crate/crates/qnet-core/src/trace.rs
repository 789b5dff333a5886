//! Per-step trace records, summary metrics, and CSV export.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::pairs::{Pair, PairMatrix};

/// Summary statistics of an average-rate vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// Sum of natural logs over pairs.
    pub log_sum: f64,
    /// Geometric mean over pairs.
    pub geo_mean: f64,
    /// Plain sum over pairs.
    pub total: f64,
    /// Jain fairness index: `(sum x)^2 / (m * sum x^2)`, 1 at perfect
    /// equality.
    pub jain: f64,
}

impl Metrics {
    pub fn of(xbar: &PairMatrix) -> Result<Metrics> {
        let m = xbar.pair_count() as f64;
        let mut log_sum = 0.0;
        let mut total = 0.0;
        let mut sq = 0.0;
        for (p, v) in xbar.entries() {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("metrics need positive averages; pair {p} is {v}")));
            }
            log_sum += v.ln();
            total += v;
            sq += v * v;
        }
        Ok(Metrics {
            log_sum,
            geo_mean: (log_sum / m).exp(),
            total,
            jain: total * total / (m * sq),
        })
    }
}

/// One step of a run: what the channel looked like, what was pumped, what
/// each pumped pair was served, and the averages after the update.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub t: u64,
    /// Channel-state label or content hash.
    pub state: String,
    /// Pumped edges, canonical order.
    pub edges: Vec<Pair>,
    /// Served rate for each pumped edge, aligned with `edges`.
    pub served: Vec<f64>,
    /// Averages after this step's update.
    pub xbar: PairMatrix,
    pub metrics: Metrics,
}

/// Writes a trace as CSV: header
/// `t,strategy,seed,edge_list,log_sum,geo_mean,total,jain` plus one wide
/// column `xbar_i_j` per pair. `edge_list` is `i-j` tokens joined by `;`.
/// Metadata lines are `#`-prefixed; the timestamp line is omitted when
/// `timestamp` is `None`.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    records: &[TraceRecord],
    strategy_label: &str,
    seed: u64,
    timestamp: Option<&str>,
) -> io::Result<()> {
    writeln!(out, "# rng={}", crate::channel::RNG_ALGORITHM)?;
    if let Some(ts) = timestamp {
        writeln!(out, "# generated={ts}")?;
    }
    let n = match records.first() {
        Some(r) => r.xbar.n(),
        None => return Ok(()),
    };
    let mut header = String::from("t,strategy,seed,edge_list,log_sum,geo_mean,total,jain");
    for p in crate::pairs::enumerate_pairs(n) {
        header.push_str(&format!(",xbar_{}_{}", p.a(), p.b()));
    }
    writeln!(out, "{header}")?;
    for r in records {
        let edge_list = r.edges.iter().map(Pair::to_string).collect::<Vec<_>>().join(";");
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            r.t, strategy_label, seed, edge_list, r.metrics.log_sum, r.metrics.geo_mean, r.metrics.total, r.metrics.jain
        );
        for v in r.xbar.values() {
            line.push_str(&format!(",{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// The CSV as a string; handy for determinism checks.
pub fn trace_csv_string(
    records: &[TraceRecord],
    strategy_label: &str,
    seed: u64,
    timestamp: Option<&str>,
) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, records, strategy_label, seed, timestamp).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use crate::scheduler::{run, RunParams, StepSchedule, Strategy, XbarInit};

    #[test]
    fn metrics_equal_averages() {
        let x = PairMatrix::uniform(4, 7.0);
        let m = Metrics::of(&x).unwrap();
        assert!((m.jain - 1.0).abs() < 1e-15);
        assert!((m.geo_mean - 7.0).abs() < 1e-12);
        assert_eq!(m.total, 42.0);
    }

    #[test]
    fn metrics_two_pair_geometric_mean() {
        let mut x = PairMatrix::zeros(2);
        // a 2-node network has a single pair; use a 3-node one for two values
        let mut y = PairMatrix::zeros(3);
        let ps: Vec<_> = crate::pairs::enumerate_pairs(3).collect();
        y.set(ps[0], 4.0);
        y.set(ps[1], 9.0);
        y.set(ps[2], 6.0);
        let m = Metrics::of(&y).unwrap();
        assert!((m.geo_mean - 6.0).abs() < 1e-12);
        x.set(crate::pairs::Pair::new(0, 1).unwrap(), 5.0);
        assert!((Metrics::of(&x).unwrap().geo_mean - 5.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_reject_nonpositive_entries() {
        let x = PairMatrix::zeros(3);
        assert!(Metrics::of(&x).is_err());
    }

    #[test]
    fn log_sum_of_a_mixed_vector() {
        // 4*ln(10) + ln(305) + ln(255), hand-evaluated.
        let mut x = PairMatrix::uniform(4, 10.0);
        x.set(crate::pairs::Pair::new(2, 3).unwrap(), 305.0);
        x.set(crate::pairs::Pair::new(1, 3).unwrap(), 255.0);
        let m = Metrics::of(&x).unwrap();
        assert!((m.log_sum - 20.47191569374202).abs() < 1e-9);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let sc = scenarios::paper_n4();
        let params = RunParams {
            strategy: Strategy::ProportionalFair,
            schedule: StepSchedule::fixed(0.5).unwrap(),
            process: sc.process,
            horizon: 3,
            seed: 9,
            xbar_init: XbarInit::Uniform(10.0),
        };
        let trace = run(&sc.config, &params).unwrap();
        let csv = trace_csv_string(&trace, "pf", 9, None);
        let again = trace_csv_string(&run(&sc.config, &params).unwrap(), "pf", 9, None);
        assert_eq!(csv, again, "byte-identical without a timestamp");

        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# rng=chacha8");
        let header = lines.next().unwrap();
        assert!(header.starts_with("t,strategy,seed,edge_list,log_sum,geo_mean,total,jain,xbar_0_1"));
        assert!(header.ends_with("xbar_2_3"));
        // t=0 row has an empty edge list; t=1 row has the two pumped pairs
        let row0 = lines.next().unwrap();
        assert!(row0.starts_with("0,pf,9,,"));
        let row1 = lines.next().unwrap();
        assert!(row1.starts_with("1,pf,9,1-3;2-3,"));

        let stamped = trace_csv_string(&trace, "pf", 9, Some("1234567890"));
        assert!(stamped.contains("# generated=1234567890"));
    }
}
