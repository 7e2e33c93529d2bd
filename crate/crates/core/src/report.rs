//! Per-run summary records emitted by the end-to-end solvers.

use serde::Serialize;

/// What a solver run certifies about its schedule: the exact objective, the
/// per-phase LP lower bounds, the a-priori certified bound the objective
/// stayed under, and the empirical ratio against the strongest lower bound
/// at hand (the larger phase LP, or the true optimum when an oracle ran).
#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    /// Hex SHA-256 of the canonical instance JSON.
    pub instance: String,
    /// Problem variant: "mr", "msr-same" or "msr-separate".
    pub variant: String,
    pub jobs: usize,
    pub map_tasks: usize,
    pub reduce_tasks: usize,
    /// Exact objective of the returned schedule, as a rational string.
    pub objective: String,
    /// Objective as f64, for quick reading; the string above is the truth.
    pub objective_value: f64,
    /// Optimal value of the map-phase LP.
    pub lp_map: f64,
    /// Optimal value of the reduce-phase LP (with shuffle volumes folded in
    /// for the shuffle variants).
    pub lp_reduce: f64,
    /// The certified a-priori upper bound on the objective implied by the
    /// two LP values; the solvers fail hard if the objective exceeds it.
    pub certified_bound: f64,
    /// objective / max(lp_map, lp_reduce) — an upper bound on the true
    /// approximation ratio of this run.
    pub empirical_ratio: f64,
    /// Exact optimum when a brute-force oracle ran, as a rational string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_objective: Option<String>,
    /// objective / oracle_objective when the oracle ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_ratio: Option<f64>,
    /// Generator seed, when the instance came from the generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Canonical JSON rendering (sorted keys, two-space indent, trailing
/// newline) of any serializable value; reports and instances share the same
/// layout rules.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let value: serde_json::Value =
        serde_json::to_value(value).expect("report values always serialize");
    let mut bytes = serde_json::to_vec_pretty(&value).expect("serialization to bytes");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_is_sorted_and_stable() {
        let report = RatioReport {
            instance: "abc".into(),
            variant: "mr".into(),
            jobs: 2,
            map_tasks: 3,
            reduce_tasks: 2,
            objective: "7/2".into(),
            objective_value: 3.5,
            lp_map: 1.25,
            lp_reduce: 2.0,
            certified_bound: 87.75,
            empirical_ratio: 1.75,
            oracle_objective: None,
            oracle_ratio: None,
            seed: None,
        };
        let a = to_canonical_json(&report);
        let b = to_canonical_json(&report);
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let pos = |needle: &str| text.find(needle).unwrap();
        assert!(pos("certified_bound") < pos("empirical_ratio"));
        assert!(pos("empirical_ratio") < pos("instance"));
        assert!(!text.contains("oracle_objective"), "None fields stay out");
    }
}
