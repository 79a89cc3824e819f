//! Shared report envelope for verification runs, the stable claim-ID
//! registry, and numeric formatting for CLI/CSV output.

use serde::Serialize;

/// Stable identifiers for the externally checkable claims. These strings are
/// a public contract: CI keys on them, so they must never be renamed.
pub mod claims {
    pub const KRAWT_ORTHO: &str = "KRAWT-ORTHO";
    pub const KRAWT_DECAY: &str = "KRAWT-DECAY";
    pub const STEIN_D: &str = "STEIN-D";
    pub const BINOM_LB: &str = "BINOM-LB";
    pub const ERGODIC_W11: &str = "ERGODIC-W11";
    pub const MARCINKIEWICZ_2: &str = "MARCINKIEWICZ-2";
    pub const L1_NORM: &str = "L1-NORM";
    pub const GAME_COROLLARY: &str = "GAME-COROLLARY";
    pub const CHAIN_BOUND: &str = "CHAIN-BOUND";

    pub const ALL: [&str; 9] = [
        KRAWT_ORTHO,
        KRAWT_DECAY,
        STEIN_D,
        BINOM_LB,
        ERGODIC_W11,
        MARCINKIEWICZ_2,
        L1_NORM,
        GAME_COROLLARY,
        CHAIN_BOUND,
    ];
}

/// One check outcome, in the shape emitted as JSON by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub claim: String,
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_violation: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub constants: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn new(claim: &str, check: impl Into<String>, pass: bool) -> Self {
        CheckResult {
            claim: claim.to_string(),
            check: check.into(),
            n: None,
            params: serde_json::Value::Null,
            worst_violation: None,
            pass,
            constants: serde_json::Value::Null,
            note: None,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_worst(mut self, worst: f64) -> Self {
        self.worst_violation = Some(worst);
        self
    }

    pub fn with_constants(mut self, constants: serde_json::Value) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Top-level run report. `wall_ms` is informational and excluded from the
/// byte-determinism contract; everything else must be reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config: serde_json::Value,
    pub results: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn new(config: serde_json::Value, results: Vec<CheckResult>, wall_ms: u128) -> Self {
        let passed = results.iter().filter(|r| r.pass).count();
        let failed = results.len() - passed;
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            results,
            passed,
            failed,
            pass: failed == 0,
            wall_ms,
        }
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_roundtrips() {
        for v in [
            0.0,
            1.0,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1.2000000000000003e21,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn registry_is_stable() {
        assert_eq!(claims::ALL.len(), 9);
        assert!(claims::ALL.contains(&"KRAWT-ORTHO"));
        assert!(claims::ALL.contains(&"CHAIN-BOUND"));
    }

    #[test]
    fn report_counts() {
        let r = RunReport::new(
            serde_json::json!({"n": 4}),
            vec![
                CheckResult::new(claims::L1_NORM, "a", true),
                CheckResult::new(claims::STEIN_D, "b", false),
            ],
            12,
        );
        assert_eq!(r.passed, 1);
        assert_eq!(r.failed, 1);
        assert!(!r.pass);
    }
}
