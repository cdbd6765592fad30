//! Oracle suites behind the `verify` command: diffusion-matrix identities,
//! Monte-Carlo noise statistics and solver reference problems.

mod diffusion;
mod noise_stats;
mod solver;

pub use diffusion::{diffusion_suite, random_physical_density};
pub use noise_stats::noise_stats_suite;
pub use solver::{
    absorbing_reflection, dt_convergence_orders, energy_drift, free_space_speed, pec_reflection,
    rabi_frequency, solver_suite,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Diffusion,
    NoiseStats,
    Solver,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Diffusion, Suite::NoiseStats, Suite::Solver];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Diffusion => "diffusion",
            Suite::NoiseStats => "noise-stats",
            Suite::Solver => "solver",
        }
    }

    pub fn default_samples(&self) -> usize {
        match self {
            Suite::Diffusion => 1000,
            Suite::NoiseStats => 100_000,
            Suite::Solver => 1,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!("unknown suite {s:?}; expected diffusion, noise-stats or solver")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured residual or statistic.
    pub value: f64,
    /// Pass threshold for `value`.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    /// Passes when `value <= tolerance` (and is not NaN).
    pub fn at_most(
        name: impl Into<String>,
        value: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    /// Context such as transcription decisions and clamp counts.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "suite {} (samples {}, seed {})",
            self.suite.name(),
            self.samples,
            self.seed
        );
        for c in &self.checks {
            let _ = write!(
                out,
                "  {} {:<44} {:>12.4e} <= {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            );
            if !c.detail.is_empty() {
                let _ = write!(out, "  ({})", c.detail);
            }
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{}: {} of {} checks passed",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len() - failed,
            self.checks.len()
        );
        out
    }
}

pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> VerifyReport {
    match suite {
        Suite::Diffusion => diffusion_suite(samples, seed),
        Suite::NoiseStats => noise_stats_suite(samples, seed),
        Suite::Solver => solver_suite(seed),
    }
}

/// Three-level system with the shipped QCL parameters.
pub(crate) fn qcl_system() -> (
    crate::quantum::QuantumSystem,
    crate::diffusion::Topology,
    f64,
) {
    let text = include_str!("../../../../scenarios/qcl_hfc_params.toml");
    let s =
        crate::scenario::qcl_hfc_scenario_from_str(text).expect("shipped QCL parameters are valid");
    let topo = s.noise.topology.expect("QCL scenario has a topology");
    (s.build_system().expect("valid system"), topo, s.n_cell())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_text_and_json() {
        let r = VerifyReport {
            suite: Suite::Solver,
            samples: 1,
            seed: 0,
            checks: vec![
                CheckResult::at_most("a", 1e-3, 1e-2, ""),
                CheckResult::at_most("b", f64::NAN, 1.0, "nan never passes"),
            ],
            notes: vec!["x".into()],
        };
        assert!(!r.passed());
        let t = r.to_text();
        assert!(
            t.contains("PASS a") && t.contains("FAIL b") && t.contains("1 of 2"),
            "{t}"
        );
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"suite\":\"solver\""));
        assert_eq!("noise-stats".parse::<Suite>().unwrap(), Suite::NoiseStats);
        assert!("fast".parse::<Suite>().is_err());
    }
}
