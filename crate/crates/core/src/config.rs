use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the solvers and the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-norm of `H w - w^{-1}` accepted as converged.
    pub residual: f64,
    /// Slack on the inequality checks (`||w||_inf`, `lambda_max(M)`, ...).
    pub bound: f64,
    /// Eigenvalue cutoff below which a direction counts as kernel.
    pub kernel: f64,
    /// Slack when comparing solvers against brute-force oracles.
    pub oracle_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            bound: 1e-8,
            kernel: 1e-10,
            oracle_slack: 1e-6,
        }
    }
}

/// Solver configuration: tolerances, iteration caps and the multi-start seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub tol: Tolerances,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_iterations: 200,
            seed: 0,
        }
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}
