use serde::{Deserialize, Serialize};

/// Numerical knobs shared by every functional.
///
/// The defaults are the identity-check settings: quadrature to `1e-9`
/// absolute and zero locations to `1e-11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Absolute tolerance for each boundary average, split evenly over its circles.
    pub quad_tol: f64,
    /// Hard cap on integrand evaluations per circle.
    pub max_quad_nodes: usize,
    /// Location tolerance for the zero finder.
    pub root_tol: f64,
    /// Seed for every randomized probe (sample points, heuristic searches).
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            quad_tol: 1e-9,
            max_quad_nodes: 1 << 20,
            root_tol: 1e-11,
            seed: 0x5eed,
        }
    }
}

impl Config {
    /// Looser settings used for inequality scans.
    pub fn scan() -> Self {
        Config {
            quad_tol: 1e-6,
            ..Config::default()
        }
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
