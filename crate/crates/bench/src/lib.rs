//! Fixtures shared by the criterion benches.

use ramified_dirac::model::ModelConfig;

/// The default model with a smaller truncation so a single iteration stays short.
pub fn small_config() -> ModelConfig {
    ModelConfig { lambda_cut: 1.5, mu_cut: 3.0, ..ModelConfig::default() }
}
