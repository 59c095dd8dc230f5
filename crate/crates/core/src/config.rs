//! Simulation parameters and per-subpopulation threshold state.

use serde::{Deserialize, Serialize};

use crate::adaptation::scaling_registry;
use crate::error::{Error, Result};

/// All tunable parameters of a run. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Neurons per subpopulation.
    #[serde(rename = "N")]
    pub neurons: usize,
    /// Active neurons per context.
    pub rho: usize,
    pub theta_init: f64,
    /// Target threshold rate.
    pub lambda_target: f64,
    /// Back-tracing rate.
    pub lambda_b: f64,
    /// Ambiguity adaptation rate.
    pub lambda_a: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Lower bound of the back-tracing spike-timing window (ms).
    pub dt_min_b: f64,
    /// Upper bound of the back-tracing spike-timing window (ms).
    pub dt_max_b: f64,
    /// Somatic latency per threshold unit (ms).
    pub kappa: f64,
    /// Synaptic plus dendritic delay (ms).
    pub d_syn: f64,
    /// Per-hop inhibition delay (ms).
    pub d_inh: f64,
    /// Cancellation window after a global inhibitory spike (ms).
    pub w_inh: f64,
    /// Refractory period of the global inhibitory neuron (ms).
    pub t_ref_inh: f64,
    /// Dendritic coincidence window (ms).
    pub w_coinc: f64,
    /// Name of the ambiguity scaling strategy (`complement` or `literal`).
    pub adta_mode: String,
    pub max_replays: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            neurons: 21,
            rho: 3,
            theta_init: 6.5,
            lambda_target: 0.8,
            lambda_b: 0.9,
            lambda_a: 0.2,
            gamma_plus: -8.0,
            gamma_minus: 20.0,
            dt_min_b: 0.0,
            dt_max_b: 58.0,
            kappa: 8.9,
            d_syn: 2.0,
            d_inh: 0.5,
            w_inh: 20.0,
            t_ref_inh: 10.0,
            w_coinc: 1.0,
            adta_mode: "complement".to_string(),
            max_replays: 20,
            seed: 5,
        }
    }
}

impl SimConfig {
    /// Parameters of the targeted path-planning experiment.
    pub fn path_planning() -> Self {
        Self::default()
    }

    pub fn ambiguity_01() -> Self {
        Self {
            dt_max_b: 55.0,
            ..Self::default()
        }
    }

    pub fn ambiguity_02a() -> Self {
        Self::ambiguity_01()
    }

    pub fn ambiguity_02b() -> Self {
        Self {
            dt_max_b: 60.0,
            ..Self::default()
        }
    }

    pub fn validate(self) -> Result<Self> {
        validate_config(self)
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}

/// Returns the config unchanged if every invariant holds, otherwise the
/// first violation.
pub fn validate_config(config: SimConfig) -> Result<SimConfig> {
    for (field, rate) in [
        ("lambda_target", config.lambda_target),
        ("lambda_b", config.lambda_b),
        ("lambda_a", config.lambda_a),
    ] {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(bad(field, format!("rate out of (0,1]: {rate}")));
        }
    }
    if config.rho < 1 {
        return Err(bad("rho", "must be at least 1"));
    }
    if config.neurons < config.rho {
        return Err(bad(
            "N",
            format!("N = {} below rho = {}", config.neurons, config.rho),
        ));
    }
    if !(config.theta_init > 0.0 && config.theta_init.is_finite()) {
        return Err(bad("theta_init", "must be positive"));
    }
    for (field, g) in [
        ("gamma_plus", config.gamma_plus),
        ("gamma_minus", config.gamma_minus),
    ] {
        if !g.is_finite() {
            return Err(bad(field, "must be finite"));
        }
    }
    if !(config.dt_min_b.is_finite() && config.dt_max_b.is_finite()) {
        return Err(bad("dt_max_b", "STDTA bounds must be finite"));
    }
    if config.dt_min_b >= config.dt_max_b {
        return Err(bad(
            "dt_max_b",
            format!(
                "empty STDTA window: dt_min_b = {} >= dt_max_b = {}",
                config.dt_min_b, config.dt_max_b
            ),
        ));
    }
    for (field, v) in [
        ("kappa", config.kappa),
        ("d_syn", config.d_syn),
        ("d_inh", config.d_inh),
        ("w_inh", config.w_inh),
        ("t_ref_inh", config.t_ref_inh),
        ("w_coinc", config.w_coinc),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad(field, format!("must be positive, got {v}")));
        }
    }
    // Successor plateaus must land after the spike's own global inhibition.
    if config.d_syn <= 2.0 * config.d_inh {
        return Err(bad(
            "d_syn",
            format!(
                "d_syn = {} must exceed 2 * d_inh = {}",
                config.d_syn,
                2.0 * config.d_inh
            ),
        ));
    }
    if config.max_replays < 1 {
        return Err(bad("max_replays", "must be at least 1"));
    }
    if !scaling_registry().contains(&config.adta_mode) {
        let known: Vec<_> = scaling_registry().names().collect();
        return Err(bad(
            "adta_mode",
            format!(
                "unknown mode `{}` (known: {})",
                config.adta_mode,
                known.join(", ")
            ),
        ));
    }
    Ok(config)
}

/// Firing threshold of every subpopulation at a given replay index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaState {
    pub theta: Vec<f64>,
    pub replay: usize,
}

impl ThetaState {
    pub fn uniform(subpopulations: usize, config: &SimConfig) -> Self {
        Self {
            theta: vec![config.theta_init; subpopulations],
            replay: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}
