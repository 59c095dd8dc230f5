//! Threshold updates applied between replays.
//!
//! Three multiplicative rules act on whole subpopulations:
//! - the target rule scales the target's threshold by `lambda_target` once;
//! - spike-timing dependent adaptation (STDTA) scales a subpopulation by
//!   `lambda_b` when one of its connected successors fired within
//!   `(dt_min_b, dt_max_b)` after it;
//! - ambiguity dependent adaptation (ADTA) scales by a factor derived from
//!   the fraction of active neurons, `F_a = N_act / N`, relative to the
//!   fraction of a single context, `F_rho = rho / N`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, ThetaState};
use crate::engine::ReplayTrace;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::symbols::{EnvironmentSet, SymbolId};
use crate::wiring::{Network, NeuronId};

/// Maps `growth = exp(gamma * (F_a - F_rho))` and `lambda_a` to a threshold factor.
pub trait AmbiguityScaling: Send + Sync {
    fn factor(&self, growth: f64, lambda_a: f64) -> f64;
}

/// `growth * lambda_a`, exactly as the update equation is written.
pub struct Literal;

/// `1 - lambda_a * growth`: unique places get the strongest reduction.
pub struct Complement;

impl AmbiguityScaling for Literal {
    fn factor(&self, growth: f64, lambda_a: f64) -> f64 {
        growth * lambda_a
    }
}

impl AmbiguityScaling for Complement {
    fn factor(&self, growth: f64, lambda_a: f64) -> f64 {
        1.0 - lambda_a * growth
    }
}

pub fn scaling_registry() -> &'static Registry<dyn AmbiguityScaling> {
    static REGISTRY: OnceLock<Registry<dyn AmbiguityScaling>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn AmbiguityScaling>::new("adta_mode")
            .with("complement", Box::new(Complement))
            .with("literal", Box::new(Literal))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Init,
    Target,
    Stdta,
    Adta,
    None,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Init => "init",
            Rule::Target => "target",
            Rule::Stdta => "stdta",
            Rule::Adta => "adta",
            Rule::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRow {
    pub population: SymbolId,
    pub old_theta: f64,
    pub new_theta: f64,
    pub rule: Rule,
    /// Spike-time differences to each spiking successor.
    pub dts: Vec<(SymbolId, f64)>,
    pub n_act: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaptationReport {
    pub rows: Vec<AdaptationRow>,
}

impl AdaptationReport {
    pub fn updated(&self) -> impl Iterator<Item = &AdaptationRow> {
        self.rows.iter().filter(|r| r.rule != Rule::None)
    }
}

/// Scales the target's threshold by `lambda_target`. Meant to be applied
/// once per planning run.
pub fn apply_target_rule(
    thetas: &ThetaState,
    target: SymbolId,
    config: &SimConfig,
) -> Result<ThetaState> {
    if target.index() >= thetas.len() {
        return Err(Error::UnknownSymbol(target.to_string()));
    }
    let mut next = thetas.clone();
    next.theta[target.index()] *= config.lambda_target;
    Ok(next)
}

fn active_neurons(trace: &ReplayTrace) -> BTreeSet<NeuronId> {
    trace
        .populations
        .iter()
        .flat_map(|p| p.spiking.iter().copied())
        .collect()
}

fn eligible_with(
    trace: &ReplayTrace,
    network: &Network,
    active: &BTreeSet<NeuronId>,
    m: SymbolId,
    n: SymbolId,
    config: &SimConfig,
) -> bool {
    let (Some(tm), Some(tn)) = (trace.first_spike(m), trace.first_spike(n)) else {
        return false;
    };
    let dt = tn - tm;
    if !(config.dt_min_b < dt && dt < config.dt_max_b) {
        return false;
    }
    network.connection_count(m, n, active, active) > config.rho
}

/// Whether `m` qualifies for a back-tracing update through successor `n`.
pub fn stdta_eligible(
    trace: &ReplayTrace,
    network: &Network,
    m: SymbolId,
    n: SymbolId,
    config: &SimConfig,
) -> bool {
    eligible_with(trace, network, &active_neurons(trace), m, n, config)
}

pub fn apply_stdta(
    thetas: &ThetaState,
    trace: &ReplayTrace,
    network: &Network,
    config: &SimConfig,
) -> (ThetaState, AdaptationReport) {
    let active = active_neurons(trace);
    let edges = network.symbol_edges();
    let mut next = thetas.clone();
    let mut report = AdaptationReport::default();

    for m in network.symbols().ids() {
        let successors: Vec<SymbolId> = edges
            .iter()
            .filter(|(pre, _)| *pre == m)
            .map(|&(_, post)| post)
            .collect();
        let dts = match trace.first_spike(m) {
            Some(tm) => successors
                .iter()
                .filter_map(|&n| trace.first_spike(n).map(|tn| (n, tn - tm)))
                .collect(),
            None => Vec::new(),
        };
        let eligible = successors
            .iter()
            .any(|&n| eligible_with(trace, network, &active, m, n, config));
        let old = thetas.theta[m.index()];
        let factor = if eligible { config.lambda_b } else { 1.0 };
        next.theta[m.index()] = old * factor;
        report.rows.push(AdaptationRow {
            population: m,
            old_theta: old,
            new_theta: old * factor,
            rule: if eligible { Rule::Stdta } else { Rule::None },
            dts,
            n_act: trace.n_act(m),
            factor,
        });
    }
    (next, report)
}

/// Ambiguity factor for a subpopulation with `n_act` of `n_total` neurons active.
pub fn adta_factor(n_act: usize, n_total: usize, config: &SimConfig) -> Result<f64> {
    let scaling = scaling_registry().get(&config.adta_mode)?;
    if n_act == 0 || n_act > n_total {
        return Err(Error::Config {
            field: "N",
            reason: format!("active count {n_act} outside 1..={n_total}"),
        });
    }
    let total = n_total as f64;
    let fa = n_act as f64 / total;
    let frho = config.rho as f64 / total;
    let gamma = if fa >= frho {
        config.gamma_plus
    } else {
        config.gamma_minus
    };
    let growth = (gamma * (fa - frho)).exp();
    let factor = scaling.factor(growth, config.lambda_a);
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::Factor {
            factor,
            mode: config.adta_mode.clone(),
        });
    }
    Ok(factor)
}

/// One-shot ambiguity update after a measurement replay. Only spiking
/// subpopulations whose active fraction is strictly below the maximum are
/// scaled.
pub fn apply_adta(
    thetas: &ThetaState,
    trace: &ReplayTrace,
    config: &SimConfig,
) -> Result<(ThetaState, AdaptationReport)> {
    let max_active = trace
        .populations
        .iter()
        .map(|p| p.n_act())
        .max()
        .unwrap_or(0);
    let mut next = thetas.clone();
    let mut report = AdaptationReport::default();
    for (idx, pop) in trace.populations.iter().enumerate() {
        let n_act = pop.n_act();
        let old = thetas.theta[idx];
        let (rule, factor) = if n_act > 0 && n_act < max_active {
            (Rule::Adta, adta_factor(n_act, config.neurons, config)?)
        } else {
            (Rule::None, 1.0)
        };
        next.theta[idx] = old * factor;
        report.rows.push(AdaptationRow {
            population: SymbolId(idx as u32),
            old_theta: old,
            new_theta: old * factor,
            rule,
            dts: Vec::new(),
            n_act,
            factor,
        });
    }
    Ok((next, report))
}

/// Number of environments containing `symbol`.
pub fn ambiguity(envs: &EnvironmentSet, symbol: SymbolId) -> Result<usize> {
    if symbol.index() >= envs.symbol_count() {
        return Err(Error::UnknownSymbol(symbol.to_string()));
    }
    let count = envs
        .environments()
        .iter()
        .filter(|env| env.sequences.iter().any(|seq| seq.contains(&symbol)))
        .count();
    if count == 0 {
        return Err(Error::UnknownSymbol(envs.name(symbol).to_string()));
    }
    Ok(count)
}

/// Expected active neurons for a place of ambiguity `alpha`.
pub fn expected_active(alpha: usize, config: &SimConfig) -> usize {
    alpha * config.rho
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn literal() -> SimConfig {
        SimConfig {
            adta_mode: "literal".into(),
            ..SimConfig::default()
        }
    }

    #[test]
    fn target_rule() {
        let c = SimConfig::default();
        let t = ThetaState::uniform(3, &c);
        let once = apply_target_rule(&t, SymbolId(1), &c).unwrap();
        assert!(close(once.theta[1], 5.2, 1e-12));
        assert_eq!(once.theta[0], 6.5);
        let twice = apply_target_rule(&once, SymbolId(1), &c).unwrap();
        assert!(close(twice.theta[1], 4.16, 1e-12));
        let identity = SimConfig {
            lambda_target: 1.0,
            ..SimConfig::default()
        };
        assert_eq!(apply_target_rule(&t, SymbolId(1), &identity).unwrap(), t);
        assert!(matches!(
            apply_target_rule(&t, SymbolId(3), &c),
            Err(Error::UnknownSymbol(_))
        ));
    }

    // Reference values from a 30-digit evaluation of lambda_a * exp(gamma * (n_act - rho) / N).
    #[test]
    fn factor_table() {
        let cases = [
            (3, 0.2, 0.8),
            (6, 0.063_781_311_464_794_08, 0.936_218_688_535_205_9),
            (9, 0.020_340_278_460_845_37, 0.979_659_721_539_154_6),
            (2, 0.077_164_261_365_824_83, 0.922_835_738_634_175_2),
        ];
        for (n_act, lit, comp) in cases {
            let l = adta_factor(n_act, 21, &literal()).unwrap();
            let c = adta_factor(n_act, 21, &SimConfig::default()).unwrap();
            assert!(close(l, lit, 1e-15), "literal {n_act}: {l}");
            assert!(close(c, comp, 1e-15), "complement {n_act}: {c}");
        }
    }

    #[test]
    fn factor_rejects_bad_counts() {
        assert!(adta_factor(0, 21, &SimConfig::default()).is_err());
        assert!(adta_factor(22, 21, &SimConfig::default()).is_err());
    }

    #[test]
    fn complement_factor_out_of_range() {
        // lambda_a * e^{gamma-(F_a - F_rho)} >= 1 for a strongly positive gamma-.
        let c = SimConfig {
            lambda_a: 1.0,
            ..SimConfig::default()
        };
        assert!(matches!(adta_factor(3, 21, &c), Err(Error::Factor { .. })));
    }

    #[test]
    fn expected_active_counts() {
        let c = SimConfig::default();
        assert_eq!(expected_active(1, &c), 3);
        assert_eq!(expected_active(2, &c), 6);
        assert_eq!(expected_active(3, &c), 9);
    }

    #[test]
    fn ambiguity_counts() {
        let envs = EnvironmentSet::from_names([
            (
                "env1",
                vec![vec!["A", "B", "C", "D"], vec!["A", "B", "C", "E"]],
            ),
            ("env2", vec![vec!["A", "B", "C", "D"], vec!["A", "B", "F"]]),
            ("env3", vec![vec!["A", "B", "C"], vec!["A", "B", "F"]]),
        ])
        .unwrap();
        let a = |s: &str| ambiguity(&envs, envs.symbol(s).unwrap()).unwrap();
        assert_eq!((a("A"), a("C"), a("D"), a("F"), a("E")), (3, 3, 2, 2, 1));
        assert!(ambiguity(&envs, SymbolId(99)).is_err());
        let single = EnvironmentSet::from_names([("e", vec![vec!["A", "B"]])]).unwrap();
        assert_eq!(ambiguity(&single, SymbolId(1)).unwrap(), 1);
    }
}
