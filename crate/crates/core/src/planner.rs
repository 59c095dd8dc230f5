//! Replay loop: seeds thresholds, alternates replays with adaptation and
//! stops once two consecutive replays show the same activity pattern.

use serde::{Deserialize, Serialize};

use crate::adaptation::{apply_adta, apply_stdta, apply_target_rule, AdaptationReport, Rule};
use crate::config::{validate_config, SimConfig, ThetaState};
use crate::engine::{run_replay_from, ReplayTrace};
use crate::error::{Error, Result};
use crate::oracle::{bfs_shortest_path, SymbolGraph};
use crate::symbols::SymbolId;
use crate::wiring::Network;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    PathPlanning,
    Disambiguation,
}

/// One row of the threshold trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaLogEntry {
    pub replay: usize,
    pub population: SymbolId,
    pub theta: f64,
    pub rule: Rule,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub mode: PlanMode,
    pub path: Vec<SymbolId>,
    /// Requested target, or the chosen place after disambiguation.
    pub target: Option<SymbolId>,
    /// Index of the first replay of the stable activity pattern.
    pub replays_used: usize,
    /// Thresholds in effect during each replay.
    pub theta_history: Vec<ThetaState>,
    pub traces: Vec<ReplayTrace>,
    /// Adaptation reports keyed by the replay they followed.
    pub adaptations: Vec<(usize, AdaptationReport)>,
    pub theta_log: Vec<ThetaLogEntry>,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

/// True iff both replays activated the same neurons and cancelled the same
/// subpopulations.
pub fn has_converged(prev: &ReplayTrace, cur: &ReplayTrace) -> bool {
    prev.populations.len() == cur.populations.len()
        && prev
            .populations
            .iter()
            .zip(&cur.populations)
            .all(|(a, b)| a.spiking == b.spiking && a.cancelled == b.cancelled)
}

/// Spiking subpopulations ordered by first spike, checked to form a chain.
pub fn extract_path(trace: &ReplayTrace, graph: &SymbolGraph) -> Result<Vec<SymbolId>> {
    let mut active: Vec<(f64, SymbolId)> = trace
        .spiking_populations()
        .map(|s| (trace.first_spike(s).unwrap(), s))
        .collect();
    active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for w in active.windows(2) {
        if (w[1].0 - w[0].0).abs() < TIME_EPS {
            return Err(Error::AmbiguousActivity(format!(
                "{} and {} both first spike at {:.3} ms",
                w[0].1, w[1].1, w[0].0
            )));
        }
        if !graph.has_edge(w[0].1, w[1].1) {
            return Err(Error::AmbiguousActivity(format!(
                "{} -> {} is not a learned transition",
                w[0].1, w[1].1
            )));
        }
    }
    Ok(active.into_iter().map(|(_, s)| s).collect())
}

/// Path nodes after the first whose first dendritic plateau coincided with
/// a plateau in some other subpopulation.
pub fn concurrent_alternatives(trace: &ReplayTrace, path: &[SymbolId]) -> usize {
    path.iter()
        .skip(1)
        .filter(|&&node| {
            let Some(t) = trace.population(node).first_plateau else {
                return false;
            };
            trace.populations.iter().enumerate().any(|(i, p)| {
                i != node.index() && p.first_plateau.is_some_and(|q| (q - t).abs() < TIME_EPS)
            })
        })
        .count()
}

struct Run<'a> {
    network: &'a Network,
    start: SymbolId,
    config: &'a SimConfig,
    thetas: ThetaState,
    theta_history: Vec<ThetaState>,
    traces: Vec<ReplayTrace>,
    adaptations: Vec<(usize, AdaptationReport)>,
    theta_log: Vec<ThetaLogEntry>,
}

impl<'a> Run<'a> {
    fn new(network: &'a Network, start: SymbolId, config: &'a SimConfig) -> Self {
        let thetas = ThetaState::uniform(network.subpopulation_count(), config);
        let theta_log = network
            .symbols()
            .ids()
            .map(|s| ThetaLogEntry {
                replay: 0,
                population: s,
                theta: thetas.theta[s.index()],
                rule: Rule::Init,
            })
            .collect();
        Self {
            network,
            start,
            config,
            thetas,
            theta_history: Vec::new(),
            traces: Vec::new(),
            adaptations: Vec::new(),
            theta_log,
        }
    }

    fn replay(&mut self) -> Result<()> {
        self.thetas.replay = self.traces.len() + 1;
        self.theta_history.push(self.thetas.clone());
        let trace = run_replay_from(self.network, self.start, &self.thetas, self.config)?;
        self.traces.push(trace);
        Ok(())
    }

    fn adopt(&mut self, thetas: ThetaState, report: AdaptationReport) {
        let replay = self.traces.len();
        for row in report.updated() {
            self.theta_log.push(ThetaLogEntry {
                replay,
                population: row.population,
                theta: row.new_theta,
                rule: row.rule,
            });
        }
        self.adaptations.push((replay, report));
        self.thetas = thetas;
    }

    fn back_trace(&mut self) {
        let trace = self.traces.last().expect("replay ran");
        let (next, report) = apply_stdta(&self.thetas, trace, self.network, self.config);
        self.adopt(next, report);
    }

    /// Replays until two consecutive traces match; returns the index of the
    /// first replay of the stable pair.
    fn until_stable(&mut self) -> Result<Option<usize>> {
        while self.traces.len() < self.config.max_replays {
            self.replay()?;
            let n = self.traces.len();
            if n >= 2 && has_converged(&self.traces[n - 2], &self.traces[n - 1]) {
                return Ok(Some(n - 1));
            }
            self.back_trace();
        }
        Ok(None)
    }

    fn finish(self, mode: PlanMode, target: Option<SymbolId>, stable: Option<usize>) -> PlanResult {
        let graph = self.network.symbol_graph();
        let (path, converged, diagnostic, replays_used) = match stable {
            None => (
                Vec::new(),
                false,
                Some(format!(
                    "no stable activity pattern within {} replays",
                    self.config.max_replays
                )),
                self.traces.len(),
            ),
            Some(used) => match extract_path(self.traces.last().unwrap(), &graph) {
                Ok(path) => (path, true, None, used),
                Err(e) => (Vec::new(), false, Some(e.to_string()), used),
            },
        };
        let (target, converged, diagnostic) = match (mode, target) {
            (PlanMode::PathPlanning, Some(t)) if converged && path.last() != Some(&t) => (
                Some(t),
                false,
                Some(format!(
                    "final path ends at {} instead of the target",
                    self.network.symbols().name(*path.last().unwrap())
                )),
            ),
            (PlanMode::Disambiguation, _) => (path.last().copied(), converged, diagnostic),
            (_, t) => (t, converged, diagnostic),
        };
        PlanResult {
            mode,
            path,
            target,
            replays_used,
            theta_history: self.theta_history,
            traces: self.traces,
            adaptations: self.adaptations,
            theta_log: self.theta_log,
            converged,
            diagnostic,
        }
    }
}

fn check_symbol(network: &Network, s: SymbolId) -> Result<()> {
    if s.index() < network.subpopulation_count() {
        Ok(())
    } else {
        Err(Error::UnknownSymbol(s.to_string()))
    }
}

/// Shortest path from `start` to `target` by target seeding and back-tracing.
pub fn plan_path(
    network: &Network,
    start: SymbolId,
    target: SymbolId,
    config: &SimConfig,
) -> Result<PlanResult> {
    let config = &validate_config(config.clone())?;
    check_symbol(network, start)?;
    check_symbol(network, target)?;
    if bfs_shortest_path(&network.symbol_graph(), start, target)?.is_empty() {
        return Err(Error::Unreachable(
            network.symbols().name(target).to_string(),
        ));
    }

    let mut run = Run::new(network, start, config);
    let seeded = apply_target_rule(&run.thetas, target, config)?;
    run.theta_log.push(ThetaLogEntry {
        replay: 0,
        population: target,
        theta: seeded.theta[target.index()],
        rule: Rule::Target,
    });
    run.thetas = seeded;

    if start == target {
        run.replay()?;
        let mut result = run.finish(PlanMode::PathPlanning, Some(target), None);
        result.path = vec![start];
        result.replays_used = 1;
        result.converged = true;
        result.diagnostic = None;
        return Ok(result);
    }

    let stable = run.until_stable()?;
    Ok(run.finish(PlanMode::PathPlanning, Some(target), stable))
}

/// Finds a low-ambiguity place reachable from `start` and the path to it.
pub fn disambiguate(network: &Network, start: SymbolId, config: &SimConfig) -> Result<PlanResult> {
    let config = &validate_config(config.clone())?;
    check_symbol(network, start)?;

    let mut run = Run::new(network, start, config);
    // Measurement replay with unadapted thresholds.
    run.replay()?;
    run.back_trace();
    let (next, report) = apply_adta(&run.thetas, run.traces.last().unwrap(), config)?;
    run.adopt(next, report);

    let stable = run.until_stable()?;
    Ok(run.finish(PlanMode::Disambiguation, None, stable))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::symbol_graph;
    use crate::symbols::EnvironmentSet;
    use crate::wiring::build_network;

    fn path_env() -> EnvironmentSet {
        EnvironmentSet::from_names([(
            "env",
            vec![
                vec!["A", "B", "C", "F", "H", "J"],
                vec!["A", "B", "C", "D", "E", "G", "I", "J"],
            ],
        )])
        .unwrap()
    }

    fn names(envs: &EnvironmentSet, path: &[SymbolId]) -> Vec<String> {
        path.iter().map(|&s| envs.name(s).to_string()).collect()
    }

    fn plan(envs: &EnvironmentSet, config: &SimConfig, from: &str, to: &str) -> PlanResult {
        let net = build_network(envs, config).unwrap();
        plan_path(
            &net,
            envs.symbol(from).unwrap(),
            envs.symbol(to).unwrap(),
            config,
        )
        .unwrap()
    }

    #[test]
    fn path_planning_reference() {
        let envs = path_env();
        let result = plan(&envs, &SimConfig::path_planning(), "A", "J");
        assert!(result.converged, "{:?}", result.diagnostic);
        assert_eq!(names(&envs, &result.path), ["A", "B", "C", "F", "H", "J"]);
        assert_eq!(result.replays_used, 3);
        assert_eq!(result.traces.len(), 4);
    }

    #[test]
    fn stdta_after_first_replays() {
        let envs = path_env();
        let result = plan(&envs, &SimConfig::path_planning(), "A", "J");
        let theta =
            |r: usize, s: &str| result.theta_history[r].theta[envs.symbol(s).unwrap().index()];
        // Thresholds in effect during replay 2 and 3.
        assert!((theta(1, "H") - 5.85).abs() < 1e-12);
        assert_eq!(theta(1, "F"), 6.5);
        assert!((theta(2, "F") - 5.85).abs() < 1e-12);
        assert!((theta(2, "H") - 5.265).abs() < 1e-12);
        let (_, second) = &result.adaptations[1];
        let f = envs.symbol("F").unwrap();
        let h = envs.symbol("H").unwrap();
        let row = second.rows.iter().find(|r| r.population == f).unwrap();
        let dt = row.dts.iter().find(|(n, _)| *n == h).unwrap().1;
        assert!((dt - 54.065).abs() < 1e-9);
    }

    #[test]
    fn convergence_checks() {
        let envs = path_env();
        let result = plan(&envs, &SimConfig::path_planning(), "A", "J");
        let t = &result.traces;
        assert!(has_converged(&t[2], &t[3]));
        assert!(!has_converged(&t[0], &t[1]));
        assert!(has_converged(&t[1], &t[1]));
    }

    #[test]
    fn degenerate_query() {
        let envs = path_env();
        let result = plan(&envs, &SimConfig::path_planning(), "A", "A");
        assert_eq!(names(&envs, &result.path), ["A"]);
        assert_eq!(result.replays_used, 1);
        assert!(result.converged);
    }

    #[test]
    fn unreachable_target() {
        let envs = path_env();
        let config = SimConfig::path_planning();
        let net = build_network(&envs, &config).unwrap();
        let err = plan_path(
            &net,
            envs.symbol("J").unwrap(),
            envs.symbol("A").unwrap(),
            &config,
        )
        .unwrap_err();
        assert_eq!(err, Error::Unreachable("A".into()));
    }

    #[test]
    fn disabled_back_tracing_does_not_converge_to_a_path() {
        let envs = path_env();
        let config = SimConfig {
            lambda_b: 1.0,
            ..SimConfig::path_planning()
        };
        let result = plan(&envs, &config, "A", "J");
        assert!(!result.converged);
        assert!(result.diagnostic.unwrap().contains("ambiguous"));
    }

    #[test]
    fn extract_path_rejects_parallel_survivors() {
        let envs = path_env();
        let config = SimConfig::path_planning();
        let net = build_network(&envs, &config).unwrap();
        let trace =
            crate::engine::run_replay(&net, &ThetaState::uniform(10, &config), &config).unwrap();
        let err = extract_path(&trace, &symbol_graph(&envs)).unwrap_err();
        assert!(matches!(err, Error::AmbiguousActivity(_)));
    }

    #[test]
    fn replay_budget_exhaustion() {
        let envs = path_env();
        let config = SimConfig {
            max_replays: 2,
            ..SimConfig::path_planning()
        };
        let result = plan(&envs, &config, "A", "J");
        assert!(!result.converged);
        assert_eq!(result.replays_used, 2);
        assert!(result.path.is_empty());
    }

    #[test]
    fn concurrent_count_on_first_replay() {
        let envs = path_env();
        let result = plan(&envs, &SimConfig::path_planning(), "A", "J");
        assert_eq!(concurrent_alternatives(&result.traces[0], &result.path), 3);
    }
}
