//! CSV and text artifacts of a finished run.

use std::fmt::Write as _;

use anyhow::Result;
use serde::Serialize;
use spikeplan::{ambiguity, EnvironmentSet, EventKind, PlanMode, PlanResult};

#[derive(Serialize)]
struct RasterRow<'a> {
    replay: usize,
    time_ms: f64,
    population: &'a str,
    neuron: Option<u32>,
    event: &'static str,
}

#[derive(Serialize)]
struct ThetaRow<'a> {
    replay: usize,
    population: &'a str,
    theta: f64,
    rule: &'static str,
}

pub fn event_name(kind: EventKind) -> &'static str {
    match kind {
        EventKind::ExternalStimulus => "ext",
        EventKind::DendriticPlateau => "dap",
        EventKind::SomaticSpike => "spike",
        EventKind::LocalInhibition => "inh_local",
        EventKind::GlobalInhibition => "inh_global",
        EventKind::Cancellation => "cancel",
    }
}

/// Every event of every replay; replays are numbered from 1.
pub fn raster_csv(envs: &EnvironmentSet, result: &PlanResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, trace) in result.traces.iter().enumerate() {
        for e in &trace.events {
            w.serialize(RasterRow {
                replay: i + 1,
                time_ms: e.time,
                population: e.population.map_or("", |p| envs.name(p)),
                neuron: e.neuron.map(|n| n.0),
                event: event_name(e.kind),
            })?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Threshold changes; `replay` is the replay after which the value applies
/// (0 for the initial and target-seeded values).
pub fn theta_csv(envs: &EnvironmentSet, result: &PlanResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for entry in &result.theta_log {
        w.serialize(ThetaRow {
            replay: entry.replay,
            population: envs.name(entry.population),
            theta: entry.theta,
            rule: entry.rule.as_str(),
        })?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn join(envs: &EnvironmentSet, path: &[spikeplan::SymbolId]) -> String {
    path.iter()
        .map(|&s| envs.name(s))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn summary(envs: &EnvironmentSet, start: &str, result: &PlanResult) -> Result<String> {
    let mut out = String::new();
    let mode = match result.mode {
        PlanMode::PathPlanning => "path_planning",
        PlanMode::Disambiguation => "disambiguation",
    };
    writeln!(out, "mode: {mode}")?;
    writeln!(out, "start: {start}")?;
    let target = result.target.map_or("-", |t| envs.name(t));
    match result.mode {
        PlanMode::PathPlanning => writeln!(out, "target: {target}")?,
        PlanMode::Disambiguation => writeln!(out, "chosen_target: {target}")?,
    }
    writeln!(out, "path: {}", join(envs, &result.path))?;
    writeln!(out, "replays_used: {}", result.replays_used)?;
    writeln!(out, "replays_run: {}", result.traces.len())?;
    writeln!(out, "converged: {}", result.converged)?;
    if let Some(d) = &result.diagnostic {
        writeln!(out, "diagnostic: {d}")?;
    }
    if result.mode == PlanMode::Disambiguation {
        writeln!(out)?;
        writeln!(out, "symbol,alpha,n_act")?;
        let measured = &result.traces[0];
        for s in envs.symbols().ids() {
            writeln!(
                out,
                "{},{},{}",
                envs.name(s),
                ambiguity(envs, s)?,
                measured.n_act(s)
            )?;
        }
    }
    Ok(out)
}
