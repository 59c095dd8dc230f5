//! Deterministic spiking replay simulator with threshold adaptation.
//!
//! A corpus of location sequences is wired into a network of
//! context-coded subpopulations. Replays started at a fixed location
//! propagate activity through the learned transitions; threshold updates
//! between replays let a target, or the least ambiguous reachable place,
//! suppress slower alternatives until a single shortest path remains
//! active.

pub mod adaptation;
pub mod config;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod planner;
pub mod registry;
pub mod symbols;
pub mod wiring;

pub use adaptation::{
    adta_factor, ambiguity, apply_adta, apply_stdta, apply_target_rule, expected_active,
    scaling_registry, stdta_eligible, AdaptationReport, AdaptationRow, AmbiguityScaling, Rule,
};
pub use config::{validate_config, SimConfig, ThetaState};
pub use engine::{run_replay, run_replay_from, somatic_latency, Event, EventKind, ReplayTrace};
pub use error::{Error, Result};
pub use oracle::{
    ambiguity_target, bfs_shortest_path, gen_random_env, selector_registry, symbol_graph,
    RandomEnvParams, SymbolGraph, TargetSelector,
};
pub use planner::{
    concurrent_alternatives, disambiguate, extract_path, has_converged, plan_path, PlanMode,
    PlanResult, ThetaLogEntry,
};
pub use symbols::{EnvironmentSet, SymbolId};
pub use wiring::{build_network, derive_contexts, ContextKey, Network, NeuronId};
