//! Event-driven simulation of a single replay.
//!
//! Timing model: a presynaptic spike reaches its targets after `d_syn`; a
//! neuron that collects `rho` inputs inside `w_coinc` emits a dendritic
//! plateau, and its somatic spike follows after `kappa * theta` of its
//! subpopulation. Every spike drives the subpopulation's local inhibitory
//! neuron (`+d_inh`), which drives the single global inhibitory neuron
//! (`+2 d_inh`, refractory `t_ref_inh`). A global spike at `t` cancels every
//! pending somatic spike whose plateau came before `t` and which is due in
//! `(t, t + w_inh]`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, ThetaState};
use crate::error::{Error, Result};
use crate::symbols::SymbolId;
use crate::wiring::{Network, NeuronId};

/// Event kinds, declared in same-timestamp processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ExternalStimulus,
    DendriticPlateau,
    SomaticSpike,
    LocalInhibition,
    GlobalInhibition,
    Cancellation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Subpopulation, absent for global inhibition.
    pub population: Option<SymbolId>,
    /// Excitatory neuron, absent for inhibition events.
    pub neuron: Option<NeuronId>,
    /// Time of the global inhibitory spike behind a cancellation.
    pub trigger: Option<f64>,
}

impl Event {
    fn order(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.population.cmp(&other.population))
            .then(self.neuron.cmp(&other.neuron))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationSummary {
    pub first_spike: Option<f64>,
    pub first_plateau: Option<f64>,
    pub spiking: BTreeSet<NeuronId>,
    pub cancelled: bool,
}

impl PopulationSummary {
    /// Distinct neurons that spiked.
    pub fn n_act(&self) -> usize {
        self.spiking.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTrace {
    pub events: Vec<Event>,
    pub populations: Vec<PopulationSummary>,
}

impl ReplayTrace {
    pub fn population(&self, symbol: SymbolId) -> &PopulationSummary {
        &self.populations[symbol.index()]
    }

    pub fn first_spike(&self, symbol: SymbolId) -> Option<f64> {
        self.population(symbol).first_spike
    }

    pub fn n_act(&self, symbol: SymbolId) -> usize {
        self.population(symbol).n_act()
    }

    pub fn spiking_populations(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.populations
            .iter()
            .enumerate()
            .filter(|(_, p)| p.first_spike.is_some())
            .map(|(i, _)| SymbolId(i as u32))
    }

    pub fn count(&self, kind: EventKind, population: Option<SymbolId>) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == kind && (population.is_none() || e.population == population))
            .count()
    }
}

pub fn somatic_latency(theta: f64, config: &SimConfig) -> f64 {
    config.kappa * theta
}

#[derive(Debug, Clone, Copy)]
enum Item {
    External(NeuronId),
    Arrival(NeuronId),
    Somatic { neuron: NeuronId, token: u64 },
    LocalInhibition(SymbolId),
    GlobalInhibition,
}

impl Item {
    fn rank(&self) -> (EventKind, u32) {
        match *self {
            Item::External(n) => (EventKind::ExternalStimulus, n.0),
            Item::Arrival(n) => (EventKind::DendriticPlateau, n.0),
            Item::Somatic { neuron, .. } => (EventKind::SomaticSpike, neuron.0),
            Item::LocalInhibition(s) => (EventKind::LocalInhibition, s.0),
            Item::GlobalInhibition => (EventKind::GlobalInhibition, 0),
        }
    }
}

struct Queued {
    time: f64,
    seq: u64,
    item: Item,
}

impl Queued {
    fn key(&self) -> (EventKind, u32) {
        self.item.rank()
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.key().cmp(&other.key()))
            .then(self.seq.cmp(&other.seq))
    }
}

struct PendingSpike {
    plateau: f64,
    scheduled: f64,
    token: u64,
}

struct Replay<'a> {
    network: &'a Network,
    thetas: &'a ThetaState,
    config: &'a SimConfig,
    queue: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    arrivals: HashMap<NeuronId, VecDeque<f64>>,
    pending: BTreeMap<NeuronId, PendingSpike>,
    local_scheduled: HashSet<(SymbolId, u64)>,
    last_global: Option<f64>,
    spikes: usize,
    spike_limit: usize,
    events: Vec<Event>,
    populations: Vec<PopulationSummary>,
}

impl<'a> Replay<'a> {
    fn push(&mut self, time: f64, item: Item) {
        self.seq += 1;
        self.queue.push(Reverse(Queued {
            time,
            seq: self.seq,
            item,
        }));
    }

    fn record(
        &mut self,
        time: f64,
        kind: EventKind,
        population: Option<SymbolId>,
        neuron: Option<NeuronId>,
    ) {
        self.events.push(Event {
            time,
            kind,
            population,
            neuron,
            trigger: None,
        });
    }

    fn fire(&mut self, neuron: NeuronId, t: f64) -> Result<()> {
        self.spikes += 1;
        if self.spikes > self.spike_limit {
            return Err(Error::Runaway {
                spikes: self.spikes,
                limit: self.spike_limit,
            });
        }
        let pop = self.network.subpopulation_of(neuron);
        self.record(t, EventKind::SomaticSpike, Some(pop), Some(neuron));
        let summary = &mut self.populations[pop.index()];
        summary.first_spike.get_or_insert(t);
        summary.spiking.insert(neuron);

        let arrival = t + self.config.d_syn;
        for &post in self.network.targets_of(neuron) {
            self.push(arrival, Item::Arrival(post));
        }
        let inh = t + self.config.d_inh;
        if self.local_scheduled.insert((pop, inh.to_bits())) {
            self.push(inh, Item::LocalInhibition(pop));
        }
        Ok(())
    }

    fn arrive(&mut self, neuron: NeuronId, t: f64) {
        if self.pending.contains_key(&neuron) {
            return;
        }
        let window = self.arrivals.entry(neuron).or_default();
        while window.front().is_some_and(|&a| a < t - self.config.w_coinc) {
            window.pop_front();
        }
        window.push_back(t);
        if window.len() < self.config.rho {
            return;
        }
        window.clear();

        let pop = self.network.subpopulation_of(neuron);
        self.record(t, EventKind::DendriticPlateau, Some(pop), Some(neuron));
        self.populations[pop.index()].first_plateau.get_or_insert(t);
        let scheduled = t + somatic_latency(self.thetas.theta[pop.index()], self.config);
        self.seq += 1;
        let token = self.seq;
        self.pending.insert(
            neuron,
            PendingSpike {
                plateau: t,
                scheduled,
                token,
            },
        );
        self.push(scheduled, Item::Somatic { neuron, token });
    }

    fn local_inhibition(&mut self, pop: SymbolId, t: f64) {
        self.record(t, EventKind::LocalInhibition, Some(pop), None);
        let global = t + self.config.d_inh;
        let ready = self
            .last_global
            .is_none_or(|prev| global - prev >= self.config.t_ref_inh);
        if ready {
            self.last_global = Some(global);
            self.push(global, Item::GlobalInhibition);
        }
    }

    fn global_inhibition(&mut self, t: f64) {
        self.record(t, EventKind::GlobalInhibition, None, None);
        let horizon = t + self.config.w_inh;
        let doomed: Vec<NeuronId> = self
            .pending
            .iter()
            .filter(|(_, p)| p.plateau < t && p.scheduled > t && p.scheduled <= horizon)
            .map(|(&n, _)| n)
            .collect();
        for neuron in doomed {
            self.pending.remove(&neuron);
            let pop = self.network.subpopulation_of(neuron);
            self.populations[pop.index()].cancelled = true;
            self.events.push(Event {
                time: t,
                kind: EventKind::Cancellation,
                population: Some(pop),
                neuron: Some(neuron),
                trigger: Some(t),
            });
        }
    }

    fn run(mut self, start: SymbolId) -> Result<ReplayTrace> {
        let mut stimulated: Vec<NeuronId> = self
            .network
            .contexts_of(start)
            .flat_map(|c| c.neurons.iter().copied())
            .collect();
        stimulated.sort();
        stimulated.dedup();
        for n in stimulated {
            self.push(0.0, Item::External(n));
        }

        while let Some(Reverse(Queued { time, item, .. })) = self.queue.pop() {
            match item {
                Item::External(n) => {
                    let pop = self.network.subpopulation_of(n);
                    self.record(time, EventKind::ExternalStimulus, Some(pop), Some(n));
                    self.fire(n, time)?;
                }
                Item::Arrival(n) => self.arrive(n, time),
                Item::Somatic { neuron, token } => {
                    if self.pending.get(&neuron).is_some_and(|p| p.token == token) {
                        self.pending.remove(&neuron);
                        self.fire(neuron, time)?;
                    }
                }
                Item::LocalInhibition(pop) => self.local_inhibition(pop, time),
                Item::GlobalInhibition => self.global_inhibition(time),
            }
        }

        let mut events = self.events;
        events.sort_by(Event::order);
        Ok(ReplayTrace {
            events,
            populations: self.populations,
        })
    }
}

/// Runs one replay stimulated at the network's start subpopulation.
pub fn run_replay(
    network: &Network,
    thetas: &ThetaState,
    config: &SimConfig,
) -> Result<ReplayTrace> {
    run_replay_from(network, network.start(), thetas, config)
}

/// Runs one replay stimulated at `start`.
pub fn run_replay_from(
    network: &Network,
    start: SymbolId,
    thetas: &ThetaState,
    config: &SimConfig,
) -> Result<ReplayTrace> {
    if thetas.len() != network.subpopulation_count() {
        return Err(Error::ThetaShape {
            expected: network.subpopulation_count(),
            got: thetas.len(),
        });
    }
    if start.index() >= network.subpopulation_count() {
        return Err(Error::UnknownSymbol(start.to_string()));
    }
    let replay = Replay {
        network,
        thetas,
        config,
        queue: BinaryHeap::new(),
        seq: 0,
        arrivals: HashMap::new(),
        pending: BTreeMap::new(),
        local_scheduled: HashSet::new(),
        last_global: None,
        spikes: 0,
        spike_limit: network.neurons_per_subpopulation() * network.subpopulation_count(),
        events: Vec::new(),
        populations: vec![PopulationSummary::default(); network.subpopulation_count()],
    };
    replay.run(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{EnvironmentSet, SymbolTable};
    use crate::wiring::{build_network, Context, ContextKey};

    const EPS: f64 = 1e-9;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < EPS
    }

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

    #[test]
    fn latency_is_linear() {
        let c = SimConfig::default();
        assert!(approx(somatic_latency(6.5, &c), 57.85));
        assert!(approx(somatic_latency(5.2, &c), 46.28));
        assert!(somatic_latency(1e-9, &c) > 0.0);
        assert!(somatic_latency(1e-9, &c) < 1e-7);
    }

    #[test]
    fn target_reduced_replay_timing() {
        let envs = path_env();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let mut thetas = ThetaState::uniform(net.subpopulation_count(), &config);
        let j = envs.symbol("J").unwrap();
        thetas.theta[j.index()] = 5.2;
        let trace = run_replay(&net, &thetas, &config).unwrap();
        let first = |s: &str| trace.first_spike(envs.symbol(s).unwrap());
        let expected = [
            ("A", 0.0),
            ("B", 59.85),
            ("C", 119.70),
            ("F", 179.55),
            ("D", 179.55),
            ("H", 239.40),
            ("E", 239.40),
            ("J", 287.68),
        ];
        for (s, t) in expected {
            let got = first(s).unwrap_or_else(|| panic!("{s} silent"));
            assert!(approx(got, t), "{s}: {got} vs {t}");
        }
        assert_eq!(first("G"), None);
        assert_eq!(first("I"), None);
        let g = envs.symbol("G").unwrap();
        let cancel: Vec<_> = trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Cancellation)
            .collect();
        assert_eq!(cancel.len(), 3);
        assert!(cancel
            .iter()
            .all(|e| e.population == Some(g) && approx(e.time, 288.68)));
    }

    #[test]
    fn equal_thresholds_keep_parallel_branches() {
        let envs =
            EnvironmentSet::from_names([("env", vec![vec!["A", "B", "C"], vec!["A", "D", "E"]])])
                .unwrap();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let thetas = ThetaState::uniform(net.subpopulation_count(), &config);
        let trace = run_replay(&net, &thetas, &config).unwrap();
        assert_eq!(trace.count(EventKind::Cancellation, None), 0);
        for (a, b) in [("B", "D"), ("C", "E")] {
            assert_eq!(
                trace.first_spike(envs.symbol(a).unwrap()),
                trace.first_spike(envs.symbol(b).unwrap())
            );
        }
        assert!(approx(
            trace.first_spike(envs.symbol("C").unwrap()).unwrap(),
            119.70
        ));
    }

    #[test]
    fn single_hop() {
        let envs = EnvironmentSet::from_names([("e", vec![vec!["A", "B"]])]).unwrap();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let trace = run_replay(&net, &ThetaState::uniform(2, &config), &config).unwrap();
        assert_eq!(trace.first_spike(SymbolId(0)), Some(0.0));
        assert!(approx(trace.first_spike(SymbolId(1)).unwrap(), 59.85));
        assert_eq!(trace.count(EventKind::SomaticSpike, None), 6);
        assert_eq!(trace.count(EventKind::ExternalStimulus, None), 3);
        assert_eq!(trace.count(EventKind::DendriticPlateau, None), 3);
    }

    #[test]
    fn trace_is_sorted() {
        let envs = path_env();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let mut thetas = ThetaState::uniform(net.subpopulation_count(), &config);
        thetas.theta[envs.symbol("J").unwrap().index()] = 5.2;
        let trace = run_replay(&net, &thetas, &config).unwrap();
        assert!(trace
            .events
            .windows(2)
            .all(|w| w[0].order(&w[1]) != Ordering::Greater));
        assert!(trace.events.iter().all(|e| e.time >= 0.0));
    }

    #[test]
    fn global_inhibition_respects_refractory() {
        let envs = path_env();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let thetas = ThetaState::uniform(net.subpopulation_count(), &config);
        let trace = run_replay(&net, &thetas, &config).unwrap();
        let globals: Vec<f64> = trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::GlobalInhibition)
            .map(|e| e.time)
            .collect();
        assert!(globals.windows(2).all(|w| w[1] - w[0] >= config.t_ref_inh));
        // One global spike per wave, waves at depths 0..=7.
        assert_eq!(globals.len(), 8);
    }

    #[test]
    fn wrong_theta_shape() {
        let envs = path_env();
        let config = SimConfig::default();
        let net = build_network(&envs, &config).unwrap();
        let err = run_replay(&net, &ThetaState::uniform(3, &config), &config).unwrap_err();
        assert_eq!(
            err,
            Error::ThetaShape {
                expected: 10,
                got: 3
            }
        );
    }

    #[test]
    fn recurrent_loop_hits_runaway_guard() {
        let mut symbols = SymbolTable::default();
        let a = symbols.intern("A");
        let b = symbols.intern("B");
        let ctx = |sym: SymbolId, base: u32| Context {
            key: ContextKey {
                environment: "loop".into(),
                symbol: sym,
                prefix: vec![sym],
            },
            neurons: (base..base + 3).map(NeuronId).collect(),
        };
        let net = Network::assemble(symbols, 3, a, vec![ctx(a, 0), ctx(b, 3)], [(0, 1), (1, 0)]);
        let config = SimConfig {
            neurons: 3,
            ..SimConfig::default()
        };
        let err = run_replay(&net, &ThetaState::uniform(2, &config), &config).unwrap_err();
        assert!(matches!(err, Error::Runaway { limit: 6, .. }));
    }
}
