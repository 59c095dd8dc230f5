//! Deterministic construction of a trained network from an environment set.
//!
//! Each occurrence of a symbol is keyed by its environment and the prefix of
//! its sequence up to and including that occurrence. Occurrences sharing a
//! key share a context of `rho` neurons; consecutive contexts are connected
//! with a full `rho x rho` bipartite projection.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::oracle::SymbolGraph;
use crate::symbols::{EnvironmentSet, SymbolId, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextKey {
    pub environment: String,
    pub symbol: SymbolId,
    /// Symbols preceding and including this occurrence.
    pub prefix: Vec<SymbolId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextEntry {
    pub key: ContextKey,
    pub predecessor: Option<usize>,
}

/// Contexts in order of first appearance, plus per-symbol context counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTable {
    pub entries: Vec<ContextEntry>,
    pub counts: Vec<usize>,
}

impl ContextTable {
    pub fn successors(&self, context: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.predecessor == Some(context))
            .map(|(i, _)| i)
    }
}

pub fn derive_contexts(envs: &EnvironmentSet, config: &SimConfig) -> Result<ContextTable> {
    let mut index: HashMap<(usize, &[SymbolId]), usize> = HashMap::new();
    let mut entries: Vec<ContextEntry> = Vec::new();
    let mut counts = vec![0usize; envs.symbol_count()];

    for (env_idx, env) in envs.environments().iter().enumerate() {
        for seq in &env.sequences {
            let mut predecessor = None;
            for pos in 0..seq.len() {
                let prefix = &seq[..=pos];
                let ctx = *index.entry((env_idx, prefix)).or_insert_with(|| {
                    counts[seq[pos].index()] += 1;
                    entries.push(ContextEntry {
                        key: ContextKey {
                            environment: env.id.clone(),
                            symbol: seq[pos],
                            prefix: prefix.to_vec(),
                        },
                        predecessor,
                    });
                    entries.len() - 1
                });
                predecessor = Some(ctx);
            }
        }
    }

    for (idx, &count) in counts.iter().enumerate() {
        if count * config.rho > config.neurons {
            return Err(Error::Capacity {
                symbol: envs.name(SymbolId(idx as u32)).to_string(),
                contexts: count,
                rho: config.rho,
                neurons: config.neurons,
            });
        }
    }
    Ok(ContextTable { entries, counts })
}

/// Global neuron index: `subpopulation * N + slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeuronId(pub u32);

impl NeuronId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub key: ContextKey,
    pub neurons: Vec<NeuronId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    symbols: SymbolTable,
    neurons_per_subpop: usize,
    start: SymbolId,
    contexts: Vec<Context>,
    subpop_contexts: Vec<Vec<usize>>,
    synapses: Vec<Synapse>,
    outgoing: Vec<Vec<NeuronId>>,
}

pub fn build_network(envs: &EnvironmentSet, config: &SimConfig) -> Result<Network> {
    let table = derive_contexts(envs, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.neurons;

    let mut free_slots: Vec<Vec<u32>> = (0..envs.symbol_count())
        .map(|_| {
            let mut slots: Vec<u32> = (0..n as u32).collect();
            slots.shuffle(&mut rng);
            slots.reverse();
            slots
        })
        .collect();

    let mut contexts = Vec::with_capacity(table.entries.len());
    for entry in &table.entries {
        let sym = entry.key.symbol.index();
        let neurons = (0..config.rho)
            .map(|_| {
                let slot = free_slots[sym]
                    .pop()
                    .expect("capacity checked by derive_contexts");
                NeuronId((sym * n) as u32 + slot)
            })
            .collect();
        contexts.push(Context {
            key: entry.key.clone(),
            neurons,
        });
    }

    let edges = table
        .entries
        .iter()
        .enumerate()
        .filter_map(|(post, e)| e.predecessor.map(|pre| (pre, post)));
    Ok(Network::assemble(
        envs.symbols().clone(),
        n,
        envs.start(),
        contexts,
        edges,
    ))
}

impl Network {
    /// Wires every listed context pair with a full bipartite projection.
    pub(crate) fn assemble(
        symbols: SymbolTable,
        neurons_per_subpop: usize,
        start: SymbolId,
        contexts: Vec<Context>,
        context_edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut subpop_contexts = vec![Vec::new(); symbols.len()];
        for (i, ctx) in contexts.iter().enumerate() {
            subpop_contexts[ctx.key.symbol.index()].push(i);
        }
        let mut synapses = Vec::new();
        let mut outgoing = vec![Vec::new(); symbols.len() * neurons_per_subpop];
        for (pre, post) in context_edges {
            for &a in &contexts[pre].neurons {
                for &b in &contexts[post].neurons {
                    synapses.push(Synapse { pre: a, post: b });
                    outgoing[a.index()].push(b);
                }
            }
        }
        Self {
            symbols,
            neurons_per_subpop,
            start,
            contexts,
            subpop_contexts,
            synapses,
            outgoing,
        }
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn subpopulation_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn neurons_per_subpopulation(&self) -> usize {
        self.neurons_per_subpop
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    /// Contexts belonging to one subpopulation.
    pub fn contexts_of(&self, symbol: SymbolId) -> impl Iterator<Item = &Context> {
        self.subpop_contexts[symbol.index()]
            .iter()
            .map(move |&i| &self.contexts[i])
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn targets_of(&self, neuron: NeuronId) -> &[NeuronId] {
        &self.outgoing[neuron.index()]
    }

    pub fn subpopulation_of(&self, neuron: NeuronId) -> SymbolId {
        SymbolId((neuron.index() / self.neurons_per_subpop) as u32)
    }

    pub fn slot_of(&self, neuron: NeuronId) -> usize {
        neuron.index() % self.neurons_per_subpop
    }

    /// Symbol-level projection of the synapse set.
    pub fn symbol_edges(&self) -> BTreeSet<(SymbolId, SymbolId)> {
        self.synapses
            .iter()
            .map(|s| (self.subpopulation_of(s.pre), self.subpopulation_of(s.post)))
            .collect()
    }

    pub fn symbol_graph(&self) -> SymbolGraph {
        SymbolGraph::from_edges(self.symbols.len(), self.symbol_edges())
    }

    /// Synapses from `pre_active` neurons of `m` onto `post_active` neurons of `n`.
    pub fn connection_count(
        &self,
        m: SymbolId,
        n: SymbolId,
        pre_active: &BTreeSet<NeuronId>,
        post_active: &BTreeSet<NeuronId>,
    ) -> usize {
        pre_active
            .iter()
            .filter(|&&a| self.subpopulation_of(a) == m)
            .map(|&a| {
                self.targets_of(a)
                    .iter()
                    .filter(|&&b| self.subpopulation_of(b) == n && post_active.contains(&b))
                    .count()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn exp1() -> EnvironmentSet {
        EnvironmentSet::from_names([
            (
                "env1",
                vec![vec!["A", "B", "C", "D"], vec!["A", "B", "C", "E"]],
            ),
            ("env2", vec![vec!["A", "B", "C", "D"], vec!["A", "B", "F"]]),
        ])
        .unwrap()
    }

    fn count(envs: &EnvironmentSet, table: &ContextTable, name: &str) -> usize {
        table.counts[envs.symbol(name).unwrap().index()]
    }

    #[test]
    fn path_env_contexts() {
        let envs = path_env();
        let table = derive_contexts(&envs, &SimConfig::default()).unwrap();
        for s in ["A", "B", "C", "F", "D", "H", "E", "G", "I"] {
            assert_eq!(count(&envs, &table, s), 1, "{s}");
        }
        // J closes two different prefixes.
        assert_eq!(count(&envs, &table, "J"), 2);
        let c_ctx = table
            .entries
            .iter()
            .position(|e| e.key.symbol == envs.symbol("C").unwrap())
            .unwrap();
        let succ: Vec<_> = table
            .successors(c_ctx)
            .map(|i| envs.name(table.entries[i].key.symbol))
            .collect();
        assert_eq!(succ, ["F", "D"]);
    }

    #[test]
    fn exp1_contexts() {
        let envs = exp1();
        let table = derive_contexts(&envs, &SimConfig::default()).unwrap();
        for (s, c) in [("A", 2), ("B", 2), ("C", 2), ("D", 2), ("E", 1), ("F", 1)] {
            assert_eq!(count(&envs, &table, s), c, "{s}");
        }
    }

    #[test]
    fn minimal_corpus() {
        let envs = EnvironmentSet::from_names([("e", vec![vec!["A", "B"]])]).unwrap();
        let table = derive_contexts(&envs, &SimConfig::default()).unwrap();
        assert_eq!(table.counts, [1, 1]);
    }

    #[test]
    fn exp1_network_structure() {
        let envs = exp1();
        let net = build_network(&envs, &SimConfig::default()).unwrap();
        let c = envs.symbol("C").unwrap();
        let c_neurons: BTreeSet<_> = net
            .contexts_of(c)
            .flat_map(|ctx| ctx.neurons.clone())
            .collect();
        assert_eq!(c_neurons.len(), 6);
        assert_eq!(net.contexts_of(c).count(), 2);
        // env1's C context feeds D and E, env2's feeds D only; 9 synapses per pair.
        let mut per_pair = std::collections::BTreeMap::new();
        for ctx in net.contexts_of(c) {
            for &pre in &ctx.neurons {
                for &post in net.targets_of(pre) {
                    let post_ctx = net
                        .contexts()
                        .iter()
                        .position(|k| k.neurons.contains(&post))
                        .unwrap();
                    *per_pair
                        .entry((ctx.key.environment.clone(), post_ctx))
                        .or_insert(0) += 1;
                }
            }
        }
        assert_eq!(per_pair.len(), 3);
        assert!(per_pair.values().all(|&n| n == 9));
    }

    #[test]
    fn neurons_stay_in_their_subpopulation() {
        let envs = exp1();
        let net = build_network(&envs, &SimConfig::default()).unwrap();
        let mut seen = BTreeSet::new();
        for ctx in net.contexts() {
            for &n in &ctx.neurons {
                assert_eq!(net.subpopulation_of(n), ctx.key.symbol);
                assert!(seen.insert(n), "neuron in two contexts");
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let envs = exp1();
        let a = build_network(&envs, &SimConfig::default()).unwrap();
        let b = build_network(&envs, &SimConfig::default()).unwrap();
        assert_eq!(a.synapses(), b.synapses());
        let c = build_network(
            &envs,
            &SimConfig {
                seed: 6,
                ..SimConfig::default()
            },
        )
        .unwrap();
        assert_ne!(a.synapses(), c.synapses());
    }

    #[test]
    fn capacity_overflow() {
        let config = SimConfig {
            neurons: 5,
            rho: 3,
            ..SimConfig::default()
        };
        let err = build_network(&exp1(), &config).unwrap_err();
        assert!(matches!(
            err,
            Error::Capacity {
                contexts: 2,
                neurons: 5,
                ..
            }
        ));
    }

    #[test]
    fn no_backward_edges() {
        let net = build_network(&path_env(), &SimConfig::default()).unwrap();
        let edges = net.symbol_edges();
        for &(u, v) in &edges {
            assert!(!edges.contains(&(v, u)));
        }
    }
}
