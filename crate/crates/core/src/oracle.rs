//! Classical graph references used to check the spiking planner.

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adaptation::ambiguity;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::symbols::{EnvironmentSet, SymbolId};

/// Directed graph over symbols with one edge per observed transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolGraph {
    nodes: usize,
    edges: BTreeSet<(SymbolId, SymbolId)>,
    adjacency: Vec<Vec<SymbolId>>,
}

impl SymbolGraph {
    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = (SymbolId, SymbolId)>) -> Self {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        let mut adjacency = vec![Vec::new(); nodes];
        // BTreeSet iteration keeps each list sorted by index.
        for &(u, v) in &edges {
            adjacency[u.index()].push(v);
        }
        Self {
            nodes,
            edges,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(SymbolId, SymbolId)> {
        &self.edges
    }

    pub fn has_edge(&self, u: SymbolId, v: SymbolId) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn successors(&self, u: SymbolId) -> &[SymbolId] {
        &self.adjacency[u.index()]
    }

    fn check(&self, node: SymbolId) -> Result<()> {
        if node.index() < self.nodes {
            Ok(())
        } else {
            Err(Error::UnknownSymbol(node.to_string()))
        }
    }
}

pub fn symbol_graph(envs: &EnvironmentSet) -> SymbolGraph {
    let edges = envs
        .environments()
        .iter()
        .flat_map(|env| env.sequences.iter())
        .flat_map(|seq| seq.windows(2).map(|w| (w[0], w[1])));
    SymbolGraph::from_edges(envs.symbol_count(), edges)
}

/// Hop distances from `start`; `None` for unreachable nodes.
pub fn bfs_distances(graph: &SymbolGraph, start: SymbolId) -> Result<Vec<Option<usize>>> {
    graph.check(start)?;
    let mut dist = vec![None; graph.node_count()];
    dist[start.index()] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u.index()].expect("queued nodes have a distance");
        for &v in graph.successors(u) {
            if dist[v.index()].is_none() {
                dist[v.index()] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}

/// Minimum-hop path, ties broken toward lower symbol indices. Empty when
/// `target` is unreachable.
pub fn bfs_shortest_path(
    graph: &SymbolGraph,
    start: SymbolId,
    target: SymbolId,
) -> Result<Vec<SymbolId>> {
    graph.check(start)?;
    graph.check(target)?;
    let mut parent: Vec<Option<SymbolId>> = vec![None; graph.node_count()];
    let mut seen = vec![false; graph.node_count()];
    seen[start.index()] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            break;
        }
        for &v in graph.successors(u) {
            if !seen[v.index()] {
                seen[v.index()] = true;
                parent[v.index()] = Some(u);
                queue.push_back(v);
            }
        }
    }
    if !seen[target.index()] {
        return Ok(Vec::new());
    }
    let mut path = vec![target];
    let mut cur = target;
    while let Some(p) = parent[cur.index()] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Ok(path)
}

/// Number of distinct minimum-hop paths from `start` to `target`.
pub fn count_shortest_paths(
    graph: &SymbolGraph,
    start: SymbolId,
    target: SymbolId,
) -> Result<usize> {
    let dist = bfs_distances(graph, start)?;
    graph.check(target)?;
    let mut order: Vec<SymbolId> = (0..graph.node_count() as u32)
        .map(SymbolId)
        .filter(|s| dist[s.index()].is_some())
        .collect();
    order.sort_by_key(|s| dist[s.index()]);
    let mut ways = vec![0usize; graph.node_count()];
    ways[start.index()] = 1;
    for u in order {
        let du = dist[u.index()].unwrap();
        for &v in graph.successors(u) {
            if dist[v.index()] == Some(du + 1) {
                ways[v.index()] += ways[u.index()];
            }
        }
    }
    Ok(ways[target.index()])
}

/// A reachable place considered as an implicit localization target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub symbol: SymbolId,
    pub alpha: usize,
    pub distance: usize,
}

pub trait TargetSelector: Send + Sync {
    fn select(&self, candidates: &[Candidate]) -> Option<SymbolId>;
}

/// Closest place whose ambiguity is below the maximum.
pub struct NearestReduced;

/// Closest place of globally minimal ambiguity.
pub struct GlobalMin;

impl TargetSelector for NearestReduced {
    fn select(&self, candidates: &[Candidate]) -> Option<SymbolId> {
        let max = candidates.iter().map(|c| c.alpha).max()?;
        candidates
            .iter()
            .filter(|c| c.alpha < max)
            .min_by_key(|c| (c.distance, c.alpha, c.symbol))
            .map(|c| c.symbol)
    }
}

impl TargetSelector for GlobalMin {
    fn select(&self, candidates: &[Candidate]) -> Option<SymbolId> {
        let max = candidates.iter().map(|c| c.alpha).max()?;
        let min = candidates.iter().map(|c| c.alpha).min()?;
        if min == max {
            return None;
        }
        candidates
            .iter()
            .filter(|c| c.alpha == min)
            .min_by_key(|c| (c.distance, c.symbol))
            .map(|c| c.symbol)
    }
}

pub fn selector_registry() -> &'static Registry<dyn TargetSelector> {
    static REGISTRY: OnceLock<Registry<dyn TargetSelector>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn TargetSelector>::new("oracle_mode")
            .with("nearest_reduced", Box::new(NearestReduced))
            .with("global_min", Box::new(GlobalMin))
    })
}

/// Least-ambiguous target chosen by the selector registered as `mode`.
/// Falls back to `start` when every reachable place is equally ambiguous.
pub fn ambiguity_target(envs: &EnvironmentSet, start: SymbolId, mode: &str) -> Result<SymbolId> {
    let selector = selector_registry().get(mode)?;
    let graph = symbol_graph(envs);
    let dist = bfs_distances(&graph, start)?;
    let candidates = envs
        .symbols()
        .ids()
        .filter_map(|s| dist[s.index()].map(|d| (s, d)))
        .map(|(symbol, distance)| {
            Ok(Candidate {
                symbol,
                alpha: ambiguity(envs, symbol)?,
                distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(selector.select(&candidates).unwrap_or(start))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomEnvParams {
    /// Hop length of the unique shortest path.
    pub depth: usize,
    /// Number of sequences (1 yields a single chain).
    pub branches: usize,
    /// Upper bound on distinct symbols.
    pub symbols: usize,
    /// Earliest path position an alternative branch may leave from.
    pub min_divergence: usize,
}

const MAX_ATTEMPTS: usize = 1000;

fn symbol_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("S{i}")
    }
}

/// Seeded single-environment corpus: a main chain of `depth` hops plus
/// strictly longer detours that leave an existing sequence and rejoin only
/// at the shared target.
pub fn gen_random_env(seed: u64, params: RandomEnvParams) -> Result<EnvironmentSet> {
    if params.depth == 0 || params.branches == 0 || params.symbols < params.depth + 1 {
        return Err(Error::Environment(format!(
            "invalid generator parameters {params:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut next = 0usize;
        let mut fresh = |count: usize| {
            let ids: Vec<usize> = (next..next + count).collect();
            next += count;
            ids
        };
        let main = fresh(params.depth + 1);
        let target = *main.last().unwrap();
        let mut sequences = vec![main];
        for _ in 1..params.branches {
            let parent = sequences[rng.gen_range(0..sequences.len())].clone();
            let last_fork = parent.len() - 2;
            if params.min_divergence > last_fork {
                continue 'attempt;
            }
            let fork = rng.gen_range(params.min_divergence..=last_fork);
            let min_hops = (params.depth + 1).max(fork + 2);
            let hops = rng.gen_range(min_hops..=min_hops + 2);
            let mut seq = parent[..=fork].to_vec();
            seq.extend(fresh(hops - fork - 1));
            seq.push(target);
            sequences.push(seq);
        }
        if next > params.symbols {
            continue;
        }
        let envs = EnvironmentSet::from_names([(
            "random".to_string(),
            sequences
                .iter()
                .map(|seq| seq.iter().map(|&i| symbol_name(i)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )])?;
        let graph = symbol_graph(&envs);
        let start = envs.start();
        let goal = envs.symbol(&symbol_name(target))?;
        let path = bfs_shortest_path(&graph, start, goal)?;
        if path.len() == params.depth + 1 && count_shortest_paths(&graph, start, goal)? == 1 {
            return Ok(envs);
        }
    }
    Err(Error::GeneratorExhausted(MAX_ATTEMPTS))
}
