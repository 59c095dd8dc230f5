//! Location symbols and the environment corpus.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a location symbol, assigned in order of first appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    lookup: HashMap<String, SymbolId>,
}

impl SymbolTable {
    pub fn intern(&mut self, name: &str) -> SymbolId {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = SymbolId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Result<SymbolId> {
        self.lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.names.len() as u32).map(SymbolId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub id: String,
    pub sequences: Vec<Vec<SymbolId>>,
}

/// A validated set of environments, each a list of symbol sequences that
/// all begin at the same start location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironmentSet", into = "RawEnvironmentSet")]
pub struct EnvironmentSet {
    symbols: SymbolTable,
    environments: Vec<Environment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnvironmentSet {
    pub environments: Vec<RawEnvironment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnvironment {
    pub id: String,
    pub sequences: Vec<Vec<String>>,
}

impl TryFrom<RawEnvironmentSet> for EnvironmentSet {
    type Error = Error;

    fn try_from(raw: RawEnvironmentSet) -> Result<Self> {
        let mut symbols = SymbolTable::default();
        let mut environments = Vec::with_capacity(raw.environments.len());
        for env in raw.environments {
            let sequences = env
                .sequences
                .iter()
                .map(|seq| {
                    seq.iter()
                        .map(|name| {
                            let name = name.trim();
                            if name.is_empty() {
                                Err(Error::Environment(format!(
                                    "empty symbol name in environment `{}`",
                                    env.id
                                )))
                            } else {
                                Ok(symbols.intern(name))
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            environments.push(Environment {
                id: env.id,
                sequences,
            });
        }
        let set = EnvironmentSet {
            symbols,
            environments,
        };
        set.validate()?;
        Ok(set)
    }
}

impl From<EnvironmentSet> for RawEnvironmentSet {
    fn from(set: EnvironmentSet) -> Self {
        RawEnvironmentSet {
            environments: set
                .environments
                .iter()
                .map(|env| RawEnvironment {
                    id: env.id.clone(),
                    sequences: env
                        .sequences
                        .iter()
                        .map(|seq| {
                            seq.iter()
                                .map(|&s| set.symbols.name(s).to_string())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl EnvironmentSet {
    /// Builds a set from `(environment id, sequences)` pairs of symbol names.
    pub fn from_names<E, S, Q, N>(environments: E) -> Result<Self>
    where
        E: IntoIterator<Item = (N, S)>,
        S: IntoIterator<Item = Q>,
        Q: IntoIterator<Item = N>,
        N: AsRef<str>,
    {
        let raw = RawEnvironmentSet {
            environments: environments
                .into_iter()
                .map(|(id, seqs)| RawEnvironment {
                    id: id.as_ref().to_string(),
                    sequences: seqs
                        .into_iter()
                        .map(|seq| seq.into_iter().map(|s| s.as_ref().to_string()).collect())
                        .collect(),
                })
                .collect(),
        };
        Self::try_from(raw)
    }

    /// Concatenates several sets. Environment ids must stay unique.
    pub fn merge<'a>(sets: impl IntoIterator<Item = &'a EnvironmentSet>) -> Result<Self> {
        let mut raw = RawEnvironmentSet {
            environments: Vec::new(),
        };
        for set in sets {
            raw.environments
                .extend(RawEnvironmentSet::from(set.clone()).environments);
        }
        Self::try_from(raw)
    }

    fn validate(&self) -> Result<()> {
        if self.environments.is_empty() {
            return Err(Error::Environment("no environments".into()));
        }
        let mut ids = BTreeSet::new();
        let mut start: Option<SymbolId> = None;
        for env in &self.environments {
            if !ids.insert(env.id.as_str()) {
                return Err(Error::Environment(format!(
                    "duplicate environment id `{}`",
                    env.id
                )));
            }
            if env.sequences.is_empty() {
                return Err(Error::Environment(format!(
                    "environment `{}` has no sequences",
                    env.id
                )));
            }
            for seq in &env.sequences {
                if seq.len() < 2 {
                    return Err(Error::Environment(format!(
                        "sequence in `{}` is shorter than 2 symbols",
                        env.id
                    )));
                }
                if let Some(w) = seq.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::Environment(format!(
                        "self-transition on `{}` in environment `{}`",
                        self.symbols.name(w[0]),
                        env.id
                    )));
                }
                match start {
                    None => start = Some(seq[0]),
                    Some(s) if s != seq[0] => {
                        return Err(Error::Environment(format!(
                            "sequences start at both `{}` and `{}`",
                            self.symbols.name(s),
                            self.symbols.name(seq[0])
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn environments(&self) -> &[Environment] {
        &self.environments
    }

    pub fn symbol(&self, name: &str) -> Result<SymbolId> {
        self.symbols.get(name)
    }

    pub fn name(&self, id: SymbolId) -> &str {
        self.symbols.name(id)
    }

    /// The shared first symbol of every sequence.
    pub fn start(&self) -> SymbolId {
        self.environments[0].sequences[0][0]
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }
}
