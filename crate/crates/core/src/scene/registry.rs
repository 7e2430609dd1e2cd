//! Every tracked or detected object is an agent with a logical address.

use crate::tracking::RigidBodyPose;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const ADDRESS_SCHEME: &str = "spice://";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Ingredient,
    Rbi,
    Zone,
    Display,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Ingredient => "ingredient",
            AgentKind::Rbi => "rbi",
            AgentKind::Zone => "zone",
            AgentKind::Display => "display",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentState {
    Empty,
    Pose { pose: RigidBodyPose },
    /// `slot` is the ingredient's position in detection order.
    Ingredient { label: String, slot: usize },
    Polygon { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub address: String,
    pub kind: AgentKind,
    pub label: String,
    pub state: AgentState,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("address {0} is already registered")]
    DuplicateAddress(String),
    #[error("agent label must not be empty")]
    EmptyLabel,
    #[error("address {address} does not match kind {kind}")]
    BadAddress { address: String, kind: AgentKind },
    #[error("no agent at {0}")]
    UnknownAddress(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentRegistry {
    agents: BTreeMap<String, Agent>,
    next_id: u64,
}

impl AgentRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Registers under a fresh `spice://<kind>/<n>` address.
    pub fn register(&mut self, kind: AgentKind, label: &str, state: AgentState) -> Result<&Agent, RegistryError> {
        if label.trim().is_empty() {
            return Err(RegistryError::EmptyLabel);
        }
        let address = loop {
            self.next_id += 1;
            let a = format!("{ADDRESS_SCHEME}{kind}/{}", self.next_id);
            if !self.agents.contains_key(&a) {
                break a;
            }
        };
        Ok(self.insert(address, kind, label, state))
    }

    /// Registers under a caller-chosen address of the same form.
    pub fn register_at(
        &mut self,
        address: &str,
        kind: AgentKind,
        label: &str,
        state: AgentState,
    ) -> Result<&Agent, RegistryError> {
        if label.trim().is_empty() {
            return Err(RegistryError::EmptyLabel);
        }
        let prefix = format!("{ADDRESS_SCHEME}{kind}/");
        match address.strip_prefix(&prefix) {
            Some(rest) if !rest.is_empty() && !rest.contains('/') => {}
            _ => {
                return Err(RegistryError::BadAddress {
                    address: address.to_string(),
                    kind,
                })
            }
        }
        if self.agents.contains_key(address) {
            return Err(RegistryError::DuplicateAddress(address.to_string()));
        }
        Ok(self.insert(address.to_string(), kind, label, state))
    }

    fn insert(&mut self, address: String, kind: AgentKind, label: &str, state: AgentState) -> &Agent {
        let agent = Agent {
            address: address.clone(),
            kind,
            label: label.to_string(),
            state,
        };
        self.agents.entry(address).or_insert(agent)
    }

    pub fn get(&self, address: &str) -> Option<&Agent> {
        self.agents.get(address)
    }

    pub fn set_state(&mut self, address: &str, state: AgentState) -> Result<(), RegistryError> {
        let agent = self
            .agents
            .get_mut(address)
            .ok_or_else(|| RegistryError::UnknownAddress(address.to_string()))?;
        agent.state = state;
        Ok(())
    }

    pub fn remove(&mut self, address: &str) -> Option<Agent> {
        self.agents.remove(address)
    }

    /// Drops every agent of `kind`; the address counter keeps running.
    pub fn remove_kind(&mut self, kind: AgentKind) {
        self.agents.retain(|_, a| a.kind != kind);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Agent> {
        self.agents.values()
    }

    pub fn of_kind(&self, kind: AgentKind) -> impl Iterator<Item = &Agent> {
        self.agents.values().filter(move |a| a.kind == kind)
    }

    pub fn snapshot(&self) -> Vec<Agent> {
        self.agents.values().cloned().collect()
    }
}
