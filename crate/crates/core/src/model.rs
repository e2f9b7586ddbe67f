//! Multi-graph instances, allocations and their JSON forms.
//!
//! Agents are vertices, items are edges. Every edge is valued positively by
//! exactly its two endpoints and at zero by everyone else, and valuations are
//! additive over bundles.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub type AgentId = usize;
pub type EdgeId = usize;
pub type Bundle = BTreeSet<EdgeId>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeItem {
    pub u: AgentId,
    pub v: AgentId,
    #[serde(with = "rational::as_string")]
    pub wu: Rational,
    #[serde(with = "rational::as_string")]
    pub wv: Rational,
}

impl EdgeItem {
    pub fn new(u: AgentId, v: AgentId, wu: Rational, wv: Rational) -> Self {
        Self { u, v, wu, wv }
    }

    pub fn symmetric(u: AgentId, v: AgentId, w: Rational) -> Self {
        Self::new(u, v, w.clone(), w)
    }

    pub fn is_incident(&self, agent: AgentId) -> bool {
        self.u == agent || self.v == agent
    }

    pub fn other(&self, agent: AgentId) -> AgentId {
        if self.u == agent {
            self.v
        } else {
            self.u
        }
    }

    /// Value of this item to `agent`; zero unless `agent` is an endpoint.
    pub fn value_for(&self, agent: AgentId) -> Option<&Rational> {
        if self.u == agent {
            Some(&self.wu)
        } else if self.v == agent {
            Some(&self.wv)
        } else {
            None
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: Vec<EdgeItem>,
}

/// A validated multi-graph instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    edges: Vec<EdgeItem>,
    pairs: BTreeMap<(AgentId, AgentId), Vec<EdgeId>>,
    neighbors: Vec<Vec<AgentId>>,
    incident: Vec<Vec<EdgeId>>,
}

impl Instance {
    pub fn new(n: usize, edges: Vec<EdgeItem>) -> Result<Self> {
        for (k, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::AgentOutOfRange(k));
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(k));
            }
            if !rational::is_positive(&e.wu) || !rational::is_positive(&e.wv) {
                return Err(Error::NonPositiveWeight(k));
            }
        }
        let mut pairs: BTreeMap<(AgentId, AgentId), Vec<EdgeId>> = BTreeMap::new();
        let mut incident = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            pairs.entry(pair_key(e.u, e.v)).or_default().push(k);
            incident[e.u].push(k);
            incident[e.v].push(k);
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in pairs.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            pairs,
            neighbors,
            incident,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeItem] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeItem {
        &self.edges[id]
    }

    /// E(i, j) in ascending edge id. Panics when `i == j`.
    pub fn edge_set(&self, i: AgentId, j: AgentId) -> &[EdgeId] {
        assert_ne!(i, j, "E(i, i) is undefined");
        self.pairs
            .get(&pair_key(i, j))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn adjacent(&self, i: AgentId, j: AgentId) -> bool {
        i != j && self.pairs.contains_key(&pair_key(i, j))
    }

    pub fn neighbors(&self, agent: AgentId) -> &[AgentId] {
        &self.neighbors[agent]
    }

    pub fn incident(&self, agent: AgentId) -> &[EdgeId] {
        &self.incident[agent]
    }

    /// Skeleton edges `(i, j)` with `i < j`, ascending.
    pub fn skeleton_edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.pairs.keys().copied()
    }

    pub fn value(&self, agent: AgentId, edge: EdgeId) -> Rational {
        self.edges[edge]
            .value_for(agent)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn bundle_value<'a>(
        &self,
        agent: AgentId,
        bundle: impl IntoIterator<Item = &'a EdgeId>,
    ) -> Rational {
        let mut total = Rational::zero();
        for &e in bundle {
            if let Some(w) = self.edges[e].value_for(agent) {
                total += w;
            }
        }
        total
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges.iter().all(|e| e.wu == e.wv)
    }

    /// Restriction to a subset of edges over the same agents. Returns the
    /// new instance and, for each of its edges, the original edge id.
    pub fn restrict_edges(&self, keep: impl Fn(EdgeId) -> bool) -> (Instance, Vec<EdgeId>) {
        let ids: Vec<EdgeId> = (0..self.m()).filter(|&e| keep(e)).collect();
        let edges = ids.iter().map(|&e| self.edges[e].clone()).collect();
        let sub = Instance::new(self.n, edges).expect("restriction of a valid instance");
        (sub, ids)
    }

    /// Induced instance on `agents` (which must be closed under the edges
    /// kept). Returns the sub-instance, the agent map and the edge map.
    pub fn induced(&self, agents: &[AgentId]) -> (Instance, Vec<AgentId>, Vec<EdgeId>) {
        let mut local = vec![usize::MAX; self.n];
        for (k, &a) in agents.iter().enumerate() {
            local[a] = k;
        }
        let mut edge_map = Vec::new();
        let mut edges = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if local[e.u] != usize::MAX && local[e.v] != usize::MAX {
                edge_map.push(id);
                edges.push(EdgeItem::new(local[e.u], local[e.v], e.wu.clone(), e.wv.clone()));
            }
        }
        let sub = Instance::new(agents.len(), edges).expect("induced instance is valid");
        (sub, agents.to_vec(), edge_map)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Instance::new(file.n, file.edges)
    }

    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json_str(&text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile {
            n: self.n,
            edges: self.edges.clone(),
        })
        .expect("instance serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile {
            n: self.n,
            edges: self.edges.clone(),
        })
        .expect("instance serializes")
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    Instance::load(path)
}

fn pair_key(i: AgentId, j: AgentId) -> (AgentId, AgentId) {
    (i.min(j), i.max(j))
}

#[derive(Serialize, Deserialize)]
struct AllocationFile {
    bundles: Vec<Vec<EdgeId>>,
}

/// A partial or complete allocation of edge ids to agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    bundles: Vec<Bundle>,
    owner: Vec<Option<AgentId>>,
}

impl Allocation {
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            bundles: vec![Bundle::new(); n],
            owner: vec![None; m],
        }
    }

    pub fn empty_for(inst: &Instance) -> Self {
        Self::empty(inst.n(), inst.m())
    }

    pub fn from_bundles(inst: &Instance, bundles: Vec<Vec<EdgeId>>) -> Result<Self> {
        if bundles.len() != inst.n() {
            return Err(Error::InvalidAllocation(format!(
                "expected {} bundles, found {}",
                inst.n(),
                bundles.len()
            )));
        }
        let mut alloc = Self::empty_for(inst);
        for (agent, list) in bundles.into_iter().enumerate() {
            for e in list {
                if e >= inst.m() {
                    return Err(Error::EdgeOutOfRange(e));
                }
                if let Some(prev) = alloc.owner[e] {
                    return Err(Error::InvalidAllocation(format!(
                        "edge {e} assigned to both {prev} and {agent}"
                    )));
                }
                alloc.give(agent, e);
            }
        }
        Ok(alloc)
    }

    /// Builds from an owner list, one entry per edge.
    pub fn from_owners(n: usize, owners: &[Option<AgentId>]) -> Self {
        let mut alloc = Self::empty(n, owners.len());
        for (e, o) in owners.iter().enumerate() {
            if let Some(a) = *o {
                alloc.give(a, e);
            }
        }
        alloc
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn m(&self) -> usize {
        self.owner.len()
    }

    pub fn bundle(&self, agent: AgentId) -> &Bundle {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn owner(&self, edge: EdgeId) -> Option<AgentId> {
        self.owner[edge]
    }

    pub fn owners(&self) -> &[Option<AgentId>] {
        &self.owner
    }

    pub fn is_allocated(&self, edge: EdgeId) -> bool {
        self.owner[edge].is_some()
    }

    pub fn is_complete(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    pub fn unallocated(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(e, _)| e)
    }

    /// Every allocated edge sits with one of its endpoints.
    pub fn is_orientation(&self, inst: &Instance) -> bool {
        self.owner
            .iter()
            .enumerate()
            .all(|(e, o)| o.is_none_or(|a| inst.edge(e).is_incident(a)))
    }

    /// Assigns `edge` to `agent`, moving it if it was held elsewhere.
    pub fn give(&mut self, agent: AgentId, edge: EdgeId) {
        if let Some(prev) = self.owner[edge] {
            self.bundles[prev].remove(&edge);
        }
        self.bundles[agent].insert(edge);
        self.owner[edge] = Some(agent);
    }

    pub fn give_all<'a>(&mut self, agent: AgentId, edges: impl IntoIterator<Item = &'a EdgeId>) {
        for &e in edges {
            self.give(agent, e);
        }
    }

    pub fn take(&mut self, edge: EdgeId) {
        if let Some(prev) = self.owner[edge].take() {
            self.bundles[prev].remove(&edge);
        }
    }

    /// Rewrites a sub-instance allocation into `self`, mapping local agents
    /// and edges back to the parent ids.
    pub fn merge_from(&mut self, sub: &Allocation, agent_map: &[AgentId], edge_map: &[EdgeId]) {
        for (local_agent, bundle) in sub.bundles.iter().enumerate() {
            for &e in bundle {
                self.give(agent_map[local_agent], edge_map[e]);
            }
        }
    }

    pub fn from_json_str(inst: &Instance, text: &str) -> Result<Self> {
        let file: AllocationFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_bundles(inst, file.bundles)
    }

    pub fn load(inst: &Instance, path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(inst, &std::fs::read_to_string(path)?)
    }

    pub fn to_lists(&self) -> Vec<Vec<EdgeId>> {
        self.bundles.iter().map(|b| b.iter().copied().collect()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&AllocationFile {
            bundles: self.to_lists(),
        })
        .expect("allocation serializes")
    }
}

impl Serialize for Allocation {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        AllocationFile {
            bundles: self.to_lists(),
        }
        .serialize(ser)
    }
}
