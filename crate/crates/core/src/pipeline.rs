//! Complete EFX allocations on bipartite instances.
//!
//! Three stages build a partial EFX orientation: a greedy picking pass over
//! S then T, saturation of non-envied agents, and a safe-set repair. A final
//! completion step hands every leftover edge to the unique envier of its
//! envied endpoint. The half-EFX variant instead orients leftovers to the
//! non-envied endpoint.

use std::collections::BTreeMap;

use num::Zero;
use serde::Serialize;

use crate::cut::cut;
use crate::derived::{available, available_bundles, available_set, safe_set, unallocated_incident};
use crate::error::{Error, Result};
use crate::fairness::{envied_set, enviers_of, is_efx, is_envied};
use crate::model::{Allocation, AgentId, Bundle, EdgeId, Instance};
use crate::structure::Bipartition;

/// Key properties of a partial orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
    pub p4: bool,
    pub p5: bool,
}

/// Structural facts expected at stage boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Claims {
    /// Every envied agent lies in S.
    pub envied_in_s: bool,
    /// Leftovers sit between an envied agent and a non-envied one holding
    /// the rest of the pair's edges.
    pub unallocated_edges: bool,
    /// Non-envied agents have nothing available and value their leftovers
    /// at most their own bundle.
    pub non_envied_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub stage: String,
    pub allocation: Allocation,
    pub unallocated: Vec<EdgeId>,
    pub envied: Vec<AgentId>,
    pub flags: Flags,
    pub claims: Claims,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Pick { agent: AgentId, from: AgentId, edges: Bundle },
    Case1 { agent: AgentId, other: AgentId, edges: Bundle },
    Case2 { chooser: AgentId, cutter: AgentId, chosen: Bundle, rest: Bundle },
    Case3 { agent: AgentId, other: AgentId, edges: Bundle },
    Swap {
        envied: AgentId,
        envier: AgentId,
        to_envied: Bundle,
        to_envier: Bundle,
        absorbed: Bundle,
        envied_before: usize,
        envied_after: usize,
    },
    Complete { edges: Bundle, envied: AgentId, other: AgentId, recipient: AgentId },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineTrace {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
}

impl PipelineTrace {
    pub fn snapshot(&self, stage: &str) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.stage == stage)
    }
}

pub const STAGE_GREEDY: &str = "greedy";
pub const STAGE_SATURATE: &str = "saturate";
pub const STAGE_SAFE: &str = "safe-set";
pub const STAGE_COMPLETE: &str = "complete";

fn require_bipartition(inst: &Instance, bip: &Bipartition) -> Result<()> {
    if bip.is_valid_for(inst) {
        Ok(())
    } else {
        Err(Error::NotBipartite)
    }
}

fn canonical(inst: &Instance) -> Result<Bipartition> {
    Bipartition::canonical(inst).ok_or(Error::NotBipartite)
}

/// Holder of a whole cut bundle: `None` when untouched, `Some(Some(a))`
/// when `a` holds all of it, `Some(None)` when split or partially held.
fn bundle_holder(x: &Allocation, bundle: &Bundle) -> Option<Option<AgentId>> {
    let owners: Vec<Option<AgentId>> = bundle.iter().map(|&e| x.owner(e)).collect();
    if owners.iter().all(Option::is_none) {
        return None;
    }
    let first = owners[0];
    Some(if owners.iter().all(|o| *o == first) { first } else { None })
}

fn pair_pattern_ok(inst: &Instance, x: &Allocation, bip: &Bipartition, a: AgentId, b: AgentId) -> bool {
    let cutter = bip.cutter(a, b);
    let cfg = cut(inst, cutter, a ^ b ^ cutter);
    let holders: Vec<Option<Option<AgentId>>> = cfg
        .bundles()
        .iter()
        .filter(|bundle| !bundle.is_empty())
        .map(|bundle| bundle_holder(x, bundle))
        .collect();
    let mut held = Vec::new();
    for h in holders.into_iter().flatten() {
        match h {
            Some(agent) if agent == a || agent == b => held.push(agent),
            _ => return false,
        }
    }
    held.len() < 2 || held[0] != held[1]
}

pub fn check_properties(inst: &Instance, x: &Allocation, bip: &Bipartition) -> Flags {
    let p1 = x.is_orientation(inst) && is_efx(inst, x);
    let p2 = inst.skeleton_edges().all(|(a, b)| pair_pattern_ok(inst, x, bip, a, b));
    let p3 = (0..inst.n()).all(|i| {
        let own = inst.bundle_value(i, x.bundle(i));
        available_bundles(inst, x, i, bip)
            .values()
            .all(|b| own >= inst.bundle_value(i, b))
    });
    let envied = envied_set(inst, x);
    let p4 = (0..inst.n())
        .filter(|i| !envied.contains(i))
        .all(|i| available_set(inst, x, i, bip).is_empty());
    let p5 = envied.iter().all(|&i| {
        let safe = safe_set(inst, x, i, bip).expect("agent is envied");
        enviers_of(inst, x, i).iter().all(|j| safe.contains(j))
    });
    Flags { p1, p2, p3, p4, p5 }
}

pub fn check_claims(inst: &Instance, x: &Allocation, bip: &Bipartition) -> Claims {
    let envied = envied_set(inst, x);
    let envied_in_s = envied.iter().all(|&i| bip.is_s(i));
    let unallocated_edges = x.unallocated().all(|e| {
        let edge = inst.edge(e);
        [(edge.u, edge.v), (edge.v, edge.u)].into_iter().any(|(i, j)| {
            envied.contains(&i) && !envied.contains(&j) && {
                let a = available(inst, x, i, j, bip);
                inst.edge_set(i, j)
                    .iter()
                    .filter(|e| !a.contains(e))
                    .all(|&f| x.owner(f) == Some(j))
            }
        })
    });
    let non_envied_bound = (0..inst.n()).filter(|i| !envied.contains(i)).all(|i| {
        available_set(inst, x, i, bip).is_empty()
            && inst.bundle_value(i, &unallocated_incident(inst, x, i)) <= inst.bundle_value(i, x.bundle(i))
    });
    Claims {
        envied_in_s,
        unallocated_edges,
        non_envied_bound,
    }
}

fn snapshot(inst: &Instance, x: &Allocation, bip: &Bipartition, stage: &str) -> Snapshot {
    Snapshot {
        stage: stage.to_string(),
        allocation: x.clone(),
        unallocated: x.unallocated().collect(),
        envied: envied_set(inst, x).into_iter().collect(),
        flags: check_properties(inst, x, bip),
        claims: check_claims(inst, x, bip),
    }
}

fn greedy_into(inst: &Instance, bip: &Bipartition, events: &mut Vec<Event>) -> Allocation {
    let mut x = Allocation::empty_for(inst);
    let sequence = bip.s().into_iter().chain(bip.t());
    for agent in sequence {
        let mut best: Option<(AgentId, Bundle, crate::Rational)> = None;
        for &k in inst.neighbors(agent) {
            let bundle = available(inst, &x, agent, k, bip);
            let value = inst.bundle_value(agent, &bundle);
            if best.as_ref().is_none_or(|(_, _, v)| value > *v) {
                best = Some((k, bundle, value));
            }
        }
        if let Some((from, edges, value)) = best {
            if !value.is_zero() {
                x.give_all(agent, &edges);
                events.push(Event::Pick { agent, from, edges });
            }
        }
    }
    x
}

/// Picking pass: S ascending then T ascending, each agent taking its most
/// valuable available bundle.
pub fn greedy_orientation(inst: &Instance, bip: &Bipartition) -> Result<Allocation> {
    require_bipartition(inst, bip)?;
    Ok(greedy_into(inst, bip, &mut Vec::new()))
}

fn saturate_into(inst: &Instance, x: &mut Allocation, bip: &Bipartition, events: &mut Vec<Event>) {
    while let Some(i) = (0..inst.n()).find(|&i| !is_envied(inst, x, i) && !available_set(inst, x, i, bip).is_empty()) {
        for &j in inst.neighbors(i) {
            let a = available(inst, x, i, j, bip);
            if a.is_empty() {
                continue;
            }
            let edges = inst.edge_set(i, j);
            if edges.iter().any(|&e| x.owner(e) == Some(j)) {
                x.give_all(i, &a);
                events.push(Event::Case1 { agent: i, other: j, edges: a });
            } else if !is_envied(inst, x, j) {
                let cutter = bip.cutter(i, j);
                let chooser = i ^ j ^ cutter;
                let cfg = cut(inst, cutter, chooser);
                let pick = cfg.preferred_by(inst, chooser);
                let chosen = cfg.bundle(pick).clone();
                let rest = cfg.bundle(1 - pick).clone();
                x.give_all(chooser, &chosen);
                x.give_all(cutter, &rest);
                events.push(Event::Case2 { chooser, cutter, chosen, rest });
            } else {
                let cfg = cut(inst, i, j);
                let chosen = cfg.bundle(cfg.preferred_by(inst, i)).clone();
                x.give_all(i, &chosen);
                events.push(Event::Case3 { agent: i, other: j, edges: chosen });
            }
        }
    }
}

fn require_flags(inst: &Instance, x: &Allocation, bip: &Bipartition, upto: usize) -> Result<()> {
    let f = check_properties(inst, x, bip);
    let flags = [f.p1, f.p2, f.p3, f.p4];
    match flags[..upto].iter().position(|ok| !ok) {
        None => Ok(()),
        Some(k) => Err(Error::Precondition(format!("property {} does not hold", k + 1))),
    }
}

/// Gives every non-envied agent its available edges until none remain.
pub fn saturate_non_envied(inst: &Instance, x: &Allocation, bip: &Bipartition) -> Result<Allocation> {
    require_bipartition(inst, bip)?;
    require_flags(inst, x, bip, 3)?;
    let mut out = x.clone();
    saturate_into(inst, &mut out, bip, &mut Vec::new());
    Ok(out)
}

fn safe_sets_into(inst: &Instance, x: &mut Allocation, bip: &Bipartition, events: &mut Vec<Event>) {
    loop {
        let envied = envied_set(inst, x);
        let target = envied.iter().find_map(|&i| {
            let safe = safe_set(inst, x, i, bip).expect("agent is envied");
            enviers_of(inst, x, i)
                .into_iter()
                .find(|j| !safe.contains(j))
                .map(|j| (i, j))
        });
        let Some((i, j)) = target else {
            break;
        };
        let mut to_envied = Bundle::new();
        let mut to_envier = Bundle::new();
        for &e in inst.edge_set(i, j) {
            match x.owner(e) {
                Some(o) if o == i => {
                    to_envier.insert(e);
                }
                Some(o) if o == j => {
                    to_envied.insert(e);
                }
                _ => {}
            }
        }
        x.give_all(i, &to_envied);
        x.give_all(j, &to_envier);
        let absorbed = available_set(inst, x, i, bip);
        x.give_all(i, &absorbed);
        events.push(Event::Swap {
            envied: i,
            envier: j,
            to_envied,
            to_envier,
            absorbed,
            envied_before: envied.len(),
            envied_after: envied_set(inst, x).len(),
        });
        // The envier gained value and may have stopped envying a second
        // agent that still has available edges.
        saturate_into(inst, x, bip, events);
    }
}

/// Repairs every envied agent whose envier is not in its safe set,
/// re-saturating after each swap.
pub fn enforce_safe_sets(inst: &Instance, x: &Allocation, bip: &Bipartition) -> Result<Allocation> {
    require_bipartition(inst, bip)?;
    require_flags(inst, x, bip, 4)?;
    let mut out = x.clone();
    safe_sets_into(inst, &mut out, bip, &mut Vec::new());
    Ok(out)
}

/// Leftover edges grouped by pair as (envied endpoint, other endpoint).
fn leftover_groups(inst: &Instance, x: &Allocation) -> Result<BTreeMap<(AgentId, AgentId), Bundle>> {
    let envied = envied_set(inst, x);
    let mut groups: BTreeMap<(AgentId, AgentId), Bundle> = BTreeMap::new();
    for e in x.unallocated() {
        let edge = inst.edge(e);
        let key = match (envied.contains(&edge.u), envied.contains(&edge.v)) {
            (true, false) => (edge.u, edge.v),
            (false, true) => (edge.v, edge.u),
            _ => {
                return Err(Error::Precondition(format!(
                    "leftover edge {e} is not between an envied and a non-envied agent"
                )))
            }
        };
        groups.entry(key).or_default().insert(e);
    }
    Ok(groups)
}

fn stages(inst: &Instance, bip: &Bipartition, trace: &mut PipelineTrace) -> Allocation {
    let mut x = greedy_into(inst, bip, &mut trace.events);
    trace.snapshots.push(snapshot(inst, &x, bip, STAGE_GREEDY));
    saturate_into(inst, &mut x, bip, &mut trace.events);
    trace.snapshots.push(snapshot(inst, &x, bip, STAGE_SATURATE));
    safe_sets_into(inst, &mut x, bip, &mut trace.events);
    trace.snapshots.push(snapshot(inst, &x, bip, STAGE_SAFE));
    x
}

pub fn complete_efx_with(inst: &Instance, bip: &Bipartition) -> Result<(Allocation, PipelineTrace)> {
    require_bipartition(inst, bip)?;
    let mut trace = PipelineTrace::default();
    let partial = stages(inst, bip, &mut trace);
    let mut x = partial.clone();
    for ((i, j), edges) in leftover_groups(inst, &partial)? {
        let enviers = enviers_of(inst, &partial, i);
        let [k] = enviers[..] else {
            return Err(Error::Precondition(format!("agent {i} has {} enviers", enviers.len())));
        };
        if k == j {
            return Err(Error::Precondition(format!("agent {i} is envied by {j} itself")));
        }
        x.give_all(k, &edges);
        trace.events.push(Event::Complete { edges, envied: i, other: j, recipient: k });
    }
    trace.snapshots.push(snapshot(inst, &x, bip, STAGE_COMPLETE));
    Ok((x, trace))
}

/// Complete EFX allocation under the canonical bipartition.
pub fn complete_efx(inst: &Instance) -> Result<(Allocation, PipelineTrace)> {
    complete_efx_with(inst, &canonical(inst)?)
}

pub fn half_efx_orientation_with(inst: &Instance, bip: &Bipartition) -> Result<(Allocation, PipelineTrace)> {
    require_bipartition(inst, bip)?;
    let mut trace = PipelineTrace::default();
    let partial = stages(inst, bip, &mut trace);
    let mut x = partial.clone();
    for ((i, j), edges) in leftover_groups(inst, &partial)? {
        x.give_all(j, &edges);
        trace.events.push(Event::Complete { edges, envied: i, other: j, recipient: j });
    }
    trace.snapshots.push(snapshot(inst, &x, bip, STAGE_COMPLETE));
    Ok((x, trace))
}

/// Complete orientation where T is EFX and everyone is half-EFX; the
/// smaller side of each component plays S.
pub fn half_efx_orientation(inst: &Instance) -> Result<Allocation> {
    let bip = Bipartition::smaller_side_as_s(inst).ok_or(Error::NotBipartite)?;
    Ok(half_efx_orientation_with(inst, &bip)?.0)
}
