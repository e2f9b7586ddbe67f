//! State-dependent availability sets over a partial orientation.
//!
//! `A_{i,j}` is what `i` may still claim from E(i, j), `A_i` the union over
//! neighbors, `U_i` the unallocated incident edges, `B_i` the family of
//! nonempty `A_{i,j}` and `S_i` the safe set of an envied agent.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cut::cut;
use crate::error::{Error, Result};
use crate::fairness::{envied_set, is_envied};
use crate::model::{Allocation, AgentId, Bundle, Instance};
use crate::structure::Bipartition;

pub fn available(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId, bip: &Bipartition) -> Bundle {
    if !inst.adjacent(i, j) {
        return Bundle::new();
    }
    let edges = inst.edge_set(i, j);
    let (mut by_i, mut by_j, mut by_other) = (false, false, false);
    for &e in edges {
        match x.owner(e) {
            Some(a) if a == i => by_i = true,
            Some(a) if a == j => by_j = true,
            Some(_) => by_other = true,
            None => {}
        }
    }
    match (by_i, by_j, by_other) {
        (false, false, false) => {
            let cfg = cut(inst, bip.cutter(i, j), bip.cutter(i, j) ^ i ^ j);
            cfg.bundle(cfg.preferred_by(inst, i)).clone()
        }
        (false, true, false) => edges.iter().copied().filter(|&e| !x.is_allocated(e)).collect(),
        _ => Bundle::new(),
    }
}

pub fn available_set(inst: &Instance, x: &Allocation, i: AgentId, bip: &Bipartition) -> Bundle {
    inst.neighbors(i)
        .iter()
        .flat_map(|&j| available(inst, x, i, j, bip))
        .collect()
}

/// Nonempty `A_{i,j}`, keyed by `j`.
pub fn available_bundles(inst: &Instance, x: &Allocation, i: AgentId, bip: &Bipartition) -> BTreeMap<AgentId, Bundle> {
    inst.neighbors(i)
        .iter()
        .map(|&j| (j, available(inst, x, i, j, bip)))
        .filter(|(_, b)| !b.is_empty())
        .collect()
}

pub fn unallocated_incident(inst: &Instance, x: &Allocation, i: AgentId) -> Bundle {
    inst.incident(i).iter().copied().filter(|&e| !x.is_allocated(e)).collect()
}

/// Non-envied `k` with `v_i(X_i) >= v_i(X_k ∪ A_i)`.
pub fn safe_set(inst: &Instance, x: &Allocation, i: AgentId, bip: &Bipartition) -> Result<BTreeSet<AgentId>> {
    if !is_envied(inst, x, i) {
        return Err(Error::NotEnvied(i));
    }
    let own = inst.bundle_value(i, x.bundle(i));
    let avail = available_set(inst, x, i, bip);
    let extra = inst.bundle_value(i, &avail);
    let envied = envied_set(inst, x);
    Ok((0..inst.n())
        .filter(|k| !envied.contains(k))
        .filter(|&k| own >= inst.bundle_value(i, x.bundle(k)) + &extra)
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentSets {
    pub agent: AgentId,
    pub envied: bool,
    pub a: Bundle,
    pub u: Bundle,
    pub b: BTreeMap<AgentId, Bundle>,
    pub safe: Option<BTreeSet<AgentId>>,
}

/// All derived sets of one state, recomputed from scratch.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedState {
    pub agents: Vec<AgentSets>,
}

impl DerivedState {
    pub fn compute(inst: &Instance, x: &Allocation, bip: &Bipartition) -> Self {
        let envied = envied_set(inst, x);
        let agents = (0..inst.n())
            .map(|i| AgentSets {
                agent: i,
                envied: envied.contains(&i),
                a: available_set(inst, x, i, bip),
                u: unallocated_incident(inst, x, i),
                b: available_bundles(inst, x, i, bip),
                safe: envied.contains(&i).then(|| safe_set(inst, x, i, bip).expect("agent is envied")),
            })
            .collect();
        Self { agents }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EdgeItem;
    use crate::rational::int;

    // s = 0, t = 1; E(0, 1) = {10, 9}.
    fn pair() -> (Instance, Bipartition) {
        let inst = Instance::new(
            2,
            vec![EdgeItem::symmetric(0, 1, int(10)), EdgeItem::symmetric(0, 1, int(9))],
        )
        .unwrap();
        let bip = Bipartition::canonical(&inst).unwrap();
        (inst, bip)
    }

    #[test]
    fn table_rows() {
        let (inst, bip) = pair();
        let mut x = Allocation::empty_for(&inst);
        let a01 = available(&inst, &x, 0, 1, &bip);
        assert_eq!(a01, [0].into_iter().collect());
        assert_eq!(available(&inst, &x, 1, 0, &bip), [0].into_iter().collect());
        x.give(0, 0);
        assert!(available(&inst, &x, 0, 1, &bip).is_empty());
        assert_eq!(available(&inst, &x, 1, 0, &bip), [1].into_iter().collect());
        x.give(1, 1);
        assert!(available(&inst, &x, 0, 1, &bip).is_empty());
        assert!(available(&inst, &x, 1, 0, &bip).is_empty());
        assert!(unallocated_incident(&inst, &x, 0).is_empty());
    }

    #[test]
    fn third_party_holder_blocks_both_sides() {
        let inst = Instance::new(
            3,
            vec![EdgeItem::symmetric(0, 1, int(2)), EdgeItem::symmetric(0, 1, int(1)), EdgeItem::symmetric(1, 2, int(1))],
        )
        .unwrap();
        let bip = Bipartition::canonical(&inst).unwrap();
        let mut x = Allocation::empty_for(&inst);
        x.give(2, 0);
        assert!(available(&inst, &x, 0, 1, &bip).is_empty());
        assert!(available(&inst, &x, 1, 0, &bip).is_empty());
        assert_eq!(unallocated_incident(&inst, &x, 0), [1].into_iter().collect());
    }

    #[test]
    fn safe_set_requires_envied_agent() {
        let (inst, bip) = pair();
        let mut x = Allocation::empty_for(&inst);
        assert!(matches!(safe_set(&inst, &x, 0, &bip), Err(Error::NotEnvied(0))));
        x.give(0, 0);
        let s = safe_set(&inst, &x, 0, &bip).unwrap();
        assert_eq!(s, [1].into_iter().collect());
        let state = DerivedState::compute(&inst, &x, &bip);
        assert!(state.agents[0].envied);
        assert!(state.agents[0].a.is_subset(&state.agents[0].u));
    }
}
