//! EFX orientations on multi-trees of diameter at most four with q <= 2.
//!
//! Rooted at the center `c`, the depth-1 vertices are attached one at a
//! time. Two invariants are kept after every step: an envied depth-1 agent
//! `i` has E(c, i) wholly with `i` or wholly with `c`, and does not envy `c`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::{enviers_of, is_efx, is_envied};
use crate::model::{Allocation, AgentId, EdgeId, Instance};
use crate::structure::{center_of, distances, eccentricity, multiplicity, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeCase {
    Base,
    NonEnvied,
    KeepsParentEdges,
    TakesBestChildEdge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeStep {
    pub agent: AgentId,
    pub case: TreeCase,
    /// Depth-1 agent whose edges to the root were flipped.
    pub reversed: Option<AgentId>,
    pub allocation: Allocation,
    pub property1: bool,
    pub property2: bool,
    pub efx: bool,
}

fn best_edge(inst: &Instance, agent: AgentId, edges: impl IntoIterator<Item = EdgeId>) -> Option<EdgeId> {
    let mut best: Option<(EdgeId, crate::Rational)> = None;
    for e in edges {
        let v = inst.value(agent, e);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((e, v));
        }
    }
    best.map(|(e, _)| e)
}

fn properties(inst: &Instance, x: &Allocation, c: AgentId, depth1: &[AgentId]) -> (bool, bool) {
    let mut p1 = true;
    let mut p2 = true;
    for &i in depth1.iter().filter(|&&i| is_envied(inst, x, i)) {
        let owners: Vec<Option<AgentId>> = inst.edge_set(c, i).iter().map(|&e| x.owner(e)).collect();
        p1 &= owners.iter().all(|&o| o == Some(i)) || owners.iter().all(|&o| o == Some(c));
        p2 &= inst.bundle_value(i, x.bundle(c)) <= inst.bundle_value(i, x.bundle(i));
    }
    (p1, p2)
}

/// Orients every E(i, j) for the children `kids` of depth-1 agent `i`.
fn attach_children(
    inst: &Instance,
    x: &mut Allocation,
    c: AgentId,
    i: AgentId,
    kids: &[AgentId],
) -> Result<(TreeCase, Option<AgentId>)> {
    let child_edges: Vec<EdgeId> = kids.iter().flat_map(|&j| inst.edge_set(i, j).iter().copied()).collect();
    let f_i = best_edge(inst, i, child_edges.iter().copied()).expect("child edges exist");
    if !is_envied(inst, x, i) {
        for &j in kids {
            let pick = best_edge(inst, j, inst.edge_set(i, j).iter().copied()).expect("adjacent");
            for &e in inst.edge_set(i, j) {
                x.give(if e == pick { j } else { i }, e);
            }
        }
        return Ok((TreeCase::NonEnvied, None));
    }
    if inst.bundle_value(i, inst.edge_set(c, i)) >= inst.value(i, f_i) {
        for &j in kids {
            x.give_all(j, inst.edge_set(i, j));
        }
        return Ok((TreeCase::KeepsParentEdges, None));
    }
    let c_enviers = enviers_of(inst, x, c);
    for &j in kids {
        for &e in inst.edge_set(i, j) {
            x.give(if e == f_i { i } else { j }, e);
        }
    }
    x.give_all(c, inst.edge_set(c, i));
    let reversed = match c_enviers[..] {
        [] => None,
        [h] => {
            for &e in inst.edge_set(c, h) {
                let to = if x.owner(e) == Some(c) { h } else { c };
                x.give(to, e);
            }
            Some(h)
        }
        _ => return Err(Error::Precondition("center has several enviers".into())),
    };
    Ok((TreeCase::TakesBestChildEdge, reversed))
}

fn check_shape(inst: &Instance) -> Result<()> {
    let all: Vec<AgentId> = (0..inst.n()).collect();
    let family = crate::structure::classify_component(inst, &all, true);
    if !matches!(family, Family::MultiStar | Family::MultiTree) {
        return Err(Error::Structure("skeleton is not a tree".into()));
    }
    let diameter = all.iter().map(|&a| eccentricity(inst, a)).max().unwrap_or(0);
    if diameter > 4 {
        return Err(Error::Structure(format!("tree diameter {diameter} exceeds 4")));
    }
    let q = multiplicity(inst);
    if q > 2 {
        return Err(Error::Structure(format!("multiplicity {q} exceeds 2")));
    }
    Ok(())
}

fn solve_tree_component(inst: &Instance, steps: &mut Vec<TreeStep>) -> Result<Allocation> {
    check_shape(inst)?;
    let mut x = Allocation::empty_for(inst);
    if inst.m() == 0 {
        return Ok(x);
    }
    let all: Vec<AgentId> = (0..inst.n()).collect();
    let c = center_of(inst, &all);
    let depth = distances(inst, c);
    let depth1: Vec<AgentId> = inst.neighbors(c).to_vec();
    let children = |i: AgentId| -> Vec<AgentId> {
        inst.neighbors(i).iter().copied().filter(|&j| depth[j] == Some(2)).collect()
    };
    let mut record = |x: &Allocation, agent, case, reversed| {
        let (property1, property2) = properties(inst, x, c, &depth1);
        let step = TreeStep {
            agent,
            case,
            reversed,
            allocation: x.clone(),
            property1,
            property2,
            efx: is_efx(inst, x),
        };
        let ok = step.property1 && step.property2 && step.efx;
        steps.push(step);
        ok
    };

    let f_c = best_edge(inst, c, inst.incident(c).iter().copied()).expect("center has an incident edge");
    x.give(c, f_c);
    for &i in &depth1 {
        for &e in inst.edge_set(c, i) {
            if e != f_c {
                x.give(i, e);
            }
        }
    }
    if !record(&x, c, TreeCase::Base, None) {
        return Err(Error::Precondition("base orientation breaks an invariant".into()));
    }

    for &i in &depth1 {
        let kids = children(i);
        if kids.is_empty() {
            continue;
        }
        let (case, reversed) = attach_children(inst, &mut x, c, i, &kids)?;
        if !record(&x, i, case, reversed) {
            return Err(Error::Precondition(format!("attaching the children of {i} breaks an invariant")));
        }
    }
    Ok(x)
}

/// Same as [`solve_multitree_d4_q2`], also returning the per-step record
/// (agent ids local to each component).
pub fn solve_multitree_d4_q2_traced(inst: &Instance) -> Result<(Allocation, Vec<TreeStep>)> {
    let mut steps = Vec::new();
    let x = super::by_component(inst, |sub| solve_tree_component(sub, &mut steps))?;
    Ok((x, steps))
}

pub fn solve_multitree_d4_q2(inst: &Instance) -> Result<Allocation> {
    Ok(solve_multitree_d4_q2_traced(inst)?.0)
}
