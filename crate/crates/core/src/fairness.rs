//! Envy, strong envy and EFX checks over exact values.

use std::collections::BTreeSet;

use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, AgentId, Bundle, EdgeId, Instance};
use crate::rational::{self, Rational};

/// A violated inequality `lhs < rhs` between an envier and an envied agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub envier: AgentId,
    pub envied: AgentId,
    pub removed_edge: Option<EdgeId>,
    #[serde(serialize_with = "ser_rational")]
    pub lhs: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub rhs: Rational,
}

fn ser_rational<S: serde::Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    rational::as_string::serialize(v, s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub witnesses: Vec<Witness>,
}

impl Verdict {
    fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        Self {
            pass: witnesses.is_empty(),
            witnesses,
        }
    }
}

pub fn bundle_value(inst: &Instance, agent: AgentId, bundle: &Bundle) -> Result<Rational> {
    if let Some(&bad) = bundle.iter().find(|&&e| e >= inst.m()) {
        return Err(Error::EdgeOutOfRange(bad));
    }
    Ok(inst.bundle_value(agent, bundle))
}

pub fn envies(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId) -> bool {
    i != j && inst.bundle_value(i, x.bundle(j)) > inst.bundle_value(i, x.bundle(i))
}

/// Item of `bundle` least valued by `agent`, lowest edge id on ties.
fn least_valued(inst: &Instance, agent: AgentId, bundle: &Bundle) -> Option<(EdgeId, Rational)> {
    let mut best: Option<(EdgeId, Rational)> = None;
    for &e in bundle {
        let v = inst.value(agent, e);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((e, v));
        }
    }
    best
}

fn alpha_witness(
    inst: &Instance,
    x: &Allocation,
    i: AgentId,
    j: AgentId,
    alpha: &Rational,
) -> Option<Witness> {
    if i == j {
        return None;
    }
    let (g, g_value) = least_valued(inst, i, x.bundle(j))?;
    let own = inst.bundle_value(i, x.bundle(i));
    let rhs = alpha * (inst.bundle_value(i, x.bundle(j)) - g_value);
    (own < rhs).then_some(Witness {
        envier: i,
        envied: j,
        removed_edge: Some(g),
        lhs: own,
        rhs,
    })
}

/// Strong envy of `i` toward `j`, witnessed by the removal that leaves
/// `X_j` most valuable to `i`.
pub fn strongly_envies(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId) -> Option<Witness> {
    alpha_witness(inst, x, i, j, &Rational::one())
}

fn check_pairs(
    inst: &Instance,
    x: &Allocation,
    alpha: &Rational,
    pairs: impl Iterator<Item = (AgentId, AgentId)>,
) -> Verdict {
    Verdict::from_witnesses(
        pairs
            .filter_map(|(i, j)| alpha_witness(inst, x, i, j, alpha))
            .collect(),
    )
}

fn all_pairs(n: usize) -> impl Iterator<Item = (AgentId, AgentId)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

fn adjacent_pairs(inst: &Instance) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
    (0..inst.n()).flat_map(move |i| inst.neighbors(i).iter().map(move |&j| (i, j)))
}

/// α-EFX check. Orientations only need neighboring pairs, since a
/// non-neighbor values an oriented bundle at zero.
pub fn check_efx(inst: &Instance, x: &Allocation, alpha: &Rational) -> Verdict {
    assert!(
        *alpha > Rational::zero() && *alpha <= Rational::one(),
        "alpha must lie in (0, 1]"
    );
    if x.is_orientation(inst) {
        check_pairs(inst, x, alpha, adjacent_pairs(inst))
    } else {
        check_pairs(inst, x, alpha, all_pairs(inst.n()))
    }
}

/// The same check without the orientation shortcut.
pub fn check_efx_all_pairs(inst: &Instance, x: &Allocation, alpha: &Rational) -> Verdict {
    check_pairs(inst, x, alpha, all_pairs(inst.n()))
}

pub fn is_efx(inst: &Instance, x: &Allocation) -> bool {
    check_efx(inst, x, &Rational::one()).pass
}

/// Whether `agent` alone satisfies α-EFX toward everyone.
pub fn agent_is_alpha_efx(inst: &Instance, x: &Allocation, agent: AgentId, alpha: &Rational) -> bool {
    (0..inst.n()).all(|j| alpha_witness(inst, x, agent, j, alpha).is_none())
}

/// Largest α ≤ 1 for which `agent` is α-EFX.
pub fn achieved_alpha(inst: &Instance, x: &Allocation, agent: AgentId) -> Rational {
    let own = inst.bundle_value(agent, x.bundle(agent));
    let mut best = Rational::one();
    for j in (0..inst.n()).filter(|&j| j != agent) {
        if let Some((_, g)) = least_valued(inst, agent, x.bundle(j)) {
            let other = inst.bundle_value(agent, x.bundle(j)) - g;
            if other > Rational::zero() {
                let ratio = &own / &other;
                if ratio < best {
                    best = ratio;
                }
            }
        }
    }
    best
}

/// Bundle `k` of `partition` against every bundle minus its least item,
/// all under `agent`'s valuation.
pub fn is_efx_feasible(inst: &Instance, agent: AgentId, partition: &[Bundle], k: usize) -> bool {
    let own = inst.bundle_value(agent, &partition[k]);
    partition.iter().all(|bundle| match least_valued(inst, agent, bundle) {
        None => true,
        Some((_, g)) => own >= inst.bundle_value(agent, bundle) - g,
    })
}

pub fn enviers_of(inst: &Instance, x: &Allocation, i: AgentId) -> Vec<AgentId> {
    let mut candidates: BTreeSet<AgentId> = BTreeSet::new();
    for &e in x.bundle(i) {
        let edge = inst.edge(e);
        candidates.insert(edge.u);
        candidates.insert(edge.v);
    }
    candidates.into_iter().filter(|&j| envies(inst, x, j, i)).collect()
}

pub fn is_envied(inst: &Instance, x: &Allocation, i: AgentId) -> bool {
    !enviers_of(inst, x, i).is_empty()
}

pub fn envied_set(inst: &Instance, x: &Allocation) -> BTreeSet<AgentId> {
    (0..inst.n()).filter(|&i| is_envied(inst, x, i)).collect()
}

/// On a partial EFX orientation, every envied agent has exactly one
/// envier `j` and holds only items shared with `j`.
pub fn check_envied_singleton(inst: &Instance, x: &Allocation) -> Result<Verdict> {
    if !x.is_orientation(inst) || !is_efx(inst, x) {
        return Err(Error::Precondition(
            "allocation is not a partial EFX orientation".into(),
        ));
    }
    let mut witnesses = Vec::new();
    for i in 0..inst.n() {
        let enviers = enviers_of(inst, x, i);
        for &j in &enviers {
            let stray = x.bundle(i).iter().copied().find(|&e| !inst.edge(e).is_incident(j));
            if enviers.len() > 1 || stray.is_some() {
                witnesses.push(Witness {
                    envier: j,
                    envied: i,
                    removed_edge: stray,
                    lhs: inst.bundle_value(j, x.bundle(j)),
                    rhs: inst.bundle_value(j, x.bundle(i)),
                });
            }
        }
    }
    Ok(Verdict::from_witnesses(witnesses))
}
