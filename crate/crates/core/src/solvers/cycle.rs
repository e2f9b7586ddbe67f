//! Complete EFX allocations on multi-cycles.
//!
//! Even cycles are bipartite and go through the pipeline. Odd cycles of
//! length at least five remove one or two agents' worth of edges, solve the
//! remaining even path with chosen agents in T, and hand the removed edges
//! back as cut bundles.

use serde::Serialize;

use crate::cut::{cut, CutConfig};
use crate::error::{Error, Result};
use crate::model::{Allocation, AgentId, Bundle, Instance};
use crate::pipeline::complete_efx_with;
use crate::structure::{classify_component, Bipartition, Family};

/// Which branch of the odd-cycle construction produced an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleCase {
    Even,
    Split { cutter: AgentId, other: AgentId },
    Case211,
    Case212,
    Case221,
    Case222,
    Case231,
    Case232,
}

/// Path solution on `inst` restricted to `keep`, with `t` forced into T.
fn solve_path(inst: &Instance, keep: impl Fn(usize) -> bool, t: &[AgentId]) -> Result<Allocation> {
    let (path, edge_map) = inst.restrict_edges(keep);
    let bip = Bipartition::with_t(&path, t)
        .ok_or_else(|| Error::Precondition("path endpoints cannot share the T side".into()))?;
    let (local, _) = complete_efx_with(&path, &bip)?;
    let mut x = Allocation::empty_for(inst);
    let agents: Vec<AgentId> = (0..inst.n()).collect();
    x.merge_from(&local, &agents, &edge_map);
    Ok(x)
}

/// Orders the cut so that both `a` and `b` weakly prefer the first bundle.
fn aligned(inst: &Instance, cfg: CutConfig, a: AgentId, b: AgentId) -> Result<(Bundle, Bundle)> {
    let va = |x: &Bundle| inst.bundle_value(a, x);
    let vb = |x: &Bundle| inst.bundle_value(b, x);
    let (first, second) = if va(&cfg.c2) > va(&cfg.c1) || vb(&cfg.c2) > vb(&cfg.c1) {
        (cfg.c2, cfg.c1)
    } else {
        (cfg.c1, cfg.c2)
    };
    if va(&first) < va(&second) || vb(&first) < vb(&second) {
        return Err(Error::Precondition(format!("agents {a} and {b} disagree on a configuration")));
    }
    Ok((first, second))
}

/// Labeling of a configuration where the cutter weakly prefers one bundle,
/// the other agent weakly prefers the other, and one of them strictly.
fn split_labeling(inst: &Instance, cfg: &CutConfig) -> Option<usize> {
    let (i, j) = (cfg.cutter, cfg.other);
    [0, 1].into_iter().find(|&a| {
        let (ca, cb) = (cfg.bundle(a), cfg.bundle(1 - a));
        let (vi_a, vi_b) = (inst.bundle_value(i, ca), inst.bundle_value(i, cb));
        let (vj_a, vj_b) = (inst.bundle_value(j, ca), inst.bundle_value(j, cb));
        vi_a >= vi_b && vj_b >= vj_a && (vi_a > vi_b || vj_b > vj_a)
    })
}

fn cycle_order(inst: &Instance) -> Vec<AgentId> {
    let mut order = vec![0];
    let mut prev = usize::MAX;
    let mut at = 0;
    loop {
        let next = inst.neighbors(at).iter().copied().find(|&b| b != prev).expect("cycle vertex has degree two");
        if next == 0 {
            break;
        }
        order.push(next);
        prev = at;
        at = next;
    }
    order
}

fn solve_odd(inst: &Instance) -> Result<(Allocation, CycleCase)> {
    for (a, b) in inst.skeleton_edges() {
        for cutter in [a, b] {
            let other = a ^ b ^ cutter;
            let cfg = cut(inst, cutter, other);
            if let Some(k) = split_labeling(inst, &cfg) {
                let removed = inst.edge_set(a, b);
                let mut x = solve_path(inst, |e| !removed.contains(&e), &[a, b])?;
                x.give_all(cutter, cfg.bundle(k));
                x.give_all(other, cfg.bundle(1 - k));
                return Ok((x, CycleCase::Split { cutter, other }));
            }
        }
    }

    // Every pair agrees on both configurations. Walk j', j, i, i' from the
    // lowest agent toward its smaller neighbor.
    let order = cycle_order(inst);
    let n = order.len();
    let (jp, j, i, ip) = (order[0], order[1], order[2], order[3]);
    debug_assert!(order[1] < order[n - 1]);
    let mut x = solve_path(
        inst,
        |e| {
            let edge = inst.edge(e);
            !edge.is_incident(i) && !edge.is_incident(j)
        },
        &[jp, ip],
    )?;
    let (c1, c2) = aligned(inst, cut(inst, jp, j), jp, j)?;
    let (d1, d2) = aligned(inst, cut(inst, i, j), j, i)?;
    let (e1, e2) = aligned(inst, cut(inst, ip, i), i, ip)?;
    let union = |parts: &[&Bundle]| -> Bundle { parts.iter().flat_map(|p| p.iter().copied()).collect() };
    let vj = |b: &Bundle| inst.bundle_value(j, b);
    let vi = |b: &Bundle| inst.bundle_value(i, b);
    let c2d2 = union(&[&c2, &d2]);
    let (g_c2d2, g_c1, g_d1) = (vj(&c2d2), vj(&c1), vj(&d1));
    let d1e2 = union(&[&d1, &e2]);
    let (case, bundles) = if g_c2d2 >= g_c1 && g_c2d2 >= g_d1 {
        if vi(&d1e2) >= vi(&e1) {
            (CycleCase::Case211, [c1, c2d2, d1e2, e1])
        } else {
            (CycleCase::Case212, [c1, c2d2, e1, d1e2])
        }
    } else if g_c1 >= g_c2d2 && g_c1 >= g_d1 {
        if vi(&d1e2) >= vi(&e1) {
            (CycleCase::Case221, [c2d2, c1, d1e2, e1])
        } else {
            (CycleCase::Case222, [c2d2, c1, e1, d1e2])
        }
    } else {
        let d2e2 = union(&[&d2, &e2]);
        if vi(&d2e2) >= vi(&e1) {
            (CycleCase::Case231, [c1, d1, d2e2, union(&[&c2, &e1])])
        } else {
            (CycleCase::Case232, [c1, d1, e1, union(&[&c2, &d2, &e2])])
        }
    };
    for (agent, bundle) in [jp, j, i, ip].into_iter().zip(bundles.iter()) {
        x.give_all(agent, bundle);
    }
    Ok((x, case))
}

fn solve_cycle_component(inst: &Instance, cases: &mut Vec<CycleCase>) -> Result<Allocation> {
    let all: Vec<AgentId> = (0..inst.n()).collect();
    let bip = Bipartition::canonical(inst);
    if classify_component(inst, &all, bip.is_some()) != Family::MultiCycle {
        return Err(Error::Structure("skeleton is not a cycle".into()));
    }
    if let Some(bip) = bip {
        cases.push(CycleCase::Even);
        return Ok(complete_efx_with(inst, &bip)?.0);
    }
    if inst.n() == 3 {
        return Err(Error::TriangleUnsupported);
    }
    let (x, case) = solve_odd(inst)?;
    cases.push(case);
    Ok(x)
}

/// Complete EFX allocation on a multi-cycle, with the branch taken per component.
pub fn solve_multicycle_traced(inst: &Instance) -> Result<(Allocation, Vec<CycleCase>)> {
    let mut cases = Vec::new();
    let x = super::by_component(inst, |sub| solve_cycle_component(sub, &mut cases))?;
    Ok((x, cases))
}

pub fn solve_multicycle(inst: &Instance) -> Result<Allocation> {
    Ok(solve_multicycle_traced(inst)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::is_efx;
    use crate::model::EdgeItem;
    use crate::rational::int;

    fn ring(n: usize, values: &[i64]) -> Instance {
        let edges = (0..n)
            .flat_map(|a| values.iter().map(move |&v| EdgeItem::symmetric(a, (a + 1) % n, int(v))))
            .collect();
        Instance::new(n, edges).unwrap()
    }

    #[test]
    fn triangle_is_rejected() {
        assert!(matches!(solve_multicycle(&ring(3, &[1])), Err(Error::TriangleUnsupported)));
    }

    #[test]
    fn aligned_preferences_use_case_two() {
        let inst = ring(5, &[5, 3]);
        let (x, cases) = solve_multicycle_traced(&inst).unwrap();
        assert!(matches!(cases[0], CycleCase::Case211 | CycleCase::Case212 | CycleCase::Case221 | CycleCase::Case222 | CycleCase::Case231 | CycleCase::Case232));
        assert!(x.is_complete() && is_efx(&inst, &x));
    }

    #[test]
    fn opposed_preferences_use_case_one() {
        let mut edges: Vec<EdgeItem> = (0..5).map(|a| EdgeItem::symmetric(a, (a + 1) % 5, int(2))).collect();
        edges.push(EdgeItem::new(0, 1, int(1), int(3)));
        let inst = Instance::new(5, edges).unwrap();
        let (x, cases) = solve_multicycle_traced(&inst).unwrap();
        assert_eq!(cases, vec![CycleCase::Split { cutter: 0, other: 1 }]);
        assert!(x.is_complete() && is_efx(&inst, &x));
    }

    #[test]
    fn even_cycle_goes_through_the_pipeline() {
        let inst = ring(4, &[2, 1]);
        let (x, cases) = solve_multicycle_traced(&inst).unwrap();
        assert_eq!(cases, vec![CycleCase::Even]);
        assert!(x.is_complete() && is_efx(&inst, &x));
    }
}
