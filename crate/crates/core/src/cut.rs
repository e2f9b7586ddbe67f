//! Two-bundle configurations of E(i, j) cut by one endpoint.

use num::Zero;
use serde::Serialize;

use crate::model::{AgentId, Bundle, EdgeId, Instance};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutConfig {
    pub cutter: AgentId,
    pub other: AgentId,
    pub c1: Bundle,
    pub c2: Bundle,
}

impl CutConfig {
    pub fn bundles(&self) -> [&Bundle; 2] {
        [&self.c1, &self.c2]
    }

    /// Index (0 for c1, 1 for c2) of the bundle `agent` values most; ties to c1.
    pub fn preferred_by(&self, inst: &Instance, agent: AgentId) -> usize {
        let v1 = inst.bundle_value(agent, &self.c1);
        let v2 = inst.bundle_value(agent, &self.c2);
        usize::from(v2 > v1)
    }

    pub fn bundle(&self, index: usize) -> &Bundle {
        if index == 0 {
            &self.c1
        } else {
            &self.c2
        }
    }

    pub fn contains(&self, edge: EdgeId) -> bool {
        self.c1.contains(&edge) || self.c2.contains(&edge)
    }
}

/// Greedy split of `edges` under `agent`'s values: heaviest item first,
/// each item into the currently lighter bundle.
pub fn split_for(inst: &Instance, agent: AgentId, edges: &[EdgeId]) -> (Bundle, Bundle) {
    let mut order: Vec<(Rational, EdgeId)> = edges.iter().map(|&e| (inst.value(agent, e), e)).collect();
    order.sort_by(|(va, ea), (vb, eb)| vb.cmp(va).then(ea.cmp(eb)));
    let (mut c1, mut c2) = (Bundle::new(), Bundle::new());
    let (mut w1, mut w2) = (Rational::zero(), Rational::zero());
    for (value, e) in order {
        if w1 <= w2 {
            w1 += value;
            c1.insert(e);
        } else {
            w2 += value;
            c2.insert(e);
        }
    }
    (c1, c2)
}

pub fn cut(inst: &Instance, cutter: AgentId, other: AgentId) -> CutConfig {
    let (c1, c2) = split_for(inst, cutter, inst.edge_set(cutter, other));
    CutConfig { cutter, other, c1, c2 }
}
