//! Skeleton queries: multiplicity, distances, center, bipartition, family.

use std::collections::VecDeque;

use serde::Serialize;

use crate::model::{AgentId, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    #[serde(rename = "multi-star")]
    MultiStar,
    #[serde(rename = "multi-cycle")]
    MultiCycle,
    #[serde(rename = "multi-tree")]
    MultiTree,
    #[serde(rename = "bipartite")]
    Bipartite,
    #[serde(rename = "general")]
    General,
}

/// Two-coloring of the skeleton into S and T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    in_t: Vec<bool>,
}

impl Bipartition {
    /// Two-coloring where the lowest agent of every component lands in S.
    pub fn canonical(inst: &Instance) -> Option<Self> {
        let mut color: Vec<Option<bool>> = vec![None; inst.n()];
        for start in 0..inst.n() {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(a) = queue.pop_front() {
                let c = color[a].unwrap();
                for &b in inst.neighbors(a) {
                    match color[b] {
                        None => {
                            color[b] = Some(!c);
                            queue.push_back(b);
                        }
                        Some(cb) if cb == c => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(Self {
            in_t: color.into_iter().map(|c| c.unwrap_or(false)).collect(),
        })
    }

    /// Per component, the smaller side plays S; on equal sizes the side
    /// holding the component's lowest agent does.
    pub fn smaller_side_as_s(inst: &Instance) -> Option<Self> {
        let mut bip = Self::canonical(inst)?;
        for comp in components(inst) {
            let t_count = comp.iter().filter(|&&a| bip.in_t[a]).count();
            if comp.len() - t_count > t_count {
                for &a in &comp {
                    bip.in_t[a] = !bip.in_t[a];
                }
            }
        }
        Some(bip)
    }

    /// Two-coloring that puts every agent of `t` in T, flipping whole
    /// components of the canonical coloring as needed. `None` when the
    /// skeleton is not bipartite or the request conflicts with a component.
    pub fn with_t(inst: &Instance, t: &[AgentId]) -> Option<Self> {
        let mut bip = Self::canonical(inst)?;
        for comp in components(inst) {
            let wanted: Vec<AgentId> = t.iter().copied().filter(|a| comp.contains(a)).collect();
            if wanted.first().is_some_and(|&a| !bip.in_t[a]) {
                for &a in &comp {
                    bip.in_t[a] = !bip.in_t[a];
                }
            }
            if wanted.iter().any(|&a| !bip.in_t[a]) {
                return None;
            }
        }
        Some(bip)
    }

    pub fn from_t_side(n: usize, t: &[AgentId]) -> Self {
        let mut in_t = vec![false; n];
        for &a in t {
            in_t[a] = true;
        }
        Self { in_t }
    }

    pub fn is_t(&self, agent: AgentId) -> bool {
        self.in_t[agent]
    }

    pub fn is_s(&self, agent: AgentId) -> bool {
        !self.in_t[agent]
    }

    pub fn s(&self) -> Vec<AgentId> {
        (0..self.in_t.len()).filter(|&a| !self.in_t[a]).collect()
    }

    pub fn t(&self) -> Vec<AgentId> {
        (0..self.in_t.len()).filter(|&a| self.in_t[a]).collect()
    }

    pub fn len(&self) -> usize {
        self.in_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_t.is_empty()
    }

    /// No skeleton edge inside S or inside T.
    pub fn is_valid_for(&self, inst: &Instance) -> bool {
        self.in_t.len() == inst.n() && inst.skeleton_edges().all(|(a, b)| self.in_t[a] != self.in_t[b])
    }

    /// The T-side endpoint of an adjacent pair (the cutter of its configuration).
    pub fn cutter(&self, i: AgentId, j: AgentId) -> AgentId {
        if self.in_t[i] {
            i
        } else {
            j
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// Largest shortest-path distance within any component of the skeleton.
    pub diameter: usize,
    /// Number of edges on the longest simple path of the skeleton, when the
    /// instance is small enough to enumerate.
    pub longest_path: Option<usize>,
    pub center: Option<AgentId>,
    pub connected: bool,
    pub components: usize,
    pub bipartition: Option<(Vec<AgentId>, Vec<AgentId>)>,
    pub family: Family,
    pub component_families: Vec<Family>,
}

/// Connected components of the skeleton, each sorted, ordered by lowest agent.
pub fn components(inst: &Instance) -> Vec<Vec<AgentId>> {
    let mut seen = vec![false; inst.n()];
    let mut out = Vec::new();
    for start in 0..inst.n() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for &b in inst.neighbors(a) {
                if !seen[b] {
                    seen[b] = true;
                    comp.push(b);
                    queue.push_back(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// BFS distances from `source`; `None` for unreachable agents.
pub fn distances(inst: &Instance, source: AgentId) -> Vec<Option<usize>> {
    let mut dist = vec![None; inst.n()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(a) = queue.pop_front() {
        let d = dist[a].unwrap();
        for &b in inst.neighbors(a) {
            if dist[b].is_none() {
                dist[b] = Some(d + 1);
                queue.push_back(b);
            }
        }
    }
    dist
}

pub fn eccentricity(inst: &Instance, agent: AgentId) -> usize {
    distances(inst, agent).into_iter().flatten().max().unwrap_or(0)
}

/// Agent of `comp` minimizing eccentricity, ties to the lowest id.
pub fn center_of(inst: &Instance, comp: &[AgentId]) -> AgentId {
    *comp
        .iter()
        .min_by_key(|&&a| (eccentricity(inst, a), a))
        .expect("component is non-empty")
}

pub fn multiplicity(inst: &Instance) -> usize {
    inst.skeleton_edges()
        .map(|(a, b)| inst.edge_set(a, b).len())
        .max()
        .unwrap_or(0)
}

fn skeleton_edge_count(inst: &Instance, comp: &[AgentId]) -> usize {
    comp.iter().map(|&a| inst.neighbors(a).len()).sum::<usize>() / 2
}

pub fn classify_component(inst: &Instance, comp: &[AgentId], bipartite: bool) -> Family {
    let k = comp.len();
    let e = skeleton_edge_count(inst, comp);
    if k <= 2 {
        return Family::MultiStar;
    }
    if e == k - 1 {
        if comp.iter().any(|&a| inst.neighbors(a).len() == k - 1) {
            Family::MultiStar
        } else {
            Family::MultiTree
        }
    } else if e == k && comp.iter().all(|&a| inst.neighbors(a).len() == 2) {
        Family::MultiCycle
    } else if bipartite {
        Family::Bipartite
    } else {
        Family::General
    }
}

fn component_is_bipartite(inst: &Instance, comp: &[AgentId]) -> bool {
    let (sub, _, _) = inst.induced(comp);
    Bipartition::canonical(&sub).is_some()
}

const LONGEST_PATH_LIMIT: usize = 16;

fn longest_simple_path(inst: &Instance) -> Option<usize> {
    if inst.n() > LONGEST_PATH_LIMIT {
        return None;
    }
    fn walk(inst: &Instance, at: AgentId, visited: &mut Vec<bool>, len: usize, best: &mut usize) {
        *best = (*best).max(len);
        for &b in inst.neighbors(at) {
            if !visited[b] {
                visited[b] = true;
                walk(inst, b, visited, len + 1, best);
                visited[b] = false;
            }
        }
    }
    let mut best = 0;
    let mut visited = vec![false; inst.n()];
    for start in 0..inst.n() {
        visited[start] = true;
        walk(inst, start, &mut visited, 0, &mut best);
        visited[start] = false;
    }
    Some(best)
}

pub fn analyze_structure(inst: &Instance) -> StructureReport {
    let comps = components(inst);
    let bip = Bipartition::canonical(inst);
    let component_families: Vec<Family> = comps
        .iter()
        .map(|c| classify_component(inst, c, component_is_bipartite(inst, c)))
        .collect();
    let connected = comps.len() <= 1;
    let family = if connected {
        component_families.first().copied().unwrap_or(Family::MultiStar)
    } else if bip.is_some() {
        Family::Bipartite
    } else {
        Family::General
    };
    let diameter = (0..inst.n()).map(|a| eccentricity(inst, a)).max().unwrap_or(0);
    let largest = comps
        .iter()
        .enumerate()
        .max_by_key(|(idx, c)| (c.len(), std::cmp::Reverse(*idx)))
        .map(|(_, c)| c);
    StructureReport {
        n: inst.n(),
        m: inst.m(),
        q: multiplicity(inst),
        diameter,
        longest_path: longest_simple_path(inst),
        center: largest.map(|c| center_of(inst, c)),
        connected,
        components: comps.len(),
        bipartition: bip.map(|b| (b.s(), b.t())),
        family,
        component_families,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EdgeItem;
    use crate::rational::int;

    fn path(n: usize) -> Instance {
        let edges = (0..n - 1).map(|a| EdgeItem::symmetric(a, a + 1, int(1))).collect();
        Instance::new(n, edges).unwrap()
    }

    #[test]
    fn single_edge_is_a_star() {
        let r = analyze_structure(&path(2));
        assert_eq!((r.q, r.diameter, r.family), (1, 1, Family::MultiStar));
        assert_eq!(r.center, Some(0));
    }

    #[test]
    fn path_classification_and_center() {
        let r = analyze_structure(&path(5));
        assert_eq!(r.family, Family::MultiTree);
        assert_eq!(r.diameter, 4);
        assert_eq!(r.center, Some(2));
        assert_eq!(r.bipartition, Some((vec![0, 2, 4], vec![1, 3])));
    }

    #[test]
    fn triangle_is_a_general_cycle() {
        let inst = Instance::new(
            3,
            vec![
                EdgeItem::symmetric(0, 1, int(1)),
                EdgeItem::symmetric(1, 2, int(1)),
                EdgeItem::symmetric(2, 0, int(1)),
            ],
        )
        .unwrap();
        let r = analyze_structure(&inst);
        assert_eq!(r.family, Family::MultiCycle);
        assert!(r.bipartition.is_none());
    }

    #[test]
    fn disconnected_is_flagged() {
        let inst = Instance::new(
            5,
            vec![EdgeItem::symmetric(0, 1, int(1)), EdgeItem::symmetric(2, 3, int(1)), EdgeItem::symmetric(3, 4, int(1))],
        )
        .unwrap();
        let r = analyze_structure(&inst);
        assert!(!r.connected);
        assert_eq!(r.components, 2);
        assert_eq!(r.family, Family::Bipartite);
        assert_eq!(r.center, Some(3));
        assert_eq!(r.diameter, 2);
    }

    #[test]
    fn smaller_side_becomes_s() {
        let inst = Instance::new(
            4,
            vec![EdgeItem::symmetric(0, 1, int(1)), EdgeItem::symmetric(0, 2, int(1)), EdgeItem::symmetric(0, 3, int(1))],
        )
        .unwrap();
        let canon = Bipartition::canonical(&inst).unwrap();
        assert_eq!(canon.s(), vec![0]);
        let path3 = path(3);
        let flipped = Bipartition::smaller_side_as_s(&path3).unwrap();
        assert_eq!(flipped.s(), vec![1]);
    }

    #[test]
    fn requested_t_side() {
        let p = path(5);
        let bip = Bipartition::with_t(&p, &[0, 4]).unwrap();
        assert_eq!(bip.t(), vec![0, 2, 4]);
        assert!(Bipartition::with_t(&p, &[0, 1]).is_none());
    }
}
