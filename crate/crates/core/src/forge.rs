//! Instance families: the fixed counter-examples, the Partition gadget, the
//! running example and seeded random instances.

use num::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentId, EdgeItem, Instance};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Bipartite,
    /// Tree of diameter at most four.
    Tree,
    Cycle,
    Star,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bipartite" => Ok(Shape::Bipartite),
            "tree" => Ok(Shape::Tree),
            "cycle" => Ok(Shape::Cycle),
            "star" => Ok(Shape::Star),
            other => Err(Error::InvalidSpec(format!("unknown shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub q_max: usize,
    pub shape: Shape,
    /// Values are p/q with 1 <= p <= max_numer and 1 <= q <= max_denom.
    pub max_numer: u64,
    pub max_denom: u64,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum FamilyKind {
    C4Counter,
    #[serde(rename = "p4-q3")]
    P4Q3,
    #[serde(rename = "p4-qn")]
    P4Qn { q: usize },
    P3Block,
    P6Counter,
    NpGadget { set: Vec<u64> },
    RunningExample,
    Random(RandomSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: FamilyKind,
    pub eps: Rational,
    pub delta: Rational,
    pub seed: u64,
}

pub fn default_eps() -> Rational {
    ratio(1, 100)
}

pub fn default_delta() -> Rational {
    ratio(1, 1_000_000)
}

impl FamilySpec {
    pub fn new(family: FamilyKind) -> Self {
        Self {
            family,
            eps: default_eps(),
            delta: default_delta(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counter = !matches!(self.family, FamilyKind::RunningExample | FamilyKind::Random(_));
        if counter && !(Rational::zero() < self.delta && self.delta < self.eps && self.eps < Rational::one()) {
            return Err(Error::InvalidSpec("need 0 < delta < eps < 1".into()));
        }
        match &self.family {
            FamilyKind::P4Qn { q } if *q < 4 => Err(Error::InvalidSpec(format!("p4-qn needs q >= 4, got {q}"))),
            FamilyKind::NpGadget { set } if set.is_empty() => Err(Error::InvalidSpec("empty partition set".into())),
            _ => Ok(()),
        }
    }
}

struct Builder {
    edges: Vec<EdgeItem>,
}

impl Builder {
    fn new() -> Self {
        Self { edges: Vec::new() }
    }

    fn add(&mut self, u: AgentId, v: AgentId, values: impl IntoIterator<Item = Rational>) -> &mut Self {
        for w in values {
            self.edges.push(EdgeItem::symmetric(u, v, w));
        }
        self
    }

    fn build(self, n: usize) -> Result<Instance> {
        Instance::new(n, self.edges)
    }
}

/// The three-agent block {eps, 10 + eps/2} then {10, eps}, laid out along
/// `path` (outer, middle, inner).
fn block(b: &mut Builder, path: [AgentId; 3], eps: &Rational) {
    let half = eps / int(2);
    b.add(path[0], path[1], [eps.clone(), int(10) + half]);
    b.add(path[1], path[2], [int(10), eps.clone()]);
}

pub fn generate(spec: &FamilySpec) -> Result<Instance> {
    spec.validate()?;
    let (eps, delta) = (&spec.eps, &spec.delta);
    let mut b = Builder::new();
    match &spec.family {
        FamilyKind::C4Counter => {
            b.add(0, 1, [int(10) + eps / int(2), eps.clone()]);
            b.add(1, 2, [int(10), eps.clone()]);
            b.add(0, 3, [int(10), eps.clone()]);
            b.add(2, 3, [delta.clone(), delta.clone()]);
            b.build(4)
        }
        FamilyKind::P4Q3 => {
            let heavy = int(1) + eps;
            b.add(0, 1, [int(1), heavy.clone(), heavy.clone()]);
            b.add(1, 2, [int(2) + eps * ratio(3, 2)]);
            b.add(3, 2, [int(1), heavy.clone(), heavy]);
            b.build(4)
        }
        FamilyKind::P4Qn { q } => {
            b.add(0, 1, vec![int(1); *q]);
            b.add(1, 2, [int(q.div_ceil(2) as i64) + eps]);
            b.add(3, 2, vec![int(1); *q]);
            b.build(4)
        }
        FamilyKind::P3Block => {
            block(&mut b, [0, 1, 2], eps);
            b.build(3)
        }
        FamilyKind::P6Counter => {
            block(&mut b, [0, 1, 2], eps);
            b.add(2, 3, [delta.clone()]);
            block(&mut b, [5, 4, 3], eps);
            b.build(6)
        }
        FamilyKind::NpGadget { set } => {
            // Zero entries are not valid item values; they become an amount
            // far below delta.
            let eta = delta / int(2 * (set.len() as i64 + 1));
            block(&mut b, [0, 1, 2], eps);
            b.add(2, 3, [delta.clone()]);
            b.add(3, 4, set.iter().map(|&p| if p == 0 { eta.clone() } else { Rational::from_integer(p.into()) }));
            b.add(4, 5, [delta.clone()]);
            block(&mut b, [7, 6, 5], eps);
            b.build(8)
        }
        FamilyKind::RunningExample => {
            for (u, v, w) in RUNNING_EXAMPLE {
                b.add(u, v, [int(w)]);
            }
            b.build(7)
        }
        FamilyKind::Random(r) => random_instance(r, spec.seed),
    }
}

const RUNNING_EXAMPLE: [(AgentId, AgentId, i64); 18] = [
    (0, 4, 10),
    (1, 4, 10),
    (1, 4, 9),
    (2, 4, 8),
    (0, 5, 6),
    (0, 5, 5),
    (1, 5, 6),
    (1, 5, 6),
    (2, 5, 7),
    (0, 6, 6),
    (0, 6, 5),
    (1, 6, 6),
    (1, 6, 6),
    (2, 6, 7),
    (3, 6, 3),
    (3, 6, 4),
    (3, 4, 6),
    (3, 4, 3),
];

/// Gadget on a multi-tree with eight agents; it has an EFX orientation iff
/// `set` splits into two halves of equal sum.
pub fn reduce_partition(set: &[u64], eps: &Rational, delta: &Rational) -> Result<Instance> {
    generate(&FamilySpec {
        family: FamilyKind::NpGadget { set: set.to_vec() },
        eps: eps.clone(),
        delta: delta.clone(),
        seed: 0,
    })
}

fn infeasible(spec: &RandomSpec, why: &str) -> Error {
    Error::InvalidSpec(format!("n={} m={} q_max={} {:?}: {why}", spec.n, spec.m, spec.q_max, spec.shape))
}

/// Candidate pairs for the requested shape. Every pair of a tree, star or
/// cycle carries at least one edge; bipartite pairs are drawn freely.
fn skeleton(spec: &RandomSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(AgentId, AgentId)>> {
    let n = spec.n;
    let mut perm: Vec<AgentId> = (0..n).collect();
    perm.shuffle(rng);
    let pairs: Vec<(AgentId, AgentId)> = match spec.shape {
        Shape::Bipartite => {
            if n < 2 {
                return Err(infeasible(spec, "needs two agents"));
            }
            let split = rng.gen_range(1..n);
            let (s, t) = perm.split_at(split);
            s.iter().flat_map(|&a| t.iter().map(move |&b| (a, b))).collect()
        }
        Shape::Star => (1..n).map(|k| (perm[0], perm[k])).collect(),
        Shape::Tree => {
            // Depth at most two from perm[0].
            let mut depth1 = Vec::new();
            let mut out = Vec::new();
            for k in 1..n {
                let attach_to_root = depth1.is_empty() || rng.gen_bool(0.5);
                if attach_to_root {
                    out.push((perm[0], perm[k]));
                    depth1.push(perm[k]);
                } else {
                    out.push((*depth1.choose(rng).expect("nonempty"), perm[k]));
                }
            }
            out
        }
        Shape::Cycle => {
            if n < 3 {
                return Err(infeasible(spec, "cycle needs three agents"));
            }
            (0..n).map(|k| (perm[k], perm[(k + 1) % n])).collect()
        }
    };
    Ok(pairs)
}

pub fn random_instance(spec: &RandomSpec, seed: u64) -> Result<Instance> {
    if spec.q_max == 0 && spec.m > 0 {
        return Err(infeasible(spec, "q_max is zero"));
    }
    if spec.max_numer == 0 || spec.max_denom == 0 {
        return Err(infeasible(spec, "empty value range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = skeleton(spec, &mut rng)?;
    let cap = pairs.len() * spec.q_max;
    let forced = if spec.shape == Shape::Bipartite { 0 } else { pairs.len() };
    if spec.m < forced || spec.m > cap {
        return Err(infeasible(spec, &format!("m must lie in {forced}..={cap}")));
    }
    let mut load = vec![0usize; pairs.len()];
    let mut chosen: Vec<usize> = (0..forced).collect();
    for &k in &chosen {
        load[k] += 1;
    }
    while chosen.len() < spec.m {
        let k = rng.gen_range(0..pairs.len());
        if load[k] < spec.q_max {
            load[k] += 1;
            chosen.push(k);
        }
    }
    chosen.shuffle(&mut rng);
    let value = |rng: &mut ChaCha8Rng| {
        ratio(rng.gen_range(1..=spec.max_numer) as i64, rng.gen_range(1..=spec.max_denom) as i64)
    };
    let edges = chosen
        .into_iter()
        .map(|k| {
            let (u, v) = pairs[k];
            let wu = value(&mut rng);
            let wv = if spec.symmetric { wu.clone() } else { value(&mut rng) };
            EdgeItem::new(u, v, wu, wv)
        })
        .collect();
    Instance::new(spec.n, edges)
}
