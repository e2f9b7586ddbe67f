//! Exhaustive search for EFX orientations and EFX complete allocations.
//!
//! Values are scaled to integers by the common denominator. Each edge in id
//! order is given to one of its candidate owners in ascending agent order,
//! so the first leaf reached is the lexicographically-first witness.
//!
//! Pruned mode keeps, for every pair (i, j), v_i(X_j) and the least v_i over
//! X_j. `v_i(X_j) - min` never decreases as X_j grows, and v_i(X_i) is final
//! once all of i's incident edges are placed, so a strong envy seen at that
//! point survives to every leaf below.

use num::bigint::BigInt;
use num::{BigUint, Integer, One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::is_efx;
use crate::model::{Allocation, AgentId, Instance};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Orientation,
    Allocation,
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub budget: u64,
    pub count: bool,
    pub prune: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            count: false,
            prune: true,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub exists: bool,
    pub witness: Option<Allocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    /// Size of the search space, as a decimal string.
    pub states: String,
}

pub fn decide_efx_orientation(inst: &Instance, budget: u64) -> Result<OracleResult> {
    decide(inst, Target::Orientation, &OracleOptions { budget, ..Default::default() })
}

pub fn decide_efx_allocation(inst: &Instance, budget: u64) -> Result<OracleResult> {
    decide(inst, Target::Allocation, &OracleOptions { budget, ..Default::default() })
}

pub fn count_efx_orientations(inst: &Instance, budget: u64) -> Result<u64> {
    let opts = OracleOptions { budget, count: true, ..Default::default() };
    Ok(decide(inst, Target::Orientation, &opts)?.count.unwrap_or(0))
}

/// Number of leaves the search would visit without pruning.
pub fn state_count(inst: &Instance, target: Target) -> BigUint {
    match target {
        Target::Orientation => BigUint::one() << inst.m(),
        Target::Allocation => BigUint::from(inst.n()).pow(inst.m() as u32),
    }
}

pub fn decide(inst: &Instance, target: Target, opts: &OracleOptions) -> Result<OracleResult> {
    let states = state_count(inst, target);
    if states > BigUint::from(opts.budget) {
        return Err(Error::BudgetExceeded {
            states: states.to_string(),
            budget: opts.budget,
        });
    }
    let run = || search(inst, target, opts);
    let (witness, count) = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Precondition(e.to_string()))?
            .install(run),
        None => run(),
    };
    let witness = witness.map(|owners| {
        let owners: Vec<Option<AgentId>> = owners.into_iter().map(Some).collect();
        Allocation::from_owners(inst.n(), &owners)
    });
    Ok(OracleResult {
        exists: witness.is_some(),
        witness,
        count: opts.count.then_some(count),
        states: states.to_string(),
    })
}

fn candidates(inst: &Instance, target: Target) -> Vec<Vec<AgentId>> {
    inst.edges()
        .iter()
        .map(|e| match target {
            Target::Orientation => vec![e.u.min(e.v), e.u.max(e.v)],
            Target::Allocation => (0..inst.n()).collect(),
        })
        .collect()
}

/// Prefix depth giving enough independent subtrees for the pool.
fn prefix_depth(choices: &[Vec<AgentId>]) -> usize {
    let want = 4 * rayon::current_num_threads().max(1);
    let mut width = 1usize;
    let mut depth = 0;
    while depth < choices.len() && width < want {
        width = width.saturating_mul(choices[depth].len());
        depth += 1;
    }
    depth
}

fn prefixes(choices: &[Vec<AgentId>], depth: usize) -> Vec<Vec<AgentId>> {
    let mut out = vec![Vec::new()];
    for opts in &choices[..depth] {
        out = out
            .into_iter()
            .flat_map(|p| {
                opts.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

fn search(inst: &Instance, target: Target, opts: &OracleOptions) -> (Option<Vec<AgentId>>, u64) {
    let choices = candidates(inst, target);
    let depth = prefix_depth(&choices);
    let roots = prefixes(&choices, depth);
    if !opts.prune {
        return run_roots(&roots, opts.count, |prefix, count| {
            let mut dfs = Plain { inst, choices: &choices, owners: prefix.to_vec(), count, found: None, hits: 0 };
            dfs.go();
            (dfs.found, dfs.hits)
        });
    }
    match Scaled::<i128>::try_new(inst) {
        Some(scaled) => run_roots(&roots, opts.count, |prefix, count| Pruned::run(&scaled, &choices, prefix, count)),
        None => {
            let scaled = Scaled::<BigInt>::new_big(inst);
            run_roots(&roots, opts.count, |prefix, count| Pruned::run(&scaled, &choices, prefix, count))
        }
    }
}

fn run_roots(
    roots: &[Vec<AgentId>],
    count: bool,
    solve: impl Fn(&[AgentId], bool) -> (Option<Vec<AgentId>>, u64) + Sync,
) -> (Option<Vec<AgentId>>, u64) {
    if count {
        let parts: Vec<(Option<Vec<AgentId>>, u64)> = roots.par_iter().map(|p| solve(p, true)).collect();
        let total = parts.iter().map(|(_, c)| c).sum();
        (parts.into_iter().find_map(|(w, _)| w), total)
    } else {
        let witness = roots.par_iter().find_map_first(|p| solve(p, false).0);
        let hits = u64::from(witness.is_some());
        (witness, hits)
    }
}

/// Unpruned enumeration, checking each leaf with the rational verifier.
struct Plain<'a> {
    inst: &'a Instance,
    choices: &'a [Vec<AgentId>],
    owners: Vec<AgentId>,
    count: bool,
    found: Option<Vec<AgentId>>,
    hits: u64,
}

impl Plain<'_> {
    fn go(&mut self) -> bool {
        let k = self.owners.len();
        if k == self.choices.len() {
            let owners: Vec<Option<AgentId>> = self.owners.iter().copied().map(Some).collect();
            if is_efx(self.inst, &Allocation::from_owners(self.inst.n(), &owners)) {
                self.hits += 1;
                if self.found.is_none() {
                    self.found = Some(self.owners.clone());
                }
                return !self.count;
            }
            return false;
        }
        for &a in &self.choices[k] {
            self.owners.push(a);
            let stop = self.go();
            self.owners.pop();
            if stop {
                return true;
            }
        }
        false
    }
}

/// Integer-scaled valuation table.
struct Scaled<T> {
    n: usize,
    /// (u, v, value to u, value to v) per edge.
    edges: Vec<(AgentId, AgentId, T, T)>,
    /// Agents whose incident edges are all placed once edge k is.
    final_after: Vec<Vec<AgentId>>,
    final_at_start: Vec<AgentId>,
}

fn common_denominator(inst: &Instance) -> BigInt {
    inst.edges()
        .iter()
        .flat_map(|e| [e.wu.denom().clone(), e.wv.denom().clone()])
        .fold(BigInt::one(), |acc, d| acc.lcm(&d))
}

fn finality(inst: &Instance) -> (Vec<Vec<AgentId>>, Vec<AgentId>) {
    let mut after = vec![Vec::new(); inst.m()];
    let mut start = Vec::new();
    for a in 0..inst.n() {
        match inst.incident(a).iter().max() {
            Some(&last) => after[last].push(a),
            None => start.push(a),
        }
    }
    (after, start)
}

impl Scaled<i128> {
    fn try_new(inst: &Instance) -> Option<Self> {
        let d = common_denominator(inst);
        let mut total: i128 = 0;
        let mut edges = Vec::with_capacity(inst.m());
        for e in inst.edges() {
            let wu = (e.wu.numer() * (&d / e.wu.denom())).to_i128()?;
            let wv = (e.wv.numer() * (&d / e.wv.denom())).to_i128()?;
            total = total.checked_add(wu)?.checked_add(wv)?;
            edges.push((e.u, e.v, wu, wv));
        }
        if total > i128::MAX / 4 {
            return None;
        }
        let (final_after, final_at_start) = finality(inst);
        Some(Self { n: inst.n(), edges, final_after, final_at_start })
    }
}

impl Scaled<BigInt> {
    fn new_big(inst: &Instance) -> Self {
        let d = common_denominator(inst);
        let edges = inst
            .edges()
            .iter()
            .map(|e| (e.u, e.v, e.wu.numer() * (&d / e.wu.denom()), e.wv.numer() * (&d / e.wv.denom())))
            .collect();
        let (final_after, final_at_start) = finality(inst);
        Self { n: inst.n(), edges, final_after, final_at_start }
    }
}

impl<T: Clone + Zero> Scaled<T> {
    fn value(&self, agent: AgentId, edge: usize) -> T {
        let (u, v, wu, wv) = &self.edges[edge];
        if agent == *u {
            wu.clone()
        } else if agent == *v {
            wv.clone()
        } else {
            T::zero()
        }
    }
}

struct Pruned<'a, T> {
    sc: &'a Scaled<T>,
    choices: &'a [Vec<AgentId>],
    owners: Vec<AgentId>,
    /// sum[i][j] = v_i(X_j); least[i][j] = min over X_j of v_i, None if empty.
    sum: Vec<Vec<T>>,
    least: Vec<Vec<Option<T>>>,
    is_final: Vec<bool>,
    count: bool,
    found: Option<Vec<AgentId>>,
    hits: u64,
}

impl<'a, T: Clone + Ord + Zero + std::ops::Sub<Output = T> + for<'x> std::ops::AddAssign<&'x T>> Pruned<'a, T> {
    fn run(sc: &'a Scaled<T>, choices: &'a [Vec<AgentId>], prefix: &[AgentId], count: bool) -> (Option<Vec<AgentId>>, u64) {
        let n = sc.n;
        let mut s = Pruned {
            sc,
            choices,
            owners: Vec::with_capacity(choices.len()),
            sum: vec![vec![T::zero(); n]; n],
            least: vec![vec![None; n]; n],
            is_final: vec![false; n],
            count,
            found: None,
            hits: 0,
        };
        for &a in &sc.final_at_start {
            s.is_final[a] = true;
        }
        for &b in prefix {
            if s.place(b).is_none() {
                return (None, 0);
            }
        }
        s.go();
        (s.found, s.hits)
    }

    fn strongly_envies(&self, i: AgentId, j: AgentId) -> bool {
        match &self.least[i][j] {
            Some(min) => self.sum[i][j].clone() - min.clone() > self.sum[i][i],
            None => false,
        }
    }

    /// Gives the next edge to `b`. Returns the undo record, or `None` (after
    /// undoing) if the partial state is already doomed.
    #[allow(clippy::type_complexity)]
    fn place(&mut self, b: AgentId) -> Option<(Vec<(T, Option<T>)>, Vec<AgentId>)> {
        let k = self.owners.len();
        let mut saved = Vec::with_capacity(self.sc.n);
        for i in 0..self.sc.n {
            saved.push((self.sum[i][b].clone(), self.least[i][b].clone()));
            let v = self.sc.value(i, k);
            self.sum[i][b] += &v;
            let cell = &mut self.least[i][b];
            if cell.as_ref().is_none_or(|m| v < *m) {
                *cell = Some(v);
            }
        }
        self.owners.push(b);
        let newly: Vec<AgentId> = self.sc.final_after[k].clone();
        for &a in &newly {
            self.is_final[a] = true;
        }
        let n = self.sc.n;
        let doomed = (0..n).any(|i| self.is_final[i] && i != b && self.strongly_envies(i, b))
            || newly.iter().any(|&i| (0..n).any(|j| j != i && self.strongly_envies(i, j)));
        let undo = (saved, newly);
        if doomed {
            self.unplace(undo);
            return None;
        }
        Some(undo)
    }

    fn unplace(&mut self, (saved, newly): (Vec<(T, Option<T>)>, Vec<AgentId>)) {
        let b = self.owners.pop().expect("an edge was placed");
        for a in newly {
            self.is_final[a] = false;
        }
        for (i, (s, l)) in saved.into_iter().enumerate() {
            self.sum[i][b] = s;
            self.least[i][b] = l;
        }
    }

    fn go(&mut self) -> bool {
        let k = self.owners.len();
        if k == self.choices.len() {
            self.hits += 1;
            if self.found.is_none() {
                self.found = Some(self.owners.clone());
            }
            return !self.count;
        }
        for &b in &self.choices[k] {
            if let Some(undo) = self.place(b) {
                let stop = self.go();
                self.unplace(undo);
                if stop {
                    return true;
                }
            }
        }
        false
    }
}
