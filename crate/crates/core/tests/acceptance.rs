//! Acceptance suite: one line per criterion.
//!
//! Runs without the libtest harness so the lines always show. Exits non-zero
//! if a criterion fails that is not listed in `KNOWN_FAILURES`, or if a
//! listed one stops failing.

use std::collections::BTreeSet;
use std::time::Instant;

use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use efx_core::cut::cut;
use efx_core::fairness::{agent_is_alpha_efx, check_efx, check_envied_singleton, is_efx, is_efx_feasible, is_envied};
use efx_core::forge::{self, FamilyKind, FamilySpec, RandomSpec, Shape};
use efx_core::oracle::{decide, decide_efx_allocation, OracleOptions, Target};
use efx_core::pipeline::{
    complete_efx, half_efx_orientation_with, Event, PipelineTrace, STAGE_GREEDY, STAGE_SAFE,
    STAGE_SATURATE,
};
use efx_core::rational::{int, ratio};
use efx_core::solvers::{solve_multicycle, solve_multistar, solve_multitree_d4_q2_traced};
use efx_core::structure::Bipartition;
use efx_core::{Allocation, EdgeItem, Instance, Rational};

/// Criteria expected to fail, with the reason printed alongside.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    6,
    "the reference states after saturation and the safe-set stage are unreachable under exact values: once agent 5 holds 9 + 3 it envies no one, so agents 1 and 2 are non-envied with edges still available",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { pass: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, detail: detail.into() }
}

/// Partial EFX orientations gathered for criterion 12.
#[derive(Default)]
struct Singleton {
    checked: usize,
    failures: Vec<String>,
}

impl Singleton {
    fn observe(&mut self, inst: &Instance, x: &Allocation, tag: &str) {
        if !x.is_orientation(inst) || !is_efx(inst, x) {
            return;
        }
        self.checked += 1;
        match check_envied_singleton(inst, x) {
            Ok(v) if v.pass => {}
            Ok(v) => self.failures.push(format!("{tag}: {:?}", v.witnesses.first())),
            Err(e) => self.failures.push(format!("{tag}: {e}")),
        }
    }

    fn observe_trace(&mut self, inst: &Instance, trace: &PipelineTrace, tag: &str) {
        for s in &trace.snapshots {
            self.observe(inst, &s.allocation, &format!("{tag}/{}", s.stage));
        }
    }
}

fn family(kind: FamilyKind) -> Instance {
    forge::generate(&FamilySpec::new(kind)).expect("family generates")
}

fn orientation_result(inst: &Instance, count: bool) -> efx_core::oracle::OracleResult {
    let opts = OracleOptions { count, ..Default::default() };
    decide(inst, Target::Orientation, &opts).expect("within budget")
}

fn lists(spec: &[&[usize]]) -> Vec<Vec<usize>> {
    spec.iter().map(|b| b.to_vec()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = family(FamilyKind::C4Counter);
    let r = orientation_result(&inst, true);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("c4-counter: {} orientations, {} EFX ({secs:.3} s)", r.states, r.count.unwrap());
    if !r.exists && r.states == "256" && secs < 1.0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, states) in [
        (FamilyKind::P4Q3, 1u64 << 7),
        (FamilyKind::P4Qn { q: 4 }, 1 << 9),
        (FamilyKind::P4Qn { q: 5 }, 1 << 11),
    ] {
        let start = Instant::now();
        let r = orientation_result(&family(kind.clone()), false);
        let secs = start.elapsed().as_secs_f64();
        ok &= !r.exists && r.states == states.to_string() && secs < 1.0;
        parts.push(format!("{kind:?}: {} states, exists={} ({secs:.3} s)", r.states, r.exists));
    }
    let detail = parts.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// All EFX orientations by plain enumeration and the rational verifier.
fn all_efx_orientations(inst: &Instance) -> Vec<Allocation> {
    let m = inst.m();
    (0u64..1 << m)
        .filter_map(|mask| {
            let owners: Vec<Option<usize>> = (0..m)
                .map(|e| {
                    let edge = inst.edge(e);
                    Some(if mask >> e & 1 == 0 { edge.u.min(edge.v) } else { edge.u.max(edge.v) })
                })
                .collect();
            let x = Allocation::from_owners(inst.n(), &owners);
            is_efx(inst, &x).then_some(x)
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let inst = family(FamilyKind::P3Block);
    let r = orientation_result(&inst, true);
    let all = all_efx_orientations(&inst);
    let envied_in_all = all.iter().all(|x| is_envied(&inst, x, 2));
    let detail = format!(
        "p3-block: oracle count {}, enumeration count {}, third agent envied in all: {envied_in_all}",
        r.count.unwrap(),
        all.len()
    );
    if r.count == Some(2) && all.len() == 2 && envied_in_all {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_4() -> Outcome {
    let r = orientation_result(&family(FamilyKind::P6Counter), true);
    let detail = format!("p6-counter: {} orientations, {} EFX", r.states, r.count.unwrap());
    if r.states == "512" && !r.exists {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn partition_exists(set: &[u64]) -> bool {
    let total: u64 = set.iter().sum();
    total.is_multiple_of(2) && (0u32..1 << set.len()).any(|mask| {
        let half: u64 = set.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).sum();
        2 * half == total
    })
}

fn gadget_has_orientation(set: &[u64]) -> bool {
    let inst = forge::reduce_partition(set, &forge::default_eps(), &forge::default_delta()).unwrap();
    orientation_result(&inst, false).exists
}

fn criterion_5() -> Outcome {
    let mut problems = Vec::new();
    for (set, expect) in [(vec![1, 2, 3], true), (vec![1, 1, 1], false), (vec![2], false)] {
        if gadget_has_orientation(&set) != expect {
            problems.push(format!("{set:?}"));
        }
    }
    let fixed_ok = problems.is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut with_split = 0;
    for round in 0..20 {
        // Odd rounds plant a split {a, b, a + b} so both answers occur.
        let set: Vec<u64> = if round % 2 == 1 {
            let a = rng.gen_range(0..=3);
            let b = rng.gen_range(0..=3);
            vec![a, b, a + b]
        } else {
            let k = rng.gen_range(1..=4);
            (0..k).map(|_| rng.gen_range(0..=6)).collect()
        };
        let brute = partition_exists(&set);
        with_split += usize::from(brute);
        if gadget_has_orientation(&set) == brute {
            agree += 1;
        } else {
            problems.push(format!("{set:?}"));
        }
    }
    let detail = format!(
        "{{1,2,3}} yes, {{1,1,1}} and {{2}} no: {}; {agree}/20 random multisets agree with Partition ({with_split} splittable); mismatches {problems:?}",
        fixed_ok
    );
    if problems.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

// Running example, 0-indexed agents (reference label = index + 1).
const REFERENCE_GREEDY: &[&[usize]] = &[&[0], &[1], &[3], &[16], &[2], &[8], &[13]];
const REFERENCE_SATURATE: &[&[usize]] = &[&[0], &[1], &[3], &[15, 16], &[2, 17], &[4, 6, 8], &[9, 11, 13, 14]];

fn criterion_6(single: &mut Singleton) -> Outcome {
    let inst = family(FamilyKind::RunningExample);
    let (x, trace) = complete_efx(&inst).unwrap();
    single.observe_trace(&inst, &trace, "running-example");
    let stage = |name| trace.snapshot(name).unwrap().allocation.to_lists();
    let greedy_ok = stage(STAGE_GREEDY) == lists(REFERENCE_GREEDY);
    let saturate_ok = stage(STAGE_SATURATE) == lists(REFERENCE_SATURATE);
    let swaps: Vec<(usize, usize)> = trace
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Swap { envied, envier, .. } => Some((*envied, *envier)),
            _ => None,
        })
        .collect();
    let swap_ok = swaps == vec![(1, 4)];
    // The two 5-valued edges sit in E(1,6) and E(1,7) (reference labels).
    let fives: BTreeSet<usize> = [5, 10].into();
    let completion_ok = fives.is_subset(x.bundle(4));
    let detail = format!(
        "greedy = reference: {greedy_ok}; saturation = reference: {saturate_ok}; swaps {swaps:?} (want [(1, 4)]): {swap_ok}; \
         5-edges to agent 5: {completion_ok}; final output EFX: {}",
        is_efx(&inst, &x)
    );
    if greedy_ok && saturate_ok && swap_ok && completion_ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn random_bipartite(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let n = rng.gen_range(2..=8);
        let q_max = rng.gen_range(1..=4);
        let spec = RandomSpec {
            n,
            m: rng.gen_range(1..=20),
            q_max,
            shape: Shape::Bipartite,
            max_numer: 1000,
            max_denom: rng.gen_range(1..=12),
            symmetric: rng.gen_bool(0.3),
        };
        if let Ok(inst) = forge::random_instance(&spec, rng.gen()) {
            return inst;
        }
    }
}

fn bipartite_batch() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..1000).map(|_| random_bipartite(&mut rng)).collect()
}

fn criterion_7(batch: &[Instance], single: &mut Singleton) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (k, inst) in batch.iter().enumerate() {
        let (x, trace) = match complete_efx(inst) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{k}: {e}"));
                continue;
            }
        };
        single.observe_trace(inst, &trace, &format!("bipartite#{k}"));
        let g = trace.snapshot(STAGE_GREEDY).unwrap();
        let s = trace.snapshot(STAGE_SATURATE).unwrap();
        let t = trace.snapshot(STAGE_SAFE).unwrap();
        let checks = [
            ("complete", x.is_complete()),
            ("efx", check_efx(inst, &x, &Rational::one()).pass),
            ("greedy P1-P3", g.flags.p1 && g.flags.p2 && g.flags.p3),
            ("saturate P1-P4", s.flags.p1 && s.flags.p2 && s.flags.p3 && s.flags.p4),
            ("safe P1-P5", t.flags.p1 && t.flags.p2 && t.flags.p3 && t.flags.p4 && t.flags.p5),
            ("envied in S", [g, s, t].iter().all(|snap| snap.claims.envied_in_s)),
            ("leftover edges", t.claims.unallocated_edges),
            ("non-envied bound", t.claims.non_envied_bound),
        ];
        for (name, ok) in checks {
            if !ok {
                failures.push(format!("#{k}: {name}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{} instances, {} failures ({secs:.1} s) {:?}", batch.len(), failures.len(), failures.iter().take(5).collect::<Vec<_>>());
    if failures.is_empty() && secs < 60.0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_8(batch: &[Instance]) -> Outcome {
    let half = ratio(1, 2);
    let mut failures = Vec::new();
    for (k, inst) in batch.iter().enumerate() {
        let bip = Bipartition::smaller_side_as_s(inst).unwrap();
        let x = match half_efx_orientation_with(inst, &bip) {
            Ok((x, _)) => x,
            Err(e) => {
                failures.push(format!("#{k}: {e}"));
                continue;
            }
        };
        let full = (0..inst.n()).filter(|&a| agent_is_alpha_efx(inst, &x, a, &Rational::one())).count();
        let ok = x.is_complete()
            && x.is_orientation(inst)
            && 2 * full >= inst.n()
            && (0..inst.n()).all(|a| agent_is_alpha_efx(inst, &x, a, &half));
        if !ok {
            failures.push(format!("#{k}: {full}/{} agents at alpha 1", inst.n()));
        }
    }
    let detail = format!("{} instances, {} failures {:?}", batch.len(), failures.len(), failures.iter().take(5).collect::<Vec<_>>());
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    for _ in 0..1000 {
        let size = rng.gen_range(0..=12);
        let edges: Vec<EdgeItem> = (0..size)
            .map(|_| EdgeItem::new(0, 1, ratio(rng.gen_range(1..=100), rng.gen_range(1..=6)), int(rng.gen_range(1..=100))))
            .collect();
        let inst = Instance::new(2, edges).unwrap();
        let cfg = cut(&inst, 0, 1);
        let parts = [cfg.c1.clone(), cfg.c2.clone()];
        let covers = cfg.c1.len() + cfg.c2.len() == size && cfg.c1.is_disjoint(&cfg.c2);
        if !(covers && is_efx_feasible(&inst, 0, &parts, 0) && is_efx_feasible(&inst, 0, &parts, 1)) {
            failures += 1;
        }
    }
    let detail = format!("1000 multisets, {failures} failures");
    if failures == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_10(single: &mut Singleton) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();
    let draw = |rng: &mut ChaCha8Rng, shape: Shape, n: usize, q_max: usize| loop {
        let pairs = if shape == Shape::Cycle { n } else { n - 1 };
        let spec = RandomSpec {
            n,
            m: rng.gen_range(pairs..=pairs * q_max),
            q_max,
            shape,
            max_numer: 1000,
            max_denom: rng.gen_range(1..=12),
            symmetric: rng.gen_bool(0.3),
        };
        if let Ok(inst) = forge::random_instance(&spec, rng.gen()) {
            break inst;
        }
    };
    for k in 0..300 {
        let n = rng.gen_range(2..=8);
        let q = rng.gen_range(1..=5);
        let inst = draw(&mut rng, Shape::Star, n, q);
        match solve_multistar(&inst) {
            Ok(x) if x.is_complete() && x.is_orientation(&inst) && is_efx(&inst, &x) => {
                single.observe(&inst, &x, &format!("star#{k}"))
            }
            Ok(_) => failures.push(format!("star#{k}")),
            Err(e) => failures.push(format!("star#{k}: {e}")),
        }
    }
    for k in 0..300 {
        let n = rng.gen_range(2..=9);
        let inst = draw(&mut rng, Shape::Tree, n, 2);
        match solve_multitree_d4_q2_traced(&inst) {
            Ok((x, steps)) if x.is_complete() && x.is_orientation(&inst) && is_efx(&inst, &x) => {
                for s in &steps {
                    single.observe(&inst, &s.allocation, &format!("tree#{k}"));
                }
            }
            Ok(_) => failures.push(format!("tree#{k}")),
            Err(e) => failures.push(format!("tree#{k}: {e}")),
        }
    }
    for k in 0..200 {
        let n = rng.gen_range(4..=8);
        let q = rng.gen_range(1..=3);
        let inst = draw(&mut rng, Shape::Cycle, n, q);
        match solve_multicycle(&inst) {
            Ok(x) if x.is_complete() && is_efx(&inst, &x) => single.observe(&inst, &x, &format!("cycle#{k}")),
            Ok(_) => failures.push(format!("cycle#{k}")),
            Err(e) => failures.push(format!("cycle#{k}: {e}")),
        }
    }
    let detail = format!("300 stars, 300 trees, 200 cycles; {} failures {:?}", failures.len(), failures.iter().take(5).collect::<Vec<_>>());
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    let mut drawn = 0;
    while drawn < 100 {
        let n: usize = rng.gen_range(2..=5);
        let max_m = (1..=20).take_while(|&m| (n as u64).pow(m) <= 10_000_000).last().unwrap() as usize;
        let spec = RandomSpec {
            n,
            m: rng.gen_range(1..=max_m),
            q_max: 4,
            shape: Shape::Bipartite,
            max_numer: 1000,
            max_denom: 6,
            symmetric: false,
        };
        let Ok(inst) = forge::random_instance(&spec, rng.gen()) else { continue };
        drawn += 1;
        let r = decide_efx_allocation(&inst, 10_000_000).unwrap();
        let (x, _) = complete_efx(&inst).unwrap();
        let witness_ok = r.witness.as_ref().is_some_and(|w| is_efx(&inst, w));
        if !(r.exists && witness_ok && is_efx(&inst, &x)) {
            failures.push(format!("cross-check #{drawn}"));
        }
    }
    let mut tiny = 0;
    while tiny < 50 {
        let n: usize = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=10);
        let spec = RandomSpec { n, m, q_max: 3, shape: Shape::Bipartite, max_numer: 20, max_denom: 3, symmetric: rng.gen_bool(0.5) };
        let Ok(inst) = forge::random_instance(&spec, rng.gen()) else { continue };
        tiny += 1;
        let mut targets = vec![Target::Orientation];
        if (n as u64).pow(m as u32) <= 20_000 {
            targets.push(Target::Allocation);
        }
        for target in targets {
            let run = |prune| {
                let opts = OracleOptions { count: true, prune, ..Default::default() };
                let r = decide(&inst, target, &opts).unwrap();
                (r.exists, r.count)
            };
            if run(true) != run(false) {
                failures.push(format!("tiny #{tiny} {target:?}"));
            }
        }
    }
    let detail = format!("100 cross-checks and 50 pruned/unpruned comparisons; {} failures {:?}", failures.len(), failures);
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_12(single: &Singleton) -> Outcome {
    let detail = format!(
        "{} partial EFX orientations checked, {} violations {:?}",
        single.checked,
        single.failures.len(),
        single.failures.iter().take(3).collect::<Vec<_>>()
    );
    if single.failures.is_empty() && single.checked > 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() {
    let mut single = Singleton::default();
    let batch = bipartite_batch();
    let mut outcomes: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |k: usize, o: Outcome| {
        let known = KNOWN_FAILURES.iter().find(|(c, _)| *c == k);
        let mark = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, known) {
            (false, Some((_, why))) => format!(" [known: {why}]"),
            _ => String::new(),
        };
        println!("criterion {k:>2}: {mark}  {}{note}", o.detail);
        outcomes.push((k, o));
    };
    record(1, criterion_1());
    record(2, criterion_2());
    record(3, criterion_3());
    record(4, criterion_4());
    record(5, criterion_5());
    record(6, criterion_6(&mut single));
    record(7, criterion_7(&batch, &mut single));
    record(8, criterion_8(&batch));
    record(9, criterion_9());
    record(10, criterion_10(&mut single));
    record(11, criterion_11());
    record(12, criterion_12(&single));

    let passed = outcomes.iter().filter(|(_, o)| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|(k, o)| o.pass == KNOWN_FAILURES.iter().any(|(c, _)| c == k))
        .map(|(k, _)| *k)
        .collect();
    if !unexpected.is_empty() {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
