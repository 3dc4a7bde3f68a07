//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line into the test log.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rayon::prelude::*;

use common::sched::{pull_schedule, stream_schedule};
use common::*;

use cmpnet::harness::oracle::{audit_wills, TreeView};
use cmpnet::harness::{bfs_distances, run_on, BoundSchedule, EdgeList, ExperimentConfig, Generator, PolicySpec};
use cmpnet::hft::{label_bt, search_ht, subwill_indices, HtOracle, IndexRef, NodeKind};
use cmpnet::kernel::{FaultKind, Footprint, NodeId, PortAssignment, ReadOrderPolicy, SimError};
use cmpnet::protocols::{
    bfs_tree, convergecast_weights, dfs_rename, distribute_wills_adversarial,
    distribute_wills_one_round, leader_election, light_paths_big, LabelVariant, Msg, WeightMode, WillVariant,
};
use cmpnet::routing::{execute_will, label_of, simulate_route};

type Outcome = Result<String, String>;

/// Worst measured/allowed ratio per item, for rounds and messages.
type Ratios = BTreeMap<String, (f64, f64)>;

/// Name, check and optional time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

const PULL: ReadOrderPolicy<Msg> = ReadOrderPolicy::NodeChosen;

/// Constant in the small light-path message bound `C * m * D`.
const SMALL_LABEL_C: u64 = 6;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ceil_log(base: u64, n: u64) -> u64 {
    let (mut k, mut p) = (0, 1u64);
    while p < n {
        p *= base;
        k += 1;
    }
    k
}

fn floor_log2(x: u64) -> u64 {
    63 - x.leading_zeros() as u64
}

fn random_graph(seed: u64) -> EdgeList {
    let n = 16 + (seed * 97) % 497;
    Generator::GnpConnected { n, p: 4.0 / n as f64, seed }
        .generate()
        .and_then(|g| g.relabel(seed, 1 << 30))
        .unwrap()
}

fn labeling_bijection() -> Outcome {
    for x in 1..=12u32 {
        let (mut leaves, mut inner) = (Vec::new(), Vec::new());
        for h in 0..=x {
            for v in 0..(1u64 << (x - h)) {
                let l = label_bt(h, v, x).map_err(|e| e.to_string())?;
                if h == 0 {
                    leaves.push(l)
                } else {
                    inner.push(l)
                }
            }
        }
        leaves.sort_unstable();
        inner.sort_unstable();
        ensure(leaves.iter().copied().eq(0..1u64 << x), || format!("leaf labels at x={x}"))?;
        ensure(inner.iter().copied().eq(0..(1u64 << x) - 1), || format!("non-leaf labels at x={x}"))?;
    }
    Ok("x in 1..=12".into())
}

fn search_matches_oracle() -> Outcome {
    let jobs: Vec<(u64, u64)> = [0u64, 1, 7, 64].iter().flat_map(|&a| (1..=4096u64).map(move |s| (a, s))).collect();
    let bad = jobs.par_iter().find_map_any(|&(a, size)| {
        let b = a + size - 1;
        let o = match HtOracle::build(a, b) {
            Ok(o) => o,
            Err(e) => return Some(format!("[{a},{b}]: {e}")),
        };
        (a..=b).find_map(|y| {
            let got = search_ht(y, a, b).map_err(|e| e.to_string());
            let want = o.neighborhood(y).map_err(|e| e.to_string());
            (got != want).then(|| format!("y={y} in [{a},{b}]: {got:?} != {want:?}"))
        })
    });
    match bad {
        Some(e) => Err(e),
        None => {
            let queries: u64 = jobs.iter().map(|j| j.1).sum();
            Ok(format!("{} intervals, {queries} queries", jobs.len()))
        }
    }
}

fn thirteen_leaf_example() -> Outcome {
    let nl = |i| Some(IndexRef { kind: NodeKind::NonLeaf, index: i });
    let leaf = |i| Some(IndexRef { kind: NodeKind::Leaf, index: i });
    let s0 = subwill_indices(0, 13).map_err(|e| e.to_string())?;
    let s1 = subwill_indices(1, 13).map_err(|e| e.to_string())?;
    let got0 = (s0.leaf_parent_idx, s0.nonleaf_parent_idx, s0.nonleaf_left_idx, s0.nonleaf_right_idx);
    let got1 = (s1.leaf_parent_idx, s1.nonleaf_parent_idx, s1.nonleaf_left_idx, s1.nonleaf_right_idx);
    ensure(got0 == (Some(0), Some(1), leaf(0), leaf(1)), || format!("child 0: {got0:?}"))?;
    ensure(got1 == (Some(0), Some(3), nl(0), nl(2)), || format!("child 1: {got1:?}"))?;
    Ok("children 0 and 1 of 13".into())
}

fn star_will_net(delta: u64) -> Net {
    let mut net = labeled(&rooted_star(delta), PortAssignment::Contiguous, 2);
    light_paths_big(&mut net, &PULL, CAP).unwrap();
    net
}

fn will_protocol() -> Outcome {
    let mut peak_ids = 0;
    let mut notes = Vec::new();
    for delta in [1u64, 2, 3, 13, 100, 1024] {
        let fresh = star_will_net(delta);
        let mut net = fresh.clone();
        let (_, stats) = distribute_wills_one_round(&mut net, &PULL).map_err(|e| e.to_string())?;
        ensure(stats.compute_rounds.len() == 1, || format!("delta={delta}: compute rounds {:?}", stats.compute_rounds))?;
        let tree = TreeView::from_network(&net)?;
        let audit = audit_wills(&net, &tree);
        ensure(audit.is_empty(), || format!("delta={delta}: {audit:?}"))?;
        let cap = 5 * (floor_log2(delta) + 1);
        ensure(stats.peak_slots <= cap, || format!("delta={delta}: peak slots {} > {cap}", stats.peak_slots))?;
        ensure(stats.peak_ids <= 4, || format!("delta={delta}: {} plain IDs held at once", stats.peak_ids))?;
        peak_ids = peak_ids.max(stats.peak_ids);
        notes.push(format!("{delta}:{}/{cap}", stats.peak_slots));

        let reference: Vec<_> = net.nodes().iter().map(|n| n.vars().will.clone()).collect();
        let bad = (0..100u64).into_par_iter().find_map_any(|seed| {
            let mut adv = fresh.clone();
            match distribute_wills_adversarial(&mut adv, &ReadOrderPolicy::RandomAdversary(seed), CAP) {
                Err(e) => Some(format!("delta={delta} seed={seed}: {e}")),
                Ok((_, s)) if s.compute_rounds.len() as u64 != delta => {
                    Some(format!("delta={delta} seed={seed}: {} compute rounds", s.compute_rounds.len()))
                }
                Ok(_) => adv
                    .nodes()
                    .iter()
                    .zip(&reference)
                    .any(|(n, w)| &n.vars().will != w)
                    .then(|| format!("delta={delta} seed={seed}: subwills differ")),
            }
        });
        if let Some(e) = bad {
            return Err(e);
        }
    }
    Ok(format!("peak slots/cap {}; peak plain ids {peak_ids}", notes.join(" ")))
}

fn bfs_trees() -> Outcome {
    let bad = (0..50u64).into_par_iter().find_map_any(|seed| {
        let check = || -> Result<(), String> {
            let g = random_graph(seed);
            let d = diameter(&g);
            let policy = if seed % 2 == 0 { PULL } else { ReadOrderPolicy::RandomAdversary(seed) };
            let mut net = net_of(&g, PortAssignment::Gapped(seed));
            leader_election(&mut net, &policy, d).map_err(|e| e.to_string())?;
            let r = bfs_tree(&mut net, &policy, CAP).map_err(|e| e.to_string())?;
            let tree = TreeView::from_network(&net)?;
            let dist = bfs_distances(&g.adjacency(), tree.root);
            ensure(tree.depth == dist, || "depth differs from distance".into())?;
            ensure(r.executed_rounds <= d + 2, || format!("{} rounds > D+2 = {}", r.executed_rounds, d + 2))?;
            let m = g.m() as u64;
            ensure(r.messages <= 2 * m, || format!("{} messages > 2m = {}", r.messages, 2 * m))
        };
        check().err().map(|e| format!("seed {seed}: {e}"))
    });
    bad.map_or(Ok("50 graphs, n <= 512, both read policies".into()), Err)
}

fn convergecast() -> Outcome {
    let bad = (0..20u64).into_par_iter().find_map_any(|seed| {
        let check = || -> Result<(), String> {
            let g = random_graph(seed);
            let d = diameter(&g);
            for b in [2u64, 3, 4] {
                let mut net = net_of(&g, PortAssignment::Gapped(seed));
                leader_election(&mut net, &PULL, d).map_err(|e| e.to_string())?;
                bfs_tree(&mut net, &PULL, CAP).map_err(|e| e.to_string())?;
                let r = convergecast_weights(&mut net, &PULL, b, WeightMode::Broadcast, CAP).map_err(|e| e.to_string())?;
                let tree = TreeView::from_network(&net)?;
                let leaves = tree.leaf_counts();
                for n in net.nodes() {
                    let v = n.vars();
                    ensure(v.wt == leaves[&n.id()], || format!("b={b}: wt({}) = {} != {}", n.id(), v.wt, leaves[&n.id()]))?;
                    ensure(v.heavy_children.len() as u64 <= b, || format!("b={b}: |H({})| = {}", n.id(), v.heavy_children.len()))?;
                }
                ensure(r.executed_rounds <= 2 * d + 4, || format!("b={b}: {} rounds > 2D+4", r.executed_rounds))?;
            }
            Ok(())
        };
        check().err().map(|e| format!("seed {seed}: {e}"))
    });
    bad.map_or(Ok("20 graphs, b in {2,3,4}".into()), Err)
}

fn dfs_labels() -> Outcome {
    let bad = (0..20u64).into_par_iter().find_map_any(|seed| {
        let check = || -> Result<(), String> {
            let g = random_graph(seed);
            let mut net = net_of(&g, PortAssignment::Gapped(seed));
            leader_election(&mut net, &PULL, diameter(&g)).map_err(|e| e.to_string())?;
            bfs_tree(&mut net, &PULL, CAP).map_err(|e| e.to_string())?;
            convergecast_weights(&mut net, &PULL, 2, WeightMode::Broadcast, CAP).map_err(|e| e.to_string())?;
            let r = dfs_rename(&mut net, &PULL, CAP).map_err(|e| e.to_string())?;
            let n = net.len() as u64;
            let mut ids: Vec<u64> = net.nodes().iter().map(|x| x.vars().new_id).collect();
            ids.sort_unstable();
            ensure(ids.iter().copied().eq(1..=n), || "NewIds are not 1..n".into())?;

            // (min, max, count) of NewIds per subtree, bottom-up
            let tree = TreeView::from_network(&net)?;
            let mut span: HashMap<NodeId, (u64, u64, u64)> = HashMap::new();
            for &v in tree.top_down().iter().rev() {
                let own = net.vars(v).unwrap().new_id;
                let mut s = (own, own, 1);
                for c in tree.kids(v) {
                    let k = span[&c];
                    s = (s.0.min(k.0), s.1.max(k.1), s.2 + k.2);
                }
                let d_v = net.vars(v).unwrap().d_v;
                ensure(s.0 == d_v && s.1 == own && s.2 == own - d_v + 1, || format!("subtree of {v}: {s:?}, d_v {d_v}"))?;
                span.insert(v, s);
            }

            let m = g.m() as u64;
            ensure(r.executed_rounds <= 4 * m + 2, || format!("{} rounds > 4m+2", r.executed_rounds))?;
            let active = &r.per_round_messages[..r.rounds as usize];
            ensure(active.iter().all(|&c| c == 1), || "a round without exactly one message".into())?;
            ensure(r.per_round_messages.iter().all(|&c| c <= 1), || "two messages in one round".into())
        };
        check().err().map(|e| format!("seed {seed}: {e}"))
    });
    bad.map_or(Ok("20 graphs".into()), Err)
}

fn light_paths() -> Outcome {
    let bad = (0..20u64).into_par_iter().find_map_any(|seed| {
        let check = || -> Result<(), String> {
            let n = 20 + seed * 19;
            let g = Generator::RandomTree { n, seed }.generate().map_err(|e| e.to_string())?;
            let (d, m) = (diameter(&g), g.m() as u64);
            let (big, rb) = with_paths(&g, PortAssignment::Gapped(seed), LabelVariant::Big);
            let (small, rs) = with_paths(&g, PortAssignment::Gapped(seed), LabelVariant::Small);
            let cap = ceil_log(2, n);
            for (x, y) in big.nodes().iter().zip(small.nodes()) {
                let (x, y) = (x.vars(), y.vars());
                ensure((x.new_id, &x.light_path, x.light_level) == (y.new_id, &y.light_path, y.light_level), || {
                    format!("labels differ at NewId {}", x.new_id)
                })?;
                ensure(x.light_path.len() as u64 <= cap, || format!("|LightPath| {} > {cap}", x.light_path.len()))?;
            }
            ensure(rb.executed_rounds <= d + 2, || format!("big: {} rounds > D+2", rb.executed_rounds))?;
            ensure(rb.messages <= m + n, || format!("big: {} messages > m+n", rb.messages))?;
            let bound = SMALL_LABEL_C * m * d.max(1);
            ensure(rs.messages <= bound, || format!("small: {} messages > {SMALL_LABEL_C}mD = {bound}", rs.messages))
        };
        check().err().map(|e| format!("seed {seed}: {e}"))
    });
    bad.map_or(Ok(format!("20 random trees, small-label C = {SMALL_LABEL_C}")), Err)
}

fn prepared(g: &EdgeList, seed: u64) -> Net {
    full(g, PortAssignment::Gapped(seed), &PULL, LabelVariant::Big, WillVariant::OneRound).0
}

fn routing_before_deletion() -> Outcome {
    let mut pairs = 0;
    for (i, n) in [64u64, 128, 256].into_iter().enumerate() {
        let g = Generator::RandomTree { n, seed: 40 + i as u64 }.generate().map_err(|e| e.to_string())?;
        let net = prepared(&g, i as u64);
        let tree = TreeView::from_network(&net)?;
        let ids: Vec<NodeId> = net.node_ids().collect();
        let bad = ids.par_iter().find_map_any(|&s| {
            ids.iter().find_map(|&t| {
                let o = simulate_route(&net, s, &label_of(&net, t).unwrap(), 4 * n);
                let want = tree.distance(s, t);
                (!o.delivered || o.packet.hop_count != want)
                    .then(|| format!("n={n} {s}->{t}: {:?}, {} hops, distance {want}", o.error, o.packet.hop_count))
            })
        });
        if let Some(e) = bad {
            return Err(e);
        }
        pairs += ids.len() * ids.len();
    }
    Ok(format!("{pairs} ordered pairs delivered on shortest tree paths"))
}

fn healing() -> Outcome {
    let mut notes = Vec::new();
    for delta in [1u64, 2, 8, 13, 64] {
        let g = hub_tree(delta, 2 * delta + 10, delta);
        let mut net = prepared(&g, delta);
        let tree = TreeView::from_network(&net)?;
        let kids = kids_of(&net, NodeId(X));
        let ids: Vec<NodeId> = net.node_ids().filter(|&v| v != NodeId(X)).collect();
        let labels: Vec<_> = ids.iter().map(|&t| label_of(&net, t).unwrap()).collect();
        let report = execute_will(&mut net, NodeId(X)).map_err(|e| e.to_string())?;
        rt_matches_oracle(&report, &kids).map_err(|e| format!("delta={delta}: {e}"))?;
        ensure(report.max_degree_delta() <= 3, || format!("delta={delta}: degree delta {}", report.max_degree_delta()))?;
        let allowed = 2 * ceil_log(2, delta) + 2;
        let worst = ids
            .par_iter()
            .map(|&s| {
                let mut worst = 0i64;
                for (&t, l) in ids.iter().zip(&labels) {
                    let o = simulate_route(&net, s, l, 10 * ids.len() as u64);
                    if !o.delivered {
                        return Err(format!("delta={delta} {s}->{t}: {:?}", o.error));
                    }
                    worst = worst.max(o.packet.hop_count as i64 - tree.distance(s, t) as i64);
                }
                Ok(worst)
            })
            .try_reduce(|| 0, |a, b| Ok(a.max(b)))?;
        ensure(worst <= allowed as i64, || format!("delta={delta}: detour {worst} > {allowed}"))?;
        notes.push(format!("{delta}:{worst}/{allowed}"));
    }
    Ok(format!("worst detour/allowed {}", notes.join(" ")))
}

struct Case {
    name: String,
    graph: EdgeList,
    cfg: ExperimentConfig,
}

fn schedule_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for n in [32u64, 64, 128, 256] {
        let graphs = [
            ("gnp", Generator::GnpConnected { n, p: 6.0 / n as f64, seed: n }),
            ("tree", Generator::RandomTree { n, seed: n + 1 }),
            ("star", Generator::Star { leaves: n - 1 }),
            ("path", Generator::Path { n }),
        ];
        for (kind, gen) in graphs {
            let graph = gen.generate().unwrap();
            for (policy, wills) in [(PolicySpec::Node, WillVariant::OneRound), (PolicySpec::Rand(n), WillVariant::Adversarial)] {
                for labels in [LabelVariant::Big, LabelVariant::Small] {
                    cases.push(Case {
                        name: format!("{kind} n={n} {policy} {labels:?}"),
                        graph: graph.clone(),
                        cfg: ExperimentConfig {
                            policy,
                            wills,
                            labels,
                            port_seed: Some(n),
                            ..Default::default()
                        },
                    });
                }
            }
        }
    }
    cases
}

fn bound_schedule() -> Outcome {
    let schedule = BoundSchedule::default();
    let results: Vec<Result<Ratios, String>> = schedule_cases()
        .par_iter()
        .map(|c| {
            let e = run_on(&c.cfg, &c.graph, &schedule).map_err(|e| format!("{}: {e}", c.name))?;
            ensure(e.report.audit.is_empty(), || format!("{}: audit {:?}", c.name, e.report.audit))?;
            let mut ratios = BTreeMap::new();
            for v in &e.report.verdicts {
                ensure(v.pass, || format!("{}: {v}", c.name))?;
                let r = v.measured_rounds as f64 / v.allowed_rounds;
                let m = v.measured_messages as f64 / v.allowed_messages;
                ratios.insert(v.item.clone(), (r, m));
            }
            ensure(!ratios.is_empty(), || format!("{}: no verdicts", c.name))?;
            Ok(ratios)
        })
        .collect();
    let mut worst = Ratios::new();
    for r in results {
        for (item, (a, b)) in r? {
            let w = worst.entry(item).or_default();
            *w = (w.0.max(a), w.1.max(b));
        }
    }

    for delta in [1u64, 2, 3, 13, 100] {
        let cfg = ExperimentConfig {
            policy: PolicySpec::Rand(delta),
            wills: WillVariant::Adversarial,
            ..Default::default()
        };
        let e = run_on(&cfg, &rooted_star(delta), &schedule).map_err(|e| e.to_string())?;
        let st = e.pipeline.stage("wills_adversarial").ok_or("no adversarial will stage")?;
        ensure(st.rounds == delta + 1, || format!("star delta={delta}: will stage took {} rounds", st.rounds))?;
    }
    let summary: Vec<String> = worst.iter().map(|(k, (r, m))| format!("{k} {r:.2}/{m:.2}")).collect();
    Ok(format!(
        "worst measured/allowed (rounds/messages): {}; adversarial wills on stars take delta+1 rounds",
        summary.join(", ")
    ))
}

fn memory_compactness() -> Outcome {
    let schedule = BoundSchedule::default();
    let faults: Result<u64, String> = schedule_cases()
        .par_iter()
        .map(|c| {
            let e = run_on(&c.cfg, &c.graph, &schedule).map_err(|e| format!("{}: {e}", c.name))?;
            let peak = e.report.stages.iter().map(|s| s.peak_memory_words).max().unwrap_or(0);
            ensure(peak <= e.report.memory_budget_words, || format!("{}: peak {peak} words", c.name))?;
            Ok(e.report.stages.iter().map(|s| s.faults).sum::<u64>())
        })
        .try_reduce(|| 0, |a, b| Ok(a + b));
    let faults = faults?;
    ensure(faults == 0, || format!("{faults} faults under the default budget"))?;

    let expect_budget_fault = |budget: u64| -> Result<(), String> {
        let mut net = star_will_net(1024);
        net.set_memory_budget_words(budget);
        match distribute_wills_one_round(&mut net, &PULL) {
            Err(SimError::Fault(f)) if matches!(f.kind, FaultKind::Budget { .. }) => Ok(()),
            other => Err(format!("budget {budget} words: expected a budget fault, got {:?}", other.map(|r| r.1))),
        }
    };
    expect_budget_fault(4)?;
    // Also with 4 words on top of what each node already stores, so the
    // fault comes from the will computation itself.
    let base = star_will_net(1024).nodes().iter().map(|n| n.vars().footprint_words()).max().unwrap_or(0);
    expect_budget_fault(base + 4)?;
    Ok(format!("no faults at 64 log n words; will stage on delta=1024 faults at 4 and {} words", base + 4))
}

fn kernel_semantics() -> Outcome {
    let cases = 1000;
    let run = |name: &str, f: &dyn Fn(u64, u64, u64) -> Result<(), TestCaseError>| -> Result<(), String> {
        let mut runner = TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        });
        runner.run(&(2u64..9, any::<u64>(), 1u64..7), |(n, seed, rounds)| f(n, seed, rounds)).map_err(|e| format!("{name}: {e}"))
    };
    run("clear-on-read", &|n, seed, rounds| pull_schedule(n, seed, rounds))?;
    run("once-per-round", &|n, seed, rounds| {
        for (_, reads) in stream_schedule(n, seed, rounds) {
            for r in 1..=rounds {
                let mut ports: Vec<_> = reads.iter().filter(|e| e.0 == r).map(|e| e.1).collect();
                let len = ports.len();
                ports.sort();
                ports.dedup();
                prop_assert_eq!(ports.len(), len);
            }
        }
        Ok(())
    })?;
    run("replay", &|n, seed, rounds| {
        prop_assert_eq!(stream_schedule(n, seed, rounds), stream_schedule(n, seed, rounds));
        Ok(())
    })?;
    Ok(format!("{cases} schedules per property"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("labeling bijection", labeling_bijection, Some(1)),
        ("half-full tree search matches oracle", search_matches_oracle, Some(60)),
        ("thirteen-leaf worked example", thirteen_leaf_example, None),
        ("will protocol on stars", will_protocol, Some(60)),
        ("bfs tree", bfs_trees, Some(60)),
        ("convergecast weights", convergecast, None),
        ("dfs rename", dfs_labels, None),
        ("light paths", light_paths, None),
        ("routing before deletion", routing_before_deletion, Some(120)),
        ("healing", healing, None),
        ("bound schedule", bound_schedule, None),
        ("memory compactness", memory_compactness, None),
        ("kernel semantics", kernel_semantics, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if let (Ok(_), Some(s)) = (&outcome, limit) {
            if took > Duration::from_secs(s) {
                outcome = Err(format!("took {:.1}s, limit {s}s", took.as_secs_f64()));
            }
        }
        let secs = took.as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
