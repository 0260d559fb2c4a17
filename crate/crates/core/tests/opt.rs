// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use uil::ir::{validate, ControlKind, LatencyCtx, Program, Severity};
use uil::opt::{self, asap_schedule, DependencyGraph, PromotionConfig};
use uil::sim::{simulate, MemoryData, SimConfig, Trace};
use uil::text::{parse, print, print_static_group};

fn fixture(name: &str) -> Program {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(p: &Program) -> Trace {
    let cfg = SimConfig {
        record_spans: true,
        ..SimConfig::default()
    };
    simulate(p, &MemoryData::default(), &cfg).unwrap()
}

fn pass(name: &str, p: &Program) -> Program {
    let mut w = vec![];
    let out = opt::run_pass(name, p, &PromotionConfig::default(), &mut w).unwrap();
    let errors: Vec<_> = validate(&out)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    assert!(
        errors.is_empty(),
        "after {name}: {errors:?}\n{}",
        print(&out)
    );
    out
}

fn root_span(t: &Trace) -> u64 {
    let s = t.spans.iter().find(|s| s.node == 0).expect("root span");
    s.end - s.start
}

#[test]
fn chain_compacts_22_to_11() {
    let p = fixture("compact_chain.uil");
    let before = run(&p);
    let c = pass(opt::COMPACT, &p);
    let after = run(&c);
    assert_eq!(root_span(&before), 22);
    assert_eq!(root_span(&after), 11);
    assert_eq!(after.final_state.registers, before.final_state.registers);
    assert_eq!(after.final_state.registers["rd"], 8);

    let comp = &p.components[0];
    let ctx = LatencyCtx::new(&p, comp);
    let ControlKind::StaticSeq(kids) = &comp.control.kind else {
        panic!()
    };
    let g = opt::dependency_graph(&ctx, kids).unwrap();
    assert_eq!(g.edges, vec![(1, 2), (0, 3)]);
    let s = asap_schedule(&g);
    assert_eq!(s.starts, vec![0, 0, 10, 1]);
    assert_eq!(s.makespan, 11);
}

#[test]
fn chain_and_independent_schedules() {
    let chain = DependencyGraph {
        latencies: vec![2, 3, 4],
        edges: vec![(0, 1), (1, 2)],
    };
    assert_eq!(asap_schedule(&chain).makespan, 9);
    let free = DependencyGraph {
        latencies: vec![3, 3, 3],
        edges: vec![],
    };
    assert_eq!(asap_schedule(&free).starts, vec![0, 0, 0]);
    assert_eq!(asap_schedule(&free).makespan, 3);
}

/// Smallest makespan over every dependency-respecting start assignment.
fn brute_force(g: &DependencyGraph) -> u64 {
    let n = g.latencies.len();
    let horizon: u64 = g.latencies.iter().sum();
    let mut best = horizon;
    let mut starts = vec![0u64; n];
    fn go(i: usize, g: &DependencyGraph, starts: &mut Vec<u64>, horizon: u64, best: &mut u64) {
        if i == starts.len() {
            let m = starts
                .iter()
                .zip(&g.latencies)
                .map(|(s, l)| s + l)
                .max()
                .unwrap_or(0);
            *best = (*best).min(m);
            return;
        }
        for s in 0..=horizon {
            if s + g.latencies[i] > *best {
                break;
            }
            let ok = g
                .edges
                .iter()
                .filter(|e| e.1 == i)
                .all(|&(u, _)| s >= starts[u] + g.latencies[u]);
            if ok {
                starts[i] = s;
                go(i + 1, g, starts, horizon, best);
            }
        }
    }
    go(0, g, &mut starts, horizon, &mut best);
    best
}

fn graphs() -> impl Strategy<Value = DependencyGraph> {
    (1usize..=6).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
        let k = pairs.len();
        (
            prop::collection::vec(1u64..=3, n),
            prop::collection::vec(any::<bool>(), k),
        )
            .prop_map(move |(lat, keep)| {
                let edges = pairs
                    .iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|(e, _)| *e)
                    .collect();
                DependencyGraph {
                    latencies: lat,
                    edges,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]
    #[test]
    fn asap_is_optimal_and_respects_edges(g in graphs()) {
        let s = asap_schedule(&g);
        for &(u, v) in &g.edges {
            prop_assert!(s.starts[v] >= s.starts[u] + g.latencies[u]);
        }
        prop_assert!(s.makespan <= g.latencies.iter().sum());
        prop_assert_eq!(s.makespan, brute_force(&g));
    }
}

#[test]
fn sharing_across_static_par_windows() {
    let p = fixture("share_static.uil");
    let s = pass(opt::SHARE, &p);
    let mults = |p: &Program| {
        p.components[0]
            .cells
            .iter()
            .filter(|c| c.prototype == "std_mult")
            .count()
    };
    assert_eq!(mults(&p), 2);
    assert_eq!(mults(&s), 1);
    let (a, b) = (run(&p), run(&s));
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(b.final_state.registers["r1"], 12);
    assert_eq!(b.final_state.registers["r2"], 30);
}

#[test]
fn no_sharing_across_dynamic_par() {
    let p = fixture("share_dynamic.uil");
    let s = pass(opt::SHARE, &p);
    let mults = s.components[0]
        .cells
        .iter()
        .filter(|c| c.prototype == "std_mult")
        .count();
    assert_eq!(mults, 2);
}

#[test]
fn sequential_adders_share() {
    let p = parse(
        "component main() -> () { cells { a1 = std_add(8); a2 = std_add(8); r = std_reg(8); s = std_reg(8); }
         wires {
           group g1 { a1.left = 8'd1; a1.right = 8'd2; r.in = a1.out; r.write_en = 1'd1; g1[done] = r.done; }
           group g2 { a2.left = r.out; a2.right = 8'd2; s.in = a2.out; s.write_en = 1'd1; g2[done] = s.done; }
         }
         control { seq { g1; g2; } } }",
    )
    .unwrap();
    let s = pass(opt::SHARE, &p);
    assert!(s.components[0].cell("a2").is_none());
    assert_eq!(run(&s).final_state.registers["s"], 5);
}

const PROMOTABLE: &str = "component main() -> () {
  cells { reg = std_reg(32); r2 = std_reg(32); }
  wires {
    group g { reg.in = 32'd10; reg.write_en = 1'd1; g[done] = reg.done; }
    group h { r2.in = reg.out; r2.write_en = 1'd1; h[done] = r2.done; }
  }
  control { seq { g; h; } }
}";

#[test]
fn infer_and_promote_register_group() {
    let p = parse(PROMOTABLE).unwrap();
    let i = pass(opt::INFER, &p);
    let c = &i.components[0];
    assert_eq!(c.group("g").unwrap().attributes.static_hint(), Some(1));
    assert_eq!(c.control.attributes.static_hint(), Some(2));
    let pr = pass(opt::PROMOTE, &i);
    let c = &pr.components[0];
    assert!(c.groups.is_empty());
    let g = print_static_group(c.static_group("g").unwrap());
    assert_eq!(
        g.split_whitespace().collect::<Vec<_>>().join(" "),
        "static<1> group g { reg.in = 32'd10; reg.write_en = 1'd1; }"
    );
    let (a, b) = (run(&p), run(&pr));
    assert_eq!(a.final_state, b.final_state);
    // Dynamic: two groups of one cycle plus a done cycle each. Static: 2 + 1.
    assert_eq!(a.cycles, 4);
    assert_eq!(b.cycles, 3);
}

#[test]
fn promotion_respects_max_cycles_and_threshold() {
    let src = "component main() -> () {
      cells { r = std_reg(8); }
      wires { group g { r.in = 8'd1; r.write_en = 1'd1; g[done] = r.done; } }
      control { seq { repeat 3000 { g; } repeat 3000 { g; } } }
    }";
    let p = pass(opt::INFER, &parse(src).unwrap());
    assert_eq!(p.components[0].control.attributes.static_hint(), Some(6000));
    let pr = pass(opt::PROMOTE, &p);
    let ControlKind::Seq(kids) = &pr.components[0].control.kind else {
        panic!("root stays dynamic")
    };
    assert!(kids
        .iter()
        .all(|k| matches!(k.kind, ControlKind::StaticRepeat { .. })));

    let single = pass(opt::INFER, &parse(PROMOTABLE).unwrap());
    let cfg = PromotionConfig {
        threshold: 3,
        ..PromotionConfig::default()
    };
    let out = opt::promote(&single, &single.components[0], &cfg);
    assert!(out.static_groups.is_empty());
}

#[test]
fn wrong_user_hint_warns() {
    let src = "component main() -> () {
      cells { r = std_reg(8); }
      wires { @static(3) group g { r.in = 8'd1; r.write_en = 1'd1; g[done] = r.done; } }
      control { g; }
    }";
    let mut w = vec![];
    let out = opt::run_pass(
        opt::INFER,
        &parse(src).unwrap(),
        &PromotionConfig::default(),
        &mut w,
    )
    .unwrap();
    assert_eq!(w.len(), 1);
    assert!(w[0].message.contains("@static(3)"));
    assert_eq!(
        out.components[0]
            .group("g")
            .unwrap()
            .attributes
            .static_hint(),
        Some(1)
    );
}

#[test]
fn while_is_never_annotated() {
    let src = "component main() -> () {
      cells { r = std_reg(1); }
      wires { group g { r.in = 1'd0; r.write_en = 1'd1; g[done] = r.done; } }
      control { while r.out { g; } }
    }";
    let p = pass(opt::INFER, &parse(src).unwrap());
    assert_eq!(p.components[0].control.attributes.static_hint(), None);
}

#[test]
fn compaction_keeps_lockstep_with_static_par_siblings() {
    let shared = pass(opt::SHARE, &fixture("share_static.uil"));
    let c = pass(opt::COMPACT, &shared);
    assert_eq!(c, shared);
    assert_eq!(run(&c).final_state.registers["r2"], 30);
}

#[test]
fn timed_prefix_of_dynamic_seq_becomes_one_island() {
    let p = fixture("quotient_dynamic.uil");
    let pr = pass(opt::PROMOTE, &pass(opt::INFER, &p));
    let ControlKind::Seq(kids) = &pr.components[0].control.kind else {
        panic!()
    };
    assert_eq!(kids.len(), 2);
    assert!(matches!(kids[0].kind, ControlKind::StaticSeq(_)));
    let data = MemoryData::default()
        .with_input("a", 2)
        .with_input("b", 3)
        .with_input("c", 4)
        .with_input("d", 5);
    let (a, b) = (
        simulate(&p, &data, &SimConfig::default()).unwrap(),
        simulate(&pr, &data, &SimConfig::default()).unwrap(),
    );
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(b.final_state.outputs["out"], 4);
    assert!(b.cycles < a.cycles);
}
