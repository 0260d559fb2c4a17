// SPDX-License-Identifier: Apache-2.0

//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary so the
//! lines are visible under `cargo test`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uil::fuzz;
use uil::ir::{ControlKind, LatencyCtx, Program};
use uil::lower::{self, LowerOptions};
use uil::opt::{self, PromotionConfig};
use uil::pipeline::{self, Pipeline, PipelineOptions, PRESETS};
use uil::sim::{simulate, FinalState, MemoryData, SimConfig, Trace};
use uil::text::{parse, print_control, print_static_group};

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

const COMPACTION_BUDGET: Duration = Duration::from_secs(1);
const LATENCY_BUDGET: Duration = Duration::from_secs(10);
const FUZZ_BUDGET: Duration = Duration::from_secs(300);
const LATENCY_ISLANDS: u64 = 200;
const FUZZ_PROGRAMS: u64 = 1000;
const FUZZ_SEED: u64 = 2024;

type Verdict = Result<String, String>;

fn fixture(name: &str) -> Program {
    parse(&std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()).unwrap()
}

fn sim(p: &Program, data: &MemoryData) -> Result<Trace, String> {
    let cfg = SimConfig {
        record_spans: true,
        ..SimConfig::default()
    };
    simulate(p, data, &cfg).map_err(|e| e.to_string())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn compaction_golden() -> Verdict {
    let t0 = Instant::now();
    let p = fixture("compact_chain.uil");
    let mut w = vec![];
    let c = opt::run_pass(opt::COMPACT, &p, &PromotionConfig::default(), &mut w).unwrap();
    let span = |t: &Trace| {
        t.spans
            .iter()
            .find(|s| s.node == 0)
            .map(|s| s.end - s.start)
    };
    let (before, after) = (
        sim(&p, &MemoryData::default())?,
        sim(&c, &MemoryData::default())?,
    );
    let el = t0.elapsed();
    check(span(&before) == Some(22), || {
        format!("original island spans {:?}", span(&before))
    })?;
    check(span(&after) == Some(11), || {
        format!("compacted island spans {:?}", span(&after))
    })?;
    check(before.final_state == after.final_state, || {
        "final state differs".into()
    })?;
    check(el < COMPACTION_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("island 22 -> 11 cycles in {el:.2?}"))
}

fn collapse_goldens() -> Verdict {
    // Fresh-name suffixes are normalized away.
    let norm = |s: &str| {
        squash(s)
            .replace("comp_par_0", "comp_par")
            .replace("comp_seq_0", "comp_seq")
    };
    let expect = [
        (
            "comp_par.uil",
            "static<2> group comp_par { r1.in = %[0:1] ? 1; r1.write_en = %[0:1] ? 1; \
             r2.in = %[0:2] ? 4; r2.write_en = %[0:2] ? 1; } control { comp_par; }",
        ),
        (
            "comp_seq.uil",
            "static<3> group comp_seq { r1.in = %[0:1] ? 1; r1.write_en = %[0:1] ? 1; \
             r2.in = %[1:3] ? 4; r2.write_en = %[1:3] ? 1; } control { comp_seq; }",
        ),
    ];
    for (file, golden) in expect {
        let p = lower::run_pass(lower::COLLAPSE, &fixture(file), LowerOptions::default())
            .unwrap()
            .map_err(|e| e.to_string())?;
        let c = &p.components[0];
        let groups: String = c.static_groups.iter().map(print_static_group).collect();
        let got = format!("{groups}control {{ {} }}", print_control(&c.control).trim());
        check(norm(&got) == norm(golden), || {
            format!("{file}: got `{}`", squash(&got))
        })?;
    }
    Ok("comp_par and comp_seq match textually".into())
}

/// Test-side model of a static island, independent of the IR.
enum Island {
    Leaf(u64),
    Seq(Vec<Island>),
    Par(Vec<Island>),
    If(bool, Box<Island>, Box<Island>),
    Repeat(u64, Box<Island>),
}

impl Island {
    fn latency(&self) -> u64 {
        match self {
            Island::Leaf(l) => *l,
            Island::Seq(cs) => cs.iter().map(Island::latency).sum(),
            Island::Par(cs) => cs.iter().map(Island::latency).max().unwrap_or(0),
            Island::If(_, t, f) => t.latency().max(f.latency()),
            Island::Repeat(n, b) => n * b.latency(),
        }
    }

    fn random(rng: &mut ChaCha8Rng, depth: u32) -> Island {
        if depth == 0 || rng.gen_bool(0.25) {
            return Island::Leaf(rng.gen_range(1..5));
        }
        let kids = |rng: &mut ChaCha8Rng| {
            (0..rng.gen_range(1..4))
                .map(|_| Island::random(rng, depth - 1))
                .collect()
        };
        match rng.gen_range(0..4) {
            0 => Island::Seq(kids(rng)),
            1 => Island::Par(kids(rng)),
            2 => Island::If(
                rng.gen_bool(0.5),
                Box::new(Island::random(rng, depth - 1)),
                Box::new(Island::random(rng, depth - 1)),
            ),
            _ => Island::Repeat(
                rng.gen_range(1..4),
                Box::new(Island::random(rng, depth - 1)),
            ),
        }
    }

    /// Control text; every leaf gets its own group and register so parallel arms never race.
    fn emit(&self, cells: &mut String, groups: &mut String, next: &mut usize) -> String {
        let list = |cs: &[Island], cells: &mut String, groups: &mut String, next: &mut usize| {
            cs.iter()
                .map(|c| format!("{};", c.emit(cells, groups, next)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Island::Leaf(l) => {
                *next += 1;
                let k = *next;
                writeln!(cells, "r{k} = std_reg(8); a{k} = std_add(8);").unwrap();
                writeln!(
                    groups,
                    "static<{l}> group g{k} {{ a{k}.left = r{k}.out; a{k}.right = 8'd1; r{k}.in = a{k}.out; r{k}.write_en = %[{}:{l}] ? 1'd1; }}",
                    l - 1
                )
                .unwrap();
                format!("g{k}")
            }
            Island::Seq(cs) => format!("static seq {{ {} }}", list(cs, cells, groups, next)),
            Island::Par(cs) => format!("static par {{ {} }}", list(cs, cells, groups, next)),
            Island::If(c, t, f) => {
                let (t, f) = (t.emit(cells, groups, next), f.emit(cells, groups, next));
                format!(
                    "static if {}.out {{ {t}; }} else {{ {f}; }}",
                    if *c { "yes" } else { "no" }
                )
            }
            Island::Repeat(n, b) => {
                format!("static repeat {n} {{ {}; }}", b.emit(cells, groups, next))
            }
        }
    }

    fn program(&self) -> Program {
        let (mut cells, mut groups, mut next) = (String::new(), String::new(), 0);
        let control = self.emit(&mut cells, &mut groups, &mut next);
        let src = format!(
            "component main() -> () {{
               cells {{ yes = std_wire(1); no = std_wire(1); clk = std_reg(32); tick = std_add(32); {cells} }}
               wires {{ {groups}
                 yes.in = 1'd1; no.in = 1'd0;
                 tick.left = clk.out; tick.right = 32'd1; clk.in = tick.out; clk.write_en = 1'd1;
               }}
               control {{ {control}; }}
             }}"
        );
        parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
    }
}

fn latency_algebra() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..LATENCY_ISLANDS {
        let island = Island::random(&mut rng, 4);
        let want = island.latency();
        let p = island.program();
        let comp = &p.components[0];
        let got = LatencyCtx::new(&p, comp).latency_of(&comp.control);
        check(got == Some(want), || {
            format!("island {i}: latency_of {got:?}, oracle {want}")
        })?;
        let t = sim(&p, &MemoryData::default())?;
        let span = t
            .spans
            .iter()
            .find(|s| s.node == 0)
            .map(|s| s.end - s.start);
        check(span == Some(want), || {
            format!("island {i}: simulated span {span:?}, oracle {want}")
        })?;
        // One handshake cycle on top of the island; the free-running counter sees every cycle.
        check(t.cycles == want + 1, || {
            format!("island {i}: {} cycles, oracle {want} + 1", t.cycles)
        })?;
        check(t.final_state.registers["clk"] == t.cycles, || {
            format!("island {i}: clock probe {}", t.final_state.registers["clk"])
        })?;
        let low = lower::lower(&p, LowerOptions::default()).map_err(|e| e.to_string())?;
        let lt = sim(&low, &MemoryData::default())?;
        check(lt.cycles == want + 1, || {
            format!(
                "island {i}: lowered {} cycles, oracle {want} + 1",
                lt.cycles
            )
        })?;
        let kept = t
            .final_state
            .registers
            .iter()
            .all(|(k, v)| lt.final_state.registers.get(k) == Some(v));
        check(kept, || format!("island {i}: lowering changed registers"))?;
    }
    let el = t0.elapsed();
    check(el < LATENCY_BUDGET, || format!("took {el:?}"))?;
    Ok(format!(
        "{LATENCY_ISLANDS} islands exact before and after lowering in {el:.2?}"
    ))
}

fn while_program(b: u64, n: u64) -> Program {
    let src = format!(
        "component main() -> () {{
           cells {{ i = std_reg(8); a = std_add(8); lt = std_lt(8); }}
           wires {{
             static<{b}> group body {{ a.left = i.out; a.right = 8'd1; i.in = a.out; i.write_en = %[{}:{b}] ? 1'd1; }}
             lt.left = i.out; lt.right = 8'd{n};
           }}
           control {{ while lt.out {{ body; }} }}
         }}",
        b - 1
    );
    parse(&src).unwrap()
}

fn while_fast_path() -> Verdict {
    let mut rows = vec![];
    for b in [1u64, 2, 5] {
        for n in [10u64, 100] {
            let p = while_program(b, n);
            let run = |fast: bool| -> Result<Trace, String> {
                let low = lower::lower(
                    &p,
                    LowerOptions {
                        while_fastpath: fast,
                    },
                )
                .map_err(|e| e.to_string())?;
                sim(&low, &MemoryData::default())
            };
            let (f, s) = (run(true)?, run(false)?);
            check(
                f.final_state.registers["i"] == n && s.final_state.registers["i"] == n,
                || format!("b={b} n={n}: wrong trip count"),
            )?;
            check(f.cycles <= n * b + 2, || {
                format!("b={b} n={n}: fast path {} > {}", f.cycles, n * b + 2)
            })?;
            check(s.cycles >= n * (b + 1), || {
                format!("b={b} n={n}: naive {} < {}", s.cycles, n * (b + 1))
            })?;
            rows.push(format!("{b}x{n}:{}/{}", f.cycles, s.cycles));
        }
    }
    Ok(format!("fast/naive cycles {}", rows.join(" ")))
}

fn refinement_fuzz() -> Verdict {
    let t0 = Instant::now();
    let r = fuzz::fuzz(FUZZ_SEED, FUZZ_PROGRAMS);
    let el = t0.elapsed();
    if let Some(f) = r.failures.first() {
        return Err(format!(
            "{} failure(s); first: seed {} [{}] {}",
            r.failures.len(),
            f.seed,
            f.pipeline,
            f.reason.lines().next().unwrap_or("")
        ));
    }
    check(r.equal == r.checks && r.not_slower == r.checks, || {
        "counts disagree".into()
    })?;
    check(el < FUZZ_BUDGET, || format!("took {el:?}"))?;
    Ok(format!(
        "{} programs x {} pipelines: {}/{} equal, {}/{} not slower, in {el:.2?}",
        r.trials,
        r.checks / r.trials.max(1),
        r.equal,
        r.checks,
        r.not_slower,
        r.checks
    ))
}

fn sharing() -> Verdict {
    let mults = |p: &Program| {
        p.components[0]
            .cells
            .iter()
            .filter(|c| c.prototype == "std_mult")
            .count()
    };
    let share = |p: &Program| {
        opt::run_pass(opt::SHARE, p, &PromotionConfig::default(), &mut vec![]).unwrap()
    };
    let st = fixture("share_static.uil");
    let dy = fixture("share_dynamic.uil");
    let (s1, d1) = (share(&st), share(&dy));
    check(mults(&st) == 2 && mults(&s1) == 1, || {
        format!("static par: {} -> {}", mults(&st), mults(&s1))
    })?;
    check(mults(&dy) == 2 && mults(&d1) == 2, || {
        format!("dynamic par: {} -> {}", mults(&dy), mults(&d1))
    })?;
    let same = sim(&st, &MemoryData::default())?.final_state
        == sim(&s1, &MemoryData::default())?.final_state;
    check(same, || {
        "sharing changed the static fixture's result".into()
    })?;
    Ok("static par 2 -> 1 multipliers, dynamic par keeps 2".into())
}

fn pipeline_ordering() -> Verdict {
    let mut strict = 0;
    let mut rows = vec![];
    for k in ["dot", "matvec", "stencil", "triangular"] {
        let p = parse(&std::fs::read_to_string(format!("{ROOT}/kernels/{k}.uil")).unwrap())
            .map_err(|e| e.to_string())?;
        let data = MemoryData::from_json(
            &std::fs::read_to_string(format!("{ROOT}/kernels/{k}.json")).unwrap(),
        )
        .unwrap();
        let mut cycles = std::collections::BTreeMap::new();
        let mut first: Option<FinalState> = None;
        for name in PRESETS {
            let out = pipeline::run(
                &Pipeline::preset(name).unwrap(),
                &p,
                &PipelineOptions::default(),
                None,
            )
            .map_err(|e| e.to_string())?;
            let t = sim(&out.program, &data)?;
            match &first {
                None => first = Some(t.final_state.clone()),
                Some(f) => check(f.memories == t.final_state.memories, || {
                    format!("{k}: {name} memories differ from B")
                })?,
            }
            cycles.insert(name, t.cycles);
        }
        let (b, sh, sc) = (cycles["B"], cycles["SH"], cycles["SC"]);
        check(sc <= sh && sh <= b, || {
            format!("{k}: SC {sc}, SH {sh}, B {b}")
        })?;
        strict += usize::from(sc < b);
        rows.push(format!(
            "{k} B {b} SH {sh} SC {sc} ({:.2}x)",
            b as f64 / sc as f64
        ));
    }
    check(strict >= 3, || format!("SC < B on only {strict} kernels"))?;
    Ok(rows.join(", "))
}

fn gapless_repeat() -> Verdict {
    for g in [1u64, 2, 3, 5] {
        for n in [1u64, 4, 7] {
            let total = n * g;
            let src = format!(
                "static<{total}> component main() -> () {{
                   cells {{ r = std_reg(8); add = std_add(8); }}
                   wires {{ static<{g}> group body {{ add.left = r.out; add.right = 8'd1; r.in = add.out; r.write_en = %[{}:{g}] ? 1'd1; }} }}
                   control {{ static repeat {n} {{ body; }} }}
                 }}",
                g - 1
            );
            let p = parse(&src).unwrap();
            let t = sim(&p, &MemoryData::default())?;
            let starts: Vec<u64> = t.activations_of("body").collect();
            let want: Vec<u64> = (0..n).map(|k| k * g).collect();
            check(starts == want, || {
                format!("|g|={g} n={n}: starts {starts:?}")
            })?;
            check(t.cycles == total, || {
                format!("|g|={g} n={n}: {} cycles", t.cycles)
            })?;
            let low = lower::lower(&p, LowerOptions::default()).map_err(|e| e.to_string())?;
            check(
                matches!(
                    low.components[0].control.kind,
                    ControlKind::StaticEnable { .. }
                ),
                || "repeat not collapsed".into(),
            )?;
            let lt = sim(&low, &MemoryData::default())?;
            check(
                lt.cycles == total && lt.final_state.registers["r"] == n,
                || {
                    format!(
                        "|g|={g} n={n}: lowered {} cycles, r = {}",
                        lt.cycles, lt.final_state.registers["r"]
                    )
                },
            )?;
        }
    }
    Ok("n*|g| cycles for |g| in {1,2,3,5}, n in {1,4,7}, before and after FSM lowering".into())
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("compaction golden", compaction_golden),
        ("collapse goldens", collapse_goldens),
        ("latency algebra", latency_algebra),
        ("while fast path", while_fast_path),
        ("refinement fuzz", refinement_fuzz),
        ("cell sharing across static par", sharing),
        ("pipeline ordering on kernels", pipeline_ordering),
        ("fsm gapless re-execution", gapless_repeat),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
