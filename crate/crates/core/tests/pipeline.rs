// SPDX-License-Identifier: Apache-2.0

use uil::ir::Program;
use uil::pipeline::{self, Pipeline, PipelineError, PipelineOptions, StatsReport, PRESETS};
use uil::sim::{simulate, MemoryData, SimConfig};
use uil::text::parse;

fn fixture(name: &str) -> Program {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn preset_expansion_golden() {
    let lower = ["collapse-static", "static-fsm", "static-wrapper"];
    let expect: [(&str, &[&str]); 5] = [
        ("B", &[]),
        ("SH", &["infer-static", "static-promote", "cell-share"]),
        (
            "SC",
            &["infer-static", "static-promote", "schedule-compaction"],
        ),
        (
            "SH-SC",
            &[
                "infer-static",
                "static-promote",
                "cell-share",
                "schedule-compaction",
            ],
        ),
        (
            "SC-SH",
            &[
                "infer-static",
                "static-promote",
                "schedule-compaction",
                "cell-share",
            ],
        ),
    ];
    for (name, front) in expect {
        let p = Pipeline::preset(name).unwrap();
        let want: Vec<String> = front.iter().chain(&lower).map(|s| s.to_string()).collect();
        assert_eq!(p.passes, want, "{name}");
        assert_eq!(p.name, name);
    }
    assert_eq!(
        Pipeline::preset("X"),
        Err(PipelineError::UnknownPreset("X".into()))
    );
    assert_eq!(
        Pipeline::custom(&["cell-share", "nope"]),
        Err(PipelineError::UnknownPass("nope".into()))
    );
}

#[test]
fn every_preset_preserves_fixtures() {
    for f in [
        "quotient.uil",
        "quotient_dynamic.uil",
        "mult_and_store.uil",
        "static_if.uil",
        "compact_chain.uil",
        "share_static.uil",
    ] {
        let p = fixture(f);
        let base = simulate(&p, &MemoryData::default(), &SimConfig::default()).unwrap();
        for name in PRESETS {
            let pl = Pipeline::preset(name).unwrap();
            let out = pipeline::run(&pl, &p, &PipelineOptions::default(), None).unwrap();
            let t = simulate(&out.program, &MemoryData::default(), &SimConfig::default()).unwrap();
            assert!(
                base.final_state.observable_eq(&t.final_state),
                "{f} under {name}"
            );
        }
    }
}

#[test]
fn emit_after_snapshot_and_stats() {
    let p = fixture("quotient.uil");
    let pl = Pipeline::preset("B").unwrap();
    let out = pipeline::run(
        &pl,
        &p,
        &PipelineOptions::default(),
        Some("collapse-static"),
    )
    .unwrap();
    let snap = out.snapshot.unwrap();
    assert_eq!(snap.components[0].static_groups.len(), 1);
    assert_eq!(snap.components[0].static_groups[0].latency, 4);

    let s = StatsReport::new(&pl, &out.program, Some(5));
    assert_eq!(s.version, 1);
    assert_eq!(s.static_groups, 1);
    assert_eq!(s.fsm_bits, 2);
    assert_eq!(s.wrappers, 1);
    assert_eq!(s.cells_total, s.cells_by_prototype.values().sum::<usize>());
    assert_eq!(s.cells_total - s.datapath_cells, 3);
    let json = serde_json::to_value(&s).unwrap();
    let keys: Vec<&str> = json
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(
        keys,
        [
            "cells_by_prototype",
            "cells_total",
            "cycles",
            "datapath_cells",
            "fsm_bits",
            "groups",
            "passes",
            "pipeline",
            "static_groups",
            "version",
            "wrappers"
        ]
    );
}
