// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use uil::ir::*;
use uil::text::{parse, print};

const CELLS: [&str; 4] = ["r0", "r1", "lt", "m"];
const GROUPS: [&str; 2] = ["g0", "g1"];
const STATIC_GROUPS: [&str; 2] = ["s0", "s1"];

fn port_ref() -> impl Strategy<Value = PortRef> {
    prop_oneof![
        (
            0..CELLS.len(),
            prop::sample::select(vec!["in", "out", "left", "write_en"])
        )
            .prop_map(|(c, p)| PortRef::cell(CELLS[c], p)),
        prop::sample::select(vec!["a", "o"]).prop_map(PortRef::this),
        (0..GROUPS.len(), any::<bool>()).prop_map(|(g, go)| {
            PortRef::hole(GROUPS[g], if go { Hole::Go } else { Hole::Done })
        }),
    ]
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        port_ref().prop_map(Atom::Port),
        (0u64..300).prop_map(|v| Atom::Const(Const::bare(v))),
        (1u32..33, 0u64..2).prop_map(|(w, v)| Atom::Const(Const::sized(w, v))),
    ]
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![
        CmpOp::Eq,
        CmpOp::Neq,
        CmpOp::Lt,
        CmpOp::Gt,
        CmpOp::Leq,
        CmpOp::Geq,
    ])
}

fn guard_expr() -> impl Strategy<Value = GuardExpr> {
    let leaf = prop_oneof![
        port_ref().prop_map(GuardExpr::Port),
        (cmp_op(), atom(), atom()).prop_map(|(o, a, b)| GuardExpr::Cmp(o, a, b)),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|g| GuardExpr::Not(Box::new(g))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| GuardExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| GuardExpr::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn guard() -> impl Strategy<Value = Guard> {
    let timing = prop::option::of((0u64..5, 1u64..4).prop_map(|(s, l)| Interval::new(s, s + l)));
    let expr = prop_oneof![Just(GuardExpr::True), guard_expr()];
    (timing, expr).prop_map(|(timing, expr)| Guard { timing, expr })
}

fn assignment() -> impl Strategy<Value = Assignment> {
    (port_ref(), atom(), guard()).prop_map(|(d, s, g)| Assignment::guarded(d, s, g))
}

fn attributes() -> impl Strategy<Value = Attributes> {
    prop::collection::btree_map(
        prop::sample::select(vec!["static", "share", "generated", "bound"]),
        prop::option::of(0u64..10),
        0..3,
    )
    .prop_map(|m| {
        let mut a = Attributes::new();
        for (k, v) in m {
            a.insert(k, v);
        }
        a
    })
}

fn control() -> impl Strategy<Value = Control> {
    let leaf = prop_oneof![
        Just(Control::empty()),
        (0..GROUPS.len()).prop_map(|g| Control::enable(GROUPS[g])),
        (0..STATIC_GROUPS.len()).prop_map(|g| Control::static_enable(STATIC_GROUPS[g])),
        (0usize..2, prop::collection::vec(atom(), 0..2)).prop_map(|(c, srcs)| {
            let bindings = srcs
                .into_iter()
                .enumerate()
                .map(|(i, src)| Binding {
                    port: ["in", "left"][i].to_string(),
                    src,
                })
                .collect();
            ControlKind::Invoke {
                cell: CELLS[c].into(),
                bindings,
            }
            .into()
        }),
        Just(
            ControlKind::StaticInvoke {
                cell: "m".into(),
                bindings: vec![]
            }
            .into()
        ),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let v = prop::collection::vec(inner.clone(), 0..4);
        prop_oneof![
            v.clone().prop_map(Control::seq),
            v.clone().prop_map(Control::par),
            v.clone().prop_map(Control::static_seq),
            v.prop_map(Control::static_par),
            (port_ref(), inner.clone(), inner.clone()).prop_map(|(c, t, f)| Control::if_(c, t, f)),
            (port_ref(), inner.clone(), inner.clone())
                .prop_map(|(c, t, f)| Control::static_if(c, t, f)),
            (port_ref(), inner.clone()).prop_map(|(c, b)| Control::while_(c, b)),
            (0u64..9, inner.clone()).prop_map(|(n, b)| Control::repeat(n, b)),
            (0u64..9, inner).prop_map(|(n, b)| Control::static_repeat(n, b)),
        ]
    })
}

fn program() -> impl Strategy<Value = Program> {
    (
        prop::collection::vec(attributes(), 4),
        prop::collection::vec(prop::collection::vec(assignment(), 0..4), 5),
        prop::collection::vec(1u64..6, 2),
        control(),
        prop::option::of(1u64..20),
    )
        .prop_map(|(cell_attrs, assigns, lats, control, latency)| {
            let mut c = Component::new("main");
            c.inputs.push(PortDef {
                name: "a".into(),
                width: 8,
            });
            c.outputs.push(PortDef {
                name: "o".into(),
                width: 8,
            });
            let protos = [
                ("std_reg", vec![8]),
                ("std_reg", vec![8]),
                ("std_lt", vec![8]),
                ("std_mult", vec![8]),
            ];
            for ((name, (proto, args)), attrs) in CELLS.iter().zip(protos).zip(cell_attrs) {
                let mut cell = Cell::new(*name, proto, args);
                cell.attributes = attrs;
                c.cells.push(cell);
            }
            let mut assigns = assigns.into_iter();
            for g in GROUPS {
                let mut grp = Group::new(g);
                grp.assignments = assigns.next().unwrap();
                c.groups.push(grp);
            }
            for (g, lat) in STATIC_GROUPS.iter().zip(lats) {
                let mut grp = StaticGroup::new(*g, lat);
                grp.assignments = assigns.next().unwrap();
                c.static_groups.push(grp);
            }
            c.continuous = assigns.next().unwrap();
            c.control = control;
            c.latency = latency;
            Program {
                imports: vec!["primitives".into()],
                externs: vec![],
                components: vec![c],
                entry: "main".into(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_print_round_trip(p in program()) {
        let text = print(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &p, "{}", text);
        prop_assert_eq!(print(&back), text);
    }
}

#[test]
fn printing_is_deterministic() {
    let src = include_str!("fixtures/quotient.uil");
    let a = print(&parse(src).unwrap());
    let b = print(&parse(src).unwrap());
    assert_eq!(a, b);
}
