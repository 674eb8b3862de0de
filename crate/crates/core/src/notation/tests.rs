use proptest::prelude::*;

use super::*;
use crate::model::{
    BinOp, Bounds, CellRef, Constraint, Equation, Expr, Func, IndexExpr, LhsIndex, Object, Quantifier, Subscript, TableDecl,
};

fn b(lo: i64, hi: i64) -> Bounds {
    Bounds::new(lo, hi).unwrap()
}

#[test]
fn union_operands_parse() {
    let o = parse_object("{# a[1:1], b[1:1] | a[1]=b[1] #}").unwrap();
    assert_eq!(o.tables.len(), 2);
    assert_eq!(o.tables["a"].dims, vec![b(1, 1)]);
    assert_eq!(o.equations.len(), 1);
    let eq = o.equations.iter().next().unwrap();
    assert_eq!(eq.lhs, vec![LhsIndex::Fixed(1)]);
    assert_eq!(eq.rhs, Expr::element("b", vec![Subscript::At(IndexExpr::Lit(1))]));
}

#[test]
fn scalar_object() {
    let o = parse_object("{# c[] | c[] = 5 #}").unwrap();
    assert_eq!(o.tables["c"].rank(), 0);
    let eq = o.equations.iter().next().unwrap();
    assert_eq!(eq.rhs, Expr::num(5.0));
}

const NEWSTOCK: &str = "{#
  NewStock[ 2000:2010, 1:20 ],
  Builds[ 2000:2010, 1:20 ],
  Demolitions[ 2000:2010, 1:20 ]
|
  NewStock[ all y ] = Builds[ y ] - Demolitions[ y ]
#}";

#[test]
fn newstock_object_with_implicit_trailing_index() {
    let o = parse_object(NEWSTOCK).unwrap();
    assert_eq!(o.tables.len(), 3);
    for t in o.tables.values() {
        assert_eq!(t.dims, vec![b(2000, 2010), b(1, 20)]);
    }
    assert_eq!(o.equations.len(), 1);
    let explicit = parse_object(
        "{# NewStock[2000:2010, 1:20], Builds[2000:2010, 1:20], Demolitions[2000:2010, 1:20] |
            NewStock[all y, all dt] = Builds[y, dt] - Demolitions[y, dt] #}",
    )
    .unwrap();
    assert_eq!(o, explicit);
}

#[test]
fn constrained_quantifiers_and_offsets() {
    let o = parse_object("{# s[2000:2002] | s[2000] = 0, s[y > 2000] = s[y-1] + 1 #}").unwrap();
    let eq = o.equations.iter().find(|e| matches!(e.lhs[0], LhsIndex::Bound(_))).unwrap();
    assert_eq!(eq.lhs[0], LhsIndex::Bound(Quantifier { var: "y".into(), constraint: Constraint::Gt(2000) }));
    assert_eq!(eq.rhs, Expr::binary(BinOp::Add, Expr::element("s", vec![Subscript::At(IndexExpr::var("y", -1))]), Expr::num(1.0)));
}

#[test]
fn semantic_errors() {
    assert!(parse_object("{# a[1:2], a[1:2, 1:3] | #}").unwrap_err().message.contains("different dimension"));
    let e = parse_object("{# a[1:2] | a[all i] = z[i] #}").unwrap_err();
    assert_eq!(e.kind, DiagnosticKind::Semantic);
    assert!(e.message.contains("`z`"));
    assert!(parse_object("{# a[1:2] | a[all i] = a[j] #}").is_err());
    assert!(parse_object("{# a[1:2] | a[all i] = a[i*i] #}").is_err());
}

#[test]
fn syntax_errors_are_positioned_with_expected_tokens() {
    let e = parse_object("{# a[1:2]\n | a[1] = #}").unwrap_err();
    assert_eq!(e.kind, DiagnosticKind::Syntax);
    assert_eq!((e.pos.line, e.pos.col), (2, 11));
    assert!(!e.expected.is_empty());
    let e = parse_object("{# a[1:2] a[1] #}").unwrap_err();
    assert!(e.expected.iter().any(|t| t == "`|`"), "{e}");
}

#[test]
fn program_with_definition_and_call() {
    let p = parse_program("let m(a) be {# t[1:a] | t[all i] = i #}  m(3)").unwrap();
    assert_eq!(p.definitions.len(), 1);
    assert_eq!(p.definitions[0].params, vec!["a"]);
    match p.top.unwrap() {
        ObjectExpr::Call { name, args, .. } => {
            assert_eq!(name, "m");
            assert_eq!(args, vec![IntExpr::Lit(3)]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn model_definition_and_call() {
    let src = "let model( StartYear, EndYear, NumberOfDwellingTypes ) be
{#
  NewStock[ StartYear:EndYear, 1:NumberOfDwellingTypes ],
  Builds[ StartYear:EndYear, 1:NumberOfDwellingTypes ],
  Demolitions[ StartYear:EndYear, 1:NumberOfDwellingTypes ]
|
  NewStock[ all y ] = Builds[ y ] - Demolitions[ y ]
#}
model( 2000, 2040, 20 )";
    let p = parse_program(src).unwrap();
    let ObjectExpr::Call { args, .. } = p.top.as_ref().unwrap() else { panic!() };
    assert_eq!(args, &vec![IntExpr::Lit(2000), IntExpr::Lit(2040), IntExpr::Lit(20)]);
}

#[test]
fn union_spellings() {
    for op in ["union", "\\/", "∪"] {
        let p = parse_program(&format!("{{# a[] | #}} {op} {{# b[] | #}}")).unwrap();
        assert!(matches!(p.top, Some(ObjectExpr::Union(..))), "{op}");
    }
}

#[test]
fn call_checks() {
    assert!(parse_program("m(1)").unwrap_err().message.contains("unknown function"));
    assert!(parse_program("let m(a) be {# | #} m(1, 2)").unwrap_err().message.contains("takes 1"));
    assert!(parse_program("let m() be {# | #} let m() be {# | #}").is_err());
}

#[test]
fn mapping_and_vector_addresses() {
    let p = parse_program(
        "let f(N) be {# Lettings[1:2, 1:N], Sales[1:2, 1:N] | #}
           mapping Lettings to Lets!D8 by yx, Sales to (Lets!D8) + vector(N+1, 0) by yx
         f(20)",
    )
    .unwrap();
    let ObjectExpr::Mapping { clauses, .. } = &p.definitions[0].body else { panic!() };
    assert_eq!(clauses.len(), 2);
    assert!(matches!(clauses[1].target, AddrExpr::Shift { .. }));
}

#[test]
fn formats_parse() {
    let g = parse_format("row( [ Lettings by yx, skip, Sales by yx ] ) @ Lets!D8").unwrap();
    assert_eq!(g.rows.len(), 1);
    assert_eq!(g.rows[0][1], ItemT::Skip(IntExpr::Lit(1), IntExpr::Lit(0)));
    let g = parse_format(
        "grid( [ [ 'STOCK MODEL' ]
        , [ skip(0,3) ]
        , [ 'Years'      , skip, 'Lettings'      , skip, 'Sales'      ]
        , [ 'Years by y' , skip, 'Lettings by yx', skip, 'Sales by y' ]
      ]
      ) @ Lets!A1",
    )
    .unwrap();
    assert_eq!(g.rows.len(), 4);
    assert_eq!(g.rows[3][0], ItemT::Text("Years by y".into()));
}

#[test]
fn sheet_formulas_a1() {
    let f = parse_formula_a1("Sheet1!$A$2 & \"_\" & Sheet1!$C$2 & \"_\"").unwrap();
    assert_eq!(show_sheet_formula(&f), "Sheet1!$A$2 & \"_\" & Sheet1!$C$2 & \"_\"");
    let f = parse_formula_a1("COUNTIF(Combine!$A$1:$A$24, \"Beth_Beer_\")").unwrap();
    assert!(matches!(f, Expr::Call { func: Func::CountIf, .. }));
    assert_eq!(show_sheet_formula(&f), "COUNTIF(Combine!$A$1:$A$24, \"Beth_Beer_\")");
    assert_eq!(show_sheet_formula(&parse_formula_a1("A1+1").unwrap()), "A1+1");
    assert_eq!(show_sheet_formula(&parse_formula_a1("-(2+3)*B7").unwrap()), "-(2+3)*B7");
    assert!(parse_formula_a1("VLOOKUP(A1, B1:C2, 2)").unwrap_err().message.contains("unsupported"));
    assert!(parse_formula_a1("'My Sheet'!B2").is_ok());
}

#[test]
fn sheet_formulas_r1c1() {
    let host = CellAddr::new("S", 4, 2);
    let f = parse_formula_r1c1("RC[-2]+RC[-1]", &host).unwrap();
    let Expr::Binary { lhs, .. } = &f else { panic!() };
    assert_eq!(**lhs, Expr::Cell(CellRef::relative(None, 2, 2)));
    assert_eq!(show_sheet_formula_r1c1(&f, &host), "RC[-2]+RC[-1]");
    let g = parse_formula_r1c1("Other!R1C1*R[1]C", &host).unwrap();
    assert_eq!(show_sheet_formula(&g), "Other!$A$1*D3");
    assert!(parse_formula_r1c1("R[-5]C", &host).is_err());
}

#[test]
fn show_empty_and_sorted() {
    assert_eq!(show_object(&Object::new()), "{# | #}");
    let o = parse_object("{# a[1:10] | a[10]=1, a[1]=1, a[2]=1, a[3]=1, a[4]=1, a[5]=1, a[6]=1, a[7]=1, a[8]=1, a[9]=1 #}").unwrap();
    let text = show_object(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.contains(" = ")).map(|l| l.trim().trim_end_matches(',')).collect();
    assert_eq!(lines.len(), 10);
    let mut sorted = lines.clone();
    sorted.sort();
    assert_eq!(lines, sorted);
    assert_eq!(parse_object(&text).unwrap(), o);
}

#[test]
fn grammar_text_mentions_every_keyword() {
    for kw in ["let", "be", "mapping", "to", "by", "grid", "row", "skip", "vector", "all", "union"] {
        assert!(GRAMMAR.contains(&format!("\"{kw}\"")), "{kw}");
    }
}

// ---- generators ---------------------------------------------------------

pub(crate) fn arb_formula(
    tables: Vec<(String, usize)>,
    vars: Vec<String>,
    qualified: bool,
) -> impl Strategy<Value = crate::model::Formula> {
    let sheet = move || {
        let mut names = vec![Some("S".to_string()), Some("Other sheet".to_string()), Some("R1".to_string())];
        if !qualified {
            names.push(None);
        }
        proptest::sample::select(names)
    };
    let cell = move || {
        (1u32..40, 1u32..60, any::<bool>(), any::<bool>()).prop_map(|(c, r, ca, ra)| CellRef {
            sheet: None,
            col: c,
            row: r,
            col_abs: ca,
            row_abs: ra,
        })
    };
    let mut leaves: Vec<BoxedStrategy<crate::model::Formula>> = vec![
        (-1000i32..1000).prop_map(|v| Expr::num(v as f64 / 4.0)).boxed(),
        "[a-z _\"]{0,6}".prop_map(Expr::Text).boxed(),
        (sheet(), cell()).prop_map(|(s, r)| Expr::Cell(CellRef { sheet: s, ..r })).boxed(),
        (sheet(), cell(), cell())
            .prop_map(|(s, a, b)| Expr::Range(crate::model::CellRange { start: CellRef { sheet: s, ..a }, end: b }))
            .boxed(),
    ];
    if !vars.is_empty() {
        let index = prop_oneof![
            (-3i64..30).prop_map(IndexExpr::Lit),
            (proptest::sample::select(vars.clone()), -2i64..3).prop_map(|(v, o)| IndexExpr::var(v, o)),
        ];
        leaves.push(proptest::sample::select(vars.clone()).prop_map(|v| Expr::Index(IndexExpr::var(v, 0))).boxed());
        if !tables.is_empty() {
            leaves.push(
                proptest::sample::select(tables.clone())
                    .prop_flat_map(move |(t, rank)| {
                        proptest::collection::vec(
                            prop_oneof![
                                3 => index.clone().prop_map(Subscript::At),
                                1 => (index.clone(), index.clone()).prop_map(|(a, b)| Subscript::Span(a, b)),
                            ],
                            rank,
                        )
                        .prop_map(move |ix| Expr::element(t.clone(), ix))
                    })
                    .boxed(),
            );
        }
    } else if !tables.is_empty() {
        leaves.push(
            proptest::sample::select(tables.clone())
                .prop_flat_map(|(t, rank)| {
                    proptest::collection::vec((-3i64..30).prop_map(|v| Subscript::At(IndexExpr::Lit(v))), rank)
                        .prop_map(move |ix| Expr::element(t.clone(), ix))
                })
                .boxed(),
        );
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (
                proptest::sample::select(vec![
                    BinOp::Add,
                    BinOp::Sub,
                    BinOp::Mul,
                    BinOp::Div,
                    BinOp::Concat,
                    BinOp::Eq,
                    BinOp::Ne,
                    BinOp::Lt,
                    BinOp::Ge
                ]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            proptest::collection::vec(inner, 1..3).prop_map(|a| Expr::call(Func::Max, a)),
        ]
    })
}

pub(crate) fn arb_object() -> impl Strategy<Value = Object> {
    let decls = proptest::collection::btree_map(
        "[a-f][a-z0-9]{0,3}".prop_filter("keyword", |n| !crate::model::addr::RESERVED_WORDS.contains(&n.as_str())),
        (0usize..3, -5i64..5, 0i64..6),
        1..4,
    );
    decls.prop_flat_map(|decls| {
        let tables: Vec<(String, usize)> = decls.iter().map(|(n, (r, _, _))| (n.clone(), *r)).collect();
        let eq = proptest::sample::select(tables.clone()).prop_flat_map({
            let tables = tables.clone();
            move |(t, rank)| {
                let lhs = proptest::collection::vec(
                    prop_oneof![
                        (-5i64..10).prop_map(LhsIndex::Fixed),
                        (
                            0usize..6,
                            prop_oneof![Just(Constraint::All), (-5i64..10).prop_map(Constraint::Gt), (-5i64..10).prop_map(Constraint::Le)]
                        )
                            .prop_map(|(_, c)| LhsIndex::Bound(Quantifier { var: String::new(), constraint: c })),
                    ],
                    rank,
                )
                .prop_map(|mut lhs| {
                    let mut n = 0;
                    for ix in &mut lhs {
                        if let LhsIndex::Bound(q) = ix {
                            q.var = ["y", "dt", "k"][n].to_string();
                            n += 1;
                        }
                    }
                    lhs
                });
                let tables = tables.clone();
                lhs.prop_flat_map(move |lhs| {
                    let vars: Vec<String> = lhs.iter().filter_map(|i| i.quantifier().map(|q| q.var.clone())).collect();
                    let t = t.clone();
                    arb_formula(tables.clone(), vars, true).prop_map(move |rhs| Equation::new(t.clone(), lhs.clone(), rhs))
                })
            }
        });
        let decls = decls.clone();
        proptest::collection::vec(eq, 0..5).prop_map(move |eqs| {
            let mut o = Object::new();
            for (n, (rank, lo, ext)) in &decls {
                o.declare(TableDecl::new(n.clone(), vec![b(*lo, lo + ext); *rank])).unwrap();
            }
            for e in eqs {
                o.add_equation(e);
            }
            o
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn show_then_parse_is_identity(o in arb_object()) {
        let text = show_object(&o);
        let back = parse_object(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, o, "{}", text);
    }

    #[test]
    fn parsing_is_total(src in "\\PC{0,60}") {
        let _ = parse_program(&src);
        let _ = parse_object(&src);
        let _ = parse_formula_a1(&src);
        let _ = parse_formula_r1c1(&src, &CellAddr::new("S", 5, 5));
        let _ = parse_format(&src);
    }

    #[test]
    fn parsing_is_total_on_token_soup(
        toks in proptest::collection::vec(proptest::sample::select(vec![
            "{#", "#}", "|", "[", "]", "(", ")", ",", ":", "!", "@", "+", "-", "*", "/", "&", "=", "<>", ">=",
            "a", "all", "let", "be", "grid", "row", "skip", "by", "yx", "to", "mapping", "union", "vector",
            "S!A1", "1", "2.5", "\"t\"", "'q'", "SUM", "\n", "--c\n",
        ]), 0..40)
    ) {
        let src = toks.join(" ");
        let _ = parse_program(&src);
        let _ = parse_formula_a1(&src);
    }

    #[test]
    fn sheet_formula_a1_round_trip(f in arb_formula(vec![], vec![], false)) {
        let text = show_sheet_formula(&f);
        let back = parse_formula_a1(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, f);
    }
}
