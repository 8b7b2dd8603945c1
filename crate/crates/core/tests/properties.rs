//! Randomized invariants of the IR, the evaluator and the brute-force solver.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use proptest::prelude::*;
use techmap_core::fuzz::{random_case, random_env, random_expr, FuzzConfig};
use techmap_core::ir::{substitute, BinaryOp, SymbolKind, UnaryOp};
use techmap_core::rng::Lcg;
use techmap_core::semantics::{eval_concrete, truth_table};
use techmap_core::synthesis::{solve_brute_force, BruteLimits, SynthesisProblem};
use techmap_core::templates::{instantiate, select_candidate, selector_width, Source, TemplateKind, TemplateOptions};
use techmap_core::{models, Design, Env, Expr, ExprKind, OutputDef, Port};

fn mask(w: u32) -> u128 {
    if w >= 128 {
        u128::MAX
    } else {
        (1u128 << w) - 1
    }
}

/// Direct interpreter on machine integers; widths stay well below 64 here.
fn reference(e: &Expr, env: &BTreeMap<String, u128>) -> u128 {
    let w = e.width();
    let m = mask(w);
    match e.kind() {
        ExprKind::Var(n) => env[n],
        ExprKind::Hole(n) => panic!("hole {n}"),
        ExprKind::Const(v) => v.iter_u64_digits().next().unwrap_or(0) as u128,
        ExprKind::Unary(op, a) => {
            let x = reference(a, env);
            let aw = a.width();
            match op {
                UnaryOp::Not => !x & m,
                UnaryOp::Neg => x.wrapping_neg() & m,
                UnaryOp::RedAnd => (x == mask(aw)) as u128,
                UnaryOp::RedOr => (x != 0) as u128,
                UnaryOp::RedXor => (x.count_ones() & 1) as u128,
            }
        }
        ExprKind::Binary(op, a, b) => {
            let (x, y) = (reference(a, env), reference(b, env));
            match op {
                BinaryOp::And => x & y,
                BinaryOp::Or => x | y,
                BinaryOp::Xor => x ^ y,
                BinaryOp::Add => x.wrapping_add(y) & m,
                BinaryOp::Sub => x.wrapping_sub(y) & m,
                BinaryOp::Mul => x.wrapping_mul(y) & m,
                BinaryOp::Shl => {
                    if y >= u128::from(w) {
                        0
                    } else {
                        (x << y) & m
                    }
                }
                BinaryOp::LShr => {
                    if y >= u128::from(w) {
                        0
                    } else {
                        x >> y
                    }
                }
                BinaryOp::Eq => (x == y) as u128,
                BinaryOp::Ult => (x < y) as u128,
            }
        }
        ExprKind::Mux(c, a, b) => {
            if reference(c, env) == 1 {
                reference(a, env)
            } else {
                reference(b, env)
            }
        }
        ExprKind::Extract { lo, arg, .. } => (reference(arg, env) >> lo) & m,
        ExprKind::Concat(hi, lo) => (reference(hi, env) << lo.width()) | reference(lo, env),
        ExprKind::ZeroExt(a) => reference(a, env),
        ExprKind::SignExt(a) => {
            let x = reference(a, env);
            if x >> (a.width() - 1) & 1 == 1 {
                (x | !mask(a.width())) & m
            } else {
                x
            }
        }
    }
}

fn small(env: &Env) -> BTreeMap<String, u128> {
    env.iter()
        .map(|(n, _, v)| (n.to_string(), v.iter_u64_digits().next().unwrap_or(0) as u128))
        .collect()
}

fn big(v: u128) -> BigUint {
    BigUint::from(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eval_matches_reference_and_respects_width(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let case = random_case(&mut rng, &FuzzConfig::default());
        let got = eval_concrete(&case.expr, &case.env).unwrap();
        prop_assert!(got.bits() <= u64::from(case.expr.width()));
        prop_assert_eq!(got, big(reference(&case.expr, &small(&case.env))));
    }

    #[test]
    fn substitution_lemma(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let cfg = FuzzConfig::default();
        let case = random_case(&mut rng, &cfg);
        let mut bindings = BTreeMap::new();
        for v in &case.vars {
            if rng.chance(1, 2) {
                let depth = rng.below(3);
                bindings.insert(v.name.clone(), random_expr(&mut rng, &case.vars, v.width, depth, &cfg));
            }
        }
        let substituted = substitute(&case.expr, &bindings, SymbolKind::Vars).unwrap();
        let mut extended = case.env.clone();
        for (name, e) in &bindings {
            extended.insert(name.clone(), e.width(), eval_concrete(e, &case.env).unwrap()).unwrap();
        }
        prop_assert_eq!(
            eval_concrete(&substituted, &case.env).unwrap(),
            eval_concrete(&case.expr, &extended).unwrap()
        );
    }

    #[test]
    fn truth_table_rows_match_pointwise_eval(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let cfg = FuzzConfig { max_vars: 3, max_width: 3, max_depth: 4 };
        let case = random_case(&mut rng, &cfg);
        let w2 = 1 + rng.below(4);
        let second = random_expr(&mut rng, &case.vars, w2, 3, &cfg);
        let outputs = vec![OutputDef::new("x", case.expr.clone()), OutputDef::new("y", second)];
        let table = truth_table(&case.vars, &outputs, 16).unwrap();
        let bits: u32 = case.vars.iter().map(|p| p.width).sum();
        prop_assert_eq!(table.rows.len(), 1usize << bits);
        let mut prev: Option<Vec<BigUint>> = None;
        for row in &table.rows {
            let env = Env::from_ports(&case.vars, &row.inputs).unwrap();
            let small_env = small(&env);
            for (o, v) in outputs.iter().zip(&row.outputs) {
                prop_assert_eq!(v, &big(reference(&o.expr, &small_env)));
            }
            // rows ascend with the first port most significant
            if let Some(p) = &prev {
                prop_assert!(p < &row.inputs);
            }
            prev = Some(row.inputs.clone());
        }
    }

    #[test]
    fn selector_clamps_to_last_candidate(m in 1usize..9, sel in 0u32..64) {
        let cands: Vec<Source> = (0..m).map(|i| Source::Signal { input: "x".into(), bit: i as u32 }).collect();
        let w = selector_width(m);
        prop_assert!(w >= 1 && (1usize << w) >= m);
        prop_assert!(w == 1 || (1usize << (w - 1)) < m);
        let picked = select_candidate(&cands, &BigUint::from(sel));
        let expect = &cands[(sel as usize).min(m - 1)];
        prop_assert_eq!(picked, expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn brute_force_is_deterministic_and_sound(table in 0u32..256) {
        let lib = models::default_library().subset(["LUT4"]);
        let inputs: Vec<Port> = ["a", "b", "c"].iter().map(|n| Port::new(*n, 1)).collect();
        let idx = Expr::concat(Expr::var("a", 1), Expr::concat(Expr::var("b", 1), Expr::var("c", 1)));
        let f = Expr::extract(0, 0, Expr::binary(BinaryOp::LShr, Expr::constant(8, table), Expr::zext(idx, 8)));
        let design = Design { name: "f".into(), inputs, outputs: vec![OutputDef::new("y", f)] };
        let opts = TemplateOptions { pinned: true, ..TemplateOptions::default() };
        let sketch = instantiate(TemplateKind::LutSingle, &design, &lib, &opts).unwrap();
        let p = SynthesisProblem::from_sketch(&design, &sketch, &lib).unwrap();
        let a = solve_brute_force(&p, &BruteLimits::default()).unwrap();
        let b = solve_brute_force(&p, &BruteLimits::default()).unwrap();
        prop_assert_eq!(&a.holes, &b.holes);
        let exprs = p.instantiate(&a.holes).unwrap();
        let mut rng = Lcg::new(u64::from(table));
        for _ in 0..8 {
            let env = random_env(&mut rng, &design.inputs);
            prop_assert_eq!(
                eval_concrete(&exprs[0].expr, &env).unwrap(),
                eval_concrete(&design.outputs[0].expr, &env).unwrap()
            );
        }
    }
}
