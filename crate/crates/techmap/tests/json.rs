use proptest::prelude::*;
use techmap::json::*;
use techmap_core::fuzz::{random_case, FuzzConfig};
use techmap_core::ir::{self, validate};
use techmap_core::rng::Lcg;
use techmap_core::verilog::import_design;
use techmap_core::{models, Expr, IrError};

const ADDER: &str = include_str!("../../../designs/add4.v");

#[test]
fn adder_design_round_trips() {
    let d = import_design(ADDER).unwrap();
    let text = design_to_json(&d);
    assert_eq!(design_from_json(&text).unwrap(), d);
    assert_eq!(design_to_json(&design_from_json(&text).unwrap()), text);
}

#[test]
fn constants_must_fit() {
    match expr_from_json(r#"{"op":"const","width":4,"value":"16"}"#) {
        Err(JsonError::Invalid(IrError::ConstOutOfRange { width: 4, .. })) => {}
        other => panic!("{other:?}"),
    }
    let e = expr_from_json(r#"{"op":"const","width":4,"value":"15"}"#).unwrap();
    assert_eq!(e.as_const().unwrap(), &15u32.into());
}

#[test]
fn and_of_four_bit_vars() {
    let e = expr_from_json(
        r#"{"op":"and","args":[{"op":"var","name":"a","width":4},{"op":"var","name":"b","width":4}]}"#,
    )
    .unwrap();
    assert_eq!(e.width(), 4);
    assert!(matches!(
        expr_from_json(r#"{"op":"and","args":[{"op":"var","name":"a","width":4},{"op":"var","name":"b","width":5}]}"#),
        Err(JsonError::Invalid(IrError::WidthMismatch { .. }))
    ));
}

#[test]
fn decoding_errors_are_located() {
    match expr_from_json("{\n  \"op\": \"var\",\n  oops") {
        Err(JsonError::Syntax { line: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
    match expr_from_json(r#"{"op":"not","args":[{"op":"frob"}]}"#) {
        Err(JsonError::Schema { path, .. }) => assert_eq!(path, "$.args[0]"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        expr_from_json(r#"{"op":"const","width":4,"value":"0x3"}"#),
        Err(JsonError::Schema { .. })
    ));
    assert!(matches!(
        expr_from_json(r#"{"op":"add","args":[{"op":"var","name":"a","width":4}]}"#),
        Err(JsonError::Schema { .. })
    ));
    assert!(matches!(
        design_from_json(r#"{"name":"d","inputs":[],"outputs":[{"name":"y","expr":{"op":"hole","name":"h","width":1}}]}"#),
        Err(JsonError::Invalid(IrError::HoleNotAllowed(_)))
    ));
}

#[test]
fn encoding_uses_documented_field_names() {
    let e = Expr::extract(1, 0, Expr::zext(Expr::constant(2, 3u32), 4));
    let v: serde_json::Value = serde_json::from_str(&expr_to_json(&e)).unwrap();
    assert_eq!(
        v,
        serde_json::json!({"op":"extract","hi":1,"lo":0,"args":[
            {"op":"zext","width":4,"args":[{"op":"const","width":2,"value":"3"}]}
        ]})
    );
}

#[test]
fn primitives_and_descriptors_round_trip() {
    let lib = models::default_library();
    for p in lib.primitives() {
        let text = primitive_to_json(p);
        assert_eq!(&primitive_from_json(&text).unwrap(), p);
        if let Some(d) = lib.descriptor(&p.name) {
            assert_eq!(&descriptor_from_json(&descriptor_to_json(d)).unwrap(), d);
        }
    }
    assert!(descriptor_from_json(r#"{"primitive":"X","roles":{"carry":"C"}}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn expressions_round_trip(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let case = random_case(&mut rng, &FuzzConfig::default());
        let back = expr_from_json(&expr_to_json(&case.expr)).unwrap();
        prop_assert_eq!(&back, &case.expr);
        let env = ir::ports_env(&case.vars);
        prop_assert_eq!(validate(&back, &env, false), validate(&case.expr, &env, false));
    }
}
