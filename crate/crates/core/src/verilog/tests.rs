use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;

use super::ast::*;
use super::*;
use crate::ir::{free_symbols, Design};
use crate::models;
use crate::semantics::{eval_concrete, Env};

fn eval_prim(p: &PrimitiveSemantics, output: &str, vals: &[(&str, u64)]) -> u64 {
    let mut env = Env::new();
    for port in &p.inputs {
        let v = vals.iter().find(|(n, _)| *n == port.name).map_or(0, |x| x.1);
        env.insert(port.name.clone(), port.width, v).unwrap();
    }
    for param in &p.params {
        let v = vals.iter().find(|(n, _)| *n == param.name).map_or(0, |x| x.1);
        env.insert(param.name.clone(), param.width, v).unwrap();
    }
    let e = &p.output(output).unwrap().expr;
    u64::try_from(eval_concrete(e, &env).unwrap()).unwrap()
}

fn eval_design(d: &Design, output: &str, vals: &[(&str, u64)]) -> u64 {
    let mut env = Env::new();
    for port in &d.inputs {
        let v = vals.iter().find(|(n, _)| *n == port.name).map_or(0, |x| x.1);
        env.insert(port.name.clone(), port.width, v).unwrap();
    }
    u64::try_from(eval_concrete(&d.output(output).unwrap().expr, &env).unwrap()).unwrap()
}

#[test]
fn buf1() {
    let ast = parse("module buf1(input I, output O); assign O = I; endmodule").unwrap();
    assert_eq!(ast.inputs().count(), 1);
    assert_eq!(ast.outputs().count(), 1);
    assert_eq!(ast.assigns.len(), 1);
}

#[test]
fn always_is_unsupported() {
    let src = "module m(input clk, output q);\n  always @(posedge clk) q = 1;\nendmodule";
    match parse(src) {
        Err(VerilogError::Unsupported { loc, construct }) => {
            assert_eq!(construct, "always");
            assert_eq!(loc, Loc::new(2, 3));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unsupported_constructs() {
    for src in [
        "module m(input a, output y); reg r; endmodule",
        "module m(input a, output y); assign y = a && a; endmodule",
        "module m(input a, output y); assign y = 1'bx; endmodule",
        "module m #(parameter MODE = \"FAST\") (input a, output y); endmodule",
        "module m(input signed a, output y); endmodule",
        "module m(input a, output y); sub u(.x(a)); endmodule",
        "`define X 1\nmodule m(input a, output y); endmodule",
        "module m(input [0:3] a, output y); endmodule",
    ] {
        assert!(matches!(parse(src), Err(VerilogError::Unsupported { .. })), "{src}");
    }
}

#[test]
fn syntax_and_declaration_errors() {
    assert!(matches!(
        parse("module m(input a, output y) assign y = a; endmodule"),
        Err(VerilogError::Syntax { .. })
    ));
    assert!(matches!(
        parse("module m(input a, output y); assign y = b; endmodule"),
        Err(VerilogError::Undeclared { .. })
    ));
    assert!(matches!(
        parse("module m(input a, output y); wire a; endmodule"),
        Err(VerilogError::Redeclared { .. })
    ));
    assert!(matches!(
        parse("module m(input [3:0] a, output y); assign y = a[4]; endmodule"),
        Err(VerilogError::SelectOutOfRange { .. })
    ));
    assert!(matches!(
        parse("module m(input a, output y); assign a = y; endmodule"),
        Err(VerilogError::Syntax { .. })
    ));
}

#[test]
fn lut6_ast() {
    let ast = parse(models::LUT6).unwrap();
    assert_eq!(ast.inputs().count(), 6);
    assert_eq!(ast.params.len(), 1);
    assert_eq!(ast.params[0].name, "INIT");
    assert_eq!(ast.params[0].width, 64);
}

#[test]
fn ranges_are_normalized() {
    let ast = parse("module m(input [7:4] a, output [1:0] y); assign y = a[6:5]; endmodule").unwrap();
    assert_eq!(ast.ports[0].width, 4);
    match &ast.assigns[0].rhs {
        VExpr::Slice { msb, lsb, .. } => assert_eq!((*msb, *lsb), (2, 1)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn lut2_free_symbols_and_and_table() {
    let p = import_primitive(models::LUT2).unwrap();
    let (vars, holes) = free_symbols(&p.outputs[0].expr);
    let expect: BTreeMap<_, _> = [("A".to_string(), 1), ("B".to_string(), 1), ("INIT".to_string(), 4)].into();
    assert_eq!(vars, expect);
    assert!(holes.is_empty());
    for a in 0..2 {
        for b in 0..2 {
            let z = eval_prim(&p, "Z", &[("A", a), ("B", b), ("INIT", 8)]);
            assert_eq!(z, a & b);
        }
    }
}

#[test]
fn lut_models_index_init() {
    for (src, k) in [(models::LUT2, 2u32), (models::LUT4, 4), (models::LUT6, 6)] {
        let p = import_primitive(src).unwrap();
        assert_eq!(p.inputs.len(), k as usize);
        assert_eq!(p.params[0].width, 1 << k);
        let out = p.outputs[0].name.clone();
        let mut seed = 0x1234_5678_9abc_def0u64;
        for _ in 0..8 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let init = if k == 6 { seed } else { seed & ((1u64 << (1 << k)) - 1) };
            for row in 0..(1u64 << k) {
                let mut vals: Vec<(&str, u64)> =
                    p.inputs.iter().enumerate().map(|(i, port)| (port.name.as_str(), (row >> i) & 1)).collect();
                vals.push(("INIT", init));
                assert_eq!(eval_prim(&p, &out, &vals), (init >> row) & 1);
            }
        }
    }
}

#[test]
fn carry_cell_is_a_full_adder() {
    let p = import_primitive(models::CARRY1).unwrap();
    for row in 0..8u64 {
        let (a, b, c) = (row & 1, (row >> 1) & 1, row >> 2);
        let vals = [("A", a), ("B", b), ("CIN", c)];
        let total = a + b + c;
        assert_eq!(eval_prim(&p, "S", &vals), total & 1);
        assert_eq!(eval_prim(&p, "COUT", &vals), total >> 1);
    }
}

#[test]
fn mult_cell() {
    let p = import_primitive(models::MULT8X8).unwrap();
    assert_eq!(eval_prim(&p, "P", &[("A", 3), ("B", 5)]), 15);
    assert_eq!(eval_prim(&p, "P", &[("A", 255), ("B", 255)]), 65025);
}

#[test]
fn bound_mode() {
    let ast = parse(models::LUT2).unwrap();
    let bind = |v: u32| ParamMode::Bound([("INIT".to_string(), BigUint::from(v))].into());
    let d = elaborate(&ast, &bind(6)).unwrap().into_design().unwrap();
    for row in 0..4u64 {
        assert_eq!(eval_design(&d, "Z", &[("A", row & 1), ("B", row >> 1)]), (6 >> row) & 1);
    }
    assert!(matches!(elaborate(&ast, &bind(16)), Err(VerilogError::Ir(_))));
    let unknown = ParamMode::Bound([("NOPE".to_string(), BigUint::from(1u32))].into());
    assert!(matches!(elaborate(&ast, &unknown), Err(VerilogError::UnknownParam(_))));
}

#[test]
fn sizing_extends_to_lhs() {
    let d = import_design(
        "module add(input [3:0] a, input [3:0] b, input cin, output [3:0] s, output cout);
           wire [4:0] t;
           assign t = a + b + cin;
           assign s = t[3:0];
           assign cout = t[4];
         endmodule",
    )
    .unwrap();
    for a in 0..16 {
        for b in 0..16 {
            for c in 0..2 {
                let v = [("a", a), ("b", b), ("cin", c)];
                assert_eq!(eval_design(&d, "s", &v), (a + b + c) & 15);
                assert_eq!(eval_design(&d, "cout", &v), (a + b + c) >> 4);
            }
        }
    }
}

#[test]
fn comparisons_use_mutual_width() {
    let d = import_design(
        "module c(input [3:0] a, input [1:0] b, output lt, output eq, output ne, output [2:0] m);
           assign lt = b < a;
           assign eq = a == {2'b00, b};
           assign ne = a != 4'd3;
           assign m = a[1] ? {b, 1'b1} : 3'b010;
         endmodule",
    )
    .unwrap();
    for a in 0..16u64 {
        for b in 0..4u64 {
            let v = [("a", a), ("b", b)];
            assert_eq!(eval_design(&d, "lt", &v), u64::from(b < a));
            assert_eq!(eval_design(&d, "eq", &v), u64::from(a == b));
            assert_eq!(eval_design(&d, "ne", &v), u64::from(a != 3));
            let m = if (a >> 1) & 1 == 1 { (b << 1) | 1 } else { 2 };
            assert_eq!(eval_design(&d, "m", &v), m);
        }
    }
}

#[test]
fn reductions_replication_and_shifts() {
    let d = import_design(
        "module r(input [3:0] a, input [1:0] n, output x, output o, output [7:0] rep, output [3:0] sh, output [3:0] neg);
           assign x = ^a;
           assign o = &a | ~|a;
           assign rep = {2{a[1:0], 2'b10}};
           assign sh = (a << n) >> 1;
           assign neg = -a;
         endmodule",
    )
    .unwrap();
    for a in 0..16u64 {
        for n in 0..4u64 {
            let v = [("a", a), ("n", n)];
            assert_eq!(eval_design(&d, "x", &v), u64::from(a.count_ones() % 2));
            assert_eq!(eval_design(&d, "o", &v), u64::from(a == 15 || a == 0));
            let half = ((a & 3) << 2) | 2;
            assert_eq!(eval_design(&d, "rep", &v), (half << 4) | half);
            assert_eq!(eval_design(&d, "sh", &v), ((a << n) & 15) >> 1);
            assert_eq!(eval_design(&d, "neg", &v), (16 - a) & 15);
        }
    }
}

#[test]
fn partial_drivers_merge() {
    let d = import_design(
        "module p(input [1:0] a, output [3:0] y);
           assign y[3:2] = a;
           assign y[1] = a[0];
           assign y[0] = 1'b1;
         endmodule",
    )
    .unwrap();
    for a in 0..4u64 {
        assert_eq!(eval_design(&d, "y", &[("a", a)]), (a << 2) | ((a & 1) << 1) | 1);
    }
}

#[test]
fn driver_errors() {
    let cyc = "module c(input a, output y); wire p, q; assign p = q & a; assign q = p; assign y = p; endmodule";
    match import_design(cyc) {
        Err(VerilogError::CombinationalCycle(names)) => {
            assert!(names.contains(&"p".to_string()) && names.contains(&"q".to_string()));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        import_design("module c(input a, output [1:0] y); assign y[0] = a; endmodule"),
        Err(VerilogError::Undriven { bit: 1, .. })
    ));
    assert!(matches!(
        import_design("module c(input a, output y); assign y = a; assign y = ~a; endmodule"),
        Err(VerilogError::MultipleDrivers { bit: 0, .. })
    ));
}

#[test]
fn netlist_inlines_library_semantics() {
    let lib = models::default_library();
    let src = "module top (input a, input b, input cin, output s, output cout);
                 wire c;
                 CARRY1 inst_0 (.A(a), .B(b), .CIN(cin), .S(s), .COUT(cout));
               endmodule";
    let d = import_netlist(src, &lib).unwrap();
    for row in 0..8u64 {
        let v = [("a", row & 1), ("b", (row >> 1) & 1), ("cin", row >> 2)];
        let t = (row & 1) + ((row >> 1) & 1) + (row >> 2);
        assert_eq!(eval_design(&d, "s", &v), t & 1);
        assert_eq!(eval_design(&d, "cout", &v), t >> 1);
    }
    let lut = "module top (input a, input b, output y); LUT2 #(.INIT(4'h6)) inst_0 (.A(a), .B(b), .Z(y)); endmodule";
    let d = import_netlist(lut, &lib).unwrap();
    for row in 0..4u64 {
        assert_eq!(eval_design(&d, "y", &[("a", row & 1), ("b", row >> 1)]), (6 >> row) & 1);
    }
    let missing = "module top (input a, output y); LUT2 inst_0 (.A(a), .Z(y)); endmodule";
    assert!(matches!(import_netlist(missing, &lib), Err(VerilogError::UnconnectedPin { .. })));
    let unknown = "module top (input a, output y); LUT9 inst_0 (.A(a), .Z(y)); endmodule";
    assert!(matches!(import_netlist(unknown, &lib), Err(VerilogError::UnknownPrimitive { .. })));
}

#[test]
fn print_round_trips() {
    let mut sources: Vec<&str> = models::ALL.iter().map(|(_, s)| *s).collect();
    let extra = "module x #(parameter [7:0] K = 8'h2A) (input [3:0] a, input b, output [3:0] y, output z);
                   wire [1:0] w;
                   assign w = {2{b}};
                   assign y[3:1] = (a[3:1] + K[2:0]) ^ {w, b};
                   assign y[0] = a[b];
                   assign z = b ? ~&a : (a < 4'd5) == (a != 3);
                 endmodule";
    sources.push(extra);
    for src in sources {
        let ast = parse(src).unwrap();
        let printed = print_module(&ast);
        assert_eq!(parse(&printed).unwrap(), ast, "{printed}");
    }
    let net = "module top (input a, input b, output y);
                 wire [1:0] t;
                 LUT2 #(.INIT(4'h8)) inst_0 (.A(a), .B(1'b0), .Z(t[0]));
                 assign y = t[0];
               endmodule";
    let ast = parse_netlist(net).unwrap();
    assert_eq!(parse_netlist(&print_module(&ast)).unwrap(), ast);
    assert_eq!(vec![ast.instances[0].params[0].width], vec![Some(4)]);
}
