//! Seeded generators of well-formed expressions and environments, used by
//! randomized cross-checks.

use alloc::format;
use alloc::vec::Vec;

use crate::ir::{BinaryOp, Expr, Port, UnaryOp};
use crate::rng::Lcg;
use crate::semantics::Env;

/// Shape limits for generated cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub max_vars: u32,
    pub max_width: u32,
    pub max_depth: u32,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_vars: 4,
            max_width: 12,
            max_depth: 5,
        }
    }
}

/// A generated expression together with its variables and one environment.
#[derive(Debug, Clone)]
pub struct Case {
    pub vars: Vec<Port>,
    pub expr: Expr,
    pub env: Env,
}

pub fn random_vars(rng: &mut Lcg, cfg: &FuzzConfig) -> Vec<Port> {
    let n = 1 + rng.below(cfg.max_vars);
    (0..n).map(|i| Port::new(format!("v{i}"), 1 + rng.below(cfg.max_width))).collect()
}

pub fn random_env(rng: &mut Lcg, vars: &[Port]) -> Env {
    let mut env = Env::new();
    for v in vars {
        env.insert(v.name.clone(), v.width, rng.bits(v.width)).expect("bits fit the width");
    }
    env
}

pub fn random_case(rng: &mut Lcg, cfg: &FuzzConfig) -> Case {
    let vars = random_vars(rng, cfg);
    let width = 1 + rng.below(cfg.max_width);
    let expr = random_expr(rng, &vars, width, cfg.max_depth, cfg);
    let env = random_env(rng, &vars);
    Case { vars, expr, env }
}

fn leaf(rng: &mut Lcg, vars: &[Port], width: u32) -> Expr {
    let v = &vars[rng.below(vars.len() as u32) as usize];
    let var = Expr::var(v.name.clone(), v.width);
    match rng.below(3) {
        0 => Expr::constant(width, rng.bits(width)),
        _ if v.width == width => var,
        _ if v.width > width => {
            let lo = rng.below(v.width - width + 1);
            Expr::extract(lo + width - 1, lo, var)
        }
        _ if rng.chance(1, 2) => Expr::zext(var, width),
        _ => Expr::sext(var, width),
    }
}

/// A well-formed expression of exactly `width` bits over `vars`.
pub fn random_expr(rng: &mut Lcg, vars: &[Port], width: u32, depth: u32, cfg: &FuzzConfig) -> Expr {
    if depth == 0 || rng.chance(1, 5) {
        return leaf(rng, vars, width);
    }
    let d = depth - 1;
    let sub = |rng: &mut Lcg, w: u32| random_expr(rng, vars, w, d, cfg);
    match rng.below(9) {
        0 => {
            let op = [UnaryOp::Not, UnaryOp::Neg][rng.below(2) as usize];
            Expr::unary(op, sub(rng, width))
        }
        1 | 2 => {
            let ops = [
                BinaryOp::And,
                BinaryOp::Or,
                BinaryOp::Xor,
                BinaryOp::Add,
                BinaryOp::Sub,
                BinaryOp::Mul,
            ];
            let op = ops[rng.below(ops.len() as u32) as usize];
            let a = sub(rng, width);
            Expr::binary(op, a, sub(rng, width))
        }
        3 => {
            let op = [BinaryOp::Shl, BinaryOp::LShr][rng.below(2) as usize];
            let a = sub(rng, width);
            let amount_width = 1 + rng.below(cfg.max_width);
            Expr::binary(op, a, sub(rng, amount_width))
        }
        4 => {
            let c = sub(rng, 1);
            let a = sub(rng, width);
            Expr::mux(c, a, sub(rng, width))
        }
        5 => {
            let extra = rng.below(4);
            let lo = rng.below(extra + 1);
            Expr::extract(lo + width - 1, lo, sub(rng, width + extra))
        }
        6 if width >= 2 => {
            let hi = 1 + rng.below(width - 1);
            let h = sub(rng, hi);
            Expr::concat(h, sub(rng, width - hi))
        }
        7 if width == 1 => {
            let w = 1 + rng.below(cfg.max_width);
            match rng.below(5) {
                0 => Expr::unary(UnaryOp::RedAnd, sub(rng, w)),
                1 => Expr::unary(UnaryOp::RedOr, sub(rng, w)),
                2 => Expr::unary(UnaryOp::RedXor, sub(rng, w)),
                3 => {
                    let a = sub(rng, w);
                    Expr::eq(a, sub(rng, w))
                }
                _ => {
                    let a = sub(rng, w);
                    Expr::binary(BinaryOp::Ult, a, sub(rng, w))
                }
            }
        }
        _ => {
            let from = 1 + rng.below(width);
            let a = sub(rng, from);
            if rng.chance(1, 2) {
                Expr::zext(a, width)
            } else {
                Expr::sext(a, width)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ports_env, validate};

    #[test]
    fn generated_expressions_validate() {
        let mut rng = Lcg::new(7);
        let cfg = FuzzConfig::default();
        for _ in 0..500 {
            let c = random_case(&mut rng, &cfg);
            let w = validate(&c.expr, &ports_env(&c.vars), false).unwrap();
            assert_eq!(w, c.expr.width());
        }
    }
}
