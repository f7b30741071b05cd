//! Cost-instrumented big-step evaluator. Only function applications emit
//! (unit) cost; every other construct is free.

use crate::syntax::{CmpOp, Expr, Program, SimpleType};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use thiserror::Error;

/// Runtime values. Base values are 64-bit integers; trees share structure so
/// evaluation never deep-copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Leaf,
    Node(Rc<Value>, i64, Rc<Value>),
    Base(i64),
    Bool(bool),
}

impl Value {
    pub fn node(l: Value, k: i64, r: Value) -> Value {
        Value::Node(Rc::new(l), k, Rc::new(r))
    }

    /// Number of leaves.
    pub fn size(&self) -> u64 {
        match self {
            Value::Leaf => 1,
            Value::Node(l, _, r) => l.size() + r.size(),
            _ => 0,
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, Value::Leaf | Value::Node(..))
    }

    pub fn simple_type(&self) -> SimpleType {
        match self {
            Value::Leaf | Value::Node(..) => SimpleType::Tree,
            Value::Base(_) => SimpleType::Base,
            Value::Bool(_) => SimpleType::Bool,
        }
    }

    /// In-order sequence of node keys.
    pub fn inorder_keys(&self) -> Vec<i64> {
        let mut out = Vec::new();
        fn walk(v: &Value, out: &mut Vec<i64>) {
            if let Value::Node(l, k, r) = v {
                walk(l, out);
                out.push(*k);
                walk(r, out);
            }
        }
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Leaf => write!(f, "leaf"),
            Value::Node(l, k, r) => write!(f, "({l}, {k}, {r})"),
            Value::Base(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Variable environment (sigma). Update rebinds only the named variable.
pub type Environment = HashMap<String, Value>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluation timed out (fuel exhausted)")]
    Timeout,
    #[error("unbound variable `{0}` at runtime")]
    Unbound(String),
    #[error("ill-typed runtime state: {0}")]
    IllTyped(String),
    #[error("undefined function `{0}`")]
    UndefinedFunction(String),
    #[error("`{fun}` called with {found} arguments, expected {expected}")]
    Arity {
        fun: String,
        expected: usize,
        found: usize,
    },
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Evaluates `e` under `sigma`, returning the value and the cost, i.e. the
/// number of function applications in the derivation. `fuel` bounds the
/// number of evaluation steps as a nontermination guard.
pub fn evaluate(
    sigma: &Environment,
    e: &Expr,
    p: &Program,
    fuel: u64,
) -> Result<(Value, u64), EvalError> {
    let mut fuel = fuel;
    let mut env = sigma.clone();
    eval(&mut env, e, p, &mut fuel)
}

fn eval(
    env: &mut Environment,
    e: &Expr,
    p: &Program,
    fuel: &mut u64,
) -> Result<(Value, u64), EvalError> {
    if *fuel == 0 {
        return Err(EvalError::Timeout);
    }
    *fuel -= 1;
    match e {
        Expr::Var(x) => env
            .get(x)
            .cloned()
            .map(|v| (v, 0))
            .ok_or_else(|| EvalError::Unbound(x.clone())),
        Expr::True => Ok((Value::Bool(true), 0)),
        Expr::False => Ok((Value::Bool(false), 0)),
        Expr::Leaf => Ok((Value::Leaf, 0)),
        Expr::Node(a, b, c) => {
            let (va, l1) = eval(env, a, p, fuel)?;
            let (vb, l2) = eval(env, b, p, fuel)?;
            let (vc, l3) = eval(env, c, p, fuel)?;
            let Value::Base(k) = vb else {
                return Err(EvalError::IllTyped("node label must be Base".into()));
            };
            if !va.is_tree() || !vc.is_tree() {
                return Err(EvalError::IllTyped("node children must be trees".into()));
            }
            Ok((Value::Node(Rc::new(va), k, Rc::new(vc)), l1 + l2 + l3))
        }
        Expr::Cmp(a, op, b) => {
            let (va, l1) = eval(env, a, p, fuel)?;
            let (vb, l2) = eval(env, b, p, fuel)?;
            let res = compare(&va, *op, &vb)?;
            Ok((Value::Bool(res), l1 + l2))
        }
        Expr::If(c, t, f) => {
            let (vc, l1) = eval(env, c, p, fuel)?;
            let Value::Bool(b) = vc else {
                return Err(EvalError::IllTyped("if condition must be Bool".into()));
            };
            let (v, l2) = eval(env, if b { t } else { f }, p, fuel)?;
            Ok((v, l1 + l2))
        }
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            let (vs, l1) = eval(env, scrutinee, p, fuel)?;
            match vs {
                Value::Leaf => {
                    let (v, l2) = eval(env, leaf_arm, p, fuel)?;
                    Ok((v, l1 + l2))
                }
                Value::Node(l, k, r) => {
                    let (x1, x2, x3, body) = node_arm;
                    // The extension is a shadowing update; the surface
                    // programs reuse names freely.
                    let saved = [
                        (x1.clone(), env.insert(x1.clone(), (*l).clone())),
                        (x2.clone(), env.insert(x2.clone(), Value::Base(k))),
                        (x3.clone(), env.insert(x3.clone(), (*r).clone())),
                    ];
                    let res = eval(env, body, p, fuel);
                    for (name, old) in saved {
                        match old {
                            Some(v) => {
                                env.insert(name, v);
                            }
                            None => {
                                env.remove(&name);
                            }
                        }
                    }
                    let (v, l2) = res?;
                    Ok((v, l1 + l2))
                }
                _ => Err(EvalError::IllTyped("match scrutinee must be a tree".into())),
            }
        }
        Expr::Let(x, e1, e2) => {
            let (w, l1) = eval(env, e1, p, fuel)?;
            let old = env.insert(x.clone(), w);
            let res = eval(env, e2, p, fuel);
            match old {
                Some(v) => {
                    env.insert(x.clone(), v);
                }
                None => {
                    env.remove(x);
                }
            }
            let (v, l2) = res?;
            Ok((v, l1 + l2))
        }
        Expr::App(f, args) => {
            let def = p
                .def(f)
                .ok_or_else(|| EvalError::UndefinedFunction(f.clone()))?;
            if args.len() != def.params.len() {
                return Err(EvalError::Arity {
                    fun: f.clone(),
                    expected: def.params.len(),
                    found: args.len(),
                });
            }
            let mut cost = 0;
            let mut callee_env = Environment::new();
            for (param, arg) in def.params.iter().zip(args) {
                let (v, l) = eval(env, arg, p, fuel)?;
                cost += l;
                callee_env.insert(param.clone(), v);
            }
            let (v, l) = eval(&mut callee_env, &def.body, p, fuel)?;
            Ok((v, cost + l + 1))
        }
    }
}

fn compare(a: &Value, op: CmpOp, b: &Value) -> Result<bool, EvalError> {
    match op {
        CmpOp::Eq => Ok(a == b),
        CmpOp::Lt | CmpOp::Gt => {
            let (Value::Base(x), Value::Base(y)) = (a, b) else {
                return Err(EvalError::IllTyped(
                    "ordered comparison requires Base operands".into(),
                ));
            };
            Ok(match op {
                CmpOp::Lt => x < y,
                CmpOp::Gt => x > y,
                CmpOp::Eq => unreachable!(),
            })
        }
    }
}

/// Calls `f` on `args` (one unit of cost for the outermost application).
pub fn run_function(
    p: &Program,
    f: &str,
    args: &[Value],
    fuel: u64,
) -> Result<(Value, u64), EvalError> {
    let def = p
        .def(f)
        .ok_or_else(|| EvalError::UndefinedFunction(f.to_string()))?;
    if args.len() != def.params.len() {
        return Err(EvalError::Arity {
            fun: f.to_string(),
            expected: def.params.len(),
            found: args.len(),
        });
    }
    let mut env = Environment::new();
    for (param, v) in def.params.iter().zip(args) {
        env.insert(param.clone(), v.clone());
    }
    let mut fuel = fuel;
    let (v, l) = eval(&mut env, &def.body, p, &mut fuel)?;
    Ok((v, l + 1))
}

/// Builds a random binary search tree with `n` leaves (n-1 internal nodes),
/// deterministic per seed. Keys are distinct and the in-order traversal of
/// keys is strictly increasing.
pub fn gen_random_search_tree(n: u64, seed: u64) -> Value {
    assert!(n >= 1, "tree size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // n-1 distinct sorted keys with random gaps in [1, 10].
    let mut keys = Vec::with_capacity((n - 1) as usize);
    let mut cur: i64 = rng.gen_range(-64..64);
    for _ in 0..n - 1 {
        cur += rng.gen_range(1..=10);
        keys.push(cur);
    }
    build_bst(&keys, &mut rng)
}

fn build_bst(keys: &[i64], rng: &mut ChaCha8Rng) -> Value {
    if keys.is_empty() {
        return Value::Leaf;
    }
    let root = rng.gen_range(0..keys.len());
    let left = build_bst(&keys[..root], rng);
    let right = build_bst(&keys[root + 1..], rng);
    Value::node(left, keys[root], right)
}

/// Parses a value literal: `leaf`, `(v1, k, v2)`, integers, `true`, `false`.
pub fn parse_value(s: &str) -> Result<Value, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let v = parse_value_at(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(format!("trailing input at offset {pos}"));
    }
    Ok(v)
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() && c[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_value_at(c: &[char], pos: &mut usize) -> Result<Value, String> {
    skip_ws(c, pos);
    if *pos >= c.len() {
        return Err("unexpected end of value literal".into());
    }
    match c[*pos] {
        '(' => {
            *pos += 1;
            let l = parse_value_at(c, pos)?;
            expect_char(c, pos, ',')?;
            skip_ws(c, pos);
            let k = parse_int(c, pos)?;
            expect_char(c, pos, ',')?;
            let r = parse_value_at(c, pos)?;
            expect_char(c, pos, ')')?;
            if !l.is_tree() || !r.is_tree() {
                return Err("node children must be trees".into());
            }
            Ok(Value::node(l, k, r))
        }
        'l' if c[*pos..].starts_with(&['l', 'e', 'a', 'f']) => {
            *pos += 4;
            Ok(Value::Leaf)
        }
        't' if c[*pos..].starts_with(&['t', 'r', 'u', 'e']) => {
            *pos += 4;
            Ok(Value::Bool(true))
        }
        'f' if c[*pos..].starts_with(&['f', 'a', 'l', 's', 'e']) => {
            *pos += 5;
            Ok(Value::Bool(false))
        }
        d if d.is_ascii_digit() || d == '-' => Ok(Value::Base(parse_int(c, pos)?)),
        other => Err(format!("unexpected `{other}` in value literal")),
    }
}

fn parse_int(c: &[char], pos: &mut usize) -> Result<i64, String> {
    skip_ws(c, pos);
    let start = *pos;
    if *pos < c.len() && c[*pos] == '-' {
        *pos += 1;
    }
    while *pos < c.len() && c[*pos].is_ascii_digit() {
        *pos += 1;
    }
    let text: String = c[start..*pos].iter().collect();
    text.parse::<i64>().map_err(|e| e.to_string())
}

fn expect_char(c: &[char], pos: &mut usize, ch: char) -> Result<(), String> {
    skip_ws(c, pos);
    if *pos < c.len() && c[*pos] == ch {
        *pos += 1;
        Ok(())
    } else {
        Err(format!("expected `{ch}` at offset {pos}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{normalize, parse_program};

    fn leaf() -> Value {
        Value::Leaf
    }

    #[test]
    fn leaf_evaluates_at_zero_cost() {
        let p = Program::default();
        let (v, cost) = evaluate(&Environment::new(), &Expr::Leaf, &p, 100).unwrap();
        assert_eq!(v, Value::Leaf);
        assert_eq!(cost, 0);
    }

    #[test]
    fn value_parse_round_trip() {
        let v = parse_value("((leaf, 1, leaf), 2, leaf)").unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(parse_value(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn random_bst_has_sorted_distinct_inorder_keys() {
        for seed in [1u64, 2, 3] {
            let t = gen_random_search_tree(10, seed);
            assert_eq!(t.size(), 10);
            let keys = t.inorder_keys();
            assert!(keys.windows(2).all(|w| w[0] < w[1]), "keys {keys:?}");
        }
        assert_eq!(gen_random_search_tree(1, 7), leaf());
        let two = gen_random_search_tree(2, 7);
        assert!(matches!(two, Value::Node(ref l, _, ref r) if **l == Value::Leaf && **r == Value::Leaf));
    }

    #[test]
    fn let_cost_is_additive() {
        let src = "id t = t\nf t = let x = id t in id x";
        let p = normalize(&parse_program(src).unwrap());
        let (_, cost) = run_function(&p, "f", &[leaf()], 1000).unwrap();
        // one unit for f itself plus one per inner call
        assert_eq!(cost, 3);
    }

    #[test]
    fn fuel_exhaustion_reports_timeout() {
        let src = "loop t = loop t";
        let p = normalize(&parse_program(src).unwrap());
        let err = run_function(&p, "loop", &[leaf()], 1000).unwrap_err();
        assert_eq!(err, EvalError::Timeout);
    }
}
