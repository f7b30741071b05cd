//! Simple type checking (inference) for normalised programs.
//!
//! Types are inferred by unification over {Bool, Base, Tree}; there is no
//! polymorphism. Parameters that remain unconstrained default to Base.

use super::{CmpOp, Def, Expr, Path, Program, SimpleType};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("{def}: unbound variable `{var}` at {path}")]
    Unbound { def: String, var: String, path: Path },
    #[error("{def}: type mismatch at {path}: expected {expected}, found {found}")]
    Mismatch {
        def: String,
        path: Path,
        expected: SimpleType,
        found: SimpleType,
    },
    #[error("{def}: call of undefined function `{callee}` at {path}")]
    UndefinedFunction { def: String, callee: String, path: Path },
    #[error("{def}: call of `{callee}` with {found} arguments, expected {expected}, at {path}")]
    Arity {
        def: String,
        callee: String,
        expected: usize,
        found: usize,
        path: Path,
    },
    #[error("{def}: comparison `<`/`>` requires Base operands at {path}")]
    OrderedCmp { def: String, path: Path },
}

/// Declared (inferred) simple signature of a function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunSig {
    pub params: Vec<SimpleType>,
    pub ret: SimpleType,
}

impl FunSig {
    pub fn display(&self, name: &str) -> String {
        format!(
            "{name} : {} -> {}",
            SimpleType::Product(self.params.clone()),
            self.ret
        )
    }
}

/// A normalised program together with its typing information.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    pub sigs: HashMap<String, FunSig>,
    /// Per definition: type of every variable (parameters and binders).
    pub var_types: HashMap<String, HashMap<String, SimpleType>>,
}

impl TypedProgram {
    pub fn sig(&self, f: &str) -> &FunSig {
        &self.sigs[f]
    }

    pub fn var_type(&self, def: &str, var: &str) -> Option<&SimpleType> {
        self.var_types.get(def).and_then(|m| m.get(var))
    }

    /// Number of tree-typed parameters of `f`, in parameter order.
    pub fn tree_params(&self, f: &str) -> Vec<String> {
        let def = self.program.def(f).expect("function exists");
        def.params
            .iter()
            .filter(|p| self.var_type(f, p) == Some(&SimpleType::Tree))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Var(usize),
    Bool,
    Base,
    Tree,
}

struct Infer {
    /// Union-find over type variables; None = unbound.
    subst: Vec<Option<Ty>>,
}

impl Infer {
    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Var(self.subst.len() - 1)
    }

    fn resolve(&self, t: Ty) -> Ty {
        let mut cur = t;
        while let Ty::Var(i) = cur {
            match self.subst[i] {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    fn unify(&mut self, a: Ty, b: Ty) -> Result<(), (SimpleType, SimpleType)> {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        match (ra, rb) {
            (Ty::Var(i), other) => {
                if other != Ty::Var(i) {
                    self.subst[i] = Some(other);
                }
                Ok(())
            }
            (other, Ty::Var(i)) => {
                self.subst[i] = Some(other);
                Ok(())
            }
            (x, y) if x == y => Ok(()),
            (x, y) => Err((self.to_simple(x), self.to_simple(y))),
        }
    }

    fn to_simple(&self, t: Ty) -> SimpleType {
        match self.resolve(t) {
            Ty::Bool => SimpleType::Bool,
            Ty::Tree => SimpleType::Tree,
            // Unconstrained variables default to Base.
            Ty::Base | Ty::Var(_) => SimpleType::Base,
        }
    }
}

/// Infers and checks simple types for a normalised program.
pub fn simple_typecheck(p: &Program) -> Result<TypedProgram, TypeError> {
    let mut inf = Infer { subst: Vec::new() };
    // Pre-assign signatures so mutual recursion and any definition order work.
    let mut fun_tys: HashMap<String, (Vec<Ty>, Ty)> = HashMap::new();
    for d in &p.defs {
        let params: Vec<Ty> = d.params.iter().map(|_| inf.fresh()).collect();
        let ret = inf.fresh();
        fun_tys.insert(d.name.clone(), (params, ret));
    }

    let mut var_types_all = HashMap::new();
    for d in &p.defs {
        let (param_tys, ret_ty) = fun_tys[&d.name].clone();
        let mut env: Vec<(String, Ty)> = d
            .params
            .iter()
            .cloned()
            .zip(param_tys.iter().copied())
            .collect();
        let mut binder_tys: Vec<(String, Ty)> = env.clone();
        let t = check_expr(
            d,
            &d.body,
            &Path::root(),
            &mut env,
            &mut binder_tys,
            &fun_tys,
            &mut inf,
        )?;
        inf.unify(t, ret_ty).map_err(|(e, f)| TypeError::Mismatch {
            def: d.name.clone(),
            path: Path::root(),
            expected: e,
            found: f,
        })?;
        var_types_all.insert(d.name.clone(), binder_tys);
    }

    let mut sigs = HashMap::new();
    for d in &p.defs {
        let (param_tys, ret_ty) = &fun_tys[&d.name];
        sigs.insert(
            d.name.clone(),
            FunSig {
                params: param_tys.iter().map(|t| inf.to_simple(*t)).collect(),
                ret: inf.to_simple(*ret_ty),
            },
        );
    }
    let var_types = var_types_all
        .into_iter()
        .map(|(f, binders)| {
            let m = binders
                .into_iter()
                .map(|(x, t)| (x, inf.to_simple(t)))
                .collect::<HashMap<_, _>>();
            (f, m)
        })
        .collect();

    Ok(TypedProgram {
        program: p.clone(),
        sigs,
        var_types,
    })
}

#[allow(clippy::too_many_arguments)]
fn check_expr(
    def: &Def,
    e: &Expr,
    path: &Path,
    env: &mut Vec<(String, Ty)>,
    binder_tys: &mut Vec<(String, Ty)>,
    fun_tys: &HashMap<String, (Vec<Ty>, Ty)>,
    inf: &mut Infer,
) -> Result<Ty, TypeError> {
    let mismatch = |inf: &Infer, path: &Path, (e1, f1): (SimpleType, SimpleType)| {
        let _ = inf;
        TypeError::Mismatch {
            def: def.name.clone(),
            path: path.clone(),
            expected: e1,
            found: f1,
        }
    };
    match e {
        Expr::Var(x) => lookup(def, x, path, env),
        Expr::True | Expr::False => Ok(Ty::Bool),
        Expr::Leaf => Ok(Ty::Tree),
        Expr::Node(a, b, c) => {
            let ta = check_expr(def, a, path, env, binder_tys, fun_tys, inf)?;
            let tb = check_expr(def, b, path, env, binder_tys, fun_tys, inf)?;
            let tc = check_expr(def, c, path, env, binder_tys, fun_tys, inf)?;
            inf.unify(ta, Ty::Tree)
                .map_err(|p2| mismatch(inf, path, p2))?;
            inf.unify(tb, Ty::Base)
                .map_err(|p2| mismatch(inf, path, p2))?;
            inf.unify(tc, Ty::Tree)
                .map_err(|p2| mismatch(inf, path, p2))?;
            Ok(Ty::Tree)
        }
        Expr::Cmp(a, op, b) => {
            let ta = check_expr(def, a, path, env, binder_tys, fun_tys, inf)?;
            let tb = check_expr(def, b, path, env, binder_tys, fun_tys, inf)?;
            inf.unify(ta, tb).map_err(|p2| mismatch(inf, path, p2))?;
            if matches!(op, CmpOp::Lt | CmpOp::Gt) {
                inf.unify(ta, Ty::Base)
                    .map_err(|_| TypeError::OrderedCmp {
                        def: def.name.clone(),
                        path: path.clone(),
                    })?;
            }
            Ok(Ty::Bool)
        }
        Expr::If(c, t, f) => {
            let tc = check_expr(def, c, path, env, binder_tys, fun_tys, inf)?;
            inf.unify(tc, Ty::Bool)
                .map_err(|p2| mismatch(inf, path, p2))?;
            let tt = check_expr(def, t, &path.child(0), env, binder_tys, fun_tys, inf)?;
            let tf = check_expr(def, f, &path.child(1), env, binder_tys, fun_tys, inf)?;
            inf.unify(tt, tf).map_err(|p2| mismatch(inf, path, p2))?;
            Ok(tt)
        }
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            let ts = check_expr(def, scrutinee, path, env, binder_tys, fun_tys, inf)?;
            inf.unify(ts, Ty::Tree)
                .map_err(|p2| mismatch(inf, path, p2))?;
            let tl = check_expr(def, leaf_arm, &path.child(0), env, binder_tys, fun_tys, inf)?;
            let (x1, x2, x3, body) = node_arm;
            env.push((x1.clone(), Ty::Tree));
            env.push((x2.clone(), Ty::Base));
            env.push((x3.clone(), Ty::Tree));
            binder_tys.push((x1.clone(), Ty::Tree));
            binder_tys.push((x2.clone(), Ty::Base));
            binder_tys.push((x3.clone(), Ty::Tree));
            let tn = check_expr(def, body, &path.child(1), env, binder_tys, fun_tys, inf)?;
            env.truncate(env.len() - 3);
            inf.unify(tl, tn).map_err(|p2| mismatch(inf, path, p2))?;
            Ok(tl)
        }
        Expr::Let(x, e1, e2) => {
            let t1 = check_expr(def, e1, &path.child(0), env, binder_tys, fun_tys, inf)?;
            env.push((x.clone(), t1));
            binder_tys.push((x.clone(), t1));
            let t2 = check_expr(def, e2, &path.child(1), env, binder_tys, fun_tys, inf)?;
            env.pop();
            Ok(t2)
        }
        Expr::App(f, args) => {
            let Some((param_tys, ret)) = fun_tys.get(f).cloned() else {
                return Err(TypeError::UndefinedFunction {
                    def: def.name.clone(),
                    callee: f.clone(),
                    path: path.clone(),
                });
            };
            if args.len() != param_tys.len() {
                return Err(TypeError::Arity {
                    def: def.name.clone(),
                    callee: f.clone(),
                    expected: param_tys.len(),
                    found: args.len(),
                    path: path.clone(),
                });
            }
            for (a, pt) in args.iter().zip(param_tys) {
                let ta = check_expr(def, a, path, env, binder_tys, fun_tys, inf)?;
                inf.unify(ta, pt).map_err(|p2| mismatch(inf, path, p2))?;
            }
            Ok(ret)
        }
    }
}

fn lookup(def: &Def, x: &str, path: &Path, env: &[(String, Ty)]) -> Result<Ty, TypeError> {
    env.iter()
        .rev()
        .find(|(n, _)| n == x)
        .map(|(_, t)| *t)
        .ok_or_else(|| TypeError::Unbound {
            def: def.name.clone(),
            var: x.to_string(),
            path: path.clone(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{normalize, parse_program};

    fn check(src: &str) -> Result<TypedProgram, TypeError> {
        let p = parse_program(src).unwrap();
        simple_typecheck(&normalize(&p))
    }

    #[test]
    fn infers_base_times_tree_to_tree() {
        let tp = check("f a t = match t with | leaf -> leaf | (l, c, r) -> if a < c then l else r")
            .unwrap();
        let sig = tp.sig("f");
        assert_eq!(sig.params, vec![SimpleType::Base, SimpleType::Tree]);
        assert_eq!(sig.ret, SimpleType::Tree);
    }

    #[test]
    fn match_on_bool_is_rejected() {
        let err = check("f x = match x < x with | leaf -> leaf | (l, c, r) -> l").unwrap_err();
        assert!(matches!(err, TypeError::Mismatch { .. }));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let err = check("f x = y").unwrap_err();
        assert!(matches!(err, TypeError::Unbound { .. }));
    }
}
