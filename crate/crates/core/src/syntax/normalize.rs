//! Let-normal-form normalisation.
//!
//! After normalisation every Node/Cmp/If/Match/FunApp argument position holds
//! a variable; compound sub-expressions are let-bound with fresh `$t..` names
//! (the surface grammar cannot produce `$`). Binders are also made unique per
//! definition so later passes can key facts on variable names.

use super::{Def, Expr, Program};
use std::collections::HashSet;

pub fn normalize(p: &Program) -> Program {
    let defs = p
        .defs
        .iter()
        .map(|d| {
            let mut used: HashSet<String> = d.params.iter().cloned().collect();
            used.insert(d.name.clone());
            let body = uniquify(&d.body, &mut Vec::new(), &mut used);
            let mut fresh = Fresh { next: 0 };
            let body = norm(&body, &mut fresh);
            Def {
                name: d.name.clone(),
                params: d.params.clone(),
                body,
            }
        })
        .collect();
    Program { defs }
}

struct Fresh {
    next: usize,
}

impl Fresh {
    fn name(&mut self) -> String {
        let n = format!("$t{}", self.next);
        self.next += 1;
        n
    }
}

/// Renames binders that shadow a name already in scope, so that every live
/// variable name is unambiguous on any given path.
fn uniquify(e: &Expr, scope: &mut Vec<(String, String)>, used: &mut HashSet<String>) -> Expr {
    let resolve = |x: &str, scope: &Vec<(String, String)>| -> String {
        scope
            .iter()
            .rev()
            .find(|(orig, _)| orig == x)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| x.to_string())
    };
    match e {
        Expr::Var(x) => Expr::Var(resolve(x, scope)),
        Expr::True | Expr::False | Expr::Leaf => e.clone(),
        Expr::Node(a, b, c) => Expr::Node(
            Box::new(uniquify(a, scope, used)),
            Box::new(uniquify(b, scope, used)),
            Box::new(uniquify(c, scope, used)),
        ),
        Expr::Cmp(a, op, b) => Expr::Cmp(
            Box::new(uniquify(a, scope, used)),
            *op,
            Box::new(uniquify(b, scope, used)),
        ),
        Expr::If(c, t, f) => Expr::If(
            Box::new(uniquify(c, scope, used)),
            Box::new(uniquify(t, scope, used)),
            Box::new(uniquify(f, scope, used)),
        ),
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            let s = uniquify(scrutinee, scope, used);
            let la = uniquify(leaf_arm, scope, used);
            let (x1, x2, x3, body) = node_arm;
            let n1 = bind_unique(x1, scope, used);
            let n2 = bind_unique(x2, scope, used);
            let n3 = bind_unique(x3, scope, used);
            let nb = uniquify(body, scope, used);
            scope.truncate(scope.len() - 3);
            Expr::Match {
                scrutinee: Box::new(s),
                leaf_arm: Box::new(la),
                node_arm: (n1, n2, n3, Box::new(nb)),
            }
        }
        Expr::Let(x, e1, e2) => {
            let n1 = uniquify(e1, scope, used);
            let nx = bind_unique(x, scope, used);
            let n2 = uniquify(e2, scope, used);
            scope.pop();
            Expr::Let(nx, Box::new(n1), Box::new(n2))
        }
        Expr::App(f, args) => Expr::App(
            f.clone(),
            args.iter().map(|a| uniquify(a, scope, used)).collect(),
        ),
    }
}

fn bind_unique(x: &str, scope: &mut Vec<(String, String)>, used: &mut HashSet<String>) -> String {
    let name = if used.contains(x) {
        let mut k = 2;
        loop {
            let cand = format!("{x}${k}");
            if !used.contains(&cand) {
                break cand;
            }
            k += 1;
        }
    } else {
        x.to_string()
    };
    used.insert(name.clone());
    scope.push((x.to_string(), name.clone()));
    name
}

fn norm(e: &Expr, fresh: &mut Fresh) -> Expr {
    match e {
        Expr::Var(_) | Expr::True | Expr::False | Expr::Leaf => e.clone(),
        Expr::Node(a, b, c) => {
            let mut binds = Vec::new();
            let va = atomize(a, fresh, &mut binds);
            let vb = atomize(b, fresh, &mut binds);
            let vc = atomize(c, fresh, &mut binds);
            wrap(
                binds,
                Expr::Node(
                    Box::new(Expr::Var(va)),
                    Box::new(Expr::Var(vb)),
                    Box::new(Expr::Var(vc)),
                ),
            )
        }
        Expr::Cmp(a, op, b) => {
            let mut binds = Vec::new();
            let va = atomize(a, fresh, &mut binds);
            let vb = atomize(b, fresh, &mut binds);
            wrap(
                binds,
                Expr::Cmp(Box::new(Expr::Var(va)), *op, Box::new(Expr::Var(vb))),
            )
        }
        Expr::If(c, t, f) => {
            let mut binds = Vec::new();
            let vc = atomize(c, fresh, &mut binds);
            let nt = norm(t, fresh);
            let nf = norm(f, fresh);
            wrap(
                binds,
                Expr::If(Box::new(Expr::Var(vc)), Box::new(nt), Box::new(nf)),
            )
        }
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            let mut binds = Vec::new();
            let vs = atomize(scrutinee, fresh, &mut binds);
            let la = norm(leaf_arm, fresh);
            let (x1, x2, x3, body) = node_arm;
            let nb = norm(body, fresh);
            wrap(
                binds,
                Expr::Match {
                    scrutinee: Box::new(Expr::Var(vs)),
                    leaf_arm: Box::new(la),
                    node_arm: (x1.clone(), x2.clone(), x3.clone(), Box::new(nb)),
                },
            )
        }
        Expr::Let(x, e1, e2) => {
            let n1 = norm(e1, fresh);
            let n2 = norm(e2, fresh);
            // `let x = (let y = a in b) in c` flattens to
            // `let y = a in let x = b in c`; binder uniqueness makes this safe.
            fn rebuild(n1: Expr, x: &str, body: Expr) -> Expr {
                match n1 {
                    Expr::Let(y, a, b) => Expr::Let(y, a, Box::new(rebuild(*b, x, body))),
                    core => Expr::Let(x.to_string(), Box::new(core), Box::new(body)),
                }
            }
            rebuild(n1, x, n2)
        }
        Expr::App(f, args) => {
            let mut binds = Vec::new();
            let vars: Vec<Expr> = args
                .iter()
                .map(|a| Expr::Var(atomize(a, fresh, &mut binds)))
                .collect();
            wrap(binds, Expr::App(f.clone(), vars))
        }
    }
}

/// Normalises a sub-expression in argument position down to a variable,
/// pushing any needed bindings (in evaluation order) onto `binds`.
fn atomize(e: &Expr, fresh: &mut Fresh, binds: &mut Vec<(String, Expr)>) -> String {
    let mut n = norm(e, fresh);
    while let Expr::Let(y, a, b) = n {
        binds.push((y, *a));
        n = *b;
    }
    match n {
        Expr::Var(x) => x,
        core => {
            let name = fresh.name();
            binds.push((name.clone(), core));
            name
        }
    }
}

fn wrap(binds: Vec<(String, Expr)>, core: Expr) -> Expr {
    binds.into_iter().rev().fold(core, |acc, (x, e)| {
        Expr::Let(x, Box::new(e), Box::new(acc))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn norm_body(src: &str) -> Expr {
        let p = parse_program(src).unwrap();
        normalize(&p).defs[0].body.clone()
    }

    #[test]
    fn already_normal_node_unchanged() {
        let b = norm_body("f x1 x2 x3 = (x1, x2, x3)");
        match &b {
            Expr::Node(a, _, _) => assert_eq!(**a, Expr::Var("x1".into())),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_node_becomes_let_chain() {
        // (al, a, (ar, b, t''')) => let $t0 = (ar, b, t''') in (al, a, $t0)
        let b = norm_body("f al a ar b t = (al, a, (ar, b, t))");
        match &b {
            Expr::Let(x, e1, e2) => {
                assert_eq!(x, "$t0");
                assert!(matches!(**e1, Expr::Node(..)));
                match &**e2 {
                    Expr::Node(_, _, third) => assert_eq!(**third, Expr::Var("$t0".into())),
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doubly_nested_node_matches_paper_shape() {
        // (al, a, (ar, b, (br, c, cr))) =>
        //   let $t0 = (br, c, cr) in let $t1 = (ar, b, $t0) in (al, a, $t1)
        let b = norm_body("nest a b c br cr ar al = (al, a, (ar, b, (br, c, cr)))");
        let Expr::Let(x0, e0, rest) = &b else {
            panic!("unexpected {b:?}");
        };
        assert_eq!(x0, "$t0");
        assert!(matches!(**e0, Expr::Node(..)));
        let Expr::Let(x1, e1, core) = &**rest else {
            panic!("unexpected {rest:?}");
        };
        assert_eq!(x1, "$t1");
        match &**e1 {
            Expr::Node(_, _, t) => assert_eq!(**t, Expr::Var("$t0".into())),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(**core, Expr::Node(..)));
    }

    #[test]
    fn compound_condition_gets_let_bound() {
        let b = norm_body("f a c t u = if a < c then t else u");
        let Expr::Let(x, e1, e2) = &b else {
            panic!("unexpected {b:?}");
        };
        assert_eq!(x, "$t0");
        assert!(matches!(**e1, Expr::Cmp(..)));
        assert!(matches!(**e2, Expr::If(..)));
    }

    #[test]
    fn leaf_comparand_gets_let_bound() {
        let b = norm_body("f bl t u = if bl = leaf then t else u");
        // let $t0 = leaf in let $t1 = (bl = $t0) in if $t1 ...
        let Expr::Let(x0, e0, rest) = &b else {
            panic!("unexpected {b:?}");
        };
        assert_eq!(x0, "$t0");
        assert_eq!(**e0, Expr::Leaf);
        let Expr::Let(x1, e1, _) = &**rest else {
            panic!("unexpected {rest:?}");
        };
        assert_eq!(x1, "$t1");
        assert!(matches!(**e1, Expr::Cmp(..)));
    }

    #[test]
    fn match_scrutinee_call_gets_let_bound() {
        let src = "f a t = match f a t with | leaf -> leaf | (l, m, r) -> l";
        let b = norm_body(src);
        let Expr::Let(x, e1, e2) = &b else {
            panic!("unexpected {b:?}");
        };
        assert_eq!(x, "$t0");
        assert!(matches!(**e1, Expr::App(..)));
        assert!(matches!(**e2, Expr::Match { .. }));
    }

    #[test]
    fn shadowed_binders_are_renamed() {
        let src = "f t = match t with | leaf -> leaf | (l, a, r) -> match l with | leaf -> leaf | (l, a, r) -> l";
        let b = norm_body(src);
        let Expr::Match { node_arm, .. } = &b else {
            panic!("unexpected {b:?}");
        };
        let Expr::Match { node_arm: inner, .. } = &*node_arm.3 else {
            panic!("unexpected inner {:?}", node_arm.3);
        };
        assert_eq!(inner.0, "l$2");
        assert_eq!(*inner.3, Expr::Var("l$2".into()));
    }

    #[test]
    fn normalize_is_idempotent_on_fixture_like_programs() {
        let src = "f a t = match t with | leaf -> leaf | (cl, c, cr) -> if a = c then (cl, c, cr) else (cl, c, (cl, c, cr))";
        let p = parse_program(src).unwrap();
        let n1 = normalize(&p);
        let n2 = normalize(&n1);
        assert_eq!(n1, n2);
    }
}
