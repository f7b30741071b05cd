//! Concrete syntax, AST, let-normal-form normalisation and simple typing
//! for the core language of first-order tree programs.

mod normalize;
mod parser;
mod typecheck;

pub use normalize::normalize;
pub use parser::{parse_program, ParseError};
pub use typecheck::{simple_typecheck, FunSig, TypeError, TypedProgram};

use std::collections::BTreeSet;
use std::fmt;

/// Simple types of the core language. Tree node labels are `Base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimpleType {
    Bool,
    Base,
    Tree,
    /// Argument tuple of a function signature; arity >= 1.
    Product(Vec<SimpleType>),
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Bool => write!(f, "Bool"),
            SimpleType::Base => write!(f, "B"),
            SimpleType::Tree => write!(f, "T"),
            SimpleType::Product(ts) => {
                let parts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "{}", parts.join(" x "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
    Eq,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Lt => write!(f, "<"),
            CmpOp::Gt => write!(f, ">"),
            CmpOp::Eq => write!(f, "="),
        }
    }
}

/// Expressions. Parsing may produce sugared forms (compound arguments,
/// non-variable scrutinees); `normalize` rewrites them to let normal form
/// where every argument position holds a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    True,
    False,
    Leaf,
    /// `(x1, x2, x3)` tree node constructor.
    Node(Box<Expr>, Box<Expr>, Box<Expr>),
    Cmp(Box<Expr>, CmpOp, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Match {
        scrutinee: Box<Expr>,
        leaf_arm: Box<Expr>,
        /// `(x1, x2, x3) -> body`
        node_arm: (String, String, String, Box<Expr>),
    },
    Let(String, Box<Expr>, Box<Expr>),
    App(String, Vec<Expr>),
}

/// A function definition `f x1 ... xn = body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub defs: Vec<Def>,
}

impl Program {
    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }
}

/// Stable address of an AST node: the child-index sequence from the root of
/// its definition body. If/Match children are (0: then/leaf arm, 1: else/node
/// arm); Let children are (0: bound expression, 1: body).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Path(pub Vec<u8>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn child(&self, i: u8) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn parse(s: &str) -> Option<Path> {
        let s = s.trim();
        if s == "root" || s.is_empty() {
            return Some(Path::root());
        }
        let mut v = Vec::new();
        for part in s.split('.') {
            v.push(part.parse::<u8>().ok()?);
        }
        Some(Path(v))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "root");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl Expr {
    /// Child expressions that carry path indices, in index order.
    pub fn path_children(&self) -> Vec<&Expr> {
        match self {
            Expr::If(_, t, e) => vec![t, e],
            Expr::Match {
                leaf_arm, node_arm, ..
            } => vec![leaf_arm, &node_arm.3],
            Expr::Let(_, e1, e2) => vec![e1, e2],
            _ => Vec::new(),
        }
    }

    pub fn at_path(&self, path: &Path) -> Option<&Expr> {
        let mut cur = self;
        for &i in &path.0 {
            cur = *cur.path_children().get(i as usize)?;
        }
        Some(cur)
    }
}

/// Free variables of an expression: Let binders and Match node-arm binders
/// are removed; a Let binder does not scope over its own bound expression.
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Expr::True | Expr::False | Expr::Leaf => {}
        Expr::Node(a, b, c) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
            collect_free(c, bound, out);
        }
        Expr::Cmp(a, _, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Expr::If(c, t, e2) => {
            collect_free(c, bound, out);
            collect_free(t, bound, out);
            collect_free(e2, bound, out);
        }
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            collect_free(scrutinee, bound, out);
            collect_free(leaf_arm, bound, out);
            let (x1, x2, x3, body) = node_arm;
            bound.push(x1.clone());
            bound.push(x2.clone());
            bound.push(x3.clone());
            collect_free(body, bound, out);
            bound.truncate(bound.len() - 3);
        }
        Expr::Let(x, e1, e2) => {
            collect_free(e1, bound, out);
            bound.push(x.clone());
            collect_free(e2, bound, out);
            bound.pop();
        }
        Expr::App(_, args) => {
            for a in args {
                collect_free(a, bound, out);
            }
        }
    }
}

/// Pretty-prints an expression, one construct per line, for `--explain`
/// dumps. Paths are shown so tactic files can address nodes.
pub fn render_with_paths(def: &Def) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {} =\n", def.name, def.params.join(" ")));
    render_expr(&def.body, &Path::root(), 1, &mut out);
    out
}

fn render_expr(e: &Expr, path: &Path, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let loc = format!("[{path}]");
    match e {
        Expr::Var(x) => out.push_str(&format!("{pad}{loc} {x}\n")),
        Expr::True => out.push_str(&format!("{pad}{loc} true\n")),
        Expr::False => out.push_str(&format!("{pad}{loc} false\n")),
        Expr::Leaf => out.push_str(&format!("{pad}{loc} leaf\n")),
        Expr::Node(a, b, c) => out.push_str(&format!(
            "{pad}{loc} ({}, {}, {})\n",
            show_atom(a),
            show_atom(b),
            show_atom(c)
        )),
        Expr::Cmp(a, op, b) => out.push_str(&format!(
            "{pad}{loc} {} {op} {}\n",
            show_atom(a),
            show_atom(b)
        )),
        Expr::If(c, t, e2) => {
            out.push_str(&format!("{pad}{loc} if {}\n", show_atom(c)));
            render_expr(t, &path.child(0), indent + 1, out);
            render_expr(e2, &path.child(1), indent + 1, out);
        }
        Expr::Match {
            scrutinee,
            leaf_arm,
            node_arm,
        } => {
            let (x1, x2, x3, body) = node_arm;
            out.push_str(&format!(
                "{pad}{loc} match {} with | leaf -> .. | ({x1}, {x2}, {x3}) -> ..\n",
                show_atom(scrutinee)
            ));
            render_expr(leaf_arm, &path.child(0), indent + 1, out);
            render_expr(body, &path.child(1), indent + 1, out);
        }
        Expr::Let(x, e1, e2) => {
            out.push_str(&format!("{pad}{loc} let {x} =\n"));
            render_expr(e1, &path.child(0), indent + 1, out);
            render_expr(e2, &path.child(1), indent + 1, out);
        }
        Expr::App(f, args) => {
            let rendered: Vec<String> = args.iter().map(show_atom).collect();
            out.push_str(&format!("{pad}{loc} {f} {}\n", rendered.join(" ")));
        }
    }
}

fn show_atom(e: &Expr) -> String {
    match e {
        Expr::Var(x) => x.clone(),
        Expr::True => "true".into(),
        Expr::False => "false".into(),
        Expr::Leaf => "leaf".into(),
        Expr::Node(a, b, c) => format!("({}, {}, {})", show_atom(a), show_atom(b), show_atom(c)),
        Expr::Cmp(a, op, b) => format!("{} {op} {}", show_atom(a), show_atom(b)),
        Expr::App(f, args) => {
            let rendered: Vec<String> = args.iter().map(show_atom).collect();
            format!("{f} {}", rendered.join(" "))
        }
        _ => "..".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_respects_binders() {
        // let x = e1 in x: the binder shadows, so only e1's variables remain.
        let e = Expr::Let(
            "x".into(),
            Box::new(Expr::Var("y".into())),
            Box::new(Expr::Var("x".into())),
        );
        let fv = free_vars(&e);
        assert_eq!(fv.into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    }

    #[test]
    fn path_display_round_trip() {
        let p = Path(vec![1, 0, 2]);
        assert_eq!(p.to_string(), "1.0.2");
        assert_eq!(Path::parse("1.0.2").unwrap(), p);
        assert_eq!(Path::parse("root").unwrap(), Path::root());
    }
}
