//! Linear constraints over named nonnegative rational unknowns.

use crate::rat::{show_rat, Rat};
use num::Zero;
use std::collections::HashMap;
use std::fmt;

/// Handle of an unknown in the declaration registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// Declaration registry: every unknown has a unique, deterministic name.
#[derive(Debug, Clone, Default)]
pub struct VarRegistry {
    names: Vec<String>,
    by_name: HashMap<String, VarId>,
    /// Optional upper bound (all unknowns are >= 0 implicitly).
    upper: Vec<Option<Rat>>,
}

impl VarRegistry {
    pub fn fresh(&mut self, name: String) -> VarId {
        debug_assert!(
            !self.by_name.contains_key(&name),
            "duplicate unknown name {name}"
        );
        let id = VarId(self.names.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.upper.push(None);
        id
    }

    pub fn fresh_bounded(&mut self, name: String, upper: Rat) -> VarId {
        let id = self.fresh(name);
        self.upper[id.0 as usize] = Some(upper);
        id
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0 as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn upper_bound(&self, v: VarId) -> Option<&Rat> {
        self.upper[v.0 as usize].as_ref()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len() as u32).map(VarId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
    Ge,
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rel::Eq => write!(f, "="),
            Rel::Le => write!(f, "<="),
            Rel::Ge => write!(f, ">="),
        }
    }
}

/// Sparse linear form `sum coeff_i * var_i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub terms: Vec<(Rat, VarId)>,
    pub constant: Rat,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr {
            terms: Vec::new(),
            constant: Rat::zero(),
        }
    }

    pub fn constant(c: Rat) -> LinExpr {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> LinExpr {
        LinExpr {
            terms: vec![(Rat::from_integer(1.into()), v)],
            constant: Rat::zero(),
        }
    }

    pub fn add_term(&mut self, c: Rat, v: VarId) {
        if !c.is_zero() {
            self.terms.push((c, v));
        }
    }

    pub fn add_const(&mut self, c: &Rat) {
        self.constant += c;
    }

    pub fn sub(mut self, other: &LinExpr) -> LinExpr {
        for (c, v) in &other.terms {
            self.terms.push((-c.clone(), *v));
        }
        self.constant -= &other.constant;
        self
    }

    /// Collapses duplicate variables and drops zero coefficients.
    pub fn normalized(&self) -> LinExpr {
        let mut acc: HashMap<VarId, Rat> = HashMap::new();
        for (c, v) in &self.terms {
            *acc.entry(*v).or_insert_with(Rat::zero) += c;
        }
        let mut terms: Vec<(Rat, VarId)> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| (c, v))
            .collect();
        terms.sort_by_key(|(_, v)| *v);
        LinExpr {
            terms,
            constant: self.constant.clone(),
        }
    }

    pub fn eval(&self, assignment: &[Rat]) -> Rat {
        let mut acc = self.constant.clone();
        for (c, v) in &self.terms {
            acc += c * &assignment[v.0 as usize];
        }
        acc
    }
}

/// One linear constraint `expr rel 0`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub expr: LinExpr,
    pub rel: Rel,
    /// Index into `ConstraintSet::origins`.
    pub origin: u32,
}

/// Where a constraint came from: function, derivation mode, AST path, and
/// the branch decisions (if/match choices) that lead to its judgement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Origin {
    pub label: String,
    /// Branch decisions as (decision-point key, chosen child).
    pub decisions: Vec<(String, u8)>,
}

/// A system of linear constraints over nonnegative rational unknowns.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub vars: VarRegistry,
    pub constraints: Vec<Constraint>,
    pub origins: Vec<Origin>,
}

impl ConstraintSet {
    pub fn new() -> ConstraintSet {
        ConstraintSet::default()
    }

    pub fn origin(&mut self, origin: Origin) -> u32 {
        if let Some(last) = self.origins.last() {
            if *last == origin {
                return self.origins.len() as u32 - 1;
            }
        }
        self.origins.push(origin);
        self.origins.len() as u32 - 1
    }

    pub fn push(&mut self, expr: LinExpr, rel: Rel, origin: u32) {
        self.constraints.push(Constraint {
            expr: expr.normalized(),
            rel,
            origin,
        });
    }

    pub fn render_constraint(&self, c: &Constraint) -> String {
        let mut parts = Vec::new();
        for (coef, v) in &c.expr.terms {
            parts.push(format!("{}*{}", show_rat(coef), self.vars.name(*v)));
        }
        if !c.expr.constant.is_zero() || parts.is_empty() {
            parts.push(show_rat(&c.expr.constant));
        }
        format!("{} {} 0", parts.join(" + "), c.rel)
    }
}
