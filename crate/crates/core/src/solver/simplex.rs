//! Exact rational feasibility via presolve plus two-phase simplex
//! (phase one only; there is no objective).

use super::constraints::{Constraint, ConstraintSet, LinExpr, Rel, VarId};
use crate::rat::Rat;
use num::{One, Signed, Zero};
use std::collections::HashMap;

/// Total assignment of the system's unknowns.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub values: Vec<Rat>,
}

impl Assignment {
    pub fn get(&self, v: VarId) -> &Rat {
        &self.values[v.0 as usize]
    }

    pub fn by_name(&self, cs: &ConstraintSet, name: &str) -> Option<&Rat> {
        cs.vars.lookup(name).map(|v| self.get(v))
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Feasible(Assignment),
    /// Infeasible; carries indices of constraints implicated by presolve or
    /// by the phase-one basis, when cheaply available.
    Infeasible(Vec<usize>),
    /// Pivot budget exhausted.
    LimitExceeded,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_pivots: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_pivots: 2_000_000,
        }
    }
}

/// Checks every constraint of `cs` (plus nonnegativity and declared upper
/// bounds) under exact rational evaluation.
pub fn check_assignment(cs: &ConstraintSet, a: &Assignment) -> bool {
    if a.values.len() != cs.vars.len() {
        return false;
    }
    for v in cs.vars.ids() {
        let x = a.get(v);
        if x.is_negative() {
            return false;
        }
        if let Some(u) = cs.vars.upper_bound(v) {
            if x > u {
                return false;
            }
        }
    }
    cs.constraints.iter().all(|c| {
        let val = c.expr.eval(&a.values);
        match c.rel {
            Rel::Eq => val.is_zero(),
            Rel::Le => !val.is_positive(),
            Rel::Ge => !val.is_negative(),
        }
    })
}

pub fn solve(cs: &ConstraintSet) -> SolveOutcome {
    solve_with(cs, SolveOptions::default())
}

/// Restricts the system to constraints whose origins are compatible with the
/// given branch decisions, then solves.
pub fn solve_branch(
    cs: &ConstraintSet,
    decisions: &[(String, u8)],
    opts: SolveOptions,
) -> SolveOutcome {
    let chosen: HashMap<&str, u8> = decisions.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let keep: Vec<bool> = cs
        .constraints
        .iter()
        .map(|c| {
            cs.origins[c.origin as usize]
                .decisions
                .iter()
                .all(|(k, v)| chosen.get(k.as_str()) == Some(v))
        })
        .collect();
    solve_filtered(cs, &keep, opts)
}

pub fn solve_with(cs: &ConstraintSet, opts: SolveOptions) -> SolveOutcome {
    let keep = vec![true; cs.constraints.len()];
    solve_filtered(cs, &keep, opts)
}

fn solve_filtered(cs: &ConstraintSet, keep: &[bool], opts: SolveOptions) -> SolveOutcome {
    let n = cs.vars.len();
    let mut pre = Presolve::new(n);
    // Upper bounds become ordinary rows so substitution can see them.
    let mut rows: Vec<(LinExpr, Rel, usize)> = Vec::new();
    for (i, c) in cs.constraints.iter().enumerate() {
        if keep[i] {
            rows.push((c.expr.clone(), c.rel, i));
        }
    }
    for v in cs.vars.ids() {
        if let Some(u) = cs.vars.upper_bound(v) {
            let mut e = LinExpr::var(v);
            e.constant = -u.clone();
            rows.push((e, Rel::Le, usize::MAX));
        }
    }

    match pre.run(&mut rows) {
        PresolveResult::Infeasible(row) => {
            let mut hint = Vec::new();
            if row != usize::MAX {
                hint.push(row);
            }
            return SolveOutcome::Infeasible(hint);
        }
        PresolveResult::Ok => {}
    }

    let residual: Vec<(LinExpr, Rel, usize)> = rows
        .iter()
        .filter(|(e, rel, _)| !is_trivial(e, *rel))
        .cloned()
        .collect();

    match phase_one(&residual, n, &pre, opts) {
        PhaseOneResult::Feasible(values) => {
            let full = pre.reconstruct(values);
            debug_assert!(check_assignment_core(cs, keep, &full));
            SolveOutcome::Feasible(Assignment { values: full })
        }
        PhaseOneResult::Infeasible(hint) => SolveOutcome::Infeasible(
            hint.into_iter()
                .filter(|&i| i != usize::MAX)
                .collect::<Vec<_>>(),
        ),
        PhaseOneResult::LimitExceeded => SolveOutcome::LimitExceeded,
    }
}

fn check_assignment_core(cs: &ConstraintSet, keep: &[bool], values: &[Rat]) -> bool {
    cs.constraints.iter().enumerate().all(|(i, c)| {
        if !keep[i] {
            return true;
        }
        let val = c.expr.eval(values);
        match c.rel {
            Rel::Eq => val.is_zero(),
            Rel::Le => !val.is_positive(),
            Rel::Ge => !val.is_negative(),
        }
    })
}

fn is_trivial(e: &LinExpr, rel: Rel) -> bool {
    if !e.terms.is_empty() {
        return false;
    }
    match rel {
        Rel::Eq => e.constant.is_zero(),
        Rel::Le => !e.constant.is_positive(),
        Rel::Ge => !e.constant.is_negative(),
    }
}

/// Substitution-based presolve. Fixes variables pinned by singleton
/// equalities and eliminates one variable of each two-term equality, while
/// preserving nonnegativity by emitting replacement rows where needed.
struct Presolve {
    /// For each variable: None = still free, Some(expr) = substituted by an
    /// affine expression over still-free variables.
    sub: Vec<Option<LinExpr>>,
}

enum PresolveResult {
    Ok,
    Infeasible(usize),
}

impl Presolve {
    fn new(n: usize) -> Presolve {
        Presolve {
            sub: vec![None; n],
        }
    }

    fn resolve_expr(&self, e: &LinExpr) -> LinExpr {
        let mut out = LinExpr::constant(e.constant.clone());
        for (c, v) in &e.terms {
            match &self.sub[v.0 as usize] {
                None => out.add_term(c.clone(), *v),
                Some(rep) => {
                    let rep = self.resolve_expr(rep);
                    for (rc, rv) in rep.terms {
                        out.add_term(c * &rc, rv);
                    }
                    out.constant += c * &rep.constant;
                }
            }
        }
        out.normalized()
    }

    fn run(&mut self, rows: &mut Vec<(LinExpr, Rel, usize)>) -> PresolveResult {
        let mut extra: Vec<(LinExpr, Rel, usize)> = Vec::new();
        loop {
            let mut changed = false;
            for i in 0..rows.len() {
                let (expr, rel, orig) = rows[i].clone();
                if rel != Rel::Eq {
                    continue;
                }
                let e = self.resolve_expr(&expr);
                match e.terms.len() {
                    0 => {
                        if !e.constant.is_zero() {
                            return PresolveResult::Infeasible(orig);
                        }
                        rows[i].0 = LinExpr::zero();
                        continue;
                    }
                    1 => {
                        // c*x + d = 0  =>  x = -d/c
                        let (c, v) = e.terms[0].clone();
                        let val = -&e.constant / &c;
                        if val.is_negative() {
                            return PresolveResult::Infeasible(orig);
                        }
                        self.sub[v.0 as usize] = Some(LinExpr::constant(val));
                        rows[i].0 = LinExpr::zero();
                        rows[i].1 = Rel::Eq;
                        changed = true;
                    }
                    2 => {
                        // c1*x + c2*y + d = 0  =>  x = (-c2*y - d)/c1
                        let (c1, v1) = e.terms[0].clone();
                        let (c2, v2) = e.terms[1].clone();
                        let mut rep = LinExpr::zero();
                        rep.add_term(-&c2 / &c1, v2);
                        rep.constant = -&e.constant / &c1;
                        // Nonnegativity of the eliminated variable is implied
                        // when the replacement has nonnegative slope and
                        // offset; otherwise keep it as an inequality row.
                        let implied = !rep
                            .terms
                            .first()
                            .map(|(c, _)| c.is_negative())
                            .unwrap_or(false)
                            && !rep.constant.is_negative();
                        self.sub[v1.0 as usize] = Some(rep.clone());
                        if !implied {
                            extra.push((rep, Rel::Ge, orig));
                        }
                        rows[i].0 = LinExpr::zero();
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !extra.is_empty() {
                rows.append(&mut extra);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        for row in rows.iter_mut() {
            row.0 = self.resolve_expr(&row.0);
        }
        PresolveResult::Ok
    }

    /// Extends a solution of the residual system to all original variables.
    fn reconstruct(&self, mut values: HashMap<VarId, Rat>) -> Vec<Rat> {
        let n = self.sub.len();
        let mut out = vec![Rat::zero(); n];
        for i in 0..n {
            let v = VarId(i as u32);
            if values.contains_key(&v) {
                out[i] = values[&v].clone();
            } else if self.sub[i].is_some() {
                // resolved below
            } else {
                values.insert(v, Rat::zero());
            }
        }
        for i in 0..n {
            let v = VarId(i as u32);
            if let Some(rep) = &self.sub[i] {
                let e = self.resolve_expr(rep);
                let mut acc = e.constant.clone();
                for (c, rv) in &e.terms {
                    acc += c * values.get(rv).cloned().unwrap_or_else(Rat::zero);
                }
                out[i] = acc;
            } else {
                out[i] = values.get(&v).cloned().unwrap_or_else(Rat::zero);
            }
        }
        out
    }
}

enum PhaseOneResult {
    Feasible(HashMap<VarId, Rat>),
    Infeasible(Vec<usize>),
    LimitExceeded,
}

/// Phase-one simplex with Bland's rule over the residual rows.
fn phase_one(
    rows: &[(LinExpr, Rel, usize)],
    _n_orig: usize,
    _pre: &Presolve,
    opts: SolveOptions,
) -> PhaseOneResult {
    if rows.is_empty() {
        return PhaseOneResult::Feasible(HashMap::new());
    }

    // Map the variables that actually occur to dense columns.
    let mut cols: Vec<VarId> = Vec::new();
    let mut col_of: HashMap<VarId, usize> = HashMap::new();
    for (e, _, _) in rows {
        for (_, v) in &e.terms {
            col_of.entry(*v).or_insert_with(|| {
                cols.push(*v);
                cols.len() - 1
            });
        }
    }
    let nv = cols.len();
    let m = rows.len();

    // Tableau columns: [structural vars][slack/surplus][artificials] | rhs.
    let mut slack_cols = 0usize;
    for (_, rel, _) in rows {
        if !matches!(rel, Rel::Eq) {
            slack_cols += 1;
        }
    }
    let total = nv + slack_cols + m;
    let mut t: Vec<Vec<Rat>> = vec![vec![Rat::zero(); total + 1]; m];
    let mut basis: Vec<usize> = vec![usize::MAX; m];
    let mut art_of_row: Vec<Option<usize>> = vec![None; m];

    let mut next_slack = nv;
    let mut next_art = nv + slack_cols;
    for (i, (e, rel, _)) in rows.iter().enumerate() {
        let mut rhs = -e.constant.clone();
        let mut coeffs: Vec<(usize, Rat)> = e
            .terms
            .iter()
            .map(|(c, v)| (col_of[v], c.clone()))
            .collect();
        let mut slack_sign = match rel {
            Rel::Le => Some(Rat::one()),
            Rel::Ge => Some(-Rat::one()),
            Rel::Eq => None,
        };
        if rhs.is_negative() {
            rhs = -rhs;
            for (_, c) in coeffs.iter_mut() {
                *c = -c.clone();
            }
            slack_sign = slack_sign.map(|s| -s);
        }
        for (j, c) in coeffs {
            t[i][j] = &t[i][j] + c;
        }
        let mut basic_slack: Option<usize> = None;
        if let Some(s) = slack_sign {
            let j = next_slack;
            next_slack += 1;
            t[i][j] = s.clone();
            if s.is_positive() {
                basic_slack = Some(j);
            }
        }
        t[i][total] = rhs;
        match basic_slack {
            Some(j) => basis[i] = j,
            None => {
                let j = next_art;
                next_art += 1;
                t[i][j] = Rat::one();
                basis[i] = j;
                art_of_row[i] = Some(j);
            }
        }
    }

    let art_start = nv + slack_cols;
    // Objective: minimize the sum of artificials. Maintain the reduced-cost
    // row r[j] = z_j - c_j and the objective value.
    let mut r = vec![Rat::zero(); total];
    let mut obj = Rat::zero();
    for i in 0..m {
        if art_of_row[i].is_some() {
            for j in 0..total {
                r[j] = &r[j] + &t[i][j];
            }
            obj += &t[i][total];
        }
    }
    for j in art_start..total {
        r[j] -= Rat::one();
    }

    let mut pivots = 0u64;
    loop {
        // Bland: entering column = smallest j with r[j] > 0.
        let Some(enter) = (0..total).find(|&j| r[j].is_positive()) else {
            break;
        };
        // Ratio test, Bland tie-break on smallest basis column.
        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][total] / &t[i][enter];
                let better = match &best {
                    None => true,
                    Some(b) => ratio < *b || (ratio == *b && basis[i] < basis[leave.unwrap()]),
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(li) = leave else {
            // Unbounded phase-one objective cannot happen; defensive stop.
            return PhaseOneResult::Infeasible(Vec::new());
        };
        pivot(&mut t, &mut basis, &mut r, &mut obj, li, enter, total);
        pivots += 1;
        if pivots > opts.max_pivots {
            return PhaseOneResult::LimitExceeded;
        }
    }

    if obj.is_positive() {
        // Rows whose artificial is still basic at positive level hint at an
        // infeasible subset.
        let mut hint = Vec::new();
        for i in 0..m {
            if basis[i] >= art_start && t[i][total].is_positive() {
                hint.push(rows[i].2);
            }
        }
        hint.sort_unstable();
        hint.dedup();
        return PhaseOneResult::Infeasible(hint);
    }

    let mut values: HashMap<VarId, Rat> = HashMap::new();
    for i in 0..m {
        if basis[i] < nv {
            values.insert(cols[basis[i]], t[i][total].clone());
        }
    }
    PhaseOneResult::Feasible(values)
}

fn pivot(
    t: &mut [Vec<Rat>],
    basis: &mut [usize],
    r: &mut [Rat],
    obj: &mut Rat,
    li: usize,
    enter: usize,
    total: usize,
) {
    let piv = t[li][enter].clone();
    for x in t[li].iter_mut() {
        *x = &*x / &piv;
    }
    for i in 0..t.len() {
        if i != li && !t[i][enter].is_zero() {
            let factor = t[i][enter].clone();
            for j in 0..=total {
                let delta = &factor * &t[li][j];
                t[i][j] = &t[i][j] - delta;
            }
        }
    }
    if !r[enter].is_zero() {
        let factor = r[enter].clone();
        for (j, rj) in r.iter_mut().enumerate() {
            let delta = &factor * &t[li][j];
            *rj = &*rj - delta;
        }
        *obj -= &factor * &t[li][total];
    }
    basis[li] = enter;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;
    use crate::solver::constraints::Origin;

    fn cs_with(names: &[&str]) -> (ConstraintSet, Vec<VarId>) {
        let mut cs = ConstraintSet::new();
        let ids = names
            .iter()
            .map(|n| cs.vars.fresh(n.to_string()))
            .collect();
        (cs, ids)
    }

    fn push(cs: &mut ConstraintSet, terms: Vec<(i64, VarId)>, rel: Rel, constant: i64) {
        let origin = cs.origin(Origin::default());
        let mut e = LinExpr::zero();
        for (c, v) in terms {
            e.add_term(rat_int(c), v);
        }
        e.constant = rat_int(constant);
        cs.push(e, rel, origin);
    }

    #[test]
    fn pinned_value_is_found() {
        let (mut cs, v) = cs_with(&["u"]);
        push(&mut cs, vec![(1, v[0])], Rel::Eq, -1); // u = 1
        push(&mut cs, vec![(1, v[0])], Rel::Le, -2); // u <= 2
        match solve(&cs) {
            SolveOutcome::Feasible(a) => assert_eq!(*a.get(v[0]), rat_int(1)),
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn contradiction_is_infeasible() {
        let (mut cs, v) = cs_with(&["u", "v"]);
        push(&mut cs, vec![(1, v[0]), (1, v[1])], Rel::Le, -1); // u + v <= 1
        push(&mut cs, vec![(1, v[0])], Rel::Ge, -2); // u >= 2
        assert!(matches!(solve(&cs), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn substitution_chain_respects_nonnegativity() {
        // x = y - 3 and y <= 2 forces x negative: infeasible.
        let (mut cs, v) = cs_with(&["x", "y"]);
        push(&mut cs, vec![(1, v[0]), (-1, v[1])], Rel::Eq, 3);
        push(&mut cs, vec![(1, v[1])], Rel::Le, -2);
        assert!(matches!(solve(&cs), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn bounded_selector_is_respected() {
        let mut cs = ConstraintSet::new();
        let s = cs.vars.fresh_bounded("s".into(), rat_int(1));
        let origin = cs.origin(Origin::default());
        let mut e = LinExpr::var(s);
        e.constant = rat_int(-2);
        cs.push(e, Rel::Ge, origin); // s >= 2 contradicts s <= 1
        assert!(matches!(solve(&cs), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn solve_matches_check() {
        let (mut cs, v) = cs_with(&["a", "b", "c"]);
        push(&mut cs, vec![(1, v[0]), (1, v[1]), (1, v[2])], Rel::Ge, -4);
        push(&mut cs, vec![(2, v[0]), (-1, v[1])], Rel::Le, 0);
        push(&mut cs, vec![(1, v[1]), (-3, v[2])], Rel::Eq, 0);
        match solve(&cs) {
            SolveOutcome::Feasible(a) => assert!(check_assignment(&cs, &a)),
            other => panic!("expected feasible, got {other:?}"),
        }
    }
}
