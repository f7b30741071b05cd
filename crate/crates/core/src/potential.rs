//! Resource annotations and their semantics: rank, basic log potential
//! functions over tuples of trees, potential evaluation, the sharing
//! operator and the pointwise annotation algebra.

use crate::rat::{parse_rat, rat_to_f64, show_rat, Rat};
use crate::semantics::Value;
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Index of a basic potential function over a tuple of `m` trees: either the
/// rank of the i-th tree (1-based), or the log monomial
/// `log2(sum_i a_i*|t_i| + b)`. Under the template restriction each `a_i` is
/// in {0,1} and `b` in {0,1,2}; indices outside the template arise from rule
/// schemas and from sharing and are kept exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Rank(usize),
    Log(Vec<u32>, u32),
}

impl Index {
    pub fn arity(&self) -> Option<usize> {
        match self {
            Index::Rank(_) => None,
            Index::Log(a, _) => Some(a.len()),
        }
    }

    /// The constant-one monomial log(0*.. + 2).
    pub fn const_one(m: usize) -> Index {
        Index::Log(vec![0; m], 2)
    }

    pub fn is_constant_monomial(&self) -> bool {
        matches!(self, Index::Log(a, _) if a.iter().all(|&x| x == 0))
    }

    /// True if the monomial is within the restricted template.
    pub fn in_template(&self) -> bool {
        match self {
            Index::Rank(_) => true,
            Index::Log(a, b) => a.iter().all(|&x| x <= 1) && *b <= 2,
        }
    }

    /// Identifier-safe rendering used in unknown names and SMT-LIB symbols.
    pub fn token(&self) -> String {
        match self {
            Index::Rank(i) => format!("rk{i}"),
            Index::Log(a, b) => {
                let digits: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                format!("l{}.{b}", digits.join("_"))
            }
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Rank(i) => write!(f, "rk({i})"),
            Index::Log(a, b) => {
                let digits: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                write!(f, "({}|{b})", digits.join(" "))
            }
        }
    }
}

/// log2(max(n, 1)): the clamped binary logarithm, total on naturals.
pub fn log2p(n: u64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        (n as f64).log2()
    }
}

/// Schoenmakers-style rank: rk(leaf) = 1,
/// rk((l,_,r)) = rk(l) + log|l| + log|r| + rk(r).
pub fn rank(t: &Value) -> f64 {
    match t {
        Value::Leaf => 1.0,
        Value::Node(l, _, r) => rank(l) + log2p(l.size()) + log2p(r.size()) + rank(r),
        _ => panic!("rank is defined on trees only"),
    }
}

/// Value of a basic potential function on a tuple of trees.
pub fn basic_value(idx: &Index, trees: &[&Value]) -> f64 {
    match idx {
        Index::Rank(i) => rank(trees[i - 1]),
        Index::Log(a, b) => {
            let sum: u64 = a
                .iter()
                .zip(trees)
                .map(|(&ai, t)| ai as u64 * t.size())
                .sum::<u64>()
                + *b as u64;
            log2p(sum)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PotentialError {
    #[error("annotation arity {ann} does not match {given} trees")]
    ArityMismatch { ann: usize, given: usize },
}

/// A finitely supported coefficient map over basic potential functions for a
/// tuple of `arity` trees. Coefficients are exact nonnegative rationals;
/// omitted indices are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub arity: usize,
    pub coeffs: BTreeMap<Index, Rat>,
}

impl Annotation {
    pub fn empty(arity: usize) -> Annotation {
        Annotation {
            arity,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, idx: Index, q: Rat) {
        debug_assert!(idx.arity().map(|a| a == self.arity).unwrap_or(true));
        if q.is_zero() {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, q);
        }
    }

    pub fn get(&self, idx: &Index) -> Rat {
        self.coeffs.get(idx).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Potential of a tuple of trees, evaluated in double precision.
    pub fn potential_of(&self, trees: &[&Value]) -> Result<f64, PotentialError> {
        if trees.len() != self.arity {
            return Err(PotentialError::ArityMismatch {
                ann: self.arity,
                given: trees.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(idx, q)| rat_to_f64(q) * basic_value(idx, trees))
            .sum())
    }

    /// Adds the constant K to the potential by bumping the (0..0|2)
    /// coefficient (the constant-one basic function).
    pub fn add_constant(&self, k: &Rat) -> Annotation {
        let mut out = self.clone();
        let idx = Index::const_one(self.arity);
        out.set(idx.clone(), out.get(&idx) + k);
        out
    }

    /// Pointwise multiplication by a constant.
    pub fn scale(&self, k: &Rat) -> Annotation {
        let mut out = Annotation::empty(self.arity);
        if k.is_zero() {
            return out;
        }
        for (idx, q) in &self.coeffs {
            out.set(idx.clone(), q * k);
        }
        out
    }

    /// Pointwise addition; arities must agree.
    pub fn add(&self, other: &Annotation) -> Result<Annotation, PotentialError> {
        if self.arity != other.arity {
            return Err(PotentialError::ArityMismatch {
                ann: self.arity,
                given: other.arity,
            });
        }
        let mut out = self.clone();
        for (idx, q) in &other.coeffs {
            out.set(idx.clone(), out.get(idx) + q);
        }
        Ok(out)
    }

    /// Indices (if any) outside the restricted template, e.g. a merged
    /// sharing coefficient with a_i = 2.
    pub fn template_violations(&self) -> Vec<Index> {
        self.coeffs
            .keys()
            .filter(|i| !i.in_template())
            .cloned()
            .collect()
    }
}

/// The sharing operator: for an annotation over `n+2` trees whose last two
/// positions will hold the same value, produces an annotation over `n+1`
/// trees with identical potential. Rank coefficients of the shared slots
/// add; log indices merge their last two entries, colliding images add.
pub fn share(q: &Annotation) -> Annotation {
    assert!(q.arity >= 2, "share needs at least two positions");
    let n = q.arity - 2;
    let mut out = Annotation::empty(n + 1);
    for (idx, c) in &q.coeffs {
        let merged = match idx {
            Index::Rank(i) if *i <= n => Index::Rank(*i),
            Index::Rank(_) => Index::Rank(n + 1),
            Index::Log(a, b) => {
                let mut m: Vec<u32> = a[..n].to_vec();
                m.push(a[n] + a[n + 1]);
                Index::Log(m, *b)
            }
        };
        out.set(merged.clone(), out.get(&merged) + c);
    }
    out
}

/// All indices of the restricted template for arity `m`: the m ranks plus
/// every log monomial with entries in {0,1} and constant in {0,1,2},
/// excluding the all-zero monomial (its value is identically zero).
pub fn index_universe(m: usize) -> Vec<Index> {
    let mut out = Vec::new();
    for i in 1..=m {
        out.push(Index::Rank(i));
    }
    for bits in 0..(1u64 << m) {
        let a: Vec<u32> = (0..m)
            .map(|i| if bits & (1 << i) != 0 { 1 } else { 0 })
            .collect();
        for b in 0..=2u32 {
            if bits == 0 && b == 0 {
                continue;
            }
            out.push(Index::Log(a.clone(), b));
        }
    }
    out
}

/// Annotation file (`.coef`) contents for one function.
#[derive(Debug, Clone, Default)]
pub struct CoefBlock {
    pub with_cost: Option<(Annotation, Annotation)>,
    pub cost_free: Option<(Annotation, Annotation)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoefError {
    #[error("line {0}: {1}")]
    At(usize, String),
}

/// Parses a `.coef` annotation file. Format per function:
///
/// ```text
/// fn splay
/// with-cost:
///   q* = 1
///   q(1|0) = 3
///   q(0|2) = 1
/// result:
///   q* = 1
/// cost-free:
///   q(1|0) = 1
/// result:
///   q(1|0) = 1
/// ```
///
/// `q*` is the rank coefficient of the sole tree (alias `q1`); `q(a1 .. am|b)`
/// the log monomial coefficient. Omitted coefficients are zero. The arity of
/// each block is fixed by the enclosing function's tree parameters.
pub fn parse_coef_file(
    text: &str,
    arity_of: impl Fn(&str) -> Option<usize>,
) -> Result<BTreeMap<String, CoefBlock>, CoefError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Section {
        None,
        WithCost,
        WithCostResult,
        CostFree,
        CostFreeResult,
    }
    let mut out: BTreeMap<String, CoefBlock> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut arity = 0usize;
    let mut section = Section::None;
    for (lineno, raw) in text.lines().enumerate() {
        let ln = lineno + 1;
        let line = match raw.find("--") {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("fn ") {
            let name = name.trim().to_string();
            arity = arity_of(&name)
                .ok_or_else(|| CoefError::At(ln, format!("unknown function `{name}`")))?;
            out.entry(name.clone()).or_default();
            current = Some(name);
            section = Section::None;
            continue;
        }
        let Some(fname) = current.clone() else {
            return Err(CoefError::At(ln, "expected `fn <name>` header".into()));
        };
        let block = out.get_mut(&fname).expect("block exists");
        match line {
            "with-cost:" => {
                block.with_cost = Some((Annotation::empty(arity), Annotation::empty(1)));
                section = Section::WithCost;
                continue;
            }
            "cost-free:" => {
                block.cost_free = Some((Annotation::empty(arity), Annotation::empty(1)));
                section = Section::CostFree;
                continue;
            }
            "result:" => {
                section = match section {
                    Section::WithCost => Section::WithCostResult,
                    Section::CostFree => Section::CostFreeResult,
                    _ => {
                        return Err(CoefError::At(
                            ln,
                            "`result:` must follow a with-cost/cost-free section".into(),
                        ))
                    }
                };
                continue;
            }
            _ => {}
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| CoefError::At(ln, format!("expected `<coeff> = <rational>`: {line}")))?;
        let value = parse_rat(rhs)
            .ok_or_else(|| CoefError::At(ln, format!("bad rational `{}`", rhs.trim())))?;
        let (target, m) = match section {
            Section::WithCost => (&mut block.with_cost.as_mut().unwrap().0, arity),
            Section::WithCostResult => (&mut block.with_cost.as_mut().unwrap().1, 1),
            Section::CostFree => (&mut block.cost_free.as_mut().unwrap().0, arity),
            Section::CostFreeResult => (&mut block.cost_free.as_mut().unwrap().1, 1),
            Section::None => {
                return Err(CoefError::At(
                    ln,
                    "coefficient outside a section; write `with-cost:` first".into(),
                ))
            }
        };
        let idx = parse_coef_index(lhs.trim(), m).map_err(|e| CoefError::At(ln, e))?;
        target.set(idx, value);
    }
    Ok(out)
}

fn parse_coef_index(s: &str, arity: usize) -> Result<Index, String> {
    if s == "q*" {
        if arity != 1 {
            return Err("q* is only valid for arity-1 annotations; use q<i>".into());
        }
        return Ok(Index::Rank(1));
    }
    if let Some(rest) = s.strip_prefix('q') {
        if let Ok(i) = rest.parse::<usize>() {
            if i == 0 || i > arity {
                return Err(format!("rank index {i} out of range 1..={arity}"));
            }
            return Ok(Index::Rank(i));
        }
        if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (avec, b) = inner
                .split_once('|')
                .ok_or_else(|| format!("expected q(a1 .. am|b), got `{s}`"))?;
            let a: Vec<u32> = avec
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            if a.len() != arity {
                return Err(format!(
                    "index has {} entries but the annotation arity is {arity}",
                    a.len()
                ));
            }
            let b = b.trim().parse::<u32>().map_err(|e| e.to_string())?;
            return Ok(Index::Log(a, b));
        }
    }
    Err(format!("unrecognised coefficient `{s}`"))
}

/// Renders an annotation in `.coef` syntax (used by reports).
pub fn show_annotation(a: &Annotation) -> String {
    if a.coeffs.is_empty() {
        return "  (empty)".into();
    }
    let mut lines = Vec::new();
    for (idx, q) in &a.coeffs {
        let lhs = match idx {
            Index::Rank(1) if a.arity == 1 => "q*".to_string(),
            Index::Rank(i) => format!("q{i}"),
            Index::Log(av, b) => {
                let digits: Vec<String> = av.iter().map(|x| x.to_string()).collect();
                format!("q({}|{b})", digits.join(" "))
            }
        };
        lines.push(format!("  {lhs} = {}", show_rat(q)));
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_frac, rat_int};
    use crate::semantics::Value;

    fn node(l: Value, r: Value) -> Value {
        Value::node(l, 0, r)
    }

    #[test]
    fn rank_of_small_trees() {
        assert_eq!(rank(&Value::Leaf), 1.0);
        assert_eq!(rank(&node(Value::Leaf, Value::Leaf)), 2.0);
        // A left list with two internal nodes: (n+1) + sum_{i=1}^{n} log i = 4.
        let left_list = node(node(Value::Leaf, Value::Leaf), Value::Leaf);
        assert_eq!(rank(&left_list), 4.0);
    }

    #[test]
    fn log2p_clamps() {
        assert_eq!(log2p(0), 0.0);
        assert_eq!(log2p(1), 0.0);
        assert_eq!(log2p(2), 1.0);
    }

    #[test]
    fn potential_of_example_annotation() {
        // q* = 1, q(1|0) = 3, q(0|2) = 1 on the two-leaf tree: 2 + 3 + 1 = 6.
        let mut q = Annotation::empty(1);
        q.set(Index::Rank(1), rat_int(1));
        q.set(Index::Log(vec![1], 0), rat_int(3));
        q.set(Index::Log(vec![0], 2), rat_int(1));
        let t = node(Value::Leaf, Value::Leaf);
        assert_eq!(q.potential_of(&[&t]).unwrap(), 6.0);

        let mut constant = Annotation::empty(1);
        constant.set(Index::Log(vec![0], 2), rat_int(1));
        assert_eq!(constant.potential_of(&[&t]).unwrap(), 1.0);
        assert_eq!(Annotation::empty(1).potential_of(&[&t]).unwrap(), 0.0);
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let q = Annotation::empty(2);
        let t = Value::Leaf;
        assert!(q.potential_of(&[&t]).is_err());
    }

    #[test]
    fn share_merges_ranks_and_log_entries() {
        let mut q = Annotation::empty(2);
        q.set(Index::Rank(1), rat_int(1));
        q.set(Index::Rank(2), rat_int(1));
        let shared = share(&q);
        assert_eq!(shared.arity, 1);
        assert_eq!(shared.get(&Index::Rank(1)), rat_int(2));

        let mut q2 = Annotation::empty(2);
        q2.set(Index::Log(vec![1, 0], 1), rat_int(2));
        q2.set(Index::Log(vec![0, 1], 1), rat_frac(1, 2));
        let s2 = share(&q2);
        assert_eq!(s2.get(&Index::Log(vec![1], 1)), rat_frac(5, 2));

        assert!(share(&Annotation::empty(2)).is_empty());
    }

    #[test]
    fn share_can_escape_the_template() {
        let mut q = Annotation::empty(2);
        q.set(Index::Log(vec![1, 1], 0), rat_int(1));
        let s = share(&q);
        assert_eq!(s.get(&Index::Log(vec![2], 0)), rat_int(1));
        assert_eq!(s.template_violations(), vec![Index::Log(vec![2], 0)]);
    }

    #[test]
    fn add_constant_bumps_only_the_constant_slot() {
        let mut q = Annotation::empty(1);
        q.set(Index::Log(vec![0], 2), rat_int(1));
        let q2 = q.add_constant(&rat_int(1));
        assert_eq!(q2.get(&Index::Log(vec![0], 2)), rat_int(2));
        assert_eq!(q2.coeffs.len(), 1);
    }

    #[test]
    fn scale_zero_gives_empty() {
        let mut q = Annotation::empty(1);
        q.set(Index::Rank(1), rat_int(5));
        assert!(q.scale(&rat_int(0)).is_empty());
    }

    #[test]
    fn universe_counts() {
        assert_eq!(
            index_universe(0),
            vec![Index::Log(vec![], 1), Index::Log(vec![], 2)]
        );
        assert_eq!(index_universe(1).len(), 1 + 5);
        assert_eq!(index_universe(2).len(), 2 + 11);
    }

    #[test]
    fn coef_file_round_trip() {
        let text = "fn splay\nwith-cost:\n  q* = 1\n  q(1|0) = 3\n  q(0|2) = 1\nresult:\n  q* = 1\ncost-free:\n  q(1|0) = 1\nresult:\n  q(1|0) = 1\n";
        let blocks = parse_coef_file(text, |f| if f == "splay" { Some(1) } else { None }).unwrap();
        let b = &blocks["splay"];
        let (q, qp) = b.with_cost.as_ref().unwrap();
        assert_eq!(q.get(&Index::Rank(1)), rat_int(1));
        assert_eq!(q.get(&Index::Log(vec![1], 0)), rat_int(3));
        assert_eq!(qp.get(&Index::Rank(1)), rat_int(1));
        let (p, pp) = b.cost_free.as_ref().unwrap();
        assert_eq!(p.get(&Index::Log(vec![1], 0)), rat_int(1));
        assert_eq!(pp.get(&Index::Log(vec![1], 0)), rat_int(1));
    }
}
