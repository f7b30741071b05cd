//! Static checker for logarithmic amortised cost annotations of first-order
//! functional programs over binary trees.
//!
//! The pipeline: parse a `.core` program, normalise it to let normal form,
//! simple-typecheck it, generate the linear constraint system of the
//! type-and-effect rules (with tactic-guided structural steps and a
//! Farkas-based discharge of symbolic potential comparisons), and decide
//! feasibility over nonnegative rationals. A cost-instrumented big-step
//! interpreter backs empirical validation of solved annotations.

pub mod linearize;
pub mod potential;
pub mod rat;
pub mod report;
pub mod semantics;
pub mod solver;
pub mod syntax;
pub mod typesystem;

pub use rat::Rat;
