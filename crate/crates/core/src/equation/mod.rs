//! Parsing, exact evaluation and classification of submitted equations.

mod ast;
mod parser;
mod rational;
mod verdict;

pub use ast::{operand_multiset, Equation, Expr, Op};
pub use parser::{parse, ParseError, MAX_DEPTH};
pub use rational::{ArithError, Rational};
pub use verdict::{cards_match, classify, classify_formula, GpAnswer, GpTruth, Verdict, VerdictClass};

/// Exact value of the left-hand side of a parsed equation.
pub fn evaluate(eq: &Equation) -> Result<Rational, ArithError> {
    eq.evaluate()
}
