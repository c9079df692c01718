use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::rational::{ArithError, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    /// Canonical enumeration order used by the solver and the policy heads.
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
        }
    }

    pub fn apply(self, lhs: Rational, rhs: Rational) -> Result<Rational, ArithError> {
        match self {
            Op::Add => lhs.checked_add(rhs),
            Op::Sub => lhs.checked_sub(rhs),
            Op::Mul => lhs.checked_mul(rhs),
            Op::Div => lhs.checked_div(rhs),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Arithmetic expression tree. Parentheses are not nodes: they only shape
/// the tree, and [`fmt::Display`] emits the minimal set needed to re-parse it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(u64),
    Bin(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: Op, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn evaluate(&self) -> Result<Rational, ArithError> {
        match self {
            Expr::Lit(v) => Ok(Rational::new(*v as i128, 1)?),
            Expr::Bin(op, l, r) => op.apply(l.evaluate()?, r.evaluate()?),
        }
    }

    /// Leaf literals in left-to-right order.
    pub fn literals(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect_literals(&mut out);
        out
    }

    fn collect_literals(&self, out: &mut Vec<u64>) {
        match self {
            Expr::Lit(v) => out.push(*v),
            Expr::Bin(_, l, r) => {
                l.collect_literals(out);
                r.collect_literals(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Lit(_) => 1,
            Expr::Bin(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Lit(_) => 3,
            Expr::Bin(op, _, _) => op.precedence(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                // the parser is left-associative, so an equal-precedence right
                // child always needs parentheses to keep its shape
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, "{}", op.symbol())?;
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

/// A parsed submission: the expression and the optional claimed result after `=`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Option<u64>,
}

impl Equation {
    pub fn evaluate(&self) -> Result<Rational, ArithError> {
        self.lhs.evaluate()
    }

    /// Multiset of left-hand-side literals, sorted ascending.
    pub fn operand_multiset(&self) -> Vec<u64> {
        operand_multiset(&self.lhs)
    }
}

pub fn operand_multiset(expr: &Expr) -> Vec<u64> {
    let mut v = expr.literals();
    v.sort_unstable();
    v
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lhs)?;
        if let Some(rhs) = self.rhs {
            write!(f, "={rhs}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn lit(v: u64) -> Expr {
        Expr::Lit(v)
    }

    #[test]
    fn minimal_parentheses() {
        let e = Expr::bin(Op::Add, Expr::bin(Op::Mul, Expr::bin(Op::Add, lit(1), lit(6)), lit(3)), lit(13));
        assert_eq!(e.to_string(), "(1+6)*3+13");
        let right_nested = Expr::bin(Op::Sub, lit(1), Expr::bin(Op::Sub, lit(2), lit(3)));
        assert_eq!(right_nested.to_string(), "1-(2-3)");
        let left_nested = Expr::bin(Op::Sub, Expr::bin(Op::Sub, lit(1), lit(2)), lit(3));
        assert_eq!(left_nested.to_string(), "1-2-3");
    }

    #[test]
    fn multiset_keeps_duplicates() {
        let e = Expr::bin(Op::Add, lit(2), lit(2));
        assert_eq!(operand_multiset(&e), alloc::vec![2, 2]);
    }
}
