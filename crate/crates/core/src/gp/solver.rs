//! Expert solver over fully parenthesised four-operand formulas.
//!
//! Candidates are enumerated in a fixed order so the first hit is
//! reproducible: slot permutations in lexicographic order, then operator
//! triples in `+ - * /` order (leftmost operator slowest), then the five tree
//! shapes. Slots index the operands after sorting them ascending.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::equation::{Expr, Op, Rational};

/// The five binary tree shapes with four leaves; operators are numbered by
/// their left-to-right position in the printed formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shape {
    /// ((a o b) o c) o d
    LeftChain,
    /// (a o (b o c)) o d
    LeftInner,
    /// (a o b) o (c o d)
    Balanced,
    /// a o ((b o c) o d)
    RightInner,
    /// a o (b o (c o d))
    RightChain,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::LeftChain, Shape::LeftInner, Shape::Balanced, Shape::RightInner, Shape::RightChain];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const NUM_PERMS: usize = 24;
pub const NUM_OP_TRIPLES: usize = 64;
pub const NUM_TEMPLATES: usize = NUM_PERMS * NUM_OP_TRIPLES * 5;

/// All permutations of `0..4` in lexicographic order.
pub const PERMUTATIONS: [[u8; 4]; NUM_PERMS] = {
    let mut out = [[0u8; 4]; NUM_PERMS];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                let mut d = 0;
                while d < 4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out[n] = [a as u8, b as u8, c as u8, d as u8];
                        n += 1;
                    }
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// One candidate formula over four operand slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Template {
    pub perm: u8,
    pub ops: [Op; 3],
    pub shape: Shape,
}

impl Template {
    pub fn from_index(index: usize) -> Option<Template> {
        if index >= NUM_TEMPLATES {
            return None;
        }
        let shape = Shape::ALL[index % 5];
        let ops_idx = (index / 5) % NUM_OP_TRIPLES;
        let perm = (index / (5 * NUM_OP_TRIPLES)) as u8;
        let ops = [Op::ALL[ops_idx / 16], Op::ALL[(ops_idx / 4) % 4], Op::ALL[ops_idx % 4]];
        Some(Template { perm, ops, shape })
    }

    pub fn index(&self) -> usize {
        let ops_idx = self.ops[0].index() * 16 + self.ops[1].index() * 4 + self.ops[2].index();
        (self.perm as usize * NUM_OP_TRIPLES + ops_idx) * 5 + self.shape.index()
    }

    pub fn slot_order(&self) -> [u8; 4] {
        PERMUTATIONS[self.perm as usize]
    }

    /// Builds the expression with the given (already sorted) operands in the slots.
    pub fn instantiate(&self, slots: &[u64; 4]) -> Expr {
        let p = self.slot_order();
        let [a, b, c, d] = p.map(|i| Expr::Lit(slots[i as usize]));
        let [o0, o1, o2] = self.ops;
        match self.shape {
            Shape::LeftChain => Expr::bin(o2, Expr::bin(o1, Expr::bin(o0, a, b), c), d),
            Shape::LeftInner => Expr::bin(o2, Expr::bin(o0, a, Expr::bin(o1, b, c)), d),
            Shape::Balanced => Expr::bin(o1, Expr::bin(o0, a, b), Expr::bin(o2, c, d)),
            Shape::RightInner => Expr::bin(o0, a, Expr::bin(o2, Expr::bin(o1, b, c), d)),
            Shape::RightChain => Expr::bin(o0, a, Expr::bin(o1, b, Expr::bin(o2, c, d))),
        }
    }

    /// Exact value without building a tree; `None` on division by zero.
    pub fn value(&self, slots: &[Rational; 4]) -> Option<Rational> {
        let p = self.slot_order();
        let [a, b, c, d] = p.map(|i| slots[i as usize]);
        let [o0, o1, o2] = self.ops;
        let v = match self.shape {
            Shape::LeftChain => o2.apply(o1.apply(o0.apply(a, b).ok()?, c).ok()?, d),
            Shape::LeftInner => o2.apply(o0.apply(a, o1.apply(b, c).ok()?).ok()?, d),
            Shape::Balanced => o1.apply(o0.apply(a, b).ok()?, o2.apply(c, d).ok()?),
            Shape::RightInner => o0.apply(a, o2.apply(o1.apply(b, c).ok()?, d).ok()?),
            Shape::RightChain => o0.apply(a, o1.apply(b, o2.apply(c, d).ok()?).ok()?),
        };
        v.ok()
    }
}

fn apply_f64(op: Op, a: f64, b: f64) -> f64 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
    }
}

impl Template {
    /// Floating-point value used to screen templates before the exact check.
    /// Any template with an exact value equal to the target lands within
    /// rounding error of it; the converse is confirmed exactly.
    fn approx(&self, slots: &[f64; 4]) -> f64 {
        let p = self.slot_order();
        let [a, b, c, d] = p.map(|i| slots[i as usize]);
        let [o0, o1, o2] = self.ops;
        let f = apply_f64;
        match self.shape {
            Shape::LeftChain => f(o2, f(o1, f(o0, a, b), c), d),
            Shape::LeftInner => f(o2, f(o0, a, f(o1, b, c)), d),
            Shape::Balanced => f(o1, f(o0, a, b), f(o2, c, d)),
            Shape::RightInner => f(o0, a, f(o2, f(o1, b, c), d)),
            Shape::RightChain => f(o0, a, f(o1, b, f(o2, c, d))),
        }
    }

    fn reaches(&self, slots: &[Rational; 4], approx: &[f64; 4], goal: Rational) -> bool {
        let v = self.approx(approx);
        let g = goal.to_f64();
        libm::fabs(v - g) <= 1e-6 * (1.0 + libm::fabs(g)) && self.value(slots) == Some(goal)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // placeholder letters name the sorted slots
        let e = self.instantiate(&[1, 2, 3, 4]);
        let s = alloc::format!("{e}");
        for ch in s.chars() {
            match ch {
                '1' => f.write_str("a")?,
                '2' => f.write_str("b")?,
                '3' => f.write_str("c")?,
                '4' => f.write_str("d")?,
                c => write!(f, "{c}")?,
            }
        }
        Ok(())
    }
}

/// A solver hit: the template and its instantiation over the sorted operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub template: Template,
    pub sorted: [u64; 4],
    pub expr: Expr,
}

pub fn sorted4(numbers: &[u64; 4]) -> [u64; 4] {
    let mut s = *numbers;
    s.sort_unstable();
    s
}

/// First template (in canonical order) whose value equals `target`.
pub fn solve(numbers: &[u64; 4], target: u64) -> Option<Solution> {
    let sorted = sorted4(numbers);
    let slots = sorted.map(|v| Rational::from_int(v as i64));
    let approx = sorted.map(|v| v as f64);
    let goal = Rational::from_int(target as i64);
    (0..NUM_TEMPLATES).find_map(|i| {
        let t = Template::from_index(i)?;
        t.reaches(&slots, &approx, goal).then(|| Solution { template: t, sorted, expr: t.instantiate(&sorted) })
    })
}

pub fn solve_formula(numbers: &[u64; 4], target: u64) -> Option<String> {
    solve(numbers, target).map(|s| alloc::format!("{}", s.expr))
}

/// Every template index that reaches the target (used by tests and analysis).
pub fn all_solutions(numbers: &[u64; 4], target: u64) -> Vec<usize> {
    let sorted = sorted4(numbers);
    let slots = sorted.map(|v| Rational::from_int(v as i64));
    let approx = sorted.map(|v| v as f64);
    let goal = Rational::from_int(target as i64);
    (0..NUM_TEMPLATES)
        .filter(|&i| Template::from_index(i).is_some_and(|t| t.reaches(&slots, &approx, goal)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn permutations_are_lexicographic() {
        assert_eq!(PERMUTATIONS[0], [0, 1, 2, 3]);
        assert_eq!(PERMUTATIONS[1], [0, 1, 3, 2]);
        assert_eq!(PERMUTATIONS[23], [3, 2, 1, 0]);
    }

    #[test]
    fn template_index_roundtrip() {
        for i in 0..NUM_TEMPLATES {
            assert_eq!(Template::from_index(i).unwrap().index(), i);
        }
        assert!(Template::from_index(NUM_TEMPLATES).is_none());
    }

    #[test]
    fn templates_print_distinctly() {
        let mut seen: Vec<String> = (0..NUM_TEMPLATES).map(|i| Template::from_index(i).unwrap().to_string()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), NUM_TEMPLATES);
    }

    #[test]
    fn solver_examples() {
        let s = solve(&[1, 3, 10, 6], 24).unwrap();
        assert_eq!(crate::equation::operand_multiset(&s.expr), alloc::vec![1, 3, 6, 10]);
        assert_eq!(s.expr.evaluate().unwrap(), Rational::from_int(24));
        assert!(solve(&[1, 3, 13, 6], 24).is_some());
        assert!(solve(&[1, 1, 1, 1], 24).is_none());
        // needs a fractional intermediate
        let s = solve(&[3, 3, 8, 8], 24).unwrap();
        assert_eq!(s.expr.evaluate().unwrap(), Rational::from_int(24));
    }

    #[test]
    fn first_hit_is_deterministic() {
        let a = solve_formula(&[6, 10, 3, 1], 24);
        let b = solve_formula(&[1, 3, 6, 10], 24);
        assert_eq!(a, b);
        let again = solve(&[10, 1, 6, 3], 24).unwrap();
        assert_eq!(Some(alloc::format!("{}", again.expr)), a);
    }
}
