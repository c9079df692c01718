//! Exact evaluation and printing checked against a big-rational evaluator.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use ruleshift_core::equation::{parse, ArithError, Expr, Op};

fn oracle(e: &Expr) -> Option<BigRational> {
    match e {
        Expr::Lit(v) => Some(BigRational::from_integer(BigInt::from(*v))),
        Expr::Bin(op, l, r) => {
            let (a, b) = (oracle(l)?, oracle(r)?);
            match op {
                Op::Add => Some(a + b),
                Op::Sub => Some(a - b),
                Op::Mul => Some(a * b),
                Op::Div if b.is_zero() => None,
                Op::Div => Some(a / b),
            }
        }
    }
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![Just(Op::Add), Just(Op::Sub), Just(Op::Mul), Just(Op::Div)]
}

/// Trees of up to 16 leaves with literals in 0..=13; every intermediate
/// numerator and denominator stays far below the i128 range.
fn expr() -> impl Strategy<Value = Expr> {
    (0u64..=13).prop_map(Expr::Lit).prop_recursive(4, 16, 2, |inner| {
        (op(), inner.clone(), inner).prop_map(|(o, l, r)| Expr::bin(o, l, r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn rational_matches_big_rational(e in expr()) {
        match (e.evaluate(), oracle(&e)) {
            (Ok(v), Some(o)) => {
                prop_assert_eq!(BigInt::from(v.numerator()), o.numer().clone());
                prop_assert_eq!(BigInt::from(v.denominator()), o.denom().clone());
            }
            (Err(ArithError::DivisionByZero), None) => {}
            (got, want) => prop_assert!(false, "{e}: got {got:?}, oracle {want:?}"),
        }
    }

    #[test]
    fn printed_form_reparses_to_the_same_tree(e in expr(), rhs in proptest::option::of(0u64..100)) {
        let text = match rhs {
            Some(r) => format!("{e}={r}"),
            None => format!("{e}"),
        };
        let eq = parse(&text).unwrap();
        prop_assert_eq!(&eq.lhs, &e);
        prop_assert_eq!(eq.rhs, rhs);
        prop_assert_eq!(format!("{eq}"), text);
    }
}
