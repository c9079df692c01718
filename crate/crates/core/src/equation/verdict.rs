use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::parser::parse;
use super::rational::Rational;

/// Outcome classes of a GeneralPoints submission, plus the two rows of the
/// reward table that are not formula classes (step limit, recognition).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictClass {
    /// Legal equation that equals the target.
    Success,
    /// Uses each card once but misses the target.
    WrongValue,
    /// Contains numbers outside the given multiset (or misses some).
    IllegalNumbers,
    /// Any other illegal equation: parse failures, division by zero, overflow.
    Malformed,
    /// Card recognition failed (additive adjustment).
    RecognitionMismatch,
    /// Verification budget exhausted (terminal penalty).
    StepLimit,
}

impl VerdictClass {
    pub const FORMULA_CLASSES: [VerdictClass; 4] = [
        VerdictClass::Success,
        VerdictClass::WrongValue,
        VerdictClass::IllegalNumbers,
        VerdictClass::Malformed,
    ];

    pub fn reward(self) -> f64 {
        match self {
            VerdictClass::Success => 5.0,
            VerdictClass::WrongValue => -1.0,
            VerdictClass::IllegalNumbers => -2.0,
            VerdictClass::Malformed => -3.0,
            VerdictClass::RecognitionMismatch => -1.5,
            VerdictClass::StepLimit => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VerdictClass::Success => "success",
            VerdictClass::WrongValue => "wrong_value",
            VerdictClass::IllegalNumbers => "illegal_numbers",
            VerdictClass::Malformed => "malformed",
            VerdictClass::RecognitionMismatch => "recognition_mismatch",
            VerdictClass::StepLimit => "step_limit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            VerdictClass::Success,
            VerdictClass::WrongValue,
            VerdictClass::IllegalNumbers,
            VerdictClass::Malformed,
            VerdictClass::RecognitionMismatch,
            VerdictClass::StepLimit,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

impl fmt::Display for VerdictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification of one submission. `reward` already includes the
/// recognition adjustment when `recognition_mismatch` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: VerdictClass,
    pub recognition_mismatch: bool,
    pub reward: f64,
}

impl Verdict {
    pub fn new(class: VerdictClass, recognition_mismatch: bool) -> Self {
        let mut reward = class.reward();
        if recognition_mismatch {
            reward += VerdictClass::RecognitionMismatch.reward();
        }
        Verdict { class, recognition_mismatch, reward }
    }

    pub fn is_success(&self) -> bool {
        self.class == VerdictClass::Success
    }
}

/// The structured answer fields of a GeneralPoints response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GpAnswer {
    pub cards: Option<Vec<String>>,
    pub number: Option<Vec<i64>>,
    pub formula: Option<String>,
}

/// Ground truth the verifier checks an answer against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpTruth {
    pub legal_numbers: [u64; 4],
    pub card_symbols: [String; 4],
    pub target: u64,
    pub recognition_channel: bool,
}

fn normalize_symbol(s: &str) -> String {
    let t = s.trim().trim_matches(|c| c == '\'' || c == '"').trim();
    let mut out = String::with_capacity(t.len());
    for c in t.chars() {
        out.extend(c.to_uppercase());
    }
    out
}

/// Compares the answer's card symbols with ground truth as multisets.
pub fn cards_match(answer: Option<&[String]>, truth: &[String; 4]) -> bool {
    let Some(cards) = answer else { return false };
    if cards.len() != 4 {
        return false;
    }
    let mut a: Vec<String> = cards.iter().map(|s| normalize_symbol(s)).collect();
    let mut b: Vec<String> = truth.iter().map(|s| normalize_symbol(s)).collect();
    a.sort();
    b.sort();
    a == b
}

/// Classifies a formula against the legal multiset and target.
///
/// Precedence: Malformed, then IllegalNumbers, then WrongValue, then Success.
/// A claimed right-hand side is ignored; only the left-hand value counts.
pub fn classify_formula(formula: &str, legal_numbers: &[u64; 4], target: u64) -> VerdictClass {
    let Ok(eq) = parse(formula) else {
        return VerdictClass::Malformed;
    };
    let Ok(value) = eq.evaluate() else {
        return VerdictClass::Malformed;
    };
    let mut legal = *legal_numbers;
    legal.sort_unstable();
    if eq.operand_multiset() != legal {
        return VerdictClass::IllegalNumbers;
    }
    if value != Rational::from_int(target as i64) {
        return VerdictClass::WrongValue;
    }
    VerdictClass::Success
}

pub fn classify(answer: &GpAnswer, truth: &GpTruth) -> Verdict {
    let class = match answer.formula.as_deref() {
        Some(f) => classify_formula(f, &truth.legal_numbers, truth.target),
        None => VerdictClass::Malformed,
    };
    let mismatch = truth.recognition_channel && !cards_match(answer.cards.as_deref(), &truth.card_symbols);
    Verdict::new(class, mismatch)
}
