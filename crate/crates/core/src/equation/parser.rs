//! Recursive-descent parser for submitted formulas.
//!
//! ```text
//! equation := expr ( '=' integer )? EOF
//! expr     := term  ( ('+' | '-') term )*
//! term     := atom  ( ('*' | '/') atom )*
//! atom     := integer | '(' expr ')'
//! ```
//! Whitespace is ignored everywhere. Unary minus is not part of the grammar.

use alloc::string::String;

use super::ast::{Equation, Expr, Op};

/// Trees deeper than this are rejected so evaluation and drop stay bounded.
pub const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty formula")]
    Empty,
    #[error("unexpected character {found:?} at byte {at}")]
    UnexpectedChar { found: char, at: usize },
    #[error("unexpected {found} at byte {at}, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str, at: usize },
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("integer literal too large at byte {at}")]
    LiteralTooLarge { at: usize },
    #[error("formula nested deeper than {MAX_DEPTH}")]
    TooDeep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Op(Op),
    LParen,
    RParen,
    Eq,
    End,
}

impl Tok {
    fn describe(self) -> String {
        use alloc::format;
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Op(op) => format!("operator '{}'", op.symbol()),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eq => "'='".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        let at = self.pos;
        let Some(c) = self.src[self.pos..].chars().next() else {
            return Ok((Tok::End, at));
        };
        if c.is_ascii_digit() {
            let mut value: u64 = 0;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                let d = (bytes[self.pos] - b'0') as u64;
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(d))
                    .ok_or(ParseError::LiteralTooLarge { at })?;
                self.pos += 1;
            }
            return Ok((Tok::Num(value), at));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' => Tok::Op(Op::Add),
            '-' => Tok::Op(Op::Sub),
            '*' => Tok::Op(Op::Mul),
            '/' => Tok::Op(Op::Div),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Eq,
            other => return Err(ParseError::UnexpectedChar { found: other, at }),
        };
        Ok((tok, at))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    open: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.tok {
            Tok::End if self.open > 0 => ParseError::Unbalanced,
            Tok::RParen if self.open == 0 => ParseError::Unbalanced,
            _ => ParseError::UnexpectedToken { found: self.tok.describe(), expected, at: self.at },
        }
    }

    fn expr(&mut self, depth: usize) -> Result<(Expr, usize), ParseError> {
        let (mut lhs, mut d) = self.term(depth)?;
        while let Tok::Op(op @ (Op::Add | Op::Sub)) = self.tok {
            self.bump()?;
            let (rhs, rd) = self.term(depth)?;
            d = d.max(rd) + 1;
            if depth + d > MAX_DEPTH {
                return Err(ParseError::TooDeep);
            }
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok((lhs, d))
    }

    fn term(&mut self, depth: usize) -> Result<(Expr, usize), ParseError> {
        let (mut lhs, mut d) = self.atom(depth)?;
        while let Tok::Op(op @ (Op::Mul | Op::Div)) = self.tok {
            self.bump()?;
            let (rhs, rd) = self.atom(depth)?;
            d = d.max(rd) + 1;
            if depth + d > MAX_DEPTH {
                return Err(ParseError::TooDeep);
            }
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok((lhs, d))
    }

    fn atom(&mut self, depth: usize) -> Result<(Expr, usize), ParseError> {
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok((Expr::Lit(v), 1))
            }
            Tok::LParen => {
                if depth + 1 > MAX_DEPTH {
                    return Err(ParseError::TooDeep);
                }
                self.open += 1;
                self.bump()?;
                let inner = self.expr(depth + 1)?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.open -= 1;
                self.bump()?;
                Ok(inner)
            }
            _ => Err(self.unexpected("a number or '('")),
        }
    }
}

/// Parses a formula such as `"(1+6)*3+13=24"`.
pub fn parse(text: &str) -> Result<Equation, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser { lexer: Lexer { src: text, pos: 0 }, tok: Tok::End, at: 0, open: 0 };
    p.bump()?;
    let (lhs, _) = p.expr(0)?;
    let rhs = if p.tok == Tok::Eq {
        p.bump()?;
        match p.tok {
            Tok::Num(v) => {
                p.bump()?;
                Some(v)
            }
            _ => return Err(p.unexpected("an integer after '='")),
        }
    } else {
        None
    };
    if p.tok != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(Equation { lhs, rhs })
}
