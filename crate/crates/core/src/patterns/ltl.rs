//! Propositional LTL on ultimately periodic words.

use std::fmt;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::explorer::{ExploredLts, Lasso};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(p) => f.write_str(p),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Eventually(a) => write!(f, "F {a}"),
            Formula::Always(a) => write!(f, "G {a}"),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '!' => {
                out.push((i, Tok::Not));
                i += 1;
            }
            '&' => {
                out.push((i, Tok::And));
                i += 1;
            }
            '|' => {
                out.push((i, Tok::Or));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Tok::Implies));
                i += 2;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &src[start..i];
                match word {
                    "X" | "F" | "G" | "U" | "W" => {
                        out.push((start, Tok::Op(word.chars().next().unwrap())))
                    }
                    _ => out.push((start, Tok::Ident(word.to_string()))),
                }
            }
            _ => {
                return Err(Error::Formula {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Formula {
            pos: self.offset(),
            msg: msg.to_string(),
        })
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::Or(
                Box::new(Formula::Not(Box::new(lhs))),
                Box::new(rhs),
            ));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::Or(Box::new(lhs), Box::new(self.conjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.binary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::And(Box::new(lhs), Box::new(self.binary()?));
        }
        Ok(lhs)
    }

    /// `U` and `W`, right associative.
    fn binary(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        match self.peek() {
            Some(Tok::Op('U')) => {
                self.pos += 1;
                Ok(Formula::Until(Box::new(lhs), Box::new(self.binary()?)))
            }
            Some(Tok::Op('W')) => {
                self.pos += 1;
                let rhs = self.binary()?;
                Ok(weak_until(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Op('X')) => {
                self.pos += 1;
                Ok(Formula::Next(Box::new(self.unary()?)))
            }
            Some(Tok::Op('F')) => {
                self.pos += 1;
                Ok(Formula::Eventually(Box::new(self.unary()?)))
            }
            Some(Tok::Op('G')) => {
                self.pos += 1;
                Ok(Formula::Always(Box::new(self.unary()?)))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::Ident(w)) => {
                self.pos += 1;
                Ok(match w.as_str() {
                    "true" => Formula::True,
                    "false" => Formula::False,
                    _ => Formula::Prop(w),
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implication()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(f)
            }
            Some(_) => self.err("expected a proposition or `(`"),
            None => self.err("unexpected end of formula"),
        }
    }
}

fn weak_until(a: Formula, b: Formula) -> Formula {
    let g = Formula::Always(Box::new(a.clone()));
    Formula::Or(
        Box::new(Formula::Until(Box::new(a), Box::new(b))),
        Box::new(g),
    )
}

/// Parses `! & | -> X F G U W`, parentheses, `true`, `false` and
/// lowercase proposition names.
pub fn parse(src: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        end: src.len(),
    };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

/// Truth of `f` at position 0 of `word[..loop_start] · word[loop_start..]^ω`.
/// A proposition holds at a position iff the event's boolean attribute is true.
pub fn eval_on_word(f: &Formula, word: &[&Event], loop_start: usize) -> bool {
    assert!(
        loop_start < word.len(),
        "the periodic part must be nonempty"
    );
    eval(f, word, loop_start)[0]
}

fn eval(f: &Formula, word: &[&Event], loop_start: usize) -> Vec<bool> {
    let n = word.len();
    let succ = |i: usize| if i + 1 < n { i + 1 } else { loop_start };
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Prop(p) => word.iter().map(|e| e.prop(p)).collect(),
        Formula::Not(a) => eval(a, word, loop_start).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) => {
            let (x, y) = (eval(a, word, loop_start), eval(b, word, loop_start));
            x.iter().zip(&y).map(|(a, b)| *a && *b).collect()
        }
        Formula::Or(a, b) => {
            let (x, y) = (eval(a, word, loop_start), eval(b, word, loop_start));
            x.iter().zip(&y).map(|(a, b)| *a || *b).collect()
        }
        Formula::Next(a) => {
            let x = eval(a, word, loop_start);
            (0..n).map(|i| x[succ(i)]).collect()
        }
        Formula::Until(a, b) => {
            let (x, y) = (eval(a, word, loop_start), eval(b, word, loop_start));
            until(&x, &y, succ)
        }
        Formula::Eventually(b) => {
            let y = eval(b, word, loop_start);
            until(&vec![true; n], &y, succ)
        }
        Formula::Always(a) => {
            let x: Vec<bool> = eval(a, word, loop_start).into_iter().map(|v| !v).collect();
            until(&vec![true; n], &x, succ)
                .into_iter()
                .map(|v| !v)
                .collect()
        }
    }
}

/// Least fixpoint of `v = y ∨ (x ∧ v∘succ)`.
fn until(x: &[bool], y: &[bool], succ: impl Fn(usize) -> usize) -> Vec<bool> {
    let n = x.len();
    let mut v = y.to_vec();
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            if !v[i] && x[i] && v[succ(i)] {
                v[i] = true;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

/// Evaluates `f` on the event word of a lasso in `lts`.
pub fn eval_ltl_on_lasso(f: &Formula, lasso: &Lasso, lts: &ExploredLts) -> bool {
    let word: Vec<&Event> = lasso
        .stem
        .iter()
        .chain(&lasso.cycle)
        .map(|&e| lts.event(e))
        .collect();
    eval_on_word(f, &word, lasso.stem.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: bool) -> Event {
        Event::with_attrs("E", [("p", p)])
    }

    #[test]
    fn parses_with_precedence() {
        let f = parse("G (q & !p -> F p)").unwrap();
        assert_eq!(f.to_string(), "G (!(q & !p) | F p)");
        let g = parse("a U b U c").unwrap();
        assert_eq!(g.to_string(), "(a U (b U c))");
    }

    #[test]
    fn reports_offsets() {
        match parse("p & ") {
            Err(Error::Formula { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("p $ q"), Err(Error::Formula { pos: 2, .. })));
        assert!(parse("(p").is_err());
    }

    #[test]
    fn basic_truths() {
        let (t, f) = (e(true), e(false));
        let w = [&f, &t, &f];
        assert!(eval_on_word(&parse("G true").unwrap(), &w, 1));
        assert!(eval_on_word(&parse("G F p").unwrap(), &w, 1));
        assert!(!eval_on_word(&parse("F G p").unwrap(), &w, 1));
        assert!(!eval_on_word(&parse("F p").unwrap(), &[&f, &f], 1));
        assert!(eval_on_word(&parse("X p").unwrap(), &w, 1));
        assert!(eval_on_word(&parse("!p U p").unwrap(), &w, 1));
        assert!(eval_on_word(&parse("!p W false").unwrap(), &[&f], 0));
        assert!(!eval_on_word(&parse("!p U false").unwrap(), &[&f], 0));
    }

    #[test]
    fn loop_back_reaches_stem_tail() {
        let (t, f) = (e(true), e(false));
        // p only in the stem: F G !p holds, G F p does not
        let w = [&t, &f];
        assert!(eval_on_word(&parse("F G !p").unwrap(), &w, 1));
        assert!(!eval_on_word(&parse("G F p").unwrap(), &w, 1));
    }
}
