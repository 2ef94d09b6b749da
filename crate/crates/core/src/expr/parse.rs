//! Tokenizer and precedence-climbing parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. Identifiers are resolved later by the chart.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(BigRational),
    Ident {
        name: String,
        position: usize,
    },
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call {
        name: String,
        args: Vec<Ast>,
        position: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (pos, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                k += 1;
            }
            let lit: String = chars[start..k].iter().map(|(_, c)| c).collect();
            out.push((Tok::Num(parse_decimal(&lit, pos)?), pos));
        } else if c.is_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_alphanumeric() || chars[k].1 == '_') {
                k += 1;
            }
            let id: String = chars[start..k].iter().map(|(_, c)| c).collect();
            out.push((Tok::Ident(id), pos));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(Error::Syntax {
                        position: pos,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((t, pos));
            k += 1;
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn parse_decimal(lit: &str, pos: usize) -> Result<BigRational> {
    let bad = || Error::Syntax {
        position: pos,
        message: format!("malformed number `{lit}`"),
    };
    let (int, frac) = match lit.split_once('.') {
        Some((i, f)) => (i, f),
        None => (lit, ""),
    };
    if frac.contains('.') || (int.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(n, d))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax {
                position: self.pos(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Ast::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast> {
        let position = self.pos();
        match self.bump() {
            Tok::Num(n) => Ok(Ast::Num(n)),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Ast::Call { name, args, position })
                } else {
                    Ok(Ast::Ident { name, position })
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::End => Err(Error::Syntax {
                position,
                message: "unexpected end of input".into(),
            }),
            t => Err(Error::Syntax {
                position,
                message: format!("unexpected token {t:?}"),
            }),
        }
    }
}

/// Parse text into an unresolved syntax tree.
pub fn parse_ast(text: &str) -> Result<Ast> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(Error::Syntax {
            position: p.pos(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

impl Ast {
    /// Fold to a rational constant when the tree has no identifiers and only
    /// integer powers.
    pub fn constant_value(&self) -> Option<BigRational> {
        match self {
            Ast::Num(n) => Some(n.clone()),
            Ast::Neg(a) => a.constant_value().map(|v| -v),
            Ast::Bin(op, a, b) => {
                let (x, y) = (a.constant_value()?, b.constant_value()?);
                match op {
                    BinOp::Add => Some(x + y),
                    BinOp::Sub => Some(x - y),
                    BinOp::Mul => Some(x * y),
                    BinOp::Div => (!y.is_zero()).then(|| x / y),
                    BinOp::Pow => {
                        if !y.is_integer() {
                            return None;
                        }
                        let k: i32 = y.to_integer().try_into().ok()?;
                        if x.is_zero() && k < 0 {
                            return None;
                        }
                        Some(num_traits::Pow::pow(&x, k))
                    }
                }
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|v| v.is_one())
    }
}
