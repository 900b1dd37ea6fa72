//! Grammar:
//!
//! ```text
//! expr := term ('&' term)*
//! term := NAME '[' args ']' | NAME
//! ```
//!
//! with `NAME` one of `Action[v]`, `Collect[item, v]`, `Avoid[item, v]`,
//! `Explore[v]`. An omitted `v` is 1 and `Avoid[i, v]` means
//! `Collect[i, -v]`. `∧` is accepted as a synonym for `&`.

use std::fmt;

use thiserror::Error;

use crate::config::WorldConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum RewardExpr {
    Action(f64),
    Collect(String, f64),
    Explore(f64),
    Combined(Box<RewardExpr>, Box<RewardExpr>),
}

/// Parse failure; `position` is a character offset into the input.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("at position {position}: {message}")]
pub struct DslError {
    pub position: usize,
    pub message: String,
}

impl DslError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        DslError { position, message: message.into() }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    at: usize,
    config: Option<&'a WorldConfig>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|c| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.at).copied()
    }

    fn name(&mut self) -> Result<(usize, String), DslError> {
        self.skip_ws();
        let start = self.at;
        while self.chars.get(self.at).is_some_and(|c| c.is_alphanumeric() || *c == '_') {
            self.at += 1;
        }
        if start == self.at {
            return Err(match self.chars.get(self.at) {
                Some(c) => DslError::new(start, format!("expected a name, found `{c}`")),
                None => DslError::new(start, "expected a name, found end of input"),
            });
        }
        Ok((start, self.chars[start..self.at].iter().collect()))
    }

    fn number(&mut self) -> Result<f64, DslError> {
        self.skip_ws();
        let start = self.at;
        while self.chars.get(self.at).is_some_and(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E')) {
            self.at += 1;
        }
        let text: String = self.chars[start..self.at].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ if text.is_empty() => Err(DslError::new(start, "expected a number")),
            _ => Err(DslError::new(start, format!("invalid number `{text}`"))),
        }
    }

    fn args(&mut self) -> Result<Vec<(usize, Arg)>, DslError> {
        let mut args = Vec::new();
        if self.peek() != Some('[') {
            return Ok(args);
        }
        self.at += 1;
        loop {
            let pos = {
                self.skip_ws();
                self.at
            };
            let arg = match self.peek() {
                Some(c) if c.is_alphabetic() || c == '_' => Arg::Name(self.name()?.1),
                _ => Arg::Number(self.number()?),
            };
            args.push((pos, arg));
            match self.peek() {
                Some(',') => self.at += 1,
                Some(']') => {
                    self.at += 1;
                    return Ok(args);
                }
                Some(c) => return Err(DslError::new(self.at, format!("expected `,` or `]`, found `{c}`"))),
                None => return Err(DslError::new(self.at, "unterminated argument list")),
            }
        }
    }

    fn term(&mut self) -> Result<RewardExpr, DslError> {
        let (start, name) = self.name()?;
        let args_at = self.at;
        let args = self.args()?;
        let value = |args: &[(usize, Arg)], i: usize| -> Result<f64, DslError> {
            match args.get(i) {
                None => Ok(1.0),
                Some((_, Arg::Number(v))) => Ok(*v),
                Some((p, Arg::Name(n))) => Err(DslError::new(*p, format!("expected a number, found `{n}`"))),
            }
        };
        let arity = |max: usize| -> Result<(), DslError> {
            if args.len() > max {
                Err(DslError::new(args[max].0, format!("`{name}` takes at most {max} argument(s)")))
            } else {
                Ok(())
            }
        };
        match name.as_str() {
            "Action" | "Explore" => {
                arity(1)?;
                let v = value(&args, 0)?;
                Ok(if name == "Action" { RewardExpr::Action(v) } else { RewardExpr::Explore(v) })
            }
            "Collect" | "Avoid" => {
                arity(2)?;
                let item = match args.first() {
                    Some((p, Arg::Name(n))) => {
                        if let Some(config) = self.config {
                            if config.item_index(n).is_none() {
                                return Err(DslError::new(*p, format!("unknown item type `{n}`")));
                            }
                        }
                        n.clone()
                    }
                    Some((p, Arg::Number(_))) => return Err(DslError::new(*p, "expected an item type name")),
                    None => return Err(DslError::new(args_at, format!("`{name}` requires an item type"))),
                };
                let v = value(&args, 1)?;
                Ok(RewardExpr::Collect(item, if name == "Avoid" { -v } else { v }))
            }
            _ => Err(DslError::new(start, format!("unknown reward primitive `{name}`"))),
        }
    }

    fn expr(&mut self) -> Result<RewardExpr, DslError> {
        let mut left = self.term()?;
        while matches!(self.peek(), Some('&') | Some('∧')) {
            self.at += 1;
            let right = self.term()?;
            left = RewardExpr::Combined(Box::new(left), Box::new(right));
        }
        Ok(left)
    }
}

enum Arg {
    Name(String),
    Number(f64),
}

impl RewardExpr {
    /// Parses without checking item names against a config.
    pub fn parse(text: &str) -> Result<RewardExpr, DslError> {
        parse_with(text, None)
    }

    /// Primitive terms in left-to-right order.
    pub fn terms(&self) -> Vec<&RewardExpr> {
        match self {
            RewardExpr::Combined(a, b) => {
                let mut out = a.terms();
                out.extend(b.terms());
                out
            }
            other => vec![other],
        }
    }
}

fn parse_with(text: &str, config: Option<&WorldConfig>) -> Result<RewardExpr, DslError> {
    let mut p = Parser { chars: text.chars().collect(), at: 0, config };
    let expr = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(DslError::new(p.at, format!("unexpected `{c}` after expression")));
    }
    Ok(expr)
}

/// Parses a reward expression, resolving item names against `config`.
pub fn parse_reward(text: &str, config: &WorldConfig) -> Result<RewardExpr, DslError> {
    parse_with(text, Some(config))
}

fn write_value(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v == 1.0 {
        Ok(())
    } else {
        write!(f, "[{v:?}]")
    }
}

/// Canonical form: `&`-separated, `Avoid` written as `Collect` with a
/// negated value, unit values omitted.
impl fmt::Display for RewardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardExpr::Action(v) => {
                f.write_str("Action")?;
                write_value(f, *v)
            }
            RewardExpr::Explore(v) => {
                f.write_str("Explore")?;
                write_value(f, *v)
            }
            RewardExpr::Collect(item, v) if *v == 1.0 => write!(f, "Collect[{item}]"),
            RewardExpr::Collect(item, v) => write!(f, "Collect[{item},{v:?}]"),
            RewardExpr::Combined(a, b) => write!(f, "{a} & {b}"),
        }
    }
}
