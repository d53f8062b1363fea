//! Line-oriented record syntax shared by rule documents, schema files and
//! context files.
//!
//! ```text
//! # comment
//! keyword word word:sub -> word {key: value, key: [v, v]}
//! keyword point(1,2)
//! ```
//!
//! A record ends at a newline unless the newline sits inside `{}`, `[]`
//! or a literal's parentheses.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::spatial::GeoPoint;
use crate::temporal::{parse_instant, parse_minutes, TimeOfDay, TimeWindow, WeekdaySet};
use crate::value::{Geometry, TimeLiteral, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn at(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// Bare identifier, optionally qualified as `type:subtype`.
    Word(String),
    Arrow,
    Value(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub keyword: String,
    pub items: Vec<(Item, Pos)>,
    pub props: BTreeMap<String, Value>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Lit(Value),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Newline,
}

const LITERAL_FUNCS: &[&str] = &["point", "polygon", "daily", "at", "duration", "between"];

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: usize,
    col: usize,
    depth: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            i: 0,
            line: 1,
            col: 1,
            depth: 0,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|&(_, c)| c)
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let pos = self.pos();
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        out.push((Tok::Newline, pos));
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                '{' | '[' => {
                    self.bump();
                    self.depth += 1;
                    out.push((if c == '{' { Tok::LBrace } else { Tok::LBracket }, pos));
                }
                '}' | ']' => {
                    self.bump();
                    if self.depth == 0 {
                        return Err(SyntaxError::at(pos, format!("unbalanced `{c}`")));
                    }
                    self.depth -= 1;
                    out.push((if c == '}' { Tok::RBrace } else { Tok::RBracket }, pos));
                }
                ':' => {
                    self.bump();
                    out.push((Tok::Colon, pos));
                }
                ',' => {
                    self.bump();
                    out.push((Tok::Comma, pos));
                }
                '-' if self.peek_at(1) == Some('>') => {
                    self.bump();
                    self.bump();
                    out.push((Tok::Arrow, pos));
                }
                '"' | '\'' => out.push((Tok::Str(self.string(c)?), pos)),
                c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                    out.push((Tok::Num(self.number()?), pos))
                }
                c if c.is_alphabetic() || c == '_' => {
                    let ident = self.ident();
                    if LITERAL_FUNCS.contains(&ident.as_str()) && self.peek() == Some('(') {
                        let inner = self.parenthesized(pos)?;
                        let lit = parse_func_literal(&ident, &inner)
                            .map_err(|m| SyntaxError::at(pos, m))?;
                        out.push((Tok::Lit(lit), pos));
                    } else {
                        out.push((Tok::Ident(ident), pos));
                    }
                }
                other => {
                    return Err(SyntaxError::at(pos, format!("unexpected character `{other}`")))
                }
            }
        }
        if self.depth != 0 {
            return Err(SyntaxError::at(self.pos(), "unexpected end of input inside brackets"));
        }
        out.push((Tok::Newline, self.pos()));
        Ok(out)
    }

    fn string(&mut self, quote: char) -> Result<String, SyntaxError> {
        let start = self.pos();
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(SyntaxError::at(start, "unterminated string")),
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c @ ('"' | '\'' | '\\')) => s.push(c),
                    Some(c) => {
                        return Err(SyntaxError::at(self.pos(), format!("unknown escape `\\{c}`")))
                    }
                    None => return Err(SyntaxError::at(start, "unterminated string")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<f64, SyntaxError> {
        let pos = self.pos();
        let start = self.offset();
        if matches!(self.peek(), Some('-' | '+')) {
            self.bump();
        }
        while let Some(c) = self.peek() {
            let exp_sign = matches!(c, '-' | '+')
                && matches!(self.chars.get(self.i.wrapping_sub(1)), Some((_, 'e' | 'E')));
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                self.bump();
            } else {
                break;
            }
        }
        let text = &self.src[start..self.offset()];
        text.parse::<f64>()
            .ok()
            .filter(|n| n.is_finite())
            .ok_or_else(|| SyntaxError::at(pos, format!("malformed number `{text}`")))
    }

    fn ident(&mut self) -> String {
        let start = self.offset();
        while let Some(c) = self.peek() {
            let dash = c == '-' && self.peek_at(1) != Some('>');
            if c.is_alphanumeric() || c == '_' || c == '.' || dash {
                self.bump();
            } else {
                break;
            }
        }
        self.src[start..self.offset()].to_string()
    }

    /// Consumes a balanced `( ... )` group and returns its inner text.
    fn parenthesized(&mut self, pos: Pos) -> Result<String, SyntaxError> {
        self.bump();
        let start = self.offset();
        let mut depth = 1;
        while let Some(c) = self.bump() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        // `)` is one byte.
                        let end = self.offset() - 1;
                        return Ok(self.src[start..end].to_string());
                    }
                }
                _ => {}
            }
        }
        Err(SyntaxError::at(pos, "unterminated literal"))
    }
}

fn parse_num(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|n| n.is_finite())
        .ok_or_else(|| format!("expected a number, got `{}`", s.trim()))
}

fn parse_pair(s: &str) -> Result<GeoPoint, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    Ok(GeoPoint::new(parse_num(x)?, parse_num(y)?))
}

fn parse_days(s: &str) -> Result<std::collections::BTreeSet<WeekdaySet>, String> {
    let names: Vec<&str> = match s.trim() {
        "weekdays" => vec!["mon", "tue", "wed", "thu", "fri"],
        "weekends" => vec!["sat", "sun"],
        other => other.split('+').collect(),
    };
    names
        .iter()
        .map(|n| WeekdaySet::parse(n.trim()).ok_or_else(|| format!("unknown day `{}`", n.trim())))
        .collect()
}

/// Parses the inside of a function-style literal such as `daily(06:00,18:00)`.
fn parse_func_literal(name: &str, inner: &str) -> Result<Value, String> {
    match name {
        "point" => Ok(Value::Geo(Geometry::Point(parse_pair(inner)?))),
        "polygon" => {
            let mut ring = Vec::new();
            let mut rest = inner.trim();
            while !rest.is_empty() {
                let body = rest
                    .strip_prefix('(')
                    .ok_or_else(|| format!("expected `(` in polygon near `{rest}`"))?;
                let close = body.find(')').ok_or("unterminated polygon vertex")?;
                ring.push(parse_pair(&body[..close])?);
                rest = body[close + 1..].trim_start();
                rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
            }
            Ok(Value::Geo(Geometry::Polygon(ring)))
        }
        "daily" => {
            let parts: Vec<&str> = inner.split(',').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err("daily(HH:MM,HH:MM[,days]) takes two or three arguments".into());
            }
            let start = TimeOfDay::parse(parts[0]).map_err(|e| e.to_string())?;
            let end = TimeOfDay::parse(parts[1]).map_err(|e| e.to_string())?;
            let days = parts.get(2).map(|d| parse_days(d)).transpose()?;
            TimeWindow::daily_on(start, end, days)
                .map(|w| Value::Time(TimeLiteral::Window(w)))
                .map_err(|e| e.to_string())
        }
        "at" => parse_instant(inner)
            .map(|t| Value::Time(TimeLiteral::Instant(t)))
            .map_err(|e| e.to_string()),
        "between" => {
            let (a, b) = inner
                .split_once(',')
                .ok_or("between(start,end) takes two instants")?;
            let a = parse_instant(a).map_err(|e| e.to_string())?;
            let b = parse_instant(b).map_err(|e| e.to_string())?;
            TimeWindow::absolute(a, b)
                .map(|w| Value::Time(TimeLiteral::Window(w)))
                .map_err(|e| e.to_string())
        }
        "duration" => parse_minutes(inner)
            .map(|m| Value::Time(TimeLiteral::Duration(m)))
            .map_err(|e| e.to_string()),
        _ => Err(format!("unknown literal `{name}`")),
    }
}

/// Parses a single standalone literal, e.g. `daily(06:00,18:00)` or `"x"`.
pub fn parse_literal(text: &str) -> Result<Value, SyntaxError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, i: 0 };
    let v = p.value()?;
    p.skip_newlines();
    if !p.at_end() {
        return Err(SyntaxError::at(p.pos(), "trailing input after literal"));
    }
    Ok(v)
}

pub fn parse_records(text: &str) -> Result<Vec<Record>, SyntaxError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, i: 0 };
    let mut out = Vec::new();
    loop {
        p.skip_newlines();
        if p.at_end() {
            return Ok(out);
        }
        out.push(p.record()?);
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i.min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i.min(self.toks.len() - 1)].1
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i.min(self.toks.len() - 1)].clone();
        self.i += 1;
        t
    }

    fn skip_newlines(&mut self) {
        while !self.at_end() && *self.peek() == Tok::Newline {
            self.i += 1;
        }
    }

    fn record(&mut self) -> Result<Record, SyntaxError> {
        let (tok, pos) = self.next();
        let Tok::Ident(keyword) = tok else {
            return Err(SyntaxError::at(pos, "expected a record keyword"));
        };
        let mut items = Vec::new();
        let mut props = BTreeMap::new();
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Newline => {
                    self.i += 1;
                    break;
                }
                Tok::Arrow => {
                    self.i += 1;
                    items.push((Item::Arrow, pos));
                }
                Tok::Ident(w) if w != "true" && w != "false" => {
                    self.i += 1;
                    let mut word = w;
                    if *self.peek() == Tok::Colon {
                        self.i += 1;
                        match self.next() {
                            (Tok::Ident(sub), _) => {
                                word.push(':');
                                word.push_str(&sub);
                            }
                            (_, p) => return Err(SyntaxError::at(p, "expected subtype after `:`")),
                        }
                    }
                    items.push((Item::Word(word), pos));
                }
                Tok::LBrace => {
                    props = self.props()?;
                    if !matches!(self.peek(), Tok::Newline) {
                        return Err(SyntaxError::at(
                            self.pos(),
                            "property map must end the record",
                        ));
                    }
                }
                _ => items.push((Item::Value(self.value()?), pos)),
            }
        }
        Ok(Record {
            keyword,
            items,
            props,
            pos,
        })
    }

    fn props(&mut self) -> Result<BTreeMap<String, Value>, SyntaxError> {
        self.i += 1; // `{`
        let mut map = BTreeMap::new();
        loop {
            let (tok, pos) = self.next();
            let key = match tok {
                Tok::RBrace => return Ok(map),
                Tok::Ident(k) | Tok::Str(k) => k,
                _ => return Err(SyntaxError::at(pos, "expected property name or `}`")),
            };
            if !matches!(self.next().0, Tok::Colon) {
                return Err(SyntaxError::at(pos, format!("expected `:` after `{key}`")));
            }
            let value = self.value()?;
            if map.insert(key.clone(), value).is_some() {
                return Err(SyntaxError::at(pos, format!("duplicate property `{key}`")));
            }
            match self.next() {
                (Tok::Comma, _) => {}
                (Tok::RBrace, _) => return Ok(map),
                (_, p) => return Err(SyntaxError::at(p, "expected `,` or `}`")),
            }
        }
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        let (tok, pos) = self.next();
        match tok {
            Tok::Str(s) => Ok(Value::Str(s)),
            Tok::Num(n) => Ok(Value::Num(n)),
            Tok::Lit(v) => Ok(v),
            Tok::Ident(w) if w == "true" => Ok(Value::Bool(true)),
            Tok::Ident(w) if w == "false" => Ok(Value::Bool(false)),
            Tok::LBracket => {
                let mut items = Vec::new();
                if *self.peek() == Tok::RBracket {
                    self.i += 1;
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value()?);
                    match self.next() {
                        (Tok::Comma, _) if *self.peek() == Tok::RBracket => {
                            self.i += 1;
                            break;
                        }
                        (Tok::Comma, _) => {}
                        (Tok::RBracket, _) => break,
                        (_, p) => return Err(SyntaxError::at(p, "expected `,` or `]`")),
                    }
                }
                Value::list(items).map_err(|k| {
                    SyntaxError::at(pos, format!("list elements must share one kind; found a {k}"))
                })
            }
            Tok::Ident(w) => Err(SyntaxError::at(
                pos,
                format!("unquoted word `{w}` where a value was expected"),
            )),
            _ => Err(SyntaxError::at(pos, "expected a value")),
        }
    }
}
