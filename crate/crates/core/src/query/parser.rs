use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::QueryError;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {}", quote_single(s)),
            Tok::Num(n) => format!("number {n}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 17] = [
    "<>", "!=", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ":", ".", "-", ">", "<", "=",
];

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() || c == ';' {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c == '`' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '`' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '`' {
                return Err(syntax(pos, "unterminated quoted identifier", vec![]));
            }
            let s: String = chars[start..j].iter().collect();
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let n = s.parse::<f64>().map_err(|_| syntax(pos, &format!("bad number `{s}`"), vec![]))?;
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c == '\'' || c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => return Err(syntax(pos, "unterminated string", vec![])),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        let e = chars.get(j + 1).ok_or_else(|| syntax(pos, "unterminated string", vec![]))?;
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => *other,
                        });
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push((Tok::Str(s), pos));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(*s)) else {
            return Err(syntax(pos, &format!("unexpected character `{c}`"), vec![]));
        };
        advance(&mut i, &mut line, &mut col, sym.len());
        out.push((Tok::Sym(if *sym == "!=" { "<>" } else { sym }), pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

fn syntax(pos: Pos, message: &str, expected: Vec<String>) -> QueryError {
    QueryError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.to_string(),
        expected,
    }
}

const KEYWORDS: [&str; 28] = [
    "MATCH", "WHERE", "RETURN", "DISTINCT", "AS", "ORDER", "BY", "ASC", "DESC", "AND", "OR", "NOT", "EXISTS",
    "CASE", "WHEN", "THEN", "ELSE", "END", "IN", "CONTAINS", "STARTS", "ENDS", "WITH", "IS", "NULL", "TRUE",
    "FALSE", "SUBCLASS",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Node,
    Edge,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    kinds: BTreeMap<String, Kind>,
    /// First use of each variable in an expression.
    first_use: BTreeMap<String, Pos>,
}

type PResult<T> = Result<T, QueryError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        Err(syntax(
            self.pos(),
            &format!("expected {}, found {}", expected.join(" or "), self.peek().describe()),
            expected,
        ))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn is_kw_at(&self, k: usize, kw: &str) -> bool {
        matches!(self.peek_at(k), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        self.peek() == &Tok::Sym(sym(s))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.fail(&[&format!("`{s}`")])
        }
    }

    /// Any identifier, keywords included (labels, keys, aliases).
    fn name(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn variable_token(&self) -> Option<String> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => Some(s.clone()),
            _ => None,
        }
    }

    /// A variable names either nodes or edges throughout the query.
    fn bind(&mut self, name: &str, kind: Kind, pos: Pos) -> PResult<()> {
        match self.kinds.insert(name.to_string(), kind) {
            Some(k) if k != kind => Err(QueryError::VariableKind {
                name: name.to_string(),
                line: pos.line,
                col: pos.col,
            }),
            _ => Ok(()),
        }
    }

    fn use_var(&mut self, name: &str, pos: Pos) {
        self.first_use.entry(name.to_string()).or_insert(pos);
    }

    // ---- patterns --------------------------------------------------------

    fn props(&mut self) -> PResult<Vec<(String, Expr)>> {
        let mut out = Vec::new();
        if !self.eat_sym("{") {
            return Ok(out);
        }
        loop {
            let k = self.name("property name")?;
            self.expect_sym(":")?;
            out.push((k, self.literal()?));
            if self.eat_sym("}") {
                return Ok(out);
            }
            if !self.eat_sym(",") {
                return self.fail(&["`,`", "`}`"]);
            }
        }
    }

    fn node_pat(&mut self) -> PResult<NodePat> {
        // A bare variable is accepted as a node in pattern expressions.
        if let Some(v) = self.variable_token() {
            let pos = self.pos();
            self.bump();
            self.bind(&v, Kind::Node, pos)?;
            return Ok(NodePat {
                var: Some(v),
                label: None,
                props: Vec::new(),
            });
        }
        self.expect_sym("(")?;
        let mut var = None;
        if let Some(v) = self.variable_token() {
            let pos = self.pos();
            self.bump();
            self.bind(&v, Kind::Node, pos)?;
            var = Some(v);
        }
        let mut label = None;
        if self.eat_sym(":") {
            let lpos = self.pos();
            let l = self.name("label")?;
            if self.is_sym(":") {
                if l.eq_ignore_ascii_case("edge") {
                    return Err(syntax(
                        lpos,
                        "an edge cannot be bound inside a node pattern; bind it on the relationship instead, \
                         as in `(a)-[v:prerequisite]->(b)`",
                        vec![],
                    ));
                }
                return Err(syntax(self.pos(), "a node pattern takes at most one label", vec!["`)`".into()]));
            }
            label = Some(l);
        }
        let props = self.props()?;
        if !self.eat_sym(")") {
            return self.fail(&["`)`", "`:`", "`{`"]);
        }
        Ok(NodePat { var, label, props })
    }

    fn at_edge(&self) -> bool {
        (self.is_sym("-") && self.peek_at(1) == &Tok::Sym("["))
            || (self.is_sym("<") && self.peek_at(1) == &Tok::Sym("-") && self.peek_at(2) == &Tok::Sym("["))
    }

    fn edge_pat(&mut self) -> PResult<EdgePat> {
        let incoming = self.eat_sym("<");
        self.expect_sym("-")?;
        self.expect_sym("[")?;
        let mut var = None;
        if let Some(v) = self.variable_token() {
            let pos = self.pos();
            self.bump();
            self.bind(&v, Kind::Edge, pos)?;
            var = Some(v);
        }
        let label = if self.eat_sym(":") { Some(self.name("relationship type")?) } else { None };
        let props = self.props()?;
        if !self.eat_sym("]") {
            return self.fail(&["`]`", "`:`", "`{`"]);
        }
        self.expect_sym("-")?;
        let dir = if incoming {
            Direction::In
        } else {
            if !self.eat_sym(">") {
                return Err(syntax(
                    self.pos(),
                    "undirected relationships are not supported; expected `->`",
                    vec!["`>`".into()],
                ));
            }
            Direction::Out
        };
        Ok(EdgePat { var, label, props, dir })
    }

    fn path(&mut self) -> PResult<Path> {
        let start = self.node_pat()?;
        let mut steps = Vec::new();
        while self.at_edge() {
            let e = self.edge_pat()?;
            let n = self.node_pat()?;
            steps.push((e, n));
        }
        Ok(Path { start, steps })
    }

    // ---- clauses ---------------------------------------------------------

    fn clauses(&mut self, stop: &dyn Fn(&Parser) -> bool) -> PResult<Vec<Clause>> {
        let mut clauses = Vec::new();
        loop {
            if self.eat_kw("MATCH") {
                let mut paths = vec![self.path()?];
                while self.eat_sym(",") {
                    paths.push(self.path()?);
                }
                clauses.push(Clause::Match(paths));
            } else if self.eat_kw("WHERE") {
                clauses.push(Clause::Where(self.expr()?));
            } else if stop(self) {
                return Ok(clauses);
            } else {
                return self.fail(&["MATCH", "WHERE", "RETURN"]);
            }
        }
    }

    fn literal(&mut self) -> PResult<Expr> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Lit(Value::Num(if neg { -n } else { n })))
            }
            _ if neg => self.fail(&["number"]),
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Str(s)))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("true") || s.eq_ignore_ascii_case("false") => {
                self.bump();
                Ok(Expr::Lit(Value::Bool(s.eq_ignore_ascii_case("true"))))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("null") => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Sym("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat_sym("]") {
                    loop {
                        items.push(self.literal()?);
                        if self.eat_sym("]") {
                            break;
                        }
                        if !self.eat_sym(",") {
                            return self.fail(&["`,`", "`]`"]);
                        }
                    }
                }
                Ok(Expr::List(items))
            }
            _ => self.fail(&["literal"]),
        }
    }

    // ---- expressions -----------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.and_expr()?];
        while self.eat_kw("OR") {
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Or(items) })
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.not_expr()?];
        while self.eat_kw("AND") {
            items.push(self.not_expr()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::And(items) })
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.primary()?;
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<>") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ if self.is_kw("CONTAINS") => CmpOp::Contains,
            _ if self.is_kw("IN") => CmpOp::In,
            _ if self.is_kw("STARTS") && self.is_kw_at(1, "WITH") => {
                self.bump();
                CmpOp::StartsWith
            }
            _ if self.is_kw("ENDS") && self.is_kw_at(1, "WITH") => {
                self.bump();
                CmpOp::EndsWith
            }
            _ if self.is_kw("IS") => {
                self.bump();
                let negated = self.eat_kw("NOT");
                self.expect_kw("NULL")?;
                return Ok(Expr::IsNull(Box::new(left), negated));
            }
            _ => return Ok(left),
        };
        self.bump();
        let right = self.primary()?;
        Ok(Expr::Cmp(Box::new(left), op, Box::new(right)))
    }

    fn subquery(&mut self) -> PResult<SubQuery> {
        self.expect_sym("{")?;
        let clauses = self.clauses(&|p| p.is_sym("}"))?;
        if !clauses.iter().any(|c| matches!(c, Clause::Match(_))) {
            return Err(syntax(self.pos(), "EXISTS needs a MATCH", vec!["MATCH".into()]));
        }
        self.expect_sym("}")?;
        Ok(SubQuery { clauses })
    }

    fn pattern_expr(&mut self) -> PResult<Expr> {
        Ok(Expr::Pattern(Box::new(self.path()?)))
    }

    /// True when the tokens ahead form a pattern rather than an expression.
    fn pattern_ahead(&self) -> bool {
        let mut k = 0;
        if self.is_sym("(") {
            // Skip to the matching parenthesis.
            let mut depth = 0;
            loop {
                match self.peek_at(k) {
                    Tok::Sym("(") => depth += 1,
                    Tok::Sym(")") => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Tok::Eof => return false,
                    _ => {}
                }
                k += 1;
            }
            k += 1;
        } else if self.variable_token().is_some() {
            k = 1;
        } else {
            return false;
        }
        (self.peek_at(k) == &Tok::Sym("-") && self.peek_at(k + 1) == &Tok::Sym("["))
            || (self.peek_at(k) == &Tok::Sym("<")
                && self.peek_at(k + 1) == &Tok::Sym("-")
                && self.peek_at(k + 2) == &Tok::Sym("["))
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.pattern_ahead() {
            return self.pattern_expr();
        }
        if self.eat_kw("EXISTS") {
            return Ok(Expr::Exists(Box::new(self.subquery()?)));
        }
        if self.eat_kw("CASE") {
            let mut whens = Vec::new();
            while self.eat_kw("WHEN") {
                let c = self.expr()?;
                self.expect_kw("THEN")?;
                whens.push((c, self.expr()?));
            }
            if whens.is_empty() {
                return self.fail(&["WHEN"]);
            }
            let otherwise = if self.eat_kw("ELSE") { Some(Box::new(self.expr()?)) } else { None };
            self.expect_kw("END")?;
            return Ok(Expr::Case { whens, otherwise });
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if let Some(v) = self.variable_token() {
            let pos = self.pos();
            self.bump();
            self.use_var(&v, pos);
            if self.eat_sym(".") {
                let key = self.name("property name")?;
                return Ok(Expr::Prop(v, key));
            }
            return Ok(Expr::Var(v));
        }
        match self.peek() {
            Tok::Num(_) | Tok::Str(_) | Tok::Sym("[") | Tok::Sym("-") => self.literal(),
            Tok::Ident(s) if ["true", "false", "null"].iter().any(|k| s.eq_ignore_ascii_case(k)) => self.literal(),
            _ => self.fail(&["expression"]),
        }
    }

    // ---- query -----------------------------------------------------------

    fn query(&mut self) -> PResult<Query> {
        let subclass_match = if self.is_kw("SUBCLASS") {
            self.bump();
            self.expect_kw("MATCH")?;
            true
        } else {
            false
        };
        let clauses = self.clauses(&|p| p.is_kw("RETURN"))?;
        if !clauses.iter().any(|c| matches!(c, Clause::Match(_))) {
            return Err(syntax(self.pos(), "a query needs at least one MATCH", vec!["MATCH".into()]));
        }
        self.expect_kw("RETURN")?;
        let distinct = self.eat_kw("DISTINCT");
        let mut items = Vec::new();
        loop {
            let expr = self.expr()?;
            let alias = if self.eat_kw("AS") { Some(self.name("alias")?) } else { None };
            items.push(ReturnItem { expr, alias });
            if !self.eat_sym(",") {
                break;
            }
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            let aliases: BTreeSet<String> = items.iter().filter_map(|i| i.alias.clone()).collect();
            loop {
                // Aliases are visible in ORDER BY.
                let expr = match self.variable_token() {
                    Some(v) if aliases.contains(&v) && self.peek_at(1) != &Tok::Sym(".") => {
                        self.bump();
                        Expr::Var(v)
                    }
                    _ => self.expr()?,
                };
                let descending = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderKey { expr, descending });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.peek() != &Tok::Eof {
            return self.fail(&["end of query"]);
        }
        Ok(Query {
            subclass_match,
            clauses,
            ret: Return {
                distinct,
                items,
                order_by,
            },
        })
    }
}

fn sym(s: &str) -> &'static str {
    SYMBOLS.iter().find(|x| **x == s).copied().unwrap_or("")
}

/// Parses query text into an AST. Variables used in WHERE or RETURN must
/// be bound by some pattern of the query (or, inside a subquery, of an
/// enclosing query).
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        kinds: BTreeMap::new(),
        first_use: BTreeMap::new(),
    };
    let q = p.query()?;
    let mut bound = BTreeSet::new();
    clause_vars(&q.clauses, &mut bound);
    let mut unbound = Vec::new();
    for c in &q.clauses {
        if let Clause::Where(e) = c {
            expr_unbound(e, &bound, &mut unbound);
        }
    }
    // ORDER BY keys naming an alias are not variable uses.
    let aliases: BTreeSet<String> = q.ret.items.iter().filter_map(|i| i.alias.clone()).collect();
    for e in q.ret.items.iter().map(|i| &i.expr).chain(q.ret.order_by.iter().map(|k| &k.expr)) {
        match e {
            Expr::Var(v) if aliases.contains(v) => {}
            e => expr_unbound(e, &bound, &mut unbound),
        }
    }
    if let Some(name) = unbound.into_iter().min_by_key(|n| p.first_use.get(n).map(|p| (p.line, p.col))) {
        let pos = p.first_use.get(&name).copied().unwrap_or(Pos { line: 1, col: 1 });
        return Err(QueryError::UnboundVariable {
            name,
            line: pos.line,
            col: pos.col,
        });
    }
    Ok(q)
}

/// Variables bound by a path.
pub(crate) fn path_vars(p: &Path, out: &mut BTreeSet<String>) {
    out.extend(p.start.var.clone());
    for (e, n) in &p.steps {
        out.extend(e.var.clone());
        out.extend(n.var.clone());
    }
}

/// Variables bound by the MATCH clauses of a clause list.
pub(crate) fn clause_vars(clauses: &[Clause], out: &mut BTreeSet<String>) {
    for c in clauses {
        if let Clause::Match(paths) = c {
            for p in paths {
                path_vars(p, out);
            }
        }
    }
}

fn expr_unbound(e: &Expr, bound: &BTreeSet<String>, out: &mut Vec<String>) {
    match e {
        Expr::Null | Expr::Lit(_) => {}
        Expr::Var(v) | Expr::Prop(v, _) => {
            if !bound.contains(v) {
                out.push(v.clone());
            }
        }
        Expr::List(items) | Expr::And(items) | Expr::Or(items) => {
            items.iter().for_each(|i| expr_unbound(i, bound, out))
        }
        Expr::Cmp(a, _, b) => {
            expr_unbound(a, bound, out);
            expr_unbound(b, bound, out);
        }
        Expr::IsNull(a, _) | Expr::Not(a) => expr_unbound(a, bound, out),
        Expr::Exists(sub) => {
            let mut inner = bound.clone();
            clause_vars(&sub.clauses, &mut inner);
            for c in &sub.clauses {
                if let Clause::Where(w) = c {
                    expr_unbound(w, &inner, out);
                }
            }
        }
        Expr::Pattern(p) => {
            for (_, v) in p.start.props.iter().chain(p.steps.iter().flat_map(|(e, n)| e.props.iter().chain(&n.props))) {
                expr_unbound(v, bound, out);
            }
        }
        Expr::Case { whens, otherwise } => {
            for (c, v) in whens {
                expr_unbound(c, bound, out);
                expr_unbound(v, bound, out);
            }
            if let Some(o) = otherwise {
                expr_unbound(o, bound, out);
            }
        }
    }
}
