use std::fmt;

use crate::value::{fmt_number, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// `SUBCLASS MATCH` header: labels also match subclass_of ancestors of
    /// nodes carrying the label.
    pub subclass_match: bool,
    pub clauses: Vec<Clause>,
    pub ret: Return,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    Match(Vec<Path>),
    Where(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub start: NodePat,
    pub steps: Vec<(EdgePat, NodePat)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePat {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `-[..]->`
    Out,
    /// `<-[..]-`
    In,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePat {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Expr)>,
    pub dir: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
    StartsWith,
    EndsWith,
    In,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Contains => "CONTAINS",
            CmpOp::StartsWith => "STARTS WITH",
            CmpOp::EndsWith => "ENDS WITH",
            CmpOp::In => "IN",
        }
    }
}

/// A subquery body: `{ MATCH ... WHERE ... }`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubQuery {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Null,
    Lit(Value),
    List(Vec<Expr>),
    Var(String),
    Prop(String, String),
    Cmp(Box<Expr>, CmpOp, Box<Expr>),
    IsNull(Box<Expr>, bool),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    Exists(Box<SubQuery>),
    /// A path used as a boolean: true when it has a match extending the
    /// current bindings.
    Pattern(Box<Path>),
    Case {
        whens: Vec<(Expr, Expr)>,
        otherwise: Option<Box<Expr>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ReturnItem {
    /// Column name: the alias, else the expression text.
    pub fn name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.expr.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Return {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
    pub order_by: Vec<OrderKey>,
}

pub(crate) fn quote_single(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &[(String, Expr)]) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{k}: {v}")?;
    }
    f.write_str("}")
}

impl fmt::Display for NodePat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{l}")?;
        }
        write_props(f, &self.props)?;
        f.write_str(")")
    }
}

impl fmt::Display for EdgePat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.dir == Direction::In { "<-[" } else { "-[" })?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{l}")?;
        }
        write_props(f, &self.props)?;
        f.write_str(if self.dir == Direction::In { "]-" } else { "]->" })
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (e, n) in &self.steps {
            write!(f, "{e}{n}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Match(paths) => {
                f.write_str("MATCH ")?;
                for (i, p) in paths.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Clause::Where(e) => write!(f, "WHERE {e}"),
        }
    }
}

/// Operands of AND/OR/NOT that need parentheses to keep their shape.
fn wrapped(e: &Expr) -> String {
    match e {
        Expr::And(_) | Expr::Or(_) => format!("({e})"),
        _ => e.to_string(),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Null => f.write_str("null"),
            Expr::Lit(Value::Str(s)) => f.write_str(&quote_single(s)),
            Expr::Lit(Value::Num(n)) => f.write_str(&fmt_number(*n)),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Expr::Var(v) => f.write_str(v),
            Expr::Prop(v, k) => write!(f, "{v}.{k}"),
            Expr::Cmp(a, op, b) => write!(f, "{} {} {}", operand(a), op.as_str(), operand(b)),
            Expr::IsNull(e, negated) => {
                write!(f, "{} IS {}NULL", operand(e), if *negated { "NOT " } else { "" })
            }
            Expr::And(items) | Expr::Or(items) => {
                let sep = if matches!(self, Expr::And(_)) { " AND " } else { " OR " };
                let parts: Vec<_> = items.iter().map(wrapped).collect();
                f.write_str(&parts.join(sep))
            }
            Expr::Not(e) => write!(f, "NOT {}", wrapped(e)),
            Expr::Exists(sub) => {
                f.write_str("EXISTS { ")?;
                for c in &sub.clauses {
                    write!(f, "{c} ")?;
                }
                f.write_str("}")
            }
            Expr::Pattern(p) => write!(f, "{p}"),
            Expr::Case { whens, otherwise } => {
                f.write_str("CASE")?;
                for (c, v) in whens {
                    write!(f, " WHEN {c} THEN {v}")?;
                }
                if let Some(e) = otherwise {
                    write!(f, " ELSE {e}")?;
                }
                f.write_str(" END")
            }
        }
    }
}

/// Comparison operands that are themselves boolean compounds need
/// parentheses.
fn operand(e: &Expr) -> String {
    match e {
        Expr::And(_) | Expr::Or(_) | Expr::Not(_) | Expr::Cmp(..) | Expr::IsNull(..) => format!("({e})"),
        _ => e.to_string(),
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subclass_match {
            f.write_str("SUBCLASS MATCH\n")?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        f.write_str("RETURN ")?;
        if self.ret.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.ret.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(a) = &item.alias {
                write!(f, " AS {a}")?;
            }
        }
        if !self.ret.order_by.is_empty() {
            f.write_str("\nORDER BY ")?;
            for (i, k) in self.ret.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", k.expr)?;
                if k.descending {
                    f.write_str(" DESC")?;
                }
            }
        }
        Ok(())
    }
}
