//! Property values carried by nodes and edges.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDateTime;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::spatial::GeoPoint;
use crate::temporal::{fmt_instant, TimeWindow};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Num(f64),
    Bool(bool),
    List(Vec<Value>),
    Time(TimeLiteral),
    Geo(Geometry),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeLiteral {
    Window(TimeWindow),
    Instant(NaiveDateTime),
    /// Whole minutes.
    Duration(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    /// Raw ring; validity is checked when it is turned into a `Region`.
    Polygon(Vec<GeoPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    String,
    Number,
    Bool,
    List,
    Window,
    Instant,
    Duration,
    Point,
    Polygon,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Number => "number",
            ValueKind::Bool => "bool",
            ValueKind::List => "list",
            ValueKind::Window => "window",
            ValueKind::Instant => "instant",
            ValueKind::Duration => "duration",
            ValueKind::Point => "point",
            ValueKind::Polygon => "polygon",
        }
    }

    fn rank(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Str(_) => ValueKind::String,
            Value::Num(_) => ValueKind::Number,
            Value::Bool(_) => ValueKind::Bool,
            Value::List(_) => ValueKind::List,
            Value::Time(TimeLiteral::Window(_)) => ValueKind::Window,
            Value::Time(TimeLiteral::Instant(_)) => ValueKind::Instant,
            Value::Time(TimeLiteral::Duration(_)) => ValueKind::Duration,
            Value::Geo(Geometry::Point(_)) => ValueKind::Point,
            Value::Geo(Geometry::Polygon(_)) => ValueKind::Polygon,
        }
    }

    /// Builds a list, rejecting mixed element kinds.
    pub fn list(items: Vec<Value>) -> Result<Value, ValueKind> {
        if let Some(first) = items.first() {
            let k = first.kind();
            if let Some(bad) = items.iter().find(|v| v.kind() != k) {
                return Err(bad.kind());
            }
        }
        Ok(Value::List(items))
    }

    /// Lists are homogeneous, recursively.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Value::List(items) => {
                items.windows(2).all(|w| w[0].kind() == w[1].kind())
                    && items.iter().all(Value::is_well_formed)
            }
            _ => true,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_window(&self) -> Option<&TimeWindow> {
        match self {
            Value::Time(TimeLiteral::Window(w)) => Some(w),
            _ => None,
        }
    }

    pub fn as_instant(&self) -> Option<&NaiveDateTime> {
        match self {
            Value::Time(TimeLiteral::Instant(t)) => Some(t),
            _ => None,
        }
    }

    pub fn as_minutes(&self) -> Option<i64> {
        match self {
            Value::Time(TimeLiteral::Duration(m)) => Some(*m),
            _ => None,
        }
    }

    pub fn as_point(&self) -> Option<GeoPoint> {
        match self {
            Value::Geo(Geometry::Point(p)) => Some(*p),
            _ => None,
        }
    }

    pub fn as_polygon(&self) -> Option<&[GeoPoint]> {
        match self {
            Value::Geo(Geometry::Polygon(p)) => Some(p),
            _ => None,
        }
    }

    /// Total order used for ORDER BY and deterministic output: by kind
    /// first, then by value within a kind.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::List(a), Value::List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Value::Time(TimeLiteral::Instant(a)), Value::Time(TimeLiteral::Instant(b))) => {
                a.cmp(b)
            }
            (Value::Time(TimeLiteral::Duration(a)), Value::Time(TimeLiteral::Duration(b))) => {
                a.cmp(b)
            }
            (a, b) if a.kind() == b.kind() => a.to_string().cmp(&b.to_string()),
            (a, b) => a.kind().rank().cmp(&b.kind().rank()),
        }
    }

    /// Equality with numeric tolerance for integral/float mixes only.
    pub fn loose_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::List(a), Value::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.loose_eq(y))
            }
            _ => self == other,
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Num(n)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Num(n as f64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<GeoPoint> for Value {
    fn from(p: GeoPoint) -> Self {
        Value::Geo(Geometry::Point(p))
    }
}

impl From<TimeWindow> for Value {
    fn from(w: TimeWindow) -> Self {
        Value::Time(TimeLiteral::Window(w))
    }
}

pub(crate) fn fmt_number(n: f64) -> String {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

/// Quotes a string using the document literal syntax.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    /// Literal syntax accepted by the document parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(&quote(s)),
            Value::Num(n) => f.write_str(&fmt_number(*n)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Time(TimeLiteral::Window(w)) => write!(f, "{w}"),
            Value::Time(TimeLiteral::Instant(t)) => write!(f, "at({})", fmt_instant(t)),
            Value::Time(TimeLiteral::Duration(m)) => write!(f, "duration({m}min)"),
            Value::Geo(Geometry::Point(p)) => {
                write!(f, "point({},{})", fmt_number(p.x), fmt_number(p.y))
            }
            Value::Geo(Geometry::Polygon(ring)) => {
                f.write_str("polygon(")?;
                for (i, p) in ring.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "({},{})", fmt_number(p.x), fmt_number(p.y))?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Value {
    /// Plain rendering for tables: strings unquoted, everything else as
    /// its literal.
    pub fn render(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::List(items) => {
                let parts: Vec<_> = items.iter().map(Value::render).collect();
                format!("[{}]", parts.join(", "))
            }
            other => other.to_string(),
        }
    }
}

// JSON form: strings, numbers, booleans and arrays map directly; time and
// geometry literals are wrapped as `{"literal": "<literal syntax>"}`.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Str(v) => s.serialize_str(v),
            Value::Num(n) => s.serialize_f64(*n),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::List(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for v in items {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
            other => {
                #[derive(Serialize)]
                struct Lit {
                    literal: String,
                }
                Lit {
                    literal: other.to_string(),
                }
                .serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        from_json(&raw).map_err(de::Error::custom)
    }
}

pub(crate) fn from_json(v: &serde_json::Value) -> Result<Value, String> {
    use serde_json::Value as J;
    match v {
        J::String(s) => Ok(Value::Str(s.clone())),
        J::Number(n) => n
            .as_f64()
            .map(Value::Num)
            .ok_or_else(|| format!("number {n} out of range")),
        J::Bool(b) => Ok(Value::Bool(*b)),
        J::Array(items) => {
            let items = items.iter().map(from_json).collect::<Result<Vec<_>, _>>()?;
            Value::list(items).map_err(|k| format!("mixed list: unexpected {k} element"))
        }
        J::Object(map) => {
            let lit = map
                .get("literal")
                .and_then(J::as_str)
                .filter(|_| map.len() == 1)
                .ok_or("objects must have the form {\"literal\": \"...\"}")?;
            crate::ingest::parse_literal(lit).map_err(|e| e.to_string())
        }
        J::Null => Err("null is not a property value".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_must_be_homogeneous() {
        assert!(Value::list(vec![Value::from(1.0), Value::from(2.0)]).is_ok());
        assert_eq!(
            Value::list(vec![Value::from(1.0), Value::from("x")]),
            Err(ValueKind::String)
        );
        let nested = Value::List(vec![Value::List(vec![Value::from(1.0), Value::from(true)])]);
        assert!(!nested.is_well_formed());
    }

    #[test]
    fn display_uses_literal_syntax() {
        assert_eq!(Value::from("a\"b").to_string(), r#""a\"b""#);
        assert_eq!(Value::from(152.4).to_string(), "152.4");
        assert_eq!(Value::from(60.0).to_string(), "60");
        assert_eq!(
            Value::from(GeoPoint::new(1.5, -2.0)).to_string(),
            "point(1.5,-2)"
        );
        assert_eq!(Value::Time(TimeLiteral::Duration(60)).to_string(), "duration(60min)");
    }

    #[test]
    fn json_round_trip() {
        let v = Value::List(vec![
            Value::Time(TimeLiteral::Duration(30)),
            Value::Time(TimeLiteral::Duration(45)),
        ]);
        let text = serde_json::to_string(&v).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
