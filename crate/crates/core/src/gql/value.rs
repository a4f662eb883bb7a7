//! Result values, their total ordering, and comparison semantics.

use std::cmp::Ordering;

use crate::graph::{PropertyGraph, Scalar};
use crate::pyrepr::{py_bool, py_float, py_str};

/// A value in a result row. Nodes and relationships are materialized as
/// maps so a table can be rendered without the graph.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Map(Vec<(String, Value)>),
}

impl From<&Scalar> for Value {
    fn from(s: &Scalar) -> Self {
        match s {
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Int(i) => Value::Int(*i),
            Scalar::Float(x) => Value::Float(*x),
            Scalar::Str(s) => Value::Str(s.clone()),
        }
    }
}

impl Value {
    /// Python-repr rendering used in tool responses.
    pub fn render(&self, out: &mut String) {
        match self {
            Value::Null => out.push_str("None"),
            Value::Bool(b) => out.push_str(py_bool(*b)),
            Value::Int(i) => out.push_str(&i.to_string()),
            Value::Float(x) => out.push_str(&py_float(*x)),
            Value::Str(s) => out.push_str(&py_str(s)),
            Value::Map(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&py_str(k));
                    out.push_str(": ");
                    v.render(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Null => J::Null,
            Value::Bool(b) => J::Bool(*b),
            Value::Int(i) => J::from(*i),
            Value::Float(x) => serde_json::Number::from_f64(*x).map_or(J::Null, J::Number),
            Value::Str(s) => J::String(s.clone()),
            Value::Map(entries) => J::Object(
                entries
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect(),
            ),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Map(_) => 0,
            Value::Str(_) => 1,
            Value::Bool(_) => 2,
            Value::Int(_) | Value::Float(_) => 3,
            Value::Null => 4,
        }
    }
}

/// Compares an integer with a float without losing integer precision.
/// NaN sorts above every number.
pub(crate) fn cmp_int_float(i: i64, x: f64) -> Ordering {
    if x.is_nan() {
        return Ordering::Less;
    }
    // 2^63 is exactly representable; every i64 is below it.
    if x >= 9_223_372_036_854_775_808.0 {
        return Ordering::Less;
    }
    if x < -9_223_372_036_854_775_808.0 {
        return Ordering::Greater;
    }
    let floor = x.floor();
    match i.cmp(&(floor as i64)) {
        Ordering::Equal if x > floor => Ordering::Less,
        other => other,
    }
}

/// Numeric order with NaN largest; `None` when either side is not a number.
pub(crate) fn cmp_numeric(a: &Value, b: &Value) -> Option<Ordering> {
    Some(match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Int(x), Value::Float(y)) => cmp_int_float(*x, *y),
        (Value::Float(x), Value::Int(y)) => cmp_int_float(*y, *x).reverse(),
        (Value::Float(x), Value::Float(y)) => match (x.is_nan(), y.is_nan()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => x.partial_cmp(y).expect("non-NaN floats compare"),
        },
        _ => return None,
    })
}

/// Total order used by ORDER BY, grouping, and DISTINCT:
/// maps < strings < booleans < numbers < null. Equal-valued integers and
/// floats are distinct, integer first.
pub fn total_cmp(a: &Value, b: &Value) -> Ordering {
    let by_rank = a.rank().cmp(&b.rank());
    if by_rank != Ordering::Equal {
        return by_rank;
    }
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Str(x), Value::Str(y)) => x.cmp(y),
        (Value::Map(x), Value::Map(y)) => {
            for ((ka, va), (kb, vb)) in x.iter().zip(y) {
                let c = ka.cmp(kb).then_with(|| total_cmp(va, vb));
                if c != Ordering::Equal {
                    return c;
                }
            }
            x.len().cmp(&y.len())
        }
        _ => {
            let c = cmp_numeric(a, b).expect("same rank means numeric");
            if c != Ordering::Equal {
                return c;
            }
            match (a, b) {
                (Value::Int(_), Value::Float(_)) => Ordering::Less,
                (Value::Float(_), Value::Int(_)) => Ordering::Greater,
                (Value::Float(x), Value::Float(y)) if !x.is_nan() => x.total_cmp(y),
                _ => Ordering::Equal,
            }
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        total_cmp(self, other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        total_cmp(self, other)
    }
}

/// Value during evaluation, before nodes and relationships are materialized.
#[derive(Debug, Clone)]
pub(crate) enum Val {
    Plain(Value),
    Node(usize),
    Rel(usize),
}

impl Val {
    pub(crate) fn is_null(&self) -> bool {
        matches!(self, Val::Plain(Value::Null))
    }

    pub(crate) fn truthy(&self) -> bool {
        matches!(self, Val::Plain(Value::Bool(true)))
    }

    pub(crate) fn materialize(&self, graph: &PropertyGraph) -> Value {
        match self {
            Val::Plain(v) => v.clone(),
            Val::Node(i) => {
                let n = graph.node(*i);
                let mut entries = vec![
                    ("id".to_string(), Value::Str(n.id.clone())),
                    ("name".to_string(), Value::Str(n.name.clone())),
                ];
                entries.extend(n.properties.iter().map(|(k, v)| (k.clone(), Value::from(v))));
                Value::Map(entries)
            }
            Val::Rel(e) => {
                let r = graph.edge(*e);
                let mut entries = vec![
                    ("type".to_string(), Value::Str(r.edge_type.clone())),
                    ("src".to_string(), Value::Str(r.src.clone())),
                    ("dst".to_string(), Value::Str(r.dst.clone())),
                ];
                entries.extend(r.properties.iter().map(|(k, v)| (k.clone(), Value::from(v))));
                Value::Map(entries)
            }
        }
    }
}

/// Grouping key: entities compare by identity, plain values by total order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum KeyVal {
    Plain(Value),
    Node(usize),
    Rel(usize),
}

impl From<&Val> for KeyVal {
    fn from(v: &Val) -> Self {
        match v {
            Val::Plain(p) => KeyVal::Plain(p.clone()),
            Val::Node(i) => KeyVal::Node(*i),
            Val::Rel(e) => KeyVal::Rel(*e),
        }
    }
}

impl KeyVal {
    pub(crate) fn to_val(&self) -> Val {
        match self {
            KeyVal::Plain(p) => Val::Plain(p.clone()),
            KeyVal::Node(i) => Val::Node(*i),
            KeyVal::Rel(e) => Val::Rel(*e),
        }
    }
}

/// `a = b`. Null on either side, or operands of different kinds, give false.
pub(crate) fn vals_equal(a: &Val, b: &Val) -> bool {
    match (a, b) {
        (Val::Node(x), Val::Node(y)) | (Val::Rel(x), Val::Rel(y)) => x == y,
        (Val::Plain(x), Val::Plain(y)) => match (x, y) {
            (Value::Null, _) | (_, Value::Null) => false,
            (Value::Bool(p), Value::Bool(q)) => p == q,
            (Value::Str(p), Value::Str(q)) => p == q,
            (Value::Map(_), Value::Map(_)) => x == y,
            _ => match cmp_numeric(x, y) {
                Some(Ordering::Equal) => !is_nan(x) && !is_nan(y),
                _ => false,
            },
        },
        _ => false,
    }
}

fn is_nan(v: &Value) -> bool {
    matches!(v, Value::Float(x) if x.is_nan())
}

/// Ordering comparison for `<`, `<=`, `>`, `>=`. `None` when the operands
/// are not comparable (null, NaN, or mismatched kinds).
pub(crate) fn vals_order(a: &Val, b: &Val) -> Option<Ordering> {
    let (Val::Plain(x), Val::Plain(y)) = (a, b) else {
        return None;
    };
    match (x, y) {
        (Value::Str(p), Value::Str(q)) => Some(p.cmp(q)),
        (Value::Bool(p), Value::Bool(q)) => Some(p.cmp(q)),
        _ if is_nan(x) || is_nan(y) => None,
        _ => cmp_numeric(x, y),
    }
}
