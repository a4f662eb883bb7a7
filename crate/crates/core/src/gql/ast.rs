//! Query AST and its canonical printer. `Display` output re-parses to an
//! identical AST.

use std::fmt::{self, Display, Formatter};

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub match_clauses: Vec<MatchClause>,
    pub return_items: Vec<ReturnItem>,
    pub order_by: Vec<SortItem>,
    pub skip: Option<u64>,
    pub limit: Option<u64>,
}

/// One `MATCH` with its comma-separated paths and optional `WHERE`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchClause {
    pub patterns: Vec<PathPattern>,
    pub where_clause: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub steps: Vec<(RelPattern, NodePattern)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDirection {
    /// `-[]->`
    Out,
    /// `<-[]-`
    In,
    /// `-[]-`
    Undirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub direction: RelDirection,
    pub props: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Param(String),
    Var(String),
    Prop { var: String, key: String },
    /// `type(r)`
    RelType(String),
    /// `count(*)` when `arg` is `None`.
    Count { distinct: bool, arg: Option<Box<Expr>> },
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    IsNull { expr: Box<Expr>, negated: bool },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn is_aggregate(&self) -> bool {
        matches!(self, Expr::Count { .. })
    }

    pub fn contains_aggregate(&self) -> bool {
        match self {
            Expr::Count { .. } => true,
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                a.contains_aggregate() || b.contains_aggregate()
            }
            Expr::IsNull { expr, .. } | Expr::Not(expr) => expr.contains_aggregate(),
            _ => false,
        }
    }

    /// Variables referenced by the expression, in order of appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) | Expr::RelType(v) | Expr::Prop { var: v, .. } => out.push(v),
            Expr::Count { arg: Some(a), .. } => a.collect_vars(out),
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::IsNull { expr, .. } | Expr::Not(expr) => expr.collect_vars(out),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ReturnItem {
    /// Output column name: the alias, or the canonical expression text.
    pub fn column_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.expr.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortItem {
    pub key: Expr,
    pub descending: bool,
}

const KEYWORDS: &[&str] = &[
    "MATCH", "WHERE", "RETURN", "ORDER", "BY", "ASC", "ASCENDING", "DESC", "DESCENDING", "SKIP",
    "LIMIT", "AND", "OR", "XOR", "NOT", "AS", "DISTINCT", "TRUE", "FALSE", "NULL", "IS", "OPTIONAL",
    "WITH", "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "UNWIND", "CALL", "UNION",
    "FOREACH", "LOAD", "YIELD", "IN", "STARTS", "ENDS", "CONTAINS", "CASE", "WHEN", "THEN", "ELSE",
    "END", "EXISTS",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

pub(crate) fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_') && !is_keyword(s)
}

struct Ident<'a>(&'a str);

impl Display for Ident<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if is_plain_ident(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "`{}`", self.0.replace('`', "``"))
        }
    }
}

fn write_str_literal(f: &mut Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\'' => f.write_str("\\'")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("null"),
            Literal::Bool(b) => f.write_str(if *b { "true" } else { "false" }),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Str(s) => write_str_literal(f, s),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(l) => write!(f, "{l}"),
            Expr::Param(p) => write!(f, "${}", Ident(p)),
            Expr::Var(v) => write!(f, "{}", Ident(v)),
            Expr::Prop { var, key } => write!(f, "{}.{}", Ident(var), Ident(key)),
            Expr::RelType(v) => write!(f, "type({})", Ident(v)),
            Expr::Count { distinct, arg } => match arg {
                None => f.write_str("count(*)"),
                Some(a) if *distinct => write!(f, "count(DISTINCT {a})"),
                Some(a) => write!(f, "count({a})"),
            },
            Expr::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Expr::IsNull { expr, negated } => {
                write!(f, "{expr} IS {}NULL", if *negated { "NOT " } else { "" })
            }
            Expr::Not(e) => write!(f, "NOT ({e})"),
            Expr::And(a, b) => write!(f, "({a} AND {b})"),
            Expr::Or(a, b) => write!(f, "({a} OR {b})"),
            Expr::Xor(a, b) => write!(f, "({a} XOR {b})"),
        }
    }
}

fn write_props(f: &mut Formatter<'_>, props: &[(String, Expr)], space: bool) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(if space { " {" } else { "{" })?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}: {v}", Ident(k))?;
    }
    f.write_str("}")
}

impl Display for NodePattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{}", Ident(l))?;
        }
        let bare = self.var.is_none() && self.label.is_none();
        write_props(f, &self.props, !bare)?;
        f.write_str(")")
    }
}

impl Display for RelPattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let (left, right) = match self.direction {
            RelDirection::Out => ("-", "->"),
            RelDirection::In => ("<-", "-"),
            RelDirection::Undirected => ("-", "-"),
        };
        f.write_str(left)?;
        f.write_str("[")?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(t) = &self.rel_type {
            write!(f, ":{}", Ident(t))?;
        }
        let bare = self.var.is_none() && self.rel_type.is_none();
        write_props(f, &self.props, !bare)?;
        f.write_str("]")?;
        f.write_str(right)
    }
}

impl Display for PathPattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (rel, node) in &self.steps {
            write!(f, "{rel}{node}")?;
        }
        Ok(())
    }
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (ci, clause) in self.match_clauses.iter().enumerate() {
            if ci > 0 {
                f.write_str("\n")?;
            }
            f.write_str("MATCH ")?;
            for (i, p) in clause.patterns.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            if let Some(w) = &clause.where_clause {
                write!(f, "\nWHERE {w}")?;
            }
        }
        f.write_str("\nRETURN ")?;
        for (i, item) in self.return_items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(a) = &item.alias {
                write!(f, " AS {}", Ident(a))?;
            }
        }
        if !self.order_by.is_empty() {
            f.write_str("\nORDER BY ")?;
            for (i, s) in self.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}{}", s.key, if s.descending { " DESC" } else { "" })?;
            }
        }
        if let Some(s) = self.skip {
            write!(f, "\nSKIP {s}")?;
        }
        if let Some(l) = self.limit {
            write!(f, "\nLIMIT {l}")?;
        }
        Ok(())
    }
}
