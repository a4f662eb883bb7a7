//! Binding validation: variable scoping and kinds, aggregate placement,
//! output column names, and ORDER BY key resolution.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::error::GqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarKind {
    Node,
    Rel,
}

#[derive(Debug, Clone)]
pub(crate) enum OrderKey {
    Column(usize),
    Expr(Expr),
}

#[derive(Debug, Clone)]
pub(crate) struct Bound {
    /// Slot index to (name, kind); slots follow first appearance.
    pub slots: Vec<(String, VarKind)>,
    pub slot_of: HashMap<String, usize>,
    pub columns: Vec<String>,
    pub aggregating: bool,
    pub order_keys: Vec<(OrderKey, bool)>,
    pub params: BTreeSet<String>,
}

fn binding(msg: impl Into<String>) -> GqlError {
    GqlError::Binding(msg.into())
}

fn collect_params(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Param(p) => {
            out.insert(p.clone());
        }
        Expr::Count { arg: Some(a), .. } => collect_params(a, out),
        Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
            collect_params(a, out);
            collect_params(b, out);
        }
        Expr::IsNull { expr, .. } | Expr::Not(expr) => collect_params(expr, out),
        _ => {}
    }
}

impl Bound {
    fn declare(&mut self, name: &str, kind: VarKind) -> Result<(), GqlError> {
        match self.slot_of.get(name) {
            Some(&s) if self.slots[s].1 != kind => {
                let was = match self.slots[s].1 {
                    VarKind::Node => "a node",
                    VarKind::Rel => "a relationship",
                };
                Err(binding(format!("variable `{name}` is already bound as {was}")))
            }
            Some(_) => Ok(()),
            None => {
                self.slot_of.insert(name.to_string(), self.slots.len());
                self.slots.push((name.to_string(), kind));
                Ok(())
            }
        }
    }

    fn check_expr(&self, e: &Expr, allow_aggregate: bool) -> Result<(), GqlError> {
        match e {
            Expr::Var(v) | Expr::Prop { var: v, .. } => {
                if !self.slot_of.contains_key(v) {
                    return Err(binding(format!("variable `{v}` is not defined")));
                }
            }
            Expr::RelType(v) => match self.slot_of.get(v) {
                None => return Err(binding(format!("variable `{v}` is not defined"))),
                Some(&s) if self.slots[s].1 != VarKind::Rel => {
                    return Err(binding(format!("type() expects a relationship, `{v}` is a node")))
                }
                _ => {}
            },
            Expr::Count { arg, .. } => {
                if !allow_aggregate {
                    return Err(binding("aggregation is not allowed here"));
                }
                if let Some(a) = arg {
                    if a.contains_aggregate() {
                        return Err(binding("nested aggregation"));
                    }
                    self.check_expr(a, false)?;
                }
            }
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                self.check_expr(a, allow_aggregate)?;
                self.check_expr(b, allow_aggregate)?;
            }
            Expr::IsNull { expr, .. } | Expr::Not(expr) => self.check_expr(expr, allow_aggregate)?,
            Expr::Literal(_) | Expr::Param(_) => {}
        }
        Ok(())
    }
}

pub(crate) fn bind(q: &Query) -> Result<Bound, GqlError> {
    let mut b = Bound {
        slots: Vec::new(),
        slot_of: HashMap::new(),
        columns: Vec::new(),
        aggregating: false,
        order_keys: Vec::new(),
        params: BTreeSet::new(),
    };

    for clause in &q.match_clauses {
        let mut clause_rels: BTreeSet<&str> = BTreeSet::new();
        for path in &clause.patterns {
            let nodes = std::iter::once(&path.start).chain(path.steps.iter().map(|(_, n)| n));
            for node in nodes {
                if let Some(v) = &node.var {
                    b.declare(v, VarKind::Node)?;
                }
                for (_, e) in &node.props {
                    collect_params(e, &mut b.params);
                }
            }
            for (rel, _) in &path.steps {
                if let Some(v) = &rel.var {
                    b.declare(v, VarKind::Rel)?;
                    if !clause_rels.insert(v) {
                        return Err(binding(format!(
                            "relationship variable `{v}` appears twice in one MATCH"
                        )));
                    }
                }
                for (_, e) in &rel.props {
                    collect_params(e, &mut b.params);
                }
            }
        }
        if let Some(w) = &clause.where_clause {
            if w.contains_aggregate() {
                return Err(binding("aggregation is not allowed in WHERE"));
            }
            b.check_expr(w, false)?;
            collect_params(w, &mut b.params);
        }
    }

    for item in &q.return_items {
        if item.expr.contains_aggregate() && !item.expr.is_aggregate() {
            return Err(GqlError::unsupported("aggregate inside expression"));
        }
        b.check_expr(&item.expr, true)?;
        collect_params(&item.expr, &mut b.params);
        let name = item.column_name();
        if b.columns.contains(&name) {
            return Err(binding(format!("duplicate column name `{name}`")));
        }
        b.columns.push(name);
    }
    b.aggregating = q.return_items.iter().any(|i| i.expr.is_aggregate());

    for sort in &q.order_by {
        let key = resolve_order_key(q, &b, &sort.key)?;
        b.order_keys.push((key, sort.descending));
    }
    Ok(b)
}

fn resolve_order_key(q: &Query, b: &Bound, key: &Expr) -> Result<OrderKey, GqlError> {
    if let Expr::Var(name) = key {
        if let Some(i) = b.columns.iter().position(|c| c == name) {
            return Ok(OrderKey::Column(i));
        }
    }
    if let Some(i) = q.return_items.iter().position(|item| &item.expr == key) {
        return Ok(OrderKey::Column(i));
    }
    if b.aggregating {
        return Err(binding(format!(
            "ORDER BY `{key}` must name a returned column in an aggregating query"
        )));
    }
    if key.contains_aggregate() {
        return Err(binding("aggregation in ORDER BY must also be returned"));
    }
    b.check_expr(key, false)?;
    Ok(OrderKey::Expr(key.clone()))
}
