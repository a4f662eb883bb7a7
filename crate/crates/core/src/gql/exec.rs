//! Backtracking pattern matcher and result projection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::bind::{bind, Bound, OrderKey, VarKind};
use super::error::GqlError;
use super::value::{total_cmp, vals_equal, vals_order, KeyVal, Val, Value};
use crate::graph::{PropertyGraph, Scalar};

/// Query parameters substituted for `$name` placeholders.
pub type Params = BTreeMap<String, Scalar>;

/// Upper bound on intermediate bindings, so a runaway cartesian product
/// fails cleanly instead of exhausting memory.
pub const MAX_BINDINGS: usize = 2_000_000;

const UNBOUND: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn execute(query: &Query, graph: &PropertyGraph) -> Result<ResultTable, GqlError> {
    execute_with_params(query, graph, &Params::new())
}

pub fn execute_with_params(
    query: &Query,
    graph: &PropertyGraph,
    params: &Params,
) -> Result<ResultTable, GqlError> {
    let bound = bind(query)?;
    if let Some(missing) = bound.params.iter().find(|p| !params.contains_key(*p)) {
        return Err(GqlError::MissingParameter(missing.clone()));
    }
    let ev = Evaluator {
        graph,
        bound: &bound,
        params,
    };

    let mut bindings: Vec<Vec<usize>> = vec![vec![UNBOUND; bound.slots.len()]];
    for clause in &query.match_clauses {
        let mut next = Vec::new();
        for b in &bindings {
            ev.match_clause(clause, b.clone(), &mut next)?;
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }

    let mut rows = if bound.aggregating {
        ev.aggregate(query, &bindings)
    } else {
        ev.project(query, &bindings)
    };
    rows.sort_by(|a, b| compare_rows(a, b, &bound.order_keys));
    let rows: Vec<Vec<Value>> = rows
        .into_iter()
        .map(|(_, row)| row)
        .skip(query.skip.unwrap_or(0) as usize)
        .take(query.limit.map_or(usize::MAX, |l| l as usize))
        .collect();
    Ok(ResultTable {
        columns: bound.columns.clone(),
        rows,
    })
}

/// Sort keys (one per ORDER BY item) paired with the output row.
type KeyedRow = (Vec<Value>, Vec<Value>);

fn compare_rows(a: &KeyedRow, b: &KeyedRow, keys: &[(OrderKey, bool)]) -> Ordering {
    for (i, (_, desc)) in keys.iter().enumerate() {
        let c = total_cmp(&a.0[i], &b.0[i]);
        let c = if *desc { c.reverse() } else { c };
        if c != Ordering::Equal {
            return c;
        }
    }
    a.1.cmp(&b.1)
}

struct Evaluator<'a> {
    graph: &'a PropertyGraph,
    bound: &'a Bound,
    params: &'a Params,
}

impl Evaluator<'_> {
    fn slot(&self, var: &Option<String>) -> Option<usize> {
        var.as_ref().map(|v| self.bound.slot_of[v])
    }

    fn eval(&self, e: &Expr, b: &[usize]) -> Val {
        match e {
            Expr::Literal(l) => Val::Plain(match l {
                Literal::Null => Value::Null,
                Literal::Bool(x) => Value::Bool(*x),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(x) => Value::Float(*x),
                Literal::Str(s) => Value::Str(s.clone()),
            }),
            Expr::Param(p) => Val::Plain(Value::from(&self.params[p])),
            Expr::Var(v) => {
                let s = self.bound.slot_of[v];
                match self.bound.slots[s].1 {
                    VarKind::Node => Val::Node(b[s]),
                    VarKind::Rel => Val::Rel(b[s]),
                }
            }
            Expr::Prop { var, key } => {
                let s = self.bound.slot_of[var];
                Val::Plain(match self.bound.slots[s].1 {
                    VarKind::Node => self.node_prop(b[s], key),
                    VarKind::Rel => self
                        .graph
                        .edge(b[s])
                        .properties
                        .get(key)
                        .map_or(Value::Null, Value::from),
                })
            }
            Expr::RelType(v) => {
                let s = self.bound.slot_of[v];
                Val::Plain(Value::Str(self.graph.edge(b[s]).edge_type.clone()))
            }
            Expr::Count { .. } => unreachable!("aggregates are evaluated per group"),
            Expr::Cmp(op, l, r) => {
                let (l, r) = (self.eval(l, b), self.eval(r, b));
                let result = match op {
                    CmpOp::Eq => vals_equal(&l, &r),
                    CmpOp::Ne => !l.is_null() && !r.is_null() && !vals_equal(&l, &r),
                    CmpOp::Lt => vals_order(&l, &r) == Some(Ordering::Less),
                    CmpOp::Le => matches!(vals_order(&l, &r), Some(Ordering::Less | Ordering::Equal)),
                    CmpOp::Gt => vals_order(&l, &r) == Some(Ordering::Greater),
                    CmpOp::Ge => matches!(vals_order(&l, &r), Some(Ordering::Greater | Ordering::Equal)),
                };
                Val::Plain(Value::Bool(result))
            }
            Expr::IsNull { expr, negated } => {
                Val::Plain(Value::Bool(self.eval(expr, b).is_null() != *negated))
            }
            Expr::Not(x) => Val::Plain(Value::Bool(!self.eval(x, b).truthy())),
            Expr::And(x, y) => Val::Plain(Value::Bool(self.eval(x, b).truthy() && self.eval(y, b).truthy())),
            Expr::Or(x, y) => Val::Plain(Value::Bool(self.eval(x, b).truthy() || self.eval(y, b).truthy())),
            Expr::Xor(x, y) => Val::Plain(Value::Bool(self.eval(x, b).truthy() != self.eval(y, b).truthy())),
        }
    }

    fn node_prop(&self, node: usize, key: &str) -> Value {
        let n = self.graph.node(node);
        match key {
            "id" => Value::Str(n.id.clone()),
            "name" => Value::Str(n.name.clone()),
            _ => n.properties.get(key).map_or(Value::Null, Value::from),
        }
    }

    fn props_match(&self, props: &[(String, Expr)], lookup: impl Fn(&str) -> Value) -> bool {
        props.iter().all(|(k, e)| {
            let want = self.eval(e, &[]);
            vals_equal(&Val::Plain(lookup(k)), &want)
        })
    }

    fn node_ok(&self, pat: &NodePattern, node: usize, b: &[usize]) -> bool {
        if let Some(s) = self.slot(&pat.var) {
            if b[s] != UNBOUND && b[s] != node {
                return false;
            }
        }
        if let Some(l) = &pat.label {
            if !self.graph.has_label(node, l) {
                return false;
            }
        }
        self.props_match(&pat.props, |k| self.node_prop(node, k))
    }

    fn rel_ok(&self, pat: &RelPattern, edge: usize, b: &[usize]) -> bool {
        if let Some(s) = self.slot(&pat.var) {
            if b[s] != UNBOUND && b[s] != edge {
                return false;
            }
        }
        let props = &self.graph.edge(edge).properties;
        self.props_match(&pat.props, |k| props.get(k).map_or(Value::Null, Value::from))
    }

    fn match_clause(
        &self,
        clause: &MatchClause,
        mut b: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), GqlError> {
        let mut used = Vec::new();
        self.walk_path(clause, 0, &mut b, &mut used, out)
    }

    fn walk_path(
        &self,
        clause: &MatchClause,
        p: usize,
        b: &mut Vec<usize>,
        used: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), GqlError> {
        if p == clause.patterns.len() {
            if let Some(w) = &clause.where_clause {
                if !self.eval(w, b).truthy() {
                    return Ok(());
                }
            }
            if out.len() >= MAX_BINDINGS {
                return Err(GqlError::TooLarge(MAX_BINDINGS));
            }
            out.push(b.clone());
            return Ok(());
        }
        let start = &clause.patterns[p].start;
        let slot = self.slot(&start.var);
        let candidates: Vec<usize> = match slot.map(|s| b[s]) {
            Some(n) if n != UNBOUND => vec![n],
            _ => match &start.label {
                Some(l) if self.graph.domain_label() == Some(l.as_str()) => {
                    (0..self.graph.node_count()).collect()
                }
                Some(l) => self.graph.nodes_of_type(l).to_vec(),
                None => (0..self.graph.node_count()).collect(),
            },
        };
        for n in candidates {
            if !self.node_ok(start, n, b) {
                continue;
            }
            let prev = slot.map(|s| std::mem::replace(&mut b[s], n));
            self.walk_step(clause, p, 0, n, b, used, out)?;
            if let (Some(s), Some(v)) = (slot, prev) {
                b[s] = v;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_step(
        &self,
        clause: &MatchClause,
        p: usize,
        s: usize,
        cur: usize,
        b: &mut Vec<usize>,
        used: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), GqlError> {
        let steps = &clause.patterns[p].steps;
        if s == steps.len() {
            return self.walk_path(clause, p + 1, b, used, out);
        }
        let (rel, node) = &steps[s];
        // (edge, neighbor) candidates
        let mut cands: Vec<(usize, usize)> = Vec::new();
        let mut collect = |adj: &BTreeMap<String, Vec<usize>>, outgoing: bool| {
            let lists: Box<dyn Iterator<Item = &Vec<usize>>> = match &rel.rel_type {
                Some(t) => Box::new(adj.get(t).into_iter()),
                None => Box::new(adj.values()),
            };
            for list in lists {
                for &e in list {
                    let (src, dst) = self.graph.endpoints(e);
                    if outgoing {
                        cands.push((e, dst));
                    } else if !(rel.direction == RelDirection::Undirected && src == dst) {
                        cands.push((e, src));
                    }
                }
            }
        };
        if matches!(rel.direction, RelDirection::Out | RelDirection::Undirected) {
            collect(self.graph.out_edges(cur), true);
        }
        if matches!(rel.direction, RelDirection::In | RelDirection::Undirected) {
            collect(self.graph.in_edges(cur), false);
        }

        let rel_slot = self.slot(&rel.var);
        let node_slot = self.slot(&node.var);
        for (e, next) in cands {
            if used.contains(&e) || !self.rel_ok(rel, e, b) || !self.node_ok(node, next, b) {
                continue;
            }
            let prev_rel = rel_slot.map(|r| std::mem::replace(&mut b[r], e));
            let prev_node = node_slot.map(|n| std::mem::replace(&mut b[n], next));
            used.push(e);
            self.walk_step(clause, p, s + 1, next, b, used, out)?;
            used.pop();
            if let (Some(n), Some(v)) = (node_slot, prev_node) {
                b[n] = v;
            }
            if let (Some(r), Some(v)) = (rel_slot, prev_rel) {
                b[r] = v;
            }
        }
        Ok(())
    }

    fn order_values(&self, b: &[usize], row: &[Value]) -> Vec<Value> {
        self.bound
            .order_keys
            .iter()
            .map(|(k, _)| match k {
                OrderKey::Column(i) => row[*i].clone(),
                OrderKey::Expr(e) => self.eval(e, b).materialize(self.graph),
            })
            .collect()
    }

    fn project(&self, q: &Query, bindings: &[Vec<usize>]) -> Vec<KeyedRow> {
        bindings
            .iter()
            .map(|b| {
                let row: Vec<Value> = q
                    .return_items
                    .iter()
                    .map(|item| self.eval(&item.expr, b).materialize(self.graph))
                    .collect();
                (self.order_values(b, &row), row)
            })
            .collect()
    }

    fn aggregate(&self, q: &Query, bindings: &[Vec<usize>]) -> Vec<KeyedRow> {
        enum Agg {
            Count(i64),
            Distinct(BTreeSet<KeyVal>),
        }
        let key_items: Vec<usize> = (0..q.return_items.len())
            .filter(|&i| !q.return_items[i].expr.is_aggregate())
            .collect();
        let fresh = || -> Vec<Agg> {
            q.return_items
                .iter()
                .filter_map(|item| match &item.expr {
                    Expr::Count { distinct: true, .. } => Some(Agg::Distinct(BTreeSet::new())),
                    Expr::Count { .. } => Some(Agg::Count(0)),
                    _ => None,
                })
                .collect()
        };

        let mut groups: BTreeMap<Vec<KeyVal>, Vec<Agg>> = BTreeMap::new();
        if key_items.is_empty() {
            groups.insert(Vec::new(), fresh());
        }
        for b in bindings {
            let key: Vec<KeyVal> = key_items
                .iter()
                .map(|&i| KeyVal::from(&self.eval(&q.return_items[i].expr, b)))
                .collect();
            let aggs = groups.entry(key).or_insert_with(fresh);
            let mut ai = 0;
            for item in &q.return_items {
                let Expr::Count { arg, .. } = &item.expr else {
                    continue;
                };
                let v = arg.as_ref().map(|a| self.eval(a, b));
                match (&mut aggs[ai], v) {
                    (Agg::Count(c), None) => *c += 1,
                    (Agg::Count(c), Some(v)) if !v.is_null() => *c += 1,
                    (Agg::Distinct(set), Some(v)) if !v.is_null() => {
                        set.insert(KeyVal::from(&v));
                    }
                    _ => {}
                }
                ai += 1;
            }
        }

        groups
            .into_iter()
            .map(|(key, aggs)| {
                let mut keys = key.into_iter();
                let mut aggs = aggs.into_iter();
                let row: Vec<Value> = q
                    .return_items
                    .iter()
                    .map(|item| {
                        if item.expr.is_aggregate() {
                            match aggs.next().expect("one state per aggregate") {
                                Agg::Count(c) => Value::Int(c),
                                Agg::Distinct(s) => Value::Int(s.len() as i64),
                            }
                        } else {
                            keys.next()
                                .expect("one key per grouping item")
                                .to_val()
                                .materialize(self.graph)
                        }
                    })
                    .collect();
                (self.order_values(&[], &row), row)
            })
            .collect()
    }
}
