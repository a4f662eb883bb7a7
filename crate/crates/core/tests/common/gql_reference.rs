//! Brute-force reference evaluator for the query engine, with generators
//! for random graphs and random queries in the supported subset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use kgprobe::gql::{run_query, Params, Value};
use kgprobe::graph::{EdgeRecord, NodeRecord, PropertyGraph, Scalar};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LABELS: [&str; 3] = ["A", "B", "C"];
pub const REL_TYPES: [&str; 2] = ["R", "S"];
pub const DOMAIN: &str = "dom";

// ---------------------------------------------------------------- graphs

pub fn random_graph(rng: &mut impl Rng) -> PropertyGraph {
    let n = rng.gen_range(0..=30);
    let nodes: Vec<NodeRecord> = (0..n)
        .map(|i| {
            let mut properties = BTreeMap::new();
            if rng.gen_bool(0.7) {
                properties.insert("w".to_string(), Scalar::Int(rng.gen_range(0..5)));
            }
            if rng.gen_bool(0.7) {
                properties.insert("tag".to_string(), Scalar::Str(["x", "y"][rng.gen_range(0..2)].into()));
            }
            NodeRecord {
                id: format!("n{i}"),
                node_type: LABELS[rng.gen_range(0..LABELS.len())].into(),
                name: format!("node {}", rng.gen_range(0..6)),
                properties,
            }
        })
        .collect();
    let m = if n == 0 { 0 } else { rng.gen_range(0..=(n * 3 / 2).max(1)) };
    let edges = (0..m)
        .map(|_| {
            let mut properties = BTreeMap::new();
            if rng.gen_bool(0.5) {
                properties.insert("w".to_string(), Scalar::Int(rng.gen_range(0..3)));
            }
            EdgeRecord {
                src: format!("n{}", rng.gen_range(0..n)),
                dst: format!("n{}", rng.gen_range(0..n)),
                edge_type: REL_TYPES[rng.gen_range(0..REL_TYPES.len())].into(),
                properties,
            }
        })
        .collect();
    PropertyGraph::from_records(nodes, edges).unwrap().with_domain_label(DOMAIN)
}

// ---------------------------------------------------------------- queries

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Str(String),
    Int(i64),
    Null,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Str(s) => format!("'{s}'"),
            Cell::Int(i) => i.to_string(),
            Cell::Null => "None".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dir {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone)]
pub struct NodeSpec {
    var: String,
    label: Option<&'static str>,
    prop: Option<(&'static str, Cell)>,
}

#[derive(Debug, Clone)]
pub struct Hop {
    var: String,
    named: bool,
    rel_type: Option<&'static str>,
    dir: Dir,
    target: NodeSpec,
}

#[derive(Debug, Clone)]
pub enum Operand {
    Prop(String, &'static str),
    Lit(Cell),
}

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
pub enum Cond {
    Cmp(Op, Operand, Operand),
    IsNull(Operand, bool),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Xor(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone)]
pub struct Clause {
    start: NodeSpec,
    hops: Vec<Hop>,
    cond: Option<Cond>,
}

#[derive(Debug, Clone)]
pub enum Item {
    Prop(String, &'static str),
    Type(String),
    CountStar,
    CountDistinctVar(String),
    CountProp { var: String, key: &'static str, distinct: bool },
}

impl Item {
    fn is_agg(&self) -> bool {
        matches!(self, Item::CountStar | Item::CountDistinctVar(_) | Item::CountProp { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Q {
    clauses: Vec<Clause>,
    items: Vec<Item>,
    order: Vec<(usize, bool)>,
    skip: Option<usize>,
    limit: Option<usize>,
}

#[derive(Default)]
pub struct Scope {
    nodes: Vec<String>,
    rels: Vec<String>,
}

pub const NODE_KEYS: [&str; 4] = ["id", "name", "w", "tag"];

pub fn random_lit(rng: &mut impl Rng, key: &str) -> Cell {
    match key {
        "id" => Cell::Str(format!("n{}", rng.gen_range(0..30))),
        "name" => Cell::Str(format!("node {}", rng.gen_range(0..6))),
        "w" => Cell::Int(rng.gen_range(0..5)),
        _ => Cell::Str(["x", "y", "z"][rng.gen_range(0..3)].into()),
    }
}

pub fn node_spec(rng: &mut impl Rng, scope: &mut Scope, allow_reuse: bool) -> NodeSpec {
    let var = if allow_reuse && !scope.nodes.is_empty() && rng.gen_bool(0.15) {
        scope.nodes.choose(rng).unwrap().clone()
    } else {
        let v = format!("v{}", scope.nodes.len());
        scope.nodes.push(v.clone());
        v
    };
    let label = match rng.gen_range(0..6) {
        0 | 1 => None,
        2 => Some(DOMAIN),
        _ => Some(LABELS[rng.gen_range(0..LABELS.len())]),
    };
    let prop = rng.gen_bool(0.2).then(|| {
        let key = ["w", "tag", "name"][rng.gen_range(0..3)];
        (key, random_lit(rng, key))
    });
    NodeSpec { var, label, prop }
}

pub fn operand(rng: &mut impl Rng, scope: &Scope) -> Operand {
    if rng.gen_bool(0.3) || scope.nodes.is_empty() {
        let key = NODE_KEYS[rng.gen_range(0..NODE_KEYS.len())];
        if rng.gen_bool(0.1) {
            return Operand::Lit(Cell::Null);
        }
        return Operand::Lit(random_lit(rng, key));
    }
    if !scope.rels.is_empty() && rng.gen_bool(0.2) {
        return Operand::Prop(scope.rels.choose(rng).unwrap().clone(), "w");
    }
    let key = NODE_KEYS[rng.gen_range(0..NODE_KEYS.len())];
    Operand::Prop(scope.nodes.choose(rng).unwrap().clone(), key)
}

pub fn cond(rng: &mut impl Rng, scope: &Scope, depth: u32) -> Cond {
    let leaf = depth == 0 || rng.gen_bool(0.5);
    if leaf {
        if rng.gen_bool(0.2) {
            return Cond::IsNull(operand(rng, scope), rng.gen_bool(0.5));
        }
        let op = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge][rng.gen_range(0..6)];
        return Cond::Cmp(op, operand(rng, scope), operand(rng, scope));
    }
    let a = Box::new(cond(rng, scope, depth - 1));
    match rng.gen_range(0..4) {
        0 => Cond::Not(a),
        1 => Cond::And(a, Box::new(cond(rng, scope, depth - 1))),
        2 => Cond::Or(a, Box::new(cond(rng, scope, depth - 1))),
        _ => Cond::Xor(a, Box::new(cond(rng, scope, depth - 1))),
    }
}

pub fn hop(rng: &mut impl Rng, scope: &mut Scope) -> Hop {
    let named = rng.gen_bool(0.8);
    let var = if named {
        let v = format!("r{}", scope.rels.len());
        scope.rels.push(v.clone());
        v
    } else {
        format!("anon{}", rng.gen::<u32>())
    };
    Hop {
        var,
        named,
        rel_type: rng.gen_bool(0.6).then(|| REL_TYPES[rng.gen_range(0..REL_TYPES.len())]),
        dir: [Dir::Out, Dir::In, Dir::Both][rng.gen_range(0..3)],
        target: node_spec(rng, scope, true),
    }
}

pub fn random_query(rng: &mut impl Rng) -> Q {
    let mut scope = Scope::default();
    let mut clauses = Vec::new();
    let n_clauses = if rng.gen_bool(0.3) { 2 } else { 1 };
    for ci in 0..n_clauses {
        let start = if ci > 0 {
            let var = scope.nodes.choose(rng).unwrap().clone();
            NodeSpec { var, label: None, prop: None }
        } else {
            node_spec(rng, &mut scope, false)
        };
        let max_hops = if ci == 0 { 2 } else { 1 };
        let min_hops = if ci == 0 { 0 } else { 1 };
        let hops = (0..rng.gen_range(min_hops..=max_hops)).map(|_| hop(rng, &mut scope)).collect();
        let cond = rng.gen_bool(0.5).then(|| cond(rng, &scope, 2));
        clauses.push(Clause { start, hops, cond });
    }
    // Anonymous relationships cannot be referenced.
    let named_rels: Vec<String> = clauses
        .iter()
        .flat_map(|c| c.hops.iter().filter(|h| h.named).map(|h| h.var.clone()))
        .collect();
    let aggregating = rng.gen_bool(0.4);
    let mut items = Vec::new();
    let n_keys = rng.gen_range(if aggregating { 0 } else { 1 }..=2);
    for _ in 0..n_keys {
        if !named_rels.is_empty() && rng.gen_bool(0.25) {
            let r = named_rels.choose(rng).unwrap().clone();
            items.push(if rng.gen_bool(0.5) { Item::Type(r) } else { Item::Prop(r, "w") });
        } else {
            let v = scope.nodes.choose(rng).unwrap().clone();
            items.push(Item::Prop(v, NODE_KEYS[rng.gen_range(0..NODE_KEYS.len())]));
        }
    }
    if aggregating {
        for _ in 0..rng.gen_range(1..=2) {
            let v = scope.nodes.choose(rng).unwrap().clone();
            items.push(match rng.gen_range(0..3) {
                0 => Item::CountStar,
                1 => Item::CountDistinctVar(v),
                _ => Item::CountProp {
                    var: v,
                    key: ["w", "tag"][rng.gen_range(0..2)],
                    distinct: rng.gen_bool(0.5),
                },
            });
        }
    }
    let order = if rng.gen_bool(0.5) {
        let mut cols: Vec<usize> = (0..items.len()).collect();
        cols.shuffle(rng);
        cols.truncate(rng.gen_range(1..=items.len()));
        cols.into_iter().map(|c| (c, rng.gen_bool(0.5))).collect()
    } else {
        Vec::new()
    };
    Q {
        clauses,
        items,
        order,
        skip: rng.gen_bool(0.2).then(|| rng.gen_range(0..4)),
        limit: rng.gen_bool(0.3).then(|| rng.gen_range(0..6)),
    }
}

// ---------------------------------------------------------------- printing

pub fn lit_text(c: &Cell) -> String {
    match c {
        Cell::Str(s) => format!("'{s}'"),
        Cell::Int(i) => i.to_string(),
        Cell::Null => "null".into(),
    }
}

pub fn node_text(n: &NodeSpec) -> String {
    let mut s = format!("({}", n.var);
    if let Some(l) = n.label {
        write!(s, ":{l}").unwrap();
    }
    if let Some((k, v)) = &n.prop {
        write!(s, " {{{k}: {}}}", lit_text(v)).unwrap();
    }
    s.push(')');
    s
}

pub fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Prop(v, k) => format!("{v}.{k}"),
        Operand::Lit(c) => lit_text(c),
    }
}

pub fn cond_text(c: &Cond) -> String {
    match c {
        Cond::Cmp(op, a, b) => {
            let sym = match op {
                Op::Eq => "=",
                Op::Ne => "<>",
                Op::Lt => "<",
                Op::Le => "<=",
                Op::Gt => ">",
                Op::Ge => ">=",
            };
            format!("{} {sym} {}", operand_text(a), operand_text(b))
        }
        Cond::IsNull(o, neg) => format!("{} IS {}NULL", operand_text(o), if *neg { "NOT " } else { "" }),
        Cond::Not(a) => format!("NOT ({})", cond_text(a)),
        Cond::And(a, b) => format!("({}) AND ({})", cond_text(a), cond_text(b)),
        Cond::Or(a, b) => format!("({}) OR ({})", cond_text(a), cond_text(b)),
        Cond::Xor(a, b) => format!("({}) XOR ({})", cond_text(a), cond_text(b)),
    }
}

pub fn query_text(q: &Q) -> String {
    let mut s = String::new();
    for c in &q.clauses {
        s.push_str("MATCH ");
        s.push_str(&node_text(&c.start));
        for h in &c.hops {
            let mut inner = String::new();
            if h.named {
                inner.push_str(&h.var);
            }
            if let Some(t) = h.rel_type {
                write!(inner, ":{t}").unwrap();
            }
            let (l, r) = match h.dir {
                Dir::Out => ("-", "->"),
                Dir::In => ("<-", "-"),
                Dir::Both => ("-", "-"),
            };
            write!(s, "{l}[{inner}]{r}{}", node_text(&h.target)).unwrap();
        }
        if let Some(c) = &c.cond {
            write!(s, " WHERE {}", cond_text(c)).unwrap();
        }
        s.push('\n');
    }
    let items: Vec<String> = q
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let e = match it {
                Item::Prop(v, k) => format!("{v}.{k}"),
                Item::Type(r) => format!("type({r})"),
                Item::CountStar => "count(*)".into(),
                Item::CountDistinctVar(v) => format!("count(DISTINCT {v})"),
                Item::CountProp { var, key, distinct } => {
                    format!("count({}{var}.{key})", if *distinct { "DISTINCT " } else { "" })
                }
            };
            format!("{e} AS c{i}")
        })
        .collect();
    write!(s, "RETURN {}", items.join(", ")).unwrap();
    if !q.order.is_empty() {
        let keys: Vec<String> = q
            .order
            .iter()
            .map(|(c, d)| format!("c{c}{}", if *d { " DESC" } else { "" }))
            .collect();
        write!(s, " ORDER BY {}", keys.join(", ")).unwrap();
    }
    if let Some(k) = q.skip {
        write!(s, " SKIP {k}").unwrap();
    }
    if let Some(l) = q.limit {
        write!(s, " LIMIT {l}").unwrap();
    }
    s
}

// ---------------------------------------------------------------- oracle

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum B {
    Node(usize),
    Edge(usize),
}

pub type Binding = HashMap<String, B>;

pub struct Oracle<'a> {
    pub g: &'a PropertyGraph,
}

impl Oracle<'_> {
    fn scalar(s: Option<&Scalar>) -> Cell {
        match s {
            Some(Scalar::Int(i)) => Cell::Int(*i),
            Some(Scalar::Str(s)) => Cell::Str(s.clone()),
            None => Cell::Null,
            other => panic!("unexpected {other:?}"),
        }
    }

    fn prop(&self, b: &Binding, var: &str, key: &str) -> Cell {
        match b[var] {
            B::Node(i) => {
                let n = self.g.node(i);
                match key {
                    "id" => Cell::Str(n.id.clone()),
                    "name" => Cell::Str(n.name.clone()),
                    _ => Self::scalar(n.properties.get(key)),
                }
            }
            B::Edge(e) => Self::scalar(self.g.edge(e).properties.get(key)),
        }
    }

    fn node_ok(&self, spec: &NodeSpec, i: usize) -> bool {
        let n = self.g.node(i);
        let label_ok = match spec.label {
            None => true,
            Some(l) if l == DOMAIN => true,
            Some(l) => n.node_type == l,
        };
        let prop_ok = match &spec.prop {
            None => true,
            Some((k, v)) => {
                let got = match *k {
                    "name" => Cell::Str(n.name.clone()),
                    _ => Self::scalar(n.properties.get(*k)),
                };
                eq(&got, v) == Some(true)
            }
        };
        label_ok && prop_ok
    }

    fn operand(&self, b: &Binding, o: &Operand) -> Cell {
        match o {
            Operand::Prop(v, k) => self.prop(b, v, k),
            Operand::Lit(c) => c.clone(),
        }
    }

    fn holds(&self, b: &Binding, c: &Cond) -> bool {
        match c {
            Cond::Cmp(op, x, y) => {
                let (x, y) = (self.operand(b, x), self.operand(b, y));
                if x == Cell::Null || y == Cell::Null {
                    return false;
                }
                let ord = match (&x, &y) {
                    (Cell::Int(a), Cell::Int(b)) => Some(a.cmp(b)),
                    (Cell::Str(a), Cell::Str(b)) => Some(a.cmp(b)),
                    _ => None,
                };
                match (op, ord) {
                    (Op::Eq, o) => o == Some(std::cmp::Ordering::Equal),
                    (Op::Ne, o) => o != Some(std::cmp::Ordering::Equal),
                    (_, None) => false,
                    (Op::Lt, Some(o)) => o.is_lt(),
                    (Op::Le, Some(o)) => o.is_le(),
                    (Op::Gt, Some(o)) => o.is_gt(),
                    (Op::Ge, Some(o)) => o.is_ge(),
                }
            }
            Cond::IsNull(o, neg) => (self.operand(b, o) == Cell::Null) != *neg,
            Cond::Not(a) => !self.holds(b, a),
            Cond::And(a, c) => self.holds(b, a) && self.holds(b, c),
            Cond::Or(a, c) => self.holds(b, a) || self.holds(b, c),
            Cond::Xor(a, c) => self.holds(b, a) != self.holds(b, c),
        }
    }

    fn bind_node(&self, b: &Binding, spec: &NodeSpec, i: usize) -> Option<Binding> {
        if !self.node_ok(spec, i) {
            return None;
        }
        match b.get(&spec.var) {
            Some(B::Node(j)) if *j == i => Some(b.clone()),
            Some(_) => None,
            None => {
                let mut nb = b.clone();
                nb.insert(spec.var.clone(), B::Node(i));
                Some(nb)
            }
        }
    }

    fn clause(&self, input: Vec<Binding>, c: &Clause) -> Vec<Binding> {
        // Each partial match carries the edges used so far in this clause.
        let mut partial: Vec<(Binding, Vec<usize>)> = Vec::new();
        for b in &input {
            for i in 0..self.g.node_count() {
                if let Some(nb) = self.bind_node(b, &c.start, i) {
                    partial.push((nb, Vec::new()));
                }
            }
        }
        let mut cur_var = c.start.var.clone();
        for h in &c.hops {
            let mut next = Vec::new();
            for (b, used) in &partial {
                let B::Node(at) = b[&cur_var] else { unreachable!() };
                for e in 0..self.g.edge_count() {
                    if used.contains(&e) {
                        continue;
                    }
                    let rec = self.g.edge(e);
                    if h.rel_type.is_some_and(|t| t != rec.edge_type) {
                        continue;
                    }
                    let (s, d) = self.g.endpoints(e);
                    let mut targets = Vec::new();
                    match h.dir {
                        Dir::Out if s == at => targets.push(d),
                        Dir::In if d == at => targets.push(s),
                        Dir::Both => {
                            if s == at {
                                targets.push(d);
                            }
                            if d == at && s != d {
                                targets.push(s);
                            }
                        }
                        _ => {}
                    }
                    for t in targets {
                        if let Some(mut nb) = self.bind_node(b, &h.target, t) {
                            nb.insert(h.var.clone(), B::Edge(e));
                            let mut u = used.clone();
                            u.push(e);
                            next.push((nb, u));
                        }
                    }
                }
            }
            partial = next;
            cur_var = h.target.var.clone();
        }
        partial
            .into_iter()
            .map(|(b, _)| b)
            .filter(|b| c.cond.as_ref().is_none_or(|cond| self.holds(b, cond)))
            .collect()
    }

    fn key_cell(&self, b: &Binding, it: &Item) -> Cell {
        match it {
            Item::Prop(v, k) => self.prop(b, v, k),
            Item::Type(r) => match b[r] {
                B::Edge(e) => Cell::Str(self.g.edge(e).edge_type.clone()),
                B::Node(_) => unreachable!(),
            },
            _ => unreachable!(),
        }
    }

    pub fn run(&self, q: &Q) -> Vec<Vec<Cell>> {
        let mut rows = vec![Binding::new()];
        for c in &q.clauses {
            rows = self.clause(rows, c);
        }
        let aggregating = q.items.iter().any(Item::is_agg);
        let mut out: Vec<Vec<Cell>> = if !aggregating {
            rows.iter()
                .map(|b| q.items.iter().map(|it| self.key_cell(b, it)).collect())
                .collect()
        } else {
            let key_items: Vec<usize> = (0..q.items.len()).filter(|i| !q.items[*i].is_agg()).collect();
            let mut groups: BTreeMap<Vec<Cell>, Vec<&Binding>> = BTreeMap::new();
            for b in &rows {
                let k = key_items.iter().map(|i| self.key_cell(b, &q.items[*i])).collect();
                groups.entry(k).or_default().push(b);
            }
            if key_items.is_empty() && groups.is_empty() {
                groups.insert(Vec::new(), Vec::new());
            }
            groups
                .into_iter()
                .map(|(k, members)| {
                    let mut k = k.into_iter();
                    q.items
                        .iter()
                        .map(|it| match it {
                            Item::CountStar => Cell::Int(members.len() as i64),
                            Item::CountDistinctVar(v) => {
                                let set: BTreeSet<usize> = members
                                    .iter()
                                    .map(|b| match b[v] {
                                        B::Node(i) => i,
                                        B::Edge(_) => unreachable!(),
                                    })
                                    .collect();
                                Cell::Int(set.len() as i64)
                            }
                            Item::CountProp { var, key, distinct } => {
                                let vals: Vec<Cell> = members
                                    .iter()
                                    .map(|b| self.prop(b, var, key))
                                    .filter(|c| *c != Cell::Null)
                                    .collect();
                                let n = if *distinct {
                                    vals.iter().collect::<BTreeSet<_>>().len()
                                } else {
                                    vals.len()
                                };
                                Cell::Int(n as i64)
                            }
                            _ => k.next().unwrap(),
                        })
                        .collect()
                })
                .collect()
        };
        out.sort_by(|a, b| {
            for (c, desc) in &q.order {
                let o = a[*c].cmp(&b[*c]);
                let o = if *desc { o.reverse() } else { o };
                if o.is_ne() {
                    return o;
                }
            }
            a.cmp(b)
        });
        let skip = q.skip.unwrap_or(0).min(out.len());
        let mut out = out.split_off(skip);
        if let Some(l) = q.limit {
            out.truncate(l);
        }
        out
    }
}

pub fn eq(a: &Cell, b: &Cell) -> Option<bool> {
    match (a, b) {
        (Cell::Null, _) | (_, Cell::Null) => None,
        _ => Some(a == b),
    }
}

pub fn render_value(v: &Value) -> String {
    let mut s = String::new();
    v.render(&mut s);
    s
}

/// Runs `cases` random (graph, query) pairs through the engine and the
/// reference. Returns the number of cases with a non-empty result.
pub fn compare_random_cases(seed: u64, cases: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonempty = 0;
    for case in 0..cases {
        let g = random_graph(&mut rng);
        let q = random_query(&mut rng);
        let text = query_text(&q);
        let got = run_query(&text, &g, &Params::new()).map_err(|e| format!("case {case}: {text}\n{e}"))?;
        let got: Vec<Vec<String>> = got.rows.iter().map(|r| r.iter().map(render_value).collect()).collect();
        let want: Vec<Vec<String>> = Oracle { g: &g }
            .run(&q)
            .iter()
            .map(|r| r.iter().map(Cell::render).collect())
            .collect();
        if got != want {
            return Err(format!("case {case}: {text}\nengine: {got:?}\nreference: {want:?}"));
        }
        nonempty += !want.is_empty() as usize;
    }
    Ok(nonempty)
}
