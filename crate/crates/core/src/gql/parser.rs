//! Recursive-descent parser for the supported Cypher subset.
//!
//! Keywords are case-insensitive and recognized contextually, so names like
//! `count` remain usable as aliases. Constructs outside the subset produce
//! `GqlError::Unsupported` rather than a syntax error.

use super::ast::*;
use super::error::GqlError;
use super::lexer::{tokenize, Tok, Token};

const WRITE_CLAUSES: &[&str] = &["CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "FOREACH"];
const AGGREGATES: &[&str] = &[
    "sum", "avg", "min", "max", "collect", "stdev", "stdevp", "percentilecont", "percentiledisc",
];

/// Parses and validates a query.
pub fn parse(text: &str) -> Result<Query, GqlError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let query = p.query()?;
    super::bind::bind(&query)?;
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> GqlError {
        let t = &self.tokens[self.pos];
        GqlError::syntax(t.line, t.col, expected, &t.tok.describe())
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), GqlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), GqlError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{}`", tok.symbol())]))
        }
    }

    /// Identifier usable as a variable, label, key, or alias.
    fn ident(&mut self, what: &str) -> Result<String, GqlError> {
        match self.peek().clone() {
            Tok::QuotedIdent(s) => {
                self.advance();
                Ok(s)
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    /// Property keys may be keywords (`n.end`, `{count: 1}`).
    fn key(&mut self) -> Result<String, GqlError> {
        match self.peek().clone() {
            Tok::QuotedIdent(s) | Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(&["property key"])),
        }
    }

    fn reject_clause_keyword(&self) -> Result<(), GqlError> {
        if let Tok::Ident(s) = self.peek() {
            let upper = s.to_ascii_uppercase();
            if WRITE_CLAUSES.contains(&upper.as_str()) {
                return Err(GqlError::unsupported(format!("write clause {upper}")));
            }
            match upper.as_str() {
                "OPTIONAL" => return Err(GqlError::unsupported("OPTIONAL MATCH")),
                "WITH" => return Err(GqlError::unsupported("WITH pipeline")),
                "UNWIND" => return Err(GqlError::unsupported("UNWIND")),
                "CALL" => return Err(GqlError::unsupported("CALL procedure")),
                "UNION" => return Err(GqlError::unsupported("UNION")),
                "LOAD" => return Err(GqlError::unsupported("LOAD CSV")),
                _ => {}
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<Query, GqlError> {
        let mut match_clauses = Vec::new();
        loop {
            self.reject_clause_keyword()?;
            if self.eat_kw("MATCH") {
                match_clauses.push(self.match_clause()?);
                continue;
            }
            if match_clauses.is_empty() {
                return Err(self.error(&["MATCH"]));
            }
            if self.is_kw("RETURN") {
                break;
            }
            return Err(self.error(&["MATCH", "WHERE", "RETURN"]));
        }
        self.expect_kw("RETURN")?;
        if self.is_kw("DISTINCT") {
            return Err(GqlError::unsupported("RETURN DISTINCT"));
        }
        if self.peek() == &Tok::Star {
            return Err(GqlError::unsupported("RETURN *"));
        }
        let mut return_items = vec![self.return_item()?];
        while self.eat(&Tok::Comma) {
            return_items.push(self.return_item()?);
        }

        let mut order_by = Vec::new();
        if self.is_kw("ORDER") {
            self.advance();
            self.expect_kw("BY")?;
            loop {
                let key = self.expr()?;
                let descending = if self.eat_kw("DESC") || self.eat_kw("DESCENDING") {
                    true
                } else {
                    let _ = self.eat_kw("ASC") || self.eat_kw("ASCENDING");
                    false
                };
                order_by.push(SortItem { key, descending });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let skip = if self.eat_kw("SKIP") {
            Some(self.count_literal("SKIP")?)
        } else {
            None
        };
        let limit = if self.eat_kw("LIMIT") {
            Some(self.count_literal("LIMIT")?)
        } else {
            None
        };
        self.eat(&Tok::Semicolon);
        if self.peek() != &Tok::Eof {
            self.reject_clause_keyword()?;
            if self.is_kw("MATCH") {
                return Err(GqlError::unsupported("clauses after RETURN"));
            }
            let mut expected = Vec::new();
            if order_by.is_empty() && skip.is_none() && limit.is_none() {
                expected.push("ORDER BY");
            }
            if skip.is_none() && limit.is_none() {
                expected.push("SKIP");
            }
            if limit.is_none() {
                expected.push("LIMIT");
            }
            expected.push("end of query");
            return Err(self.error(&expected));
        }
        Ok(Query {
            match_clauses,
            return_items,
            order_by,
            skip,
            limit,
        })
    }

    fn count_literal(&mut self, what: &str) -> Result<u64, GqlError> {
        match self.peek().clone() {
            Tok::Int(i) if i >= 0 => {
                self.advance();
                Ok(i as u64)
            }
            Tok::Param(_) => Err(GqlError::unsupported(format!("parameterized {what}"))),
            _ => Err(self.error(&["non-negative integer"])),
        }
    }

    fn match_clause(&mut self) -> Result<MatchClause, GqlError> {
        let mut patterns = vec![self.path()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.path()?);
        }
        let where_clause = if self.eat_kw("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(MatchClause {
            patterns,
            where_clause,
        })
    }

    fn path(&mut self) -> Result<PathPattern, GqlError> {
        if matches!(self.peek(), Tok::Ident(_) | Tok::QuotedIdent(_)) && self.peek_at(1) == &Tok::Eq {
            return Err(GqlError::unsupported("named path"));
        }
        let start = self.node_pattern()?;
        let mut steps = Vec::new();
        while matches!(self.peek(), Tok::Minus | Tok::Lt) {
            let rel = self.rel_pattern()?;
            let node = self.node_pattern()?;
            steps.push((rel, node));
        }
        Ok(PathPattern { start, steps })
    }

    fn node_pattern(&mut self) -> Result<NodePattern, GqlError> {
        self.expect(Tok::LParen)?;
        let mut node = NodePattern::default();
        if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) || matches!(self.peek(), Tok::QuotedIdent(_)) {
            node.var = Some(self.ident("variable")?);
        }
        if self.eat(&Tok::Colon) {
            node.label = Some(self.key()?);
            if self.peek() == &Tok::Colon {
                return Err(GqlError::unsupported("multiple node labels"));
            }
            if self.peek() == &Tok::Pipe {
                return Err(GqlError::unsupported("label expressions"));
            }
        }
        if self.peek() == &Tok::LBrace {
            node.props = self.prop_map()?;
        }
        if self.is_kw("WHERE") {
            return Err(GqlError::unsupported("inline WHERE in pattern"));
        }
        if self.peek() != &Tok::RParen {
            let mut expected = Vec::new();
            if node.var.is_none() && node.label.is_none() {
                expected.push("variable");
            }
            if node.label.is_none() {
                expected.push("`:`");
            }
            if node.props.is_empty() {
                expected.push("`{`");
            }
            expected.push("`)`");
            return Err(self.error(&expected));
        }
        self.advance();
        Ok(node)
    }

    fn rel_pattern(&mut self) -> Result<RelPattern, GqlError> {
        let left_arrow = self.eat(&Tok::Lt);
        self.expect(Tok::Minus)?;
        let mut rel = RelPattern {
            var: None,
            rel_type: None,
            direction: RelDirection::Undirected,
            props: Vec::new(),
        };
        if self.eat(&Tok::LBracket) {
            if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) || matches!(self.peek(), Tok::QuotedIdent(_)) {
                rel.var = Some(self.ident("variable")?);
            }
            if self.eat(&Tok::Colon) {
                rel.rel_type = Some(self.key()?);
                if self.peek() == &Tok::Pipe {
                    return Err(GqlError::unsupported("relationship type alternatives"));
                }
            }
            if self.peek() == &Tok::Star {
                return Err(GqlError::unsupported("variable-length path"));
            }
            if self.peek() == &Tok::LBrace {
                rel.props = self.prop_map()?;
            }
            if self.peek() != &Tok::RBracket {
                return Err(self.error(&["`:`", "`{`", "`]`"]));
            }
            self.advance();
        }
        self.expect(Tok::Minus)?;
        let right_arrow = self.eat(&Tok::Gt);
        rel.direction = match (left_arrow, right_arrow) {
            (false, true) => RelDirection::Out,
            (true, false) => RelDirection::In,
            _ => RelDirection::Undirected,
        };
        Ok(rel)
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Expr)>, GqlError> {
        self.expect(Tok::LBrace)?;
        let mut props = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(props);
        }
        loop {
            let key = self.key()?;
            self.expect(Tok::Colon)?;
            let value = self.expr()?;
            if !matches!(value, Expr::Literal(_) | Expr::Param(_)) {
                return Err(GqlError::unsupported("non-literal value in property map"));
            }
            props.push((key, value));
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RBrace)?;
            return Ok(props);
        }
    }

    fn return_item(&mut self) -> Result<ReturnItem, GqlError> {
        let expr = self.expr()?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident("alias")?)
        } else {
            None
        };
        Ok(ReturnItem { expr, alias })
    }

    fn expr(&mut self) -> Result<Expr, GqlError> {
        let mut lhs = self.xor_expr()?;
        while self.eat_kw("OR") {
            let rhs = self.xor_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn xor_expr(&mut self) -> Result<Expr, GqlError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("XOR") {
            let rhs = self.and_expr()?;
            lhs = Expr::Xor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, GqlError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("AND") {
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, GqlError> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Neq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, GqlError> {
        let lhs = self.postfix()?;
        let Some(op) = self.cmp_op() else {
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.postfix()?;
        if self.cmp_op().is_some() {
            return Err(GqlError::unsupported("chained comparison"));
        }
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn postfix(&mut self) -> Result<Expr, GqlError> {
        let atom = self.atom()?;
        match self.peek() {
            Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Percent | Tok::Caret => {
                return Err(GqlError::unsupported("arithmetic expression"));
            }
            Tok::RegexMatch => return Err(GqlError::unsupported("regular expression match")),
            Tok::LBracket => return Err(GqlError::unsupported("subscript expression")),
            _ => {}
        }
        if self.is_kw("STARTS") || self.is_kw("ENDS") || self.is_kw("CONTAINS") {
            return Err(GqlError::unsupported("string predicate"));
        }
        if self.is_kw("IN") {
            return Err(GqlError::unsupported("IN list predicate"));
        }
        if self.is_kw("IS") {
            self.advance();
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(atom),
                negated,
            });
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Expr, GqlError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Literal(Literal::Int(i)))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Expr::Literal(Literal::Float(x)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::Str(s)))
            }
            Tok::Param(p) => {
                self.advance();
                Ok(Expr::Param(p))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(i) => {
                        self.advance();
                        Ok(Expr::Literal(Literal::Int(-i)))
                    }
                    Tok::Float(x) => {
                        self.advance();
                        Ok(Expr::Literal(Literal::Float(-x)))
                    }
                    _ => Err(GqlError::unsupported("arithmetic expression")),
                }
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => Err(GqlError::unsupported("list expression")),
            Tok::LBrace => Err(GqlError::unsupported("map expression")),
            Tok::QuotedIdent(name) => {
                self.advance();
                self.after_name(name)
            }
            Tok::Ident(name) => {
                let upper = name.to_ascii_uppercase();
                match upper.as_str() {
                    "TRUE" => {
                        self.advance();
                        return Ok(Expr::Literal(Literal::Bool(true)));
                    }
                    "FALSE" => {
                        self.advance();
                        return Ok(Expr::Literal(Literal::Bool(false)));
                    }
                    "NULL" => {
                        self.advance();
                        return Ok(Expr::Literal(Literal::Null));
                    }
                    "CASE" => return Err(GqlError::unsupported("CASE expression")),
                    "EXISTS" => return Err(GqlError::unsupported("EXISTS subquery")),
                    _ => {}
                }
                if self.peek_at(1) == &Tok::LParen {
                    return self.function_call(name);
                }
                if is_keyword(&name) {
                    return Err(self.error(&["expression"]));
                }
                self.advance();
                self.after_name(name)
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    fn after_name(&mut self, name: String) -> Result<Expr, GqlError> {
        if self.eat(&Tok::Dot) {
            let key = self.key()?;
            if self.peek() == &Tok::Dot {
                return Err(GqlError::unsupported("nested property access"));
            }
            return Ok(Expr::Prop { var: name, key });
        }
        if self.peek() == &Tok::LParen {
            return Err(GqlError::unsupported(format!("function {name}()")));
        }
        Ok(Expr::Var(name))
    }

    fn function_call(&mut self, name: String) -> Result<Expr, GqlError> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "count" => {
                self.advance();
                self.expect(Tok::LParen)?;
                if self.eat(&Tok::Star) {
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Count {
                        distinct: false,
                        arg: None,
                    });
                }
                let distinct = self.eat_kw("DISTINCT");
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Count {
                    distinct,
                    arg: Some(Box::new(arg)),
                })
            }
            "type" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let var = self.ident("relationship variable")?;
                self.expect(Tok::RParen)?;
                Ok(Expr::RelType(var))
            }
            _ if AGGREGATES.contains(&lower.as_str()) => {
                Err(GqlError::unsupported(format!("aggregate function {name}()")))
            }
            _ => Err(GqlError::unsupported(format!("function {name}()"))),
        }
    }
}
