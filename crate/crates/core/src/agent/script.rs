//! The code interpreter's script dialect.
//!
//! A script is a sequence of Python-syntax statements drawn from a small set:
//!
//! ```text
//! rows = cypher("""MATCH (n:Gene) RETURN count(*) AS c""", params={'k': 1}, limit=10)
//! query = 'MATCH (n) RETURN n.id'
//! print(rows)
//! print(cypher(query))
//! cypher("...")
//! ```
//!
//! Anything else is rejected before execution with a diagnostic naming the
//! offending line. Execution stops at the first failing query.

use std::collections::HashMap;

use crate::gql::{self, render_rows, Params, ResultTable};
use crate::graph::{PropertyGraph, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptOutput {
    pub output: String,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    Int(i64),
    Float(f64),
    Eq,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Minus,
    Newline,
    Other(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

#[derive(Debug)]
struct ScriptError {
    line: usize,
    message: String,
}

fn lex(src: &str) -> Result<Vec<Token>, ScriptError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut depth = 0usize;
    let err = |line, message: &str| ScriptError {
        line,
        message: message.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, line });
                }
                line += 1;
                i += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                line += 1;
                i += 2;
            }
            c if c.is_whitespace() => i += 1,
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let is_prefix = matches!(word.as_str(), "r" | "R" | "f" | "F" | "b" | "B" | "u" | "U" | "rb" | "br");
                if is_prefix && matches!(chars.get(i), Some('\'') | Some('"')) {
                    if matches!(word.as_str(), "f" | "F") {
                        return Err(err(line, "f-strings are not supported"));
                    }
                    let raw = word.to_ascii_lowercase().contains('r');
                    let start_line = line;
                    let s = lex_string(&chars, &mut i, &mut line, raw)
                        .map_err(|m| err(start_line, &m))?;
                    out.push(Token { tok: Tok::Str(s), line: start_line });
                } else {
                    out.push(Token { tok: Tok::Name(word), line });
                }
            }
            '\'' | '"' => {
                let start_line = line;
                let s = lex_string(&chars, &mut i, &mut line, false).map_err(|m| err(start_line, &m))?;
                out.push(Token { tok: Tok::Str(s), line: start_line });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                    i += 1;
                }
                let mut is_float = false;
                if chars.get(i) == Some(&'.') {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e') | Some('E')) {
                    is_float = true;
                    i += 1;
                    if matches!(chars.get(i), Some('+') | Some('-')) {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| err(line, "invalid number"))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| err(line, "invalid integer"))?)
                };
                out.push(Token { tok, line });
            }
            _ => {
                let tok = match c {
                    '=' if chars.get(i + 1) != Some(&'=') => Tok::Eq,
                    '(' => {
                        depth += 1;
                        Tok::LParen
                    }
                    ')' => {
                        depth = depth.saturating_sub(1);
                        Tok::RParen
                    }
                    '{' => {
                        depth += 1;
                        Tok::LBrace
                    }
                    '}' => {
                        depth = depth.saturating_sub(1);
                        Tok::RBrace
                    }
                    '[' => {
                        depth += 1;
                        Tok::Other('[')
                    }
                    ']' => {
                        depth = depth.saturating_sub(1);
                        Tok::Other(']')
                    }
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '-' => Tok::Minus,
                    ';' => Tok::Newline,
                    other => Tok::Other(other),
                };
                out.push(Token { tok, line });
                i += 1;
            }
        }
    }
    out.push(Token { tok: Tok::Newline, line });
    Ok(out)
}

fn lex_string(chars: &[char], i: &mut usize, line: &mut usize, raw: bool) -> Result<String, String> {
    let q = chars[*i];
    let triple = chars.get(*i + 1) == Some(&q) && chars.get(*i + 2) == Some(&q);
    *i += if triple { 3 } else { 1 };
    let mut s = String::new();
    loop {
        let Some(&c) = chars.get(*i) else {
            return Err("unterminated string literal".into());
        };
        if triple {
            if c == q && chars.get(*i + 1) == Some(&q) && chars.get(*i + 2) == Some(&q) {
                *i += 3;
                return Ok(s);
            }
        } else if c == q {
            *i += 1;
            return Ok(s);
        } else if c == '\n' {
            return Err("unterminated string literal".into());
        }
        if c == '\n' {
            *line += 1;
        }
        if c == '\\' && !raw {
            let Some(&e) = chars.get(*i + 1) else {
                return Err("unterminated string literal".into());
            };
            *i += 2;
            match e {
                'n' => s.push('\n'),
                't' => s.push('\t'),
                'r' => s.push('\r'),
                '0' => s.push('\0'),
                '\\' => s.push('\\'),
                '\'' => s.push('\''),
                '"' => s.push('"'),
                '\n' => *line += 1,
                'x' | 'u' => {
                    let width = if e == 'x' { 2 } else { 4 };
                    let hex: String = chars.get(*i..*i + width).unwrap_or(&[]).iter().collect();
                    let ch = u32::from_str_radix(&hex, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or("invalid escape sequence")?;
                    s.push(ch);
                    *i += width;
                }
                other => {
                    s.push('\\');
                    s.push(other);
                }
            }
            continue;
        }
        if c == '\\' && raw {
            // A raw string still cannot end on an escaped quote.
            if let Some(&next) = chars.get(*i + 1) {
                s.push('\\');
                s.push(next);
                if next == '\n' {
                    *line += 1;
                }
                *i += 2;
                continue;
            }
        }
        s.push(c);
        *i += 1;
    }
}

#[derive(Debug, Clone)]
enum Arg {
    Name(String),
    Str(String),
    Cypher(CypherCall),
}

#[derive(Debug, Clone)]
enum QueryText {
    Literal(String),
    Name(String),
}

#[derive(Debug, Clone)]
struct CypherCall {
    query: QueryText,
    params: Params,
    limit: Option<usize>,
}

#[derive(Debug, Clone)]
enum Stmt {
    AssignQuery(String, CypherCall),
    AssignStr(String, String),
    Print(Vec<Arg>),
    Bare(CypherCall),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    lines: Vec<&'a str>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unsupported(&self, line: usize) -> ScriptError {
        let text = self.lines.get(line - 1).map_or("", |l| l.trim());
        ScriptError {
            line,
            message: format!(
                "unsupported statement `{text}`; only `name = cypher(\"...\")`, `name = \"...\"`, \
                 `print(name)` and `print(cypher(\"...\"))` are available"
            ),
        }
    }

    fn expect(&mut self, tok: Tok, start_line: usize) -> Result<(), ScriptError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unsupported(start_line))
        }
    }

    fn statements(&mut self) -> Result<Vec<Stmt>, ScriptError> {
        let mut out = Vec::new();
        loop {
            while *self.peek() == Tok::Newline {
                if self.pos + 1 >= self.toks.len() {
                    return Ok(out);
                }
                self.next();
            }
            let start = self.line();
            let stmt = self.statement(start)?;
            if *self.peek() != Tok::Newline {
                return Err(self.unsupported(start));
            }
            out.push(stmt);
        }
    }

    fn statement(&mut self, start: usize) -> Result<Stmt, ScriptError> {
        let Tok::Name(name) = self.next() else {
            return Err(self.unsupported(start));
        };
        match self.peek().clone() {
            Tok::Eq => {
                self.next();
                match self.next() {
                    Tok::Str(s) => Ok(Stmt::AssignStr(name, s)),
                    Tok::Name(f) if f == "cypher" => Ok(Stmt::AssignQuery(name, self.cypher_args(start)?)),
                    _ => Err(self.unsupported(start)),
                }
            }
            Tok::LParen if name == "print" => {
                self.next();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(match self.next() {
                            Tok::Str(s) => Arg::Str(s),
                            Tok::Name(f) if f == "cypher" && *self.peek() == Tok::LParen => {
                                Arg::Cypher(self.cypher_args(start)?)
                            }
                            Tok::Name(n) if *self.peek() != Tok::LParen => Arg::Name(n),
                            _ => return Err(self.unsupported(start)),
                        });
                        if *self.peek() == Tok::Comma {
                            self.next();
                            continue;
                        }
                        break;
                    }
                }
                self.expect(Tok::RParen, start)?;
                Ok(Stmt::Print(args))
            }
            Tok::LParen if name == "cypher" => Ok(Stmt::Bare(self.cypher_args(start)?)),
            _ => Err(self.unsupported(start)),
        }
    }

    /// Parses `(query, params=None, limit=None)` after the `cypher` name.
    fn cypher_args(&mut self, start: usize) -> Result<CypherCall, ScriptError> {
        self.expect(Tok::LParen, start)?;
        let query = match self.next() {
            Tok::Str(s) => QueryText::Literal(s),
            Tok::Name(n) if !matches!(self.peek(), Tok::LParen | Tok::Eq) => QueryText::Name(n),
            _ => return Err(self.unsupported(start)),
        };
        let mut call = CypherCall {
            query,
            params: Params::new(),
            limit: None,
        };
        let mut positional = 1;
        while *self.peek() == Tok::Comma {
            self.next();
            if *self.peek() == Tok::RParen {
                break;
            }
            let slot = match (self.peek().clone(), self.toks.get(self.pos + 1).map(|t| &t.tok)) {
                (Tok::Name(k), Some(Tok::Eq)) => {
                    self.next();
                    self.next();
                    match k.as_str() {
                        "params" => 1,
                        "limit" => 2,
                        _ => return Err(self.unsupported(start)),
                    }
                }
                _ => {
                    positional += 1;
                    positional - 1
                }
            };
            match slot {
                1 => call.params = self.params_arg(start)?,
                2 => call.limit = self.limit_arg(start)?,
                _ => return Err(self.unsupported(start)),
            }
        }
        self.expect(Tok::RParen, start)?;
        Ok(call)
    }

    fn params_arg(&mut self, start: usize) -> Result<Params, ScriptError> {
        let mut params = Params::new();
        match self.next() {
            Tok::Name(n) if n == "None" => return Ok(params),
            Tok::LBrace => {}
            _ => return Err(self.unsupported(start)),
        }
        loop {
            if *self.peek() == Tok::RBrace {
                self.next();
                return Ok(params);
            }
            let Tok::Str(key) = self.next() else {
                return Err(self.unsupported(start));
            };
            self.expect(Tok::Colon, start)?;
            let value = self.scalar(start)?;
            params.insert(key, value);
            match self.next() {
                Tok::Comma => {}
                Tok::RBrace => return Ok(params),
                _ => return Err(self.unsupported(start)),
            }
        }
    }

    fn scalar(&mut self, start: usize) -> Result<Scalar, ScriptError> {
        Ok(match self.next() {
            Tok::Str(s) => Scalar::Str(s),
            Tok::Int(i) => Scalar::Int(i),
            Tok::Float(x) => Scalar::Float(x),
            Tok::Name(n) if n == "True" => Scalar::Bool(true),
            Tok::Name(n) if n == "False" => Scalar::Bool(false),
            Tok::Minus => match self.next() {
                Tok::Int(i) => Scalar::Int(-i),
                Tok::Float(x) => Scalar::Float(-x),
                _ => return Err(self.unsupported(start)),
            },
            _ => return Err(self.unsupported(start)),
        })
    }

    fn limit_arg(&mut self, start: usize) -> Result<Option<usize>, ScriptError> {
        match self.next() {
            Tok::Name(n) if n == "None" => Ok(None),
            Tok::Int(i) if i >= 0 => Ok(Some(i as usize)),
            _ => Err(self.unsupported(start)),
        }
    }
}

enum Var {
    Rows(ResultTable),
    Str(String),
}

/// Runs a script against the graph. Each printed table is rendered with
/// `render_budget` characters at most.
pub fn run_script(code: &str, graph: &PropertyGraph, render_budget: usize) -> ScriptOutput {
    let parsed = lex(code).and_then(|toks| {
        Parser {
            toks,
            pos: 0,
            lines: code.lines().collect(),
        }
        .statements()
    });
    let stmts = match parsed {
        Ok(s) => s,
        Err(e) => {
            return ScriptOutput {
                output: format!("SyntaxError (line {}): {}", e.line, e.message),
                failed: true,
            }
        }
    };

    let mut vars: HashMap<String, Var> = HashMap::new();
    let mut printed: Vec<String> = Vec::new();
    let fail = |printed: &mut Vec<String>, msg: String| {
        printed.push(msg);
        ScriptOutput {
            output: printed.join("\n"),
            failed: true,
        }
    };

    let run = |call: &CypherCall, vars: &HashMap<String, Var>| -> Result<ResultTable, String> {
        let text = match &call.query {
            QueryText::Literal(s) => s.as_str(),
            QueryText::Name(n) => match vars.get(n) {
                Some(Var::Str(s)) => s.as_str(),
                Some(Var::Rows(_)) => return Err(format!("TypeError: `{n}` is a query result, not a query string")),
                None => return Err(format!("NameError: name '{n}' is not defined")),
            },
        };
        let mut table = gql::run_query(text, graph, &call.params).map_err(|e| format!("CypherError: {e}"))?;
        if let Some(l) = call.limit {
            table.rows.truncate(l);
        }
        Ok(table)
    };

    for stmt in &stmts {
        match stmt {
            Stmt::AssignStr(name, s) => {
                vars.insert(name.clone(), Var::Str(s.clone()));
            }
            Stmt::AssignQuery(name, call) => match run(call, &vars) {
                Ok(t) => {
                    vars.insert(name.clone(), Var::Rows(t));
                }
                Err(m) => return fail(&mut printed, m),
            },
            Stmt::Bare(call) => {
                if let Err(m) = run(call, &vars) {
                    return fail(&mut printed, m);
                }
            }
            Stmt::Print(args) => {
                let mut parts = Vec::new();
                for a in args {
                    parts.push(match a {
                        Arg::Str(s) => s.clone(),
                        Arg::Name(n) => match vars.get(n) {
                            Some(Var::Rows(t)) => render_rows(t, render_budget),
                            Some(Var::Str(s)) => s.clone(),
                            None => {
                                return fail(&mut printed, format!("NameError: name '{n}' is not defined"))
                            }
                        },
                        Arg::Cypher(call) => match run(call, &vars) {
                            Ok(t) => render_rows(&t, render_budget),
                            Err(m) => return fail(&mut printed, m),
                        },
                    });
                }
                printed.push(parts.join(" "));
            }
        }
    }
    ScriptOutput {
        output: if printed.is_empty() {
            "(no output)".into()
        } else {
            printed.join("\n")
        },
        failed: false,
    }
}
