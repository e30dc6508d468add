//! A small Cypher subset: enough to decode `CREATE` patterns emitted by an LLM
//! into a pseudo-graph without a graph database.
//!
//! Accepted: `CREATE` with node and relationship patterns, optional labels,
//! string/number property maps, comma-separated pattern lists and `;` or
//! newline statement separators. `MATCH`/`OPTIONAL MATCH`/`RETURN` clauses are
//! skipped. Any other clause is rejected.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::kg::{Graph, Stage, Triple, TripleError};

type RelParts = (String, Direction, Vec<(String, Value)>);

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CypherError {
    #[error("lexical error at {pos}: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unresolved variable `{var}` at {pos}")]
    UnresolvedVariable { var: String, pos: Pos },
    #[error("variable `{var}` redefined at {pos}")]
    Redefined { var: String, pos: Pos },
    #[error("unsupported clause {clause} at {pos}")]
    UnsupportedClause { clause: String, pos: Pos },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("nodes without an identifying property: {}", vars.join(", "))]
    MissingIdentifier { vars: Vec<String> },
    #[error("relationship {from}-[:{rel_type}]->{to}: {source}")]
    InvalidTriple {
        from: String,
        rel_type: String,
        to: String,
        #[source]
        source: TripleError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    /// Number literal, kept as written (sign included).
    Num(String),
}

impl Value {
    pub fn as_text(&self) -> &str {
        match self {
            Value::Str(s) | Value::Num(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(a)-[:T]->(b)`
    Forward,
    /// `(a)<-[:T]-(b)`
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePattern {
    /// Anonymous nodes get a generated `_nN` name that does not clash with the script.
    pub variable: String,
    pub labels: Vec<String>,
    pub properties: Vec<(String, Value)>,
}

impl NodePattern {
    pub fn property(&self, key: &str) -> Option<&Value> {
        self.properties.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// `name`, else `title`, else the lexicographically first key.
    pub fn identifying_value(&self) -> Option<&str> {
        let v = self
            .property("name")
            .or_else(|| self.property("title"))
            .or_else(|| self.properties.iter().min_by(|a, b| a.0.cmp(&b.0)).map(|(_, v)| v))?;
        let text = v.as_text();
        (!text.trim().is_empty()).then_some(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelPattern {
    /// Left-hand node variable as written.
    pub from: String,
    pub rel_type: String,
    /// Right-hand node variable as written.
    pub to: String,
    pub direction: Direction,
    pub properties: Vec<(String, Value)>,
}

/// One `CREATE` statement: the nodes it defines and the relationships it adds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CreatePattern {
    pub nodes: Vec<NodePattern>,
    pub relationships: Vec<RelPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CypherScript {
    pub statements: Vec<CreatePattern>,
}

impl CypherScript {
    pub fn relationship_count(&self) -> usize {
        self.statements.iter().map(|s| s.relationships.len()).sum()
    }
}

/// Returns the bodies of all fenced code blocks joined by newlines, or the
/// trimmed input when there are none.
pub fn extract_code(llm_output: &str) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in llm_output.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(body) => blocks.push(body.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(body) = current.as_mut() {
            body.push(line);
        }
    }
    if let Some(body) = current {
        blocks.push(body.join("\n"));
    }
    if blocks.is_empty() {
        llm_output.trim().to_string()
    } else {
        blocks.iter().map(|b| b.trim()).collect::<Vec<_>>().join("\n")
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Semi,
    Dash,
    /// `->`
    ArrowRight,
    /// `<-`
    ArrowLeft,
    Ident {
        text: String,
        quoted: bool,
    },
    Str(String),
    Num(String),
    /// Punctuation only meaningful inside skipped clauses.
    Punct(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<Token>, CypherError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let Some(c) = self.bump() else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '-' if self.chars.peek() == Some(&'>') => {
                    self.bump();
                    Tok::ArrowRight
                }
                '-' => Tok::Dash,
                '<' if self.chars.peek() == Some(&'-') => {
                    self.bump();
                    Tok::ArrowLeft
                }
                '"' | '\'' => Tok::Str(self.string(c, pos)?),
                '`' => Tok::Ident {
                    text: self.backticked(pos)?,
                    quoted: true,
                },
                c if c.is_ascii_digit() => Tok::Num(self.number(c)),
                c if c.is_alphabetic() || c == '_' => {
                    let mut text = String::from(c);
                    while let Some(&n) = self.chars.peek() {
                        if n.is_alphanumeric() || n == '_' {
                            text.push(n);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident { text, quoted: false }
                }
                '.' | '=' | '<' | '>' | '*' | '+' | '/' | '%' | '^' | '!' | '|' | '$' => Tok::Punct(c),
                other => {
                    return Err(CypherError::Lex {
                        pos,
                        msg: format!("unexpected character {other:?}"),
                    })
                }
            };
            out.push(Token { tok, pos });
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.peek() != Some(&'/') {
                        return;
                    }
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn string(&mut self, quote: char, start: Pos) -> Result<String, CypherError> {
        let mut s = String::new();
        loop {
            let esc_pos = self.pos();
            match self.bump() {
                None => {
                    return Err(CypherError::Lex {
                        pos: start,
                        msg: "unterminated string".into(),
                    })
                }
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\'' | '\\')) => s.push(c),
                    other => {
                        return Err(CypherError::Lex {
                            pos: esc_pos,
                            msg: format!("unsupported escape \\{}", other.map(String::from).unwrap_or_default()),
                        })
                    }
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn backticked(&mut self, start: Pos) -> Result<String, CypherError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(CypherError::Lex {
                        pos: start,
                        msg: "unterminated backtick identifier".into(),
                    })
                }
                Some('`') => return Ok(s),
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, first: char) -> String {
        let mut s = String::from(first);
        let mut seen_dot = false;
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else if c == '.' && !seen_dot {
                let mut ahead = self.chars.clone();
                ahead.next();
                if !ahead.peek().is_some_and(char::is_ascii_digit) {
                    break;
                }
                seen_dot = true;
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Parser

const UNSUPPORTED: &[&str] = &[
    "DELETE", "DETACH", "SET", "REMOVE", "MERGE", "WITH", "UNWIND", "CALL", "FOREACH", "LOAD", "DROP", "UNION", "USE",
    "WHERE", "ORDER", "SKIP", "LIMIT",
];

fn keyword(tok: &Tok) -> Option<String> {
    match tok {
        Tok::Ident { text, quoted: false } => Some(text.to_ascii_uppercase()),
        _ => None,
    }
}

/// Keywords that end a skipped `MATCH`/`RETURN` clause.
fn starts_clause(kw: &str) -> bool {
    matches!(kw, "CREATE" | "MATCH" | "OPTIONAL" | "RETURN")
        || (UNSUPPORTED.contains(&kw) && !matches!(kw, "WHERE" | "ORDER" | "SKIP" | "LIMIT"))
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    bound: HashSet<String>,
    reserved: HashSet<String>,
    next_anon: usize,
}

pub fn parse_cypher(script: &str) -> Result<CypherScript, CypherError> {
    let toks = Lexer::new(script).tokens()?;
    let reserved = toks
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident { text, .. } => Some(text.clone()),
            _ => None,
        })
        .collect();
    let mut p = Parser {
        toks,
        at: 0,
        bound: HashSet::new(),
        reserved,
        next_anon: 0,
    };
    p.script()
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, CypherError> {
        Err(CypherError::Syntax {
            pos: self.peek().pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Pos, CypherError> {
        if self.peek().tok == want {
            Ok(self.next().pos)
        } else {
            self.syntax(format!("expected {what}, found {}", describe(&self.peek().tok)))
        }
    }

    fn script(&mut self) -> Result<CypherScript, CypherError> {
        let mut script = CypherScript::default();
        loop {
            let tok = self.peek().clone();
            match &tok.tok {
                Tok::Eof => return Ok(script),
                Tok::Semi => {
                    self.next();
                }
                t => match keyword(t).as_deref() {
                    Some("CREATE") => {
                        self.next();
                        script.statements.push(self.create()?);
                        self.end_of_statement()?;
                    }
                    Some("MATCH" | "OPTIONAL" | "RETURN") => {
                        self.next();
                        self.skip_clause();
                    }
                    Some(kw) if UNSUPPORTED.contains(&kw) => {
                        return Err(CypherError::UnsupportedClause {
                            clause: kw.to_string(),
                            pos: tok.pos,
                        })
                    }
                    _ => return self.syntax(format!("expected a clause, found {}", describe(t))),
                },
            }
        }
    }

    fn end_of_statement(&self) -> Result<(), CypherError> {
        let t = &self.peek().tok;
        if matches!(t, Tok::Semi | Tok::Eof) || keyword(t).is_some() {
            Ok(())
        } else {
            self.syntax(format!("expected end of statement, found {}", describe(t)))
        }
    }

    fn skip_clause(&mut self) {
        let mut depth = 0usize;
        let mut after_dot = false;
        loop {
            let t = &self.peek().tok;
            match t {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => return,
                Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBracket | Tok::RBrace => depth = depth.saturating_sub(1),
                _ => {
                    if depth == 0 && !after_dot && keyword(t).is_some_and(|k| starts_clause(&k)) {
                        return;
                    }
                }
            }
            after_dot = matches!(t, Tok::Punct('.'));
            self.next();
        }
    }

    fn create(&mut self) -> Result<CreatePattern, CypherError> {
        let mut stmt = CreatePattern::default();
        loop {
            self.path(&mut stmt)?;
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                return Ok(stmt);
            }
        }
    }

    fn path(&mut self, stmt: &mut CreatePattern) -> Result<(), CypherError> {
        let mut left = self.node(stmt)?;
        while matches!(self.peek().tok, Tok::Dash | Tok::ArrowLeft) {
            let (rel_type, direction, properties) = self.relationship()?;
            let right = self.node(stmt)?;
            stmt.relationships.push(RelPattern {
                from: left,
                rel_type,
                to: right.clone(),
                direction,
                properties,
            });
            left = right;
        }
        Ok(())
    }

    fn ident(&mut self, what: &str) -> Result<String, CypherError> {
        match &self.peek().tok {
            Tok::Ident { text, .. } => {
                let text = text.clone();
                self.next();
                Ok(text)
            }
            t => self.syntax(format!("expected {what}, found {}", describe(t))),
        }
    }

    fn anon_name(&mut self) -> String {
        loop {
            let name = format!("_n{}", self.next_anon);
            self.next_anon += 1;
            if !self.reserved.contains(&name) {
                return name;
            }
        }
    }

    /// Parses a node pattern and returns its variable.
    fn node(&mut self, stmt: &mut CreatePattern) -> Result<String, CypherError> {
        let open = self.expect(Tok::LParen, "`(`")?;
        let var = match &self.peek().tok {
            Tok::Ident { .. } => Some(self.ident("variable")?),
            _ => None,
        };
        let mut labels = Vec::new();
        while self.peek().tok == Tok::Colon {
            self.next();
            labels.push(self.ident("label")?);
        }
        let properties = if self.peek().tok == Tok::LBrace {
            self.properties()?
        } else {
            Vec::new()
        };
        self.expect(Tok::RParen, "`)`")?;

        let bare = labels.is_empty() && properties.is_empty();
        match var {
            Some(v) if self.bound.contains(&v) => {
                if bare {
                    Ok(v)
                } else {
                    Err(CypherError::Redefined { var: v, pos: open })
                }
            }
            Some(v) if bare => Err(CypherError::UnresolvedVariable { var: v, pos: open }),
            var => {
                let variable = match var {
                    Some(v) => v,
                    None => self.anon_name(),
                };
                self.bound.insert(variable.clone());
                stmt.nodes.push(NodePattern {
                    variable: variable.clone(),
                    labels,
                    properties,
                });
                Ok(variable)
            }
        }
    }

    fn relationship(&mut self) -> Result<RelParts, CypherError> {
        let incoming = self.next().tok == Tok::ArrowLeft;
        self.expect(Tok::LBracket, "`[`")?;
        if matches!(self.peek().tok, Tok::Ident { .. }) {
            // relationship variables are accepted and dropped
            self.next();
        }
        self.expect(Tok::Colon, "`:` and a relationship type")?;
        let rel_type = self.ident("relationship type")?;
        let properties = if self.peek().tok == Tok::LBrace {
            self.properties()?
        } else {
            Vec::new()
        };
        self.expect(Tok::RBracket, "`]`")?;
        let outgoing = match self.peek().tok {
            Tok::ArrowRight => true,
            Tok::Dash => false,
            _ => return self.syntax("expected `-` or `->` after relationship"),
        };
        let pos = self.next().pos;
        let direction = match (incoming, outgoing) {
            (false, true) => Direction::Forward,
            (true, false) => Direction::Backward,
            _ => {
                return Err(CypherError::Syntax {
                    pos,
                    msg: "relationship must have exactly one direction".into(),
                })
            }
        };
        Ok((rel_type, direction, properties))
    }

    fn properties(&mut self) -> Result<Vec<(String, Value)>, CypherError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut props: Vec<(String, Value)> = Vec::new();
        if self.peek().tok == Tok::RBrace {
            self.next();
            return Ok(props);
        }
        loop {
            let key_pos = self.peek().pos;
            let key = self.ident("property key")?;
            if props.iter().any(|(k, _)| *k == key) {
                return Err(CypherError::Syntax {
                    pos: key_pos,
                    msg: format!("duplicate property `{key}`"),
                });
            }
            self.expect(Tok::Colon, "`:`")?;
            let value = self.value()?;
            props.push((key, value));
            match self.next().tok {
                Tok::Comma => continue,
                Tok::RBrace => return Ok(props),
                t => {
                    self.at -= 1;
                    return self.syntax(format!("expected `,` or `}}`, found {}", describe(&t)));
                }
            }
        }
    }

    fn value(&mut self) -> Result<Value, CypherError> {
        let negative = self.peek().tok == Tok::Dash;
        if negative {
            self.next();
        }
        match self.peek().tok.clone() {
            Tok::Str(s) if !negative => {
                self.next();
                Ok(Value::Str(s))
            }
            Tok::Num(n) => {
                self.next();
                Ok(Value::Num(if negative { format!("-{n}") } else { n }))
            }
            t => self.syntax(format!("expected a string or number, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Dash => "`-`".into(),
        Tok::ArrowRight => "`->`".into(),
        Tok::ArrowLeft => "`<-`".into(),
        Tok::Ident { text, .. } => format!("`{text}`"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(n) => format!("number {n}"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Eof => "end of input".into(),
    }
}

// ---------------------------------------------------------------------------
// Printer

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !starts_clause(&s.to_ascii_uppercase())
        && !UNSUPPORTED.contains(&s.to_ascii_uppercase().as_str())
}

fn write_ident(out: &mut String, s: &str) {
    if is_plain_ident(s) {
        out.push_str(s);
    } else {
        out.push('`');
        out.push_str(s);
        out.push('`');
    }
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Num(n) => out.push_str(n),
        Value::Str(s) => {
            out.push('"');
            for c in s.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
    }
}

fn write_props(out: &mut String, props: &[(String, Value)]) {
    if props.is_empty() {
        return;
    }
    out.push_str(" {");
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_ident(out, k);
        out.push_str(": ");
        write_value(out, v);
    }
    out.push('}');
}

fn write_node(out: &mut String, n: &NodePattern) {
    out.push('(');
    write_ident(out, &n.variable);
    for l in &n.labels {
        out.push(':');
        write_ident(out, l);
    }
    write_props(out, &n.properties);
    out.push(')');
}

fn write_rel(out: &mut String, r: &RelPattern) {
    out.push('(');
    write_ident(out, &r.from);
    out.push_str(match r.direction {
        Direction::Forward => ")-[:",
        Direction::Backward => ")<-[:",
    });
    write_ident(out, &r.rel_type);
    write_props(out, &r.properties);
    out.push_str(match r.direction {
        Direction::Forward => "]->(",
        Direction::Backward => "]-(",
    });
    write_ident(out, &r.to);
    out.push(')');
}

impl fmt::Display for CypherScript {
    /// Canonical form: one `CREATE` per line, node definitions first, then
    /// relationships between bare variables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for stmt in &self.statements {
            let mut line = String::from("CREATE ");
            let mut first = true;
            for n in &stmt.nodes {
                if !first {
                    line.push_str(", ");
                }
                first = false;
                write_node(&mut line, n);
            }
            for r in &stmt.relationships {
                if !first {
                    line.push_str(", ");
                }
                first = false;
                write_rel(&mut line, r);
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Interpreter

/// `FIELD_OF_WORK` -> `field of work`.
pub fn humanize_rel_type(rel_type: &str) -> String {
    rel_type
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Decodes every relationship into a triple of the pseudo stage.
pub fn execute(script: &CypherScript) -> Result<Graph, DecodeError> {
    let nodes: HashMap<&str, &NodePattern> = script
        .statements
        .iter()
        .flat_map(|s| &s.nodes)
        .map(|n| (n.variable.as_str(), n))
        .collect();

    let mut missing: Vec<String> = Vec::new();
    let mut label_of = |var: &str| -> Option<String> {
        let label = nodes.get(var).and_then(|n| n.identifying_value());
        if label.is_none() && !missing.iter().any(|m| m == var) {
            missing.push(var.to_string());
        }
        label.map(str::to_string)
    };

    let mut resolved = Vec::new();
    for rel in script.statements.iter().flat_map(|s| &s.relationships) {
        let from = label_of(&rel.from);
        let to = label_of(&rel.to);
        if let (Some(from), Some(to)) = (from, to) {
            resolved.push((rel, from, to));
        }
    }
    if !missing.is_empty() {
        return Err(DecodeError::MissingIdentifier { vars: missing });
    }

    let mut graph = Graph::new(Stage::Pseudo);
    for (rel, from, to) in resolved {
        let relation = humanize_rel_type(&rel.rel_type);
        let (subject, object) = match rel.direction {
            Direction::Forward => (from, to),
            Direction::Backward => (to, from),
        };
        let triple = Triple::new(&subject, &relation, &object).map_err(|source| DecodeError::InvalidTriple {
            from: rel.from.clone(),
            rel_type: rel.rel_type.clone(),
            to: rel.to.clone(),
            source,
        })?;
        graph.insert(triple);
    }
    Ok(graph)
}

/// Error from either stage of turning LLM text into a pseudo-graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Parse(#[from] CypherError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("the script creates no relationships")]
    NoTriples,
}

/// Fence extraction, parse and execute in one step. Fails on an empty result.
pub fn decode_llm_output(llm_output: &str) -> Result<Graph, BridgeError> {
    let script = parse_cypher(&extract_code(llm_output))?;
    let graph = execute(&script)?;
    if graph.is_empty() {
        return Err(BridgeError::NoTriples);
    }
    Ok(graph)
}

/// Renders a script to canonical text (same as `Display`).
pub fn print_cypher(script: &CypherScript) -> String {
    let mut s = String::new();
    write!(s, "{script}").expect("formatting into a String cannot fail");
    s
}
