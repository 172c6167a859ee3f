//! Recursive-descent parser for the service specification text.
//!
//! The accepted surface syntax is the one used by the published service
//! listings:
//!
//! ```text
//! procedure NAME (P : in T; R : out RETURN_CODE_TYPE) is
//! error
//!     when (condition text) => RETURN_CODE := CODE;
//! normal
//!     free text statement;
//!     if (condition text) then
//!         ...
//!     else
//!         ...
//!     end if;
//! end NAME;
//! ```
//!
//! Keywords are case-insensitive. Simple statements are free text up to a
//! `;` at parenthesis depth zero. Conditions are either parenthesized
//! (balanced) or run up to the next `then` / `=>`. `--` starts a comment that
//! runs to the end of the line. Whitespace inside conditions and statements is
//! collapsed to single spaces.

use crate::ast::{ApexServiceSpec, ApexStmt, CondExpr, ErrorClause, Param, ParamMode};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: expected one of [{}], found {found}", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

pub fn parse_service(text: &str) -> Result<ApexServiceSpec, ParseError> {
    let mut p = Parser::new(text);
    let spec = p.service()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(&["end of input"]));
    }
    Ok(spec)
}

/// Parses a bare statement list, e.g. an excerpt of a normal part.
pub fn parse_statements(text: &str) -> Result<ApexStmt, ParseError> {
    let mut p = Parser::new(text);
    let stmt = p.statements(&[])?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(&["statement", "end of input"]));
    }
    Ok(stmt)
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).map(|&(_, c)| c)
    }

    fn location(&self) -> (usize, usize) {
        let byte = self
            .chars
            .get(self.pos)
            .map(|&(b, _)| b)
            .unwrap_or(self.src.len());
        let before = &self.src[..byte];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, column)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (line, column) = self.location();
        let found = if self.at_end() {
            "end of input".to_string()
        } else {
            let word: String = self.chars[self.pos..]
                .iter()
                .map(|&(_, c)| c)
                .take_while(|c| !c.is_whitespace())
                .take(24)
                .collect();
            format!("`{word}`")
        };
        ParseError {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn skip_comment(&mut self) -> bool {
        if self.peek() == Some('-') && self.peek_at(1) == Some('-') {
            while let Some(c) = self.peek() {
                if c == '\n' {
                    break;
                }
                self.pos += 1;
            }
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.pos += 1,
                Some('-') if self.skip_comment() => {}
                _ => break,
            }
        }
    }

    /// Next identifier-like word without consuming it.
    fn peek_word(&mut self) -> Option<String> {
        self.skip_ws();
        let mut i = self.pos;
        let mut word = String::new();
        while let Some(&(_, c)) = self.chars.get(i) {
            if c.is_alphanumeric() || c == '_' {
                word.push(c);
                i += 1;
            } else {
                break;
            }
        }
        (!word.is_empty()).then_some(word)
    }

    fn at_keyword(&mut self, kw: &str) -> bool {
        self.peek_word().is_some_and(|w| w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.pos += kw.chars().count();
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek_word() {
            Some(w) if w.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') => {
                self.pos += w.chars().count();
                Ok(w)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn punct(&mut self, tok: &str) -> Result<(), ParseError> {
        self.skip_ws();
        let n = tok.chars().count();
        let matches = tok
            .chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c));
        if matches {
            self.pos += n;
            Ok(())
        } else {
            Err(self.error(&[tok]))
        }
    }

    fn at_punct(&mut self, tok: &str) -> bool {
        self.skip_ws();
        tok.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn service(&mut self) -> Result<ApexServiceSpec, ParseError> {
        self.keyword("procedure")?;
        let name = self.ident("service name")?;
        let mut params = Vec::new();
        if self.at_punct("(") {
            self.punct("(")?;
            loop {
                params.push(self.param()?);
                if self.at_punct(";") {
                    self.punct(";")?;
                } else {
                    break;
                }
            }
            self.punct(")")?;
        }
        self.keyword("is")?;

        let mut error_part = Vec::new();
        if self.at_keyword("error") {
            self.keyword("error")?;
            while self.at_keyword("when") {
                error_part.push(self.error_clause()?);
            }
        }

        self.keyword("normal").map_err(|mut e| {
            if error_part.is_empty() {
                e.expected.insert(0, "error".into());
            } else {
                e.expected.insert(0, "when".into());
            }
            e
        })?;
        let normal_part = self.statements(&["end"])?;
        self.keyword("end")?;
        let closing = self.ident("service name")?;
        if closing != name {
            return Err(ParseError {
                found: format!("`{closing}`"),
                expected: vec![name],
                ..self.error(&[])
            });
        }
        self.punct(";")?;
        Ok(ApexServiceSpec {
            name,
            params,
            error_part,
            normal_part,
        })
    }

    fn param(&mut self) -> Result<Param, ParseError> {
        let name = self.ident("parameter name")?;
        self.punct(":")?;
        let mode = if self.at_keyword("in") {
            self.keyword("in")?;
            if self.at_keyword("out") {
                self.keyword("out")?;
                ParamMode::InOut
            } else {
                ParamMode::In
            }
        } else if self.at_keyword("out") {
            self.keyword("out")?;
            ParamMode::Out
        } else {
            return Err(self.error(&["in", "out"]));
        };
        let type_name = self.ident("type name")?;
        Ok(Param {
            name,
            type_name,
            mode,
        })
    }

    fn error_clause(&mut self) -> Result<ErrorClause, ParseError> {
        self.keyword("when")?;
        let cond = self.condition("=>")?;
        self.punct("=>")?;
        let target = self.ident("RETURN_CODE")?;
        if !target.eq_ignore_ascii_case("RETURN_CODE") {
            return Err(ParseError {
                found: format!("`{target}`"),
                ..self.error(&["RETURN_CODE"])
            });
        }
        self.punct(":=")?;
        let return_code = self.ident("return code")?;
        self.punct(";")?;
        Ok(ErrorClause { cond, return_code })
    }

    /// Statement list up to (not including) `end` or `else`.
    fn statements(&mut self, terminators: &[&str]) -> Result<ApexStmt, ParseError> {
        let mut stmts = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() || self.at_keyword("end") || self.at_keyword("else") {
                break;
            }
            stmts.push(self.statement()?);
        }
        if stmts.is_empty() {
            let mut expected = vec!["statement"];
            expected.extend_from_slice(terminators);
            return Err(self.error(&expected));
        }
        Ok(ApexStmt::sequence(stmts))
    }

    fn statement(&mut self) -> Result<ApexStmt, ParseError> {
        if self.at_keyword("if") {
            self.keyword("if")?;
            let cond = self.condition("then")?;
            self.keyword("then")?;
            let then = self.statements(&["else", "end"])?;
            let stmt = if self.at_keyword("else") {
                self.keyword("else")?;
                let els = self.statements(&["end"])?;
                ApexStmt::if_else(cond, then, els)
            } else {
                ApexStmt::if_then(cond, then)
            };
            self.keyword("end")?;
            self.keyword("if")?;
            self.punct(";")?;
            Ok(stmt)
        } else {
            self.simple_statement()
        }
    }

    fn simple_statement(&mut self) -> Result<ApexStmt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0i32;
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    self.pos = start;
                    let mut e = self.error(&[";"]);
                    e.found = "end of input".into();
                    let (line, column) = {
                        self.pos = self.chars.len();
                        self.location()
                    };
                    e.line = line;
                    e.column = column;
                    return Err(e);
                }
                Some('-') if self.skip_comment() => text.push(' '),
                Some('(') => {
                    depth += 1;
                    text.push('(');
                    self.pos += 1;
                }
                Some(')') => {
                    depth -= 1;
                    text.push(')');
                    self.pos += 1;
                }
                Some(';') if depth <= 0 => {
                    self.pos += 1;
                    break;
                }
                Some(c) => {
                    text.push(c);
                    self.pos += 1;
                }
            }
        }
        let text = normalize(&text);
        if text.is_empty() {
            self.pos = start;
            return Err(self.error(&["statement"]));
        }
        Ok(ApexStmt::Act(text))
    }

    /// A condition: balanced parentheses, or raw text up to `stop`.
    fn condition(&mut self, stop: &str) -> Result<CondExpr, ParseError> {
        self.skip_ws();
        let mut text = String::new();
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut depth = 1;
            loop {
                match self.peek() {
                    None => return Err(self.error(&[")"])),
                    Some('(') => {
                        depth += 1;
                        text.push('(');
                    }
                    Some(')') => {
                        depth -= 1;
                        if depth == 0 {
                            self.pos += 1;
                            break;
                        }
                        text.push(')');
                    }
                    Some(c) => text.push(c),
                }
                self.pos += 1;
            }
        } else {
            loop {
                if self.at_end() {
                    return Err(self.error(&[stop]));
                }
                let here = self.pos;
                let hit = if stop.chars().all(|c| c.is_alphabetic()) {
                    let boundary = here == 0
                        || !self.chars[here - 1].1.is_alphanumeric();
                    boundary && self.at_keyword(stop)
                } else {
                    self.at_punct(stop)
                };
                self.pos = here;
                if hit {
                    break;
                }
                text.push(self.chars[self.pos].1);
                self.pos += 1;
            }
        }
        let text = normalize(&text);
        if text.is_empty() {
            return Err(self.error(&["condition"]));
        }
        Ok(negation_of(&text).unwrap_or(CondExpr::Atom(text)))
    }
}

/// Recognizes `not (inner)` so printed negations parse back to `Not`.
fn negation_of(text: &str) -> Option<CondExpr> {
    let rest = text.strip_prefix("not ").or_else(|| text.strip_prefix("NOT "))?;
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    let mut depth = 0i32;
    for c in inner.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return None;
        }
    }
    (depth == 0).then(|| CondExpr::atom(normalize(inner)).negated())
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Renders a specification back to concrete syntax.
pub fn print_service(spec: &ApexServiceSpec) -> String {
    let mut out = format!("procedure {}", spec.name);
    if !spec.params.is_empty() {
        let params: Vec<String> = spec
            .params
            .iter()
            .map(|p| format!("{} : {} {}", p.name, p.mode, p.type_name))
            .collect();
        out.push_str(&format!("\n    ({})", params.join(";\n     ")));
    }
    out.push_str(" is\n");
    if !spec.error_part.is_empty() {
        out.push_str("error\n");
        for clause in &spec.error_part {
            out.push_str(&format!(
                "    when {} =>\n        RETURN_CODE := {};\n",
                cond_text(&clause.cond),
                clause.return_code
            ));
        }
    }
    out.push_str("normal\n");
    print_stmt(&spec.normal_part, 1, &mut out);
    out.push_str(&format!("end {};\n", spec.name));
    out
}

fn cond_text(cond: &CondExpr) -> String {
    match cond.literal() {
        (text, true) => format!("({text})"),
        (text, false) => format!("(not ({text}))"),
    }
}

fn print_stmt(stmt: &ApexStmt, indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    match stmt {
        ApexStmt::Act(text) => out.push_str(&format!("{pad}{text};\n")),
        ApexStmt::Seq(a, b) => {
            print_stmt(a, indent, out);
            print_stmt(b, indent, out);
        }
        ApexStmt::If { cond, then } => {
            out.push_str(&format!("{pad}if {} then\n", cond_text(cond)));
            print_stmt(then, indent + 1, out);
            out.push_str(&format!("{pad}end if;\n"));
        }
        ApexStmt::IfElse { cond, then, els } => {
            out.push_str(&format!("{pad}if {} then\n", cond_text(cond)));
            print_stmt(then, indent + 1, out);
            out.push_str(&format!("{pad}else\n"));
            print_stmt(els, indent + 1, out);
            out.push_str(&format!("{pad}end if;\n"));
        }
    }
}
