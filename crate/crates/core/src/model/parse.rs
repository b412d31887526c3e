//! Text format for problems.
//!
//! ```text
//! # comment
//! var x cont [0, 2]
//! var y bin
//! min (x - 0.6) ^ 2 + 0.5 * y
//! st c1: x - y <= 0
//! ```
//!
//! Statements end at a newline or `;`. Constraints accept `=`, `<=` and
//! `>=` against an arbitrary right-hand side; a literal `0` right-hand side
//! keeps the left expression unchanged.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::expr::{Expr, UnaryOp};
use super::problem::{Constraint, MinlpProblem, ModelError, VarKind, VariableSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: {message}")]
    Semantic { line: usize, column: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(&'static str),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < chars.len() {
        let c = chars[i];
        let column = i - line_start + 1;
        let push = |tokens: &mut Vec<Token>, tok| tokens.push(Token { tok, line, column });
        match c {
            '\n' => {
                push(&mut tokens, Tok::Newline);
                i += 1;
                line += 1;
                line_start = i;
            }
            ';' => {
                push(&mut tokens, Tok::Newline);
                i += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(&mut tokens, Tok::Ident(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let literal: String = chars[start..i].iter().collect();
                let value = literal.parse::<f64>().map_err(|_| ParseError::Syntax {
                    line,
                    column,
                    message: format!("invalid number `{literal}`"),
                })?;
                push(&mut tokens, Tok::Num(value));
            }
            _ => {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let sym = match two.as_str() {
                    "<=" => Some("<="),
                    ">=" => Some(">="),
                    _ => None,
                };
                if let Some(sym) = sym {
                    push(&mut tokens, Tok::Sym(sym));
                    i += 2;
                    continue;
                }
                let sym = match c {
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '^' => "^",
                    '(' => "(",
                    ')' => ")",
                    '[' => "[",
                    ']' => "]",
                    ',' => ",",
                    ':' => ":",
                    '=' => "=",
                    _ => {
                        return Err(ParseError::Syntax {
                            line,
                            column,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                };
                push(&mut tokens, Tok::Sym(sym));
                i += 1;
            }
        }
    }
    let column = chars.len() - line_start + 1;
    tokens.push(Token { tok: Tok::Eof, line, column });
    Ok(tokens)
}

enum Relation {
    Eq,
    Le,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    names: HashMap<String, usize>,
    variables: Vec<VariableSpec>,
    objective: Option<Expr>,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    labels: HashMap<String, (usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, token: &Token, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { line: token.line, column: token.column, message: message.into() })
    }

    fn semantic<T>(&self, token: &Token, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Semantic {
            line: token.line,
            column: token.column,
            message: message.into(),
        })
    }

    fn expect_sym(&mut self, sym: &str) -> Result<Token, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Sym(s) if *s == sym => Ok(t),
            other => self.error(&t, format!("expected `{sym}`, found {}", describe(other))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => self.error(&t, format!("expected identifier, found {}", describe(other))),
        }
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            ref other => self.error(&t, format!("expected end of statement, found {}", describe(other))),
        }
    }

    fn parse(mut self) -> Result<MinlpProblem, ParseError> {
        loop {
            let t = self.next();
            match &t.tok {
                Tok::Eof => break,
                Tok::Newline => continue,
                Tok::Ident(kw) if kw == "var" => self.var_statement()?,
                Tok::Ident(kw) if kw == "min" => {
                    if self.objective.is_some() {
                        return self.error(&t, "objective declared more than once");
                    }
                    let e = self.expr()?;
                    self.objective = Some(e);
                }
                Tok::Ident(kw) if kw == "st" => self.constraint_statement()?,
                other => {
                    return self.error(
                        &t,
                        format!("expected `var`, `min` or `st`, found {}", describe(other)),
                    )
                }
            }
            self.end_statement()?;
        }
        let eof = self.peek().clone();
        let objective = match self.objective.take() {
            Some(e) => e,
            None => return self.error(&eof, "missing `min` objective"),
        };
        self.build(objective)
    }

    fn build(self, objective: Expr) -> Result<MinlpProblem, ParseError> {
        // Continuous block first, then binaries, each in declaration order.
        let mut order: Vec<usize> = (0..self.variables.len())
            .filter(|&i| self.variables[i].kind == VarKind::Continuous)
            .collect();
        order.extend(
            (0..self.variables.len()).filter(|&i| self.variables[i].kind == VarKind::Binary),
        );
        let mut position = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let remap = |e: &Expr| remap(e, &position);
        let variables = order.iter().map(|&i| self.variables[i].clone()).collect();
        let equalities = self
            .equalities
            .iter()
            .map(|c| Constraint::new(c.name.clone(), remap(&c.expr)))
            .collect();
        let inequalities = self
            .inequalities
            .iter()
            .map(|c| Constraint::new(c.name.clone(), remap(&c.expr)))
            .collect();
        Ok(MinlpProblem::new(variables, remap(&objective), equalities, inequalities)?)
    }

    fn var_statement(&mut self) -> Result<(), ParseError> {
        let (name, name_tok) = self.expect_ident()?;
        if self.names.contains_key(&name) {
            return self.semantic(&name_tok, format!("duplicate variable name `{name}`"));
        }
        let (kind_name, kind_tok) = self.expect_ident()?;
        let spec = match kind_name.as_str() {
            "bin" => VariableSpec::binary(name.clone()),
            "cont" => {
                self.expect_sym("[")?;
                let lower = self.signed_number()?;
                self.expect_sym(",")?;
                let upper = self.signed_number()?;
                self.expect_sym("]")?;
                if lower > upper {
                    return self.semantic(
                        &kind_tok,
                        format!("bounds [{lower}, {upper}] of `{name}` are inverted"),
                    );
                }
                VariableSpec::continuous(name.clone(), lower, upper)
            }
            _ => return self.error(&kind_tok, format!("expected `cont` or `bin`, found `{kind_name}`")),
        };
        self.names.insert(name, self.variables.len());
        self.variables.push(spec);
        Ok(())
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = if self.is_sym("-") {
            self.next();
            true
        } else {
            if self.is_sym("+") {
                self.next();
            }
            false
        };
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(if negative { -v } else { v }),
            ref other => self.error(&t, format!("expected number, found {}", describe(other))),
        }
    }

    fn constraint_statement(&mut self) -> Result<(), ParseError> {
        let (label, label_tok) = self.expect_ident()?;
        if self.labels.contains_key(&label) {
            return self.semantic(&label_tok, format!("duplicate constraint label `{label}`"));
        }
        self.labels.insert(label.clone(), (label_tok.line, label_tok.column));
        self.expect_sym(":")?;
        let lhs = self.expr()?;
        let t = self.next();
        let (relation, flip) = match t.tok {
            Tok::Sym("=") => (Relation::Eq, false),
            Tok::Sym("<=") => (Relation::Le, false),
            Tok::Sym(">=") => (Relation::Le, true),
            ref other => {
                return self.error(&t, format!("expected `=`, `<=` or `>=`, found {}", describe(other)))
            }
        };
        let rhs = self.expr()?;
        let zero_rhs = matches!(rhs, Expr::Const(c) if c == 0.0);
        let body = match (flip, zero_rhs) {
            (false, true) => lhs,
            (false, false) => lhs - rhs,
            (true, true) => -lhs,
            (true, false) => rhs - lhs,
        };
        let c = Constraint::new(label, body);
        match relation {
            Relation::Eq => self.equalities.push(c),
            Relation::Le => self.inequalities.push(c),
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.is_sym("+") {
                self.next();
                acc = acc + self.term()?;
            } else if self.is_sym("-") {
                self.next();
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.is_sym("*") {
                self.next();
                acc = acc * self.unary()?;
            } else if self.is_sym("/") {
                self.next();
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym("-") {
            self.next();
            // `-<literal>` is a negative constant unless the literal is a power base.
            if let Tok::Num(v) = self.peek().tok {
                let followed_by_pow =
                    matches!(self.tokens.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Sym("^")));
                if !followed_by_pow {
                    self.next();
                    return Ok(Expr::Const(-v));
                }
            }
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.is_sym("^") {
            self.next();
            let exponent = self.unary()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Const(*v)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if self.is_sym("(") => {
                let op = match name.as_str() {
                    "exp" => UnaryOp::Exp,
                    "log" => UnaryOp::Log,
                    "sqrt" => UnaryOp::Sqrt,
                    "abs" => UnaryOp::Abs,
                    _ => return self.semantic(&t, format!("unknown function `{name}`")),
                };
                self.next();
                let arg = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            Tok::Ident(name) => match self.names.get(name) {
                Some(&i) => Ok(Expr::Var(i)),
                None => self.semantic(&t, format!("unknown identifier `{name}`")),
            },
            other => self.error(&t, format!("expected expression, found {}", describe(other))),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Newline => "end of statement".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}

fn remap(e: &Expr, position: &[usize]) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(*c),
        Expr::Var(i) => Expr::Var(position[*i]),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(remap(a, position))),
        Expr::Binary(op, a, b) => {
            Expr::Binary(*op, Box::new(remap(a, position)), Box::new(remap(b, position)))
        }
    }
}

/// Parses a problem from its text form.
pub fn parse_problem(text: &str) -> Result<MinlpProblem, ParseError> {
    let parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        names: HashMap::new(),
        variables: Vec::new(),
        objective: None,
        equalities: Vec::new(),
        inequalities: Vec::new(),
        labels: HashMap::new(),
    };
    parser.parse()
}

/// Renders a problem in the text form accepted by [`parse_problem`].
pub fn print_problem(prob: &MinlpProblem) -> String {
    let names = prob.names();
    let mut out = String::new();
    for v in prob.variables() {
        match v.kind {
            VarKind::Continuous => {
                let _ = writeln!(out, "var {} cont [{}, {}]", v.name, v.lower, v.upper);
            }
            VarKind::Binary => {
                let _ = writeln!(out, "var {} bin", v.name);
            }
        }
    }
    let _ = writeln!(out, "min {}", prob.objective().display_with(&names));
    for c in prob.equalities() {
        let _ = writeln!(out, "st {}: {} = 0", c.name, c.expr.display_with(&names));
    }
    for c in prob.inequalities() {
        let _ = writeln!(out, "st {}: {} <= 0", c.name, c.expr.display_with(&names));
    }
    out
}
