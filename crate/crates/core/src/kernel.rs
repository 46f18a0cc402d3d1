//! A small loop-nest kernel language and its lowering to annotated traces.
//!
//! ```text
//! scalar retval;
//! scalar alpha;
//! for i < 300 {
//!   for j < 200 {
//!     for k < 102 {
//!       A[i][k] = alpha * A[i][k];
//!       B[j][k] = alpha;
//!     }
//!   }
//! }
//! ```
//!
//! Index expressions are a bare loop variable or an integer constant.
//! `//` starts a line comment.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::trace::{AnnotatedTrace, Index, Symbol, Token};

mod generate;

pub use generate::{generate_kernel, GenOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopDef {
    pub var: String,
    pub bound: u64,
}

/// A scalar (no indices) or array access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub name: String,
    pub indices: Vec<Index>,
}

impl Access {
    pub fn scalar(name: impl Into<String>) -> Self {
        Access {
            name: name.into(),
            indices: Vec::new(),
        }
    }

    pub fn array(name: impl Into<String>, indices: Vec<Index>) -> Self {
        Access {
            name: name.into(),
            indices,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.indices.is_empty()
    }
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for ix in &self.indices {
            write!(f, "[{ix}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementDef {
    pub write: Access,
    pub reads: Vec<Access>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelDef {
    pub preamble: Vec<String>,
    pub loops: Vec<LoopDef>,
    pub statements: Vec<StatementDef>,
}

impl KernelDef {
    /// Check the structural invariants: distinct positive loops, declared
    /// scalars, index variables bound by the nest.
    pub fn validate(&self) -> Result<()> {
        let mut vars = HashSet::new();
        for l in &self.loops {
            if !vars.insert(l.var.as_str()) {
                return Err(Error::NonNestedLoops(format!(
                    "loop variable `{}` is declared twice",
                    l.var
                )));
            }
            if l.bound == 0 {
                return Err(Error::Syntax {
                    line: 0,
                    column: 0,
                    message: format!("loop over `{}` has bound 0", l.var),
                });
            }
        }
        let undeclared = |name: &str| Error::UndeclaredVariable {
            name: name.to_string(),
            line: 0,
            column: 0,
        };
        for st in &self.statements {
            for acc in std::iter::once(&st.write).chain(&st.reads) {
                if acc.is_scalar()
                    && !self.preamble.contains(&acc.name)
                    && !vars.contains(acc.name.as_str())
                {
                    return Err(undeclared(&acc.name));
                }
                for ix in &acc.indices {
                    if let Index::Var(v) = ix {
                        if !vars.contains(v.as_str()) {
                            return Err(undeclared(v));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Render back to DSL text.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for s in &self.preamble {
            out.push_str(&format!("scalar {s};\n"));
        }
        for (depth, l) in self.loops.iter().enumerate() {
            out.push_str(&format!(
                "{}for {} < {} {{\n",
                "  ".repeat(depth),
                l.var,
                l.bound
            ));
        }
        let pad = "  ".repeat(self.loops.len());
        for st in &self.statements {
            let rhs = if st.reads.is_empty() {
                // an empty right-hand side still needs an expression
                "0".to_string()
            } else {
                st.reads
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(" * ")
            };
            out.push_str(&format!("{pad}{} = {rhs};\n", st.write));
        }
        for depth in (0..self.loops.len()).rev() {
            out.push_str(&format!("{}}}\n", "  ".repeat(depth)));
        }
        out
    }
}

/// Token emission rules for [`lower_kernel`].
///
/// The defaults put, per loop, the control variable once before the loop
/// (initialisation), once as the first body token (condition), twice as the
/// last body tokens (increment load and store) and once after the loop
/// (exit check). Per statement, right-hand-side operands come first in
/// source order, each array access preceded by its index-variable loads,
/// and the write last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmissionTemplate {
    pub loop_init: bool,
    pub loop_condition: bool,
    pub increment_tokens: usize,
    pub exit_check: bool,
    pub index_loads: bool,
}

impl Default for EmissionTemplate {
    fn default() -> Self {
        EmissionTemplate {
            loop_init: true,
            loop_condition: true,
            increment_tokens: 2,
            exit_check: true,
            index_loads: true,
        }
    }
}

/// Lower a kernel to its loop-annotated trace.
pub fn lower_kernel(kernel: &KernelDef, template: &EmissionTemplate) -> Result<AnnotatedTrace> {
    kernel.validate()?;
    let mut body = Vec::new();
    for st in &kernel.statements {
        for acc in st.reads.iter().chain(std::iter::once(&st.write)) {
            emit_access(acc, template, &mut body)?;
        }
    }

    let mut tokens: Vec<Token> = kernel
        .preamble
        .iter()
        .map(|s| Token::Ref(Symbol::scalar(s)))
        .collect();
    let var_ref = |v: &str| Token::Ref(Symbol::scalar(v));

    // build the nest inside out
    let mut inner = body;
    for l in kernel.loops.iter().rev() {
        let mut level = Vec::with_capacity(inner.len() + 6);
        if template.loop_init {
            level.push(var_ref(&l.var));
        }
        level.push(Token::LoopOpen {
            bound: l.bound,
            var: l.var.clone(),
        });
        if template.loop_condition {
            level.push(var_ref(&l.var));
        }
        level.append(&mut inner);
        for _ in 0..template.increment_tokens {
            level.push(var_ref(&l.var));
        }
        level.push(Token::LoopClose);
        if template.exit_check {
            level.push(var_ref(&l.var));
        }
        inner = level;
    }
    tokens.append(&mut inner);
    AnnotatedTrace::new(tokens)
}

fn emit_access(acc: &Access, template: &EmissionTemplate, out: &mut Vec<Token>) -> Result<()> {
    if acc.is_scalar() {
        out.push(Token::Ref(Symbol::scalar(&acc.name)));
        return Ok(());
    }
    if template.index_loads {
        for ix in &acc.indices {
            if let Index::Var(v) = ix {
                out.push(Token::Ref(Symbol::scalar(v)));
            }
        }
    }
    out.push(Token::Ref(Symbol::array(&acc.name, acc.indices.clone())?));
    Ok(())
}

/// Parse kernel DSL text.
pub fn parse_kernel(text: &str) -> Result<KernelDef> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let kernel = p.kernel()?;
    Ok(kernel)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Punct(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Lexeme {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Lexeme>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split("//").next().unwrap_or_default();
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line_no, column) = (ln + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Lexeme {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                    column,
                });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let value = digits.parse().map_err(|_| Error::Syntax {
                    line: line_no,
                    column,
                    message: format!("integer `{digits}` out of range"),
                })?;
                out.push(Lexeme {
                    tok: Tok::Int(value),
                    line: line_no,
                    column,
                });
            } else if "{}[];=*<".contains(c) {
                out.push(Lexeme {
                    tok: Tok::Punct(c),
                    line: line_no,
                    column,
                });
                i += 1;
            } else {
                return Err(Error::Syntax {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    let (line, column) = out.last().map(|l| (l.line, l.column + 1)).unwrap_or((1, 1));
    out.push(Lexeme {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Lexeme>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Lexeme {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Lexeme {
        let lx = self.tokens[self.pos].clone();
        if lx.tok != Tok::Eof {
            self.pos += 1;
        }
        lx
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let lx = self.peek();
        Err(Error::Syntax {
            line: lx.line,
            column: lx.column,
            message: message.into(),
        })
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.peek().tok == Tok::Punct(c) {
            self.bump();
            Ok(())
        } else {
            self.error(format!(
                "expected `{c}`, found {}",
                describe(&self.peek().tok)
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        let lx = self.peek().clone();
        match lx.tok {
            Tok::Ident(name) => {
                self.bump();
                Ok((name, lx.line, lx.column))
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn kernel(&mut self) -> Result<KernelDef> {
        let mut preamble = Vec::new();
        while self.peek().tok == Tok::Ident("scalar".into()) {
            self.bump();
            let (name, line, column) = self.ident()?;
            if preamble.contains(&name) {
                return Err(Error::Syntax {
                    line,
                    column,
                    message: format!("scalar `{name}` declared twice"),
                });
            }
            self.expect_punct(';')?;
            preamble.push(name);
        }
        let mut loops = Vec::new();
        let statements = self.nest(&preamble, &mut loops)?;
        if self.peek().tok == Tok::Ident("for".into()) {
            let lx = self.peek();
            return Err(Error::NonNestedLoops(format!(
                "second top-level loop at {}:{}",
                lx.line, lx.column
            )));
        }
        if self.peek().tok != Tok::Eof {
            return self.error(format!(
                "unexpected {} after the loop nest",
                describe(&self.peek().tok)
            ));
        }
        let kernel = KernelDef {
            preamble,
            loops,
            statements,
        };
        Ok(kernel)
    }

    fn nest(&mut self, preamble: &[String], loops: &mut Vec<LoopDef>) -> Result<Vec<StatementDef>> {
        if self.peek().tok != Tok::Ident("for".into()) {
            return self.error(format!(
                "expected `for`, found {}",
                describe(&self.peek().tok)
            ));
        }
        self.bump();
        let (var, line, column) = self.ident()?;
        if loops.iter().any(|l| l.var == var) {
            return Err(Error::NonNestedLoops(format!(
                "loop variable `{var}` at {line}:{column} shadows an enclosing loop"
            )));
        }
        if preamble.contains(&var) {
            return Err(Error::Syntax {
                line,
                column,
                message: format!("loop variable `{var}` is also declared as a scalar"),
            });
        }
        self.expect_punct('<')?;
        let bound = match self.bump() {
            Lexeme {
                tok: Tok::Int(0),
                line,
                column,
            } => {
                return Err(Error::Syntax {
                    line,
                    column,
                    message: "loop bound must be at least 1".into(),
                })
            }
            Lexeme {
                tok: Tok::Int(b), ..
            } => b,
            lx => {
                return Err(Error::Syntax {
                    line: lx.line,
                    column: lx.column,
                    message: format!("expected loop bound, found {}", describe(&lx.tok)),
                })
            }
        };
        self.expect_punct('{')?;
        loops.push(LoopDef { var, bound });

        let statements = if self.peek().tok == Tok::Ident("for".into()) {
            let inner = self.nest(preamble, loops)?;
            if self.peek().tok != Tok::Punct('}') {
                let lx = self.peek();
                return Err(Error::NonNestedLoops(format!(
                    "{} at {}:{} follows an inner loop",
                    describe(&lx.tok),
                    lx.line,
                    lx.column
                )));
            }
            inner
        } else {
            let mut stmts = Vec::new();
            while self.peek().tok != Tok::Punct('}') {
                if self.peek().tok == Tok::Ident("for".into()) {
                    let lx = self.peek();
                    return Err(Error::NonNestedLoops(format!(
                        "loop at {}:{} shares a body with statements",
                        lx.line, lx.column
                    )));
                }
                if self.peek().tok == Tok::Eof {
                    return self.error("unexpected end of input, expected `}`");
                }
                stmts.push(self.statement(preamble, loops)?);
            }
            stmts
        };
        self.expect_punct('}')?;
        Ok(statements)
    }

    fn statement(&mut self, preamble: &[String], loops: &[LoopDef]) -> Result<StatementDef> {
        let write = self.access(preamble, loops)?;
        if loops
            .iter()
            .any(|l| write.is_scalar() && l.var == write.name)
        {
            return self.error(format!("cannot assign to loop variable `{}`", write.name));
        }
        self.expect_punct('=')?;
        let mut reads = Vec::new();
        // a bare integer right-hand side reads no memory
        if let Tok::Int(_) = self.peek().tok {
            self.bump();
        } else {
            reads.push(self.access(preamble, loops)?);
        }
        while self.peek().tok == Tok::Punct('*') {
            self.bump();
            if let Tok::Int(_) = self.peek().tok {
                self.bump();
            } else {
                reads.push(self.access(preamble, loops)?);
            }
        }
        self.expect_punct(';')?;
        Ok(StatementDef { write, reads })
    }

    fn access(&mut self, preamble: &[String], loops: &[LoopDef]) -> Result<Access> {
        let (name, line, column) = self.ident()?;
        let is_loop_var = |v: &str| loops.iter().any(|l| l.var == v);
        let mut indices = Vec::new();
        while self.peek().tok == Tok::Punct('[') {
            self.bump();
            let lx = self.bump();
            match lx.tok {
                Tok::Int(c) => indices.push(Index::Const(c)),
                Tok::Ident(v) if is_loop_var(&v) => indices.push(Index::Var(v)),
                Tok::Ident(v) => {
                    return Err(Error::UndeclaredVariable {
                        name: v,
                        line: lx.line,
                        column: lx.column,
                    })
                }
                other => {
                    return Err(Error::Syntax {
                        line: lx.line,
                        column: lx.column,
                        message: format!(
                            "expected loop variable or integer index, found {}",
                            describe(&other)
                        ),
                    })
                }
            }
            self.expect_punct(']')?;
        }
        if indices.is_empty() && !preamble.contains(&name) && !is_loop_var(&name) {
            return Err(Error::UndeclaredVariable { name, line, column });
        }
        Ok(Access { name, indices })
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Eof => "end of input".into(),
    }
}
