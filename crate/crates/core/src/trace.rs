//! Loop-annotated static traces and their bracketed text form.
//!
//! A trace is a comma-separated token stream. Loops are written
//! `[N~v, body..]` where `N` is the trip count and `v` the control
//! variable; array references carry their index variables after `~`
//! (`A~i~k`) and, once flattened, the concrete index values after `-`
//! (`A~i~k-0-1`). Only a single nesting path is representable.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::flatten::BoundVector;

/// One index slot of an array reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Var(String),
    Const(u64),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Var(v) => f.write_str(v),
            Index::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Scalar,
    Array,
}

/// A memory reference: a scalar, an array reference annotated with its
/// index slots, or a concretized array element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    name: String,
    indices: Vec<Index>,
    concrete: Option<Vec<u64>>,
}

impl Symbol {
    pub fn scalar(name: impl Into<String>) -> Self {
        Symbol {
            name: name.into(),
            indices: Vec::new(),
            concrete: None,
        }
    }

    /// Array reference; `indices` must be non-empty.
    pub fn array(name: impl Into<String>, indices: Vec<Index>) -> Result<Self> {
        let name = name.into();
        if indices.is_empty() {
            return Err(Error::MalformedToken {
                token: name,
                reason: "array reference without index slots".into(),
            });
        }
        Ok(Symbol {
            name,
            indices,
            concrete: None,
        })
    }

    /// Attach concrete index values, one per slot.
    pub fn concretize(&self, values: Vec<u64>) -> Result<Self> {
        if self.indices.is_empty() || values.len() != self.indices.len() {
            return Err(Error::MalformedToken {
                token: self.to_string(),
                reason: format!(
                    "{} concrete indices for {} index slots",
                    values.len(),
                    self.indices.len()
                ),
            });
        }
        Ok(Symbol {
            name: self.name.clone(),
            indices: self.indices.clone(),
            concrete: Some(values),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        if self.indices.is_empty() {
            SymbolKind::Scalar
        } else {
            SymbolKind::Array
        }
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    /// Loop variables among the index slots, in slot order.
    pub fn index_vars(&self) -> impl Iterator<Item = &str> {
        self.indices.iter().filter_map(|ix| match ix {
            Index::Var(v) => Some(v.as_str()),
            Index::Const(_) => None,
        })
    }

    pub fn concrete_indices(&self) -> Option<&[u64]> {
        self.concrete.as_deref()
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for ix in &self.indices {
            write!(f, "~{ix}")?;
        }
        if let Some(values) = &self.concrete {
            for v in values {
                write!(f, "-{v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ref(Symbol),
    LoopOpen { bound: u64, var: String },
    LoopClose,
}

/// One level of a single-path loop nest: references before the (optional)
/// inner loop, the loop itself, and references after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Level {
    pub before: Vec<Symbol>,
    pub inner: Option<Box<InnerLoop>>,
    pub after: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct InnerLoop {
    pub var: String,
    pub bound: u64,
    pub body: Level,
}

/// A validated loop-annotated trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedTrace {
    tokens: Vec<Token>,
    loop_vars: Vec<(String, u64)>,
    nest: Level,
}

impl AnnotatedTrace {
    /// Validate a token stream: balanced, single nesting path, distinct
    /// control variables, and array indices bound by enclosing loops.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        let mut loop_vars: Vec<(String, u64)> = Vec::new();
        // stack of levels under construction; `closed` marks that the
        // level's inner loop has already been closed
        let mut stack: Vec<(Level, bool)> = vec![(Level::empty(), false)];
        let mut open: Vec<(String, u64)> = Vec::new();

        for tok in &tokens {
            match tok {
                Token::Ref(sym) => {
                    for var in sym.index_vars() {
                        if !open.iter().any(|(v, _)| v == var) {
                            return Err(Error::UnknownIndexVariable {
                                array: sym.name().to_string(),
                                var: var.to_string(),
                            });
                        }
                    }
                    let (level, closed) = stack.last_mut().expect("root level");
                    if *closed || level.inner.is_some() {
                        level.after.push(sym.clone());
                    } else {
                        level.before.push(sym.clone());
                    }
                }
                Token::LoopOpen { bound, var } => {
                    if open.iter().any(|(v, _)| v == var) {
                        return Err(Error::NonNestedLoops(format!(
                            "loop variable `{var}` reused by an inner loop"
                        )));
                    }
                    let (level, closed) = stack.last().expect("root level");
                    if *closed || level.inner.is_some() {
                        return Err(Error::NonNestedLoops(format!(
                            "loop over `{var}` is a sibling of an earlier loop"
                        )));
                    }
                    open.push((var.clone(), *bound));
                    loop_vars.push((var.clone(), *bound));
                    stack.push((Level::empty(), false));
                }
                Token::LoopClose => {
                    let Some((var, bound)) = open.pop() else {
                        return Err(Error::UnbalancedBrackets(
                            "`]` without a matching `[`".into(),
                        ));
                    };
                    let (body, _) = stack.pop().expect("loop level");
                    let (parent, closed) = stack.last_mut().expect("root level");
                    parent.inner = Some(Box::new(InnerLoop { var, bound, body }));
                    *closed = true;
                }
            }
        }
        if let Some((var, _)) = open.last() {
            return Err(Error::UnbalancedBrackets(format!(
                "loop over `{var}` is never closed"
            )));
        }
        let (nest, _) = stack.pop().expect("root level");
        Ok(AnnotatedTrace {
            tokens,
            loop_vars,
            nest,
        })
    }

    pub fn empty() -> Self {
        AnnotatedTrace {
            tokens: Vec::new(),
            loop_vars: Vec::new(),
            nest: Level::empty(),
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// `(control variable, bound)` pairs, outermost first.
    pub fn loop_vars(&self) -> &[(String, u64)] {
        &self.loop_vars
    }

    pub fn depth(&self) -> usize {
        self.loop_vars.len()
    }

    /// The loop bounds written in the trace itself.
    pub fn declared_bounds(&self) -> BoundVector {
        BoundVector::new(self.loop_vars.clone())
    }

    pub(crate) fn nest(&self) -> &Level {
        &self.nest
    }
}

impl Level {
    fn empty() -> Self {
        Level {
            before: Vec::new(),
            inner: None,
            after: Vec::new(),
        }
    }
}

impl fmt::Display for AnnotatedTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_trace(self))
    }
}

impl std::str::FromStr for AnnotatedTrace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_trace(s)
    }
}

/// Parse the bracketed text form.
///
/// Loop openers may omit the control variable (`[2`), in which case it is
/// taken from the scalar reference immediately before the bracket.
pub fn parse_trace(text: &str) -> Result<AnnotatedTrace> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut tokens = Vec::new();

    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() || c == b',' {
            pos += 1;
            continue;
        }
        match c {
            b'[' => {
                pos += 1;
                let start = pos;
                while pos < bytes.len() && !matches!(bytes[pos], b',' | b']' | b'[') {
                    pos += 1;
                }
                let raw = text[start..pos].trim();
                tokens.push(parse_loop_open(raw, tokens.last())?);
            }
            b']' => {
                pos += 1;
                tokens.push(Token::LoopClose);
            }
            _ => {
                let start = pos;
                while pos < bytes.len() && !matches!(bytes[pos], b',' | b']' | b'[') {
                    pos += 1;
                }
                let raw = text[start..pos].trim();
                tokens.push(Token::Ref(parse_symbol(raw)?));
            }
        }
    }
    AnnotatedTrace::new(tokens)
}

fn parse_loop_open(raw: &str, previous: Option<&Token>) -> Result<Token> {
    let malformed = |reason: &str| Error::MalformedToken {
        token: format!("[{raw}"),
        reason: reason.into(),
    };
    let (bound_text, var) = match raw.split_once('~') {
        Some((b, v)) => {
            let v = v.trim();
            if !is_ident(v) {
                return Err(malformed("control variable is not an identifier"));
            }
            (b.trim(), v.to_string())
        }
        None => match previous {
            Some(Token::Ref(sym)) if sym.kind() == SymbolKind::Scalar => {
                (raw, sym.name().to_string())
            }
            _ => {
                return Err(malformed(
                    "no control variable and no preceding scalar to infer it from",
                ))
            }
        },
    };
    let bound = bound_text
        .parse::<u64>()
        .map_err(|_| malformed("loop bound is not a nonnegative integer"))?;
    Ok(Token::LoopOpen { bound, var })
}

/// Parse a single reference such as `alpha`, `A~i~k` or `A~i~k-0-1`.
pub fn parse_symbol(raw: &str) -> Result<Symbol> {
    let malformed = |reason: &str| Error::MalformedToken {
        token: raw.to_string(),
        reason: reason.into(),
    };
    if raw.is_empty() {
        return Err(malformed("empty token"));
    }
    let mut parts = raw.split('-');
    let head = parts.next().unwrap_or_default();
    let concrete: Vec<u64> = parts
        .map(|p| p.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| malformed("concrete index is not a nonnegative integer"))?;

    let mut fields = head.split('~').map(str::trim);
    let name = fields.next().unwrap_or_default();
    if !is_ident(name) {
        return Err(malformed("name is not an identifier"));
    }
    let mut indices = Vec::new();
    for f in fields {
        if let Ok(c) = f.parse::<u64>() {
            indices.push(Index::Const(c));
        } else if is_ident(f) {
            indices.push(Index::Var(f.to_string()));
        } else {
            return Err(malformed("index slot is neither identifier nor integer"));
        }
    }
    if indices.is_empty() {
        if !concrete.is_empty() {
            return Err(malformed("scalar with concrete indices"));
        }
        return Ok(Symbol::scalar(name));
    }
    let sym = Symbol::array(name, indices)?;
    if concrete.is_empty() {
        Ok(sym)
    } else {
        sym.concretize(concrete)
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Canonical text form: `", "` between items, `]` attached to the last
/// body item, loop openers always carrying their control variable.
pub fn render_trace(trace: &AnnotatedTrace) -> String {
    let mut out = String::new();
    let mut need_sep = false;
    for tok in &trace.tokens {
        match tok {
            Token::LoopClose => {
                out.push(']');
                need_sep = true;
            }
            Token::Ref(sym) => {
                if need_sep {
                    out.push_str(", ");
                }
                out.push_str(&sym.to_string());
                need_sep = true;
            }
            Token::LoopOpen { bound, var } => {
                if need_sep {
                    out.push_str(", ");
                }
                out.push_str(&format!("[{bound}~{var}"));
                need_sep = true;
            }
        }
    }
    out
}

/// Number of symbols `flatten(trace, bounds)` would produce, computed
/// without materialising the trace.
pub fn trace_length(trace: &AnnotatedTrace, bounds: &BoundVector) -> Result<u128> {
    let counts = bounds.resolve(trace)?;
    Ok(level_length(trace.nest(), &counts, 0))
}

fn level_length(level: &Level, counts: &[u64], depth: usize) -> u128 {
    let mut n = (level.before.len() + level.after.len()) as u128;
    if let Some(inner) = &level.inner {
        n += counts[depth] as u128 * level_length(&inner.body, counts, depth + 1);
    }
    n
}

/// A trace unrolled at concrete bounds.
///
/// Symbols are interned: `ids` holds one entry per access and `table` the
/// distinct symbols in first-access order, so `table[ids[n]]` is the n-th
/// access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatTrace {
    ids: Vec<u32>,
    table: Vec<Symbol>,
    origin: BoundVector,
}

impl FlatTrace {
    pub(crate) fn from_parts(ids: Vec<u32>, table: Vec<Symbol>, origin: BoundVector) -> Self {
        FlatTrace { ids, table, origin }
    }

    /// Build from symbols, interning them by storage location.
    pub fn from_symbols<I: IntoIterator<Item = Symbol>>(symbols: I) -> Self {
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut table = Vec::new();
        let ids = symbols
            .into_iter()
            .map(|sym| {
                *index.entry(sym.to_string()).or_insert_with(|| {
                    table.push(sym);
                    (table.len() - 1) as u32
                })
            })
            .collect();
        FlatTrace {
            ids,
            table,
            origin: BoundVector::default(),
        }
    }

    /// Convenience for scalar-only traces, mostly useful in tests.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        Self::from_symbols(names.iter().map(|n| Symbol::scalar(n.as_ref())))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn distinct(&self) -> usize {
        self.table.len()
    }

    pub fn symbol(&self, id: u32) -> &Symbol {
        &self.table[id as usize]
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> + '_ {
        self.ids.iter().map(move |&id| &self.table[id as usize])
    }

    pub fn origin_bounds(&self) -> &BoundVector {
        &self.origin
    }

    /// One symbol per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.ids.len() * 8);
        for sym in self.symbols() {
            out.push_str(&sym.to_string());
            out.push('\n');
        }
        out
    }

    /// Read the one-symbol-per-line form; blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let symbols = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(parse_symbol)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_symbols(symbols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG1_TRACE: &str = "retval, alpha, i, [300~i, i, j, [200~j, j, k, [102~k, k, alpha, i, k, A~i~k, i, k, A~i~k, alpha, j, k, B~j~k, k, k], k, j, j], j, i, i], i";

    #[test]
    fn parses_three_level_listing() {
        let t = parse_trace(FIG1_TRACE).unwrap();
        assert_eq!(
            t.loop_vars(),
            &[
                ("i".to_string(), 300),
                ("j".to_string(), 200),
                ("k".to_string(), 102)
            ]
        );
        let arrays: Vec<String> = t
            .tokens()
            .iter()
            .filter_map(|tok| match tok {
                Token::Ref(s) if s.kind() == SymbolKind::Array => Some(s.to_string()),
                _ => None,
            })
            .collect();
        assert_eq!(arrays, ["A~i~k", "A~i~k", "B~j~k"]);
        assert_eq!(render_trace(&t), FIG1_TRACE);
    }

    #[test]
    fn listing_with_spaces_before_close_renders_canonically() {
        // the listing as printed has a stray space in `B~j ~k` and `k ]`
        let t = parse_trace("retval, alpha, i, [300~i, i, j, [200~j, j, k, [102~k, k, alpha, i, k, A~i~k, i, k, A~i~k, alpha, j, k, B~j ~k, k, k ], k, j, j ], j, i, i], i").unwrap();
        assert_eq!(render_trace(&t), FIG1_TRACE);
    }

    #[test]
    fn bare_loop_open_infers_control_variable() {
        let t =
            parse_trace("retval, k, [2, k, alpha, k, A~0~k, k, A~0~k, alpha, k, B~0~k, k, k, ], k")
                .unwrap();
        assert_eq!(t.loop_vars(), &[("k".to_string(), 2)]);
        assert_eq!(
            render_trace(&t),
            "retval, k, [2~k, k, alpha, k, A~0~k, k, A~0~k, alpha, k, B~0~k, k, k], k"
        );
        assert_eq!(t.tokens().len(), 16);
    }

    #[test]
    fn empty_text_is_empty_trace() {
        let t = parse_trace("").unwrap();
        assert!(t.tokens().is_empty());
        assert_eq!(t.depth(), 0);
        assert_eq!(render_trace(&t), "");
        assert_eq!(render_trace(&AnnotatedTrace::empty()), "");
    }

    #[test]
    fn single_scalar_round_trips() {
        assert_eq!(render_trace(&parse_trace("x").unwrap()), "x");
    }

    #[test]
    fn missing_close_is_unbalanced() {
        assert!(matches!(
            parse_trace("[2~k, k"),
            Err(Error::UnbalancedBrackets(_))
        ));
        assert!(matches!(
            parse_trace("k, ]"),
            Err(Error::UnbalancedBrackets(_))
        ));
    }

    #[test]
    fn unknown_index_variable_is_rejected() {
        let err = parse_trace("i, [2~i, A~i~j]").unwrap_err();
        assert_eq!(
            err,
            Error::UnknownIndexVariable {
                array: "A".into(),
                var: "j".into()
            }
        );
        // constants are not variables
        parse_trace("k, [2~k, A~0~k]").unwrap();
    }

    #[test]
    fn malformed_tokens() {
        assert!(matches!(
            parse_trace("[x~i, i]"),
            Err(Error::MalformedToken { .. })
        ));
        assert!(matches!(
            parse_trace("[2, i]"),
            Err(Error::MalformedToken { .. })
        ));
        assert!(matches!(
            parse_trace("A~?"),
            Err(Error::MalformedToken { .. })
        ));
        assert!(matches!(
            parse_trace("a-1"),
            Err(Error::MalformedToken { .. })
        ));
        assert!(matches!(
            parse_trace("A~i-x"),
            Err(Error::MalformedToken { .. })
        ));
    }

    #[test]
    fn sibling_loops_are_rejected() {
        assert!(matches!(
            parse_trace("[2~i, i], [2~j, j]"),
            Err(Error::NonNestedLoops(_))
        ));
        assert!(matches!(
            parse_trace("[2~i, [2~i, i]]"),
            Err(Error::NonNestedLoops(_))
        ));
    }

    #[test]
    fn concretized_refs_parse() {
        let s = parse_symbol("A~i~k-0-1").unwrap();
        assert_eq!(s.concrete_indices(), Some(&[0, 1][..]));
        assert_eq!(s.to_string(), "A~i~k-0-1");
        assert_ne!(s, parse_symbol("A~0~k-0-1").unwrap());
    }

    #[test]
    fn trace_length_zero_bounds_counts_scaffold() {
        let t = parse_trace(FIG1_TRACE).unwrap();
        let zero = BoundVector::from_values(&t, &[0, 0, 0]).unwrap();
        // retval, alpha, i before the loop; i after it
        assert_eq!(trace_length(&t, &zero).unwrap(), 4);
        let base = BoundVector::from_values(&t, &[2, 2, 2]).unwrap();
        assert_eq!(trace_length(&t, &base).unwrap(), 146);
    }

    #[test]
    fn trace_length_requires_every_bound() {
        let t = parse_trace(FIG1_TRACE).unwrap();
        let partial = BoundVector::new(vec![("i".into(), 2), ("j".into(), 2)]);
        assert_eq!(
            trace_length(&t, &partial),
            Err(Error::MissingBound("k".into()))
        );
    }

    #[test]
    fn flat_text_round_trip() {
        let flat = FlatTrace::from_text("a\nA~i-0\n\nA~i-0\nb\n").unwrap();
        assert_eq!(flat.len(), 4);
        assert_eq!(flat.distinct(), 3);
        assert_eq!(flat.to_text(), "a\nA~i-0\nA~i-0\nb\n");
    }
}
