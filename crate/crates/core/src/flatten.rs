//! Loop flattening: unroll an annotated trace at concrete bounds.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::trace::{trace_length, AnnotatedTrace, FlatTrace, Index, Level, Symbol};

/// Environment variable overriding [`DEFAULT_SIZE_LIMIT`].
pub const SIZE_LIMIT_ENV: &str = "REUSEPROF_SIZE_LIMIT";

/// Default cap on the number of symbols a flattened trace may hold.
pub const DEFAULT_SIZE_LIMIT: u64 = 100_000_000;

/// Iteration counts per loop variable, outermost first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundVector(Vec<(String, u64)>);

impl BoundVector {
    pub fn new(assignments: Vec<(String, u64)>) -> Self {
        BoundVector(assignments)
    }

    /// Pair `values` with the trace's loop variables, outermost first.
    pub fn from_values(trace: &AnnotatedTrace, values: &[u64]) -> Result<Self> {
        let vars = trace.loop_vars();
        if values.len() < vars.len() {
            return Err(Error::MissingBound(vars[values.len()].0.clone()));
        }
        if values.len() > vars.len() {
            return Err(Error::InconsistentSamples(format!(
                "{} bounds given for a {}-level nest",
                values.len(),
                vars.len()
            )));
        }
        Ok(BoundVector(
            vars.iter()
                .zip(values)
                .map(|((v, _), &b)| (v.clone(), b))
                .collect(),
        ))
    }

    /// Parse a comma-separated list such as `300,200,102`.
    pub fn parse(trace: &AnnotatedTrace, text: &str) -> Result<Self> {
        let values = parse_bound_list(text)?;
        Self::from_values(trace, &values)
    }

    pub fn assignments(&self) -> &[(String, u64)] {
        &self.0
    }

    pub fn values(&self) -> Vec<u64> {
        self.0.iter().map(|(_, b)| *b).collect()
    }

    pub fn get(&self, var: &str) -> Option<u64> {
        self.0.iter().find(|(v, _)| v == var).map(|(_, b)| *b)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Counts in the trace's loop order.
    pub fn resolve(&self, trace: &AnnotatedTrace) -> Result<Vec<u64>> {
        trace
            .loop_vars()
            .iter()
            .map(|(var, _)| {
                self.get(var)
                    .ok_or_else(|| Error::MissingBound(var.clone()))
            })
            .collect()
    }
}

impl fmt::Display for BoundVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (var, b)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{var}={b}")?;
        }
        Ok(())
    }
}

pub fn parse_bound_list(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|p| {
            p.trim().parse::<u64>().map_err(|_| Error::MalformedToken {
                token: p.trim().to_string(),
                reason: "bound is not a nonnegative integer".into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlattenOptions {
    pub size_limit: u64,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        FlattenOptions {
            size_limit: DEFAULT_SIZE_LIMIT,
        }
    }
}

impl FlattenOptions {
    /// Defaults, with the size limit taken from `REUSEPROF_SIZE_LIMIT` when set.
    pub fn from_env() -> Self {
        let size_limit = std::env::var(SIZE_LIMIT_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_SIZE_LIMIT);
        FlattenOptions { size_limit }
    }
}

/// Unroll `trace` at `bounds`, honouring the environment's size limit.
pub fn flatten(trace: &AnnotatedTrace, bounds: &BoundVector) -> Result<FlatTrace> {
    flatten_with(trace, bounds, &FlattenOptions::from_env())
}

pub fn flatten_with(
    trace: &AnnotatedTrace,
    bounds: &BoundVector,
    options: &FlattenOptions,
) -> Result<FlatTrace> {
    let counts = bounds.resolve(trace)?;
    let total = trace_length(trace, bounds)?;
    if total > options.size_limit as u128 {
        return Err(Error::SizeLimitExceeded {
            requested: total,
            limit: options.size_limit,
        });
    }

    let levels = path_levels(trace.nest());
    let depth_of: HashMap<&str, usize> = trace
        .loop_vars()
        .iter()
        .enumerate()
        .map(|(d, (v, _))| (v.as_str(), d))
        .collect();
    let mut layout = Layout::new(&levels, &depth_of, &counts);
    let ops: Vec<(Vec<Op>, Vec<Op>)> = levels
        .iter()
        .map(|l| (layout.compile(&l.before), layout.compile(&l.after)))
        .collect();
    let mut interner = Interner::new(layout.raw_space, total as usize);

    let mut ids = Vec::with_capacity(total as usize);
    let mut iter = vec![0u64; levels.len()];
    let mut depth = 0;
    let mut entering = true;
    loop {
        if entering {
            interner.emit(&ops[depth].0, &iter, &mut ids);
            if levels[depth].inner.is_some() && counts[depth] > 0 {
                iter[depth] = 0;
                depth += 1;
                continue;
            }
        }
        interner.emit(&ops[depth].1, &iter, &mut ids);
        if depth == 0 {
            break;
        }
        let parent = depth - 1;
        iter[parent] += 1;
        if iter[parent] < counts[parent] {
            entering = true;
        } else {
            depth = parent;
            entering = false;
        }
    }
    debug_assert_eq!(ids.len() as u128, total);
    Ok(FlatTrace::from_parts(ids, interner.table, bounds.clone()))
}

fn path_levels(root: &Level) -> Vec<&Level> {
    let mut levels = vec![root];
    while let Some(inner) = &levels.last().expect("non-empty").inner {
        levels.push(&inner.body);
    }
    levels
}

enum Slot {
    Loop(usize),
    Const(u64),
}

enum Op<'a> {
    Scalar {
        raw: u64,
        symbol: &'a Symbol,
    },
    Array {
        base: u64,
        slots: Vec<(Slot, u64)>,
        symbol: &'a Symbol,
    },
}

/// Dense numbering of every symbol the flattened trace can produce:
/// scalars first, then each array reference pattern (`A~i~k`, `A~0~k`, ...)
/// laid out row-major over the extents its index slots reach. Patterns are
/// kept apart, so `A~i~k-0-1` and `A~0~k-0-1` are different symbols.
/// Array name and index slots, e.g. `("A", [i, k])`.
type Pattern<'a> = (&'a str, &'a [Index]);

struct Layout<'a> {
    scalars: HashMap<&'a str, u64>,
    arrays: HashMap<Pattern<'a>, (u64, Vec<u64>)>,
    depth_of: &'a HashMap<&'a str, usize>,
    raw_space: u64,
}

impl<'a> Layout<'a> {
    fn new(levels: &[&'a Level], depth_of: &'a HashMap<&'a str, usize>, counts: &[u64]) -> Self {
        let mut scalars: HashMap<&str, u64> = HashMap::new();
        let mut extents: Vec<(Pattern, Vec<u64>)> = Vec::new();
        for sym in levels.iter().flat_map(|l| l.before.iter().chain(&l.after)) {
            if sym.indices().is_empty() {
                let next = scalars.len() as u64;
                scalars.entry(sym.name()).or_insert(next);
                continue;
            }
            let key = (sym.name(), sym.indices());
            let ext: Vec<u64> = sym
                .indices()
                .iter()
                .map(|ix| match ix {
                    Index::Var(v) => counts[depth_of[v.as_str()]],
                    Index::Const(c) => c + 1,
                })
                .collect();
            if !extents.iter().any(|(k, _)| *k == key) {
                extents.push((key, ext));
            }
        }
        let mut next = scalars.len() as u64;
        let mut arrays = HashMap::new();
        for (key, ext) in extents {
            let size = ext.iter().fold(1u64, |acc, &e| acc.saturating_mul(e));
            arrays.insert(key, (next, ext));
            next = next.saturating_add(size);
        }
        Layout {
            scalars,
            arrays,
            depth_of,
            raw_space: next,
        }
    }

    fn compile(&mut self, symbols: &'a [Symbol]) -> Vec<Op<'a>> {
        symbols
            .iter()
            .map(|sym| {
                if sym.indices().is_empty() {
                    return Op::Scalar {
                        raw: self.scalars[sym.name()],
                        symbol: sym,
                    };
                }
                let (base, ext) = &self.arrays[&(sym.name(), sym.indices())];
                let mut stride = 1u64;
                let mut slots: Vec<(Slot, u64)> = Vec::with_capacity(ext.len());
                for (ix, e) in sym.indices().iter().zip(ext).rev() {
                    let slot = match ix {
                        Index::Var(v) => Slot::Loop(self.depth_of[v.as_str()]),
                        Index::Const(c) => Slot::Const(*c),
                    };
                    slots.push((slot, stride));
                    stride = stride.saturating_mul(*e);
                }
                slots.reverse();
                Op::Array {
                    base: *base,
                    slots,
                    symbol: sym,
                }
            })
            .collect()
    }
}

enum Lookup {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

struct Interner {
    lookup: Lookup,
    table: Vec<Symbol>,
}

impl Interner {
    fn new(raw_space: u64, total: usize) -> Self {
        // a dense map is only worth it when it is not much larger than the trace
        let dense_cap = (total as u64).saturating_mul(4).clamp(1 << 16, 1 << 28);
        let lookup = if raw_space <= dense_cap {
            Lookup::Dense(vec![u32::MAX; raw_space as usize])
        } else {
            Lookup::Sparse(HashMap::new())
        };
        Interner {
            lookup,
            table: Vec::new(),
        }
    }

    fn emit(&mut self, ops: &[Op<'_>], iter: &[u64], out: &mut Vec<u32>) {
        for op in ops {
            let raw = match op {
                Op::Scalar { raw, .. } => *raw,
                Op::Array { base, slots, .. } => {
                    base + slots
                        .iter()
                        .map(|(slot, stride)| stride * slot_value(slot, iter))
                        .sum::<u64>()
                }
            };
            let next = self.table.len() as u32;
            let id = match &mut self.lookup {
                Lookup::Dense(map) => {
                    let cell = &mut map[raw as usize];
                    if *cell == u32::MAX {
                        *cell = next;
                    }
                    *cell
                }
                Lookup::Sparse(map) => *map.entry(raw).or_insert(next),
            };
            if id == next {
                self.table.push(materialize(op, iter));
            }
            out.push(id);
        }
    }
}

fn slot_value(slot: &Slot, iter: &[u64]) -> u64 {
    match slot {
        Slot::Loop(d) => iter[*d],
        Slot::Const(c) => *c,
    }
}

fn materialize(op: &Op<'_>, iter: &[u64]) -> Symbol {
    match op {
        Op::Scalar { symbol, .. } => (*symbol).clone(),
        Op::Array { slots, symbol, .. } => symbol
            .concretize(slots.iter().map(|(s, _)| slot_value(s, iter)).collect())
            .expect("one value per slot"),
    }
}
