//! Stack-distance cache model: reuse histogram to hit rate.
//!
//! A reuse at stack distance `D` hits in an `A`-way cache with `S` sets when
//! fewer than `A` of the `D` distinct intervening blocks map to the reused
//! block's set. With uniformly distributed set indices this is the binomial
//! tail `P(h|D) = sum_{a<A} C(D,a) (1/S)^a (1-1/S)^(D-a)`. One symbol is
//! treated as one cache block.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::profile::{ReuseHistogram, COLD_MISS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    capacity: u64,
    associativity: u64,
    line_size: u64,
}

impl CacheConfig {
    /// 64 KiB, 32-way, 32-byte lines (64 sets).
    pub const REFERENCE: CacheConfig = CacheConfig {
        capacity: 64 * 1024,
        associativity: 32,
        line_size: 32,
    };

    pub fn new(capacity: u64, associativity: u64, line_size: u64) -> Result<Self> {
        if capacity == 0 || associativity == 0 || line_size == 0 {
            return Err(Error::InvalidConfig(
                "capacity, associativity and line size must be positive".into(),
            ));
        }
        let way_bytes = associativity
            .checked_mul(line_size)
            .ok_or_else(|| Error::InvalidConfig("associativity x line size overflows".into()))?;
        if !capacity.is_multiple_of(way_bytes) {
            return Err(Error::InvalidConfig(format!(
                "associativity x line size ({way_bytes}) does not divide capacity ({capacity})"
            )));
        }
        Ok(CacheConfig {
            capacity,
            associativity,
            line_size,
        })
    }

    /// Config with `sets` sets of `associativity` ways and the given line size.
    pub fn with_sets(sets: u64, associativity: u64, line_size: u64) -> Result<Self> {
        let capacity = sets
            .checked_mul(associativity)
            .and_then(|c| c.checked_mul(line_size))
            .ok_or_else(|| Error::InvalidConfig("capacity overflows".into()))?;
        Self::new(capacity, associativity, line_size)
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn associativity(&self) -> u64 {
        self.associativity
    }

    pub fn line_size(&self) -> u64 {
        self.line_size
    }

    pub fn sets(&self) -> u64 {
        self.capacity / (self.associativity * self.line_size)
    }

    /// Parse `key=value` lines (`capacity_bytes`, `associativity`,
    /// `line_bytes`). `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let (mut capacity, mut assoc, mut line) = (None, None, None);
        for raw in text.lines() {
            let line_text = raw.split('#').next().unwrap_or_default().trim();
            if line_text.is_empty() {
                continue;
            }
            let (key, value) = line_text.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("expected key=value, got `{line_text}`"))
            })?;
            let value: u64 = value.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("`{}` is not a positive integer", value.trim()))
            })?;
            match key.trim() {
                "capacity_bytes" => capacity = Some(value),
                "associativity" => assoc = Some(value),
                "line_bytes" => line = Some(value),
                other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::InvalidConfig(format!("missing `{k}`"));
        Self::new(
            capacity.ok_or_else(|| missing("capacity_bytes"))?,
            assoc.ok_or_else(|| missing("associativity"))?,
            line.ok_or_else(|| missing("line_bytes"))?,
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        format!(
            "capacity_bytes={}\nassociativity={}\nline_bytes={}\n",
            self.capacity, self.associativity, self.line_size
        )
    }
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self::REFERENCE
    }
}

impl fmt::Display for CacheConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} B, {}-way, {} B lines ({} sets)",
            self.capacity,
            self.associativity,
            self.line_size,
            self.sets()
        )
    }
}

/// Conditional hit probability for a reuse at `distance`.
///
/// Terms are accumulated in log space with the ratio
/// `C(D,a+1)/C(D,a) = (D-a)/(a+1)`, so distances up to 10^9 neither overflow
/// nor lose the tail to underflow. When fewer than `A` blocks per set are
/// expected the complement (the miss tail) is summed instead.
pub fn hit_probability(distance: i64, config: &CacheConfig) -> f64 {
    if distance == COLD_MISS || distance < 0 {
        return 0.0;
    }
    let d = distance as u64;
    let ways = config.associativity;
    if d < ways {
        // every term of the binomial is included
        return 1.0;
    }
    let sets = config.sets();
    if sets == 1 {
        return 0.0;
    }
    let p = 1.0 / sets as f64;
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let df = d as f64;
    // log C(D,a+1)p^(a+1)q^(D-a-1) - log C(D,a)p^a q^(D-a)
    let step = |a: f64| (df - a).ln() - (a + 1.0).ln() + ln_p - ln_q;

    // log of term a = 0, then the recurrence up to a = A-1
    let mut log_term = df * ln_q;
    let mut lower = Vec::with_capacity(ways as usize);
    lower.push(log_term);
    for a in 0..ways - 1 {
        log_term += step(a as f64);
        lower.push(log_term);
    }

    if df * p < ways as f64 {
        // Mostly hits: the lower sum sits next to 1.0 where rounding would
        // break monotonicity, so sum the decreasing miss tail instead.
        let mut upper = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        for a in ways - 1..d {
            log_term += step(a as f64);
            peak = peak.max(log_term);
            upper.push(log_term);
            if log_term < peak - 50.0 {
                break;
            }
        }
        return (1.0 - log_sum_exp(&upper)).clamp(0.0, 1.0);
    }
    log_sum_exp(&lower).clamp(0.0, 1.0)
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    (max + sum.ln()).exp()
}

/// Hit rate of a whole profile: frequency-weighted mean of [`hit_probability`].
pub fn hit_rate(histogram: &ReuseHistogram, config: &CacheConfig) -> Result<f64> {
    let total = histogram.total();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let weighted: f64 = histogram
        .iter()
        .map(|(d, f)| f as f64 * hit_probability(d, config))
        .sum();
    Ok(weighted / total as f64)
}
