//! Reuse-distance histograms and the reference LRU profiler.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::trace::FlatTrace;

/// Distance recorded for the first access to a symbol.
pub const COLD_MISS: i64 = -1;

/// Frequency per reuse distance; [`COLD_MISS`] counts first accesses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ReuseHistogram {
    bins: BTreeMap<i64, u64>,
}

impl ReuseHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `count` to a bin; zero counts leave the histogram unchanged.
    pub fn add(&mut self, distance: i64, count: u64) {
        if count > 0 {
            *self.bins.entry(distance).or_insert(0) += count;
        }
    }

    pub fn get(&self, distance: i64) -> u64 {
        self.bins.get(&distance).copied().unwrap_or(0)
    }

    pub fn bins(&self) -> &BTreeMap<i64, u64> {
        &self.bins
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.bins.iter().map(|(&d, &f)| (d, f))
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    pub fn cold_misses(&self) -> u64 {
        self.get(COLD_MISS)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn max_distance(&self) -> Option<i64> {
        self.bins.keys().next_back().copied().filter(|&d| d >= 0)
    }

    /// Text map with quoted integer keys in ascending order,
    /// e.g. `{"-1": 7, "0": 5, "1": 9, "2": 5}`.
    pub fn to_text(&self) -> String {
        let body: Vec<String> = self.iter().map(|(d, f)| format!("\"{d}\": {f}")).collect();
        format!("{{{}}}", body.join(", "))
    }

    /// `distance,frequency` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance,frequency\n");
        for (d, f) in self.iter() {
            out.push_str(&format!("{d},{f}\n"));
        }
        out
    }

    /// Parse `distance,frequency` rows; a header line is optional.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut h = ReuseHistogram::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.starts_with("distance")) {
                continue;
            }
            let (d, f) = line.split_once(',').ok_or_else(|| {
                Error::MalformedHistogram(format!("line {}: expected distance,frequency", n + 1))
            })?;
            let parse_err = || Error::MalformedHistogram(format!("line {}: `{line}`", n + 1));
            let d: i64 = d.trim().parse().map_err(|_| parse_err())?;
            let f: u64 = f.trim().parse().map_err(|_| parse_err())?;
            if d < COLD_MISS {
                return Err(parse_err());
            }
            h.add(d, f);
        }
        Ok(h)
    }

    /// Parse either the text map or the CSV form.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_text(text)
        } else {
            Self::from_csv(text)
        }
    }

    /// Parse the text map form. Keys may be quoted or bare integers.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::MalformedHistogram(m.to_string());
        let trimmed = text.trim();
        let inner = trimmed
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| bad("expected `{...}`"))?;
        let mut hist = ReuseHistogram::new();
        for entry in inner.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (key, value) = entry
                .split_once(':')
                .ok_or_else(|| bad(&format!("entry `{entry}` has no `:`")))?;
            let key = key.trim().trim_matches('"');
            let d: i64 = key
                .parse()
                .map_err(|_| bad(&format!("distance `{key}` is not an integer")))?;
            if d < COLD_MISS {
                return Err(bad(&format!("distance {d} below -1")));
            }
            let f: u64 = value
                .trim()
                .parse()
                .map_err(|_| bad(&format!("frequency `{}` is not a count", value.trim())))?;
            if hist.bins.contains_key(&d) {
                return Err(bad(&format!("duplicate distance {d}")));
            }
            hist.add(d, f);
        }
        Ok(hist)
    }
}

impl fmt::Display for ReuseHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromIterator<(i64, u64)> for ReuseHistogram {
    fn from_iter<I: IntoIterator<Item = (i64, u64)>>(iter: I) -> Self {
        let mut h = ReuseHistogram::new();
        for (d, f) in iter {
            h.add(d, f);
        }
        h
    }
}

impl<const N: usize> From<[(i64, u64); N]> for ReuseHistogram {
    fn from(entries: [(i64, u64); N]) -> Self {
        entries.into_iter().collect()
    }
}

/// Reuse profile by direct window scanning.
///
/// For every re-access the distinct symbols strictly between the previous
/// access and this one are counted with a set over that window; first
/// accesses land in the cold-miss bin. Quadratic in the worst case, this is
/// the reference semantics the tree-based [`crate::oracle::exact_profile`]
/// is checked against.
pub fn compute_profile(trace: &FlatTrace) -> ReuseHistogram {
    let ids = trace.ids();
    let mut last: Vec<Option<usize>> = vec![None; trace.distinct()];
    // membership stamps: `seen[s] == stamp` means s is already in the
    // current window's set
    let mut seen: Vec<usize> = vec![usize::MAX; trace.distinct()];
    let mut hist = ReuseHistogram::new();

    for (index, &item) in ids.iter().enumerate() {
        match last[item as usize] {
            None => hist.add(COLD_MISS, 1),
            Some(prev) => {
                let mut unique = 0u64;
                for &other in &ids[prev + 1..index] {
                    let slot = &mut seen[other as usize];
                    if *slot != index {
                        *slot = index;
                        unique += 1;
                    }
                }
                hist.add(unique as i64, 1);
            }
        }
        last[item as usize] = Some(index);
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let h = ReuseHistogram::from([(-1, 7), (0, 5), (3, 1)]);
        assert_eq!(ReuseHistogram::parse(&h.to_csv()).unwrap(), h);
        assert_eq!(ReuseHistogram::parse(&h.to_text()).unwrap(), h);
        assert!(ReuseHistogram::from_csv("1;2").is_err());
        assert!(ReuseHistogram::from_csv("-2,1").is_err());
    }

    #[test]
    fn single_intervening_symbol() {
        let h = compute_profile(&FlatTrace::from_names(&["a", "b", "a"]));
        assert_eq!(h, ReuseHistogram::from([(-1, 2), (1, 1)]));
    }

    #[test]
    fn adjacent_reuse_is_distance_zero() {
        let h = compute_profile(&FlatTrace::from_names(&["a", "b", "b", "a"]));
        assert_eq!(h, ReuseHistogram::from([(-1, 2), (0, 1), (1, 1)]));
    }

    #[test]
    fn empty_trace_gives_empty_histogram() {
        let h = compute_profile(&FlatTrace::from_names::<&str>(&[]));
        assert!(h.is_empty());
        assert_eq!(h.total(), 0);
        assert_eq!(h.to_text(), "{}");
    }

    #[test]
    fn repeated_symbols_inside_window_count_once() {
        let h = compute_profile(&FlatTrace::from_names(&["a", "b", "c", "b", "c", "a"]));
        assert_eq!(h.get(2), 1);
        assert_eq!(h.get(1), 2);
        assert_eq!(h.cold_misses(), 3);
    }

    #[test]
    fn text_format() {
        let h = ReuseHistogram::from([(0, 5), (1, 9), (2, 5), (-1, 7)]);
        assert_eq!(h.to_text(), r#"{"-1": 7, "0": 5, "1": 9, "2": 5}"#);
        assert_eq!(ReuseHistogram::from_text(&h.to_text()).unwrap(), h);
        assert_eq!(
            ReuseHistogram::from_text("{0: 5, 1: 9, 2: 5, -1: 7}").unwrap(),
            h
        );
        assert_eq!(h.to_csv(), "distance,frequency\n-1,7\n0,5\n1,9\n2,5\n");
    }

    #[test]
    fn malformed_text() {
        for bad in [
            "",
            "[1]",
            "{a: 1}",
            "{1: -3}",
            "{-2: 1}",
            "{1: 1, 1: 2}",
            "{1 2}",
        ] {
            assert!(
                matches!(
                    ReuseHistogram::from_text(bad),
                    Err(Error::MalformedHistogram(_))
                ),
                "{bad}"
            );
        }
    }
}
