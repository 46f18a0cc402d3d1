//! Exact dynamic-equivalent reuse profiling and histogram comparison.

use std::collections::{BTreeMap, BTreeSet};

use crate::profile::{ReuseHistogram, COLD_MISS};
use crate::trace::FlatTrace;

/// Binary indexed tree over trace positions.
struct Fenwick {
    tree: Vec<i32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, pos: usize, delta: i32) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over positions `0..pos`.
    fn prefix(&self, pos: usize) -> i64 {
        let mut i = pos;
        let mut sum = 0i64;
        while i > 0 {
            sum += self.tree[i] as i64;
            i &= i - 1;
        }
        sum
    }
}

/// Reuse profile in O(N log N).
///
/// Each symbol's most recent access position is marked in a Fenwick tree;
/// the distinct symbols between two accesses of `x` are exactly the marks
/// strictly between them.
pub fn exact_profile(trace: &FlatTrace) -> ReuseHistogram {
    let ids = trace.ids();
    let mut last: Vec<u32> = vec![u32::MAX; trace.distinct()];
    let mut marks = Fenwick::new(ids.len());
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();

    for (index, &item) in ids.iter().enumerate() {
        let prev = last[item as usize];
        let distance = if prev == u32::MAX {
            COLD_MISS
        } else {
            let prev = prev as usize;
            let between = marks.prefix(index) - marks.prefix(prev + 1);
            marks.add(prev, -1);
            between
        };
        *counts.entry(distance).or_insert(0) += 1;
        marks.add(index, 1);
        last[item as usize] = index as u32;
    }
    counts.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinComparison {
    pub freq_a: u64,
    pub freq_b: u64,
}

impl BinComparison {
    pub fn abs_diff(&self) -> u64 {
        self.freq_a.abs_diff(self.freq_b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub bins: BTreeMap<i64, BinComparison>,
    pub only_in_a: BTreeSet<i64>,
    pub only_in_b: BTreeSet<i64>,
    pub total_a: u64,
    pub total_b: u64,
    /// `1 - sum|a_d - b_d| / (2 max(total_a, total_b))`; 1.0 for two empty histograms.
    pub accuracy: f64,
    pub equal: bool,
}

impl ComparisonReport {
    pub fn total_abs_diff(&self) -> u64 {
        self.bins.values().map(BinComparison::abs_diff).sum()
    }

    /// Rows `distance,freq_a,freq_b,abs_diff`, then a totals row and an
    /// accuracy row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance,freq_a,freq_b,abs_diff\n");
        for (d, bin) in &self.bins {
            out.push_str(&format!(
                "{d},{},{},{}\n",
                bin.freq_a,
                bin.freq_b,
                bin.abs_diff()
            ));
        }
        out.push_str(&format!(
            "total,{},{},{}\n",
            self.total_a,
            self.total_b,
            self.total_abs_diff()
        ));
        out.push_str(&format!("accuracy,,,{:.6}\n", self.accuracy));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>10} {:>14} {:>14} {:>12}\n",
            "distance", "freq_a", "freq_b", "abs_diff"
        );
        for (d, bin) in &self.bins {
            out.push_str(&format!(
                "{d:>10} {:>14} {:>14} {:>12}\n",
                bin.freq_a,
                bin.freq_b,
                bin.abs_diff()
            ));
        }
        out.push_str(&format!(
            "totals: {} vs {}; only in a: {:?}; only in b: {:?}\n",
            self.total_a, self.total_b, self.only_in_a, self.only_in_b
        ));
        out.push_str(&format!(
            "accuracy: {:.4}%{}\n",
            self.accuracy * 100.0,
            if self.equal { " (identical)" } else { "" }
        ));
        out
    }
}

pub fn compare_profiles(a: &ReuseHistogram, b: &ReuseHistogram) -> ComparisonReport {
    let mut bins = BTreeMap::new();
    let mut only_in_a = BTreeSet::new();
    let mut only_in_b = BTreeSet::new();
    for (d, freq_a) in a.iter() {
        let freq_b = b.get(d);
        if freq_b == 0 {
            only_in_a.insert(d);
        }
        bins.insert(d, BinComparison { freq_a, freq_b });
    }
    for (d, freq_b) in b.iter() {
        if a.get(d) == 0 {
            only_in_b.insert(d);
            bins.insert(d, BinComparison { freq_a: 0, freq_b });
        }
    }
    let total_a = a.total();
    let total_b = b.total();
    let diff: u64 = bins.values().map(BinComparison::abs_diff).sum();
    let denom = 2 * total_a.max(total_b);
    let accuracy = if denom == 0 {
        1.0
    } else {
        1.0 - diff as f64 / denom as f64
    };
    ComparisonReport {
        bins,
        only_in_a,
        only_in_b,
        total_a,
        total_b,
        accuracy,
        equal: a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_trace() {
        let h = exact_profile(&FlatTrace::from_names(&["a", "b", "b", "a"]));
        assert_eq!(h, ReuseHistogram::from([(-1, 2), (0, 1), (1, 1)]));
    }

    #[test]
    fn identity_comparison() {
        let h = ReuseHistogram::from([(0, 5), (1, 9), (2, 5), (-1, 7)]);
        let r = compare_profiles(&h, &h);
        assert_eq!(r.accuracy, 1.0);
        assert!(r.equal);
        assert!(r.only_in_a.is_empty() && r.only_in_b.is_empty());
    }

    #[test]
    fn disjoint_comparison() {
        let r = compare_profiles(
            &ReuseHistogram::from([(0, 1)]),
            &ReuseHistogram::from([(1, 1)]),
        );
        assert_eq!(r.accuracy, 0.0);
        assert!(!r.equal);
        assert_eq!(r.only_in_a, BTreeSet::from([0]));
        assert_eq!(r.only_in_b, BTreeSet::from([1]));
    }

    #[test]
    fn inner_loop_rows() {
        // rows k=2 and k=3 of the single-loop example: per-bin differences
        // 2, 4, 3, 2 sum to 11; totals 26 and 37
        let k2 = ReuseHistogram::from([(0, 5), (1, 9), (2, 5), (-1, 7)]);
        let k3 = ReuseHistogram::from([(0, 7), (1, 13), (2, 8), (-1, 9)]);
        let r = compare_profiles(&k2, &k3);
        assert_eq!(r.total_abs_diff(), 11);
        assert!((r.accuracy - (1.0 - 11.0 / 74.0)).abs() < 1e-15);
        assert_eq!(compare_profiles(&k3, &k2).accuracy, r.accuracy);
        assert_eq!(
            r.to_csv(),
            "distance,freq_a,freq_b,abs_diff\n-1,7,9,2\n0,5,7,2\n1,9,13,4\n2,5,8,3\ntotal,26,37,11\naccuracy,,,0.851351\n"
        );
    }

    #[test]
    fn empty_histograms_compare_equal() {
        let r = compare_profiles(&ReuseHistogram::new(), &ReuseHistogram::new());
        assert_eq!(r.accuracy, 1.0);
        assert!(r.equal);
    }
}
