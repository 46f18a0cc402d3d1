use std::collections::{BTreeMap, BTreeSet};

use super::samples::{corners, SampleSet, Window, BASE_BOUND};
use crate::error::{Error, Result};
use crate::profile::COLD_MISS;

/// Sample bins split into distances that follow a multilinear law in the
/// bounds and the per-point leftovers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub window: Window,
    pub stable: BTreeSet<i64>,
    /// Remaining `(distance, frequency)` bins at every window grid point,
    /// sorted by distance.
    pub volatile: BTreeMap<Vec<u64>, Vec<(i64, u64)>>,
}

/// Points a classification over `window` reads: the corners plus the grid.
pub(crate) fn support(window: &Window) -> Vec<Vec<u64>> {
    let mut pts: BTreeSet<Vec<u64>> = corners(window.bases().len()).into_iter().collect();
    pts.extend(window.points());
    pts.into_iter().collect()
}

/// Classify with the default `{2,3,4}` window on every axis.
pub fn classify_distances(samples: &SampleSet) -> Result<Classification> {
    classify_in(samples, &Window::uniform(samples.dims(), BASE_BOUND))
}

/// A distance is stable when it appears at every support point with the
/// frequency the corner interpolation gives there.
pub fn classify_in(samples: &SampleSet, window: &Window) -> Result<Classification> {
    let dims = samples.dims();
    let pts = support(window);
    let corner_pts = corners(dims);

    let mut common: Option<BTreeSet<i64>> = None;
    for p in &pts {
        let keys: BTreeSet<i64> = samples.sample(p)?.bins().keys().copied().collect();
        common = Some(match common {
            None => keys,
            Some(c) => c.intersection(&keys).copied().collect(),
        });
    }

    let mut stable = BTreeSet::new();
    for d in common.unwrap_or_default() {
        let values: Vec<i128> = corner_pts
            .iter()
            .map(|c| samples.sample(c).map(|h| h.get(d) as i128))
            .collect::<Result<_>>()?;
        let coeffs = mask_coefficients(&values, dims);
        let fits = pts
            .iter()
            .all(|p| samples.sample(p).map(|h| h.get(d) as i128) == Ok(evaluate(&coeffs, p)));
        if fits {
            stable.insert(d);
        }
    }
    if !stable.contains(&COLD_MISS) {
        return Err(Error::InconsistentSamples(
            "cold-miss count is not multilinear in the loop bounds".into(),
        ));
    }

    let mut volatile = BTreeMap::new();
    for p in window.points() {
        let list = samples
            .sample(&p)?
            .iter()
            .filter(|(d, _)| !stable.contains(d))
            .collect();
        volatile.insert(p, list);
    }
    Ok(Classification {
        window: window.clone(),
        stable,
        volatile,
    })
}

/// Finite-difference coefficients of the multilinear interpolant through
/// corner values, one per subset of axes. Corner `c` is indexed by the bit
/// mask of axes sitting at bound 3, most significant bit first, matching the
/// lexicographic order of [`corners`].
fn mask_coefficients(corner_values: &[i128], dims: usize) -> Vec<i128> {
    let value_at = |mask: usize| {
        // axis 0 is the most significant position in lexicographic order
        let mut idx = 0;
        for axis in 0..dims {
            idx = idx * 2 + ((mask >> axis) & 1);
        }
        corner_values[idx]
    };
    (0..1usize << dims)
        .map(|s| {
            let mut sum = 0i128;
            let mut t = s;
            loop {
                let sign = if (s.count_ones() - t.count_ones()) % 2 == 0 {
                    1
                } else {
                    -1
                };
                sum += sign * value_at(t);
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            sum
        })
        .collect()
}

/// `sum_S c_S prod_{v in S} (x_v - 2)`.
fn evaluate(coeffs: &[i128], point: &[u64]) -> i128 {
    coeffs
        .iter()
        .enumerate()
        .map(|(mask, &c)| {
            point
                .iter()
                .enumerate()
                .filter(|(axis, _)| mask >> axis & 1 == 1)
                .fold(c, |acc, (_, &x)| acc * (x as i128 - BASE_BOUND as i128))
        })
        .sum()
}

/// Multilinear frequency law for every stable distance.
///
/// With `Dist_v = x_v - 2`, a distance's frequency at bounds `x` is
/// `B + sum_v Incr_v Dist_v + sum_{v<w} Coff_vw Dist_v Dist_w + ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableModel {
    vars: Vec<String>,
    coeffs: BTreeMap<i64, Vec<i128>>,
}

impl StableModel {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn distances(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    /// Frequency at the all-2 corner.
    pub fn base(&self, distance: i64) -> Option<i128> {
        self.coefficient(distance, &[])
    }

    /// Per-unit change along one axis.
    pub fn increment(&self, distance: i64, axis: usize) -> Option<i128> {
        self.coefficient(distance, &[axis])
    }

    /// Coefficient of the product of `Dist` over `axes`.
    pub fn coefficient(&self, distance: i64, axes: &[usize]) -> Option<i128> {
        let mask = axes.iter().fold(0usize, |m, &a| m | 1 << a);
        self.coeffs
            .get(&distance)
            .and_then(|c| c.get(mask))
            .copied()
    }

    pub fn frequency_at(&self, distance: i64, point: &[u64]) -> Option<i128> {
        self.coeffs.get(&distance).map(|c| evaluate(c, point))
    }

    /// Every stable frequency at `point`; zero bins are dropped.
    pub fn predict(&self, point: &[u64]) -> Result<BTreeMap<i64, u64>> {
        let mut out = BTreeMap::new();
        for (&d, c) in &self.coeffs {
            let f = evaluate(c, point);
            if f < 0 {
                return Err(Error::NegativeFrequency {
                    distance: d,
                    frequency: f,
                });
            }
            if f > 0 {
                out.insert(
                    d,
                    u64::try_from(f).map_err(|_| Error::NegativeFrequency {
                        distance: d,
                        frequency: f,
                    })?,
                );
            }
        }
        Ok(out)
    }
}

/// Fit the stable law from the corners and check it at every support point.
pub fn fit_stable(samples: &SampleSet, classification: &Classification) -> Result<StableModel> {
    let dims = samples.dims();
    let corner_pts = corners(dims);
    let mut coeffs = BTreeMap::new();
    for &d in &classification.stable {
        let values: Vec<i128> = corner_pts
            .iter()
            .map(|c| samples.sample(c).map(|h| h.get(d) as i128))
            .collect::<Result<_>>()?;
        let c = mask_coefficients(&values, dims);
        for p in support(&classification.window) {
            let observed = samples.sample(&p)?.get(d) as i128;
            let expected = evaluate(&c, &p);
            if observed != expected {
                return Err(Error::NonlinearResidual {
                    distance: d,
                    at: p,
                    expected,
                    observed,
                });
            }
        }
        coeffs.insert(d, c);
    }
    Ok(StableModel {
        vars: samples.vars().to_vec(),
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ReuseHistogram;

    fn inner_loop_samples() -> SampleSet {
        SampleSet::from_histograms(
            vec!["k".into()],
            [
                (
                    vec![2],
                    ReuseHistogram::from([(0, 5), (1, 9), (2, 5), (-1, 7)]),
                ),
                (
                    vec![3],
                    ReuseHistogram::from([(0, 7), (1, 13), (2, 8), (-1, 9)]),
                ),
                (
                    vec![4],
                    ReuseHistogram::from([(0, 9), (1, 17), (2, 11), (-1, 11)]),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_loop_coefficients() {
        let s = inner_loop_samples();
        let c = classify_distances(&s).unwrap();
        assert_eq!(c.stable, BTreeSet::from([-1, 0, 1, 2]));
        assert!(c.volatile.values().all(Vec::is_empty));
        let m = fit_stable(&s, &c).unwrap();
        assert_eq!((m.base(0), m.increment(0, 0)), (Some(5), Some(2)));
        assert_eq!((m.base(1), m.increment(1, 0)), (Some(9), Some(4)));
        assert_eq!((m.base(2), m.increment(2, 0)), (Some(5), Some(3)));
        assert_eq!((m.base(-1), m.increment(-1, 0)), (Some(7), Some(2)));
        assert_eq!(
            m.predict(&[102]).unwrap(),
            BTreeMap::from([(-1, 207), (0, 205), (1, 409), (2, 305)])
        );
    }

    #[test]
    fn swept_inner_bound_splits_volatile_bins() {
        let s = SampleSet::from_histograms(
            vec!["k".into()],
            [
                (
                    vec![2],
                    ReuseHistogram::from([
                        (0, 35),
                        (1, 11),
                        (2, 37),
                        (3, 25),
                        (4, 5),
                        (5, 12),
                        (7, 4),
                        (9, 1),
                        (10, 2),
                        (11, 1),
                        (-1, 13),
                    ]),
                ),
                (
                    vec![3],
                    ReuseHistogram::from([
                        (0, 43),
                        (1, 15),
                        (2, 53),
                        (3, 37),
                        (4, 5),
                        (5, 20),
                        (9, 6),
                        (12, 1),
                        (13, 2),
                        (14, 2),
                        (15, 1),
                        (-1, 17),
                    ]),
                ),
                (
                    vec![4],
                    ReuseHistogram::from([
                        (0, 51),
                        (1, 19),
                        (2, 69),
                        (3, 49),
                        (4, 5),
                        (5, 28),
                        (11, 8),
                        (15, 1),
                        (16, 2),
                        (17, 2),
                        (18, 2),
                        (19, 1),
                        (-1, 21),
                    ]),
                ),
            ],
        )
        .unwrap();
        let c = classify_distances(&s).unwrap();
        assert_eq!(c.stable, BTreeSet::from([-1, 0, 1, 2, 3, 4, 5]));
        assert_eq!(c.volatile[&vec![2]], vec![(7, 4), (9, 1), (10, 2), (11, 1)]);
        assert_eq!(
            c.volatile[&vec![4]],
            vec![(11, 8), (15, 1), (16, 2), (17, 2), (18, 2), (19, 1)]
        );
    }

    #[test]
    fn cold_misses_must_be_stable() {
        let s = SampleSet::from_histograms(
            vec!["k".into()],
            [
                (vec![2], ReuseHistogram::from([(-1, 1)])),
                (vec![3], ReuseHistogram::from([(-1, 2)])),
                (vec![4], ReuseHistogram::from([(-1, 4)])),
            ],
        )
        .unwrap();
        assert!(matches!(
            classify_distances(&s),
            Err(Error::InconsistentSamples(_))
        ));
    }

    #[test]
    fn two_axis_coefficients() {
        // f = 3 + 2x + 5y + 7xy in Dist coordinates
        let f = |x: u64, y: u64| {
            let (dx, dy) = (x as i128 - 2, y as i128 - 2);
            (3 + 2 * dx + 5 * dy + 7 * dx * dy) as u64
        };
        let pts: Vec<_> = Window::uniform(2, 2).points();
        let s = SampleSet::from_histograms(
            vec!["i".into(), "j".into()],
            pts.iter()
                .map(|p| (p.clone(), ReuseHistogram::from([(-1, f(p[0], p[1]))]))),
        )
        .unwrap();
        let m = fit_stable(&s, &classify_distances(&s).unwrap()).unwrap();
        assert_eq!(m.base(-1), Some(3));
        assert_eq!(m.increment(-1, 0), Some(2));
        assert_eq!(m.increment(-1, 1), Some(5));
        assert_eq!(m.coefficient(-1, &[0, 1]), Some(7));
        assert_eq!(m.frequency_at(-1, &[480, 320]), Some(f(480, 320) as i128));
    }
}
