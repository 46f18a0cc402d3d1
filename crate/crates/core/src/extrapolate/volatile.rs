use crate::error::{Error, Result};

/// `value(x) = at_base + slope * (x - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Affine {
    pub at_base: i128,
    pub slope: i128,
    pub base: u64,
}

impl Affine {
    /// Fit through values at `base`, `base+1`, `base+2`; `None` unless the
    /// three are exactly collinear.
    pub fn fit(values: [i128; 3], base: u64) -> Option<Self> {
        let slope = values[1] - values[0];
        (values[2] - values[1] == slope).then_some(Affine {
            at_base: values[0],
            slope,
            base,
        })
    }

    pub fn eval(&self, x: u64) -> i128 {
        self.at_base + self.slope * (x as i128 - self.base as i128)
    }
}

/// Position-wise affine fit of three sequences of possibly different
/// lengths, aligned from both ends.
///
/// `prefix[i]` models position `i` from the front and `suffix[i]` position
/// `i` from the back. A predicted sequence takes the prefix, then the
/// suffix, and fills any gap between them with the innermost suffix value
/// (or the last prefix value when nothing aligns from the back).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceModel {
    prefix: Vec<Affine>,
    suffix: Vec<Affine>,
}

impl SequenceModel {
    pub fn fit(seqs: [&[i128]; 3], base: u64) -> Self {
        let shortest = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
        let at = |pick: &dyn Fn(&[i128]) -> i128| {
            Affine::fit([pick(seqs[0]), pick(seqs[1]), pick(seqs[2])], base)
        };
        let prefix = (0..shortest)
            .map_while(|i| at(&|s: &[i128]| s[i]))
            .collect();
        let suffix = (0..shortest)
            .map_while(|i| at(&|s: &[i128]| s[s.len() - 1 - i]))
            .collect();
        SequenceModel { prefix, suffix }
    }

    pub fn aligned_prefix(&self) -> usize {
        self.prefix.len()
    }

    pub fn aligned_suffix(&self) -> usize {
        self.suffix.len()
    }

    pub fn predict(&self, len: usize, x: u64) -> Option<Vec<i128>> {
        let front: Vec<i128> = self.prefix.iter().map(|a| a.eval(x)).collect();
        let back: Vec<i128> = self.suffix.iter().rev().map(|a| a.eval(x)).collect();
        let (p, q) = (front.len(), back.len());
        if p + q >= len {
            let head = p.min(len);
            let mut out = front[..head].to_vec();
            out.extend_from_slice(&back[q - (len - head)..]);
            return Some(out);
        }
        let fill = back.first().or(front.last()).copied()?;
        let mut out = front;
        out.resize(len - q, fill);
        out.extend(back);
        Some(out)
    }
}

/// Affine model of the volatile `(distance, frequency)` block along one
/// axis, fitted from the blocks at `base`, `base+1` and `base+2`.
///
/// The block's first distance and its length are affine in the bound; the
/// gaps between consecutive distances and the frequencies are predicted
/// position by position with [`SequenceModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolatileModel {
    base: u64,
    samples: [Vec<(i64, u64)>; 3],
    shape: Option<Shape>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Shape {
    start: Affine,
    size: Affine,
    gaps: SequenceModel,
    freqs: SequenceModel,
}

impl VolatileModel {
    /// Fit from the three blocks. All empty gives a model of an empty block;
    /// a mix of empty and non-empty is an error.
    pub fn fit(lists: [&[(i64, u64)]; 3], base: u64) -> Result<Self> {
        let samples = lists.map(<[_]>::to_vec);
        if lists.iter().all(|l| l.is_empty()) {
            return Ok(VolatileModel {
                base,
                samples,
                shape: None,
            });
        }
        if lists.iter().any(|l| l.is_empty()) {
            return Err(Error::EmptyList);
        }
        let start = Affine::fit(lists.map(|l| l[0].0 as i128), base).ok_or_else(|| {
            Error::NonAffineDilation(format!(
                "first distances {:?} are not affine",
                lists.map(|l| l[0].0)
            ))
        })?;
        let size = Affine::fit(lists.map(|l| l.len() as i128), base).ok_or_else(|| {
            Error::NonAffineDilation(format!(
                "block sizes {:?} are not affine",
                lists.map(<[_]>::len)
            ))
        })?;
        let gaps = lists.map(|l| {
            l.windows(2)
                .map(|w| (w[1].0 - w[0].0) as i128)
                .collect::<Vec<_>>()
        });
        let freqs = lists.map(|l| l.iter().map(|&(_, f)| f as i128).collect::<Vec<_>>());
        Ok(VolatileModel {
            base,
            shape: Some(Shape {
                start,
                size,
                gaps: SequenceModel::fit([&gaps[0], &gaps[1], &gaps[2]], base),
                freqs: SequenceModel::fit([&freqs[0], &freqs[1], &freqs[2]], base),
            }),
            samples,
        })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    fn sampled(&self, x: u64) -> Option<&Vec<(i64, u64)>> {
        x.checked_sub(self.base)
            .and_then(|i| self.samples.get(i as usize))
    }

    pub fn start_at(&self, x: u64) -> Option<i128> {
        self.shape.as_ref().map(|s| s.start.eval(x))
    }

    pub fn size_at(&self, x: u64) -> i128 {
        self.shape.as_ref().map_or(0, |s| s.size.eval(x).max(0))
    }

    /// Offsets of each predicted distance from the block's first distance.
    pub fn offsets_at(&self, x: u64) -> Result<Vec<i128>> {
        Ok(self
            .predict(x)?
            .iter()
            .map(|&(d, _)| d as i128)
            .scan(None, |first, d| {
                let f = *first.get_or_insert(d);
                Some(d - f)
            })
            .collect())
    }

    /// The block at bound `x`. Sampled bounds return their sample.
    pub fn predict(&self, x: u64) -> Result<Vec<(i64, u64)>> {
        if let Some(sample) = self.sampled(x) {
            return Ok(sample.clone());
        }
        let Some(shape) = &self.shape else {
            return Ok(Vec::new());
        };
        let size = shape.size.eval(x);
        if size <= 0 {
            return Err(Error::NonAffineDilation(format!(
                "block size would shrink to {size}"
            )));
        }
        let size = size as usize;
        let start = shape.start.eval(x);
        if start < 0 {
            return Err(Error::NonAffineDilation(format!(
                "block would start at distance {start}"
            )));
        }
        let unaligned =
            || Error::NonAffineDilation("no position aligns across the three blocks".into());
        let gaps = if size > 1 {
            shape.gaps.predict(size - 1, x).ok_or_else(unaligned)?
        } else {
            Vec::new()
        };
        let freqs = shape.freqs.predict(size, x).ok_or_else(unaligned)?;
        if let Some(g) = gaps.iter().find(|&&g| g <= 0) {
            return Err(Error::NonAffineDilation(format!(
                "predicted gap {g} between distances"
            )));
        }

        let mut out = Vec::with_capacity(size);
        let mut d = start;
        for (i, &f) in freqs.iter().enumerate() {
            if i > 0 {
                d += gaps[i - 1];
            }
            let distance = i64::try_from(d)
                .map_err(|_| Error::NonAffineDilation(format!("distance {d} overflows")))?;
            if f < 0 {
                return Err(Error::NegativeFrequency {
                    distance,
                    frequency: f,
                });
            }
            if f > 0 {
                out.push((distance, f as u64));
            }
        }
        Ok(out)
    }
}

/// Predict the volatile block at `target` from non-empty blocks sampled at
/// bounds 2, 3 and 4.
pub fn fit_volatile(lists: [&[(i64, u64)]; 3], target: u64) -> Result<Vec<(i64, u64)>> {
    if lists.iter().any(|l| l.is_empty()) {
        return Err(Error::EmptyList);
    }
    VolatileModel::fit(lists, 2)?.predict(target)
}

/// Coarse fallback when no exact fit exists: the last sampled block's
/// shape, shifted by its start slope and rescaled to a linearly
/// extrapolated total mass (largest-remainder rounding).
pub fn approximate_block(lists: [&[(i64, u64)]; 3], base: u64, target: u64) -> Vec<(i64, u64)> {
    if let Some(i) = target.checked_sub(base).filter(|&i| i <= 2) {
        return lists[i as usize].to_vec();
    }
    let (prev, last) = (lists[1], lists[2]);
    if last.is_empty() {
        return Vec::new();
    }
    let steps = (target - base - 2) as i128;
    let slope = prev.first().map_or(0, |p| last[0].0 as i128 - p.0 as i128);
    let shift = slope * steps;
    let mass = |l: &[(i64, u64)]| l.iter().map(|&(_, f)| f as i128).sum::<i128>();
    let (m1, m2) = (mass(prev), mass(last));
    let total = m2 + (m2 - m1) * steps;
    if total <= 0 {
        return Vec::new();
    }

    let raw: Vec<(i128, i128)> = last
        .iter()
        .map(|&(_, f)| {
            let scaled = f as i128 * total;
            (scaled / m2, scaled % m2)
        })
        .collect();
    let mut counts: Vec<i128> = raw.iter().map(|r| r.0).collect();
    let mut left = total - counts.iter().sum::<i128>();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].1.cmp(&raw[a].1).then(a.cmp(&b)));
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    last.iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(&(d, _), c)| ((d as i128 + shift).max(0) as i64, c as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const K2: [(i64, u64); 4] = [(7, 4), (9, 1), (10, 2), (11, 1)];
    const K3: [(i64, u64); 5] = [(9, 6), (12, 1), (13, 2), (14, 2), (15, 1)];
    const K4: [(i64, u64); 6] = [(11, 8), (15, 1), (16, 2), (17, 2), (18, 2), (19, 1)];

    #[test]
    fn dilation_at_102() {
        let m = VolatileModel::fit([&K2, &K3, &K4], 2).unwrap();
        assert_eq!(m.start_at(102), Some(207));
        assert_eq!(m.size_at(102), 104);
        let mut offsets = vec![0];
        offsets.extend(102..=204);
        assert_eq!(m.offsets_at(102).unwrap(), offsets);
        let block = fit_volatile([&K2, &K3, &K4], 102).unwrap();
        assert_eq!(block[0], (207, 204));
        assert_eq!(block[1], (309, 1));
        assert!(block[2..103].iter().all(|&(_, f)| f == 2));
        assert_eq!(block[103], (411, 1));
    }

    #[test]
    fn sampled_bounds_return_samples() {
        let m = VolatileModel::fit([&K2, &K3, &K4], 2).unwrap();
        assert_eq!(m.predict(3).unwrap(), K3.to_vec());
        assert_eq!(m.predict(5).unwrap().len(), 7);
    }

    #[test]
    fn identical_blocks_stay_put() {
        let l = [(4, 1), (6, 3)];
        assert_eq!(fit_volatile([&l, &l, &l], 50).unwrap(), l.to_vec());
    }

    #[test]
    fn malformed_blocks() {
        assert_eq!(fit_volatile([&[], &K3, &K4], 9), Err(Error::EmptyList));
        assert!(matches!(
            fit_volatile([&K2, &K2, &K4], 9),
            Err(Error::NonAffineDilation(_))
        ));
        assert!(VolatileModel::fit([&[], &[], &[]], 2)
            .unwrap()
            .predict(9)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sequence_alignment() {
        let s = SequenceModel::fit([&[1, 5, 9], &[1, 5, 5, 10], &[1, 5, 5, 5, 11]], 2);
        assert_eq!((s.aligned_prefix(), s.aligned_suffix()), (2, 2));
        assert_eq!(s.predict(6, 5).unwrap(), vec![1, 5, 5, 5, 5, 12]);
        assert!(SequenceModel::fit([&[1], &[2], &[4]], 2)
            .predict(2, 5)
            .is_none());
    }

    #[test]
    fn approximate_keeps_shape_and_mass() {
        let b = approximate_block([&K2, &K3, &K4], 2, 6);
        // mass 8, 12, 16 -> 24 at bound 6; start slope 2 -> shift 4
        assert_eq!(b.iter().map(|&(_, f)| f).sum::<u64>(), 24);
        assert_eq!(b[0].0, 15);
        assert_eq!(b.len(), K4.len());
    }
}
