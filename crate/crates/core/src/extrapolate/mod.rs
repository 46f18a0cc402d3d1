//! Reuse profiles at large loop bounds from exact profiles at small ones.
//!
//! Distances present at every small sample whose frequency is multilinear
//! in the bounds are *stable* and are evaluated directly at the target.
//! The rest form per-sample *volatile* blocks whose distances dilate with
//! the bounds; those are extrapolated one axis at a time, innermost first.
//!
//! Each prediction is tried with sample windows `{b, b+1, b+2}` for
//! `b = 2, 3, 4` and checked against an exact profile at `b+3`; the first
//! window that reproduces that held-out sample is used.

mod samples;
mod stable;
mod volatile;

use std::collections::BTreeMap;
use std::fmt;

pub use samples::{collect_samples, corners, SampleSet, Window, BASE_BOUND};
pub use stable::{classify_distances, classify_in, fit_stable, Classification, StableModel};
pub use volatile::{approximate_block, fit_volatile, Affine, SequenceModel, VolatileModel};

use crate::error::{Error, Result};
use crate::flatten::{flatten, BoundVector};
use crate::oracle::{compare_profiles, exact_profile};
use crate::profile::ReuseHistogram;
use crate::trace::{trace_length, AnnotatedTrace};

/// Deepest nest the extrapolator handles.
pub const MAX_DEPTH: usize = 3;

const WINDOW_BASES: [u64; 3] = [2, 3, 4];

/// Where a predicted bin's frequency came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Stable,
    Volatile,
    /// A volatile distance landed on a stable one.
    Both,
    /// Copied from an exact sample.
    Sample,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Stable => "stable",
            Provenance::Volatile => "volatile",
            Provenance::Both => "stable+volatile",
            Provenance::Sample => "sample",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictionMethod {
    /// The target was itself sampled.
    Sampled,
    /// The window reproduced the held-out sample exactly.
    Validated { bases: Vec<u64> },
    /// No window reproduced the held-out sample; the one closest to it was used.
    Unvalidated {
        bases: Vec<u64>,
        check_accuracy: f64,
    },
    /// No held-out sample was available to check the window against.
    Unchecked { bases: Vec<u64> },
    /// No window admitted an exact fit; volatile blocks were scaled coarsely.
    Approximate { bases: Vec<u64> },
}

impl fmt::Display for PredictionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionMethod::Sampled => f.write_str("sampled"),
            PredictionMethod::Validated { bases } => {
                write!(f, "validated (window bases {bases:?})")
            }
            PredictionMethod::Unvalidated {
                bases,
                check_accuracy,
            } => write!(
                f,
                "unvalidated (window bases {bases:?}, held-out accuracy {check_accuracy:.4})"
            ),
            PredictionMethod::Unchecked { bases } => {
                write!(f, "unchecked (window bases {bases:?})")
            }
            PredictionMethod::Approximate { bases } => {
                write!(f, "approximate (window bases {bases:?})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedProfile {
    pub target: BoundVector,
    pub histogram: ReuseHistogram,
    pub provenance: BTreeMap<i64, Provenance>,
    pub method: PredictionMethod,
    /// Trace length at the target, when the trace is known.
    pub expected_total: Option<u128>,
    /// Exact samples computed so far by the predictor.
    pub samples_used: usize,
}

impl PredictedProfile {
    /// Predicted total minus the true trace length. Nonzero values mean the
    /// prediction does not conserve accesses; they are reported, not fixed.
    pub fn residual(&self) -> Option<i128> {
        self.expected_total
            .map(|e| self.histogram.total() as i128 - e as i128)
    }

    pub fn is_conserved(&self) -> bool {
        self.residual().is_none_or(|r| r == 0)
    }

    /// `distance,frequency,source` rows followed by `#` summary lines.
    pub fn provenance_text(&self) -> String {
        let mut out = String::from("distance,frequency,source\n");
        for (d, f) in self.histogram.iter() {
            let p = self
                .provenance
                .get(&d)
                .copied()
                .unwrap_or(Provenance::Sample);
            out.push_str(&format!("{d},{f},{p}\n"));
        }
        out.push_str(&format!("# target: {}\n", self.target));
        out.push_str(&format!("# method: {}\n", self.method));
        if let Some(r) = self.residual() {
            out.push_str(&format!("# conservation residual: {r}\n"));
        }
        out
    }
}

type Bins = BTreeMap<i64, (u64, Provenance)>;

/// Holds the samples of one trace so repeated predictions share them.
#[derive(Debug, Clone)]
pub struct Predictor {
    samples: SampleSet,
}

impl Predictor {
    /// Sample `trace` at `{2,3,4}^n`.
    pub fn new(trace: &AnnotatedTrace) -> Result<Self> {
        Ok(Predictor {
            samples: collect_samples(trace)?,
        })
    }

    /// Predict from given samples only. Windows beyond them fail, and no
    /// conservation check is possible.
    pub fn from_samples(samples: SampleSet) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&samples.dims()) {
            return Err(Error::UnsupportedDepth(samples.dims()));
        }
        Ok(Predictor { samples })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn predict(&mut self, target: &[u64]) -> Result<PredictedProfile> {
        let dims = self.samples.dims();
        if target.len() != dims {
            return Err(Error::InconsistentSamples(format!(
                "{} target bounds for a {dims}-level nest",
                target.len()
            )));
        }
        for (var, &t) in self.samples.vars().iter().zip(target) {
            if t < BASE_BOUND {
                return Err(Error::TargetTooSmall {
                    var: var.clone(),
                    bound: t,
                });
            }
        }
        let bound_vector = BoundVector::new(
            self.samples
                .vars()
                .iter()
                .cloned()
                .zip(target.iter().copied())
                .collect(),
        );
        let expected_total = match self.samples.trace() {
            Some(t) => Some(trace_length(t, &bound_vector)?),
            None => None,
        };

        let (bins, method) = self.choose(target)?;
        let mut histogram = ReuseHistogram::new();
        let mut provenance = BTreeMap::new();
        for (d, (f, p)) in bins {
            histogram.add(d, f);
            provenance.insert(d, p);
        }
        Ok(PredictedProfile {
            target: bound_vector,
            histogram,
            provenance,
            method,
            expected_total,
            samples_used: self.samples.len(),
        })
    }

    fn choose(&mut self, target: &[u64]) -> Result<(Bins, PredictionMethod)> {
        if let Some(h) = self.samples.get(target) {
            return Ok((as_sample(h), PredictionMethod::Sampled));
        }
        let mut first_error = None;
        let mut candidates: Vec<(Bins, Vec<u64>, Option<f64>)> = Vec::new();
        for base in WINDOW_BASES {
            let window = Window::new(target.iter().map(|&t| base.min(t)).collect());
            let bins = match self.run(&window, target, false) {
                Ok(b) => b,
                Err(e) => {
                    first_error.get_or_insert(e);
                    continue;
                }
            };
            let check: Vec<u64> = target
                .iter()
                .zip(window.bases())
                .map(|(&t, &b)| if t > b + 2 { b + 3 } else { t })
                .collect();
            // without a source trace the held-out point may be unavailable
            let accuracy = match self.samples.ensure([&check[..]]) {
                Err(_) => None,
                Ok(()) => Some(match self.run(&window, &check, false) {
                    Ok(pred) => {
                        let actual = self.samples.sample(&check)?;
                        compare_profiles(&to_histogram(&pred), actual).accuracy
                    }
                    Err(_) => 0.0,
                }),
            };
            if accuracy == Some(1.0) {
                return Ok((
                    bins,
                    PredictionMethod::Validated {
                        bases: window.bases().to_vec(),
                    },
                ));
            }
            candidates.push((bins, window.bases().to_vec(), accuracy));
        }

        // stable sort keeps the smallest base among equals; unchecked last
        candidates.sort_by(|a, b| b.2.unwrap_or(-1.0).total_cmp(&a.2.unwrap_or(-1.0)));
        if let Some((bins, bases, check)) = candidates.into_iter().next() {
            let method = match check {
                Some(check_accuracy) => PredictionMethod::Unvalidated {
                    bases,
                    check_accuracy,
                },
                None => PredictionMethod::Unchecked { bases },
            };
            return Ok((bins, method));
        }

        let window = Window::new(target.iter().map(|&t| BASE_BOUND.min(t)).collect());
        match self.run(&window, target, true) {
            Ok(bins) => Ok((
                bins,
                PredictionMethod::Approximate {
                    bases: window.bases().to_vec(),
                },
            )),
            Err(e) => Err(first_error.unwrap_or(e)),
        }
    }

    /// Predict `target` from one window. With `approximate`, volatile
    /// blocks without an exact fit are scaled instead of failing.
    fn run(&mut self, window: &Window, target: &[u64], approximate: bool) -> Result<Bins> {
        if window.contains(target) {
            self.samples.ensure([target])?;
            return Ok(as_sample(self.samples.sample(target)?));
        }
        let support = stable::support(window);
        self.samples.ensure(support.iter().map(Vec::as_slice))?;
        let classification = classify_in(&self.samples, window)?;
        let model = fit_stable(&self.samples, &classification)?;

        let mut out: Bins = model
            .predict(target)?
            .into_iter()
            .map(|(d, f)| (d, (f, Provenance::Stable)))
            .collect();

        let mut blocks = classification.volatile;
        for axis in (0..target.len()).rev() {
            let values = window.values(axis);
            let mut folded = BTreeMap::new();
            for outer in samples::grid(
                &(0..axis)
                    .map(|a| window.values(a).to_vec())
                    .collect::<Vec<_>>(),
            ) {
                let lists = values.map(|v| {
                    let mut p = outer.clone();
                    p.push(v);
                    blocks.get(&p).cloned().unwrap_or_default()
                });
                let refs = [&lists[0][..], &lists[1][..], &lists[2][..]];
                let block = match VolatileModel::fit(refs, values[0])
                    .and_then(|m| m.predict(target[axis]))
                {
                    Ok(b) => b,
                    Err(_) if approximate => approximate_block(refs, values[0], target[axis]),
                    Err(e) => return Err(e),
                };
                folded.insert(outer, block);
            }
            blocks = folded;
        }

        for (d, f) in blocks.remove(&Vec::new()).unwrap_or_default() {
            let entry = out.entry(d).or_insert((0, Provenance::Volatile));
            if entry.0 > 0 {
                entry.1 = Provenance::Both;
            }
            entry.0 += f;
        }
        Ok(out)
    }
}

fn as_sample(h: &ReuseHistogram) -> Bins {
    h.iter()
        .map(|(d, f)| (d, (f, Provenance::Sample)))
        .collect()
}

fn to_histogram(bins: &Bins) -> ReuseHistogram {
    bins.iter().map(|(&d, &(f, _))| (d, f)).collect()
}

/// Predict the reuse profile of `trace` at `target` bounds.
///
/// A trace without loops has one fixed trace and is profiled exactly.
pub fn predict_profile(trace: &AnnotatedTrace, target: &BoundVector) -> Result<PredictedProfile> {
    let values = target.resolve(trace)?;
    if trace.depth() == 0 {
        let histogram = exact_profile(&flatten(trace, target)?);
        return Ok(PredictedProfile {
            target: target.clone(),
            provenance: histogram
                .iter()
                .map(|(d, _)| (d, Provenance::Sample))
                .collect(),
            expected_total: Some(histogram.total() as u128),
            histogram,
            method: PredictionMethod::Sampled,
            samples_used: 1,
        });
    }
    if trace.depth() > MAX_DEPTH {
        return Err(Error::UnsupportedDepth(trace.depth()));
    }
    Predictor::new(trace)?.predict(&values)
}
