use std::collections::BTreeMap;
use std::thread;

use crate::error::{Error, Result};
use crate::flatten::{flatten_with, BoundVector, FlattenOptions};
use crate::oracle::exact_profile;
use crate::profile::ReuseHistogram;
use crate::trace::{trace_length, AnnotatedTrace};

/// Smallest bound sampled on any axis.
pub const BASE_BOUND: u64 = 2;

/// Exact profiles at small bound vectors.
///
/// A set built from a trace computes further samples on demand; one built
/// from given histograms can only answer for the points it holds.
#[derive(Debug, Clone)]
pub struct SampleSet {
    vars: Vec<String>,
    samples: BTreeMap<Vec<u64>, ReuseHistogram>,
    source: Option<(AnnotatedTrace, FlattenOptions)>,
}

impl SampleSet {
    /// Samples for the given loop variables, without a trace to draw more from.
    pub fn from_histograms(
        vars: Vec<String>,
        samples: impl IntoIterator<Item = (Vec<u64>, ReuseHistogram)>,
    ) -> Result<Self> {
        let samples: BTreeMap<_, _> = samples.into_iter().collect();
        if let Some(point) = samples.keys().find(|p| p.len() != vars.len()) {
            return Err(Error::InconsistentSamples(format!(
                "sample point {point:?} does not have {} coordinates",
                vars.len()
            )));
        }
        Ok(SampleSet {
            vars,
            samples,
            source: None,
        })
    }

    pub(crate) fn for_trace(trace: &AnnotatedTrace) -> Self {
        SampleSet {
            vars: trace.loop_vars().iter().map(|(v, _)| v.clone()).collect(),
            samples: BTreeMap::new(),
            source: Some((trace.clone(), FlattenOptions::default())),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dims(&self) -> usize {
        self.vars.len()
    }

    pub fn trace(&self) -> Option<&AnnotatedTrace> {
        self.source.as_ref().map(|(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u64>, &ReuseHistogram)> {
        self.samples.iter()
    }

    pub fn get(&self, point: &[u64]) -> Option<&ReuseHistogram> {
        self.samples.get(point)
    }

    pub(crate) fn sample(&self, point: &[u64]) -> Result<&ReuseHistogram> {
        self.samples
            .get(point)
            .ok_or_else(|| Error::InconsistentSamples(format!("no sample at bounds {point:?}")))
    }

    /// Compute any of `points` not yet sampled. Without a source trace,
    /// missing points are an error.
    pub fn ensure<'a>(&mut self, points: impl IntoIterator<Item = &'a [u64]>) -> Result<()> {
        let mut missing: Vec<Vec<u64>> = points
            .into_iter()
            .filter(|p| !self.samples.contains_key(*p))
            .map(|p| p.to_vec())
            .collect();
        missing.sort();
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        let Some((trace, options)) = &self.source else {
            return Err(Error::InconsistentSamples(format!(
                "no sample at bounds {:?}",
                missing[0]
            )));
        };

        let mut work = 0u128;
        for p in &missing {
            work += trace_length(trace, &BoundVector::from_values(trace, p)?)?;
        }
        let threads = thread::available_parallelism().map_or(1, |n| n.get());
        let computed: Vec<Result<ReuseHistogram>> = if work < 200_000 || threads == 1 {
            missing
                .iter()
                .map(|p| profile_at(trace, options, p))
                .collect()
        } else {
            let chunk = missing.len().div_ceil(threads);
            thread::scope(|s| {
                let handles: Vec<_> = missing
                    .chunks(chunk)
                    .map(|ps| {
                        s.spawn(move || {
                            ps.iter()
                                .map(|p| profile_at(trace, options, p))
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("sample worker panicked"))
                    .collect()
            })
        };
        for (p, hist) in missing.into_iter().zip(computed) {
            self.samples.insert(p, hist?);
        }
        Ok(())
    }
}

fn profile_at(
    trace: &AnnotatedTrace,
    options: &FlattenOptions,
    point: &[u64],
) -> Result<ReuseHistogram> {
    let bounds = BoundVector::from_values(trace, point)?;
    Ok(exact_profile(&flatten_with(trace, &bounds, options)?))
}

/// Per-axis sample windows `{b, b+1, b+2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    bases: Vec<u64>,
}

impl Window {
    pub fn uniform(dims: usize, base: u64) -> Self {
        Window {
            bases: vec![base; dims],
        }
    }

    pub fn new(bases: Vec<u64>) -> Self {
        Window { bases }
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn values(&self, axis: usize) -> [u64; 3] {
        let b = self.bases[axis];
        [b, b + 1, b + 2]
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        point
            .iter()
            .zip(&self.bases)
            .all(|(&x, &b)| (b..=b + 2).contains(&x))
    }

    /// Every point of the window grid, in lexicographic order.
    pub fn points(&self) -> Vec<Vec<u64>> {
        grid(
            &self
                .bases
                .iter()
                .map(|&b| vec![b, b + 1, b + 2])
                .collect::<Vec<_>>(),
        )
    }
}

/// The `{2,3}^n` corners used for the multilinear fit.
pub fn corners(dims: usize) -> Vec<Vec<u64>> {
    grid(&vec![vec![BASE_BOUND, BASE_BOUND + 1]; dims])
}

pub(crate) fn grid(axes: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut points = vec![Vec::new()];
    for values in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Flatten and profile every point needed for the default fit: all
/// `{2,3,4}^n` bound vectors, which include the `{2,3}^n` corners and the
/// per-axis `{2,3,4}` sweeps.
pub fn collect_samples(trace: &AnnotatedTrace) -> Result<SampleSet> {
    let dims = trace.depth();
    if !(1..=3).contains(&dims) {
        return Err(Error::UnsupportedDepth(dims));
    }
    let mut set = SampleSet::for_trace(trace);
    let points = Window::uniform(dims, BASE_BOUND).points();
    set.ensure(points.iter().map(Vec::as_slice))?;
    Ok(set)
}
