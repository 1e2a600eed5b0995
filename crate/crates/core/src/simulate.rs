//! Monte-Carlo estimation of time-bounded reachability.
//!
//! Sample `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so results
//! do not depend on how samples are spread over worker threads. Sojourn
//! times use inverse-transform sampling, `-ln(1 - u) / E` for a uniform
//! draw `u ∈ [0, 1)` and exit rate `E`; discrete choices walk the cumulative
//! weights in declaration order with one uniform draw each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Act, CtmdpModel, Loc, TimeAbstractPath};
use crate::rational::to_f64;
use crate::scheduler::HistoryPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn lo(&self) -> f64 {
        (self.mean - self.half_width).max(0.0)
    }

    pub fn hi(&self) -> f64 {
        (self.mean + self.half_width).min(1.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo() <= v && v <= self.hi()
    }
}

/// Generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Floating-point view of a model prepared for repeated sampling.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m CtmdpModel,
    initial: Vec<(Loc, f64)>,
    rows: Vec<Vec<Option<Vec<(Loc, f64)>>>>,
    exit: Vec<Vec<f64>>,
}

fn pick<T: Copy>(items: &[(T, f64)], u: f64) -> T {
    let mut acc = 0.0;
    for &(x, w) in items {
        acc += w;
        if u < acc {
            return x;
        }
    }
    // rounding left a sliver above the last cumulative weight
    items.iter().rev().find(|(_, w)| *w > 0.0).map(|&(x, _)| x).expect("non-empty distribution")
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m CtmdpModel) -> Self {
        let initial = model
            .initial()
            .iter()
            .enumerate()
            .map(|(l, p)| (l, to_f64(p)))
            .filter(|(_, p)| *p > 0.0)
            .collect();
        let exit = (0..model.num_locations())
            .map(|l| (0..model.num_actions()).map(|a| to_f64(model.exit_rate(l, a))).collect())
            .collect();
        Simulator { model, initial, rows: model.embedded_probabilities().to_f64(), exit }
    }

    /// One timed run; `true` iff the goal region is entered by time `t`.
    pub fn sample_run<R: Rng + ?Sized>(&self, policy: &dyn HistoryPolicy, t: f64, rng: &mut R) -> bool {
        let start = pick(&self.initial, rng.random::<f64>());
        let mut path = TimeAbstractPath::new(start);
        let mut clock = 0.0;
        loop {
            let l = path.last();
            if self.model.is_goal(l) {
                return true;
            }
            let weights = policy.decide(&path).support_f64();
            let a: Act = pick(&weights, rng.random::<f64>());
            let rate = self.exit[l][a];
            let u: f64 = rng.random();
            clock += -(1.0 - u).ln() / rate;
            if clock > t {
                return false;
            }
            let row = self.rows[l][a].as_ref().expect("scheduler chose an enabled action");
            let to = pick(row, rng.random::<f64>());
            path.push(a, to);
        }
    }
}

pub fn sample_run<R: Rng + ?Sized>(model: &CtmdpModel, policy: &dyn HistoryPolicy, t: f64, rng: &mut R) -> bool {
    Simulator::new(model).sample_run(policy, t, rng)
}

/// Normal-approximation confidence interval for the hit rate over
/// `samples` independent runs.
pub fn estimate(
    model: &CtmdpModel,
    policy: &dyn HistoryPolicy,
    t: f64,
    samples: u64,
    seed: u64,
    confidence: f64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time bound must be non-negative, got {t}")));
    }
    let sim = Simulator::new(model);
    let hits = (0..samples)
        .into_par_iter()
        .filter(|&i| sim.sample_run(policy, t, &mut sample_rng(seed, i)))
        .count() as u64;
    let mean = hits as f64 / samples as f64;
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let half_width = z * (mean * (1.0 - mean) / samples as f64).sqrt();
    Ok(Estimate { mean, half_width, confidence, samples, seed })
}
