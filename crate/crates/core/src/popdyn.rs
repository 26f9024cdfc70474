//! Population dynamics: approximate the fixed point of the smoothing map by
//! applying it to an empirical pool.
//!
//! One step maps a pool `(X_1, ..., X_n)` to `(X'_1, ..., X'_n)` with
//! `X'_i = Σ_j T_j X_{I_j}`, where `(T_j)` is a fresh weight draw and the
//! indices `I_j` are drawn uniformly with replacement. Output index `i` of
//! generation `k` always uses the substream of chunk `i / CHUNK` keyed by
//! `k`, so a pool is a function of `(model, n, K, seed)` only.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{WeightDraw, WeightModel};
use crate::rng::{Domain, Streams, CHUNK};

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePool {
    generation: usize,
    samples: Vec<Complex64>,
    seed: u64,
    fingerprint: String,
}

impl SamplePool {
    /// Wraps existing samples (e.g. read from disk) as a pool.
    pub fn from_samples(samples: Vec<Complex64>, generation: usize, seed: u64, fingerprint: String) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("pool", format!("need at least 2 samples, got {}", samples.len())));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("pool", format!("sample {i} is not finite")));
        }
        Ok(SamplePool { generation, samples, seed, fingerprint })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }
}

/// Generation-0 pool with every sample equal to `value`.
pub fn init_pool(n: usize, value: Complex64) -> Result<SamplePool> {
    if n < 2 {
        return Err(Error::invalid("pool-size", format!("need n >= 2, got {n}")));
    }
    SamplePool::from_samples(vec![value; n], 0, 0, String::new())
}

/// Draws the weights and pool indices for one output sample and combines them.
#[inline]
fn smooth_one<R: Rng + ?Sized>(
    model: &WeightModel,
    input: &[Complex64],
    rng: &mut R,
    weights: &mut Vec<Complex64>,
) -> Complex64 {
    weights.clear();
    model.draw_into(rng, weights);
    let n = input.len();
    weights.iter().fold(Complex64::new(0.0, 0.0), |acc, t| acc + t * input[rng.gen_range(0..n)])
}

/// Applies the smoothing map once; the input pool is left untouched.
pub fn iterate(pool: &SamplePool, model: &WeightModel, streams: &Streams) -> Result<SamplePool> {
    let generation = pool.generation + 1;
    let input = &pool.samples;
    let mut output = vec![Complex64::new(0.0, 0.0); input.len()];
    let failure = output
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(chunk, slots)| {
            let mut rng = streams.substream(Domain::Popdyn, generation as u64, chunk as u64);
            let mut weights = Vec::with_capacity(4);
            for (offset, slot) in slots.iter_mut().enumerate() {
                let z = smooth_one(model, input, &mut rng, &mut weights);
                if !(z.re.is_finite() && z.im.is_finite()) {
                    let draw = WeightDraw::new(weights.iter().copied())
                        .map(|w| w.to_string())
                        .unwrap_or_else(|_| format!("{weights:?}"));
                    return Some((chunk * CHUNK + offset, draw));
                }
                *slot = z;
            }
            None
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    if let Some((index, weights)) = failure {
        return Err(Error::Overflow { generation, index, weights });
    }
    Ok(SamplePool { generation, samples: output, seed: streams.seed(), fingerprint: model.fingerprint() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Initial value of every sample.
    pub init: Complex64,
    /// Order `p` of the tracked absolute moment `mean |X|^p`.
    pub moment_p: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { init: Complex64::new(1.0, 0.0), moment_p: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    /// Standard error of the mean, root-sum-square over components.
    pub mean_stderr: f64,
    pub moment_p: f64,
    pub abs_moment: f64,
    pub imag_std: f64,
}

impl GenerationSummary {
    pub fn of(pool: &SamplePool, moment_p: f64) -> Self {
        let xs = pool.samples();
        let n = xs.len() as f64;
        let mean = pool.mean();
        let (mut var_re, mut var_im) = (0.0, 0.0);
        for z in xs {
            var_re += (z.re - mean.re).powi(2);
            var_im += (z.im - mean.im).powi(2);
        }
        var_re /= n - 1.0;
        var_im /= n - 1.0;
        GenerationSummary {
            generation: pool.generation(),
            mean_re: mean.re,
            mean_im: mean.im,
            mean_stderr: ((var_re + var_im) / n).sqrt(),
            moment_p,
            abs_moment: xs.iter().map(|z| z.norm().powf(moment_p)).sum::<f64>() / n,
            imag_std: var_im.sqrt(),
        }
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.mean_re, self.mean_im)
    }
}

#[derive(Clone, Debug)]
pub struct PopdynRun {
    pub pool: SamplePool,
    /// Summaries for generations `0..=K`.
    pub summaries: Vec<GenerationSummary>,
}

/// Runs `iterations` steps from the constant pool, calling `observe` on every generation (including 0).
pub fn run_with(
    model: &WeightModel,
    n: usize,
    iterations: usize,
    seed: u64,
    opts: &RunOptions,
    mut observe: impl FnMut(&SamplePool),
) -> Result<PopdynRun> {
    if iterations < 1 {
        return Err(Error::invalid("iterations", "K >= 1 required"));
    }
    let streams = Streams::new(seed);
    let mut pool = init_pool(n, opts.init)?;
    pool.seed = seed;
    pool.fingerprint = model.fingerprint();
    let mut summaries = vec![GenerationSummary::of(&pool, opts.moment_p)];
    observe(&pool);
    for _ in 0..iterations {
        pool = iterate(&pool, model, &streams)?;
        summaries.push(GenerationSummary::of(&pool, opts.moment_p));
        observe(&pool);
    }
    Ok(PopdynRun { pool, summaries })
}

pub fn run(model: &WeightModel, n: usize, iterations: usize, seed: u64, opts: &RunOptions) -> Result<PopdynRun> {
    run_with(model, n, iterations, seed, opts, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;
    use std::f64::consts::PI;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn identity_model() -> WeightModel {
        WeightModel::tabular(vec![Atom { prob: 1.0, weights: WeightDraw::new([one()]).unwrap() }]).unwrap()
    }

    #[test]
    fn init_examples() {
        let p = init_pool(4, one()).unwrap();
        assert_eq!(p.samples(), &[one(); 4]);
        assert_eq!(p.generation(), 0);
        let z = init_pool(2, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(z.samples(), &[Complex64::new(0.0, 0.0); 2]);
        assert_eq!(init_pool(100_000, one()).unwrap().mean(), one());
        assert!(init_pool(1, one()).is_err());
    }

    #[test]
    fn identity_and_zero_pools_are_fixed() {
        let s = Streams::new(3);
        let p = init_pool(50, one()).unwrap();
        let next = iterate(&p, &identity_model(), &s).unwrap();
        assert_eq!(next.samples(), p.samples());
        assert_eq!(next.generation(), 1);
        let zero = init_pool(50, Complex64::new(0.0, 0.0)).unwrap();
        let next = iterate(&zero, &WeightModel::polya(8).unwrap(), &s).unwrap();
        assert!(next.samples().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn ones_pool_maps_to_weight_sums() {
        // With an all-ones input every output is T_1 + T_2 for its own draw.
        let model = WeightModel::polya(8).unwrap();
        let s = Streams::new(5);
        let p = init_pool(10, one()).unwrap();
        let next = iterate(&p, &model, &s).unwrap();
        let mut rng = s.substream(Domain::Popdyn, 1, 0);
        for z in next.samples() {
            let w = model.draw_weights(&mut rng);
            // Two index draws follow each weight draw.
            let _: usize = rng.gen_range(0..10);
            let _: usize = rng.gen_range(0..10);
            let sum: Complex64 = w.as_slice().iter().sum();
            assert!((z - sum).norm() < 1e-15);
        }
        // Forced U = 0.25: T_1 + T_2 = 0.25^ζ + ζ 0.75^ζ.
        let zeta = Complex64::from_polar(1.0, PI / 4.0);
        let oracle = (zeta * 0.25f64.ln()).exp() + zeta * (zeta * 0.75f64.ln()).exp();
        let mut scratch = Vec::new();
        let out = {
            let crate::model::WeightModel::CyclicPolya(urn) = &model else { unreachable!() };
            scratch.extend_from_slice(&urn.weights_at(0.25));
            scratch.iter().sum::<Complex64>()
        };
        assert!((out - oracle).norm() < 1e-15);
    }

    #[test]
    fn input_pool_is_unmodified_and_run_is_deterministic() {
        let model = WeightModel::polya(8).unwrap();
        let s = Streams::new(9);
        let p = run(&model, 300, 3, 9, &RunOptions::default()).unwrap().pool;
        let copy = p.clone();
        let _ = iterate(&p, &model, &s).unwrap();
        assert_eq!(p, copy);
        let q = run(&model, 300, 3, 9, &RunOptions::default()).unwrap().pool;
        assert_eq!(p, q);
        assert_eq!(p.generation(), 3);
        assert_eq!(p.fingerprint(), "polya(b=8)");
    }

    #[test]
    fn zero_iterations_rejected() {
        let err = run(&WeightModel::polya(8).unwrap(), 10, 0, 1, &RunOptions::default()).unwrap_err();
        assert!(err.to_string().contains("K >= 1"));
    }

    #[test]
    fn overflow_names_the_index() {
        let big = WeightModel::tabular(vec![Atom {
            prob: 1.0,
            weights: WeightDraw::new([Complex64::new(1e200, 0.0), Complex64::new(1e200, 0.0)]).unwrap(),
        }])
        .unwrap();
        let err = run(&big, 4, 3, 1, &RunOptions::default()).unwrap_err();
        match err {
            Error::Overflow { generation, index, .. } => assert_eq!((generation, index), (2, 0)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn summaries_cover_every_generation() {
        let r = run(&WeightModel::polya(7).unwrap(), 200, 4, 2, &RunOptions::default()).unwrap();
        assert_eq!(r.summaries.len(), 5);
        assert_eq!(r.summaries[0].mean(), one());
        assert_eq!(r.summaries[0].mean_stderr, 0.0);
        assert_eq!(r.summaries[4].generation, 4);
    }
}
