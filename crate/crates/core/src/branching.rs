//! Weighted branching process and its martingales.
//!
//! Node weights follow `L(∅) = 1`, `L(vi) = T_i(v) L(v)` with an independent
//! weight draw per node. Only one generation is kept in memory; per
//! generation we record `W_n = Σ_{|v|=n} |L(v)|^α` and `Z_n = Σ_{|v|=n} L(v)`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WeightModel;
use crate::rng::{Domain, Streams};

pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// The weights `L(v)` of all nodes at one depth.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationWeights {
    depth: usize,
    weights: Vec<Complex64>,
}

impl GenerationWeights {
    pub fn root() -> Self {
        GenerationWeights { depth: 0, weights: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// `Σ |L(v)|^α`.
    pub fn w(&self, alpha: f64) -> f64 {
        self.weights.iter().map(|l| l.norm().powf(alpha)).sum()
    }

    /// `Σ L(v)`.
    pub fn z(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    /// Next generation; `draw` appends the weights `T_i(v)` of one node.
    /// Returns `None` when the width would exceed `node_cap`.
    pub fn expand_with(&self, mut draw: impl FnMut(&mut Vec<Complex64>), node_cap: usize) -> Option<Self> {
        let mut next = Vec::with_capacity(2 * self.weights.len());
        let mut buf = Vec::with_capacity(4);
        for l in &self.weights {
            buf.clear();
            draw(&mut buf);
            if next.len() + buf.len() > node_cap {
                return None;
            }
            next.extend(buf.iter().map(|t| t * l));
        }
        Some(GenerationWeights { depth: self.depth + 1, weights: next })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub n: usize,
    pub w: f64,
    pub z: Complex64,
    pub node_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleTrajectory {
    pub records: Vec<GenerationRecord>,
    /// Generation whose expansion hit the node cap, if any.
    pub truncated_at: Option<usize>,
}

fn record(g: &GenerationWeights, alpha: f64) -> GenerationRecord {
    GenerationRecord { n: g.depth, w: g.w(alpha), z: g.z(), node_count: g.weights.len() }
}

/// One trajectory of `(W_n, Z_n)` for `n = 0..=depth`.
pub fn simulate_generations<R: Rng + ?Sized>(
    model: &WeightModel,
    alpha: f64,
    depth: usize,
    node_cap: usize,
    rng: &mut R,
) -> Result<MartingaleTrajectory> {
    if node_cap < 1 {
        return Err(Error::invalid("node_cap", "need node_cap >= 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("need finite alpha > 0, got {alpha}")));
    }
    let mut current = GenerationWeights::root();
    let mut records = vec![record(&current, alpha)];
    for n in 1..=depth {
        match current.expand_with(|buf| model.draw_into(rng, buf), node_cap) {
            Some(next) => {
                current = next;
                records.push(record(&current, alpha));
            }
            None => return Ok(MartingaleTrajectory { records, truncated_at: Some(n) }),
        }
    }
    Ok(MartingaleTrajectory { records, truncated_at: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleMean {
    pub n: usize,
    pub mean_w: f64,
    pub se_w: f64,
    pub mean_z: Complex64,
    /// Root-sum-square of the componentwise standard errors of `Z_n`.
    pub se_z: f64,
    pub node_count_mean: f64,
}

/// Means of `W_n` and `Z_n` over `reps` independent trajectories.
///
/// Rep `r` draws from its own substream, so the result does not depend on
/// the thread count.
pub fn estimate_martingale_mean(
    model: &WeightModel,
    alpha: f64,
    depth: usize,
    reps: usize,
    seed: u64,
    node_cap: usize,
) -> Result<Vec<MartingaleMean>> {
    if reps < 30 {
        return Err(Error::invalid("reps", format!("need reps >= 30, got {reps}")));
    }
    let streams = Streams::new(seed);
    let trajectories = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = streams.substream(Domain::Branching, 0, rep as u64);
            simulate_generations(model, alpha, depth, node_cap, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(generation) = trajectories.iter().filter_map(|t| t.truncated_at).min() {
        return Err(Error::NodeCapExceeded { cap: node_cap, generation });
    }

    let r = reps as f64;
    let moments = |xs: &mut dyn Iterator<Item = f64>| {
        let (mut s, mut sq) = (0.0, 0.0);
        for x in xs {
            s += x;
            sq += x * x;
        }
        let mean = s / r;
        let var = ((sq - s * mean) / (r - 1.0)).max(0.0);
        (mean, (var / r).sqrt())
    };
    Ok((0..=depth)
        .map(|n| {
            let (mean_w, se_w) = moments(&mut trajectories.iter().map(|t| t.records[n].w));
            let (mre, se_re) = moments(&mut trajectories.iter().map(|t| t.records[n].z.re));
            let (mim, se_im) = moments(&mut trajectories.iter().map(|t| t.records[n].z.im));
            let node_count_mean = trajectories.iter().map(|t| t.records[n].node_count as f64).sum::<f64>() / r;
            MartingaleMean {
                n,
                mean_w,
                se_w,
                mean_z: Complex64::new(mre, mim),
                se_z: se_re.hypot(se_im),
                node_count_mean,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, WeightDraw};

    #[test]
    fn depth_zero_is_the_root() {
        let model = WeightModel::polya(8).unwrap();
        let mut rng = Streams::new(1).substream(Domain::Test, 0, 0);
        let t = simulate_generations(&model, 2f64.sqrt(), 0, 10, &mut rng).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].w, 1.0);
        assert_eq!(t.records[0].z, Complex64::new(1.0, 0.0));
        assert_eq!(t.records[0].node_count, 1);
        let means = estimate_martingale_mean(&model, 2f64.sqrt(), 0, 30, 1, 10).unwrap();
        assert_eq!((means[0].mean_w, means[0].se_w), (1.0, 0.0));
        assert_eq!(means[0].se_z, 0.0);
    }

    #[test]
    fn forced_steps_give_closed_form_z1() {
        let lambda = Complex64::new(0.4, 0.9);
        let WeightModel::Biggins(m) = WeightModel::biggins(lambda).unwrap() else { unreachable!() };
        let g = GenerationWeights::root().expand_with(|buf| buf.extend([m.weight(1), m.weight(1)]), 10).unwrap();
        let oracle = (-lambda).exp() / lambda.cosh();
        assert!((g.z() - oracle).norm() < 1e-15);
        assert_eq!(g.depth(), 1);
    }

    #[test]
    fn binary_width_doubles() {
        let model = WeightModel::biggins(Complex64::new(0.5, 0.5)).unwrap();
        let mut rng = Streams::new(2).substream(Domain::Test, 0, 0);
        let t = simulate_generations(&model, 1.5, 6, DEFAULT_NODE_CAP, &mut rng).unwrap();
        for r in &t.records {
            assert_eq!(r.node_count, 1 << r.n);
            assert!(r.w > 0.0);
        }
    }

    #[test]
    fn node_cap_truncates() {
        let model = WeightModel::polya(8).unwrap();
        let mut rng = Streams::new(2).substream(Domain::Test, 0, 0);
        let t = simulate_generations(&model, 1.4, 10, 20, &mut rng).unwrap();
        assert_eq!(t.truncated_at, Some(5));
        assert_eq!(t.records.len(), 5);
        let err = estimate_martingale_mean(&model, 1.4, 10, 30, 1, 20).unwrap_err();
        assert!(matches!(err, Error::NodeCapExceeded { generation: 5, .. }));
    }

    #[test]
    fn reps_lower_bound() {
        let model = WeightModel::polya(8).unwrap();
        assert!(estimate_martingale_mean(&model, 1.4, 2, 29, 1, 100).is_err());
    }

    #[test]
    fn random_width_model() {
        // N is 1 or 3; W_n stays positive.
        let model = WeightModel::tabular(vec![
            Atom { prob: 0.5, weights: WeightDraw::new([Complex64::new(0.5, 0.0)]).unwrap() },
            Atom {
                prob: 0.5,
                weights: WeightDraw::new([
                    Complex64::new(0.5, 0.2),
                    Complex64::new(0.3, 0.0),
                    Complex64::new(0.1, -0.4),
                ])
                .unwrap(),
            },
        ])
        .unwrap();
        let mut rng = Streams::new(4).substream(Domain::Test, 0, 0);
        let t = simulate_generations(&model, 1.2, 8, 100_000, &mut rng).unwrap();
        assert!(t.records.windows(2).all(|w| w[1].node_count >= w[0].node_count));
        assert!(t.records.iter().all(|r| r.w > 0.0));
    }
}
