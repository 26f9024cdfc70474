//! Moment function `m(s) = E[Σ_j |T_j|^s]`, the characteristic exponent
//! `α` with `m(α) = 1`, and the assumption report.
//!
//! Finiteness conditions (`E[W_1 log_+ W_1]`, the `(A4)` moment, `E[N²]`,
//! `E[N Σ log_+|T_j|]`) cannot be certified by sampling. They are estimated
//! by Monte Carlo and marked `pass` when the estimate stabilizes over the
//! last doubling of the sample size, `indeterminate` otherwise.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WeightModel;
use crate::popdyn;
use crate::rng::{Domain, Streams, CHUNK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub method: Method,
}

impl MomentEstimate {
    pub fn exact(value: f64) -> Self {
        MomentEstimate { value, stderr: 0.0, n_samples: 0, method: Method::ClosedForm }
    }

    fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        MomentEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
            n_samples: values.len() as u64,
            method: Method::MonteCarlo,
        }
    }
}

/// Evaluates `f` on `n` independent weight draws, in sample-index order.
///
/// Draw `i` always comes from the substream of chunk `i / CHUNK`, so the
/// output does not depend on the thread count.
pub fn sample_functional<F>(model: &WeightModel, n: usize, streams: &Streams, key: u64, f: F) -> Vec<f64>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, slots)| {
        let mut rng = streams.substream(Domain::Moments, key, chunk as u64);
        let mut buf = Vec::with_capacity(4);
        for slot in slots {
            buf.clear();
            model.draw_into(&mut rng, &mut buf);
            *slot = f(&buf);
        }
    });
    out
}

fn checked(est: MomentEstimate, what: &'static str, s: f64) -> Result<MomentEstimate> {
    if est.value.is_finite() && est.stderr.is_finite() {
        Ok(est)
    } else {
        Err(Error::NonFinite { what, s })
    }
}

fn check_moment_args(s: f64, n: usize) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("need finite s >= 0, got {s}")));
    }
    if n < 2 {
        return Err(Error::invalid("samples", format!("need n >= 2, got {n}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `m(s)` regardless of closed-form availability.
pub fn estimate_m_monte_carlo(model: &WeightModel, s: f64, n: usize, streams: &Streams) -> Result<MomentEstimate> {
    check_moment_args(s, n)?;
    let values = sample_functional(model, n, streams, s.to_bits(), |w| w.iter().map(|t| t.norm().powf(s)).sum());
    checked(MomentEstimate::from_samples(&values), "m(s)", s)
}

/// `m(s)`: closed form when available (stderr 0), Monte Carlo otherwise.
pub fn estimate_m(model: &WeightModel, s: f64, n: usize, streams: &Streams) -> Result<MomentEstimate> {
    check_moment_args(s, n)?;
    match model.m_closed_form(s) {
        Some(v) => checked(MomentEstimate::exact(v), "m(s)", s),
        None => estimate_m_monte_carlo(model, s, n, streams),
    }
}

/// `m'(s) = E[Σ_j |T_j|^s ln|T_j|]`.
pub fn m_derivative(model: &WeightModel, s: f64, n: usize, streams: &Streams) -> Result<MomentEstimate> {
    if !(s > 0.0) {
        return Err(Error::invalid("s", format!("need s > 0, got {s}")));
    }
    check_moment_args(s, n)?;
    if let Some(v) = model.m_derivative_closed_form(s) {
        return checked(MomentEstimate::exact(v), "m'(s)", s);
    }
    let values = sample_functional(model, n, streams, !s.to_bits(), |w| {
        w.iter()
            .map(|t| {
                let a = t.norm();
                a.powf(s) * a.ln()
            })
            .sum()
    });
    checked(MomentEstimate::from_samples(&values), "m'(s)", s)
}

/// How `find_alpha` evaluates `m(s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentSource {
    /// Closed form when the model has one, Monte Carlo otherwise.
    Auto { samples: usize, seed: u64 },
    /// Always Monte Carlo over a fixed set of `samples` draws, reused for every `s`.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaOptions {
    pub s_max: f64,
    pub tol: f64,
    pub source: MomentSource,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions { s_max: 10.0, tol: 1e-9, source: MomentSource::Auto { samples: 100_000, seed: 0 } }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRoot {
    pub alpha: f64,
    pub m_at_alpha: f64,
    /// `m` rises back above 1 somewhere in `(alpha, s_max]`.
    pub multiple_roots: bool,
}

/// Empirical `m(s)` over a frozen sample of weight moduli.
struct FrozenModuli {
    moduli: Vec<f64>,
    draws: usize,
}

impl FrozenModuli {
    fn new(model: &WeightModel, draws: usize, streams: &Streams) -> Self {
        let chunks: Vec<Vec<f64>> = (0..draws.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut rng = streams.substream(Domain::Alpha, 0, chunk as u64);
                let len = CHUNK.min(draws - chunk * CHUNK);
                let mut buf = Vec::with_capacity(4);
                let mut out = Vec::with_capacity(2 * len);
                for _ in 0..len {
                    buf.clear();
                    model.draw_into(&mut rng, &mut buf);
                    out.extend(buf.iter().map(|t| t.norm()));
                }
                out
            })
            .collect();
        FrozenModuli { moduli: chunks.concat(), draws }
    }

    fn m(&self, s: f64) -> f64 {
        self.moduli.iter().map(|a| a.powf(s)).sum::<f64>() / self.draws as f64
    }
}

/// Locates the smallest root of the convex function `m(s) - 1` on `(0, s_max]`,
/// given `m(0) > 1`: geometric scan `2^-6, 2^-5, ...` up to `s_max` to bracket
/// the first sign change, then bisection to machine precision.
pub fn find_convex_root(m: impl Fn(f64) -> f64, s_max: f64, tol: f64) -> Result<Option<AlphaRoot>> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::invalid("s_max", format!("need finite s_max > 0, got {s_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("need tol > 0, got {tol}")));
    }
    let m0 = m(0.0);
    if !(m0 > 1.0) {
        return Err(Error::SubcriticalMean { m0 });
    }

    let mut grid = Vec::new();
    let mut s = 2f64.powi(-6);
    while s < s_max {
        grid.push(s);
        s *= 2.0;
    }
    grid.push(s_max);

    let f = |s: f64| m(s) - 1.0;
    let mut lo = 0.0;
    let mut bracket = None;
    for (k, &s) in grid.iter().enumerate() {
        let v = f(s);
        if v.is_nan() {
            return Err(Error::NonFinite { what: "m(s)", s });
        }
        if v <= 0.0 {
            bracket = Some((lo, s, k));
            break;
        }
        lo = s;
    }
    let Some((mut lo, mut hi, k)) = bracket else {
        return Ok(None);
    };

    let mut f_hi = f(hi);
    while f_hi != 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            f_hi = v;
        }
    }
    let f_lo = f(lo);
    let (alpha, resid) = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    if resid.abs() > tol {
        // A jump across 1 (e.g. an infinite moment) rather than a root.
        return Err(Error::NonFinite { what: "m(s) root", s: alpha });
    }
    let multiple_roots = grid[k + 1..].iter().any(|&s| f(s) > 0.0);
    Ok(Some(AlphaRoot { alpha, m_at_alpha: resid + 1.0, multiple_roots }))
}

/// Characteristic exponent `α > 0` with `m(α) = 1`, or `None` when `m > 1` on `(0, s_max]`.
pub fn find_alpha(model: &WeightModel, opts: &AlphaOptions) -> Result<Option<AlphaRoot>> {
    match opts.source {
        MomentSource::Auto { samples, seed } => match model.m_closed_form(0.0) {
            Some(_) => find_convex_root(|s| model.m_closed_form(s).unwrap_or(f64::NAN), opts.s_max, opts.tol),
            None => {
                let frozen = FrozenModuli::new(model, samples.max(2), &Streams::new(seed));
                find_convex_root(|s| frozen.m(s), opts.s_max, opts.tol)
            }
        },
        MomentSource::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::invalid("samples", "need at least 2 draws"));
            }
            let frozen = FrozenModuli::new(model, samples, &Streams::new(seed));
            find_convex_root(|s| frozen.m(s), opts.s_max, opts.tol)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportClass {
    PositiveReal,
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Pass,
    Fail,
    Indeterminate,
}

impl Flag {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Flag::Pass
        } else {
            Flag::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    /// `m(0) = E[N] > 1`.
    pub a1: Flag,
    /// `m(α) = 1` for some `α > 0`.
    pub a2: Flag,
    pub alpha_in_theorem_range: Flag,
    /// `m'(α) < 0`.
    pub a3_derivative: Flag,
    /// `E[W_1 log_+ W_1] < ∞` (heuristic).
    pub a3_moment: Flag,
    /// `E[|Z_1|^α log_+^{2+ε}|Z_1|] < ∞` (heuristic).
    pub a4: Flag,
    /// `E[N²] < ∞` and `E[N Σ log_+|T_j|] < ∞`.
    pub c1: Flag,
    /// `supp(Z)` not contained in the real line.
    pub z_support_not_real: Flag,
    /// Names of the checks above that rest on the stabilization heuristic.
    pub heuristic: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub model: String,
    pub m0: MomentEstimate,
    pub alpha: Option<f64>,
    pub alpha_multiple_roots: bool,
    pub alpha_in_theorem_range: bool,
    pub m_prime_alpha: Option<MomentEstimate>,
    pub w1_loglog: Option<MomentEstimate>,
    pub a4_moment: Option<MomentEstimate>,
    pub a4_epsilon: f64,
    pub c1_n2: MomentEstimate,
    pub c1_cross: MomentEstimate,
    pub support_class: SupportClass,
    pub z_imag_dispersion: f64,
    pub flags: AssumptionFlags,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOptions {
    pub samples: usize,
    pub seed: u64,
    /// `ε` in the `(A4)` moment.
    pub epsilon: f64,
    /// Relative change over the last doubling below which a finiteness check passes.
    pub stabilization: f64,
    pub s_max: f64,
    pub tol: f64,
    pub support_draws: usize,
    pub support_pool: usize,
    pub support_generations: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            samples: 100_000,
            seed: 0,
            epsilon: 0.1,
            stabilization: 0.05,
            s_max: 10.0,
            tol: 1e-9,
            support_draws: 10_000,
            support_pool: 2_000,
            support_generations: 10,
        }
    }
}

fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// Sample mean over all draws and the relative change against the first half.
fn stabilized(values: &[f64], threshold: f64) -> (MomentEstimate, Flag) {
    let full = MomentEstimate::from_samples(values);
    let half = MomentEstimate::from_samples(&values[..values.len() / 2]);
    if !full.value.is_finite() {
        return (full, Flag::Indeterminate);
    }
    let scale = full.value.abs().max(half.value.abs());
    let rel = if scale == 0.0 { 0.0 } else { (full.value - half.value).abs() / scale };
    (full, if rel < threshold { Flag::Pass } else { Flag::Indeterminate })
}

/// Computes `f` either exactly (tabular laws) or by Monte Carlo with the
/// stabilization heuristic.
fn finiteness_check<F>(model: &WeightModel, opts: &ReportOptions, key: u64, f: F) -> (MomentEstimate, Flag, bool)
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    if let WeightModel::Tabular(t) = model {
        let v = t.expect(&f);
        let flag = if v.is_finite() { Flag::Pass } else { Flag::Fail };
        return (MomentEstimate::exact(v), flag, false);
    }
    let values = sample_functional(model, opts.samples, &Streams::new(opts.seed), key, f);
    let (est, flag) = stabilized(&values, opts.stabilization);
    (est, flag, true)
}

/// Classifies the weights from `draws` realizations.
pub fn classify_support(model: &WeightModel, draws: usize, streams: &Streams) -> SupportClass {
    let mut rng = streams.substream(Domain::Support, 0, 0);
    let mut buf = Vec::with_capacity(4);
    let mut all_real = true;
    let mut all_positive = true;
    for _ in 0..draws {
        buf.clear();
        model.draw_into(&mut rng, &mut buf);
        for t in &buf {
            if t.im != 0.0 {
                all_real = false;
                all_positive = false;
            } else if t.re < 0.0 {
                all_positive = false;
            }
        }
        if !all_real {
            break;
        }
    }
    match (all_real, all_positive) {
        (true, true) => SupportClass::PositiveReal,
        (true, false) => SupportClass::Real,
        _ => SupportClass::Complex,
    }
}

pub fn check_assumptions(model: &WeightModel, opts: &ReportOptions) -> Result<AssumptionReport> {
    if opts.samples < 4 {
        return Err(Error::invalid("samples", "need at least 4 samples"));
    }
    if !(opts.epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "need epsilon > 0"));
    }
    let streams = Streams::new(opts.seed);
    let m0 = estimate_m(model, 0.0, opts.samples, &streams)?;
    let a1 = Flag::from_bool(m0.value > 1.0);

    let alpha_opts = AlphaOptions {
        s_max: opts.s_max,
        tol: opts.tol,
        source: MomentSource::Auto { samples: opts.samples, seed: opts.seed },
    };
    let root = match find_alpha(model, &alpha_opts) {
        Ok(r) => r,
        Err(Error::SubcriticalMean { .. }) => None,
        Err(e) => return Err(e),
    };
    let alpha = root.map(|r| r.alpha);
    let alpha_in_range = alpha.is_some_and(|a| a > 1.0 && a < 2.0);
    let mut heuristic = Vec::new();

    let m_prime_alpha = match alpha {
        Some(a) => Some(m_derivative(model, a, opts.samples, &streams)?),
        None => None,
    };
    let a3_derivative = match m_prime_alpha {
        Some(d) => Flag::from_bool(d.value < 0.0),
        None => Flag::Indeterminate,
    };

    let (w1_loglog, a3_moment) = match alpha {
        Some(a) => {
            let (est, flag, heur) = finiteness_check(model, opts, 11, |w| {
                let w1: f64 = w.iter().map(|t| t.norm().powf(a)).sum();
                w1 * log_plus(w1)
            });
            if heur {
                heuristic.push("a3_moment".to_string());
            }
            (Some(est), flag)
        }
        None => (None, Flag::Indeterminate),
    };

    let eps = opts.epsilon;
    let (a4_moment, a4) = match alpha {
        Some(a) => {
            let (est, flag, heur) = finiteness_check(model, opts, 12, |w| {
                let z1: Complex64 = w.iter().sum();
                let r = z1.norm();
                let lp = log_plus(r);
                if lp == 0.0 {
                    0.0
                } else {
                    r.powf(a) * lp.powf(2.0 + eps)
                }
            });
            if heur {
                heuristic.push("a4".to_string());
            }
            (Some(est), flag)
        }
        None => (None, Flag::Indeterminate),
    };

    let (c1_n2, n2_flag) = match model.mean_n_squared() {
        Some(v) => (MomentEstimate::exact(v), Flag::from_bool(v.is_finite())),
        None => {
            let (est, flag, _) = finiteness_check(model, opts, 13, |w| (w.len() * w.len()) as f64);
            heuristic.push("c1_n2".to_string());
            (est, flag)
        }
    };
    let (c1_cross, cross_flag, cross_heur) =
        finiteness_check(model, opts, 14, |w| w.len() as f64 * w.iter().map(|t| log_plus(t.norm())).sum::<f64>());
    if cross_heur {
        heuristic.push("c1_cross".to_string());
    }
    let c1 = match (n2_flag, cross_flag) {
        (Flag::Pass, Flag::Pass) => Flag::Pass,
        (Flag::Fail, _) | (_, Flag::Fail) => Flag::Fail,
        _ => Flag::Indeterminate,
    };

    let support_class = classify_support(model, opts.support_draws, &streams);
    let z_imag_dispersion = imaginary_dispersion(model, opts)?;
    let z_support_not_real = match support_class {
        SupportClass::Complex => Flag::from_bool(z_imag_dispersion > 1e-12),
        _ => Flag::Fail,
    };
    heuristic.push("z_support_not_real".to_string());

    Ok(AssumptionReport {
        model: model.fingerprint(),
        m0,
        alpha,
        alpha_multiple_roots: root.is_some_and(|r| r.multiple_roots),
        alpha_in_theorem_range: alpha_in_range,
        m_prime_alpha,
        w1_loglog,
        a4_moment,
        a4_epsilon: eps,
        c1_n2,
        c1_cross,
        support_class,
        z_imag_dispersion,
        flags: AssumptionFlags {
            a1,
            a2: Flag::from_bool(alpha.is_some()),
            alpha_in_theorem_range: Flag::from_bool(alpha_in_range),
            a3_derivative,
            a3_moment,
            a4,
            c1,
            z_support_not_real,
            heuristic,
        },
        seed: opts.seed,
        samples: opts.samples,
    })
}

/// Standard deviation of `Im Z` over a short population-dynamics run.
fn imaginary_dispersion(model: &WeightModel, opts: &ReportOptions) -> Result<f64> {
    let seed = opts.seed ^ (Domain::SupportPool as u64).rotate_left(32);
    let run = popdyn::run(model, opts.support_pool.max(2), opts.support_generations.max(1), seed, &Default::default())?;
    let samples = run.pool.samples();
    let n = samples.len() as f64;
    let mean = samples.iter().map(|z| z.im).sum::<f64>() / n;
    let var = samples.iter().map(|z| (z.im - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}

/// Monte Carlo mean of `Σ_j T_j` with its standard error (complex modulus of the componentwise errors).
pub fn mean_weight_sum<R: Rng + ?Sized>(model: &WeightModel, n: usize, rng: &mut R) -> (Complex64, f64) {
    let mut buf = Vec::with_capacity(4);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq = (0.0, 0.0);
    for _ in 0..n {
        buf.clear();
        model.draw_into(rng, &mut buf);
        let s: Complex64 = buf.iter().sum();
        sum += s;
        sq.0 += s.re * s.re;
        sq.1 += s.im * s.im;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var_re = (sq.0 / nf - mean.re * mean.re) * nf / (nf - 1.0);
    let var_im = (sq.1 / nf - mean.im * mean.im) * nf / (nf - 1.0);
    (mean, ((var_re.max(0.0) + var_im.max(0.0)) / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, WeightDraw};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_atom(weights: &[f64]) -> WeightModel {
        WeightModel::tabular(vec![Atom {
            prob: 1.0,
            weights: WeightDraw::new(weights.iter().map(|&w| c(w, 0.0))).unwrap(),
        }])
        .unwrap()
    }

    #[test]
    fn estimate_m_examples() {
        let s = Streams::new(1);
        let b = WeightModel::biggins(c(1.0, 0.0)).unwrap();
        let e = estimate_m(&b, 0.0, 100, &s).unwrap();
        assert_eq!((e.value, e.stderr, e.method), (2.0, 0.0, Method::ClosedForm));
        let p = WeightModel::polya(8).unwrap();
        let e = estimate_m(&p, 2f64.sqrt(), 100, &s).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
        assert_eq!(e.stderr, 0.0);
        let t = single_atom(&[0.5, 0.5]);
        assert_eq!(estimate_m(&t, 1.0, 100, &s).unwrap().value, 1.0);
    }

    #[test]
    fn estimate_m_overflow_is_reported() {
        let t = single_atom(&[1e300, 0.5]);
        let err = estimate_m(&t, 10.0, 100, &Streams::new(1)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn derivative_examples() {
        let s = Streams::new(1);
        let p = WeightModel::polya(8).unwrap();
        let d = m_derivative(&p, 2f64.sqrt(), 10, &s).unwrap().value;
        assert!((d - (-(PI / 4.0).cos() / 2.0)).abs() < 1e-12);
        assert!((d + 0.353553).abs() < 1e-6);
        let b = WeightModel::biggins(c(1.0, 0.0)).unwrap();
        let d = m_derivative(&b, 1.0, 10, &s).unwrap().value;
        let oracle = 1f64.tanh() - 2f64.ln() - 1f64.cosh().ln();
        assert!((d - oracle).abs() < 1e-14);
        assert!((d + 0.365334).abs() < 1e-6);
        let t = single_atom(&[0.5, 0.5]);
        assert!((m_derivative(&t, 1.0, 10, &s).unwrap().value - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn alpha_for_polya_and_biggins() {
        let opts = AlphaOptions::default();
        for b in [7u32, 8, 9] {
            let root = find_alpha(&WeightModel::polya(b).unwrap(), &opts).unwrap().unwrap();
            let oracle = 1.0 / (2.0 * PI / b as f64).cos();
            assert!((root.alpha - oracle).abs() < 1e-9, "b={b}: {}", root.alpha);
            assert!((root.m_at_alpha - 1.0).abs() <= opts.tol);
            assert!(!root.multiple_roots);
        }
        let root = find_alpha(&WeightModel::polya(6).unwrap(), &opts).unwrap().unwrap();
        assert!((root.alpha - 2.0).abs() < 1e-9);
        let root = find_alpha(&WeightModel::biggins(c(1.0, 0.0)).unwrap(), &opts).unwrap().unwrap();
        assert!((root.alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_errors_and_none() {
        let err = find_alpha(&single_atom(&[1.0]), &AlphaOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SubcriticalMean { .. }));
        // Two weights of modulus 1: m(s) = 2 for every s.
        let flat = single_atom(&[1.0, -1.0]);
        assert_eq!(find_alpha(&flat, &AlphaOptions::default()).unwrap(), None);
    }

    #[test]
    fn convex_root_flags_second_crossing() {
        // (s - 1)(s - 3) + 1 dips below 1 on (1, 3).
        let root = find_convex_root(|s| (s - 1.0) * (s - 3.0) + 1.0, 10.0, 1e-9).unwrap().unwrap();
        assert!((root.alpha - 1.0).abs() < 1e-12);
        assert!(root.multiple_roots);
    }

    #[test]
    fn monte_carlo_alpha_is_close() {
        let opts = AlphaOptions { source: MomentSource::MonteCarlo { samples: 20_000, seed: 3 }, ..Default::default() };
        let root = find_alpha(&WeightModel::polya(9).unwrap(), &opts).unwrap().unwrap();
        let oracle = 1.0 / (2.0 * PI / 9.0).cos();
        assert!((root.alpha - oracle).abs() < 2e-2, "{}", root.alpha);
    }

    #[test]
    fn report_for_polya8() {
        let opts = ReportOptions { samples: 20_000, seed: 7, ..Default::default() };
        let r = check_assumptions(&WeightModel::polya(8).unwrap(), &opts).unwrap();
        assert_eq!(r.flags.a1, Flag::Pass);
        assert_eq!(r.m0.value, 2.0);
        assert!((r.alpha.unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(r.flags.a2, Flag::Pass);
        assert_eq!(r.flags.a3_derivative, Flag::Pass);
        assert_eq!(r.flags.c1, Flag::Pass);
        assert_eq!(r.c1_n2.value, 4.0);
        // |T_j| <= 1 for the urn weights.
        assert_eq!(r.c1_cross.value, 0.0);
        assert_eq!(r.support_class, SupportClass::Complex);
        assert!(r.alpha_in_theorem_range);
        assert_eq!(r.flags.z_support_not_real, Flag::Pass);
    }

    #[test]
    fn report_for_degenerate_and_real_models() {
        let opts = ReportOptions { samples: 2_000, seed: 1, ..Default::default() };
        let r = check_assumptions(&single_atom(&[1.0]), &opts).unwrap();
        assert_eq!(r.flags.a1, Flag::Fail);
        assert_eq!(r.alpha, None);
        assert_eq!(r.support_class, SupportClass::PositiveReal);

        let r = check_assumptions(&WeightModel::biggins(c(1.0, 0.0)).unwrap(), &opts).unwrap();
        assert!(!r.alpha_in_theorem_range);
        assert!((r.alpha.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.support_class, SupportClass::PositiveReal);
        assert_eq!(r.flags.z_support_not_real, Flag::Fail);

        let r = check_assumptions(&single_atom(&[0.6, -0.6]), &opts).unwrap();
        assert_eq!(r.support_class, SupportClass::Real);
    }

    #[test]
    fn report_is_deterministic() {
        let opts = ReportOptions { samples: 5_000, seed: 11, ..Default::default() };
        let model = WeightModel::biggins(Complex64::from_polar(1.0, PI / 4.0)).unwrap();
        let a = serde_json::to_string(&check_assumptions(&model, &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&check_assumptions(&model, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
