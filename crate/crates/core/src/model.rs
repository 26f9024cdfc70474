//! Weight models: the law of the multiplicative weights `(T_1, ..., T_N)`.
//!
//! Three families are supported:
//!
//! * [`Biggins`]: binary branching random walk with ±1 displacements and a
//!   complex parameter `λ`, `T_j = exp(-λ S(j)) / (2 cosh λ)`.
//! * [`CyclicPolya`]: `T_1 = U^ζ`, `T_2 = ζ (1-U)^ζ` with `ζ = exp(2πi/b)` and
//!   `U` uniform on the open unit interval.
//! * [`Tabular`]: an arbitrary finite discrete law over weight vectors.
//!
//! Complex powers of a real base in `(0, 1]` use the principal branch
//! `u^ζ = exp(ζ ln u)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::distributions::{Distribution, Open01, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

/// One realization `(T_1, ..., T_N)`: finite, nonzero entries and `N >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDraw(Vec<Complex64>);

impl WeightDraw {
    /// Strips zero entries; rejects non-finite entries and empty results.
    pub fn new(weights: impl IntoIterator<Item = Complex64>) -> Result<Self> {
        let mut out = Vec::new();
        for w in weights {
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::invalid("weights", format!("non-finite weight {w}")));
            }
            if w != Complex64::new(0.0, 0.0) {
                out.push(w);
            }
        }
        if out.is_empty() {
            return Err(Error::invalid("weights", "every draw needs at least one nonzero weight"));
        }
        Ok(WeightDraw(out))
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    /// Number of nonzero weights.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }
}

impl fmt::Display for WeightDraw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", w.re, w.im)?;
        }
        write!(f, ")")
    }
}

/// Binary branching random walk weights with complex parameter `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Biggins {
    lambda: Complex64,
    /// Weight for displacement `S = +1` and `S = -1` respectively.
    weights: [Complex64; 2],
}

impl Biggins {
    pub fn new(lambda: Complex64) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        let norm = 2.0 * lambda.cosh();
        if !(norm.norm() > 1e-12) || !norm.norm().is_finite() {
            return Err(Error::invalid("lambda", format!("cosh(λ) vanishes or overflows at λ = {lambda}")));
        }
        Ok(Biggins { lambda, weights: [(-lambda).exp() / norm, lambda.exp() / norm] })
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Weight of a child with displacement `step` (`+1` or `-1`).
    pub fn weight(&self, step: i8) -> Complex64 {
        if step >= 0 {
            self.weights[0]
        } else {
            self.weights[1]
        }
    }
}

/// Cyclic Pólya urn weights with `b` colours.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicPolya {
    b: u32,
    zeta: Complex64,
}

impl CyclicPolya {
    pub fn new(b: u32) -> Result<Self> {
        if b < 3 {
            return Err(Error::invalid("b", format!("need b >= 3, got {b}")));
        }
        Ok(CyclicPolya { b, zeta: Complex64::from_polar(1.0, 2.0 * PI / b as f64) })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    /// `ζ = exp(2πi/b)`.
    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    /// `ℜζ = cos(2π/b)`.
    pub fn cos(&self) -> f64 {
        self.zeta.re
    }

    /// Weights `(U^ζ, ζ (1-U)^ζ)` for a given `U` in `(0, 1)`.
    pub fn weights_at(&self, u: f64) -> [Complex64; 2] {
        let t1 = (self.zeta * u.ln()).exp();
        let t2 = self.zeta * (self.zeta * (1.0 - u).ln()).exp();
        [t1, t2]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub prob: f64,
    pub weights: WeightDraw,
}

/// Finite discrete law over weight vectors.
#[derive(Clone, Debug)]
pub struct Tabular {
    atoms: Vec<Atom>,
    index: WeightedIndex<f64>,
}

impl PartialEq for Tabular {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl Tabular {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("atoms", "at least one atom required"));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.prob > 0.0 && a.prob.is_finite())) {
            return Err(Error::invalid("atoms", format!("probability {} is not positive", a.prob)));
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("atoms", format!("probabilities sum to {total}, not 1")));
        }
        let index =
            WeightedIndex::new(atoms.iter().map(|a| a.prob)).map_err(|e| Error::invalid("atoms", e.to_string()))?;
        Ok(Tabular { atoms, index })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E[f(T_1, ..., T_N)]` as an exact finite sum.
    pub fn expect(&self, f: impl Fn(&[Complex64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.prob * f(a.weights.as_slice())).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightModel {
    Biggins(Biggins),
    CyclicPolya(CyclicPolya),
    Tabular(Tabular),
}

impl WeightModel {
    pub fn biggins(lambda: Complex64) -> Result<Self> {
        Biggins::new(lambda).map(WeightModel::Biggins)
    }

    pub fn polya(b: u32) -> Result<Self> {
        CyclicPolya::new(b).map(WeightModel::CyclicPolya)
    }

    pub fn tabular(atoms: Vec<Atom>) -> Result<Self> {
        Tabular::new(atoms).map(WeightModel::Tabular)
    }

    /// Appends one realization of `(T_1, ..., T_N)` to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<Complex64>) {
        match self {
            WeightModel::Biggins(m) => {
                let bits: u8 = rng.gen();
                out.push(m.weights[(bits & 1) as usize]);
                out.push(m.weights[((bits >> 1) & 1) as usize]);
            }
            WeightModel::CyclicPolya(m) => {
                let u: f64 = Open01.sample(rng);
                out.extend_from_slice(&m.weights_at(u));
            }
            WeightModel::Tabular(m) => {
                let atom = &m.atoms[m.index.sample(rng)];
                out.extend_from_slice(atom.weights.as_slice());
            }
        }
    }

    pub fn draw_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightDraw {
        let mut out = Vec::with_capacity(2);
        self.draw_into(rng, &mut out);
        WeightDraw(out)
    }

    /// `m(s) = E[Σ_j |T_j|^s]` in closed form, when the model provides one.
    pub fn m_closed_form(&self, s: f64) -> Option<f64> {
        Some(match self {
            WeightModel::Biggins(m) => {
                let r = m.lambda.re;
                2.0 * (-s * std::f64::consts::LN_2).exp() * (s * r).cosh() / m.lambda.cosh().norm().powf(s)
            }
            WeightModel::CyclicPolya(m) => 2.0 / (1.0 + s * m.cos()),
            WeightModel::Tabular(m) => m.expect(|w| w.iter().map(|t| t.norm().powf(s)).sum()),
        })
    }

    /// `m'(s) = E[Σ_j |T_j|^s ln|T_j|]` in closed form, when available.
    pub fn m_derivative_closed_form(&self, s: f64) -> Option<f64> {
        Some(match self {
            WeightModel::Biggins(m) => {
                let r = m.lambda.re;
                let ms = self.m_closed_form(s)?;
                ms * (-std::f64::consts::LN_2 + r * (s * r).tanh() - m.lambda.cosh().norm().ln())
            }
            WeightModel::CyclicPolya(m) => {
                let c = m.cos();
                -2.0 * c / (1.0 + s * c).powi(2)
            }
            WeightModel::Tabular(m) => m.expect(|w| {
                w.iter()
                    .map(|t| {
                        let a = t.norm();
                        a.powf(s) * a.ln()
                    })
                    .sum()
            }),
        })
    }

    /// `E[N^2]` when known exactly.
    pub fn mean_n_squared(&self) -> Option<f64> {
        match self {
            WeightModel::Biggins(_) | WeightModel::CyclicPolya(_) => Some(4.0),
            WeightModel::Tabular(m) => Some(m.expect(|w| (w.len() * w.len()) as f64)),
        }
    }

    /// Short stable description used in manifests and pool metadata.
    pub fn fingerprint(&self) -> String {
        match self {
            WeightModel::Biggins(m) => {
                format!("biggins(lambda={:e}{:+e}i)", m.lambda.re, m.lambda.im)
            }
            WeightModel::CyclicPolya(m) => format!("polya(b={})", m.b),
            WeightModel::Tabular(m) => {
                let atoms: Vec<String> = m.atoms.iter().map(|a| format!("{:e}:{}", a.prob, a.weights)).collect();
                format!("tabular[{}]", atoms.join(";"))
            }
        }
    }
}
