//! JSON model configuration.
//!
//! ```json
//! {"model": {"type": "biggins", "lambda": {"modulus": 2.15, "arg": 0.2732}}}
//! {"model": {"type": "polya", "b": 8}}
//! {"model": {"type": "tabular", "atoms": [{"prob": 1.0, "weights": [[0.5, 0.0], [0.5, 0.0]]}]}}
//! ```
//!
//! Complex numbers are `{"re": .., "im": ..}`, `{"modulus": .., "arg": ..}`
//! (argument in radians) or, inside tabular atoms, `[re, im]` pairs.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Atom, WeightDraw, WeightModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ComplexSpec {
    Cartesian { re: f64, im: f64 },
    Polar { modulus: f64, arg: f64 },
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(&self) -> Complex64 {
        match *self {
            ComplexSpec::Cartesian { re, im } => Complex64::new(re, im),
            ComplexSpec::Polar { modulus, arg } => Complex64::from_polar(modulus, arg),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub prob: f64,
    pub weights: Vec<ComplexSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Biggins { lambda: ComplexSpec },
    Polya { b: u32 },
    Tabular { atoms: Vec<AtomSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<WeightModel> {
        match self {
            ModelSpec::Biggins { lambda } => WeightModel::biggins(lambda.value()),
            ModelSpec::Polya { b } => WeightModel::polya(*b),
            ModelSpec::Tabular { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| Ok(Atom { prob: a.prob, weights: WeightDraw::new(a.weights.iter().map(|w| w.value()))? }))
                    .collect::<Result<Vec<_>>>()?;
                WeightModel::tabular(atoms)
            }
        }
    }
}

impl From<&WeightModel> for ModelSpec {
    fn from(model: &WeightModel) -> Self {
        match model {
            WeightModel::Biggins(m) => {
                let l = m.lambda();
                ModelSpec::Biggins { lambda: ComplexSpec::Cartesian { re: l.re, im: l.im } }
            }
            WeightModel::CyclicPolya(m) => ModelSpec::Polya { b: m.b() },
            WeightModel::Tabular(m) => ModelSpec::Tabular {
                atoms: m
                    .atoms()
                    .iter()
                    .map(|a| AtomSpec {
                        prob: a.prob,
                        weights: a.weights.as_slice().iter().map(|w| ComplexSpec::Pair([w.re, w.im])).collect(),
                    })
                    .collect(),
            },
        }
    }
}

pub fn parse_model(json: &str) -> Result<WeightModel> {
    let cfg: ModelConfig = serde_json::from_str(json)?;
    cfg.model.build()
}

pub fn load_model(path: &Path) -> Result<WeightModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid("model", format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}
