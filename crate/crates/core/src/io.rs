//! CSV and JSON files produced and consumed by the command-line tool.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::branching::MartingaleMean;
use crate::density::{Density1d, DensityEstimate, DensityGrid};
use crate::error::{Error, Result};
use crate::fourier::RadialScan;
use crate::popdyn::SamplePool;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `stem.csv` → `stem.<suffix>`, e.g. `pool.csv` → `pool.manifest.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

/// Pool as `re,im` rows. Floats use the shortest representation that round-trips.
pub fn write_pool_csv(path: &Path, samples: &[Complex64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "re,im")?;
    for z in samples {
        writeln!(w, "{:?},{:?}", z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PoolRow {
    re: f64,
    im: f64,
}

pub fn read_pool_csv(path: &Path) -> Result<SamplePool> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::invalid("pool", format!("cannot read {}: {e}", path.display())))?;
    let samples = reader
        .deserialize::<PoolRow>()
        .map(|row| row.map(|r| Complex64::new(r.re, r.im)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::invalid("pool", format!("{}: {e}", path.display())))?;
    SamplePool::from_samples(samples, 0, 0, String::new())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_martingale_csv(path: &Path, means: &[MartingaleMean]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "n,mean_W,se_W,mean_Z_re,mean_Z_im,se_Z,node_count_mean")?;
    for m in means {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            m.n, m.mean_w, m.se_w, m.mean_z.re, m.mean_z.im, m.se_z, m.node_count_mean
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan_csv(path: &Path, scan: &RadialScan) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "R,theta,re,im,abs,stderr")?;
    for p in &scan.points {
        let v = p.value.value;
        writeln!(w, "{:?},{:?},{:?},{:?},{:?},{:?}", p.radius, p.theta, v.re, v.im, v.norm(), p.value.stderr)?;
    }
    w.flush()?;
    Ok(())
}

fn write_grid(w: &mut impl Write, d: &DensityGrid) -> Result<()> {
    writeln!(w, "x,y,value")?;
    let xs = d.x.points();
    for (j, y) in d.y.points().into_iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            writeln!(w, "{:?},{:?},{:?}", x, y, d.at(i, j))?;
        }
    }
    Ok(())
}

fn write_line(w: &mut impl Write, d: &Density1d) -> Result<()> {
    writeln!(w, "x,value")?;
    for (x, v) in d.axis.points().into_iter().zip(&d.values) {
        writeln!(w, "{:?},{:?}", x, v)?;
    }
    Ok(())
}

/// `x,y,value` for planar estimates, `x,value` for the 1D fallback.
pub fn write_density_csv(path: &Path, density: &DensityEstimate) -> Result<()> {
    let mut w = create(path)?;
    match density {
        DensityEstimate::Plane(d) => write_grid(&mut w, d)?,
        DensityEstimate::Line { density, .. } => write_line(&mut w, density)?,
    }
    w.flush()?;
    Ok(())
}

/// Provenance record written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub model: Option<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], seed: Option<u64>, model: Option<String>) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            seed,
            model,
            outputs: Vec::new(),
            note: None,
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }
}
