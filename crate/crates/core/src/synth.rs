//! Deterministic synthetic flow-like datasets with Gaussian class clusters.
//!
//! Benign rows are drawn around the origin and DDoS rows around
//! `(sep, ..., sep)`, both with unit within-class deviation. Every seventh
//! feature (starting at index 3) is discretized into protocol-like codes
//! {0, 1, 2} so the categorical path has something to encode.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryEncoder, Dataset, BENIGN, DDOS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const PROTOCOL_TOKENS: [&str; 3] = ["tcp", "udp", "icmp"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_benign: usize,
    pub n_ddos: usize,
    pub n_features: usize,
    /// Distance between class means per feature, in within-class std units.
    pub class_separation: f64,
    /// Fraction of labels flipped after generation.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_benign: 2000,
            n_ddos: 2000,
            n_features: 22,
            class_separation: 6.0,
            noise_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_features < 2 {
            return Err(Error::Config("synthetic data needs at least 2 features".into()));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Config("class separation must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::Config("noise fraction must lie in [0,1)".into()));
        }
        Ok(())
    }

    /// Feature columns carrying protocol-like codes.
    pub fn categorical_features(&self) -> Vec<usize> {
        (0..self.n_features).filter(|j| j % 7 == 3).collect()
    }

    /// Column index to token list, for CSV output.
    pub fn categorical_tokens(&self) -> BTreeMap<usize, Vec<String>> {
        self.categorical_features()
            .into_iter()
            .map(|j| (j, PROTOCOL_TOKENS.iter().map(|t| t.to_string()).collect()))
            .collect()
    }
}

/// Parses comma-separated `key=value` pairs, e.g. `sep=6,n=2000`. Keys:
/// `n` (per class), `benign`, `ddos`, `features`, `sep`, `noise`, `seed`.
impl FromStr for SynthConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = SynthConfig::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{part}`")))?;
            let bad = || Error::Config(format!("bad value for `{k}`: `{v}`"));
            match k.trim() {
                "n" => {
                    let n: usize = v.trim().parse().map_err(|_| bad())?;
                    cfg.n_benign = n;
                    cfg.n_ddos = n;
                }
                "benign" | "n_benign" => cfg.n_benign = v.trim().parse().map_err(|_| bad())?,
                "ddos" | "n_ddos" => cfg.n_ddos = v.trim().parse().map_err(|_| bad())?,
                "features" | "n_features" => cfg.n_features = v.trim().parse().map_err(|_| bad())?,
                "seed" => cfg.seed = v.trim().parse().map_err(|_| bad())?,
                "sep" | "class_separation" => {
                    cfg.class_separation = v.trim().parse().map_err(|_| bad())?
                }
                "noise" | "noise_fraction" => {
                    cfg.noise_fraction = v.trim().parse().map_err(|_| bad())?
                }
                other => return Err(Error::Config(format!("unknown synth key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn protocol_code(v: f64, sep: f64) -> f64 {
    let mid = sep / 2.0;
    if v < mid - 0.5 {
        0.0
    } else if v < mid + 0.5 {
        1.0
    } else {
        2.0
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.n_features;
    let n = cfg.n_benign + cfg.n_ddos;
    let categorical = cfg.categorical_features();
    let mut rows: Vec<(Vec<f64>, u8)> = Vec::with_capacity(n);
    for (label, count, center) in [
        (BENIGN, cfg.n_benign, 0.0),
        (DDOS, cfg.n_ddos, cfg.class_separation),
    ] {
        for _ in 0..count {
            let mut row: Vec<f64> = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    center + z
                })
                .collect();
            for &j in &categorical {
                row[j] = protocol_code(row[j], cfg.class_separation);
            }
            rows.push((row, label));
        }
    }
    rows.shuffle(&mut rng);
    let flips = (cfg.noise_fraction * n as f64).round() as usize;
    if flips > 0 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for &i in &idx[..flips] {
            rows[i].1 = 1 - rows[i].1;
        }
    }
    let x = if rows.is_empty() {
        Matrix::with_cols(d)
    } else {
        Matrix::from_rows(&rows.iter().map(|(r, _)| r.as_slice()).collect::<Vec<_>>())?
    };
    let y = rows.iter().map(|(_, l)| *l).collect();
    Dataset::new(
        (0..d).map(|j| format!("f{j:02}")).collect(),
        x,
        y,
        format!(
            "synth benign={} ddos={} features={} sep={} noise={} seed={}",
            cfg.n_benign, cfg.n_ddos, cfg.n_features, cfg.class_separation, cfg.noise_fraction, cfg.seed
        ),
    )
}

/// Mapping matching the codes `generate` emits, so artifacts trained on
/// generated data can score the CSV form of it.
pub fn encoder(cfg: &SynthConfig) -> CategoryEncoder {
    CategoryEncoder {
        columns: cfg
            .categorical_tokens()
            .into_iter()
            .map(|(j, toks)| (format!("f{j:02}"), toks))
            .collect(),
    }
}

/// Write a generated dataset as loader-compatible CSV, with protocol tokens
/// in the categorical columns.
pub fn write_csv<W: Write>(cfg: &SynthConfig, ds: &Dataset, writer: W, label_column: &str) -> Result<()> {
    ds.write_csv(writer, label_column, &cfg.categorical_tokens())
}
