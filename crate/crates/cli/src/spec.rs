//! The JSON model file.
//!
//! A file describes exactly one model: an explicit chain (`h` plus
//! `interactions`), a seeded random chain (`random`), or a Kitaev chain
//! (`kitaev`). Matrices are row-major lists of rows of `[re, im]` pairs.

use std::path::Path;

use lsbd_core::chain::{Interval, LocalOperator};
use lsbd_core::kitaev::{self, FermionPolynomial, KitaevModel, KitaevPerturbation};
use lsbd_core::linalg::{CMat, Complex64};
use lsbd_core::model::{self, ChainModel, RandomModelSpec, RandomOnsite, PRNG_NAME};
use lsbd_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SPEC_VERSION: u32 = 1;

pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    /// `[first_site, last_site]`, 1-based and inclusive.
    pub support: [usize; 2],
    pub matrix: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_kbar")]
    pub kbar: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub onsite: RandomOnsite,
}

fn default_m() -> usize {
    2
}

fn default_kbar() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub support: [usize; 2],
    pub terms: FermionPolynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBulkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KitaevSpec {
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub delta: f64,
    pub beta: f64,
    #[serde(default = "default_kbar")]
    pub kbar: usize,
    #[serde(default)]
    pub perturbations: Vec<PerturbationSpec>,
    /// Adds one seeded random even perturbation on every bulk interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_bulk: Option<RandomBulkSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<InteractionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kbar: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kitaev: Option<KitaevSpec>,
}

/// A parsed and validated model.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Chain(ChainModel),
    Kitaev(KitaevModel),
}

impl LoadedModel {
    /// Coupling `t` of a chain, `β` of a Kitaev model.
    pub fn coupling(&self) -> f64 {
        match self {
            LoadedModel::Chain(m) => m.t(),
            LoadedModel::Kitaev(k) => k.beta,
        }
    }

    pub fn with_coupling(&self, t: f64) -> Self {
        match self {
            LoadedModel::Chain(m) => LoadedModel::Chain(m.with_coupling(t)),
            LoadedModel::Kitaev(k) => LoadedModel::Kitaev(KitaevModel { beta: t, ..k.clone() }),
        }
    }
}

/// Seed actually used for a random model, echoed in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrngRecord {
    pub name: String,
    pub seed: u64,
}

fn matrix(spec: &MatrixSpec, what: &str) -> Result<CMat> {
    let rows = spec.len();
    if rows == 0 {
        return Err(Error::Validation(format!("{what} is empty")));
    }
    if let Some(bad) = spec.iter().position(|r| r.len() != rows) {
        return Err(Error::Validation(format!(
            "{what} is not square: row {} has {} entries, expected {rows}",
            bad + 1,
            spec[bad].len()
        )));
    }
    Ok(CMat::from_fn(rows, rows, |i, j| {
        let [re, im] = spec[i][j];
        Complex64::new(re, im)
    }))
}

pub fn matrix_spec(m: &CMat) -> MatrixSpec {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn interval(support: [usize; 2], n: usize) -> Result<Interval> {
    let [first, last] = support;
    if first == 0 || last < first || last > n {
        return Err(Error::Validation(format!(
            "support [{first}, {last}] is not an interval of sites 1..={n}"
        )));
    }
    Ok(Interval::spanning(first, last))
}

impl ModelSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces the seed of a random chain or random Kitaev bulk.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(r) = self.random.as_mut() {
            r.seed = Some(seed);
        }
        if let Some(rb) = self.kitaev.as_mut().and_then(|k| k.random_bulk.as_mut()) {
            rb.seed = Some(seed);
        }
        self
    }

    pub fn prng(&self) -> Option<PrngRecord> {
        let seed = match (&self.random, &self.kitaev) {
            (Some(r), _) => r.seed.unwrap_or(0),
            (None, Some(k)) => k.random_bulk.as_ref()?.seed.unwrap_or(0),
            _ => return None,
        };
        Some(PrngRecord {
            name: PRNG_NAME.into(),
            seed,
        })
    }

    pub fn build(&self) -> Result<LoadedModel> {
        if self.version != SPEC_VERSION {
            return Err(Error::Validation(format!(
                "unsupported spec version {} (expected {SPEC_VERSION})",
                self.version
            )));
        }
        let kinds = [self.h.is_some(), self.random.is_some(), self.kitaev.is_some()];
        if kinds.iter().filter(|&&k| k).count() != 1 {
            return Err(Error::Validation(
                "exactly one of `h`, `random` or `kitaev` must describe the model".into(),
            ));
        }
        if let Some(k) = &self.kitaev {
            return self.build_kitaev(k).map(LoadedModel::Kitaev);
        }
        let t = self
            .t
            .ok_or_else(|| Error::Validation("coupling `t` is required".into()))?;
        if let Some(r) = &self.random {
            let spec = RandomModelSpec {
                n: r.n,
                m: r.m,
                kbar: r.kbar,
                t,
                seed: r.seed.unwrap_or(0),
                onsite: r.onsite,
            };
            return model::random_model(&spec).map(LoadedModel::Chain);
        }
        let n = self.n.ok_or_else(|| Error::Validation("chain length `n` is required".into()))?;
        let h = matrix(self.h.as_ref().expect("checked above"), "h")?;
        if let Some(m) = self.m {
            if m != h.nrows() {
                return Err(Error::Validation(format!("m = {m} but h is {}×{}", h.nrows(), h.nrows())));
            }
        }
        let m = h.nrows();
        let interactions = self
            .interactions
            .iter()
            .map(|v| {
                let sup = interval(v.support, n)?;
                let mat = matrix(&v.matrix, &format!("interaction on {sup}"))?;
                LocalOperator::hermitian(sup, m, mat)
                    .map_err(|e| Error::Validation(format!("interaction on {sup}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let kbar = self
            .kbar
            .unwrap_or_else(|| interactions.iter().map(|v| v.support().k).max().unwrap_or(1));
        ChainModel::new(n, h, interactions, t, kbar).map(LoadedModel::Chain)
    }

    fn build_kitaev(&self, k: &KitaevSpec) -> Result<KitaevModel> {
        let n = self.n.ok_or_else(|| Error::Validation("chain length `n` is required".into()))?;
        let mut perturbations = k
            .perturbations
            .iter()
            .map(|p| {
                Ok(KitaevPerturbation {
                    support: interval(p.support, n)?,
                    poly: p.terms.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(rb) = &k.random_bulk {
            let random = kitaev::random_bulk_model(n, k.beta, k.kbar, rb.seed.unwrap_or(0))?;
            perturbations.extend(random.perturbations);
        }
        KitaevModel::new(n, (k.mu, k.tau, k.delta), k.beta, k.kbar, perturbations)
    }
}

/// Reads, parses and validates a model file.
pub fn load_model(path: &Path) -> Result<LoadedModel> {
    ModelSpecFile::read(path)?.build()
}
