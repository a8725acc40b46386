//! Density and weight profiles over blocks of source components.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const FRACTION_TOL: f64 = 1e-12;
const FILE_FRACTION_TOL: f64 = 1e-9;

/// One group of statistically identical components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// Probability that a component of this block is nonzero.
    pub rho: f64,
    /// Share of all components that belong to this block.
    pub fraction: f64,
}

/// Marginal sparsity pattern of a source: a mixture of density blocks whose
/// population fractions sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    blocks: Vec<Block>,
}

impl DensityProfile {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        Self::with_tolerance(blocks, FRACTION_TOL)
    }

    fn with_tolerance(blocks: Vec<Block>, tol: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidProfile("no blocks".into()));
        }
        for (k, b) in blocks.iter().enumerate() {
            if !(0.0..=1.0).contains(&b.rho) {
                return Err(Error::InvalidProfile(format!(
                    "block {k}: rho = {} outside [0, 1]",
                    b.rho
                )));
            }
            if !(b.fraction > 0.0 && b.fraction <= 1.0) {
                return Err(Error::InvalidProfile(format!(
                    "block {k}: fraction = {} outside (0, 1]",
                    b.fraction
                )));
            }
        }
        let total: f64 = blocks.iter().map(|b| b.fraction).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        Ok(DensityProfile { blocks })
    }

    /// Builds a profile from `(rho, fraction)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(rho, fraction)| Block { rho, fraction })
                .collect(),
        )
    }

    pub fn single(rho: f64) -> Result<Self> {
        Self::new(vec![Block { rho, fraction: 1.0 }])
    }

    /// Two equal halves with densities `rho_bar + delta_rho` (block +1, listed
    /// first) and `rho_bar - delta_rho` (block -1).
    pub fn two_block(rho_bar: f64, delta_rho: f64) -> Result<Self> {
        Self::from_pairs(&[(rho_bar + delta_rho, 0.5), (rho_bar - delta_rho, 0.5)])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Population mean density.
    pub fn mean_density(&self) -> f64 {
        self.blocks.iter().map(|b| b.fraction * b.rho).sum()
    }

    /// True when every block density is 0 or 1.
    pub fn is_extremal(&self) -> bool {
        self.blocks.iter().all(|b| b.rho == 0.0 || b.rho == 1.0)
    }
}

/// Weight attached to one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Finite(f64),
    /// Infinite weight: the components are known to be zero and are dropped
    /// from the reconstruction.
    Excluded,
}

impl Weight {
    pub fn finite(self) -> Option<f64> {
        match self {
            Weight::Finite(w) => Some(w),
            Weight::Excluded => None,
        }
    }

    pub fn is_excluded(self) -> bool {
        matches!(self, Weight::Excluded)
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(w) => s.serialize_f64(*w),
            Weight::Excluded => s.serialize_none(),
        }
    }
}

/// Per-block weights, scale-free up to a common positive factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightProfile {
    weights: Vec<Weight>,
}

impl WeightProfile {
    pub fn new(weights: Vec<Weight>) -> Result<Self> {
        for (k, w) in weights.iter().enumerate() {
            if let Weight::Finite(v) = w {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::InvalidProfile(format!(
                        "block {k}: weight {v} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(WeightProfile { weights })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&w| Weight::Finite(w)).collect())
    }

    pub fn uniform(len: usize) -> Self {
        WeightProfile {
            weights: vec![Weight::Finite(1.0); len],
        }
    }

    /// Weights `1 - b dw` for blocks `b = +1, -1`, matching
    /// [`DensityProfile::two_block`].
    pub fn two_block(delta_w: f64) -> Result<Self> {
        Self::from_values(&[1.0 - delta_w, 1.0 + delta_w])
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiplies every finite weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("scale factor {c} must be positive")));
        }
        Ok(WeightProfile {
            weights: self
                .weights
                .iter()
                .map(|w| match w {
                    Weight::Finite(v) => Weight::Finite(v * c),
                    Weight::Excluded => Weight::Excluded,
                })
                .collect(),
        })
    }

    /// Checks the pairing rules against `profile`: equal length, exclusion only
    /// on zero-density blocks, zero weight only on unit-density blocks.
    pub fn check_against(&self, profile: &DensityProfile) -> Result<()> {
        if self.len() != profile.len() {
            return Err(Error::LengthMismatch {
                profile: profile.len(),
                weights: self.len(),
            });
        }
        for (k, (w, b)) in self.weights.iter().zip(profile.blocks()).enumerate() {
            match *w {
                Weight::Excluded if b.rho != 0.0 => {
                    return Err(Error::InvalidProfile(format!(
                        "block {k}: only rho = 0 blocks may be excluded (rho = {})",
                        b.rho
                    )))
                }
                Weight::Finite(v) if v == 0.0 && b.rho != 1.0 => {
                    return Err(Error::InvalidProfile(format!(
                        "block {k}: zero weight requires rho = 1 (rho = {})",
                        b.rho
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// On-disk profile description:
/// `{"blocks": [{"rho": r, "fraction": f, "weight": w}]}` where `weight` is
/// optional and may also be the string `"excluded"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub blocks: Vec<FileBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileBlock {
    pub rho: f64,
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<FileWeight>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileWeight {
    Value(f64),
    Tag(String),
}

impl ProfileFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// The density profile, with fractions renormalised to sum to one when
    /// they are already within 1e-9 of it.
    pub fn density_profile(&self) -> Result<DensityProfile> {
        let total: f64 = self.blocks.iter().map(|b| b.fraction).sum();
        if !total.is_finite() || (total - 1.0).abs() > FILE_FRACTION_TOL {
            return Err(Error::InvalidProfile(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        DensityProfile::with_tolerance(
            self.blocks
                .iter()
                .map(|b| Block {
                    rho: b.rho,
                    fraction: b.fraction / total,
                })
                .collect(),
            FILE_FRACTION_TOL,
        )
    }

    /// Weights carried in the file, if every block has one.
    pub fn weight_profile(&self) -> Result<Option<WeightProfile>> {
        if self.blocks.iter().all(|b| b.weight.is_none()) {
            return Ok(None);
        }
        let mut weights = Vec::with_capacity(self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            let w = match &b.weight {
                None => return Err(Error::InvalidProfile(format!("block {k} has no weight"))),
                Some(FileWeight::Value(v)) => Weight::Finite(*v),
                Some(FileWeight::Tag(t)) if t == "excluded" => Weight::Excluded,
                Some(FileWeight::Tag(t)) => {
                    return Err(Error::InvalidProfile(format!(
                        "block {k}: unknown weight tag {t:?}"
                    )))
                }
            };
            weights.push(w);
        }
        let weights = WeightProfile::new(weights)?;
        weights.check_against(&self.density_profile()?)?;
        Ok(Some(weights))
    }
}
