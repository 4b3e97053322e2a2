//! Pipeline run configuration.
//!
//! One TOML file fully determines a pipeline run, including every seed, so
//! rerunning the same config reproduces every artifact byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitVariant, CombineRule, InclusionRule, PerturbMode, WeightTreatment};
use crate::error::{Error, Result};
use crate::event_store::SeriesFormat;
use crate::null_model::{NullConfig, NullMode};
use crate::simulate::SeedingRule;
use crate::sparse::GroupThreshold;
use crate::strategy::StrategyClass;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    #[serde(default = "default_format")]
    pub format: SeriesFormat,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    /// Ingestion filter: drop events smaller than this (1 keeps all).
    #[serde(default = "default_one")]
    pub min_size: usize,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub null: NullSection,
    #[serde(default)]
    pub extraction: ExtractionSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sparse: SparseSection,
    #[serde(default)]
    pub degeneracy: DegeneracySection,
}

fn default_format() -> SeriesFormat {
    SeriesFormat::Lines
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSection {
    pub n_permutations: usize,
    pub mode: NullMode,
}

impl Default for NullSection {
    fn default() -> Self {
        Self {
            n_permutations: 1000,
            mode: NullMode::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionSection {
    pub classes: Vec<String>,
    pub min_source_count: u32,
    pub exclude_overlapping: bool,
    /// Benjamini-Hochberg FDR; 0 disables the post-filter.
    pub bh_q: f64,
    pub significance_level: f64,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        Self {
            classes: vec!["C(1,1)".into(), "C(2,1)".into(), "C(1,2)".into()],
            min_source_count: 5,
            exclude_overlapping: false,
            bh_q: 0.0,
            significance_level: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub alpha: f64,
    pub top_k: usize,
    pub inclusions: Vec<String>,
    pub weight_treatments: Vec<String>,
    pub combine: String,
}

impl Default for FamilySection {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            top_k: 10,
            inclusions: vec![
                "all".into(),
                "significant_only".into(),
                "positive_only".into(),
                "top_k".into(),
            ],
            weight_treatments: vec![
                "measured".into(),
                "sign_only".into(),
                "uniform_magnitude".into(),
            ],
            combine: "sum".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// 0 matches the observed series length.
    pub n_events: usize,
    pub replicates: usize,
    pub seeding: SeedingRule,
    pub min_fight_size: usize,
    pub max_resample: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            n_events: 0,
            replicates: 5,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 2,
            max_resample: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseSection {
    pub enabled: bool,
    pub k: usize,
    /// Negative selects lambda from the built-in grid.
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// "otsu" or a relative fraction like "relative:0.5".
    pub threshold: String,
    pub max_tuple: usize,
    pub min_source_count: u32,
}

impl Default for SparseSection {
    fn default() -> Self {
        Self {
            enabled: true,
            k: 12,
            lambda: -1.0,
            max_iters: 200,
            tol: 1e-6,
            threshold: "otsu".into(),
            max_tuple: 5,
            min_source_count: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracySection {
    pub enabled: bool,
    pub modes: Vec<String>,
    pub n_perturbations: usize,
    /// Class whose best circuit is scanned; empty picks the first class.
    pub target_class: String,
}

impl Default for DegeneracySection {
    fn default() -> Self {
        Self {
            enabled: true,
            modes: vec![
                "shuffle_weights".into(),
                "rescale(0.5)".into(),
                "jitter(0.05)".into(),
            ],
            n_perturbations: 20,
            target_class: String::new(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Fail fast on anything that would invalidate the run, before any
    /// expensive work happens.
    pub fn validate(&self) -> Result<()> {
        if self.null.n_permutations == 0 && self.null.mode == NullMode::MonteCarlo {
            return Err(Error::InvalidConfig(
                "null.n_permutations must be at least 1".into(),
            ));
        }
        if self.extraction.classes.is_empty() {
            return Err(Error::InvalidConfig("extraction.classes is empty".into()));
        }
        for c in &self.extraction.classes {
            StrategyClass::parse(c)?;
        }
        if self.extraction.min_source_count == 0 {
            return Err(Error::InvalidConfig(
                "extraction.min_source_count must be at least 1".into(),
            ));
        }
        if !(self.extraction.significance_level > 0.0 && self.extraction.significance_level <= 1.0)
        {
            return Err(Error::InvalidConfig(
                "extraction.significance_level must be in (0, 1]".into(),
            ));
        }
        self.parsed_variants()?;
        if self.simulation.replicates == 0 {
            return Err(Error::InvalidConfig(
                "simulation.replicates must be at least 1".into(),
            ));
        }
        if self.simulation.min_fight_size == 0 {
            return Err(Error::InvalidConfig(
                "simulation.min_fight_size must be at least 1".into(),
            ));
        }
        if self.sparse.enabled {
            if self.sparse.k == 0 {
                return Err(Error::InvalidConfig("sparse.k must be at least 1".into()));
            }
            parse_threshold(&self.sparse.threshold)?;
        }
        if self.degeneracy.enabled {
            if self.degeneracy.n_perturbations == 0 {
                return Err(Error::InvalidConfig(
                    "degeneracy.n_perturbations must be at least 1".into(),
                ));
            }
            for m in &self.degeneracy.modes {
                PerturbMode::parse(m)?;
            }
        }
        Ok(())
    }

    pub fn null_config(&self) -> NullConfig {
        NullConfig {
            n_permutations: self.null.n_permutations,
            master_seed: self.master_seed,
            mode: self.null.mode,
        }
    }

    pub fn parsed_classes(&self) -> Result<Vec<StrategyClass>> {
        self.extraction
            .classes
            .iter()
            .map(|c| StrategyClass::parse(c))
            .collect()
    }

    /// The variant grid: inclusions x weight treatments.
    pub fn parsed_variants(&self) -> Result<Vec<CircuitVariant>> {
        let combine = match self.family.combine.as_str() {
            "sum" => CombineRule::Sum,
            "max_magnitude" => CombineRule::MaxMagnitude,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown combine rule {other:?}"
                )))
            }
        };
        let mut variants = Vec::new();
        for inc_name in &self.family.inclusions {
            let inclusion = match inc_name.as_str() {
                "all" => InclusionRule::All,
                "significant_only" => InclusionRule::SignificantOnly,
                "positive_only" => InclusionRule::PositiveOnly,
                "top_k" => InclusionRule::TopK,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown inclusion rule {other:?}"
                    )))
                }
            };
            for wt_name in &self.family.weight_treatments {
                let weight_treatment = match wt_name.as_str() {
                    "measured" => WeightTreatment::Measured,
                    "sign_only" => WeightTreatment::SignOnly,
                    "uniform_magnitude" => WeightTreatment::UniformMagnitude,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown weight treatment {other:?}"
                        )))
                    }
                };
                variants.push(CircuitVariant {
                    inclusion,
                    weight_treatment,
                    alpha: self.family.alpha,
                    k: self.family.top_k,
                    combine,
                });
            }
        }
        if variants.is_empty() {
            return Err(Error::InvalidConfig("family grid is empty".into()));
        }
        Ok(variants)
    }
}

/// Parse a sparse threshold spec: `"otsu"` or `"relative:<frac>"`.
pub fn parse_threshold(text: &str) -> Result<GroupThreshold> {
    if text == "otsu" {
        return Ok(GroupThreshold::Otsu);
    }
    if let Some(rest) = text.strip_prefix("relative:") {
        let frac: f64 = rest
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad threshold fraction {rest:?}")))?;
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::InvalidConfig(
                "relative threshold must be in (0, 1]".into(),
            ));
        }
        return Ok(GroupThreshold::Relative(frac));
    }
    Err(Error::InvalidConfig(format!(
        "unknown threshold {text:?} (expected \"otsu\" or \"relative:<frac>\")"
    )))
}
