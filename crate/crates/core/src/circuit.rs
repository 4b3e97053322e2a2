//! Assembly of candidate circuit families from measured edge lists.
//!
//! A circuit is a directed weighted graph over the roster plus per-individual
//! baseline join probabilities and a rule for combining incoming edge
//! contributions. A family is the grid of circuits produced by crossing
//! edge-inclusion rules with weight treatments; each member is one
//! hypothesis for how measured dependencies generate macroscopic behavior.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::event_store::{FightSeries, Roster};
use crate::seed::stream_rng;
use crate::strategy::DeltaPEdge;

/// Which measured edges a family member keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionRule {
    /// Every measured edge.
    All,
    /// Edges with p <= alpha.
    SignificantOnly,
    /// Edges with dp > 0.
    PositiveOnly,
    /// The k largest by |dp|.
    TopK,
}

/// What happens to the kept weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTreatment {
    /// Keep measured dp verbatim.
    Measured,
    /// sign(dp) times the mean |dp| over included edges.
    SignOnly,
    /// sign(dp) times half the max |dp| over included edges.
    UniformMagnitude,
}

/// How simultaneous incoming contributions combine during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    Sum,
    MaxMagnitude,
}

/// One cell of the family grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitVariant {
    pub inclusion: InclusionRule,
    pub weight_treatment: WeightTreatment,
    /// Significance level for `SignificantOnly`.
    pub alpha: f64,
    /// Edge budget for `TopK`.
    pub k: usize,
    pub combine: CombineRule,
}

impl CircuitVariant {
    pub fn label(&self) -> String {
        let inc = match self.inclusion {
            InclusionRule::All => "all".to_string(),
            InclusionRule::SignificantOnly => format!("significant_only(alpha={})", self.alpha),
            InclusionRule::PositiveOnly => "positive_only".to_string(),
            InclusionRule::TopK => format!("top_k(k={})", self.k),
        };
        let wt = match self.weight_treatment {
            WeightTreatment::Measured => "measured",
            WeightTreatment::SignOnly => "sign_only",
            WeightTreatment::UniformMagnitude => "uniform_magnitude",
        };
        let cmb = match self.combine {
            CombineRule::Sum => "sum",
            CombineRule::MaxMagnitude => "max_magnitude",
        };
        format!("{inc}/{wt}/{cmb}")
    }
}

/// A directed weighted edge: source tuple joins at t-1, target members are
/// nudged at t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitEdge {
    #[serde(rename = "src")]
    pub source: Vec<String>,
    #[serde(rename = "dst")]
    pub target: Vec<String>,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// A generative model of fight sequences.
///
/// Serialized keys are stable (struct order plus sorted maps) so circuit
/// files diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(rename = "class")]
    pub class_label: String,
    pub variant: CircuitVariant,
    /// Per-individual join probability; the key set is the roster.
    pub baseline: BTreeMap<String, f64>,
    pub edges: Vec<CircuitEdge>,
}

impl Circuit {
    /// Checked constructor: endpoints in the roster, no duplicate
    /// (source, target) pairs, baselines in [0,1], weights in [-1,1].
    pub fn new(
        class_label: String,
        variant: CircuitVariant,
        baseline: BTreeMap<String, f64>,
        edges: Vec<CircuitEdge>,
    ) -> Result<Self> {
        for (id, b) in &baseline {
            if !(0.0..=1.0).contains(b) {
                return Err(Error::InvalidConfig(format!(
                    "baseline for {id:?} is {b}, outside [0,1]"
                )));
            }
        }
        let mut seen: BTreeSet<(Vec<String>, Vec<String>)> = BTreeSet::new();
        for e in &edges {
            for id in e.source.iter().chain(&e.target) {
                if !baseline.contains_key(id) {
                    return Err(Error::UnknownIndividual { id: id.clone() });
                }
            }
            if !(-1.0..=1.0).contains(&e.weight) {
                return Err(Error::InvalidConfig(format!(
                    "edge weight {} outside [-1,1]",
                    e.weight
                )));
            }
            if !seen.insert((e.source.clone(), e.target.clone())) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate edge {:?} -> {:?}",
                    e.source, e.target
                )));
            }
        }
        Ok(Self {
            class_label,
            variant,
            baseline,
            edges,
        })
    }

    pub fn roster(&self) -> Roster {
        Roster::new(self.baseline.keys().cloned())
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Stable content digest; used to derive simulation seeds so that
    /// identical circuits always replay identical runs.
    pub fn content_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("circuit serializes");
        let digest = Sha256::digest(json.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Family construction output: one circuit per variant that kept at least
/// one edge, plus the variants that kept none.
#[derive(Debug, Clone)]
pub struct FamilyBuild {
    pub circuits: Vec<Circuit>,
    pub empty_variants: Vec<CircuitVariant>,
}

impl FamilyBuild {
    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }
}

/// Empirical marginal join rates: participation count / T.
pub fn empirical_baseline(series: &FightSeries) -> BTreeMap<String, f64> {
    let t = series.len().max(1) as f64;
    series
        .named_participation_counts()
        .into_iter()
        .map(|(id, c)| (id, c as f64 / t))
        .collect()
}

/// One circuit per variant. Baselines are the empirical marginals of
/// `series`; weights come from the measured dp values under the variant's
/// treatment. Variants that keep no edge are reported, not fatal.
pub fn build_family(
    edges: &[DeltaPEdge],
    series: &FightSeries,
    class_label: &str,
    variants: &[CircuitVariant],
) -> Result<FamilyBuild> {
    if variants.is_empty() {
        return Err(Error::InvalidConfig("no variants requested".into()));
    }
    let baseline = empirical_baseline(series);

    // Self-contained ordering: largest |dp| first, deterministic ties.
    let mut ranked: Vec<&DeltaPEdge> = edges.iter().collect();
    ranked.sort_by(|a, b| {
        b.delta_p
            .abs()
            .total_cmp(&a.delta_p.abs())
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
    });

    let mut circuits = Vec::new();
    let mut empty_variants = Vec::new();
    for variant in variants {
        let included: Vec<&DeltaPEdge> = match variant.inclusion {
            InclusionRule::All => ranked.clone(),
            InclusionRule::SignificantOnly => ranked
                .iter()
                .copied()
                .filter(|e| e.p_value <= variant.alpha)
                .collect(),
            InclusionRule::PositiveOnly => ranked
                .iter()
                .copied()
                .filter(|e| e.delta_p > 0.0)
                .collect(),
            InclusionRule::TopK => ranked.iter().copied().take(variant.k).collect(),
        };
        if included.is_empty() {
            empty_variants.push(*variant);
            continue;
        }
        let mean_abs =
            included.iter().map(|e| e.delta_p.abs()).sum::<f64>() / included.len() as f64;
        let max_abs = included
            .iter()
            .map(|e| e.delta_p.abs())
            .fold(0.0f64, f64::max);
        let circuit_edges: Vec<CircuitEdge> = included
            .iter()
            .map(|e| {
                let w = match variant.weight_treatment {
                    WeightTreatment::Measured => e.delta_p,
                    WeightTreatment::SignOnly => e.delta_p.signum() * mean_abs,
                    WeightTreatment::UniformMagnitude => e.delta_p.signum() * 0.5 * max_abs,
                };
                CircuitEdge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    weight: w.clamp(-1.0, 1.0),
                }
            })
            .collect();
        circuits.push(Circuit::new(
            class_label.to_string(),
            *variant,
            baseline.clone(),
            circuit_edges,
        )?);
    }
    Ok(FamilyBuild {
        circuits,
        empty_variants,
    })
}

/// Parameter-space perturbations over a fixed topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum PerturbMode {
    /// Permute the weight multiset over the edges.
    ShuffleWeights,
    /// Multiply every weight by a factor, clipping to [-1,1].
    Rescale(f64),
    /// Add zero-mean Gaussian noise with the given std, clipping.
    Jitter(f64),
}

impl PerturbMode {
    pub fn label(&self) -> String {
        match self {
            PerturbMode::ShuffleWeights => "shuffle_weights".to_string(),
            PerturbMode::Rescale(f) => format!("rescale({f})"),
            PerturbMode::Jitter(s) => format!("jitter({s})"),
        }
    }

    /// Parse `"shuffle_weights"`, `"rescale(0.5)"`, or `"jitter(0.1)"`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "shuffle_weights" {
            return Ok(PerturbMode::ShuffleWeights);
        }
        for (name, ctor) in [
            ("rescale", PerturbMode::Rescale as fn(f64) -> PerturbMode),
            ("jitter", PerturbMode::Jitter as fn(f64) -> PerturbMode),
        ] {
            if let Some(rest) = t.strip_prefix(name) {
                let inner = rest.trim_start_matches('(').trim_end_matches(')');
                let v: f64 = inner.parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad {name} parameter {inner:?}"))
                })?;
                return Ok(ctor(v));
            }
        }
        Err(Error::InvalidConfig(format!(
            "unknown perturbation mode {text:?}"
        )))
    }
}

/// A perturbed copy of `circuit`. The edge topology (source/target pairs)
/// never changes; only weights move. Deterministic in `seed`.
pub fn perturb_circuit(circuit: &Circuit, mode: PerturbMode, seed: u64) -> Circuit {
    let mut out = circuit.clone();
    match mode {
        PerturbMode::ShuffleWeights => {
            let mut rng = stream_rng(seed, "circuit:perturb:shuffle", 0);
            let mut weights: Vec<f64> = out.edges.iter().map(|e| e.weight).collect();
            for i in (1..weights.len()).rev() {
                let j = rand::Rng::random_range(&mut rng, 0..=i);
                weights.swap(i, j);
            }
            for (e, w) in out.edges.iter_mut().zip(weights) {
                e.weight = w;
            }
        }
        PerturbMode::Rescale(factor) => {
            for e in &mut out.edges {
                e.weight = (e.weight * factor).clamp(-1.0, 1.0);
            }
        }
        PerturbMode::Jitter(sigma) => {
            if sigma > 0.0 {
                let mut rng = stream_rng(seed, "circuit:perturb:jitter", 0);
                let normal = rand_distr::Normal::new(0.0, sigma).expect("sigma is finite");
                for e in &mut out.edges {
                    let noise: f64 = rand_distr::Distribution::sample(&normal, &mut rng);
                    e.weight = (e.weight + noise).clamp(-1.0, 1.0);
                }
            }
        }
    }
    out
}
