//! First-order Markov simulation of fight sequences from a circuit.
//!
//! One event is one synchronous draw: every individual x independently joins
//! the next fight with probability
//!
//! ```text
//! q(x) = clip(baseline[x] + combine{ w : edge source in previous event,
//!                                        x in edge target }, 0, 1)
//! ```
//!
//! Edge weights act as additive probability offsets (negative weights are
//! avoidance); an edge whose target is a tuple applies its weight to every
//! member independently. Draws smaller than `min_fight_size` are resampled
//! up to `max_resample` times and then replaced by a fresh seed event, so a
//! step always terminates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::circuit::{Circuit, CombineRule};
use crate::error::{Error, Result};
use crate::event_store::{FightSeries, Roster};
use crate::seed::stream_rng;

/// How the initial event (and fallback events) are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedingRule {
    /// Uniform draw from the observed events.
    EmpiricalFirst,
    /// Two distinct uniform individuals.
    RandomPair,
}

/// Simulation hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_events: usize,
    pub seed: u64,
    pub seeding: SeedingRule,
    pub min_fight_size: usize,
    pub max_resample: usize,
}

impl SimConfig {
    pub fn new(n_events: usize, seed: u64) -> Self {
        Self {
            n_events,
            seed,
            seeding: SeedingRule::RandomPair,
            min_fight_size: 2,
            max_resample: 100,
        }
    }

    fn validate(&self, roster_size: usize) -> Result<()> {
        if self.n_events == 0 {
            return Err(Error::InvalidConfig("n_events must be at least 1".into()));
        }
        if self.min_fight_size == 0 {
            return Err(Error::InvalidConfig(
                "min_fight_size must be at least 1".into(),
            ));
        }
        if self.seeding == SeedingRule::RandomPair && roster_size < 2 {
            return Err(Error::InvalidConfig(
                "random_pair seeding needs a roster of at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// A circuit compiled for stepping: index-based masks and per-edge targets.
pub struct Simulator {
    roster: Roster,
    baseline: Vec<f64>,
    edges: Vec<(Bitset, Vec<usize>, f64)>,
    combine: CombineRule,
    seed_pool: Option<Vec<Bitset>>,
    min_fight_size: usize,
    max_resample: usize,
    seeding: SeedingRule,
}

impl Simulator {
    pub fn compile(
        circuit: &Circuit,
        series_for_seeding: Option<&FightSeries>,
        config: &SimConfig,
    ) -> Result<Self> {
        let roster = circuit.roster();
        config.validate(roster.size())?;
        let baseline: Vec<f64> = roster
            .ids()
            .iter()
            .map(|id| circuit.baseline[id])
            .collect();
        let mut edges = Vec::with_capacity(circuit.edges.len());
        for e in &circuit.edges {
            let src = roster.mask_for(&e.source)?;
            let tgt = roster.mask_for(&e.target)?;
            edges.push((src, tgt.ones(), e.weight));
        }
        let seed_pool = match config.seeding {
            SeedingRule::EmpiricalFirst => {
                let series = series_for_seeding.ok_or(Error::MissingSeedSeries)?;
                if series.is_empty() {
                    return Err(Error::EmptySeries);
                }
                if series.roster() != &roster {
                    return Err(Error::RosterMismatch {
                        left: series.roster().size(),
                        right: roster.size(),
                    });
                }
                Some(
                    series
                        .events()
                        .iter()
                        .map(|ev| ev.participants.clone())
                        .collect(),
                )
            }
            SeedingRule::RandomPair => None,
        };
        Ok(Self {
            roster,
            baseline,
            edges,
            combine: circuit.variant.combine,
            seed_pool,
            min_fight_size: config.min_fight_size,
            max_resample: config.max_resample,
            seeding: config.seeding,
        })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    /// A fresh event from the seeding rule.
    pub fn seed_event(&self, rng: &mut ChaCha8Rng) -> Bitset {
        match self.seeding {
            SeedingRule::EmpiricalFirst => {
                let pool = self.seed_pool.as_ref().expect("pool checked at compile");
                pool[rng.random_range(0..pool.len())].clone()
            }
            SeedingRule::RandomPair => {
                let n = self.roster.size();
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Bitset::from_indices(n, &[a, b])
            }
        }
    }

    /// Per-individual join probabilities given the previous event.
    pub fn join_probabilities(&self, previous: &Bitset) -> Vec<f64> {
        let n = self.roster.size();
        let mut contrib = vec![0.0f64; n];
        match self.combine {
            CombineRule::Sum => {
                for (src, members, w) in &self.edges {
                    if previous.contains_all(src) {
                        for &x in members {
                            contrib[x] += w;
                        }
                    }
                }
            }
            CombineRule::MaxMagnitude => {
                for (src, members, w) in &self.edges {
                    if previous.contains_all(src) {
                        for &x in members {
                            if w.abs() > contrib[x].abs() {
                                contrib[x] = *w;
                            }
                        }
                    }
                }
            }
        }
        (0..n)
            .map(|x| (self.baseline[x] + contrib[x]).clamp(0.0, 1.0))
            .collect()
    }

    /// One Markov step. Resamples small draws, then falls back to a seed
    /// event, so it always returns.
    pub fn step(&self, previous: &Bitset, rng: &mut ChaCha8Rng) -> Bitset {
        let q = self.join_probabilities(previous);
        for _ in 0..=self.max_resample {
            let mut next = Bitset::new(self.roster.size());
            for (x, &qx) in q.iter().enumerate() {
                if rng.random::<f64>() < qx {
                    next.insert(x);
                }
            }
            if next.count_ones() >= self.min_fight_size {
                return next;
            }
        }
        self.seed_event(rng)
    }
}

/// A synthetic series of exactly `config.n_events` events: a seed event
/// followed by Markov steps. Bitwise deterministic in `config.seed`.
pub fn simulate(
    circuit: &Circuit,
    series_for_seeding: Option<&FightSeries>,
    config: &SimConfig,
) -> Result<FightSeries> {
    let sim = Simulator::compile(circuit, series_for_seeding, config)?;
    let mut rng = stream_rng(config.seed, "simulate:run", 0);
    let mut events = Vec::with_capacity(config.n_events);
    events.push(sim.seed_event(&mut rng));
    while events.len() < config.n_events {
        let next = sim.step(events.last().unwrap(), &mut rng);
        events.push(next);
    }
    let roster = sim.roster().clone();
    FightSeries::new(roster, events)
}
