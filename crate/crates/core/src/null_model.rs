//! Time-permutation null model.
//!
//! Surrogates shuffle the order of events only; participation within each
//! event is never touched. Follow counts accumulated over the ensemble give
//! the null expectation and dispersion for every (source tuple, target
//! tuple) key, plus an empirical extremeness tally for p-values.
//!
//! Determinism: each permutation's ordering is a pure function of
//! `(master_seed, perm_index)`, and ensemble accumulation is integer
//! (order-independent), so results are bitwise identical at any thread
//! count.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::event_store::FightSeries;
use crate::seed::stream_rng;

/// Orderings allowed in exhaustive mode (T! must not exceed this).
pub const EXHAUSTIVE_CAP: u128 = 1_000_000;

/// Tie tolerance when comparing a permuted deviation against the observed
/// deviation; counts are integers so this only absorbs float rounding of
/// the mean.
const EXTREME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMode {
    MonteCarlo,
    Exhaustive,
}

/// Ensemble configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NullConfig {
    pub n_permutations: usize,
    pub master_seed: u64,
    pub mode: NullMode,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            n_permutations: 1000,
            master_seed: 0,
            mode: NullMode::MonteCarlo,
        }
    }
}

fn factorial_u128(n: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for k in 2..=n as u128 {
        acc = acc.checked_mul(k)?;
        if acc > EXHAUSTIVE_CAP {
            return Some(acc); // already over the cap; exact value not needed
        }
    }
    Some(acc)
}

impl NullConfig {
    /// Check the configuration against a series length.
    pub fn validate(&self, n_events: usize) -> Result<()> {
        if self.n_permutations == 0 && self.mode == NullMode::MonteCarlo {
            return Err(Error::InvalidConfig(
                "n_permutations must be at least 1".into(),
            ));
        }
        if self.mode == NullMode::Exhaustive {
            let orderings = factorial_u128(n_events).unwrap_or(u128::MAX);
            if orderings > EXHAUSTIVE_CAP {
                return Err(Error::ExhaustiveTooLarge {
                    n_events,
                    n_orderings: orderings,
                    cap: EXHAUSTIVE_CAP,
                });
            }
        }
        Ok(())
    }
}

/// The ordering used for permutation `perm_index`: a Fisher-Yates shuffle of
/// `0..n_events` driven by the labeled stream for that index.
pub fn permutation_order(n_events: usize, master_seed: u64, perm_index: u64) -> Vec<usize> {
    let mut rng = stream_rng(master_seed, "null_model:permute", perm_index);
    let mut order: Vec<usize> = (0..n_events).collect();
    for i in (1..n_events).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// One time-permuted surrogate. The event multiset (and hence every
/// participation count) is preserved; only the order changes.
pub fn permute_series(
    series: &FightSeries,
    perm_index: u64,
    master_seed: u64,
) -> Result<FightSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let order = permutation_order(series.len(), master_seed, perm_index);
    Ok(series.reordered(&order))
}

// ---------------------------------------------------------------------------
// Follow-count engine
// ---------------------------------------------------------------------------

/// Precomputed per-event presence lists for a set of source and target keys.
///
/// Presence is subset containment: key k is "present" in event e when every
/// member of k participates in e. Orderings only permute event indices, so
/// presence is computed once and reused across the whole ensemble.
pub struct FollowCountEngine {
    n_src: usize,
    n_tgt: usize,
    n_events: usize,
    src_present: Vec<Vec<u32>>,
    tgt_present: Vec<Vec<u32>>,
}

impl FollowCountEngine {
    /// Build presence lists by testing every key mask against every event.
    pub fn from_masks(series: &FightSeries, src_masks: &[Bitset], tgt_masks: &[Bitset]) -> Self {
        let presence = |masks: &[Bitset]| -> Vec<Vec<u32>> {
            series
                .events()
                .iter()
                .map(|ev| {
                    masks
                        .iter()
                        .enumerate()
                        .filter(|(_, m)| ev.participants.contains_all(m))
                        .map(|(i, _)| i as u32)
                        .collect()
                })
                .collect()
        };
        Self {
            n_src: src_masks.len(),
            n_tgt: tgt_masks.len(),
            n_events: series.len(),
            src_present: presence(src_masks),
            tgt_present: presence(tgt_masks),
        }
    }

    /// Build from precomputed presence lists (used when keys are enumerated
    /// from the events themselves rather than given as masks).
    pub fn from_presence(
        n_src: usize,
        n_tgt: usize,
        src_present: Vec<Vec<u32>>,
        tgt_present: Vec<Vec<u32>>,
    ) -> Self {
        assert_eq!(src_present.len(), tgt_present.len());
        let n_events = src_present.len();
        Self {
            n_src,
            n_tgt,
            n_events,
            src_present,
            tgt_present,
        }
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_tgt(&self) -> usize {
        self.n_tgt
    }

    fn key_count(&self) -> usize {
        self.n_src * self.n_tgt
    }

    /// Follow counts under the ordering where slot t holds original event
    /// `order[t]`. `out` is a dense (src, tgt) matrix, row-major by source.
    fn counts_for_order(&self, order: &[usize], out: &mut [u32]) {
        debug_assert_eq!(out.len(), self.key_count());
        out.fill(0);
        for t in 1..order.len() {
            let prev = &self.src_present[order[t - 1]];
            let next = &self.tgt_present[order[t]];
            for &s in prev {
                let row = s as usize * self.n_tgt;
                for &g in next {
                    out[row + g as usize] += 1;
                }
            }
        }
    }

    /// Follow counts for the observed (identity) ordering.
    pub fn observed_counts(&self) -> Vec<u32> {
        let order: Vec<usize> = (0..self.n_events).collect();
        let mut out = vec![0u32; self.key_count()];
        self.counts_for_order(&order, &mut out);
        out
    }

    /// Number of events with the source key present at slots 0..T-2 under
    /// the identity ordering (the Eq-style source normalizer).
    pub fn observed_source_counts(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.n_src];
        for pres in &self.src_present[..self.n_events.saturating_sub(1)] {
            for &s in pres {
                out[s as usize] += 1;
            }
        }
        out
    }

    /// Run the full two-pass ensemble: mean/variance accumulation, then an
    /// extremeness tally of each permutation against the observed counts.
    pub fn null_ensemble(&self, config: &NullConfig) -> Result<NullEnsemble> {
        config.validate(self.n_events)?;
        if self.n_events == 0 {
            return Err(Error::EmptySeries);
        }
        let observed = self.observed_counts();

        // Pass 1: integer moment sums over the ensemble.
        let (sum, sumsq, n_used) = match config.mode {
            NullMode::MonteCarlo => self.moments_monte_carlo(config),
            NullMode::Exhaustive => self.moments_exhaustive(),
        };

        let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / n_used as f64).collect();

        // Pass 2: count permutations at least as extreme as the observation,
        // per key, two-sided around the null mean.
        let thresholds: Vec<f64> = observed
            .iter()
            .zip(&mean)
            .map(|(&o, &m)| (o as f64 - m).abs() - EXTREME_EPS)
            .collect();
        let extreme = match config.mode {
            NullMode::MonteCarlo => self.extreme_monte_carlo(config, &mean, &thresholds),
            NullMode::Exhaustive => self.extreme_exhaustive(&mean, &thresholds),
        };

        let variance: Vec<f64> = sumsq
            .iter()
            .zip(&mean)
            .map(|(&sq, &m)| (sq as f64 / n_used as f64 - m * m).max(0.0))
            .collect();

        Ok(NullEnsemble {
            n_src: self.n_src,
            n_tgt: self.n_tgt,
            n_used,
            observed,
            source_counts: self.observed_source_counts(),
            mean,
            variance,
            extreme,
        })
    }

    fn moments_monte_carlo(&self, config: &NullConfig) -> (Vec<u64>, Vec<u64>, u64) {
        let keys = self.key_count();
        let t_len = self.n_events;
        let (sum, sumsq) = (0..config.n_permutations as u64)
            .into_par_iter()
            .fold(
                || (vec![0u64; keys], vec![0u64; keys], vec![0u32; keys]),
                |(mut sum, mut sumsq, mut buf), k| {
                    let order = permutation_order(t_len, config.master_seed, k);
                    self.counts_for_order(&order, &mut buf);
                    for (i, &c) in buf.iter().enumerate() {
                        let c = c as u64;
                        sum[i] += c;
                        sumsq[i] += c * c;
                    }
                    (sum, sumsq, buf)
                },
            )
            .map(|(sum, sumsq, _)| (sum, sumsq))
            .reduce(
                || (vec![0u64; keys], vec![0u64; keys]),
                |(mut a, mut b), (c, d)| {
                    for i in 0..keys {
                        a[i] += c[i];
                        b[i] += d[i];
                    }
                    (a, b)
                },
            );
        (sum, sumsq, config.n_permutations as u64)
    }

    fn moments_exhaustive(&self) -> (Vec<u64>, Vec<u64>, u64) {
        let keys = self.key_count();
        let mut sum = vec![0u64; keys];
        let mut sumsq = vec![0u64; keys];
        let mut buf = vec![0u32; keys];
        let mut n: u64 = 0;
        for_each_permutation(self.n_events, |order| {
            self.counts_for_order(order, &mut buf);
            for (i, &c) in buf.iter().enumerate() {
                let c = c as u64;
                sum[i] += c;
                sumsq[i] += c * c;
            }
            n += 1;
        });
        (sum, sumsq, n)
    }

    fn extreme_monte_carlo(
        &self,
        config: &NullConfig,
        mean: &[f64],
        thresholds: &[f64],
    ) -> Vec<u64> {
        let keys = self.key_count();
        let t_len = self.n_events;
        (0..config.n_permutations as u64)
            .into_par_iter()
            .fold(
                || (vec![0u64; keys], vec![0u32; keys]),
                |(mut extreme, mut buf), k| {
                    let order = permutation_order(t_len, config.master_seed, k);
                    self.counts_for_order(&order, &mut buf);
                    for (i, &c) in buf.iter().enumerate() {
                        if (c as f64 - mean[i]).abs() >= thresholds[i] {
                            extreme[i] += 1;
                        }
                    }
                    (extreme, buf)
                },
            )
            .map(|(extreme, _)| extreme)
            .reduce(
                || vec![0u64; keys],
                |mut a, b| {
                    for i in 0..keys {
                        a[i] += b[i];
                    }
                    a
                },
            )
    }

    fn extreme_exhaustive(&self, mean: &[f64], thresholds: &[f64]) -> Vec<u64> {
        let keys = self.key_count();
        let mut extreme = vec![0u64; keys];
        let mut buf = vec![0u32; keys];
        for_each_permutation(self.n_events, |order| {
            self.counts_for_order(order, &mut buf);
            for (i, &c) in buf.iter().enumerate() {
                if (c as f64 - mean[i]).abs() >= thresholds[i] {
                    extreme[i] += 1;
                }
            }
        });
        extreme
    }
}

/// Visit every permutation of `0..n` exactly once (Heap's algorithm).
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..n).collect();
    if n == 0 {
        return;
    }
    let mut c = vec![0usize; n];
    visit(&items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(&items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Ensemble results
// ---------------------------------------------------------------------------

/// Dense per-key ensemble statistics from `FollowCountEngine::null_ensemble`.
pub struct NullEnsemble {
    n_src: usize,
    n_tgt: usize,
    pub n_used: u64,
    observed: Vec<u32>,
    source_counts: Vec<u32>,
    mean: Vec<f64>,
    variance: Vec<f64>,
    extreme: Vec<u64>,
}

impl NullEnsemble {
    #[inline]
    fn idx(&self, s: usize, t: usize) -> usize {
        debug_assert!(s < self.n_src && t < self.n_tgt);
        s * self.n_tgt + t
    }

    pub fn observed(&self, s: usize, t: usize) -> u32 {
        self.observed[self.idx(s, t)]
    }

    /// N(i): events containing source i at slots 0..T-2, identity order.
    pub fn source_count(&self, s: usize) -> u32 {
        self.source_counts[s]
    }

    pub fn mean(&self, s: usize, t: usize) -> f64 {
        self.mean[self.idx(s, t)]
    }

    pub fn variance(&self, s: usize, t: usize) -> f64 {
        self.variance[self.idx(s, t)]
    }

    pub fn std(&self, s: usize, t: usize) -> f64 {
        self.variance(s, t).sqrt()
    }

    /// Two-sided empirical p-value with add-one smoothing.
    pub fn p_value(&self, s: usize, t: usize) -> f64 {
        (self.extreme[self.idx(s, t)] + 1) as f64 / (self.n_used + 1) as f64
    }
}

// ---------------------------------------------------------------------------
// Public null_stats operation
// ---------------------------------------------------------------------------

/// Null statistics for one (source tuple, target tuple) key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullEntry {
    pub mean: f64,
    pub variance: f64,
    pub observed_follow: u32,
    pub extreme_count: u64,
    pub p_value: f64,
}

/// Null expectations for a set of keys, serialized as JSON keyed by
/// `"src|dst"` with IDs sorted within a tuple and joined by `+`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullStats {
    pub n_permutations_used: u64,
    pub entries: BTreeMap<String, NullEntry>,
}

/// Canonical string key for a (source, target) tuple pair.
pub fn null_key(source: &[String], target: &[String]) -> String {
    let mut s: Vec<&str> = source.iter().map(|x| x.as_str()).collect();
    let mut t: Vec<&str> = target.iter().map(|x| x.as_str()).collect();
    s.sort_unstable();
    t.sort_unstable();
    format!("{}|{}", s.join("+"), t.join("+"))
}

impl NullStats {
    pub fn get(&self, source: &[String], target: &[String]) -> Option<&NullEntry> {
        self.entries.get(&null_key(source, target))
    }
}

/// Mean and variance (plus extremeness against the observed series) of the
/// follow count over the permutation ensemble, for each requested pair of
/// tuples. Tuples are ID lists; membership is subset containment.
pub fn null_stats(
    series: &FightSeries,
    tuples: &[(Vec<String>, Vec<String>)],
    config: &NullConfig,
) -> Result<NullStats> {
    if tuples.is_empty() {
        return Err(Error::InvalidConfig("no tuple pairs requested".into()));
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }

    // Distinct masks on each side; the engine computes the full cross grid
    // and the requested pairs are read off it.
    let mut src_masks: Vec<Bitset> = Vec::new();
    let mut tgt_masks: Vec<Bitset> = Vec::new();
    let mut src_index: HashMap<Bitset, usize> = HashMap::new();
    let mut tgt_index: HashMap<Bitset, usize> = HashMap::new();
    let mut pair_ids = Vec::with_capacity(tuples.len());
    for (src, tgt) in tuples {
        let sm = series.roster().mask_for(src)?;
        let tm = series.roster().mask_for(tgt)?;
        let si = *src_index.entry(sm.clone()).or_insert_with(|| {
            src_masks.push(sm.clone());
            src_masks.len() - 1
        });
        let ti = *tgt_index.entry(tm.clone()).or_insert_with(|| {
            tgt_masks.push(tm.clone());
            tgt_masks.len() - 1
        });
        pair_ids.push((si, ti));
    }

    let engine = FollowCountEngine::from_masks(series, &src_masks, &tgt_masks);
    let ensemble = engine.null_ensemble(config)?;

    let mut entries = BTreeMap::new();
    for ((src, tgt), (si, ti)) in tuples.iter().zip(pair_ids) {
        entries.insert(
            null_key(src, tgt),
            NullEntry {
                mean: ensemble.mean(si, ti),
                variance: ensemble.variance(si, ti),
                observed_follow: ensemble.observed(si, ti),
                extreme_count: ensemble.extreme[ensemble.idx(si, ti)],
                p_value: ensemble.p_value(si, ti),
            },
        );
    }
    Ok(NullStats {
        n_permutations_used: ensemble.n_used,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_store::parse_lines;

    fn abab() -> FightSeries {
        parse_lines("A\nB\nA\nB\n").unwrap()
    }

    fn sorted_multiset(s: &FightSeries) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = s.events().iter().map(|e| e.participants.ones()).collect();
        v.sort();
        v
    }

    #[test]
    fn single_event_series_permutes_to_itself() {
        let s = parse_lines("A,B\n").unwrap();
        for seed in 0..5 {
            let p = permute_series(&s, 0, seed).unwrap();
            assert_eq!(p, s);
        }
    }

    #[test]
    fn two_event_orders_are_roughly_uniform() {
        let s = parse_lines("A\nB\n").unwrap();
        let mut identity = 0usize;
        let n = 10_000;
        for seed in 0..n {
            let p = permute_series(&s, 0, seed as u64).unwrap();
            if p.events()[0].participants.contains(0) {
                identity += 1;
            }
        }
        let freq = identity as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "identity frequency {freq}");
    }

    #[test]
    fn permutation_preserves_event_multiset() {
        let s = parse_lines("A,B\nB,C\nA\nA,B,C\nC\n").unwrap();
        for k in 0..50 {
            let p = permute_series(&s, k, 7).unwrap();
            assert_eq!(sorted_multiset(&p), sorted_multiset(&s));
            assert_eq!(p.participation_counts(), s.participation_counts());
        }
    }

    #[test]
    fn permute_empty_series_errors() {
        let roster = crate::event_store::Roster::new(["A".to_string()]);
        let s = FightSeries::new(roster, vec![]).unwrap();
        assert!(matches!(
            permute_series(&s, 0, 0),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::BTreeSet::new();
        for_each_permutation(4, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn exhaustive_abab_matches_hand_enumeration() {
        // Multiset {A, A, B, B}: over all 24 orderings the A->B follow count
        // averages 1 with variance 1/3 (6 distinct patterns x 4 labelings:
        // AABB:1 ABAB:2 ABBA:1 BAAB:1 BABA:1 BBAA:0).
        let s = abab();
        let cfg = NullConfig {
            n_permutations: 0,
            master_seed: 0,
            mode: NullMode::Exhaustive,
        };
        let pairs = vec![(vec!["A".to_string()], vec!["B".to_string()])];
        let stats = null_stats(&s, &pairs, &cfg).unwrap();
        let e = stats.get(&pairs[0].0, &pairs[0].1).unwrap();
        assert_eq!(stats.n_permutations_used, 24);
        assert!((e.mean - 1.0).abs() < 1e-12, "mean {}", e.mean);
        assert!((e.variance - 1.0 / 3.0).abs() < 1e-12, "var {}", e.variance);
        assert_eq!(e.observed_follow, 2);
    }

    #[test]
    fn monte_carlo_converges_to_exhaustive() {
        let s = abab();
        let pairs = vec![(vec!["A".to_string()], vec!["B".to_string()])];
        let mc = null_stats(
            &s,
            &pairs,
            &NullConfig {
                n_permutations: 50_000,
                master_seed: 11,
                mode: NullMode::MonteCarlo,
            },
        )
        .unwrap();
        let e = mc.get(&pairs[0].0, &pairs[0].1).unwrap();
        // Exhaustive mean 1.0, std sqrt(1/3); 3 standard errors.
        let se = (1.0f64 / 3.0).sqrt() / (50_000f64).sqrt();
        assert!((e.mean - 1.0).abs() < 3.0 * se, "mean {} se {}", e.mean, se);
    }

    #[test]
    fn absent_source_tuple_has_zero_mean_and_variance() {
        let s = parse_lines("A\nB\nA\nB\nC\n").unwrap();
        let pairs = vec![(
            vec!["A".to_string(), "C".to_string()],
            vec!["B".to_string()],
        )];
        let stats = null_stats(&s, &pairs, &NullConfig::default()).unwrap();
        let e = stats.get(&pairs[0].0, &pairs[0].1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.variance, 0.0);
        assert_eq!(e.observed_follow, 0);
        // Every permutation ties the observation exactly, so p = 1.
        assert!((e.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_cap_enforced() {
        let text = (0..11).map(|_| "A\n").collect::<String>();
        let s = parse_lines(&text).unwrap();
        let cfg = NullConfig {
            n_permutations: 0,
            master_seed: 0,
            mode: NullMode::Exhaustive,
        };
        let pairs = vec![(vec!["A".to_string()], vec!["A".to_string()])];
        assert!(matches!(
            null_stats(&s, &pairs, &cfg),
            Err(Error::ExhaustiveTooLarge { .. })
        ));
    }

    #[test]
    fn null_stats_bitwise_deterministic_across_thread_counts() {
        let s = parse_lines("A,B\nB,C\nA\nC\nA,C\nB\nA,B,C\nB\n").unwrap();
        let pairs: Vec<(Vec<String>, Vec<String>)> = ["A", "B", "C"]
            .iter()
            .flat_map(|a| {
                ["A", "B", "C"]
                    .iter()
                    .map(move |b| (vec![a.to_string()], vec![b.to_string()]))
            })
            .collect();
        let cfg = NullConfig {
            n_permutations: 400,
            master_seed: 99,
            mode: NullMode::MonteCarlo,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| serde_json::to_string(&null_stats(&s, &pairs, &cfg).unwrap()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn null_key_sorts_ids_within_tuples() {
        assert_eq!(
            null_key(
                &["B".to_string(), "A".to_string()],
                &["C".to_string()]
            ),
            "A+B|C"
        );
    }
}
