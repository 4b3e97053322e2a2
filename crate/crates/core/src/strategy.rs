//! Strategy-class enumeration and directed ΔP edge measurement.
//!
//! For a class C(n, m), every n-tuple i and m-tuple j define a candidate
//! edge scored as
//!
//! ```text
//! dp(i -> j) = (follow(i, j) - null_mean(i, j)) / source_count(i)
//! ```
//!
//! where `follow` counts events containing j immediately after an event
//! containing i, `source_count` counts events containing i anywhere it
//! could act as a source (all but the last slot), and `null_mean` is the
//! same follow count averaged over time permutations. Positive values mean
//! j joins after i more often than chance; negative values mean avoidance.
//!
//! Tuples are unordered: membership is subset containment and tuples are
//! canonicalized as sorted ID lists.

use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::event_store::FightSeries;
use crate::null_model::{FollowCountEngine, NullConfig, NullStats};

/// Hypothesis family: an m-tuple's participation at t depends on an
/// n-tuple's participation at t-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyClass {
    pub n: usize,
    pub m: usize,
}

/// Largest tuple width on either side.
pub const MAX_TUPLE: usize = 5;

impl StrategyClass {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if !(1..=MAX_TUPLE).contains(&n) || !(1..=MAX_TUPLE).contains(&m) {
            return Err(Error::InvalidConfig(format!(
                "strategy class sizes must be in 1..={MAX_TUPLE}, got ({n}, {m})"
            )));
        }
        Ok(Self { n, m })
    }

    pub fn label(&self) -> String {
        format!("C({},{})", self.n, self.m)
    }

    /// Parse `"C(2,1)"` or `"2,1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let inner = text
            .trim()
            .trim_start_matches(['C', 'c'])
            .trim_start_matches('(')
            .trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "cannot parse strategy class from {text:?}"
            )));
        }
        let n = parts[0]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad tuple size {:?}", parts[0])))?;
        let m = parts[1]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad tuple size {:?}", parts[1])))?;
        Self::new(n, m)
    }

    /// Exact number of (source, target) tuple pairs before any support
    /// filtering: C(R, n) * C(R, m).
    pub fn candidate_edge_count(&self, roster_size: usize) -> u128 {
        binomial(roster_size as u128, self.n as u128) * binomial(roster_size as u128, self.m as u128)
    }
}

impl std::fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// One measured strategic edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPEdge {
    #[serde(rename = "src")]
    pub source: Vec<String>,
    #[serde(rename = "dst")]
    pub target: Vec<String>,
    #[serde(rename = "dp")]
    pub delta_p: f64,
    #[serde(rename = "n_src")]
    pub n_source: u32,
    pub n_follow: u32,
    pub null_mean: f64,
    pub null_std: f64,
    #[serde(rename = "z")]
    pub z_score: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
}

impl DeltaPEdge {
    /// Assemble an edge from raw counts and null moments. `n_source` must
    /// be positive; the caller enforces the no-observations case.
    pub fn from_parts(
        source: Vec<String>,
        target: Vec<String>,
        n_source: u32,
        n_follow: u32,
        null_mean: f64,
        null_std: f64,
        p_value: f64,
    ) -> Self {
        debug_assert!(n_source > 0);
        let excess = n_follow as f64 - null_mean;
        let delta_p = excess / n_source as f64;
        let z_score = if null_std > 0.0 { excess / null_std } else { 0.0 };
        Self {
            source,
            target,
            delta_p,
            n_source,
            n_follow,
            null_mean,
            null_std,
            z_score,
            p_value,
        }
    }
}

fn mask_source_count(series: &FightSeries, mask: &Bitset) -> u32 {
    let events = series.events();
    if events.len() < 2 {
        return 0;
    }
    events[..events.len() - 1]
        .iter()
        .filter(|e| e.participants.contains_all(mask))
        .count() as u32
}

fn mask_follow_count(series: &FightSeries, src: &Bitset, dst: &Bitset) -> u32 {
    let events = series.events();
    let mut count = 0;
    for t in 1..events.len() {
        if events[t - 1].participants.contains_all(src) && events[t].participants.contains_all(dst)
        {
            count += 1;
        }
    }
    count
}

/// N(i): events at slots 0..T-2 whose participants contain every member of
/// the tuple.
pub fn source_count(series: &FightSeries, tuple: &[String]) -> Result<u32> {
    let mask = series.roster().mask_for(tuple)?;
    Ok(mask_source_count(series, &mask))
}

/// N(j_t | i_{t-1}): slots t in 1..T-1 with i in event t-1 and j in event t.
pub fn follow_count(series: &FightSeries, source: &[String], target: &[String]) -> Result<u32> {
    let src = series.roster().mask_for(source)?;
    let dst = series.roster().mask_for(target)?;
    Ok(mask_follow_count(series, &src, &dst))
}

/// Score a single edge against precomputed null statistics.
pub fn delta_p(
    series: &FightSeries,
    source: &[String],
    target: &[String],
    null: &NullStats,
) -> Result<DeltaPEdge> {
    let src_mask = series.roster().mask_for(source)?;
    let dst_mask = series.roster().mask_for(target)?;
    let n_source = mask_source_count(series, &src_mask);
    let source_ids = series.roster().names_for(&src_mask);
    let target_ids = series.roster().names_for(&dst_mask);
    if n_source == 0 {
        return Err(Error::NoObservations { tuple: source_ids });
    }
    let entry = null
        .get(source, target)
        .ok_or_else(|| Error::MissingNullKey {
            key: crate::null_model::null_key(source, target),
        })?;
    let n_follow = mask_follow_count(series, &src_mask, &dst_mask);
    Ok(DeltaPEdge::from_parts(
        source_ids,
        target_ids,
        n_source,
        n_follow,
        entry.mean,
        entry.variance.sqrt(),
        entry.p_value,
    ))
}

/// Whether source and target tuples may share members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Keep every ordered pair, including i -> i and overlapping tuples.
    #[default]
    AllowAll,
    /// Drop pairs whose tuples share any member.
    RequireDisjoint,
}

/// Knobs for `extract_all_with`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Minimum N(i) for a source tuple to be scored.
    pub min_source_count: u32,
    pub overlap: OverlapPolicy,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            min_source_count: 5,
            overlap: OverlapPolicy::AllowAll,
        }
    }
}

/// Sub-tuples of width `k` present in each event, as ids into `index`.
fn per_event_tuple_ids(
    series: &FightSeries,
    k: usize,
    index: &HashMap<Bitset, u32>,
) -> Vec<Vec<u32>> {
    let width = series.roster().size();
    series
        .events()
        .iter()
        .map(|ev| {
            let members = ev.participants.ones();
            if members.len() < k {
                return Vec::new();
            }
            let mut ids: Vec<u32> = members
                .iter()
                .copied()
                .combinations(k)
                .filter_map(|combo| index.get(&Bitset::from_indices(width, &combo)).copied())
                .collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Deterministic edge order: |dp| descending, ties by (source, target).
pub fn sort_edges(edges: &mut [DeltaPEdge]) {
    edges.sort_by(|a, b| {
        b.delta_p
            .abs()
            .total_cmp(&a.delta_p.abs())
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
    });
}

/// Every scored edge of one strategy class, sorted by |dp| descending.
///
/// Sources are the n-tuples observed in at least `min_source_count` events
/// (tuples never observed cannot pass any positive support filter). Targets
/// of width <= 2 are enumerated exhaustively over the roster; wider targets
/// are enumerated from the events themselves, since a tuple that never
/// participates has an identically zero follow count in the data and in
/// every permutation.
pub fn extract_all(
    series: &FightSeries,
    class: StrategyClass,
    null_config: &NullConfig,
    min_source_count: u32,
) -> Result<Vec<DeltaPEdge>> {
    extract_all_with(
        series,
        class,
        null_config,
        ExtractOptions {
            min_source_count,
            ..Default::default()
        },
    )
}

/// `extract_all` with full option control.
pub fn extract_all_with(
    series: &FightSeries,
    class: StrategyClass,
    null_config: &NullConfig,
    opts: ExtractOptions,
) -> Result<Vec<DeltaPEdge>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if opts.min_source_count == 0 {
        return Err(Error::InvalidConfig(
            "min_source_count must be at least 1".into(),
        ));
    }
    let roster_size = series.roster().size();
    let events = series.events();

    // Source tuples with enough support, discovered from the events.
    let mut source_support: HashMap<Bitset, u32> = HashMap::new();
    for ev in &events[..events.len() - 1] {
        let members = ev.participants.ones();
        if members.len() < class.n {
            continue;
        }
        for combo in members.iter().copied().combinations(class.n) {
            *source_support
                .entry(Bitset::from_indices(roster_size, &combo))
                .or_insert(0) += 1;
        }
    }
    let mut src_masks: Vec<Bitset> = source_support
        .iter()
        .filter(|(_, &c)| c >= opts.min_source_count)
        .map(|(m, _)| m.clone())
        .collect();
    src_masks.sort();

    // Target tuples.
    let mut tgt_masks: Vec<Bitset> = if class.m <= 2 {
        (0..roster_size)
            .combinations(class.m)
            .map(|combo| Bitset::from_indices(roster_size, &combo))
            .collect()
    } else {
        let mut seen: HashMap<Bitset, ()> = HashMap::new();
        for ev in &events[1..] {
            let members = ev.participants.ones();
            if members.len() < class.m {
                continue;
            }
            for combo in members.iter().copied().combinations(class.m) {
                seen.entry(Bitset::from_indices(roster_size, &combo))
                    .or_insert(());
            }
        }
        seen.into_keys().collect()
    };
    tgt_masks.sort();

    extract_over_masks(series, &src_masks, &tgt_masks, null_config, opts)
}

/// Shared edge-scoring core for class extraction and sparse-group
/// extraction: given explicit source and target masks, run the null
/// ensemble once over the whole grid and assemble sorted edges.
pub(crate) fn extract_over_masks(
    series: &FightSeries,
    src_masks: &[Bitset],
    tgt_masks: &[Bitset],
    null_config: &NullConfig,
    opts: ExtractOptions,
) -> Result<Vec<DeltaPEdge>> {
    if src_masks.is_empty() || tgt_masks.is_empty() {
        return Ok(Vec::new());
    }
    let src_index: HashMap<Bitset, u32> = src_masks
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i as u32))
        .collect();
    let tgt_index: HashMap<Bitset, u32> = tgt_masks
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i as u32))
        .collect();

    // Presence lists; tuple widths may differ between the two sides (sparse
    // groups), so presence is a direct subset test per mask.
    let uniform_width = |masks: &[Bitset]| {
        let w = masks[0].count_ones();
        masks.iter().all(|m| m.count_ones() == w).then_some(w)
    };
    let src_present = match uniform_width(src_masks) {
        Some(k) => per_event_tuple_ids(series, k, &src_index),
        None => presence_by_subset_test(series, src_masks),
    };
    let tgt_present = match uniform_width(tgt_masks) {
        Some(k) => per_event_tuple_ids(series, k, &tgt_index),
        None => presence_by_subset_test(series, tgt_masks),
    };

    let engine =
        FollowCountEngine::from_presence(src_masks.len(), tgt_masks.len(), src_present, tgt_present);
    let ensemble = engine.null_ensemble(null_config)?;

    let roster = series.roster();
    let mut edges = Vec::with_capacity(src_masks.len() * tgt_masks.len());
    for (si, sm) in src_masks.iter().enumerate() {
        let n_source = ensemble.source_count(si);
        if n_source < opts.min_source_count {
            continue;
        }
        let source_ids = roster.names_for(sm);
        for (ti, tm) in tgt_masks.iter().enumerate() {
            if opts.overlap == OverlapPolicy::RequireDisjoint && sm.intersects(tm) {
                continue;
            }
            edges.push(DeltaPEdge::from_parts(
                source_ids.clone(),
                roster.names_for(tm),
                n_source,
                ensemble.observed(si, ti),
                ensemble.mean(si, ti),
                ensemble.std(si, ti),
                ensemble.p_value(si, ti),
            ));
        }
    }
    sort_edges(&mut edges);
    Ok(edges)
}

fn presence_by_subset_test(series: &FightSeries, masks: &[Bitset]) -> Vec<Vec<u32>> {
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
}

/// Observed-vs-expected significance counts for one class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub class_label: String,
    pub n_edges: u64,
    pub observed_significant: u64,
    pub expected_significant: f64,
    pub ratio: f64,
}

/// How many edges reach `significance_level`, against the uniform-p
/// expectation `significance_level * n_edges`.
pub fn class_enrichment(
    series: &FightSeries,
    class: StrategyClass,
    significance_level: f64,
    null_config: &NullConfig,
    min_source_count: u32,
) -> Result<EnrichmentReport> {
    if !(significance_level > 0.0 && significance_level <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "significance level must be in (0, 1], got {significance_level}"
        )));
    }
    let edges = extract_all(series, class, null_config, min_source_count)?;
    Ok(enrichment_from_edges(&class.label(), &edges, significance_level))
}

/// Enrichment computed from an already-extracted edge list.
pub fn enrichment_from_edges(
    class_label: &str,
    edges: &[DeltaPEdge],
    significance_level: f64,
) -> EnrichmentReport {
    let n_edges = edges.len() as u64;
    let observed = edges
        .iter()
        .filter(|e| e.p_value <= significance_level)
        .count() as u64;
    let expected = significance_level * n_edges as f64;
    let ratio = if n_edges == 0 {
        1.0
    } else {
        observed as f64 / expected
    };
    EnrichmentReport {
        class_label: class_label.to_string(),
        n_edges,
        observed_significant: observed,
        expected_significant: expected,
        ratio,
    }
}

/// Benjamini-Hochberg selection at FDR `q`: keeps edges whose p-value is at
/// or below the BH cutoff, preserving the input order.
pub fn benjamini_hochberg(edges: &[DeltaPEdge], q: f64) -> Vec<DeltaPEdge> {
    let n = edges.len();
    if n == 0 || q <= 0.0 {
        return Vec::new();
    }
    let mut ps: Vec<f64> = edges.iter().map(|e| e.p_value).collect();
    ps.sort_by(f64::total_cmp);
    let mut cutoff = 0.0;
    for (rank, p) in ps.iter().enumerate() {
        if *p <= (rank + 1) as f64 * q / n as f64 {
            cutoff = *p;
        }
    }
    edges
        .iter()
        .filter(|e| e.p_value <= cutoff)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_store::parse_lines;
    use crate::null_model::NullMode;

    fn exhaustive() -> NullConfig {
        NullConfig {
            n_permutations: 0,
            master_seed: 0,
            mode: NullMode::Exhaustive,
        }
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn source_count_examples() {
        let s = parse_lines("A,B\nB,C\nA\n").unwrap();
        assert_eq!(source_count(&s, &ids(&["A"])).unwrap(), 1);
        assert_eq!(source_count(&s, &ids(&["A", "B"])).unwrap(), 1);
        assert_eq!(source_count(&s, &ids(&["C"])).unwrap(), 1);
        assert_eq!(source_count(&s, &ids(&["B"])).unwrap(), 2);
    }

    #[test]
    fn follow_count_examples() {
        let s = parse_lines("A\nB\nA\nB\n").unwrap();
        assert_eq!(follow_count(&s, &ids(&["A"]), &ids(&["B"])).unwrap(), 2);
        assert_eq!(follow_count(&s, &ids(&["B"]), &ids(&["A"])).unwrap(), 1);
        // A source that never occurs never precedes anything.
        let t = parse_lines("A\nB\nC\n").unwrap();
        assert_eq!(
            follow_count(&t, &ids(&["A", "B"]), &ids(&["C"])).unwrap(),
            0
        );
    }

    #[test]
    fn unknown_individual_is_an_error() {
        let s = parse_lines("A\nB\n").unwrap();
        assert!(matches!(
            source_count(&s, &ids(&["Z"])),
            Err(Error::UnknownIndividual { .. })
        ));
    }

    #[test]
    fn delta_p_extremes_from_parts() {
        let e = DeltaPEdge::from_parts(ids(&["A"]), ids(&["B"]), 10, 10, 0.0, 1.0, 0.01);
        assert_eq!(e.delta_p, 1.0);
        let e = DeltaPEdge::from_parts(ids(&["A"]), ids(&["B"]), 10, 0, 10.0, 1.0, 0.01);
        assert_eq!(e.delta_p, -1.0);
        // Degenerate null dispersion pins z at 0.
        let e = DeltaPEdge::from_parts(ids(&["A"]), ids(&["B"]), 5, 3, 1.0, 0.0, 1.0);
        assert_eq!(e.z_score, 0.0);
    }

    #[test]
    fn delta_p_abab_against_exhaustive_null() {
        // Exhaustive mean over 24 orderings is 1.0, observed follow 2,
        // source count 2 => dp = (2 - 1) / 2.
        let s = parse_lines("A\nB\nA\nB\n").unwrap();
        let pairs = vec![(ids(&["A"]), ids(&["B"]))];
        let null = crate::null_model::null_stats(&s, &pairs, &exhaustive()).unwrap();
        let e = delta_p(&s, &pairs[0].0, &pairs[0].1, &null).unwrap();
        assert!((e.delta_p - 0.5).abs() < 1e-12);
        assert_eq!(e.n_source, 2);
        assert_eq!(e.n_follow, 2);
    }

    #[test]
    fn delta_p_requires_observations() {
        let s = parse_lines("A\nB\nA,C\n").unwrap();
        // C appears only in the last event, so N(C) = 0.
        let pairs = vec![(ids(&["C"]), ids(&["A"]))];
        let null = crate::null_model::null_stats(&s, &pairs, &exhaustive()).unwrap();
        assert!(matches!(
            delta_p(&s, &pairs[0].0, &pairs[0].1, &null),
            Err(Error::NoObservations { .. })
        ));
    }

    #[test]
    fn extract_all_1_1_on_three_individuals_is_at_most_nine_edges() {
        let s = parse_lines("A,B\nB,C\nA\nB\nC,A\nB,C\nA,B\n").unwrap();
        let class = StrategyClass::new(1, 1).unwrap();
        let edges = extract_all(&s, class, &exhaustive(), 1).unwrap();
        assert!(edges.len() <= 9);
        assert_eq!(edges.len(), 9); // all three appear before the last event
        assert_eq!(class.candidate_edge_count(3), 9);
    }

    #[test]
    fn candidate_count_at_full_roster_scale() {
        let class = StrategyClass::new(2, 1).unwrap();
        assert_eq!(class.candidate_edge_count(47), 50_807);
    }

    #[test]
    fn extraction_is_deterministic_and_sorted() {
        let s = parse_lines("A,B\nB,C\nA\nB\nC,A\nB,C\nA,B\nC\n").unwrap();
        let cfg = NullConfig {
            n_permutations: 200,
            master_seed: 5,
            mode: NullMode::MonteCarlo,
        };
        let class = StrategyClass::new(1, 1).unwrap();
        let a = extract_all(&s, class, &cfg, 1).unwrap();
        let b = extract_all(&s, class, &cfg, 1).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[0].delta_p.abs() >= w[1].delta_p.abs() - 1e-15);
        }
    }

    #[test]
    fn disjoint_policy_drops_overlapping_pairs() {
        let s = parse_lines("A,B\nB,C\nA,B\nB,C\nA,B\nB,C\n").unwrap();
        let cfg = exhaustive();
        let class = StrategyClass::new(1, 1).unwrap();
        let all = extract_all_with(
            &s,
            class,
            &cfg,
            ExtractOptions {
                min_source_count: 1,
                overlap: OverlapPolicy::AllowAll,
            },
        )
        .unwrap();
        let disjoint = extract_all_with(
            &s,
            class,
            &cfg,
            ExtractOptions {
                min_source_count: 1,
                overlap: OverlapPolicy::RequireDisjoint,
            },
        )
        .unwrap();
        assert!(all.iter().any(|e| e.source == e.target));
        assert!(disjoint.iter().all(|e| e.source != e.target));
        assert!(disjoint.len() < all.len());
    }

    #[test]
    fn naive_recount_oracle_on_synthetic_series() {
        // Independent recount with string sets instead of bitsets.
        use std::collections::BTreeSet;
        let mut text = String::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let roster = ["A", "B", "C", "D", "E", "F"];
        for _ in 0..500 {
            let mut members = BTreeSet::new();
            while members.len() < 1 + (next() % 3) as usize {
                members.insert(roster[(next() % 6) as usize]);
            }
            text.push_str(&members.into_iter().collect::<Vec<_>>().join(","));
            text.push('\n');
        }
        let s = parse_lines(&text).unwrap();

        let sets: Vec<BTreeSet<&str>> = text
            .lines()
            .map(|l| l.split(',').collect::<BTreeSet<_>>())
            .collect();
        let naive_source = |tup: &[&str]| {
            sets[..sets.len() - 1]
                .iter()
                .filter(|s| tup.iter().all(|x| s.contains(x)))
                .count() as u32
        };
        let naive_follow = |i: &[&str], j: &[&str]| {
            (1..sets.len())
                .filter(|&t| {
                    i.iter().all(|x| sets[t - 1].contains(x))
                        && j.iter().all(|x| sets[t].contains(x))
                })
                .count() as u32
        };

        for i in ["A", "C", "F"] {
            for j in ["B", "E"] {
                assert_eq!(
                    source_count(&s, &ids(&[i])).unwrap(),
                    naive_source(&[i]),
                    "source {i}"
                );
                assert_eq!(
                    follow_count(&s, &ids(&[i]), &ids(&[j])).unwrap(),
                    naive_follow(&[i], &[j]),
                    "follow {i}->{j}"
                );
            }
        }
        assert_eq!(
            follow_count(&s, &ids(&["A", "B"]), &ids(&["C", "D"])).unwrap(),
            naive_follow(&["A", "B"], &["C", "D"])
        );
        // Participation counts against the same independent representation.
        let counts = s.named_participation_counts();
        for id in roster {
            let naive = sets.iter().filter(|s| s.contains(id)).count() as u64;
            assert_eq!(counts[id], naive);
        }
    }

    #[test]
    fn enrichment_at_level_one_is_exactly_one() {
        let s = parse_lines("A,B\nB,C\nA\nB\nC,A\nB,C\n").unwrap();
        let r = class_enrichment(
            &s,
            StrategyClass::new(1, 1).unwrap(),
            1.0,
            &exhaustive(),
            1,
        )
        .unwrap();
        assert_eq!(r.observed_significant, r.n_edges);
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn bh_filter_keeps_small_p_edges() {
        let mk = |p: f64| DeltaPEdge::from_parts(ids(&["A"]), ids(&["B"]), 5, 3, 1.0, 1.0, p);
        let edges = vec![mk(0.001), mk(0.2), mk(0.011), mk(0.9)];
        let kept = benjamini_hochberg(&edges, 0.05);
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|e| e.p_value <= 0.011));
    }

    #[test]
    fn class_parsing() {
        assert_eq!(StrategyClass::parse("C(2,1)").unwrap(), StrategyClass { n: 2, m: 1 });
        assert_eq!(StrategyClass::parse("1, 2").unwrap(), StrategyClass { n: 1, m: 2 });
        assert!(StrategyClass::parse("C(0,1)").is_err());
        assert!(StrategyClass::parse("C(6,1)").is_err());
    }
}
