//! Macroscopic and fine-grained comparison statistics between observed and
//! simulated series, circuit-family ranking, and the degeneracy scan.
//!
//! The macroscopic output is the distribution of fight sizes. Families are
//! ranked by Jensen-Shannon divergence between size histograms (base 2, so
//! bounded by 1 bit), with the Kolmogorov-Smirnov statistic as tiebreaker.
//! Fine-grained statistics are per-individual participation rates and
//! per-event pair co-occurrence frequencies, both RMSE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{perturb_circuit, Circuit, PerturbMode};
use crate::error::{Error, Result};
use crate::event_store::FightSeries;
use crate::seed::derive_seed;
use crate::simulate::{simulate, SimConfig};

/// Histogram over event sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FightSizeDistribution {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
}

impl FightSizeDistribution {
    pub fn probabilities(&self) -> BTreeMap<usize, f64> {
        if self.total == 0 {
            return BTreeMap::new();
        }
        self.counts
            .iter()
            .map(|(&size, &c)| (size, c as f64 / self.total as f64))
            .collect()
    }

    pub fn probability_of(&self, size: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(&size).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Histogram of event sizes.
pub fn fight_size_distribution(series: &FightSeries) -> FightSizeDistribution {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for ev in series.events() {
        *counts.entry(ev.size()).or_insert(0) += 1;
    }
    FightSizeDistribution {
        counts,
        total: series.len() as u64,
    }
}

/// Sup-norm distance between the two empirical size CDFs.
pub fn ks_statistic(a: &FightSizeDistribution, b: &FightSizeDistribution) -> f64 {
    let mut support: Vec<usize> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    support.sort_unstable();
    support.dedup();
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut sup = 0.0f64;
    for s in support {
        cdf_a += a.probability_of(s);
        cdf_b += b.probability_of(s);
        sup = sup.max((cdf_a - cdf_b).abs());
    }
    sup
}

/// Jensen-Shannon divergence between size distributions, base 2 (bits).
/// Bounded by 1 for two distributions; defined for disjoint supports.
pub fn js_divergence(a: &FightSizeDistribution, b: &FightSizeDistribution) -> f64 {
    let pa = a.probabilities();
    let pb = b.probabilities();
    let mut support: Vec<usize> = pa.keys().chain(pb.keys()).copied().collect();
    support.sort_unstable();
    support.dedup();
    let entropy_term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    let mut h_m = 0.0;
    let mut h_a = 0.0;
    let mut h_b = 0.0;
    for s in &support {
        let x = pa.get(s).copied().unwrap_or(0.0);
        let y = pb.get(s).copied().unwrap_or(0.0);
        h_a += entropy_term(x);
        h_b += entropy_term(y);
        h_m += entropy_term((x + y) / 2.0);
    }
    (h_m - 0.5 * (h_a + h_b)).max(0.0)
}

/// Macroscopic plus fine-grained discrepancy between two series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ks_statistic: f64,
    pub js_divergence: f64,
    pub per_individual_rate_rmse: f64,
    pub pair_cooccurrence_rmse: f64,
}

fn participation_rates(series: &FightSeries) -> Vec<f64> {
    let t = series.len().max(1) as f64;
    series
        .participation_counts()
        .into_iter()
        .map(|c| c as f64 / t)
        .collect()
}

fn pair_cooccurrence_rates(series: &FightSeries) -> Vec<f64> {
    let n = series.roster().size();
    let t = series.len().max(1) as f64;
    let mut counts = vec![0u64; n * n.saturating_sub(1) / 2];
    for ev in series.events() {
        let members = ev.participants.ones();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                // Upper-triangle index of the pair (i, j), i < j.
                let idx = i * n - i * (i + 1) / 2 + (j - i - 1);
                counts[idx] += 1;
            }
        }
    }
    counts.into_iter().map(|c| c as f64 / t).collect()
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum_sq / a.len() as f64).sqrt()
}

/// Compare two series over the same roster.
pub fn compare(observed: &FightSeries, simulated: &FightSeries) -> Result<ComparisonReport> {
    if observed.roster() != simulated.roster() {
        return Err(Error::RosterMismatch {
            left: observed.roster().size(),
            right: simulated.roster().size(),
        });
    }
    let da = fight_size_distribution(observed);
    let db = fight_size_distribution(simulated);
    Ok(ComparisonReport {
        ks_statistic: ks_statistic(&da, &db),
        js_divergence: js_divergence(&da, &db),
        per_individual_rate_rmse: rmse(
            &participation_rates(observed),
            &participation_rates(simulated),
        ),
        pair_cooccurrence_rmse: rmse(
            &pair_cooccurrence_rates(observed),
            &pair_cooccurrence_rates(simulated),
        ),
    })
}

fn mean_report(reports: &[ComparisonReport]) -> ComparisonReport {
    let n = reports.len().max(1) as f64;
    ComparisonReport {
        ks_statistic: reports.iter().map(|r| r.ks_statistic).sum::<f64>() / n,
        js_divergence: reports.iter().map(|r| r.js_divergence).sum::<f64>() / n,
        per_individual_rate_rmse: reports
            .iter()
            .map(|r| r.per_individual_rate_rmse)
            .sum::<f64>()
            / n,
        pair_cooccurrence_rmse: reports
            .iter()
            .map(|r| r.pair_cooccurrence_rmse)
            .sum::<f64>()
            / n,
    }
}

/// Simulation seed for a circuit replicate, derived from the circuit's
/// content hash. Identical circuits replay identical runs; any change to a
/// weight moves every replicate to a fresh stream.
pub fn replicate_seed(master: u64, circuit: &Circuit, replicate: u64) -> u64 {
    derive_seed(
        master,
        &format!("metrics:sim:{:016x}", circuit.content_hash()),
        replicate,
    )
}

/// One family member with its averaged discrepancy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedCircuit {
    /// Position of the circuit in the input family.
    pub family_index: usize,
    pub variant_label: String,
    pub n_edges: usize,
    pub mean: ComparisonReport,
}

/// Simulate every circuit `replicates` times and rank by mean JS divergence
/// ascending (KS as tiebreaker, then input order). Returns the circuits in
/// ranked order, each paired with its ranking entry.
pub fn rank_family(
    observed: &FightSeries,
    circuits: &[Circuit],
    sim_config: &SimConfig,
    replicates: usize,
) -> Result<Vec<(Circuit, RankedCircuit)>> {
    if replicates == 0 {
        return Err(Error::InvalidConfig("replicates must be at least 1".into()));
    }
    if circuits.is_empty() {
        return Err(Error::InvalidConfig("no circuits to rank".into()));
    }
    let mut entries = Vec::with_capacity(circuits.len());
    for (family_index, circuit) in circuits.iter().enumerate() {
        let mut reports = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let cfg = SimConfig {
                seed: replicate_seed(sim_config.seed, circuit, rep as u64),
                ..*sim_config
            };
            let sim = simulate(circuit, Some(observed), &cfg)?;
            reports.push(compare(observed, &sim)?);
        }
        entries.push((
            circuit.clone(),
            RankedCircuit {
                family_index,
                variant_label: circuit.variant.label(),
                n_edges: circuit.n_edges(),
                mean: mean_report(&reports),
            },
        ));
    }
    // Stable sort keeps input order on exact ties.
    entries.sort_by(|a, b| {
        a.1.mean
            .js_divergence
            .total_cmp(&b.1.mean.js_divergence)
            .then(a.1.mean.ks_statistic.total_cmp(&b.1.mean.ks_statistic))
    });
    Ok(entries)
}

/// Divergence samples for one perturbation mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeScan {
    pub divergences: Vec<f64>,
    pub median: f64,
    pub max: f64,
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Output of `degeneracy_scan`: how far perturbed circuits drift from the
/// reference output, against the same-circuit different-seed floor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// JS divergences of reference re-simulations (seed changes only).
    pub floor: Vec<f64>,
    pub floor_median: f64,
    pub floor_max: f64,
    pub per_mode: BTreeMap<String, ModeScan>,
}

/// For each mode, perturb the reference `n_perturbations` times, simulate
/// each perturbed circuit, and measure the JS divergence of its size
/// distribution from the reference circuit's own simulated output.
///
/// Replicate seeds derive from circuit content, so an identity perturbation
/// (rescale 1.0, jitter 0.0) replays exactly the runs that define the
/// floor: its divergences equal the floor samples element for element.
pub fn degeneracy_scan(
    reference: &Circuit,
    observed: &FightSeries,
    modes: &[PerturbMode],
    n_perturbations: usize,
    sim_config: &SimConfig,
) -> Result<DegeneracyReport> {
    if n_perturbations == 0 {
        return Err(Error::InvalidConfig(
            "n_perturbations must be at least 1".into(),
        ));
    }
    let master = sim_config.seed;
    let sim_with = |circuit: &Circuit, replicate: u64| -> Result<FightSizeDistribution> {
        let cfg = SimConfig {
            seed: replicate_seed(master, circuit, replicate),
            ..*sim_config
        };
        Ok(fight_size_distribution(&simulate(
            circuit,
            Some(observed),
            &cfg,
        )?))
    };

    let reference_dist = sim_with(reference, 0)?;
    let mut floor = Vec::with_capacity(n_perturbations);
    for rep in 1..=n_perturbations {
        let d = sim_with(reference, rep as u64)?;
        floor.push(js_divergence(&reference_dist, &d));
    }

    let mut per_mode = BTreeMap::new();
    for mode in modes {
        let mut divergences = Vec::with_capacity(n_perturbations);
        for i in 1..=n_perturbations {
            let pert_seed = derive_seed(
                master,
                &format!("metrics:degeneracy:{}", mode.label()),
                i as u64,
            );
            let perturbed = perturb_circuit(reference, *mode, pert_seed);
            let d = sim_with(&perturbed, i as u64)?;
            divergences.push(js_divergence(&reference_dist, &d));
        }
        per_mode.insert(
            mode.label(),
            ModeScan {
                median: median_of(&divergences),
                max: divergences.iter().copied().fold(0.0, f64::max),
                divergences,
            },
        );
    }

    Ok(DegeneracyReport {
        floor_median: median_of(&floor),
        floor_max: floor.iter().copied().fold(0.0, f64::max),
        floor,
        per_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitEdge, CircuitVariant, CombineRule, InclusionRule, WeightTreatment};
    use crate::event_store::parse_lines;
    use crate::simulate::SeedingRule;
    use std::collections::BTreeMap as Map;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn variant() -> CircuitVariant {
        CircuitVariant {
            inclusion: InclusionRule::All,
            weight_treatment: WeightTreatment::Measured,
            alpha: 0.05,
            k: 0,
            combine: CombineRule::Sum,
        }
    }

    fn circuit(members: &[&str], baseline: f64, edges: Vec<CircuitEdge>) -> Circuit {
        let b: Map<String, f64> = members.iter().map(|m| (m.to_string(), baseline)).collect();
        Circuit::new("C(2,1)".into(), variant(), b, edges).unwrap()
    }

    #[test]
    fn size_histogram_direct_example() {
        let s = parse_lines("A,B\nB,C\nA\n").unwrap();
        let d = fight_size_distribution(&s);
        assert_eq!(d.total, 3);
        assert_eq!(d.counts[&2], 2);
        assert_eq!(d.counts[&1], 1);
    }

    #[test]
    fn empty_series_has_empty_histogram() {
        let roster = crate::event_store::Roster::new(["A".to_string()]);
        let s = FightSeries::new(roster, vec![]).unwrap();
        let d = fight_size_distribution(&s);
        assert_eq!(d.total, 0);
        assert!(d.counts.is_empty());
        assert!(d.probabilities().is_empty());
    }

    #[test]
    fn compare_series_with_itself_is_all_zero() {
        let s = parse_lines("A,B\nB,C\nA\nA,B,C\n").unwrap();
        let r = compare(&s, &s).unwrap();
        assert_eq!(r.ks_statistic, 0.0);
        assert_eq!(r.js_divergence, 0.0);
        assert_eq!(r.per_individual_rate_rmse, 0.0);
        assert_eq!(r.pair_cooccurrence_rmse, 0.0);
    }

    #[test]
    fn disjoint_size_supports_give_ks_one() {
        let a = parse_lines("A,B\nA,B\nB,C\n").unwrap();
        let b = parse_lines("A,B,C\nA,B,C\nA,B,C\n").unwrap();
        let ra = fight_size_distribution(&a);
        let rb = fight_size_distribution(&b);
        assert_eq!(ks_statistic(&ra, &rb), 1.0);
    }

    #[test]
    fn hand_computed_ks_and_js_fixture() {
        // Sizes {2,2,3,3} vs {2,3,3,5}:
        //   P = {2: 1/2, 3: 1/2},  Q = {2: 1/4, 3: 1/2, 5: 1/4}
        //   KS: max |CDF diff| = 1/4 at size 2 (and 3).
        //   JS: H(P) = 1, H(Q) = 1.5,
        //       M = {2: 3/8, 3: 1/2, 5: 1/8}, H(M) = (3/8)(3 - lg 3) + 7/8
        //       JS = H(M) - 1.25 = 0.1556390...
        let s1 = parse_lines("A,B\nB,C\nA,B,C\nA,B,D\n").unwrap();
        let s2 = parse_lines("A,B\nA,B,C\nB,C,D\nA,B,C,D,E\n").unwrap();
        let d1 = fight_size_distribution(&s1);
        let d2 = fight_size_distribution(&s2);
        assert!((ks_statistic(&d1, &d2) - 0.25).abs() < 1e-12);
        let expected_js = {
            let lg3 = 3.0f64.log2();
            (3.0 / 8.0) * (3.0 - lg3) + 7.0 / 8.0 - 1.25
        };
        assert!((js_divergence(&d1, &d2) - expected_js).abs() < 1e-12);
        assert!((expected_js - 0.155639).abs() < 1e-6);
    }

    #[test]
    fn comparison_metrics_are_symmetric() {
        let a = parse_lines("A,B\nB,C\nA\nB\nA,C\n").unwrap();
        let b = parse_lines("A\nB,C\nA,B,C\nC\nA,B\n").unwrap();
        let r1 = compare(&a, &b).unwrap();
        let r2 = compare(&b, &a).unwrap();
        assert_eq!(r1.ks_statistic, r2.ks_statistic);
        assert_eq!(r1.js_divergence, r2.js_divergence);
    }

    #[test]
    fn roster_mismatch_is_rejected() {
        let a = parse_lines("A,B\n").unwrap();
        let b = parse_lines("A,C\n").unwrap();
        assert!(matches!(compare(&a, &b), Err(Error::RosterMismatch { .. })));
    }

    #[test]
    fn js_is_bounded_by_one_bit() {
        let a = parse_lines("A,B\nA,B\n").unwrap();
        let b = parse_lines("A,B,C\nA,B,C\n").unwrap();
        let d = js_divergence(&fight_size_distribution(&a), &fight_size_distribution(&b));
        assert!(d > 0.99 && d <= 1.0, "disjoint supports give 1 bit, got {d}");
    }

    #[test]
    fn ranking_single_circuit_works() {
        let obs = parse_lines("A,B\nB,C\nA,C\nA,B\n").unwrap();
        let c = circuit(&["A", "B", "C"], 0.4, vec![]);
        let cfg = SimConfig {
            n_events: 200,
            seed: 1,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 1,
            max_resample: 10,
        };
        let ranked = rank_family(&obs, &[c], &cfg, 2).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].1.family_index, 0);
    }

    #[test]
    fn identical_circuits_tie_and_keep_input_order() {
        let obs = parse_lines("A,B\nB,C\nA,C\nA,B\nB,C\n").unwrap();
        let c = circuit(&["A", "B", "C"], 0.4, vec![]);
        let cfg = SimConfig {
            n_events: 300,
            seed: 9,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 1,
            max_resample: 10,
        };
        let ranked = rank_family(&obs, &[c.clone(), c], &cfg, 2).unwrap();
        // Content-derived seeds make the replicate runs identical, so the
        // mean reports tie exactly and the stable sort keeps input order.
        assert_eq!(ranked[0].1.mean, ranked[1].1.mean);
        assert_eq!(ranked[0].1.family_index, 0);
        assert_eq!(ranked[1].1.family_index, 1);
    }

    #[test]
    fn true_generator_outranks_zero_edge_circuit() {
        // Generate observed data from a strongly structured circuit, then
        // rank it against a baseline-only rival.
        let members = ["A", "B", "C", "D", "E", "F"];
        let edges = vec![
            CircuitEdge { source: ids(&["A", "B"]), target: ids(&["C"]), weight: 0.8 },
            CircuitEdge { source: ids(&["D"]), target: ids(&["E"]), weight: 0.6 },
        ];
        let truth = circuit(&members, 0.25, edges);
        let rival = circuit(&members, 0.25, vec![]);
        let gen_cfg = SimConfig {
            n_events: 3000,
            seed: 77,
            seeding: SeedingRule::RandomPair,
            min_fight_size: 2,
            max_resample: 30,
        };
        let observed = simulate(&truth, None, &gen_cfg).unwrap();
        let rank_cfg = SimConfig {
            n_events: 3000,
            seed: 101,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 2,
            max_resample: 30,
        };
        let ranked = rank_family(&observed, &[rival, truth.clone()], &rank_cfg, 3).unwrap();
        assert_eq!(ranked[0].0, truth, "the generator should rank first");
    }

    #[test]
    fn identity_perturbations_replay_the_floor_exactly() {
        let members = ["A", "B", "C", "D", "E"];
        let edges = vec![
            CircuitEdge { source: ids(&["A", "B"]), target: ids(&["C"]), weight: 0.7 },
            CircuitEdge { source: ids(&["C"]), target: ids(&["D"]), weight: -0.4 },
        ];
        let c = circuit(&members, 0.3, edges);
        let obs_cfg = SimConfig {
            n_events: 400,
            seed: 3,
            seeding: SeedingRule::RandomPair,
            min_fight_size: 2,
            max_resample: 20,
        };
        let observed = simulate(&c, None, &obs_cfg).unwrap();
        let scan_cfg = SimConfig {
            n_events: 800,
            seed: 55,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 2,
            max_resample: 20,
        };
        let report = degeneracy_scan(
            &c,
            &observed,
            &[PerturbMode::Rescale(1.0), PerturbMode::Jitter(0.0)],
            6,
            &scan_cfg,
        )
        .unwrap();
        for scan in report.per_mode.values() {
            assert_eq!(scan.divergences, report.floor);
            assert!(scan.max <= report.floor_max);
        }
        // The floor itself is nonzero noise, not all zeros.
        assert!(report.floor_max > 0.0);
    }

    #[test]
    fn real_perturbations_move_away_from_the_floor() {
        let members = ["A", "B", "C", "D", "E", "F"];
        // Heterogeneous baselines so relocating a strong weight matters.
        let b: Map<String, f64> = members
            .iter()
            .enumerate()
            .map(|(i, m)| (m.to_string(), if i < 2 { 0.45 } else { 0.08 }))
            .collect();
        let edges = vec![
            CircuitEdge { source: ids(&["A", "B"]), target: ids(&["C"]), weight: 0.9 },
            CircuitEdge { source: ids(&["E", "F"]), target: ids(&["D"]), weight: 0.0 },
            CircuitEdge { source: ids(&["A"]), target: ids(&["D"]), weight: 0.0 },
            CircuitEdge { source: ids(&["B"]), target: ids(&["E"]), weight: 0.0 },
        ];
        let c = Circuit::new("C(2,1)".into(), variant(), b, edges).unwrap();
        let obs = simulate(
            &c,
            None,
            &SimConfig {
                n_events: 500,
                seed: 2,
                seeding: SeedingRule::RandomPair,
                min_fight_size: 2,
                max_resample: 20,
            },
        )
        .unwrap();
        let scan_cfg = SimConfig {
            n_events: 4000,
            seed: 13,
            seeding: SeedingRule::EmpiricalFirst,
            min_fight_size: 2,
            max_resample: 20,
        };
        let report =
            degeneracy_scan(&c, &obs, &[PerturbMode::ShuffleWeights], 8, &scan_cfg).unwrap();
        let scan = &report.per_mode["shuffle_weights"];
        assert!(
            scan.median > report.floor_median,
            "shuffling a strong edge should exceed the floor: {} vs {}",
            scan.median,
            report.floor_median
        );
    }
}
