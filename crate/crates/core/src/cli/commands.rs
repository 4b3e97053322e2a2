//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::circuit::{build_family, Circuit, PerturbMode};
use crate::error::{Error, Result};
use crate::event_store::{load_series, FightSeries, SeriesFormat};
use crate::metrics::{
    compare, degeneracy_scan, fight_size_distribution, rank_family, replicate_seed,
    FightSizeDistribution,
};
use crate::null_model::{NullConfig, NullMode};
use crate::simulate::{simulate, SeedingRule, SimConfig};
use crate::sparse::{
    extract_groups, fit_sparse_code, select_lambda, sparse_extract_all, FitOptions, SparseGroup,
    LAMBDA_GRID,
};
use crate::strategy::{
    benjamini_hochberg, enrichment_from_edges, extract_all_with, DeltaPEdge, ExtractOptions,
    OverlapPolicy, StrategyClass,
};

use super::config::{parse_threshold, RunConfig};
use super::svg;

pub fn parse_input_format(text: &str) -> Result<SeriesFormat> {
    match text {
        "lines" => Ok(SeriesFormat::Lines),
        "matrix" => Ok(SeriesFormat::Matrix),
        other => Err(Error::InvalidConfig(format!(
            "unknown input format {other:?} (expected lines or matrix)"
        ))),
    }
}

pub fn parse_seeding(text: &str) -> Result<SeedingRule> {
    match text {
        "empirical_first" => Ok(SeedingRule::EmpiricalFirst),
        "random_pair" => Ok(SeedingRule::RandomPair),
        other => Err(Error::InvalidConfig(format!(
            "unknown seeding rule {other:?} (expected empirical_first or random_pair)"
        ))),
    }
}

pub fn load_filtered(path: &Path, format: SeriesFormat, min_size: usize) -> Result<FightSeries> {
    let series = load_series(path, format)?;
    if min_size > 1 {
        series.filter_min_size(min_size)
    } else {
        Ok(series)
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(p, content)?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

pub fn edges_to_jsonl(edges: &[DeltaPEdge]) -> String {
    let mut out = String::new();
    for e in edges {
        out.push_str(&serde_json::to_string(e).expect("edge serializes"));
        out.push('\n');
    }
    out
}

pub fn edges_to_csv(edges: &[DeltaPEdge]) -> String {
    let mut out = String::from("src,dst,dp,n_src,n_follow,null_mean,null_std,z,p\n");
    for e in edges {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.source.join("+"),
            e.target.join("+"),
            e.delta_p,
            e.n_source,
            e.n_follow,
            e.null_mean,
            e.null_std,
            e.z_score,
            e.p_value
        ));
    }
    out
}

fn render_edges(edges: &[DeltaPEdge], format: &str) -> Result<String> {
    match format {
        "json" => Ok(edges_to_jsonl(edges)),
        "csv" => Ok(edges_to_csv(edges)),
        other => Err(Error::InvalidConfig(format!(
            "unknown output format {other:?} (expected json or csv)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub struct ValidateArgs {
    pub input: PathBuf,
    pub input_format: SeriesFormat,
    pub min_size: usize,
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let series = load_filtered(&args.input, args.input_format, args.min_size)?;
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let summary = series_summary(&series);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn series_summary(series: &FightSeries) -> serde_json::Value {
    let dist = fight_size_distribution(series);
    let sizes: BTreeMap<String, u64> = dist
        .counts
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    serde_json::json!({
        "events": series.len(),
        "roster_size": series.roster().size(),
        "roster": series.roster().ids(),
        "size_histogram": sizes,
        "mean_size": series.events().iter().map(|e| e.size()).sum::<usize>() as f64
            / series.len().max(1) as f64,
    })
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

pub struct ExtractArgs {
    pub input: PathBuf,
    pub input_format: SeriesFormat,
    pub min_size: usize,
    pub class: String,
    pub permutations: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub min_source_count: u32,
    pub exclude_overlapping: bool,
    pub bh_q: f64,
    pub output: Option<PathBuf>,
    pub format: String,
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let series = load_filtered(&args.input, args.input_format, args.min_size)?;
    let class = StrategyClass::parse(&args.class)?;
    let null_config = NullConfig {
        n_permutations: args.permutations,
        master_seed: args.seed,
        mode: if args.exhaustive {
            NullMode::Exhaustive
        } else {
            NullMode::MonteCarlo
        },
    };
    let opts = ExtractOptions {
        min_source_count: args.min_source_count,
        overlap: if args.exclude_overlapping {
            OverlapPolicy::RequireDisjoint
        } else {
            OverlapPolicy::AllowAll
        },
    };
    let mut edges = extract_all_with(&series, class, &null_config, opts)?;
    if args.bh_q > 0.0 {
        edges = benjamini_hochberg(&edges, args.bh_q);
    }
    write_output(args.output.as_deref(), &render_edges(&edges, &args.format)?)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub struct SimulateArgs {
    pub circuit: PathBuf,
    pub n_events: usize,
    pub seed: u64,
    pub seeding: SeedingRule,
    pub series: Option<PathBuf>,
    pub input_format: SeriesFormat,
    pub min_fight_size: usize,
    pub max_resample: usize,
    pub output: Option<PathBuf>,
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path)?;
    let circuit: Circuit = serde_json::from_str(&text)?;
    Ok(circuit)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let circuit = load_circuit(&args.circuit)?;
    let seeding_series = match &args.series {
        Some(p) => Some(load_series(p, args.input_format)?),
        None => None,
    };
    let config = SimConfig {
        n_events: args.n_events,
        seed: args.seed,
        seeding: args.seeding,
        min_fight_size: args.min_fight_size,
        max_resample: args.max_resample,
    };
    let sim = simulate(&circuit, seeding_series.as_ref(), &config)?;
    write_output(args.output.as_deref(), &sim.to_lines_string())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

pub struct CompareArgs {
    pub observed: PathBuf,
    pub simulated: PathBuf,
    pub input_format: SeriesFormat,
    pub format: String,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let obs = load_series(&args.observed, args.input_format)?;
    let sim = load_series(&args.simulated, args.input_format)?;
    let report = compare(&obs, &sim)?;
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&report)?),
        "csv" => {
            println!("ks_statistic,js_divergence,per_individual_rate_rmse,pair_cooccurrence_rmse");
            println!(
                "{},{},{},{}",
                report.ks_statistic,
                report.js_divergence,
                report.per_individual_rate_rmse,
                report.pair_cooccurrence_rmse
            );
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown output format {other:?}"
            )))
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sparse-code / sparse-extract
// ---------------------------------------------------------------------------

pub struct SparseCodeArgs {
    pub input: PathBuf,
    pub input_format: SeriesFormat,
    pub min_size: usize,
    pub k: usize,
    /// Negative selects from the built-in grid.
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub threshold: String,
    pub basis_out: Option<PathBuf>,
    pub groups_out: Option<PathBuf>,
    pub sweep_k: Option<String>,
}

pub fn cmd_sparse_code(args: &SparseCodeArgs) -> Result<()> {
    let series = load_filtered(&args.input, args.input_format, args.min_size)?;
    let opts = FitOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        seed: args.seed,
    };

    if let Some(grid) = &args.sweep_k {
        let ks: Vec<usize> = grid
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad k value {s:?}")))
            })
            .collect::<Result<_>>()?;
        let lambda = if args.lambda < 0.0 { 0.1 } else { args.lambda };
        for k in ks {
            let basis = fit_sparse_code(&series, k, lambda, &opts)?;
            let active = basis.activations.iter().filter(|&&a| a > 1e-8).count();
            println!(
                "{}",
                serde_json::json!({
                    "k": k,
                    "lambda": lambda,
                    "reconstruction_error": basis.reconstruction_error,
                    "active_entries": active,
                    "converged": basis.converged,
                })
            );
        }
        return Ok(());
    }

    let lambda = if args.lambda < 0.0 {
        let (chosen, scores) = select_lambda(&series, args.k, &LAMBDA_GRID, &opts)?;
        eprintln!(
            "selected lambda {chosen} from grid {:?}",
            scores.iter().map(|s| s.lambda).collect::<Vec<_>>()
        );
        chosen
    } else {
        args.lambda
    };
    let basis = fit_sparse_code(&series, args.k, lambda, &opts)?;
    let groups = extract_groups(&basis, parse_threshold(&args.threshold)?);
    if let Some(p) = &args.basis_out {
        write_output(Some(p), &format!("{:#}\n", basis.to_json()))?;
    }
    let mut jsonl = String::new();
    for g in &groups {
        jsonl.push_str(&serde_json::to_string(g)?);
        jsonl.push('\n');
    }
    write_output(args.groups_out.as_deref(), &jsonl)
}

pub struct SparseExtractArgs {
    pub input: PathBuf,
    pub input_format: SeriesFormat,
    pub min_size: usize,
    pub groups: PathBuf,
    pub max_tuple: usize,
    pub permutations: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub min_source_count: u32,
    pub output: Option<PathBuf>,
    pub format: String,
}

fn load_groups(path: &Path) -> Result<Vec<SparseGroup>> {
    let text = std::fs::read_to_string(path)?;
    let mut groups = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let g: SparseGroup = serde_json::from_str(line).map_err(|e| Error::ParseError {
            line: i + 1,
            message: format!("bad group record: {e}"),
        })?;
        groups.push(g);
    }
    Ok(groups)
}

pub fn cmd_sparse_extract(args: &SparseExtractArgs) -> Result<()> {
    let series = load_filtered(&args.input, args.input_format, args.min_size)?;
    let groups = load_groups(&args.groups)?;
    let null_config = NullConfig {
        n_permutations: args.permutations,
        master_seed: args.seed,
        mode: if args.exhaustive {
            NullMode::Exhaustive
        } else {
            NullMode::MonteCarlo
        },
    };
    let out = sparse_extract_all(
        &series,
        &groups,
        args.max_tuple,
        &null_config,
        args.min_source_count,
    )?;
    for g in &out.skipped_groups {
        eprintln!(
            "warning: group {} ({} members) exceeds max tuple width {}, skipped",
            g.component_index,
            g.members.len(),
            args.max_tuple
        );
    }
    write_output(
        args.output.as_deref(),
        &render_edges(&out.edges, &args.format)?,
    )
}

// ---------------------------------------------------------------------------
// degeneracy
// ---------------------------------------------------------------------------

pub struct DegeneracyArgs {
    pub circuit: PathBuf,
    pub series: PathBuf,
    pub input_format: SeriesFormat,
    pub modes: String,
    pub n_perturbations: usize,
    pub n_events: usize,
    pub seed: u64,
    pub seeding: SeedingRule,
    pub min_fight_size: usize,
    pub max_resample: usize,
    pub output: Option<PathBuf>,
}

pub fn cmd_degeneracy(args: &DegeneracyArgs) -> Result<()> {
    let circuit = load_circuit(&args.circuit)?;
    let observed = load_series(&args.series, args.input_format)?;
    let modes: Vec<PerturbMode> = args
        .modes
        .split(',')
        .map(|m| PerturbMode::parse(m.trim()))
        .collect::<Result<_>>()?;
    let sim_config = SimConfig {
        n_events: if args.n_events == 0 {
            observed.len()
        } else {
            args.n_events
        },
        seed: args.seed,
        seeding: args.seeding,
        min_fight_size: args.min_fight_size,
        max_resample: args.max_resample,
    };
    let report = degeneracy_scan(
        &circuit,
        &observed,
        &modes,
        args.n_perturbations,
        &sim_config,
    )?;
    let text = format!("{}\n", serde_json::to_string_pretty(&report)?);
    write_output(args.output.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub struct GenerateArgs {
    pub roster_size: usize,
    pub n_events: usize,
    pub baseline: f64,
    pub edges: Vec<String>,
    pub seed: u64,
    pub min_fight_size: usize,
    pub max_resample: usize,
    pub combine: String,
    pub output: Option<PathBuf>,
    pub circuit_out: Option<PathBuf>,
}

/// Roster IDs for a synthetic run: letters for up to 26 individuals, padded
/// `I###` labels beyond.
pub fn synthetic_roster_ids(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n)
            .map(|i| char::from(b'A' + i as u8).to_string())
            .collect()
    } else {
        (0..n).map(|i| format!("I{i:03}")).collect()
    }
}

/// Parse an edge spec `"A,B->C=0.6"`.
fn parse_edge_spec(spec: &str) -> Result<(Vec<String>, Vec<String>, f64)> {
    let bad = || Error::InvalidConfig(format!("bad edge spec {spec:?} (want SRC,..->DST,..=W)"));
    let (lhs, rest) = spec.split_once("->").ok_or_else(bad)?;
    let (rhs, w) = rest.split_once('=').ok_or_else(bad)?;
    let weight: f64 = w.trim().parse().map_err(|_| bad())?;
    let split = |s: &str| -> Vec<String> {
        s.split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect()
    };
    let (src, dst) = (split(lhs), split(rhs));
    if src.is_empty() || dst.is_empty() {
        return Err(bad());
    }
    Ok((src, dst, weight))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    use crate::circuit::{CircuitEdge, CircuitVariant, InclusionRule, WeightTreatment};
    if args.roster_size < 2 {
        return Err(Error::InvalidConfig("roster_size must be at least 2".into()));
    }
    let ids = synthetic_roster_ids(args.roster_size);
    let baseline: BTreeMap<String, f64> = ids
        .iter()
        .map(|id| (id.clone(), args.baseline))
        .collect();
    let combine = match args.combine.as_str() {
        "sum" => crate::circuit::CombineRule::Sum,
        "max_magnitude" => crate::circuit::CombineRule::MaxMagnitude,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown combine rule {other:?}"
            )))
        }
    };
    let variant = CircuitVariant {
        inclusion: InclusionRule::All,
        weight_treatment: WeightTreatment::Measured,
        alpha: 0.05,
        k: 0,
        combine,
    };
    let mut edges = Vec::new();
    for spec in &args.edges {
        let (src, dst, w) = parse_edge_spec(spec)?;
        edges.push(CircuitEdge {
            source: src,
            target: dst,
            weight: w,
        });
    }
    let circuit = Circuit::new("planted".into(), variant, baseline, edges)?;
    let config = SimConfig {
        n_events: args.n_events,
        seed: args.seed,
        seeding: SeedingRule::RandomPair,
        min_fight_size: args.min_fight_size,
        max_resample: args.max_resample,
    };
    let series = simulate(&circuit, None, &config)?;
    if let Some(p) = &args.circuit_out {
        write_output(Some(p), &format!("{}\n", serde_json::to_string_pretty(&circuit)?))?;
    }
    write_output(args.output.as_deref(), &series.to_lines_string())
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

fn class_slug(class: &StrategyClass) -> String {
    format!("c{}_{}", class.n, class.m)
}

struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.written.push(PathBuf::from(name));
        Ok(())
    }

    fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &format!("{}\n", serde_json::to_string_pretty(value)?))
    }

    /// `sha256  relative-path` per line, sorted by path.
    fn manifest(&self) -> Result<String> {
        let mut names = self.written.clone();
        names.sort();
        let mut out = String::new();
        for name in names {
            let bytes = std::fs::read(self.dir.join(&name))?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            out.push_str(&format!("{hex}  {}\n", name.display()));
        }
        Ok(out)
    }
}

fn size_csv(observed: &FightSizeDistribution, simulated: &FightSizeDistribution) -> String {
    let mut sizes: Vec<usize> = observed
        .counts
        .keys()
        .chain(simulated.counts.keys())
        .copied()
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut out = String::from("size,observed_prob,simulated_prob\n");
    for s in sizes {
        out.push_str(&format!(
            "{},{},{}\n",
            s,
            observed.probability_of(s),
            simulated.probability_of(s)
        ));
    }
    out
}

pub struct PipelineArgs {
    pub config: PathBuf,
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let mut config = RunConfig::from_path(&args.config)?;
    if let Ok(dir) = std::env::var("SOCIAL_CIRCUITS_OUT") {
        if !dir.is_empty() {
            config.output_dir = PathBuf::from(dir);
        }
    }
    let mut writer = ArtifactWriter::new(config.output_dir.clone())?;

    // Echo the fully resolved configuration first; it pins every seed.
    let echo = toml::to_string_pretty(&config)
        .map_err(|e| Error::InvalidConfig(format!("config echo failed: {e}")))?;
    writer.write("config.toml", &echo)?;

    let observed = load_filtered(&config.input, config.format, config.min_size)?;
    if observed.is_empty() {
        return Err(Error::EmptySeries);
    }
    writer.write_json("series_summary.json", &series_summary(&observed))?;
    eprintln!(
        "loaded {} events over {} individuals",
        observed.len(),
        observed.roster().size()
    );

    let null_config = config.null_config();
    let variants = config.parsed_variants()?;
    let classes = config.parsed_classes()?;
    let sim_n_events = if config.simulation.n_events == 0 {
        observed.len()
    } else {
        config.simulation.n_events
    };
    let sim_config = SimConfig {
        n_events: sim_n_events,
        seed: config.master_seed,
        seeding: config.simulation.seeding,
        min_fight_size: config.simulation.min_fight_size,
        max_resample: config.simulation.max_resample,
    };

    let mut enrichments = Vec::new();
    let mut class_reports = Vec::new();
    let mut best_by_class: BTreeMap<String, Circuit> = BTreeMap::new();

    for class in &classes {
        let slug = class_slug(class);
        eprintln!("extracting {} edges...", class.label());
        let opts = ExtractOptions {
            min_source_count: config.extraction.min_source_count,
            overlap: if config.extraction.exclude_overlapping {
                OverlapPolicy::RequireDisjoint
            } else {
                OverlapPolicy::AllowAll
            },
        };
        let mut edges = extract_all_with(&observed, *class, &null_config, opts)?;
        if config.extraction.bh_q > 0.0 {
            edges = benjamini_hochberg(&edges, config.extraction.bh_q);
        }
        writer.write(&format!("edges_{slug}.jsonl"), &edges_to_jsonl(&edges))?;
        writer.write(&format!("edges_{slug}.csv"), &edges_to_csv(&edges))?;
        writer.write(
            &format!("dp_edges_{slug}.svg"),
            &svg::edge_magnitudes(&edges, 25, &format!("{} edges by |dp|", class.label())),
        )?;

        let enrichment = enrichment_from_edges(
            &class.label(),
            &edges,
            config.extraction.significance_level,
        );
        enrichments.push(enrichment);

        let family = build_family(&edges, &observed, &class.label(), &variants)?;
        for v in &family.empty_variants {
            eprintln!("note: variant {} kept no edges for {}", v.label(), class.label());
        }
        writer.write_json(&format!("circuits_{slug}.json"), &family.circuits)?;
        if family.circuits.is_empty() {
            eprintln!("warning: empty circuit family for {}", class.label());
            class_reports.push(serde_json::json!({
                "class": class.label(),
                "n_edges": edges.len(),
                "family": "empty",
            }));
            continue;
        }

        eprintln!(
            "ranking {} circuits for {}...",
            family.circuits.len(),
            class.label()
        );
        let ranked = rank_family(
            &observed,
            &family.circuits,
            &sim_config,
            config.simulation.replicates,
        )?;
        let ranking: Vec<_> = ranked.iter().map(|(_, r)| r.clone()).collect();
        writer.write_json(&format!("ranking_{slug}.json"), &ranking)?;
        let (best, best_entry) = &ranked[0];
        writer.write_json(&format!("best_circuit_{slug}.json"), best)?;

        // Overlay plot and histogram CSV from the best circuit's first
        // replicate (the same run used during ranking).
        let best_sim = simulate(
            best,
            Some(&observed),
            &SimConfig {
                seed: replicate_seed(sim_config.seed, best, 0),
                ..sim_config
            },
        )?;
        let obs_dist = fight_size_distribution(&observed);
        let sim_dist = fight_size_distribution(&best_sim);
        writer.write(&format!("size_distribution_{slug}.csv"), &size_csv(&obs_dist, &sim_dist))?;
        writer.write(
            &format!("size_overlay_{slug}.svg"),
            &svg::size_overlay(
                &obs_dist,
                Some(&sim_dist),
                &format!("fight sizes: observed vs best {} circuit", class.label()),
            ),
        )?;

        class_reports.push(serde_json::json!({
            "class": class.label(),
            "n_edges": edges.len(),
            "top_edges": edges.iter().take(10).collect::<Vec<_>>(),
            "best_variant": best_entry.variant_label,
            "best_mean": best_entry.mean,
            "n_circuits": family.circuits.len(),
        }));
        best_by_class.insert(class.label(), best.clone());
    }

    // Degeneracy scan over the selected class's best circuit.
    let mut degeneracy_summary = serde_json::Value::Null;
    if config.degeneracy.enabled && !best_by_class.is_empty() {
        let target_label = if config.degeneracy.target_class.is_empty() {
            best_by_class.keys().next().unwrap().clone()
        } else {
            StrategyClass::parse(&config.degeneracy.target_class)?.label()
        };
        if let Some(reference) = best_by_class.get(&target_label) {
            eprintln!("degeneracy scan over best {target_label} circuit...");
            let modes: Vec<PerturbMode> = config
                .degeneracy
                .modes
                .iter()
                .map(|m| PerturbMode::parse(m))
                .collect::<Result<_>>()?;
            let report = degeneracy_scan(
                reference,
                &observed,
                &modes,
                config.degeneracy.n_perturbations,
                &sim_config,
            )?;
            writer.write_json("degeneracy.json", &report)?;
            degeneracy_summary = serde_json::json!({
                "target_class": target_label,
                "floor_median": report.floor_median,
                "mode_medians": report
                    .per_mode
                    .iter()
                    .map(|(k, v)| (k.clone(), v.median))
                    .collect::<BTreeMap<String, f64>>(),
            });
        } else {
            eprintln!("warning: degeneracy target {target_label} has no built circuit");
        }
    }

    // Sparse compression and the reduced strategy space.
    let mut sparse_summary = serde_json::Value::Null;
    if config.sparse.enabled {
        eprintln!("sparse coding with k = {}...", config.sparse.k);
        let opts = FitOptions {
            max_iters: config.sparse.max_iters,
            tol: config.sparse.tol,
            seed: config.master_seed,
        };
        let lambda = if config.sparse.lambda < 0.0 {
            let (chosen, scores) = select_lambda(&observed, config.sparse.k, &LAMBDA_GRID, &opts)?;
            writer.write_json("sparse_lambda_scores.json", &scores)?;
            chosen
        } else {
            config.sparse.lambda
        };
        let basis = fit_sparse_code(&observed, config.sparse.k, lambda, &opts)?;
        writer.write("sparse_basis.json", &format!("{:#}\n", basis.to_json()))?;
        let groups = extract_groups(&basis, parse_threshold(&config.sparse.threshold)?);
        let mut jsonl = String::new();
        for g in &groups {
            jsonl.push_str(&serde_json::to_string(g)?);
            jsonl.push('\n');
        }
        writer.write("sparse_groups.jsonl", &jsonl)?;

        if groups.is_empty() {
            eprintln!("warning: no sparse groups survived thresholding");
        } else {
            let out = sparse_extract_all(
                &observed,
                &groups,
                config.sparse.max_tuple,
                &null_config,
                config.sparse.min_source_count,
            )?;
            for g in &out.skipped_groups {
                eprintln!(
                    "note: sparse group {} wider than {} members, skipped",
                    g.component_index, config.sparse.max_tuple
                );
            }
            writer.write("sparse_edges.jsonl", &edges_to_jsonl(&out.edges))?;
            writer.write("sparse_edges.csv", &edges_to_csv(&out.edges))?;
            sparse_summary = serde_json::json!({
                "lambda": lambda,
                "converged": basis.converged,
                "reconstruction_error": basis.reconstruction_error,
                "n_groups": groups.len(),
                "group_sizes": groups.iter().map(|g| g.members.len()).collect::<Vec<_>>(),
                "n_sparse_edges": out.edges.len(),
                "skipped_groups": out.skipped_groups.len(),
            });
        }
    }

    let report = serde_json::json!({
        "input": config.input,
        "events": observed.len(),
        "roster_size": observed.roster().size(),
        "master_seed": config.master_seed,
        "classes": class_reports,
        "enrichment": enrichments,
        "degeneracy": degeneracy_summary,
        "sparse": sparse_summary,
    });
    writer.write_json("report.json", &report)?;

    let manifest = writer.manifest()?;
    let manifest_path = writer.dir.join("manifest.txt");
    std::fs::write(&manifest_path, &manifest)?;
    eprintln!("run complete: {}", writer.dir.display());
    println!("{}", manifest_path.display());
    Ok(())
}
