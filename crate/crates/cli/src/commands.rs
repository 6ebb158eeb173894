use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use mtcov::attributes::DesignMatrix;
use mtcov::cv::{self, CellScore, CvCell, CvReport, GridSpec};
use mtcov::graph::MultilayerGraph;
use mtcov::mask::HoldoutMask;
use mtcov::metrics::{
    accuracy, baselines, community_entropy, matched_similarity, soft_scores, HardPartition,
    MetricReport, SetSimilarity,
};
use mtcov::params::ModelParams;
use mtcov::solver::{fit, EmConfig, RescaleCoefficients};
use mtcov::synth::{
    generate_attributes, generate_network, preset, write_attribute_csv, PlantedTruth, SyntheticSpec,
};

use crate::manifest::ManifestBuilder;
use crate::{BenchmarkArgs, CvArgs, EvaluateArgs, FitArgs, GenerateArgs, HoldoutArgs, PredictArgs};

/// Named sub-streams derived from the single user seed, in a fixed order
/// so the same seed always yields the same streams no matter which are used.
struct SubSeeds {
    generation: u64,
    attributes: u64,
    masks: u64,
    solver: u64,
}

fn sub_seeds(seed: u64) -> SubSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SubSeeds {
        generation: rng.gen(),
        attributes: rng.gen(),
        masks: rng.gen(),
        solver: rng.gen(),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn load_graph(path: &Path, undirected: bool) -> Result<MultilayerGraph> {
    let graph = MultilayerGraph::load_edgelist(path, !undirected)?;
    eprintln!("loaded {}: {}", path.display(), graph.summary());
    Ok(graph)
}

/// Column selection for the attribute CSV: an explicit name list or, by
/// default, every column after the id column (combined into one covariate).
fn resolve_attribute_columns(path: &Path, requested: Option<&str>) -> Result<String> {
    if let Some(name) = requested {
        return Ok(name.to_string());
    }
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let columns: Vec<&str> = headers.iter().skip(1).collect();
    if columns.is_empty() {
        bail!(
            "{}: no attribute columns after the id column",
            path.display()
        );
    }
    Ok(columns.join(","))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let seeds = sub_seeds(args.seed);
    let mut spec: SyntheticSpec = match (&args.preset, &args.spec_file) {
        (Some(name), None) => preset(name, args.n, seeds.generation)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        _ => bail!("pass exactly one of --preset or --spec-file"),
    };
    spec.seed = seeds.generation;
    spec.attribute_match = args.matching;
    let n_categories = args.categories.unwrap_or(spec.n_communities);

    let (graph, mut truth) = generate_network(&spec)?;
    let mut attr_rng = ChaCha8Rng::seed_from_u64(seeds.attributes);
    let design = generate_attributes(
        &mut truth,
        spec.attribute_match,
        n_categories,
        &mut attr_rng,
    )?;

    graph.write_edgelist(&args.out.join("edges.txt"))?;
    write_attribute_csv(&args.out.join("attributes.csv"), &graph, &design)?;
    truth.save(&args.out.join("truth.json"))?;
    println!(
        "generated {} ({} layers, match {}): {}",
        args.preset.as_deref().unwrap_or("custom spec"),
        graph.n_layers(),
        spec.attribute_match,
        graph.summary()
    );

    let mut manifest = ManifestBuilder::new("generate");
    manifest.config(&spec)?;
    manifest.seeds(&json!({
        "seed": args.seed,
        "generation": seeds.generation,
        "attributes": seeds.attributes,
    }))?;
    manifest.write(&args.out)?;
    Ok(())
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let seeds = sub_seeds(args.seed);
    let graph = load_graph(&args.edges, args.undirected)?;
    let design = match &args.attributes {
        Some(path) => {
            let columns = resolve_attribute_columns(path, args.attribute.as_deref())?;
            Some(DesignMatrix::load_attributes(path, &columns, &graph)?)
        }
        None => {
            if args.gamma > 0.0 {
                bail!("--gamma {} > 0 requires --attributes", args.gamma);
            }
            None
        }
    };
    let mask = match &args.mask {
        Some(path) => HoldoutMask::load(path)?,
        None => HoldoutMask::empty(),
    };
    let mut config = EmConfig::new(args.communities, args.gamma);
    config.n_restarts = args.restarts;
    config.seed = seeds.solver;
    config.symmetric = args.symmetric;
    config.tolerance = args.tolerance;
    config.max_iterations = args.max_iterations;
    if let Some(path) = &args.rescale_coefficients {
        config.rescaling = Some(RescaleCoefficients::load(path)?);
    }

    let result = fit(&graph, design.as_ref(), &mask, &config)?;
    println!(
        "fit done: final objective {:.6}, converged {}, best restart {} \
         ({} iterations)",
        result.final_loglik, result.converged, result.restart_index, result.iterations_used
    );
    let category_labels: Vec<String> = design
        .as_ref()
        .map(|d| d.category_labels().to_vec())
        .unwrap_or_else(|| vec!["none".to_string()]);
    result.save(&args.out, graph.node_labels(), &category_labels)?;

    let mut manifest = ManifestBuilder::new("fit");
    manifest.config(&config)?;
    manifest.seeds(&json!({"seed": args.seed, "solver": seeds.solver}))?;
    manifest.input(&args.edges)?;
    if let Some(path) = &args.attributes {
        manifest.input(path)?;
    }
    if let Some(path) = &args.mask {
        manifest.input(path)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

fn load_aligned_params(dir: &Path, wanted_labels: &[String]) -> Result<(ModelParams, Vec<String>)> {
    let (params, node_labels, category_labels) = ModelParams::load(dir)?;
    let index: HashMap<&str, usize> = node_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let align = |m: &Array2<f64>| -> Result<Array2<f64>> {
        let mut out = Array2::zeros((wanted_labels.len(), m.ncols()));
        for (row, label) in wanted_labels.iter().enumerate() {
            let &src = index
                .get(label.as_str())
                .with_context(|| format!("node {label:?} missing from fitted parameters"))?;
            out.row_mut(row).assign(&m.row(src));
        }
        Ok(out)
    };
    let aligned = ModelParams {
        u: align(&params.u)?,
        v: align(&params.v)?,
        w: params.w,
        beta: params.beta,
    };
    Ok((aligned, category_labels))
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let graph = load_graph(&args.edges, false)?;
    let (params, _) = load_aligned_params(&args.params, graph.node_labels())?;
    let mask = HoldoutMask::load(&args.mask)?;
    mask.check_bounds(graph.n_nodes(), graph.n_layers())?;

    let mut writer = csv::Writer::from_path(args.out.join("edge_scores.csv"))?;
    writer.write_record(["source", "target", "layer", "observed_weight", "score"])?;
    for &(i, j, a) in &mask.held_out_triples {
        writer.write_record([
            graph.node_labels()[i].clone(),
            graph.node_labels()[j].clone(),
            graph.layer_labels()[a].clone(),
            graph.weight(i, j, a).to_string(),
            format!("{:.12e}", params.poisson_mean(i, j, a)),
        ])?;
    }
    writer.flush()?;

    let nodes: Vec<usize> = (0..graph.n_nodes()).collect();
    let predictions = params.predict_attributes(&nodes);
    let mut writer = csv::Writer::from_path(args.out.join("attribute_predictions.csv"))?;
    let mut header = vec!["node".to_string(), "predicted_category".to_string()];
    header.extend((0..params.n_categories()).map(|z| format!("pi_{z}")));
    writer.write_record(&header)?;
    for (i, (argmax, pi)) in predictions.iter().enumerate() {
        let mut record = vec![graph.node_labels()[i].clone(), argmax.to_string()];
        record.extend(pi.iter().map(|p| format!("{p:.6}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    println!(
        "wrote scores for {} held-out triples and {} attribute predictions",
        mask.held_out_triples.len(),
        graph.n_nodes()
    );

    let mut manifest = ManifestBuilder::new("predict");
    manifest.input(&args.edges)?;
    manifest.input(&args.mask)?;
    manifest.write(&args.out)?;
    Ok(())
}

fn average_reports(a: &MetricReport, b: &MetricReport) -> MetricReport {
    MetricReport {
        f1: 0.5 * (a.f1 + b.f1),
        jaccard: 0.5 * (a.jaccard + b.jaccard),
        cs: 0.5 * (a.cs + b.cs),
        l1: 0.5 * (a.l1 + b.l1),
        auc: None,
        accuracy: None,
        permutation_used: a.permutation_used.clone(),
    }
}

fn score_against_truth(membership: &Array2<f64>, truth: &PlantedTruth) -> Result<MetricReport> {
    let truth_partition = HardPartition::from_assignments(&truth.community);
    let detected = HardPartition::from_soft_argmax(membership);
    let f1 = matched_similarity(&truth_partition, &detected, SetSimilarity::F1)?;
    let jaccard = matched_similarity(&truth_partition, &detected, SetSimilarity::Jaccard)?;
    let soft = soft_scores(membership, &truth.membership_matrix())?;
    Ok(MetricReport {
        f1,
        jaccard,
        cs: soft.cosine,
        l1: soft.l1,
        auc: None,
        accuracy: None,
        permutation_used: soft.permutation,
    })
}

fn print_report_row(label: &str, r: &MetricReport) {
    println!(
        "{label:<6} F1 {:.4}  Jaccard {:.4}  CS {:.4}  L1 {:.4}",
        r.f1, r.jaccard, r.cs, r.l1
    );
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut output = serde_json::Map::new();
    match (&args.truth, &args.mask) {
        (Some(truth_path), None) => {
            let truth = PlantedTruth::load(truth_path)?;
            let (params, _) = load_aligned_params(&args.params, &truth.node_labels)?;
            let report_u = score_against_truth(&params.u, &truth)?;
            let report_v = score_against_truth(&params.v, &truth)?;
            let report_mean = average_reports(&report_u, &report_v);
            print_report_row("U", &report_u);
            print_report_row("V", &report_v);
            print_report_row("mean", &report_mean);
            output.insert("u".into(), serde_json::to_value(&report_u)?);
            output.insert("v".into(), serde_json::to_value(&report_v)?);
            output.insert("mean".into(), serde_json::to_value(&report_mean)?);
            if let Some(attribute) = &truth.attribute {
                let z = truth
                    .n_attribute_categories
                    .unwrap_or_else(|| attribute.iter().copied().max().unwrap_or(0) + 1);
                if z >= 2 {
                    let partition =
                        HardPartition::from_soft_nonzero(&params.u, args.entropy_threshold);
                    let entropy = community_entropy(&partition, attribute, z)?;
                    println!("per-community attribute entropy (nonzero rule):");
                    for (k, h) in entropy.iter().enumerate() {
                        println!(
                            "  community {k}: H = {h:.4} ({} nodes)",
                            partition.communities[k].len()
                        );
                    }
                    output.insert("entropy".into(), serde_json::to_value(&entropy)?);
                }
            }
        }
        (None, Some(mask_path)) => {
            let edges = args
                .edges
                .as_ref()
                .context("--mask evaluation needs --edges")?;
            let graph = load_graph(edges, false)?;
            let (params, _) = load_aligned_params(&args.params, graph.node_labels())?;
            let mask = HoldoutMask::load(mask_path)?;
            let design = match &args.attributes {
                Some(path) => {
                    let columns = resolve_attribute_columns(path, args.attribute.as_deref())?;
                    Some(DesignMatrix::load_attributes(path, &columns, &graph)?)
                }
                None => None,
            };
            let scores = cv::evaluate_holdout(&params, &graph, design.as_ref(), &mask)?;
            match scores.auc {
                Some(a) => println!("AUC (held-out triples): {a:.4}"),
                None => println!("AUC: not available (no held-out triples)"),
            }
            match scores.accuracy {
                Some(a) => println!("accuracy (held-out attributes): {a:.4}"),
                None => println!("accuracy: not available (no attribute holdout)"),
            }
            output.insert("holdout".into(), serde_json::to_value(&scores)?);
            // reference accuracies next to the model's, as in the usual
            // attribute-prediction tables
            if let (Some(design), false) =
                (design.as_ref(), mask.held_out_attribute_nodes.is_empty())
            {
                let train: Vec<usize> = (0..graph.n_nodes())
                    .filter(|&i| !mask.holds_attribute(i))
                    .map(|i| design.category(i))
                    .collect();
                let report = baselines(&train, design.n_categories())?;
                let test: Vec<usize> = mask
                    .held_out_attribute_nodes
                    .iter()
                    .map(|&i| design.category(i))
                    .collect();
                let mrf = accuracy(&vec![report.mrf_category; test.len()], &test)?;
                println!(
                    "baselines: RP {:.4} (uniform over {} categories), MRF {:.4} \
                     (modal training category {:?})",
                    report.rp,
                    design.n_categories(),
                    mrf,
                    design.category_labels()[report.mrf_category]
                );
                output.insert("rp".into(), serde_json::to_value(report.rp)?);
                output.insert("mrf_accuracy".into(), serde_json::to_value(mrf)?);
            }
        }
        _ => bail!("pass exactly one of --truth or --mask"),
    }
    if let Some(out) = &args.out {
        ensure_out(out)?;
        fs::write(
            out.join("report.json"),
            serde_json::to_string_pretty(&serde_json::Value::Object(output))?,
        )?;
        let mut manifest = ManifestBuilder::new("evaluate");
        manifest.input(&args.params.join("u.csv"))?;
        manifest.write(out)?;
    }
    Ok(())
}

pub fn cmd_holdout(args: &HoldoutArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let seeds = sub_seeds(args.seed);
    let graph = load_graph(&args.edges, false)?;
    let mask = match args.tpe {
        Some(tpe) => cv::biased_holdout(&graph, args.holdout_fraction, tpe, seeds.masks)?,
        None => cv::uniform_holdout(&graph, args.holdout_fraction, seeds.masks)?,
    };
    mask.save(&args.out.join("mask.json"))?;
    println!(
        "held out {} triples and {} attribute rows ({})",
        mask.held_out_triples.len(),
        mask.held_out_attribute_nodes.len(),
        match args.tpe {
            Some(tpe) => format!("biased, tpe {tpe}"),
            None => "uniform".to_string(),
        }
    );
    let mut manifest = ManifestBuilder::new("holdout");
    manifest.config(&json!({
        "holdout_fraction": args.holdout_fraction,
        "tpe": args.tpe,
    }))?;
    manifest.seeds(&json!({"seed": args.seed, "masks": seeds.masks}))?;
    manifest.input(&args.edges)?;
    manifest.write(&args.out)?;
    Ok(())
}

pub fn cmd_cv(args: &CvArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let seeds = sub_seeds(args.seed);
    let graph = load_graph(&args.edges, false)?;
    let design = match &args.attributes {
        Some(path) => {
            let columns = resolve_attribute_columns(path, args.attribute.as_deref())?;
            Some(DesignMatrix::load_attributes(path, &columns, &graph)?)
        }
        None => None,
    };
    let mut template = EmConfig::new(args.c_grid[0], args.gamma_grid[0]);
    template.n_restarts = args.restarts;
    template.seed = seeds.solver;
    template.max_iterations = args.max_iterations;
    if let Some(path) = &args.rescale_coefficients {
        template.rescaling = Some(RescaleCoefficients::load(path)?);
    }

    // one grid_search call per cell keeps fold parallelism while giving
    // per-cell progress; the fold masks depend only on (graph, folds, seed)
    // and are identical across calls
    let mut cells: Vec<CvCell> = Vec::new();
    let mut n_fits = 0;
    let total_cells = args.c_grid.len() * args.gamma_grid.len();
    for (idx, (&c, &gamma)) in args
        .c_grid
        .iter()
        .flat_map(|c| args.gamma_grid.iter().map(move |g| (c, g)))
        .enumerate()
    {
        let grid = GridSpec {
            c_values: vec![c],
            gamma_values: vec![gamma],
            n_folds: args.folds,
            seed: seeds.masks,
            tpe: args.tpe,
        };
        let report = cv::grid_search(&graph, design.as_ref(), &grid, &template)?;
        n_fits += report.n_fits;
        let cell = report.cells.into_iter().next().expect("one cell per call");
        let auc = cell
            .auc_mean
            .map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let acc = cell
            .acc_mean
            .map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "cell {}/{}: C={c} gamma={gamma}: AUC {auc}, accuracy {acc}{}",
            idx + 1,
            total_cells,
            if cell.failures.is_empty() {
                String::new()
            } else {
                format!(" ({} fold failures)", cell.failures.len())
            }
        );
        cells.push(cell);
    }
    let candidates: Vec<CellScore> = cells
        .iter()
        .filter(|cell| cell.failures.is_empty() && cell.auc_mean.is_some())
        .map(|cell| CellScore {
            c: cell.c,
            gamma: cell.gamma,
            auc: cell.auc_mean.unwrap_or(0.0),
            accuracy: cell.acc_mean,
        })
        .collect();
    let selected = cv::select_joint(&candidates);
    let any_failures = cells.iter().any(|cell| !cell.failures.is_empty());
    let report = CvReport {
        cells,
        selected,
        selection_rule: "max-min-normalized".to_string(),
        n_fits,
        n_folds: args.folds,
    };
    fs::write(
        args.out.join("cv.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    match selected {
        Some((c, gamma)) => println!("selected: C={c}, gamma={gamma}"),
        None => println!("no cell could be selected"),
    }

    let mut manifest = ManifestBuilder::new("cv");
    manifest.config(&json!({
        "c_grid": args.c_grid,
        "gamma_grid": args.gamma_grid,
        "folds": args.folds,
        "tpe": args.tpe,
        "restarts": args.restarts,
    }))?;
    manifest.seeds(&json!({
        "seed": args.seed,
        "masks": seeds.masks,
        "solver": seeds.solver,
    }))?;
    manifest.input(&args.edges)?;
    if let Some(path) = &args.attributes {
        manifest.input(path)?;
    }
    manifest.write(&args.out)?;
    if any_failures {
        bail!("some grid cells had fold failures; partial report written to cv.json");
    }
    Ok(())
}

struct BenchmarkRow {
    preset: String,
    method: String,
    matching: Option<f64>,
    f1: Vec<f64>,
    jaccard: Vec<f64>,
    cs: Vec<f64>,
    l1: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn benchmark_fit(
    graph: &MultilayerGraph,
    truth: &PlantedTruth,
    gamma: f64,
    design: Option<&DesignMatrix>,
    restarts: usize,
    solver_seed: u64,
    row: &mut BenchmarkRow,
) -> Result<()> {
    let mut config = EmConfig::new(truth.n_communities, gamma);
    config.n_restarts = restarts;
    config.seed = solver_seed;
    let result = fit(graph, design, &HoldoutMask::empty(), &config)?;
    let ru = score_against_truth(&result.params.u, truth)?;
    let rv = score_against_truth(&result.params.v, truth)?;
    let avg = average_reports(&ru, &rv);
    row.f1.push(avg.f1);
    row.jaccard.push(avg.jaccard);
    row.cs.push(avg.cs);
    row.l1.push(avg.l1);
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let seeds = sub_seeds(args.seed);
    let mut rows: Vec<BenchmarkRow> = Vec::new();
    for preset_name in &args.presets {
        let mut structure_only = BenchmarkRow {
            preset: preset_name.clone(),
            method: "MTCOV-g0".to_string(),
            matching: None,
            f1: vec![],
            jaccard: vec![],
            cs: vec![],
            l1: vec![],
        };
        let mut per_match: Vec<BenchmarkRow> = args
            .matches
            .iter()
            .map(|&m| BenchmarkRow {
                preset: preset_name.clone(),
                method: format!("MTCOV_{m}"),
                matching: Some(m),
                f1: vec![],
                jaccard: vec![],
                cs: vec![],
                l1: vec![],
            })
            .collect();
        for sample in 0..args.samples {
            let sample_seed = seeds
                .generation
                .wrapping_add((sample as u64) << 8)
                .wrapping_add(preset_name.bytes().map(u64::from).sum::<u64>());
            let spec = preset(preset_name, args.n, sample_seed)?;
            let (graph, mut truth) = generate_network(&spec)?;
            let solver_seed = seeds.solver.wrapping_add(sample as u64);

            benchmark_fit(
                &graph,
                &truth,
                0.0,
                None,
                args.restarts,
                solver_seed,
                &mut structure_only,
            )?;
            for (row, &matching) in per_match.iter_mut().zip(&args.matches) {
                let mut attr_rng = ChaCha8Rng::seed_from_u64(
                    seeds
                        .attributes
                        .wrapping_add(sample as u64)
                        .wrapping_add((matching * 1000.0) as u64),
                );
                let design =
                    generate_attributes(&mut truth, matching, spec.n_communities, &mut attr_rng)?;
                benchmark_fit(
                    &graph,
                    &truth,
                    matching,
                    Some(&design),
                    args.restarts,
                    solver_seed,
                    row,
                )?;
            }
            eprintln!("{preset_name}: sample {}/{} done", sample + 1, args.samples);
        }
        rows.push(structure_only);
        rows.append(&mut per_match);
    }

    let csv_path = args.out.join("benchmark.csv");
    let mut writer = csv::Writer::from_path(&csv_path)?;
    writer.write_record([
        "preset",
        "method",
        "match",
        "samples",
        "f1_mean",
        "f1_std",
        "jaccard_mean",
        "jaccard_std",
        "cs_mean",
        "cs_std",
        "l1_mean",
        "l1_std",
    ])?;
    for row in &rows {
        let (f1m, f1s) = mean_std(&row.f1);
        let (jm, js) = mean_std(&row.jaccard);
        let (cm, cs_std) = mean_std(&row.cs);
        let (lm, ls) = mean_std(&row.l1);
        writer.write_record([
            row.preset.clone(),
            row.method.clone(),
            row.matching.map_or(String::new(), |m| m.to_string()),
            row.f1.len().to_string(),
            format!("{f1m:.4}"),
            format!("{f1s:.4}"),
            format!("{jm:.4}"),
            format!("{js:.4}"),
            format!("{cm:.4}"),
            format!("{cs_std:.4}"),
            format!("{lm:.4}"),
            format!("{ls:.4}"),
        ])?;
    }
    writer.flush()?;

    let fmt = |values: &[f64]| {
        let (m, s) = mean_std(values);
        format!("{m:.3}±{s:.3}")
    };
    for preset_name in &args.presets {
        println!("\n{preset_name} (N={}, {} samples)", args.n, args.samples);
        println!(
            "{:<12} {:>13} {:>13} {:>13} {:>13}",
            "method", "F1", "Jaccard", "CS", "L1"
        );
        for row in rows.iter().filter(|r| &r.preset == preset_name) {
            println!(
                "{:<12} {:>13} {:>13} {:>13} {:>13}",
                row.method,
                fmt(&row.f1),
                fmt(&row.jaccard),
                fmt(&row.cs),
                fmt(&row.l1)
            );
        }
    }
    println!("\nwrote {}", csv_path.display());

    let mut manifest = ManifestBuilder::new("benchmark");
    manifest.config(&json!({
        "presets": args.presets,
        "n": args.n,
        "matches": args.matches,
        "samples": args.samples,
        "restarts": args.restarts,
    }))?;
    manifest.seeds(&json!({
        "seed": args.seed,
        "generation": seeds.generation,
        "attributes": seeds.attributes,
        "solver": seeds.solver,
    }))?;
    manifest.write(&args.out)?;
    Ok(())
}
