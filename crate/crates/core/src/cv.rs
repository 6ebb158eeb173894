//! Holdout construction (uniform, k-fold, biased edge sampling), grid
//! search over (C, gamma) with joint selection, and the regression used to
//! estimate likelihood normalization coefficients.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::DesignMatrix;
use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;
use crate::mask::HoldoutMask;
use crate::metrics::{accuracy, auc};
use crate::params::ModelParams;
use crate::solver::{fit, EmConfig, RescaleCoefficients};

fn flat_count(graph: &MultilayerGraph) -> usize {
    graph.n_nodes() * graph.n_nodes() * graph.n_layers()
}

fn unflatten(graph: &MultilayerGraph, idx: usize) -> (usize, usize, usize) {
    let l = graph.n_layers();
    let n = graph.n_nodes();
    let a = idx % l;
    let rest = idx / l;
    (rest / n, rest % n, a)
}

/// Hold out a fraction of all N*N*L adjacency triples (zero entries
/// included) uniformly at random, and independently the same fraction of
/// attribute rows.
pub fn uniform_holdout(graph: &MultilayerGraph, fraction: f64, seed: u64) -> Result<HoldoutMask> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Validation(format!(
            "holdout fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let total = flat_count(graph);
    let n_triples = (fraction * total as f64).round() as usize;
    let n_attr = (fraction * graph.n_nodes() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = rand::seq::index::sample(&mut rng, total, n_triples)
        .into_iter()
        .map(|idx| unflatten(graph, idx))
        .collect();
    let nodes = rand::seq::index::sample(&mut rng, graph.n_nodes(), n_attr).into_vec();
    Ok(HoldoutMask::new(triples, nodes, seed))
}

/// Per-entry holdout weights of the biased sampler: every nonzero entry
/// carries `p1 = tpe / E` and every zero entry `p2 = (1 - tpe) / (N*N*L - E)`.
///
/// The class masses are stored exactly, so the total mass over all entries,
/// E*p1 + (N*N*L - E)*p2, reduces to tpe + (1 - tpe) and normalizes to 1
/// without the rounding that (x/n)*n would reintroduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedWeights {
    pub tpe: f64,
    pub n_edges: usize,
    pub n_zero: usize,
}

impl BiasedWeights {
    pub fn new(tpe: f64, n_edges: usize, total_entries: usize) -> Self {
        BiasedWeights {
            tpe,
            n_edges,
            n_zero: total_entries - n_edges,
        }
    }

    /// Weight of one nonzero entry.
    pub fn p1(&self) -> f64 {
        self.tpe / self.n_edges as f64
    }

    /// Weight of one zero entry.
    pub fn p2(&self) -> f64 {
        (1.0 - self.tpe) / self.n_zero as f64
    }

    /// Mass of the edge class, E * p1.
    pub fn edge_mass(&self) -> f64 {
        self.tpe
    }

    /// Mass of the zero class, (N*N*L - E) * p2.
    pub fn zero_mass(&self) -> f64 {
        1.0 - self.tpe
    }

    /// Total mass over every entry.
    pub fn total_mass(&self) -> f64 {
        self.edge_mass() + self.zero_mass()
    }
}

/// Hold out a fraction of adjacency triples with sampling biased by `tpe`,
/// the total probability mass placed on edges. Attribute rows stay in.
///
/// This draws without replacement using exponential race keys, key =
/// Exp(1) / weight, smallest keys win. All zero entries share one weight,
/// so their winning keys are simulated as running minima of the remaining
/// pool and only the winners' identities are then drawn, uniformly with
/// rejection against the edge set. Memory stays proportional to the test
/// size plus the edge count.
pub fn biased_holdout(
    graph: &MultilayerGraph,
    fraction: f64,
    tpe: f64,
    seed: u64,
) -> Result<HoldoutMask> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Validation(format!(
            "holdout fraction must lie in [0, 1), got {fraction}"
        )));
    }
    if !(0.0 < tpe && tpe < 1.0) {
        return Err(Error::Validation(format!(
            "tpe must lie in (0, 1), got {tpe}"
        )));
    }
    let n_edges = graph.n_entries();
    if n_edges == 0 {
        return Err(Error::Validation(
            "biased holdout needs at least one edge".into(),
        ));
    }
    let total = flat_count(graph);
    let n_zero = total - n_edges;
    let m = (fraction * total as f64).ceil() as usize;
    if tpe * m as f64 > n_edges as f64 {
        return Err(Error::Validation(format!(
            "tpe {tpe} would require about {:.0} held-out edges but only {n_edges} exist",
            tpe * m as f64
        )));
    }
    let weights = BiasedWeights::new(tpe, n_edges, total);
    let (p1, p2) = (weights.p1(), weights.p2());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = |rng: &mut ChaCha8Rng| -> f64 {
        // inversion sampling; guard the log against a zero draw
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        -u.ln()
    };
    let mut edge_keys: Vec<(f64, usize)> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, _)| (exp(&mut rng) / p1, idx))
        .collect();
    edge_keys.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("keys are finite"));

    let mut taken_edges = Vec::new();
    let mut n_taken_zero = 0usize;
    let mut edge_ptr = 0usize;
    let mut frontier = 0.0;
    let mut next_zero_key = if n_zero > 0 {
        frontier + exp(&mut rng) / (n_zero as f64 * p2)
    } else {
        f64::INFINITY
    };
    for _ in 0..m {
        let edge_key = edge_keys.get(edge_ptr).map_or(f64::INFINITY, |&(k, _)| k);
        if next_zero_key < edge_key {
            n_taken_zero += 1;
            frontier = next_zero_key;
            let remaining = n_zero - n_taken_zero;
            next_zero_key = if remaining > 0 {
                frontier + exp(&mut rng) / (remaining as f64 * p2)
            } else {
                f64::INFINITY
            };
        } else {
            let e = graph.edges()[edge_keys[edge_ptr].1];
            taken_edges.push((e.source, e.target, e.layer));
            edge_ptr += 1;
        }
    }

    // winners among the zero entries are uniform without replacement
    let n = graph.n_nodes();
    let l = graph.n_layers();
    let mut picked: HashSet<(usize, usize, usize)> = HashSet::with_capacity(n_taken_zero);
    while picked.len() < n_taken_zero {
        let triple = (
            rng.gen_range(0..n),
            rng.gen_range(0..n),
            rng.gen_range(0..l),
        );
        if graph.weight(triple.0, triple.1, triple.2) > 0 {
            continue;
        }
        picked.insert(triple);
    }
    let mut triples = taken_edges;
    triples.extend(picked);
    Ok(HoldoutMask::new(triples, Vec::new(), seed))
}

/// Partition all triples and all attribute rows into near-equal disjoint
/// folds; mask f holds out fold f.
pub fn kfold_masks(graph: &MultilayerGraph, n_folds: usize, seed: u64) -> Result<Vec<HoldoutMask>> {
    if n_folds < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let total = flat_count(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triple_order: Vec<usize> = (0..total).collect();
    triple_order.shuffle(&mut rng);
    let mut node_order: Vec<usize> = (0..graph.n_nodes()).collect();
    node_order.shuffle(&mut rng);

    let chunk = |items: &[usize], f: usize| -> Vec<usize> {
        let per = items.len() / n_folds;
        let extra = items.len() % n_folds;
        let start = f * per + f.min(extra);
        let len = per + usize::from(f < extra);
        items[start..start + len].to_vec()
    };
    let masks = (0..n_folds)
        .map(|f| {
            let triples = chunk(&triple_order, f)
                .into_iter()
                .map(|idx| unflatten(graph, idx))
                .collect();
            HoldoutMask::new(triples, chunk(&node_order, f), seed)
        })
        .collect();
    Ok(masks)
}

/// Grid of hyperparameter candidates for [`grid_search`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_values: Vec<usize>,
    pub gamma_values: Vec<f64>,
    pub n_folds: usize,
    pub seed: u64,
    /// When set, structural holdout switches from k-fold partitions to
    /// independent biased draws at this tpe; attributes stay in training.
    pub tpe: Option<f64>,
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.gamma_values.is_empty() {
            return Err(Error::Validation("empty hyperparameter grid".into()));
        }
        if self.n_folds < 2 {
            return Err(Error::Validation("need at least 2 folds".into()));
        }
        Ok(())
    }
}

/// Held-out scores of one fitted model: AUC over held-out triples and
/// accuracy over held-out attribute rows, each absent when the mask holds
/// nothing of that kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HoldoutScores {
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Score fitted parameters on a mask's held-out entries.
pub fn evaluate_holdout(
    params: &ModelParams,
    graph: &MultilayerGraph,
    design: Option<&DesignMatrix>,
    mask: &HoldoutMask,
) -> Result<HoldoutScores> {
    mask.check_bounds(graph.n_nodes(), graph.n_layers())?;
    if params.n_nodes() != graph.n_nodes() {
        return Err(Error::Validation(format!(
            "parameters cover {} nodes, graph has {}",
            params.n_nodes(),
            graph.n_nodes()
        )));
    }
    let mut scores = HoldoutScores::default();
    if !mask.held_out_triples.is_empty() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for &(i, j, a) in &mask.held_out_triples {
            let score = params.poisson_mean(i, j, a);
            if graph.weight(i, j, a) > 0 {
                pos.push(score);
            } else {
                neg.push(score);
            }
        }
        if !pos.is_empty() && !neg.is_empty() {
            scores.auc = Some(auc(&pos, &neg)?);
        }
    }
    if let (Some(design), false) = (design, mask.held_out_attribute_nodes.is_empty()) {
        let nodes = &mask.held_out_attribute_nodes;
        let predicted: Vec<usize> = params
            .predict_attributes(nodes)
            .into_iter()
            .map(|(z, _)| z)
            .collect();
        let truth: Vec<usize> = nodes.iter().map(|&i| design.category(i)).collect();
        scores.accuracy = Some(accuracy(&predicted, &truth)?);
    }
    Ok(scores)
}

/// Per-cell cross-validation outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCell {
    pub c: usize,
    pub gamma: f64,
    pub auc_folds: Vec<f64>,
    pub acc_folds: Vec<f64>,
    pub auc_mean: Option<f64>,
    pub auc_std: Option<f64>,
    pub acc_mean: Option<f64>,
    pub acc_std: Option<f64>,
    pub failures: Vec<String>,
}

/// Full cross-validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub cells: Vec<CvCell>,
    pub selected: Option<(usize, f64)>,
    pub selection_rule: String,
    pub n_fits: usize,
    pub n_folds: usize,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// Fit every (C, gamma) cell on every fold's training data, score the
/// held-out entries and select the jointly best cell. Cell-fold jobs run
/// in parallel; a cell with any failed fold is recorded and excluded from
/// selection.
pub fn grid_search(
    graph: &MultilayerGraph,
    design: Option<&DesignMatrix>,
    grid: &GridSpec,
    template: &EmConfig,
) -> Result<CvReport> {
    grid.validate()?;
    let masks: Vec<HoldoutMask> = match grid.tpe {
        None => kfold_masks(graph, grid.n_folds, grid.seed)?,
        Some(tpe) => {
            let fraction = 1.0 / grid.n_folds as f64;
            (0..grid.n_folds)
                .map(|f| biased_holdout(graph, fraction, tpe, grid.seed.wrapping_add(f as u64)))
                .collect::<Result<_>>()?
        }
    };
    let mut jobs = Vec::new();
    for &c in &grid.c_values {
        for &gamma in &grid.gamma_values {
            for fold in 0..grid.n_folds {
                jobs.push((c, gamma, fold));
            }
        }
    }
    let outcomes: Vec<(usize, f64, usize, Result<HoldoutScores>)> = jobs
        .into_par_iter()
        .map(|(c, gamma, fold)| {
            let mut config = template.clone();
            config.n_communities = c;
            config.gamma = gamma;
            let outcome = fit(graph, design, &masks[fold], &config)
                .and_then(|result| evaluate_holdout(&result.params, graph, design, &masks[fold]));
            (c, gamma, fold, outcome)
        })
        .collect();

    let n_fits = outcomes.len();
    let mut cells = Vec::new();
    for &c in &grid.c_values {
        for &gamma in &grid.gamma_values {
            let mut auc_folds = Vec::new();
            let mut acc_folds = Vec::new();
            let mut failures = Vec::new();
            for (oc, og, fold, outcome) in &outcomes {
                if *oc != c || *og != gamma {
                    continue;
                }
                match outcome {
                    Ok(scores) => {
                        if let Some(a) = scores.auc {
                            auc_folds.push(a);
                        }
                        if let Some(a) = scores.accuracy {
                            acc_folds.push(a);
                        }
                    }
                    Err(e) => failures.push(format!("fold {fold}: {e}")),
                }
            }
            let (auc_mean, auc_std) =
                mean_std(&auc_folds).map_or((None, None), |(m, s)| (Some(m), Some(s)));
            let (acc_mean, acc_std) =
                mean_std(&acc_folds).map_or((None, None), |(m, s)| (Some(m), Some(s)));
            cells.push(CvCell {
                c,
                gamma,
                auc_folds,
                acc_folds,
                auc_mean,
                auc_std,
                acc_mean,
                acc_std,
                failures,
            });
        }
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
    let selected = select_joint(&candidates);
    Ok(CvReport {
        cells,
        selected,
        selection_rule: "max-min-normalized".to_string(),
        n_fits,
        n_folds: grid.n_folds,
    })
}

/// One cell's mean scores, input to [`select_joint`].
#[derive(Debug, Clone, Copy)]
pub struct CellScore {
    pub c: usize,
    pub gamma: f64,
    pub auc: f64,
    pub accuracy: Option<f64>,
}

/// Select the cell jointly closest to both grid maxima: normalize each
/// metric by its maximum over the grid and take the cell maximizing the
/// smaller of the two ratios. Ties go to smaller C, then smaller gamma.
pub fn select_joint(cells: &[CellScore]) -> Option<(usize, f64)> {
    if cells.is_empty() {
        return None;
    }
    let auc_max = cells
        .iter()
        .map(|c| c.auc)
        .fold(f64::NEG_INFINITY, f64::max);
    let acc_max = cells
        .iter()
        .filter_map(|c| c.accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let score = |cell: &CellScore| -> f64 {
        let auc_ratio = if auc_max > 0.0 {
            cell.auc / auc_max
        } else {
            1.0
        };
        match cell.accuracy {
            Some(acc) if acc_max > 0.0 => auc_ratio.min(acc / acc_max),
            _ => auc_ratio,
        }
    };
    let mut best = &cells[0];
    let mut best_score = score(best);
    for cell in &cells[1..] {
        let s = score(cell);
        let better = s > best_score
            || (s == best_score
                && (cell.c < best.c || (cell.c == best.c && cell.gamma < best.gamma)));
        if better {
            best = cell;
            best_score = s;
        }
    }
    Some((best.c, best.gamma))
}

/// One data point for the normalization regression.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RescaleObservation {
    pub n: f64,
    pub e: f64,
    pub z: f64,
    pub l_g: f64,
    pub l_x: f64,
}

/// Regressor choice per likelihood term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regressor {
    N,
    E,
    Z,
}

impl Regressor {
    fn value(self, obs: &RescaleObservation) -> f64 {
        match self {
            Regressor::N => obs.n,
            Regressor::E => obs.e,
            Regressor::Z => obs.z,
        }
    }
}

/// Ordinary least squares through the origin for both likelihood terms:
/// the structural term on `regressors_g` (default N and E) and the
/// attribute term on `regressors_x` (default N and Z).
pub fn fit_rescale_coefficients(
    observations: &[RescaleObservation],
    regressors_g: &[Regressor],
    regressors_x: &[Regressor],
) -> Result<RescaleCoefficients> {
    let solve =
        |regressors: &[Regressor], target: fn(&RescaleObservation) -> f64| -> Result<Vec<f64>> {
            let p = regressors.len();
            if p == 0 {
                return Ok(Vec::new());
            }
            if observations.len() < p + 1 {
                return Err(Error::Validation(format!(
                    "need at least {} observations for {p} regressor(s), got {}",
                    p + 1,
                    observations.len()
                )));
            }
            // normal equations (X'X) b = X'y
            let mut xtx = vec![vec![0.0; p]; p];
            let mut xty = vec![0.0; p];
            for obs in observations {
                let row: Vec<f64> = regressors.iter().map(|r| r.value(obs)).collect();
                let y = target(obs);
                for a in 0..p {
                    xty[a] += row[a] * y;
                    for b in 0..p {
                        xtx[a][b] += row[a] * row[b];
                    }
                }
            }
            solve_linear(xtx, xty)
        };
    let cg = solve(regressors_g, |o| o.l_g)?;
    let cx = solve(regressors_x, |o| o.l_x)?;
    let mut coeffs = RescaleCoefficients {
        cg_n: 0.0,
        cg_e: 0.0,
        cg_z: 0.0,
        cx_n: 0.0,
        cx_e: 0.0,
        cx_z: 0.0,
    };
    for (r, &c) in regressors_g.iter().zip(&cg) {
        match r {
            Regressor::N => coeffs.cg_n = c,
            Regressor::E => coeffs.cg_e = c,
            Regressor::Z => coeffs.cg_z = c,
        }
    }
    for (r, &c) in regressors_x.iter().zip(&cx) {
        match r {
            Regressor::N => coeffs.cx_n = c,
            Regressor::E => coeffs.cx_e = c,
            Regressor::Z => coeffs.cx_z = c,
        }
    }
    Ok(coeffs)
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let p = b.len();
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1.0);
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .expect("rows remain");
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return Err(Error::Validation("singular regression design".into()));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in 0..p {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..p {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Ok((0..p).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_attributes, generate_network, preset};
    use approx::assert_abs_diff_eq;

    fn small_graph() -> MultilayerGraph {
        let spec = preset("G1", 30, 5).unwrap();
        generate_network(&spec).unwrap().0
    }

    #[test]
    fn uniform_holdout_counts() {
        let rows: Vec<(String, String, String, u64)> = (0..99)
            .map(|i| (format!("n{i}"), format!("n{}", i + 1), "0".to_string(), 1))
            .chain((0..99).map(|i| (format!("n{i}"), format!("n{}", i + 1), "1".to_string(), 1)))
            .collect();
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        assert_eq!(graph.n_nodes(), 100);
        assert_eq!(graph.n_layers(), 2);
        let mask = uniform_holdout(&graph, 0.2, 3).unwrap();
        assert_eq!(mask.held_out_triples.len(), 4000);
        assert_eq!(mask.held_out_attribute_nodes.len(), 20);
        let empty = uniform_holdout(&graph, 0.0, 3).unwrap();
        assert!(empty.is_empty());
        let again = uniform_holdout(&graph, 0.2, 3).unwrap();
        assert_eq!(again.held_out_triples, mask.held_out_triples);
    }

    #[test]
    fn biased_weights_sum_to_one() {
        for &(e, total) in &[(49usize, 2000usize), (7, 81), (528, 7200), (123, 45678)] {
            for &tpe in &[0.001, 0.004, 0.015, 0.03, 0.5] {
                let w = BiasedWeights::new(tpe, e, total);
                assert_eq!(w.total_mass(), 1.0, "tpe={tpe} e={e} total={total}");
                // per-entry weights reproduce the class masses to rounding
                let sum = e as f64 * w.p1() + (total - e) as f64 * w.p2();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn biased_weights_uniform_at_density() {
        let g = small_graph();
        let e = g.n_entries();
        let total = g.n_nodes() * g.n_nodes() * g.n_layers();
        let tpe = e as f64 / total as f64;
        let w = BiasedWeights::new(tpe, e, total);
        assert_abs_diff_eq!(w.p1(), w.p2(), epsilon = 1e-18);
        assert_abs_diff_eq!(w.p1(), 1.0 / total as f64, epsilon = 1e-18);
    }

    #[test]
    fn biased_holdout_shape_and_determinism() {
        let g = small_graph();
        let mask = biased_holdout(&g, 0.2, 0.03, 9).unwrap();
        let total = g.n_nodes() * g.n_nodes() * g.n_layers();
        assert_eq!(
            mask.held_out_triples.len(),
            (0.2 * total as f64).ceil() as usize
        );
        assert!(mask.held_out_attribute_nodes.is_empty());
        let again = biased_holdout(&g, 0.2, 0.03, 9).unwrap();
        assert_eq!(mask.held_out_triples, again.held_out_triples);
    }

    #[test]
    fn biased_holdout_rejects_excessive_tpe() {
        let g = small_graph();
        // asking for more edges than exist
        let err = biased_holdout(&g, 0.5, 0.9, 1).unwrap_err();
        assert!(err.to_string().contains("held-out edges"));
    }

    #[test]
    fn kfold_masks_partition_everything() {
        let g = small_graph();
        let folds = kfold_masks(&g, 5, 4).unwrap();
        assert_eq!(folds.len(), 5);
        let total = g.n_nodes() * g.n_nodes() * g.n_layers();
        let mut seen = HashSet::new();
        let mut count = 0;
        for f in &folds {
            count += f.held_out_triples.len();
            seen.extend(f.held_out_triples.iter().copied());
            let share = f.held_out_triples.len() as f64 / total as f64;
            assert!((share - 0.2).abs() < 0.01, "share {share}");
        }
        assert_eq!(count, total);
        assert_eq!(seen.len(), total);
        let node_cover: usize = folds.iter().map(|f| f.held_out_attribute_nodes.len()).sum();
        assert_eq!(node_cover, g.n_nodes());
    }

    #[test]
    fn select_joint_rules() {
        // one dominating cell
        let cells = vec![
            CellScore {
                c: 2,
                gamma: 0.3,
                auc: 0.9,
                accuracy: Some(0.9),
            },
            CellScore {
                c: 3,
                gamma: 0.5,
                auc: 0.8,
                accuracy: Some(0.7),
            },
        ];
        assert_eq!(select_joint(&cells), Some((2, 0.3)));
        // symmetric tie resolved to smaller C
        let cells = vec![
            CellScore {
                c: 3,
                gamma: 0.1,
                auc: 1.0,
                accuracy: Some(0.8),
            },
            CellScore {
                c: 2,
                gamma: 0.9,
                auc: 0.8,
                accuracy: Some(1.0),
            },
        ];
        assert_eq!(select_joint(&cells), Some((2, 0.9)));
        // constant accuracy reduces to argmax auc
        let cells = vec![
            CellScore {
                c: 2,
                gamma: 0.1,
                auc: 0.6,
                accuracy: Some(0.5),
            },
            CellScore {
                c: 2,
                gamma: 0.5,
                auc: 0.9,
                accuracy: Some(0.5),
            },
        ];
        assert_eq!(select_joint(&cells), Some((2, 0.5)));
        assert_eq!(select_joint(&[]), None);
    }

    #[test]
    fn rescale_regression_recovers_exact_coefficients() {
        let truth = RescaleCoefficients {
            cg_n: -1.5,
            cg_e: -6.0,
            cg_z: 0.0,
            cx_n: -0.5,
            cx_e: 0.0,
            cx_z: -30.0,
        };
        let observations: Vec<RescaleObservation> = [
            (100.0, 900.0, 5.0),
            (200.0, 2100.0, 7.0),
            (350.0, 4000.0, 11.0),
            (440.0, 5600.0, 13.0),
        ]
        .iter()
        .map(|&(n, e, z)| RescaleObservation {
            n,
            e,
            z,
            l_g: truth.structural_denominator(n, e, z),
            l_x: truth.attribute_denominator(n, e, z),
        })
        .collect();
        let fitted = fit_rescale_coefficients(
            &observations,
            &[Regressor::N, Regressor::E],
            &[Regressor::N, Regressor::Z],
        )
        .unwrap();
        assert_abs_diff_eq!(fitted.cg_n, truth.cg_n, epsilon = 1e-9);
        assert_abs_diff_eq!(fitted.cg_e, truth.cg_e, epsilon = 1e-9);
        assert_abs_diff_eq!(fitted.cx_n, truth.cx_n, epsilon = 1e-9);
        assert_abs_diff_eq!(fitted.cx_z, truth.cx_z, epsilon = 1e-9);
    }

    #[test]
    fn rescale_regression_single_regressor_slope() {
        let observations = vec![
            RescaleObservation {
                n: 2.0,
                e: 0.0,
                z: 0.0,
                l_g: 6.0,
                l_x: 0.0,
            },
            RescaleObservation {
                n: 4.0,
                e: 0.0,
                z: 0.0,
                l_g: 12.0,
                l_x: 0.0,
            },
        ];
        let fitted = fit_rescale_coefficients(&observations, &[Regressor::N], &[]).unwrap();
        assert_abs_diff_eq!(fitted.cg_n, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rescale_regression_detects_singularity() {
        // duplicated regressor column
        let observations = vec![
            RescaleObservation {
                n: 1.0,
                e: 1.0,
                z: 0.0,
                l_g: 2.0,
                l_x: 0.0,
            },
            RescaleObservation {
                n: 2.0,
                e: 2.0,
                z: 0.0,
                l_g: 4.0,
                l_x: 0.0,
            },
            RescaleObservation {
                n: 3.0,
                e: 3.0,
                z: 0.0,
                l_g: 6.0,
                l_x: 0.0,
            },
        ];
        let err = fit_rescale_coefficients(&observations, &[Regressor::N, Regressor::E], &[])
            .unwrap_err();
        assert!(err.to_string().contains("singular"));
    }

    #[test]
    fn default_coefficients_give_negative_denominators() {
        let c = RescaleCoefficients::default();
        let d_g = c.structural_denominator(441.0, 5578.0, 13.0);
        let d_x = c.attribute_denominator(441.0, 5578.0, 13.0);
        assert!(d_g < 0.0 && d_x < 0.0);
        // a negative log-likelihood divided by either is positive
        assert!(-1000.0 / d_g > 0.0);
    }

    #[test]
    fn grid_limit_cells_populate_both_metrics() {
        // gamma 0 and gamma 1 are degenerate for one term each, yet every
        // cell must still report both held-out scores
        let spec = preset("G1", 36, 8).unwrap();
        let (graph, mut truth) = generate_network(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let design = generate_attributes(&mut truth, 0.8, 2, &mut rng).unwrap();
        let grid = GridSpec {
            c_values: vec![2],
            gamma_values: vec![0.0, 1.0],
            n_folds: 2,
            seed: 10,
            tpe: None,
        };
        let mut template = EmConfig::new(2, 0.5);
        template.n_restarts = 1;
        template.max_iterations = 40;
        let report = grid_search(&graph, Some(&design), &grid, &template).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert!(
                cell.failures.is_empty(),
                "gamma {}: {:?}",
                cell.gamma,
                cell.failures
            );
            assert!(cell.auc_mean.is_some(), "gamma {} missing auc", cell.gamma);
            assert!(
                cell.acc_mean.is_some(),
                "gamma {} missing accuracy",
                cell.gamma
            );
        }
        assert!(report.selected.is_some());
    }

    #[test]
    fn grid_search_counts_fits_and_selects() {
        let spec = preset("G1", 40, 6).unwrap();
        let (graph, mut truth) = generate_network(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let design = generate_attributes(&mut truth, 0.8, 2, &mut rng).unwrap();
        let grid = GridSpec {
            c_values: vec![2],
            gamma_values: vec![0.5],
            n_folds: 2,
            seed: 11,
            tpe: None,
        };
        let mut template = EmConfig::new(2, 0.5);
        template.n_restarts = 1;
        template.max_iterations = 60;
        let report = grid_search(&graph, Some(&design), &grid, &template).unwrap();
        assert_eq!(report.n_fits, 2);
        assert_eq!(report.selected, Some((2, 0.5)));
        let cell = &report.cells[0];
        if let Some(mean) = cell.auc_mean {
            let expected = cell.auc_folds.iter().sum::<f64>() / cell.auc_folds.len() as f64;
            assert_abs_diff_eq!(mean, expected, epsilon = 1e-12);
        }
    }
}
