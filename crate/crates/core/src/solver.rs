//! EM solver for the joint Poisson (structure) and multinomial (attribute)
//! likelihood, weighted by the scaling parameter gamma.
//!
//! One iteration alternates the expectation quantities h (per node and
//! observed category, a distribution over communities) and rho (per edge, a
//! distribution over community pairs) with closed-form block updates of
//! beta, U, V and W, in that order, each block seeing the freshest values.
//! rho is never materialized globally; it is recomputed edge by edge inside
//! each accumulation pass.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::DesignMatrix;
use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;
use crate::mask::HoldoutMask;
use crate::params::ModelParams;

/// Clamp applied inside logarithms only.
pub const LOG_EPS: f64 = 1e-12;

/// Per-term likelihood normalization coefficients.
///
/// The structural term is divided by `cg_n*N + cg_e*E + cg_z*Z` and the
/// attribute term by `cx_n*N + cx_e*E + cx_z*Z`, where E is the total edge
/// weight. Fitted log-likelihoods are negative, so fitted coefficients come
/// out negative and each ratio is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleCoefficients {
    #[serde(default)]
    pub cg_n: f64,
    #[serde(default)]
    pub cg_e: f64,
    #[serde(default)]
    pub cg_z: f64,
    #[serde(default)]
    pub cx_n: f64,
    #[serde(default)]
    pub cx_e: f64,
    #[serde(default)]
    pub cx_z: f64,
}

impl RescaleCoefficients {
    pub fn structural_denominator(&self, n: f64, e: f64, z: f64) -> f64 {
        self.cg_n * n + self.cg_e * e + self.cg_z * z
    }

    pub fn attribute_denominator(&self, n: f64, e: f64, z: f64) -> f64 {
        self.cx_n * n + self.cx_e * e + self.cx_z * z
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

impl Default for RescaleCoefficients {
    /// Coefficients estimated by regression on a corpus of social support
    /// networks; they transfer only to datasets of that kind.
    fn default() -> Self {
        RescaleCoefficients {
            cg_n: -1.778,
            cg_e: -6.158,
            cg_z: 0.0,
            cx_n: -0.486,
            cx_e: 0.0,
            cx_z: -33.862,
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmConfig {
    pub n_communities: usize,
    /// Weight of the attribute term, in [0, 1].
    pub gamma: f64,
    /// Absolute tolerance on the objective between checks.
    pub tolerance: f64,
    /// Iterations between convergence checks.
    pub check_interval: usize,
    pub max_iterations: usize,
    pub n_restarts: usize,
    pub seed: u64,
    /// Tie incoming and outgoing memberships (u = v).
    pub symmetric: bool,
    pub rescaling: Option<RescaleCoefficients>,
}

impl EmConfig {
    pub fn new(n_communities: usize, gamma: f64) -> Self {
        EmConfig {
            n_communities,
            gamma,
            tolerance: 1e-2,
            check_interval: 10,
            max_iterations: 500,
            n_restarts: 10,
            seed: 0,
            symmetric: false,
            rescaling: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_communities < 1 {
            return Err(Error::Validation("need at least one community".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Validation(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Validation("tolerance must be positive".into()));
        }
        if self.check_interval < 1 || self.max_iterations < 1 || self.n_restarts < 1 {
            return Err(Error::Validation(
                "check_interval, max_iterations and n_restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one fit: winning restart's parameters and objective trace.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub final_loglik: f64,
    pub loglik_trace: Vec<(usize, f64)>,
    pub converged: bool,
    pub restart_index: usize,
    pub iterations_used: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitMeta {
    final_loglik: f64,
    converged: bool,
    restart_index: usize,
    iterations_used: usize,
    trace: Vec<(usize, f64)>,
}

impl FitResult {
    /// Write U/V/Beta/W as CSV plus trace and metadata as JSON.
    pub fn save(
        &self,
        dir: &Path,
        node_labels: &[String],
        category_labels: &[String],
    ) -> Result<()> {
        self.params.save(dir, node_labels, category_labels)?;
        let meta = FitMeta {
            final_loglik: self.final_loglik,
            converged: self.converged,
            restart_index: self.restart_index,
            iterations_used: self.iterations_used,
            trace: self.loglik_trace.clone(),
        };
        fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// Diagnostics from one EM iteration.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    /// U rows kept at their previous value because the denominator vanished.
    pub held_u_rows: Vec<usize>,
    /// Same for V rows.
    pub held_v_rows: Vec<usize>,
    /// Beta rows kept because no responsibility mass reached the community.
    pub held_beta_rows: Vec<usize>,
    /// Edges whose expected mean was zero; responsibilities fell back to
    /// uniform.
    pub rho_fallbacks: usize,
}

#[derive(Debug, Clone, Copy)]
struct TrainEdge {
    i: usize,
    j: usize,
    layer: usize,
    a: f64,
}

/// Precomputed training view of one (graph, design, mask) triple.
///
/// The engine owns no parameters; [`EmEngine::step`] advances a caller-owned
/// [`ModelParams`] by one full iteration. Shared read-only across restarts.
pub struct EmEngine<'a> {
    graph: &'a MultilayerGraph,
    design: Option<&'a DesignMatrix>,
    config: EmConfig,
    gamma_eff: f64,
    rescale_denoms: Option<(f64, f64)>,
    train_edges: Vec<TrainEdge>,
    train_out: Vec<f64>,
    train_in: Vec<f64>,
    attr_train: Vec<bool>,
    n_train_attr: usize,
    test_by_layer: Vec<Vec<(usize, usize)>>,
    log_clamps: AtomicUsize,
}

impl<'a> EmEngine<'a> {
    pub fn new(
        graph: &'a MultilayerGraph,
        design: Option<&'a DesignMatrix>,
        mask: &HoldoutMask,
        config: &EmConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = graph.n_nodes();
        let l = graph.n_layers();
        mask.check_bounds(n, l)?;
        if let Some(d) = design {
            if d.n_nodes() != n {
                return Err(Error::Validation(format!(
                    "design matrix covers {} nodes, graph has {n}",
                    d.n_nodes()
                )));
            }
        } else if config.gamma > 0.0 {
            return Err(Error::Validation(
                "gamma > 0 requires a design matrix".into(),
            ));
        }

        let mut train_edges = Vec::with_capacity(graph.n_entries());
        let mut train_out = vec![0.0; n];
        let mut train_in = vec![0.0; n];
        for e in graph.edges() {
            if mask.holds_triple(e.source, e.target, e.layer) {
                continue;
            }
            let a = e.weight as f64;
            train_edges.push(TrainEdge {
                i: e.source,
                j: e.target,
                layer: e.layer,
                a,
            });
            train_out[e.source] += a;
            train_in[e.target] += a;
        }
        let mut attr_train = vec![design.is_some(); n];
        for &node in &mask.held_out_attribute_nodes {
            attr_train[node] = false;
        }
        let n_train_attr = attr_train.iter().filter(|&&t| t).count();
        let mut test_by_layer = vec![Vec::new(); l];
        for &(i, j, a) in &mask.held_out_triples {
            test_by_layer[a].push((i, j));
        }

        let z = design.map_or(1, |d| d.n_categories());
        let (gamma_eff, rescale_denoms) = match &config.rescaling {
            None => (config.gamma, None),
            Some(rc) => {
                let (nn, ee, zz) = (n as f64, graph.total_weight() as f64, z as f64);
                let d_g = rc.structural_denominator(nn, ee, zz);
                let d_x = rc.attribute_denominator(nn, ee, zz);
                if d_g == 0.0 || d_x == 0.0 {
                    return Err(Error::Validation(
                        "rescaling denominator is zero for this dataset".into(),
                    ));
                }
                // Dividing each term by its denominator is, up to an overall
                // positive or negative factor, the plain objective at an
                // effective gamma' = gamma*d_g / (gamma*d_g + (1-gamma)*d_x).
                // The factor cancels from every update, so the solver runs at
                // gamma' and only the reported objective is rescaled.
                let mix = config.gamma * d_g + (1.0 - config.gamma) * d_x;
                if mix == 0.0 {
                    return Err(Error::Validation(
                        "rescaling denominators cancel; effective gamma undefined".into(),
                    ));
                }
                let g_eff = config.gamma * d_g / mix;
                if !(0.0..=1.0).contains(&g_eff) {
                    return Err(Error::Validation(format!(
                        "effective gamma {g_eff} outside [0, 1]; \
                         rescaling denominators have mixed signs"
                    )));
                }
                (g_eff, Some((d_g, d_x)))
            }
        };
        if gamma_eff > 0.0 && n_train_attr == 0 {
            return Err(Error::Validation(
                "gamma > 0 requires at least one training attribute".into(),
            ));
        }

        Ok(EmEngine {
            graph,
            design,
            config: config.clone(),
            gamma_eff,
            rescale_denoms,
            train_edges,
            train_out,
            train_in,
            attr_train,
            n_train_attr,
            test_by_layer,
            log_clamps: AtomicUsize::new(0),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn n_layers(&self) -> usize {
        self.graph.n_layers()
    }

    pub fn n_categories(&self) -> usize {
        self.design.map_or(1, |d| d.n_categories())
    }

    /// Gamma actually driving the updates (differs from the configured one
    /// only when rescaling is active).
    pub fn gamma_effective(&self) -> f64 {
        self.gamma_eff
    }

    /// Times an observed mean had to be clamped inside a logarithm.
    pub fn log_clamp_count(&self) -> usize {
        self.log_clamps.load(Ordering::Relaxed)
    }

    pub fn n_train_edges(&self) -> usize {
        self.train_edges.len()
    }

    /// Responsibilities of communities for each training node's observed
    /// category: h_ik proportional to beta_k,z(i) * (u_ik + v_ik), each row
    /// summing to 1. Rows of nodes with a held-out attribute stay zero.
    /// A vanishing denominator falls back to the uniform distribution.
    pub fn e_step_h(&self, params: &ModelParams) -> Array2<f64> {
        let n = self.n_nodes();
        let c = params.n_communities();
        let mut h = Array2::zeros((n, c));
        let Some(design) = self.design else {
            return h;
        };
        for i in 0..n {
            if !self.attr_train[i] {
                continue;
            }
            let z = design.category(i);
            let mut total = 0.0;
            for k in 0..c {
                let x = params.beta[[k, z]] * (params.u[[i, k]] + params.v[[i, k]]);
                h[[i, k]] = x;
                total += x;
            }
            if total > 0.0 {
                for k in 0..c {
                    h[[i, k]] /= total;
                }
            } else {
                let uniform = 1.0 / c as f64;
                for k in 0..c {
                    h[[i, k]] = uniform;
                }
            }
        }
        h
    }

    /// Update of the community-category coupling: beta_kz proportional to
    /// the h mass of training nodes observed in category z, rows summing
    /// to 1. Rows with no mass keep their previous value and are reported.
    pub fn m_step_beta(
        &self,
        params: &ModelParams,
        h: &Array2<f64>,
    ) -> Result<(Array2<f64>, Vec<usize>)> {
        let design = self
            .design
            .ok_or_else(|| Error::Solver("beta update needs a design matrix".into()))?;
        if self.n_train_attr == 0 {
            return Err(Error::Solver("beta update with no training nodes".into()));
        }
        let c = params.n_communities();
        let z = design.n_categories();
        let mut beta = Array2::zeros((c, z));
        for i in 0..self.n_nodes() {
            if !self.attr_train[i] {
                continue;
            }
            let zi = design.category(i);
            for k in 0..c {
                beta[[k, zi]] += h[[i, k]];
            }
        }
        let mut held = Vec::new();
        for k in 0..c {
            let total: f64 = beta.row(k).sum();
            if total > 0.0 {
                beta.row_mut(k).mapv_inplace(|x| x / total);
            } else {
                beta.row_mut(k).assign(&params.beta.row(k));
                held.push(k);
            }
        }
        Ok((beta, held))
    }

    /// Structural responsibility mass flowing out of each node:
    /// b_ik = sum over training edges (i -> j, layer) of A * rho row
    /// marginal, computed edge by edge without materializing rho.
    fn out_responsibilities(&self, params: &ModelParams, stats: &mut StepStats) -> Array2<f64> {
        let c = params.n_communities();
        let mut b = Array2::zeros((self.n_nodes(), c));
        let mut s = vec![0.0; c];
        for e in &self.train_edges {
            for (k, sk) in s.iter_mut().enumerate() {
                let mut acc = 0.0;
                for l in 0..c {
                    acc += params.w[[e.layer, k, l]] * params.v[[e.j, l]];
                }
                *sk = acc;
            }
            let mean: f64 = (0..c).map(|k| params.u[[e.i, k]] * s[k]).sum();
            if mean > 0.0 {
                for k in 0..c {
                    b[[e.i, k]] += e.a * params.u[[e.i, k]] * s[k] / mean;
                }
            } else {
                stats.rho_fallbacks += 1;
                let share = e.a / c as f64;
                for k in 0..c {
                    b[[e.i, k]] += share;
                }
            }
        }
        b
    }

    /// Mirror of [`out_responsibilities`] for incoming edges:
    /// c_jl = sum over training edges of A * rho column marginal.
    fn in_responsibilities(&self, params: &ModelParams, stats: &mut StepStats) -> Array2<f64> {
        let c = params.n_communities();
        let mut acc = Array2::zeros((self.n_nodes(), c));
        let mut t = vec![0.0; c];
        for e in &self.train_edges {
            for (l, tl) in t.iter_mut().enumerate() {
                let mut sum = 0.0;
                for k in 0..c {
                    sum += params.u[[e.i, k]] * params.w[[e.layer, k, l]];
                }
                *tl = sum;
            }
            let mean: f64 = (0..c).map(|l| params.v[[e.j, l]] * t[l]).sum();
            if mean > 0.0 {
                for l in 0..c {
                    acc[[e.j, l]] += e.a * params.v[[e.j, l]] * t[l] / mean;
                }
            } else {
                stats.rho_fallbacks += 1;
                let share = e.a / c as f64;
                for l in 0..c {
                    acc[[e.j, l]] += share;
                }
            }
        }
        acc
    }

    /// Membership update shared by U and V:
    /// row_i = [g * h_i + (1-g) * struct_i] / [g_i + (1-g) * degree_i]
    /// where g_i drops to zero for nodes with a held-out attribute. Rows
    /// with a vanishing denominator keep their previous value.
    fn membership_update(
        &self,
        previous: &Array2<f64>,
        h: Option<&Array2<f64>>,
        structural: Option<&Array2<f64>>,
        degrees: &[f64],
        held: &mut Vec<usize>,
    ) -> Array2<f64> {
        let g = self.gamma_eff;
        let c = previous.ncols();
        let mut out = Array2::zeros(previous.raw_dim());
        for i in 0..previous.nrows() {
            let attr_weight = if self.attr_train[i] { g } else { 0.0 };
            let den = attr_weight + (1.0 - g) * degrees[i];
            if den > 0.0 {
                for k in 0..c {
                    let mut num = 0.0;
                    if attr_weight > 0.0 {
                        num += attr_weight * h.expect("h required when gamma > 0")[[i, k]];
                    }
                    if g < 1.0 {
                        num += (1.0 - g) * structural.expect("structural sums required")[[i, k]];
                    }
                    out[[i, k]] = num / den;
                }
            } else {
                out.row_mut(i).assign(&previous.row(i));
                held.push(i);
            }
        }
        out
    }

    /// U update (outgoing memberships).
    pub fn m_step_u(
        &self,
        params: &ModelParams,
        h: Option<&Array2<f64>>,
    ) -> (Array2<f64>, StepStats) {
        let mut stats = StepStats::default();
        let structural = if self.gamma_eff < 1.0 {
            Some(self.out_responsibilities(params, &mut stats))
        } else {
            None
        };
        let mut held = Vec::new();
        let u = self.membership_update(
            &params.u,
            h,
            structural.as_ref(),
            &self.train_out,
            &mut held,
        );
        stats.held_u_rows = held;
        (u, stats)
    }

    /// V update (incoming memberships).
    pub fn m_step_v(
        &self,
        params: &ModelParams,
        h: Option<&Array2<f64>>,
    ) -> (Array2<f64>, StepStats) {
        let mut stats = StepStats::default();
        let structural = if self.gamma_eff < 1.0 {
            Some(self.in_responsibilities(params, &mut stats))
        } else {
            None
        };
        let mut held = Vec::new();
        let v =
            self.membership_update(&params.v, h, structural.as_ref(), &self.train_in, &mut held);
        stats.held_v_rows = held;
        (v, stats)
    }

    /// Numerator and denominator of the affinity update. The numerator is
    /// the responsibility-weighted edge mass per layer and community pair;
    /// the denominator is the product of membership column sums minus the
    /// held-out contribution.
    pub fn m_step_w_parts(
        &self,
        params: &ModelParams,
        stats: &mut StepStats,
    ) -> (Array3<f64>, Array3<f64>) {
        let c = params.n_communities();
        let l = self.n_layers();
        let mut num = Array3::zeros((l, c, c));
        let mut s = vec![0.0; c];
        for e in &self.train_edges {
            for (k, sk) in s.iter_mut().enumerate() {
                let mut acc = 0.0;
                for ll in 0..c {
                    acc += params.w[[e.layer, k, ll]] * params.v[[e.j, ll]];
                }
                *sk = acc;
            }
            let mean: f64 = (0..c).map(|k| params.u[[e.i, k]] * s[k]).sum();
            if mean > 0.0 {
                for k in 0..c {
                    let uik = params.u[[e.i, k]];
                    if uik == 0.0 {
                        continue;
                    }
                    for ll in 0..c {
                        num[[e.layer, k, ll]] +=
                            e.a * uik * params.w[[e.layer, k, ll]] * params.v[[e.j, ll]] / mean;
                    }
                }
            } else {
                stats.rho_fallbacks += 1;
                let share = e.a / (c * c) as f64;
                for k in 0..c {
                    for ll in 0..c {
                        num[[e.layer, k, ll]] += share;
                    }
                }
            }
        }
        let su: Vec<f64> = (0..c).map(|k| params.u.column(k).sum()).collect();
        let sv: Vec<f64> = (0..c).map(|l2| params.v.column(l2).sum()).collect();
        let mut den = Array3::zeros((l, c, c));
        for a in 0..l {
            for k in 0..c {
                for ll in 0..c {
                    den[[a, k, ll]] = su[k] * sv[ll];
                }
            }
        }
        for (a, pairs) in self.test_by_layer.iter().enumerate() {
            for &(i, j) in pairs {
                for k in 0..c {
                    let uik = params.u[[i, k]];
                    for ll in 0..c {
                        den[[a, k, ll]] -= uik * params.v[[j, ll]];
                    }
                }
            }
        }
        (num, den)
    }

    /// W update; community pairs with no denominator mass are set to zero.
    pub fn m_step_w(&self, params: &ModelParams, stats: &mut StepStats) -> Array3<f64> {
        let (num, den) = self.m_step_w_parts(params, stats);
        let mut w = num;
        for (x, d) in w.iter_mut().zip(den.iter()) {
            if *d > 0.0 {
                *x /= d;
            } else {
                *x = 0.0;
            }
        }
        w
    }

    /// One full EM iteration in block order beta, U, V, W, recomputing the
    /// expectation quantities from the freshest parameters before each
    /// block that needs them.
    pub fn step(&self, params: &mut ModelParams) -> StepStats {
        let g = self.gamma_eff;
        let mut stats = StepStats::default();
        if g > 0.0 {
            let h = self.e_step_h(params);
            let (beta, held) = self
                .m_step_beta(params, &h)
                .expect("training attributes checked at construction");
            params.beta = beta;
            stats.held_beta_rows = held;
        }
        if self.config.symmetric {
            let h = if g > 0.0 {
                Some(self.e_step_h(params))
            } else {
                None
            };
            let (combined, degrees) = if g < 1.0 {
                let mut out = self.out_responsibilities(params, &mut stats);
                let inn = self.in_responsibilities(params, &mut stats);
                out += &inn;
                let degrees: Vec<f64> = self
                    .train_out
                    .iter()
                    .zip(&self.train_in)
                    .map(|(a, b)| a + b)
                    .collect();
                (Some(out), degrees)
            } else {
                (None, vec![0.0; self.n_nodes()])
            };
            let mut held = Vec::new();
            let u = self.membership_update(
                &params.u,
                h.as_ref(),
                combined.as_ref(),
                &degrees,
                &mut held,
            );
            params.v = u.clone();
            params.u = u;
            stats.held_u_rows = held.clone();
            stats.held_v_rows = held;
        } else {
            let h = if g > 0.0 {
                Some(self.e_step_h(params))
            } else {
                None
            };
            let (u, s) = self.m_step_u(params, h.as_ref());
            params.u = u;
            stats.held_u_rows = s.held_u_rows;
            stats.rho_fallbacks += s.rho_fallbacks;

            let h = if g > 0.0 {
                Some(self.e_step_h(params))
            } else {
                None
            };
            let (v, s) = self.m_step_v(params, h.as_ref());
            params.v = v;
            stats.held_v_rows = s.held_v_rows;
            stats.rho_fallbacks += s.rho_fallbacks;
        }
        if g < 1.0 {
            params.w = self.m_step_w(params, &mut stats);
        }
        stats
    }

    /// Structural and attribute log-likelihoods over training entries only,
    /// with parameter-independent factorial constants omitted.
    pub fn log_likelihood_parts(&self, params: &ModelParams) -> (f64, f64) {
        let c = params.n_communities();
        let mut lg = 0.0;
        for e in &self.train_edges {
            let mean = params.poisson_mean(e.i, e.j, e.layer);
            if mean < LOG_EPS {
                self.log_clamps.fetch_add(1, Ordering::Relaxed);
            }
            lg += e.a * mean.max(LOG_EPS).ln();
        }
        let su: Vec<f64> = (0..c).map(|k| params.u.column(k).sum()).collect();
        let sv: Vec<f64> = (0..c).map(|l| params.v.column(l).sum()).collect();
        let mut total_mean = 0.0;
        for a in 0..self.n_layers() {
            for k in 0..c {
                for l in 0..c {
                    total_mean += params.w[[a, k, l]] * su[k] * sv[l];
                }
            }
        }
        let mut test_mean = 0.0;
        for (a, pairs) in self.test_by_layer.iter().enumerate() {
            for &(i, j) in pairs {
                test_mean += params.poisson_mean(i, j, a);
            }
        }
        lg -= total_mean - test_mean;

        let mut lx = 0.0;
        if let Some(design) = self.design {
            for i in 0..self.n_nodes() {
                if !self.attr_train[i] {
                    continue;
                }
                let pi = params.attribute_probs(i)[design.category(i)];
                if pi < LOG_EPS {
                    self.log_clamps.fetch_add(1, Ordering::Relaxed);
                }
                lx += pi.max(LOG_EPS).ln();
            }
        }
        (lg, lx)
    }

    /// The gamma-weighted objective; with rescaling active each term is
    /// divided by its coefficient denominator first.
    pub fn log_likelihood(&self, params: &ModelParams) -> f64 {
        let (lg, lx) = self.log_likelihood_parts(params);
        let gamma = self.config.gamma;
        match self.rescale_denoms {
            None => (1.0 - gamma) * lg + gamma * lx,
            Some((d_g, d_x)) => (1.0 - gamma) * lg / d_g + gamma * lx / d_x,
        }
    }

    /// Ascent direction of the updates: the plain objective at the
    /// effective gamma. Identical to [`log_likelihood`] without rescaling;
    /// with rescaling the reported value is an affine image of this one
    /// whose orientation flips when the denominators are negative, so
    /// restart selection must compare this quantity.
    pub fn objective_effective(&self, params: &ModelParams) -> f64 {
        let (lg, lx) = self.log_likelihood_parts(params);
        (1.0 - self.gamma_eff) * lg + self.gamma_eff * lx
    }

    fn run_restart(&self, restart: usize) -> FitResult {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(restart as u64);
        let mut params = ModelParams::init(
            self.n_nodes(),
            self.config.n_communities,
            self.n_layers(),
            self.n_categories(),
            &mut rng,
        );
        if self.config.symmetric {
            params.v = params.u.clone();
        }
        let mut trace = vec![(0usize, self.log_likelihood(&params))];
        let mut passes = 0;
        let mut converged = false;
        let mut iterations_used = 0;
        for it in 1..=self.config.max_iterations {
            self.step(&mut params);
            iterations_used = it;
            if it % self.config.check_interval == 0 {
                let value = self.log_likelihood(&params);
                let previous = trace.last().expect("trace seeded").1;
                trace.push((it, value));
                if value.is_nan() {
                    break;
                }
                if (value - previous).abs() < self.config.tolerance {
                    passes += 1;
                } else {
                    passes = 0;
                }
                if passes >= 2 {
                    converged = true;
                    break;
                }
            }
        }
        if trace.last().map(|&(it, _)| it) != Some(iterations_used) {
            trace.push((iterations_used, self.log_likelihood(&params)));
        }
        let final_loglik = trace.last().expect("trace nonempty").1;
        FitResult {
            params,
            final_loglik,
            loglik_trace: trace,
            converged,
            restart_index: restart,
            iterations_used,
        }
    }
}

/// Fit parameters by EM with random restarts, returning the restart with
/// the highest final objective (lowest index on ties). Restarts run in
/// parallel on independent random streams derived from (seed, restart).
pub fn fit(
    graph: &MultilayerGraph,
    design: Option<&DesignMatrix>,
    mask: &HoldoutMask,
    config: &EmConfig,
) -> Result<FitResult> {
    let engine = EmEngine::new(graph, design, mask, config)?;
    if engine.gamma_effective() < 1.0 && engine.n_train_edges() == 0 {
        return Err(Error::Validation(
            "gamma < 1 requires at least one training edge".into(),
        ));
    }
    let results: Vec<FitResult> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| engine.run_restart(r))
        .collect();
    let mut best: Option<(f64, FitResult)> = None;
    let mut diverged = 0;
    for result in results {
        let value = engine.objective_effective(&result.params);
        if value.is_nan() || result.final_loglik.is_nan() {
            diverged += 1;
            continue;
        }
        match &best {
            Some((bv, _)) if value <= *bv => {}
            _ => best = Some((value, result)),
        }
    }
    best.map(|(_, result)| result).ok_or_else(|| {
        Error::Solver(format!(
            "all {diverged} restart(s) diverged to NaN \
             (C={}, gamma={}, seed={})",
            config.n_communities, config.gamma, config.seed
        ))
    })
}

/// Responsibilities over community pairs for one edge:
/// rho_kl proportional to u_ik v_jl w_kl, entries summing to 1. A vanishing
/// mean falls back to the uniform distribution.
pub fn e_step_rho(params: &ModelParams, i: usize, j: usize, layer: usize) -> Array2<f64> {
    let c = params.n_communities();
    let mut rho = Array2::zeros((c, c));
    let mut total = 0.0;
    for k in 0..c {
        for l in 0..c {
            let x = params.u[[i, k]] * params.v[[j, l]] * params.w[[layer, k, l]];
            rho[[k, l]] = x;
            total += x;
        }
    }
    if total > 0.0 {
        rho.mapv_inplace(|x| x / total);
    } else {
        rho.fill(1.0 / (c * c) as f64);
    }
    rho
}

/// Standalone objective evaluation for given parameters.
pub fn log_likelihood(
    params: &ModelParams,
    graph: &MultilayerGraph,
    design: Option<&DesignMatrix>,
    mask: &HoldoutMask,
    gamma: f64,
    rescaling: Option<RescaleCoefficients>,
) -> Result<f64> {
    let mut config = EmConfig::new(params.n_communities(), gamma);
    config.rescaling = rescaling;
    let engine = EmEngine::new(graph, design, mask, &config)?;
    Ok(engine.log_likelihood(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn pair_graph() -> MultilayerGraph {
        // one edge a -> b in a single layer
        MultilayerGraph::from_rows(&[("a", "b", "0", 1u64)], true, &[]).unwrap()
    }

    fn design_two(categories: &[usize], z: usize) -> DesignMatrix {
        let labels: Vec<String> = (0..z).map(|i| format!("z{i}")).collect();
        DesignMatrix::from_assignment(categories.to_vec(), labels).unwrap()
    }

    fn engine_for<'a>(
        graph: &'a MultilayerGraph,
        design: Option<&'a DesignMatrix>,
        gamma: f64,
        c: usize,
    ) -> EmEngine<'a> {
        let config = EmConfig::new(c, gamma);
        EmEngine::new(graph, design, &HoldoutMask::empty(), &config).unwrap()
    }

    #[test]
    fn e_step_h_hand_value() {
        let graph = pair_graph();
        let design = design_two(&[0, 0], 2);
        let engine = engine_for(&graph, Some(&design), 0.5, 2);
        let params = ModelParams {
            u: array![[0.2, 0.8], [0.2, 0.8]],
            v: array![[0.4, 0.6], [0.4, 0.6]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.5, 0.5], [0.25, 0.75]],
        };
        let h = engine.e_step_h(&params);
        assert_abs_diff_eq!(h[[0, 0]], 6.0 / 13.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h[[0, 1]], 7.0 / 13.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.row(0).sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn e_step_h_single_community_is_one() {
        let graph = pair_graph();
        let design = design_two(&[0, 1], 2);
        let engine = engine_for(&graph, Some(&design), 0.5, 1);
        let params = ModelParams {
            u: array![[1.0], [1.0]],
            v: array![[1.0], [1.0]],
            w: Array3::from_shape_vec((1, 1, 1), vec![0.5]).unwrap(),
            beta: array![[0.3, 0.7]],
        };
        let h = engine.e_step_h(&params);
        assert_abs_diff_eq!(h[[0, 0]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h[[1, 0]], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn e_step_h_zero_column_uniform_fallback() {
        let graph = pair_graph();
        let design = design_two(&[0, 0], 2);
        let engine = engine_for(&graph, Some(&design), 0.5, 2);
        let params = ModelParams {
            u: array![[0.5, 0.5], [0.5, 0.5]],
            v: array![[0.5, 0.5], [0.5, 0.5]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.0, 1.0], [0.0, 1.0]],
        };
        let h = engine.e_step_h(&params);
        assert_abs_diff_eq!(h[[0, 0]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h[[0, 1]], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn e_step_rho_cases() {
        let single = ModelParams {
            u: array![[1.0], [1.0]],
            v: array![[1.0], [1.0]],
            w: Array3::from_shape_vec((1, 1, 1), vec![0.3]).unwrap(),
            beta: array![[1.0]],
        };
        assert_abs_diff_eq!(e_step_rho(&single, 0, 1, 0)[[0, 0]], 1.0, epsilon = 1e-15);

        let hard = ModelParams {
            u: array![[1.0, 0.0], [1.0, 0.0]],
            v: array![[1.0, 0.0], [1.0, 0.0]],
            w: Array3::from_shape_vec((1, 2, 2), vec![0.9, 0.1, 0.1, 0.9]).unwrap(),
            beta: array![[1.0], [1.0]],
        };
        let rho = e_step_rho(&hard, 0, 1, 0);
        assert_abs_diff_eq!(rho[[0, 0]], 1.0, epsilon = 1e-15);

        let mixed = ModelParams {
            u: array![[0.5, 0.5], [0.5, 0.5]],
            v: array![[0.5, 0.5], [0.5, 0.5]],
            w: Array3::from_shape_vec((1, 2, 2), vec![2.0, 0.0, 0.0, 2.0]).unwrap(),
            beta: array![[1.0], [1.0]],
        };
        let rho = e_step_rho(&mixed, 0, 1, 0);
        assert_abs_diff_eq!(rho[[0, 0]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[[1, 1]], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[[0, 1]], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn m_step_beta_hand_values() {
        // two nodes, categories 0 and 1, h = (0.5, 0.5) for both
        let graph = pair_graph();
        let design = design_two(&[0, 1], 2);
        let engine = engine_for(&graph, Some(&design), 0.5, 2);
        let params = ModelParams {
            u: array![[0.5, 0.5], [0.5, 0.5]],
            v: array![[0.5, 0.5], [0.5, 0.5]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.5, 0.5], [0.5, 0.5]],
        };
        let h = array![[0.5, 0.5], [0.5, 0.5]];
        let (beta, held) = engine.m_step_beta(&params, &h).unwrap();
        assert!(held.is_empty());
        for k in 0..2 {
            for z in 0..2 {
                assert_abs_diff_eq!(beta[[k, z]], 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn m_step_beta_concentrated() {
        // every node in category 1 with h concentrated on community 0
        let graph = pair_graph();
        let design = design_two(&[1, 1], 2);
        let engine = engine_for(&graph, Some(&design), 0.5, 2);
        let params = ModelParams {
            u: array![[1.0, 0.0], [1.0, 0.0]],
            v: array![[1.0, 0.0], [1.0, 0.0]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.5, 0.5], [0.5, 0.5]],
        };
        let h = array![[1.0, 0.0], [1.0, 0.0]];
        let (beta, held) = engine.m_step_beta(&params, &h).unwrap();
        assert_abs_diff_eq!(beta[[0, 1]], 1.0, epsilon = 1e-12);
        // community 1 got no mass: previous row kept and flagged
        assert_eq!(held, vec![1]);
        assert_abs_diff_eq!(beta[[1, 0]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn m_step_beta_single_node_one_hot() {
        let graph = MultilayerGraph::from_rows(&[("a", "b", "0", 1u64)], true, &[]).unwrap();
        let design = design_two(&[1, 1], 3);
        let mask = HoldoutMask::new(vec![], vec![1], 0);
        let config = EmConfig::new(2, 0.5);
        let engine = EmEngine::new(&graph, Some(&design), &mask, &config).unwrap();
        let params = ModelParams {
            u: array![[0.5, 0.5], [0.5, 0.5]],
            v: array![[0.5, 0.5], [0.5, 0.5]],
            w: Array3::zeros((1, 2, 2)),
            beta: Array2::from_elem((2, 3), 1.0 / 3.0),
        };
        let h = engine.e_step_h(&params);
        let (beta, _) = engine.m_step_beta(&params, &h).unwrap();
        // only node 0 trains; each row is its one-hot category
        for k in 0..2 {
            assert_abs_diff_eq!(beta[[k, 1]], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(beta[[k, 0]], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn m_step_u_pure_attribute_at_gamma_one() {
        let graph = pair_graph();
        let design = design_two(&[0, 1], 2);
        let engine = engine_for(&graph, Some(&design), 1.0, 2);
        let params = ModelParams {
            u: array![[0.9, 0.1], [0.9, 0.1]],
            v: array![[0.9, 0.1], [0.9, 0.1]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.6, 0.4], [0.3, 0.7]],
        };
        let h = engine.e_step_h(&params);
        let (u, _) = engine.m_step_u(&params, Some(&h));
        for i in 0..2 {
            for k in 0..2 {
                assert_abs_diff_eq!(u[[i, k]], h[[i, k]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn m_step_u_structure_only_single_edge() {
        let graph = pair_graph();
        let engine = engine_for(&graph, None, 0.0, 2);
        // rho row marginal equals u_0 when v_1 and the affinity columns are flat
        let params = ModelParams {
            u: array![[0.3, 0.7], [0.5, 0.5]],
            v: array![[0.5, 0.5], [1.0, 0.0]],
            w: Array3::from_shape_vec((1, 2, 2), vec![1.0, 0.0, 1.0, 0.0]).unwrap(),
            beta: array![[1.0], [1.0]],
        };
        let (u, stats) = engine.m_step_u(&params, None);
        assert_abs_diff_eq!(u[[0, 0]], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(u[[0, 1]], 0.7, epsilon = 1e-12);
        // node 1 has no outgoing training edge: previous row kept
        assert_eq!(stats.held_u_rows, vec![1]);
        assert_abs_diff_eq!(u[[1, 0]], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn m_step_w_single_pair() {
        let graph = pair_graph();
        let engine = engine_for(&graph, None, 0.0, 1);
        let params = ModelParams {
            u: array![[1.0], [1.0]],
            v: array![[1.0], [1.0]],
            w: Array3::from_shape_vec((1, 1, 1), vec![0.7]).unwrap(),
            beta: array![[1.0]],
        };
        let mut stats = StepStats::default();
        let w = engine.m_step_w(&params, &mut stats);
        assert_abs_diff_eq!(w[[0, 0, 0]], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn m_step_w_concentrated_block() {
        // all memberships on community 0: w_00 = total weight / N^2,
        // empty pairs go to zero
        let rows = [("a", "b", "0", 2u64), ("b", "c", "0", 1u64)];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let engine = engine_for(&graph, None, 0.0, 2);
        let n = graph.n_nodes() as f64;
        let u = Array2::from_shape_fn((3, 2), |(_, k)| if k == 0 { 1.0 } else { 0.0 });
        let params = ModelParams {
            u: u.clone(),
            v: u,
            w: Array3::from_elem((1, 2, 2), 0.5),
            beta: array![[1.0], [1.0]],
        };
        let mut stats = StepStats::default();
        let w = engine.m_step_w(&params, &mut stats);
        assert_abs_diff_eq!(w[[0, 0, 0]], 3.0 / (n * n), epsilon = 1e-12);
        assert_abs_diff_eq!(w[[0, 0, 1]], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[[0, 1, 1]], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_term_identity_per_layer() {
        // without a mask the affinity numerator sums to the layer weight
        let rows = [
            ("a", "b", "0", 2u64),
            ("b", "c", "0", 1),
            ("c", "a", "1", 3),
            ("a", "c", "1", 1),
        ];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let engine = engine_for(&graph, None, 0.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = ModelParams::init(3, 2, 2, 1, &mut rng);
        let mut stats = StepStats::default();
        let (num, _) = engine.m_step_w_parts(&params, &mut stats);
        for a in 0..2 {
            let total: f64 = num.index_axis(ndarray::Axis(0), a).iter().sum();
            assert_abs_diff_eq!(total, graph.layer_weight(a) as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn loglik_gamma_one_is_attribute_term() {
        let graph = pair_graph();
        let design = design_two(&[0, 1], 2);
        let engine = engine_for(&graph, Some(&design), 1.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ModelParams::init(2, 2, 1, 2, &mut rng);
        let (_, lx) = engine.log_likelihood_parts(&params);
        assert_abs_diff_eq!(engine.log_likelihood(&params), lx, epsilon = 1e-12);
    }

    #[test]
    fn loglik_empty_graph_zero_affinity_is_zero() {
        let graph = MultilayerGraph::from_rows::<&str>(&[], true, &["a", "b"]).unwrap();
        let engine = engine_for(&graph, None, 0.0, 2);
        let params = ModelParams {
            u: array![[0.5, 0.5], [0.5, 0.5]],
            v: array![[0.5, 0.5], [0.5, 0.5]],
            w: Array3::zeros((1, 2, 2)),
            beta: array![[0.5, 0.5], [0.5, 0.5]],
        };
        assert_abs_diff_eq!(engine.log_likelihood(&params), 0.0, epsilon = 1e-15);
    }

    /// Brute-force objective over every tensor entry and attribute row.
    fn dense_loglik(
        params: &ModelParams,
        graph: &MultilayerGraph,
        design: &DesignMatrix,
        mask: &HoldoutMask,
        gamma: f64,
    ) -> f64 {
        let n = graph.n_nodes();
        let mut lg = 0.0;
        for a in 0..graph.n_layers() {
            for i in 0..n {
                for j in 0..n {
                    if mask.holds_triple(i, j, a) {
                        continue;
                    }
                    let mean = params.poisson_mean(i, j, a);
                    let weight = graph.weight(i, j, a) as f64;
                    if weight > 0.0 {
                        lg += weight * mean.max(LOG_EPS).ln();
                    }
                    lg -= mean;
                }
            }
        }
        let mut lx = 0.0;
        for i in 0..n {
            if mask.holds_attribute(i) {
                continue;
            }
            lx += params.attribute_probs(i)[design.category(i)]
                .max(LOG_EPS)
                .ln();
        }
        (1.0 - gamma) * lg + gamma * lx
    }

    #[test]
    fn loglik_matches_dense_enumeration() {
        let rows = [
            ("a", "b", "0", 1u64),
            ("b", "c", "0", 2),
            ("c", "d", "1", 1),
            ("d", "a", "1", 1),
            ("a", "c", "1", 3),
        ];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let design = design_two(&[0, 1, 1, 0], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = ModelParams::init(4, 2, 2, 2, &mut rng);
        for gamma in [0.0, 0.4, 1.0] {
            let engine = engine_for(&graph, Some(&design), gamma, 2);
            let expected = dense_loglik(&params, &graph, &design, &HoldoutMask::empty(), gamma);
            assert_abs_diff_eq!(engine.log_likelihood(&params), expected, epsilon = 1e-9);
        }
        // masked variant
        let mask = HoldoutMask::new(vec![(0, 1, 0), (2, 3, 1), (1, 1, 0)], vec![2], 1);
        let config = EmConfig::new(2, 0.4);
        let engine = EmEngine::new(&graph, Some(&design), &mask, &config).unwrap();
        let expected = dense_loglik(&params, &graph, &design, &mask, 0.4);
        assert_abs_diff_eq!(engine.log_likelihood(&params), expected, epsilon = 1e-9);
    }

    #[test]
    fn fit_is_deterministic() {
        let rows = [
            ("a", "b", "0", 1u64),
            ("b", "c", "0", 1),
            ("c", "a", "0", 1),
            ("d", "a", "0", 1),
        ];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let design = design_two(&[0, 1, 0, 1], 2);
        let mut config = EmConfig::new(2, 0.5);
        config.n_restarts = 3;
        config.seed = 77;
        let r1 = fit(&graph, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        let r2 = fit(&graph, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        assert_eq!(r1.params, r2.params);
        assert_eq!(r1.final_loglik.to_bits(), r2.final_loglik.to_bits());
        assert_eq!(r1.restart_index, r2.restart_index);
        assert_eq!(r1.loglik_trace, r2.loglik_trace);
    }

    #[test]
    fn fit_single_community_closed_form() {
        let rows = [
            ("a", "b", "0", 1u64),
            ("b", "c", "0", 1),
            ("c", "a", "0", 2),
        ];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let design = design_two(&[0, 0, 1], 2);
        let mut config = EmConfig::new(1, 0.5);
        config.n_restarts = 2;
        let result = fit(&graph, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        assert!(result.converged);
        assert!(result.params.u.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(result.params.v.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert_abs_diff_eq!(result.params.beta[[0, 0]], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(result.params.beta[[0, 1]], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_one_fixed_point_ignores_graph() {
        let g1 =
            MultilayerGraph::from_rows(&[("a", "b", "0", 1u64), ("b", "c", "0", 1)], true, &[])
                .unwrap();
        let g2 = MultilayerGraph::from_rows(
            &[
                ("a", "c", "0", 5u64),
                ("c", "b", "0", 2),
                ("b", "a", "0", 1),
            ],
            true,
            &[],
        )
        .unwrap();
        let design = design_two(&[0, 1, 1], 2);
        let mut config = EmConfig::new(2, 1.0);
        config.n_restarts = 1;
        config.seed = 3;
        let r1 = fit(&g1, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        let r2 = fit(&g2, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        assert_eq!(r1.params.u, r2.params.u);
        assert_eq!(r1.params.beta, r2.params.beta);
    }

    #[test]
    fn gamma_zero_fixed_point_ignores_design() {
        let graph = MultilayerGraph::from_rows(
            &[
                ("a", "b", "0", 1u64),
                ("b", "c", "0", 1),
                ("c", "a", "0", 1),
            ],
            true,
            &[],
        )
        .unwrap();
        let d1 = design_two(&[0, 1, 0], 2);
        let d2 = design_two(&[1, 1, 0], 2);
        let mut config = EmConfig::new(2, 0.0);
        config.n_restarts = 1;
        config.seed = 5;
        let r1 = fit(&graph, Some(&d1), &HoldoutMask::empty(), &config).unwrap();
        let r2 = fit(&graph, Some(&d2), &HoldoutMask::empty(), &config).unwrap();
        assert_eq!(r1.params.u, r2.params.u);
        assert_eq!(r1.params.v, r2.params.v);
        assert_eq!(r1.params.w, r2.params.w);
    }

    #[test]
    fn symmetric_mode_keeps_u_equal_v() {
        let graph = MultilayerGraph::from_rows(
            &[
                ("a", "b", "0", 1u64),
                ("b", "c", "0", 1),
                ("c", "a", "0", 1),
            ],
            false,
            &[],
        )
        .unwrap();
        let design = design_two(&[0, 1, 0], 2);
        let mut config = EmConfig::new(2, 0.3);
        config.symmetric = true;
        config.n_restarts = 2;
        let result = fit(&graph, Some(&design), &HoldoutMask::empty(), &config).unwrap();
        assert_eq!(result.params.u, result.params.v);
    }

    #[test]
    fn rescaling_reduces_to_effective_gamma() {
        let rows = [
            ("a", "b", "0", 1u64),
            ("b", "c", "0", 1),
            ("c", "d", "0", 1),
            ("d", "a", "0", 1),
        ];
        let graph = MultilayerGraph::from_rows(&rows, true, &[]).unwrap();
        let design = design_two(&[0, 0, 1, 1], 2);
        let coeffs = RescaleCoefficients::default();
        let mut rescaled = EmConfig::new(2, 0.5);
        rescaled.rescaling = Some(coeffs);
        rescaled.n_restarts = 2;
        rescaled.seed = 11;
        // pin the iteration count: the monitored objectives differ in scale,
        // so early stopping would otherwise fire at different iterations
        rescaled.tolerance = 1e-300;
        rescaled.max_iterations = 40;
        let engine =
            EmEngine::new(&graph, Some(&design), &HoldoutMask::empty(), &rescaled).unwrap();
        let g_eff = engine.gamma_effective();
        let (n, e, z) = (4.0, graph.total_weight() as f64, 2.0);
        let d_g = coeffs.structural_denominator(n, e, z);
        let d_x = coeffs.attribute_denominator(n, e, z);
        assert_abs_diff_eq!(g_eff, 0.5 * d_g / (0.5 * d_g + 0.5 * d_x), epsilon = 1e-12);

        let mut plain = rescaled.clone();
        plain.gamma = g_eff;
        plain.rescaling = None;
        let r1 = fit(&graph, Some(&design), &HoldoutMask::empty(), &rescaled).unwrap();
        let r2 = fit(&graph, Some(&design), &HoldoutMask::empty(), &plain).unwrap();
        assert_eq!(r1.params, r2.params);
        // objective values map onto each other through the two denominators
        let (lg, lx) = engine.log_likelihood_parts(&r1.params);
        assert_abs_diff_eq!(
            r1.final_loglik,
            0.5 * lg / d_g + 0.5 * lx / d_x,
            epsilon = 1e-9
        );
    }

    #[test]
    fn missing_attributes_with_positive_gamma_rejected() {
        let graph = pair_graph();
        let config = EmConfig::new(2, 0.5);
        let err = match EmEngine::new(&graph, None, &HoldoutMask::empty(), &config) {
            Err(e) => e,
            Ok(_) => panic!("engine accepted gamma > 0 without attributes"),
        };
        assert!(err.to_string().contains("design matrix"));
    }

    #[test]
    fn edgeless_training_with_structural_weight_rejected() {
        let graph = MultilayerGraph::from_rows::<&str>(&[], true, &["a", "b"]).unwrap();
        let design = design_two(&[0, 1], 2);
        let config = EmConfig::new(2, 0.5);
        let err = fit(&graph, Some(&design), &HoldoutMask::empty(), &config).unwrap_err();
        assert!(err.to_string().contains("training edge"));
    }
}
