//! Directed multilayer benchmark generator: planted equal-size hard
//! communities, block-structured Poisson layers and categorical attributes
//! matched to the planted communities at a controlled rate.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::attributes::DesignMatrix;
use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;

/// Block-affinity pattern of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    /// Diagonal entries dominate.
    Assortative,
    /// Off-diagonal entries dominate.
    Disassortative,
    /// Diagonal dominates with one diagonal entry much larger.
    CorePeriphery,
    /// Off-diagonal dominates with one off-diagonal entry much larger.
    BiasedDirected,
}

impl LayerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "assortative" | "a" => Ok(LayerKind::Assortative),
            "disassortative" | "d" => Ok(LayerKind::Disassortative),
            "core-periphery" | "cp" => Ok(LayerKind::CorePeriphery),
            "biased-directed" | "bd" => Ok(LayerKind::BiasedDirected),
            other => Err(Error::Validation(format!("unknown layer kind {other:?}"))),
        }
    }
}

/// One layer of a synthetic benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// C x C block affinity, stored row major.
    pub affinity: Vec<Vec<f64>>,
}

/// Full benchmark description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_communities: usize,
    pub avg_degree: f64,
    pub layers: Vec<LayerSpec>,
    /// Probability that a node's category equals its community's category.
    pub attribute_match: f64,
    pub seed: u64,
}

/// Planted ground truth written alongside generated files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// Node labels in planted order; graph indices follow the same order.
    pub node_labels: Vec<String>,
    /// Hard community per node; outgoing and incoming memberships coincide.
    pub community: Vec<usize>,
    pub n_communities: usize,
    /// Category index per node, present once attributes were generated.
    pub attribute: Option<Vec<usize>>,
    /// Number of attribute categories Z used by the generator.
    #[serde(default)]
    pub n_attribute_categories: Option<usize>,
    /// Whether each node's category was matched to its community.
    pub matched_flags: Option<Vec<bool>>,
    pub spec: SyntheticSpec,
    /// Edge sampling law used by the generator.
    pub edge_sampling: String,
    pub self_loops: bool,
}

impl PlantedTruth {
    /// One-hot membership matrix of the planted partition.
    pub fn membership_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.community.len(), self.n_communities));
        for (i, &k) in self.community.iter().enumerate() {
            m[[i, k]] = 1.0;
        }
        m
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Block affinity matrix for one layer kind. The base value is k*C/N; the
/// dominant entries take the base, the weak pattern takes a tenth of it and
/// the secondary dominant entry of the lopsided kinds takes 0.03 of it.
pub fn build_affinity(kind: LayerKind, c: usize, n: usize, k: f64) -> Vec<Vec<f64>> {
    let b = k * c as f64 / n as f64;
    let weak = 0.1 * b;
    let faint = 0.03 * b;
    let mut w = vec![vec![0.0; c]; c];
    match kind {
        LayerKind::Assortative => {
            for (i, row) in w.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if i == j { b } else { weak };
                }
            }
        }
        LayerKind::Disassortative => {
            for (i, row) in w.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if i == j { weak } else { b };
                }
            }
        }
        LayerKind::CorePeriphery => {
            for (i, row) in w.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if i == j { faint } else { weak };
                }
            }
            w[0][0] = b;
        }
        LayerKind::BiasedDirected => {
            for (i, row) in w.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if i == j { weak } else { faint };
                }
            }
            if c > 1 {
                w[0][1] = b;
            }
        }
    }
    w
}

/// The three benchmark presets: two-community directed networks with
/// average degree 4 and the named mixture of layer kinds.
pub fn preset(name: &str, n_nodes: usize, seed: u64) -> Result<SyntheticSpec> {
    let kinds: Vec<LayerKind> = match name {
        "G1" | "g1" => vec![LayerKind::Assortative, LayerKind::Disassortative],
        "G2" | "g2" => vec![
            LayerKind::Assortative,
            LayerKind::Assortative,
            LayerKind::Disassortative,
            LayerKind::Disassortative,
        ],
        "G3" | "g3" => vec![
            LayerKind::Assortative,
            LayerKind::Disassortative,
            LayerKind::CorePeriphery,
            LayerKind::BiasedDirected,
        ],
        other => Err(Error::Validation(format!("unknown preset {other:?}")))?,
    };
    let c = 2;
    let k = 4.0;
    let layers = kinds
        .into_iter()
        .map(|kind| LayerSpec {
            kind,
            affinity: build_affinity(kind, c, n_nodes, k),
        })
        .collect();
    Ok(SyntheticSpec {
        n_nodes,
        n_communities: c,
        avg_degree: k,
        layers,
        attribute_match: 0.5,
        seed,
    })
}

/// Sample a multilayer network from the spec's block model.
///
/// Nodes are split into near-equal contiguous blocks (sizes differ by at
/// most one when C does not divide N); each adjacency entry is Poisson with
/// the block affinity as its mean, diagonal entries suppressed. Layer totals
/// are drawn first and placed uniformly inside their block, which is
/// equivalent entry-wise and touches only realized edges.
pub fn generate_network(spec: &SyntheticSpec) -> Result<(MultilayerGraph, PlantedTruth)> {
    let n = spec.n_nodes;
    let c = spec.n_communities;
    if n == 0 || c == 0 {
        return Err(Error::Validation("need nodes and communities".into()));
    }
    if c > n {
        return Err(Error::Validation(format!(
            "more communities ({c}) than nodes ({n})"
        )));
    }
    for layer in &spec.layers {
        if layer.affinity.len() != c || layer.affinity.iter().any(|r| r.len() != c) {
            return Err(Error::Validation("affinity matrix is not C x C".into()));
        }
        if layer
            .affinity
            .iter()
            .flatten()
            .any(|&x| !x.is_finite() || x < 0.0)
        {
            return Err(Error::Validation("affinity entries must be >= 0".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0xA1);

    // contiguous equal blocks, first n % c blocks one node larger
    let community: Vec<usize> = (0..n).map(|i| i * c / n).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &k) in community.iter().enumerate() {
        members[k].push(i);
    }

    let digits = (n.max(2) as f64).log10().ceil() as usize;
    let label = |i: usize| format!("n{i:0digits$}");
    let mut rows: Vec<(String, String, String, u64)> = Vec::new();
    for (alpha, layer) in spec.layers.iter().enumerate() {
        let mut weights: HashMap<(usize, usize), u64> = HashMap::new();
        for (k, block_k) in members.iter().enumerate() {
            for (l, block_l) in members.iter().enumerate() {
                let rate = layer.affinity[k][l];
                if rate == 0.0 || block_k.is_empty() || block_l.is_empty() {
                    continue;
                }
                let diagonal_cells = if k == l { block_k.len() } else { 0 };
                let cells = block_k.len() * block_l.len() - diagonal_cells;
                if cells == 0 {
                    continue;
                }
                let total = Poisson::new(rate * cells as f64)
                    .map_err(|e| Error::Validation(format!("poisson rate: {e}")))?
                    .sample(&mut rng) as u64;
                for _ in 0..total {
                    loop {
                        let i = block_k[rng.gen_range(0..block_k.len())];
                        let j = block_l[rng.gen_range(0..block_l.len())];
                        if i != j {
                            *weights.entry((i, j)).or_insert(0) += 1;
                            break;
                        }
                    }
                }
            }
        }
        let mut entries: Vec<((usize, usize), u64)> = weights.into_iter().collect();
        entries.sort_unstable();
        for ((i, j), w) in entries {
            rows.push((label(i), label(j), alpha.to_string(), w));
        }
    }
    let known: Vec<String> = (0..n).map(label).collect();
    let graph = MultilayerGraph::from_rows(&rows, true, &known)?;
    let truth = PlantedTruth {
        node_labels: known,
        community,
        n_communities: c,
        attribute: None,
        n_attribute_categories: None,
        matched_flags: None,
        spec: spec.clone(),
        edge_sampling: "poisson".to_string(),
        self_loops: false,
    };
    Ok((graph, truth))
}

/// Attach categorical attributes to a planted partition: with probability
/// `matching` a node takes its community's category, otherwise one of the
/// other Z - 1 categories uniformly at random.
pub fn generate_attributes(
    truth: &mut PlantedTruth,
    matching: f64,
    n_categories: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DesignMatrix> {
    let c = truth.n_communities;
    if n_categories < c {
        return Err(Error::Validation(format!(
            "need at least as many categories ({n_categories}) as communities ({c})"
        )));
    }
    if !(0.0..=1.0).contains(&matching) {
        return Err(Error::Validation(format!(
            "match must lie in [0, 1], got {matching}"
        )));
    }
    let n = truth.community.len();
    let mut assignment = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for &k in &truth.community {
        if n_categories == 1 || rng.gen::<f64>() < matching {
            assignment.push(k);
            flags.push(true);
        } else {
            // uniform over the non-matching categories
            let mut z = rng.gen_range(0..n_categories - 1);
            if z >= k {
                z += 1;
            }
            assignment.push(z);
            flags.push(false);
        }
    }
    truth.attribute = Some(assignment.clone());
    truth.n_attribute_categories = Some(n_categories);
    truth.matched_flags = Some(flags);
    let width = (n_categories.max(2) as f64).log10().ceil() as usize;
    let labels = (0..n_categories).map(|z| format!("z{z:0width$}")).collect();
    DesignMatrix::from_assignment(assignment, labels)
}

/// Write the attribute CSV matching a generated graph's node labels.
pub fn write_attribute_csv(
    path: &Path,
    graph: &MultilayerGraph,
    design: &DesignMatrix,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "attribute"])?;
    for (i, label) in graph.node_labels().iter().enumerate() {
        w.write_record([
            label.as_str(),
            design.category_labels()[design.category(i)].as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
