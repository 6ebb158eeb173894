//! Sparse multilayer graph: a nonnegative integer adjacency tensor of shape
//! N x N x L stored as an edge list, with a label registry and cached
//! per-layer degree sums.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One nonzero entry of the adjacency tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub layer: usize,
    pub weight: u64,
}

/// Directed multilayer graph with contiguous node and layer indices.
///
/// Immutable after construction; loading assigns indices in first-seen
/// order. Duplicate rows for the same (source, target, layer) are summed
/// and self-loops are dropped.
#[derive(Debug, Clone)]
pub struct MultilayerGraph {
    n_nodes: usize,
    n_layers: usize,
    edges: Vec<Edge>,
    node_labels: Vec<String>,
    node_index: HashMap<String, usize>,
    layer_labels: Vec<String>,
    weight_index: HashMap<(usize, usize, usize), u64>,
    out_degree_sums: Vec<Vec<u64>>,
    in_degree_sums: Vec<Vec<u64>>,
    self_loops_dropped: usize,
}

/// Per-node degree diagnostics produced by [`MultilayerGraph::validate`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// Nodes whose out-degree summed over every layer is zero.
    pub zero_out_degree: Vec<usize>,
    /// Nodes whose in-degree summed over every layer is zero.
    pub zero_in_degree: Vec<usize>,
    /// Per layer, the nodes with zero out-degree in that layer.
    pub zero_out_degree_per_layer: Vec<Vec<usize>>,
    /// Per layer, the nodes with zero in-degree in that layer.
    pub zero_in_degree_per_layer: Vec<Vec<usize>>,
}

struct Builder {
    node_labels: Vec<String>,
    node_index: HashMap<String, usize>,
    layer_labels: Vec<String>,
    layer_index: HashMap<String, usize>,
    weights: HashMap<(usize, usize, usize), u64>,
    self_loops_dropped: usize,
}

impl Builder {
    fn new() -> Self {
        Builder {
            node_labels: Vec::new(),
            node_index: HashMap::new(),
            layer_labels: Vec::new(),
            layer_index: HashMap::new(),
            weights: HashMap::new(),
            self_loops_dropped: 0,
        }
    }

    fn node(&mut self, label: &str) -> usize {
        if let Some(&i) = self.node_index.get(label) {
            return i;
        }
        let i = self.node_labels.len();
        self.node_labels.push(label.to_string());
        self.node_index.insert(label.to_string(), i);
        i
    }

    fn layer(&mut self, label: &str) -> usize {
        if let Some(&a) = self.layer_index.get(label) {
            return a;
        }
        let a = self.layer_labels.len();
        self.layer_labels.push(label.to_string());
        self.layer_index.insert(label.to_string(), a);
        a
    }

    fn add(&mut self, source: usize, target: usize, layer: usize, weight: u64) {
        if source == target {
            self.self_loops_dropped += 1;
            return;
        }
        *self.weights.entry((source, target, layer)).or_insert(0) += weight;
    }

    fn finish(self) -> MultilayerGraph {
        let n_nodes = self.node_labels.len();
        let n_layers = self.layer_labels.len();
        let mut edges: Vec<Edge> = self
            .weights
            .iter()
            .map(|(&(source, target, layer), &weight)| Edge {
                source,
                target,
                layer,
                weight,
            })
            .collect();
        edges.sort_unstable();
        let mut out_degree_sums = vec![vec![0u64; n_layers]; n_nodes];
        let mut in_degree_sums = vec![vec![0u64; n_layers]; n_nodes];
        for e in &edges {
            out_degree_sums[e.source][e.layer] += e.weight;
            in_degree_sums[e.target][e.layer] += e.weight;
        }
        MultilayerGraph {
            n_nodes,
            n_layers,
            edges,
            node_labels: self.node_labels,
            node_index: self.node_index,
            layer_labels: self.layer_labels,
            weight_index: self.weights,
            out_degree_sums,
            in_degree_sums,
            self_loops_dropped: self.self_loops_dropped,
        }
    }
}

impl MultilayerGraph {
    /// Build a graph from labelled rows (source, target, layer, weight).
    ///
    /// With `directed` false every row is expanded into two directed arcs.
    /// `known_nodes` labels are registered before the rows, pinning their
    /// indices; rows may introduce further nodes in first-seen order.
    pub fn from_rows<S: AsRef<str>>(
        rows: &[(S, S, S, u64)],
        directed: bool,
        known_nodes: &[S],
    ) -> Result<Self> {
        let mut b = Builder::new();
        for label in known_nodes {
            b.node(label.as_ref());
        }
        for (src, tgt, layer, w) in rows {
            let i = b.node(src.as_ref());
            let j = b.node(tgt.as_ref());
            let a = b.layer(layer.as_ref());
            b.add(i, j, a, *w);
            if !directed {
                b.add(j, i, a, *w);
            }
        }
        Ok(b.finish())
    }

    /// Parse a whitespace-separated edge list: `source target layer [weight]`.
    ///
    /// Lines starting with `#` are comments, except `# node <label>` which
    /// registers an isolated node. A missing weight defaults to 1. Duplicate
    /// (source, target, layer) rows are summed; self-loops are dropped and
    /// counted.
    pub fn load_edgelist(path: &Path, directed: bool) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let path_str = path.display().to_string();
        let mut b = Builder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("node") {
                    if let Some(label) = parts.next() {
                        b.node(label);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 3 || fields.len() > 4 {
                return Err(Error::Parse {
                    path: path_str,
                    line: lineno + 1,
                    msg: format!("expected 'source target layer [weight]', got {:?}", line),
                });
            }
            let weight: i64 = if fields.len() == 4 {
                fields[3].parse().map_err(|_| Error::Parse {
                    path: path_str.clone(),
                    line: lineno + 1,
                    msg: format!("invalid weight {:?}", fields[3]),
                })?
            } else {
                1
            };
            if weight < 0 {
                return Err(Error::Validation(format!(
                    "{}:{}: negative weight {}",
                    path_str,
                    lineno + 1,
                    weight
                )));
            }
            if weight == 0 {
                continue;
            }
            let i = b.node(fields[0]);
            let j = b.node(fields[1]);
            let a = b.layer(fields[2]);
            b.add(i, j, a, weight as u64);
            if !directed {
                b.add(j, i, a, weight as u64);
            }
        }
        Ok(b.finish())
    }

    /// Write the edge list in the format accepted by [`Self::load_edgelist`].
    ///
    /// Rows come out sorted by internal index, which preserves the
    /// first-seen index assignment on reload. Isolated nodes are kept via
    /// `# node` comment lines.
    pub fn write_edgelist(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        let mut has_edge = vec![false; self.n_nodes];
        for e in &self.edges {
            has_edge[e.source] = true;
            has_edge[e.target] = true;
        }
        for (i, label) in self.node_labels.iter().enumerate() {
            if !has_edge[i] {
                writeln!(w, "# node {label}")?;
            }
        }
        for e in &self.edges {
            writeln!(
                w,
                "{} {} {} {}",
                self.node_labels[e.source],
                self.node_labels[e.target],
                self.layer_labels[e.layer],
                e.weight
            )?;
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    /// Number of stored nonzero entries.
    pub fn n_entries(&self) -> usize {
        self.edges.len()
    }

    /// Total edge count: the sum of all stored weights.
    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Sum of weights within one layer.
    pub fn layer_weight(&self, layer: usize) -> u64 {
        self.edges
            .iter()
            .filter(|e| e.layer == layer)
            .map(|e| e.weight)
            .sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn layer_labels(&self) -> &[String] {
        &self.layer_labels
    }

    pub fn node_id(&self, label: &str) -> Option<usize> {
        self.node_index.get(label).copied()
    }

    /// Adjacency weight of a triple, zero when absent.
    pub fn weight(&self, source: usize, target: usize, layer: usize) -> u64 {
        self.weight_index
            .get(&(source, target, layer))
            .copied()
            .unwrap_or(0)
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Cached out-degree sum of a node within one layer.
    pub fn out_degree(&self, node: usize, layer: usize) -> u64 {
        self.out_degree_sums[node][layer]
    }

    /// Cached in-degree sum of a node within one layer.
    pub fn in_degree(&self, node: usize, layer: usize) -> u64 {
        self.in_degree_sums[node][layer]
    }

    /// Out-degree summed across layers.
    pub fn total_out_degree(&self, node: usize) -> u64 {
        self.out_degree_sums[node].iter().sum()
    }

    /// In-degree summed across layers.
    pub fn total_in_degree(&self, node: usize) -> u64 {
        self.in_degree_sums[node].iter().sum()
    }

    /// Report nodes with zero out- or in-degree, totalled and per layer.
    /// Does not mutate the graph; removal is left to the caller.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            zero_out_degree_per_layer: vec![Vec::new(); self.n_layers],
            zero_in_degree_per_layer: vec![Vec::new(); self.n_layers],
            ..Default::default()
        };
        for i in 0..self.n_nodes {
            if self.total_out_degree(i) == 0 {
                report.zero_out_degree.push(i);
            }
            if self.total_in_degree(i) == 0 {
                report.zero_in_degree.push(i);
            }
            for a in 0..self.n_layers {
                if self.out_degree_sums[i][a] == 0 {
                    report.zero_out_degree_per_layer[a].push(i);
                }
                if self.in_degree_sums[i][a] == 0 {
                    report.zero_in_degree_per_layer[a].push(i);
                }
            }
        }
        report
    }

    /// One-line summary used by the CLI after loading.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} nodes, {} layers, {} entries, total weight {}",
            self.n_nodes,
            self.n_layers,
            self.n_entries(),
            self.total_weight()
        );
        if self.self_loops_dropped > 0 {
            let _ = write!(s, ", {} self-loops dropped", self.self_loops_dropped);
        }
        s
    }
}
