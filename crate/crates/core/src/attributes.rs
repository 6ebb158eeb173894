//! One-hot categorical node covariates.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::MultilayerGraph;

/// One-hot N x Z design matrix stored as one category index per node.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n_nodes: usize,
    assignment: Vec<usize>,
    category_labels: Vec<String>,
}

impl DesignMatrix {
    /// Build from explicit per-node category labels. Categories are
    /// enumerated in sorted label order.
    pub fn from_labels(labels: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Validation("empty attribute vector".into()));
        }
        let mut distinct: Vec<String> = labels.to_vec();
        distinct.sort();
        distinct.dedup();
        let index: BTreeMap<&str, usize> = distinct
            .iter()
            .enumerate()
            .map(|(z, s)| (s.as_str(), z))
            .collect();
        let assignment = labels.iter().map(|s| index[s.as_str()]).collect();
        Ok(DesignMatrix {
            n_nodes: labels.len(),
            assignment,
            category_labels: distinct,
        })
    }

    /// Build from category indices already in 0..z.
    pub fn from_assignment(assignment: Vec<usize>, category_labels: Vec<String>) -> Result<Self> {
        let z = category_labels.len();
        if z == 0 {
            return Err(Error::Validation("no categories".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&c| c >= z) {
            return Err(Error::Validation(format!(
                "category index {bad} out of range (Z={z})"
            )));
        }
        Ok(DesignMatrix {
            n_nodes: assignment.len(),
            assignment,
            category_labels,
        })
    }

    /// Load a categorical attribute from a CSV file with a header row.
    ///
    /// The first column holds node ids matching the graph registry;
    /// `attribute` names one column, or several separated by commas which
    /// are combined into a single cross-product category per node
    /// (values joined with `/`). Every graph node must be covered.
    pub fn load_attributes(path: &Path, attribute: &str, graph: &MultilayerGraph) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        let wanted: Vec<&str> = attribute.split(',').map(str::trim).collect();
        let mut columns = Vec::with_capacity(wanted.len());
        for name in &wanted {
            let pos = headers.iter().position(|h| h == *name).ok_or_else(|| {
                Error::Validation(format!(
                    "attribute column {name:?} not found (available: {})",
                    headers.iter().skip(1).collect::<Vec<_>>().join(", ")
                ))
            })?;
            columns.push(pos);
        }

        let n = graph.n_nodes();
        let mut labels: Vec<Option<String>> = vec![None; n];
        let mut unknown = Vec::new();
        let mut missing_value = Vec::new();
        for record in reader.records() {
            let record = record?;
            let id = record.get(0).unwrap_or("").to_string();
            let Some(node) = graph.node_id(&id) else {
                unknown.push(id);
                continue;
            };
            let mut parts = Vec::with_capacity(columns.len());
            let mut incomplete = false;
            for &c in &columns {
                match record.get(c) {
                    Some(v) if !v.is_empty() => parts.push(v.to_string()),
                    _ => incomplete = true,
                }
            }
            if incomplete {
                missing_value.push(id);
            } else {
                labels[node] = Some(parts.join("/"));
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Validation(format!(
                "attribute file lists {} node id(s) unknown to the graph: {}",
                unknown.len(),
                preview(&unknown)
            )));
        }
        if !missing_value.is_empty() {
            return Err(Error::Validation(format!(
                "{} node(s) have a missing attribute value: {}",
                missing_value.len(),
                preview(&missing_value)
            )));
        }
        let uncovered: Vec<String> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| graph.node_labels()[i].clone())
            .collect();
        if !uncovered.is_empty() {
            return Err(Error::Validation(format!(
                "{} graph node(s) absent from the attribute file: {}",
                uncovered.len(),
                preview(&uncovered)
            )));
        }
        let labels: Vec<String> = labels.into_iter().map(Option::unwrap).collect();
        Self::from_labels(&labels)
    }

    /// Bin a numeric per-node value into equal-width categories.
    ///
    /// Bin index is floor((value - min) / width); empty bins are dropped and
    /// the survivors relabelled contiguously.
    pub fn bin_numeric(values: &[f64], bin_width: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("empty value vector".into()));
        }
        if bin_width.is_nan() || bin_width <= 0.0 {
            return Err(Error::Validation(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite value {bad}")));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let raw: Vec<usize> = values
            .iter()
            .map(|v| ((v - min) / bin_width).floor() as usize)
            .collect();
        let mut seen: Vec<usize> = raw.clone();
        seen.sort_unstable();
        seen.dedup();
        let relabel: BTreeMap<usize, usize> =
            seen.iter().enumerate().map(|(z, &b)| (b, z)).collect();
        let assignment: Vec<usize> = raw.iter().map(|b| relabel[b]).collect();
        let category_labels = seen
            .iter()
            .map(|&b| {
                let lo = min + b as f64 * bin_width;
                format!("[{}, {})", lo, lo + bin_width)
            })
            .collect();
        Ok(DesignMatrix {
            n_nodes: values.len(),
            assignment,
            category_labels,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of categories Z.
    pub fn n_categories(&self) -> usize {
        self.category_labels.len()
    }

    /// Category index of a node.
    pub fn category(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn category_labels(&self) -> &[String] {
        &self.category_labels
    }

    /// One-hot row of a node; sums to exactly 1.
    pub fn one_hot_row(&self, node: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_categories()];
        row[self.assignment[node]] = 1.0;
        row
    }

    /// Relative frequency of each category.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n_categories()];
        for &z in &self.assignment {
            f[z] += 1.0;
        }
        let n = self.n_nodes as f64;
        f.iter_mut().for_each(|x| *x /= n);
        f
    }
}

fn preview(ids: &[String]) -> String {
    const SHOW: usize = 8;
    if ids.len() <= SHOW {
        ids.join(", ")
    } else {
        format!(
            "{}, ... ({} more)",
            ids[..SHOW].join(", "),
            ids.len() - SHOW
        )
    }
}
