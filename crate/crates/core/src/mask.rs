//! Train/test partitions over adjacency triples and attribute rows.
//!
//! A mask names the held-out part; the training set is its complement.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Held-out adjacency triples (i, j, layer) and attribute node rows.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HoldoutMask {
    /// Sorted, deduplicated held-out triples.
    pub held_out_triples: Vec<(usize, usize, usize)>,
    /// Sorted, deduplicated nodes whose attribute row is held out.
    pub held_out_attribute_nodes: Vec<usize>,
    /// Seed the mask was drawn with.
    pub seed: u64,
}

impl HoldoutMask {
    /// Empty mask: everything is training data.
    pub fn empty() -> Self {
        HoldoutMask::default()
    }

    pub fn new(
        mut triples: Vec<(usize, usize, usize)>,
        mut attribute_nodes: Vec<usize>,
        seed: u64,
    ) -> Self {
        triples.sort_unstable();
        triples.dedup();
        attribute_nodes.sort_unstable();
        attribute_nodes.dedup();
        HoldoutMask {
            held_out_triples: triples,
            held_out_attribute_nodes: attribute_nodes,
            seed,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.held_out_triples.is_empty() && self.held_out_attribute_nodes.is_empty()
    }

    /// True when the triple is held out.
    pub fn holds_triple(&self, i: usize, j: usize, layer: usize) -> bool {
        self.held_out_triples.binary_search(&(i, j, layer)).is_ok()
    }

    /// True when the node's attribute row is held out.
    pub fn holds_attribute(&self, node: usize) -> bool {
        self.held_out_attribute_nodes.binary_search(&node).is_ok()
    }

    /// Check all indices fall inside an N x N x L tensor.
    pub fn check_bounds(&self, n_nodes: usize, n_layers: usize) -> Result<()> {
        for &(i, j, a) in &self.held_out_triples {
            if i >= n_nodes || j >= n_nodes || a >= n_layers {
                return Err(Error::Validation(format!(
                    "held-out triple ({i}, {j}, {a}) outside {n_nodes}x{n_nodes}x{n_layers}"
                )));
            }
        }
        if let Some(&n) = self
            .held_out_attribute_nodes
            .iter()
            .find(|&&n| n >= n_nodes)
        {
            return Err(Error::Validation(format!(
                "held-out attribute node {n} outside 0..{n_nodes}"
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut mask: HoldoutMask = serde_json::from_str(&text)?;
        mask.held_out_triples.sort_unstable();
        mask.held_out_triples.dedup();
        mask.held_out_attribute_nodes.sort_unstable();
        mask.held_out_attribute_nodes.dedup();
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_queries() {
        let m = HoldoutMask::new(vec![(1, 2, 0), (0, 1, 1)], vec![3], 7);
        assert!(m.holds_triple(1, 2, 0));
        assert!(!m.holds_triple(2, 1, 0));
        assert!(m.holds_attribute(3));
        assert!(!m.holds_attribute(0));
    }

    #[test]
    fn bounds_check() {
        let m = HoldoutMask::new(vec![(1, 2, 0)], vec![], 0);
        assert!(m.check_bounds(3, 1).is_ok());
        assert!(m.check_bounds(2, 1).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let m = HoldoutMask::new(vec![(1, 2, 0), (0, 0, 0)], vec![5, 1], 42);
        let f = tempfile::NamedTempFile::new().unwrap();
        m.save(f.path()).unwrap();
        let back = HoldoutMask::load(f.path()).unwrap();
        assert_eq!(back.held_out_triples, m.held_out_triples);
        assert_eq!(back.held_out_attribute_nodes, m.held_out_attribute_nodes);
        assert_eq!(back.seed, 42);
    }
}
