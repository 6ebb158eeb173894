//! Model parameters: outgoing memberships U (N x C), incoming memberships
//! V (N x C), per-layer affinities W (L x C x C) and the community-category
//! coupling Beta (C x Z). U, V and Beta rows live on the probability simplex.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub w: Array3<f64>,
    pub beta: Array2<f64>,
}

impl ModelParams {
    /// Random initialization: U, V and Beta rows are uniform draws
    /// normalized to sum 1, W entries are uniform draws. Deterministic
    /// given the generator state.
    pub fn init<R: Rng>(
        n_nodes: usize,
        n_communities: usize,
        n_layers: usize,
        n_categories: usize,
        rng: &mut R,
    ) -> Self {
        let mut u = Array2::zeros((n_nodes, n_communities));
        fill_simplex_rows(&mut u, rng);
        let mut v = Array2::zeros((n_nodes, n_communities));
        fill_simplex_rows(&mut v, rng);
        let mut w = Array3::zeros((n_layers, n_communities, n_communities));
        for x in w.iter_mut() {
            *x = rng.gen::<f64>();
        }
        let mut beta = Array2::zeros((n_communities, n_categories));
        fill_simplex_rows(&mut beta, rng);
        ModelParams { u, v, w, beta }
    }

    pub fn n_nodes(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_communities(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_layers(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn n_categories(&self) -> usize {
        self.beta.ncols()
    }

    /// Expected edge count from i to j in a layer:
    /// sum over (k, l) of u_ik v_jl w_kl.
    pub fn poisson_mean(&self, i: usize, j: usize, layer: usize) -> f64 {
        let c = self.n_communities();
        let mut total = 0.0;
        for k in 0..c {
            let uik = self.u[[i, k]];
            if uik == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for l in 0..c {
                inner += self.v[[j, l]] * self.w[[layer, k, l]];
            }
            total += uik * inner;
        }
        total
    }

    /// Multinomial category probabilities of a node:
    /// pi_z = (1/2) sum_k beta_kz (u_ik + v_ik).
    pub fn attribute_probs(&self, i: usize) -> Vec<f64> {
        let z = self.n_categories();
        let c = self.n_communities();
        let mut pi = vec![0.0; z];
        for k in 0..c {
            let m = 0.5 * (self.u[[i, k]] + self.v[[i, k]]);
            if m == 0.0 {
                continue;
            }
            for (zz, p) in pi.iter_mut().enumerate() {
                *p += m * self.beta[[k, zz]];
            }
        }
        pi
    }

    /// Expected Poisson parameter per requested triple.
    pub fn predict_scores(&self, triples: &[(usize, usize, usize)]) -> Vec<f64> {
        triples
            .iter()
            .map(|&(i, j, a)| self.poisson_mean(i, j, a))
            .collect()
    }

    /// Most probable category per node, ties broken by lowest index,
    /// together with the full probability vector.
    pub fn predict_attributes(&self, nodes: &[usize]) -> Vec<(usize, Vec<f64>)> {
        nodes
            .iter()
            .map(|&i| {
                let pi = self.attribute_probs(i);
                let best = argmax(&pi);
                (best, pi)
            })
            .collect()
    }

    /// Write U, V and Beta as CSV matrices and W as one CSV block per layer.
    pub fn save(
        &self,
        dir: &Path,
        node_labels: &[String],
        category_labels: &[String],
    ) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix_csv(
            &dir.join("u.csv"),
            &self.u,
            "node",
            node_labels,
            &comm_headers(self.n_communities()),
        )?;
        write_matrix_csv(
            &dir.join("v.csv"),
            &self.v,
            "node",
            node_labels,
            &comm_headers(self.n_communities()),
        )?;
        let comm_labels: Vec<String> = comm_headers(self.n_communities());
        write_matrix_csv(
            &dir.join("beta.csv"),
            &self.beta,
            "community",
            &comm_labels,
            category_labels,
        )?;
        for a in 0..self.n_layers() {
            let layer = self.w.index_axis(Axis(0), a).to_owned();
            write_matrix_csv(
                &dir.join(format!("w_layer{a}.csv")),
                &layer,
                "community",
                &comm_labels,
                &comm_labels,
            )?;
        }
        Ok(())
    }

    /// Load parameters written by [`Self::save`]. Returns the params together
    /// with the node and category labels found in the files.
    pub fn load(dir: &Path) -> Result<(Self, Vec<String>, Vec<String>)> {
        let (u, node_labels, _) = read_matrix_csv(&dir.join("u.csv"))?;
        let (v, _, _) = read_matrix_csv(&dir.join("v.csv"))?;
        let (beta, _, category_labels) = read_matrix_csv(&dir.join("beta.csv"))?;
        let c = u.ncols();
        let mut layers = Vec::new();
        for a in 0.. {
            let path = dir.join(format!("w_layer{a}.csv"));
            if !path.exists() {
                break;
            }
            let (m, _, _) = read_matrix_csv(&path)?;
            layers.push(m);
        }
        if layers.is_empty() {
            return Err(Error::Validation(format!(
                "no w_layer*.csv files in {}",
                dir.display()
            )));
        }
        let mut w = Array3::zeros((layers.len(), c, c));
        for (a, m) in layers.iter().enumerate() {
            if m.shape() != [c, c] {
                return Err(Error::Validation(format!(
                    "w_layer{a}.csv has shape {:?}, expected {c}x{c}",
                    m.shape()
                )));
            }
            w.index_axis_mut(Axis(0), a).assign(m);
        }
        Ok((ModelParams { u, v, w, beta }, node_labels, category_labels))
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn fill_simplex_rows<R: Rng>(m: &mut Array2<f64>, rng: &mut R) {
    for mut row in m.rows_mut() {
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = rng.gen::<f64>();
            total += *x;
        }
        if total > 0.0 {
            row.mapv_inplace(|x| x / total);
        } else {
            let c = row.len() as f64;
            row.fill(1.0 / c);
        }
    }
}

fn comm_headers(c: usize) -> Vec<String> {
    (0..c).map(|k| format!("comm_{k}")).collect()
}

fn write_matrix_csv(
    path: &Path,
    m: &Array2<f64>,
    id_header: &str,
    row_labels: &[String],
    col_labels: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![id_header.to_string()];
    header.extend(col_labels.iter().cloned());
    w.write_record(&header)?;
    for (i, row) in m.rows().into_iter().enumerate() {
        let mut record = Vec::with_capacity(m.ncols() + 1);
        record.push(row_labels.get(i).cloned().unwrap_or_else(|| i.to_string()));
        record.extend(row.iter().map(|x| format!("{x:.17e}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<(Array2<f64>, Vec<String>, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col_labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut row_labels = Vec::new();
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record?;
        row_labels.push(record.get(0).unwrap_or("").to_string());
        for field in record.iter().skip(1) {
            let x: f64 = field.parse().map_err(|_| {
                Error::Validation(format!("{}: bad float {field:?}", path.display()))
            })?;
            data.push(x);
        }
    }
    let ncols = col_labels.len();
    let nrows = row_labels.len();
    let m = Array2::from_shape_vec((nrows, ncols), data)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    Ok((m, row_labels, col_labels))
}
