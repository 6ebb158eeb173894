//! Evaluation measures: matched F1/Jaccard between community sets,
//! permutation-matched cosine similarity and L1 error between soft
//! memberships, rank-based AUC, classification accuracy with its two
//! baselines, and per-community attribute entropy.

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::argmax;

/// Set-of-communities view of a partition; sets may overlap.
#[derive(Debug, Clone)]
pub struct HardPartition {
    pub communities: Vec<BTreeSet<usize>>,
}

impl HardPartition {
    /// From one community label per node.
    pub fn from_assignments(assignment: &[usize]) -> Self {
        let c = assignment.iter().copied().max().map_or(0, |m| m + 1);
        let mut communities = vec![BTreeSet::new(); c];
        for (i, &k) in assignment.iter().enumerate() {
            communities[k].insert(i);
        }
        communities.retain(|s| !s.is_empty());
        HardPartition { communities }
    }

    /// Harden a soft membership matrix by row argmax, lowest index on ties.
    /// Communities that win no node are dropped.
    pub fn from_soft_argmax(membership: &Array2<f64>) -> Self {
        let mut communities = vec![BTreeSet::new(); membership.ncols()];
        for (i, row) in membership.rows().into_iter().enumerate() {
            let row: Vec<f64> = row.to_vec();
            communities[argmax(&row)].insert(i);
        }
        communities.retain(|s| !s.is_empty());
        HardPartition { communities }
    }

    /// Overlapping communities: node i joins community k when its entry
    /// exceeds the threshold. Used for the entropy analysis.
    pub fn from_soft_nonzero(membership: &Array2<f64>, threshold: f64) -> Self {
        let mut communities = vec![BTreeSet::new(); membership.ncols()];
        for (i, row) in membership.rows().into_iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                if x > threshold {
                    communities[k].insert(i);
                }
            }
        }
        communities.retain(|s| !s.is_empty());
        HardPartition { communities }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

/// Similarity measure between two node sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetSimilarity {
    F1,
    Jaccard,
}

fn set_similarity(a: &BTreeSet<usize>, b: &BTreeSet<usize>, delta: SetSimilarity) -> f64 {
    let inter = a.intersection(b).count() as f64;
    match delta {
        SetSimilarity::F1 => {
            let denom = (a.len() + b.len()) as f64;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * inter / denom
            }
        }
        SetSimilarity::Jaccard => {
            let union = (a.len() + b.len()) as f64 - inter;
            if union == 0.0 {
                0.0
            } else {
                inter / union
            }
        }
    }
}

/// Symmetric best-match similarity between two community sets: each side's
/// communities are matched to their most similar counterpart and the two
/// averages are themselves averaged.
pub fn matched_similarity(
    truth: &HardPartition,
    detected: &HardPartition,
    delta: SetSimilarity,
) -> Result<f64> {
    if truth.is_empty() || detected.is_empty() {
        return Err(Error::Metric("empty community set".into()));
    }
    let best_against = |from: &HardPartition, to: &HardPartition| -> f64 {
        from.communities
            .iter()
            .map(|a| {
                to.communities
                    .iter()
                    .map(|b| set_similarity(a, b, delta))
                    .fold(0.0, f64::max)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    Ok(0.5 * best_against(truth, detected) + 0.5 * best_against(detected, truth))
}

/// Cosine similarity and L1 error between soft memberships under a fixed
/// column permutation `perm` (detected column `perm[k]` lines up with truth
/// column k). Zero rows contribute zero cosine and are counted.
pub fn soft_scores_with_permutation(
    detected: &Array2<f64>,
    truth: &Array2<f64>,
    perm: &[usize],
) -> (f64, f64, usize) {
    let n = truth.nrows();
    let c = truth.ncols();
    let mut cs = 0.0;
    let mut l1 = 0.0;
    let mut zero_rows = 0;
    for i in 0..n {
        let mut dot = 0.0;
        let mut nu = 0.0;
        let mut nt = 0.0;
        for k in 0..c {
            let d = detected[[i, perm[k]]];
            let t = truth[[i, k]];
            dot += d * t;
            nu += d * d;
            nt += t * t;
            l1 += (d - t).abs();
        }
        if nu > 0.0 && nt > 0.0 {
            cs += dot / (nu.sqrt() * nt.sqrt());
        } else {
            zero_rows += 1;
        }
    }
    (cs / n as f64, l1 / (2.0 * n as f64), zero_rows)
}

/// Outcome of [`soft_scores`].
#[derive(Debug, Clone)]
pub struct SoftScores {
    pub cosine: f64,
    pub l1: f64,
    /// Column permutation that maximized the cosine similarity.
    pub permutation: Vec<usize>,
    pub zero_rows: usize,
    /// True when the permutation search fell back to greedy matching.
    pub greedy_fallback: bool,
}

/// Column count above which the exhaustive permutation search gives way to
/// greedy matching.
pub const PERMUTATION_CAP: usize = 8;

/// Best cosine similarity and, independently, best L1 error over column
/// permutations of the detected matrix. Exhaustive for C <= 8, greedy above.
pub fn soft_scores(detected: &Array2<f64>, truth: &Array2<f64>) -> Result<SoftScores> {
    if detected.shape() != truth.shape() {
        return Err(Error::Metric(format!(
            "shape mismatch: {:?} vs {:?}",
            detected.shape(),
            truth.shape()
        )));
    }
    let c = truth.ncols();
    if c == 0 || truth.nrows() == 0 {
        return Err(Error::Metric("empty membership matrix".into()));
    }
    let mut best_cs = f64::NEG_INFINITY;
    let mut best_l1 = f64::INFINITY;
    let mut best_perm = (0..c).collect::<Vec<_>>();
    let mut zero_rows = 0;
    let mut greedy_fallback = false;
    if c <= PERMUTATION_CAP {
        for perm in permutations(c) {
            let (cs, l1, zr) = soft_scores_with_permutation(detected, truth, &perm);
            if cs > best_cs {
                best_cs = cs;
                best_perm = perm.clone();
                zero_rows = zr;
            }
            if l1 < best_l1 {
                best_l1 = l1;
            }
        }
    } else {
        greedy_fallback = true;
        let perm = greedy_permutation(detected, truth);
        let (cs, l1, zr) = soft_scores_with_permutation(detected, truth, &perm);
        best_cs = cs;
        best_l1 = l1;
        best_perm = perm;
        zero_rows = zr;
    }
    Ok(SoftScores {
        cosine: best_cs,
        l1: best_l1,
        permutation: best_perm,
        zero_rows,
        greedy_fallback,
    })
}

fn permutations(c: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..c).collect();
    heap_permute(&mut items, c, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Greedy column matching by largest column dot product.
fn greedy_permutation(detected: &Array2<f64>, truth: &Array2<f64>) -> Vec<usize> {
    let c = truth.ncols();
    let mut taken = vec![false; c];
    let mut perm = vec![0; c];
    for k in 0..c {
        let tcol = truth.column(k);
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for (j, used) in taken.iter().enumerate().take(c) {
            if *used {
                continue;
            }
            let score: f64 = detected
                .column(j)
                .iter()
                .zip(tcol.iter())
                .map(|(a, b)| a * b)
                .sum();
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let j = best.expect("columns remain");
        perm[k] = j;
        taken[j] = true;
    }
    perm
}

/// Rank-based AUC with half credit for ties: the probability that a
/// positive example scores above a negative one.
pub fn auc(scores_pos: &[f64], scores_neg: &[f64]) -> Result<f64> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(Error::Metric(
            "auc needs both positive and negative examples".into(),
        ));
    }
    let p = scores_pos.len();
    let q = scores_neg.len();
    let mut all: Vec<(f64, bool)> = scores_pos
        .iter()
        .map(|&s| (s, true))
        .chain(scores_neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));
    // average ranks across tie groups
    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < all.len() {
        let mut end = idx;
        while end + 1 < all.len() && all[end + 1].0 == all[idx].0 {
            end += 1;
        }
        let avg_rank = (idx + end) as f64 / 2.0 + 1.0;
        for item in all.iter().take(end + 1).skip(idx) {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        idx = end + 1;
    }
    let u = rank_sum_pos - (p * (p + 1)) as f64 / 2.0;
    Ok(u / (p as f64 * q as f64))
}

/// Fraction of correctly classified examples.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} predictions vs {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Metric("empty label vectors".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Reference accuracies for attribute prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineReport {
    /// Uniform random guess over Z categories.
    pub rp: f64,
    /// Modal training category (lowest index on ties).
    pub mrf_category: usize,
    /// Relative frequency of the modal category in training.
    pub mrf_train_frequency: f64,
}

/// Random-probability and maximum-relative-frequency baselines from a
/// training label vector. Score MRF on a test set by predicting
/// `mrf_category` everywhere.
pub fn baselines(train_truth: &[usize], n_categories: usize) -> Result<BaselineReport> {
    if n_categories < 1 {
        return Err(Error::Metric("need at least one category".into()));
    }
    if train_truth.is_empty() {
        return Err(Error::Metric("empty training labels".into()));
    }
    let mut counts = vec![0usize; n_categories];
    for &z in train_truth {
        if z >= n_categories {
            return Err(Error::Metric(format!(
                "label {z} out of range (Z={n_categories})"
            )));
        }
        counts[z] += 1;
    }
    let mut modal = 0;
    for (z, &c) in counts.iter().enumerate() {
        if c > counts[modal] {
            modal = z;
        }
    }
    Ok(BaselineReport {
        rp: 1.0 / n_categories as f64,
        mrf_category: modal,
        mrf_train_frequency: counts[modal] as f64 / train_truth.len() as f64,
    })
}

/// Normalized Shannon entropy of attribute frequencies inside each
/// community: 1 means uniform mixing, 0 a single category. Requires Z >= 2.
pub fn community_entropy(
    partition: &HardPartition,
    attributes: &[usize],
    n_categories: usize,
) -> Result<Vec<f64>> {
    if n_categories < 2 {
        return Err(Error::Metric(
            "entropy needs at least two categories".into(),
        ));
    }
    let log_z = (n_categories as f64).ln();
    partition
        .communities
        .iter()
        .map(|community| {
            if community.is_empty() {
                return Err(Error::Metric("empty community".into()));
            }
            let mut counts = vec![0usize; n_categories];
            for &i in community {
                let z = *attributes
                    .get(i)
                    .ok_or_else(|| Error::Metric(format!("node {i} has no attribute")))?;
                counts[z] += 1;
            }
            let total = community.len() as f64;
            let mut h = 0.0;
            for &c in &counts {
                if c > 0 {
                    let f = c as f64 / total;
                    h -= f * f.ln();
                }
            }
            Ok(h / log_z)
        })
        .collect()
}

/// Bundle of scores produced when evaluating against a known partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub f1: f64,
    pub jaccard: f64,
    pub cs: f64,
    pub l1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub permutation_used: Vec<usize>,
}

/// Score a soft membership matrix against a ground-truth matrix: matched
/// F1 and Jaccard on the argmax hardening plus permutation-matched CS/L1.
pub fn score_membership(detected: &Array2<f64>, truth: &Array2<f64>) -> Result<MetricReport> {
    let hard_truth = HardPartition::from_soft_argmax(truth);
    let hard_detected = HardPartition::from_soft_argmax(detected);
    let f1 = matched_similarity(&hard_truth, &hard_detected, SetSimilarity::F1)?;
    let jaccard = matched_similarity(&hard_truth, &hard_detected, SetSimilarity::Jaccard)?;
    let soft = soft_scores(detected, truth)?;
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
