//! Histogram-based gradient-boosted decision trees for binary classification.
//!
//! Features are bucketed once into at most `bins` quantile bins. Each tree is
//! grown leaf-wise: the leaf whose best histogram split has the largest gain is
//! split next, until `max_leaves` is reached or no split has positive gain.
//! The objective is logistic loss with Newton leaf values `-G / (H + l2)`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{schema_hash, Column, Dataset};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MIN_SPLIT_GAIN: f64 = 1e-10;
/// Below this many histogram updates a leaf is built on the calling thread.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtParams {
    pub trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_leaf_rows: usize,
    pub bins: usize,
    pub l2: f64,
    pub min_hessian: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            trees: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            min_leaf_rows: 20,
            bins: 255,
            l2: 0.0,
            min_hessian: 1e-3,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.max_leaves < 2 {
            return Err(Error::Config("max_leaves must be at least 2".into()));
        }
        if self.min_leaf_rows == 0 {
            return Err(Error::Config("min_leaf_rows must be at least 1".into()));
        }
        if !(2..=256).contains(&self.bins) {
            return Err(Error::Config("bins must be within 2..=256".into()));
        }
        if self.l2 < 0.0 || self.min_hessian < 0.0 {
            return Err(Error::Config("l2 and min_hessian must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Upper bin boundaries for one feature. A value falls in the first bin whose
/// edge is not below it; values above every edge go to the last bin.
pub fn bin_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let mid = |i: usize| 0.5 * (distinct[i].0 + distinct[i + 1].0);
    if distinct.len() <= max_bins {
        return (0..distinct.len().saturating_sub(1)).map(mid).collect();
    }
    let n = values.len() as f64;
    let mut edges = Vec::with_capacity(max_bins - 1);
    let mut cum = 0usize;
    let mut k = 1usize;
    for i in 0..distinct.len() - 1 {
        cum += distinct[i].1;
        if cum as f64 >= k as f64 * n / max_bins as f64 {
            edges.push(mid(i));
            while k < max_bins && cum as f64 >= k as f64 * n / max_bins as f64 {
                k += 1;
            }
            if edges.len() == max_bins - 1 {
                break;
            }
        }
    }
    edges
}

pub fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        bin: u16,
        threshold: f64,
        gain: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub flag: bool,
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub version: u32,
    pub schema_hash: String,
    pub columns: Vec<Column>,
    pub params: GbdtParams,
    pub learning_rate: f64,
    /// Prior log-odds.
    pub base_score: f64,
    pub bin_edges: Vec<Vec<f64>>,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: usize,
    pub name: String,
    pub gain: f64,
    pub splits: usize,
    /// Share of total gain.
    pub share: f64,
}

impl GbdtModel {
    /// A model with no trees that predicts the prior.
    pub fn prior_only(columns: Vec<Column>, prior: f64, learning_rate: f64) -> Self {
        GbdtModel {
            version: MODEL_FORMAT_VERSION,
            schema_hash: schema_hash(&columns),
            bin_edges: vec![Vec::new(); columns.len()],
            columns,
            params: GbdtParams { learning_rate, ..GbdtParams::default() },
            learning_rate,
            base_score: (prior / (1.0 - prior)).ln(),
            trees: Vec::new(),
        }
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| self.learning_rate * t.leaf_value(row)).sum::<f64>()
    }

    fn predict_unchecked(&self, row: &[f64]) -> Prediction {
        let probability = logistic(self.raw_score(row));
        Prediction {
            probability,
            flag: probability >= 0.5,
        }
    }

    pub fn predict(&self, schema_hash: &str, row: &[f64]) -> Result<Prediction> {
        if schema_hash != self.schema_hash || row.len() != self.columns.len() {
            return Err(Error::Schema {
                expected: self.schema_hash.clone(),
                found: format!("{schema_hash} ({} values)", row.len()),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Prediction>> {
        let hash = data.schema_hash();
        data.rows().map(|r| self.predict(&hash, r)).collect()
    }

    pub fn feature_importance(&self) -> Vec<FeatureImportance> {
        let mut gain = vec![0.0; self.columns.len()];
        let mut splits = vec![0usize; self.columns.len()];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, gain: g, .. } = node {
                    gain[*feature] += g;
                    splits[*feature] += 1;
                }
            }
        }
        let total: f64 = gain.iter().sum();
        let mut out: Vec<FeatureImportance> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| FeatureImportance {
                feature: i,
                name: c.name.clone(),
                gain: gain[i],
                splits: splits[i],
                share: if total > 0.0 { gain[i] / total } else { 0.0 },
            })
            .collect();
        out.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.feature.cmp(&b.feature)));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: GbdtModel = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported model format version {}", model.version)));
        }
        if model.schema_hash != schema_hash(&model.columns) {
            return Err(Error::Parse("model schema hash does not match its columns".into()));
        }
        for tree in &model.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, left, right, .. } = node {
                    if *feature >= model.columns.len()
                        || *left as usize >= tree.nodes.len()
                        || *right as usize >= tree.nodes.len()
                    {
                        return Err(Error::Parse("model tree references missing node or feature".into()));
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn log_loss(labels: &[u8], raw: &[f64]) -> f64 {
    let n = labels.len().max(1) as f64;
    labels
        .iter()
        .zip(raw)
        .map(|(&y, &f)| {
            // log(1 + e^f) - y f, written to avoid overflow.
            let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            softplus - y as f64 * f
        })
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, Default)]
struct HistBin {
    g: f64,
    h: f64,
    n: u32,
}

type Histogram = Vec<Vec<HistBin>>;

#[derive(Debug, Clone, Copy)]
struct SplitInfo {
    feature: usize,
    bin: usize,
    gain: f64,
    left_g: f64,
    left_h: f64,
}

struct LeafWork {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    g: f64,
    h: f64,
    best: Option<SplitInfo>,
}

struct Binned {
    cols: Vec<Vec<u8>>,
    n_bins: Vec<usize>,
}

impl Binned {
    fn histogram(&self, rows: &[u32], grad: &[f64], hess: &[f64]) -> Histogram {
        let build = |f: usize| {
            let col = &self.cols[f];
            let mut hist = vec![HistBin::default(); self.n_bins[f]];
            for &r in rows {
                let r = r as usize;
                let b = &mut hist[col[r] as usize];
                b.g += grad[r];
                b.h += hess[r];
                b.n += 1;
            }
            hist
        };
        if rows.len() * self.cols.len() >= PARALLEL_WORK {
            (0..self.cols.len()).into_par_iter().map(build).collect()
        } else {
            (0..self.cols.len()).map(build).collect()
        }
    }
}

fn subtract(parent: &Histogram, child: &Histogram) -> Histogram {
    parent
        .iter()
        .zip(child)
        .map(|(p, c)| {
            p.iter()
                .zip(c)
                .map(|(a, b)| HistBin { g: a.g - b.g, h: a.h - b.h, n: a.n - b.n })
                .collect()
        })
        .collect()
}

fn leaf_objective(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2)
}

fn best_split(hist: &Histogram, g: f64, h: f64, n: usize, params: &GbdtParams) -> Option<SplitInfo> {
    let parent = leaf_objective(g, h, params.l2);
    let mut best: Option<SplitInfo> = None;
    for (feature, bins) in hist.iter().enumerate() {
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        for (bin, b) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            gl += b.g;
            hl += b.h;
            nl += b.n as usize;
            if nl < params.min_leaf_rows {
                continue;
            }
            let nr = n - nl;
            if nr < params.min_leaf_rows {
                break;
            }
            let hr = h - hl;
            if hl < params.min_hessian || hr < params.min_hessian {
                continue;
            }
            let gain = leaf_objective(gl, hl, params.l2) + leaf_objective(g - gl, hr, params.l2) - parent;
            if gain > MIN_SPLIT_GAIN && best.map_or(true, |s| gain > s.gain) {
                best = Some(SplitInfo { feature, bin, gain, left_g: gl, left_h: hl });
            }
        }
    }
    best
}

fn grow_tree(binned: &Binned, edges: &[Vec<f64>], grad: &[f64], hess: &[f64], params: &GbdtParams) -> (Tree, Vec<(Vec<u32>, f64)>) {
    let n = grad.len();
    let rows: Vec<u32> = (0..n as u32).collect();
    let hist = binned.histogram(&rows, grad, hess);
    let g: f64 = grad.iter().sum();
    let h: f64 = hess.iter().sum();
    let best = best_split(&hist, g, h, n, params);
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut work = vec![LeafWork { node: 0, rows, hist, g, h, best }];

    while work.len() < params.max_leaves {
        let pick = work
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.best.map(|b| (i, b.gain, w.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((idx, _, _)) = pick else { break };
        let leaf = work.swap_remove(idx);
        let split = leaf.best.unwrap();
        let col = &binned.cols[split.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            leaf.rows.iter().partition(|&&r| col[r as usize] as usize <= split.bin);

        let left_id = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: split.feature,
            bin: split.bin as u16,
            threshold: edges[split.feature][split.bin],
            gain: split.gain,
            left: left_id as u32,
            right: left_id as u32 + 1,
        };

        let (lg, lh) = (split.left_g, split.left_h);
        let (rg, rh) = (leaf.g - lg, leaf.h - lh);
        let (left_hist, right_hist) = if left_rows.len() <= right_rows.len() {
            let small = binned.histogram(&left_rows, grad, hess);
            let large = subtract(&leaf.hist, &small);
            (small, large)
        } else {
            let small = binned.histogram(&right_rows, grad, hess);
            let large = subtract(&leaf.hist, &small);
            (large, small)
        };
        let left_best = best_split(&left_hist, lg, lh, left_rows.len(), params);
        let right_best = best_split(&right_hist, rg, rh, right_rows.len(), params);
        work.push(LeafWork { node: left_id, rows: left_rows, hist: left_hist, g: lg, h: lh, best: left_best });
        work.push(LeafWork { node: left_id + 1, rows: right_rows, hist: right_hist, g: rg, h: rh, best: right_best });
    }

    let mut leaves = Vec::with_capacity(work.len());
    for w in work {
        let value = -w.g / (w.h + params.l2);
        nodes[w.node] = Node::Leaf { value };
        leaves.push((w.rows, value));
    }
    (Tree { nodes }, leaves)
}

/// Trains a model and returns the training log loss before the first tree and
/// after each tree.
pub fn fit_traced(data: &Dataset, params: &GbdtParams) -> Result<(GbdtModel, Vec<f64>)> {
    params.validate()?;
    let n = data.n_rows();
    let (neg, pos) = data.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::DegenerateLabels);
    }
    if n < 2 * params.min_leaf_rows {
        return Err(Error::InsufficientData(format!(
            "{n} rows is fewer than 2 x min_leaf_rows ({})",
            params.min_leaf_rows
        )));
    }
    let d = data.n_cols();
    let edges: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| bin_edges(&data.column_values(j), params.bins))
        .collect();
    let binned = Binned {
        cols: (0..d)
            .map(|j| data.rows().map(|r| bin_of(&edges[j], r[j]) as u8).collect())
            .collect(),
        n_bins: edges.iter().map(|e| e.len() + 1).collect(),
    };

    let prior = pos as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trace = vec![log_loss(&data.labels, &raw)];
    let mut trees = Vec::with_capacity(params.trees);

    for _ in 0..params.trees {
        for i in 0..n {
            let p = logistic(raw[i]);
            grad[i] = p - data.labels[i] as f64;
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let (tree, leaves) = grow_tree(&binned, &edges, &grad, &hess, params);
        if tree.nodes.len() == 1 {
            break;
        }
        for (rows, value) in leaves {
            for r in rows {
                raw[r as usize] += params.learning_rate * value;
            }
        }
        trees.push(tree);
        trace.push(log_loss(&data.labels, &raw));
    }

    let model = GbdtModel {
        version: MODEL_FORMAT_VERSION,
        schema_hash: data.schema_hash(),
        columns: data.columns.clone(),
        params: params.clone(),
        learning_rate: params.learning_rate,
        base_score,
        bin_edges: edges,
        trees,
    };
    Ok((model, trace))
}

pub fn train(data: &Dataset, params: &GbdtParams) -> Result<GbdtModel> {
    fit_traced(data, params).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{Column, ColumnKind};

    fn cols(n: usize) -> Vec<Column> {
        (0..n).map(|i| Column::new(format!("f{i}"), ColumnKind::Continuous)).collect()
    }

    #[test]
    fn edges_at_midpoints_when_bins_suffice() {
        assert_eq!(bin_edges(&[3.0, 1.0, 2.0, 2.0], 255), vec![1.5, 2.5]);
        assert_eq!(bin_of(&[1.5, 2.5], 1.0), 0);
        assert_eq!(bin_of(&[1.5, 2.5], 1.5), 0);
        assert_eq!(bin_of(&[1.5, 2.5], 2.0), 1);
        assert_eq!(bin_of(&[1.5, 2.5], 9.0), 2);
    }

    #[test]
    fn quantile_edges_respect_bin_budget() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin()).collect();
        let e = bin_edges(&v, 16);
        assert!(e.len() <= 15 && e.len() >= 12);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        let mut counts = vec![0usize; e.len() + 1];
        for &x in &v {
            counts[bin_of(&e, x)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 300), "{counts:?}");
    }

    #[test]
    fn empty_model_predicts_prior() {
        let m = GbdtModel::prior_only(cols(2), 0.5, 0.1);
        let p = m.predict(&m.schema_hash, &[1.0, 2.0]).unwrap();
        assert_eq!(p.probability, 0.5);
        assert!(p.flag);
    }

    #[test]
    fn single_tree_prediction_is_logistic_of_leaf() {
        let mut m = GbdtModel::prior_only(cols(1), 0.25, 0.1);
        m.trees.push(Tree {
            nodes: vec![
                Node::Split { feature: 0, bin: 0, threshold: 0.5, gain: 1.0, left: 1, right: 2 },
                Node::Leaf { value: -0.7 },
                Node::Leaf { value: 2.0 },
            ],
        });
        let base = (0.25f64 / 0.75).ln();
        let p = m.predict(&m.schema_hash, &[1.0]).unwrap().probability;
        assert!((p - 1.0 / (1.0 + (-(base + 0.1 * 2.0)).exp())).abs() < 1e-15);
        let q = m.predict(&m.schema_hash, &[0.0]).unwrap().probability;
        assert!((q - 1.0 / (1.0 + (-(base - 0.07)).exp())).abs() < 1e-15);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let m = GbdtModel::prior_only(cols(2), 0.5, 0.1);
        assert!(matches!(m.predict("deadbeef", &[1.0, 2.0]), Err(Error::Schema { .. })));
        assert!(matches!(m.predict(&m.schema_hash, &[1.0]), Err(Error::Schema { .. })));
    }

    #[test]
    fn single_class_is_rejected() {
        let d = Dataset::new(cols(1), vec![vec![0.0]; 50], vec![1; 50]).unwrap();
        assert!(matches!(train(&d, &GbdtParams::default()), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn separable_data_needs_one_tree() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| (i >= 60) as u8).collect();
        let d = Dataset::new(cols(2), rows, labels).unwrap();
        let m = train(&d, &GbdtParams { trees: 1, learning_rate: 1.0, ..Default::default() }).unwrap();
        assert_eq!(m.trees.len(), 1);
        let preds = m.predict_dataset(&d).unwrap();
        assert!(preds.iter().zip(&d.labels).all(|(p, &y)| p.flag == (y == 1)));
        let imp = m.feature_importance();
        assert_eq!(imp[0].name, "f0");
        assert!((imp[0].share - 1.0).abs() < 1e-12);
        assert_eq!(imp[1].gain, 0.0);
    }

    #[test]
    fn xor_is_learnable_with_two_levels() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (a, b, count) in [(0.0, 0.0, 30), (0.0, 1.0, 40), (1.0, 0.0, 50), (1.0, 1.0, 60)] {
            for _ in 0..count {
                rows.push(vec![a, b]);
                labels.push(((a != b) as u8) as u8);
            }
        }
        let d = Dataset::new(cols(2), rows, labels).unwrap();
        let m = train(&d, &GbdtParams { trees: 20, min_leaf_rows: 5, max_leaves: 4, ..Default::default() }).unwrap();
        let preds = m.predict_dataset(&d).unwrap();
        for (p, &y) in preds.iter().zip(&d.labels) {
            assert_eq!(p.flag, y == 1);
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.731).sin(), (i % 7) as f64]).collect();
        let labels: Vec<u8> = rows.iter().map(|r| (r[0] + 0.1 * r[1] > 0.3) as u8).collect();
        let d = Dataset::new(cols(2), rows, labels).unwrap();
        let m = train(&d, &GbdtParams { trees: 10, min_leaf_rows: 5, ..Default::default() }).unwrap();
        let back = GbdtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let mut bad = m.clone();
        bad.version = 99;
        assert!(GbdtModel::from_json(&bad.to_json().unwrap()).is_err());
    }
}
