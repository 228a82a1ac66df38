//! Synthetic minority oversampling.

use rand::Rng;

use super::dataset::{ColumnKind, Dataset, RowOrigin};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

fn origin_id(o: &RowOrigin) -> usize {
    match *o {
        RowOrigin::Observed(id) => id,
        RowOrigin::Synthetic { parent, .. } => parent,
    }
}

/// Indices (into `points`) of the `k` nearest other points of `points[i]`,
/// ties broken by lower index.
fn nearest_neighbors(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut dists: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| {
            let d: f64 = p.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, j)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if dists.len() > k {
        dists.select_nth_unstable_by(k - 1, cmp);
        dists.truncate(k);
    }
    dists.sort_by(cmp);
    dists.into_iter().map(|(_, j)| j).collect()
}

/// Oversamples the minority class up to parity with the majority. Each
/// synthetic row interpolates a parent toward one of its `k` nearest minority
/// neighbors (distances on standardized continuous columns); non-continuous
/// columns are copied from the parent.
pub fn smote<R: Rng>(data: &Dataset, k: usize, rng: &mut R) -> Result<Dataset> {
    let (neg, pos) = data.class_counts();
    if neg == pos {
        return Ok(data.clone());
    }
    let (minority_label, needed) = if pos < neg { (1u8, neg - pos) } else { (0u8, pos - neg) };
    let minority: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels[i] == minority_label).collect();
    if k == 0 || minority.len() < k + 1 {
        return Err(Error::InsufficientMinority {
            needed: k + 1,
            have: minority.len(),
        });
    }

    let continuous: Vec<usize> = (0..data.n_cols())
        .filter(|&j| data.columns[j].kind == ColumnKind::Continuous)
        .collect();
    let n = data.n_rows() as f64;
    let scale: Vec<(f64, f64)> = continuous
        .iter()
        .map(|&j| {
            let mean = data.rows().map(|r| r[j]).sum::<f64>() / n;
            let var = data.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect();
    let standardized: Vec<Vec<f64>> = minority
        .iter()
        .map(|&i| {
            let r = data.row(i);
            continuous.iter().zip(&scale).map(|(&j, &(m, s))| (r[j] - m) / s).collect()
        })
        .collect();

    let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; minority.len()];
    let mut out = data.clone();
    let mut synthetic = vec![0.0; data.n_cols()];
    for s in 0..needed {
        let p = s % minority.len();
        let nbrs = neighbors[p].get_or_insert_with(|| nearest_neighbors(&standardized, p, k));
        let q = nbrs[rng.gen_range(0..nbrs.len())];
        let u: f64 = rng.gen_range(0.0..=1.0);
        let parent = data.row(minority[p]);
        let other = data.row(minority[q]);
        synthetic.copy_from_slice(parent);
        for &j in &continuous {
            synthetic[j] = parent[j] + u * (other[j] - parent[j]);
        }
        out.push(
            &synthetic,
            minority_label,
            RowOrigin::Synthetic {
                parent: origin_id(&data.origins[minority[p]]),
                neighbor: origin_id(&data.origins[minority[q]]),
                u,
            },
        );
    }
    Ok(out)
}
