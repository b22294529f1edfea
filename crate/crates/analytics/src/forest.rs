//! Regression random forests on 0/1 labels and recursive feature elimination
//! scored by resampled RMSE.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::FeatureMatrix;
use crate::{AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` for `max(p / 3, 1)`.
    pub mtry: Option<usize>,
    /// Nodes with at most this many samples become leaves.
    pub min_node: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 500, mtry: None, min_node: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    mtry: usize,
    min_node: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    /// Best `(feature, threshold, sse)` among `mtry` sampled features.
    fn best_split(&mut self, idx: &mut [usize]) -> Option<(usize, f64, f64)> {
        let p = self.x[0].len();
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let mut best: Option<(usize, f64, f64)> = None;
        for f in sample(&mut self.rng, p, self.mtry.min(p)).into_iter() {
            idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = 0.0;
            for s in 1..idx.len() {
                left += self.y[idx[s - 1]];
                let (lo, hi) = (self.x[idx[s - 1]][f], self.x[idx[s]][f]);
                if lo == hi {
                    continue;
                }
                let (nl, nr) = (s as f64, n - s as f64);
                let right = total - left;
                // SSE = Σy² − (Σ_l)²/n_l − (Σ_r)²/n_r; Σy² is shared by all splits.
                let score = -(left * left / nl + right * right / nr);
                if best.is_none_or(|b| score < b.2) {
                    best = Some((f, lo + (hi - lo) / 2.0, score));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize]) -> usize {
        let at = self.nodes.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf(mean));
        if idx.len() <= self.min_node || idx.iter().all(|&i| self.y[i] == self.y[idx[0]]) {
            return at;
        }
        let Some((feature, threshold, _)) = self.best_split(idx) else { return at };
        let mid = partition(idx, |i| self.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

/// Stable in-place partition; returns the count satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let mid = yes.len();
    idx[..mid].copy_from_slice(&yes);
    idx[mid..].copy_from_slice(&no);
    mid
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
    width: usize,
    /// Out-of-bag RMSE over rows left out by at least one tree.
    pub oob_rmse: f64,
    /// Mean increase in out-of-bag MSE when a feature is permuted.
    pub importance: Vec<f64>,
}

fn mse(pred: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, y) in pred {
        sum += (p - y) * (p - y);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl RandomForest {
    /// Tree `t` draws from stream `t` of the generator seeded with
    /// `params.seed`, so the fit does not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Self> {
        let n = x.len();
        if n == 0 || n != y.len() {
            return Err(AnalyticsError::InvalidArgument(format!("{n} rows for {} labels", y.len())));
        }
        let width = x[0].len();
        if let Some(row) = x.iter().find(|r| r.len() != width) {
            return Err(AnalyticsError::WidthMismatch { expected: width, got: row.len() });
        }
        if width == 0 || params.trees == 0 {
            return Err(AnalyticsError::InvalidArgument("forest needs features and trees".into()));
        }
        let mtry = params.mtry.unwrap_or(width / 3).max(1);
        let fitted: Vec<(Tree, Vec<usize>, Vec<f64>)> = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let mut in_bag = vec![false; n];
                let mut idx: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect();
                let mut b = Builder { x, y, mtry, min_node: params.min_node.max(1), rng, nodes: Vec::new() };
                b.grow(&mut idx);
                let tree = Tree { nodes: b.nodes };
                let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
                let importance = permutation_importance(&tree, x, y, &oob, &mut b.rng);
                (tree, oob, importance)
            })
            .collect();
        let mut sums = vec![(0.0, 0usize); n];
        let mut importance = vec![0.0; width];
        for (tree, oob, imp) in &fitted {
            for &i in oob {
                sums[i].0 += tree.predict(&x[i]);
                sums[i].1 += 1;
            }
            importance.iter_mut().zip(imp).for_each(|(a, b)| *a += b);
        }
        importance.iter_mut().for_each(|v| *v /= params.trees as f64);
        let oob_rmse =
            mse(sums.iter().zip(y).filter(|(s, _)| s.1 > 0).map(|(s, &y)| (s.0 / s.1 as f64, y))).sqrt();
        Ok(Self { trees: fitted.into_iter().map(|f| f.0).collect(), width, oob_rmse, importance })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.width {
            return Err(AnalyticsError::WidthMismatch { expected: self.width, got: row.len() });
        }
        Ok(self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64)
    }
}

fn permutation_importance(tree: &Tree, x: &[Vec<f64>], y: &[f64], oob: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let width = x[0].len();
    if oob.len() < 2 {
        return vec![0.0; width];
    }
    let base = mse(oob.iter().map(|&i| (tree.predict(&x[i]), y[i])));
    let mut row = Vec::with_capacity(width);
    (0..width)
        .map(|f| {
            let mut donors = oob.to_vec();
            rand::seq::SliceRandom::shuffle(donors.as_mut_slice(), rng);
            let permuted = oob.iter().zip(&donors).map(|(&i, &d)| {
                row.clear();
                row.extend_from_slice(&x[i]);
                row[f] = x[d][f];
                (tree.predict(&row), y[i])
            });
            mse(permuted) - base
        })
        .collect()
}

/// Feature indices by decreasing importance; ties keep column order.
fn rank(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeParams {
    /// Subset sizes to evaluate, each at most the number of features.
    pub sizes: Vec<usize>,
    /// Bootstrap resamples; each is scored on its out-of-bag rows.
    pub resamples: usize,
    pub forest: ForestParams,
}

impl Default for RfeParams {
    fn default() -> Self {
        Self { sizes: Vec::new(), resamples: 10, forest: ForestParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeRow {
    pub size: usize,
    pub rmse: f64,
    /// Sample standard deviation of the per-resample RMSE.
    pub rmse_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    /// Ascending by size.
    pub profile: Vec<RfeRow>,
    pub best_size: usize,
    /// All feature names by decreasing importance on the full data.
    pub ranking: Vec<String>,
    /// Importance aligned with `ranking`.
    pub importance: Vec<f64>,
    /// The first `best_size` names of `ranking`.
    pub selected: Vec<String>,
}

/// Per resample, ranks features with a forest on the in-bag rows, refits on
/// the top `s` features for every size `s`, and scores RMSE on the held-out
/// rows. The best size has the lowest mean RMSE, smaller sizes winning ties.
/// Resample `r` uses seed `forest.seed + r + 1`; the full-data forest uses
/// `forest.seed`.
pub fn rfe_select(matrix: &FeatureMatrix, labels: &[bool], params: &RfeParams) -> Result<RfeResult> {
    let n = matrix.values.len();
    let p = matrix.width();
    if labels.len() != n {
        return Err(AnalyticsError::InvalidArgument(format!("{n} rows for {} labels", labels.len())));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(AnalyticsError::SingleClass);
    }
    let mut sizes = params.sizes.clone();
    if sizes.is_empty() {
        sizes = (1..=p).collect();
    }
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > p) {
        return Err(AnalyticsError::InvalidArgument(format!("subset size {bad} with {p} features")));
    }
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let x = &matrix.values;

    let scores: Vec<Vec<f64>> = (0..params.resamples.max(1) as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let seed = params.forest.seed.wrapping_add(r + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut in_bag = vec![false; n];
            let bag: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.gen_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            let held: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
            let fp = ForestParams { seed, ..params.forest.clone() };
            let bx: Vec<Vec<f64>> = bag.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<f64> = bag.iter().map(|&i| y[i]).collect();
            let order = rank(&RandomForest::fit(&bx, &by, &fp)?.importance);
            sizes
                .iter()
                .map(|&s| {
                    let cols = &order[..s];
                    let pick = |row: &Vec<f64>| cols.iter().map(|&c| row[c]).collect::<Vec<f64>>();
                    let forest = RandomForest::fit(&bx.iter().map(pick).collect::<Vec<_>>(), &by, &fp)?;
                    let pred: Result<Vec<(f64, f64)>> =
                        held.iter().map(|&i| Ok((forest.predict_row(&pick(&x[i]))?, y[i]))).collect();
                    Ok(mse(pred?.into_iter()).sqrt())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let profile: Vec<RfeRow> = sizes
        .iter()
        .enumerate()
        .map(|(j, &size)| {
            let v: Vec<f64> = scores.iter().map(|s| s[j]).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = if v.len() > 1 {
                (v.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            RfeRow { size, rmse: mean, rmse_sd: sd }
        })
        .collect();
    let best_size = profile
        .iter()
        .fold(None::<&RfeRow>, |b, r| match b {
            Some(b) if b.rmse <= r.rmse => Some(b),
            _ => Some(r),
        })
        .expect("at least one size")
        .size;

    let full = RandomForest::fit(x, &y, &params.forest)?;
    let order = rank(&full.importance);
    let ranking: Vec<String> = order.iter().map(|&c| matrix.columns[c].clone()).collect();
    Ok(RfeResult {
        profile,
        best_size,
        importance: order.iter().map(|&c| full.importance[c]).collect(),
        selected: ranking[..best_size].to_vec(),
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule_data(n: usize) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = values.iter().map(|r| r[0] > 0.0).collect();
        let m = FeatureMatrix {
            rows: (0..n).map(|i| i.to_string()).collect(),
            columns: (1..=5).map(|j| format!("f{j}")).collect(),
            values,
        };
        (m, labels)
    }

    fn small(seed: u64) -> ForestParams {
        ForestParams { trees: 60, seed, ..ForestParams::default() }
    }

    #[test]
    fn single_tree_fits_a_step() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(u8::from(i >= 10))).collect();
        let f = RandomForest::fit(&x, &y, &ForestParams { trees: 1, mtry: Some(1), min_node: 1, seed: 3 }).unwrap();
        assert_eq!(f.predict_row(&[-5.0]).unwrap(), 0.0);
        assert_eq!(f.predict_row(&[50.0]).unwrap(), 1.0);
        assert!(f.predict_row(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn forest_is_deterministic_and_ranks_the_rule_feature() {
        let (m, labels) = rule_data(120);
        let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
        let a = RandomForest::fit(&m.values, &y, &small(5)).unwrap();
        assert_eq!(a, RandomForest::fit(&m.values, &y, &small(5)).unwrap());
        assert_eq!(rank(&a.importance)[0], 0);
        assert!(a.oob_rmse < 0.3, "{}", a.oob_rmse);
    }

    #[test]
    fn rfe_finds_rule_feature() {
        let (m, labels) = rule_data(80);
        let params = RfeParams { sizes: vec![1, 3, 5], resamples: 3, forest: small(2) };
        let r = rfe_select(&m, &labels, &params).unwrap();
        assert_eq!(r.ranking[0], "f1");
        assert_eq!(r.profile.iter().map(|p| p.size).collect::<Vec<_>>(), [1, 3, 5]);
        assert_eq!(r.selected.len(), r.best_size);
    }

    #[test]
    fn rfe_edge_cases() {
        let (m, labels) = rule_data(30);
        let all = RfeParams { sizes: vec![5], resamples: 2, forest: small(1) };
        let r = rfe_select(&m, &labels, &all).unwrap();
        assert_eq!(r.profile.len(), 1);
        assert_eq!(r.selected.len(), 5);
        assert!(matches!(rfe_select(&m, &[true; 30], &all), Err(AnalyticsError::SingleClass)));
        let too_big = RfeParams { sizes: vec![6], ..all };
        assert!(rfe_select(&m, &labels, &too_big).is_err());
    }
}
