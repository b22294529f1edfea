//! Agglomerative and k-means clustering with silhouette widths, scree
//! curves, and majority-label accuracy.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{dist2, AnalyticsError, Result};

const MAX_LLOYD_ROUNDS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Complete,
    Single,
    Average,
    Ward,
}

impl Linkage {
    fn method(self) -> kodama::Method {
        match self {
            Self::Complete => kodama::Method::Complete,
            Self::Single => kodama::Method::Single,
            Self::Average => kodama::Method::Average,
            Self::Ward => kodama::Method::Ward,
        }
    }
}

impl FromStr for Linkage {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Self::Complete),
            "single" => Ok(Self::Single),
            "average" => Ok(Self::Average),
            "ward" => Ok(Self::Ward),
            _ => Err(AnalyticsError::InvalidArgument(format!("linkage `{s}`"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Complete => "complete",
            Self::Single => "single",
            Self::Average => "average",
            Self::Ward => "ward",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClusterMethod {
    Hierarchical { linkage: Linkage },
    KMeans { seed: u64, restarts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub method: ClusterMethod,
    pub k: usize,
    /// Cluster per row, numbered `0..k` by first appearance.
    pub assignments: Vec<usize>,
    pub wss: f64,
    pub centers: Vec<Vec<f64>>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(AnalyticsError::InvalidArgument(format!("k = {k} with {n} rows")));
    }
    Ok(())
}

/// Renumbers clusters by first appearance.
fn canonical(assignments: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignments
        .iter()
        .map(|&a| {
            let next = map.len();
            *map.entry(a).or_insert(next)
        })
        .collect()
}

fn centers_of(rows: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &a) in rows.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(r) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn wss(rows: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let centers = centers_of(rows, assignments, k);
    rows.iter().zip(assignments).map(|(r, &a)| dist2(r, &centers[a])).sum()
}

/// Euclidean agglomerative clustering cut at `k` clusters.
pub fn hierarchical_cluster(rows: &[Vec<f64>], k: usize, linkage: Linkage) -> Result<ClusteringResult> {
    let n = rows.len();
    check_k(n, k)?;
    let mut condensed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            condensed.push(dist2(&rows[i], &rows[j]).sqrt());
        }
    }
    let dendrogram = kodama::linkage(&mut condensed, n, linkage.method());
    // Union-find over the first n - k merges; merged clusters are labelled
    // n + step.
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (s, step) in dendrogram.steps().iter().take(n - k).enumerate() {
        let (a, b) = (find(&mut parent, step.cluster1), find(&mut parent, step.cluster2));
        parent[a] = n + s;
        parent[b] = n + s;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let assignments = canonical(&roots);
    let centers = centers_of(rows, &assignments, k);
    Ok(ClusteringResult {
        method: ClusterMethod::Hierarchical { linkage },
        k,
        wss: wss(rows, &assignments),
        assignments,
        centers,
    })
}

fn nearest(centers: &[Vec<f64>], row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from `centers` until assignments settle. An emptied
/// cluster is moved onto the point farthest from its center.
fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let k = centers.len();
    let mut assignments: Vec<usize> = rows.iter().map(|r| nearest(&centers, r).0).collect();
    for _ in 0..MAX_LLOYD_ROUNDS {
        loop {
            let mut counts = vec![0usize; k];
            assignments.iter().for_each(|&a| counts[a] += 1);
            let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
            let far = (0..rows.len())
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| {
                    let da = dist2(&rows[a], &centers[assignments[a]]);
                    let db = dist2(&rows[b], &centers[assignments[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= n leaves a shared cluster");
            centers[empty] = rows[far].clone();
            assignments[far] = empty;
        }
        centers = centers_of(rows, &assignments, k);
        let next: Vec<usize> = rows.iter().map(|r| nearest(&centers, r).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let total = rows.iter().zip(&assignments).map(|(r, &a)| dist2(r, &centers[a])).sum();
    (assignments, centers, total)
}

fn random_start(rows: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, rows.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| rows[i].clone()).collect()
}

fn best_of(rows: &[Vec<f64>], starts: Vec<Vec<Vec<f64>>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let runs: Vec<_> = starts.into_par_iter().map(|c| lloyd(rows, c)).collect();
    // First minimum, so the result does not depend on scheduling.
    runs.into_iter().reduce(|best, r| if r.2 < best.2 { r } else { best }).expect("at least one start")
}

fn kmeans_result(k: usize, seed: u64, restarts: usize, run: (Vec<usize>, Vec<Vec<f64>>, f64)) -> ClusteringResult {
    let (assignments, centers, wss) = run;
    let order = canonical(&assignments);
    // Reorder centers to match the canonical numbering.
    let mut sorted = vec![Vec::new(); k];
    for (&old, &new) in assignments.iter().zip(&order) {
        sorted[new] = centers[old].clone();
    }
    ClusteringResult { method: ClusterMethod::KMeans { seed, restarts }, k, assignments: order, wss, centers: sorted }
}

/// Best of `restarts` Lloyd runs; restart `r` starts from `k` distinct rows
/// drawn with seed `seed + r`.
pub fn kmeans_cluster(rows: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<ClusteringResult> {
    check_k(rows.len(), k)?;
    let starts = (0..restarts.max(1) as u64).map(|r| random_start(rows, k, seed.wrapping_add(r))).collect();
    Ok(kmeans_result(k, seed, restarts, best_of(rows, starts)))
}

/// Best k-means WSS for `k = 1..=k_max`. Each `k > 1` also tries the best
/// `k - 1` centers plus the point farthest from them, so the curve never
/// increases.
pub fn scree(rows: &[Vec<f64>], k_max: usize, seed: u64, restarts: usize) -> Result<Vec<ClusteringResult>> {
    check_k(rows.len(), k_max)?;
    let mut out: Vec<ClusteringResult> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut starts: Vec<Vec<Vec<f64>>> =
            (0..restarts.max(1) as u64).map(|r| random_start(rows, k, seed.wrapping_add(r))).collect();
        if let Some(prev) = out.last() {
            let mut warm = prev.centers.clone();
            let far = (0..rows.len())
                .max_by(|&a, &b| nearest(&warm, &rows[a]).1.total_cmp(&nearest(&warm, &rows[b]).1).then(b.cmp(&a)))
                .expect("rows exist");
            warm.push(rows[far].clone());
            starts.push(warm);
        }
        out.push(kmeans_result(k, seed, restarts, best_of(rows, starts)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    pub widths: Vec<f64>,
    pub average: f64,
}

/// Euclidean silhouette widths; members of singleton clusters get 0.
pub fn silhouette(rows: &[Vec<f64>], assignments: &[usize]) -> Result<Silhouette> {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    assignments.iter().for_each(|&a| sizes[a] += 1);
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(AnalyticsError::InvalidArgument("silhouette needs at least two clusters".into()));
    }
    let widths: Vec<f64> = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, r) in rows.iter().enumerate() {
                if j != i {
                    sums[assignments[j]] += dist2(&rows[i], r).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    let average = widths.iter().sum::<f64>() / widths.len() as f64;
    Ok(Silhouette { widths, average })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAccuracy {
    pub accuracy: f64,
    /// Majority label per cluster.
    pub cluster_labels: Vec<bool>,
    /// Clusters whose majority was a tie, resolved to `true`.
    pub ties: Vec<usize>,
}

pub fn cluster_accuracy(assignments: &[usize], labels: &[bool]) -> Result<ClusterAccuracy> {
    if assignments.len() != labels.len() || labels.is_empty() {
        return Err(AnalyticsError::InvalidArgument(format!(
            "{} assignments for {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![[0usize; 2]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        counts[a][usize::from(l)] += 1;
    }
    let cluster_labels: Vec<bool> = counts.iter().map(|c| c[1] >= c[0]).collect();
    let ties = (0..k).filter(|&c| counts[c][0] == counts[c][1] && counts[c][0] > 0).collect();
    let correct: usize = counts.iter().zip(&cluster_labels).map(|(c, &l)| c[usize::from(l)]).sum();
    Ok(ClusterAccuracy { accuracy: correct as f64 / labels.len() as f64, cluster_labels, ties })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        let mut rows = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.1;
            rows.push(vec![t, -t]);
            rows.push(vec![50.0 + t, 50.0 + t]);
        }
        rows
    }

    #[test]
    fn extremes_of_k() {
        let rows = blobs();
        let all = hierarchical_cluster(&rows, rows.len(), Linkage::Complete).unwrap();
        assert_eq!(all.assignments, (0..rows.len()).collect::<Vec<_>>());
        let one = hierarchical_cluster(&rows, 1, Linkage::Complete).unwrap();
        assert!(one.assignments.iter().all(|&a| a == 0));
        assert!(hierarchical_cluster(&rows, rows.len() + 1, Linkage::Complete).is_err());
    }

    #[test]
    fn blobs_recovered_by_both_methods() {
        let rows = blobs();
        let expected: Vec<usize> = (0..rows.len()).map(|i| i % 2).collect();
        assert_eq!(hierarchical_cluster(&rows, 2, Linkage::Complete).unwrap().assignments, expected);
        let km = kmeans_cluster(&rows, 2, 4, 20).unwrap();
        assert_eq!(km.assignments, expected);
        let one = kmeans_cluster(&rows, 1, 4, 20).unwrap();
        assert!(km.wss < one.wss);
        assert_eq!(km, kmeans_cluster(&rows, 2, 4, 20).unwrap());
    }

    #[test]
    fn single_cluster_wss_is_total_scatter() {
        let rows = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 3.0]];
        let mean = [2.0, 1.0];
        let total: f64 = rows.iter().map(|r| dist2(r, &mean)).sum();
        assert!((kmeans_cluster(&rows, 1, 0, 3).unwrap().wss - total).abs() < 1e-12);
    }

    #[test]
    fn scree_ends_at_zero() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![(i * i) as f64, i as f64]).collect();
        let curve = scree(&rows, 7, 1, 5).unwrap();
        assert_eq!(curve.last().unwrap().wss, 0.0);
        assert!(curve.windows(2).all(|w| w[1].wss <= w[0].wss));
    }

    #[test]
    fn silhouette_conventions() {
        let two = vec![vec![0.0], vec![1.0]];
        assert_eq!(silhouette(&two, &[0, 1]).unwrap().widths, [0.0, 0.0]);
        // Point 1 is as far from its own cluster as from the other.
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![2.0]];
        let s = silhouette(&rows, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.widths[1], 0.0);
        assert!(silhouette(&rows, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn majority_mapping() {
        let acc = cluster_accuracy(&[0, 0, 0, 1, 1], &[true, true, false, false, false]).unwrap();
        assert!((acc.accuracy - 0.8).abs() < 1e-12);
        assert_eq!(acc.cluster_labels, [true, false]);
        let tie = cluster_accuracy(&[0, 0, 1], &[true, false, false]).unwrap();
        assert_eq!(tie.cluster_labels, [true, false]);
        assert_eq!(tie.ties, [0]);
        let own = cluster_accuracy(&[0, 1, 2], &[true, false, true]).unwrap();
        assert_eq!(own.accuracy, 1.0);
    }
}
