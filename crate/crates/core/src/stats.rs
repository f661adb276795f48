//! A12 effect size, bootstrap significance, and Scott-Knott ranking.
//!
//! Splits are chosen on means (between-group sum of squares); methods are
//! ordered and reported by median, highest first.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derive_seed;

/// Effects below this A12 are "small" and never justify a split.
pub const SMALL_EFFECT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkConfig {
    pub bootstraps: usize,
    pub conf: f64,
    pub seed: u64,
}

impl Default for SkConfig {
    fn default() -> Self {
        SkConfig {
            bootstraps: 1000,
            conf: 0.95,
            seed: 0,
        }
    }
}

/// Vargha-Delaney A12: probability that a draw from `x` beats one from `y`,
/// counting ties as half.
pub fn a12(x: &[f64], y: &[f64]) -> f64 {
    let mut more = 0.0;
    let mut same = 0.0;
    for &a in x {
        for &b in y {
            if a > b {
                more += 1.0;
            } else if a == b {
                same += 1.0;
            }
        }
    }
    (more + 0.5 * same) / (x.len() * y.len()) as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation percentile, `p` in `[0, 100]`.
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    percentile(xs, 50.0)
}

/// 75th minus 25th percentile.
pub fn iqr(xs: &[f64]) -> f64 {
    percentile(xs, 75.0) - percentile(xs, 25.0)
}

/// Bootstrap test of equal means: both samples are shifted onto the pooled
/// mean, resampled `bootstraps` times, and equality is rejected when fewer
/// than `1 - conf` of the resampled differences reach the observed one.
pub fn bootstrap_differs(left: &[f64], right: &[f64], cfg: &SkConfig) -> bool {
    let observed = (mean(left) - mean(right)).abs();
    let pooled = (mean(left) * left.len() as f64 + mean(right) * right.len() as f64)
        / (left.len() + right.len()) as f64;
    let shift = |xs: &[f64]| -> Vec<f64> {
        let m = mean(xs);
        xs.iter().map(|x| x - m + pooled).collect()
    };
    let l = shift(left);
    let r = shift(right);
    let tolerance = 1e-9 * (1.0 + observed.abs() + pooled.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let resample_mean = |xs: &[f64], rng: &mut ChaCha8Rng| {
        (0..xs.len()).map(|_| xs[rng.gen_range(0..xs.len())]).sum::<f64>() / xs.len() as f64
    };
    let mut at_least = 0usize;
    for _ in 0..cfg.bootstraps {
        let d = (resample_mean(&l, &mut rng) - resample_mean(&r, &mut rng)).abs();
        if d >= observed - tolerance {
            at_least += 1;
        }
    }
    (at_least as f64 / cfg.bootstraps.max(1) as f64) < 1.0 - cfg.conf
}

/// Significant difference that is also not a small effect.
pub fn significant_split(left: &[f64], right: &[f64], cfg: &SkConfig) -> bool {
    let effect = a12(left, right).max(a12(right, left));
    effect >= SMALL_EFFECT && bootstrap_differs(left, right, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub method: String,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Best group first; within a rank, by descending median.
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    pub fn n_ranks(&self) -> usize {
        self.entries.iter().map(|e| e.rank + 1).max().unwrap_or(0)
    }

    pub fn rank_of(&self, method: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.method == method).map(|e| e.rank)
    }

    /// Methods sharing each rank, in rank order.
    pub fn groups(&self) -> Vec<Vec<&str>> {
        let mut out: Vec<Vec<&str>> = vec![Vec::new(); self.n_ranks()];
        for e in &self.entries {
            out[e.rank].push(&e.method);
        }
        out
    }
}

/// Scott-Knott clustering of methods into statistically distinct ranks.
///
/// Methods are ordered by median. The cut maximising the between-group sum
/// of squares of means is kept when the pooled sides differ
/// ([`significant_split`]) and so do the two methods on either side of it.
pub fn scott_knott(groups: &BTreeMap<String, Vec<f64>>, cfg: &SkConfig) -> Ranking {
    let mut methods: Vec<(&String, &Vec<f64>, f64)> =
        groups.iter().map(|(m, xs)| (m, xs, median(xs))).collect();
    methods.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(b.0)));

    let samples: Vec<&[f64]> = methods.iter().map(|m| m.1.as_slice()).collect();
    let mut leaves = Vec::new();
    split(&samples, 0, samples.len(), cfg, &mut leaves);

    let mut entries = Vec::new();
    for (rank, (lo, hi)) in leaves.into_iter().enumerate() {
        for (name, xs, med) in &methods[lo..hi] {
            entries.push(RankEntry {
                rank,
                method: name.to_string(),
                median: *med,
                iqr: iqr(xs),
            });
        }
    }
    Ranking { entries }
}

fn pooled(samples: &[&[f64]]) -> Vec<f64> {
    samples.iter().flat_map(|s| s.iter().copied()).collect()
}

fn split(samples: &[&[f64]], lo: usize, hi: usize, cfg: &SkConfig, leaves: &mut Vec<(usize, usize)>) {
    if hi - lo < 2 {
        leaves.push((lo, hi));
        return;
    }
    let all = pooled(&samples[lo..hi]);
    let mu = mean(&all);
    let scale = 1e-12 * (1.0 + all.iter().map(|x| x * x).sum::<f64>());
    let mut best: Option<(f64, usize)> = None;
    for cut in lo + 1..hi {
        let l = pooled(&samples[lo..cut]);
        let r = pooled(&samples[cut..hi]);
        let ss = l.len() as f64 * (mean(&l) - mu).powi(2) + r.len() as f64 * (mean(&r) - mu).powi(2);
        if best.map_or(true, |(b, _)| ss > b + scale) {
            best = Some((ss, cut));
        }
    }
    let (_, cut) = best.expect("at least one cut");
    let l = pooled(&samples[lo..cut]);
    let r = pooled(&samples[cut..hi]);
    let test_cfg = SkConfig {
        seed: derive_seed(cfg.seed, ((lo as u64) << 32) | cut as u64),
        ..*cfg
    };
    let boundary_cfg = SkConfig {
        seed: derive_seed(test_cfg.seed, 1),
        ..*cfg
    };
    if significant_split(&l, &r, &test_cfg) && significant_split(samples[cut - 1], samples[cut], &boundary_cfg) {
        split(samples, lo, cut, cfg, leaves);
        split(samples, cut, hi, cfg, leaves);
    } else {
        leaves.push((lo, hi));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub dataset: String,
    pub metric: String,
    pub rank: usize,
    pub method: String,
    pub median: f64,
    pub iqr: f64,
}

pub fn ranking_rows(dataset: &str, metric: &str, ranking: &Ranking) -> Vec<RankingRow> {
    ranking
        .entries
        .iter()
        .map(|e| RankingRow {
            dataset: dataset.to_string(),
            metric: metric.to_string(),
            rank: e.rank,
            method: e.method.clone(),
            median: e.median,
            iqr: e.iqr,
        })
        .collect()
}

/// CSV `dataset,metric,rank,method,median,iqr`.
pub fn write_rankings<W: Write>(rows: &[RankingRow], out: W) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["dataset", "metric", "rank", "method", "median", "iqr"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rankings<R: std::io::Read>(input: R) -> crate::Result<Vec<RankingRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a12_examples() {
        assert_eq!(a12(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.5);
        assert_eq!(a12(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(a12(&[1.0, 2.0], &[1.0, 3.0]), 0.375);
    }

    #[test]
    fn percentiles() {
        let xs = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(median(&xs), 3.0);
        assert_eq!(iqr(&xs), 2.0);
        assert_eq!(median(&[1.0, 2.0]), 1.5);
    }

    #[test]
    fn split_examples() {
        let cfg = SkConfig::default();
        let same = vec![0.3, 0.5, 0.7, 0.4];
        assert!(!significant_split(&same, &same, &cfg));
        assert!(significant_split(&vec![0.9; 25], &vec![0.1; 25], &cfg));
    }

    #[test]
    fn ranks_separated_methods() {
        let mut g = BTreeMap::new();
        g.insert("low".to_string(), (0..25).map(|i| 0.1 + i as f64 * 0.001).collect());
        g.insert("high".to_string(), (0..25).map(|i| 0.9 - i as f64 * 0.001).collect());
        let r = scott_knott(&g, &SkConfig::default());
        assert_eq!(r.rank_of("high"), Some(0));
        assert_eq!(r.rank_of("low"), Some(1));
    }

    #[test]
    fn identical_methods_share_rank() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let g: BTreeMap<String, Vec<f64>> =
            ["a", "b", "c"].iter().map(|m| (m.to_string(), xs.clone())).collect();
        let r = scott_knott(&g, &SkConfig::default());
        assert_eq!(r.n_ranks(), 1);
        assert_eq!(r.entries.len(), 3);
    }

    #[test]
    fn rankings_csv() {
        let rows = vec![RankingRow {
            dataset: "pitsa".into(),
            metric: "recall".into(),
            rank: 0,
            method: "fft_k10".into(),
            median: 0.75,
            iqr: 0.125,
        }];
        let mut buf = Vec::new();
        write_rankings(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,metric,rank,method,median,iqr\n"));
        assert_eq!(read_rankings(buf.as_slice()).unwrap(), rows);
    }
}
