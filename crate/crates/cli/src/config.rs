use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frugal::evalrig::{Method, RigConfig, TuningMode};

/// Goal selection for an experiment: one metric, or each metric scored by
/// models trained for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GoalChoice {
    Precision,
    Recall,
    Both,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub datasets: Vec<PathBuf>,
    pub methods: Vec<Method>,
    pub goal: GoalChoice,
    pub repeats: usize,
    pub bins: usize,
    pub min_doc_freq: usize,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub rig: RigConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            methods: Method::standard(),
            goal: GoalChoice::Both,
            repeats: 5,
            bins: 5,
            min_doc_freq: 1,
            jobs: None,
            out: PathBuf::from("results"),
            rig: RigConfig::default(),
        }
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored; later keys override earlier ones.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got '{line}'", n + 1);
        };
        pairs.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(pairs)
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let methods = s
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<Method>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        bail!("no methods given");
    }
    Ok(methods)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow::anyhow!("{key}: cannot parse '{v}': {e}"))
}

impl ExperimentConfig {
    /// Applies `key=value` settings; relative dataset paths resolve against
    /// `base`.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>, base: &Path) -> Result<()> {
        for (key, v) in pairs {
            let rig = &mut self.rig;
            match key.as_str() {
                "dataset" | "datasets" => {
                    self.datasets = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| base.join(s)).collect()
                }
                "methods" => self.methods = parse_methods(v)?,
                "goal" => {
                    self.goal = <GoalChoice as clap::ValueEnum>::from_str(v, true)
                        .map_err(|e| anyhow::anyhow!("goal: {e}"))?
                }
                "repeats" => self.repeats = num(key, v)?,
                "bins" => self.bins = num(key, v)?,
                "seed" => rig.seed = num(key, v)?,
                "out" => self.out = base.join(v),
                "jobs" => self.jobs = Some(num(key, v)?),
                "min_doc_freq" => self.min_doc_freq = num(key, v)?,
                "lda_iterations" => rig.lda_iterations = num(key, v)?,
                "fold_in_iterations" => rig.fold_in_iterations = num(key, v)?,
                "svm_lambda" => rig.svm.lambda = num(key, v)?,
                "svm_epochs" => rig.svm.epochs = num(key, v)?,
                "fft_depth" => rig.fft_depth = num(key, v)?,
                "de_np" => rig.de.np = num(key, v)?,
                "de_f" => rig.de.f = num(key, v)?,
                "de_cr" => rig.de.cr = num(key, v)?,
                "de_generations" => rig.de.generations = num(key, v)?,
                "de_k_min" => rig.de.bounds.k.0 = num(key, v)?,
                "de_k_max" => rig.de.bounds.k.1 = num(key, v)?,
                "stability_runs" => rig.stability.runs = num(key, v)?,
                "stability_iterations" => rig.stability.iterations = num(key, v)?,
                "tuning" => rig.tuning = v.parse::<TuningMode>()?,
                other => bail!("unknown config key '{other}'"),
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = ExperimentConfig::default();
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.apply(&parse_pairs(&text)?, base)
            .with_context(|| format!("in {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            bail!("no datasets given");
        }
        if self.methods.is_empty() {
            bail!("no methods given");
        }
        for d in &self.datasets {
            if !d.exists() {
                bail!("dataset {} does not exist", d.display());
            }
        }
        Ok(())
    }
}

/// `FRUGAL_SEED`, when set, replaces the seed from the config file.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var("FRUGAL_SEED") {
        Ok(v) => Ok(Some(num("FRUGAL_SEED", v.trim())?)),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_overrides() {
        let text = "# comment\nmethods = fft_k10, tfidf_svm\nrepeats=2\nde_np = 6\n\ngoal=recall\ndataset=a.csv,b.csv\n";
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&parse_pairs(text).unwrap(), Path::new("/data")).unwrap();
        assert_eq!(cfg.methods, vec![Method::LdaFft(10), Method::TfidfSvm]);
        assert_eq!(cfg.repeats, 2);
        assert_eq!(cfg.rig.de.np, 6);
        assert_eq!(cfg.goal, GoalChoice::Recall);
        assert_eq!(cfg.datasets, vec![PathBuf::from("/data/a.csv"), PathBuf::from("/data/b.csv")]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pairs("no equals sign").is_err());
        let mut cfg = ExperimentConfig::default();
        let bad = parse_pairs("colour = blue").unwrap();
        assert!(cfg.apply(&bad, Path::new(".")).is_err());
        let bad = parse_pairs("repeats = many").unwrap();
        assert!(cfg.apply(&bad, Path::new(".")).is_err());
        assert!(parse_methods("fft_k10,svm").is_err());
    }
}
