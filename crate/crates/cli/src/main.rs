mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use frugal::corpus::{build_corpus, read_raw_csv, Corpus, PreprocessConfig};
use frugal::evalrig::{
    fit_method, read_records, run_matrix, run_matrix_per_metric, stratified_folds, write_records, Method, RunRecord,
    TrainingSplit,
};
use frugal::features::{lda_fit, top_words, LdaConfig, TfidfModel};
use frugal::fft::{render_rules, train_best};
use frugal::report::{rank_records, render_report, write_atomic};
use frugal::stats::{read_rankings, write_rankings, SkConfig};
use frugal::Goal;

use config::{parse_methods, seed_from_env, ExperimentConfig, GoalChoice};

#[derive(Parser)]
#[command(name = "frugal", version, about = "Topic features, fast-and-frugal trees and a cross-validation rig for bug-report severity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess an `id,text,severity` CSV into a corpus file.
    Prep(PrepArgs),
    /// Export TF-IDF or LDA topic features of a corpus.
    Features(FeaturesArgs),
    /// Fit one method on a whole corpus and save the model as JSON.
    Train(TrainArgs),
    /// Fit LDA(K=N) plus a frugal tree and print its rules.
    Rules(RulesArgs),
    /// Run the cross-validation matrix, rank methods and write a report.
    Experiment(ExperimentArgs),
    /// Rank methods from a results CSV.
    Stats(StatsArgs),
    /// Build the markdown report from rankings and results CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = seed_from_env()? {
            cfg.rig.seed = seed;
        }
        if let Some(seed) = self.seed {
            cfg.rig.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct PrepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureChoice {
    Tfidf,
    Lda,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    common: Common,
    /// Corpus file (from `prep`) or raw CSV.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "lda")]
    kind: FeatureChoice,
    /// Topic count for LDA features.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: PathBuf,
    /// A single method, e.g. `fft_k10`.
    #[arg(long)]
    methods: String,
    #[arg(long, default_value = "precision")]
    goal: Goal,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RulesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: PathBuf,
    /// An `fft_kN` method.
    #[arg(long, default_value = "fft_k10")]
    methods: String,
    #[arg(long, default_value = "precision")]
    goal: Goal,
    /// Rule text file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Corpus files or raw CSVs; repeatable.
    #[arg(long)]
    dataset: Vec<PathBuf>,
    /// Comma-separated, e.g. `tfidf_svm,fft_k10,ldade_svm`.
    #[arg(long)]
    methods: Option<String>,
    /// `both` scores each metric with models trained for it.
    #[arg(long, value_enum)]
    goal: Option<GoalChoice>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for results.csv, rankings.csv and report.md.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    rankings: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Prep(a) => cmd_prep(a),
        Command::Features(a) => cmd_features(a),
        Command::Train(a) => cmd_train(a),
        Command::Rules(a) => cmd_rules(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

fn load_corpus(path: &Path, min_doc_freq: usize) -> Result<Corpus> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let raw = read_raw_csv(path)?;
        let cfg = PreprocessConfig {
            min_doc_freq,
            ..PreprocessConfig::default()
        };
        Ok(build_corpus(&raw, &cfg)?)
    } else {
        Corpus::load(path).with_context(|| format!("loading corpus {}", path.display()))
    }
}

fn single_method(s: &str) -> Result<Method> {
    match parse_methods(s)?.as_slice() {
        [m] => Ok(*m),
        _ => bail!("expected exactly one method, got '{s}'"),
    }
}

fn cmd_prep(a: PrepArgs) -> Result<bool> {
    let cfg = a.common.experiment_config()?;
    let raw = read_raw_csv(&a.dataset)?;
    let corpus = build_corpus(
        &raw,
        &PreprocessConfig {
            min_doc_freq: cfg.min_doc_freq,
            ..PreprocessConfig::default()
        },
    )?;
    corpus.save(&a.out)?;
    println!("{}: {}", dataset_name(&a.dataset), corpus.summary());
    Ok(true)
}

fn cmd_features(a: FeaturesArgs) -> Result<bool> {
    let cfg = a.common.experiment_config()?;
    let corpus = load_corpus(&a.dataset, cfg.min_doc_freq)?;
    match a.kind {
        FeatureChoice::Tfidf => {
            TfidfModel::fit(&corpus).transform_all(&corpus.documents).save_csv(&a.out.join("tfidf.csv"))?;
        }
        FeatureChoice::Lda => {
            let lda_cfg = LdaConfig {
                iterations: cfg.rig.lda_iterations,
                ..LdaConfig::new(a.k).with_seed(cfg.rig.seed)
            };
            let model = lda_fit(&corpus, &lda_cfg)?;
            let ids = corpus.documents.iter().map(|d| d.id.clone()).collect();
            model.training_features(ids).save_csv(&a.out.join(format!("lda_k{}.csv", a.k)))?;
            model.save(&a.out.join(format!("lda_k{}.json", a.k)))?;
        }
    }
    Ok(true)
}

fn cmd_train(a: TrainArgs) -> Result<bool> {
    let cfg = a.common.experiment_config()?;
    let corpus = load_corpus(&a.dataset, cfg.min_doc_freq)?;
    let method = single_method(&a.methods)?;
    let split = TrainingSplit {
        fit: (0..corpus.len()).collect(),
        validation: Vec::new(),
    };
    let fitted = fit_method(&corpus, method, &split, a.goal, &cfg.rig, cfg.rig.seed)?;
    let doc = serde_json::json!({
        "method": method.name(),
        "goal": a.goal,
        "tuned": fitted.tuned,
        "model": fitted.model,
    });
    write_atomic(&a.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    Ok(true)
}

/// LDA(K) and the best depth-d tree on the whole corpus, rendered with the
/// top 8 words of each referenced topic.
fn rules_text(corpus: &Corpus, k: usize, goal: Goal, cfg: &ExperimentConfig) -> Result<String> {
    let lda_cfg = LdaConfig {
        iterations: cfg.rig.lda_iterations,
        ..LdaConfig::new(k).with_seed(cfg.rig.seed)
    };
    let model = lda_fit(corpus, &lda_cfg)?;
    let ids = corpus.documents.iter().map(|d| d.id.clone()).collect();
    let x = model.training_features(ids);
    let tree = train_best(&x, &corpus.labels(), cfg.rig.fft_depth, goal)?;
    let words = (0..model.k())
        .map(|t| top_words(&model, t, 8))
        .collect::<frugal::Result<Vec<_>>>()?;
    Ok(render_rules(&tree, &x.feature_names, Some(&words)))
}

fn cmd_rules(a: RulesArgs) -> Result<bool> {
    let cfg = a.common.experiment_config()?;
    let corpus = load_corpus(&a.dataset, cfg.min_doc_freq)?;
    let Method::LdaFft(k) = single_method(&a.methods)? else {
        bail!("rules needs an fft_kN method");
    };
    let text = rules_text(&corpus, k, a.goal, &cfg)?;
    match a.out {
        Some(p) => write_atomic(&p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn run_dataset(path: &Path, cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let name = dataset_name(path);
    let corpus = load_corpus(path, cfg.min_doc_freq)?;
    log::info!("{name}: {}", corpus.summary());
    let plan = stratified_folds(&corpus.labels(), cfg.repeats, cfg.bins, cfg.rig.seed)?;
    let records = match cfg.goal {
        GoalChoice::Both => run_matrix_per_metric(&name, &corpus, &cfg.methods, &plan, &cfg.rig)?,
        GoalChoice::Precision => run_matrix(&name, &corpus, &cfg.methods, &plan, Goal::Precision, &cfg.rig)?,
        GoalChoice::Recall => run_matrix(&name, &corpus, &cfg.methods, &plan, Goal::Recall, &cfg.rig)?,
    };
    Ok(records)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<bool> {
    let mut cfg = a.common.experiment_config()?;
    if !a.dataset.is_empty() {
        cfg.datasets = a.dataset;
    }
    if let Some(m) = &a.methods {
        cfg.methods = parse_methods(m)?;
    }
    cfg.goal = a.goal.unwrap_or(cfg.goal);
    cfg.repeats = a.repeats.unwrap_or(cfg.repeats);
    cfg.bins = a.bins.unwrap_or(cfg.bins);
    cfg.jobs = a.jobs.or(cfg.jobs);
    if let Some(out) = a.out {
        cfg.out = out;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;

    let mut all = Vec::new();
    let mut complete = true;
    for path in &cfg.datasets {
        match pool.install(|| run_dataset(path, &cfg)) {
            Ok(records) => {
                log::info!("{}: {} records", dataset_name(path), records.len());
                all.extend(records);
            }
            Err(e) => {
                log::error!("{}: {e:#}", dataset_name(path));
                complete = false;
            }
        }
    }

    let rankings = rank_records(&all, &SkConfig { seed: cfg.rig.seed, ..SkConfig::default() });
    let mut results_csv = Vec::new();
    write_records(&all, &mut results_csv)?;
    let mut rankings_csv = Vec::new();
    write_rankings(&rankings, &mut rankings_csv)?;
    write_atomic(&cfg.out.join("results.csv"), &results_csv)?;
    write_atomic(&cfg.out.join("rankings.csv"), &rankings_csv)?;
    write_atomic(&cfg.out.join("report.md"), render_report(&rankings, &all).as_bytes())?;
    println!("wrote {}", cfg.out.display());
    Ok(complete)
}

fn cmd_stats(a: StatsArgs) -> Result<bool> {
    let cfg = a.common.experiment_config()?;
    let file = std::fs::File::open(&a.results).with_context(|| format!("opening {}", a.results.display()))?;
    let records = read_records(file)?;
    let rankings = rank_records(&records, &SkConfig { seed: cfg.rig.seed, ..SkConfig::default() });
    let mut buf = Vec::new();
    write_rankings(&rankings, &mut buf)?;
    write_atomic(&a.out, &buf)?;
    Ok(true)
}

fn cmd_report(a: ReportArgs) -> Result<bool> {
    let open = |p: &Path| std::fs::File::open(p).with_context(|| format!("opening {}", p.display()));
    let rankings = read_rankings(open(&a.rankings)?)?;
    let records = read_records(open(&a.results)?)?;
    write_atomic(&a.out, render_report(&rankings, &records).as_bytes())?;
    Ok(true)
}
