//! Experiment harness: three-way method comparison, the uniform-mix sweep,
//! and CSV/JSON reporting.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{predict_pmf, random_predictor, train_pmf, PmfConfig};
use crate::error::{Error, Result};
use crate::ingest::{
    generate_zipf_dataset, load_ratings, parse_csv, parse_movielens, perturb_distribution, split,
    SplitSpec, ZipfSpec,
};
use crate::metrics::{
    fit_zipf_to_masses, item_mass, mae, matthew_degree, EvalReport, MATTHEW_DEFINITION,
};
use crate::model::{global_max_dot, predict_rating, RatingsDataset, TrainConfig};
use crate::zeromat::{train_zeromat, ZeroMatRun};

pub const METHOD_ZEROMAT: &str = "zeromat";
pub const METHOD_PMF: &str = "pmf";
pub const METHOD_RANDOM: &str = "random";
pub const METHOD_GROUND_TRUTH: &str = "ground_truth";

pub const REPORT_CSV_HEADER: &str = "method,mae,matthew_degree,zipf_slope,seed,k,eta,iterations";
pub const CURVE_CSV_HEADER: &str = "lambda,zeromat_mae,pmf_mae,random_mae,replicates";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    MovieLens(PathBuf),
    Csv(PathBuf),
    /// Autodetected from the file's first line.
    File(PathBuf),
    Zipf {
        spec: ZipfSpec<f64>,
        seed: u64,
    },
}

impl DataSource {
    fn describe(&self) -> String {
        match self {
            DataSource::MovieLens(p) => format!("movielens:{}", p.display()),
            DataSource::Csv(p) => format!("csv:{}", p.display()),
            DataSource::File(p) => format!("file:{}", p.display()),
            DataSource::Zipf { spec, seed } => format!(
                "zipf:s={},users={},items={},per_user={},r_max={},lambda={},seed={}",
                spec.exponent,
                spec.num_users,
                spec.num_items,
                spec.ratings_per_user,
                spec.r_max,
                spec.uniform_mix,
                seed
            ),
        }
    }

    pub fn load(&self, r_max: Option<f64>) -> Result<RatingsDataset<f64>> {
        let open = |p: &Path| {
            File::open(p)
                .map(std::io::BufReader::new)
                .map_err(|e| Error::io_at(p, e))
        };
        match self {
            DataSource::MovieLens(p) => Ok(parse_movielens(open(p)?, r_max)?.dataset),
            DataSource::Csv(p) => Ok(parse_csv(open(p)?, r_max)?.dataset),
            DataSource::File(p) => Ok(load_ratings(p, r_max)?.dataset),
            DataSource::Zipf { spec, seed } => {
                let data =
                    generate_zipf_dataset(spec, *seed).map_err(|e| Error::Config(e.to_string()))?;
                match r_max {
                    Some(r) => data.with_r_max(r),
                    None => Ok(data),
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Everything needed to reproduce one comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub split: SplitSpec,
    pub zeromat: TrainConfig<f64>,
    /// Overrides the default `20 * N * ceil(M / N)` step count.
    pub zeromat_iterations: Option<u64>,
    pub pmf: PmfConfig<f64>,
    pub random_seed: u64,
    pub r_max: Option<f64>,
    pub seed: u64,
}

/// SplitMix64 finalizer, used to derive independent per-stage seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    /// Default hyperparameters with every stage seeded from `seed`.
    pub fn new(source: DataSource, seed: u64) -> Self {
        let mut cfg = ExperimentConfig {
            source,
            split: SplitSpec {
                train_fraction: 0.8,
                seed: 0,
            },
            zeromat: TrainConfig::default(),
            zeromat_iterations: None,
            pmf: PmfConfig::default(),
            random_seed: 0,
            r_max: None,
            seed,
        };
        cfg.reseed(seed);
        cfg
    }

    /// Re-derives every stage seed (data, split, trainers, random) from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        if let DataSource::Zipf {
            seed: data_seed, ..
        } = &mut self.source
        {
            *data_seed = derive_seed(seed, 0);
        }
        self.split.seed = derive_seed(seed, 1);
        self.zeromat.seed = derive_seed(seed, 2);
        self.pmf.seed = derive_seed(seed, 3);
        self.random_seed = derive_seed(seed, 4);
    }

    /// This config's hyperparameters applied to a synthetic source.
    pub fn for_replicate(&self, spec: ZipfSpec<f64>, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.source = DataSource::Zipf { spec, seed: 0 };
        cfg.reseed(seed);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.split.validate().map_err(wrap)?;
        self.zeromat.validate().map_err(wrap)?;
        self.pmf.validate().map_err(wrap)?;
        if let DataSource::Zipf { spec, .. } = &self.source {
            spec.validate().map_err(wrap)?;
        }
        if let Some(r) = self.r_max {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!(
                    "r_max override must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// Trains ZeroMat for the universe of `data`. Only the dimensions are read.
pub fn train_zeromat_for(
    data: &RatingsDataset<f64>,
    config: &TrainConfig<f64>,
    iterations: Option<u64>,
) -> Result<ZeroMatRun<f64>> {
    let (n, m) = (data.num_users(), data.num_items());
    let cfg = TrainConfig {
        iterations: iterations.unwrap_or_else(|| TrainConfig::<f64>::default_iterations(n, m)),
        ..config.clone()
    };
    train_zeromat(n, m, &cfg)
}

/// Predictions of every method on one shared list of test pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonOutcome {
    pub test_pairs: Vec<(usize, usize)>,
    pub truths: Vec<f64>,
    /// Keyed by method name; each vector is aligned with `test_pairs`.
    pub predictions: BTreeMap<String, Vec<f64>>,
    pub zeromat: ZeroMatRun<f64>,
    pub reports: Vec<EvalReport>,
}

/// Loads the data, splits it, trains ZeroMat (dimensions and `r_max` only)
/// and PMF (training triples), and scores ZeroMat, PMF and random guessing
/// on the same test pairs. A `ground_truth` row reports the concentration of
/// the actual test ratings.
pub fn run_comparison(config: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    run_comparison_detailed(config).map(|o| o.reports)
}

pub fn run_comparison_detailed(config: &ExperimentConfig) -> Result<ComparisonOutcome> {
    config.validate()?;
    let data = config.source.load(config.r_max)?;
    let (train, test) = split(&data, &config.split)?;
    let r_max = data.r_max();
    let pairs = test.pairs();
    let truths = test.ratings();
    let items: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();

    let zm = train_zeromat_for(&train, &config.zeromat, config.zeromat_iterations)?;
    let max_dot = global_max_dot(&zm.model)?;
    let zm_pred = pairs
        .iter()
        .map(|&(i, j)| predict_rating(&zm.model, i, j, r_max, max_dot))
        .collect::<Result<Vec<_>>>()?;

    let pmf_model = train_pmf(&train, &config.pmf)?;
    let pmf_pred = pairs
        .iter()
        .map(|&(i, j)| predict_pmf(&pmf_model, i, j, r_max))
        .collect::<Result<Vec<_>>>()?;

    let rnd_pred = random_predictor(&pairs, r_max, config.random_seed)?;

    let mut common = BTreeMap::new();
    common.insert("source".to_string(), config.source.describe());
    common.insert("master_seed".to_string(), config.seed.to_string());
    common.insert("num_users".to_string(), data.num_users().to_string());
    common.insert("num_items".to_string(), data.num_items().to_string());
    common.insert("num_ratings".to_string(), data.len().to_string());
    common.insert("test_pairs".to_string(), pairs.len().to_string());
    common.insert("r_max".to_string(), r_max.to_string());
    common.insert(
        "train_fraction".to_string(),
        config.split.train_fraction.to_string(),
    );
    common.insert("split_seed".to_string(), config.split.seed.to_string());
    common.insert("matthew_degree".to_string(), MATTHEW_DEFINITION.to_string());

    let score = |method: &str,
                 pred: &[f64],
                 seed: u64,
                 k: usize,
                 eta: f64,
                 iterations: u64,
                 extra: &[(&str, String)]|
     -> Result<EvalReport> {
        let mass = item_mass(&items, pred, data.num_items())?;
        let mut cfg = common.clone();
        cfg.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        Ok(EvalReport {
            method: method.to_string(),
            mae: mae(pred, &truths)?,
            matthew_degree: matthew_degree(&mass)?,
            zipf_slope: fit_zipf_to_masses(&mass, 0.0).ok(),
            seed,
            k,
            eta,
            iterations,
            config: cfg,
        })
    };

    let zc = &zm.config;
    let reports = vec![
        score(
            METHOD_ZEROMAT,
            &zm_pred,
            zc.seed,
            zc.k,
            zc.eta,
            zc.iterations,
            &[
                ("epsilon", zc.epsilon.to_string()),
                ("sigma_sq", zc.sigma_sq.to_string()),
                ("max_dot", max_dot.to_string()),
                ("skipped_pairs", zm.skipped_pairs.to_string()),
            ],
        )?,
        score(
            METHOD_PMF,
            &pmf_pred,
            config.pmf.seed,
            config.pmf.k,
            config.pmf.eta,
            config.pmf.epochs as u64,
            &[
                ("lambda_reg", config.pmf.lambda_reg.to_string()),
                ("epochs", config.pmf.epochs.to_string()),
            ],
        )?,
        score(METHOD_RANDOM, &rnd_pred, config.random_seed, 0, 0.0, 0, &[])?,
        score(
            METHOD_GROUND_TRUTH,
            &truths,
            config.split.seed,
            0,
            0.0,
            0,
            &[],
        )?,
    ];

    let mut predictions = BTreeMap::new();
    predictions.insert(METHOD_ZEROMAT.to_string(), zm_pred);
    predictions.insert(METHOD_PMF.to_string(), pmf_pred);
    predictions.insert(METHOD_RANDOM.to_string(), rnd_pred);
    Ok(ComparisonOutcome {
        test_pairs: pairs,
        truths,
        predictions,
        zeromat: zm,
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockstatePoint {
    pub lambda: f64,
    pub zeromat_mae: f64,
    pub pmf_mae: f64,
    pub random_mae: f64,
}

/// Mean MAE per method at each uniform-mix level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockstateCurve {
    pub points: Vec<LockstatePoint>,
    pub replicates: usize,
    pub seeds: Vec<u64>,
}

impl LockstateCurve {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn zeromat_maes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.zeromat_mae).collect()
    }
}

/// Replicate seeds used by [`run_lockstate_experiment`].
pub fn replicate_seeds(base_seed: u64, replicates: usize) -> Vec<u64> {
    (0..replicates as u64)
        .map(|r| base_seed.wrapping_add(r))
        .collect()
}

/// Sweeps the uniform mix of `base_spec`, running a full comparison for each
/// `(lambda, replicate)` and averaging MAE over replicates.
///
/// Replicates run in parallel; results are aggregated in lambda-then-seed
/// order so the curve does not depend on scheduling.
pub fn run_lockstate_experiment(
    base_spec: &ZipfSpec<f64>,
    lambdas: &[f64],
    replicates: usize,
    template: &ExperimentConfig,
    base_seed: u64,
) -> Result<LockstateCurve> {
    if lambdas.is_empty() {
        return Err(Error::Config("no lambda values given".into()));
    }
    if replicates == 0 {
        return Err(Error::Config("replicates must be >= 1".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(
            "lambda values must be strictly ascending".into(),
        ));
    }
    let specs = lambdas
        .iter()
        .map(|&l| perturb_distribution(base_spec, l))
        .collect::<Result<Vec<_>>>()?;
    let seeds = replicate_seeds(base_seed, replicates);

    let jobs: Vec<(usize, u64)> = (0..lambdas.len())
        .flat_map(|l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let results: Vec<Vec<EvalReport>> = jobs
        .par_iter()
        .map(|&(l, s)| run_comparison(&template.for_replicate(specs[l].clone(), s)))
        .collect::<Result<_>>()?;

    let mean_of = |rows: &[Vec<EvalReport>], method: &str| -> f64 {
        let total: f64 = rows
            .iter()
            .map(|r| {
                r.iter()
                    .find(|e| e.method == method)
                    .map_or(f64::NAN, |e| e.mae)
            })
            .sum();
        total / rows.len() as f64
    };
    let points = lambdas
        .iter()
        .zip(results.chunks(replicates))
        .map(|(&lambda, rows)| LockstatePoint {
            lambda,
            zeromat_mae: mean_of(rows, METHOD_ZEROMAT),
            pmf_mae: mean_of(rows, METHOD_PMF),
            random_mae: mean_of(rows, METHOD_RANDOM),
        })
        .collect();
    Ok(LockstateCurve {
        points,
        replicates,
        seeds,
    })
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_reports_csv<W: Write>(reports: &[EvalReport], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            fmt6(r.mae),
            fmt6(r.matthew_degree),
            r.zipf_slope.map_or_else(|| "nan".to_string(), fmt6),
            r.seed,
            r.k,
            fmt6(r.eta),
            r.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(curve: &LockstateCurve, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt6(p.lambda),
            fmt6(p.zeromat_mae),
            fmt6(p.pmf_mae),
            fmt6(p.random_mae),
            curve.replicates
        )?;
    }
    out.flush()?;
    Ok(())
}

fn write_json<W: Write, S: Serialize + ?Sized>(value: &S, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_reports<W: Write>(reports: &[EvalReport], format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => write_reports_csv(reports, out),
        ReportFormat::Json => write_json(reports, out),
    }
}

pub fn write_curve<W: Write>(curve: &LockstateCurve, format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => write_curve_csv(curve, out),
        ReportFormat::Json => write_json(curve, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io_at(path, e))
}

/// Writes comparison reports to `path`.
pub fn emit_report(reports: &[EvalReport], format: ReportFormat, path: &Path) -> Result<()> {
    write_reports(reports, format, create(path)?).map_err(|e| with_path(e, path))
}

/// Writes a lock-state curve to `path`.
pub fn emit_curve(curve: &LockstateCurve, format: ReportFormat, path: &Path) -> Result<()> {
    write_curve(curve, format, create(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { path: None, source } => Error::io_at(path, source),
        other => other,
    }
}
