use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use zeromat_lab::baselines::train_pmf;
use zeromat_lab::harness::{
    derive_seed, run_comparison, run_lockstate_experiment, write_curve, write_reports, DataSource,
    ExperimentConfig, ReportFormat,
};
use zeromat_lab::ingest::{generate_zipf_dataset, perturb_distribution, write_csv, ZipfSpec};
use zeromat_lab::metrics::MATTHEW_DEFINITION;
use zeromat_lab::persist::write_model;
use zeromat_lab::zeromat::train_zeromat;
use zeromat_lab::TrainConfig;

#[derive(Parser)]
#[command(
    name = "zeromat",
    version,
    about = "Cold-start recommender experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Zipf dataset as user,item,rating CSV.
    Gen {
        #[command(flatten)]
        zipf: ZipfArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare ZeroMat, PMF and random guessing on one dataset.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep the uniform mix of a synthetic Zipf source.
    Lockstate {
        #[command(flatten)]
        zipf: ZipfArgs,
        /// Comma-separated, strictly ascending values in [0, 1].
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Train one model and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = Method::Zeromat)]
        method: Method,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Zeromat,
    Pmf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct ZipfArgs {
    #[arg(long = "zipf-s", default_value_t = 1.0)]
    zipf_s: f64,
    #[arg(long, default_value_t = 500)]
    users: usize,
    #[arg(long, default_value_t = 300)]
    items: usize,
    #[arg(long = "per-user", default_value_t = 20)]
    per_user: usize,
    #[arg(long = "r-max")]
    r_max: Option<f64>,
}

impl ZipfArgs {
    fn spec(&self, lambda: f64) -> Result<ZipfSpec<f64>> {
        let base = ZipfSpec::new(
            self.zipf_s,
            self.users,
            self.items,
            self.per_user,
            self.r_max.unwrap_or(5.0),
        );
        let spec = perturb_distribution(&base, lambda)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct DataArgs {
    /// MovieLens ratings.dat or user,item,rating CSV; synthetic Zipf data when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    zipf: ZipfArgs,
}

impl DataArgs {
    fn source(&self, lambda: f64) -> Result<DataSource> {
        Ok(match &self.data {
            Some(path) => DataSource::File(path.clone()),
            None => DataSource::Zipf {
                spec: self.zipf.spec(lambda)?,
                seed: 0,
            },
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// ZeroMat learning rate.
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    /// ZeroMat SGD steps (default 20 * N * ceil(M / N), capped at 5e6).
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long = "sigma-sq", default_value_t = 0.5)]
    sigma_sq: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// PMF regularization weight.
    #[arg(long, default_value_t = 0.05)]
    reg: f64,
    /// PMF learning rate.
    #[arg(long = "pmf-eta", default_value_t = 0.005)]
    pmf_eta: f64,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> ReportFormat {
        match self.format {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

fn experiment(
    source: DataSource,
    train: &TrainArgs,
    r_max: Option<f64>,
    seed: u64,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(source, seed);
    cfg.split.train_fraction = train.split;
    cfg.zeromat.k = train.k;
    cfg.zeromat.eta = train.eta;
    cfg.zeromat.epsilon = train.epsilon;
    cfg.zeromat.sigma_sq = train.sigma_sq;
    cfg.zeromat_iterations = train.iters;
    cfg.pmf.k = train.k;
    cfg.pmf.eta = train.pmf_eta;
    cfg.pmf.lambda_reg = train.reg;
    cfg.pmf.epochs = train.epochs;
    cfg.r_max = r_max;
    cfg
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            zipf,
            lambda,
            seed,
            out,
        } => {
            let spec = zipf.spec(lambda)?;
            let data = generate_zipf_dataset(&spec, derive_seed(seed, 0))?;
            write_csv(&data, sink(&out)?)?;
        }
        Command::Compare {
            data,
            lambda,
            train,
            output,
        } => {
            let source = data.source(lambda)?;
            let cfg = experiment(source, &train, data.zipf.r_max, output.seed);
            let reports = run_comparison(&cfg)?;
            write_reports(&reports, output.format(), sink(&output.out)?)?;
            eprintln!("matthew_degree = {MATTHEW_DEFINITION}");
        }
        Command::Lockstate {
            zipf,
            lambda,
            replicates,
            train,
            output,
        } => {
            let base = zipf.spec(0.0)?;
            let template = experiment(
                DataSource::Zipf {
                    spec: base.clone(),
                    seed: 0,
                },
                &train,
                None,
                output.seed,
            );
            let curve =
                run_lockstate_experiment(&base, &lambda, replicates, &template, output.seed)?;
            write_curve(&curve, output.format(), sink(&output.out)?)?;
        }
        Command::Train {
            data,
            lambda,
            method,
            train,
            seed,
            out,
        } => {
            match method {
                Method::Zeromat => {
                    let mut zc =
                        experiment(DataSource::File(PathBuf::new()), &train, None, seed).zeromat;
                    // Without a data file only the universe size matters.
                    let (n, m) = match &data.data {
                        Some(_) => {
                            let d = data.source(lambda)?.load(data.zipf.r_max)?;
                            (d.num_users(), d.num_items())
                        }
                        None => (data.zipf.users, data.zipf.items),
                    };
                    zc.iterations = train
                        .iters
                        .unwrap_or_else(|| TrainConfig::<f64>::default_iterations(n, m));
                    let run = train_zeromat(n, m, &zc)?;
                    write_model(&run.model, zc.epsilon, zc.seed, sink(&out)?)?;
                }
                Method::Pmf => {
                    let cfg = experiment(data.source(lambda)?, &train, data.zipf.r_max, seed);
                    cfg.validate()?;
                    let dataset = cfg.source.load(cfg.r_max)?;
                    if dataset.is_empty() {
                        bail!("no ratings to train PMF on");
                    }
                    let model = train_pmf(&dataset, &cfg.pmf)?;
                    write_model(&model, 0.0, cfg.pmf.seed, sink(&out)?)?;
                }
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
