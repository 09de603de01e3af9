//! The `oee` command line.
//!
//! Environment, policy and data settings for `gen-data` and `evaluate` come
//! from a config file:
//!
//! ```text
//! [env]
//! kind = gridworld          # gridworld | cartpole | archery
//! side = 10
//! slip_train = 0.3
//! slip_test = 0.1
//!
//! [policy]
//! delta = 0.5
//!
//! [data]
//! source = train
//! samples = 10000
//! ```
//!
//! Cart-pole uses `gravity_train`, `gravity_test` and `noise_std`; archery
//! uses `wind_train` and `wind_test` as `mean:std` and a launch angle
//! `[policy] theta` (or the default behavior mixture when absent).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use oee_core::bounds::{BoundInputs, BoundMode, BoundReport};
use oee_core::envs::{value_iteration_expert, Archery, ArcherySpec, Cartpole, CartpoleSpec, Gridworld, GridworldSpec};
use oee_core::io::{parse_dataset, parse_model, write_dataset, write_model};
use oee_core::ratio::{fit, Domain, TrainConfig};
use oee_core::report::{monte_carlo_return, EstimatorKind, EvaluationReport, CSV_HEADER};
use oee_core::zeta::{
    is_ope_baseline, mle_baseline, oee_return, simulated_baseline, zeta_value, MleTemplate, ZetaEstimator,
};
use oee_core::{collect_dataset, Action, DiscountSpec, Environment, Error, FeatureEncoding, Policy, Result, Source};

use crate::cem::{cem_train_expert, CemConfig};
use crate::config::{parse_config, Config};
use crate::experiments::archery::{run_archery_experiment, ArcherySettings};
use crate::experiments::bounds::run_bounds_experiment;
use crate::experiments::cartpole::run_cartpole_experiment;
use crate::experiments::gaussian::run_gaussian_experiment;
use crate::experiments::gridworld::run_gridworld_experiment;
use crate::experiments::{train_config, ExperimentConfig, ExperimentKind, TRAIN_KEYS};
use crate::plot::write_file;

#[derive(Debug, Parser)]
#[command(
    name = "oee",
    version,
    about = "Evaluate policies in a test environment from training-environment rollouts"
)]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect transitions in the training or test environment.
    GenData,
    /// Fit a ratio model between test (numerator) and training data.
    TrainRatio(TrainRatioArgs),
    /// Print the transition ratio for every record of a dataset.
    Zeta(ZetaArgs),
    /// Estimate a policy's test-environment return.
    Evaluate(EvaluateArgs),
    /// Compute the finite-sample guarantees.
    Bounds(BoundsArgs),
    /// Run a full experiment and write its CSV and SVG artifacts.
    Experiment {
        /// gridworld, cartpole, archery, gaussian or bounds.
        kind: String,
    },
}

#[derive(Debug, Args)]
pub struct TrainRatioArgs {
    /// Test-environment dataset.
    #[arg(long)]
    pub test: PathBuf,
    /// Training-environment dataset.
    #[arg(long)]
    pub train: PathBuf,
    /// Input domain: sa or sas.
    #[arg(long, default_value = "sas")]
    pub domain: String,
}

#[derive(Debug, Args)]
pub struct ZetaArgs {
    #[arg(long)]
    pub sas: PathBuf,
    #[arg(long)]
    pub sa: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// OEE, TrueValue, Oracle, Simulated, IS or MLE.
    #[arg(long, default_value = "OEE")]
    pub estimator: String,
    /// `(s, a, s')` ratio model, for OEE.
    #[arg(long)]
    pub sas: Option<PathBuf>,
    /// `(s, a)` ratio model, for OEE.
    #[arg(long)]
    pub sa: Option<PathBuf>,
    /// Test-environment dataset, for IS and MLE.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "K")]
    pub k: f64,
    #[arg(long)]
    pub dinf: f64,
    #[arg(long = "T", default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    pub reward_bound: f64,
    /// main or supplementary.
    #[arg(long, default_value = "main")]
    pub mode: String,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("oee: {e}");
        return 1;
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("oee: {e}");
            1
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("OEE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Argument(format!("OEE_THREADS={v:?} is not a positive integer")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(p) => parse_config(&read(p)?),
        None => Ok(Config::default()),
    }
}

fn need_out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::Argument("--out is required for this command".into()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::GenData => gen_data(cli, seed),
        Command::TrainRatio(a) => train_ratio_cmd(cli, a, seed),
        Command::Zeta(a) => zeta_cmd(cli, a),
        Command::Evaluate(a) => evaluate_cmd(cli, a, seed),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Experiment { kind } => experiment_cmd(cli, kind),
    }
}

const ENV_KEYS: &[&str] = &[
    "kind",
    "side",
    "slip_train",
    "slip_test",
    "gravity_train",
    "gravity_test",
    "noise_std",
    "wind_train",
    "wind_test",
];
const POLICY_KEYS: &[&str] = &["delta", "theta"];
const DATA_KEYS: &[&str] = &["source", "samples", "horizon", "behavior_delta"];
const CEM_KEYS: &[&str] = &["population", "elite", "generations"];

/// Training and test environments described by `[env]`.
pub enum EnvPair {
    Gridworld(GridworldSpec, GridworldSpec),
    Cartpole(Cartpole, Cartpole),
    Archery(ArcherySpec, ArcherySpec),
}

fn wind(text: &str) -> Result<ArcherySpec> {
    let (m, s) = text
        .split_once(':')
        .ok_or_else(|| Error::Argument(format!("wind {text:?} is not mean:std")))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Argument(format!("bad number {v:?} in wind")))
    };
    ArcherySpec::new(num(m)?, num(s)?)
}

impl EnvPair {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let s = "env";
        Ok(match cfg.str_or(s, "kind", "gridworld") {
            "gridworld" => {
                let side = cfg.usize_or(s, "side", 10)?;
                EnvPair::Gridworld(
                    GridworldSpec::new(side, cfg.f64_or(s, "slip_train", 0.3)?)?,
                    GridworldSpec::new(side, cfg.f64_or(s, "slip_test", 0.1)?)?,
                )
            }
            "cartpole" => {
                let noise = cfg.f64_or(s, "noise_std", 1e-3)?;
                let spec = |g: f64| CartpoleSpec {
                    noise_std: noise,
                    ..CartpoleSpec::with_gravity(g)
                };
                EnvPair::Cartpole(
                    Cartpole::new(spec(cfg.f64_or(s, "gravity_train", 10.0)?))?,
                    Cartpole::new(spec(cfg.f64_or(s, "gravity_test", 15.0)?))?,
                )
            }
            "archery" => EnvPair::Archery(
                wind(cfg.str_or(s, "wind_train", "4:2"))?,
                wind(cfg.str_or(s, "wind_test", "2:1"))?,
            ),
            other => return Err(Error::Argument(format!("unknown environment kind {other:?}"))),
        })
    }

    /// The environment on the requested side, boxed.
    pub fn env(&self, source: Source) -> Result<Box<dyn Environment>> {
        let train = source == Source::Train;
        Ok(match self {
            EnvPair::Gridworld(tr, te) => Box::new(Gridworld::new(if train { *tr } else { *te })?),
            EnvPair::Cartpole(tr, te) => Box::new(if train { *tr } else { *te }),
            EnvPair::Archery(tr, te) => Box::new(Archery::new(if train { *tr } else { *te })?),
        })
    }

    pub fn state_dim(&self) -> usize {
        match self {
            EnvPair::Gridworld(..) => 2,
            EnvPair::Cartpole(..) => 4,
            EnvPair::Archery(..) => 1,
        }
    }

    /// `[policy]` on this environment: a mixture with an expert trained on
    /// the training side, or a fixed angle for archery.
    pub fn policy(&self, cfg: &Config, seed: u64) -> Result<Policy> {
        let delta = cfg.f64_or("policy", "delta", 0.5)?;
        match self {
            EnvPair::Gridworld(tr, _) => {
                let (expert, _) = value_iteration_expert(tr, 0.99, 1e-10)?;
                Policy::grid_mixture(delta, expert)
            }
            EnvPair::Cartpole(tr, _) => {
                let d = CemConfig::default();
                let cem = CemConfig {
                    population: cfg.usize_or("cem", "population", d.population)?,
                    elite: cfg.usize_or("cem", "elite", d.elite)?,
                    generations: cfg.usize_or("cem", "generations", d.generations)?,
                    ..d
                };
                Policy::cartpole_mixture(delta, cem_train_expert(tr, &cem, seed)?)
            }
            EnvPair::Archery(..) => match cfg.get("policy", "theta") {
                Some(_) => Ok(Policy::Constant(Action::Continuous(vec![
                    cfg.f64_or("policy", "theta", 0.7)?
                ]))),
                None => Ok(ArcherySettings::from_config(&Config::default())?.behavior_policy()),
            },
        }
    }

    pub fn encoding(&self, cfg: &Config) -> Result<FeatureEncoding> {
        let cartpole = matches!(self, EnvPair::Cartpole(..));
        Ok(FeatureEncoding {
            one_hot: cfg.bool_or("train", "one_hot", cartpole)?,
            delta_next: cfg.bool_or("train", "delta_next", cartpole)?,
        })
    }

    pub fn default_horizon(&self) -> usize {
        match self {
            EnvPair::Gridworld(..) => 200,
            EnvPair::Cartpole(..) => 100,
            EnvPair::Archery(..) => 1,
        }
    }
}

fn check_sections(cfg: &Config, extra: &[(&str, &[&str])]) -> Result<()> {
    let mut allowed: Vec<(&str, &[&str])> = vec![
        ("env", ENV_KEYS),
        ("policy", POLICY_KEYS),
        ("data", DATA_KEYS),
        ("cem", CEM_KEYS),
        ("train", TRAIN_KEYS),
        ("discount", crate::experiments::DISCOUNT_KEYS),
    ];
    allowed.extend_from_slice(extra);
    cfg.check_known(&allowed)
}

fn gen_data(cli: &Cli, seed: u64) -> Result<()> {
    let cfg = load_config(cli)?;
    check_sections(&cfg, &[])?;
    let out = need_out(cli)?;
    let pair = EnvPair::from_config(&cfg)?;
    let source: Source = cfg.str_or("data", "source", "train").parse()?;
    let samples = cfg.usize_or("data", "samples", 10_000)?;
    let horizon = cfg.usize_or("data", "horizon", pair.default_horizon())?;
    let policy = pair.policy(&cfg, seed)?;
    let env = pair.env(source)?;
    let data = collect_dataset(env.as_ref(), &policy, horizon, samples, source, seed)?;
    write_file(out, &write_dataset(&data))?;
    println!(
        "wrote {} {} transitions ({} episodes) to {}",
        data.len(),
        source,
        data.trajectories().len(),
        out.display()
    );
    Ok(())
}

fn train_ratio_cmd(cli: &Cli, a: &TrainRatioArgs, seed: u64) -> Result<()> {
    let cfg = load_config(cli)?;
    check_sections(&cfg, &[])?;
    let out = need_out(cli)?;
    let te = parse_dataset(&read(&a.test)?)?;
    let tr = parse_dataset(&read(&a.train)?)?;
    if te.source != Source::Test || tr.source != Source::Train {
        log::warn!(
            "dataset sources are {} and {}, expected test and train",
            te.source,
            tr.source
        );
    }
    let domain = Domain::from_tag(&a.domain)?;
    let encoding = FeatureEncoding {
        one_hot: cfg.bool_or("train", "one_hot", false)?,
        delta_next: cfg.bool_or("train", "delta_next", false)?,
    };
    let mut tcfg = train_config(&cfg, TrainConfig::tabular())?;
    tcfg.seed = seed;
    let (p, q) = match domain {
        Domain::Sas => (te.sas_features(encoding), tr.sas_features(encoding)),
        Domain::Sa => (te.sa_features(encoding), tr.sa_features(encoding)),
        Domain::X => return Err(Error::Argument("datasets train sa or sas models".into())),
    };
    let model = fit(&p, &q, &tcfg, domain, encoding)?;
    write_file(out, &write_model(&model))?;
    println!(
        "trained {} model on {} test and {} training samples; final loss {}",
        domain.tag(),
        p.len(),
        q.len(),
        model.meta.curve.last().map_or("NA".into(), |c| format!("{:.6}", c.1))
    );
    Ok(())
}

fn load_zeta(sas: &Path, sa: &Path, state_dim: usize, spec: oee_core::ActionSpec) -> Result<ZetaEstimator> {
    ZetaEstimator::learned(parse_model(&read(sas)?)?, parse_model(&read(sa)?)?, state_dim, spec)
}

fn zeta_cmd(cli: &Cli, a: &ZetaArgs) -> Result<()> {
    let data = parse_dataset(&read(&a.data)?)?;
    let z = load_zeta(&a.sas, &a.sa, data.state_dim, data.action_spec)?;
    let mut text = String::from("index,zeta\n");
    for (i, tr) in data.records.iter().enumerate() {
        let v = zeta_value(&z, &tr.s, &tr.a, &tr.s_next)?;
        text.push_str(&format!("{i},{}\n", oee_core::report::fmt_f64(v)));
    }
    match &cli.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evaluate_cmd(cli: &Cli, a: &EvaluateArgs, seed: u64) -> Result<()> {
    let cfg = load_config(cli)?;
    check_sections(&cfg, &[])?;
    let pair = EnvPair::from_config(&cfg)?;
    let kind: EstimatorKind = a.estimator.parse()?;
    let spec = crate::experiments::discount_spec(&cfg, DiscountSpec::new(0.99, pair.default_horizon(), 1000)?)?;
    let policy = pair.policy(&cfg, seed)?;
    let env_tr = pair.env(Source::Train)?;
    let data = || -> Result<oee_core::TransitionDataset> {
        let p = a
            .data
            .as_ref()
            .ok_or_else(|| Error::Argument(format!("{kind} needs --data")))?;
        parse_dataset(&read(p)?)
    };
    let report: EvaluationReport = match kind {
        EstimatorKind::TrueValue => monte_carlo_return(pair.env(Source::Test)?.as_ref(), &policy, &spec, seed)?,
        EstimatorKind::Simulated => simulated_baseline(env_tr.as_ref(), &policy, &spec, seed)?,
        EstimatorKind::Oee => {
            let (Some(sas), Some(sa)) = (&a.sas, &a.sa) else {
                return Err(Error::Argument("OEE needs --sas and --sa".into()));
            };
            let z = load_zeta(sas, sa, pair.state_dim(), env_tr.action_spec())?;
            oee_return(env_tr.as_ref(), &policy, &z, &spec, seed)?
        }
        EstimatorKind::Oracle => {
            let z = match &pair {
                EnvPair::Gridworld(tr, te) => ZetaEstimator::gridworld_oracle(*tr, *te),
                EnvPair::Archery(tr, te) => ZetaEstimator::archery_oracle(*tr, *te),
                EnvPair::Cartpole(..) => return Err(Error::Argument("cart-pole has no exact ratio".into())),
            };
            oee_return(env_tr.as_ref(), &policy, &z, &spec, seed)?
        }
        EstimatorKind::Is => {
            let d = data()?;
            let behavior = match &pair {
                EnvPair::Gridworld(..) | EnvPair::Cartpole(..) => {
                    let mut bcfg = cfg.clone();
                    let collect = cfg.f64_or("data", "behavior_delta", 0.5)?;
                    bcfg.set("policy", "delta", collect.to_string());
                    pair.policy(&bcfg, seed)?
                }
                EnvPair::Archery(..) => return Err(Error::Argument("IS needs a discrete behavior policy".into())),
            };
            is_ope_baseline(&d, &policy, &behavior, &spec)?
        }
        EstimatorKind::Mle => {
            let template = match &pair {
                EnvPair::Gridworld(_, te) => MleTemplate::Gridworld { spec: *te, alpha: 1.0 },
                EnvPair::Cartpole(_, te) => MleTemplate::Cartpole(*te),
                EnvPair::Archery(..) => return Err(Error::Argument("no MLE model for archery".into())),
            };
            mle_baseline(&data()?, &template, &policy, &spec, seed)?
        }
    };
    let text = format!("{CSV_HEADER}\n{}\n", report.csv_row());
    match &cli.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn bounds_cmd(a: &BoundsArgs) -> Result<()> {
    let mode: BoundMode = a.mode.parse()?;
    let inputs = BoundInputs {
        nu: a.nu,
        mu: a.mu,
        n: a.n,
        delta: a.delta,
        k: a.k,
        d_inf: a.dinf,
        horizon: a.horizon,
        gamma: a.gamma,
        reward_bound: a.reward_bound,
    };
    println!("{}", BoundReport::compute(inputs, mode)?);
    Ok(())
}

fn experiment_cmd(cli: &Cli, kind: &str) -> Result<()> {
    let kind: ExperimentKind = kind.parse()?;
    let mut exp = ExperimentConfig::from_config(load_config(cli)?, Some(kind))?;
    if let Some(s) = cli.seed {
        let count = exp.seeds.len() as u64;
        exp = exp.with_seeds((s..s + count).collect());
    }
    if let Some(out) = &cli.out {
        exp = exp.with_out(out.clone());
    }
    match kind {
        ExperimentKind::Gridworld => run_gridworld_experiment(&exp).map(drop),
        ExperimentKind::Cartpole => run_cartpole_experiment(&exp).map(drop),
        ExperimentKind::Archery => run_archery_experiment(&exp).map(drop),
        ExperimentKind::Gaussian => run_gaussian_experiment(&exp).map(drop),
        ExperimentKind::Bounds => run_bounds_experiment(&exp).map(drop),
    }?;
    println!("{kind} experiment written to {}", exp.out.display());
    Ok(())
}
