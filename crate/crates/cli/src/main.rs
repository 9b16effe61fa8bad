use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use protolearn::baselines::{lvq_pass, train_standard_prototype, LvqStepConfig};
use protolearn::classifier::dataset_objective;
use protolearn::data::{
    generate_figure1_toy, load_dataset, load_model, random_problem, save_dataset, save_model,
    stratified_split, ProblemShape, SyntheticConfig,
};
use protolearn::gradients::{finite_diff_check, DEFAULT_FD_STEP};
use protolearn::metrics::predict;
use protolearn::optimize::coordinate_ascent_train;
use protolearn::{evaluate, Dataset, EncodeMode, MetricsReport, OptimizerConfig, TrainConfig};

const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Parser)]
#[command(
    name = "protolearn",
    version,
    about = "Probabilistic prototype classifiers for sets of vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, optionally split into train and test files.
    Synth(SynthArgs),
    /// Train a model and write it with a training report.
    Train(TrainArgs),
    /// Print accuracy, mean log-likelihood and mean KL for a model on a dataset.
    Eval(EvalArgs),
    /// Write the class posterior of every instance.
    Predict(PredictArgs),
    /// Compare analytic gradients with finite differences on a random problem.
    Gradcheck(GradcheckArgs),
    /// Train a standard-prototype model or apply one LVQ pass to an existing model.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Figure1,
    SoftBenchmark,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    /// Learn the codebook discriminatively.
    Prob,
    /// Keep the k-means codebook and hard encodings; fit only the weights.
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Standard,
    Lvq,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Hard,
    Soft,
}

impl From<Encoding> for EncodeMode {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Hard => EncodeMode::Hard,
            Encoding::Soft => EncodeMode::Soft,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "figure1")]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset file, or the training part when --test is given.
    #[arg(long)]
    out: PathBuf,
    /// Write a stratified held-out part here.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Fraction of each class kept for training when splitting.
    #[arg(long, default_value_t = 0.5)]
    split_fraction: f64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().k)]
    k: usize,
    #[arg(long, default_value_t = TrainConfig::default().lambda)]
    lambda: f64,
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
    /// Initial sharpness; defaults to 1/(2 * mean squared distance to the nearest center).
    #[arg(long)]
    beta_init: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

impl FitArgs {
    fn config(&self, rounds: usize) -> TrainConfig {
        TrainConfig {
            k: self.k,
            lambda: self.lambda,
            rounds,
            seed: self.seed,
            beta_init: self.beta_init,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = TrainConfig::default().rounds)]
    rounds: usize,
    #[arg(long, value_enum, default_value = "prob")]
    mode: TrainMode,
    /// Training report path; defaults to the model path with a .report.json suffix.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Held-out dataset whose metrics are added to the report.
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    step: f64,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum, default_value = "standard")]
    method: BaselineMethod,
    #[command(flatten)]
    fit: FitArgs,
    /// Encoding used by the standard-prototype model.
    #[arg(long, value_enum, default_value = "hard")]
    encoding: Encoding,
    /// Model to update with an LVQ pass.
    #[arg(long, required_if_eq("method", "lvq"))]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
}

#[derive(Debug)]
enum Failure {
    Data(String),
    Gradcheck(f64),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

#[derive(Serialize)]
struct TrainingReport<'a> {
    mode: &'a str,
    objective_trace: Vec<f64>,
    rounds: usize,
    converged: bool,
    final_objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_metrics: Option<MetricsReport>,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    posterior: &'a [f64],
}

#[derive(Serialize)]
struct GradcheckReport {
    seed: u64,
    step: f64,
    centers: f64,
    beta: f64,
    theta: f64,
    max_error: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report types serialize")
}

fn write_text(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn synth(a: &SynthArgs) -> Outcome {
    let cfg = match a.preset {
        Preset::Figure1 => SyntheticConfig::figure1(a.seed),
        Preset::SoftBenchmark => SyntheticConfig::soft_benchmark(a.seed),
    };
    let data = generate_figure1_toy(&cfg)?;
    match &a.test {
        None => save_dataset(&data, &a.out)?,
        Some(test) => {
            let split = stratified_split(&data, a.split_fraction, a.seed)?;
            save_dataset(&split.train, &a.out)?;
            save_dataset(&split.test, test)?;
        }
    }
    Ok(())
}

fn default_report_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

fn train(a: &TrainArgs) -> Outcome {
    let tc = a.fit.config(a.rounds);
    tc.validate()?;
    let data = load_dataset(&a.fit.data)?;
    let test = a.test.as_ref().map(load_dataset).transpose()?;
    let oc = OptimizerConfig::default();
    let (model, report) = match a.mode {
        TrainMode::Prob => {
            let (model, r) = coordinate_ascent_train(&data, &tc, &oc)?;
            let final_objective = *r
                .objective_trace
                .last()
                .expect("trace holds the initial value");
            let report = TrainingReport {
                mode: "prob",
                objective_trace: r.objective_trace,
                rounds: r.rounds,
                converged: r.converged,
                final_objective,
                test_metrics: None,
            };
            (model, report)
        }
        TrainMode::Standard => {
            let model = train_standard_prototype(&data, &tc, &oc, EncodeMode::Hard)?;
            let objective = dataset_objective(&data, &model)?;
            let report = TrainingReport {
                mode: "standard",
                objective_trace: vec![objective],
                rounds: 1,
                converged: true,
                final_objective: objective,
                test_metrics: None,
            };
            (model, report)
        }
    };
    let report = TrainingReport {
        test_metrics: test.as_ref().map(|t| evaluate(t, &model)).transpose()?,
        ..report
    };
    save_model(&model, &a.fit.out)?;
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&a.fit.out));
    write_text(&report_path, &(to_json(&report) + "\n"))?;
    Ok(())
}

fn eval(a: &EvalArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    println!("{}", to_json(&evaluate(&data, &model)?));
    Ok(())
}

fn write_predictions<W: Write>(
    data: &Dataset,
    posteriors: &[protolearn::Posterior],
    out: W,
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for (inst, p) in data.instances().iter().zip(posteriors) {
        let row = PredictionRow {
            id: &inst.id,
            posterior: &p.0,
        };
        writeln!(out, "{}", to_json(&row))?;
    }
    out.flush()
}

fn predict_cmd(a: &PredictArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    let posteriors = predict(&data, &model)?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_predictions(&data, &posteriors, file)?
        }
        None => write_predictions(&data, &posteriors, io::stdout().lock())?,
    }
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> Outcome {
    let (data, model) = random_problem(&ProblemShape::default(), a.seed)?;
    let r = finite_diff_check(&data, &model, a.step)?;
    let report = GradcheckReport {
        seed: a.seed,
        step: r.step,
        centers: r.centers,
        beta: r.beta,
        theta: r.theta,
        max_error: r.max_error(),
    };
    println!("{}", to_json(&report));
    if r.max_error() > GRADCHECK_TOLERANCE {
        return Err(Failure::Gradcheck(r.max_error()));
    }
    Ok(())
}

fn baseline(a: &BaselineArgs) -> Outcome {
    let data = load_dataset(&a.fit.data)?;
    let model = match a.method {
        BaselineMethod::Standard => {
            let tc = a.fit.config(1);
            tc.validate()?;
            train_standard_prototype(&data, &tc, &OptimizerConfig::default(), a.encoding.into())?
        }
        BaselineMethod::Lvq => {
            let path = a.model.as_ref().expect("clap enforces --model for lvq");
            let start = load_model(path)?;
            let (model, skipped) = lvq_pass(&start, &data, &LvqStepConfig::new(a.eta)?)?;
            if skipped > 0 {
                log::warn!("skipped {skipped} instances without a one-hot label");
            }
            model
        }
    };
    save_model(&model, &a.fit.out)?;
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Baseline(a) => baseline(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Gradcheck(worst)) => {
            eprintln!("error: gradient check failed, worst relative error {worst:e} exceeds {GRADCHECK_TOLERANCE:e}");
            ExitCode::from(3)
        }
    }
}
