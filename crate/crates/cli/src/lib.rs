//! Command-line front end: training, prediction, bound calculators, the
//! two-stage protocol and the margin oracle.

pub mod model;
mod report;

use std::ffi::OsString;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use margitron::analysis::{gamma_d_oracle, OracleMode, OracleOutcome};
use margitron::dataset::{parse_records, parse_svmlight, ParseOptions, SparsePattern};
use margitron::engine::Variant;
use margitron::trainer::{successive_runnings, train_with, ProtocolConfig, TrainOptions};
use margitron::{HyperParams, MargitronError, TrainingSet};

use model::ModelFile;

/// Process exit status for a run that hit the epoch cap or whose first
/// protocol stage did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "margitron", version, about = "Large-margin perceptron-style linear classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a t- or l-margitron on an svmlight file.
    Train(TrainArgs),
    /// Label svmlight data with a saved model.
    Predict(PredictArgs),
    /// Evaluate convergence bounds, margin guarantees and b-selection rules.
    Estimate(EstimateArgs),
    /// Two-stage run: epsilon = 1 first, then a small epsilon with b fixed by the first stage.
    Protocol(ProtocolArgs),
    /// Brute-force maximum directional margin of a small data set.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// svmlight training file.
    #[arg(long)]
    pub data: PathBuf,
    /// Augmentation constant.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Soft-margin extension constant; 0 disables the extension.
    #[arg(long = "delta-ext", default_value_t = 1.0)]
    pub delta_ext: f64,
    /// Feature indices start at 0 instead of 1.
    #[arg(long)]
    pub zero_based: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    T,
    L,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::T => Variant::T,
            VariantArg::L => Variant::L,
        }
    }
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("margin").required(true).args(["b", "b_over_r"]))]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub epsilon: f64,
    /// Margin parameter b.
    #[arg(long)]
    pub b: Option<f64>,
    /// Set b = X * R^(1 + epsilon) once the radius R is known.
    #[arg(long = "b-over-r", value_name = "X")]
    pub b_over_r: Option<f64>,
    /// Mini-epochs over each active set.
    #[arg(long, default_value_t = margitron::engine::DEFAULT_MINI_EPOCHS)]
    pub miniepochs: u32,
    /// Give up after this many full epochs.
    #[arg(long = "max-epochs", default_value_t = margitron::engine::DEFAULT_MAX_FULL_EPOCHS)]
    pub max_epochs: u64,
    /// Write the trained model here.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Shuffle the full-epoch order with this seed.
    #[arg(long, value_name = "SEED")]
    pub shuffle: Option<u64>,
    /// Store per-pattern update counts in the model file.
    #[arg(long)]
    pub save_counts: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// svmlight file; labels may be `?`.
    #[arg(long)]
    pub data: PathBuf,
    /// Write labels here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub zero_based: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SelectRule {
    T,
    L,
    SmallEps,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub epsilon: f64,
    /// Margin parameter; may be omitted when --select-b supplies it.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub radius: f64,
    #[arg(long = "gamma-d")]
    pub gamma_d: Option<f64>,
    #[arg(long = "t-c")]
    pub t_c: Option<u64>,
    #[arg(long = "gamma-prime-d")]
    pub gamma_prime_d: Option<f64>,
    /// Choose b with one of the selection rules.
    #[arg(long = "select-b", value_enum, requires = "delta")]
    pub select_b: Option<SelectRule>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub epsilon2: f64,
    #[arg(long, default_value_t = margitron::engine::DEFAULT_MINI_EPOCHS)]
    pub miniepochs: u32,
    #[arg(long = "max-epochs", default_value_t = margitron::engine::DEFAULT_MAX_FULL_EPOCHS)]
    pub max_epochs: u64,
    /// Variant for both stages.
    #[arg(long, value_enum, default_value = "l")]
    pub variant: VariantArg,
    /// Write the stage-2 model here.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OracleModeArg {
    Auto,
    Grid,
    Enumeration,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: OracleModeArg,
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

// a closed downstream pipe (`| head`) is not a failure
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn print_line(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Protocol(a) => cmd_protocol(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn load_set(args: &DataArgs) -> Result<TrainingSet<f64>> {
    let file = std::fs::File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let opts = ParseOptions {
        zero_based: args.zero_based,
        ..Default::default()
    };
    let patterns: Vec<SparsePattern<f64>> =
        parse_svmlight(BufReader::new(file), opts).with_context(|| format!("reading {}", args.data.display()))?;
    Ok(TrainingSet::new(patterns, args.rho, args.delta_ext)?)
}

fn write_json(value: &impl serde::Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => print_line(&text)?,
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let set = load_set(&args.data)?;
    let radius = set.radius();
    let b = match (args.b, args.b_over_r) {
        (Some(b), _) => b,
        (None, Some(x)) => {
            if args.epsilon == 1.0 {
                x * radius * radius
            } else {
                x * radius.powf(1.0 + args.epsilon)
            }
        }
        (None, None) => bail!("one of --b or --b-over-r is required"),
    };
    let params = HyperParams::new(args.variant.into(), args.epsilon, b)?
        .with_mini_epochs(args.miniepochs)
        .with_max_full_epochs(args.max_epochs);
    let opts = TrainOptions {
        shuffle_seed: args.shuffle,
        record_trace: false,
    };
    let (state, result) = train_with(&set, &params, &opts)?;

    if let Some(path) = &args.model {
        ModelFile::from_state(&state, &params, set.meta(), args.save_counts).save(path)?;
    }
    let out = report::TrainOutput::new(&args, &set, &params, &result);
    write_json(&out, args.report.as_deref())?;
    if !result.converged {
        eprintln!(
            "warning: no clean full epoch within {} epochs ({} updates); the data may not be separable",
            result.full_epochs, result.t_c
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let model = ModelFile::load(&args.model)?;
    let file = std::fs::File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let opts = ParseOptions {
        zero_based: args.zero_based,
        allow_unlabeled: true,
    };
    let records = parse_records::<f64, _>(BufReader::new(file), opts)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let weights = model.dense_weights();
    let predictor = model.predictor(&weights);

    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    };
    let (mut labelled, mut correct, mut ignored) = (0usize, 0usize, 0usize);
    for rec in &records {
        ignored += rec.features.indices().iter().filter(|&&i| i >= model.base_dim).count();
        let label = predictor.predict(&rec.features);
        writeln!(out, "{label}")?;
        if let Some(truth) = rec.label {
            labelled += 1;
            correct += usize::from(truth == label);
        }
    }
    out.flush()?;
    if ignored > 0 {
        eprintln!("warning: ignored {ignored} feature values beyond the trained dimension {}", model.base_dim);
    }
    if labelled > 0 {
        eprintln!(
            "accuracy: {:.6} ({correct}/{labelled})",
            correct as f64 / labelled as f64
        );
    }
    Ok(0)
}

fn cmd_estimate(args: EstimateArgs) -> Result<i32> {
    let out = report::EstimateOutput::compute(&args)?;
    write_json(&out, None)?;
    Ok(0)
}

fn cmd_protocol(args: ProtocolArgs) -> Result<i32> {
    let set = load_set(&args.data)?;
    let config = ProtocolConfig {
        epsilon2: args.epsilon2,
        n_ep: args.miniepochs,
        max_full_epochs: args.max_epochs,
        variant: args.variant.into(),
    };
    let (state, result) = match successive_runnings(&set, &config) {
        Ok(r) => r,
        Err(MargitronError::ProtocolNotConverged { stage, epochs }) => {
            eprintln!("error: stage {stage} found no clean full epoch within {epochs} epochs");
            return Ok(EXIT_NOT_CONVERGED);
        }
        Err(e) => return Err(e.into()),
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.model {
        let params = HyperParams::new(config.variant, result.stage2.epsilon, result.stage2.b)?;
        ModelFile::from_state(&state, &params, set.meta(), false).save(path)?;
    }
    let out = report::ProtocolOutput::new(&args, &set, &result);
    write_json(&out, args.report.as_deref())?;
    if !result.converged {
        eprintln!("warning: stage 2 found no clean full epoch within {} epochs", args.max_epochs);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> Result<i32> {
    let set = load_set(&args.data)?;
    let mode = match args.mode {
        OracleModeArg::Auto => OracleMode::Auto,
        OracleModeArg::Grid => OracleMode::Grid,
        OracleModeArg::Enumeration => OracleMode::Enumeration,
    };
    match gamma_d_oracle(&set, mode)? {
        OracleOutcome::Separable {
            gamma_d,
            tolerance,
            mode,
        } => print_line(&format!("gamma_d {gamma_d} +/- {tolerance:e} ({})", mode_name(mode)))?,
        OracleOutcome::NonSeparable { mode, .. } => print_line(&format!("non-separable ({})", mode_name(mode)))?,
    }
    Ok(0)
}

fn mode_name(mode: OracleMode) -> &'static str {
    match mode {
        OracleMode::Auto => "auto",
        OracleMode::Grid => "grid",
        OracleMode::Enumeration => "enumeration",
    }
}
