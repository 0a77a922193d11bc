//! `softspell` command line: calibrate a channel, generate data, train a
//! network, correct words, run the ablation.

mod manifest;

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use softspell::alphabet::{normalize, one_hot, tokenize, tokenize_unbounded};
use softspell::channel::{calibrate_with, CalibrationSettings, ConfusionModel, VariantSpec};
use softspell::eval::{default_threads, run_ablation, AblationConfig, AblationSettings};
use softspell::lexicon::Lexicon;
use softspell::nn::Scalar;
use softspell::pipeline::{correct, simulate_symbols, PipelineOptions, TestRepresentation, WordSample};
use softspell::spellnet::{
    generate_dataset, read_dataset, train, write_dataset, DatasetConfig, SpellNet, SpellNetConfig, TrainConfig,
};
use softspell::{rng, Error};

use manifest::RunManifest;

// Training allocates and frees multi-megabyte buffers every step; glibc hands
// those back to the kernel each time.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "softspell", version, about = "Spell correction on per-letter classifier distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the channel model to target top-1/top-5 accuracies.
    Calibrate(CalibrateArgs),
    /// Write a training dataset file.
    Generate(GenerateArgs),
    /// Train a correction network and write a checkpoint.
    Train(TrainArgs),
    /// Simulate and correct words.
    Correct(CorrectArgs),
    /// Run the ablation and write a report.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 0.75)]
    top1: f64,
    #[arg(long, default_value_t = 0.98)]
    top5: f64,
    /// Monte-Carlo samples.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct LexiconArgs {
    /// Word list, one word per line.
    #[arg(long)]
    lexicon: PathBuf,
    /// `WORD<TAB>count` frequencies for the word list.
    #[arg(long)]
    freq: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Hh,
    Ss,
    Hs,
    Mix,
    Alpha,
    Noise,
}

impl VariantArg {
    /// Training-side representation.
    fn spec(self) -> VariantSpec {
        match self {
            VariantArg::Hh | VariantArg::Hs => VariantSpec::Hardmax,
            VariantArg::Ss => VariantSpec::Softmax,
            VariantArg::Mix => VariantSpec::MIX,
            VariantArg::Alpha => VariantSpec::ALPHA,
            VariantArg::Noise => VariantSpec::NOISE,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VariantArg::Hh => "hh",
            VariantArg::Ss => "ss",
            VariantArg::Hs => "hs",
            VariantArg::Mix => "mix",
            VariantArg::Alpha => "alpha",
            VariantArg::Noise => "noise",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestArg {
    Soft,
    Hard,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    lex: LexiconArgs,
    /// Channel model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "hh")]
    variant: VariantArg,
    #[arg(long, default_value_t = 9830)]
    pairs: usize,
    /// Buffered outputs per letter for the soft and mix variants.
    #[arg(long, default_value_t = 80)]
    buffer: usize,
    /// Draw words from a random subset of this size (lengths 3-10) instead of the whole lexicon.
    #[arg(long)]
    training_words: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    lex: LexiconArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "hh")]
    variant: VariantArg,
    /// Train on this dataset file instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 9830)]
    pairs: usize,
    #[arg(long, default_value_t = 80)]
    buffer: usize,
    #[arg(long)]
    training_words: Option<usize>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, value_enum, default_value = "f32")]
    precision: Precision,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    #[command(flatten)]
    lex: LexiconArgs,
    #[arg(long)]
    model: PathBuf,
    /// Network checkpoint; without it the network stage is skipped.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Follow with edit-distance correction.
    #[arg(long)]
    norvig: bool,
    /// Skip the initial dictionary lookup.
    #[arg(long)]
    no_dictionary: bool,
    #[arg(long, value_enum, default_value = "soft")]
    test: TestArg,
    #[arg(long, conflicts_with = "stdin")]
    word: Option<String>,
    /// Read words from standard input, one per line.
    #[arg(long)]
    stdin: bool,
    /// Use this as the classifier's output for --word instead of simulating it.
    #[arg(long)]
    observed: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write a run manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    lex: LexiconArgs,
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated: hh, ss, hs, mix, alpha, noise (each optionally +n), n.
    #[arg(long, value_delimiter = ',', default_value = "hh,ss,hs,mix,alpha,noise,n")]
    configs: Vec<String>,
    /// Held-out evaluation words per seed.
    #[arg(long, default_value_t = 100)]
    words: usize,
    /// One or more seeds, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long, default_value_t = 2000)]
    training_words: usize,
    #[arg(long, default_value_t = 9830)]
    pairs: usize,
    #[arg(long, default_value_t = 80)]
    buffer: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, value_enum, default_value = "f32")]
    precision: Precision,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

/// Exit status 2 for bad input, 1 for everything else.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(
                    Error::InvalidTargets { .. }
                        | Error::InvalidParameter(_)
                        | Error::UnsupportedCharacter(_)
                        | Error::WordTooLong(_)
                        | Error::EmptyInput
                )
            )
        });
        if usage {
            Failure::Usage(format!("{e:#}"))
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Correct(a) => cmd_correct(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_lexicon(args: &LexiconArgs, manifest: &mut RunManifest) -> anyhow::Result<Lexicon> {
    let lex = Lexicon::load(&args.lexicon, args.freq.as_deref())?;
    manifest.param("lexicon", args.lexicon.display().to_string());
    manifest.input(&args.lexicon)?;
    if let Some(f) = &args.freq {
        manifest.param("freq", f.display().to_string());
        manifest.input(f)?;
    }
    Ok(lex)
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> anyhow::Result<ConfusionModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let model = ConfusionModel::from_text(&text)?;
    manifest.param("model", path.display().to_string());
    manifest.input(path)?;
    Ok(model)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn cmd_calibrate(a: CalibrateArgs) -> CmdResult {
    if a.samples == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let settings = CalibrationSettings {
        temperature: a.temperature,
        ..CalibrationSettings::default()
    };
    let cal = calibrate_with(a.top1, a.top5, a.samples, &settings, &mut rng::seeded(a.seed))?;
    write_file(&a.out, cal.model.to_text().as_bytes())?;
    println!("top1\t{:.4}", cal.top1);
    println!("top5\t{:.4}", cal.top5);
    println!("sigma\t{}", cal.model.sigma);
    println!("mu_distractor\t{}", cal.model.mu_distractor);
    let mut m = RunManifest::new("calibrate");
    m.param("top1", a.top1)
        .param("top5", a.top5)
        .param("samples", a.samples)
        .param("temperature", a.temperature)
        .param("achieved_top1", cal.top1)
        .param("achieved_top5", cal.top5);
    m.seeds.push(a.seed);
    m.output(&a.out)?;
    m.write_beside(&a.out)?;
    Ok(())
}

fn training_lexicon(lex: Lexicon, words: Option<usize>, seed: u64) -> anyhow::Result<Lexicon> {
    match words {
        None => Ok(lex),
        Some(n) => Ok(lex.subset(&mut rng::seeded(rng::derive_seed(seed, 4)), n, Some(3..=10))?),
    }
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let mut m = RunManifest::new("generate");
    let lex = load_lexicon(&a.lex, &mut m)?;
    let model = load_model(&a.model, &mut m)?;
    let lex = training_lexicon(lex, a.training_words, a.seed)?;
    let cfg = DatasetConfig {
        n_pairs: a.pairs,
        buffer_size: a.buffer,
        lengths: None,
    };
    let pairs = generate_dataset::<f64>(&lex, &model, &a.variant.spec(), &cfg, rng::derive_seed(a.seed, 1))?;
    let mut bytes = Vec::new();
    write_dataset(&pairs, &mut bytes)?;
    write_file(&a.out, &bytes)?;
    println!("wrote {} pairs to {}", pairs.len(), a.out.display());
    m.param("variant", a.variant.name())
        .param("pairs", a.pairs)
        .param("buffer", a.buffer)
        .param("training_words", a.training_words);
    m.seeds.push(a.seed);
    m.output(&a.out)?;
    m.write_beside(&a.out)?;
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    match a.precision {
        Precision::F32 => train_as::<f32>(a),
        Precision::F64 => train_as::<f64>(a),
    }
}

fn train_as<T: Scalar>(a: TrainArgs) -> CmdResult {
    let mut m = RunManifest::new("train");
    let pairs = match &a.data {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::from)?;
            m.param("data", path.display().to_string());
            m.input(path)?;
            read_dataset::<T, _>(&bytes[..])?
        }
        None => {
            let lex = load_lexicon(&a.lex, &mut m)?;
            let model = load_model(&a.model, &mut m)?;
            let lex = training_lexicon(lex, a.training_words, a.seed)?;
            let cfg = DatasetConfig {
                n_pairs: a.pairs,
                buffer_size: a.buffer,
                lengths: None,
            };
            generate_dataset::<T>(&lex, &model, &a.variant.spec(), &cfg, rng::derive_seed(a.seed, 1))?
        }
    };
    let config = SpellNetConfig {
        num_residual_blocks: a.blocks,
        block_width: a.width,
        ..SpellNetConfig::default()
    };
    let mut net = SpellNet::<T>::build(config, rng::derive_seed(a.seed, 2))?;
    let tc = TrainConfig {
        batch_size: a.batch,
        learning_rate: a.lr,
        epochs: a.epochs,
        seed: rng::derive_seed(a.seed, 3),
    };
    let history = train(&mut net, &pairs, &tc)?;
    let mut bytes = Vec::new();
    net.write_checkpoint(&mut bytes)?;
    write_file(&a.out, &bytes)?;
    let hist_path = with_suffix(&a.out, ".history.csv");
    let mut csv = String::from("epoch,loss,char_accuracy\n");
    for h in &history {
        csv.push_str(&format!("{},{:.6},{:.6}\n", h.epoch, h.loss, h.char_accuracy));
    }
    write_file(&hist_path, csv.as_bytes())?;
    if let Some(last) = history.last() {
        println!("epoch {}\tloss {:.4}\ttrain char accuracy {:.4}", last.epoch, last.loss, last.char_accuracy);
    }
    m.param("variant", a.variant.name())
        .param("pairs", pairs.len())
        .param("buffer", a.buffer)
        .param("training_words", a.training_words)
        .param("epochs", a.epochs)
        .param("batch", a.batch)
        .param("lr", a.lr)
        .param("width", a.width)
        .param("blocks", a.blocks)
        .param("precision", if std::mem::size_of::<T>() == 4 { "f32" } else { "f64" });
    m.seeds.push(a.seed);
    m.output(&a.out)?;
    m.output(&hist_path)?;
    m.write_beside(&a.out)?;
    Ok(())
}

fn parse_word(text: &str) -> Result<softspell::alphabet::SymbolSequence, Failure> {
    tokenize(&normalize(text)).map_err(|e| Failure::Usage(format!("{text:?}: {e}")))
}

fn cmd_correct(a: CorrectArgs) -> CmdResult {
    if a.observed.is_some() && a.word.is_none() {
        return Err(Failure::Usage("--observed needs --word".into()));
    }
    let mut m = RunManifest::new("correct");
    let lex = load_lexicon(&a.lex, &mut m)?;
    let model = load_model(&a.model, &mut m)?;
    let net = match &a.ckpt {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::from)?;
            m.param("ckpt", path.display().to_string());
            m.input(path)?;
            Some(SpellNet::<f64>::read_checkpoint(&bytes[..])?)
        }
        None => None,
    };
    let opts = PipelineOptions {
        use_dictionary: !a.no_dictionary,
        use_net: net.is_some(),
        use_norvig: a.norvig,
        test_representation: match a.test {
            TestArg::Soft => TestRepresentation::Softmax,
            TestArg::Hard => TestRepresentation::Hardmax,
        },
        max_distance: 2,
    };
    let words: Vec<String> = match (&a.word, a.stdin) {
        (Some(w), false) => vec![w.clone()],
        (None, true) => io::stdin()
            .lock()
            .lines()
            .collect::<io::Result<Vec<_>>>()
            .map_err(|e| Failure::Runtime(e.into()))?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect(),
        _ => return Err(Failure::Usage("give exactly one of --word or --stdin".into())),
    };
    let truths = words.iter().map(|w| parse_word(w)).collect::<Result<Vec<_>, _>>()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (i, truth) in truths.into_iter().enumerate() {
        let seed = rng::derive_seed(a.seed, i as u64);
        let sample = match &a.observed {
            Some(obs) => {
                let shown = tokenize_unbounded(&normalize(obs)).map_err(|e| Failure::Usage(format!("{obs:?}: {e}")))?;
                if shown.is_empty() || shown.len() > softspell::alphabet::MAX_WORD_LEN {
                    return Err(Failure::Usage(format!("--observed {obs:?} must have 1 to 10 letters")));
                }
                WordSample {
                    truth,
                    distributions: shown.iter().map(|&s| one_hot(s)).collect(),
                    variant: VariantSpec::Hardmax,
                    seed,
                }
            }
            None => simulate_symbols(truth, &model, &VariantSpec::Softmax, seed)?,
        };
        let c = correct(&sample, &lex, net.as_ref(), &opts);
        writeln!(out, "{}\t{}\t{}\t{}", sample.truth, c.argmax, c.text(), c.provenance)
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    out.flush().map_err(|e| Failure::Runtime(e.into()))?;
    if let Some(path) = &a.manifest {
        m.param("norvig", a.norvig)
            .param("dictionary", !a.no_dictionary)
            .param("test", if a.test == TestArg::Soft { "soft" } else { "hard" })
            .param("word", &a.word)
            .param("observed", &a.observed)
            .param("stdin", a.stdin);
        m.seeds.push(a.seed);
        let text = serde_json::to_string_pretty(&m).map_err(|e| Failure::Runtime(e.into()))?;
        write_file(path, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    match a.precision {
        Precision::F32 => eval_as::<f32>(a),
        Precision::F64 => eval_as::<f64>(a),
    }
}

fn eval_as<T: Scalar>(a: EvalArgs) -> CmdResult {
    let configs = a
        .configs
        .iter()
        .map(|c| AblationConfig::parse(c))
        .collect::<Result<Vec<_>, _>>()?;
    if a.seed.is_empty() {
        return Err(Failure::Usage("at least one --seed is required".into()));
    }
    let mut m = RunManifest::new("eval");
    let lex = load_lexicon(&a.lex, &mut m)?;
    let model = load_model(&a.model, &mut m)?;
    let settings = AblationSettings {
        training_words: a.training_words,
        n_pairs: a.pairs,
        buffer_size: a.buffer,
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        n_eval_words: a.words,
        net: SpellNetConfig {
            num_residual_blocks: a.blocks,
            block_width: a.width,
            ..SpellNetConfig::default()
        },
        threads: a.threads.unwrap_or_else(default_threads),
        ..AblationSettings::default()
    };
    let report = run_ablation::<T>(&lex, &model, &configs, &settings, &a.seed)?;
    write_file(&a.out, report.to_csv().as_bytes())?;
    let table = report.to_table();
    let table_path = with_suffix(&a.out, ".table.txt");
    write_file(&table_path, table.as_bytes())?;
    print!("{table}");
    m.param("configs", &a.configs)
        .param("words", a.words)
        .param("training_words", a.training_words)
        .param("pairs", a.pairs)
        .param("buffer", a.buffer)
        .param("epochs", a.epochs)
        .param("batch", a.batch)
        .param("lr", a.lr)
        .param("width", a.width)
        .param("blocks", a.blocks)
        .param("precision", if std::mem::size_of::<T>() == 4 { "f32" } else { "f64" });
    m.seeds = a.seed.clone();
    m.output(&a.out)?;
    m.output(&table_path)?;
    m.write_beside(&a.out)?;
    Ok(())
}
