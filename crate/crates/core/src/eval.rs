//! Accuracy metrics and the ablation harness: train one network per training
//! representation, then score every configuration on a common held-out word
//! sample.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::alphabet::{Symbol, SymbolSequence};
use crate::channel::{ConfusionModel, VariantSpec};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::nn::Scalar;
use crate::pipeline::{correct_all, net_input, simulate_symbols, PipelineOptions, TestRepresentation, WordSample};
use crate::rng;
use crate::spellnet::{
    character_matches, generate_dataset, target_matrix, train, DatasetConfig, SpellNet, SpellNetConfig, TrainConfig,
    TrainingPair,
};

/// An exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    /// 0 for an empty denominator.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn pooled_with(self, other: Ratio) -> Ratio {
        Ratio::new(self.num + other.num, self.den + other.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Positions of `truth` matched by `predicted`; positions past the prediction count as misses.
pub fn matching_positions(predicted: &[Symbol], truth: &[Symbol]) -> usize {
    truth.iter().zip(predicted).filter(|(a, b)| a == b).count()
}

/// Total matched positions over total truth symbols.
pub fn character_accuracy<P: AsRef<[Symbol]>, Q: AsRef<[Symbol]>>(pairs: &[(P, Q)]) -> Ratio {
    pairs.iter().fold(Ratio::default(), |acc, (p, t)| {
        acc.pooled_with(Ratio::new(matching_positions(p.as_ref(), t.as_ref()) as u64, t.as_ref().len() as u64))
    })
}

/// Fraction of exact matches.
pub fn word_accuracy<P: AsRef<[Symbol]>, Q: AsRef<[Symbol]>>(pairs: &[(P, Q)]) -> Ratio {
    let hits = pairs.iter().filter(|(p, t)| p.as_ref() == t.as_ref()).count();
    Ratio::new(hits as u64, pairs.len() as u64)
}

/// One row of the ablation: how the net was trained, what it is shown, and
/// whether edit-distance correction follows.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    /// `None` means no network.
    pub train_variant: Option<VariantSpec>,
    pub test_representation: TestRepresentation,
    pub use_norvig: bool,
    /// Dictionary lookup before everything else.
    pub use_dictionary: bool,
}

impl AblationConfig {
    pub fn net(train_variant: VariantSpec, test: TestRepresentation, use_norvig: bool) -> Self {
        AblationConfig {
            train_variant: Some(train_variant),
            test_representation: test,
            use_norvig,
            use_dictionary: true,
        }
    }

    /// Dictionary plus edit-distance correction, no network.
    pub fn norvig_only() -> Self {
        AblationConfig {
            train_variant: None,
            test_representation: TestRepresentation::Hardmax,
            use_norvig: true,
            use_dictionary: true,
        }
    }

    /// No correction at all.
    pub fn baseline() -> Self {
        AblationConfig {
            train_variant: None,
            test_representation: TestRepresentation::Hardmax,
            use_norvig: false,
            use_dictionary: false,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.train_variant.is_none() && !self.use_norvig && !self.use_dictionary
    }

    /// `H/H`, `S/S`, `H/S`, `Mix/S`, `αS/S`, `S+ε/S`, with `+N` when edit-distance
    /// correction follows; `N` alone for no network; `argmax` for the baseline.
    pub fn label(&self) -> String {
        let Some(v) = &self.train_variant else {
            return if self.use_norvig { "N".into() } else { "argmax".into() };
        };
        let train = match v {
            VariantSpec::Hardmax => "H",
            VariantSpec::Softmax => "S",
            VariantSpec::MixHardSoft { .. } => "Mix",
            VariantSpec::AlphaScaled { .. } => "αS",
            VariantSpec::NoiseAdded { .. } => "S+ε",
        };
        let suffix = if self.use_norvig { "+N" } else { "" };
        format!("{train}/{}{suffix}", self.test_representation.tag())
    }

    /// Parses a short id: `hh`, `ss`, `hs`, `mix`, `alpha`, `noise`, each
    /// optionally followed by `+n`; `n` for no network; `argmax`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim().to_ascii_lowercase();
        let (base, norvig) = match id.strip_suffix("+n") {
            Some(b) => (b, true),
            None => (id.as_str(), false),
        };
        use TestRepresentation::{Hardmax as H, Softmax as S};
        let (variant, test) = match base {
            "n" if !norvig => return Ok(AblationConfig::norvig_only()),
            "argmax" if !norvig => return Ok(AblationConfig::baseline()),
            "hh" => (VariantSpec::Hardmax, H),
            "ss" => (VariantSpec::Softmax, S),
            "hs" => (VariantSpec::Hardmax, S),
            "mix" => (VariantSpec::MIX, S),
            "alpha" => (VariantSpec::ALPHA, S),
            "noise" => (VariantSpec::NOISE, S),
            _ => return Err(Error::InvalidParameter(format!("unknown configuration {id:?}"))),
        };
        Ok(AblationConfig::net(variant, test, norvig))
    }

    /// The six network configurations, without edit-distance correction.
    pub fn standard() -> Vec<AblationConfig> {
        ["hh", "ss", "hs", "mix", "alpha", "noise"]
            .iter()
            .map(|id| AblationConfig::parse(id).unwrap())
            .collect()
    }

    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            use_dictionary: self.use_dictionary,
            use_net: self.train_variant.is_some(),
            use_norvig: self.use_norvig,
            test_representation: self.test_representation,
            max_distance: 2,
        }
    }
}

/// Sizes and hyperparameters of an ablation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationSettings {
    pub training_words: usize,
    pub word_lengths: RangeInclusive<usize>,
    pub n_pairs: usize,
    pub buffer_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub n_eval_words: usize,
    pub net: SpellNetConfig,
    /// Worker threads for training and scoring; results do not depend on it.
    pub threads: usize,
}

impl Default for AblationSettings {
    fn default() -> Self {
        AblationSettings {
            training_words: 2000,
            word_lengths: 3..=10,
            n_pairs: 9830,
            buffer_size: 80,
            epochs: 100,
            batch_size: 1024,
            learning_rate: 0.001,
            n_eval_words: 100,
            net: SpellNetConfig::default(),
            threads: default_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub label: String,
    pub seed: u64,
    pub character: Ratio,
    pub word: Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub n_eval_words: usize,
}

impl EvalReport {
    /// `label,char_num,char_den,word_num,word_den,seed`, one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,char_num,char_den,word_num,word_den,seed\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.label, r.character.num, r.character.den, r.word.num, r.word.den, r.seed
            )
            .unwrap();
        }
        out
    }

    /// Rows for `label`, in seed order.
    pub fn rows_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a EvalRow> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }

    /// Counts summed over seeds, per label in first-seen order.
    pub fn pooled(&self) -> Vec<(String, Ratio, Ratio)> {
        let mut order: Vec<String> = Vec::new();
        let mut sums: HashMap<String, (Ratio, Ratio)> = HashMap::new();
        for r in &self.rows {
            let e = sums.entry(r.label.clone()).or_insert_with(|| {
                order.push(r.label.clone());
                Default::default()
            });
            e.0 = e.0.pooled_with(r.character);
            e.1 = e.1.pooled_with(r.word);
        }
        order
            .into_iter()
            .map(|l| {
                let (c, w) = sums[&l];
                (l, c, w)
            })
            .collect()
    }

    /// Aligned table of the pooled accuracies.
    pub fn to_table(&self) -> String {
        let pooled = self.pooled();
        let width = pooled.iter().map(|(l, ..)| l.chars().count()).max().unwrap_or(0).max(6);
        let mut out = format!("{:<width$}  {:>8}  {:>8}  {:>12}\n", "config", "char", "word", "words");
        for (label, c, w) in pooled {
            let pad = width - label.chars().count();
            writeln!(
                out,
                "{label}{}  {:>8.4}  {:>8.4}  {:>12}",
                " ".repeat(pad),
                c.value(),
                w.value(),
                w.to_string()
            )
            .unwrap();
        }
        out
    }
}

/// Training words and the held-out evaluation sample for one seed.
pub struct SeedSetup {
    pub training_lexicon: Lexicon,
    pub eval_words: Vec<SymbolSequence>,
    /// Channel outputs for the evaluation words, as softmax distributions.
    pub eval_samples: Vec<WordSample>,
}

impl SeedSetup {
    pub fn new(lex: &Lexicon, model: &ConfusionModel, settings: &AblationSettings, seed: u64) -> Result<Self> {
        let mut r = rng::seeded(rng::derive_seed(seed, 0x5E7));
        let training_lexicon = lex.subset(&mut r, settings.training_words, Some(settings.word_lengths.clone()))?;
        let eval_words = lex.sample_distinct(
            &mut r,
            settings.n_eval_words,
            Some(settings.word_lengths.clone()),
            Some(&training_lexicon),
        )?;
        let eval_samples = eval_words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let s = rng::derive_seed(rng::derive_seed(seed, 0xE7A1), i as u64);
                simulate_symbols(w.clone(), model, &VariantSpec::Softmax, s)
            })
            .collect::<Result<_>>()?;
        Ok(SeedSetup {
            training_lexicon,
            eval_words,
            eval_samples,
        })
    }
}

fn variant_salt(v: &VariantSpec) -> u64 {
    match v {
        VariantSpec::Hardmax => 1,
        VariantSpec::Softmax => 2,
        VariantSpec::MixHardSoft { .. } => 3,
        VariantSpec::AlphaScaled { .. } => 4,
        VariantSpec::NoiseAdded { .. } => 5,
    }
}

/// A trained network together with its training pairs.
pub struct TrainedNet<T> {
    pub net: SpellNet<T>,
    pub pairs: Vec<TrainingPair<T>>,
}

/// Generates the training set for `variant` and trains a network on it.
pub fn train_variant<T: Scalar>(
    setup: &SeedSetup,
    model: &ConfusionModel,
    variant: &VariantSpec,
    settings: &AblationSettings,
    seed: u64,
) -> Result<TrainedNet<T>> {
    let s = rng::derive_seed(seed, variant_salt(variant));
    let data_cfg = DatasetConfig {
        n_pairs: settings.n_pairs,
        buffer_size: settings.buffer_size,
        lengths: None,
    };
    let pairs = generate_dataset(&setup.training_lexicon, model, variant, &data_cfg, rng::derive_seed(s, 1))?;
    let mut net = SpellNet::build(settings.net.clone(), rng::derive_seed(s, 2))?;
    let cfg = TrainConfig {
        batch_size: settings.batch_size,
        learning_rate: settings.learning_rate,
        epochs: settings.epochs,
        seed: rng::derive_seed(s, 3),
    };
    train(&mut net, &pairs, &cfg)?;
    Ok(TrainedNet { net, pairs })
}

/// Network-only character accuracy on the training pairs and on the held-out
/// evaluation sample shown as `test`.
pub fn generalization<T: Scalar>(
    trained: &TrainedNet<T>,
    setup: &SeedSetup,
    test: TestRepresentation,
) -> Result<(Ratio, Ratio)> {
    let (th, tt) = character_matches(&trained.net, &trained.pairs)?;
    let held_out: Vec<TrainingPair<T>> = setup
        .eval_samples
        .iter()
        .map(|s| {
            Ok(TrainingPair {
                input: net_input(s, test)?,
                target: target_matrix(&s.truth)?,
            })
        })
        .collect::<Result<_>>()?;
    let (eh, et) = character_matches(&trained.net, &held_out)?;
    Ok((Ratio::new(th as u64, tt as u64), Ratio::new(eh as u64, et as u64)))
}

/// Applies `f` to every item on up to `threads` scoped threads. Output order
/// matches input order whatever the scheduling.
pub fn parallel_map<I: Sync, O: Send>(items: &[I], threads: usize, f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut done: Vec<(usize, O)> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break local;
                        }
                        local.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("worker panicked")).collect()
    });
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, o)| o).collect()
}

/// Worker threads to use by default.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Everything an ablation run produced, for callers that need more than the
/// report.
pub struct AblationRun<T> {
    pub report: EvalReport,
    pub seeds: Vec<u64>,
    pub setups: Vec<SeedSetup>,
    /// Distinct training variants, in first-use order.
    pub variants: Vec<VariantSpec>,
    /// Seed-major: `trained[si * variants.len() + vi]`.
    pub trained: Vec<TrainedNet<T>>,
}

impl<T> AblationRun<T> {
    pub fn trained_for(&self, seed_index: usize, variant: &VariantSpec) -> Option<&TrainedNet<T>> {
        let vi = self.variants.iter().position(|v| v == variant)?;
        self.trained.get(seed_index * self.variants.len() + vi)
    }
}

/// Scores `configs` for every seed. Networks are trained once per
/// (training variant, seed), in parallel, and shared between configurations;
/// the baseline row (`argmax`) is always included first.
pub fn run_ablation<T: Scalar>(
    lex: &Lexicon,
    model: &ConfusionModel,
    configs: &[AblationConfig],
    settings: &AblationSettings,
    seeds: &[u64],
) -> Result<EvalReport> {
    run_ablation_detailed::<T>(lex, model, configs, settings, seeds).map(|r| r.report)
}

/// [`run_ablation`], keeping the per-seed setups and trained networks.
pub fn run_ablation_detailed<T: Scalar>(
    lex: &Lexicon,
    model: &ConfusionModel,
    configs: &[AblationConfig],
    settings: &AblationSettings,
    seeds: &[u64],
) -> Result<AblationRun<T>> {
    if configs.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParameter("need at least one configuration and one seed".into()));
    }
    let configs: Vec<AblationConfig> = std::iter::once(AblationConfig::baseline())
        .chain(configs.iter().filter(|c| !c.is_baseline()).cloned())
        .collect();
    let mut variants: Vec<VariantSpec> = Vec::new();
    for v in configs.iter().filter_map(|c| c.train_variant) {
        if !variants.contains(&v) {
            variants.push(v);
        }
    }
    let setups = seeds
        .iter()
        .map(|&seed| SeedSetup::new(lex, model, settings, seed))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, VariantSpec)> = (0..seeds.len())
        .flat_map(|si| variants.iter().map(move |&v| (si, v)))
        .collect();
    let trained = parallel_map(&jobs, settings.threads, |&(si, v)| {
        train_variant::<T>(&setups[si], model, &v, settings, seeds[si])
    });
    let trained = trained.into_iter().collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|si| (0..configs.len()).map(move |ci| (si, ci)))
        .collect();
    let rows = parallel_map(&cells, settings.threads, |&(si, ci)| {
        let cfg = &configs[ci];
        let setup = &setups[si];
        let net = cfg.train_variant.map(|v| {
            let vi = variants.iter().position(|x| *x == v).unwrap();
            &trained[si * variants.len() + vi].net
        });
        let out = correct_all(&setup.eval_samples, lex, net, &cfg.options());
        let pairs: Vec<(Vec<Symbol>, &[Symbol])> = out
            .into_iter()
            .zip(&setup.eval_words)
            .map(|(c, t)| (c.word, t.as_slice()))
            .collect();
        EvalRow {
            label: cfg.label(),
            seed: seeds[si],
            character: character_accuracy(&pairs),
            word: word_accuracy(&pairs),
        }
    });
    Ok(AblationRun {
        report: EvalReport {
            rows,
            n_eval_words: settings.n_eval_words,
        },
        seeds: seeds.to_vec(),
        setups,
        variants,
        trained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::tokenize;

    fn t(w: &str) -> Vec<Symbol> {
        tokenize(w).unwrap().into_vec()
    }

    #[test]
    fn character_accuracy_examples() {
        assert_eq!(character_accuracy(&[(t("SAGE"), t("SAGE"))]).value(), 1.0);
        assert_eq!(character_accuracy(&[(t("SAGX"), t("SAGE"))]).value(), 0.75);
        assert_eq!(character_accuracy(&[(t("SA"), t("SAGE"))]).value(), 0.5);
        assert_eq!(character_accuracy(&[(t("SAGEN"), t("SAGE"))]), Ratio::new(4, 4));
    }

    #[test]
    fn word_accuracy_examples() {
        let all = [(t("A"), t("A")), (t("B"), t("B"))];
        assert_eq!(word_accuracy(&all).value(), 1.0);
        let none = [(t("A"), t("B"))];
        assert_eq!(word_accuracy(&none).value(), 0.0);
        let one = [(t("A"), t("A")), (t("A"), t("B")), (t("C"), t("B")), (t("D"), t("B"))];
        assert_eq!(word_accuracy(&one), Ratio::new(1, 4));
    }

    #[test]
    fn labels_and_ids() {
        let labels: Vec<String> = AblationConfig::standard().iter().map(AblationConfig::label).collect();
        assert_eq!(labels, ["H/H", "S/S", "H/S", "Mix/S", "αS/S", "S+ε/S"]);
        assert_eq!(AblationConfig::parse("hs+n").unwrap().label(), "H/S+N");
        assert_eq!(AblationConfig::parse("N").unwrap().label(), "N");
        assert_eq!(AblationConfig::parse("argmax").unwrap().label(), "argmax");
        assert!(AblationConfig::parse("xx").is_err());
        assert!(AblationConfig::parse("n+n").is_err());
    }

    #[test]
    fn table_and_csv() {
        let report = EvalReport {
            rows: vec![
                EvalRow {
                    label: "H/H".into(),
                    seed: 1,
                    character: Ratio::new(3, 4),
                    word: Ratio::new(0, 1),
                },
                EvalRow {
                    label: "H/H".into(),
                    seed: 2,
                    character: Ratio::new(4, 4),
                    word: Ratio::new(1, 1),
                },
            ],
            n_eval_words: 1,
        };
        assert_eq!(
            report.to_csv(),
            "label,char_num,char_den,word_num,word_den,seed\nH/H,3,4,0,1,1\nH/H,4,4,1,1,2\n"
        );
        assert_eq!(report.pooled(), vec![("H/H".to_string(), Ratio::new(7, 8), Ratio::new(1, 2))]);
        assert!(report.to_table().contains("0.8750"));
    }

    fn tiny_settings() -> AblationSettings {
        AblationSettings {
            training_words: 6,
            word_lengths: 3..=6,
            n_pairs: 40,
            epochs: 2,
            batch_size: 16,
            n_eval_words: 4,
            net: SpellNetConfig {
                block_width: 8,
                ..SpellNetConfig::default()
            },
            ..AblationSettings::default()
        }
    }

    fn small_lex() -> Lexicon {
        Lexicon::from_words([
            "SAGE", "LUD", "NIMM", "LISTE", "SCHULE", "MENGE", "FLUR", "HAUS", "BAUM", "KATZE", "HUND", "MAUS",
        ])
        .unwrap()
    }

    #[test]
    fn noiseless_channel_is_perfect() {
        let configs: Vec<AblationConfig> = ["hh", "hs+n", "n"].iter().map(|c| AblationConfig::parse(c).unwrap()).collect();
        let report = run_ablation::<f64>(&small_lex(), &ConfusionModel::noiseless(), &configs, &tiny_settings(), &[1]).unwrap();
        assert_eq!(report.rows.len(), 4);
        for r in &report.rows {
            assert_eq!(r.character.num, r.character.den, "{r:?}");
            assert_eq!(r.word.num, r.word.den, "{r:?}");
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let m = ConfusionModel::with_levels(6.0, 2.5, 0.0, 1.7, 1.0).unwrap();
        let configs = vec![AblationConfig::parse("ss").unwrap(), AblationConfig::norvig_only()];
        let a = run_ablation::<f64>(&small_lex(), &m, &configs, &tiny_settings(), &[3, 4]).unwrap();
        let b = run_ablation::<f64>(&small_lex(), &m, &configs, &tiny_settings(), &[3, 4]).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 6);
        // word accuracy equals the share of words with every letter right
        for r in &a.rows {
            assert!(r.word.num <= r.word.den && r.character.num <= r.character.den);
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..50).collect();
        for threads in [1, 3, 8] {
            assert_eq!(parallel_map(&items, threads, |x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let m = ConfusionModel::with_levels(6.0, 2.5, 0.0, 1.7, 1.0).unwrap();
        let configs = vec![AblationConfig::parse("hh").unwrap(), AblationConfig::parse("mix+n").unwrap()];
        let one = AblationSettings { threads: 1, ..tiny_settings() };
        let many = AblationSettings { threads: 4, ..tiny_settings() };
        let a = run_ablation::<f64>(&small_lex(), &m, &configs, &one, &[5, 6]).unwrap();
        let b = run_ablation::<f64>(&small_lex(), &m, &configs, &many, &[5, 6]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_words_are_held_out() {
        let m = ConfusionModel::noiseless();
        let setup = SeedSetup::new(&small_lex(), &m, &tiny_settings(), 9).unwrap();
        for w in &setup.eval_words {
            assert!(!setup.training_lexicon.contains_symbols(w));
        }
        assert_eq!(setup.eval_samples.len(), 4);
    }
}
