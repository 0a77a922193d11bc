//! Word-level workflow: simulate a spelled word through the channel, read off
//! the argmax word, then dictionary lookup, network correction and
//! edit-distance correction in that order.

use std::fmt;

use crate::alphabet::{argmax, detokenize, one_hot, tokenize, Symbol, SymbolSequence, NUM_GESTURES};
use crate::channel::{to_distribution, ConfusionModel, Distribution, VariantSpec};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::nn::{Batch, Scalar, Tensor2};
use crate::rng;
use crate::spellnet::{decode_columns, input_matrix, SpellNet};
use crate::statistical::norvig_correct;

/// One spelled word as the classifier saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSample {
    pub truth: SymbolSequence,
    pub distributions: Vec<Distribution>,
    pub variant: VariantSpec,
    pub seed: u64,
}

/// Simulates the classifier on every letter of `word`.
pub fn simulate_word(word: &str, model: &ConfusionModel, variant: &VariantSpec, seed: u64) -> Result<WordSample> {
    simulate_symbols(tokenize(word)?, model, variant, seed)
}

pub fn simulate_symbols(
    truth: SymbolSequence,
    model: &ConfusionModel,
    variant: &VariantSpec,
    seed: u64,
) -> Result<WordSample> {
    variant.validate()?;
    let mut r = rng::seeded(seed);
    let mut distributions = Vec::with_capacity(truth.len());
    for &s in truth.iter() {
        let logits = model.sample_logits(s, &mut r)?;
        distributions.push(to_distribution(&logits, variant, model.temperature, &mut r));
    }
    Ok(WordSample {
        truth,
        distributions,
        variant: *variant,
        seed,
    })
}

/// Per-letter argmax over the gestures.
pub fn argmax_symbols(sample: &WordSample) -> SymbolSequence {
    let symbols = sample
        .distributions
        .iter()
        .map(|d| Symbol::from_index(argmax(&d[..NUM_GESTURES])).unwrap())
        .collect();
    SymbolSequence::new(symbols).expect("sample has 1..=10 letters")
}

pub fn argmax_word(sample: &WordSample) -> String {
    argmax_symbols(sample).to_string()
}

/// What the network sees at test time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestRepresentation {
    Hardmax,
    Softmax,
}

impl TestRepresentation {
    pub fn tag(self) -> &'static str {
        match self {
            TestRepresentation::Hardmax => "H",
            TestRepresentation::Softmax => "S",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub use_dictionary: bool,
    pub use_net: bool,
    pub use_norvig: bool,
    pub test_representation: TestRepresentation,
    /// Largest edit distance the statistical stage searches.
    pub max_distance: usize,
}

impl PipelineOptions {
    pub fn new(use_dictionary: bool, use_net: bool, use_norvig: bool, test_representation: TestRepresentation) -> Result<Self> {
        let opts = PipelineOptions {
            use_dictionary,
            use_net,
            use_norvig,
            test_representation,
            max_distance: 2,
        };
        opts.validate()?;
        Ok(opts)
    }

    /// All stages off: [`correct`] returns the argmax word.
    pub fn passthrough() -> Self {
        PipelineOptions {
            use_dictionary: false,
            use_net: false,
            use_norvig: false,
            test_representation: TestRepresentation::Softmax,
            max_distance: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.use_dictionary || self.use_net || self.use_norvig) {
            return Err(Error::InvalidParameter("enable at least one correction stage".into()));
        }
        Ok(())
    }
}

/// Which stage produced the final word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Dictionary,
    Net,
    NetNorvig,
    Norvig,
    Passthrough,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Dictionary => "dictionary",
            Provenance::Net => "net",
            Provenance::NetNorvig => "net+norvig",
            Provenance::Norvig => "norvig",
            Provenance::Passthrough => "passthrough",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub argmax: SymbolSequence,
    pub word: Vec<Symbol>,
    pub provenance: Provenance,
}

impl Correction {
    pub fn text(&self) -> String {
        detokenize(&self.word)
    }
}

/// The network input for `sample` under `repr`, OOV-padded.
pub fn net_input<T: Scalar>(sample: &WordSample, repr: TestRepresentation) -> Result<Tensor2<T>> {
    match repr {
        TestRepresentation::Softmax => input_matrix(&sample.distributions),
        TestRepresentation::Hardmax => {
            let cols: Vec<Distribution> = argmax_symbols(sample).iter().map(|&s| one_hot(s)).collect();
            input_matrix(&cols)
        }
    }
}

/// Runs the stages on one sample. Never fails: a stage that cannot produce a
/// word leaves the previous stage's word in place.
pub fn correct<T: Scalar>(
    sample: &WordSample,
    lex: &Lexicon,
    net: Option<&SpellNet<T>>,
    opts: &PipelineOptions,
) -> Correction {
    correct_all(std::slice::from_ref(sample), lex, net, opts).pop().unwrap()
}

/// [`correct`] over many samples, running the network in batches.
pub fn correct_all<T: Scalar>(
    samples: &[WordSample],
    lex: &Lexicon,
    net: Option<&SpellNet<T>>,
    opts: &PipelineOptions,
) -> Vec<Correction> {
    let argmaxes: Vec<SymbolSequence> = samples.iter().map(argmax_symbols).collect();
    let mut done: Vec<Option<Correction>> = argmaxes
        .iter()
        .map(|w| {
            (opts.use_dictionary && lex.contains_symbols(w)).then(|| Correction {
                argmax: w.clone(),
                word: w.to_vec(),
                provenance: Provenance::Dictionary,
            })
        })
        .collect();

    // network stage: None where the net did not run or produced no usable word
    let mut net_words: Vec<Option<Vec<Symbol>>> = vec![None; samples.len()];
    if let (true, Some(net)) = (opts.use_net, net) {
        let pending: Vec<usize> = (0..samples.len()).filter(|&i| done[i].is_none()).collect();
        for chunk in pending.chunks(1024) {
            let inputs: Result<Vec<Tensor2<T>>> =
                chunk.iter().map(|&i| net_input(&samples[i], opts.test_representation)).collect();
            let decoded = inputs
                .and_then(|inputs| Batch::stack(&inputs))
                .and_then(|batch| net.logits(&batch));
            let Ok(logits) = decoded else { continue };
            let argmax = logits.column_argmax();
            let len = logits.length();
            for (b, &i) in chunk.iter().enumerate() {
                if let Ok(w) = decode_columns(&argmax[b * len..(b + 1) * len]) {
                    net_words[i] = Some(w.into_vec());
                }
            }
        }
    }

    samples
        .iter()
        .enumerate()
        .map(|(i, _)| {
            if let Some(c) = done[i].take() {
                return c;
            }
            let argmax = argmaxes[i].clone();
            let from_net = net_words[i].take();
            let ran_net = from_net.is_some();
            let w = from_net.unwrap_or_else(|| argmax.to_vec());
            if ran_net && lex.contains_symbols(&w) {
                return Correction {
                    argmax,
                    word: w,
                    provenance: Provenance::Net,
                };
            }
            if opts.use_norvig {
                let fixed = norvig_correct(&w, lex, opts.max_distance);
                if lex.contains_symbols(&fixed) {
                    let provenance = if ran_net { Provenance::NetNorvig } else { Provenance::Norvig };
                    return Correction {
                        argmax,
                        word: fixed,
                        provenance,
                    };
                }
            }
            Correction {
                argmax,
                word: w,
                provenance: Provenance::Passthrough,
            }
        })
        .collect()
}

/// Probability that all `length` letters are right when each is right
/// independently with probability `char_acc`.
pub fn expected_word_accuracy(char_acc: f64, length: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&char_acc) || length == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= char_acc <= 1 and length > 0, got {char_acc}, {length}"
        )));
    }
    Ok(char_acc.powi(length as i32))
}
