//! Word list with unigram counts: the candidate set and word prior used by
//! dictionary lookup and statistical correction.

use std::collections::HashMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::Rng;

use crate::alphabet::{detokenize, normalize, tokenize, Symbol, SymbolSequence};
use crate::error::{Error, Result};

/// Known words and their counts. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    // sorted by symbol sequence so iteration and sampling are deterministic
    words: Vec<(SymbolSequence, u64)>,
    index: HashMap<Box<[Symbol]>, usize>,
    total_count: u64,
    dropped: usize,
}

impl Lexicon {
    /// Loads a word list and an optional `word<TAB>count` frequency file.
    ///
    /// Words are normalised (uppercase, ß → SS); words that do not tokenize or
    /// exceed ten symbols are dropped and counted in [`Lexicon::dropped`].
    /// Without a frequency file every word gets count 1; with one, listed words
    /// missing from it also get count 1.
    pub fn load(words_path: &Path, freq_path: Option<&Path>) -> Result<Lexicon> {
        let words = read_source(words_path)?;
        let freq = freq_path.map(read_source).transpose()?;
        Lexicon::parse(&words, freq.as_deref())
    }

    /// Loads only a frequency file; its words form the lexicon.
    pub fn load_frequencies(freq_path: &Path) -> Result<Lexicon> {
        let text = read_source(freq_path)?;
        let (counts, dropped) = parse_frequencies(&text)?;
        Lexicon::build(counts, dropped)
    }

    /// Same as [`Lexicon::load`] over in-memory file contents.
    pub fn parse(word_list: &str, frequencies: Option<&str>) -> Result<Lexicon> {
        let (freq, _) = match frequencies {
            Some(text) => parse_frequencies(text)?,
            None => (HashMap::new(), 0),
        };
        let mut counts = HashMap::new();
        let mut dropped = 0;
        for line in content_lines(word_list) {
            match tokenize(&normalize(line)) {
                Ok(seq) => {
                    let count = freq.get(&seq).copied().unwrap_or(1);
                    counts.insert(seq, count);
                }
                Err(_) => dropped += 1,
            }
        }
        Lexicon::build(counts, dropped)
    }

    /// Builds a lexicon from `(word, count)` pairs, dropping untokenizable words.
    pub fn from_counts<I, S>(pairs: I) -> Result<Lexicon>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut counts = HashMap::new();
        let mut dropped = 0;
        for (word, count) in pairs {
            match tokenize(&normalize(word.as_ref())) {
                Ok(seq) => *counts.entry(seq).or_insert(0) += count,
                Err(_) => dropped += 1,
            }
        }
        Lexicon::build(counts, dropped)
    }

    /// Uniform-count lexicon over `words`.
    pub fn from_words<I, S>(words: I) -> Result<Lexicon>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Lexicon::from_counts(words.into_iter().map(|w| (w, 1)))
    }

    fn build(counts: HashMap<SymbolSequence, u64>, dropped: usize) -> Result<Lexicon> {
        let mut words: Vec<(SymbolSequence, u64)> = counts.into_iter().collect();
        words.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let total_count: u64 = words.iter().map(|(_, c)| c).sum();
        if words.is_empty() || total_count == 0 {
            return Err(Error::EmptyLexicon);
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.as_slice().into(), i))
            .collect();
        Ok(Lexicon {
            words,
            index,
            total_count,
            dropped,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    /// Number of source entries rejected while loading.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Whether `word` (normalised) is an entry.
    pub fn contains(&self, word: &str) -> bool {
        match tokenize(&normalize(word)) {
            Ok(seq) => self.contains_symbols(&seq),
            Err(_) => false,
        }
    }

    #[inline]
    pub fn contains_symbols(&self, word: &[Symbol]) -> bool {
        self.index.contains_key(word)
    }

    pub fn count_symbols(&self, word: &[Symbol]) -> u64 {
        self.index.get(word).map_or(0, |&i| self.words[i].1)
    }

    /// Relative frequency of `word`; 0 for unknown words.
    pub fn prior(&self, word: &str) -> f64 {
        match tokenize(&normalize(word)) {
            Ok(seq) => self.prior_symbols(&seq),
            Err(_) => 0.0,
        }
    }

    pub fn prior_symbols(&self, word: &[Symbol]) -> f64 {
        self.count_symbols(word) as f64 / self.total_count as f64
    }

    /// Entries in a fixed (symbol index) order.
    pub fn entries(&self) -> impl Iterator<Item = (&SymbolSequence, u64)> {
        self.words.iter().map(|(w, c)| (w, *c))
    }

    /// Entries rendered as text.
    pub fn words(&self) -> impl Iterator<Item = String> + '_ {
        self.words.iter().map(|(w, _)| detokenize(w))
    }

    fn qualifying(&self, lengths: Option<&RangeInclusive<usize>>) -> Vec<usize> {
        (0..self.words.len())
            .filter(|&i| lengths.is_none_or(|r| r.contains(&self.words[i].0.len())))
            .collect()
    }

    /// Draws an entry uniformly (not by frequency), optionally restricted to a
    /// symbol-length range.
    pub fn sample_word<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        lengths: Option<RangeInclusive<usize>>,
    ) -> Result<SymbolSequence> {
        if lengths.is_none() {
            return Ok(self.words[rng.random_range(0..self.words.len())].0.clone());
        }
        let pool = self.qualifying(lengths.as_ref());
        if pool.is_empty() {
            return Err(Error::NoWordInRange);
        }
        Ok(self.words[pool[rng.random_range(0..pool.len())]].0.clone())
    }

    /// Draws `n` distinct entries uniformly without replacement, in draw order.
    pub fn sample_distinct<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        lengths: Option<RangeInclusive<usize>>,
        exclude: Option<&Lexicon>,
    ) -> Result<Vec<SymbolSequence>> {
        let mut pool: Vec<usize> = self
            .qualifying(lengths.as_ref())
            .into_iter()
            .filter(|&i| exclude.is_none_or(|ex| !ex.contains_symbols(&self.words[i].0)))
            .collect();
        if pool.len() < n || pool.is_empty() {
            return Err(Error::NoWordInRange);
        }
        // partial Fisher-Yates
        for i in 0..n {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        Ok(pool[..n].iter().map(|&i| self.words[i].0.clone()).collect())
    }

    /// A sub-lexicon of `n` uniformly drawn entries, keeping their counts.
    pub fn subset<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        lengths: Option<RangeInclusive<usize>>,
    ) -> Result<Lexicon> {
        let picked = self.sample_distinct(rng, n, lengths, None)?;
        let counts = picked
            .into_iter()
            .map(|w| {
                let c = self.count_symbols(&w);
                (w, c)
            })
            .collect();
        Lexicon::build(counts, 0)
    }
}

fn read_source(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::SourceUnreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.trim_end_matches('\r').trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_frequencies(text: &str) -> Result<(HashMap<SymbolSequence, u64>, usize)> {
    let mut counts = HashMap::new();
    let mut dropped = 0;
    for line in content_lines(text) {
        let (word, count) = line.split_once('\t').ok_or_else(|| Error::Format {
            what: "frequency file",
            reason: format!("missing TAB in {line:?}"),
        })?;
        let count: u64 = count.trim().parse().map_err(|_| Error::Format {
            what: "frequency file",
            reason: format!("bad count in {line:?}"),
        })?;
        match tokenize(&normalize(word)) {
            Ok(seq) => *counts.entry(seq).or_insert(0) += count,
            Err(_) => dropped += 1,
        }
    }
    Ok((counts, dropped))
}
