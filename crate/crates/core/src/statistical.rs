//! Edit distance and Norvig-style correction: the error model P(w|c) is the
//! Levenshtein distance, the prior P(c) comes from the lexicon.

use std::collections::HashSet;

use crate::alphabet::{detokenize, normalize, tokenize_unbounded, Symbol, NUM_GESTURES};
use crate::lexicon::Lexicon;

/// Unit-cost edit distance (substitution, insertion, deletion; no transposition).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance over characters.
pub fn levenshtein_str(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Calls `f` for every single-edit variant of `word` over the 35 gestures, in
/// the order deletions, replacements, insertions. Duplicates (and `word`
/// itself, via same-symbol replacement) are included.
fn for_each_edit1(word: &[Symbol], buf: &mut Vec<Symbol>, mut f: impl FnMut(&[Symbol])) {
    let n = word.len();
    for i in 0..n {
        buf.clear();
        buf.extend_from_slice(&word[..i]);
        buf.extend_from_slice(&word[i + 1..]);
        f(buf);
    }
    for i in 0..n {
        buf.clear();
        buf.extend_from_slice(word);
        for s in Symbol::gestures() {
            buf[i] = s;
            f(buf);
        }
    }
    for i in 0..=n {
        for s in Symbol::gestures() {
            buf.clear();
            buf.extend_from_slice(&word[..i]);
            buf.push(s);
            buf.extend_from_slice(&word[i..]);
            f(buf);
        }
    }
}

/// Raw enumeration of single edits before deduplication:
/// `n + 35n + 35(n + 1)` strings for a word of length `n`.
pub fn enumerate_edits1(word: &[Symbol]) -> Vec<Vec<Symbol>> {
    let mut out = Vec::with_capacity(word.len() + NUM_GESTURES * (2 * word.len() + 1));
    let mut buf = Vec::new();
    for_each_edit1(word, &mut buf, |v| out.push(v.to_vec()));
    out
}

/// Every string at edit distance at most one from `word`.
pub fn edits_within_1(word: &[Symbol]) -> HashSet<Vec<Symbol>> {
    enumerate_edits1(word).into_iter().collect()
}

struct Best<'a> {
    lex: &'a Lexicon,
    word: Option<Vec<Symbol>>,
    count: u64,
}

impl<'a> Best<'a> {
    fn new(lex: &'a Lexicon) -> Self {
        Best { lex, word: None, count: 0 }
    }

    fn offer(&mut self, candidate: &[Symbol]) {
        let count = self.lex.count_symbols(candidate);
        let better = match &self.word {
            None => true,
            Some(_) if count != self.count => count > self.count,
            Some(cur) => detokenize(candidate) < detokenize(cur),
        };
        if better {
            self.word = Some(candidate.to_vec());
            self.count = count;
        }
    }
}

/// Staged Norvig correction. Returns `word` if it is known; otherwise the most
/// frequent known word at distance 1, else at distance 2, and so on up to
/// `max_distance`; otherwise `word` unchanged. Equal counts resolve to the
/// lexicographically smaller word.
///
/// The search enumerates edit balls, so distances beyond 2 are expensive.
pub fn norvig_correct(word: &[Symbol], lex: &Lexicon, max_distance: usize) -> Vec<Symbol> {
    if lex.contains_symbols(word) {
        return word.to_vec();
    }
    let mut buf = Vec::new();
    let mut frontier: HashSet<Vec<Symbol>> = HashSet::from([word.to_vec()]);
    let mut seen: HashSet<Vec<Symbol>> = frontier.clone();
    for distance in 1..=max_distance {
        let last = distance == max_distance;
        let mut best = Best::new(lex);
        let mut next = HashSet::new();
        for base in &frontier {
            for_each_edit1(base, &mut buf, |v| {
                if lex.contains_symbols(v) && levenshtein(word, v) == distance {
                    best.offer(v);
                }
                if !last && !seen.contains(v) {
                    next.insert(v.to_vec());
                }
            });
        }
        if let Some(found) = best.word {
            return found;
        }
        if last {
            break;
        }
        seen.extend(next.iter().cloned());
        frontier = next;
    }
    word.to_vec()
}

/// [`norvig_correct`] over text. Text that does not tokenize is returned as is.
pub fn norvig_correct_str(word: &str, lex: &Lexicon, max_distance: usize) -> String {
    let text = normalize(word);
    match tokenize_unbounded(&text) {
        Ok(seq) => detokenize(&norvig_correct(&seq, lex, max_distance)),
        Err(_) => text,
    }
}

/// Known words within `max_distance` of `word`, with their exact distances,
/// sorted by distance then text.
pub fn candidates(word: &[Symbol], lex: &Lexicon, max_distance: usize) -> Vec<(Vec<Symbol>, usize)> {
    let mut out: Vec<(Vec<Symbol>, usize)> = lex
        .entries()
        .filter_map(|(w, _)| {
            let d = levenshtein(word, w);
            (d <= max_distance).then(|| (w.to_vec(), d))
        })
        .collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| detokenize(&a.0).cmp(&detokenize(&b.0))));
    out
}
