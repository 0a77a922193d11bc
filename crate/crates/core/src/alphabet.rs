//! The 36-class fingerspelling alphabet: A–Z, Ä, Ö, Ü, SCH, the digits 1–5 and
//! a trailing out-of-vocabulary class used for padding.

use std::fmt;
use std::ops::Deref;

use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Number of classes including OOV.
pub const NUM_CLASSES: usize = 36;
/// Number of real gestures (everything except OOV).
pub const NUM_GESTURES: usize = 35;
/// Fixed network input width.
pub const MAX_WORD_LEN: usize = 10;

const NAMES: [&str; NUM_CLASSES] = [
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S",
    "T", "U", "V", "W", "X", "Y", "Z", "Ä", "Ö", "Ü", "SCH", "1", "2", "3", "4", "5", "<OOV>",
];

/// One class of the alphabet, stored as its index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Symbol(u8);

impl Symbol {
    pub const A: Symbol = Symbol(0);
    pub const SCH: Symbol = Symbol(29);
    pub const OOV: Symbol = Symbol(35);

    pub fn from_index(index: usize) -> Option<Symbol> {
        (index < NUM_CLASSES).then_some(Symbol(index as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_oov(self) -> bool {
        self == Symbol::OOV
    }

    /// Display form; SCH renders as the three letters.
    pub fn as_str(self) -> &'static str {
        NAMES[self.index()]
    }

    /// Parses the display form of a symbol (`"A"`, `"SCH"`, `"<OOV>"`, ...).
    pub fn from_name(name: &str) -> Option<Symbol> {
        NAMES.iter().position(|n| *n == name).map(|i| Symbol(i as u8))
    }

    /// All 36 classes in index order.
    pub fn all() -> impl Iterator<Item = Symbol> + Clone {
        (0..NUM_CLASSES as u8).map(Symbol)
    }

    /// The 35 gestures, i.e. every class except OOV.
    pub fn gestures() -> impl Iterator<Item = Symbol> + Clone {
        (0..NUM_GESTURES as u8).map(Symbol)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn index_of(s: Symbol) -> usize {
    s.index()
}

pub fn symbol_at(index: usize) -> Option<Symbol> {
    Symbol::from_index(index)
}

/// A spellable word: 1..=10 gestures, never OOV.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSequence(Vec<Symbol>);

impl SymbolSequence {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput);
        }
        if symbols.len() > MAX_WORD_LEN {
            return Err(Error::WordTooLong(symbols.len()));
        }
        if symbols.iter().any(|s| s.is_oov()) {
            return Err(Error::InvalidParameter("OOV inside a word".into()));
        }
        Ok(SymbolSequence(symbols))
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }
}

impl Deref for SymbolSequence {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Debug for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&detokenize(&self.0))
    }
}

/// Maps one character to its symbol. `S` is returned as the letter; SCH
/// detection happens in [`tokenize`].
fn char_symbol(c: char) -> Option<Symbol> {
    let index = match c {
        'A'..='Z' => c as usize - 'A' as usize,
        'Ä' => 26,
        'Ö' => 27,
        'Ü' => 28,
        '1'..='5' => 30 + (c as usize - '1' as usize),
        _ => return None,
    };
    Some(Symbol(index as u8))
}

/// Splits uppercase text into symbols. "SCH" is always read as the single SCH gesture.
pub fn tokenize(text: &str) -> Result<SymbolSequence> {
    let symbols = tokenize_unbounded(text)?;
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    if symbols.len() > MAX_WORD_LEN {
        return Err(Error::WordTooLong(symbols.len()));
    }
    Ok(SymbolSequence(symbols))
}

/// Like [`tokenize`] but without the length limits.
pub fn tokenize_unbounded(text: &str) -> Result<Vec<Symbol>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i..].starts_with(&['S', 'C', 'H']) {
            out.push(Symbol::SCH);
            i += 3;
            continue;
        }
        out.push(char_symbol(chars[i]).ok_or(Error::UnsupportedCharacter(chars[i]))?);
        i += 1;
    }
    Ok(out)
}

/// Renders symbols back to text. OOV renders as `?`.
pub fn detokenize(symbols: &[Symbol]) -> String {
    let mut s = String::with_capacity(symbols.len() + 4);
    for &sym in symbols {
        if sym.is_oov() {
            s.push('?');
        } else {
            s.push_str(sym.as_str());
        }
    }
    s
}

/// Uppercases free text and spells ß as SS. Does not validate.
pub fn normalize(text: &str) -> String {
    text.trim().replace(['ß', 'ẞ'], "SS").to_uppercase()
}

/// Unit vector for `s`.
pub fn one_hot<T: Zero + One + Copy>(s: Symbol) -> [T; NUM_CLASSES] {
    let mut v = [T::zero(); NUM_CLASSES];
    v[s.index()] = T::one();
    v
}

/// Index of the largest entry; ties resolve to the lower index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
