//! Free-group word algebra and the textual word grammar.
//!
//! A [`Letter`] packs a generator index and a sign into one byte: the code
//! `2 * index + (sign == -1)`. Ordering letters by code gives the ShortLex
//! letter order `a < A < b < B < ...`, and inversion is `code ^ 1`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Maximum number of generators (single lowercase ASCII letters).
pub const MAX_GENERATORS: usize = 26;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, positive: bool) -> Self {
        debug_assert!(generator < MAX_GENERATORS);
        Letter((generator as u8) << 1 | u8::from(!positive))
    }

    pub fn from_code(code: u8) -> Self {
        Letter(code)
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// +1 or -1.
    #[inline]
    pub fn sign(self) -> i64 {
        if self.is_positive() {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'a' + self.generator() as u8) as char;
        if self.is_positive() {
            write!(f, "{c}")
        } else {
            write!(f, "{}", c.to_ascii_uppercase())
        }
    }
}

/// A finite sequence of letters. Unreduced words are allowed.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    /// Appends `letter`, cancelling against the last letter when they are inverse.
    pub fn push_reducing(&mut self, letter: Letter) {
        if self.0.last() == Some(&letter.inverse()) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(&first), Some(&last)) => self.0.len() == 1 || first != last.inverse(),
                _ => true,
            }
    }

    pub fn free_reduce(&self) -> Word {
        let mut out = Word(Vec::with_capacity(self.0.len()));
        for &l in &self.0 {
            out.push_reducing(l);
        }
        out
    }

    /// Freely reduces, then strips mutually inverse first/last letters.
    pub fn cyclic_reduce(&self) -> Word {
        let reduced = self.free_reduce();
        let letters = reduced.letters();
        let (mut lo, mut hi) = (0, letters.len());
        while hi - lo >= 2 && letters[lo] == letters[hi - 1].inverse() {
            lo += 1;
            hi -= 1;
        }
        Word(letters[lo..hi].to_vec())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pow(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }

    /// Cyclic shift: the word read starting at position `shift`.
    pub fn rotate(&self, shift: usize) -> Word {
        let n = self.0.len();
        if n == 0 {
            return Word::empty();
        }
        let s = shift % n;
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[s..]);
        v.extend_from_slice(&self.0[..s]);
        Word(v)
    }

    /// Exponent-sum vector over `rank` generators.
    pub fn exponent_sums(&self, rank: usize) -> Vec<i64> {
        let mut e = vec![0i64; rank];
        for l in &self.0 {
            e[l.generator()] += l.sign();
        }
        e
    }

    /// Compact textual form (`aB` style), independent of an alphabet.
    pub fn compact(&self) -> String {
        self.0.iter().map(|l| format!("{l:?}")).collect()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self.compact())
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl std::ops::Index<usize> for Word {
    type Output = Letter;
    fn index(&self, i: usize) -> &Letter {
        &self.0[i]
    }
}

/// Ordered generator names; each a distinct lowercase ASCII letter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<char>,
}

impl Alphabet {
    pub fn new(names: &[char]) -> Result<Self> {
        if names.len() > MAX_GENERATORS {
            return Err(Error::Alphabet(format!(
                "at most {MAX_GENERATORS} generators are supported"
            )));
        }
        for (i, &c) in names.iter().enumerate() {
            if !c.is_ascii_lowercase() {
                return Err(Error::Alphabet(format!(
                    "generator name {c:?} is not a lowercase ASCII letter"
                )));
            }
            if names[..i].contains(&c) {
                return Err(Error::Alphabet(format!("duplicate generator {c:?}")));
            }
        }
        Ok(Alphabet {
            names: names.to_vec(),
        })
    }

    /// The first `rank` letters `a, b, c, ...`.
    pub fn standard(rank: usize) -> Self {
        assert!(rank <= MAX_GENERATORS);
        Alphabet {
            names: (0..rank).map(|i| (b'a' + i as u8) as char).collect(),
        }
    }

    pub fn parse_names(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let mut chars = part.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => names.push(c),
                _ => {
                    return Err(Error::Alphabet(format!(
                        "generator name {part:?} must be a single letter"
                    )))
                }
            }
        }
        Alphabet::new(&names)
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    /// |S| = 2 * rank.
    pub fn symmetric_size(&self) -> usize {
        2 * self.names.len()
    }

    pub fn names(&self) -> &[char] {
        &self.names
    }

    /// All letters of S in ShortLex order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.symmetric_size()).map(|c| Letter::from_code(c as u8))
    }

    pub fn letter_for(&self, c: char) -> Option<Letter> {
        let lower = c.to_ascii_lowercase();
        let idx = self.names.iter().position(|&n| n == lower)?;
        Some(Letter::new(idx, c.is_ascii_lowercase()))
    }

    pub fn letter_char(&self, l: Letter) -> char {
        let c = self.names[l.generator()];
        if l.is_positive() {
            c
        } else {
            c.to_ascii_uppercase()
        }
    }

    pub fn format(&self, w: &Word) -> String {
        w.letters().iter().map(|&l| self.letter_char(l)).collect()
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        parse_word(text, self)
    }

    /// Checks that every letter of `w` belongs to this alphabet.
    pub fn contains_word(&self, w: &Word) -> bool {
        w.letters().iter().all(|l| l.generator() < self.rank())
    }
}

/// Parses `text` in the word grammar:
///
/// ```text
/// word   := factor*
/// factor := atom ("^" int)?
/// atom   := letter | "(" word ")"
/// int    := "-"? digit+
/// ```
///
/// Lowercase letters are generators, uppercase their inverses. The returned
/// word is literal (not reduced).
pub fn parse_word(text: &str, alphabet: &Alphabet) -> Result<Word> {
    let mut parser = Parser {
        chars: text.char_indices().collect(),
        pos: 0,
        alphabet,
    };
    let w = parser.word()?;
    parser.skip_ws();
    if let Some(&(at, c)) = parser.chars.get(parser.pos) {
        return Err(Error::Syntax {
            pos: at,
            msg: format!("unexpected {c:?}"),
        });
    }
    Ok(w)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<(usize, char)> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(i, _)| i)
            .unwrap_or_else(|| self.chars.last().map(|&(i, c)| i + c.len_utf8()).unwrap_or(0))
    }

    fn word(&mut self) -> Result<Word> {
        let mut out = Vec::new();
        while let Some((_, c)) = self.peek() {
            if c == ')' {
                break;
            }
            let factor = self.factor()?;
            out.extend_from_slice(factor.letters());
        }
        Ok(Word(out))
    }

    fn factor(&mut self) -> Result<Word> {
        let atom = self.atom()?;
        if let Some((_, '^')) = self.peek() {
            self.pos += 1;
            let k = self.int()?;
            let base = if k < 0 { atom.inverse() } else { atom };
            let reps = usize::try_from(k.unsigned_abs()).map_err(|_| Error::Syntax {
                pos: self.offset(),
                msg: "exponent too large".into(),
            })?;
            if reps.saturating_mul(base.len()) > 1 << 24 {
                return Err(Error::Syntax {
                    pos: self.offset(),
                    msg: "expanded word too long".into(),
                });
            }
            Ok(base.pow(reps))
        } else {
            Ok(atom)
        }
    }

    fn atom(&mut self) -> Result<Word> {
        match self.peek() {
            Some((_, '(')) => {
                self.pos += 1;
                let inner = self.word()?;
                match self.peek() {
                    Some((_, ')')) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Syntax {
                        pos: self.offset(),
                        msg: "expected ')'".into(),
                    }),
                }
            }
            Some((at, c)) if c.is_ascii_alphabetic() => {
                self.pos += 1;
                self.alphabet
                    .letter_for(c)
                    .map(|l| Word(vec![l]))
                    .ok_or(Error::UnknownLetter { pos: at, letter: c })
            }
            Some((at, c)) => Err(Error::Syntax {
                pos: at,
                msg: format!("unexpected {c:?}"),
            }),
            None => Err(Error::Syntax {
                pos: self.offset(),
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.offset();
        let mut s = String::new();
        if let Some(&(_, '-')) = self.chars.get(self.pos) {
            s.push('-');
            self.pos += 1;
        }
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s.parse::<i64>().map_err(|_| Error::Syntax {
            pos: start,
            msg: "expected integer exponent".into(),
        })
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.compact())
    }
}
