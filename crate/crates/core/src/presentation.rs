//! Presentations, symmetrized relator sets, pieces and the C'(λ) check.

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Letter, Word};

/// A finite presentation `<S | R>`. Relators are stored cyclically reduced,
/// nonempty, and without duplicates up to rotation and inversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    alphabet: Alphabet,
    relators: Vec<Word>,
}

/// Least word among all rotations of `r` and of `r^-1`.
pub fn canonical_relator(r: &Word) -> Word {
    let inv = r.inverse();
    (0..r.len().max(1))
        .flat_map(|s| [r.rotate(s), inv.rotate(s)])
        .min()
        .unwrap_or_default()
}

impl Presentation {
    /// Builds a presentation. Relators are cyclically reduced; those that
    /// reduce to the empty word are dropped, as are repeats.
    pub fn new(alphabet: Alphabet, relators: impl IntoIterator<Item = Word>) -> Result<Self> {
        let mut out: Vec<Word> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for r in relators {
            if !alphabet.contains_word(&r) {
                return Err(Error::Presentation(format!(
                    "relator {} uses a letter outside the alphabet",
                    r.compact()
                )));
            }
            let r = r.cyclic_reduce();
            if r.is_empty() {
                continue;
            }
            if seen.insert(canonical_relator(&r)) {
                out.push(r);
            }
        }
        Ok(Presentation {
            alphabet,
            relators: out,
        })
    }

    /// The free group on `rank` generators `a, b, ...`.
    pub fn free(rank: usize) -> Self {
        Presentation {
            alphabet: Alphabet::standard(rank),
            relators: Vec::new(),
        }
    }

    /// Parses `generators: a, b` followed by one relator per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Presentation("missing `generators:` line".into()))?;
        let names = header
            .strip_prefix("generators:")
            .ok_or_else(|| Error::Presentation("first line must start with `generators:`".into()))?;
        let alphabet = Alphabet::parse_names(names)?;
        let relators = lines
            .map(|l| alphabet.parse_word(l))
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(alphabet, relators)
    }

    pub fn from_strs(generators: &str, relators: &[&str]) -> Result<Self> {
        let alphabet = Alphabet::parse_names(generators)?;
        let words = relators
            .iter()
            .map(|r| alphabet.parse_word(r))
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(alphabet, words)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    pub fn is_free(&self) -> bool {
        self.relators.is_empty()
    }

    /// The quotient `<S | R, w>`.
    pub fn with_relator(&self, w: &Word) -> Result<Self> {
        let mut rels = self.relators.clone();
        rels.push(w.clone());
        Presentation::new(self.alphabet.clone(), rels)
    }

    /// Canonical relator set, sorted; equal sets define the same presentation.
    pub fn canonical_relators(&self) -> Vec<Word> {
        let mut v: Vec<Word> = self.relators.iter().map(canonical_relator).collect();
        v.sort();
        v
    }

    pub fn min_relator_len(&self) -> Option<usize> {
        self.relators.iter().map(Word::len).min()
    }

    pub fn max_relator_len(&self) -> usize {
        self.relators.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Stable 64-bit content hash (alphabet plus canonical relators).
    pub fn content_hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(self.alphabet.names().iter().collect::<String>().as_bytes());
        for r in self.canonical_relators() {
            h.update(b"|");
            h.update(r.compact().as_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.alphabet.names().iter().map(|c| c.to_string()).collect();
        writeln!(f, "generators: {}", names.join(", "))?;
        for r in &self.relators {
            writeln!(f, "{}", self.alphabet.format(r))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub relator: usize,
    pub shift: usize,
    pub inverted: bool,
    pub word: Word,
}

/// Every cyclic shift of every relator and of its inverse.
#[derive(Clone, Debug)]
pub struct SymmetrizedSet {
    pub occurrences: Vec<Occurrence>,
    /// Deduplicated words, in order of first occurrence.
    pub distinct_words: Vec<Word>,
    /// For each distinct word, the relator it came from (first occurrence).
    pub owner: Vec<usize>,
    relator_count: usize,
}

pub fn symmetrize(p: &Presentation) -> SymmetrizedSet {
    let mut occurrences = Vec::new();
    let mut index: HashMap<Word, usize> = HashMap::new();
    let mut distinct_words = Vec::new();
    let mut owner = Vec::new();
    for (ri, r) in p.relators().iter().enumerate() {
        let inv = r.inverse();
        for (inverted, base) in [(false, r), (true, &inv)] {
            for shift in 0..base.len() {
                let word = base.rotate(shift);
                if !index.contains_key(&word) {
                    index.insert(word.clone(), distinct_words.len());
                    distinct_words.push(word.clone());
                    owner.push(ri);
                }
                occurrences.push(Occurrence {
                    relator: ri,
                    shift,
                    inverted,
                    word,
                });
            }
        }
    }
    SymmetrizedSet {
        occurrences,
        distinct_words,
        owner,
        relator_count: p.relators().len(),
    }
}

fn lcp(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Longest piece found inside one relator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxPiece {
    pub length: usize,
    pub piece: Word,
}

impl SymmetrizedSet {
    /// For each relator, the longest piece occurring as a subword of a
    /// cyclic shift of the relator or its inverse. A piece is a common
    /// prefix of two distinct words of the symmetrized set.
    pub fn max_pieces(&self) -> Vec<MaxPiece> {
        let mut best = vec![
            MaxPiece {
                length: 0,
                piece: Word::empty()
            };
            self.relator_count
        ];
        // The longest common prefix of a word with any other word is
        // attained at a neighbour in sorted order.
        let mut order: Vec<usize> = (0..self.distinct_words.len()).collect();
        order.sort_by(|&i, &j| self.distinct_words[i].cmp(&self.distinct_words[j]));
        // Which relators each distinct word belongs to (a word can be a
        // shift of several relators only if they are equal up to
        // rotation/inversion, which Presentation excludes).
        let mut relators_of: Vec<Vec<usize>> = vec![Vec::new(); self.distinct_words.len()];
        let pos: HashMap<&Word, usize> = self
            .distinct_words
            .iter()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        for occ in &self.occurrences {
            let i = pos[&occ.word];
            if !relators_of[i].contains(&occ.relator) {
                relators_of[i].push(occ.relator);
            }
        }
        for (k, &i) in order.iter().enumerate() {
            let w = self.distinct_words[i].letters();
            let mut longest = 0;
            if k > 0 {
                longest = longest.max(lcp(w, self.distinct_words[order[k - 1]].letters()));
            }
            if k + 1 < order.len() {
                longest = longest.max(lcp(w, self.distinct_words[order[k + 1]].letters()));
            }
            for &r in &relators_of[i] {
                if longest > best[r].length {
                    best[r] = MaxPiece {
                        length: longest,
                        piece: Word::from_letters(w[..longest].to_vec()),
                    };
                }
            }
        }
        best
    }
}

/// Result of the C'(λ) check.
#[derive(Clone, Debug, Serialize)]
pub struct CancellationReport {
    pub passes: bool,
    #[serde(serialize_with = "crate::ser::ratio")]
    pub lambda: Ratio<i64>,
    /// (piece, relator index, |piece| / |r|) maximizing the ratio.
    pub worst: Option<WorstPiece>,
    pub max_piece_lengths: Vec<usize>,
    pub proper_power_flags: Vec<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstPiece {
    pub piece: Word,
    pub relator_index: usize,
    #[serde(serialize_with = "crate::ser::ratio")]
    pub ratio: Ratio<i64>,
}

impl CancellationReport {
    /// Also rejects relators that are proper powers.
    pub fn passes_strict(&self) -> bool {
        self.passes && !self.proper_power_flags.iter().any(|&b| b)
    }
}

/// True if `r = u^k` for some `k > 1`.
pub fn is_proper_power(r: &Word) -> bool {
    let n = r.len();
    (1..n).any(|d| n % d == 0 && r.letters()[d..] == r.letters()[..n - d])
}

pub fn check_small_cancellation(p: &Presentation, lambda: Ratio<i64>) -> CancellationReport {
    let sym = symmetrize(p);
    let pieces = sym.max_pieces();
    let (num, den) = (*lambda.numer(), *lambda.denom());
    let mut passes = true;
    let mut worst: Option<WorstPiece> = None;
    for (i, (r, mp)) in p.relators().iter().zip(&pieces).enumerate() {
        let (len, plen) = (r.len() as i64, mp.length as i64);
        if plen * den >= num * len {
            passes = false;
        }
        let ratio = Ratio::new(plen, len);
        if worst.as_ref().is_none_or(|w| ratio > w.ratio) {
            worst = Some(WorstPiece {
                piece: mp.piece.clone(),
                relator_index: i,
                ratio,
            });
        }
    }
    CancellationReport {
        passes,
        lambda,
        worst,
        max_piece_lengths: pieces.iter().map(|m| m.length).collect(),
        proper_power_flags: p.relators().iter().map(is_proper_power).collect(),
    }
}

/// `check_small_cancellation` at λ = 1/6.
pub fn is_c16(p: &Presentation) -> bool {
    check_small_cancellation(p, Ratio::new(1, 6)).passes
}
