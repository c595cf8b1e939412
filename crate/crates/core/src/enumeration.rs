//! Enumeration of the word problem and the approximations built on it.
//!
//! [`TrivialWordStream`] lists trivial words of a finite presentation in
//! rounds. Round `m` emits the reduced words of the normal closure that are
//! reachable through words of length at most `max|r| + m` (the first
//! `512·2^m` of them in breadth-first order), interleaved with
//! a padding pass over all words of length `≤ m` whose free reduction is
//! empty or already known to be trivial. Every reduced trivial word has a
//! derivation of bounded length, so every trivial word shows up eventually.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::bounds::RootBound;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::presentation::Presentation;
use crate::words::{Letter, Word};

/// All words over `letters` of length exactly `len`, in lexicographic
/// order of letter codes.
#[cfg(test)]
fn words_of_length(letters: &[Letter], len: usize) -> impl Iterator<Item = Word> + '_ {
    let s = letters.len();
    let mut digits = vec![0usize; len];
    let mut done = s == 0 && len > 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let w = Word::from_letters(digits.iter().map(|&d| letters[d]).collect());
        done = true;
        for i in (0..len).rev() {
            digits[i] += 1;
            if digits[i] < s {
                done = false;
                break;
            }
            digits[i] = 0;
        }
        Some(w)
    })
}

/// The first `cap` reduced nonempty words, in breadth-first order, of the
/// normal closure reachable from the relators by letter conjugation
/// `w ↦ s w s⁻¹` and right multiplication `w ↦ w r^±1` while every
/// intermediate word has length `≤ limit`.
fn bounded_closure(relators: &[Word], letters: &[Letter], limit: usize, cap: usize) -> Vec<Word> {
    let mut seen: HashSet<Word> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    let offer = |w: Word, seen: &mut HashSet<Word>, queue: &mut VecDeque<Word>| {
        if !w.is_empty() && w.len() <= limit && seen.len() < cap && seen.insert(w.clone()) {
            queue.push_back(w);
        }
    };
    for r in relators {
        offer(r.free_reduce(), &mut seen, &mut queue);
    }
    while let Some(w) = queue.pop_front() {
        for &s in letters {
            let mut c = Word::empty();
            c.push_reducing(s);
            for &l in w.letters() {
                c.push_reducing(l);
            }
            c.push_reducing(s.inverse());
            offer(c, &mut seen, &mut queue);
        }
        for r in relators {
            let mut c = w.clone();
            for &l in r.letters() {
                c.push_reducing(l);
            }
            offer(c, &mut seen, &mut queue);
        }
        order.push(w);
    }
    order
}

/// Closure words kept in round 1; the cap doubles each round.
const CLOSURE_BASE: usize = 512;

/// Fair enumeration of the trivial words of a finite presentation.
#[derive(Clone, Debug)]
pub struct TrivialWordStream {
    letters: Vec<Letter>,
    relators: Vec<Word>,
    max_relator: usize,
    round: usize,
    closure: Vec<Word>,
    closure_pos: usize,
    pad_len: usize,
    pad_digits: Option<Vec<usize>>,
    closure_turn: bool,
    emitted: Vec<Word>,
    seen: HashSet<Word>,
    reductions: HashSet<Word>,
}

impl TrivialWordStream {
    pub fn new(p: &Presentation) -> Self {
        let mut relators = Vec::new();
        for r in p.relators() {
            relators.push(r.clone());
            relators.push(r.inverse());
        }
        let mut s = TrivialWordStream {
            letters: p.alphabet().letters().collect(),
            max_relator: p.max_relator_len(),
            relators,
            round: 0,
            closure: Vec::new(),
            closure_pos: 0,
            pad_len: 0,
            pad_digits: None,
            closure_turn: true,
            emitted: Vec::new(),
            seen: HashSet::new(),
            reductions: HashSet::new(),
        };
        s.start_round();
        s
    }

    /// Current round `m`.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn emitted(&self) -> &[Word] {
        &self.emitted
    }

    fn start_round(&mut self) {
        self.round += 1;
        let limit = self.max_relator + self.round;
        let cap = CLOSURE_BASE << self.round.min(40);
        self.closure = bounded_closure(&self.relators, &self.letters, limit, cap);
        for w in &self.closure {
            self.reductions.insert(w.clone());
        }
        self.closure_pos = 0;
        self.pad_len = 0;
        self.pad_digits = None;
    }

    fn emit(&mut self, w: Word) -> Word {
        self.reductions.insert(w.free_reduce());
        self.seen.insert(w.clone());
        self.emitted.push(w.clone());
        w
    }

    fn next_closure(&mut self) -> Option<Option<Word>> {
        let w = self.closure.get(self.closure_pos)?.clone();
        self.closure_pos += 1;
        if self.seen.contains(&w) {
            Some(None)
        } else {
            Some(Some(w))
        }
    }

    /// Next word of the padding pass, lengths `1..=m` in lexicographic order.
    fn next_pad_word(&mut self) -> Option<Word> {
        let s = self.letters.len();
        loop {
            match &mut self.pad_digits {
                Some(digits) => {
                    let w = Word::from_letters(digits.iter().map(|&d| self.letters[d]).collect());
                    let mut carried = true;
                    for i in (0..digits.len()).rev() {
                        digits[i] += 1;
                        if digits[i] < s {
                            carried = false;
                            break;
                        }
                        digits[i] = 0;
                    }
                    if carried {
                        self.pad_digits = None;
                    }
                    return Some(w);
                }
                None => {
                    if self.pad_len >= self.round {
                        return None;
                    }
                    self.pad_len += 1;
                    self.pad_digits = Some(vec![0; self.pad_len]);
                }
            }
        }
    }

    fn next_padding(&mut self) -> Option<Option<Word>> {
        let w = self.next_pad_word()?;
        if self.seen.contains(&w) {
            return Some(None);
        }
        let r = w.free_reduce();
        if r.is_empty() || self.reductions.contains(&r) {
            Some(Some(w))
        } else {
            Some(None)
        }
    }

    /// The next trivial word; `None` only for the empty alphabet.
    pub fn next_trivial(&mut self) -> Option<Word> {
        if self.letters.is_empty() {
            return None;
        }
        loop {
            let candidate = if self.closure_turn {
                match self.next_closure() {
                    None => self.next_padding(),
                    c => c,
                }
            } else {
                match self.next_padding() {
                    None => self.next_closure(),
                    c => c,
                }
            };
            self.closure_turn = !self.closure_turn;
            match candidate {
                None => self.start_round(),
                Some(None) => {}
                Some(Some(w)) => return Some(self.emit(w)),
            }
        }
    }
}

impl Iterator for TrivialWordStream {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        self.next_trivial()
    }
}

/// Running lower sequence `x_k = max_n (c_n / |S|^n)^(1/n)`, where `c_n`
/// counts the length-`n` words among the first `k` emitted trivial words.
#[derive(Clone, Debug)]
pub struct LowerSequence {
    stream: TrivialWordStream,
    symmetric_size: u64,
    counts: HashMap<usize, u64>,
    k: usize,
    value: RootBound,
}

impl LowerSequence {
    pub fn new(p: &Presentation) -> Self {
        LowerSequence {
            stream: TrivialWordStream::new(p),
            symmetric_size: p.alphabet().symmetric_size() as u64,
            counts: HashMap::new(),
            k: 0,
            value: RootBound::zero(),
        }
    }

    /// Consumes one more trivial word; returns the updated `x_k`.
    pub fn step(&mut self) -> &RootBound {
        if let Some(w) = self.stream.next_trivial() {
            let n = w.len();
            let c = self.counts.entry(n).or_insert(0);
            *c += 1;
            let q = BigRational::new(
                BigUint::from(*c).into(),
                Pow::pow(BigUint::from(self.symmetric_size), n).into(),
            );
            let candidate = RootBound::new(q, n as u32).expect("nonnegative");
            if candidate.compare(&self.value) == Ordering::Greater {
                self.value = candidate;
            }
        }
        self.k += 1;
        &self.value
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn value(&self) -> &RootBound {
        &self.value
    }

    /// Number of emitted trivial words of length `n` so far.
    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(&n).copied().unwrap_or(0)
    }
}

/// `x_k` after `k` trivial words; nondecreasing in `k` with limit ρ(G,S).
pub fn lower_spectral_sequence(p: &Presentation, k: usize) -> Result<RootBound> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut seq = LowerSequence::new(p);
    for _ in 0..k {
        seq.step();
    }
    Ok(seq.value().clone())
}

/// Pairs `(v, u⁻¹)` for every split `t = v·u` of every emitted trivial
/// word `t`; each pair satisfies `v̄ = w̄` in the group.
#[derive(Clone, Debug)]
pub struct DeltaPairs {
    stream: TrivialWordStream,
    current: Option<Word>,
    split: usize,
}

impl DeltaPairs {
    pub fn new(p: &Presentation) -> Self {
        DeltaPairs {
            stream: TrivialWordStream::new(p),
            current: None,
            split: 0,
        }
    }
}

impl Iterator for DeltaPairs {
    type Item = (Word, Word);

    fn next(&mut self) -> Option<(Word, Word)> {
        loop {
            if let Some(t) = &self.current {
                if self.split <= t.len() {
                    let (v, u) = t.letters().split_at(self.split);
                    self.split += 1;
                    let v = Word::from_letters(v.to_vec());
                    let w = Word::from_letters(u.to_vec()).inverse();
                    return Some((v, w));
                }
            }
            self.current = Some(self.stream.next_trivial()?);
            self.split = 0;
        }
    }
}

/// Largest `Σ_{j ≤ n} |S|^j` that [`QuotientApprox`] will materialize.
pub const QUOTIENT_WORD_LIMIT: usize = 1 << 26;

/// Union-find over all words of `S^{≤n}`, merged along `Δ`-pairs.
#[derive(Clone, Debug)]
pub struct QuotientApprox {
    symmetric_size: usize,
    n: usize,
    offsets: Vec<usize>,
    parent: Vec<u32>,
    size: Vec<u32>,
    consumed: usize,
}

impl QuotientApprox {
    pub fn new(symmetric_size: usize, n: usize) -> Result<Self> {
        let mut offsets = vec![0usize];
        let mut layer = 1usize;
        for _ in 0..=n {
            let next = offsets
                .last()
                .copied()
                .and_then(|o| o.checked_add(layer))
                .filter(|&t| t <= QUOTIENT_WORD_LIMIT)
                .ok_or(Error::VertexLimit(QUOTIENT_WORD_LIMIT))?;
            offsets.push(next);
            layer = layer.saturating_mul(symmetric_size);
        }
        let total = offsets[n + 1];
        Ok(QuotientApprox {
            symmetric_size,
            n,
            offsets,
            parent: (0..total as u32).collect(),
            size: vec![1; total],
            consumed: 0,
        })
    }

    pub fn for_presentation(p: &Presentation, n: usize) -> Result<Self> {
        Self::new(p.alphabet().symmetric_size(), n)
    }

    pub fn max_len(&self) -> usize {
        self.n
    }

    pub fn symmetric_size(&self) -> usize {
        self.symmetric_size
    }

    /// Class representative of the word with index `x` (length-major,
    /// base-`|S|` letter codes within a length).
    pub fn root_of(&self, x: usize) -> usize {
        self.root(x)
    }

    /// Number of pairs offered to [`refine`](Self::refine) so far.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    fn index(&self, w: &Word) -> Option<usize> {
        if w.len() > self.n {
            return None;
        }
        let mut idx = 0usize;
        for &l in w.letters() {
            let d = l.code() as usize;
            debug_assert!(d < self.symmetric_size);
            idx = idx * self.symmetric_size + d;
        }
        Some(self.offsets[w.len()] + idx)
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    fn root(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    /// Merges the classes of `v` and `w`. Pairs with a word longer than
    /// the cap are counted but skipped. Returns whether two classes merged.
    pub fn refine(&mut self, v: &Word, w: &Word) -> bool {
        self.consumed += 1;
        let (Some(a), Some(b)) = (self.index(v), self.index(w)) else {
            return false;
        };
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        true
    }

    pub fn same_class(&self, v: &Word, w: &Word) -> bool {
        match (self.index(v), self.index(w)) {
            (Some(a), Some(b)) => self.root(a) == self.root(b),
            _ => false,
        }
    }

    /// `β_k(n)`: number of classes meeting `S^{≤n}`.
    pub fn class_count(&self, n: usize) -> usize {
        assert!(n <= self.n);
        let end = self.offsets[n + 1];
        let mut roots: HashSet<usize> = HashSet::new();
        for x in 0..end {
            roots.insert(self.root(x));
        }
        roots.len()
    }

    /// Sizes of the classes of `S^n` (restricted to length exactly `n`).
    pub fn sphere_class_sizes(&self, n: usize) -> Vec<u64> {
        assert!(n <= self.n);
        let mut sizes: HashMap<usize, u64> = HashMap::new();
        for x in self.offsets[n]..self.offsets[n + 1] {
            *sizes.entry(self.root(x)).or_insert(0) += 1;
        }
        let mut v: Vec<u64> = sizes.into_values().collect();
        v.sort_unstable();
        v
    }

    /// `H_k^n = −Σ_A (|A|/|S|^n) log(|A|/|S|^n)` over classes `A` of `S^n`.
    pub fn entropy_upper_term(&self, n: usize) -> Interval {
        let total = Pow::pow(BigUint::from(self.symmetric_size), n);
        entropy_of_counts(self.sphere_class_sizes(n).into_iter().map(BigUint::from), &total)
    }
}

/// `−Σ (c/N) log(c/N)` for class sizes `c` summing to `N`, as an enclosure.
pub fn entropy_of_counts<I>(counts: I, total: &BigUint) -> Interval
where
    I: IntoIterator<Item = BigUint>,
{
    let ln_total = Interval::ln_big(total);
    let one = BigUint::one();
    let total_iv = Interval::ratio(total, &one);
    let mut acc = Interval::ZERO;
    for c in counts.into_iter().filter(|c| !c.is_zero()) {
        let term = ln_total
            .sub(Interval::ln_big(&c))
            .mul(Interval::ratio(&c, &one));
        acc = acc.add(term);
    }
    let h = acc.div(total_iv);
    Interval::new(h.lo.max(0.0), h.hi.max(0.0))
}
