//! Dehn's algorithm, word-problem strategies and the coincidence radius.

use num_rational::Ratio;

use crate::enumeration::TrivialWordStream;
use crate::error::{Error, Result};
use crate::presentation::{check_small_cancellation, symmetrize, CancellationReport, Presentation};
use crate::words::{Letter, Word};

/// Dehn's algorithm over a verified C'(1/6) presentation.
#[derive(Clone, Debug)]
pub struct DehnSolver {
    presentation: Presentation,
    report: CancellationReport,
    /// Symmetrized relator words indexed by first letter code.
    by_first: Vec<Vec<Vec<Letter>>>,
}

impl DehnSolver {
    pub fn new(p: &Presentation) -> Result<Self> {
        let report = check_small_cancellation(p, Ratio::new(1, 6));
        if !report.passes {
            let detail = report
                .worst
                .as_ref()
                .map(|w| {
                    format!(
                        "piece {} in relator {} has ratio {}",
                        p.alphabet().format(&w.piece),
                        w.relator_index,
                        w.ratio
                    )
                })
                .unwrap_or_default();
            return Err(Error::NotSmallCancellation(detail));
        }
        let sym = symmetrize(p);
        let mut by_first = vec![Vec::new(); p.alphabet().symmetric_size()];
        for w in &sym.distinct_words {
            by_first[w[0].code() as usize].push(w.letters().to_vec());
        }
        Ok(DehnSolver {
            presentation: p.clone(),
            report,
            by_first,
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn report(&self) -> &CancellationReport {
        &self.report
    }

    /// Leftmost, then longest, subword `u` that is a prefix of a symmetrized
    /// relator `r = u v` with `2|u| > |r|`. Returns (start, |u|, v^-1).
    fn find_step(&self, w: &[Letter]) -> Option<(usize, usize, Vec<Letter>)> {
        for i in 0..w.len() {
            let mut best: Option<(usize, &Vec<Letter>)> = None;
            for r in &self.by_first[w[i].code() as usize] {
                let m = w[i..].iter().zip(r).take_while(|(x, y)| x == y).count();
                if 2 * m > r.len() && best.is_none_or(|(bm, _)| m > bm) {
                    best = Some((m, r));
                }
            }
            if let Some((m, r)) = best {
                let replacement = r[m..].iter().rev().map(|l| l.inverse()).collect();
                return Some((i, m, replacement));
            }
        }
        None
    }

    /// Applies Dehn steps until none applies; the result is freely reduced
    /// and equal to `w` in the group.
    pub fn reduce(&self, w: &Word) -> Word {
        let mut cur = w.free_reduce();
        while let Some((start, len, replacement)) = self.find_step(cur.letters()) {
            let letters = cur.letters();
            let mut next = Word::from_letters(letters[..start].to_vec());
            for &l in replacement.iter().chain(&letters[start + len..]) {
                next.push_reducing(l);
            }
            cur = next;
        }
        cur
    }

    /// True when no Dehn step applies to the freely reduced `w`.
    pub fn is_dehn_reduced(&self, w: &Word) -> bool {
        w.is_reduced() && self.find_step(w.letters()).is_none()
    }

    pub fn is_trivial(&self, w: &Word) -> bool {
        self.reduce(w).is_empty()
    }
}

/// `dehn_reduce` as a free function: fails on non-C'(1/6) presentations.
pub fn dehn_reduce(w: &Word, p: &Presentation) -> Result<Word> {
    Ok(DehnSolver::new(p)?.reduce(w))
}

/// Answer of a word-problem query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    Trivial,
    Nontrivial,
    /// Enumeration ran out of budget; nontriviality is NOT proven.
    NotProven,
}

/// How group equality is decided.
#[derive(Clone, Debug)]
pub enum WordProblemStrategy {
    Dehn(DehnSolver),
    FreeGroup { rank: usize },
    /// ℤ^d with the cubical generating set {±1}^d: generator `j` maps to
    /// the vector with first coordinate +1 and coordinate `i ≥ 1` equal to
    /// -1 exactly when bit `i-1` of `j` is set.
    ZdCube { d: usize },
    /// Semi-decision by enumerating trivial words; `budget` words per query.
    Enumeration {
        presentation: Presentation,
        budget: usize,
    },
}

/// Canonical per-element key for strategies with exact normal forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ElementKey {
    Word(Word),
    Vector(Vec<i64>),
}

impl WordProblemStrategy {
    pub fn dehn(p: &Presentation) -> Result<Self> {
        Ok(WordProblemStrategy::Dehn(DehnSolver::new(p)?))
    }

    /// Picks `FreeGroup` for relator-free presentations, otherwise `Dehn`.
    pub fn for_presentation(p: &Presentation) -> Result<Self> {
        if p.is_free() {
            Ok(WordProblemStrategy::FreeGroup { rank: p.rank() })
        } else {
            Self::dehn(p)
        }
    }

    pub fn zd_cube(d: usize) -> Result<Self> {
        if d == 0 || (1usize << (d - 1)) > crate::words::MAX_GENERATORS {
            return Err(Error::InvalidArgument(format!(
                "ZdCube dimension {d} needs 2^(d-1) ≤ 26 generators"
            )));
        }
        Ok(WordProblemStrategy::ZdCube { d })
    }

    /// Number of generators (|S| / 2).
    pub fn rank(&self) -> usize {
        match self {
            WordProblemStrategy::Dehn(s) => s.presentation.rank(),
            WordProblemStrategy::FreeGroup { rank } => *rank,
            WordProblemStrategy::ZdCube { d } => 1 << (d - 1),
            WordProblemStrategy::Enumeration { presentation, .. } => presentation.rank(),
        }
    }

    /// Whether queries always return a definite answer.
    pub fn decides(&self) -> bool {
        !matches!(self, WordProblemStrategy::Enumeration { .. })
    }

    pub fn cube_vector(d: usize, l: Letter) -> Vec<i64> {
        let g = l.generator();
        let mut v = vec![l.sign(); d];
        for (i, x) in v.iter_mut().enumerate().skip(1) {
            if g >> (i - 1) & 1 == 1 {
                *x = -*x;
            }
        }
        v
    }

    fn cube_sum(d: usize, w: &Word) -> Vec<i64> {
        let mut acc = vec![0i64; d];
        for &l in w.letters() {
            for (a, x) in acc.iter_mut().zip(Self::cube_vector(d, l)) {
                *a += x;
            }
        }
        acc
    }

    /// Exact canonical key, for strategies that have one.
    pub fn exact_key(&self, w: &Word) -> Option<ElementKey> {
        match self {
            WordProblemStrategy::FreeGroup { .. } => Some(ElementKey::Word(w.free_reduce())),
            WordProblemStrategy::ZdCube { d } => Some(ElementKey::Vector(Self::cube_sum(*d, w))),
            _ => None,
        }
    }

    pub fn triviality(&self, w: &Word) -> Triviality {
        let yes = |b: bool| if b { Triviality::Trivial } else { Triviality::Nontrivial };
        match self {
            WordProblemStrategy::Dehn(s) => yes(s.is_trivial(w)),
            WordProblemStrategy::FreeGroup { .. } => yes(w.free_reduce().is_empty()),
            WordProblemStrategy::ZdCube { d } => {
                yes(Self::cube_sum(*d, w).iter().all(|&x| x == 0))
            }
            WordProblemStrategy::Enumeration {
                presentation,
                budget,
            } => {
                let target = w.free_reduce();
                if target.is_empty() {
                    return Triviality::Trivial;
                }
                let mut stream = TrivialWordStream::new(presentation);
                for _ in 0..*budget {
                    match stream.next_trivial() {
                        Some(t) if t.free_reduce() == target => return Triviality::Trivial,
                        Some(_) => {}
                        None => break,
                    }
                }
                Triviality::NotProven
            }
        }
    }

    /// Definite answer or an error for undecided enumeration queries.
    pub fn is_trivial(&self, w: &Word) -> Result<bool> {
        match self.triviality(w) {
            Triviality::Trivial => Ok(true),
            Triviality::Nontrivial => Ok(false),
            Triviality::NotProven => Err(Error::Strategy(
                "enumeration budget exhausted; word not proven trivial".into(),
            )),
        }
    }

    pub fn are_equal(&self, u: &Word, v: &Word) -> Result<bool> {
        self.is_trivial(&u.concat(&v.inverse()))
    }

    pub fn triviality_of_quotient(&self, u: &Word, v: &Word) -> Triviality {
        self.triviality(&u.concat(&v.inverse()))
    }
}

/// ⌊min{|r| : r in the symmetric difference of relator sets} / 2⌋, or
/// `None` (infinite) when the relator sets agree up to rotation/inversion.
pub fn coincidence_radius(p1: &Presentation, p2: &Presentation) -> Result<Option<usize>> {
    if p1.alphabet() != p2.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let a = p1.canonical_relators();
    let b = p2.canonical_relators();
    let min = a
        .iter()
        .filter(|r| !b.contains(r))
        .chain(b.iter().filter(|r| !a.contains(r)))
        .map(Word::len)
        .min();
    Ok(min.map(|m| m / 2))
}

/// Abelian invariant of words: the exponent-sum vector reduced modulo the
/// lattice spanned by the relators' exponent sums (Hermite normal form).
/// Equal group elements have equal invariants.
#[derive(Clone, Debug)]
pub struct AbelianInvariant {
    rank: usize,
    /// Echelon rows with positive pivots, pivot columns strictly increasing.
    rows: Vec<(usize, Vec<i64>)>,
}

impl AbelianInvariant {
    pub fn new(p: &Presentation) -> Self {
        let rank = p.rank();
        let mut m: Vec<Vec<i64>> = p
            .relators()
            .iter()
            .map(|r| r.exponent_sums(rank))
            .filter(|v| v.iter().any(|&x| x != 0))
            .collect();
        let mut rows = Vec::new();
        let mut col = 0;
        while col < rank && !m.is_empty() {
            // Euclid on column `col` until at most one row has a nonzero entry.
            loop {
                let nz: Vec<usize> = (0..m.len()).filter(|&i| m[i][col] != 0).collect();
                if nz.len() <= 1 {
                    break;
                }
                let pivot = *nz.iter().min_by_key(|&&i| m[i][col].abs()).expect("nonempty");
                let prow = m[pivot].clone();
                for &i in &nz {
                    if i != pivot {
                        let q = m[i][col].div_euclid(prow[col]);
                        for (x, y) in m[i].iter_mut().zip(&prow) {
                            *x -= q * y;
                        }
                    }
                }
            }
            if let Some(i) = (0..m.len()).find(|&i| m[i][col] != 0) {
                let mut row = m.swap_remove(i);
                if row[col] < 0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
                rows.push((col, row));
            }
            m.retain(|v| v.iter().any(|&x| x != 0));
            col += 1;
        }
        AbelianInvariant { rank, rows }
    }

    pub fn key(&self, w: &Word) -> Vec<i64> {
        let mut v = w.exponent_sums(self.rank);
        for (col, row) in &self.rows {
            let q = v[*col].div_euclid(row[*col]);
            if q != 0 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x -= q * y;
                }
            }
        }
        v
    }
}
