//! Balls in Cayley graphs, exact walk counts, and the centroid-set checks.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dehn::{AbelianInvariant, ElementKey, WordProblemStrategy};
use crate::error::{Error, Result};
use crate::presentation::{symmetrize, Presentation};
use crate::words::{Letter, Word};

const NONE: u32 = u32::MAX;

/// Default cap on the number of ball vertices.
pub const DEFAULT_VERTEX_LIMIT: usize = 4_000_000;

/// ShortLex comparison: shorter first, then lexicographic by letter code.
pub fn shortlex_cmp(a: &Word, b: &Word) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.letters().cmp(b.letters()))
}

/// The ball `B_S(e, r)` with ShortLex-least geodesic representatives.
///
/// Vertices are numbered in BFS order, so vertex 0 is the identity and
/// each level is a contiguous, ShortLex-sorted block. Edges out of levels
/// below `r` are total; on the sphere of radius `r`, only edges staying
/// inside the ball are present.
#[derive(Clone, Debug)]
pub struct BallGraph {
    radius: usize,
    letters: usize,
    reps: Vec<Word>,
    dist: Vec<u32>,
    edges: Vec<u32>,
    level_start: Vec<usize>,
}

/// Equality oracle used while growing a ball. Words with different keys
/// are different elements; within a key, `equal` decides.
struct Matcher<'a> {
    strategy: &'a WordProblemStrategy,
    invariant: Option<AbelianInvariant>,
    min_relator: usize,
}

impl<'a> Matcher<'a> {
    fn new(strategy: &'a WordProblemStrategy) -> Result<Self> {
        match strategy {
            WordProblemStrategy::FreeGroup { .. } | WordProblemStrategy::ZdCube { .. } => {
                Ok(Matcher {
                    strategy,
                    invariant: None,
                    min_relator: usize::MAX,
                })
            }
            WordProblemStrategy::Dehn(solver) => {
                let p = solver.presentation();
                Ok(Matcher {
                    strategy,
                    invariant: Some(AbelianInvariant::new(p)),
                    min_relator: p.min_relator_len().unwrap_or(usize::MAX),
                })
            }
            WordProblemStrategy::Enumeration { .. } => Err(Error::Strategy(
                "ball construction needs a strategy that decides equality".into(),
            )),
        }
    }

    fn key(&self, c: &Word) -> ElementKey {
        match &self.invariant {
            None => self.strategy.exact_key(c).expect("exact strategy"),
            Some(inv) => ElementKey::Vector(inv.key(c)),
        }
    }

    /// Equality of two distinct reduced words with the same key.
    fn equal(&self, c: &Word, w: &Word) -> Result<bool> {
        if self.invariant.is_none() {
            return Ok(true);
        }
        // A nonempty reduced trivial word is longer than half a relator.
        if 2 * (c.len() + w.len()) <= self.min_relator {
            return Ok(false);
        }
        self.strategy.are_equal(c, w)
    }

    fn find_in(
        &self,
        c: &Word,
        key: &ElementKey,
        index: &HashMap<ElementKey, Vec<u32>>,
        reps: &[Word],
    ) -> Result<Option<u32>> {
        if let Some(bucket) = index.get(key) {
            for &v in bucket {
                if self.equal(c, &reps[v as usize])? {
                    return Ok(Some(v));
                }
            }
        }
        Ok(None)
    }
}

type LevelIndex = HashMap<ElementKey, Vec<u32>>;

struct Candidate {
    from: u32,
    letter: Letter,
    word: Word,
    key: ElementKey,
}

impl BallGraph {
    fn set_edge(&mut self, u: u32, l: Letter, v: u32) {
        self.edges[u as usize * self.letters + l.code() as usize] = v;
        self.edges[v as usize * self.letters + l.inverse().code() as usize] = u;
    }

    fn candidates(&self, level: usize, all: &[Letter], matcher: &Matcher) -> Vec<Candidate> {
        let mut out = Vec::new();
        for u in self.level(level) {
            for &l in all {
                if self.edge_raw(u, l) == NONE {
                    let mut word = self.reps[u].clone();
                    word.push(l);
                    out.push(Candidate {
                        from: u as u32,
                        letter: l,
                        key: matcher.key(&word),
                        word,
                    });
                }
            }
        }
        out
    }

    fn edge_raw(&self, u: usize, l: Letter) -> u32 {
        self.edges[u * self.letters + l.code() as usize]
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `|S|`.
    pub fn symmetric_size(&self) -> usize {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, v: usize) -> &Word {
        &self.reps[v]
    }

    pub fn dist(&self, v: usize) -> usize {
        self.dist[v] as usize
    }

    /// `v·s`, if it lies in the ball.
    pub fn neighbor(&self, v: usize, s: Letter) -> Option<usize> {
        let t = self.edge_raw(v, s);
        (t != NONE).then_some(t as usize)
    }

    /// Vertices at distance exactly `d`.
    pub fn level(&self, d: usize) -> std::ops::Range<usize> {
        self.level_start[d]..self.level_start[d + 1]
    }

    /// `β(n) = |B(e, n)|` for `n ≤ radius`.
    pub fn ball_size(&self, n: usize) -> usize {
        self.level_start[n.min(self.radius) + 1]
    }

    /// Sphere sizes `|S(e, d)|`, `d = 0..=radius`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        (0..=self.radius).map(|d| self.level(d).len()).collect()
    }

    /// Follows `w` from `v` along ball edges.
    pub fn walk(&self, v: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(v, |u, &l| self.neighbor(u, l))
    }

    /// Vertex whose element is `w`, found by walking from the identity.
    pub fn locate(&self, w: &Word) -> Option<usize> {
        self.walk(0, w)
    }

    /// BFS distances inside the ball graph from `src` (`u32::MAX` if unreachable).
    pub fn distances_from(&self, src: usize) -> Vec<u32> {
        let mut d = vec![NONE; self.len()];
        d[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for c in 0..self.letters {
                let t = self.edges[u * self.letters + c];
                if t != NONE && d[t as usize] == NONE {
                    d[t as usize] = d[u] + 1;
                    queue.push_back(t as usize);
                }
            }
        }
        d
    }

    /// Structural consistency: distances change by at most one across an
    /// edge, edges are symmetric, and interior vertices have all edges.
    pub fn check_invariants(&self) -> bool {
        for u in 0..self.len() {
            for c in 0..self.letters {
                let t = self.edges[u * self.letters + c];
                if t == NONE {
                    if self.dist(u) < self.radius {
                        return false;
                    }
                    continue;
                }
                let back = self.edges[t as usize * self.letters + (c ^ 1)];
                if back as usize != u || self.dist(u).abs_diff(self.dist(t as usize)) > 1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Builds `B_S(e, r)` with the default vertex cap.
pub fn build_ball(s: &WordProblemStrategy, r: usize) -> Result<BallGraph> {
    build_ball_with_limit(s, r, DEFAULT_VERTEX_LIMIT)
}

/// Builds `B_S(e, r)`, failing once more than `limit` vertices appear.
///
/// Candidates `rep(u)·s` are generated level by level in ShortLex order and
/// compared against the previous and the current level only: a word of
/// length `d` cannot name an element at distance below `d − 1` without the
/// edge having been recorded from the other side. Comparisons run in
/// parallel; vertex numbering depends only on ShortLex order.
pub fn build_ball_with_limit(
    s: &WordProblemStrategy,
    r: usize,
    limit: usize,
) -> Result<BallGraph> {
    let letters = 2 * s.rank();
    let matcher = Matcher::new(s)?;
    let mut ball = BallGraph {
        radius: r,
        letters,
        reps: vec![Word::empty()],
        dist: vec![0],
        edges: vec![NONE; letters],
        level_start: vec![0, 1],
    };
    let all: Vec<Letter> = (0..letters).map(|c| Letter::from_code(c as u8)).collect();
    let mut prev_index: LevelIndex = HashMap::new();
    prev_index.insert(matcher.key(&Word::empty()), vec![0]);

    for d in 1..=r {
        let candidates = ball.candidates(d - 1, &all, &matcher);
        let prev_match: Vec<Option<u32>> = candidates
            .par_iter()
            .map(|c| matcher.find_in(&c.word, &c.key, &prev_index, &ball.reps))
            .collect::<Result<_>>()?;

        // Group the unmatched candidates by key, then split each group into
        // classes; each class is led by its ShortLex-first member.
        let mut groups: HashMap<&ElementKey, Vec<usize>> = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            if prev_match[i].is_none() {
                groups.entry(&c.key).or_default().push(i);
            }
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let leaders: Vec<Vec<(usize, usize)>> = groups
            .par_iter()
            .map(|members| {
                let mut heads: Vec<usize> = Vec::new();
                let mut out = Vec::with_capacity(members.len());
                for &i in members {
                    let mut leader = i;
                    for &h in &heads {
                        if matcher.equal(&candidates[i].word, &candidates[h].word)? {
                            leader = h;
                            break;
                        }
                    }
                    if leader == i {
                        heads.push(i);
                    }
                    out.push((i, leader));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut leader_of = vec![usize::MAX; candidates.len()];
        for (i, l) in leaders.into_iter().flatten() {
            leader_of[i] = l;
        }

        let mut vertex_of = vec![NONE; candidates.len()];
        let mut index: LevelIndex = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            let v = if let Some(v) = prev_match[i] {
                v
            } else if leader_of[i] == i {
                let v = ball.reps.len();
                if v >= limit {
                    return Err(Error::VertexLimit(limit));
                }
                ball.reps.push(c.word.clone());
                ball.dist.push(d as u32);
                ball.edges.extend(std::iter::repeat(NONE).take(letters));
                index.entry(c.key.clone()).or_default().push(v as u32);
                vertex_of[i] = v as u32;
                v as u32
            } else {
                vertex_of[leader_of[i]]
            };
            ball.set_edge(c.from, c.letter, v);
        }
        ball.level_start.push(ball.reps.len());
        prev_index = index;
    }

    // Edges inside the outer sphere.
    let candidates = ball.candidates(r, &all, &matcher);
    let matches: Vec<Option<u32>> = candidates
        .par_iter()
        .map(|c| matcher.find_in(&c.word, &c.key, &prev_index, &ball.reps))
        .collect::<Result<_>>()?;
    for (c, m) in candidates.iter().zip(matches) {
        if let Some(v) = m {
            if ball.edge_raw(c.from as usize, c.letter) == NONE {
                ball.set_edge(c.from, c.letter, v);
            }
        }
    }
    Ok(ball)
}

const CACHE_VERSION: u8 = 1;

impl BallGraph {
    /// Binary form: version byte, then little-endian `u32`s: vertex count,
    /// letter count, radius, CSR offsets, and `(letter, target)` entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![CACHE_VERSION];
        let mut put = |x: u32| out.extend_from_slice(&x.to_le_bytes());
        put(self.len() as u32);
        put(self.letters as u32);
        put(self.radius as u32);
        let mut offset = 0u32;
        put(0);
        for u in 0..self.len() {
            offset += (0..self.letters)
                .filter(|&c| self.edges[u * self.letters + c] != NONE)
                .count() as u32;
            put(offset);
        }
        for u in 0..self.len() {
            for c in 0..self.letters {
                let t = self.edges[u * self.letters + c];
                if t != NONE {
                    put(c as u32);
                    put(t);
                }
            }
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes); representatives and
    /// distances are recomputed by ShortLex BFS over the stored edges.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Cache(m.to_string());
        if bytes.first() != Some(&CACHE_VERSION) {
            return Err(bad("unsupported cache version"));
        }
        let body = &bytes[1..];
        if body.len() % 4 != 0 {
            return Err(bad("truncated cache"));
        }
        let words: Vec<u32> = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if words.len() < 4 {
            return Err(bad("truncated cache"));
        }
        let (n, letters, radius) = (words[0] as usize, words[1] as usize, words[2] as usize);
        let offsets = words
            .get(3..4 + n)
            .ok_or_else(|| bad("truncated offsets"))?;
        let entries = &words[4 + n..];
        if offsets[n] as usize * 2 != entries.len() || n == 0 {
            return Err(bad("inconsistent edge count"));
        }
        let mut edges = vec![NONE; n * letters];
        for u in 0..n {
            let (a, b) = (offsets[u] as usize, offsets[u + 1] as usize);
            if a > b {
                return Err(bad("decreasing offsets"));
            }
            for e in a..b {
                let (c, t) = (entries[2 * e] as usize, entries[2 * e + 1]);
                if c >= letters || t as usize >= n {
                    return Err(bad("edge out of range"));
                }
                edges[u * letters + c] = t;
            }
        }
        let mut reps = vec![None; n];
        let mut dist = vec![0u32; n];
        reps[0] = Some(Word::empty());
        let mut order = vec![0usize];
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for c in 0..letters {
                let t = edges[u * letters + c];
                if t != NONE && reps[t as usize].is_none() {
                    let mut w = reps[u].clone().expect("visited");
                    w.push(Letter::from_code(c as u8));
                    reps[t as usize] = Some(w);
                    dist[t as usize] = dist[u] + 1;
                    order.push(t as usize);
                }
            }
        }
        if order.len() != n || order.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(bad("vertices are not in BFS order"));
        }
        let mut level_start = vec![0];
        for d in 0..=radius {
            level_start.push(dist.iter().filter(|&&x| x as usize <= d).count());
        }
        Ok(BallGraph {
            radius,
            letters,
            reps: reps.into_iter().map(|w| w.expect("visited")).collect(),
            dist,
            edges,
            level_start,
        })
    }

    pub fn same_graph(&self, other: &BallGraph) -> bool {
        self.radius == other.radius
            && self.letters == other.letters
            && self.reps == other.reps
            && self.edges == other.edges
    }
}

/// Cache file for the ball of radius `r` of `p` inside `dir`.
pub fn cache_path(dir: &Path, p: &Presentation, r: usize) -> PathBuf {
    dir.join(format!("{:016x}-r{r}.ball", p.content_hash()))
}

/// Loads the ball from `dir` if cached, otherwise builds and stores it.
pub fn build_ball_cached(p: &Presentation, r: usize, dir: &Path) -> Result<BallGraph> {
    let path = cache_path(dir, p, r);
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(ball) = BallGraph::from_bytes(&bytes) {
            return Ok(ball);
        }
    }
    let ball = build_ball(&WordProblemStrategy::for_presentation(p)?, r)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, ball.to_bytes())?;
    Ok(ball)
}

/// Exact walk counts `N(g; n)` for every ball vertex and `n ≤ n_max`.
#[derive(Clone, Debug)]
pub struct WalkTable {
    radius: usize,
    symmetric_size: usize,
    counts: Vec<Vec<BigUint>>,
}

fn walk_step(ball: &BallGraph, prev: &[BigUint]) -> Vec<BigUint> {
    let s = ball.letters;
    (0..ball.len())
        .into_par_iter()
        .map(|g| {
            let mut acc = BigUint::zero();
            for c in 0..s {
                // N(g; k+1) = Σ_s N(g·s⁻¹; k)
                let t = ball.edges[g * s + (c ^ 1)];
                if t != NONE {
                    acc += &prev[t as usize];
                }
            }
            acc
        })
        .collect()
}

/// Walk-count table up to `n_max` steps.
pub fn walk_counts(ball: &BallGraph, n_max: usize) -> WalkTable {
    let mut col = vec![BigUint::zero(); ball.len()];
    col[0] = BigUint::one();
    let mut counts = vec![col];
    for k in 0..n_max {
        let next = walk_step(ball, &counts[k]);
        counts.push(next);
    }
    WalkTable {
        radius: ball.radius,
        symmetric_size: ball.letters,
        counts,
    }
}

/// Identity return counts `N(e; n)`, `n = 0..=n_max`, keeping one column.
pub fn return_counts(ball: &BallGraph, n_max: usize) -> Vec<BigUint> {
    let mut col = vec![BigUint::zero(); ball.len()];
    col[0] = BigUint::one();
    let mut out = vec![BigUint::one()];
    for _ in 0..n_max {
        col = walk_step(ball, &col);
        out.push(col[0].clone());
    }
    out
}

/// Longest walk length whose return count a radius-`r` ball determines.
pub fn valid_return_steps(radius: usize) -> usize {
    2 * radius.saturating_sub(1)
}

impl WalkTable {
    pub fn n_max(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn count(&self, v: usize, n: usize) -> &BigUint {
        &self.counts[n][v]
    }

    pub fn return_count(&self, n: usize) -> Result<&BigUint> {
        if n > valid_return_steps(self.radius) {
            return Err(Error::BallTooSmall {
                radius: self.radius,
                need: n.div_ceil(2) + 1,
            });
        }
        Ok(&self.counts[n][0])
    }

    /// `p(n) = N(e; n) / |S|^n`.
    pub fn return_probability(&self, n: usize) -> Result<BigRational> {
        let c = self.return_count(n)?.clone();
        Ok(BigRational::new(
            c.into(),
            Pow::pow(BigUint::from(self.symmetric_size), n).into(),
        ))
    }

    /// The full distribution of `X_n` (counts per vertex); needs `n ≤ radius`.
    pub fn distribution(&self, n: usize) -> Result<&[BigUint]> {
        if n > self.radius {
            return Err(Error::BallTooSmall {
                radius: self.radius,
                need: n,
            });
        }
        Ok(&self.counts[n])
    }

    /// `Σ_g N(g; n)`.
    pub fn mass(&self, n: usize) -> BigUint {
        self.counts[n].iter().sum()
    }
}

/// Return counts on the `2k`-regular tree by distance-from-root dynamics.
pub fn free_radial_counts(rank: usize, n_max: usize) -> Result<Vec<BigUint>> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let up_from_root = BigUint::from(2 * rank as u64);
    let up = BigUint::from(2 * rank as u64 - 1);
    let mut col = vec![BigUint::one()];
    let mut out = vec![BigUint::one()];
    for k in 0..n_max {
        let mut next = vec![BigUint::zero(); col.len() + 1];
        for (d, c) in col.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if d == 0 {
                next[1] += c * &up_from_root;
            } else {
                next[d - 1] += c;
                next[d + 1] += c * &up;
            }
        }
        // Mass farther out than the remaining steps can no longer return.
        next.truncate(n_max - k);
        col = next;
        out.push(col[0].clone());
    }
    Ok(out)
}

/// Exact `p(n)` for the free group of rank `k` with its standard generators.
pub fn free_radial_p(rank: usize, n: usize) -> Result<BigRational> {
    if n % 2 == 1 {
        return Ok(BigRational::zero());
    }
    let c = free_radial_counts(rank, n)?.pop().expect("nonempty");
    Ok(BigRational::new(
        c.into(),
        Pow::pow(BigUint::from(2 * rank as u64), n).into(),
    ))
}

/// `p(2n)` for ℤ with `S = {a, A}`: `C(2n, n) / 4^n`.
pub fn integer_line_p2n(n: usize) -> BigRational {
    let c: BigUint = binomial(BigUint::from(2 * n as u64), BigUint::from(n as u64));
    BigRational::new(c.into(), Pow::pow(BigUint::from(4u32), n).into())
}

/// A geodesic inside the ball with its ShortLex-least label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geodesic {
    pub vertices: Vec<usize>,
    pub label: Word,
}

/// The ShortLex-least geodesic from `x` to `y` in the ball graph.
pub fn shortlex_geodesic(ball: &BallGraph, x: usize, y: usize) -> Result<Geodesic> {
    let to_y = ball.distances_from(y);
    shortlex_geodesic_with(ball, x, y, &to_y)
}

fn shortlex_geodesic_with(ball: &BallGraph, x: usize, y: usize, to_y: &[u32]) -> Result<Geodesic> {
    if to_y[x] == NONE {
        return Err(Error::BallTooSmall {
            radius: ball.radius,
            need: ball.radius + 1,
        });
    }
    let mut vertices = vec![x];
    let mut label = Word::empty();
    let mut cur = x;
    while cur != y {
        let (l, t) = (0..ball.letters)
            .map(|c| Letter::from_code(c as u8))
            .find_map(|l| {
                ball.neighbor(cur, l)
                    .filter(|&t| to_y[t] + 1 == to_y[cur])
                    .map(|t| (l, t))
            })
            .expect("BFS distances have a descending neighbour");
        label.push(l);
        vertices.push(t);
        cur = t;
    }
    Ok(Geodesic { vertices, label })
}

fn edge_id(u: usize, l: Letter, v: usize) -> (usize, u8) {
    let a = (u, l.code());
    let b = (v, l.inverse().code());
    a.min(b)
}

/// `C(x, y)`: the geodesic `[x, y]` together with every relator cycle
/// sharing at least a sixth of its edges with it.
#[derive(Clone, Debug)]
pub struct CentroidSet {
    pub x: usize,
    pub y: usize,
    pub geodesic: Geodesic,
    /// Sorted vertex list.
    pub vertices: Vec<usize>,
    /// Edges of the subgraph as vertex pairs.
    pub edges: Vec<(usize, usize)>,
    pub cycles: usize,
}

impl CentroidSet {
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Largest distance inside the subgraph itself; an upper bound for the
    /// diameter in the group metric.
    pub fn internal_diameter(&self) -> usize {
        let pos: HashMap<usize, usize> =
            self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[pos[&a]].push(pos[&b]);
            adj[pos[&b]].push(pos[&a]);
        }
        let mut best = 0;
        for s in 0..adj.len() {
            let mut d = vec![usize::MAX; adj.len()];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &t in &adj[u] {
                    if d[t] == usize::MAX {
                        d[t] = d[u] + 1;
                        q.push_back(t);
                    }
                }
            }
            best = best.max(d.into_iter().max().unwrap_or(0));
        }
        best
    }
}

/// Extra distance from the geodesic reachable by cycles that can qualify
/// along a geodesic of length `d`.
fn cycle_margin(relator_lengths: &[usize], d: usize) -> usize {
    relator_lengths
        .iter()
        .filter(|&&l| l.div_ceil(6) <= d)
        .map(|&l| (l - l.div_ceil(6)) / 2)
        .max()
        .unwrap_or(0)
}

struct CycleData {
    words: Vec<Word>,
    lengths: Vec<usize>,
}

impl CycleData {
    fn new(p: &Presentation) -> Self {
        CycleData {
            words: symmetrize(p).distinct_words,
            lengths: p.relators().iter().map(Word::len).collect(),
        }
    }
}

fn centroid_with(
    ball: &BallGraph,
    cycles: &CycleData,
    x: usize,
    y: usize,
    to_y: &[u32],
) -> Result<CentroidSet> {
    let geodesic = shortlex_geodesic_with(ball, x, y, to_y)?;
    let d = geodesic.label.len();
    let far = geodesic.vertices.iter().map(|&v| ball.dist(v)).max().unwrap_or(0);
    let need = far + cycle_margin(&cycles.lengths, d);
    if need > ball.radius {
        return Err(Error::BallTooSmall {
            radius: ball.radius,
            need,
        });
    }
    let mut on_path: HashSet<(usize, u8)> = HashSet::new();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let mut vertices: HashSet<usize> = geodesic.vertices.iter().copied().collect();
    for (i, &l) in geodesic.label.letters().iter().enumerate() {
        let (u, v) = (geodesic.vertices[i], geodesic.vertices[i + 1]);
        on_path.insert(edge_id(u, l, v));
        edges.insert((u.min(v), u.max(v)));
    }
    let mut count = 0;
    let mut seen_cycles: HashSet<Vec<(usize, u8)>> = HashSet::new();
    if d > 0 {
        for &start in &geodesic.vertices {
            for w in &cycles.words {
                let mut path = vec![start];
                let mut ids = Vec::with_capacity(w.len());
                let mut cur = start;
                let mut closed = true;
                for &l in w.letters() {
                    match ball.neighbor(cur, l) {
                        Some(t) => {
                            ids.push(edge_id(cur, l, t));
                            path.push(t);
                            cur = t;
                        }
                        None => {
                            closed = false;
                            break;
                        }
                    }
                }
                if !closed || cur != start {
                    continue;
                }
                let mut distinct = ids.clone();
                distinct.sort_unstable();
                distinct.dedup();
                let common = distinct.iter().filter(|e| on_path.contains(e)).count();
                if 6 * common < w.len() {
                    continue;
                }
                if seen_cycles.insert(distinct) {
                    count += 1;
                }
                for pair in path.windows(2) {
                    edges.insert((pair[0].min(pair[1]), pair[0].max(pair[1])));
                }
                vertices.extend(path);
            }
        }
    }
    let mut vertices: Vec<usize> = vertices.into_iter().collect();
    vertices.sort_unstable();
    let mut edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
    edges.sort_unstable();
    Ok(CentroidSet {
        x,
        y,
        geodesic,
        vertices,
        edges,
        cycles: count,
    })
}

/// `C(x, y)` computed inside `ball`.
pub fn centroid_set(ball: &BallGraph, p: &Presentation, x: usize, y: usize) -> Result<CentroidSet> {
    let to_y = ball.distances_from(y);
    centroid_with(ball, &CycleData::new(p), x, y, &to_y)
}

/// Ball radius needed by [`check_cr`] for test radius `r_test`.
pub fn cr_required_radius(p: &Presentation, r_test: usize) -> usize {
    let lengths: Vec<usize> = p.relators().iter().map(Word::len).collect();
    (2 * r_test).max(r_test + cycle_margin(&lengths, r_test))
}

/// Which centroid-set property failed.
#[derive(Clone, Debug, Serialize)]
pub struct CrViolation {
    /// One of `a`, `b`, `c`, `d`.
    pub property: char,
    pub elements: Vec<String>,
    pub detail: String,
}

/// Outcome of the exhaustive centroid-set verification.
#[derive(Clone, Debug, Serialize)]
pub struct CrReport {
    pub passes: bool,
    pub r_test: usize,
    pub ball_radius: usize,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    /// For each `r ≤ r_test`, the largest `|C(x,y) ∩ B(x,r)|` seen.
    pub max_ball_intersection: Vec<usize>,
    /// Largest `diam C(x,y) / d(x,y)` seen, as `(diameter, distance)`.
    pub worst_diameter: Option<(usize, usize)>,
    pub violation: Option<CrViolation>,
}

/// Elements of `C(e, u)` translated by `t`, restricted to `within`.
fn translated_members(
    ball: &BallGraph,
    strategy: &WordProblemStrategy,
    t: usize,
    set: &CentroidSet,
    within: &[usize],
) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::new();
    for &p in &set.vertices {
        match ball.walk(t, ball.rep(p)) {
            Some(v) => {
                if within.contains(&v) {
                    out.push(v);
                }
            }
            None => {
                let w = ball.rep(t).concat(ball.rep(p));
                for &q in within {
                    if !out.contains(&q) && strategy.are_equal(&w, ball.rep(q))? {
                        out.push(q);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Checks the centroid-set properties (a)–(d) with `Q(r) = (2r+1)^2` and
/// `R(r) = 5r`. By equivariance the first point is the identity: pairs are
/// `(e, y)` with `|y| ≤ r_test`, triples are `(e, y, z)` with pairwise
/// distances at most `r_test`. Diameters use in-subgraph distances, which
/// bound the group distance from above.
pub fn check_cr(ball: &BallGraph, p: &Presentation, r_test: usize) -> Result<CrReport> {
    let need = cr_required_radius(p, r_test);
    if ball.radius < need {
        return Err(Error::BallTooSmall {
            radius: ball.radius,
            need,
        });
    }
    let strategy = WordProblemStrategy::for_presentation(p)?;
    let cycles = CycleData::new(p);
    let inner: Vec<usize> = (0..ball.ball_size(r_test)).collect();
    let sets: Vec<CentroidSet> = inner
        .par_iter()
        .map(|&y| centroid_with(ball, &cycles, 0, y, &ball.distances_from(y)))
        .collect::<Result<_>>()?;
    let fmt = |v: usize| ball.rep(v).compact();

    let mut report = CrReport {
        passes: true,
        r_test,
        ball_radius: ball.radius,
        pairs_checked: 0,
        triples_checked: 0,
        max_ball_intersection: vec![0; r_test + 1],
        worst_diameter: None,
        violation: None,
    };
    let fail = |report: &mut CrReport, property: char, elements: Vec<String>, detail: String| {
        if report.violation.is_none() {
            report.passes = false;
            report.violation = Some(CrViolation {
                property,
                elements,
                detail,
            });
        }
    };

    for (y, c) in inner.iter().copied().zip(&sets) {
        report.pairs_checked += 1;
        if !c.contains(0) || !c.contains(y) {
            fail(&mut report, 'a', vec![String::new(), fmt(y)], "endpoint missing".into());
        }
        for r in 0..=r_test {
            let k = c.vertices.iter().filter(|&&v| ball.dist(v) <= r).count();
            report.max_ball_intersection[r] = report.max_ball_intersection[r].max(k);
            if k > (2 * r + 1).pow(2) {
                fail(
                    &mut report,
                    'c',
                    vec![String::new(), fmt(y)],
                    format!("|C ∩ B(e,{r})| = {k} > {}", (2 * r + 1).pow(2)),
                );
            }
        }
        let d = ball.dist(y);
        if d > 0 {
            let diam = c.internal_diameter();
            let worse = match report.worst_diameter {
                None => true,
                Some((a, b)) => diam * b > a * d,
            };
            if worse {
                report.worst_diameter = Some((diam, d));
            }
            if diam > 5 * d {
                fail(
                    &mut report,
                    'd',
                    vec![String::new(), fmt(y)],
                    format!("diameter {diam} > 5·{d}"),
                );
            }
        }
    }

    let inverse_of: Vec<usize> = inner
        .iter()
        .map(|&z| ball.locate(&ball.rep(z).inverse()).expect("inverse lies in the ball"))
        .collect();
    let triples: Vec<(usize, Option<CrViolation>)> = inner
        .par_iter()
        .map(|&y| {
            let mut checked = 0;
            let y_inv = ball.rep(y).inverse();
            for &z in &inner {
                let u = ball
                    .locate(&y_inv.concat(ball.rep(z)))
                    .expect("ball radius covers pairwise products");
                if ball.dist(u) > r_test {
                    continue;
                }
                checked += 1;
                let first = &sets[y].vertices;
                let second = translated_members(ball, &strategy, y, &sets[u], first)?;
                let third = translated_members(ball, &strategy, z, &sets[inverse_of[z]], &second)?;
                if third.is_empty() {
                    return Ok((
                        checked,
                        Some(CrViolation {
                            property: 'b',
                            elements: vec![String::new(), fmt(y), fmt(z)],
                            detail: "empty triple intersection".into(),
                        }),
                    ));
                }
            }
            Ok((checked, None))
        })
        .collect::<Result<_>>()?;
    for (checked, violation) in triples {
        report.triples_checked += checked;
        if let Some(v) = violation {
            fail(&mut report, v.property, v.elements, v.detail);
        }
    }
    Ok(report)
}

/// Exact `p(2n)`, `n = 1, 2, ...`, for a presentation whose equality is
/// decidable: the radial formula for free groups, otherwise the smallest
/// ball that determines the requested value.
#[derive(Clone, Debug)]
pub struct ReturnSeries {
    source: SeriesSource,
    values: Vec<BigRational>,
    vertex_limit: usize,
}

#[derive(Clone, Debug)]
enum SeriesSource {
    Free(usize),
    Ball {
        strategy: WordProblemStrategy,
        radius: usize,
    },
}

impl ReturnSeries {
    pub fn new(p: &Presentation) -> Result<Self> {
        Self::with_limit(p, DEFAULT_VERTEX_LIMIT)
    }

    pub fn with_limit(p: &Presentation, vertex_limit: usize) -> Result<Self> {
        if p.rank() == 0 {
            return Err(Error::InvalidArgument("empty generating set".into()));
        }
        let source = if p.is_free() {
            SeriesSource::Free(p.rank())
        } else {
            SeriesSource::Ball {
                strategy: WordProblemStrategy::dehn(p)?,
                radius: 0,
            }
        };
        Ok(ReturnSeries {
            source,
            values: Vec::new(),
            vertex_limit,
        })
    }

    /// Number of values computed so far.
    pub fn known(&self) -> usize {
        self.values.len()
    }

    fn extend_to(&mut self, n: usize) -> Result<()> {
        if n <= self.values.len() {
            return Ok(());
        }
        match &mut self.source {
            SeriesSource::Free(rank) => {
                let target = n.max(2 * self.values.len());
                let counts = free_radial_counts(*rank, 2 * target)?;
                let s = BigUint::from(2 * *rank as u64);
                self.values = (1..=target)
                    .map(|m| {
                        BigRational::new(counts[2 * m].clone().into(), Pow::pow(&s, 2 * m).into())
                    })
                    .collect();
            }
            SeriesSource::Ball { strategy, radius } => {
                let ball = build_ball_with_limit(strategy, n + 1, self.vertex_limit)?;
                *radius = ball.radius;
                let steps = valid_return_steps(ball.radius);
                let counts = return_counts(&ball, steps);
                let s = BigUint::from(ball.letters as u64);
                self.values = (1..=steps / 2)
                    .map(|m| {
                        BigRational::new(counts[2 * m].clone().into(), Pow::pow(&s, 2 * m).into())
                    })
                    .collect();
            }
        }
        Ok(())
    }

    /// `p(2n)` for `n ≥ 1`.
    pub fn p2n(&mut self, n: usize) -> Result<BigRational> {
        assert!(n >= 1);
        self.extend_to(n)?;
        Ok(self.values[n - 1].clone())
    }

    /// `[p(2), p(4), ..., p(2 n_max)]`.
    pub fn returns_up_to(&mut self, n_max: usize) -> Result<Vec<BigRational>> {
        self.extend_to(n_max)?;
        Ok(self.values[..n_max].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pres(g: &str, r: &[&str]) -> Presentation {
        Presentation::from_strs(g, r).unwrap()
    }

    fn ball_of(p: &Presentation, r: usize) -> BallGraph {
        build_ball(&WordProblemStrategy::for_presentation(p).unwrap(), r).unwrap()
    }

    fn genus2() -> Presentation {
        pres("a, b, c, d", &["abABcdCD"])
    }

    fn rat(n: u64, d: u64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Counts trivial words of length `n` by brute force.
    fn brute_returns(strategy: &WordProblemStrategy, n: usize) -> u64 {
        let s = 2 * strategy.rank();
        let total = s.pow(n as u32);
        (0..total)
            .filter(|&mut_i| {
                let mut i = mut_i;
                let mut w = Word::empty();
                for _ in 0..n {
                    w.push(Letter::from_code((i % s) as u8));
                    i /= s;
                }
                strategy.is_trivial(&w).unwrap()
            })
            .count() as u64
    }

    #[test]
    fn ball_sizes() {
        let f2 = Presentation::free(2);
        assert_eq!(ball_of(&f2, 1).len(), 5);
        assert_eq!(ball_of(&f2, 2).len(), 17);
        for r in 0..6 {
            assert_eq!(ball_of(&f2, r).len(), 2 * 3usize.pow(r as u32) - 1);
        }
        let g = ball_of(&genus2(), 2);
        assert_eq!(g.len(), 65);
        assert_eq!(g.len(), ball_of(&Presentation::free(4), 2).len());
        let z7 = ball_of(&pres("a", &["a^7"]), 5);
        assert_eq!(z7.len(), 7);
        assert_eq!(z7.sphere_sizes(), vec![1, 2, 2, 2, 0, 0]);
    }

    #[test]
    fn ball_invariants_hold() {
        for p in [genus2(), pres("a", &["a^7"]), pres("a, b", &["a"]), Presentation::free(2)] {
            let b = ball_of(&p, 4);
            assert!(b.check_invariants());
            let strat = WordProblemStrategy::for_presentation(&p).unwrap();
            for v in 0..b.len() {
                assert_eq!(b.rep(v).len(), b.dist(v));
                for l in p.alphabet().letters() {
                    if let Some(t) = b.neighbor(v, l) {
                        let mut w = b.rep(v).clone();
                        w.push(l);
                        assert!(strat.are_equal(&w, b.rep(t)).unwrap());
                    }
                }
            }
            for lvl in 1..=b.radius() {
                let r = b.level(lvl);
                for v in r.start + 1..r.end {
                    assert_eq!(shortlex_cmp(b.rep(v - 1), b.rep(v)), Ordering::Less);
                }
            }
        }
    }

    #[test]
    fn cube_ball_matches_lattice() {
        // Z^2 with S = {±(1,1), ±(1,-1)}: the ball of radius r has 2r²+2r+1 points.
        let s = WordProblemStrategy::zd_cube(2).unwrap();
        for r in 0..6 {
            assert_eq!(build_ball(&s, r).unwrap().len(), 2 * r * r + 2 * r + 1);
        }
    }

    #[test]
    fn enumeration_strategy_is_rejected() {
        let s = WordProblemStrategy::Enumeration {
            presentation: Presentation::free(1),
            budget: 10,
        };
        assert!(matches!(build_ball(&s, 2), Err(Error::Strategy(_))));
        let s = WordProblemStrategy::for_presentation(&Presentation::free(2)).unwrap();
        assert!(matches!(build_ball_with_limit(&s, 5, 100), Err(Error::VertexLimit(100))));
    }

    #[test]
    fn known_return_probabilities() {
        let t = walk_counts(&ball_of(&Presentation::free(2), 3), 4);
        assert_eq!(t.return_probability(2).unwrap(), rat(1, 4));
        assert_eq!(t.return_probability(4).unwrap(), rat(7, 64));
        assert!(t.return_probability(5).is_err());
        let z = walk_counts(&ball_of(&Presentation::free(1), 2), 2);
        assert_eq!(z.return_probability(2).unwrap(), rat(1, 2));
        assert_eq!(integer_line_p2n(1), rat(1, 2));
        assert_eq!(integer_line_p2n(3), rat(20, 64));
    }

    #[test]
    fn radial_oracle() {
        assert_eq!(free_radial_p(2, 2).unwrap(), rat(1, 4));
        assert_eq!(free_radial_p(2, 4).unwrap(), rat(7, 64));
        assert_eq!(free_radial_p(2, 0).unwrap(), rat(1, 1));
        assert_eq!(free_radial_p(2, 3).unwrap(), rat(0, 1));
        assert!(free_radial_counts(0, 4).is_err());
        for k in 1..=3 {
            let b = ball_of(&Presentation::free(k), 7);
            let t = walk_counts(&b, 12);
            for n in 0..=12 {
                assert_eq!(
                    free_radial_p(k, n).unwrap(),
                    t.return_probability(n).unwrap(),
                    "k={k} n={n}"
                );
            }
        }
    }

    #[test]
    fn walk_counts_match_brute_force() {
        for (p, n_max) in [(pres("a", &["a^7"]), 8), (genus2(), 4), (pres("a, b", &["a"]), 6)] {
            let s = WordProblemStrategy::for_presentation(&p).unwrap();
            let t = walk_counts(&ball_of(&p, 5), n_max);
            for n in 0..=n_max {
                assert_eq!(*t.return_count(n).unwrap(), BigUint::from(brute_returns(&s, n)));
            }
        }
    }

    #[test]
    fn conservation_and_supermultiplicativity() {
        let b = ball_of(&genus2(), 4);
        let t = walk_counts(&b, 6);
        for n in 0..=4 {
            assert_eq!(t.mass(n), Pow::pow(BigUint::from(8u32), n));
        }
        for m in 1..=2 {
            for n in 1..=3 - m {
                let lhs = t.return_probability(2 * m + 2 * n).unwrap();
                let rhs = t.return_probability(2 * m).unwrap() * t.return_probability(2 * n).unwrap();
                assert!(lhs >= rhs);
            }
            assert!(t.return_probability(2 * m).unwrap() > BigRational::zero());
        }
        assert!(t.distribution(5).is_err());
        assert_eq!(t.distribution(2).unwrap().len(), b.len());
    }

    #[test]
    fn return_validity_radius_is_conservative() {
        let p = genus2();
        let small = walk_counts(&ball_of(&p, 3), 4);
        let large = walk_counts(&ball_of(&p, 4), 4);
        for n in 0..=4 {
            assert_eq!(small.return_count(n).unwrap(), large.return_count(n).unwrap());
        }
    }

    #[test]
    fn geodesic_examples() {
        let f2 = Presentation::free(2);
        let b = ball_of(&f2, 3);
        let ab = b.locate(&f2.alphabet().parse_word("ab").unwrap()).unwrap();
        let a = b.locate(&f2.alphabet().parse_word("a").unwrap()).unwrap();
        let g = shortlex_geodesic(&b, 0, ab).unwrap();
        assert_eq!(g.vertices, vec![0, a, ab]);
        assert_eq!(shortlex_geodesic(&b, ab, ab).unwrap().vertices, vec![ab]);

        let z7 = pres("a", &["a^7"]);
        let b = ball_of(&z7, 4);
        let a4 = b.locate(&z7.alphabet().parse_word("a^4").unwrap()).unwrap();
        assert_eq!(shortlex_geodesic(&b, 0, a4).unwrap().label.compact(), "AAA");
    }

    #[test]
    fn centroid_examples() {
        let f2 = Presentation::free(2);
        let b = ball_of(&f2, 3);
        let w = b.locate(&f2.alphabet().parse_word("abA").unwrap()).unwrap();
        let c = centroid_set(&b, &f2, 0, w).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.cycles, 0);
        assert_eq!(centroid_set(&b, &f2, w, w).unwrap().vertices, vec![w]);

        let g = genus2();
        let b = ball_of(&g, 6);
        let word = |t: &str| b.locate(&g.alphabet().parse_word(t).unwrap()).unwrap();
        let y = word("abAB");
        assert_eq!(b.rep(y).compact(), "abAB");
        assert_eq!(word("dcDC"), y);
        // A geodesic of length 4 may carry cycles reaching distance 7.
        assert!(matches!(
            centroid_set(&b, &g, 0, y),
            Err(Error::BallTooSmall { need: 7, .. })
        ));
        let c = centroid_set(&b, &g, 0, word("abA")).unwrap();
        assert_eq!(c.cycles, 1);
        assert_eq!(c.len(), 8);
        assert!(c.contains(y) && c.contains(word("d")));
        assert!(c.internal_diameter() <= 5 * 3);
    }

    #[test]
    fn cr_radius() {
        assert_eq!(cr_required_radius(&genus2(), 3), 6);
        assert_eq!(cr_required_radius(&pres("a, b", &["(a^3b^3)^7"]), 3), 6);
        assert_eq!(cr_required_radius(&Presentation::free(2), 2), 4);
    }

    #[test]
    fn cr_free_group() {
        let f2 = Presentation::free(2);
        let b = ball_of(&f2, 4);
        let r = check_cr(&b, &f2, 2).unwrap();
        assert!(r.passes);
        assert_eq!(r.pairs_checked, 17);
        // Geodesic only: C ∩ B(e, r) has r + 1 points.
        assert_eq!(r.max_ball_intersection, vec![1, 2, 3]);
        assert!(check_cr(&ball_of(&f2, 3), &f2, 2).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let p = genus2();
        let b = ball_of(&p, 3);
        let bytes = b.to_bytes();
        assert_eq!(bytes[0], CACHE_VERSION);
        let back = BallGraph::from_bytes(&bytes).unwrap();
        assert!(back.same_graph(&b));
        assert_eq!(back.sphere_sizes(), b.sphere_sizes());
        assert!(BallGraph::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(BallGraph::from_bytes(&[9, 0, 0, 0]).is_err());

        let dir = std::env::temp_dir().join(format!("grouprho-cache-{}", std::process::id()));
        let first = build_ball_cached(&p, 2, &dir).unwrap();
        assert!(cache_path(&dir, &p, 2).exists());
        let second = build_ball_cached(&p, 2, &dir).unwrap();
        assert!(first.same_graph(&second));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn return_series_sources() {
        let mut f = ReturnSeries::new(&Presentation::free(2)).unwrap();
        assert_eq!(f.p2n(2).unwrap(), rat(7, 64));
        let mut g = ReturnSeries::new(&pres("a, b", &["(a^3b^3)^7"])).unwrap();
        assert_eq!(g.returns_up_to(3).unwrap(), f.returns_up_to(3).unwrap());
        assert!(ReturnSeries::new(&pres("a, b", &["aabb", "aab"])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn locate_agrees_with_strategy(word in proptest::collection::vec(0u8..8, 0..6)) {
            let g = genus2();
            let b = ball_of(&g, 5);
            let strat = WordProblemStrategy::for_presentation(&g).unwrap();
            let w = Word::from_letters(word.into_iter().map(Letter::from_code).collect());
            let v = b.locate(&w).unwrap();
            prop_assert!(strat.are_equal(&w, b.rep(v)).unwrap());
            prop_assert!(b.dist(v) <= w.len());
        }
    }
}
