//! The free product `K * F(X)`, its projections to `K` and `G`, penalised
//! pull-backs of quasimorphisms, and finite pieces of the relative Cayley
//! graph `Γ(G, K ⊔ X)`.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{membership, ElementIndex, GroupContext, SubgroupSpec};
use crate::par;
use crate::qm::Quasimorphism;
use crate::rat::{self, Rat};
use crate::word::Word;

/// Relative generating data: the ambient group, the subgroup `K`, the
/// relative generators `X` (closed under inverses) and a finite pool of
/// `K`-elements used for graph construction.
#[derive(Clone, Debug)]
pub struct RelAlphabet {
    ambient: Arc<GroupContext>,
    k: SubgroupSpec,
    x: Vec<Word>,
    x_inv: Vec<usize>,
    k_pool: Vec<Word>,
}

impl RelAlphabet {
    pub fn new(ambient: Arc<GroupContext>, k: SubgroupSpec, x: Vec<Word>, k_pool: Vec<Word>) -> Result<Self> {
        let mut x_inv = Vec::with_capacity(x.len());
        for (i, xi) in x.iter().enumerate() {
            ambient.alphabet().check(xi)?;
            if membership(&ambient, &k, xi)? {
                return Err(Error::InvalidRelAlphabet(format!("X entry `{}` lies in K", ambient.format(xi))));
            }
            let mut found = None;
            for (j, xj) in x.iter().enumerate() {
                if ambient.is_identity(&xi.mul(xj))? {
                    found = Some(j);
                    break;
                }
            }
            match found {
                Some(j) => x_inv.push(j),
                None => {
                    return Err(Error::InvalidRelAlphabet(format!(
                        "inverse of X entry {i} (`{}`) is missing",
                        ambient.format(xi)
                    )))
                }
            }
        }
        for kw in &k_pool {
            ambient.alphabet().check(kw)?;
            if !membership(&ambient, &k, kw)? {
                return Err(Error::KLetterNotInSubgroup(ambient.format(kw)));
            }
        }
        let k_pool = k_pool.into_iter().map(|w| w.free_reduce()).collect();
        Ok(RelAlphabet { ambient, k, x: x.into_iter().map(|w| w.free_reduce()).collect(), x_inv, k_pool })
    }

    pub fn ambient(&self) -> &Arc<GroupContext> {
        &self.ambient
    }

    pub fn subgroup(&self) -> &SubgroupSpec {
        &self.k
    }

    pub fn x(&self) -> &[Word] {
        &self.x
    }

    pub fn x_inverse(&self, i: usize) -> usize {
        self.x_inv[i]
    }

    pub fn k_pool(&self) -> &[Word] {
        &self.k_pool
    }

    pub fn in_k(&self, w: &Word) -> Result<bool> {
        membership(&self.ambient, &self.k, w)
    }

    /// All reduced X-words (index sequences without `i, inv(i)` adjacent)
    /// of length exactly `m`, in lexicographic order.
    pub fn x_words(&self, m: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..m {
            let mut next = Vec::with_capacity(out.len() * self.x.len());
            for w in &out {
                for i in 0..self.x.len() {
                    if w.last().is_none_or(|&l| self.x_inv[l] != i) {
                        let mut v = w.clone();
                        v.push(i);
                        next.push(v);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Ambient word of an X-index sequence.
    pub fn x_word_value(&self, idx: &[usize]) -> Word {
        let mut w = Word::identity();
        for &i in idx {
            w = w.mul(&self.x[i]);
        }
        w
    }

    /// Normal form of `w·k` with `w` an X-index sequence and `k` a K-element.
    pub fn rel_word(&self, idx: &[usize], k: Word) -> RelWord {
        let mut s: Vec<Syllable> = idx.iter().map(|&i| Syllable::X(i)).collect();
        s.push(Syllable::K(k));
        self.normal_form_unchecked(&RelWord::new(s))
    }

    /// Normal form; every K-letter must lie in K.
    pub fn normal_form(&self, a: &RelWord) -> Result<RelWord> {
        for s in &a.syllables {
            match s {
                Syllable::K(w) => {
                    if !self.in_k(w)? {
                        return Err(Error::KLetterNotInSubgroup(self.ambient.format(w)));
                    }
                }
                Syllable::X(i) if *i >= self.x.len() => {
                    return Err(Error::InvalidRelAlphabet(format!("X index {i} out of range")))
                }
                Syllable::X(_) => {}
            }
        }
        Ok(self.normal_form_unchecked(a))
    }

    /// Stack-based normal form: merges adjacent K-letters, drops identity
    /// K-letters and cancels `x·x⁻¹`.
    pub fn normal_form_unchecked(&self, a: &RelWord) -> RelWord {
        let mut stack: Vec<Syllable> = Vec::with_capacity(a.syllables.len());
        for s in &a.syllables {
            match s {
                Syllable::K(w) => {
                    let merged = match stack.last() {
                        Some(Syllable::K(v)) => {
                            let m = v.mul(w);
                            stack.pop();
                            m
                        }
                        _ => w.free_reduce(),
                    };
                    if !self.is_trivial(&merged) {
                        stack.push(Syllable::K(merged));
                    }
                }
                Syllable::X(i) => match stack.last() {
                    Some(Syllable::X(j)) if self.x_inv[*j] == *i => {
                        stack.pop();
                    }
                    _ => stack.push(Syllable::X(*i)),
                },
            }
        }
        RelWord { syllables: stack }
    }

    fn is_trivial(&self, w: &Word) -> bool {
        w.is_empty() || self.ambient.is_identity(w).unwrap_or(false)
    }

    /// Product of the K-letters in order.
    pub fn eta(&self, a: &RelWord) -> Word {
        a.eta()
    }

    /// Image in `G`.
    pub fn theta(&self, a: &RelWord) -> Word {
        let mut w = Word::identity();
        for s in &a.syllables {
            match s {
                Syllable::K(k) => w = w.mul(k),
                Syllable::X(i) => w = w.mul(&self.x[*i]),
            }
        }
        w
    }

    pub fn format(&self, a: &RelWord) -> String {
        if a.syllables.is_empty() {
            return "1".into();
        }
        a.syllables
            .iter()
            .map(|s| match s {
                Syllable::K(k) => format!("[{}]", self.ambient.format(k)),
                Syllable::X(i) => self.ambient.format(&self.x[*i]),
            })
            .collect::<Vec<_>>()
            .join(" · ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Syllable {
    K(Word),
    X(usize),
}

/// A word over `K ⊔ X`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RelWord {
    pub syllables: Vec<Syllable>,
}

impl RelWord {
    pub fn new(syllables: Vec<Syllable>) -> Self {
        RelWord { syllables }
    }

    pub fn empty() -> Self {
        RelWord::default()
    }

    pub fn k(w: Word) -> Self {
        RelWord { syllables: vec![Syllable::K(w)] }
    }

    /// `|a|`: number of syllables.
    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    /// `|a|_X`: number of X-letters.
    pub fn x_count(&self) -> usize {
        self.syllables.iter().filter(|s| matches!(s, Syllable::X(_))).count()
    }

    pub fn concat(&self, other: &RelWord) -> RelWord {
        let mut s = self.syllables.clone();
        s.extend(other.syllables.iter().cloned());
        RelWord { syllables: s }
    }

    pub fn inverse(&self, alph: &RelAlphabet) -> RelWord {
        RelWord {
            syllables: self
                .syllables
                .iter()
                .rev()
                .map(|s| match s {
                    Syllable::K(k) => Syllable::K(k.inverse()),
                    Syllable::X(i) => Syllable::X(alph.x_inv[*i]),
                })
                .collect(),
        }
    }

    pub fn prefix(&self, n: usize) -> RelWord {
        RelWord { syllables: self.syllables[..n].to_vec() }
    }

    pub fn subword(&self, i: usize, j: usize) -> RelWord {
        RelWord { syllables: self.syllables[i..j].to_vec() }
    }

    pub fn eta(&self) -> Word {
        let mut w = Word::identity();
        for s in &self.syllables {
            if let Syllable::K(k) = s {
                w = w.mul(k);
            }
        }
        w
    }
}

/// `φ̃(a) = φ(η(a))`.
pub fn phi_tilde(phi: &Quasimorphism, a: &RelWord) -> Result<Rat> {
    phi.eval(&a.eta())
}

/// `φ̃(a)` without the domain check; K-letters are trusted.
pub fn phi_tilde_unchecked(phi: &Quasimorphism, a: &RelWord) -> Result<Rat> {
    phi.eval_unchecked(&a.eta())
}

/// `φ̃_C(a) = φ̃(a) + C·|a|_X`.
pub fn phi_tilde_c(phi: &Quasimorphism, c: Rat, a: &RelWord) -> Result<Rat> {
    Ok(phi_tilde(phi, a)? + c * rat::int(a.x_count() as i64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeLabel {
    /// Index into the K-pool.
    K(usize),
    /// Index into X.
    X(usize),
}

/// Finite ball of `Γ(G, X ⊔ K_pool)` around the identity.
#[derive(Clone, Debug)]
pub struct RelBall {
    pub radius: usize,
    pub vertices: Vec<Word>,
    pub depth: Vec<usize>,
    pub adjacency: Vec<Vec<(usize, EdgeLabel)>>,
    index: ElementIndex,
    ambient: Arc<GroupContext>,
}

pub fn rel_ball(alph: &RelAlphabet, radius: usize, budget: usize) -> Result<RelBall> {
    let ctx = alph.ambient.clone();
    let gens: Vec<(Word, EdgeLabel)> = alph
        .x
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), EdgeLabel::X(i)))
        .chain(alph.k_pool.iter().enumerate().map(|(i, w)| (w.clone(), EdgeLabel::K(i))))
        .collect();
    let mut index = ElementIndex::new();
    index.insert(&ctx, Word::identity())?;
    let mut depth = vec![0];
    let mut frontier = vec![0usize];
    for r in 1..=radius {
        let fwords: Vec<Word> = frontier.iter().map(|&i| index.reps()[i].clone()).collect();
        let cands: Vec<Vec<Word>> = par::map(&fwords, |w| gens.iter().map(|(g, _)| w.mul(g)).collect());
        let mut next = Vec::new();
        for w in cands.into_iter().flatten() {
            let (i, fresh) = index.insert(&ctx, w)?;
            if fresh {
                if index.len() > budget {
                    return Err(Error::BudgetExceeded { what: format!("relative ball of radius {radius}"), limit: budget });
                }
                depth.push(r);
                next.push(i);
            }
        }
        frontier = next;
    }
    let vertices = index.reps().to_vec();
    let adjacency = par::try_map(&vertices, |v| {
        let mut out = Vec::new();
        for (g, label) in &gens {
            if let Some(j) = index.get(&ctx, &v.mul(g))? {
                out.push((j, *label));
            }
        }
        Ok(out)
    })?;
    Ok(RelBall { radius, vertices, depth, adjacency, index, ambient: ctx })
}

pub const UNREACHABLE: usize = usize::MAX;

impl RelBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, w: &Word) -> Result<usize> {
        self.index.get(&self.ambient, w)?.ok_or_else(|| Error::VertexNotInBall(self.ambient.format(w)))
    }

    pub fn find(&self, w: &Word) -> Result<Option<usize>> {
        self.index.get(&self.ambient, w)
    }

    /// BFS distances from a set of sources, inside the ball.
    pub fn bfs(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn bfs_parents(&self, s: usize) -> Vec<usize> {
        let mut parent = vec![UNREACHABLE; self.len()];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if parent[v] == UNREACHABLE {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    /// Geodesic from `u` to `v` inside the ball, if connected.
    pub fn geodesic(&self, u: usize, v: usize) -> Option<Vec<usize>> {
        let parent = self.bfs_parents(u);
        if parent[v] == UNREACHABLE {
            return None;
        }
        let mut path = vec![v];
        let mut c = v;
        while c != u {
            c = parent[c];
            path.push(c);
        }
        path.reverse();
        Some(path)
    }

    /// `(src, dst, label_kind, label)` rows with `src < dst` for X-edges and
    /// all directed K-edges deduplicated the same way.
    pub fn edge_list(&self, alph: &RelAlphabet) -> Vec<(usize, usize, &'static str, String)> {
        let mut rows = Vec::new();
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &(v, label) in adj {
                if u < v {
                    let (kind, text) = match label {
                        EdgeLabel::X(i) => ("X", self.ambient.format(&alph.x[i])),
                        EdgeLabel::K(i) => ("K", self.ambient.format(&alph.k_pool[i])),
                    };
                    rows.push((u, v, kind, text));
                }
            }
        }
        rows
    }
}

/// Shortest path length inside the ball, or `None` if unreachable there.
pub fn graph_distance(ball: &RelBall, u: &Word, v: &Word) -> Result<Option<usize>> {
    let (i, j) = (ball.vertex(u)?, ball.vertex(v)?);
    let d = ball.bfs(&[i])[j];
    Ok((d != UNREACHABLE).then_some(d))
}

/// Largest distance from a point of one side of `(u, v, w)` to the union
/// of the other two sides, using BFS geodesics inside the ball.
pub fn triangle_slimness(ball: &RelBall, u: usize, v: usize, w: usize) -> Option<usize> {
    let sides = [ball.geodesic(u, v)?, ball.geodesic(v, w)?, ball.geodesic(w, u)?];
    let mut worst = 0;
    for s in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&t| t != s).flat_map(|t| sides[t].iter().copied()).collect();
        let dist = ball.bfs(&others);
        for &p in &sides[s] {
            if dist[p] == UNREACHABLE {
                return None;
            }
            worst = worst.max(dist[p]);
        }
    }
    Some(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaEstimate {
    #[serde(with = "rat::serde_rat")]
    pub delta: Rat,
    pub triangles: usize,
    pub ball_size: usize,
    pub radius: usize,
}

/// Slim-triangle estimate of δ from `samples` seeded random vertex
/// triples. Triangles whose sides leave the ball are skipped.
pub fn estimate_delta(ball: &RelBall, samples: usize, seed: u64) -> Result<DeltaEstimate> {
    if ball.radius < 3 {
        return Err(Error::InvalidParameter("estimate_delta needs radius at least 3".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = ball.len();
    let triples: Vec<(usize, usize, usize)> =
        (0..samples).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    let values = par::map(&triples, |&(u, v, w)| triangle_slimness(ball, u, v, w));
    let measured: Vec<usize> = values.into_iter().flatten().collect();
    Ok(DeltaEstimate {
        delta: rat::int(measured.iter().copied().max().unwrap_or(0) as i64),
        triangles: measured.len(),
        ball_size: n,
        radius: ball.radius,
    })
}

/// Distance oracle on group elements.
pub trait PathMetric {
    fn distance(&self, u: &Word, v: &Word) -> Result<Option<usize>>;
}

impl PathMetric for RelBall {
    fn distance(&self, u: &Word, v: &Word) -> Result<Option<usize>> {
        graph_distance(self, u, v)
    }
}

/// Exact word metric of `Γ(G, K ⊔ X)` for normal `K`. A path with X-word
/// `W` reaches `t` iff `θ(W)⁻¹t ∈ K`, and then costs `|W|` plus one
/// K-letter unless `θ(W) = t`.
#[derive(Clone, Debug)]
pub struct NormalRelMetric<'a> {
    pub alph: &'a RelAlphabet,
    pub max_x_length: usize,
}

impl NormalRelMetric<'_> {
    pub fn norm(&self, t: &Word) -> Result<Option<usize>> {
        let ctx = &self.alph.ambient;
        if ctx.is_identity(t)? {
            return Ok(Some(0));
        }
        let mut best: Option<usize> = None;
        for m in 0..=self.max_x_length {
            if best.is_some_and(|b| b <= m) {
                break;
            }
            for idx in self.alph.x_words(m) {
                let rest = t.mul(&self.alph.x_word_value(&idx).inverse());
                if self.alph.in_k(&rest)? {
                    let cost = if ctx.is_identity(&rest)? { m } else { m + 1 };
                    best = Some(best.map_or(cost, |b: usize| b.min(cost)));
                }
            }
        }
        Ok(best)
    }
}

impl PathMetric for NormalRelMetric<'_> {
    fn distance(&self, u: &Word, v: &Word) -> Result<Option<usize>> {
        self.norm(&u.inverse().mul(v))
    }
}

/// Whether every subpath of `path` (a vertex sequence) has length at most
/// `λ·d(endpoints) + μ`. Consecutive vertices must be at distance ≤ 1.
pub fn is_quasigeodesic(metric: &dyn PathMetric, path: &[Word], lambda: Rat, mu: Rat) -> Result<bool> {
    for i in 1..path.len() {
        match metric.distance(&path[i - 1], &path[i])? {
            Some(d) if d <= 1 => {}
            _ => return Err(Error::PathBroken(i - 1, i)),
        }
    }
    for i in 0..path.len() {
        for j in i + 2..path.len() {
            let Some(d) = metric.distance(&path[i], &path[j])? else { continue };
            if rat::int((j - i) as i64) > lambda * rat::int(d as i64) + mu {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Vertex sequence `θ(a₁⋯a_i)` for `i = 0..=|a|`.
pub fn path_of(alph: &RelAlphabet, a: &RelWord) -> Vec<Word> {
    (0..=a.len()).map(|i| alph.theta(&a.prefix(i))).collect()
}

/// Seeded pairs of normal-form words with at most `max_len` syllables drawn
/// uniformly from X and the pool.
pub fn sample_rel_pairs(alph: &RelAlphabet, count: usize, max_len: usize, seed: u64) -> Vec<(RelWord, RelWord)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = alph.x.len() + alph.k_pool.len();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        if n == 0 {
            return RelWord::empty();
        }
        let len = rng.gen_range(0..=max_len);
        let syl = (0..len)
            .map(|_| {
                let i = rng.gen_range(0..n);
                match i.checked_sub(alph.x.len()) {
                    None => Syllable::X(i),
                    Some(j) => Syllable::K(alph.k_pool[j].clone()),
                }
            })
            .collect();
        alph.normal_form_unchecked(&RelWord::new(syl))
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    pub(crate) fn scenario_a() -> RelAlphabet {
        let g = Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()));
        let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
        let k = SubgroupSpec::kernel(&g, z.clone(), vec![z.parse("t").unwrap(), Word::identity()]).unwrap();
        let x = vec![g.parse("a").unwrap(), g.parse("a^-1").unwrap()];
        let pool = vec![g.parse("b").unwrap(), g.parse("b^-1").unwrap()];
        RelAlphabet::new(g, k, x, pool).unwrap()
    }

    fn kw(alph: &RelAlphabet, s: &str) -> Syllable {
        Syllable::K(alph.ambient().parse(s).unwrap())
    }

    #[test]
    fn alphabet_validation() {
        let a = scenario_a();
        let g = a.ambient().clone();
        let bad = RelAlphabet::new(g.clone(), a.subgroup().clone(), vec![g.parse("a").unwrap()], vec![]);
        assert!(matches!(bad, Err(Error::InvalidRelAlphabet(_))));
        let bad = RelAlphabet::new(g.clone(), a.subgroup().clone(), a.x().to_vec(), vec![g.parse("a").unwrap()]);
        assert!(matches!(bad, Err(Error::KLetterNotInSubgroup(_))));
    }

    #[test]
    fn normal_form_examples() {
        let a = scenario_a();
        let w = RelWord::new(vec![kw(&a, "b"), Syllable::K(Word::identity()), Syllable::X(0), Syllable::X(1), kw(&a, "b")]);
        assert_eq!(a.normal_form(&w).unwrap(), RelWord::k(a.ambient().parse("b^2").unwrap()));
        let w = RelWord::new(vec![kw(&a, "b"), Syllable::X(0), Syllable::X(1), kw(&a, "b^-1")]);
        assert!(a.normal_form(&w).unwrap().is_empty());
        let n = RelWord::new(vec![kw(&a, "b"), Syllable::X(0), kw(&a, "b")]);
        assert_eq!(a.normal_form(&n).unwrap(), n);
        let bad = RelWord::new(vec![kw(&a, "a")]);
        assert!(matches!(a.normal_form(&bad), Err(Error::KLetterNotInSubgroup(_))));
    }

    #[test]
    fn projections() {
        let a = scenario_a();
        let g = a.ambient();
        let w = RelWord::new(vec![kw(&a, "b"), Syllable::X(0), kw(&a, "a b a^-1")]);
        assert_eq!(a.eta(&w), g.parse("b a b a^-1").unwrap());
        assert_eq!(a.theta(&RelWord::new(vec![kw(&a, "b"), Syllable::X(0)])), g.parse("b a").unwrap());
        assert_eq!(a.theta(&RelWord::empty()), Word::identity());
        assert_eq!(a.eta(&RelWord::new(vec![Syllable::X(0)])), Word::identity());
    }

    #[test]
    fn phi_tilde_examples() {
        let a = scenario_a();
        let phi = Quasimorphism::exponent_sum(a.ambient().clone(), a.subgroup().clone(), vec![rat::int(0), rat::int(1)])
            .unwrap();
        let w = RelWord::new(vec![kw(&a, "b"), Syllable::X(0), kw(&a, "b")]);
        assert_eq!(phi_tilde(&phi, &w).unwrap(), rat::int(2));
        let bx = RelWord::new(vec![kw(&a, "b"), Syllable::X(0)]);
        assert_eq!(phi_tilde_c(&phi, rat::int(7), &bx).unwrap(), rat::int(8));
        assert_eq!(phi_tilde_c(&phi, rat::int(7), &RelWord::empty()).unwrap(), rat::int(0));
    }

    #[test]
    fn rel_ball_and_distance() {
        let a = scenario_a();
        assert_eq!(rel_ball(&a, 0, 100).unwrap().len(), 1);
        let b1 = rel_ball(&a, 1, 100).unwrap();
        assert_eq!(b1.len(), 5);
        let b3 = rel_ball(&a, 3, 1000).unwrap();
        let g = a.ambient();
        let t = g.parse("a^2 b").unwrap();
        assert_eq!(graph_distance(&b3, &Word::identity(), &t).unwrap(), Some(3));
        assert_eq!(graph_distance(&b3, &t, &t).unwrap(), Some(0));
        assert!(matches!(graph_distance(&b1, &Word::identity(), &t), Err(Error::VertexNotInBall(_))));
    }

    #[test]
    fn exact_metric_examples() {
        let a = scenario_a();
        let g = a.ambient();
        let m = NormalRelMetric { alph: &a, max_x_length: 6 };
        assert_eq!(m.norm(&g.parse("a^2 b").unwrap()).unwrap(), Some(3));
        assert_eq!(m.norm(&g.parse("b a b^5 a^-1").unwrap()).unwrap(), Some(1));
        assert_eq!(m.norm(&g.parse("a b a").unwrap()).unwrap(), Some(3));
    }

    #[test]
    fn quasigeodesic_examples() {
        let a = scenario_a();
        let g = a.ambient();
        let m = NormalRelMetric { alph: &a, max_x_length: 6 };
        let p = |s: &str| g.parse(s).unwrap();
        assert!(is_quasigeodesic(&m, &[p("1"), p("a")], rat::int(3), rat::int(2)).unwrap());
        assert!(is_quasigeodesic(&m, &[p("1"), p("a"), p("a^2")], rat::int(1), rat::int(0)).unwrap());
        let back = [p("1"), p("a"), p("1"), p("a"), p("1"), p("a")];
        assert!(!is_quasigeodesic(&m, &back, rat::int(1), rat::int(0)).unwrap());
        assert!(matches!(
            is_quasigeodesic(&m, &[p("1"), p("a^2")], rat::int(3), rat::int(2)),
            Err(Error::PathBroken(0, 1))
        ));
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let g = Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()));
        let images = vec![g.parse("a").unwrap(), g.parse("b").unwrap()];
        let trivial = SubgroupSpec::kernel(&g, g.clone(), images).unwrap();
        let x = ["a", "a^-1", "b", "b^-1"].iter().map(|s| g.parse(s).unwrap()).collect();
        let alph = RelAlphabet::new(g, trivial, x, vec![]).unwrap();
        let ball = rel_ball(&alph, 4, 1000).unwrap();
        assert_eq!(estimate_delta(&ball, 300, 1).unwrap().delta, rat::int(0));
    }

    #[test]
    fn grid_is_not_thin() {
        let g = Arc::new(GroupContext::free_abelian(Alphabet::new(["x", "y"]).unwrap()));
        let images = vec![g.parse("x").unwrap(), g.parse("y").unwrap()];
        let trivial = SubgroupSpec::kernel(&g, g.clone(), images).unwrap();
        let x = ["x", "x^-1", "y", "y^-1"].iter().map(|s| g.parse(s).unwrap()).collect();
        let alph = RelAlphabet::new(g, trivial, x, vec![]).unwrap();
        let d3 = estimate_delta(&rel_ball(&alph, 3, 1000).unwrap(), 2000, 5).unwrap().delta;
        let d5 = estimate_delta(&rel_ball(&alph, 5, 1000).unwrap(), 2000, 5).unwrap().delta;
        assert!(d5 >= rat::int(2));
        assert!(d5 >= d3);
    }
}
