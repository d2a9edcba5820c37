//! Symmetrized relator sets, the C'(λ) piece check and Dehn's algorithm.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::GroupPresentation;
use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::word::{Letter, Word};

/// One element of the symmetrized set: a cyclic permutation of a relator or
/// of its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymEntry {
    pub word: Word,
    pub relator: usize,
    pub sign: i8,
    pub rotation: usize,
}

#[derive(Clone, Debug)]
pub struct SymmetrizedRelators {
    entries: Vec<SymEntry>,
    by_first: HashMap<Letter, Vec<usize>>,
}

impl SymmetrizedRelators {
    pub fn entries(&self) -> &[SymEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entries.iter().map(|e| &e.word)
    }
}

/// All cyclic permutations of the relators and their inverses, deduplicated
/// as words (first occurrence wins).
pub fn symmetrize_relators(p: &GroupPresentation) -> Result<SymmetrizedRelators> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, r) in p.relators().iter().enumerate() {
        if r.is_empty() {
            return Err(Error::EmptyRelator(i));
        }
        for (sign, base) in [(1i8, r.clone()), (-1i8, r.inverse())] {
            for k in 0..base.len() {
                let w = base.rotate(k);
                if seen.insert(w.clone()) {
                    entries.push(SymEntry { word: w, relator: i, sign, rotation: k });
                }
            }
        }
    }
    let mut by_first: HashMap<Letter, Vec<usize>> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        by_first.entry(e.word.letters()[0]).or_default().push(i);
    }
    Ok(SymmetrizedRelators { entries, by_first })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallCancellationReport {
    /// Longest piece; at least 1 whenever there is a relator.
    pub max_piece: usize,
    pub min_relator_length: usize,
    #[serde(with = "rat::serde_rat")]
    pub lambda: Rat,
    pub passes: bool,
}

/// Computes the longest piece and checks `piece < λ·|r|` for every relator.
///
/// Pieces are common prefixes of two cyclic permutations taken at distinct
/// positions (relator, orientation, offset), so proper powers produce long
/// pieces. A single letter always counts as a piece, which forces relators
/// to be longer than `1/λ`. λ above 1/6 is refused because Dehn's algorithm is
/// only a complete identity test below that threshold.
pub fn check_small_cancellation(p: &GroupPresentation, lambda: Rat) -> Result<SmallCancellationReport> {
    if lambda > rat::ratio(1, 6) {
        return Err(Error::LambdaTooLarge(rat::format(&lambda)));
    }
    if lambda <= Rat::from_integer(0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let mut positions: Vec<Word> = Vec::new();
    for (i, r) in p.relators().iter().enumerate() {
        if r.is_empty() {
            return Err(Error::EmptyRelator(i));
        }
        for base in [r.clone(), r.inverse()] {
            for k in 0..base.len() {
                positions.push(base.rotate(k));
            }
        }
    }
    let mut by_first: HashMap<Letter, Vec<usize>> = HashMap::new();
    for (i, w) in positions.iter().enumerate() {
        by_first.entry(w.letters()[0]).or_default().push(i);
    }
    let mut max_piece = 0usize;
    for group in by_first.values() {
        for (ai, &i) in group.iter().enumerate() {
            for &j in &group[ai + 1..] {
                max_piece = max_piece.max(common_prefix(positions[i].letters(), positions[j].letters()));
            }
        }
    }
    let min_len = p.relators().iter().map(Word::len).min().unwrap_or(0);
    if !p.relators().is_empty() {
        max_piece = max_piece.max(1);
    }
    let passes = p.relators().is_empty() || Rat::from_integer(max_piece as i64) < lambda * Rat::from_integer(min_len as i64);
    Ok(SmallCancellationReport { max_piece, min_relator_length: min_len, lambda, passes })
}

fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// One Dehn move: a subword longer than half of `sym[entry]` was replaced by
/// the inverse of the complementary part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DehnStep {
    pub relator: usize,
    pub sign: i8,
    pub rotation: usize,
    pub position: usize,
}

/// Dehn's algorithm. Returns the Dehn-reduced word and the applied moves.
pub fn dehn_reduce(w: &Word, sym: &SymmetrizedRelators) -> (Word, Vec<DehnStep>) {
    let mut cur: Vec<Letter> = w.free_reduce().into_letters();
    let mut trace = Vec::new();
    let max_rel = sym.entries.iter().map(|e| e.word.len()).max().unwrap_or(0);
    let mut start = 0usize;
    #[allow(clippy::mut_range_bound)]
    'outer: loop {
        for pos in start..cur.len() {
            let Some(cands) = sym.by_first.get(&cur[pos]) else { continue };
            for &ci in cands {
                let entry = &sym.entries[ci];
                let r = entry.word.letters();
                let l = common_prefix(&cur[pos..], r);
                if 2 * l > r.len() {
                    // cur[pos..pos+l] = r[..l] = (r[l..])⁻¹
                    let replacement: Vec<Letter> = r[l..].iter().rev().map(|x| x.inverse()).collect();
                    let mut next = Vec::with_capacity(cur.len());
                    next.extend_from_slice(&cur[..pos]);
                    next.extend_from_slice(&replacement);
                    next.extend_from_slice(&cur[pos + l..]);
                    let next = Word::from_letters(next).free_reduce().into_letters();
                    // free reduction can cancel to the left of pos
                    let changed = common_prefix(&cur, &next);
                    cur = next;
                    trace.push(DehnStep { relator: entry.relator, sign: entry.sign, rotation: entry.rotation, position: pos });
                    start = changed.saturating_sub(max_rel);
                    continue 'outer;
                }
            }
        }
        break;
    }
    (Word::from_letters(cur), trace)
}

/// Signed count of relator uses in a Dehn trace, per relator.
pub fn net_relator_count(trace: &[DehnStep], relators: usize) -> Vec<i64> {
    let mut out = vec![0; relators];
    for s in trace {
        out[s.relator] += s.sign as i64;
    }
    out
}

/// Deterministic randomized search for a single relator of the form
/// `a^e₁ b^f₁ a^e₂ b^f₂ …` with pairwise distinct syllable exponents that
/// passes the C'(λ) check. The result certifies itself through
/// [`check_small_cancellation`].
pub fn search_small_cancellation_relator(
    alphabet: &crate::word::Alphabet,
    syllable_pairs: usize,
    lambda: Rat,
    attempts: usize,
    seed: u64,
) -> Result<Option<(Word, SmallCancellationReport)>> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    if alphabet.rank() < 2 {
        return Err(Error::InvalidParameter("search needs at least two generators".into()));
    }
    if syllable_pairs == 0 {
        return Err(Error::InvalidParameter("syllable_pairs must be positive".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let mut ea: Vec<i64> = (1..=syllable_pairs as i64).collect();
        let mut eb: Vec<i64> = (1..=syllable_pairs as i64).collect();
        ea.shuffle(&mut rng);
        eb.shuffle(&mut rng);
        let mut letters = Vec::new();
        for (x, y) in ea.iter().zip(&eb) {
            let sx = if rng.gen_bool(0.5) { 1 } else { -1 };
            let sy = if rng.gen_bool(0.5) { 1 } else { -1 };
            letters.extend(Word::letter(Letter::gen(0)).pow(sx * x).into_letters());
            letters.extend(Word::letter(Letter::gen(1)).pow(sy * y).into_letters());
        }
        let r = Word::from_letters(letters);
        if !r.is_cyclically_reduced() {
            continue;
        }
        let p = GroupPresentation::new(alphabet.clone(), vec![r.clone()])?;
        let report = check_small_cancellation(&p, lambda)?;
        if report.passes {
            return Ok(Some((r, report)));
        }
    }
    Ok(None)
}

/// Seeded products of `1..=max_factors` conjugates `c·r^±1·c⁻¹` of the
/// relators, with random reduced conjugators of length at most
/// `conjugator_length`.
pub fn random_conjugate_products(
    alphabet: &crate::word::Alphabet,
    relators: &[Word],
    count: usize,
    max_factors: usize,
    conjugator_length: usize,
    seed: u64,
) -> Vec<Word> {
    use rand::{Rng, SeedableRng};
    if relators.is_empty() || max_factors == 0 {
        return Vec::new();
    }
    let letters = alphabet.letters();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let factors = rng.gen_range(1..=max_factors);
            let mut w = Word::identity();
            for _ in 0..factors {
                let len = rng.gen_range(0..=conjugator_length);
                let c = Word::from_letters((0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect()).free_reduce();
                let mut r = relators[rng.gen_range(0..relators.len())].clone();
                if rng.gen_bool(0.5) {
                    r = r.inverse();
                }
                w = w.mul(&c.mul(&r).mul(&c.inverse()));
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn pres(rels: &[&str]) -> GroupPresentation {
        let a = ab();
        let rels = rels.iter().map(|r| a.parse(r).unwrap()).collect();
        GroupPresentation::new(a, rels).unwrap()
    }

    #[test]
    fn symmetrize_examples() {
        let a = ab();
        let s = symmetrize_relators(&pres(&["ab"])).unwrap();
        let got: HashSet<Word> = s.words().cloned().collect();
        let want: HashSet<Word> =
            ["a b", "b a", "b^-1 a^-1", "a^-1 b^-1"].iter().map(|w| a.parse(w).unwrap()).collect();
        assert_eq!(got, want);
        assert_eq!(symmetrize_relators(&pres(&["a^3"])).unwrap().len(), 2);
        // 4 rotations × 2 orientations, all distinct.
        assert_eq!(symmetrize_relators(&pres(&["[a,b]"])).unwrap().len(), 8);
    }

    #[test]
    fn commutator_rotations_by_enumeration() {
        let a = ab();
        let r = a.parse("[a,b]").unwrap();
        let mut brute = HashSet::new();
        for base in [r.clone(), r.inverse()] {
            for k in 0..4 {
                let w: Vec<Letter> = (0..4).map(|i| base.letters()[(i + k) % 4]).collect();
                brute.insert(Word::from_letters(w));
            }
        }
        assert_eq!(brute.len(), 8);
    }

    #[test]
    fn small_cancellation_gate() {
        let sixth = rat::ratio(1, 6);
        assert!(!check_small_cancellation(&pres(&["ab"]), sixth).unwrap().passes);
        let rep = check_small_cancellation(&pres(&["[a,b]^7"]), sixth).unwrap();
        assert!(!rep.passes);
        assert!(rep.max_piece >= 24);
        assert!(matches!(check_small_cancellation(&pres(&["ab"]), rat::ratio(1, 5)), Err(Error::LambdaTooLarge(_))));
    }

    #[test]
    fn search_finds_certified_relator() {
        let (r, rep) = search_small_cancellation_relator(&ab(), 8, rat::ratio(1, 6), 200, 11).unwrap().unwrap();
        assert!(rep.passes);
        assert_eq!(r.len(), 72);
        let again = check_small_cancellation(&GroupPresentation::new(ab(), vec![r]).unwrap(), rat::ratio(1, 6)).unwrap();
        assert!(again.passes);
    }

    #[test]
    fn dehn_examples() {
        let a = ab();
        let (r, _) = search_small_cancellation_relator(&a, 8, rat::ratio(1, 6), 200, 11).unwrap().unwrap();
        let p = GroupPresentation::new(a.clone(), vec![r.clone()]).unwrap();
        let sym = symmetrize_relators(&p).unwrap();

        let (w, t) = dehn_reduce(&Word::identity(), &sym);
        assert!(w.is_empty() && t.is_empty());

        let (w, t) = dehn_reduce(&r, &sym);
        assert!(w.is_empty());
        assert!(!t.is_empty());
        assert_eq!(net_relator_count(&t, 1), vec![1]);

        // A short word cannot contain more than half of a length-72 relator.
        let short = a.parse("a b a^-1 b^2").unwrap();
        let (w, t) = dehn_reduce(&short, &sym);
        assert_eq!(w, short);
        assert!(t.is_empty());
        // Exhaustive subword scan confirms irreducibility.
        for e in sym.entries() {
            for i in 0..short.len() {
                assert!(2 * common_prefix(&short.letters()[i..], e.word.letters()) <= e.word.len());
            }
        }
    }
}
