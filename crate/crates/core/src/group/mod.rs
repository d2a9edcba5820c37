//! Presentations and decidable word problems for the supported group
//! families: free groups, free abelian groups, C'(1/6) quotients of free
//! groups (Dehn's algorithm), groups with a faithful integer matrix
//! representation, and kernels of homomorphisms into any of these.

pub mod ball;
pub mod matrix;
pub mod small_cancellation;
pub mod subgroup;

use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::word::{Alphabet, Word};

pub use ball::{ball, ball_over, CayleyBall, ElementIndex};
pub use matrix::IntMatrix;
pub use small_cancellation::{
    check_small_cancellation, dehn_reduce, random_conjugate_products, search_small_cancellation_relator, symmetrize_relators, DehnStep,
    SmallCancellationReport,
    SymmetrizedRelators,
};
pub use subgroup::{membership, SubgroupSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPresentation {
    alphabet: Alphabet,
    relators: Vec<Word>,
}

impl GroupPresentation {
    /// Relators must be nonempty, cyclically reduced and use declared
    /// generators only.
    pub fn new(alphabet: Alphabet, relators: Vec<Word>) -> Result<Self> {
        for (i, r) in relators.iter().enumerate() {
            alphabet.check(r)?;
            if r.is_empty() {
                return Err(Error::EmptyRelator(i));
            }
            if !r.is_cyclically_reduced() {
                return Err(Error::NotCyclicallyReduced(i));
            }
        }
        Ok(GroupPresentation { alphabet, relators })
    }

    pub fn free(alphabet: Alphabet) -> Self {
        GroupPresentation { alphabet, relators: Vec::new() }
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
}

#[derive(Clone, Debug)]
pub enum WordProblemStrategy {
    FreeGroup,
    /// Generators form a basis of `Z^rank`.
    FreeAbelian,
    SmallCancellationQuotient { sym: SymmetrizedRelators, report: SmallCancellationReport },
    /// Generators act through faithful invertible integer matrices.
    IntegerMatrices { images: Vec<IntMatrix>, inverses: Vec<IntMatrix> },
    /// The ambient strategy decides identity; the homomorphism into `target`
    /// is a fast rejection test.
    KernelOfHomomorphism { ambient: Box<WordProblemStrategy>, target: Arc<GroupContext>, images: Vec<Word> },
}

impl WordProblemStrategy {
    fn name(&self) -> &'static str {
        match self {
            WordProblemStrategy::FreeGroup => "free",
            WordProblemStrategy::FreeAbelian => "free_abelian",
            WordProblemStrategy::SmallCancellationQuotient { .. } => "small_cancellation",
            WordProblemStrategy::IntegerMatrices { .. } => "matrix",
            WordProblemStrategy::KernelOfHomomorphism { .. } => "kernel_of_homomorphism",
        }
    }
}

/// Canonical representation of a group element, where one exists.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum ElementKey {
    Reduced(Word),
    Exponents(Vec<i64>),
    Matrix(Vec<i64>),
}

/// A presentation together with a decision procedure for its word problem.
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct GroupContext {
    presentation: GroupPresentation,
    strategy: WordProblemStrategy,
    /// Integer functionals on exponent vectors that vanish on every relator.
    prefilter: Vec<Vec<i64>>,
}

impl GroupContext {
    pub fn free(alphabet: Alphabet) -> Self {
        let presentation = GroupPresentation::free(alphabet);
        Self::assemble(presentation, WordProblemStrategy::FreeGroup)
    }

    pub fn free_abelian(alphabet: Alphabet) -> Self {
        let n = alphabet.rank();
        let mut rels = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (Word::letter(crate::Letter::gen(i)), Word::letter(crate::Letter::gen(j)));
                rels.push(Word::commutator(&a, &b));
            }
        }
        let presentation = GroupPresentation { alphabet, relators: rels };
        Self::assemble(presentation, WordProblemStrategy::FreeAbelian)
    }

    /// `F(alphabet)/⟨⟨relators⟩⟩`, accepted only if it passes C'(λ), λ ≤ 1/6.
    pub fn small_cancellation(presentation: GroupPresentation, lambda: Rat) -> Result<Self> {
        let report = check_small_cancellation(&presentation, lambda)?;
        if !report.passes {
            return Err(Error::SmallCancellationFailed {
                lambda: crate::rat::format(&lambda),
                piece: report.max_piece,
            });
        }
        let sym = symmetrize_relators(&presentation)?;
        Ok(Self::assemble(presentation, WordProblemStrategy::SmallCancellationQuotient { sym, report }))
    }

    /// A group given by generator matrices. Every relator must evaluate to
    /// the identity; faithfulness is the caller's claim.
    pub fn matrices(presentation: GroupPresentation, images: Vec<IntMatrix>) -> Result<Self> {
        if images.len() != presentation.rank() {
            return Err(Error::InvalidPresentation("one matrix per generator required".into()));
        }
        let dim = images.first().map(IntMatrix::dim).unwrap_or(1);
        if images.iter().any(|m| m.dim() != dim) {
            return Err(Error::InvalidPresentation("matrices must share a dimension".into()));
        }
        let inverses = images.iter().map(IntMatrix::inverse).collect::<Result<Vec<_>>>()?;
        let ctx = Self::assemble(presentation, WordProblemStrategy::IntegerMatrices { images, inverses });
        for (i, r) in ctx.presentation.relators.iter().enumerate() {
            if !ctx.matrix_image(r)?.is_identity() {
                return Err(Error::InvalidPresentation(format!("relator {i} is not the identity matrix")));
            }
        }
        Ok(ctx)
    }

    /// Wraps `ambient` with a homomorphism into `target` used as a quick
    /// rejection filter. The images must kill every relator.
    pub fn with_kernel_filter(ambient: GroupContext, target: Arc<GroupContext>, images: Vec<Word>) -> Result<Self> {
        check_homomorphism(&ambient, &target, &images)?;
        let strategy = WordProblemStrategy::KernelOfHomomorphism {
            ambient: Box::new(ambient.strategy.clone()),
            target,
            images,
        };
        Ok(Self::assemble(ambient.presentation, strategy))
    }

    fn assemble(presentation: GroupPresentation, strategy: WordProblemStrategy) -> Self {
        let prefilter = relator_invariants(&presentation);
        GroupContext { presentation, strategy, prefilter }
    }

    pub fn presentation(&self) -> &GroupPresentation {
        &self.presentation
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.presentation.alphabet
    }

    pub fn rank(&self) -> usize {
        self.presentation.rank()
    }

    pub fn strategy(&self) -> &WordProblemStrategy {
        &self.strategy
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub fn is_free(&self) -> bool {
        matches!(self.strategy, WordProblemStrategy::FreeGroup)
    }

    pub fn parse(&self, s: &str) -> Result<Word> {
        self.alphabet().parse(s)
    }

    pub fn format(&self, w: &Word) -> String {
        self.alphabet().format(w)
    }

    /// Reduced product.
    pub fn mul(&self, u: &Word, v: &Word) -> Word {
        u.mul(v)
    }

    pub fn is_identity(&self, w: &Word) -> Result<bool> {
        self.alphabet().check(w)?;
        strategy_is_identity(&self.strategy, w)
    }

    /// Element equality via `is_identity(u·v⁻¹)`, with the abelian prefilter
    /// applied first.
    pub fn equal(&self, u: &Word, v: &Word) -> Result<bool> {
        if self.prefilter_key(u) != self.prefilter_key(v) {
            return Ok(false);
        }
        self.is_identity(&u.mul(&v.inverse()))
    }

    /// Exact canonical form when the strategy provides one.
    pub fn canonical_key(&self, w: &Word) -> Result<Option<ElementKey>> {
        strategy_key(&self.strategy, w, self.rank())
    }

    /// Image under the abelianisation-type invariants; equal elements have
    /// equal prefilter keys.
    pub fn prefilter_key(&self, w: &Word) -> Vec<i64> {
        let e = w.exponent_vector(self.rank());
        self.prefilter.iter().map(|f| f.iter().zip(&e).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matrix_image(&self, w: &Word) -> Result<IntMatrix> {
        match &self.strategy {
            WordProblemStrategy::IntegerMatrices { images, inverses } => matrix_product(images, inverses, w),
            WordProblemStrategy::KernelOfHomomorphism { ambient, .. } => match ambient.as_ref() {
                WordProblemStrategy::IntegerMatrices { images, inverses } => matrix_product(images, inverses, w),
                _ => Err(Error::StrategyUnsupported("matrix image of a non-matrix group".into())),
            },
            _ => Err(Error::StrategyUnsupported("matrix image of a non-matrix group".into())),
        }
    }

    /// Whether two words commute in the group.
    pub fn commute(&self, u: &Word, v: &Word) -> Result<bool> {
        self.is_identity(&Word::commutator(u, v))
    }
}

fn strategy_is_identity(s: &WordProblemStrategy, w: &Word) -> Result<bool> {
    match s {
        WordProblemStrategy::FreeGroup => Ok(w.free_reduce().is_empty()),
        WordProblemStrategy::FreeAbelian => {
            let rank = w.letters().iter().map(|l| l.generator() + 1).max().unwrap_or(0);
            Ok(w.exponent_vector(rank).iter().all(|&e| e == 0))
        }
        WordProblemStrategy::SmallCancellationQuotient { sym, .. } => Ok(dehn_reduce(w, sym).0.is_empty()),
        WordProblemStrategy::IntegerMatrices { images, inverses } => {
            Ok(matrix_product(images, inverses, w)?.is_identity())
        }
        WordProblemStrategy::KernelOfHomomorphism { ambient, target, images } => {
            let image = apply_images(images, w);
            if !target.is_identity(&image)? {
                return Ok(false);
            }
            strategy_is_identity(ambient, w)
        }
    }
}

fn strategy_key(s: &WordProblemStrategy, w: &Word, rank: usize) -> Result<Option<ElementKey>> {
    Ok(match s {
        WordProblemStrategy::FreeGroup => Some(ElementKey::Reduced(w.free_reduce())),
        WordProblemStrategy::FreeAbelian => Some(ElementKey::Exponents(w.exponent_vector(rank))),
        WordProblemStrategy::SmallCancellationQuotient { .. } => None,
        WordProblemStrategy::IntegerMatrices { images, inverses } => {
            Some(ElementKey::Matrix(matrix_product(images, inverses, w)?.entries().to_vec()))
        }
        WordProblemStrategy::KernelOfHomomorphism { ambient, .. } => strategy_key(ambient, w, rank)?,
    })
}

fn matrix_product(images: &[IntMatrix], inverses: &[IntMatrix], w: &Word) -> Result<IntMatrix> {
    let dim = images.first().map(IntMatrix::dim).unwrap_or(1);
    let mut m = IntMatrix::identity(dim);
    for l in w.letters() {
        let g = images
            .get(l.generator())
            .ok_or_else(|| Error::UnknownGenerator(format!("#{}", l.generator())))?;
        let g = if l.is_inverse() { &inverses[l.generator()] } else { g };
        m = m.checked_mul(g)?;
    }
    Ok(m)
}

/// Substitutes generator images into `w` (reduced).
pub fn apply_images(images: &[Word], w: &Word) -> Word {
    let mut out = Word::identity();
    for l in w.letters() {
        let img = &images[l.generator()];
        out = if l.is_inverse() { out.mul(&img.inverse()) } else { out.mul(img) };
    }
    out
}

/// Generator images define a homomorphism iff every relator maps to the
/// identity of `target`.
pub fn check_homomorphism(source: &GroupContext, target: &GroupContext, images: &[Word]) -> Result<()> {
    if images.len() != source.rank() {
        return Err(Error::InvalidPresentation("one image per generator required".into()));
    }
    for img in images {
        target.alphabet().check(img)?;
    }
    for (i, r) in source.presentation.relators.iter().enumerate() {
        if !target.is_identity(&apply_images(images, r))? {
            return Err(Error::InvalidPresentation(format!("relator {i} does not map to the identity")));
        }
    }
    Ok(())
}

/// Integer basis of the functionals vanishing on all relator exponent
/// vectors.
fn relator_invariants(p: &GroupPresentation) -> Vec<Vec<i64>> {
    let n = p.rank();
    let mut rows: Vec<Vec<Rat>> = p
        .relators
        .iter()
        .map(|r| r.exponent_vector(n).into_iter().map(Rat::from_integer).collect())
        .collect();
    // Reduced row echelon form.
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(row, pr);
        let p = rows[row][col];
        for v in rows[row].iter_mut() {
            *v /= p;
        }
        for r in 0..rows.len() {
            if r != row && !rows[r][col].is_zero() {
                let f = rows[r][col];
                let pivot_row = rows[row].clone();
                for (x, y) in rows[r].iter_mut().zip(&pivot_row) {
                    *x -= *y * f;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rat::zero(); n];
        v[free] = Rat::from_integer(1);
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[r][free];
        }
        let lcm = v.iter().fold(1i64, |acc, x| acc.lcm(x.denom()));
        let ints: Vec<i64> = v.iter().map(|x| (x * Rat::from_integer(lcm)).to_integer()).collect();
        let g = ints.iter().fold(0i64, |acc, x| acc.gcd(&x.abs()));
        basis.push(ints.into_iter().map(|x| if g > 1 { x / g } else { x }).collect());
    }
    basis.retain(|v: &Vec<i64>| v.iter().any(|x| !x.is_zero()));
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    pub(crate) fn certified_relator() -> Word {
        small_cancellation::search_small_cancellation_relator(&ab(), 8, rat::ratio(1, 6), 200, 11)
            .unwrap()
            .unwrap()
            .0
    }

    #[test]
    fn identity_examples() {
        let f2 = GroupContext::free(ab());
        assert!(!f2.is_identity(&f2.parse("a b a^-1 b^-1 a b^-1 a^-1 b").unwrap()).unwrap());
        assert!(f2.is_identity(&Word::identity()).unwrap());

        let r = certified_relator();
        let q = GroupContext::small_cancellation(GroupPresentation::new(ab(), vec![r.clone()]).unwrap(), rat::ratio(1, 6))
            .unwrap();
        assert!(q.is_identity(&r).unwrap());
        assert!(q.is_identity(&Word::identity()).unwrap());
        assert!(!q.is_identity(&q.parse("a b").unwrap()).unwrap());
    }

    #[test]
    fn small_cancellation_context_refuses_bad_presentations() {
        let p = GroupPresentation::new(ab(), vec![ab().parse("[a,b]^7").unwrap()]).unwrap();
        assert!(GroupContext::small_cancellation(p, rat::ratio(1, 6)).is_err());
    }

    #[test]
    fn relator_invariants_vanish_on_relators() {
        let r = certified_relator();
        let p = GroupPresentation::new(ab(), vec![r.clone()]).unwrap();
        let inv = relator_invariants(&p);
        let e = r.exponent_vector(2);
        for f in &inv {
            assert_eq!(f.iter().zip(&e).map(|(a, b)| a * b).sum::<i64>(), 0);
        }
        assert_eq!(relator_invariants(&GroupPresentation::free(ab())).len(), 2);
    }

    #[test]
    fn presentation_validation() {
        let a = ab();
        assert!(matches!(GroupPresentation::new(a.clone(), vec![Word::identity()]), Err(Error::EmptyRelator(0))));
        assert!(matches!(
            GroupPresentation::new(a.clone(), vec![a.parse("a b a^-1").unwrap()]),
            Err(Error::NotCyclicallyReduced(0))
        ));
    }

    #[test]
    fn heisenberg_matrices() {
        let alph = Alphabet::new(["x", "y", "z"]).unwrap();
        let rels = ["[x,y] z^-1", "[x,z]", "[y,z]"].iter().map(|s| alph.parse(s).unwrap()).collect();
        let p = GroupPresentation::new(alph, rels).unwrap();
        let x = IntMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let y = IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]).unwrap();
        let z = IntMatrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let h = GroupContext::matrices(p, vec![x, y, z]).unwrap();
        assert!(h.equal(&h.parse("[x^2,y^2]").unwrap(), &h.parse("z^4").unwrap()).unwrap());
        assert!(!h.is_identity(&h.parse("x").unwrap()).unwrap());
    }
}
