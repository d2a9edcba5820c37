//! Subgroups with decidable membership. All supported specifications
//! describe normal subgroups.

use std::sync::Arc;

use super::{apply_images, check_homomorphism, GroupContext, GroupPresentation, WordProblemStrategy};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::word::Word;

#[derive(Clone, Debug)]
pub enum SubgroupSpec {
    /// Kernel of the homomorphism sending generator `i` to `images[i]`.
    Kernel { target: Arc<GroupContext>, images: Vec<Word> },
    /// Normal closure of `words`, decided in `quotient`.
    NormalClosure { words: Vec<Word>, quotient: Option<Arc<GroupContext>> },
    Whole,
}

impl SubgroupSpec {
    pub fn kernel(ambient: &GroupContext, target: Arc<GroupContext>, images: Vec<Word>) -> Result<Self> {
        check_homomorphism(ambient, &target, &images)?;
        Ok(SubgroupSpec::Kernel { target, images })
    }

    /// Normal closure in a free ambient group. The quotient is built as a
    /// C'(λ) quotient; if that fails the spec is kept but membership is
    /// undecidable.
    pub fn normal_closure(ambient: &GroupContext, words: Vec<Word>, lambda: Rat) -> Result<Self> {
        for w in &words {
            ambient.alphabet().check(w)?;
        }
        let quotient = if ambient.is_free() {
            let cyc: Vec<Word> = words.iter().map(cyclic_reduce).collect();
            let p = GroupPresentation::new(ambient.alphabet().clone(), cyc)?;
            GroupContext::small_cancellation(p, lambda).ok().map(Arc::new)
        } else {
            None
        };
        Ok(SubgroupSpec::NormalClosure { words, quotient })
    }

    pub fn is_normal(&self) -> bool {
        true
    }

    /// Image of `w` under the defining homomorphism, for kernel specs.
    pub fn image(&self, w: &Word) -> Option<Word> {
        match self {
            SubgroupSpec::Kernel { images, .. } => Some(apply_images(images, w)),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<&GroupContext> {
        match self {
            SubgroupSpec::Kernel { target, .. } => Some(target),
            SubgroupSpec::NormalClosure { quotient, .. } => quotient.as_deref(),
            SubgroupSpec::Whole => None,
        }
    }

    /// Whether the quotient `G/K` is free abelian (detected structurally).
    pub fn quotient_is_abelian(&self) -> bool {
        match self {
            SubgroupSpec::Kernel { target, .. } => matches!(target.strategy(), WordProblemStrategy::FreeAbelian),
            SubgroupSpec::Whole => true,
            SubgroupSpec::NormalClosure { .. } => false,
        }
    }
}

fn cyclic_reduce(w: &Word) -> Word {
    let mut w = w.free_reduce();
    while w.len() >= 2 && !w.is_cyclically_reduced() {
        w = w.subword(1, w.len() - 1);
    }
    w
}

pub fn membership(ctx: &GroupContext, sub: &SubgroupSpec, w: &Word) -> Result<bool> {
    ctx.alphabet().check(w)?;
    match sub {
        SubgroupSpec::Kernel { target, images } => target.is_identity(&apply_images(images, w)),
        SubgroupSpec::NormalClosure { quotient: Some(q), .. } => q.is_identity(w),
        SubgroupSpec::NormalClosure { quotient: None, .. } => {
            Err(Error::UndecidableSpec("normal closure without a decidable quotient".into()))
        }
        SubgroupSpec::Whole => Ok(true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::word::Alphabet;

    fn setup() -> (GroupContext, SubgroupSpec) {
        let f2 = GroupContext::free(Alphabet::new(["a", "b"]).unwrap());
        let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
        let images = vec![z.parse("t").unwrap(), Word::identity()];
        let k = SubgroupSpec::kernel(&f2, z, images).unwrap();
        (f2, k)
    }

    #[test]
    fn kernel_membership() {
        let (f2, k) = setup();
        assert!(membership(&f2, &k, &f2.parse("b").unwrap()).unwrap());
        assert!(!membership(&f2, &k, &f2.parse("a b").unwrap()).unwrap());
        assert!(membership(&f2, &k, &f2.parse("a b a^-1").unwrap()).unwrap());
    }

    #[test]
    fn normal_closure_membership() {
        let f2 = GroupContext::free(Alphabet::new(["a", "b"]).unwrap());
        let r = crate::group::tests::certified_relator();
        let n = SubgroupSpec::normal_closure(&f2, vec![r.clone()], rat::ratio(1, 6)).unwrap();
        let a = f2.parse("a").unwrap();
        let conj = a.mul(&r).mul(&a.inverse());
        assert!(membership(&f2, &n, &conj).unwrap());
        assert!(!membership(&f2, &n, &a).unwrap());
    }

    #[test]
    fn undecidable_normal_closure() {
        let f2 = GroupContext::free(Alphabet::new(["a", "b"]).unwrap());
        let n = SubgroupSpec::normal_closure(&f2, vec![f2.parse("a b").unwrap()], rat::ratio(1, 6)).unwrap();
        assert!(matches!(membership(&f2, &n, &f2.parse("a").unwrap()), Err(Error::UndecidableSpec(_))));
    }

    #[test]
    fn kernel_images_must_kill_relators() {
        let alph = Alphabet::new(["a", "b"]).unwrap();
        let z2 = GroupContext::free_abelian(alph.clone());
        let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
        // a ↦ t, b ↦ t is fine on Z².
        assert!(SubgroupSpec::kernel(&z2, z.clone(), vec![z.parse("t").unwrap(), z.parse("t").unwrap()]).is_ok());
    }
}
