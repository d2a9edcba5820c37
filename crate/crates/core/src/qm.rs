//! Quasimorphisms on subgroups: built-in families, evaluation, defect and
//! quasi-invariance estimation.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{membership, GroupContext, SubgroupSpec};
use crate::par;
use crate::rat::{self, Rat};
use crate::word::Word;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QmFlags {
    pub antisymmetric: bool,
    pub homomorphism: bool,
    pub invariant_claimed: bool,
}

#[derive(Clone, Debug)]
pub enum QmKind {
    /// Linear functional on the exponent vector.
    ExponentSum { weights: Vec<Rat> },
    /// Overlapping occurrences of `pattern` minus those of its inverse, in
    /// the reduced word.
    BrooksLittle { pattern: Word },
    /// `base(w^n)/n`.
    Homogenized { base: Box<Quasimorphism>, n: u32 },
    Antisymmetrized(Box<Quasimorphism>),
    Constant(Rat),
    /// Entry `(row, col)` of the matrix image.
    MatrixEntry { row: usize, col: usize },
    Custom(Evaluator),
}

pub type EvalFn = dyn Fn(&Word) -> Result<Rat> + Send + Sync;

/// Opaque evaluation function.
#[derive(Clone)]
pub struct Evaluator(pub Arc<EvalFn>);

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Evaluator(..)")
    }
}

/// Evaluation map on a normal subgroup with structural flags and optional
/// certified bounds.
#[derive(Clone)]
pub struct Quasimorphism {
    pub name: String,
    ambient: Arc<GroupContext>,
    domain: SubgroupSpec,
    kind: QmKind,
    pub flags: QmFlags,
    /// Certified upper bound on D(φ).
    pub certified_defect_upper: Option<Rat>,
    /// Certified upper bound on D^G(φ).
    pub certified_qinv_upper: Option<Rat>,
}

impl fmt::Debug for Quasimorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Quasimorphism")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("flags", &self.flags)
            .field("certified_defect_upper", &self.certified_defect_upper)
            .finish()
    }
}

impl Quasimorphism {
    /// Homomorphism given by weights on the exponent vector. The weights
    /// must vanish on every relator of the ambient presentation.
    pub fn exponent_sum(ambient: Arc<GroupContext>, domain: SubgroupSpec, weights: Vec<Rat>) -> Result<Self> {
        if weights.len() != ambient.rank() {
            return Err(Error::InvalidParameter("one weight per generator required".into()));
        }
        for (i, r) in ambient.presentation().relators().iter().enumerate() {
            let e = r.exponent_vector(ambient.rank());
            let v: Rat = weights.iter().zip(&e).map(|(w, x)| w * Rat::from_integer(*x)).sum();
            if !v.is_zero() {
                return Err(Error::InvalidParameter(format!("weights do not vanish on relator {i}")));
            }
        }
        Ok(Quasimorphism {
            name: "exponent_sum".into(),
            ambient,
            domain,
            kind: QmKind::ExponentSum { weights },
            flags: QmFlags { antisymmetric: true, homomorphism: true, invariant_claimed: true },
            certified_defect_upper: Some(Rat::zero()),
            certified_qinv_upper: Some(Rat::zero()),
        })
    }

    /// Little counting quasimorphism of a reduced pattern on a free group.
    /// The defect bound `3(ℓ−1)` comes from counting pattern occurrences
    /// straddling the three junctions of a tripod.
    pub fn brooks_little(ambient: Arc<GroupContext>, domain: SubgroupSpec, pattern: Word) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        ambient.alphabet().check(&pattern)?;
        if !pattern.is_reduced() {
            return Err(Error::InvalidParameter("pattern must be reduced".into()));
        }
        if !ambient.is_free() {
            return Err(Error::StrategyUnsupported("counting quasimorphisms need a free ambient group".into()));
        }
        let l = pattern.len() as i64;
        Ok(Quasimorphism {
            name: format!("brooks_{}", ambient.format(&pattern).replace(' ', "")),
            ambient,
            domain,
            kind: QmKind::BrooksLittle { pattern },
            flags: QmFlags { antisymmetric: true, homomorphism: l == 1, invariant_claimed: l == 1 },
            certified_defect_upper: Some(rat::int(3 * (l - 1))),
            certified_qinv_upper: None,
        })
    }

    pub fn constant(ambient: Arc<GroupContext>, domain: SubgroupSpec, c: Rat) -> Self {
        let zero = c.is_zero();
        Quasimorphism {
            name: "constant".into(),
            ambient,
            domain,
            kind: QmKind::Constant(c),
            flags: QmFlags { antisymmetric: zero, homomorphism: zero, invariant_claimed: true },
            certified_defect_upper: Some(rat::abs(c)),
            certified_qinv_upper: Some(Rat::zero()),
        }
    }

    /// Matrix coordinate; the caller asserts the flags and bounds.
    pub fn matrix_entry(ambient: Arc<GroupContext>, domain: SubgroupSpec, row: usize, col: usize, flags: QmFlags) -> Self {
        Quasimorphism {
            name: format!("matrix_entry_{row}_{col}"),
            ambient,
            domain,
            kind: QmKind::MatrixEntry { row, col },
            flags,
            certified_defect_upper: if flags.homomorphism { Some(Rat::zero()) } else { None },
            certified_qinv_upper: if flags.invariant_claimed { Some(Rat::zero()) } else { None },
        }
    }

    /// `w ↦ φ(w^n)/n`. With `D = D(φ)` certified, the result has defect at
    /// most `2D + 3D/n` and is within `D/n` of the homogenization, so its
    /// quasi-invariance defect is at most `2D/n` when the ambient group is
    /// free.
    pub fn homogenized(base: Quasimorphism, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("homogenization power must be positive".into()));
        }
        let nn = rat::int(n as i64);
        let d = base.certified_defect_upper;
        let free = base.ambient.is_free();
        Ok(Quasimorphism {
            name: format!("{}_hom{n}", base.name),
            ambient: base.ambient.clone(),
            domain: base.domain.clone(),
            flags: QmFlags {
                antisymmetric: base.flags.antisymmetric,
                homomorphism: base.flags.homomorphism,
                invariant_claimed: base.flags.homomorphism && base.flags.invariant_claimed,
            },
            certified_defect_upper: d.map(|d| if d.is_zero() { d } else { d * 2 + d * 3 / nn }),
            certified_qinv_upper: match (d, free) {
                (Some(d), true) => Some(d * 2 / nn),
                _ => base.certified_qinv_upper,
            },
            kind: QmKind::Homogenized { base: Box::new(base), n },
        })
    }

    /// Arbitrary evaluator with caller-asserted flags and no certified
    /// bounds.
    pub fn custom(
        name: impl Into<String>,
        ambient: Arc<GroupContext>,
        domain: SubgroupSpec,
        flags: QmFlags,
        f: impl Fn(&Word) -> Result<Rat> + Send + Sync + 'static,
    ) -> Self {
        Quasimorphism {
            name: name.into(),
            ambient,
            domain,
            kind: QmKind::Custom(Evaluator(Arc::new(f))),
            flags,
            certified_defect_upper: None,
            certified_qinv_upper: None,
        }
    }

    pub fn ambient(&self) -> &Arc<GroupContext> {
        &self.ambient
    }

    pub fn domain(&self) -> &SubgroupSpec {
        &self.domain
    }

    pub fn kind(&self) -> &QmKind {
        &self.kind
    }

    pub fn in_domain(&self, w: &Word) -> Result<bool> {
        membership(&self.ambient, &self.domain, w)
    }

    /// φ(w); fails with `NotInDomain` outside the subgroup.
    pub fn eval(&self, w: &Word) -> Result<Rat> {
        if !self.in_domain(w)? {
            return Err(Error::NotInDomain(self.ambient.format(w)));
        }
        self.eval_unchecked(w)
    }

    /// Evaluates the formula without a membership check.
    pub fn eval_unchecked(&self, w: &Word) -> Result<Rat> {
        match &self.kind {
            QmKind::ExponentSum { weights } => {
                let e = w.exponent_vector(self.ambient.rank());
                Ok(weights.iter().zip(&e).map(|(a, x)| a * Rat::from_integer(*x)).sum())
            }
            QmKind::BrooksLittle { pattern } => {
                let r = w.free_reduce();
                let plus = r.count_occurrences(pattern) as i64;
                let minus = r.count_occurrences(&pattern.inverse()) as i64;
                Ok(rat::int(plus - minus))
            }
            QmKind::Homogenized { base, n } => Ok(base.eval_unchecked(&w.pow(*n as i64))? / rat::int(*n as i64)),
            QmKind::Antisymmetrized(base) => {
                Ok((base.eval_unchecked(w)? - base.eval_unchecked(&w.inverse())?) / rat::int(2))
            }
            QmKind::Constant(c) => Ok(*c),
            QmKind::MatrixEntry { row, col } => Ok(rat::int(self.ambient.matrix_image(w)?.get(*row, *col))),
            QmKind::Custom(f) => (f.0)(w),
        }
    }
}

/// `g ↦ (φ(g) − φ(g⁻¹))/2`. Idempotent in value on antisymmetric inputs.
pub fn antisymmetrize(phi: &Quasimorphism) -> Quasimorphism {
    Quasimorphism {
        name: format!("{}_anti", phi.name),
        ambient: phi.ambient.clone(),
        domain: phi.domain.clone(),
        kind: QmKind::Antisymmetrized(Box::new(phi.clone())),
        flags: QmFlags { antisymmetric: true, ..phi.flags },
        certified_defect_upper: phi.certified_defect_upper,
        certified_qinv_upper: phi.certified_qinv_upper,
    }
}

pub fn brooks_counting(ambient: Arc<GroupContext>, domain: SubgroupSpec, pattern: Word) -> Result<Quasimorphism> {
    Quasimorphism::brooks_little(ambient, domain, pattern)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogenizationEstimate {
    #[serde(with = "rat::serde_rat")]
    pub value: Rat,
    /// Certified bound on the distance to the true homogenization.
    #[serde(with = "rat::serde_opt_rat")]
    pub error_radius: Option<Rat>,
}

pub fn homogenize_estimate(phi: &Quasimorphism, w: &Word, n: u32) -> Result<HomogenizationEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    if !phi.in_domain(w)? {
        return Err(Error::NotInDomain(phi.ambient.format(w)));
    }
    let nn = rat::int(n as i64);
    let value = phi.eval_unchecked(&w.pow(n as i64))? / nn;
    Ok(HomogenizationEstimate { value, error_radius: phi.certified_defect_upper.map(|d| d / nn) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DefectKind {
    LowerBoundEmpirical,
    CertifiedUpper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectEstimate {
    #[serde(with = "rat::serde_rat")]
    pub value: Rat,
    pub kind: DefectKind,
    pub sample_spec: String,
    /// A pair attaining the value, formatted.
    pub witness: Option<(String, String)>,
}

fn best<'a>(vals: impl Iterator<Item = (Rat, &'a (Word, Word))>) -> Option<(Rat, &'a (Word, Word))> {
    let mut out: Option<(Rat, &(Word, Word))> = None;
    for (v, p) in vals {
        if out.as_ref().is_none_or(|(b, _)| v > *b) {
            out = Some((v, p));
        }
    }
    out
}

/// Max of `|φ(g)+φ(h)−φ(gh)|` over the pairs: an empirical lower bound on
/// the defect.
pub fn defect_estimate(phi: &Quasimorphism, pairs: &[(Word, Word)]) -> Result<DefectEstimate> {
    let vals = par::try_map(pairs, |(g, h)| {
        let (a, b, c) = (phi.eval(g)?, phi.eval(h)?, phi.eval(&g.mul(h))?);
        Ok((a + b - c).abs())
    })?;
    let top = best(vals.into_iter().zip(pairs));
    Ok(DefectEstimate {
        value: top.as_ref().map_or(Rat::zero(), |t| t.0),
        kind: DefectKind::LowerBoundEmpirical,
        sample_spec: if pairs.is_empty() { "empty".into() } else { format!("{} pairs", pairs.len()) },
        witness: top.filter(|t| !t.0.is_zero()).map(|(_, (g, h))| (phi.ambient.format(g), phi.ambient.format(h))),
    })
}

/// Max of `|φ(k) − φ(gkg⁻¹)|` over samples `(k, g)`: an empirical lower
/// bound on the quasi-invariance defect.
pub fn qinv_defect_estimate(phi: &Quasimorphism, samples: &[(Word, Word)]) -> Result<DefectEstimate> {
    let vals = par::try_map(samples, |(k, g)| {
        let c = g.mul(k).mul(&g.inverse());
        if !phi.in_domain(k)? {
            return Err(Error::NotInDomain(phi.ambient.format(k)));
        }
        if !phi.in_domain(&c)? {
            return Err(Error::ConjugateLeavesSubgroup { k: phi.ambient.format(k), g: phi.ambient.format(g) });
        }
        Ok((phi.eval_unchecked(k)? - phi.eval_unchecked(&c)?).abs())
    })?;
    let top = best(vals.into_iter().zip(samples));
    Ok(DefectEstimate {
        value: top.as_ref().map_or(Rat::zero(), |t| t.0),
        kind: DefectKind::LowerBoundEmpirical,
        sample_spec: if samples.is_empty() { "empty".into() } else { format!("{} conjugate pairs", samples.len()) },
        witness: top.filter(|t| !t.0.is_zero()).map(|(_, (k, g))| (phi.ambient.format(k), phi.ambient.format(g))),
    })
}

/// The certified defect bound as a `DefectEstimate`, if present.
pub fn certified_defect(phi: &Quasimorphism) -> Option<DefectEstimate> {
    phi.certified_defect_upper.map(|value| DefectEstimate {
        value,
        kind: DefectKind::CertifiedUpper,
        sample_spec: "certified".into(),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ball;
    use crate::word::Alphabet;

    fn f2() -> Arc<GroupContext> {
        Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()))
    }

    fn kernel(g: &GroupContext) -> SubgroupSpec {
        let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
        SubgroupSpec::kernel(g, z.clone(), vec![z.parse("t").unwrap(), Word::identity()]).unwrap()
    }

    fn bexp(g: &Arc<GroupContext>) -> Quasimorphism {
        Quasimorphism::exponent_sum(g.clone(), SubgroupSpec::Whole, vec![rat::int(0), rat::int(1)]).unwrap()
    }

    fn brooks(g: &Arc<GroupContext>, p: &str) -> Quasimorphism {
        Quasimorphism::brooks_little(g.clone(), SubgroupSpec::Whole, g.parse(p).unwrap()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let g = f2();
        let phi = bexp(&g);
        assert_eq!(phi.eval(&g.parse("b").unwrap()).unwrap(), rat::int(1));
        assert_eq!(phi.eval(&g.parse("a b a^-1").unwrap()).unwrap(), rat::int(1));
        assert_eq!(brooks(&g, "b b").eval(&g.parse("b^3").unwrap()).unwrap(), rat::int(2));
        let ab = brooks(&g, "a b");
        assert_eq!(ab.eval(&g.parse("a b").unwrap()).unwrap(), rat::int(1));
        assert_eq!(ab.eval(&g.parse("a b a b").unwrap()).unwrap(), rat::int(2));
        assert_eq!(ab.eval(&g.parse("b^-1 a^-1").unwrap()).unwrap(), rat::int(-1));
        assert!(matches!(
            Quasimorphism::brooks_little(g.clone(), SubgroupSpec::Whole, Word::identity()),
            Err(Error::EmptyPattern)
        ));
    }

    #[test]
    fn domain_is_enforced() {
        let g = f2();
        let k = kernel(&g);
        let phi = Quasimorphism::exponent_sum(g.clone(), k, vec![rat::int(0), rat::int(1)]).unwrap();
        assert!(matches!(phi.eval(&g.parse("a b").unwrap()), Err(Error::NotInDomain(_))));
    }

    #[test]
    fn antisymmetrize_examples() {
        let g = f2();
        let c = antisymmetrize(&Quasimorphism::constant(g.clone(), SubgroupSpec::Whole, rat::int(5)));
        assert_eq!(c.eval(&g.parse("a").unwrap()).unwrap(), rat::int(0));
        let ab = brooks(&g, "a b");
        let anti = antisymmetrize(&ab);
        let b = ball(&g, 4, 1000).unwrap();
        for w in &b.elements {
            assert_eq!(anti.eval(w).unwrap(), ab.eval(w).unwrap());
            assert_eq!(ab.eval(&w.inverse()).unwrap(), -ab.eval(w).unwrap());
        }
        assert_eq!(ab.eval(&Word::identity()).unwrap(), rat::int(0));
    }

    #[test]
    fn homogenize_examples() {
        let g = f2();
        let bb = brooks(&g, "b b");
        let e = homogenize_estimate(&bb, &g.parse("b").unwrap(), 8).unwrap();
        assert_eq!(e.value, rat::ratio(7, 8));
        assert_eq!(e.error_radius, Some(rat::ratio(3, 8)));
        assert_eq!(homogenize_estimate(&bb, &g.parse("b a b a^-1").unwrap(), 8).unwrap().value, rat::int(0));
        let phi = bexp(&g);
        assert_eq!(homogenize_estimate(&phi, &g.parse("a b^3").unwrap(), 5).unwrap().value, rat::int(3));
        let psi = Quasimorphism::homogenized(bb, 32).unwrap();
        assert_eq!(psi.certified_defect_upper, Some(rat::ratio(201, 32)));
        assert_eq!(psi.certified_qinv_upper, Some(rat::ratio(3, 16)));
    }

    #[test]
    fn defect_examples() {
        let g = f2();
        let b2 = ball(&g, 2, 1000).unwrap();
        let pairs: Vec<(Word, Word)> =
            b2.elements.iter().flat_map(|x| b2.elements.iter().map(move |y| (x.clone(), y.clone()))).collect();
        assert_eq!(defect_estimate(&bexp(&g), &pairs).unwrap().value, rat::int(0));
        let ab = brooks(&g, "a b");
        assert!(defect_estimate(&ab, &pairs).unwrap().value >= rat::int(1));
        let witness = vec![(g.parse("a b").unwrap(), g.parse("b^-1 a b").unwrap())];
        assert_eq!(defect_estimate(&ab, &witness).unwrap().value, rat::int(1));
        let empty = defect_estimate(&ab, &[]).unwrap();
        assert_eq!((empty.value, empty.sample_spec.as_str()), (rat::int(0), "empty"));
    }

    #[test]
    fn qinv_examples() {
        let g = f2();
        let k = kernel(&g);
        let phi = Quasimorphism::exponent_sum(g.clone(), k.clone(), vec![rat::int(0), rat::int(1)]).unwrap();
        let b3 = ball(&g, 3, 1000).unwrap();
        let kers: Vec<Word> = b3.elements.iter().filter(|w| membership(&g, &k, w).unwrap()).cloned().collect();
        let samples: Vec<(Word, Word)> =
            kers.iter().flat_map(|x| b3.elements.iter().map(move |y| (x.clone(), y.clone()))).collect();
        assert_eq!(qinv_defect_estimate(&phi, &samples).unwrap().value, rat::int(0));
        let bb = Quasimorphism::brooks_little(g.clone(), k.clone(), g.parse("b b").unwrap()).unwrap();
        let q = qinv_defect_estimate(&bb, &samples).unwrap().value;
        let d = defect_estimate(&brooks(&g, "b b"), &samples).unwrap().value;
        assert!(q <= d * 4);
        let id = vec![(Word::identity(), g.parse("a b").unwrap())];
        assert_eq!(qinv_defect_estimate(&bb, &id).unwrap().value, rat::int(0));
        let bad = vec![(g.parse("a").unwrap(), Word::identity())];
        assert!(qinv_defect_estimate(&bb, &bad).is_err());
    }
}
