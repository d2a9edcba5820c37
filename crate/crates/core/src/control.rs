//! Control of a quasimorphism along `ker θ`: kernel enumeration, control
//! profiles, relator suprema, normal-subgroup criteria, quasi-splittings
//! and distortion of central subgroups.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{apply_images, ball_over, ElementIndex, GroupContext, GroupPresentation, SubgroupSpec};
use crate::qm::{qinv_defect_estimate, DefectEstimate, Quasimorphism};
use crate::rat::{self, Rat};
use crate::relcayley::{phi_tilde_unchecked, RelAlphabet, RelWord, Syllable};
use crate::word::Word;

/// Normal-form words `a` with `|a| ≤ maxlen` and `θ(a) = 1`. K-letters come
/// from the pool; with `solve_hole` one extra K-letter per word is solved
/// for so that `θ(a) = 1`. Deduplicated by syllable sequence.
pub fn kernel_enumerate(alph: &RelAlphabet, maxlen: usize, solve_hole: bool, budget: usize) -> Result<Vec<RelWord>> {
    let mut st = Enum { alph, maxlen, solve_hole, budget, visited: 0, seen: HashSet::new(), out: Vec::new() };
    st.push(RelWord::empty())?;
    let mut prefix = Vec::new();
    st.dfs(&mut prefix, Word::identity(), None)?;
    Ok(st.out)
}

struct Enum<'a> {
    alph: &'a RelAlphabet,
    maxlen: usize,
    solve_hole: bool,
    budget: usize,
    visited: usize,
    seen: HashSet<RelWord>,
    out: Vec<RelWord>,
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Pool(usize),
    Hole,
    X(usize),
}

impl Enum<'_> {
    fn push(&mut self, a: RelWord) -> Result<()> {
        if self.seen.insert(a.clone()) {
            self.out.push(a);
        }
        Ok(())
    }

    /// `acc` is θ of the prefix, or of the part after the hole once a hole
    /// is placed; `hole` holds θ of the part before it.
    fn dfs(&mut self, prefix: &mut Vec<Slot>, acc: Word, hole: Option<(usize, Word)>) -> Result<()> {
        if prefix.len() == self.maxlen {
            return Ok(());
        }
        let last = prefix.last().copied();
        let mut moves = Vec::new();
        if !matches!(last, Some(Slot::Pool(_)) | Some(Slot::Hole)) {
            moves.extend((0..self.alph.k_pool().len()).map(Slot::Pool));
            if self.solve_hole && hole.is_none() {
                moves.push(Slot::Hole);
            }
        }
        for i in 0..self.alph.x().len() {
            if !matches!(last, Some(Slot::X(j)) if self.alph.x_inverse(j) == i) {
                moves.push(Slot::X(i));
            }
        }
        for m in moves {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::BudgetExceeded { what: "kernel enumeration".into(), limit: self.budget });
            }
            let (acc2, hole2) = match m {
                Slot::Pool(i) => (acc.mul(&self.alph.k_pool()[i]), hole.clone()),
                Slot::X(i) => (acc.mul(&self.alph.x()[i]), hole.clone()),
                Slot::Hole => (Word::identity(), Some((prefix.len(), acc.clone()))),
            };
            prefix.push(m);
            self.emit(prefix, &acc2, &hole2)?;
            self.dfs(prefix, acc2, hole2)?;
            prefix.pop();
        }
        Ok(())
    }

    fn emit(&mut self, prefix: &[Slot], acc: &Word, hole: &Option<(usize, Word)>) -> Result<()> {
        let ctx = self.alph.ambient();
        let k = match hole {
            None => {
                if !ctx.is_identity(acc)? {
                    return Ok(());
                }
                None
            }
            Some((_, before)) => {
                // θ = before · k · acc = 1.
                let k = before.inverse().mul(&acc.inverse());
                if ctx.is_identity(&k)? || !self.alph.in_k(&k)? {
                    return Ok(());
                }
                Some(k)
            }
        };
        let syllables = prefix
            .iter()
            .map(|s| match s {
                Slot::Pool(i) => Syllable::K(self.alph.k_pool()[*i].clone()),
                Slot::X(i) => Syllable::X(*i),
                Slot::Hole => Syllable::K(k.clone().unwrap_or_default()),
            })
            .collect();
        self.push(RelWord::new(syllables))
    }
}

/// For each X-index sequence `W` with `θ(W) ∈ K`, the kernel element
/// `W · θ(W)⁻¹` (normalised). Sequences leaving `K` are skipped.
pub fn close_x_words(alph: &RelAlphabet, words: &[Vec<usize>]) -> Result<Vec<RelWord>> {
    let mut out = Vec::new();
    for w in words {
        let v = alph.x_word_value(w);
        if alph.in_k(&v)? {
            out.push(alph.rel_word(w, v.inverse()));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ControlVerdict {
    LinearlyControlled,
    GrowthSuspected,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlProfile {
    /// Length `n` ↦ max `|φ̃(a)|` over sampled `a` with `|a| ≤ n`, at the
    /// lengths present in the sample.
    #[serde(serialize_with = "ser_table")]
    pub per_length: BTreeMap<usize, Rat>,
    #[serde(with = "rat::serde_rat")]
    pub fitted_c0: Rat,
    pub verdict: ControlVerdict,
    pub window: usize,
    pub onset: usize,
    pub samples: usize,
}

fn ser_table<S: serde::Serializer>(t: &BTreeMap<usize, Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (n, v) in t {
        seq.serialize_element(&(n, rat::format(v)))?;
    }
    seq.end()
}

impl ControlProfile {
    /// `C₀` for downstream use: the fit, or 1 when the fit is 0.
    pub fn clamped_c0(&self) -> Rat {
        if self.fitted_c0.is_zero() {
            rat::int(1)
        } else {
            self.fitted_c0
        }
    }

    /// `per_length[n]/(n+1)` in length order.
    pub fn ratios(&self) -> Vec<(usize, Rat)> {
        self.per_length.iter().map(|(&n, v)| (n, v / rat::int(n as i64 + 1))).collect()
    }
}

pub const DEFAULT_WINDOW: usize = 3;

pub fn control_profile(phi: &Quasimorphism, kernel: &[RelWord], onset: usize) -> Result<ControlProfile> {
    if kernel.is_empty() {
        return Err(Error::EmptyKernelSample);
    }
    let vals = crate::par::try_map(kernel, |a| Ok((a.len(), phi_tilde_unchecked(phi, a)?.abs())))?;
    let mut by_len: BTreeMap<usize, Rat> = BTreeMap::new();
    let mut fitted = Rat::zero();
    for &(n, v) in &vals {
        let e = by_len.entry(n).or_insert(Rat::zero());
        *e = rat::max(*e, v);
        fitted = rat::max(fitted, v / rat::int(n as i64 + 1));
    }
    let mut per_length = BTreeMap::new();
    let mut run = Rat::zero();
    for (n, v) in by_len {
        run = rat::max(run, v);
        per_length.insert(n, run);
    }
    let mut profile = ControlProfile {
        per_length,
        fitted_c0: fitted,
        verdict: ControlVerdict::Inconclusive,
        window: DEFAULT_WINDOW,
        onset,
        samples: kernel.len(),
    };
    let r: Vec<Rat> = profile.ratios().into_iter().map(|(_, v)| v).collect();
    let tail = &r[r.len().saturating_sub(DEFAULT_WINDOW)..];
    let growing = tail.len() == DEFAULT_WINDOW && tail.windows(2).all(|w| w[0] < w[1]);
    let after: Vec<Rat> = profile.ratios().into_iter().filter(|(n, _)| *n >= onset).map(|(_, v)| v).collect();
    let flat = after.windows(2).all(|w| w[1] <= w[0]);
    profile.verdict = if growing {
        ControlVerdict::GrowthSuspected
    } else if flat {
        ControlVerdict::LinearlyControlled
    } else {
        ControlVerdict::Inconclusive
    };
    Ok(profile)
}

/// `max |φ̃(r)|` over relators in `ker θ`.
pub fn relator_sup_check(phi: &Quasimorphism, alph: &RelAlphabet, relators: &[RelWord]) -> Result<Rat> {
    let mut sup = Rat::zero();
    for (i, r) in relators.iter().enumerate() {
        if !alph.ambient().is_identity(&alph.theta(r))? {
            return Err(Error::RelatorNotInKernel(i));
        }
        sup = rat::max(sup, phi_tilde_unchecked(phi, r)?.abs());
    }
    Ok(sup)
}

/// Conjugation relators `x · k · x⁻¹ · (x k x⁻¹)⁻¹` for every X-letter and
/// pool element.
pub fn conjugation_relators(alph: &RelAlphabet) -> Vec<RelWord> {
    let mut out = Vec::new();
    for (i, x) in alph.x().iter().enumerate() {
        for k in alph.k_pool() {
            let c = x.mul(k).mul(&x.inverse());
            out.push(RelWord::new(vec![
                Syllable::X(i),
                Syllable::K(k.clone()),
                Syllable::X(alph.x_inverse(i)),
                Syllable::K(c.inverse()),
            ]));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalCriterionReport {
    #[serde(with = "rat::serde_rat")]
    pub sup_kr: Rat,
    pub qinv: DefectEstimate,
    pub passes: bool,
    pub relators: usize,
}

/// `sup |φ(k_r)|` over lifted relators together with a quasi-invariance
/// estimate. At finite scale both are always finite, so `passes` only
/// records that every lift checked out.
pub fn normal_criterion_check(
    phi: &Quasimorphism,
    lifted: &[(Word, Word)],
    conj_samples: &[(Word, Word)],
) -> Result<NormalCriterionReport> {
    let ctx = phi.ambient();
    let mut sup = Rat::zero();
    for (i, (r, kr)) in lifted.iter().enumerate() {
        if !phi.in_domain(kr)? {
            return Err(Error::KLetterNotInSubgroup(ctx.format(kr)));
        }
        if !ctx.equal(r, kr)? {
            return Err(Error::LiftMismatch(i));
        }
        sup = rat::max(sup, phi.eval_unchecked(kr)?.abs());
    }
    let qinv = qinv_defect_estimate(phi, conj_samples)?;
    Ok(NormalCriterionReport { sup_kr: sup, qinv, passes: true, relators: lifted.len() })
}

/// Distinct values of `s(ḡ₂)⁻¹ s(ḡ₁)⁻¹ s(ḡ₁ḡ₂)` over sampled pairs of
/// quotient elements, given as words in the target of a kernel spec.
pub fn quasisplit_delta(
    ctx: &GroupContext,
    sub: &SubgroupSpec,
    section: &dyn Fn(&Word) -> Option<Word>,
    samples: &[(Word, Word)],
) -> Result<Vec<Word>> {
    let target = sub.target().ok_or_else(|| Error::StrategyUnsupported("quasi-splitting needs a quotient".into()))?;
    let s = |q: &Word| section(q).ok_or_else(|| Error::SectionIncomplete(target.format(q)));
    let mut index = ElementIndex::new();
    let mut out = Vec::new();
    for (g1, g2) in samples {
        let d = s(g2)?.inverse().mul(&s(g1)?.inverse()).mul(&s(&g1.mul(g2))?);
        let (_, fresh) = index.insert(ctx, d.clone())?;
        if fresh {
            out.push(d);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedPresentation {
    /// `(r, k_r)`: lifted relator and the K-element it represents.
    pub relators: Vec<(Word, Word)>,
    /// `(w, k, w k w⁻¹)` conjugation table entries.
    pub conjugation: Vec<(Word, Word, Word)>,
}

/// Lifts quotient relators along a section defined on quotient generators
/// and samples the conjugation table over X and the pool.
pub fn lift_relators(
    quotient: &GroupPresentation,
    section: &[Option<Word>],
    alph: &RelAlphabet,
) -> Result<LiftedPresentation> {
    let names = quotient.alphabet().names();
    let mut images = Vec::with_capacity(names.len());
    for (i, s) in section.iter().enumerate().take(names.len()) {
        images.push(s.clone().ok_or_else(|| Error::SectionIncomplete(names[i].clone()))?);
    }
    if images.len() < names.len() {
        return Err(Error::SectionIncomplete(names[images.len()].clone()));
    }
    let mut relators = Vec::new();
    for (i, r) in quotient.relators().iter().enumerate() {
        let lift = apply_images(&images, r);
        if !alph.in_k(&lift)? {
            return Err(Error::RelatorNotInKernel(i));
        }
        relators.push((lift.clone(), lift));
    }
    let mut conjugation = Vec::new();
    for w in alph.x() {
        for k in alph.k_pool() {
            conjugation.push((w.clone(), k.clone(), w.mul(k).mul(&w.inverse())));
        }
    }
    Ok(LiftedPresentation { relators, conjugation })
}

/// A group with a central element `z` and a generating set `X_E`.
#[derive(Clone, Debug)]
pub struct CentralExtensionCtx {
    pub e: Arc<GroupContext>,
    pub z: Word,
    pub x_e: Vec<Word>,
}

impl CentralExtensionCtx {
    pub fn new(e: Arc<GroupContext>, z: Word, x_e: Vec<Word>) -> Result<Self> {
        for l in e.alphabet().letters().into_iter().filter(|l| !l.is_inverse()) {
            if !e.commute(&z, &Word::letter(l))? {
                return Err(Error::InvalidParameter(format!("`{}` is not central", e.format(&z))));
            }
        }
        Ok(CentralExtensionCtx { e, z, x_e })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DistortionVerdict {
    Distorted,
    Undistorted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistortionRow {
    pub n: i64,
    pub lower: usize,
    pub upper: Option<usize>,
    pub ball_depth: Option<usize>,
    pub witness_length: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub rows: Vec<DistortionRow>,
    pub verdict: DistortionVerdict,
    /// Verdicts at radii `R−2, R−1, R`.
    pub verdicts_by_radius: Vec<(usize, DistortionVerdict)>,
    pub ball_size: usize,
}

/// Word-length bounds for `zⁿ` over `X_E`. Lower bounds come from the BFS
/// ball, upper bounds from the ball and from supplied witnesses `(n, w)`,
/// which are verified. The verdict must agree at radii `R−2, R−1, R`.
pub fn distortion_check(
    ctx: &CentralExtensionCtx,
    ns: &[i64],
    radius: usize,
    budget: usize,
    witnesses: &[(i64, Word)],
) -> Result<DistortionReport> {
    let e = &ctx.e;
    let ball = ball_over(e, &ctx.x_e, radius, budget)?;
    let mut verified: BTreeMap<i64, usize> = BTreeMap::new();
    for (n, w) in witnesses {
        if e.equal(w, &ctx.z.pow(*n))? {
            let l = verified.entry(*n).or_insert(w.len());
            *l = (*l).min(w.len());
        }
    }
    let depths: Vec<Option<usize>> = crate::par::try_map(ns, |&n| {
        let zn = ctx.z.pow(n);
        Ok(ball.index_of(e, &zn)?.map(|i| ball.dist[i]))
    })?;
    let rows_at = |r: usize| -> Vec<DistortionRow> {
        ns.iter()
            .zip(&depths)
            .map(|(&n, d)| {
                let d = d.filter(|&d| d <= r);
                let w = verified.get(&n).copied();
                let upper = match (d, w) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                DistortionRow { n, lower: d.unwrap_or(r + 1), upper, ball_depth: d, witness_length: w }
            })
            .collect()
    };
    let mut verdicts = Vec::new();
    for r in radius.saturating_sub(2)..=radius {
        verdicts.push((r, classify(&rows_at(r))));
    }
    let verdict = if verdicts.iter().all(|(_, v)| *v == verdicts[0].1) { verdicts[0].1 } else { DistortionVerdict::Inconclusive };
    Ok(DistortionReport { rows: rows_at(radius), verdict, verdicts_by_radius: verdicts, ball_size: ball.len() })
}

fn classify(rows: &[DistortionRow]) -> DistortionVerdict {
    let rows: Vec<&DistortionRow> = rows.iter().filter(|r| r.n > 0).collect();
    if rows.len() < 2 {
        return DistortionVerdict::Inconclusive;
    }
    let up: Option<Vec<Rat>> = rows.iter().map(|r| r.upper.map(|u| rat::ratio(u as i64, r.n))).collect();
    if let Some(up) = up {
        let decreasing = up.windows(2).all(|w| w[1] < w[0]);
        if decreasing && up[up.len() - 1] * 2 <= up[0] {
            return DistortionVerdict::Distorted;
        }
    }
    let low: Vec<Rat> = rows.iter().map(|r| rat::ratio(r.lower as i64, r.n)).collect();
    if low.iter().all(|&l| l * 2 >= low[0]) {
        return DistortionVerdict::Undistorted;
    }
    DistortionVerdict::Inconclusive
}
