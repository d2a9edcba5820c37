//! Commutator length by brute-force search and Bavard-type lower bounds
//! for `scl` and the mixed `scl_{G,K}`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{ball, membership, ElementIndex, GroupContext, SubgroupSpec};
use crate::par;
use crate::qm::{homogenize_estimate, qinv_defect_estimate, Quasimorphism};
use crate::rat::{self, Rat};
use crate::word::Word;

/// The set `{[x, k] : x ∈ B(r), k ∈ B(r) ∩ K}` as an element index.
#[derive(Clone, Debug)]
pub struct CommutatorTable {
    pub radius: usize,
    index: ElementIndex,
}

impl CommutatorTable {
    pub fn build(ctx: &GroupContext, sub: &SubgroupSpec, radius: usize, budget: usize) -> Result<Self> {
        let b = ball(ctx, radius, budget)?;
        let mut ks = Vec::new();
        for w in &b.elements {
            if membership(ctx, sub, w)? {
                ks.push(w.clone());
            }
        }
        let rows = par::map(&b.elements, |x| ks.iter().map(|k| Word::commutator(x, k)).collect::<Vec<_>>());
        let mut index = ElementIndex::new();
        for c in rows.into_iter().flatten() {
            index.insert(ctx, c)?;
            if index.len() > budget {
                return Err(Error::BudgetExceeded { what: "commutator table".into(), limit: budget });
            }
        }
        Ok(CommutatorTable { radius, index })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn commutators(&self) -> &[Word] {
        self.index.reps()
    }
}

/// Decidable reasons for `g ∉ [G, K]`: a nonzero exponent vector in a free
/// ambient group, or `g ∉ K`.
pub fn mixed_obstruction(ctx: &GroupContext, sub: &SubgroupSpec, g: &Word) -> Result<Option<String>> {
    if ctx.is_free() && g.exponent_vector(ctx.rank()).iter().any(|&e| e != 0) {
        return Ok(Some("nonzero exponent sum".into()));
    }
    if !membership(ctx, sub, g)? {
        return Ok(Some("not in K".into()));
    }
    Ok(None)
}

fn cyclic_conjugates(g: &Word) -> Vec<Word> {
    let mut w = g.free_reduce();
    while w.len() >= 2 && !w.is_cyclically_reduced() {
        w = w.subword(1, w.len() - 1);
    }
    let mut out: Vec<Word> = (0..w.len().max(1)).map(|i| w.rotate(i)).collect();
    out.sort();
    out.dedup();
    out
}

/// Least `n ≤ q` such that a conjugate of `g` is a product of `n` elements
/// of the table, or `None`.
pub fn cl_mixed_upper_with(ctx: &GroupContext, sub: &SubgroupSpec, table: &CommutatorTable, g: &Word, q: usize) -> Result<Option<usize>> {
    if let Some(why) = mixed_obstruction(ctx, sub, g)? {
        return Err(Error::NotInMixedCommutatorSubgroup(format!("{}: {why}", ctx.format(g))));
    }
    if ctx.is_identity(g)? {
        return Ok(Some(0));
    }
    let targets = cyclic_conjugates(g);
    let s = table.commutators();
    if q >= 1 && product_hits(ctx, table, &targets, &Word::identity(), 0)?.is_some() {
        return Ok(Some(1));
    }
    for n in 2..=q {
        let hit = par::find_first(s, |first| product_hits(ctx, table, &targets, first, n - 2).ok().flatten());
        if hit.is_some() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// With `prefix` fixed and `depth` more free factors, whether
/// `prefix⁻¹ · t` minus those factors lands in the table for some target.
fn product_hits(ctx: &GroupContext, table: &CommutatorTable, targets: &[Word], prefix: &Word, depth: usize) -> Result<Option<()>> {
    if depth == 0 {
        for t in targets {
            if table.index.get(ctx, &prefix.inverse().mul(t))?.is_some() {
                return Ok(Some(()));
            }
        }
        return Ok(None);
    }
    for s in table.commutators() {
        if product_hits(ctx, table, targets, &prefix.mul(s), depth - 1)?.is_some() {
            return Ok(Some(()));
        }
    }
    Ok(None)
}

pub fn cl_mixed_upper(
    ctx: &GroupContext,
    sub: &SubgroupSpec,
    g: &Word,
    q: usize,
    factor_radius: usize,
    budget: usize,
) -> Result<Option<usize>> {
    let table = CommutatorTable::build(ctx, sub, factor_radius, budget)?;
    cl_mixed_upper_with(ctx, sub, &table, g, q)
}

/// `(n, cl(gⁿ)/n)` for each `n` where the search succeeds.
pub fn scl_upper_estimate(
    ctx: &GroupContext,
    sub: &SubgroupSpec,
    table: &CommutatorTable,
    g: &Word,
    ns: &[u32],
    q: usize,
) -> Result<Vec<(u32, usize, Rat)>> {
    let mut out = Vec::new();
    for &n in ns {
        if n == 0 {
            continue;
        }
        if let Some(cl) = cl_mixed_upper_with(ctx, sub, table, &g.pow(n as i64), q)? {
            out.push((n, cl, rat::ratio(cl as i64, n as i64)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BavardBound {
    #[serde(with = "rat::serde_rat")]
    pub value: Rat,
    pub quasimorphism: String,
    #[serde(with = "rat::serde_rat")]
    pub d_upper: Rat,
    #[serde(with = "rat::serde_rat")]
    pub d_hat_upper: Rat,
    #[serde(with = "rat::serde_rat")]
    pub homogenized_estimate: Rat,
    #[serde(with = "rat::serde_rat")]
    pub error_radius: Rat,
    pub power: u32,
    pub mixed: bool,
}

/// `(|estimate| − error) / (2·d_hat)`, floored at 0, where `d_hat` bounds
/// the defect of the homogeneous quasimorphism being estimated.
pub fn bavard_formula(estimate: Rat, error_radius: Rat, d_hat: Rat) -> Result<Rat> {
    if d_hat.is_zero() {
        return Err(Error::DegenerateDefect);
    }
    Ok(rat::max((estimate.abs() - error_radius) / (d_hat * 2), Rat::zero()))
}

/// Bavard lower bound from `φ(gᴺ)/N`. The homogenization of `φ` has defect
/// at most `2D`, which is the `d_hat` used.
pub fn bavard_lower(phi: &Quasimorphism, g: &Word, n: u32, mixed: bool) -> Result<BavardBound> {
    let d = phi
        .certified_defect_upper
        .ok_or_else(|| Error::InvalidParameter(format!("`{}` has no certified defect bound", phi.name)))?;
    if d.is_zero() {
        return Err(Error::DegenerateDefect);
    }
    let h = homogenize_estimate(phi, g, n)?;
    let err = h.error_radius.unwrap_or(d / rat::int(n as i64));
    let d_hat = d * 2;
    Ok(BavardBound {
        value: bavard_formula(h.value, err, d_hat)?,
        quasimorphism: phi.name.clone(),
        d_upper: d,
        d_hat_upper: d_hat,
        homogenized_estimate: h.value,
        error_radius: err,
        power: n,
        mixed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SclBoundReport {
    pub element: String,
    #[serde(with = "rat::serde_opt_rat")]
    pub lower: Option<Rat>,
    pub lower_provenance: Option<String>,
    #[serde(with = "rat::serde_opt_rat")]
    pub upper: Option<Rat>,
    pub upper_provenance: Option<String>,
    pub mixed: bool,
}

impl SclBoundReport {
    pub fn ordered(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => l <= u,
            _ => true,
        }
    }
}

/// Search and quasimorphism settings shared by the scl reports.
#[derive(Clone, Debug)]
pub struct SclSearch {
    pub ns: Vec<u32>,
    pub q: usize,
    pub homogenization_power: u32,
    /// Conjugation samples `(k, g)` for the invariance audit.
    pub audit_samples: Vec<(Word, Word)>,
}

/// Best bounds for `scl_G(g)` (`mixed = false`, `table` built with
/// `K = G`) or `scl_{G,K}(g)`. Mixed lower bounds use only
/// quasimorphisms that claim invariance and pass the audit; plain lower
/// bounds are also valid mixed lower bounds.
pub fn scl_bounds(
    ctx: &GroupContext,
    sub: &SubgroupSpec,
    table: &CommutatorTable,
    g: &Word,
    family: &[Quasimorphism],
    search: &SclSearch,
    mixed: bool,
) -> Result<SclBoundReport> {
    let mut lower: Option<(Rat, String)> = None;
    let mut take = |v: Rat, why: String| {
        if lower.as_ref().is_none_or(|(l, _)| v > *l) {
            lower = Some((v, why));
        }
    };
    for phi in family {
        let domain_is_g = matches!(phi.domain(), SubgroupSpec::Whole);
        if !domain_is_g {
            if !mixed || !phi.flags.invariant_claimed {
                continue;
            }
            if qinv_defect_estimate(phi, &search.audit_samples)?.value > Rat::zero() {
                continue;
            }
        }
        match bavard_lower(phi, g, search.homogenization_power, !domain_is_g) {
            Ok(b) => take(
                b.value,
                format!(
                    "bavard({}, D={}, N={}){}",
                    b.quasimorphism,
                    rat::format(&b.d_upper),
                    b.power,
                    if b.mixed { ", mixed constant 1/(2D) by analogy" } else { "" }
                ),
            ),
            Err(Error::DegenerateDefect) | Err(Error::NotInDomain(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut upper: Option<(Rat, String)> = None;
    for (n, cl, v) in scl_upper_estimate(ctx, sub, table, g, &search.ns, search.q)? {
        if upper.as_ref().is_none_or(|(u, _)| v < *u) {
            upper = Some((v, format!("cl(g^{n}) <= {cl}, radius {}", table.radius)));
        }
    }
    let (lower, lower_provenance) = lower.map_or((None, None), |(v, p)| (Some(v), Some(p)));
    let (upper, upper_provenance) = upper.map_or((None, None), |(v, p)| (Some(v), Some(p)));
    Ok(SclBoundReport { element: ctx.format(g), lower, lower_provenance, upper, upper_provenance, mixed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilipRow {
    pub element: String,
    pub scl_g: SclBoundReport,
    pub scl_gk: SclBoundReport,
    /// Interval for `scl_G / scl_{G,K}`.
    #[serde(with = "rat::serde_opt_rat")]
    pub ratio_lo: Option<Rat>,
    #[serde(with = "rat::serde_opt_rat")]
    pub ratio_hi: Option<Rat>,
    /// Least `λ ≥ 1` with the interval meeting `[1/λ, λ]`.
    #[serde(with = "rat::serde_opt_rat")]
    pub lambda: Option<Rat>,
    pub inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilipReport {
    pub rows: Vec<BilipRow>,
    #[serde(with = "rat::serde_opt_rat")]
    pub lambda: Option<Rat>,
}

pub fn bilip_report(
    ctx: &GroupContext,
    sub: &SubgroupSpec,
    samples: &[Word],
    family: &[Quasimorphism],
    search: &SclSearch,
    radius: usize,
    budget: usize,
) -> Result<BilipReport> {
    let whole = SubgroupSpec::Whole;
    let plain = CommutatorTable::build(ctx, &whole, radius, budget)?;
    let mixed = CommutatorTable::build(ctx, sub, radius, budget)?;
    let mut rows = Vec::new();
    for g in samples {
        let sg = scl_bounds(ctx, &whole, &plain, g, family, search, false)?;
        let mut sgk = scl_bounds(ctx, sub, &mixed, g, family, search, true)?;
        // scl_{G,K} ≥ scl_G.
        if let Some(l) = sg.lower {
            if sgk.lower.is_none_or(|m| l > m) {
                sgk.lower = Some(l);
                sgk.lower_provenance = sg.lower_provenance.clone().map(|p| format!("plain {p}"));
            }
        }
        let lo = match (sg.lower, sgk.upper) {
            (Some(a), Some(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        };
        let hi = match (sg.upper, sgk.lower) {
            (Some(a), Some(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        };
        let lambda = match (lo, hi) {
            (Some(l), Some(h)) if !h.is_zero() => Some(rat::max(rat::max(l, h.recip()), rat::int(1))),
            _ => None,
        };
        rows.push(BilipRow {
            element: ctx.format(g),
            inconclusive: lo.is_none() && hi.is_none(),
            scl_g: sg,
            scl_gk: sgk,
            ratio_lo: lo,
            ratio_hi: hi,
            lambda,
        });
    }
    let lambda = rows.iter().filter_map(|r| r.lambda).max();
    Ok(BilipReport { rows, lambda })
}
