//! Extension of a quasimorphism on a normal subgroup `K` to the ambient
//! group by the penalised infimum `Φ_C(g) = inf{φ̃_C(a) : θ(a) = g}`,
//! computed by bounded search with certified lower bounds.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{membership, CayleyBall};
use crate::par;
use crate::qm::{defect_estimate, QmFlags, Quasimorphism};
use crate::rat::{self, Rat};
use crate::relcayley::{is_quasigeodesic, path_of, phi_tilde_unchecked, PathMetric, RelAlphabet, RelWord, Syllable};
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionParams {
    #[serde(with = "rat::serde_rat")]
    pub c0: Rat,
    #[serde(with = "rat::serde_rat")]
    pub d_upper: Rat,
    #[serde(with = "rat::serde_rat")]
    pub c: Rat,
    #[serde(with = "rat::serde_rat")]
    pub epsilon: Rat,
    #[serde(with = "rat::serde_rat")]
    pub qg_lambda: Rat,
    #[serde(with = "rat::serde_rat")]
    pub qg_mu: Rat,
    pub x_length_cap: usize,
    /// Largest `upper − lower` still reported as certified.
    #[serde(with = "rat::serde_rat")]
    pub slack: Rat,
    pub max_candidates: usize,
}

impl ExtensionParams {
    /// `C = 20·C₀ + 11·D`, `ε = C₀/2`.
    pub fn new(c0: Rat, d_upper: Rat, x_length_cap: usize) -> Result<Self> {
        if c0 <= Rat::zero() {
            return Err(Error::InvalidParameter("C0 must be positive".into()));
        }
        if d_upper < Rat::zero() {
            return Err(Error::InvalidParameter("D_upper must be nonnegative".into()));
        }
        Ok(ExtensionParams {
            c0,
            d_upper,
            c: c0 * 20 + d_upper * 11,
            epsilon: c0 / 2,
            qg_lambda: rat::int(3),
            qg_mu: rat::int(2),
            x_length_cap,
            slack: Rat::zero(),
            max_candidates: 1_000_000,
        })
    }

    pub fn with_c(mut self, c: Rat) -> Result<Self> {
        if c < self.c0 * 20 + self.d_upper * 11 {
            return Err(Error::InvalidParameter(format!("C = {} is below 20·C0 + 11·D", rat::format(&c))));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_epsilon(mut self, eps: Rat) -> Result<Self> {
        if eps <= Rat::zero() || eps >= self.c0 {
            return Err(Error::InvalidParameter("epsilon must lie in (0, C0)".into()));
        }
        self.epsilon = eps;
        Ok(self)
    }

    pub fn with_slack(mut self, slack: Rat) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_max_candidates(mut self, n: usize) -> Self {
        self.max_candidates = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionValue {
    pub lower: Rat,
    pub upper: Rat,
    /// Preimage attaining `upper`.
    pub witness: RelWord,
    pub certified: bool,
    /// Largest X-length searched.
    pub searched: usize,
    pub candidates: usize,
}

/// The extension problem for one `(φ, X, K)` triple, with a value cache.
pub struct Extension {
    alph: RelAlphabet,
    phi: Quasimorphism,
    params: ExtensionParams,
    /// Quasi-invariance bound used when rebalancing K-letters.
    dg: Rat,
    cache: Mutex<HashMap<Word, ExtensionValue>>,
}

impl std::fmt::Debug for Extension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extension").field("phi", &self.phi.name).field("params", &self.params).finish()
    }
}

impl Extension {
    pub fn new(alph: RelAlphabet, phi: Quasimorphism, params: ExtensionParams) -> Result<Self> {
        if !phi.flags.antisymmetric {
            return Err(Error::InvalidParameter("the extension needs an antisymmetric quasimorphism".into()));
        }
        if !alph.subgroup().is_normal() {
            return Err(Error::StrategyUnsupported("extension search needs a normal subgroup".into()));
        }
        let dg = if phi.flags.invariant_claimed {
            Rat::zero()
        } else if let Some(q) = phi.certified_qinv_upper {
            q
        } else {
            params.d_upper * 2
        };
        Ok(Extension { alph, phi, params, dg, cache: Mutex::new(HashMap::new()) })
    }

    pub fn params(&self) -> &ExtensionParams {
        &self.params
    }

    pub fn alphabet(&self) -> &RelAlphabet {
        &self.alph
    }

    pub fn phi(&self) -> &Quasimorphism {
        &self.phi
    }

    /// Quasi-invariance constant in use.
    pub fn dg(&self) -> Rat {
        self.dg
    }

    /// `φ̃_C(a)`, trusting that the K-letters lie in K.
    pub fn phi_tilde_c(&self, a: &RelWord) -> Result<Rat> {
        Ok(phi_tilde_unchecked(&self.phi, a)? + self.params.c * rat::int(a.x_count() as i64))
    }

    fn pool_rank(&self, a: &RelWord) -> usize {
        a.syllables
            .iter()
            .filter(|s| matches!(s, Syllable::K(k) if !self.alph.k_pool().contains(k)))
            .count()
    }

    /// Cached `extension_value`.
    pub fn value(&self, g: &Word) -> Result<ExtensionValue> {
        let g = g.free_reduce();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&g) {
            return Ok(v.clone());
        }
        let v = self.search(&g)?;
        self.cache.lock().expect("cache lock").insert(g, v.clone());
        Ok(v)
    }

    /// Points evaluated so far whose interval is not closed.
    pub fn uncertified(&self) -> Vec<Word> {
        let mut out: Vec<Word> =
            self.cache.lock().expect("cache lock").iter().filter(|(_, v)| !v.certified).map(|(g, _)| g.clone()).collect();
        out.sort();
        out
    }

    fn search(&self, g: &Word) -> Result<ExtensionValue> {
        let alph = &self.alph;
        let p = &self.params;
        let (c, c0, d) = (p.c, p.c0, p.d_upper);
        let ci = |m: usize| rat::int(m as i64);

        let mut upper: Option<(Rat, usize, usize, RelWord)> = None;
        let mut best_len: Vec<Option<Rat>> = Vec::new();
        let mut reference: Option<(Rat, usize, usize)> = None; // (φ̃(b), |b|_X, |b|)
        let mut candidates = 0usize;
        let mut last = None;
        let mut m = 0usize;

        let consider = |a: RelWord, val: Rat, upper: &mut Option<(Rat, usize, usize, RelWord)>| {
            let key = (val, self.pool_rank(&a), a.len());
            let better = match upper {
                None => true,
                Some((v, r, l, _)) => key < (*v, *r, *l),
            };
            if better {
                *upper = Some((key.0, key.1, key.2, a));
            }
        };

        loop {
            if m > p.x_length_cap {
                break;
            }
            if let Some((pb, mb, lb)) = reference {
                let qg_cap = rat::ceil(&(p.qg_lambda * ci(lb) + p.qg_mu)) as usize;
                let alg = pb - d * 2 - c0 * 4 * ci(mb) + (c - c0 * 4) * ci(m);
                if m > qg_cap || upper.as_ref().is_some_and(|u| alg >= u.0) {
                    break;
                }
            }
            best_len.push(None);
            for w in alph.x_words(m) {
                candidates += 1;
                if candidates > p.max_candidates {
                    return Err(Error::BudgetExceeded { what: "extension candidates".into(), limit: p.max_candidates });
                }
                let tw = alph.x_word_value(&w);
                let k2 = tw.inverse().mul(g);
                if !alph.in_k(&k2)? {
                    continue;
                }
                let pen = c * ci(m);
                let v2 = self.phi.eval_unchecked(&k2)?;
                best_len[m] = Some(best_len[m].map_or(v2, |b| b.min(v2)));
                let a2 = alph.rel_word(&w, k2.clone());
                if reference.is_none() {
                    reference = Some((v2, a2.x_count(), a2.len()));
                }
                consider(a2, v2 + pen, &mut upper);

                let k1 = g.mul(&tw.inverse());
                let mut s1 = vec![Syllable::K(k1.clone())];
                s1.extend(w.iter().map(|&i| Syllable::X(i)));
                let a1 = alph.normal_form_unchecked(&RelWord::new(s1));
                consider(a1, self.phi.eval_unchecked(&k1)? + pen, &mut upper);

                for pk in alph.k_pool() {
                    let k3 = tw.inverse().mul(&pk.inverse()).mul(g);
                    let mut s3 = vec![Syllable::K(pk.clone())];
                    s3.extend(w.iter().map(|&i| Syllable::X(i)));
                    s3.push(Syllable::K(k3.clone()));
                    let a3 = alph.normal_form_unchecked(&RelWord::new(s3));
                    consider(a3, self.phi.eval_unchecked(&pk.mul(&k3))? + pen, &mut upper);
                }
            }
            last = Some(m);
            m += 1;
        }

        let (Some((upper, _, _, witness)), Some((pb, mb, _))) = (upper, reference) else {
            return Err(Error::NoCandidateFound(alph.ambient().format(g)));
        };
        let l = last.unwrap_or(0);
        let alg = |m: usize| pb - d * 2 - c0 * 4 * ci(mb) + (c - c0 * 4) * ci(m);
        let region = |m: usize| -> Option<Rat> {
            let slack = self.dg * ci(m + 1) + d * 2 * ci(m);
            (0..=m)
                .filter(|&len| len % 2 == m % 2)
                .filter_map(|len| best_len[len])
                .min()
                .map(|b| b + c * ci(m) - slack)
        };
        let mut inner = alg(l + 1);
        for m in 0..=l {
            let lb = if m == 0 {
                best_len[0]
            } else {
                region(m).map(|r| rat::max(r, alg(m)))
            };
            if let Some(lb) = lb {
                inner = inner.min(lb);
            }
        }
        let lower = rat::max(pb - c * ci(mb) - d, inner);
        Ok(ExtensionValue {
            lower,
            upper,
            certified: upper - lower <= p.slack,
            witness,
            searched: l,
            candidates,
        })
    }

    /// `Φ'_C(g) = (Φ_C(g) − Φ_C(g⁻¹))/2` using upper values.
    pub fn antisymmetrized(&self, g: &Word) -> Result<Rat> {
        let (a, b) = (self.value(g)?, self.value(&g.inverse())?);
        Ok((a.upper - b.upper) / rat::int(2))
    }
}

pub fn phi_c_upper(ext: &Extension, g: &Word) -> Result<(Rat, RelWord)> {
    let v = ext.value(g)?;
    Ok((v.upper, v.witness))
}

/// Lower bound for `Φ_C(g)`; the reference preimage is the first one the
/// search meets, so this agrees with `extension_value`.
pub fn phi_c_lower(ext: &Extension, g: &Word) -> Result<Rat> {
    Ok(ext.value(g)?.lower)
}

pub fn extension_value(ext: &Extension, g: &Word) -> Result<ExtensionValue> {
    ext.value(g)
}

/// `Φ'_C` as a quasimorphism on the whole group.
pub fn extended_qm(ext: Arc<Extension>) -> Quasimorphism {
    let ambient = ext.alph.ambient().clone();
    let name = format!("{}_ext", ext.phi.name);
    let flags = QmFlags { antisymmetric: true, homomorphism: false, invariant_claimed: false };
    Quasimorphism::custom(name, ambient, crate::group::SubgroupSpec::Whole, flags, move |g| ext.antisymmetrized(g))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusDefect {
    pub radius: usize,
    #[serde(with = "rat::serde_rat")]
    pub defect: Rat,
    pub pairs: usize,
    pub witness: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    #[serde(with = "rat::serde_rat")]
    pub empirical_defect: Rat,
    pub per_radius: Vec<RadiusDefect>,
    pub sample_spec: String,
}

/// Empirical defect of `big_phi` on pairs drawn from the balls of the given
/// radii. Samples are nested: the pairs used at a radius are reused at
/// every larger one, so the reported values are nondecreasing.
pub fn defect_report(
    big_phi: &Quasimorphism,
    ball: &CayleyBall,
    radii: &[usize],
    pair_budget: usize,
    seed: u64,
) -> Result<DefectReport> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut radii = radii.to_vec();
    radii.sort_unstable();
    let mut pairs: Vec<(Word, Word)> = Vec::new();
    let mut per_radius = Vec::new();
    let mut running = Rat::zero();
    for &r in &radii {
        if r > ball.radius {
            return Err(Error::InvalidParameter(format!("radius {r} exceeds the ball radius {}", ball.radius)));
        }
        let n = ball.dist.iter().filter(|&&d| d <= r).count();
        let fresh: Vec<(Word, Word)> = if pair_budget == 0 {
            Vec::new()
        } else if n * n <= pair_budget {
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| ball.dist[i].max(ball.dist[j]) == r || per_radius.is_empty())
                .map(|(i, j)| (ball.elements[i].clone(), ball.elements[j].clone()))
                .collect()
        } else {
            (0..pair_budget)
                .map(|_| {
                    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    (ball.elements[i].clone(), ball.elements[j].clone())
                })
                .collect()
        };
        let est = defect_estimate(big_phi, &fresh)?;
        pairs.extend(fresh);
        let witness = if est.value > running || per_radius.is_empty() { est.witness.clone() } else { None };
        running = rat::max(running, est.value);
        per_radius.push(RadiusDefect { radius: r, defect: running, pairs: pairs.len(), witness });
    }
    Ok(DefectReport {
        empirical_defect: running,
        sample_spec: if pairs.is_empty() { "empty".into() } else { format!("{} pairs over radii {:?}", pairs.len(), radii) },
        per_radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub total: usize,
    pub passed: usize,
    #[serde(with = "rat::serde_rat")]
    pub fraction: Rat,
    /// Indices of failing witnesses.
    pub failures: Vec<usize>,
}

fn audit_report(results: Vec<bool>) -> AuditReport {
    let total = results.len();
    let passed = results.iter().filter(|&&b| b).count();
    AuditReport {
        total,
        passed,
        fraction: if total == 0 { rat::int(1) } else { rat::ratio(passed as i64, total as i64) },
        failures: results.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i).collect(),
    }
}

/// Runs the `(λ, μ)`-quasi-geodesic check on the path of each witness.
pub fn witness_quasigeodesic_audit(
    alph: &RelAlphabet,
    witnesses: &[RelWord],
    metric: &(dyn PathMetric + Sync),
    lambda: Rat,
    mu: Rat,
) -> Result<AuditReport> {
    let idx: Vec<usize> = (0..witnesses.len()).collect();
    let results = par::try_map(&idx, |&i| {
        let path = path_of(alph, &witnesses[i]);
        match is_quasigeodesic(metric, &path, lambda, mu) {
            Err(Error::VertexNotInBall(_)) => Err(Error::WitnessOutsideBall(i)),
            other => other,
        }
    })?;
    Ok(audit_report(results))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubpathAudit {
    pub subpaths: usize,
    pub violations: usize,
    /// Largest `φ̃_C(sub) − Φ_C(endpoints)` seen.
    #[serde(with = "rat::serde_rat")]
    pub max_excess: Rat,
}

/// For every subword `a[i..j]` of each witness, compares `φ̃_C` of the
/// subword with the best value found for the element it represents; the
/// excess must stay within `4·D + ε`.
pub fn subpath_audit(ext: &Extension, witnesses: &[RelWord]) -> Result<SubpathAudit> {
    let bound = ext.params.d_upper * 4 + ext.params.epsilon;
    let per = par::try_map(witnesses, |a| {
        let mut out = (0usize, 0usize, None::<Rat>);
        for i in 0..a.len() {
            for j in i + 1..=a.len() {
                let sub = a.subword(i, j);
                let h = ext.alph.theta(&sub);
                let excess = ext.phi_tilde_c(&sub)? - ext.value(&h)?.upper;
                out.0 += 1;
                if excess > bound {
                    out.1 += 1;
                }
                out.2 = Some(out.2.map_or(excess, |e: Rat| e.max(excess)));
            }
        }
        Ok(out)
    })?;
    Ok(SubpathAudit {
        subpaths: per.iter().map(|p| p.0).sum(),
        violations: per.iter().map(|p| p.1).sum(),
        max_excess: per.iter().filter_map(|p| p.2).max().unwrap_or(Rat::zero()),
    })
}

/// Violations of `|φ̃_C(ab) − φ̃_C(a) − φ̃(b)| ≤ C·|b|_X + D` over the pairs,
/// with `a` and `ab` in normal form.
pub fn coarse_triangle_violations(ext: &Extension, pairs: &[(RelWord, RelWord)]) -> Result<usize> {
    let c = ext.params.c;
    let d = ext.params.d_upper;
    let bad = par::try_map(pairs, |(a, b)| {
        let a = &ext.alph.normal_form_unchecked(a);
        let ab = ext.alph.normal_form_unchecked(&a.concat(b));
        let lhs = (ext.phi_tilde_c(&ab)? - ext.phi_tilde_c(a)? - phi_tilde_unchecked(&ext.phi, b)?).abs();
        Ok(lhs > c * rat::int(b.x_count() as i64) + d)
    })?;
    Ok(bad.into_iter().filter(|&b| b).count())
}

/// Elements of a ball lying in K.
pub fn kernel_part(alph: &RelAlphabet, ball: &CayleyBall) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for w in &ball.elements {
        if membership(alph.ambient(), alph.subgroup(), w)? {
            out.push(w.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ball, GroupContext, SubgroupSpec};
    use crate::relcayley::NormalRelMetric;
    use crate::word::Alphabet;

    fn scenario_a() -> (RelAlphabet, Quasimorphism) {
        let g = Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()));
        let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
        let k = SubgroupSpec::kernel(&g, z.clone(), vec![z.parse("t").unwrap(), Word::identity()]).unwrap();
        let x = vec![g.parse("a").unwrap(), g.parse("a^-1").unwrap()];
        let pool = vec![g.parse("b").unwrap(), g.parse("b^-1").unwrap()];
        let alph = RelAlphabet::new(g.clone(), k.clone(), x, pool).unwrap();
        let phi = Quasimorphism::exponent_sum(g, k, vec![rat::int(0), rat::int(1)]).unwrap();
        (alph, phi)
    }

    fn ext_a() -> Extension {
        let (alph, phi) = scenario_a();
        Extension::new(alph, phi, ExtensionParams::new(rat::int(1), rat::int(0), 12).unwrap()).unwrap()
    }

    #[test]
    fn params_defaults() {
        let p = ExtensionParams::new(rat::int(1), rat::int(0), 8).unwrap();
        assert_eq!((p.c, p.epsilon), (rat::int(20), rat::ratio(1, 2)));
        assert!(p.clone().with_c(rat::int(19)).is_err());
        assert!(p.clone().with_epsilon(rat::int(1)).is_err());
        assert!(ExtensionParams::new(rat::int(0), rat::int(0), 8).is_err());
    }

    #[test]
    fn scenario_a_values() {
        let e = ext_a();
        let g = e.alphabet().ambient().clone();
        let v = e.value(&g.parse("a^2 b").unwrap()).unwrap();
        assert_eq!((v.lower, v.upper, v.certified), (rat::int(41), rat::int(41), true));
        assert_eq!(v.witness.x_count(), 2);
        let v = e.value(&g.parse("a^-1 b^-1").unwrap()).unwrap();
        assert_eq!((v.lower, v.upper), (rat::int(19), rat::int(19)));
        let v = e.value(&Word::identity()).unwrap();
        assert_eq!((v.lower, v.upper), (rat::int(0), rat::int(0)));
        assert!(v.witness.is_empty());
        let k = g.parse("a b^2 a^-1 b").unwrap();
        let v = e.value(&k).unwrap();
        assert_eq!((v.lower, v.upper), (rat::int(3), rat::int(3)));
        assert_eq!(v.witness, RelWord::k(k));
    }

    #[test]
    fn scenario_a_extension_is_bexp() {
        let e = Arc::new(ext_a());
        let g = e.alphabet().ambient().clone();
        let big = extended_qm(e.clone());
        for w in &ball(&g, 3, 10_000).unwrap().elements {
            let bexp = rat::int(w.exponent_vector(2)[1]);
            assert_eq!(big.eval(w).unwrap(), bexp);
        }
        assert!(e.uncertified().is_empty());
    }

    #[test]
    fn witnesses_are_quasigeodesic() {
        let e = ext_a();
        let g = e.alphabet().ambient().clone();
        let ws: Vec<RelWord> = ball(&g, 3, 10_000)
            .unwrap()
            .elements
            .iter()
            .map(|w| e.value(w).unwrap().witness)
            .collect();
        let metric = NormalRelMetric { alph: e.alphabet(), max_x_length: 8 };
        let rep = witness_quasigeodesic_audit(e.alphabet(), &ws, &metric, rat::int(3), rat::int(2)).unwrap();
        assert_eq!(rep.fraction, rat::int(1));
        let sub = subpath_audit(&e, &ws).unwrap();
        assert_eq!(sub.violations, 0);
    }

    #[test]
    fn empty_defect_report() {
        let e = Arc::new(ext_a());
        let g = e.alphabet().ambient().clone();
        let b = ball(&g, 2, 1000).unwrap();
        let rep = defect_report(&extended_qm(e), &b, &[1, 2], 0, 1).unwrap();
        assert_eq!((rep.empirical_defect, rep.sample_spec.as_str()), (rat::int(0), "empty"));
    }

    #[test]
    fn monotone_in_cap() {
        let (alph, phi) = scenario_a();
        let g = alph.ambient().clone();
        let w = g.parse("b a^3 b^-2 a^-1").unwrap();
        let mut prev: Option<ExtensionValue> = None;
        for cap in 0..6 {
            let e = Extension::new(alph.clone(), phi.clone(), ExtensionParams::new(rat::int(1), rat::int(0), cap).unwrap())
                .unwrap();
            let Ok(v) = e.value(&w) else { continue };
            if let Some(p) = &prev {
                assert!(v.upper <= p.upper && v.lower >= p.lower);
            }
            prev = Some(v);
        }
        assert!(prev.unwrap().certified);
    }
}
