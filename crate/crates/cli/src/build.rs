//! Turns a validated scenario into core objects.

use std::sync::Arc;

use qmx_core::group::{GroupContext, GroupPresentation, IntMatrix, SubgroupSpec};
use qmx_core::qm::{QmFlags, Quasimorphism};
use qmx_core::rat;
use qmx_core::relcayley::RelAlphabet;
use qmx_core::{Alphabet, Result, Word};

use crate::scenario::{DomainDecl, GroupType, QmKindDecl, Scenario, SubgroupType, TargetType};

pub struct Built {
    pub ctx: Arc<GroupContext>,
    pub sub: SubgroupSpec,
    /// Relative alphabet; the pool is empty when none is declared.
    pub alph: Option<RelAlphabet>,
    /// In declaration order.
    pub qms: Vec<Quasimorphism>,
}

impl Built {
    pub fn qm(&self, name: &str) -> Option<&Quasimorphism> {
        self.qms.iter().find(|q| q.name == name)
    }

    pub fn parse(&self, s: &str) -> Result<Word> {
        self.ctx.parse(s)
    }

    pub fn parse_all(&self, ws: &[String]) -> Result<Vec<Word>> {
        ws.iter().map(|w| self.ctx.parse(w)).collect()
    }
}

pub fn group_context(sc: &Scenario) -> Result<GroupContext> {
    let g = &sc.group;
    let alph = Alphabet::new(g.generators.iter().cloned())?;
    let rels = g.relators.iter().map(|r| alph.parse(r)).collect::<Result<Vec<_>>>()?;
    match g.kind {
        GroupType::Free => Ok(GroupContext::free(alph)),
        GroupType::FreeAbelian => Ok(GroupContext::free_abelian(alph)),
        GroupType::SmallCancellation => {
            let lambda = g.lambda.map(|l| l.0).unwrap_or(rat::ratio(1, 6));
            GroupContext::small_cancellation(GroupPresentation::new(alph, rels)?, lambda)
        }
        GroupType::Matrices => {
            let ms = g.matrices.as_deref().unwrap_or_default();
            let images = ms.iter().map(|m| IntMatrix::from_rows(m)).collect::<Result<Vec<_>>>()?;
            GroupContext::matrices(GroupPresentation::new(alph, rels)?, images)
        }
    }
}

pub fn build(sc: &Scenario) -> Result<Built> {
    let ctx = Arc::new(group_context(sc)?);
    let s = &sc.subgroup;
    let sub = match s.kind {
        SubgroupType::Whole => SubgroupSpec::Whole,
        SubgroupType::Kernel => {
            let t = s.target.as_ref().expect("validated");
            let talph = Alphabet::new(t.generators.iter().cloned())?;
            let target = Arc::new(match t.kind {
                TargetType::Free => GroupContext::free(talph),
                TargetType::FreeAbelian => GroupContext::free_abelian(talph),
            });
            let images = s.images.as_deref().unwrap_or_default().iter().map(|w| target.parse(w)).collect::<Result<_>>()?;
            SubgroupSpec::kernel(&ctx, target, images)?
        }
        SubgroupType::NormalClosure => {
            let words = s.words.as_deref().unwrap_or_default().iter().map(|w| ctx.parse(w)).collect::<Result<_>>()?;
            SubgroupSpec::normal_closure(&ctx, words, s.lambda.map(|l| l.0).unwrap_or(rat::ratio(1, 6)))?
        }
    };
    let alph = match &sc.relative {
        None => None,
        Some(r) => {
            let x = r.x.iter().map(|w| ctx.parse(w)).collect::<Result<_>>()?;
            let pool = r.k_pool.as_deref().unwrap_or_default().iter().map(|w| ctx.parse(w)).collect::<Result<_>>()?;
            Some(RelAlphabet::new(ctx.clone(), sub.clone(), x, pool)?)
        }
    };
    let mut qms: Vec<Quasimorphism> = Vec::new();
    for d in &sc.quasimorphisms {
        let domain = match d.domain {
            DomainDecl::K => sub.clone(),
            DomainDecl::G => SubgroupSpec::Whole,
        };
        let mut q = match d.kind {
            QmKindDecl::ExponentSum => Quasimorphism::exponent_sum(
                ctx.clone(),
                domain,
                d.weights.as_deref().unwrap_or_default().iter().map(|w| w.0).collect(),
            )?,
            QmKindDecl::Brooks => Quasimorphism::brooks_little(ctx.clone(), domain, ctx.parse(d.pattern.as_deref().unwrap_or_default())?)?,
            QmKindDecl::Homogenized => {
                let base = qms.iter().find(|q| Some(q.name.as_str()) == d.base.as_deref()).expect("validated").clone();
                Quasimorphism::homogenized(base, d.power.unwrap_or(1))?
            }
            QmKindDecl::MatrixEntry => {
                let hom = d.homomorphism.unwrap_or(false);
                let flags = QmFlags { antisymmetric: hom, homomorphism: hom, invariant_claimed: d.invariant_claimed.unwrap_or(false) };
                Quasimorphism::matrix_entry(ctx.clone(), domain, d.row.unwrap_or(0), d.col.unwrap_or(0), flags)
            }
            QmKindDecl::Constant => Quasimorphism::constant(ctx.clone(), domain, d.value.map(|v| v.0).unwrap_or_default()),
        };
        q.name = d.name.clone();
        if let Some(v) = d.invariant_claimed {
            q.flags.invariant_claimed = v;
        }
        if let Some(v) = d.certified_defect {
            q.certified_defect_upper = Some(v.0);
        }
        if let Some(v) = d.certified_qinv {
            q.certified_qinv_upper = Some(v.0);
        }
        qms.push(q);
    }
    Ok(Built { ctx, sub, alph, qms })
}
