//! Runs the tasks of a scenario in order and collects a report.

use std::sync::Arc;

use log::{info, warn};
use qmx_core::control::{
    close_x_words, conjugation_relators, control_profile, distortion_check, kernel_enumerate, relator_sup_check,
    CentralExtensionCtx,
};
use qmx_core::extend::{
    coarse_triangle_violations, defect_report, extended_qm, kernel_part, subpath_audit, witness_quasigeodesic_audit,
    Extension, ExtensionParams,
};
use qmx_core::group::{
    ball, membership, random_conjugate_products, search_small_cancellation_relator, GroupContext, GroupPresentation,
    SubgroupSpec,
};
use qmx_core::qm::{QmKind, Quasimorphism};
use qmx_core::relcayley::{estimate_delta, phi_tilde_unchecked, rel_ball, sample_rel_pairs, NormalRelMetric, RelAlphabet};
use qmx_core::scl::{bilip_report, scl_bounds, CommutatorTable, SclBoundReport, SclSearch};
use qmx_core::{par, rat, Error, Rat, Word};
use serde::Serialize;
use serde_json::{json, Value};

use crate::build::{build, Built};
use crate::error::CliError;
use crate::scenario::{
    CentralDistortionParams, CheckControlledParams, DefectReportParams, EstimateDeltaParams, ExtendParams, Scenario,
    ScSearchParams, SclBoundsParams, TaskDecl,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Failed,
    BudgetExceeded,
    Skipped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskOutcome {
    pub index: usize,
    pub name: String,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Value,
    pub table: Table,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: Value,
    pub seed: u64,
    pub versions: Value,
    pub tasks: Vec<TaskOutcome>,
}

impl Report {
    pub fn task(&self, name: &str) -> Option<&TaskOutcome> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn all_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Ok)
    }

    /// Exit code: 0 when every task succeeded, 4 when a budget ran out,
    /// 3 for any other failure.
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().any(|t| t.status == TaskStatus::BudgetExceeded) {
            4
        } else if self.all_ok() {
            0
        } else {
            3
        }
    }
}

fn r(x: &Rat) -> Value {
    Value::String(rat::format(x))
}

fn opt_r(x: &Option<Rat>) -> Value {
    x.as_ref().map_or(Value::Null, r)
}

fn ser<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report values serialize")
}

#[derive(Default)]
struct State {
    c0: Option<Rat>,
    extension: Option<Arc<Extension>>,
}

struct Ctx<'a> {
    sc: &'a Scenario,
    built: &'a Built,
}

impl Ctx<'_> {
    fn alph(&self) -> Result<&RelAlphabet, CliError> {
        self.built.alph.as_ref().ok_or_else(|| CliError::Core(Error::InvalidParameter("no relative alphabet".into())))
    }

    fn qm(&self, name: &str) -> Result<&Quasimorphism, CliError> {
        self.built.qm(name).ok_or_else(|| CliError::Core(Error::InvalidParameter(format!("unknown quasimorphism `{name}`"))))
    }

    fn ball_budget(&self) -> usize {
        self.sc.budgets.max_ball_elements
    }
}

type TaskResult = Result<(Value, Table), CliError>;

/// Runs every task in file order. `seed` overrides the scenario seed.
pub fn run(sc: &Scenario, seed: Option<u64>) -> Result<Report, CliError> {
    let seed = seed.unwrap_or(sc.seed);
    let built = build(sc)?;
    let cx = Ctx { sc, built: &built };
    let mut state = State::default();
    let mut tasks = Vec::new();
    for (i, t) in sc.tasks.iter().enumerate() {
        info!("task {i}: {}", t.name());
        let task_seed = seed.wrapping_add(i as u64);
        let blocked = matches!(t, TaskDecl::DefectReport(_)) && state.extension.is_none();
        let res = if blocked {
            None
        } else {
            Some(match t {
                TaskDecl::CheckControlled(p) => check_controlled(&cx, &mut state, p),
                TaskDecl::EstimateDelta(p) => estimate_delta_task(&cx, p, task_seed),
                TaskDecl::Extend(p) => extend_task(&cx, &mut state, p),
                TaskDecl::DefectReport(p) => defect_report_task(&cx, &state, p, task_seed),
                TaskDecl::SclBounds(p) => scl_task(&cx, p),
                TaskDecl::CentralDistortion(p) => distortion_task(&cx, p),
                TaskDecl::SmallCancellationSearch(p) => sc_search_task(&cx, p, task_seed),
            })
        };
        let outcome = match res {
            None => TaskOutcome {
                index: i,
                name: t.name().into(),
                status: TaskStatus::Skipped,
                error: Some("no extension available: the extend task failed".into()),
                summary: Value::Null,
                table: Table::default(),
            },
            Some(Ok((summary, table))) => {
                TaskOutcome { index: i, name: t.name().into(), status: TaskStatus::Ok, error: None, summary, table }
            }
            Some(Err(e)) => {
                warn!("task {i} ({}) failed: {e}", t.name());
                let status = if e.exit_code() == 4 { TaskStatus::BudgetExceeded } else { TaskStatus::Failed };
                TaskOutcome {
                    index: i,
                    name: t.name().into(),
                    status,
                    error: Some(e.to_string()),
                    summary: Value::Null,
                    table: Table::default(),
                }
            }
        };
        tasks.push(outcome);
    }
    Ok(Report {
        scenario: ser(sc),
        seed,
        versions: json!({ "qmx": env!("CARGO_PKG_VERSION"), "qmx-core": qmx_core::VERSION }),
        tasks,
    })
}

/// Maps space-separated X entries to X indices.
fn x_indices(alph: &RelAlphabet, ctx: &GroupContext, sample: &str) -> Result<Vec<usize>, CliError> {
    sample
        .split_whitespace()
        .map(|tok| {
            let w = ctx.parse(tok)?;
            alph.x().iter().position(|x| x.free_reduce() == w.free_reduce()).ok_or_else(|| {
                CliError::Core(Error::InvalidParameter(format!("`{tok}` is not an entry of X")))
            })
        })
        .collect()
}

fn check_controlled(cx: &Ctx, state: &mut State, p: &CheckControlledParams) -> TaskResult {
    let alph = cx.alph()?;
    let phi = cx.qm(&p.qm)?;
    let ctx = alph.ambient();
    let mut kernel = if p.maxlen > 0 || p.x_word_samples.is_empty() {
        kernel_enumerate(alph, p.maxlen, p.solve_hole, cx.sc.budgets.max_candidates)?
    } else {
        Vec::new()
    };
    let idx = p.x_word_samples.iter().map(|s| x_indices(alph, ctx, s)).collect::<Result<Vec<_>, _>>()?;
    kernel.extend(close_x_words(alph, &idx)?);
    let verified = par::try_map(&kernel, |a| ctx.is_identity(&alph.theta(a)))?;
    let theta_failures = verified.iter().filter(|&&b| !b).count();
    let values = par::try_map(&kernel, |a| phi_tilde_unchecked(phi, a))?;
    let nonzero = values.iter().filter(|v| **v != Rat::default()).count();
    let profile = control_profile(phi, &kernel, p.onset)?;
    let relator_sup = relator_sup_check(phi, alph, &conjugation_relators(alph))?;
    state.c0 = Some(profile.clamped_c0());

    let mut table = Table::new(&["n", "max_abs_phi_tilde", "ratio"]);
    for ((n, v), (_, q)) in profile.per_length.iter().zip(profile.ratios()) {
        table.push(vec![n.to_string(), rat::format(v), rat::format(&q)]);
    }
    let summary = json!({
        "qm": phi.name,
        "kernel_elements": kernel.len(),
        "theta_failures": theta_failures,
        "phi_tilde_nonzero": nonzero,
        "profile": profile.per_length.iter().map(|(n, v)| json!([n, rat::format(v)])).collect::<Vec<_>>(),
        "fitted_C0": r(&profile.fitted_c0),
        "clamped_C0": r(&profile.clamped_c0()),
        "verdict": ser(&profile.verdict),
        "window": profile.window,
        "onset": profile.onset,
        "conjugation_relator_sup": r(&relator_sup),
    });
    Ok((summary, table))
}

fn estimate_delta_task(cx: &Ctx, p: &EstimateDeltaParams, seed: u64) -> TaskResult {
    let alph = cx.alph()?;
    let ctx = alph.ambient();
    let b = rel_ball(alph, p.radius, cx.ball_budget())?;
    let est = estimate_delta(&b, p.samples, seed)?;
    let mut table = Table::new(&["src", "dst", "label_kind", "label"]);
    for (u, v, kind, label) in b.edge_list(alph) {
        table.push(vec![ctx.format(&b.vertices[u]), ctx.format(&b.vertices[v]), kind.to_string(), label]);
    }
    let summary = json!({
        "delta": r(&est.delta),
        "triangles": est.triangles,
        "ball_size": est.ball_size,
        "radius": est.radius,
        "K_pool": alph.k_pool().iter().map(|k| ctx.format(k)).collect::<Vec<_>>(),
        "X": alph.x().iter().map(|x| ctx.format(x)).collect::<Vec<_>>(),
        "edges": table.rows.len(),
    });
    Ok((summary, table))
}

fn extend_task(cx: &Ctx, state: &mut State, p: &ExtendParams) -> TaskResult {
    let alph = cx.alph()?;
    let ctx = alph.ambient().clone();
    let phi = cx.qm(&p.qm)?;
    let c0 = p.c0.map(|v| v.0).or(state.c0).expect("validated");
    let d = phi
        .certified_defect_upper
        .ok_or_else(|| CliError::Core(Error::InvalidParameter(format!("`{}` has no certified defect bound", phi.name))))?;
    let mut params = ExtensionParams::new(c0, d, p.x_length_cap)?.with_max_candidates(cx.sc.budgets.max_candidates);
    if let Some(c) = p.c {
        params = params.with_c(c.0)?;
    }
    if let Some(e) = p.epsilon {
        params = params.with_epsilon(e.0)?;
    }
    if let Some(s) = p.slack {
        params = params.with_slack(s.0);
    }
    let ext = Arc::new(Extension::new(alph.clone(), phi.clone(), params)?);
    let b = ball(&ctx, p.radius, cx.ball_budget())?;
    let values = par::try_map(&b.elements, |w| ext.value(w))?;
    let big = extended_qm(ext.clone());

    let mut table = Table::new(&["element", "lower", "upper", "certified", "witness_length", "witness_x_count"]);
    let mut uncertified = Vec::new();
    for (w, v) in b.elements.iter().zip(&values) {
        table.push(vec![
            ctx.format(w),
            rat::format(&v.lower),
            rat::format(&v.upper),
            v.certified.to_string(),
            v.witness.len().to_string(),
            v.witness.x_count().to_string(),
        ]);
        if !v.certified {
            uncertified.push(ctx.format(w));
        }
    }

    let mut antisym = 0usize;
    let mut oracle_mismatch = 0usize;
    let oracle = p.compare_with.as_deref().map(|n| cx.qm(n)).transpose()?;
    for w in &b.elements {
        let v = big.eval(w)?;
        if big.eval(&w.inverse())? != -v {
            antisym += 1;
        }
        if let Some(o) = oracle {
            if o.eval_unchecked(w)? != v {
                oracle_mismatch += 1;
            }
        }
    }

    let ks = kernel_part(alph, &b)?;
    let mut exact = 0usize;
    for k in &ks {
        let v = ext.value(k)?;
        let f = phi.eval(k)?;
        if v.lower == f && v.upper == f {
            exact += 1;
        }
    }

    let mut summary = json!({
        "qm": phi.name,
        "params": ser(ext.params()),
        "DG": r(&ext.dg()),
        "radius": p.radius,
        "elements": b.len(),
        "certified": b.len() - uncertified.len(),
        "uncertified": uncertified,
        "kernel_exact": { "checked": ks.len(), "exact": exact },
        "antisymmetry_violations": antisym,
    });
    if let Some(o) = oracle {
        summary["oracle"] = json!({ "qm": o.name, "mismatches": oracle_mismatch });
    }
    if let Some(mx) = p.audit_max_x_length {
        let ws: Vec<_> = values.iter().filter(|v| v.certified).map(|v| v.witness.clone()).collect();
        let metric = NormalRelMetric { alph, max_x_length: mx };
        let audit = witness_quasigeodesic_audit(alph, &ws, &metric, rat::int(3), rat::int(2))?;
        let sub = subpath_audit(&ext, &ws)?;
        summary["quasigeodesic_audit"] = ser(&audit);
        summary["subpath_audit"] = ser(&sub);
    }
    state.extension = Some(ext);
    Ok((summary, table))
}

fn defect_report_task(cx: &Ctx, state: &State, p: &DefectReportParams, seed: u64) -> TaskResult {
    let ext = state.extension.clone().expect("checked by caller");
    let alph = ext.alphabet();
    let ctx = alph.ambient().clone();
    let phi = ext.phi();
    let big = extended_qm(ext.clone());
    let maxr = p.radii.iter().copied().max().unwrap_or(0);
    let b = ball(&ctx, maxr, cx.ball_budget())?;
    let rep = defect_report(&big, &b, &p.radii, p.pair_budget, seed)?;

    // Restriction to K against φ, with the homogenization error radius as
    // tolerance.
    let tolerance = match phi.kind() {
        QmKind::Homogenized { base, n } => base.certified_defect_upper.map(|d| d / rat::int(*n as i64)),
        _ => Some(Rat::default()),
    };
    let mut deviation = Rat::default();
    let ks = kernel_part(alph, &b)?;
    for k in &ks {
        deviation = rat::max(deviation, rat::abs(big.eval(k)? - phi.eval(k)?));
    }
    let plateau = match rep.per_radius.as_slice() {
        [.., a, b] if a.defect != Rat::default() => Some(b.defect / a.defect),
        _ => None,
    };
    let violations = if p.triangle_pairs > 0 {
        let pairs = sample_rel_pairs(alph, p.triangle_pairs, p.triangle_max_len, seed ^ 0x5eed);
        Some(coarse_triangle_violations(&ext, &pairs)?)
    } else {
        None
    };

    let mut table = Table::new(&["radius", "defect", "pairs"]);
    for row in &rep.per_radius {
        table.push(vec![row.radius.to_string(), rat::format(&row.defect), row.pairs.to_string()]);
    }
    let summary = json!({
        "empirical_defect": r(&rep.empirical_defect),
        "per_radius": ser(&rep.per_radius),
        "sample_spec": rep.sample_spec,
        "plateau_ratio": opt_r(&plateau),
        "restriction_to_K": {
            "checked": ks.len(),
            "max_deviation": r(&deviation),
            "tolerance": opt_r(&tolerance),
            "within": tolerance.is_some_and(|t| deviation <= t),
        },
        "coarse_triangle": violations.map(|v| json!({ "pairs": p.triangle_pairs, "violations": v })),
        "claims_upper_bound": false,
    });
    Ok((summary, table))
}

fn conjugation_samples(ctx: &GroupContext, sub: &SubgroupSpec, budget: usize) -> Result<Vec<(Word, Word)>, CliError> {
    let b = ball(ctx, 2, budget)?;
    let mut out = Vec::new();
    for k in &b.elements {
        if membership(ctx, sub, k)? {
            for g in &b.elements {
                out.push((k.clone(), g.clone()));
            }
        }
    }
    Ok(out)
}

fn scl_row(t: &mut Table, s: &SclBoundReport) {
    t.push(vec![
        s.element.clone(),
        s.lower.map(|v| rat::format(&v)).unwrap_or_default(),
        s.lower_provenance.clone().unwrap_or_default(),
        s.upper.map(|v| rat::format(&v)).unwrap_or_default(),
        s.upper_provenance.clone().unwrap_or_default(),
        s.mixed.to_string(),
    ]);
}

fn scl_task(cx: &Ctx, p: &SclBoundsParams) -> TaskResult {
    let ctx = &cx.built.ctx;
    let sub = &cx.built.sub;
    let family = p.family.iter().map(|n| cx.qm(n).cloned()).collect::<Result<Vec<_>, _>>()?;
    let elements = cx.built.parse_all(&p.elements)?;
    let search = SclSearch {
        ns: p.ns.clone(),
        q: p.q,
        homogenization_power: p.homogenization_power,
        audit_samples: conjugation_samples(ctx, sub, cx.ball_budget())?,
    };
    let budget = cx.sc.budgets.max_candidates;
    let mut table = Table::new(&["element", "lower", "lower_provenance", "upper", "upper_provenance", "mixed"]);
    let mut reports: Vec<SclBoundReport> = Vec::new();
    let mut summary = json!({ "radius": p.radius, "q": p.q, "ns": p.ns, "homogenization_power": p.homogenization_power });
    if p.bilip {
        let rep = bilip_report(ctx, sub, &elements, &family, &search, p.radius, budget)?;
        for row in &rep.rows {
            reports.push(row.scl_g.clone());
            reports.push(row.scl_gk.clone());
        }
        summary["bilip"] = ser(&rep);
    } else {
        let whole = SubgroupSpec::Whole;
        let plain = CommutatorTable::build(ctx, &whole, p.radius, budget)?;
        let mixed = if p.mixed { Some(CommutatorTable::build(ctx, sub, p.radius, budget)?) } else { None };
        for g in &elements {
            reports.push(scl_bounds(ctx, &whole, &plain, g, &family, &search, false)?);
            if let Some(m) = &mixed {
                reports.push(scl_bounds(ctx, sub, m, g, &family, &search, true)?);
            }
        }
    }
    for s in &reports {
        scl_row(&mut table, s);
    }
    if let Some(bad) = reports.iter().find(|s| !s.ordered()) {
        return Err(CliError::Assertion(format!("scl lower bound exceeds upper bound for {}", bad.element)));
    }
    summary["rows"] = ser(&reports);
    summary["ordered"] = Value::Bool(true);
    if reports.iter().any(|s| s.mixed) {
        summary["mixed_constant"] = Value::String("1/(2D) adopted for mixed bounds by analogy with the plain case".into());
    }
    Ok((summary, table))
}

fn distortion_task(cx: &Ctx, p: &CentralDistortionParams) -> TaskResult {
    let ctx = cx.built.ctx.clone();
    let z = ctx.parse(&p.z)?;
    let x_e = cx.built.parse_all(&p.x_e)?;
    let ce = CentralExtensionCtx::new(ctx.clone(), z, x_e)?;
    let ws = p.witnesses.iter().map(|w| Ok((w.n, ctx.parse(&w.word)?))).collect::<Result<Vec<_>, Error>>()?;
    let rep = distortion_check(&ce, &p.ns, p.radius, cx.ball_budget(), &ws)?;
    let mut table = Table::new(&["n", "lower", "upper"]);
    for row in &rep.rows {
        table.push(vec![row.n.to_string(), row.lower.to_string(), row.upper.map(|u| u.to_string()).unwrap_or_default()]);
    }
    Ok((ser(&rep), table))
}

fn sc_search_task(cx: &Ctx, p: &ScSearchParams, seed: u64) -> TaskResult {
    let alphabet = cx.built.ctx.alphabet();
    let (r, report) = search_small_cancellation_relator(alphabet, p.syllable_pairs, p.lambda.0, p.attempts, seed)?
        .ok_or_else(|| CliError::Assertion(format!("no C'({}) relator found in {} attempts", rat::format(&p.lambda.0), p.attempts)))?;
    let quotient = GroupContext::small_cancellation(GroupPresentation::new(alphabet.clone(), vec![r.clone()])?, p.lambda.0)?;
    let products = random_conjugate_products(
        alphabet,
        std::slice::from_ref(&r),
        p.conjugate_products,
        p.max_factors,
        p.conjugator_length,
        seed ^ 0xc0de,
    );
    let mut table = Table::new(&["index", "length", "reduces_to_identity"]);
    let mut failures = usize::from(!quotient.is_identity(&r)?);
    for (i, w) in products.iter().enumerate() {
        let ok = quotient.is_identity(w)?;
        failures += usize::from(!ok);
        table.push(vec![i.to_string(), w.len().to_string(), ok.to_string()]);
    }
    let summary = json!({
        "relator": alphabet.format(&r),
        "relator_length": r.len(),
        "check": ser(&report),
        "dehn_checks": products.len() + 1,
        "dehn_failures": failures,
    });
    Ok((summary, table))
}
