//! Scenario files: schema, loading and validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use qmx_core::{rat, Alphabet, Rat};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

/// Rational written as `"p/q"`, `"p"` or a JSON integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatValue(pub Rat);

impl Serialize for RatValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat::format(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RatValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\" or an integer")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<RatValue, E> {
                Ok(RatValue(rat::int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<RatValue, E> {
                i64::try_from(v).map(|v| RatValue(rat::int(v))).map_err(|_| E::custom("integer too large"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<RatValue, E> {
                rat::parse(v).map(RatValue).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub group: GroupDecl,
    #[serde(default)]
    pub subgroup: SubgroupDecl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<RelativeDecl>,
    #[serde(default)]
    pub quasimorphisms: Vec<QmDecl>,
    #[serde(default)]
    pub tasks: Vec<TaskDecl>,
    pub budgets: Budgets,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupType {
    Free,
    FreeAbelian,
    SmallCancellation,
    /// Presentation with a faithful integer-matrix representation.
    Matrices,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDecl {
    #[serde(rename = "type")]
    pub kind: GroupType,
    pub generators: Vec<String>,
    #[serde(default)]
    pub relators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<RatValue>,
    /// One square matrix per generator, for `matrices`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<i64>>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupType {
    Kernel,
    NormalClosure,
    #[default]
    Whole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetType {
    Free,
    FreeAbelian,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDecl {
    #[serde(rename = "type")]
    pub kind: TargetType,
    pub generators: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupDecl {
    #[serde(rename = "type")]
    pub kind: SubgroupType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<RatValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeDecl {
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "K_pool", default, skip_serializing_if = "Option::is_none")]
    pub k_pool: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QmKindDecl {
    ExponentSum,
    Brooks,
    Homogenized,
    MatrixEntry,
    Constant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainDecl {
    #[default]
    K,
    G,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmDecl {
    pub name: String,
    pub kind: QmKindDecl,
    #[serde(default)]
    pub domain: DomainDecl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<RatValue>>,
    /// Name of an earlier quasimorphism, for `homogenized`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<RatValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homomorphism: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant_claimed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_defect: Option<RatValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_qinv: Option<RatValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub max_ball_elements: usize,
    pub max_candidates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case")]
pub enum TaskDecl {
    CheckControlled(CheckControlledParams),
    EstimateDelta(EstimateDeltaParams),
    Extend(ExtendParams),
    DefectReport(DefectReportParams),
    SclBounds(SclBoundsParams),
    CentralDistortion(CentralDistortionParams),
    SmallCancellationSearch(ScSearchParams),
}

impl TaskDecl {
    pub fn name(&self) -> &'static str {
        match self {
            TaskDecl::CheckControlled(_) => "check-controlled",
            TaskDecl::EstimateDelta(_) => "estimate-delta",
            TaskDecl::Extend(_) => "extend",
            TaskDecl::DefectReport(_) => "defect-report",
            TaskDecl::SclBounds(_) => "scl-bounds",
            TaskDecl::CentralDistortion(_) => "central-distortion",
            TaskDecl::SmallCancellationSearch(_) => "small-cancellation-search",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckControlledParams {
    pub qm: String,
    pub maxlen: usize,
    #[serde(default = "yes")]
    pub solve_hole: bool,
    #[serde(default)]
    pub onset: usize,
    /// Extra samples: X-words, written as space-separated X entries, closed
    /// up by a solved K-letter.
    #[serde(default)]
    pub x_word_samples: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateDeltaParams {
    pub radius: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendParams {
    pub qm: String,
    /// Radius of the ball of elements evaluated.
    pub radius: usize,
    pub x_length_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<RatValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<RatValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<RatValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<RatValue>,
    /// Homomorphism to compare the extension against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_with: Option<String>,
    /// X-length bound for the exact relative metric in the witness audit;
    /// no audit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_max_x_length: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectReportParams {
    pub radii: Vec<usize>,
    pub pair_budget: usize,
    #[serde(default)]
    pub triangle_pairs: usize,
    #[serde(default = "four")]
    pub triangle_max_len: usize,
}

fn four() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SclBoundsParams {
    pub elements: Vec<String>,
    pub ns: Vec<u32>,
    pub q: usize,
    pub radius: usize,
    pub family: Vec<String>,
    #[serde(default = "thirty_two")]
    pub homogenization_power: u32,
    #[serde(default)]
    pub mixed: bool,
    #[serde(default)]
    pub bilip: bool,
}

fn thirty_two() -> u32 {
    32
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessDecl {
    pub n: i64,
    pub word: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralDistortionParams {
    pub z: String,
    #[serde(rename = "X_E")]
    pub x_e: Vec<String>,
    pub ns: Vec<i64>,
    pub radius: usize,
    #[serde(default)]
    pub witnesses: Vec<WitnessDecl>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScSearchParams {
    pub syllable_pairs: usize,
    pub lambda: RatValue,
    pub attempts: usize,
    #[serde(default)]
    pub conjugate_products: usize,
    #[serde(default = "three")]
    pub max_factors: usize,
    #[serde(default = "three")]
    pub conjugator_length: usize,
}

fn three() -> usize {
    3
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::Parse(inner.to_string())
        } else {
            CliError::Schema { path, message: inner.to_string() }
        }
    })?;
    validate(&sc)?;
    Ok(sc)
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), message: message.into() }
}

fn check_words(alph: &Alphabet, words: &[String], path: &str) -> Result<(), CliError> {
    for (i, w) in words.iter().enumerate() {
        alph.parse(w).map_err(|e| schema(format!("{path}[{i}]"), e.to_string()))?;
    }
    Ok(())
}

/// Rules the type system does not express.
pub fn validate(sc: &Scenario) -> Result<(), CliError> {
    if sc.budgets.max_ball_elements == 0 {
        return Err(schema("budgets.max_ball_elements", "must be positive"));
    }
    if sc.budgets.max_candidates == 0 {
        return Err(schema("budgets.max_candidates", "must be positive"));
    }
    let g = &sc.group;
    let alph = Alphabet::new(g.generators.iter().cloned()).map_err(|e| schema("group.generators", e.to_string()))?;
    check_words(&alph, &g.relators, "group.relators")?;
    let sixth = rat::ratio(1, 6);
    match g.kind {
        GroupType::SmallCancellation => match g.lambda {
            None => return Err(schema("group.lambda", "required for small_cancellation")),
            Some(l) if l.0 > sixth || l.0 <= rat::int(0) => {
                return Err(schema("group.lambda", format!("must lie in (0, 1/6], got {}", rat::format(&l.0))))
            }
            _ => {}
        },
        GroupType::Matrices => match &g.matrices {
            None => return Err(schema("group.matrices", "required for matrices")),
            Some(m) if m.len() != g.generators.len() => {
                return Err(schema("group.matrices", "one matrix per generator required"))
            }
            _ => {}
        },
        GroupType::Free | GroupType::FreeAbelian => {
            if !g.relators.is_empty() {
                return Err(schema("group.relators", "free and free abelian groups take no relators"));
            }
        }
    }

    let sub = &sc.subgroup;
    match sub.kind {
        SubgroupType::Kernel => {
            let t = sub.target.as_ref().ok_or_else(|| schema("subgroup.target", "required for kernel"))?;
            let talph =
                Alphabet::new(t.generators.iter().cloned()).map_err(|e| schema("subgroup.target.generators", e.to_string()))?;
            let images = sub.images.as_ref().ok_or_else(|| schema("subgroup.images", "required for kernel"))?;
            if images.len() != alph.rank() {
                return Err(schema("subgroup.images", "one image per generator required"));
            }
            check_words(&talph, images, "subgroup.images")?;
        }
        SubgroupType::NormalClosure => {
            let w = sub.words.as_ref().ok_or_else(|| schema("subgroup.words", "required for normal_closure"))?;
            check_words(&alph, w, "subgroup.words")?;
            if let Some(l) = sub.lambda {
                if l.0 > sixth {
                    return Err(schema("subgroup.lambda", "must not exceed 1/6"));
                }
            }
        }
        SubgroupType::Whole => {}
    }

    if let Some(rel) = &sc.relative {
        check_words(&alph, &rel.x, "relative.X")?;
        if let Some(p) = &rel.k_pool {
            check_words(&alph, p, "relative.K_pool")?;
        }
    }

    let mut names = BTreeSet::new();
    for (i, q) in sc.quasimorphisms.iter().enumerate() {
        let path = format!("quasimorphisms[{i}]");
        if !names.insert(q.name.as_str()) {
            return Err(schema(format!("{path}.name"), format!("duplicate name `{}`", q.name)));
        }
        let need = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(schema(format!("{path}.{field}"), format!("required for {:?}", q.kind)))
            }
        };
        match q.kind {
            QmKindDecl::ExponentSum => need("weights", q.weights.is_some())?,
            QmKindDecl::Brooks => {
                need("pattern", q.pattern.is_some())?;
                check_words(&alph, std::slice::from_ref(q.pattern.as_ref().unwrap()), &format!("{path}.pattern"))?;
            }
            QmKindDecl::Homogenized => {
                need("base", q.base.is_some())?;
                need("power", q.power.is_some_and(|p| p > 0))?;
                let base = q.base.as_deref().unwrap();
                if !sc.quasimorphisms[..i].iter().any(|p| p.name == base) {
                    return Err(schema(format!("{path}.base"), format!("`{base}` is not declared earlier")));
                }
            }
            QmKindDecl::MatrixEntry => {
                need("row", q.row.is_some())?;
                need("col", q.col.is_some())?;
                if g.kind != GroupType::Matrices {
                    return Err(schema(format!("{path}.kind"), "matrix_entry needs a matrices group"));
                }
            }
            QmKindDecl::Constant => need("value", q.value.is_some())?,
        }
    }

    let needs_relative = |path: String, pool: bool| -> Result<(), CliError> {
        match &sc.relative {
            None => Err(schema("relative", format!("required by {path}"))),
            Some(r) if pool && r.k_pool.is_none() => Err(schema("relative.K_pool", format!("required by {path}"))),
            _ => Ok(()),
        }
    };
    let known = |path: String, name: &str| -> Result<(), CliError> {
        if names.contains(name) {
            Ok(())
        } else {
            Err(schema(path, format!("unknown quasimorphism `{name}`")))
        }
    };
    let mut controlled = false;
    let mut extended = false;
    for (i, t) in sc.tasks.iter().enumerate() {
        let path = format!("tasks[{i}]");
        match t {
            TaskDecl::CheckControlled(p) => {
                needs_relative(path.clone(), true)?;
                known(format!("{path}.params.qm"), &p.qm)?;
                controlled = true;
            }
            TaskDecl::EstimateDelta(p) => {
                needs_relative(path.clone(), true)?;
                if p.radius < 3 {
                    return Err(schema(format!("{path}.params.radius"), "must be at least 3"));
                }
            }
            TaskDecl::Extend(p) => {
                needs_relative(path.clone(), true)?;
                known(format!("{path}.params.qm"), &p.qm)?;
                if let Some(c) = &p.compare_with {
                    known(format!("{path}.params.compare_with"), c)?;
                }
                if !controlled && p.c0.is_none() {
                    return Err(schema(format!("{path}.params.c0"), "required unless check-controlled runs first"));
                }
                extended = true;
            }
            TaskDecl::DefectReport(p) => {
                if !extended {
                    return Err(schema(path, "defect-report needs an earlier extend task"));
                }
                if p.radii.is_empty() {
                    return Err(schema(format!("{path}.params.radii"), "must not be empty"));
                }
            }
            TaskDecl::SclBounds(p) => {
                check_words(&alph, &p.elements, &format!("{path}.params.elements"))?;
                for (j, f) in p.family.iter().enumerate() {
                    known(format!("{path}.params.family[{j}]"), f)?;
                }
                if p.ns.contains(&0) {
                    return Err(schema(format!("{path}.params.ns"), "powers must be positive"));
                }
            }
            TaskDecl::CentralDistortion(p) => {
                check_words(&alph, std::slice::from_ref(&p.z), &format!("{path}.params.z"))?;
                check_words(&alph, &p.x_e, &format!("{path}.params.X_E"))?;
                for (j, w) in p.witnesses.iter().enumerate() {
                    check_words(&alph, std::slice::from_ref(&w.word), &format!("{path}.params.witnesses[{j}].word"))?;
                }
                if p.radius < 2 {
                    return Err(schema(format!("{path}.params.radius"), "must be at least 2"));
                }
            }
            TaskDecl::SmallCancellationSearch(p) => {
                if p.lambda.0 > sixth || p.lambda.0 <= rat::int(0) {
                    return Err(schema(format!("{path}.params.lambda"), "must lie in (0, 1/6]"));
                }
                if alph.rank() < 2 {
                    return Err(schema("group.generators", "search needs at least two generators"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t", "group": {"type": "free", "generators": ["a", "b"]},
        "budgets": {"max_ball_elements": 10, "max_candidates": 10}, "seed": 1
    }"#;

    #[test]
    fn minimal_scenario_loads() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert!(sc.tasks.is_empty());
        assert_eq!(sc.subgroup.kind, SubgroupType::Whole);
    }

    #[test]
    fn unknown_field_reports_path() {
        let bad = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"colour\": 3");
        match parse_scenario(&bad) {
            Err(CliError::Schema { message, .. }) => assert!(message.contains("colour")),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("\"generators\": [\"a\", \"b\"]", "\"generators\": [\"a\", \"b\"], \"extra\": 1");
        match parse_scenario(&bad) {
            Err(CliError::Schema { path, .. }) => assert!(path.starts_with("group"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rationals_parse_from_strings_and_integers() {
        let v: Vec<RatValue> = serde_json::from_str(r#"["201/32", 3, "-1/2"]"#).unwrap();
        assert_eq!(v, vec![RatValue(rat::ratio(201, 32)), RatValue(rat::int(3)), RatValue(rat::ratio(-1, 2))]);
        assert!(serde_json::from_str::<RatValue>("\"1/0\"").is_err());
    }

    #[test]
    fn syntax_error_is_parse_error() {
        assert!(matches!(parse_scenario("{"), Err(CliError::Parse(_))));
    }
}
