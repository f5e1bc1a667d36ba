//! Scenario files: JSON with `"schema_version": 1`, parsed into serde structs
//! and then resolved into library objects. Every cross-reference is by name.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use dirint::fibers::{FiberFamily, MixedDomain, NormSpec};
use dirint::kernels::OperatorKernel;
use dirint::measure::{graph_relation, AtomMap, FiniteMeasureSpace, WeightedRelation};
use dirint::mixedcomp::SplitMapping;
use dirint::{DMatrix, Exponent};
use rand::Rng;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub description: Option<String>,
    /// Space name → atom id → weight.
    #[serde(default)]
    pub spaces: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub relations: BTreeMap<String, RelationDef>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyDef>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelDef>,
    #[serde(default)]
    pub mappings: BTreeMap<String, MappingDef>,
    #[serde(default)]
    pub mixed_composition: MixedCompositionDef,
    #[serde(default)]
    pub checks: Vec<CheckDef>,
}

/// Either explicit `(s, t, λ)` triples or the graph of a mapping weighted by
/// the source measure.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDef {
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub pairs: Vec<(String, String, f64)>,
    #[serde(default)]
    pub graph: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberDef {
    pub r: Exponent,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDef {
    pub base: String,
    #[serde(default)]
    pub default: Option<FiberDef>,
    #[serde(default)]
    pub atoms: BTreeMap<String, FiberDef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Rows of the matrix.
    Matrix(Vec<Vec<f64>>),
    /// Rectangular identity.
    Identity,
    /// Diagonal entries; the rest of a rectangular matrix is zero.
    Diagonal(Vec<f64>),
    /// `c` times the rectangular identity.
    Scalar(f64),
    /// Entries uniform in `[-scale, scale)`, keyed by seed and pair.
    Random {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct PairGenerator {
    pub s: String,
    pub t: String,
    #[serde(flatten)]
    pub generator: Generator,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDef {
    pub relation: String,
    /// Family over the relation's target space.
    pub source: String,
    /// Family over the relation's source space.
    pub target: String,
    #[serde(default)]
    pub default: Option<Generator>,
    #[serde(default)]
    pub pairs: Vec<PairGenerator>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingDef {
    pub source: String,
    pub target: String,
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedCompositionDef {
    #[serde(default)]
    pub grids: BTreeMap<String, GridDef>,
    #[serde(default)]
    pub maps: BTreeMap<String, SplitDef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Cells {
    /// The literal string `"full"`: the whole product.
    Full(String),
    List(Vec<(String, String)>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub outer: String,
    pub inner: String,
    pub cells: Cells,
}

/// A split mapping given either by `psi` (a mapping name) and `u` triples
/// `(s, x, y)`, or pointwise by `(s, x, t, y)` quadruples.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDef {
    pub domain: String,
    pub codomain: String,
    #[serde(default)]
    pub psi: Option<String>,
    #[serde(default)]
    pub u: Vec<(String, String, String)>,
    #[serde(default)]
    pub points: Vec<(String, String, String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Criterion,
    ExactNorm,
    Sandwich,
    PhiAudit,
    Mixedcomp,
    ChangeOfVars,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Criterion => "criterion",
            CheckKind::ExactNorm => "exact_norm",
            CheckKind::Sandwich => "sandwich",
            CheckKind::PhiAudit => "phi_audit",
            CheckKind::Mixedcomp => "mixedcomp",
            CheckKind::ChangeOfVars => "change_of_vars",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVariant {
    #[default]
    General,
    UniformT,
    Graph,
    UniformBounds,
}

impl CriterionVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionVariant::General => "general",
            CriterionVariant::UniformT => "uniform_t",
            CriterionVariant::Graph => "graph",
            CriterionVariant::UniformBounds => "uniform_bounds",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDef {
    pub kind: CheckKind,
    /// `[p, q]` or `[p, q, α, β]`.
    #[serde(default)]
    pub exponents: Vec<Vec<Exponent>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub kernel: Option<String>,
    /// A name in `mappings`, or in `mixed_composition.maps` for `mixedcomp`.
    #[serde(default)]
    pub mapping: Option<String>,
    #[serde(default)]
    pub variant: CriterionVariant,
    /// Bounds `c ≤ ‖P‖ ≤ C` for the `uniform_bounds` variant.
    #[serde(default)]
    pub bounds: Option<(f64, f64)>,
    /// Number of random partitions for `phi_audit`.
    #[serde(default)]
    pub partitions: Option<usize>,
    /// Test function for `change_of_vars`, by target atom id.
    #[serde(default)]
    pub function: Option<BTreeMap<String, f64>>,
}

/// A scenario with every name resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub spaces: BTreeMap<String, Arc<FiniteMeasureSpace>>,
    pub kernels: BTreeMap<String, OperatorKernel>,
    pub mappings: BTreeMap<String, AtomMap>,
    pub splits: BTreeMap<String, SplitMapping>,
    pub checks: Vec<CheckDef>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, what: &str, name: &str) -> Result<&'a T, CliError> {
    map.get(name).ok_or_else(|| schema(format!("unknown {what} `{name}`")))
}

fn model(context: &str) -> impl Fn(dirint::Error) -> CliError + '_ {
    move |e| CliError::Model { context: context.to_string(), source: e }
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    build(file)
}

fn build_fiber(def: &FiberDef, ctx: &str) -> Result<NormSpec, CliError> {
    let weights = match (&def.weights, def.dim) {
        (Some(w), Some(d)) if w.len() != d => {
            return Err(schema(format!("{ctx}: dim {d} but {} weights", w.len())))
        }
        (Some(w), _) => w.clone(),
        (None, Some(d)) => vec![1.0; d],
        (None, None) => return Err(schema(format!("{ctx}: fiber needs `dim` or `weights`"))),
    };
    NormSpec::new(def.r, weights).map_err(model(ctx))
}

fn generate(g: &Generator, rows: usize, cols: usize, pair_index: usize, ctx: &str) -> Result<DMatrix<f64>, CliError> {
    Ok(match g {
        Generator::Matrix(data) => {
            if data.len() != rows || data.iter().any(|r| r.len() != cols) {
                return Err(schema(format!("{ctx}: matrix must be {rows}×{cols}")));
            }
            DMatrix::from_fn(rows, cols, |i, j| data[i][j])
        }
        Generator::Identity => DMatrix::identity(rows, cols),
        Generator::Scalar(c) => DMatrix::identity(rows, cols) * *c,
        Generator::Diagonal(d) => {
            if d.len() != rows.min(cols) {
                return Err(schema(format!("{ctx}: diagonal needs {} entries", rows.min(cols))));
            }
            DMatrix::from_fn(rows, cols, |i, j| if i == j { d[i] } else { 0.0 })
        }
        Generator::Random { seed, scale } => {
            let mut r = dirint::rng::keyed(*seed, pair_index as u64, 0);
            DMatrix::from_fn(rows, cols, |_, _| scale * r.random_range(-1.0..1.0))
        }
    })
}

fn build_domain(
    name: &str,
    def: &GridDef,
    spaces: &BTreeMap<String, Arc<FiniteMeasureSpace>>,
) -> Result<MixedDomain, CliError> {
    let ctx = format!("grid `{name}`");
    let outer = lookup(spaces, "space", &def.outer)?.clone();
    let inner = lookup(spaces, "space", &def.inner)?.clone();
    match &def.cells {
        Cells::Full(s) if s == "full" => Ok(MixedDomain::full(outer, inner)),
        Cells::Full(s) => Err(schema(format!("{ctx}: cells must be a list or \"full\", got \"{s}\""))),
        Cells::List(cells) => MixedDomain::new(outer, inner, cells.iter().map(|(a, b)| (a, b))).map_err(model(&ctx)),
    }
}

fn build(file: ScenarioFile) -> Result<Scenario, CliError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }

    let mut spaces = BTreeMap::new();
    for (name, atoms) in &file.spaces {
        let space = FiniteMeasureSpace::new(atoms.iter().map(|(id, &w)| (id.as_str(), w)))
            .map_err(model(&format!("space `{name}`")))?;
        spaces.insert(name.clone(), Arc::new(space));
    }

    let mut mappings = BTreeMap::new();
    for (name, def) in &file.mappings {
        let s = lookup(&spaces, "space", &def.source)?.clone();
        let t = lookup(&spaces, "space", &def.target)?.clone();
        let psi = AtomMap::new(s, t, def.map.iter())
            .map_err(model(&format!("mapping `{name}`")))?;
        mappings.insert(name.clone(), psi);
    }

    let mut relations = BTreeMap::new();
    for (name, def) in &file.relations {
        let ctx = format!("relation `{name}`");
        let rel = match &def.graph {
            Some(m) => {
                if !def.pairs.is_empty() {
                    return Err(schema(format!("{ctx}: give either `graph` or `pairs`")));
                }
                let psi: &AtomMap = lookup(&mappings, "mapping", m)?;
                graph_relation(psi, psi.source()).map_err(model(&ctx))?
            }
            None => {
                let (Some(src), Some(tgt)) = (&def.source, &def.target) else {
                    return Err(schema(format!("{ctx}: needs `source` and `target`")));
                };
                let s = lookup(&spaces, "space", src)?.clone();
                let t = lookup(&spaces, "space", tgt)?.clone();
                WeightedRelation::new(s, t, def.pairs.iter().map(|(a, b, w)| (a, b, *w))).map_err(model(&ctx))?
            }
        };
        relations.insert(name.clone(), Arc::new(rel));
    }

    let mut families = BTreeMap::new();
    for (name, def) in &file.families {
        let ctx = format!("family `{name}`");
        let base = lookup(&spaces, "space", &def.base)?.clone();
        for id in def.atoms.keys() {
            base.require(id).map_err(model(&ctx))?;
        }
        let fibers = base
            .ids()
            .map(|id| match def.atoms.get(id).or(def.default.as_ref()) {
                Some(f) => build_fiber(f, &format!("{ctx}, atom `{id}`")),
                None => Err(schema(format!("{ctx}: no fiber for atom `{id}` and no default"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let fam = FiberFamily::new(base, fibers).map_err(model(&ctx))?;
        families.insert(name.clone(), Arc::new(fam));
    }

    let mut kernels = BTreeMap::new();
    for (name, def) in &file.kernels {
        let ctx = format!("kernel `{name}`");
        let rel: Arc<WeightedRelation> = lookup(&relations, "relation", &def.relation)?.clone();
        let w = lookup(&families, "family", &def.source)?.clone();
        let v = lookup(&families, "family", &def.target)?.clone();
        let mut explicit: Vec<Option<&Generator>> = vec![None; rel.len()];
        for pg in &def.pairs {
            let s = rel.source().require(&pg.s).map_err(model(&ctx))?;
            let t = rel.target().require(&pg.t).map_err(model(&ctx))?;
            let k = rel.find(s, t).ok_or_else(|| {
                model(&ctx)(dirint::Error::MissingPair { s: pg.s.clone(), t: pg.t.clone() })
            })?;
            if explicit[k].replace(&pg.generator).is_some() {
                return Err(schema(format!("{ctx}: pair ({}, {}) given twice", pg.s, pg.t)));
            }
        }
        if w.base().as_ref() != rel.target().as_ref() || v.base().as_ref() != rel.source().as_ref() {
            return Err(schema(format!(
                "{ctx}: source family must live on the relation's target and target family on its source"
            )));
        }
        let mats = rel
            .pairs()
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let (s_id, t_id) = rel.pair_ids(k);
                let pctx = format!("{ctx}, pair ({s_id}, {t_id})");
                let g = explicit[k]
                    .or(def.default.as_ref())
                    .ok_or_else(|| schema(format!("{pctx}: no generator and no default")))?;
                generate(g, v.dim(p.s), w.dim(p.t), k, &pctx)
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Rebuild the families over the relation's own space handles.
        let w = Arc::new(FiberFamily::new(rel.target().clone(), w.fibers().to_vec()).map_err(model(&ctx))?);
        let v = Arc::new(FiberFamily::new(rel.source().clone(), v.fibers().to_vec()).map_err(model(&ctx))?);
        let kernel = OperatorKernel::new(rel, w, v, mats).map_err(model(&ctx))?;
        kernels.insert(name.clone(), kernel);
    }

    let mut grids = BTreeMap::new();
    for (name, def) in &file.mixed_composition.grids {
        grids.insert(name.clone(), Arc::new(build_domain(name, def, &spaces)?));
    }
    let mut splits = BTreeMap::new();
    for (name, def) in &file.mixed_composition.maps {
        let ctx = format!("split mapping `{name}`");
        let dom: Arc<MixedDomain> = lookup(&grids, "grid", &def.domain)?.clone();
        let cod: Arc<MixedDomain> = lookup(&grids, "grid", &def.codomain)?.clone();
        let phi = match (&def.psi, def.points.is_empty()) {
            (Some(psi), true) => {
                let psi: &AtomMap = lookup(&mappings, "mapping", psi)?;
                SplitMapping::new(dom, cod, psi.clone(), def.u.iter().map(|(a, b, c)| (a, b, c)))
                    .map_err(model(&ctx))?
            }
            (None, false) if def.u.is_empty() => {
                SplitMapping::from_points(dom, cod, def.points.iter().map(|(a, b, c, d)| (a, b, c, d)))
                    .map_err(model(&ctx))?
            }
            _ => return Err(schema(format!("{ctx}: give either `psi` with `u`, or `points`"))),
        };
        splits.insert(name.clone(), phi);
    }

    for (i, c) in file.checks.iter().enumerate() {
        let ctx = format!("check #{} ({})", i + 1, c.kind.as_str());
        if c.exponents.is_empty() && c.kind != CheckKind::ChangeOfVars {
            return Err(schema(format!("{ctx}: empty exponent list")));
        }
        let want = if c.kind == CheckKind::Mixedcomp { 4 } else { 2 };
        if let Some(e) = c.exponents.iter().find(|e| e.len() != want) {
            return Err(schema(format!("{ctx}: exponent tuples need {want} entries, got {}", e.len())));
        }
        match c.kind {
            CheckKind::ChangeOfVars => {
                lookup(&mappings, "mapping", c.mapping.as_deref().ok_or_else(|| schema(format!("{ctx}: needs `mapping`")))?)?;
            }
            CheckKind::Mixedcomp => {
                lookup(&splits, "split mapping", c.mapping.as_deref().ok_or_else(|| schema(format!("{ctx}: needs `mapping`")))?)?;
            }
            _ => {
                lookup(&kernels, "kernel", c.kernel.as_deref().ok_or_else(|| schema(format!("{ctx}: needs `kernel`")))?)?;
                let needs_map = matches!(c.variant, CriterionVariant::Graph | CriterionVariant::UniformBounds);
                if c.kind == CheckKind::Criterion && needs_map {
                    lookup(&mappings, "mapping", c.mapping.as_deref().ok_or_else(|| schema(format!("{ctx}: needs `mapping`")))?)?;
                }
                if c.kind == CheckKind::Criterion && c.variant == CriterionVariant::UniformBounds && c.bounds.is_none() {
                    return Err(schema(format!("{ctx}: needs `bounds`")));
                }
            }
        }
    }

    Ok(Scenario { id: file.id, spaces, kernels, mappings, splits, checks: file.checks })
}
