//! Check execution: `run` walks the checks of a scenario, `sweep` runs the
//! sandwich report over a (p, q) grid, `phi_audit` runs the Φ audits.

use std::time::Instant;

use dirint::boundedness::{
    criterion_general, criterion_graph, criterion_uniform_bounds, criterion_uniform_t,
    exact_norm_decoupled, sandwich_report, uniform_norm_profile, SandwichTolerances, EXACT_TOL,
    ITERATIVE_TOL,
};
use dirint::kernels::{kappa, Certificate, OperatorKernel};
use dirint::measure::{integrate_change_of_variables, DensityFn};
use dirint::mixedcomp::{composition_norm_decoupled, criterion_mixed_composition, criterion_via_graph};
use dirint::{rng, Exponent};
use rand::Rng;

use crate::audit::phi_audit;
use crate::report::{Row, Status};
use crate::scenario::{CheckDef, CheckKind, CriterionVariant, Scenario};
use crate::CliError;

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_PARTITIONS: usize = 50;
pub const CHANGE_OF_VARS_TOL: f64 = 1e-12;
/// Agreement required between the closed-form composition criterion and the
/// decoupled norm of the composition operator.
pub const MIXEDCOMP_TOL: f64 = 1e-6;

pub const REJECT_P_LT_Q: &str = "rejected: p<q out of scope";
pub const REJECT_ALPHA_GT_BETA: &str = "rejected: α>β out of scope";

/// Command-line overrides shared by all verbs.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Relative tolerance of the equality flag (default 1e-9).
    pub tolerance: Option<f64>,
    pub partitions: Option<usize>,
    /// Record wall time; off by default so reports stay byte-identical.
    pub timing: bool,
}

impl Options {
    fn sandwich_tolerances(&self) -> SandwichTolerances {
        let mut t = SandwichTolerances::default();
        if let Some(eq) = self.tolerance {
            t.equality = eq;
        }
        t
    }

    fn seed(&self, check: &CheckDef) -> u64 {
        self.seed.unwrap_or(check.seed)
    }

    fn samples(&self, check: &CheckDef) -> usize {
        self.samples.or(check.samples).unwrap_or(DEFAULT_SAMPLES)
    }
}

/// 0 when every row passed or was rejected, 2 when an assertion failed.
pub fn exit_code(rows: &[Row]) -> i32 {
    if rows.iter().any(|r| r.status == Status::Fail) {
        2
    } else {
        0
    }
}

fn ordered(a: Exponent, b: Exponent) -> bool {
    match (a, b) {
        (Exponent::Infinite, _) => true,
        (Exponent::Finite(_), Exponent::Infinite) => false,
        (Exponent::Finite(x), Exponent::Finite(y)) => x >= y,
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn cert_tol(c: Certificate) -> f64 {
    match c {
        Certificate::Exact => EXACT_TOL,
        Certificate::LowerBound => ITERATIVE_TOL,
    }
}

fn model(context: String) -> impl FnOnce(dirint::Error) -> CliError {
    move |source| CliError::Model { context, source }
}

/// Turns a library error into a row outcome where the error is a verdict on
/// the request rather than on the input file.
fn settle(row: &mut Row, result: dirint::Result<()>, context: &str) -> Result<(), CliError> {
    match result {
        Ok(()) => Ok(()),
        Err(dirint::Error::UnsupportedExponents { reason, .. }) => {
            row.status = Status::Rejected;
            row.detail = join(&row.detail, &format!("rejected: {reason}"));
            Ok(())
        }
        Err(e @ dirint::Error::NotInjective(_)) => {
            row.status = Status::Rejected;
            row.detail = join(&row.detail, &format!("rejected: {e}"));
            Ok(())
        }
        Err(e @ dirint::Error::HypothesisViolated(_)) => {
            row.status = Status::Fail;
            row.detail = join(&row.detail, &e.to_string());
            Ok(())
        }
        Err(e) => Err(model(context.to_string())(e)),
    }
}

fn join(a: &str, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else {
        format!("{a}; {b}")
    }
}

fn kernel<'a>(sc: &'a Scenario, check: &CheckDef) -> &'a OperatorKernel {
    // Names were resolved when the scenario was built.
    &sc.kernels[check.kernel.as_deref().expect("validated")]
}

fn certs(pairs: &[(&str, Certificate)]) -> String {
    pairs.iter().map(|(k, c)| format!("{k}={}", c.as_str())).collect::<Vec<_>>().join(";")
}

fn base_row(sc: &Scenario, check: &CheckDef, e: &[Exponent]) -> Row {
    let mut row = Row::new(&sc.id, check.kind.as_str());
    row.p = e.first().copied();
    row.q = e.get(1).copied();
    row.alpha = e.get(2).copied();
    row.beta = e.get(3).copied();
    let mut detail = Vec::new();
    if let Some(k) = &check.kernel {
        detail.push(format!("kernel={k}"));
    }
    if let Some(m) = &check.mapping {
        detail.push(format!("mapping={m}"));
    }
    if check.kind == CheckKind::Criterion {
        detail.push(format!("variant={}", check.variant.as_str()));
    }
    row.detail = detail.join(" ");
    row
}

fn run_criterion(sc: &Scenario, check: &CheckDef, p: Exponent, q: Exponent, row: &mut Row) -> dirint::Result<()> {
    let k = kernel(sc, check);
    match check.variant {
        CriterionVariant::General => {
            let c = criterion_general(k, p, q)?;
            row.upper = Some(c.value);
            row.certificates = certs(&[("upper", c.certificate)]);
        }
        CriterionVariant::UniformT => {
            let rho = uniform_norm_profile(k).ok_or_else(|| {
                dirint::Error::HypothesisViolated("kernel norms depend on s within some F_t".into())
            })?;
            row.upper = Some(criterion_uniform_t(k, &rho, p, q)?);
            row.certificates = certs(&[("upper", Certificate::Exact)]);
        }
        CriterionVariant::Graph => {
            let psi = &sc.mappings[check.mapping.as_deref().expect("validated")];
            let c = criterion_graph(k, psi, p, q)?;
            let n = exact_norm_decoupled(k, p, q)?;
            let tol = cert_tol(c.certificate.and(n.certificate));
            row.upper = Some(c.value);
            row.lower = Some(n.value);
            row.metric = Some(rel_gap(c.value, n.value));
            let eq = rel_gap(c.value, n.value) <= tol;
            row.equality = Some(eq);
            row.certificates = certs(&[("lower", n.certificate), ("upper", c.certificate)]);
            if !eq {
                row.status = Status::Fail;
                row.detail = join(&row.detail, "graph criterion differs from the operator norm");
            }
        }
        CriterionVariant::UniformBounds => {
            let psi = &sc.mappings[check.mapping.as_deref().expect("validated")];
            let (c, big_c) = check.bounds.expect("validated");
            let b = criterion_uniform_bounds(k, psi, c, big_c, p, q)?;
            let n = exact_norm_decoupled(k, p, q)?;
            let tol = cert_tol(n.certificate) * n.value.max(1.0);
            row.lower = Some(b.norm_lower());
            row.upper = Some(b.norm_upper());
            row.oracle = Some(n.value);
            row.metric = Some(b.value);
            row.certificates = certs(&[("oracle", n.certificate)]);
            if n.value < b.norm_lower() - tol || n.value > b.norm_upper() + tol {
                row.status = Status::Fail;
                row.detail = join(&row.detail, "operator norm outside [c·value, C·value]");
            }
        }
    }
    Ok(())
}

fn run_sandwich(k: &OperatorKernel, p: Exponent, q: Exponent, samples: usize, seed: u64, opts: &Options, row: &mut Row) -> dirint::Result<()> {
    let r = sandwich_report(k, p, q, samples, seed, &opts.sandwich_tolerances())?;
    row.lower = Some(r.lower);
    row.upper = Some(r.upper);
    row.oracle = Some(r.oracle);
    row.metric = Some(rel_gap(r.upper, r.lower));
    row.equality = Some(r.equality);
    row.certificates = certs(&[("lower", r.lower_certificate), ("upper", r.upper_certificate)]);
    if !r.sandwich_ok {
        row.status = Status::Fail;
        row.detail = join(&row.detail, &r.violations.join("; "));
    }
    Ok(())
}

fn run_phi_audit(k: &OperatorKernel, p: Exponent, q: Exponent, partitions: usize, seed: u64, row: &mut Row) -> dirint::Result<()> {
    let a = phi_audit(k, p, q, partitions, seed)?;
    row.upper = Some(a.total);
    row.metric = Some(a.max_violation());
    row.detail = join(&row.detail, &format!("partitions={partitions}"));
    let failures = a.failures();
    if !failures.is_empty() {
        row.status = Status::Fail;
        row.detail = join(&row.detail, &format!("violated: {}", failures.join(", ")));
    }
    Ok(())
}

fn run_mixedcomp(sc: &Scenario, check: &CheckDef, e: &[Exponent], row: &mut Row) -> dirint::Result<()> {
    let phi = &sc.splits[check.mapping.as_deref().expect("validated")];
    let (p, q, a, b) = (e[0], e[1], e[2], e[3]);
    // The norm is defined for any ψ, so report it even if the criterion is
    // rejected below.
    let n = composition_norm_decoupled(phi, p, q, a, b)?;
    row.lower = Some(n.value);
    row.certificates = certs(&[("lower", n.certificate)]);
    let c = criterion_mixed_composition(phi, p, q, a, b)?;
    let via = criterion_via_graph(phi, p, q, a, b)?;
    row.upper = Some(c);
    row.oracle = Some(via.value);
    row.metric = Some(rel_gap(c, via.value));
    let eq = rel_gap(c, n.value) <= MIXEDCOMP_TOL;
    row.equality = Some(eq);
    row.certificates = certs(&[("lower", n.certificate), ("upper", Certificate::Exact), ("oracle", via.certificate)]);
    let mut problems = Vec::new();
    if !eq {
        problems.push("criterion differs from the composition norm".to_string());
    }
    if rel_gap(c, via.value) > cert_tol(via.certificate) {
        problems.push("closed form and graph route disagree".to_string());
    }
    if !problems.is_empty() {
        row.status = Status::Fail;
        row.detail = join(&row.detail, &problems.join("; "));
    }
    Ok(())
}

fn run_change_of_vars(sc: &Scenario, check: &CheckDef, seed: u64, row: &mut Row) -> Result<(), CliError> {
    let name = check.mapping.as_deref().expect("validated");
    let psi = &sc.mappings[name];
    let t = psi.target();
    let values = match &check.function {
        Some(f) => (0..t.len())
            .map(|i| {
                f.get(t.id(i)).copied().ok_or_else(|| {
                    CliError::Schema(format!("change_of_vars: function has no value at `{}`", t.id(i)))
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            let mut r = rng::keyed(seed, 0xc0f, 0);
            (0..t.len()).map(|_| r.random_range(-1.0..1.0)).collect()
        }
    };
    let f = DensityFn::new(values);
    let (lhs, rhs) = integrate_change_of_variables(&f, psi, psi.source(), t)
        .map_err(model(format!("mapping `{name}`")))?;
    row.lower = Some(lhs);
    row.upper = Some(rhs);
    row.metric = Some(rel_gap(lhs, rhs));
    row.equality = Some(rel_gap(lhs, rhs) <= CHANGE_OF_VARS_TOL);
    if row.equality == Some(false) {
        row.status = Status::Fail;
        row.detail = join(&row.detail, "change of variables does not balance");
    }
    Ok(())
}

fn run_tuple(sc: &Scenario, check: &CheckDef, e: &[Exponent], opts: &Options) -> Result<Row, CliError> {
    let start = Instant::now();
    let mut row = base_row(sc, check, e);
    let context = format!("check {} ({})", check.kind.as_str(), row.detail);
    if let (Some(p), Some(q)) = (row.p, row.q) {
        if !ordered(p, q) {
            row.status = Status::Rejected;
            row.detail = join(&row.detail, REJECT_P_LT_Q);
            return Ok(row);
        }
        row.kappa = kappa(p, q).ok();
    }
    if let (Some(a), Some(b)) = (row.alpha, row.beta) {
        if !ordered(b, a) {
            row.status = Status::Rejected;
            row.detail = join(&row.detail, REJECT_ALPHA_GT_BETA);
            return Ok(row);
        }
    }
    let seed = opts.seed(check);
    match check.kind {
        CheckKind::ChangeOfVars => run_change_of_vars(sc, check, seed, &mut row)?,
        kind => {
            let (p, q) = (e[0], e[1]);
            let result = match kind {
                CheckKind::Criterion => run_criterion(sc, check, p, q, &mut row),
                CheckKind::ExactNorm => exact_norm_decoupled(kernel(sc, check), p, q).map(|n| {
                    row.lower = Some(n.value);
                    row.certificates = certs(&[("lower", n.certificate)]);
                }),
                CheckKind::Sandwich => {
                    run_sandwich(kernel(sc, check), p, q, opts.samples(check), seed, opts, &mut row)
                }
                CheckKind::PhiAudit => {
                    let partitions = opts.partitions.or(check.partitions).unwrap_or(DEFAULT_PARTITIONS);
                    run_phi_audit(kernel(sc, check), p, q, partitions, seed, &mut row)
                }
                CheckKind::Mixedcomp => run_mixedcomp(sc, check, e, &mut row),
                CheckKind::ChangeOfVars => unreachable!(),
            };
            settle(&mut row, result, &context)?;
        }
    }
    if opts.timing {
        row.wall_ms = start.elapsed().as_millis();
    }
    Ok(row)
}

fn run_check(sc: &Scenario, check: &CheckDef, opts: &Options) -> Result<Vec<Row>, CliError> {
    if check.exponents.is_empty() {
        return Ok(vec![run_tuple(sc, check, &[], opts)?]);
    }
    check.exponents.iter().map(|e| run_tuple(sc, check, e, opts)).collect()
}

/// One row per (check, exponent tuple), in file order.
pub fn run(sc: &Scenario, opts: &Options) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for check in &sc.checks {
        rows.extend(run_check(sc, check, opts)?);
    }
    Ok(rows)
}

fn pick_kernel<'a>(sc: &'a Scenario, name: Option<&str>, kind: CheckKind) -> Result<&'a str, CliError> {
    if let Some(n) = name {
        return sc
            .kernels
            .get_key_value(n)
            .map(|(k, _)| k.as_str())
            .ok_or_else(|| CliError::Schema(format!("unknown kernel `{n}`")));
    }
    if sc.kernels.len() == 1 {
        return Ok(sc.kernels.keys().next().expect("one kernel"));
    }
    sc.checks
        .iter()
        .find(|c| c.kind == kind)
        .and_then(|c| c.kernel.as_deref())
        .ok_or_else(|| CliError::Schema("several kernels: choose one with --kernel".into()))
}

/// Sandwich report for every `(p, q)` in `p_grid × q_grid`, `p` outermost;
/// tuples with `q > p` become rejected rows.
pub fn sweep(
    sc: &Scenario,
    kernel_name: Option<&str>,
    p_grid: &[Exponent],
    q_grid: &[Exponent],
    opts: &Options,
) -> Result<Vec<Row>, CliError> {
    if p_grid.is_empty() || q_grid.is_empty() {
        return Err(CliError::Schema("sweep grids must be nonempty".into()));
    }
    let name = pick_kernel(sc, kernel_name, CheckKind::Sandwich)?;
    let check = CheckDef {
        kind: CheckKind::Sandwich,
        exponents: Vec::new(),
        seed: opts.seed.unwrap_or(0),
        samples: opts.samples,
        kernel: Some(name.to_string()),
        mapping: None,
        variant: CriterionVariant::General,
        bounds: None,
        partitions: None,
        function: None,
    };
    let mut rows = Vec::new();
    for &p in p_grid {
        for &q in q_grid {
            rows.push(run_tuple(sc, &check, &[p, q], opts)?);
        }
    }
    Ok(rows)
}

/// The Φ audits of a scenario: a single audit when `p` and `q` are given,
/// else its `phi_audit` checks, else one audit per sandwich check.
pub fn phi_audit_rows(
    sc: &Scenario,
    kernel_name: Option<&str>,
    pq: Option<(Exponent, Exponent)>,
    opts: &Options,
) -> Result<Vec<Row>, CliError> {
    let explicit = match pq {
        Some((p, q)) => Some(CheckDef {
            kind: CheckKind::PhiAudit,
            exponents: vec![vec![p, q]],
            seed: opts.seed.unwrap_or(0),
            samples: None,
            kernel: Some(pick_kernel(sc, kernel_name, CheckKind::PhiAudit)?.to_string()),
            mapping: None,
            variant: CriterionVariant::General,
            bounds: None,
            partitions: None,
            function: None,
        }),
        None => None,
    };
    let mut checks: Vec<CheckDef> = match explicit {
        Some(c) => vec![c],
        None => sc.checks.iter().filter(|c| c.kind == CheckKind::PhiAudit).cloned().collect(),
    };
    if checks.is_empty() {
        // Fall back to the kernels and exponents of the sandwich checks.
        checks = sc
            .checks
            .iter()
            .filter(|c| c.kind == CheckKind::Sandwich)
            .map(|c| CheckDef { kind: CheckKind::PhiAudit, ..c.clone() })
            .collect();
    }
    if let Some(k) = kernel_name {
        checks.retain(|c| c.kernel.as_deref() == Some(k));
    }
    if checks.is_empty() {
        return Err(CliError::Schema("no phi_audit or sandwich checks to audit; pass --p and --q".into()));
    }
    let mut rows = Vec::new();
    for c in &checks {
        rows.extend(run_check(sc, c, opts)?);
    }
    Ok(rows)
}
