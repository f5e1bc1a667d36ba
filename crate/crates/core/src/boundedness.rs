//! Boundedness of `M_F: L^p(T, {W_t}) → L^q(F, {V_s})` for `q ≤ p`.
//!
//! Two quantities bracket the operator norm on a finite instance:
//!
//! * the **criterion** `‖ ‖P(s,t)‖·J^{1/q}(s,t) ‖_{L^{κ,q}(F)}`, outer norm over
//!   `T` and inner over `F_t`, which always bounds the norm from above;
//! * the **decoupled norm** `(Σ_t c(t)^κ μ_t^{−κ/p})^{1/κ}` (or
//!   `max_t c(t) μ_t^{−1/p}` when `p = q`), which *is* the norm: a section
//!   enters the ratio `‖M_F f‖_q / ‖f‖_p` only through its direction at each
//!   atom, optimized inside the fiber effectiveness `c(t)`, and through its
//!   magnitude profile, optimized in closed form by the equality case of
//!   Hölder's inequality.
//!
//! The two agree for scalar fibers, for graph relations and whenever one
//! direction maximizes every `P(s,t)` over `F_t`. Otherwise the criterion can
//! be strictly larger.

use rayon::prelude::*;
use serde::Serialize;

use crate::fibers::lp_aggregate;
use crate::kernels::{
    fiber_effectiveness_all, pair_operator_norm, Certificate, Exponents,
    NormResult, OperatorKernel,
};
use crate::measure::{marginal_weights, pushforward_volume_derivative, radon_nikodym, AtomMap, DensityFn};
use crate::{rng, Error, Exponent, Result};
use nalgebra::DVector;
use rand::Rng;

/// Relative tolerance for comparisons between closed-form values.
pub const EXACT_TOL: f64 = 1e-9;
/// Relative tolerance when an iterative (lower-bound) value is involved.
pub const ITERATIVE_TOL: f64 = 1e-6;
/// Tolerance used when checking a hypothesis on kernel norms.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// Criterion value `‖‖P‖·J^{1/q}‖_{L^{κ,q}(F)}` with `J = dλ/d(ν×μ)`:
/// `(Σ_t μ_t (Σ_{s∈F_t} ν_s ‖P(s,t)‖^q J(s,t))^{κ/q})^{1/κ}`, and
/// `max_t (Σ_{s∈F_t} ν_s ‖P(s,t)‖^q J(s,t))^{1/q}` when `p = q`.
/// The certificate is exact when every `‖P(s,t)‖` came from a closed form.
pub fn criterion_general(kernel: &OperatorKernel, p: Exponent, q: Exponent) -> Result<NormResult> {
    let e = Exponents::operator(p, q)?;
    let qv = e.q_finite();
    let rel = kernel.relation();
    let (s_space, t_space) = (rel.source(), rel.target());
    let jac = radon_nikodym(rel, s_space, t_space)?;
    let norms: Vec<NormResult> =
        (0..rel.len()).into_par_iter().map(|k| pair_operator_norm(kernel, k)).collect();
    let cert = norms.iter().fold(Certificate::Exact, |c, n| c.and(n.certificate));
    let inner: Vec<f64> = (0..t_space.len())
        .map(|t| {
            let sum: f64 = rel
                .pairs_over(t)
                .iter()
                .map(|&k| s_space.weight(rel.pairs()[k].s) * norms[k].value.powf(qv) * jac.get(k))
                .sum();
            sum.powf(1.0 / qv)
        })
        .collect();
    Ok(NormResult { value: lp_aggregate(&inner, &t_space.weights(), e.kappa), certificate: cert })
}

/// `ρ(t) = ‖P(s,t)‖` if the kernel norm does not depend on `s ∈ F_t` (within
/// [`HYPOTHESIS_TOL`]); atoms with empty `F_t` get `ρ = 0`.
pub fn uniform_norm_profile(kernel: &OperatorKernel) -> Option<DensityFn> {
    let rel = kernel.relation();
    let mut rho = Vec::with_capacity(rel.target().len());
    for t in 0..rel.target().len() {
        let norms: Vec<f64> =
            rel.pairs_over(t).iter().map(|&k| pair_operator_norm(kernel, k).value).collect();
        let first = norms.first().copied().unwrap_or(0.0);
        if norms.iter().any(|n| (n - first).abs() > HYPOTHESIS_TOL * first.max(1.0)) {
            return None;
        }
        rho.push(first);
    }
    Some(DensityFn::new(rho))
}

/// Criterion for kernels whose norm depends on `t` only:
/// `‖ρ·J^{1/q}‖_{L^κ(T)}` with `J = dλ_T/dμ`.
pub fn criterion_uniform_t(
    kernel: &OperatorKernel,
    rho: &DensityFn,
    p: Exponent,
    q: Exponent,
) -> Result<f64> {
    let e = Exponents::operator(p, q)?;
    let rel = kernel.relation();
    let t_space = rel.target();
    if rho.len() != t_space.len() {
        return Err(Error::DimensionMismatch { expected: t_space.len(), found: rho.len() });
    }
    for (k, pair) in rel.pairs().iter().enumerate() {
        let n = pair_operator_norm(kernel, k).value;
        let r = rho.get(pair.t);
        if (n - r).abs() > HYPOTHESIS_TOL * r.max(1.0) {
            let (s_id, t_id) = rel.pair_ids(k);
            return Err(Error::HypothesisViolated(format!(
                "‖P({s_id}, {t_id})‖ = {n} but ρ({t_id}) = {r}"
            )));
        }
    }
    let lam_t = marginal_weights(rel);
    let vals: Vec<f64> = (0..t_space.len())
        .map(|t| rho.get(t) * (lam_t[t] / t_space.weight(t)).powf(1.0 / e.q_finite()))
        .collect();
    Ok(lp_aggregate(&vals, &t_space.weights(), e.kappa))
}

fn check_graph(kernel: &OperatorKernel, psi: &AtomMap) -> Result<()> {
    let rel = kernel.relation();
    if rel.source().as_ref() != psi.source().as_ref() || rel.target().as_ref() != psi.target().as_ref() {
        return Err(Error::Reference("mapping and kernel live on different spaces".into()));
    }
    for (k, p) in rel.pairs().iter().enumerate() {
        if psi.image(p.s) != p.t {
            let (s_id, t_id) = rel.pair_ids(k);
            return Err(Error::HypothesisViolated(format!(
                "pair ({s_id}, {t_id}) is not on the graph of the mapping"
            )));
        }
    }
    for s in 0..psi.source().len() {
        if rel.find(s, psi.image(s)).is_none() {
            return Err(Error::MissingPair {
                s: psi.source().id(s).to_string(),
                t: psi.target().id(psi.image(s)).to_string(),
            });
        }
    }
    Ok(())
}

/// `‖ n(t) · J^{1/q}(t) ‖_{L^κ(T, μ)}` for per-atom operator norms `n` and
/// density `J`, the common shape of the graph criteria.
pub(crate) fn weighted_lkappa(norms: &[f64], jac: &[f64], mu: &[f64], e: &Exponents) -> f64 {
    let qv = e.q_finite();
    let vals: Vec<f64> = norms.iter().zip(jac).map(|(n, j)| n * j.powf(1.0 / qv)).collect();
    lp_aggregate(&vals, mu, e.kappa)
}

/// Criterion on the graph `Γ_ψ` of an injective map:
/// `‖ ‖P(ψ⁻¹(t), t)‖ · J^{1/q}(t) ‖_{L^κ(T)}` with `J = dλ_T/dμ`. Atoms off the
/// image contribute 0. With `λ = ν∘π_S` the density `J` is the volume
/// derivative `J_{ψ⁻¹}`.
pub fn criterion_graph(
    kernel: &OperatorKernel,
    psi: &AtomMap,
    p: Exponent,
    q: Exponent,
) -> Result<NormResult> {
    let e = Exponents::operator(p, q)?;
    let inv = psi.inverse()?;
    check_graph(kernel, psi)?;
    let rel = kernel.relation();
    let t_space = rel.target();
    let lam_t = marginal_weights(rel);
    let mut cert = Certificate::Exact;
    let mut norms = vec![0.0; t_space.len()];
    for (t, s) in inv.iter().enumerate() {
        if let Some(s) = *s {
            let k = rel.find(s, t).expect("graph pair checked above");
            let n = pair_operator_norm(kernel, k);
            cert = cert.and(n.certificate);
            norms[t] = n.value;
        }
    }
    let jac: Vec<f64> = (0..t_space.len()).map(|t| lam_t[t] / t_space.weight(t)).collect();
    Ok(NormResult { value: weighted_lkappa(&norms, &jac, &t_space.weights(), &e), certificate: cert })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformBounds {
    /// `‖J_{ψ⁻¹}^{1/q}‖_{L^κ(T)}`.
    pub value: f64,
    pub lower_mult: f64,
    pub upper_mult: f64,
}

impl UniformBounds {
    /// `c · value ≤ ‖M_ψ‖`.
    pub fn norm_lower(&self) -> f64 {
        self.lower_mult * self.value
    }

    /// `‖M_ψ‖ ≤ C · value`.
    pub fn norm_upper(&self) -> f64 {
        self.upper_mult * self.value
    }
}

/// Criterion for weighted composition `M_ψ` with `c ≤ ‖P(s, ψ(s))‖ ≤ C`: the
/// norm lies between `c` and `C` times `‖J_{ψ⁻¹}^{1/q}‖_{L^κ(T)}`. `ψ` need not
/// be injective. Measures are those of the kernel's spaces (ν on `S`, μ on `T`).
pub fn criterion_uniform_bounds(
    kernel: &OperatorKernel,
    psi: &AtomMap,
    c: f64,
    big_c: f64,
    p: Exponent,
    q: Exponent,
) -> Result<UniformBounds> {
    let e = Exponents::operator(p, q)?;
    if !(c > 0.0 && c <= big_c && big_c.is_finite()) {
        return Err(Error::HypothesisViolated(format!("need 0 < c ≤ C, got c = {c}, C = {big_c}")));
    }
    let rel = kernel.relation();
    for s in 0..psi.source().len() {
        let t = psi.image(s);
        let k = rel.find(s, t).ok_or_else(|| Error::MissingPair {
            s: psi.source().id(s).to_string(),
            t: psi.target().id(t).to_string(),
        })?;
        let n = pair_operator_norm(kernel, k).value;
        let slack = HYPOTHESIS_TOL * big_c.max(1.0);
        if n < c - slack || n > big_c + slack {
            return Err(Error::HypothesisViolated(format!(
                "‖P({}, {})‖ = {n} outside [{c}, {big_c}]",
                psi.source().id(s),
                psi.target().id(t)
            )));
        }
    }
    let (nu, mu) = (rel.source(), rel.target());
    let jac = pushforward_volume_derivative(psi, nu, mu)?;
    let ones = vec![1.0; mu.len()];
    let value = weighted_lkappa(&ones, jac.values(), &mu.weights(), &e);
    Ok(UniformBounds { value, lower_mult: c, upper_mult: big_c })
}

/// Aggregates per-atom effectiveness into the operator norm:
/// `‖(c(t) μ_t^{−1/p})_t‖_{ℓ^κ}`.
fn decoupled_value(c: &[NormResult], mu: &[f64], e: &Exponents) -> NormResult {
    let xs: Vec<f64> = c.iter().zip(mu).map(|(c, m)| c.value * m.powf(-e.p.recip())).collect();
    let cert = c.iter().fold(Certificate::Exact, |acc, n| acc.and(n.certificate));
    NormResult { value: e.kappa.norm_of(&xs), certificate: cert }
}

/// The operator norm `sup_f ‖M_F f‖_{L^q(F)} / ‖f‖_{L^p(T)}` via the decoupling
/// reduction. Exact iff every fiber effectiveness came from a closed form.
pub fn exact_norm_decoupled(kernel: &OperatorKernel, p: Exponent, q: Exponent) -> Result<NormResult> {
    let e = Exponents::operator(p, q)?;
    let c = fiber_effectiveness_all(kernel, e.q_finite());
    Ok(decoupled_value(&c, &kernel.relation().target().weights(), &e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiValue {
    /// Atom ids of the subset `A ⊂ T`.
    pub subset: Vec<String>,
    /// `Φ(A) = ‖M_F restricted to A‖^κ`.
    pub value: f64,
    pub certificate: Certificate,
}

fn finite_kappa(p: Exponent, q: Exponent) -> Result<(Exponents, f64)> {
    let e = Exponents::operator(p, q)?;
    match e.kappa {
        Exponent::Finite(k) => Ok((e, k)),
        Exponent::Infinite => Err(Error::UnsupportedExponents {
            p: p.to_string(),
            q: q.to_string(),
            reason: "Φ needs finite κ (p > q)".into(),
        }),
    }
}

/// Set function `Φ(A)`: the κ-th power of the norm of `M_F` restricted to
/// sections supported in `A` (atom indices of `T`). Requires `p > q`.
pub fn phi_value(kernel: &OperatorKernel, subset: &[usize], p: Exponent, q: Exponent) -> Result<PhiValue> {
    let (_, kap) = finite_kappa(p, q)?;
    let t_space = kernel.relation().target();
    let mut keep = subset.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&t| t >= t_space.len()) {
        return Err(Error::Reference(format!("target index {bad}")));
    }
    let ids = keep.iter().map(|&t| t_space.id(t).to_string()).collect();
    if keep.is_empty() {
        return Ok(PhiValue { subset: ids, value: 0.0, certificate: Certificate::Exact });
    }
    let norm = exact_norm_decoupled(&kernel.restrict_target(&keep), p, q)?;
    Ok(PhiValue { subset: ids, value: norm.value.powf(kap), certificate: norm.certificate })
}

/// `Φ′(t) = Φ({t}) / μ_t`: on an atomic space the smallest ball around `t` is
/// `{t}` itself.
pub fn phi_derivative(kernel: &OperatorKernel, t: usize, p: Exponent, q: Exponent) -> Result<f64> {
    let phi = phi_value(kernel, &[t], p, q)?;
    Ok(phi.value / kernel.relation().target().weight(t))
}

fn random_direction(kernel: &OperatorKernel, t: usize, seed: u64, sample: u64) -> DVector<f64> {
    let spec = kernel.source_family().fiber(t);
    let mut r = rng::keyed(seed, t as u64, sample);
    let v = DVector::from_fn(spec.dim(), |_, _| r.random_range(-1.0..1.0));
    let n = spec.eval(v.as_slice());
    if n > 0.0 {
        v / n
    } else {
        let mut e = DVector::zeros(spec.dim());
        e[0] = 1.0 / spec.eval(&{
            let mut u = vec![0.0; spec.dim()];
            u[0] = 1.0;
            u
        });
        e
    }
}

/// Per-atom magnitudes maximizing `Σ_t m_t^q g_t` subject to `Σ_t μ_t m_t^p = 1`
/// (up to a common factor).
fn optimal_magnitudes(g: &[f64], mu: &[f64], e: &Exponents) -> Vec<f64> {
    let (pv, qv) = (e.p.finite().expect("finite p"), e.q_finite());
    if pv == qv {
        let mut best: Option<(usize, f64)> = None;
        for (t, (gt, m)) in g.iter().zip(mu).enumerate() {
            let r = gt / m;
            if r > 0.0 && best.is_none_or(|(_, b)| r > b) {
                best = Some((t, r));
            }
        }
        let mut out = vec![0.0; g.len()];
        if let Some((t, _)) = best {
            out[t] = 1.0;
        }
        return out;
    }
    // x_t = μ_t m_t^p ∝ (g_t μ_t^{−q/p})^{p/(p−q)}, in logs to avoid overflow.
    let logs: Vec<Option<f64>> = g
        .iter()
        .zip(mu)
        .map(|(&gt, &m)| (gt > 0.0).then(|| pv / (pv - qv) * (gt.ln() - qv / pv * m.ln())))
        .collect();
    let top = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter()
        .zip(mu)
        .map(|(l, m)| match l {
            Some(l) => ((l - top - m.ln()) / pv).exp(),
            None => 0.0,
        })
        .collect()
}

/// Seeded lower bound on the operator norm: each sample draws one unit
/// direction per atom, places the Hölder-optimal magnitudes on them, and
/// evaluates the ratio `‖M_F f‖_q / ‖f‖_p` of that section. Draws are keyed
/// by (seed, atom, sample).
pub fn oracle_norm_sampling(
    kernel: &OperatorKernel,
    p: Exponent,
    q: Exponent,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let e = Exponents::operator(p, q)?;
    if n_samples == 0 {
        return Err(Error::HypothesisViolated("oracle needs at least one sample".into()));
    }
    let rel = kernel.relation();
    let t_space = rel.target();
    let mu = t_space.weights();
    let qv = e.q_finite();
    let ratios: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map_init(Vec::new, |scratch: &mut Vec<f64>, k| {
            // g_t = Σ λ ‖P d_t‖^q; since f_t = m_t d_t, the image of f at
            // (s, t) has norm m_t ‖P d_t‖ and ‖M_F f‖_q^q = Σ_t m_t^q g_t.
            let mut dnorm = Vec::with_capacity(t_space.len());
            let g: Vec<f64> = (0..t_space.len())
                .map(|t| {
                    let d = random_direction(kernel, t, seed, k);
                    dnorm.push(kernel.source_family().fiber(t).eval(d.as_slice()));
                    rel.pairs_over(t)
                        .iter()
                        .map(|&pk| {
                            let pair = rel.pairs()[pk];
                            let m = kernel.matrix(pk);
                            scratch.clear();
                            scratch.extend((0..m.nrows()).map(|i| m.row(i).transpose().dot(&d)));
                            pair.weight * kernel.target_family().fiber(pair.s).eval(scratch).powf(qv)
                        })
                        .sum()
                })
                .collect();
            let m = optimal_magnitudes(&g, &mu, &e);
            let f_norms: Vec<f64> = m.iter().zip(&dnorm).map(|(mt, dt)| mt * dt).collect();
            let den = lp_aggregate(&f_norms, &mu, e.p);
            if den == 0.0 {
                return 0.0;
            }
            let num: f64 = m.iter().zip(&g).map(|(mt, gt)| mt.powf(qv) * gt).sum();
            num.powf(1.0 / qv) / den
        })
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichTolerances {
    /// Relative slack for `oracle ≤ lower ≤ upper` with exact certificates.
    pub exact: f64,
    /// Relative slack when a lower-bound certificate is involved.
    pub iterative: f64,
    /// Relative gap below which `lower` and `upper` count as equal.
    pub equality: f64,
}

impl Default for SandwichTolerances {
    fn default() -> Self {
        SandwichTolerances { exact: EXACT_TOL, iterative: ITERATIVE_TOL, equality: EXACT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    /// Decoupled operator norm.
    pub lower: f64,
    pub lower_certificate: Certificate,
    /// Criterion value.
    pub upper: f64,
    pub upper_certificate: Certificate,
    /// Sampling lower bound.
    pub oracle: f64,
    pub equality: bool,
    /// `oracle ≤ lower ≤ upper` held within tolerance.
    pub sandwich_ok: bool,
    pub violations: Vec<String>,
}

/// Decoupled norm, criterion and sampling oracle side by side, with the
/// ordering `oracle ≤ lower ≤ upper` checked.
pub fn sandwich_report(
    kernel: &OperatorKernel,
    p: Exponent,
    q: Exponent,
    oracle_samples: usize,
    seed: u64,
    tol: &SandwichTolerances,
) -> Result<BoundednessReport> {
    let e = Exponents::operator(p, q)?;
    let lower = exact_norm_decoupled(kernel, p, q)?;
    let upper = criterion_general(kernel, p, q)?;
    let oracle = if kernel.relation().is_empty() {
        0.0
    } else {
        oracle_norm_sampling(kernel, p, q, oracle_samples, seed)?
    };
    let slack = |cert: Certificate| match cert {
        Certificate::Exact => tol.exact,
        Certificate::LowerBound => tol.iterative,
    };
    let mut violations = Vec::new();
    let lo_slack = slack(lower.certificate) * lower.value.max(1.0);
    if oracle > lower.value + lo_slack {
        violations.push(format!("oracle {oracle} exceeds decoupled norm {}", lower.value));
    }
    let up_slack = slack(lower.certificate.and(upper.certificate)) * upper.value.max(1.0);
    if lower.value > upper.value + up_slack {
        violations.push(format!("decoupled norm {} exceeds criterion {}", lower.value, upper.value));
    }
    let equality = (upper.value - lower.value).abs() <= tol.equality * upper.value.max(1.0);
    Ok(BoundednessReport {
        p: e.p.as_f64(),
        q: e.q.as_f64(),
        kappa: e.kappa.as_f64(),
        lower: lower.value,
        lower_certificate: lower.certificate,
        upper: upper.value,
        upper_certificate: upper.certificate,
        oracle,
        equality,
        sandwich_ok: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing;

    fn fin(v: f64) -> Exponent {
        Exponent::Finite(v)
    }

    #[test]
    fn scalar_instance_values() {
        let k = testing::scalar17();
        let target = 17f64.powf(0.25);
        let c = criterion_general(&k, fin(4.0), fin(2.0)).unwrap();
        assert!((c.value - target).abs() < 1e-12);
        assert!((c.value - 2.030543).abs() < 1e-6);
        let n = exact_norm_decoupled(&k, fin(4.0), fin(2.0)).unwrap();
        assert!(n.is_exact());
        assert!((n.value - target).abs() < 1e-12);
        assert_eq!(criterion_general(&k, fin(2.0), fin(2.0)).unwrap().value, 2.0);
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let k = testing::scalar17().scaled(0.0);
        assert_eq!(criterion_general(&k, fin(4.0), fin(2.0)).unwrap().value, 0.0);
        assert_eq!(exact_norm_decoupled(&k, fin(4.0), fin(2.0)).unwrap().value, 0.0);
    }

    #[test]
    fn unsupported_exponents() {
        let k = testing::scalar17();
        assert!(matches!(criterion_general(&k, fin(2.0), fin(4.0)), Err(Error::UnsupportedExponents { .. })));
        assert!(matches!(phi_value(&k, &[0], fin(2.0), fin(2.0)), Err(Error::UnsupportedExponents { .. })));
        assert!(matches!(
            exact_norm_decoupled(&k, Exponent::Infinite, Exponent::Infinite),
            Err(Error::UnsupportedExponents { .. })
        ));
    }

    #[test]
    fn phi_values_and_derivatives() {
        let k = testing::scalar17();
        let (p, q) = (fin(4.0), fin(2.0));
        assert!((phi_value(&k, &[0], p, q).unwrap().value - 1.0).abs() < 1e-12);
        assert!((phi_value(&k, &[1], p, q).unwrap().value - 16.0).abs() < 1e-12);
        assert!((phi_value(&k, &[0, 1], p, q).unwrap().value - 17.0).abs() < 1e-12);
        assert_eq!(phi_value(&k, &[], p, q).unwrap().value, 0.0);
        assert!((phi_derivative(&k, 0, p, q).unwrap() - 1.0).abs() < 1e-12);
        assert!((phi_derivative(&k, 1, p, q).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn phi_derivative_rescaled_atom() {
        let k = testing::scalar17_with_mu(2.0, 1.0);
        let (p, q) = (fin(4.0), fin(2.0));
        let phi1 = phi_value(&k, &[0], p, q).unwrap().value;
        assert!((phi_derivative(&k, 0, p, q).unwrap() - phi1 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_t_hypothesis() {
        let k = testing::scalar17();
        let rho = uniform_norm_profile(&k).unwrap();
        assert_eq!(rho.values(), &[1.0, 2.0]);
        let v = criterion_uniform_t(&k, &rho, fin(4.0), fin(2.0)).unwrap();
        assert!((v - 17f64.powf(0.25)).abs() < 1e-12);
        let bad = DensityFn::new(vec![1.0, 3.0]);
        assert!(matches!(
            criterion_uniform_t(&k, &bad, fin(4.0), fin(2.0)),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_exact_on_scalars() {
        let k = testing::scalar17();
        let a = oracle_norm_sampling(&k, fin(4.0), fin(2.0), 64, 9).unwrap();
        let b = oracle_norm_sampling(&k, fin(4.0), fin(2.0), 64, 9).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a - 17f64.powf(0.25)).abs() < 1e-9);
    }

    #[test]
    fn empty_relation_report() {
        let k = testing::empty_instance();
        let r = sandwich_report(&k, fin(3.0), fin(2.0), 10, 1, &SandwichTolerances::default()).unwrap();
        assert_eq!((r.lower, r.upper, r.oracle), (0.0, 0.0, 0.0));
        assert!(r.equality && r.sandwich_ok);
    }
}
