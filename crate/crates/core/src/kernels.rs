//! Operator-valued kernels `P(s,t): W_t → V_s`, the mixed and weighted
//! composition operators they induce, and the per-fiber norm problems the
//! boundedness computations reduce to.
//!
//! Induced norms between weighted r-norm spaces are computed exactly where a
//! closed form exists (one input dimension, ℓ¹ input, ℓ^∞ output, ℓ²→ℓ²). In
//! every other case the general r→r' problem is NP-hard, so the value comes
//! from a multistart fixed-point ascent and is certified only as a lower
//! bound.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::fibers::{FiberFamily, NormSpec, Section};
use crate::measure::{AtomMap, FiniteMeasureSpace, Pair, WeightedRelation};
use crate::{rng, Error, Exponent, Result};

/// Multistarts per direction problem.
pub const ASCENT_STARTS: usize = 16;
/// Fixed-point iterations per start.
pub const ASCENT_ITERATIONS: usize = 200;
/// Relative improvement below which a start is considered converged.
pub const ASCENT_TOLERANCE: f64 = 1e-12;
/// Seed of the random multistarts. Starts depend only on the problem
/// dimension, so a given direction problem always gets the same answer no
/// matter which instance or subset it was taken from.
const ASCENT_SEED: u64 = 0x5eed_a5ce;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Value produced by a closed-form branch.
    Exact,
    /// Value attained by some direction; the true supremum may be larger.
    LowerBound,
}

impl Certificate {
    pub fn and(self, other: Certificate) -> Certificate {
        if self == Certificate::Exact && other == Certificate::Exact {
            Certificate::Exact
        } else {
            Certificate::LowerBound
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Certificate::Exact => "exact",
            Certificate::LowerBound => "lower_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormResult {
    pub value: f64,
    pub certificate: Certificate,
}

impl NormResult {
    pub fn exact(value: f64) -> Self {
        NormResult { value, certificate: Certificate::Exact }
    }

    pub fn lower_bound(value: f64) -> Self {
        NormResult { value, certificate: Certificate::LowerBound }
    }

    pub fn is_exact(&self) -> bool {
        self.certificate == Certificate::Exact
    }

    fn scale(self, factor: f64) -> Self {
        NormResult { value: self.value * factor, ..self }
    }
}

/// Source and target exponents `q ≤ p` with the derived `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub p: Exponent,
    pub q: Exponent,
    pub kappa: Exponent,
}

impl Exponents {
    pub fn new(p: Exponent, q: Exponent) -> Result<Self> {
        Ok(Exponents { p, q, kappa: kappa(p, q)? })
    }

    /// Like [`new`](Self::new) but also requires a finite `q`, which every
    /// norm computation over a relation needs.
    pub fn operator(p: Exponent, q: Exponent) -> Result<Self> {
        let e = Self::new(p, q)?;
        if e.q.is_infinite() {
            return Err(unsupported(p, q, "source exponent p = ∞ is not supported"));
        }
        Ok(e)
    }

    pub fn q_finite(&self) -> f64 {
        self.q.finite().expect("validated finite q")
    }
}

pub(crate) fn unsupported(p: Exponent, q: Exponent, reason: &str) -> Error {
    Error::UnsupportedExponents { p: p.to_string(), q: q.to_string(), reason: reason.to_string() }
}

/// `κ = pq/(p−q)` for `p > q`, `∞` for `p = q`.
pub fn kappa(p: Exponent, q: Exponent) -> Result<Exponent> {
    match (p, q) {
        (Exponent::Infinite, Exponent::Infinite) => Ok(Exponent::Infinite),
        (Exponent::Infinite, _) => Err(unsupported(p, q, "p = ∞ requires q = ∞")),
        (_, Exponent::Infinite) => Err(unsupported(p, q, "p < q")),
        (Exponent::Finite(pv), Exponent::Finite(qv)) => {
            if pv < qv {
                Err(unsupported(p, q, "p < q"))
            } else if pv == qv {
                Ok(Exponent::Infinite)
            } else {
                Ok(Exponent::Finite(pv * qv / (pv - qv)))
            }
        }
    }
}

fn same_space(a: &Arc<FiniteMeasureSpace>, b: &Arc<FiniteMeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A matrix `P(s,t)` of shape `dim(V_s) × dim(W_t)` for every pair of a
/// relation `F ⊂ S×T`; `W` is a fiber family over `T` and `V` over `S`.
#[derive(Debug, Clone)]
pub struct OperatorKernel {
    relation: Arc<WeightedRelation>,
    source: Arc<FiberFamily>,
    target: Arc<FiberFamily>,
    mats: Vec<DMatrix<f64>>,
}

impl OperatorKernel {
    /// `mats` is aligned with the canonical pair order of `relation`.
    pub fn new(
        relation: Arc<WeightedRelation>,
        source: Arc<FiberFamily>,
        target: Arc<FiberFamily>,
        mats: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if !same_space(source.base(), relation.target()) {
            return Err(Error::Reference("source family is not over the relation's target space".into()));
        }
        if !same_space(target.base(), relation.source()) {
            return Err(Error::Reference("target family is not over the relation's source space".into()));
        }
        if mats.len() != relation.len() {
            return Err(Error::DimensionMismatch { expected: relation.len(), found: mats.len() });
        }
        for (m, p) in mats.iter().zip(relation.pairs()) {
            let (rows, cols) = (target.dim(p.s), source.dim(p.t));
            if m.nrows() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: m.nrows() });
            }
            if m.ncols() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: m.ncols() });
            }
        }
        Ok(OperatorKernel { relation, source, target, mats })
    }

    /// Builds each matrix from `(pair, rows, cols)`.
    pub fn from_fn<F>(
        relation: Arc<WeightedRelation>,
        source: Arc<FiberFamily>,
        target: Arc<FiberFamily>,
        mut make: F,
    ) -> Result<Self>
    where
        F: FnMut(&Pair, usize, usize) -> DMatrix<f64>,
    {
        let mats = relation
            .pairs()
            .iter()
            .map(|p| make(p, target.dim(p.s), source.dim(p.t)))
            .collect();
        Self::new(relation, source, target, mats)
    }

    pub fn relation(&self) -> &Arc<WeightedRelation> {
        &self.relation
    }

    /// Family `{W_t}` over `T`.
    pub fn source_family(&self) -> &Arc<FiberFamily> {
        &self.source
    }

    /// Family `{V_s}` over `S`.
    pub fn target_family(&self) -> &Arc<FiberFamily> {
        &self.target
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.mats[k]
    }

    /// All matrices multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        OperatorKernel { mats: self.mats.iter().map(|m| m * factor).collect(), ..self.clone() }
    }

    /// The kernel over `F ∩ S×A` with `T` replaced by `A` (atom indices of `T`).
    pub fn restrict_target(&self, keep: &[usize]) -> Self {
        let t_space = self.relation.target();
        let sub_t = Arc::new(t_space.restrict(keep));
        let mut new_index = vec![None; t_space.len()];
        for &t in keep {
            new_index[t] = sub_t.index_of(t_space.id(t));
        }
        // Restriction keeps lexicographic order, so re-indexed pairs stay in
        // canonical (s, t) order and the matrices stay aligned.
        let (pairs, mats): (Vec<Pair>, Vec<DMatrix<f64>>) = self
            .relation
            .pairs()
            .iter()
            .zip(&self.mats)
            .filter_map(|(p, m)| new_index[p.t].map(|t| (Pair { t, ..*p }, m.clone())))
            .unzip();
        let relation =
            WeightedRelation::from_pairs(self.relation.source().clone(), sub_t.clone(), pairs)
                .expect("sub-relation of a valid relation");
        let fibers = (0..sub_t.len())
            .map(|i| {
                let t = t_space.index_of(sub_t.id(i)).expect("kept atom");
                self.source.fiber(t).clone()
            })
            .collect();
        let source = Arc::new(FiberFamily::new(sub_t, fibers).expect("restricted family"));
        OperatorKernel::new(Arc::new(relation), source, self.target.clone(), mats)
            .expect("restricted kernel")
    }
}

/// `M_F f (s,t) = P(s,t) f(t)`, one vector in `V_s` per pair of `F`.
pub fn apply_mixed(kernel: &OperatorKernel, f: &Section) -> Result<Section> {
    f.check_against(&kernel.source)?;
    let values = kernel
        .relation
        .pairs()
        .iter()
        .zip(&kernel.mats)
        .map(|(p, m)| m * f.get(p.t))
        .collect();
    Ok(Section::new(values))
}

/// `L^q(F, λ)` norm of a section over the pairs of the kernel's relation,
/// measured in the fibers `Ṽ_(s,t) = V_s`.
pub fn image_norm(kernel: &OperatorKernel, g: &Section, q: Exponent) -> Result<f64> {
    let pairs = kernel.relation.pairs();
    if g.len() != pairs.len() {
        return Err(Error::DimensionMismatch { expected: pairs.len(), found: g.len() });
    }
    let mut mags = Vec::with_capacity(pairs.len());
    for (p, v) in pairs.iter().zip(g.values()) {
        let spec = kernel.target.fiber(p.s);
        if v.len() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), found: v.len() });
        }
        mags.push(spec.eval(v.as_slice()));
    }
    let weights: Vec<f64> = pairs.iter().map(|p| p.weight).collect();
    Ok(crate::fibers::lp_aggregate(&mags, &weights, q))
}

/// `M_ψ f (s) = P(s, ψ(s)) f(ψ(s))`, a section over `S`.
pub fn apply_weighted_composition(
    kernel: &OperatorKernel,
    psi: &AtomMap,
    f: &Section,
) -> Result<Section> {
    let rel = &kernel.relation;
    if !same_space(psi.source(), rel.source()) || !same_space(psi.target(), rel.target()) {
        return Err(Error::Reference("mapping and kernel live on different spaces".into()));
    }
    f.check_against(&kernel.source)?;
    let values = (0..psi.source().len())
        .map(|s| {
            let t = psi.image(s);
            let k = rel.find(s, t).ok_or_else(|| Error::MissingPair {
                s: rel.source().id(s).to_string(),
                t: rel.target().id(t).to_string(),
            })?;
            Ok(&kernel.mats[k] * f.get(t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Section::new(values))
}

/// `N g (s,t) = g(s)`: lifts a section over `S` to the pairs of `relation`.
pub fn lift_to_relation(relation: &WeightedRelation, g: &Section) -> Result<Section> {
    if g.len() != relation.source().len() {
        return Err(Error::DimensionMismatch { expected: relation.source().len(), found: g.len() });
    }
    Ok(Section::new(relation.pairs().iter().map(|p| g.get(p.s).clone()).collect()))
}

/// `N⁻¹ h (s) = h(s, ψ(s))` for a section over the pairs of the graph of ψ.
pub fn restrict_from_graph(relation: &WeightedRelation, psi: &AtomMap, h: &Section) -> Result<Section> {
    if h.len() != relation.len() {
        return Err(Error::DimensionMismatch { expected: relation.len(), found: h.len() });
    }
    let values = (0..psi.source().len())
        .map(|s| {
            let t = psi.image(s);
            relation.find(s, t).map(|k| h.get(k).clone()).ok_or_else(|| Error::MissingPair {
                s: relation.source().id(s).to_string(),
                t: relation.target().id(t).to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Section::new(values))
}

// ---------------------------------------------------------------------------
// Direction problems
// ---------------------------------------------------------------------------

/// Gradient of the standard ℓ^r norm at `y` (a subgradient at kinks).
fn norm_gradient(y: &DVector<f64>, r: Exponent) -> DVector<f64> {
    match r {
        Exponent::Infinite => {
            let mut g = DVector::zeros(y.len());
            if let Some(k) = first_argmax_abs(y.as_slice()) {
                g[k] = y[k].signum();
            }
            g
        }
        Exponent::Finite(1.0) => y.map(sign),
        Exponent::Finite(rv) => {
            let n = r.norm_of(&y.iter().map(|v| v.abs()).collect::<Vec<_>>());
            if n == 0.0 {
                return DVector::zeros(y.len());
            }
            y.map(|v| sign(v) * (v.abs() / n).powf(rv - 1.0))
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn first_argmax_abs(v: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.iter().enumerate() {
        if best.is_none_or(|(_, b)| x.abs() > b) {
            best = Some((i, x.abs()));
        }
    }
    best.filter(|&(_, b)| b > 0.0).map(|(i, _)| i)
}

fn std_norm(v: &DVector<f64>, r: Exponent) -> f64 {
    r.norm_of(&v.iter().map(|x| x.abs()).collect::<Vec<_>>())
}

/// `argmax_{‖x‖_p = 1} ⟨z, x⟩` for the standard ℓ^p norm.
fn dual_direction(z: &DVector<f64>, p: Exponent) -> Option<DVector<f64>> {
    let k = first_argmax_abs(z.as_slice())?;
    Some(match p {
        Exponent::Infinite => z.map(|v| if v < 0.0 { -1.0 } else { 1.0 }),
        Exponent::Finite(1.0) => {
            let mut x = DVector::zeros(z.len());
            x[k] = z[k].signum();
            x
        }
        Exponent::Finite(_) => {
            let pc = p.conjugate().finite().expect("conjugate of p > 1 is finite");
            let zmax = z[k].abs();
            let x = z.map(|v| sign(v) * (v.abs() / zmax).powf(pc - 1.0));
            let n = std_norm(&x, p);
            x / n
        }
    })
}

/// One summand `coef · ‖B x‖_r^q` of a direction objective, already expressed
/// in standard (unweighted) coordinates.
struct Block {
    mat: DMatrix<f64>,
    r: Exponent,
    coef: f64,
}

/// Maximizes `h(x) = (Σ_b coef_b ‖B_b x‖_{r_b}^q)^{1/q}` over the unit sphere
/// of standard ℓ^{p_in}. `h` is convex, so stepping to the maximizer of its
/// linearization never decreases it; the best value over all starts is
/// returned.
struct DirectionProblem {
    blocks: Vec<Block>,
    q: f64,
    p_in: Exponent,
    n: usize,
}

impl DirectionProblem {
    fn objective(&self, x: &DVector<f64>) -> f64 {
        let mags: Vec<f64> = self.blocks.iter().map(|b| std_norm(&(&b.mat * x), b.r)).collect();
        let scaled: Vec<f64> = mags
            .iter()
            .zip(&self.blocks)
            .map(|(m, b)| m * b.coef.powf(1.0 / self.q))
            .collect();
        Exponent::Finite(self.q).norm_of(&scaled)
    }

    fn ascent_direction(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.n);
        for b in &self.blocks {
            let y = &b.mat * x;
            let m = std_norm(&y, b.r);
            if m == 0.0 {
                continue;
            }
            let g = norm_gradient(&y, b.r);
            z += b.mat.tr_mul(&g) * (b.coef * m.powf(self.q - 1.0));
        }
        z
    }

    fn starts(&self) -> Vec<DVector<f64>> {
        let mut starts = Vec::with_capacity(ASCENT_STARTS);
        for j in 0..self.n.min(ASCENT_STARTS) {
            starts.push(DVector::from_fn(self.n, |i, _| if i == j { 1.0 } else { 0.0 }));
        }
        if starts.len() < ASCENT_STARTS && self.n > 1 {
            starts.push(DVector::from_element(self.n, 1.0));
        }
        let mut k = 0u64;
        while starts.len() < ASCENT_STARTS {
            let mut r = rng::keyed(ASCENT_SEED, self.n as u64, k);
            starts.push(DVector::from_fn(self.n, |_, _| r.random_range(-1.0..1.0)));
            k += 1;
        }
        starts
            .into_iter()
            .filter_map(|x| {
                let n = std_norm(&x, self.p_in);
                (n > 0.0).then(|| x / n)
            })
            .collect()
    }

    fn solve(&self) -> f64 {
        self.starts()
            .into_iter()
            .map(|mut x| {
                let mut value = self.objective(&x);
                for _ in 0..ASCENT_ITERATIONS {
                    let z = self.ascent_direction(&x);
                    let Some(next) = dual_direction(&z, self.p_in) else { break };
                    let next_value = self.objective(&next);
                    if next_value <= value * (1.0 + ASCENT_TOLERANCE) {
                        value = value.max(next_value);
                        break;
                    }
                    x = next;
                    value = next_value;
                }
                value
            })
            .fold(0.0, f64::max)
    }
}

/// `B = diag(d_out) A diag(d_in)⁻¹`: the matrix whose standard ℓ^{r_in} →
/// ℓ^{r_out} norm equals the weighted norm of `A`.
fn standardize(a: &DMatrix<f64>, in_norm: &NormSpec, out_norm: &NormSpec) -> DMatrix<f64> {
    let din = in_norm.scales();
    let dout = out_norm.scales();
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| dout[i] * a[(i, j)] / din[j])
}

fn column_norms(b: &DMatrix<f64>, r: Exponent) -> Vec<f64> {
    (0..b.ncols()).map(|j| std_norm(&b.column(j).into_owned(), r)).collect()
}

fn standard_operator_norm(b: &DMatrix<f64>, r_in: Exponent, r_out: Exponent) -> NormResult {
    if b.iter().all(|&v| v == 0.0) {
        return NormResult::exact(0.0);
    }
    if b.ncols() == 1 || r_in == Exponent::Finite(1.0) {
        return NormResult::exact(column_norms(b, r_out).into_iter().fold(0.0, f64::max));
    }
    if r_out.is_infinite() {
        let dual = r_in.conjugate();
        let v = (0..b.nrows())
            .map(|i| std_norm(&b.row(i).transpose(), dual))
            .fold(0.0, f64::max);
        return NormResult::exact(v);
    }
    if r_in == Exponent::Finite(2.0) && r_out == Exponent::Finite(2.0) {
        let sv = b.clone().svd(false, false).singular_values;
        return NormResult::exact(sv.iter().copied().fold(0.0, f64::max));
    }
    let problem = DirectionProblem {
        blocks: vec![Block { mat: b.clone(), r: r_out, coef: 1.0 }],
        q: 1.0,
        p_in: r_in,
        n: b.ncols(),
    };
    NormResult::lower_bound(problem.solve())
}

/// `sup_{‖e‖_in = 1} ‖A e‖_out` between weighted r-norm spaces.
pub fn matrix_operator_norm(
    a: &DMatrix<f64>,
    in_norm: &NormSpec,
    out_norm: &NormSpec,
) -> Result<NormResult> {
    if a.ncols() != in_norm.dim() {
        return Err(Error::DimensionMismatch { expected: in_norm.dim(), found: a.ncols() });
    }
    if a.nrows() != out_norm.dim() {
        return Err(Error::DimensionMismatch { expected: out_norm.dim(), found: a.nrows() });
    }
    let b = standardize(a, in_norm, out_norm);
    Ok(standard_operator_norm(&b, in_norm.r(), out_norm.r()))
}

/// Operator norm of the kernel matrix on pair `k`, `‖P(s,t)‖: W_t → V_s`.
pub fn pair_operator_norm(kernel: &OperatorKernel, k: usize) -> NormResult {
    let p = kernel.relation.pairs()[k];
    matrix_operator_norm(&kernel.mats[k], kernel.source.fiber(p.t), kernel.target.fiber(p.s))
        .expect("kernel shapes are validated at construction")
}

/// `c(t) = sup_{‖e‖_{W_t} = 1} (Σ_{s ∈ F_t} λ_st ‖P(s,t) e‖_{V_s}^q)^{1/q}`.
///
/// Unlike `(Σ λ_st ‖P(s,t)‖^q)^{1/q}`, the direction `e` is shared by every
/// `s ∈ F_t`, which is what a section can actually do at the atom `t`.
pub fn fiber_effectiveness(kernel: &OperatorKernel, t: usize, q: f64) -> NormResult {
    let rel = &kernel.relation;
    let over = rel.pairs_over(t);
    let w_spec = kernel.source.fiber(t);
    match over {
        [] => return NormResult::exact(0.0),
        [k] => {
            let lam = rel.pairs()[*k].weight;
            return pair_operator_norm(kernel, *k).scale(lam.powf(1.0 / q));
        }
        _ => {}
    }
    let din = w_spec.scales();
    if w_spec.dim() == 1 {
        let mags: Vec<f64> = over
            .iter()
            .map(|&k| {
                let p = rel.pairs()[k];
                let col = kernel.mats[k].column(0) / din[0];
                kernel.target.fiber(p.s).eval(col.as_slice()) * p.weight.powf(1.0 / q)
            })
            .collect();
        return NormResult::exact(Exponent::Finite(q).norm_of(&mags));
    }
    let blocks: Vec<Block> = over
        .iter()
        .map(|&k| {
            let p = rel.pairs()[k];
            let v_spec = kernel.target.fiber(p.s);
            Block { mat: standardize(&kernel.mats[k], w_spec, v_spec), r: v_spec.r(), coef: p.weight }
        })
        .collect();
    if blocks.iter().all(|b| b.r == Exponent::Finite(q)) {
        // Σ λ ‖B y‖_q^q is a single weighted ℓ^q norm of the stacked matrix.
        let rows: usize = blocks.iter().map(|b| b.mat.nrows()).sum();
        let mut stacked = DMatrix::zeros(rows, w_spec.dim());
        let mut at = 0;
        for b in &blocks {
            let m = &b.mat * b.coef.powf(1.0 / q);
            stacked.rows_mut(at, m.nrows()).copy_from(&m);
            at += m.nrows();
        }
        return standard_operator_norm(&stacked, w_spec.r(), Exponent::Finite(q));
    }
    let problem = DirectionProblem { blocks, q, p_in: w_spec.r(), n: w_spec.dim() };
    NormResult::lower_bound(problem.solve())
}

/// `c(t)` for every atom of `T`, computed in parallel.
pub fn fiber_effectiveness_all(kernel: &OperatorKernel, q: f64) -> Vec<NormResult> {
    (0..kernel.relation.target().len())
        .into_par_iter()
        .map(|t| fiber_effectiveness(kernel, t, q))
        .collect()
}

/// `(Σ_{s ∈ F_t} λ_st ‖P(s,t)‖^q)^{1/q}`: the pointwise-norm aggregate that
/// bounds `c(t)` from above.
pub fn pointwise_aggregate(kernel: &OperatorKernel, t: usize, q: f64) -> NormResult {
    let rel = &kernel.relation;
    let mut cert = Certificate::Exact;
    let mags: Vec<f64> = rel
        .pairs_over(t)
        .iter()
        .map(|&k| {
            let n = pair_operator_norm(kernel, k);
            cert = cert.and(n.certificate);
            n.value * rel.pairs()[k].weight.powf(1.0 / q)
        })
        .collect();
    NormResult { value: Exponent::Finite(q).norm_of(&mags), certificate: cert }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FiniteMeasureSpace;

    fn fin(r: f64) -> Exponent {
        Exponent::Finite(r)
    }

    fn l(r: Exponent, n: usize) -> NormSpec {
        NormSpec::standard(r, n).unwrap()
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(fin(4.0), fin(2.0)).unwrap(), fin(4.0));
        assert_eq!(kappa(fin(2.0), fin(2.0)).unwrap(), Exponent::Infinite);
        assert_eq!(kappa(fin(3.0), fin(1.0)).unwrap(), fin(1.5));
        assert!(matches!(kappa(fin(2.0), fin(3.0)), Err(Error::UnsupportedExponents { .. })));
        assert!(matches!(kappa(Exponent::Infinite, fin(3.0)), Err(Error::UnsupportedExponents { .. })));
        assert_eq!(kappa(Exponent::Infinite, Exponent::Infinite).unwrap(), Exponent::Infinite);
    }

    #[test]
    fn identity_and_known_matrix_norms() {
        let id = DMatrix::<f64>::identity(2, 2);
        let n = matrix_operator_norm(&id, &l(fin(2.0), 2), &l(fin(2.0), 2)).unwrap();
        assert_eq!(n, NormResult::exact(1.0));

        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        // σ_max from the closed-form eigenvalues of AᵀA = [[10,14],[14,20]].
        let sigma = (15.0 + 221f64.sqrt()).sqrt();
        let n = matrix_operator_norm(&a, &l(fin(2.0), 2), &l(fin(2.0), 2)).unwrap();
        assert!(n.is_exact());
        assert!((n.value - sigma).abs() < 1e-12);
        assert!((n.value - 5.464986).abs() < 1e-6);

        // ℓ¹ ball vertices are ±e_j: max column sum.
        let n = matrix_operator_norm(&a, &l(fin(1.0), 2), &l(fin(1.0), 2)).unwrap();
        assert_eq!(n, NormResult::exact(6.0));
    }

    #[test]
    fn row_branch_for_infinite_output() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        let n = matrix_operator_norm(&a, &l(Exponent::Infinite, 2), &l(Exponent::Infinite, 2)).unwrap();
        assert_eq!(n, NormResult::exact(7.0));
    }

    #[test]
    fn weighted_norm_matches_rescaled_problem() {
        let a = DMatrix::from_row_slice(1, 1, &[3.0]);
        let in_n = NormSpec::new(fin(2.0), vec![4.0]).unwrap();
        let out_n = NormSpec::new(fin(2.0), vec![9.0]).unwrap();
        // ‖e‖ = 2|e|, ‖Ae‖ = 3·3|e| → 9/2.
        let n = matrix_operator_norm(&a, &in_n, &out_n).unwrap();
        assert!((n.value - 4.5).abs() < 1e-15);
    }

    #[test]
    fn ascent_branch_is_lower_bound() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let n = matrix_operator_norm(&a, &l(fin(3.0), 2), &l(fin(1.5), 2)).unwrap();
        assert_eq!(n.certificate, Certificate::LowerBound);
        assert!(n.value > 0.0);
    }

    #[test]
    fn shape_errors() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            matrix_operator_norm(&a, &l(fin(2.0), 2), &l(fin(2.0), 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn scalar_setup(ps: &[f64], lams: &[f64]) -> OperatorKernel {
        let s = Arc::new(
            FiniteMeasureSpace::new((0..ps.len()).map(|i| (format!("s{i}"), 1.0))).unwrap(),
        );
        let t = Arc::new(FiniteMeasureSpace::new([("t1", 1.0)]).unwrap());
        let rel = Arc::new(
            WeightedRelation::new(
                s.clone(),
                t.clone(),
                lams.iter().enumerate().map(|(i, &w)| (format!("s{i}"), "t1", w)),
            )
            .unwrap(),
        );
        let w = Arc::new(FiberFamily::uniform(t, l(fin(2.0), 1)));
        let v = Arc::new(FiberFamily::uniform(s, l(fin(2.0), 1)));
        OperatorKernel::from_fn(rel, w, v, |p, _, _| DMatrix::from_element(1, 1, ps[p.s])).unwrap()
    }

    #[test]
    fn effectiveness_examples() {
        let k = scalar_setup(&[2.0], &[1.0]);
        assert_eq!(fiber_effectiveness(&k, 0, 2.0), NormResult::exact(2.0));
        let k = scalar_setup(&[1.0, 2.0], &[1.0, 1.0]);
        let c = fiber_effectiveness(&k, 0, 2.0);
        assert!(c.is_exact());
        assert!((c.value - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn apply_mixed_scalar_example() {
        let s = Arc::new(FiniteMeasureSpace::new([("s1", 1.0)]).unwrap());
        let t = Arc::new(FiniteMeasureSpace::new([("t1", 1.0), ("t2", 1.0)]).unwrap());
        let rel = Arc::new(
            WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 1.0), ("s1", "t2", 1.0)]).unwrap(),
        );
        let w = Arc::new(FiberFamily::uniform(t, l(fin(2.0), 1)));
        let v = Arc::new(FiberFamily::uniform(s, l(fin(2.0), 1)));
        let k = OperatorKernel::from_fn(rel, w, v, |p, _, _| {
            DMatrix::from_element(1, 1, (p.t + 1) as f64)
        })
        .unwrap();
        let out = apply_mixed(&k, &Section::scalar(&[3.0, 5.0])).unwrap();
        assert_eq!(out, Section::scalar(&[3.0, 10.0]));
        let zero = apply_mixed(&k, &Section::scalar(&[0.0, 0.0])).unwrap();
        assert_eq!(zero, Section::scalar(&[0.0, 0.0]));
        assert!(apply_mixed(&k, &Section::scalar(&[1.0])).is_err());
    }

    #[test]
    fn weighted_composition_missing_pair() {
        let s = Arc::new(FiniteMeasureSpace::new([("s1", 1.0), ("s2", 1.0)]).unwrap());
        let t = Arc::new(FiniteMeasureSpace::new([("t1", 1.0), ("t2", 1.0)]).unwrap());
        let rel = Arc::new(WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 1.0)]).unwrap());
        let w = Arc::new(FiberFamily::uniform(t.clone(), l(fin(2.0), 1)));
        let v = Arc::new(FiberFamily::uniform(s.clone(), l(fin(2.0), 1)));
        let k = OperatorKernel::from_fn(rel, w, v, |_, _, _| DMatrix::from_element(1, 1, 1.0)).unwrap();
        let psi = AtomMap::new(s, t, [("s1", "t1"), ("s2", "t1")]).unwrap();
        let err = apply_weighted_composition(&k, &psi, &Section::scalar(&[1.0, 1.0])).unwrap_err();
        assert_eq!(err, Error::MissingPair { s: "s2".into(), t: "t1".into() });
    }
}
