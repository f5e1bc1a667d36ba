//! Composition operators `C_φ f = f∘φ` from `L^{p,β}(Ω′)` to `L^{q,α}(Ω)` for
//! split mappings `φ(s,x) = (ψ(s), u(s,x))`, where `Ω ⊂ S×X` and `Ω′ ⊂ T×Y`.
//!
//! Viewing `L^{q,α}(Ω)` as the direct integral of the slice spaces `L^α(Ω_s)`
//! over `S`, `C_φ` becomes a weighted composition over ψ whose kernel
//! `P_s: L^β(Ω′_{ψ(s)}) → L^α(Ω_s)` is the slice composition `g ↦ g∘u(s,·)`.
//! The slice norms have the closed form `‖J_{u⁻¹}^{1/α}(t,·)‖_{L^θ(Ω′_t)}` with
//! `1/θ = 1/α − 1/β`, which gives [`criterion_mixed_composition`]; the graph
//! instance built by [`graph_instance`] gives the same quantity through the
//! generic kernel machinery, and the decoupled operator norm.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::boundedness::{criterion_graph, exact_norm_decoupled, weighted_lkappa};
pub use crate::fibers::MixedDomain;
use crate::fibers::{mixed_as_direct_integral, mixed_norm, lp_aggregate, DirectIntegralForm};
use crate::kernels::{unsupported, Exponents, NormResult, OperatorKernel};
use crate::measure::{graph_relation, pushforward_volume_derivative, AtomMap, DensityFn};
use crate::{Error, Exponent, Result};

/// `φ(s,x) = (ψ(s), u(s,x))` as a map from the cells of `Ω` to the cells of
/// `Ω′`; `u(s,·)` maps `Ω_s` into `Ω′_{ψ(s)}`.
#[derive(Debug, Clone)]
pub struct SplitMapping {
    domain: Arc<MixedDomain>,
    codomain: Arc<MixedDomain>,
    psi: AtomMap,
    cell_map: Vec<usize>,
}

impl SplitMapping {
    /// `psi` maps the outer atoms of `domain` to those of `codomain`; `u`
    /// lists `(s, x, y)` once for every cell `(s, x)` of `domain`.
    pub fn new<I, A, B, C>(
        domain: Arc<MixedDomain>,
        codomain: Arc<MixedDomain>,
        psi: AtomMap,
        u: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B, C)>,
        A: AsRef<str>,
        B: AsRef<str>,
        C: AsRef<str>,
    {
        if psi.source().as_ref() != domain.outer().as_ref()
            || psi.target().as_ref() != codomain.outer().as_ref()
        {
            return Err(Error::Reference("ψ does not map between the outer spaces".into()));
        }
        let mut cell_map = vec![None; domain.len()];
        for (s_id, x_id, y_id) in u {
            let (s_id, x_id, y_id) = (s_id.as_ref(), x_id.as_ref(), y_id.as_ref());
            let s = domain.outer().require(s_id)?;
            let x = domain.inner().require(x_id)?;
            let y = codomain.inner().require(y_id)?;
            let k = domain
                .find(s, x)
                .ok_or_else(|| Error::Reference(format!("cell ({s_id}, {x_id})")))?;
            let t = psi.image(s);
            let target = codomain.find(t, y).ok_or_else(|| {
                Error::Range(format!(
                    "u({s_id}, {x_id}) = {y_id} is not in the slice over `{}`",
                    codomain.outer().id(t)
                ))
            })?;
            if cell_map[k].replace(target).is_some() {
                return Err(Error::DuplicateId(format!("({s_id}, {x_id})")));
            }
        }
        let cell_map = cell_map
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                c.ok_or_else(|| {
                    let (s, x) = domain.cells()[k];
                    Error::NotTotal(format!("({}, {})", domain.outer().id(s), domain.inner().id(x)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SplitMapping { domain, codomain, psi, cell_map })
    }

    /// Builds the mapping from a pointwise description `(s, x) ↦ (t, y)`.
    /// Fails with `NotSplit` when two cells of one slice land over different
    /// outer atoms, and with `NotTotal` when an outer atom has an empty slice
    /// (its image under ψ is then not determined).
    pub fn from_points<I, A, B, C, D>(
        domain: Arc<MixedDomain>,
        codomain: Arc<MixedDomain>,
        points: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B, C, D)>,
        A: AsRef<str>,
        B: AsRef<str>,
        C: AsRef<str>,
        D: AsRef<str>,
    {
        let mut psi_table: Vec<Option<usize>> = vec![None; domain.outer().len()];
        let mut u = Vec::new();
        for (s_id, x_id, t_id, y_id) in points {
            let s = domain.outer().require(s_id.as_ref())?;
            let t = codomain.outer().require(t_id.as_ref())?;
            match psi_table[s] {
                Some(prev) if prev != t => {
                    return Err(Error::NotSplit(format!(
                        "slice over `{}` is sent over both `{}` and `{}`",
                        s_id.as_ref(),
                        codomain.outer().id(prev),
                        t_id.as_ref()
                    )))
                }
                _ => psi_table[s] = Some(t),
            }
            u.push((s_id.as_ref().to_string(), x_id.as_ref().to_string(), y_id.as_ref().to_string()));
        }
        let table = psi_table
            .into_iter()
            .enumerate()
            .map(|(s, t)| t.ok_or_else(|| Error::NotTotal(domain.outer().id(s).to_string())))
            .collect::<Result<Vec<_>>>()?;
        let psi = AtomMap::from_indices(domain.outer().clone(), codomain.outer().clone(), table)?;
        Self::new(domain, codomain, psi, u)
    }

    pub fn domain(&self) -> &Arc<MixedDomain> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<MixedDomain> {
        &self.codomain
    }

    pub fn psi(&self) -> &AtomMap {
        &self.psi
    }

    /// Cell of `Ω′` hit by each cell of `Ω`.
    pub fn cell_map(&self) -> &[usize] {
        &self.cell_map
    }
}

/// `(C_φ f)(s,x) = f(ψ(s), u(s,x))` for cell values `f` on `Ω′`.
pub fn compose_apply(f: &[f64], phi: &SplitMapping) -> Result<Vec<f64>> {
    if f.len() != phi.codomain.len() {
        return Err(Error::DimensionMismatch { expected: phi.codomain.len(), found: f.len() });
    }
    Ok(phi.cell_map.iter().map(|&c| f[c]).collect())
}

/// `J_{ψ⁻¹}(t) = ν(ψ⁻¹t)/μ_t` over the outer atoms of `Ω′`, and
/// `J_{u⁻¹}(t,y) = η_X(u(s,·)⁻¹y)/η_Y(y)` with `s = ψ⁻¹(t)` over the cells of
/// `Ω′` (zero off the image). Requires ψ injective.
pub fn slice_volume_derivatives(phi: &SplitMapping) -> Result<(DensityFn, DensityFn)> {
    phi.psi.check_injective()?;
    let (dom, cod) = (&phi.domain, &phi.codomain);
    let j_psi = pushforward_volume_derivative(&phi.psi, dom.outer(), cod.outer())?;
    let eta_x = dom.inner().weights();
    let eta_y = cod.inner().weights();
    let mut mass = vec![0.0; cod.len()];
    for (k, &c) in phi.cell_map.iter().enumerate() {
        mass[c] += eta_x[dom.cells()[k].1];
    }
    let j_u = mass.iter().zip(cod.cells()).map(|(m, &(_, y))| m / eta_y[y]).collect();
    Ok((j_psi, DensityFn::new(j_u)))
}

/// Exponents of a composition problem: `q ≤ p` outside, `α ≤ β` inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedExponents {
    pub outer: Exponents,
    pub alpha: Exponent,
    pub beta: Exponent,
    /// `βα/(β−α)`, infinite when `α = β`.
    pub theta: Exponent,
}

impl MixedExponents {
    pub fn new(p: Exponent, q: Exponent, alpha: Exponent, beta: Exponent) -> Result<Self> {
        let outer = Exponents::operator(p, q)?;
        let ordered = match (alpha, beta) {
            (_, Exponent::Infinite) => true,
            (Exponent::Infinite, Exponent::Finite(_)) => false,
            (Exponent::Finite(a), Exponent::Finite(b)) => a <= b,
        };
        if !ordered {
            return Err(unsupported(alpha, beta, "inner exponents need α ≤ β"));
        }
        Ok(MixedExponents { outer, alpha, beta, theta: Exponent::gap(alpha, beta) })
    }
}

/// `J^{1/α}`, read as the indicator of `J > 0` when `α = ∞`.
fn root(j: f64, alpha: Exponent) -> f64 {
    match alpha {
        Exponent::Infinite => {
            if j > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Exponent::Finite(a) => j.powf(1.0 / a),
    }
}

/// Per-atom slice norms `‖J_{u⁻¹}^{1/α}(t,·)‖_{L^θ(Ω′_t, η_Y)}` over the outer
/// atoms of `Ω′`.
fn slice_norms(cod: &MixedDomain, j_u: &DensityFn, e: &MixedExponents) -> Vec<f64> {
    let eta_y = cod.inner().weights();
    (0..cod.outer().len())
        .map(|t| {
            let cells = cod.slice(t);
            let vals: Vec<f64> = cells.iter().map(|&c| root(j_u.get(c), e.alpha)).collect();
            let w: Vec<f64> = cells.iter().map(|&c| eta_y[cod.cells()[c].1]).collect();
            lp_aggregate(&vals, &w, e.theta)
        })
        .collect()
}

/// `‖ J_{ψ⁻¹}^{1/q}(t) · ‖J_{u⁻¹}^{1/α}(t,·)‖_{L^θ(Ω′_t)} ‖_{L^κ(T)}` with
/// `κ = pq/(p−q)` and `θ = βα/(β−α)`: the bound on `‖C_φ‖` from
/// `L^{p,β}(Ω′)` to `L^{q,α}(Ω)`. Requires `q ≤ p`, `α ≤ β` and ψ injective.
pub fn criterion_mixed_composition(
    phi: &SplitMapping,
    p: Exponent,
    q: Exponent,
    alpha: Exponent,
    beta: Exponent,
) -> Result<f64> {
    let e = MixedExponents::new(p, q, alpha, beta)?;
    let (j_psi, j_u) = slice_volume_derivatives(phi)?;
    let norms = slice_norms(&phi.codomain, &j_u, &e);
    Ok(weighted_lkappa(&norms, j_psi.values(), &phi.codomain.outer().weights(), &e.outer))
}

/// The same criterion as the mixed norm `‖J_{ψ⁻¹}^{1/q} J_{u⁻¹}^{1/α}‖` over
/// `Ω′` with outer exponent κ and inner exponent θ.
pub fn product_density_norm(
    phi: &SplitMapping,
    p: Exponent,
    q: Exponent,
    alpha: Exponent,
    beta: Exponent,
) -> Result<f64> {
    let e = MixedExponents::new(p, q, alpha, beta)?;
    let (j_psi, j_u) = slice_volume_derivatives(phi)?;
    let qv = e.outer.q_finite();
    let cod = &phi.codomain;
    let h: Vec<f64> = cod
        .cells()
        .iter()
        .enumerate()
        .map(|(c, &(t, _))| j_psi.get(t).powf(1.0 / qv) * root(j_u.get(c), alpha))
        .collect();
    mixed_norm(&h, cod, e.outer.kappa, e.theta)
}

/// `C_φ` written as a weighted composition between direct integrals: outer
/// atoms with nonempty slices, fibers `L^α(Ω_s)` and `L^β(Ω′_t)`, the graph of
/// ψ weighted by ν, and 0/1 slice-composition matrices.
#[derive(Debug, Clone)]
pub struct GraphInstance {
    pub kernel: OperatorKernel,
    /// ψ restricted to the kept atoms.
    pub psi: AtomMap,
    /// Direct-integral form of `L^{q,α}(Ω)` (target side).
    pub domain_form: DirectIntegralForm,
    /// Direct-integral form of `L^{p,β}(Ω′)` (source side).
    pub codomain_form: DirectIntegralForm,
}

pub fn graph_instance(phi: &SplitMapping, alpha: Exponent, beta: Exponent) -> Result<GraphInstance> {
    let domain_form = mixed_as_direct_integral(&phi.domain, alpha);
    let codomain_form = mixed_as_direct_integral(&phi.codomain, beta);
    let s_space = domain_form.family().base().clone();
    let t_space = codomain_form.family().base().clone();
    let t_position: HashMap<usize, usize> =
        codomain_form.outer_atoms().iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let table = domain_form
        .outer_atoms()
        .iter()
        .map(|&s| {
            // A nonempty slice maps into a nonempty slice, so ψ(s) is kept.
            t_position[&phi.psi.image(s)]
        })
        .collect();
    let psi = AtomMap::from_indices(s_space.clone(), t_space.clone(), table)?;
    let relation = Arc::new(graph_relation(&psi, &s_space)?);
    let kernel = OperatorKernel::from_fn(
        relation,
        Arc::new(codomain_form.family().clone()),
        Arc::new(domain_form.family().clone()),
        |pair, rows, cols| {
            let x_cells = domain_form.slice_cells(pair.s);
            let y_cells = codomain_form.slice_cells(pair.t);
            DMatrix::from_fn(rows, cols, |i, j| {
                if phi.cell_map[x_cells[i]] == y_cells[j] {
                    1.0
                } else {
                    0.0
                }
            })
        },
    )?;
    Ok(GraphInstance { kernel, psi, domain_form, codomain_form })
}

/// The criterion through the generic graph machinery: [`criterion_graph`] on
/// the [`graph_instance`], with the slice norms computed as matrix norms.
pub fn criterion_via_graph(
    phi: &SplitMapping,
    p: Exponent,
    q: Exponent,
    alpha: Exponent,
    beta: Exponent,
) -> Result<NormResult> {
    MixedExponents::new(p, q, alpha, beta)?;
    phi.psi.check_injective()?;
    let g = graph_instance(phi, alpha, beta)?;
    criterion_graph(&g.kernel, &g.psi, p, q)
}

/// Operator norm of `C_φ: L^{p,β}(Ω′) → L^{q,α}(Ω)` by the decoupling
/// reduction on the graph instance. ψ need not be injective here.
pub fn composition_norm_decoupled(
    phi: &SplitMapping,
    p: Exponent,
    q: Exponent,
    alpha: Exponent,
    beta: Exponent,
) -> Result<NormResult> {
    MixedExponents::new(p, q, alpha, beta)?;
    let g = graph_instance(phi, alpha, beta)?;
    exact_norm_decoupled(&g.kernel, p, q)
}

/// `‖C_φ f‖_{L^{q,α}(Ω)}` and `‖f‖_{L^{p,β}(Ω′)}`.
pub fn composition_norms(
    phi: &SplitMapping,
    f: &[f64],
    p: Exponent,
    q: Exponent,
    alpha: Exponent,
    beta: Exponent,
) -> Result<(f64, f64)> {
    let g = compose_apply(f, phi)?;
    Ok((mixed_norm(&g, &phi.domain, q, alpha)?, mixed_norm(f, &phi.codomain, p, beta)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FiniteMeasureSpace;

    fn fin(v: f64) -> Exponent {
        Exponent::Finite(v)
    }

    fn space(ids: &[&str]) -> Arc<FiniteMeasureSpace> {
        Arc::new(FiniteMeasureSpace::new(ids.iter().map(|&i| (i, 1.0))).unwrap())
    }

    fn grid(outer: &[&str], inner: &[&str]) -> Arc<MixedDomain> {
        Arc::new(MixedDomain::full(space(outer), space(inner)))
    }

    fn identity_on(d: &Arc<MixedDomain>) -> SplitMapping {
        let u: Vec<_> = d
            .cells()
            .iter()
            .map(|&(s, x)| (d.outer().id(s).to_string(), d.inner().id(x).to_string(), d.inner().id(x).to_string()))
            .collect();
        SplitMapping::new(d.clone(), d.clone(), AtomMap::identity(d.outer().clone()), u).unwrap()
    }

    #[test]
    fn identity_composition() {
        let d = grid(&["s1", "s2"], &["x1", "x2"]);
        let phi = identity_on(&d);
        let f = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(compose_apply(&f, &phi).unwrap(), f.to_vec());
        let (jp, ju) = slice_volume_derivatives(&phi).unwrap();
        assert!(jp.values().iter().chain(ju.values()).all(|&v| v == 1.0));
        let c = criterion_mixed_composition(&phi, fin(2.0), fin(2.0), fin(2.0), fin(2.0)).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn swap_permutes_values() {
        let d = grid(&["s1", "s2"], &["x1", "x2"]);
        let psi = AtomMap::new(d.outer().clone(), d.outer().clone(), [("s1", "s2"), ("s2", "s1")]).unwrap();
        let u = [
            ("s1", "x1", "x2"),
            ("s1", "x2", "x1"),
            ("s2", "x1", "x2"),
            ("s2", "x2", "x1"),
        ];
        let phi = SplitMapping::new(d.clone(), d.clone(), psi, u).unwrap();
        // Cells in order (s1,x1) (s1,x2) (s2,x1) (s2,x2).
        let f = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(compose_apply(&f, &phi).unwrap(), vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(compose_apply(&[1.0; 4], &phi).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn range_and_split_errors() {
        let dom = grid(&["s1"], &["x1"]);
        let cod = Arc::new(
            MixedDomain::new(space(&["t1", "t2"]), space(&["y1", "y2"]), [("t1", "y1"), ("t2", "y2")]).unwrap(),
        );
        let psi = AtomMap::new(dom.outer().clone(), cod.outer().clone(), [("s1", "t1")]).unwrap();
        let err = SplitMapping::new(dom.clone(), cod.clone(), psi, [("s1", "x1", "y2")]).unwrap_err();
        assert!(matches!(err, Error::Range(_)));

        let dom2 = grid(&["s1"], &["x1", "x2"]);
        let err = SplitMapping::from_points(
            dom2,
            cod,
            [("s1", "x1", "t1", "y1"), ("s1", "x2", "t2", "y2")],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSplit(_)));
    }

    #[test]
    fn two_to_one_slice_density() {
        let dom = grid(&["s1"], &["x1", "x2"]);
        let cod = grid(&["t1"], &["y1"]);
        let phi = SplitMapping::from_points(
            dom,
            cod,
            [("s1", "x1", "t1", "y1"), ("s1", "x2", "t1", "y1")],
        )
        .unwrap();
        let (_, ju) = slice_volume_derivatives(&phi).unwrap();
        assert_eq!(ju.values(), &[2.0]);
        // α=1, β=2: θ=2 and the slice norm is ‖J_u‖_{L²} = 2; the incidence
        // matrix [1; 1] from ℓ² to ℓ¹ has the same norm.
        let c = criterion_mixed_composition(&phi, fin(2.0), fin(2.0), fin(1.0), fin(2.0)).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        let n = composition_norm_decoupled(&phi, fin(2.0), fin(2.0), fin(1.0), fin(2.0)).unwrap();
        assert!((n.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_outer_is_rejected_but_norm_is_available() {
        let dom = grid(&["s1", "s2"], &["x1"]);
        let cod = grid(&["t1"], &["x1"]);
        let phi = SplitMapping::from_points(
            dom,
            cod,
            [("s1", "x1", "t1", "x1"), ("s2", "x1", "t1", "x1")],
        )
        .unwrap();
        let e = (fin(2.0), fin(2.0), fin(2.0), fin(2.0));
        assert!(matches!(
            criterion_mixed_composition(&phi, e.0, e.1, e.2, e.3),
            Err(Error::NotInjective(_))
        ));
        let n = composition_norm_decoupled(&phi, e.0, e.1, e.2, e.3).unwrap();
        assert!((n.value - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inner_exponent_order() {
        let d = grid(&["s1"], &["x1"]);
        let phi = identity_on(&d);
        assert!(matches!(
            criterion_mixed_composition(&phi, fin(2.0), fin(2.0), fin(3.0), fin(2.0)),
            Err(Error::UnsupportedExponents { .. })
        ));
        assert!(criterion_mixed_composition(&phi, fin(2.0), fin(2.0), Exponent::Infinite, Exponent::Infinite).is_ok());
    }
}
