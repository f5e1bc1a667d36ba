//! Finite-dimensional fiber families over atomic spaces, their sections, and
//! the L^p-direct-integral and mixed norms built from them.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::measure::FiniteMeasureSpace;
use crate::{Error, Exponent, Result};

/// Weighted r-norm on `R^n`: `(Σ w_i |v_i|^r)^{1/r}`, or `max_i w_i |v_i|` for
/// `r = ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    r: Exponent,
    weights: Vec<f64>,
    /// `w_i^{1/r}` (or `w_i` for `r = ∞`), cached for [`eval`](Self::eval).
    scales: Vec<f64>,
}

impl NormSpec {
    pub fn new(r: Exponent, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeight { id: "fiber coordinate".into(), weight: w });
        }
        let scales = match r {
            Exponent::Infinite => weights.clone(),
            Exponent::Finite(rv) => weights.iter().map(|w| w.powf(1.0 / rv)).collect(),
        };
        Ok(NormSpec { r, weights, scales })
    }

    /// Unweighted ℓ^r on `R^dim`.
    pub fn standard(r: Exponent, dim: usize) -> Result<Self> {
        NormSpec::new(r, vec![1.0; dim])
    }

    pub fn r(&self) -> Exponent {
        self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Diagonal `d` with `‖v‖ = ‖diag(d) v‖_r` (standard ℓ^r).
    pub fn scales(&self) -> Vec<f64> {
        self.scales.clone()
    }

    /// Norm of `v`; the caller guarantees `v.len() == self.dim()`. Same
    /// max-scaled evaluation as [`Exponent::norm_of`], without allocating.
    pub(crate) fn eval(&self, v: &[f64]) -> f64 {
        let mags = self.scales.iter().zip(v).map(|(d, x)| d * x.abs());
        let max = mags.clone().fold(0.0_f64, f64::max);
        match self.r {
            Exponent::Infinite => max,
            Exponent::Finite(r) => {
                if max == 0.0 {
                    return 0.0;
                }
                let sum: f64 = mags.map(|m| (m / max).powf(r)).sum();
                max * sum.powf(1.0 / r)
            }
        }
    }
}

pub fn fiber_norm(v: &[f64], n: &NormSpec) -> Result<f64> {
    if v.len() != n.dim() {
        return Err(Error::DimensionMismatch { expected: n.dim(), found: v.len() });
    }
    Ok(n.eval(v))
}

/// One normed fiber per atom of `base`.
#[derive(Debug, Clone)]
pub struct FiberFamily {
    base: Arc<FiniteMeasureSpace>,
    fibers: Vec<NormSpec>,
}

impl FiberFamily {
    pub fn new(base: Arc<FiniteMeasureSpace>, fibers: Vec<NormSpec>) -> Result<Self> {
        if fibers.len() != base.len() {
            return Err(Error::DimensionMismatch { expected: base.len(), found: fibers.len() });
        }
        Ok(FiberFamily { base, fibers })
    }

    /// Every fiber equal to `spec`.
    pub fn uniform(base: Arc<FiniteMeasureSpace>, spec: NormSpec) -> Self {
        let fibers = vec![spec; base.len()];
        FiberFamily { base, fibers }
    }

    pub fn base(&self) -> &Arc<FiniteMeasureSpace> {
        &self.base
    }

    pub fn fiber(&self, i: usize) -> &NormSpec {
        &self.fibers[i]
    }

    pub fn fibers(&self) -> &[NormSpec] {
        &self.fibers
    }

    pub fn dim(&self, i: usize) -> usize {
        self.fibers[i].dim()
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }
}

/// One vector per atom of some index set (the atoms of a space, or the pairs
/// of a relation).
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    values: Vec<DVector<f64>>,
}

impl Section {
    pub fn new(values: Vec<DVector<f64>>) -> Self {
        Section { values }
    }

    pub fn zeros(family: &FiberFamily) -> Self {
        Section { values: family.fibers.iter().map(|n| DVector::zeros(n.dim())).collect() }
    }

    /// Scalar section over one-dimensional fibers.
    pub fn scalar(values: &[f64]) -> Self {
        Section { values: values.iter().map(|&v| DVector::from_element(1, v)).collect() }
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<DVector<f64>> {
        self.values
    }

    pub(crate) fn check_against(&self, family: &FiberFamily) -> Result<()> {
        if self.values.len() != family.len() {
            return Err(Error::DimensionMismatch { expected: family.len(), found: self.values.len() });
        }
        for (v, n) in self.values.iter().zip(&family.fibers) {
            if v.len() != n.dim() {
                return Err(Error::DimensionMismatch { expected: n.dim(), found: v.len() });
            }
        }
        Ok(())
    }
}

/// Aggregates per-atom magnitudes `m_i` with atom weights `w_i` into
/// `(Σ w_i m_i^p)^{1/p}` (or `max_i m_i` for `p = ∞`, the atomic ess-sup).
pub(crate) fn lp_aggregate(mags: &[f64], weights: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => mags.iter().copied().fold(0.0, f64::max),
        Exponent::Finite(r) => {
            let scaled: Vec<f64> = mags.iter().zip(weights).map(|(m, w)| m * w.powf(1.0 / r)).collect();
            p.norm_of(&scaled)
        }
    }
}

/// `(Σ_t μ_t ‖f(t)‖_t^p)^{1/p}`, or `max_t ‖f(t)‖_t` for `p = ∞`.
pub fn direct_integral_norm(f: &Section, fam: &FiberFamily, p: Exponent) -> Result<f64> {
    f.check_against(fam)?;
    let mags: Vec<f64> =
        f.values.iter().zip(&fam.fibers).map(|(v, n)| n.eval(v.as_slice())).collect();
    Ok(lp_aggregate(&mags, &fam.base.weights(), p))
}

/// A set of cells `Ω ⊂ S×X` with slices `Ω_s = {x : (s,x) ∈ Ω}`. Outer atoms
/// carry ν, inner atoms carry η.
#[derive(Debug, Clone)]
pub struct MixedDomain {
    outer: Arc<FiniteMeasureSpace>,
    inner: Arc<FiniteMeasureSpace>,
    cells: Vec<(usize, usize)>,
    slices: Vec<Vec<usize>>,
    lookup: HashMap<(usize, usize), usize>,
}

impl MixedDomain {
    pub fn new<I, A, B>(
        outer: Arc<FiniteMeasureSpace>,
        inner: Arc<FiniteMeasureSpace>,
        cells: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let cells = cells
            .into_iter()
            .map(|(s, x)| Ok((outer.require(s.as_ref())?, inner.require(x.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(outer, inner, cells)
    }

    pub fn from_indices(
        outer: Arc<FiniteMeasureSpace>,
        inner: Arc<FiniteMeasureSpace>,
        mut cells: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if let Some(&(s, x)) = cells.iter().find(|&&(s, x)| s >= outer.len() || x >= inner.len()) {
            return Err(Error::Reference(format!("cell ({s}, {x})")));
        }
        cells.sort_unstable();
        let mut lookup = HashMap::with_capacity(cells.len());
        let mut slices = vec![Vec::new(); outer.len()];
        for (k, &(s, x)) in cells.iter().enumerate() {
            if lookup.insert((s, x), k).is_some() {
                return Err(Error::DuplicateId(format!("({}, {})", outer.id(s), inner.id(x))));
            }
            slices[s].push(k);
        }
        Ok(MixedDomain { outer, inner, cells, slices, lookup })
    }

    /// The full product `S×X`.
    pub fn full(outer: Arc<FiniteMeasureSpace>, inner: Arc<FiniteMeasureSpace>) -> Self {
        let cells = (0..outer.len()).flat_map(|s| (0..inner.len()).map(move |x| (s, x))).collect();
        Self::from_indices(outer, inner, cells).expect("product grid is valid")
    }

    pub fn outer(&self) -> &Arc<FiniteMeasureSpace> {
        &self.outer
    }

    pub fn inner(&self) -> &Arc<FiniteMeasureSpace> {
        &self.inner
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell indices of the slice over outer atom `s`, in inner-atom order.
    pub fn slice(&self, s: usize) -> &[usize] {
        &self.slices[s]
    }

    pub fn find(&self, s: usize, x: usize) -> Option<usize> {
        self.lookup.get(&(s, x)).copied()
    }

    fn check_values(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.cells.len() {
            return Err(Error::DimensionMismatch { expected: self.cells.len(), found: g.len() });
        }
        Ok(())
    }
}

/// Mixed norm `(∫_S (∫_{Ω_s} |g|^α dη)^{q/α} dν)^{1/q}` of cell values `g`
/// (aligned with `domain.cells()`). Empty slices contribute 0; infinite
/// exponents become maxima.
pub fn mixed_norm(g: &[f64], domain: &MixedDomain, q: Exponent, alpha: Exponent) -> Result<f64> {
    domain.check_values(g)?;
    let eta = domain.inner.weights();
    let inner: Vec<f64> = (0..domain.outer.len())
        .map(|s| {
            let slice = domain.slice(s);
            let mags: Vec<f64> = slice.iter().map(|&k| g[k].abs()).collect();
            let w: Vec<f64> = slice.iter().map(|&k| eta[domain.cells[k].1]).collect();
            lp_aggregate(&mags, &w, alpha)
        })
        .collect();
    Ok(lp_aggregate(&inner, &domain.outer.weights(), q))
}

/// The direct-integral form of `L^{q,α}(Ω)`: a fiber `L^α(Ω_s)` over every
/// outer atom with a nonempty slice.
#[derive(Debug, Clone)]
pub struct DirectIntegralForm {
    family: FiberFamily,
    outer_atoms: Vec<usize>,
    slices: Vec<Vec<usize>>,
}

impl DirectIntegralForm {
    /// Fiber family over the nonempty-slice outer atoms (with their ν weights).
    pub fn family(&self) -> &FiberFamily {
        &self.family
    }

    /// For each fiber, the index of its atom in the original outer space.
    pub fn outer_atoms(&self) -> &[usize] {
        &self.outer_atoms
    }

    /// For each fiber, the domain cells backing its coordinates.
    pub fn slice_cells(&self, fiber: usize) -> &[usize] {
        &self.slices[fiber]
    }

    /// Reshapes cell values into a section of [`family`](Self::family).
    pub fn section(&self, g: &[f64]) -> Section {
        Section::new(
            self.slices
                .iter()
                .map(|cells| DVector::from_iterator(cells.len(), cells.iter().map(|&k| g[k])))
                .collect(),
        )
    }

    /// Inverse of [`section`](Self::section); cells of empty slices do not exist.
    pub fn cell_values(&self, f: &Section, n_cells: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_cells];
        for (cells, v) in self.slices.iter().zip(f.values()) {
            for (&k, &x) in cells.iter().zip(v.iter()) {
                g[k] = x;
            }
        }
        g
    }
}

/// Fiber over `s` is `R^{|Ω_s|}` with the `α`-norm weighted by η on `Ω_s`
/// (unit weights when `α = ∞`, where the slice norm is a plain maximum).
/// Outer atoms with empty slices carry the zero space and are left out.
pub fn mixed_as_direct_integral(domain: &MixedDomain, alpha: Exponent) -> DirectIntegralForm {
    let eta = domain.inner.weights();
    let mut outer_atoms = Vec::new();
    let mut slices = Vec::new();
    let mut fibers = Vec::new();
    for s in 0..domain.outer.len() {
        let slice = domain.slice(s);
        if slice.is_empty() {
            continue;
        }
        let weights = match alpha {
            Exponent::Infinite => vec![1.0; slice.len()],
            Exponent::Finite(_) => slice.iter().map(|&k| eta[domain.cells[k].1]).collect(),
        };
        fibers.push(NormSpec::new(alpha, weights).expect("positive measure weights"));
        outer_atoms.push(s);
        slices.push(slice.to_vec());
    }
    let base = Arc::new(domain.outer.restrict(&outer_atoms));
    let family = FiberFamily::new(base, fibers).expect("one fiber per kept atom");
    DirectIntegralForm { family, outer_atoms, slices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(r: f64) -> Exponent {
        Exponent::Finite(r)
    }

    fn space(n: usize, prefix: &str) -> Arc<FiniteMeasureSpace> {
        Arc::new(FiniteMeasureSpace::new((0..n).map(|i| (format!("{prefix}{i}"), 1.0))).unwrap())
    }

    #[test]
    fn fiber_norm_examples() {
        let l2 = NormSpec::standard(fin(2.0), 2).unwrap();
        assert_eq!(fiber_norm(&[3.0, 4.0], &l2).unwrap(), 5.0);
        let linf = NormSpec::standard(Exponent::Infinite, 2).unwrap();
        assert_eq!(fiber_norm(&[3.0, 4.0], &linf).unwrap(), 4.0);
        let w = NormSpec::new(fin(2.0), vec![4.0, 1.0]).unwrap();
        assert!((fiber_norm(&[3.0, 4.0], &w).unwrap() - 52f64.sqrt()).abs() < 1e-14);
        assert_eq!(
            fiber_norm(&[1.0], &l2),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn direct_integral_examples() {
        let base = space(2, "t");
        let fam = FiberFamily::uniform(base, NormSpec::standard(fin(2.0), 1).unwrap());
        let f = Section::scalar(&[1.0, -2.0]);
        assert!((direct_integral_norm(&f, &fam, fin(2.0)).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(direct_integral_norm(&Section::zeros(&fam), &fam, fin(2.0)).unwrap(), 0.0);
        assert_eq!(direct_integral_norm(&f, &fam, Exponent::Infinite).unwrap(), 2.0);
        assert!(direct_integral_norm(&Section::scalar(&[1.0]), &fam, fin(2.0)).is_err());
    }

    #[test]
    fn mixed_norm_grid_of_ones() {
        let d = MixedDomain::full(space(2, "s"), space(3, "x"));
        let g = vec![1.0; 6];
        let v = mixed_norm(&g, &d, fin(2.0), fin(1.0)).unwrap();
        assert!((v - 18f64.sqrt()).abs() < 1e-14);
        let rep = mixed_as_direct_integral(&d, fin(1.0));
        assert_eq!(rep.family().len(), 2);
        assert!(rep.family().fibers().iter().all(|n| n.dim() == 3 && n.r() == fin(1.0)));
        let w = direct_integral_norm(&rep.section(&g), rep.family(), fin(2.0)).unwrap();
        assert!((w - 18f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn empty_slices_contribute_zero() {
        let outer = space(3, "s");
        let inner = space(2, "x");
        let d = MixedDomain::new(outer, inner, [("s0", "x0"), ("s0", "x1"), ("s2", "x1")]).unwrap();
        let g = [1.0, 2.0, 3.0];
        let v = mixed_norm(&g, &d, fin(1.0), fin(1.0)).unwrap();
        assert!((v - 6.0).abs() < 1e-15);
        let rep = mixed_as_direct_integral(&d, fin(1.0));
        assert_eq!(rep.outer_atoms(), &[0, 2]);
        assert_eq!(rep.cell_values(&rep.section(&g), 3), g.to_vec());
    }

    #[test]
    fn infinite_inner_exponent_ignores_weights() {
        let outer = space(1, "s");
        let inner = Arc::new(FiniteMeasureSpace::new([("x0", 5.0), ("x1", 0.5)]).unwrap());
        let d = MixedDomain::full(outer, inner);
        let g = [1.0, 3.0];
        assert_eq!(mixed_norm(&g, &d, fin(2.0), Exponent::Infinite).unwrap(), 3.0);
        let rep = mixed_as_direct_integral(&d, Exponent::Infinite);
        assert_eq!(direct_integral_norm(&rep.section(&g), rep.family(), fin(2.0)).unwrap(), 3.0);
    }
}
