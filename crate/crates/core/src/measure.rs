//! Finite atomic measure spaces, weighted relations, atom maps and the
//! derivatives between them.
//!
//! On an atomic space every atom is its own smallest ball, so Radon–Nikodym
//! and volume derivatives are per-atom weight ratios and absolute continuity
//! reduces to "every referenced atom exists".

use std::collections::HashMap;
use std::sync::Arc;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: String,
    pub weight: f64,
}

/// A finite set of labeled atoms with strictly positive weights, kept in
/// lexicographic id order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    atoms: Vec<Atom>,
    index: HashMap<String, usize>,
}

fn check_weight(id: &str, weight: f64) -> Result<()> {
    if weight.is_finite() && weight > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight { id: id.to_string(), weight })
    }
}

impl FiniteMeasureSpace {
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(id, weight)| Atom { id: id.into(), weight })
            .collect();
        for a in &atoms {
            check_weight(&a.id, a.weight)?;
        }
        atoms.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = atoms.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
        let index = atoms.iter().enumerate().map(|(i, a)| (a.id.clone(), i)).collect();
        Ok(FiniteMeasureSpace { atoms, index })
    }

    pub fn empty() -> Self {
        FiniteMeasureSpace { atoms: Vec::new(), index: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn id(&self, i: usize) -> &str {
        &self.atoms[i].id
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.atoms[i].weight
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.atoms.iter().map(|a| a.id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Like [`index_of`](Self::index_of) but unknown ids are a
    /// [`Error::Reference`].
    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::Reference(id.to_string()))
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Sub-space on the atoms with the given indices.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let atoms = keep.iter().map(|&i| (self.atoms[i].id.clone(), self.atoms[i].weight));
        FiniteMeasureSpace::new(atoms).expect("restriction of a valid space")
    }

    /// Same atoms with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        FiniteMeasureSpace::new(self.atoms.iter().map(|a| (a.id.clone(), a.weight * factor)))
    }
}

/// Values indexed by the canonical atom order of some index set: the atoms of
/// a space, or the pairs of a relation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFn {
    values: Vec<f64>,
}

impl DensityFn {
    pub fn new(values: Vec<f64>) -> Self {
        DensityFn { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    /// Atom index in the source space `S`.
    pub s: usize,
    /// Atom index in the target space `T`.
    pub t: usize,
    pub weight: f64,
}

/// A subset `F ⊂ S×T` with a positive weight λ on each of its pairs.
#[derive(Debug, Clone)]
pub struct WeightedRelation {
    source: Arc<FiniteMeasureSpace>,
    target: Arc<FiniteMeasureSpace>,
    pairs: Vec<Pair>,
    by_target: Vec<Vec<usize>>,
    lookup: HashMap<(usize, usize), usize>,
}

impl WeightedRelation {
    /// Builds a relation from `(s_id, t_id, weight)` triples. Zero-weight pairs
    /// are dropped; unknown ids, duplicates and negative or non-finite weights
    /// are errors.
    pub fn new<I, A, B>(
        source: Arc<FiniteMeasureSpace>,
        target: Arc<FiniteMeasureSpace>,
        pairs: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B, f64)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut out = Vec::new();
        for (s_id, t_id, weight) in pairs {
            let (s_id, t_id) = (s_id.as_ref(), t_id.as_ref());
            let s = source.require(s_id)?;
            let t = target.require(t_id)?;
            if weight == 0.0 {
                continue;
            }
            check_weight(&format!("({s_id}, {t_id})"), weight)?;
            out.push(Pair { s, t, weight });
        }
        Self::from_pairs(source, target, out)
    }

    /// Builds a relation from index-based pairs.
    pub fn from_pairs(
        source: Arc<FiniteMeasureSpace>,
        target: Arc<FiniteMeasureSpace>,
        mut pairs: Vec<Pair>,
    ) -> Result<Self> {
        pairs.retain(|p| p.weight != 0.0);
        for p in &pairs {
            if p.s >= source.len() {
                return Err(Error::Reference(format!("source index {}", p.s)));
            }
            if p.t >= target.len() {
                return Err(Error::Reference(format!("target index {}", p.t)));
            }
            check_weight(&format!("({}, {})", source.id(p.s), target.id(p.t)), p.weight)?;
        }
        pairs.sort_by_key(|p| (p.s, p.t));
        let mut lookup = HashMap::with_capacity(pairs.len());
        let mut by_target = vec![Vec::new(); target.len()];
        for (k, p) in pairs.iter().enumerate() {
            if lookup.insert((p.s, p.t), k).is_some() {
                return Err(Error::DuplicateId(format!(
                    "({}, {})",
                    source.id(p.s),
                    target.id(p.t)
                )));
            }
            by_target[p.t].push(k);
        }
        Ok(WeightedRelation { source, target, pairs, by_target, lookup })
    }

    pub fn source(&self) -> &Arc<FiniteMeasureSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMeasureSpace> {
        &self.target
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pair indices of the section `F_t = {s : (s,t) ∈ F}`, in canonical `s` order.
    pub fn pairs_over(&self, t: usize) -> &[usize] {
        &self.by_target[t]
    }

    pub fn find(&self, s: usize, t: usize) -> Option<usize> {
        self.lookup.get(&(s, t)).copied()
    }

    /// Pair labels `(s_id, t_id)` in canonical order.
    pub fn pair_ids(&self, k: usize) -> (&str, &str) {
        let p = self.pairs[k];
        (self.source.id(p.s), self.target.id(p.t))
    }
}

/// A total map `ψ: S → T` between atom sets.
#[derive(Debug, Clone)]
pub struct AtomMap {
    source: Arc<FiniteMeasureSpace>,
    target: Arc<FiniteMeasureSpace>,
    table: Vec<usize>,
}

impl AtomMap {
    pub fn new<I, A, B>(
        source: Arc<FiniteMeasureSpace>,
        target: Arc<FiniteMeasureSpace>,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut table = vec![None; source.len()];
        for (s_id, t_id) in entries {
            let s = source.require(s_id.as_ref())?;
            let t = target.require(t_id.as_ref())?;
            if table[s].replace(t).is_some() {
                return Err(Error::DuplicateId(s_id.as_ref().to_string()));
            }
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(s, t)| t.ok_or_else(|| Error::NotTotal(source.id(s).to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomMap { source, target, table })
    }

    pub fn from_indices(
        source: Arc<FiniteMeasureSpace>,
        target: Arc<FiniteMeasureSpace>,
        table: Vec<usize>,
    ) -> Result<Self> {
        if table.len() != source.len() {
            return Err(Error::DimensionMismatch { expected: source.len(), found: table.len() });
        }
        if let Some(&t) = table.iter().find(|&&t| t >= target.len()) {
            return Err(Error::Reference(format!("target index {t}")));
        }
        Ok(AtomMap { source, target, table })
    }

    /// The identity on `space`.
    pub fn identity(space: Arc<FiniteMeasureSpace>) -> Self {
        let table = (0..space.len()).collect();
        AtomMap { source: space.clone(), target: space, table }
    }

    pub fn source(&self) -> &Arc<FiniteMeasureSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMeasureSpace> {
        &self.target
    }

    pub fn image(&self, s: usize) -> usize {
        self.table[s]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn preimage(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.table.iter().enumerate().filter(move |(_, &u)| u == t).map(|(s, _)| s)
    }

    /// `Err(NotInjective)` naming the first target atom hit twice.
    pub fn check_injective(&self) -> Result<()> {
        let mut seen = vec![None; self.target.len()];
        for (s, &t) in self.table.iter().enumerate() {
            if let Some(prev) = seen[t].replace(s) {
                return Err(Error::NotInjective(format!(
                    "`{}` and `{}` both map to `{}`",
                    self.source.id(prev),
                    self.source.id(s),
                    self.target.id(t)
                )));
            }
        }
        Ok(())
    }

    /// Inverse on the image; `None` off the image. Requires injectivity.
    pub fn inverse(&self) -> Result<Vec<Option<usize>>> {
        self.check_injective()?;
        let mut inv = vec![None; self.target.len()];
        for (s, &t) in self.table.iter().enumerate() {
            inv[t] = Some(s);
        }
        Ok(inv)
    }
}

/// Density `J(s,t) = λ_st / (ν_s μ_t)` of λ with respect to ν×μ, indexed by the
/// pairs of `lambda`. Atoms are looked up by id in the given spaces; a pair
/// naming an atom absent from `s_space` or `t_space` is a reference error.
pub fn radon_nikodym(
    lambda: &WeightedRelation,
    s_space: &FiniteMeasureSpace,
    t_space: &FiniteMeasureSpace,
) -> Result<DensityFn> {
    let values = (0..lambda.len())
        .map(|k| {
            let (s_id, t_id) = lambda.pair_ids(k);
            let nu = s_space.weight(s_space.require(s_id)?);
            let mu = t_space.weight(t_space.require(t_id)?);
            Ok(lambda.pairs()[k].weight / (nu * mu))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityFn::new(values))
}

/// Per-atom marginal `λ_T(t) = Σ_{s ∈ F_t} λ_st` over the full target space,
/// zeros included.
pub fn marginal_weights(lambda: &WeightedRelation) -> Vec<f64> {
    (0..lambda.target().len())
        .map(|t| lambda.pairs_over(t).iter().map(|&k| lambda.pairs()[k].weight).sum())
        .collect()
}

/// The marginal measure `λ_T(B) = λ(F ∩ S×B)` on its support.
pub fn marginal_onto_t(lambda: &WeightedRelation) -> FiniteMeasureSpace {
    let target = lambda.target();
    let atoms: Vec<_> = marginal_weights(lambda)
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .map(|(t, w)| (target.id(t).to_string(), w))
        .collect();
    FiniteMeasureSpace::new(atoms).expect("marginal of a valid relation")
}

/// Pushforward measure `ν∘ψ⁻¹` on its support.
pub fn pushforward(psi: &AtomMap, nu: &FiniteMeasureSpace) -> Result<FiniteMeasureSpace> {
    let mass = preimage_masses(psi, nu)?;
    let target = psi.target();
    let atoms: Vec<_> = mass
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .map(|(t, w)| (target.id(t).to_string(), w))
        .collect();
    FiniteMeasureSpace::new(atoms)
}

fn preimage_masses(psi: &AtomMap, nu: &FiniteMeasureSpace) -> Result<Vec<f64>> {
    let mut mass = vec![0.0; psi.target().len()];
    for s in 0..psi.source().len() {
        let w = nu.weight(nu.require(psi.source().id(s))?);
        mass[psi.image(s)] += w;
    }
    Ok(mass)
}

/// Volume derivative `J_{ψ⁻¹}(t) = ν(ψ⁻¹{t}) / μ_t`, indexed by the atoms of
/// ψ's target; zero off the image.
pub fn pushforward_volume_derivative(
    psi: &AtomMap,
    nu: &FiniteMeasureSpace,
    mu: &FiniteMeasureSpace,
) -> Result<DensityFn> {
    let mass = preimage_masses(psi, nu)?;
    let values = mass
        .into_iter()
        .enumerate()
        .map(|(t, m)| Ok(m / mu.weight(mu.require(psi.target().id(t))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityFn::new(values))
}

/// Both sides of the discrete change of variables
/// `Σ_s ν_s f(ψ(s)) = Σ_t μ_t f(t) J_{ψ⁻¹}(t)`.
/// `f` is indexed by the atoms of ψ's target.
pub fn integrate_change_of_variables(
    f: &DensityFn,
    psi: &AtomMap,
    nu: &FiniteMeasureSpace,
    mu: &FiniteMeasureSpace,
) -> Result<(f64, f64)> {
    let n_t = psi.target().len();
    if f.len() != n_t {
        return Err(Error::DimensionMismatch { expected: n_t, found: f.len() });
    }
    let mut lhs = 0.0;
    for s in 0..psi.source().len() {
        lhs += nu.weight(nu.require(psi.source().id(s))?) * f.get(psi.image(s));
    }
    let jac = pushforward_volume_derivative(psi, nu, mu)?;
    let mut rhs = 0.0;
    for t in 0..n_t {
        rhs += mu.weight(mu.require(psi.target().id(t))?) * f.get(t) * jac.get(t);
    }
    Ok((lhs, rhs))
}

/// Graph `Γ_ψ = {(s, ψ(s))}` with `λ(s, ψ(s)) = ν_s`, the measure that makes
/// `N f(s, t) = f(s)` an isometry from `L^q(S)` onto `L^q(Γ_ψ)`.
pub fn graph_relation(psi: &AtomMap, nu: &FiniteMeasureSpace) -> Result<WeightedRelation> {
    let pairs = (0..psi.source().len())
        .map(|s| {
            let w = nu.weight(nu.require(psi.source().id(s))?);
            Ok(Pair { s, t: psi.image(s), weight: w })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedRelation::from_pairs(psi.source().clone(), psi.target().clone(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(atoms: &[(&str, f64)]) -> Arc<FiniteMeasureSpace> {
        Arc::new(FiniteMeasureSpace::new(atoms.iter().map(|&(i, w)| (i, w))).unwrap())
    }

    #[test]
    fn canonical_order_and_validation() {
        let s = space(&[("b", 1.0), ("a", 2.0)]);
        assert_eq!(s.ids().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(s.weight(0), 2.0);
        assert!(matches!(
            FiniteMeasureSpace::new([("a", 1.0), ("a", 2.0)]),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(FiniteMeasureSpace::new([("a", 0.0)]), Err(Error::InvalidWeight { .. })));
        assert!(matches!(FiniteMeasureSpace::new([("a", -1.0)]), Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn radon_nikodym_examples() {
        let s = space(&[("s1", 2.0)]);
        let t = space(&[("t1", 3.0)]);
        let lam = WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 6.0)]).unwrap();
        assert_eq!(radon_nikodym(&lam, &s, &t).unwrap().values(), &[1.0]);
        let lam = WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 3.0)]).unwrap();
        assert_eq!(radon_nikodym(&lam, &s, &t).unwrap().values(), &[0.5]);
    }

    #[test]
    fn radon_nikodym_reference_error() {
        let s = space(&[("s1", 2.0)]);
        let t_big = space(&[("t1", 3.0), ("t2", 1.0)]);
        let t = space(&[("t1", 3.0)]);
        let lam = WeightedRelation::new(s.clone(), t_big, [("s1", "t2", 1.0)]).unwrap();
        assert_eq!(radon_nikodym(&lam, &s, &t), Err(Error::Reference("t2".into())));
        assert!(matches!(
            WeightedRelation::new(s, t, [("s1", "t2", 1.0)]),
            Err(Error::Reference(_))
        ));
    }

    #[test]
    fn relation_drops_zero_and_rejects_duplicates() {
        let s = space(&[("s1", 1.0), ("s2", 1.0)]);
        let t = space(&[("t1", 1.0)]);
        let lam =
            WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 0.0), ("s2", "t1", 1.0)]).unwrap();
        assert_eq!(lam.len(), 1);
        assert!(matches!(
            WeightedRelation::new(s, t, [("s1", "t1", 1.0), ("s1", "t1", 2.0)]),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn marginal_examples() {
        let s = space(&[("s1", 1.0), ("s2", 1.0)]);
        let t = space(&[("t1", 1.0), ("t2", 1.0)]);
        let lam =
            WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 1.0), ("s2", "t1", 2.0)]).unwrap();
        let m = marginal_onto_t(&lam);
        assert_eq!(m.atoms(), &[Atom { id: "t1".into(), weight: 3.0 }]);

        let lam =
            WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 1.0), ("s1", "t2", 4.0)]).unwrap();
        assert_eq!(marginal_onto_t(&lam).weights(), vec![1.0, 4.0]);

        let lam = WeightedRelation::new(s, t, Vec::<(&str, &str, f64)>::new()).unwrap();
        assert!(marginal_onto_t(&lam).is_empty());
    }

    #[test]
    fn volume_derivative_examples() {
        let nu = space(&[("s1", 1.0), ("s2", 2.0)]);
        let mu = space(&[("t1", 1.0), ("t2", 1.0)]);
        let psi = AtomMap::new(nu.clone(), mu.clone(), [("s1", "t1"), ("s2", "t1")]).unwrap();
        assert_eq!(pushforward_volume_derivative(&psi, &nu, &mu).unwrap().values(), &[3.0, 0.0]);

        let id = AtomMap::identity(mu.clone());
        assert_eq!(pushforward_volume_derivative(&id, &mu, &mu).unwrap().values(), &[1.0, 1.0]);

        let nu = space(&[("s1", 5.0)]);
        let mu = space(&[("t1", 2.0)]);
        let psi = AtomMap::new(nu.clone(), mu.clone(), [("s1", "t1")]).unwrap();
        assert_eq!(pushforward_volume_derivative(&psi, &nu, &mu).unwrap().values(), &[2.5]);
    }

    #[test]
    fn change_of_variables_examples() {
        let nu = space(&[("s1", 1.0), ("s2", 1.0)]);
        let mu = space(&[("t1", 1.0), ("t2", 1.0)]);
        let psi = AtomMap::new(nu.clone(), mu.clone(), [("s1", "t1"), ("s2", "t1")]).unwrap();
        let f = DensityFn::new(vec![5.0, 7.0]);
        assert_eq!(integrate_change_of_variables(&f, &psi, &nu, &mu).unwrap(), (10.0, 10.0));

        let id = AtomMap::identity(mu.clone());
        let (l, r) = integrate_change_of_variables(&f, &id, &mu, &mu).unwrap();
        assert_eq!((l, r), (12.0, 12.0));
    }

    #[test]
    fn graph_relation_examples() {
        let nu = space(&[("s1", 3.0)]);
        let mu = space(&[("t1", 1.0), ("t2", 1.0)]);
        let psi = AtomMap::new(nu.clone(), mu.clone(), [("s1", "t2")]).unwrap();
        let g = graph_relation(&psi, &nu).unwrap();
        assert_eq!(g.pair_ids(0), ("s1", "t2"));
        assert_eq!(g.pairs()[0].weight, 3.0);

        let nu = space(&[("a", 1.0), ("b", 2.0), ("c", 4.0)]);
        let psi = AtomMap::new(nu.clone(), mu.clone(), [("a", "t1"), ("b", "t1"), ("c", "t1")]).unwrap();
        let g = graph_relation(&psi, &nu).unwrap();
        assert_eq!(g.pairs_over(0).len(), 3);
        assert_eq!(g.pairs().iter().map(|p| p.weight).collect::<Vec<_>>(), vec![1.0, 2.0, 4.0]);
        assert_eq!(marginal_onto_t(&g), pushforward(&psi, &nu).unwrap());
    }

    #[test]
    fn map_totality_and_injectivity() {
        let s = space(&[("a", 1.0), ("b", 1.0)]);
        let t = space(&[("x", 1.0)]);
        assert_eq!(
            AtomMap::new(s.clone(), t.clone(), [("a", "x")]).unwrap_err(),
            Error::NotTotal("b".into())
        );
        let psi = AtomMap::new(s, t, [("a", "x"), ("b", "x")]).unwrap();
        assert!(matches!(psi.check_injective(), Err(Error::NotInjective(_))));
    }
}
