//! Small reference instances and seeded random instance generators, shared by
//! the test suites and the scenario runner.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::fibers::{FiberFamily, MixedDomain, NormSpec, Section};
use crate::kernels::OperatorKernel;
use crate::measure::{graph_relation, AtomMap, FiniteMeasureSpace, Pair, WeightedRelation};
use crate::mixedcomp::SplitMapping;
use crate::{rng, Exponent};

const STREAM_INSTANCE: u64 = 0x1257;
const STREAM_SECTION: u64 = 0x5ec7;

fn unit_space(prefix: &str, n: usize) -> Arc<FiniteMeasureSpace> {
    weighted_space(prefix, &vec![1.0; n])
}

fn weighted_space(prefix: &str, weights: &[f64]) -> Arc<FiniteMeasureSpace> {
    // Zero-padded ids keep the canonical order equal to the index order.
    Arc::new(
        FiniteMeasureSpace::new(weights.iter().enumerate().map(|(i, &w)| (format!("{prefix}{i:03}"), w)))
            .expect("generated weights are positive"),
    )
}

fn scalar_family(base: &Arc<FiniteMeasureSpace>) -> Arc<FiberFamily> {
    let spec = NormSpec::standard(Exponent::Finite(2.0), 1).unwrap();
    Arc::new(FiberFamily::uniform(base.clone(), spec))
}

/// `T = {t1, t2}`, `S = {s1}`, unit weights, λ ≡ 1, scalar fibers and
/// `P(s1,t1) = 1`, `P(s1,t2) = 2`. For `p = 4, q = 2` the norm is `17^{1/4}`.
pub fn scalar17() -> OperatorKernel {
    scalar17_with_mu(1.0, 1.0)
}

/// [`scalar17`] with target weights `μ = (mu1, mu2)`.
pub fn scalar17_with_mu(mu1: f64, mu2: f64) -> OperatorKernel {
    let t = Arc::new(FiniteMeasureSpace::new([("t1", mu1), ("t2", mu2)]).unwrap());
    let s = Arc::new(FiniteMeasureSpace::new([("s1", 1.0)]).unwrap());
    let rel = Arc::new(
        WeightedRelation::new(s.clone(), t.clone(), [("s1", "t1", 1.0), ("s1", "t2", 1.0)]).unwrap(),
    );
    let mats = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)];
    OperatorKernel::new(rel, scalar_family(&t), scalar_family(&s), mats).unwrap()
}

/// One target atom with `W = ℓ²(R²)`, two source atoms with `V = ℓ²(R²)`, unit
/// weights, and the two coordinate projections as kernel. The operator norm
/// is 1 while the pointwise-norm criterion is `√2`.
pub fn projection_gap() -> OperatorKernel {
    let t = unit_space("t", 1);
    let s = unit_space("s", 2);
    let rel = Arc::new(
        WeightedRelation::from_pairs(
            s.clone(),
            t.clone(),
            vec![Pair { s: 0, t: 0, weight: 1.0 }, Pair { s: 1, t: 0, weight: 1.0 }],
        )
        .unwrap(),
    );
    let l2 = NormSpec::standard(Exponent::Finite(2.0), 2).unwrap();
    let w = Arc::new(FiberFamily::uniform(t, l2.clone()));
    let v = Arc::new(FiberFamily::uniform(s, l2));
    let mats = vec![
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
    ];
    OperatorKernel::new(rel, w, v, mats).unwrap()
}

/// Identity kernel on the graph of the identity of an `n`-atom space with
/// `ℓ^r(R^dim)` fibers on both sides.
pub fn identity_instance(n: usize, dim: usize, r: Exponent) -> (OperatorKernel, AtomMap) {
    let space = unit_space("a", n);
    let psi = AtomMap::identity(space.clone());
    let rel = Arc::new(graph_relation(&psi, &space).unwrap());
    let fam = Arc::new(FiberFamily::uniform(space, NormSpec::standard(r, dim).unwrap()));
    let kernel = OperatorKernel::from_fn(rel, fam.clone(), fam, |_, rows, cols| DMatrix::identity(rows, cols))
        .unwrap();
    (kernel, psi)
}

/// A kernel over an empty relation.
pub fn empty_instance() -> OperatorKernel {
    let t = unit_space("t", 2);
    let s = unit_space("s", 2);
    let rel = Arc::new(WeightedRelation::from_pairs(s.clone(), t.clone(), Vec::new()).unwrap());
    OperatorKernel::new(rel, scalar_family(&t), scalar_family(&s), Vec::new()).unwrap()
}

/// Size and shape limits for [`random_kernel`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_t: usize,
    pub max_s: usize,
    /// Fiber dimensions are drawn from `1..=max_dim`.
    pub max_dim: usize,
    /// Probability that a given `(s, t)` is in the relation.
    pub density: f64,
}

impl Shape {
    pub fn scalar(max_atoms: usize) -> Self {
        Shape { max_t: max_atoms, max_s: max_atoms, max_dim: 1, density: 0.4 }
    }

    pub fn multi(max_atoms: usize, max_dim: usize) -> Self {
        Shape { max_t: max_atoms, max_s: max_atoms, max_dim, density: 0.4 }
    }
}

const NORM_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn weight(r: &mut ChaCha8Rng) -> f64 {
    r.random_range(0.2..3.0)
}

fn random_spec(r: &mut ChaCha8Rng, dim: usize) -> NormSpec {
    let e = NORM_EXPONENTS[r.random_range(0..NORM_EXPONENTS.len())];
    let exp = Exponent::new(e).unwrap();
    let weights = (0..dim).map(|_| r.random_range(0.5..2.0)).collect();
    NormSpec::new(exp, weights).unwrap()
}

fn random_family(r: &mut ChaCha8Rng, base: &Arc<FiniteMeasureSpace>, max_dim: usize) -> Arc<FiberFamily> {
    let fibers = (0..base.len())
        .map(|_| {
            let dim = r.random_range(1..=max_dim);
            if max_dim == 1 {
                NormSpec::standard(Exponent::Finite(2.0), 1).unwrap()
            } else {
                random_spec(r, dim)
            }
        })
        .collect();
    Arc::new(FiberFamily::new(base.clone(), fibers).unwrap())
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-2.0..2.0))
}

/// Random instance: atom counts in `1..=max`, weights in `[0.2, 3)`, a
/// relation with at least one pair, random weighted r-norm fibers
/// (r ∈ {1, 1.5, 2, 3, ∞}; scalar ℓ² when `max_dim = 1`) and matrix entries in
/// `[-2, 2)`.
pub fn random_kernel(seed: u64, shape: Shape) -> OperatorKernel {
    let mut r = rng::keyed(seed, STREAM_INSTANCE, 0);
    let n_t = r.random_range(1..=shape.max_t);
    let n_s = r.random_range(1..=shape.max_s);
    let t = weighted_space("t", &(0..n_t).map(|_| weight(&mut r)).collect::<Vec<_>>());
    let s = weighted_space("s", &(0..n_s).map(|_| weight(&mut r)).collect::<Vec<_>>());
    let mut pairs = Vec::new();
    for si in 0..n_s {
        for ti in 0..n_t {
            if r.random_bool(shape.density) {
                pairs.push(Pair { s: si, t: ti, weight: weight(&mut r) });
            }
        }
    }
    if pairs.is_empty() {
        let (si, ti) = (r.random_range(0..n_s), r.random_range(0..n_t));
        pairs.push(Pair { s: si, t: ti, weight: weight(&mut r) });
    }
    let rel = Arc::new(WeightedRelation::from_pairs(s.clone(), t.clone(), pairs).unwrap());
    let w = random_family(&mut r, &t, shape.max_dim);
    let v = random_family(&mut r, &s, shape.max_dim);
    OperatorKernel::from_fn(rel, w, v, |_, rows, cols| random_matrix(&mut r, rows, cols)).unwrap()
}

/// Random map between fresh weighted spaces of sizes `n_s` and `n_t`. An
/// injective map needs `n_t ≥ n_s`; a non-injective one needs `n_t < n_s`
/// or is forced to collide on its first two atoms.
pub fn random_map(r: &mut ChaCha8Rng, n_s: usize, n_t: usize, injective: bool) -> AtomMap {
    let s = weighted_space("s", &(0..n_s).map(|_| weight(r)).collect::<Vec<_>>());
    let t = weighted_space("t", &(0..n_t).map(|_| weight(r)).collect::<Vec<_>>());
    let table = if injective {
        assert!(n_t >= n_s, "injective map needs n_t ≥ n_s");
        let mut targets: Vec<usize> = (0..n_t).collect();
        targets.shuffle(r);
        targets.truncate(n_s);
        targets
    } else {
        let mut table: Vec<usize> = (0..n_s).map(|_| r.random_range(0..n_t)).collect();
        if n_s >= 2 {
            table[1] = table[0];
        }
        table
    };
    AtomMap::from_indices(s, t, table).unwrap()
}

/// Graph instance `(kernel over Γ_ψ with λ = ν, ψ)` with random multi-dim
/// fibers. `n_s` is drawn from `1..=max_atoms`.
pub fn random_graph_kernel(seed: u64, max_atoms: usize, max_dim: usize, injective: bool) -> (OperatorKernel, AtomMap) {
    let mut r = rng::keyed(seed, STREAM_INSTANCE, 1);
    let n_s = r.random_range(if injective { 1 } else { 2 }..=max_atoms.max(2));
    let n_t = if injective { n_s + r.random_range(0..=2) } else { r.random_range(1..n_s) };
    let psi = random_map(&mut r, n_s, n_t, injective);
    let rel = Arc::new(graph_relation(&psi, psi.source()).unwrap());
    let w = random_family(&mut r, psi.target(), max_dim);
    let v = random_family(&mut r, psi.source(), max_dim);
    let kernel = OperatorKernel::from_fn(rel, w, v, |_, rows, cols| random_matrix(&mut r, rows, cols)).unwrap();
    (kernel, psi)
}

/// Non-injective graph instance with scalar kernels `±P`, `c ≤ |P| ≤ C`.
pub fn random_scalar_graph(seed: u64, max_atoms: usize, c: f64, big_c: f64) -> (OperatorKernel, AtomMap) {
    let mut r = rng::keyed(seed, STREAM_INSTANCE, 2);
    let n_s = r.random_range(2..=max_atoms.max(2));
    let n_t = r.random_range(1..n_s);
    let psi = random_map(&mut r, n_s, n_t, false);
    let rel = Arc::new(graph_relation(&psi, psi.source()).unwrap());
    let kernel = OperatorKernel::from_fn(rel, scalar_family(psi.target()), scalar_family(psi.source()), |_, _, _| {
        let m = if c < big_c { r.random_range(c..=big_c) } else { c };
        let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        DMatrix::from_element(1, 1, sign * m)
    })
    .unwrap();
    (kernel, psi)
}

fn random_domain(r: &mut ChaCha8Rng, outer: Arc<FiniteMeasureSpace>, inner: Arc<FiniteMeasureSpace>, allow_empty: bool) -> MixedDomain {
    let mut cells = Vec::new();
    for s in 0..outer.len() {
        let mut xs: Vec<usize> = (0..inner.len()).collect();
        xs.shuffle(r);
        let lo = if allow_empty { 0 } else { 1 };
        let k = r.random_range(lo..=inner.len());
        cells.extend(xs[..k].iter().map(|&x| (s, x)));
    }
    MixedDomain::from_indices(outer, inner, cells).unwrap()
}

/// Random split mapping with slices of at most `max_slice` cells. Outer
/// spaces have up to `max_outer` atoms; with `injective`, ψ is injective.
pub fn random_split_mapping(seed: u64, max_outer: usize, max_slice: usize, injective: bool) -> SplitMapping {
    let mut r = rng::keyed(seed, STREAM_INSTANCE, 3);
    let n_s = r.random_range(1..=max_outer);
    let n_t = if injective { n_s + r.random_range(0..=1) } else { r.random_range(1..=n_s) };
    let psi = random_map(&mut r, n_s, n_t, injective);
    let x = weighted_space("x", &(0..max_slice).map(|_| weight(&mut r)).collect::<Vec<_>>());
    let y = weighted_space("y", &(0..max_slice).map(|_| weight(&mut r)).collect::<Vec<_>>());
    let codomain = Arc::new(random_domain(&mut r, psi.target().clone(), y, false));
    // Outer atoms of S may have empty slices; those drop out of every norm.
    let domain = Arc::new(random_domain(&mut r, psi.source().clone(), x, true));
    let u: Vec<(String, String, String)> = domain
        .cells()
        .iter()
        .map(|&(s, xi)| {
            let slice = codomain.slice(psi.image(s));
            let c = slice[r.random_range(0..slice.len())];
            let yi = codomain.cells()[c].1;
            (
                domain.outer().id(s).to_string(),
                domain.inner().id(xi).to_string(),
                codomain.inner().id(yi).to_string(),
            )
        })
        .collect();
    SplitMapping::new(domain, codomain, psi, u).unwrap()
}

/// Seeded section of `family` with entries in `[-1, 1)`; sample `k` selects
/// an independent draw.
pub fn random_section(family: &FiberFamily, seed: u64, k: u64) -> Section {
    let mut r = rng::keyed(seed, STREAM_SECTION, k);
    Section::new(
        (0..family.len())
            .map(|i| DVector::from_fn(family.dim(i), |_, _| r.random_range(-1.0..1.0)))
            .collect(),
    )
}

/// Seeded cell values with entries in `[-1, 1)`.
pub fn random_values(n: usize, seed: u64, k: u64) -> Vec<f64> {
    let mut r = rng::keyed(seed, STREAM_SECTION, k);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}
