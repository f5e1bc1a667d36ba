//! Randomized audit of the set function Φ: additivity over partitions,
//! monotonicity, and the derivative inequality `Σ_{t∈U} Φ′(t) μ_t ≤ Φ(U)`.

use dirint::boundedness::{phi_derivative, phi_value};
use dirint::kernels::OperatorKernel;
use dirint::{rng, Exponent};
use rand::Rng;

const STREAM: u64 = 0xa0d1;

/// Tolerances of the audit, relative to `Φ(T)`.
pub const ADDITIVITY_TOL: f64 = 1e-9;
pub const MONOTONICITY_TOL: f64 = 1e-12;
pub const DERIVATIVE_EXCESS_TOL: f64 = 1e-12;
pub const DERIVATIVE_GAP_TOL: f64 = 1e-9;

/// Largest violations seen; all relative to `Φ(T)` (absolute when `Φ(T) = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiAudit {
    pub total: f64,
    pub partitions: usize,
    /// `|Φ(T) − Σ_i Φ(A_i)|`.
    pub additivity: f64,
    /// `max(0, Φ(A) − Φ(B))` for `A ⊂ B`.
    pub monotonicity: f64,
    /// `max(0, Σ_{t∈U} Φ′(t) μ_t − Φ(U))`.
    pub derivative_excess: f64,
    /// `|Σ_{t∈U} Φ′(t) μ_t − Φ(U)|`; zero on atomic spaces up to rounding.
    pub derivative_gap: f64,
}

impl PhiAudit {
    pub fn max_violation(&self) -> f64 {
        self.additivity.max(self.monotonicity).max(self.derivative_excess).max(self.derivative_gap)
    }

    /// Names of the properties that exceeded their tolerance.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.additivity > ADDITIVITY_TOL {
            out.push("additivity");
        }
        if self.monotonicity > MONOTONICITY_TOL {
            out.push("monotonicity");
        }
        if self.derivative_excess > DERIVATIVE_EXCESS_TOL {
            out.push("derivative inequality");
        }
        if self.derivative_gap > DERIVATIVE_GAP_TOL {
            out.push("derivative equality");
        }
        out
    }
}

/// Runs `partitions` seeded rounds. Each round draws a random partition of
/// `T`, a nested pair `A ⊂ B` built from its blocks, and a random subset `U`.
pub fn phi_audit(
    kernel: &OperatorKernel,
    p: Exponent,
    q: Exponent,
    partitions: usize,
    seed: u64,
) -> dirint::Result<PhiAudit> {
    let t_space = kernel.relation().target();
    let n = t_space.len();
    let all: Vec<usize> = (0..n).collect();
    let total = phi_value(kernel, &all, p, q)?.value;
    let scale = if total > 0.0 { total } else { 1.0 };
    let weighted_derivative: Vec<f64> = (0..n)
        .map(|t| Ok(phi_derivative(kernel, t, p, q)? * t_space.weight(t)))
        .collect::<dirint::Result<_>>()?;
    let phi = |set: &[usize]| phi_value(kernel, set, p, q).map(|v| v.value);

    let mut audit = PhiAudit {
        total,
        partitions,
        additivity: 0.0,
        monotonicity: 0.0,
        derivative_excess: 0.0,
        derivative_gap: 0.0,
    };
    if n == 0 {
        return Ok(audit);
    }
    for round in 0..partitions {
        let mut r = rng::keyed(seed, STREAM, round as u64);
        let k = r.random_range(1..=n);
        let mut blocks = vec![Vec::new(); k];
        for t in 0..n {
            blocks[r.random_range(0..k)].push(t);
        }
        blocks.retain(|b| !b.is_empty());
        let mut sum = 0.0;
        for b in &blocks {
            sum += phi(b)?;
        }
        audit.additivity = audit.additivity.max((total - sum).abs() / scale);

        let a = &blocks[0];
        let mut b = a.clone();
        if let Some(extra) = blocks.get(1) {
            b.extend(extra);
        }
        let (pa, pb) = (phi(a)?, phi(&b)?);
        audit.monotonicity = audit.monotonicity.max((pa - pb).max(0.0) / scale);
        audit.monotonicity = audit.monotonicity.max((pb - total).max(0.0) / scale);

        let u: Vec<usize> = (0..n).filter(|_| r.random_bool(0.5)).collect();
        let lhs: f64 = u.iter().map(|&t| weighted_derivative[t]).sum();
        let pu = phi(&u)?;
        audit.derivative_excess = audit.derivative_excess.max((lhs - pu).max(0.0) / scale);
        audit.derivative_gap = audit.derivative_gap.max((lhs - pu).abs() / scale);
    }
    Ok(audit)
}
