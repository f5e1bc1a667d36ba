//! Brute-force direction search used to cross-check the direction problems of
//! [`kernels`](crate::kernels) in dimensions one to three.
//!
//! The caller supplies a scale-invariant ratio (e.g. `‖Ax‖_out / ‖x‖_in`); the
//! oracle evaluates it on a dense grid of Euclidean unit directions, then runs
//! one refinement pass around the best grid point.

use std::f64::consts::PI;

use rayon::prelude::*;

/// Grid points on the circle.
pub const CIRCLE_POINTS: usize = 10_000;
/// Grid points on the 2-sphere.
pub const SPHERE_POINTS: usize = 100_000;

const CIRCLE_REFINE: usize = 2_001;
const SPHERE_REFINE: usize = 101;

fn best<I>(points: I) -> (f64, Vec<f64>)
where
    I: IndexedParallelIterator<Item = (f64, Vec<f64>)>,
{
    // Collect first so ties resolve to the lowest index regardless of threads.
    let all: Vec<(f64, Vec<f64>)> = points.collect();
    let mut out = (f64::NEG_INFINITY, Vec::new());
    for (v, x) in all {
        if v > out.0 {
            out = (v, x);
        }
    }
    out
}

/// Supremum of `ratio` over unit directions of `R^dim`, or `None` for
/// `dim > 3`.
pub fn sphere_sup<F>(dim: usize, ratio: F) -> Option<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match dim {
        1 => Some(ratio(&[1.0]).max(ratio(&[-1.0]))),
        2 => Some(circle_sup(&ratio)),
        3 => Some(sphere3_sup(&ratio)),
        _ => None,
    }
}

fn circle_sup<F: Fn(&[f64]) -> f64 + Sync>(ratio: &F) -> f64 {
    let step = 2.0 * PI / CIRCLE_POINTS as f64;
    let at = |theta: f64| {
        let x = vec![theta.cos(), theta.sin()];
        (ratio(&x), vec![theta])
    };
    let (coarse, arg) = best((0..CIRCLE_POINTS).into_par_iter().map(|k| at(k as f64 * step)));
    let center = arg[0];
    let half = (CIRCLE_REFINE / 2) as f64;
    let (fine, _) = best((0..CIRCLE_REFINE).into_par_iter().map(|k| {
        at(center + (k as f64 - half) / half * step)
    }));
    coarse.max(fine)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sphere3_sup<F: Fn(&[f64]) -> f64 + Sync>(ratio: &F) -> f64 {
    let n = SPHERE_POINTS as f64;
    let golden = PI * (3.0 - 5f64.sqrt());
    let (coarse, x) = best((0..SPHERE_POINTS).into_par_iter().map(|k| {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / n;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        let x = vec![r * phi.cos(), r * phi.sin(), z];
        (ratio(&x), x)
    }));
    // Tangent frame at the best point.
    let c = [x[0], x[1], x[2]];
    let helper = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * c[0] + helper[1] * c[1] + helper[2] * c[2];
    let u = normalize([helper[0] - dot * c[0], helper[1] - dot * c[1], helper[2] - dot * c[2]]);
    let v = [
        c[1] * u[2] - c[2] * u[1],
        c[2] * u[0] - c[0] * u[2],
        c[0] * u[1] - c[1] * u[0],
    ];
    let spacing = (4.0 * PI / n).sqrt() * 1.5;
    let half = (SPHERE_REFINE / 2) as f64;
    let (fine, _) = best((0..SPHERE_REFINE * SPHERE_REFINE).into_par_iter().map(|k| {
        let a = ((k / SPHERE_REFINE) as f64 - half) / half * spacing;
        let b = ((k % SPHERE_REFINE) as f64 - half) / half * spacing;
        let p = normalize([
            c[0] + a * u[0] + b * v[0],
            c[1] + a * u[1] + b * v[1],
            c[2] + a * u[2] + b * v[2],
        ]);
        (ratio(&p), p.to_vec())
    }));
    coarse.max(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_euclidean_norm_of_fixed_vector() {
        // sup_x ⟨a, x⟩ over the unit sphere is ‖a‖₂.
        let a = [0.3, -1.2, 2.0];
        let s = sphere_sup(3, |x| a.iter().zip(x).map(|(u, v)| u * v).sum()).unwrap();
        let exact = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((s - exact).abs() / exact < 1e-7, "{s} vs {exact}");

        let s = sphere_sup(2, |x| 3.0 * x[0] + 4.0 * x[1]).unwrap();
        assert!((s - 5.0).abs() < 1e-10);
    }

    #[test]
    fn higher_dims_unsupported() {
        assert!(sphere_sup(4, |_| 0.0).is_none());
    }
}
