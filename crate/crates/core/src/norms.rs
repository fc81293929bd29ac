//! ℓ∞ conventions: every vector, matrix and function norm in the lab is the
//! maximum absolute entry.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;

/// NaN entries propagate, so a blown-up iterate never reads as small.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    max_abs_slice(m.as_slice())
}

pub fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| if acc.is_nan() || x.is_nan() { f64::NAN } else { acc.max(x.abs()) })
}

/// The bound `‖Tv‖ ≤ N‖T‖‖v‖` for an `M×N` matrix under max-entry norms.
pub fn linf_product_bound(t: &DMatrix<f64>, v: &[f64]) -> f64 {
    t.ncols() as f64 * max_abs(t) * max_abs_slice(v)
}

/// Exact `max ‖E·T·c‖∞` over `‖E·c‖∞ ≤ 1`: the ℓ∞ operator norm on the
/// span of `basis` (`E`, full column rank) of the map acting on coefficients
/// as `coeff_map` (`T`). One small LP per output row and sign; `None` if a
/// solve fails.
pub fn restricted_linf_norm(basis: &DMatrix<f64>, coeff_map: &DMatrix<f64>) -> Option<f64> {
    let k = basis.ncols();
    if k == 0 {
        return Some(0.0);
    }
    let image = basis * coeff_map;
    let mut best = 0.0f64;
    for row in image.row_iter() {
        for sign in [1.0, -1.0] {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let vars: Vec<_> = row.iter().map(|&w| lp.add_var(sign * w, (f64::NEG_INFINITY, f64::INFINITY))).collect();
            for e in basis.row_iter() {
                let terms: Vec<_> = vars.iter().copied().zip(e.iter().copied()).collect();
                lp.add_constraint(terms.as_slice(), ComparisonOp::Le, 1.0);
                lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, -1.0);
            }
            best = best.max(lp.solve().ok()?.objective());
        }
    }
    Some(best)
}
