use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidity_core::hyperbolic::{
    analyze, compute_p0, eigenvalues, invariant_splitting, is_hyperbolic, HyperbolicSplitting, P0Options,
    DEFAULT_HYPERBOLIC_TOL,
};
use rigidity_core::norms::{max_abs, restricted_linf_norm};

fn int_matrix(d: usize, bound: i64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-bound..=bound, d * d).prop_map(move |v| DMatrix::from_fn(d, d, |i, j| v[i * d + j] as f64))
}

fn hyperbolic_split(a: &DMatrix<f64>) -> Option<HyperbolicSplitting> {
    if !is_hyperbolic(a, DEFAULT_HYPERBOLIC_TOL).hyperbolic {
        return None;
    }
    invariant_splitting(a).ok()
}

// every eigenvalue of `a` matched one-to-one with one of `b`
fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut unused = b.to_vec();
    a.iter().all(|z| {
        let best = unused
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - z).norm().total_cmp(&(y.1 - z).norm()))
            .map(|(i, w)| (i, (w - z).norm()));
        match best {
            Some((i, dist)) if dist <= tol * z.norm().max(1.0) => {
                unused.swap_remove(i);
                true
            }
            _ => false,
        }
    })
}

// ‖A^p v‖/‖v‖ for v in an invariant subspace, iterating with re-projection
fn gain(split: &HyperbolicSplitting, proj: &DMatrix<f64>, v: &DMatrix<f64>, p: u32) -> f64 {
    let step = proj * &split.a;
    let mut w = v.clone();
    for _ in 0..p {
        w = &step * w;
    }
    max_abs(&w) / max_abs(v)
}

// maximum of ‖E·T·c‖∞ over the vertices of {c : ‖E·c‖∞ ≤ 1}, found by
// solving every choice of k active facets
fn vertex_enumeration_norm(e: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    let (d, k) = e.shape();
    let facets: Vec<(usize, f64)> = (0..d).flat_map(|j| [(j, 1.0), (j, -1.0)]).collect();
    let mut best = 0.0f64;
    let mut chosen = Vec::with_capacity(k);
    fn walk(
        start: usize,
        chosen: &mut Vec<usize>,
        facets: &[(usize, f64)],
        e: &DMatrix<f64>,
        t: &DMatrix<f64>,
        best: &mut f64,
    ) {
        let k = e.ncols();
        if chosen.len() == k {
            let m = DMatrix::from_fn(k, k, |r, c| e[(facets[chosen[r]].0, c)]);
            let rhs = DMatrix::from_fn(k, 1, |r, _| facets[chosen[r]].1);
            if let Some(c) = m.lu().solve(&rhs) {
                if max_abs(&(e * &c)) <= 1.0 + 1e-9 {
                    *best = best.max(max_abs(&(e * t * &c)));
                }
            }
            return;
        }
        for i in start..facets.len() {
            chosen.push(i);
            walk(i + 1, chosen, facets, e, t, best);
            chosen.pop();
        }
    }
    walk(0, &mut chosen, &facets, e, t, &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_commute_with_monodromy(a in (2usize..=12).prop_flat_map(|d| int_matrix(d, 20))) {
        let Some(split) = hyperbolic_split(&a) else { return Ok(()) };
        prop_assert!(split.commutator_defect() <= 1e-10, "‖AP − PA‖ = {:e}", split.commutator_defect());
        let minus_commutator = max_abs(&(&split.a * &split.p_minus - &split.p_minus * &split.a));
        prop_assert!(minus_commutator <= 1e-10, "‖AP₋ − P₋A‖ = {:e}", minus_commutator);
    }

    #[test]
    fn spectrum_splits_as_a_multiset(a in (2usize..=12).prop_flat_map(|d| int_matrix(d, 20))) {
        let Some(split) = hyperbolic_split(&a) else { return Ok(()) };
        let mut parts = eigenvalues(&split.restricted(&split.e_plus));
        prop_assert!(parts.iter().all(|z| z.norm() > 1.0));
        let minus = eigenvalues(&split.restricted(&split.e_minus));
        prop_assert!(minus.iter().all(|z| z.norm() < 1.0));
        parts.extend(minus);
        prop_assert!(same_multiset(&eigenvalues(&a), &parts, 1e-8), "{:?} vs {:?}", eigenvalues(&a), parts);
    }

    #[test]
    fn p0_bounds_hold_on_random_vectors(a in (2usize..=8).prop_flat_map(|d| int_matrix(d, 20)), seed in any::<u64>()) {
        let Some(split) = hyperbolic_split(&a) else { return Ok(()) };
        let Ok(w) = compute_p0(&split, P0Options::default()) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            for (basis, proj, minus) in [(&split.e_minus, &split.p_minus, true), (&split.e_plus, &split.p_plus, false)] {
                if basis.ncols() == 0 {
                    continue;
                }
                let g = DMatrix::from_fn(basis.ncols(), 1, |_, _| rng.random_range(-1.0..1.0));
                let v = basis * g;
                let r = gain(&split, proj, &v, w.p0);
                if minus {
                    prop_assert!(r <= 0.5 * (1.0 + 1e-8), "contraction {r} at p0 = {}", w.p0);
                } else {
                    prop_assert!(r >= 2.0 * (1.0 - 1e-8), "expansion {r} at p0 = {}", w.p0);
                }
            }
        }
    }

    #[test]
    fn p0_is_stable_under_sampling_seed(a in (2usize..=8).prop_flat_map(|d| int_matrix(d, 20)), seed in 1u64..u64::MAX) {
        let Some(split) = hyperbolic_split(&a) else { return Ok(()) };
        let base = compute_p0(&split, P0Options::default()).map(|w| w.p0);
        let other = compute_p0(&split, P0Options { seed, ..P0Options::default() }).map(|w| w.p0);
        prop_assert_eq!(base.ok(), other.ok());
    }

    #[test]
    fn restricted_norm_matches_vertex_enumeration(
        d in 1usize..=5,
        k in 1usize..=3,
        entries in prop::collection::vec(-3.0f64..3.0, 25),
        coeffs in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let k = k.min(d);
        let e = DMatrix::from_fn(d, k, |i, j| entries[i * 5 + j]);
        prop_assume!(e.clone().svd(false, false).singular_values.min() > 1e-3);
        let t = DMatrix::from_fn(k, k, |i, j| coeffs[i * 3 + j]);
        let lp = restricted_linf_norm(&e, &t).expect("bounded feasible LP");
        let oracle = vertex_enumeration_norm(&e, &t);
        prop_assert!((lp - oracle).abs() <= 1e-7 * oracle.max(1.0), "LP {lp} vs vertices {oracle}");
    }
}

#[test]
fn splitting_reproduces_across_runs() {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    let a = &a * &a * &a + DMatrix::identity(3, 3);
    let x = analyze(&a, P0Options::default()).unwrap();
    let y = analyze(&a, P0Options::default()).unwrap();
    assert_eq!(x, y);
}
