//! Spectral analysis of the monodromy matrix.
//!
//! The stable/unstable splitting is computed without a Jordan form: the
//! Cayley transform `C = (A − I)(A + I)⁻¹` sends `|λ| > 1` to the open right
//! half plane and `|λ| < 1` to the left one, so the spectral projection onto
//! `E⁺` is `(I + sign C) / 2`. The sign function comes from the scaled Newton
//! iteration `X ← (μX + (μX)⁻¹) / 2`. Generalized eigenspaces are grouped by
//! modulus automatically.
//!
//! The power `p0` is chosen against restricted ℓ∞ gains. Deterministic
//! low-discrepancy sampling of each subspace rejects powers cheaply; powers it
//! accepts are confirmed by the exact restricted norm, a small linear program.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::norms::{max_abs, max_abs_slice, restricted_linf_norm};

pub const DEFAULT_HYPERBOLIC_TOL: f64 = 1e-9;
pub const DEFAULT_P_MAX: u32 = 10_000;
pub const CONTRACTION_SAFETY: f64 = 1.05;
const BASE_SAMPLES: usize = 4096;
const MAX_SAMPLES: usize = 1 << 18;

/// Eigenvalues with algebraic multiplicity, sorted by decreasing modulus.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    if a.nrows() == 0 {
        return vec![];
    }
    let mut ev = schur_eigenvalues(a);
    merge_clusters(&mut ev, cluster_radius(a));
    ev.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    ev
}

const SCHUR_MAX_ITER: usize = 2_000;
const MAX_CLUSTER_RADIUS: f64 = 1e-2;

/// Worst-case spread of a computed `n`-fold Jordan block, `(n ε ‖A‖)^{1/n}`,
/// with a safety factor of 4.
fn cluster_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n < 2 {
        return 0.0;
    }
    let scale = a.norm().max(1.0);
    (4.0 * (n as f64 * f64::EPSILON * scale).powf(1.0 / n as f64)).min(MAX_CLUSTER_RADIUS)
}

/// Replaces every group of eigenvalues within `radius` of each other (single
/// linkage) by the group mean. A defective eigenvalue of multiplicity `m`
/// comes out of QR scattered by `O(ε^{1/m})` on a circle around the true
/// value, but the mean of the scattered copies is accurate to `O(ε)`.
fn merge_clusters(ev: &mut [Complex64], radius: f64) {
    let n = ev.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (ev[i] - ev[j]).norm() < radius {
                let (ri, rj) = (root(&mut label, i), root(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| root(&mut label, i)).collect();
    let originals = ev.to_vec();
    for (i, z) in ev.iter_mut().enumerate() {
        let members: Vec<Complex64> = (0..n).filter(|&j| roots[j] == roots[i]).map(|j| originals[j]).collect();
        if members.len() > 1 {
            *z = members.iter().sum::<Complex64>() / members.len() as f64;
        }
    }
}

/// Francis QR with an iteration cap. Shifted QR can stall on exactly
/// structured inputs (some integer companion matrices cycle forever), so on
/// non-convergence the matrix is conjugated by seeded random orthogonal
/// matrices, which preserves the spectrum and breaks the symmetry.
fn schur_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4u64);
    let mut m = a.clone();
    for _ in 0..16 {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
            return schur.complex_eigenvalues().iter().copied().collect();
        }
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        m = q.transpose() * a * &q;
    }
    panic!("QR iteration failed to converge on {a}");
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperbolicity {
    pub hyperbolic: bool,
    /// `min | |λ| − 1 |` over the spectrum.
    pub margin: f64,
}

pub fn is_hyperbolic(a: &DMatrix<f64>, tol: f64) -> Hyperbolicity {
    let margin = eigenvalues(a)
        .iter()
        .map(|l| (l.norm() - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    Hyperbolicity { hyperbolic: margin > tol, margin }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P0Witness {
    pub p0: u32,
    /// Sup of `‖A^p0 v‖/‖v‖` over `E⁻` (before the safety factor): sampled,
    /// then confirmed by an exact linear program.
    pub contraction: f64,
    /// Inf of `‖A^p0 v‖/‖v‖` over `E⁺`, sampled and confirmed the same way.
    pub expansion: f64,
    pub safety: f64,
    pub samples_minus: usize,
    pub samples_plus: usize,
    /// Every power in `p0..=verified_through` met both bounds.
    pub verified_through: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicSplitting {
    pub a: DMatrix<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub margin: f64,
    /// Orthonormal columns spanning `E⁺` / `E⁻`.
    pub e_plus: DMatrix<f64>,
    pub e_minus: DMatrix<f64>,
    pub p_plus: DMatrix<f64>,
    pub p_minus: DMatrix<f64>,
    pub p0: Option<P0Witness>,
    pub norm_tag: String,
}

impl HyperbolicSplitting {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim_plus(&self) -> usize {
        self.e_plus.ncols()
    }

    pub fn dim_minus(&self) -> usize {
        self.e_minus.ncols()
    }

    /// `‖A P₊ − P₊ A‖`.
    pub fn commutator_defect(&self) -> f64 {
        max_abs(&(&self.a * &self.p_plus - &self.p_plus * &self.a))
    }

    /// `‖P₊ + P₋ − I‖` and `‖P₊² − P₊‖`, the larger of the two.
    pub fn projection_defect(&self) -> f64 {
        let d = self.dim();
        let sum = max_abs(&(&self.p_plus + &self.p_minus - DMatrix::identity(d, d)));
        let idem = max_abs(&(&self.p_plus * &self.p_plus - &self.p_plus));
        sum.max(idem)
    }

    /// `A` in the orthonormal basis of an invariant subspace.
    pub fn restricted(&self, basis: &DMatrix<f64>) -> DMatrix<f64> {
        basis.transpose() * &self.a * basis
    }

    pub fn p0(&self) -> Option<u32> {
        self.p0.as_ref().map(|w| w.p0)
    }
}

pub fn invariant_splitting(a: &DMatrix<f64>) -> Result<HyperbolicSplitting> {
    let d = a.nrows();
    if !a.is_square() || d == 0 {
        return Err(LabError::DimensionMismatch {
            expected: "non-empty square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let eig = eigenvalues(a);
    let check = is_hyperbolic(a, DEFAULT_HYPERBOLIC_TOL);
    if !check.hyperbolic {
        return Err(LabError::UnitModulusSpectrum { margin: check.margin });
    }
    if eig.iter().any(|l| l.norm() < 1e-12) {
        return Err(LabError::SingularMonodromy);
    }
    let dim_plus = eig.iter().filter(|l| l.norm() > 1.0).count();

    let id = DMatrix::<f64>::identity(d, d);
    let cayley = (a - &id)
        * (a + &id)
            .try_inverse()
            .ok_or_else(|| LabError::Numeric("A + I is singular".into()))?;
    let sign = matrix_sign(&cayley)?;
    let mut p_plus = (&id + sign) * 0.5;
    // two steps of the idempotent polish P ← 3P² − 2P³
    for _ in 0..2 {
        let p2 = &p_plus * &p_plus;
        p_plus = &p2 * 3.0 - &p2 * &p_plus * 2.0;
    }
    let p_minus = &id - &p_plus;

    let e_plus = range_basis(&p_plus, dim_plus);
    let e_minus = range_basis(&p_minus, d - dim_plus);

    Ok(HyperbolicSplitting {
        a: a.clone(),
        eigenvalues: eig,
        margin: check.margin,
        e_plus,
        e_minus,
        p_plus,
        p_minus,
        p0: None,
        norm_tag: "linf".into(),
    })
}

fn matrix_sign(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.nrows() as f64;
    let mut x = c.clone();
    for iter in 0..200 {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| LabError::Numeric("sign iteration hit a singular iterate".into()))?;
        // determinant scaling accelerates the early iterations only
        let mu = if iter < 8 {
            let det = x.determinant().abs();
            if det.is_finite() && det > 0.0 { det.powf(-1.0 / n) } else { 1.0 }
        } else {
            1.0
        };
        let next = (&x * mu + inv / mu) * 0.5;
        let change = max_abs(&(&next - &x));
        x = next;
        if change <= 1e-14 * max_abs(&x).max(1.0) {
            return Ok(x);
        }
    }
    Err(LabError::Numeric("matrix sign iteration did not converge".into()))
}

/// Orthonormal basis of the column space of a projection of known rank,
/// with each column's largest entry made positive.
fn range_basis(p: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let d = p.nrows();
    if rank == 0 {
        return DMatrix::zeros(d, 0);
    }
    // Column-pivoted QR picks `rank` independent columns of `p`; projecting
    // them once more and re-orthonormalizing removes residual leakage.
    let pivoted = p.clone().col_piv_qr().q().columns(0, rank).into_owned();
    let u = (p * pivoted).qr().q();
    let mut basis = DMatrix::zeros(d, rank);
    for k in 0..rank {
        let col = u.column(k);
        let pivot = col.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        basis.set_column(k, &(col * sign));
    }
    basis
}

pub fn project_displacement(p: &DMatrix<f64>, disp: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p.ncols() != disp.nrows() || !p.is_square() {
        return Err(LabError::DimensionMismatch {
            expected: format!("{}x{} projection against {} rows", p.nrows(), p.nrows(), disp.nrows()),
            got: format!("{}x{}", p.nrows(), p.ncols()),
        });
    }
    Ok(p * disp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P0Options {
    pub p_max: u32,
    pub seed: u64,
    pub safety: f64,
}

impl Default for P0Options {
    fn default() -> Self {
        Self { p_max: DEFAULT_P_MAX, seed: 0, safety: CONTRACTION_SAFETY }
    }
}

pub fn sample_count(dim: usize) -> usize {
    match dim {
        0 => 0,
        1 => 1,
        2 | 3 => BASE_SAMPLES,
        m => (BASE_SAMPLES << (m - 3).min(6)).min(MAX_SAMPLES),
    }
}

/// Deterministic directions in `ℝ^m`: one for `m = 1`, evenly spaced half
/// circle for `m = 2`, shifted Halton points in the cube otherwise.
pub fn sample_directions(m: usize, seed: u64) -> Vec<DVector<f64>> {
    let n = sample_count(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match m {
        0 => vec![],
        1 => vec![DVector::from_element(1, 1.0)],
        2 => {
            let shift: f64 = rng.random();
            (0..n)
                .map(|k| {
                    let th = std::f64::consts::PI * (k as f64 + shift) / n as f64;
                    DVector::from_vec(vec![th.cos(), th.sin()])
                })
                .collect()
        }
        _ => {
            let shifts: Vec<f64> = (0..m).map(|_| rng.random()).collect();
            let primes = first_primes(m);
            let mut out: Vec<DVector<f64>> = (0..m)
                .map(|i| DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 }))
                .collect();
            for k in 1..=n {
                let v = DVector::from_fn(m, |j, _| {
                    let u = (radical_inverse(k as u64, primes[j]) + shifts[j]).fract();
                    2.0 * u - 1.0
                });
                if max_abs_slice(v.as_slice()) > 1e-9 {
                    out.push(v);
                }
            }
            out
        }
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while k > 0 {
        r += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().all(|p| !c.is_multiple_of(*p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Sampled restricted ℓ∞ gains of `A^q` on one invariant subspace, for
/// `q = 1, 2, ...`. Samples are the columns of one matrix; iterates are
/// re-projected each step to suppress drift into the complementary subspace.
/// `A` (or its inverse) restricted to the subspace, in basis coordinates,
/// gives exact norms on demand.
struct GainTracker {
    base_norms: Vec<f64>,
    iterates: DMatrix<f64>,
    projection: DMatrix<f64>,
    basis: DMatrix<f64>,
    coeff_step: DMatrix<f64>,
}

impl GainTracker {
    /// `inverse` tracks `A^{-q}` in basis coordinates instead of `A^q`.
    fn new(a: &DMatrix<f64>, basis: &DMatrix<f64>, projection: &DMatrix<f64>, inverse: bool, seed: u64) -> Self {
        let directions = sample_directions(basis.ncols(), seed);
        let iterates = if directions.is_empty() {
            DMatrix::zeros(basis.nrows(), 0)
        } else {
            basis * DMatrix::from_columns(&directions)
        };
        let base_norms = iterates.column_iter().map(|c| c.amax()).collect();
        let k = basis.ncols();
        let restricted = basis.transpose() * a * basis;
        let coeff_step = if inverse {
            restricted.try_inverse().unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN))
        } else {
            restricted
        };
        Self {
            base_norms,
            iterates,
            projection: projection.clone(),
            basis: basis.clone(),
            coeff_step,
        }
    }

    fn len(&self) -> usize {
        self.iterates.ncols()
    }

    /// Advances one power and returns the sampled `(max gain, min gain)`.
    fn step(&mut self, a: &DMatrix<f64>) -> (f64, f64) {
        self.iterates = (&self.projection * a) * &self.iterates;
        self.iterates.column_iter().zip(&self.base_norms).fold((0.0f64, f64::INFINITY), |(hi, lo), (c, n0)| {
            let g = c.amax() / n0;
            (hi.max(g), lo.min(g))
        })
    }

    /// Exact restricted ℓ∞ norm of the `q`-th tracked power.
    fn exact_norm(&self, q: u32) -> Option<f64> {
        let power = self.coeff_step.pow(q);
        if power.iter().any(|x| !x.is_finite()) {
            return None;
        }
        restricted_linf_norm(&self.basis, &power)
    }
}

pub fn compute_p0(split: &HyperbolicSplitting, opts: P0Options) -> Result<P0Witness> {
    let mut minus = GainTracker::new(&split.a, &split.e_minus, &split.p_minus, false, opts.seed);
    let mut plus = GainTracker::new(&split.a, &split.e_plus, &split.p_plus, true, opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let passes = |(contraction, expansion): (f64, f64)| opts.safety * contraction <= 0.5 && expansion >= 2.0;
    let mut sampled: Vec<(f64, f64)> = vec![(f64::NAN, f64::NAN)];
    let mut exact: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    // Sampling can only overestimate how well a power passes, so it rejects
    // cheaply; accepted powers are confirmed exactly.
    let confirm = |exact: &mut BTreeMap<usize, (f64, f64)>, minus: &GainTracker, plus: &GainTracker, q: usize, (c, e): (f64, f64)| {
        *exact.entry(q).or_insert_with(|| {
            let c = if minus.len() == 0 { c } else { minus.exact_norm(q as u32).map_or(f64::INFINITY, |v| c.max(v)) };
            let e = if plus.len() == 0 {
                e
            } else {
                plus.exact_norm(q as u32).filter(|v| *v > 0.0).map_or(0.0, |v| e.min(1.0 / v))
            };
            (c, e)
        })
    };

    let mut p: u32 = 1;
    loop {
        if p > opts.p_max {
            return Err(LabError::ContractionUnreachable { p_max: opts.p_max });
        }
        let horizon = 4 * p as usize;
        while sampled.len() <= horizon {
            let contraction = if minus.len() == 0 { 0.0 } else { minus.step(&split.a).0 };
            let expansion = if plus.len() == 0 { f64::INFINITY } else { plus.step(&split.a).1 };
            if !contraction.is_finite() || expansion.is_nan() {
                return Err(LabError::ContractionUnreachable { p_max: opts.p_max });
            }
            sampled.push((contraction, expansion));
        }
        if let Some(bad) = (p as usize..=horizon).rev().find(|&q| !passes(sampled[q])) {
            p = bad as u32 + 1;
            continue;
        }
        // Restricted norms are submultiplicative on invariant subspaces, so
        // exact passes on p..2p imply them on 2p..=4p.
        match (p as usize..2 * p as usize).find(|&q| !passes(confirm(&mut exact, &minus, &plus, q, sampled[q]))) {
            Some(bad) => p = bad as u32 + 1,
            None => {
                let (contraction, expansion) = confirm(&mut exact, &minus, &plus, p as usize, sampled[p as usize]);
                return Ok(P0Witness {
                    p0: p,
                    contraction,
                    expansion,
                    safety: opts.safety,
                    samples_minus: minus.len(),
                    samples_plus: plus.len(),
                    verified_through: horizon as u32,
                });
            }
        }
    }
}

/// `invariant_splitting` followed by `compute_p0`.
pub fn analyze(a: &DMatrix<f64>, opts: P0Options) -> Result<HyperbolicSplitting> {
    let mut split = invariant_splitting(a)?;
    split.p0 = Some(compute_p0(&split, opts)?);
    Ok(split)
}

pub fn to_real(a: &DMatrix<i64>) -> DMatrix<f64> {
    a.map(|x| x as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    // roots of λ² − tr λ + det, written out independently of the Schur path
    fn quadratic_roots(tr: f64, det: f64) -> (f64, f64) {
        let disc = (tr * tr - 4.0 * det).sqrt();
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }

    #[test]
    fn cat_map_spectrum() {
        let ev = eigenvalues(&m2(2.0, 1.0, 1.0, 1.0));
        let (hi, lo) = quadratic_roots(3.0, 1.0);
        assert!((ev[0].re - hi).abs() < 1e-10 && ev[0].im.abs() < 1e-12);
        assert!((ev[1].re - lo).abs() < 1e-10 && ev[1].im.abs() < 1e-12);
        assert!((hi - 2.6180339887).abs() < 1e-9);
    }

    #[test]
    fn fibonacci_spectrum() {
        let ev = eigenvalues(&m2(0.0, 1.0, 1.0, 1.0));
        let (hi, lo) = quadratic_roots(1.0, -1.0);
        assert!((ev[0].re - hi).abs() < 1e-10);
        assert!((ev[1].re - lo).abs() < 1e-10);
        assert!((lo + 0.6180339887).abs() < 1e-9);
    }

    #[test]
    fn identity_spectrum() {
        let ev = eigenvalues(&DMatrix::identity(2, 2));
        assert!(ev.iter().all(|l| (l.re - 1.0).abs() < 1e-14 && l.im == 0.0));
    }

    #[test]
    fn hyperbolicity_examples() {
        assert!(is_hyperbolic(&m2(2.0, 1.0, 1.0, 1.0), 1e-9).hyperbolic);
        let unipotent = is_hyperbolic(&m2(1.0, 1.0, 0.0, 1.0), 1e-9);
        assert!(!unipotent.hyperbolic);
        assert!(unipotent.margin < 1e-9);
        assert!(!is_hyperbolic(&m2(0.0, -1.0, 1.0, 0.0), 1e-9).hyperbolic);
    }

    #[test]
    fn diagonal_splitting() {
        let s = invariant_splitting(&m2(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert_relative_eq!(s.p_plus, m2(1.0, 0.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(s.e_plus, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), epsilon = 1e-12);
        assert_relative_eq!(s.e_minus, DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), epsilon = 1e-12);
    }

    fn parallel(u: &DMatrix<f64>, v: [f64; 2]) -> bool {
        (u[(0, 0)] * v[1] - u[(1, 0)] * v[0]).abs() < 1e-10 * (v[0].hypot(v[1]))
    }

    #[test]
    fn defective_unit_eigenvalue_is_not_hyperbolic() {
        // (x − 1)³: QR scatters the triple root by ~ε^{1/3} ≫ the tolerance.
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, -3.0, 3.0]);
        let h = is_hyperbolic(&a, DEFAULT_HYPERBOLIC_TOL);
        assert!(!h.hyperbolic, "margin {}", h.margin);
        let jordan2 = DMatrix::from_row_slice(4, 4, &[2.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(!is_hyperbolic(&jordan2, DEFAULT_HYPERBOLIC_TOL).hyperbolic);
        let off_circle = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert_relative_eq!(is_hyperbolic(&off_circle, DEFAULT_HYPERBOLIC_TOL).margin, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stalling_companion_converges() {
        // x⁴ − 3x² + 2 = (x² − 1)(x² − 2): unguarded shifted QR cycles here.
        let a = DMatrix::from_row_slice(4, 4, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -2.0, 0.0, 3.0, 0.0]);
        let mut moduli: Vec<f64> = eigenvalues(&a).iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        let s2 = 2f64.sqrt();
        for (m, e) in moduli.iter().zip([1.0, 1.0, s2, s2]) {
            assert_relative_eq!(*m, e, epsilon = 1e-9);
        }
        assert!(!is_hyperbolic(&a, DEFAULT_HYPERBOLIC_TOL).hyperbolic);
    }

    #[test]
    fn cat_map_eigenvectors() {
        let s = invariant_splitting(&m2(2.0, 1.0, 1.0, 1.0)).unwrap();
        let r5 = 5f64.sqrt();
        // y = (λ − 2) x
        assert!(parallel(&s.e_plus, [1.0, (r5 - 1.0) / 2.0]));
        assert!(parallel(&s.e_minus, [1.0, -(r5 + 1.0) / 2.0]));
        assert!(s.projection_defect() < 1e-10);
        assert!(s.commutator_defect() < 1e-10);
    }

    #[test]
    fn non_hyperbolic_rejected() {
        assert!(matches!(
            invariant_splitting(&m2(1.0, 1.0, 0.0, 1.0)),
            Err(LabError::UnitModulusSpectrum { .. })
        ));
    }

    #[test]
    fn jordan_block_grouped_by_modulus() {
        // 2-dimensional Jordan block at 3 plus a contracting direction
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 0.0, 3.0, 0.0, 1.0, 0.0, 0.25]);
        let s = invariant_splitting(&a).unwrap();
        assert_eq!((s.dim_plus(), s.dim_minus()), (2, 1));
        assert!(s.commutator_defect() < 1e-10);
        assert!(s.projection_defect() < 1e-10);
    }

    #[test]
    fn p0_examples() {
        let opts = P0Options::default();
        assert_eq!(analyze(&m2(2.0, 1.0, 1.0, 1.0), opts).unwrap().p0(), Some(1));
        assert_eq!(analyze(&m2(0.0, 1.0, 1.0, 1.0), opts).unwrap().p0(), Some(2));
        assert_eq!(analyze(&m2(4.0, 0.0, 0.0, 0.25), opts).unwrap().p0(), Some(1));
        assert_eq!(analyze(&DMatrix::from_element(1, 1, 2.0), opts).unwrap().p0(), Some(1));
    }

    // x⁴ − 3x² + 3: four rotating roots of modulus 3^¼ on a single 4-D E⁺;
    // sampling alone accepts p = 9, whose true cogain is 1/‖A⁻⁹‖ = 1.8
    #[test]
    fn rotating_spectrum_uses_exact_cogain() {
        let a = DMatrix::from_row_slice(4, 4, &[0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., -3., 0., 3., 0.]);
        let s = analyze(&a, P0Options::default()).unwrap();
        let w = s.p0.clone().unwrap();
        let row_sum = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        let inv = a.clone().try_inverse().unwrap();
        assert!((1.0 / row_sum(&inv.pow(9)) - 1.8).abs() < 1e-9);
        assert_eq!(w.p0, 10);
        assert_relative_eq!(w.expansion, 1.0 / row_sum(&inv.pow(10)), epsilon = 1e-9);
    }

    #[test]
    fn p0_exact_gains_for_line_subspaces() {
        let s = analyze(&m2(0.0, 1.0, 1.0, 1.0), P0Options::default()).unwrap();
        let w = s.p0.unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(w.contraction, phi.powi(-2), epsilon = 1e-12);
        assert_relative_eq!(w.expansion, phi.powi(2), epsilon = 1e-12);
    }

    #[test]
    fn near_unit_spectrum_hits_p_max() {
        let a = m2(1.0 + 1e-3, 0.0, 0.0, 1.0 / (1.0 + 1e-3));
        let opts = P0Options { p_max: 50, ..Default::default() };
        assert_eq!(
            analyze(&a, opts).unwrap_err(),
            LabError::ContractionUnreachable { p_max: 50 }
        );
    }

    #[test]
    fn projection_examples() {
        let s = invariant_splitting(&m2(2.0, 1.0, 1.0, 1.0)).unwrap();
        let d = DMatrix::from_row_slice(2, 3, &[0.1, -0.2, 0.3, 0.05, 0.0, -0.4]);
        let id = DMatrix::identity(2, 2);
        assert_eq!(project_displacement(&id, &d).unwrap(), d);
        let sum = project_displacement(&s.p_plus, &d).unwrap() + project_displacement(&s.p_minus, &d).unwrap();
        assert_relative_eq!(sum, d, epsilon = 1e-12);
        let stable = &s.e_minus * DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        assert!(max_abs(&project_displacement(&s.p_plus, &stable).unwrap()) < 1e-12);
        assert!(project_displacement(&id, &DMatrix::zeros(3, 1)).is_err());
    }
}
