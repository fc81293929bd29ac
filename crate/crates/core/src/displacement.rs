//! Displacement matrices and the inequality checks built on them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hyperbolic::to_real;
use crate::norms::max_abs;
use crate::representation::RepTuple;
use crate::words::Word;

/// `Δ_x(B)`: one ambient displacement row per word of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementMatrix {
    pub x: f64,
    pub labels: Vec<String>,
    /// `|B| × N`.
    pub rows: DMatrix<f64>,
}

impl DisplacementMatrix {
    pub fn norm(&self) -> f64 {
        max_abs(&self.rows)
    }
}

/// `Δ_x(w) = embed(ρ(w)x) − embed(x)`.
pub fn word_displacement(rep: &RepTuple, w: &Word, x: f64) -> Vec<f64> {
    let m = &rep.manifold;
    let v = m.displacement(x, rep.eval_word(w, x));
    v[..m.ambient_dim()].to_vec()
}

pub fn displacement(rep: &RepTuple, words: &[(String, Word)], x: f64) -> DisplacementMatrix {
    let n = rep.manifold.ambient_dim();
    let mut rows = DMatrix::zeros(words.len(), n);
    for (i, (_, w)) in words.iter().enumerate() {
        for (j, v) in word_displacement(rep, w, x).into_iter().enumerate() {
            rows[(i, j)] = v;
        }
    }
    DisplacementMatrix { x, labels: words.iter().map(|(l, _)| l.clone()).collect(), rows }
}

/// Labelled single-letter words for a range of generators.
pub fn generator_words(rep: &RepTuple, gens: std::ops::Range<usize>) -> Vec<(String, Word)> {
    gens.map(|g| (rep.presentation.alphabet.name(g).to_string(), Word::generator(g)))
        .collect()
}

/// `Δ_x(S0)` as a `d × N` matrix.
pub fn s0_displacement(rep: &RepTuple, x: f64) -> DMatrix<f64> {
    displacement(rep, &generator_words(rep, rep.presentation.s0()), x).rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityName {
    Red1,
    Red2,
    Red3,
    Red4,
    Mccarthy,
    Bonatti,
    Growth,
}

/// `lhs ≤ rhs + defect_budget`, with the budget carrying the measured
/// relation defect of a near-action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: InequalityName,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs + defect_budget − lhs`.
    pub slack: f64,
    pub defect_budget: f64,
    /// Whether the outcome is the same for every defect within the budget,
    /// i.e. `|rhs − lhs| > defect_budget`.
    pub decisive: bool,
}

impl InequalityReport {
    pub fn new(name: InequalityName, lhs: f64, rhs: f64, defect_budget: f64) -> Self {
        Self {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs + defect_budget,
            slack: rhs + defect_budget - lhs,
            defect_budget,
            decisive: (rhs - lhs).abs() > defect_budget,
        }
    }

    /// Holds, but only thanks to the defect budget.
    pub fn budget_dependent(&self) -> bool {
        self.holds && !self.decisive
    }
}

/// Error budget granted to every inequality: the word length bound `k`
/// times the aggregate relation defect.
pub fn defect_budget(rep: &RepTuple) -> f64 {
    rep.presentation.derived.k as f64 * rep.defect.aggregate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationResidual {
    /// `‖Δ_x(w) − Σ ε_i Δ_x(g_i)‖`.
    pub residual: f64,
    /// `max_i ‖Δ_x(g_i)‖`.
    pub reference: f64,
    pub eta_hat: Option<f64>,
    /// Nonzero residual against a vanishing reference.
    pub degenerate: bool,
}

pub const RESIDUAL_TOL: f64 = 1e-15;

pub fn linearization_residual(rep: &RepTuple, w: &Word, x: f64) -> Result<LinearizationResidual> {
    let letters = w.signed_letters();
    if letters.is_empty() {
        return Err(LabError::Parameter("linearization needs a nonempty word".into()));
    }
    let n = rep.manifold.ambient_dim();
    let mut sum = vec![0.0; n];
    let mut reference = 0.0f64;
    for &(g, e) in &letters {
        let d = word_displacement(rep, &Word::generator(g), x);
        for (s, v) in sum.iter_mut().zip(&d) {
            *s += e as f64 * v;
        }
        reference = reference.max(d.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let total = word_displacement(rep, w, x);
    let residual = total.iter().zip(&sum).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let degenerate = reference == 0.0 && residual > RESIDUAL_TOL;
    let eta_hat = (reference > 0.0).then(|| residual / reference);
    Ok(LinearizationResidual { residual, reference, eta_hat, degenerate })
}

/// The linearization inequality `residual ≤ η · reference` as a report.
pub fn check_linearization(rep: &RepTuple, w: &Word, x: f64, eta: f64) -> Result<InequalityReport> {
    let r = linearization_residual(rep, w, x)?;
    Ok(InequalityReport::new(InequalityName::Bonatti, r.residual, eta * r.reference, defect_budget(rep)))
}

/// The four reduction inequalities at `x`.
pub fn check_reduction(rep: &RepTuple, x: f64, eta: f64) -> Vec<InequalityReport> {
    let p = &rep.presentation;
    let budget = defect_budget(rep);
    let kk = p.derived.k_torsion as f64;

    let s_all = displacement(rep, &generator_words(rep, 0..p.n_generators()), x).norm();
    let s0 = s0_displacement(rep, x);
    let s0_norm = max_abs(&s0);
    let s_prime = displacement(rep, &p.s_prime(), x).norm();

    let mut small: Vec<(String, Word)> = generator_words(rep, p.s1());
    small.extend(p.derived.tau.iter().enumerate().map(|(j, t)| (format!("tau{}", j + 1), t.clone())));
    let small_norm = displacement(rep, &small, x).norm();

    let psi_words: Vec<(String, Word)> = p
        .s0()
        .map(|j| (format!("psi({})", p.alphabet.name(j)), p.psi[j].clone()))
        .collect();
    let psi_rows = displacement(rep, &psi_words, x).rows;
    let linear = to_real(p.monodromy()) * &s0;

    vec![
        InequalityReport::new(InequalityName::Red1, s_prime, eta * s_all, budget),
        InequalityReport::new(InequalityName::Red2, small_norm, eta / (kk - eta) * s_all, budget),
        InequalityReport::new(InequalityName::Red3, s_all - s0_norm, 0.0, budget),
        InequalityReport::new(InequalityName::Red4, max_abs(&(psi_rows - linear)), 2.0 * eta * s0_norm, budget),
    ]
}

/// Largest `η′` the displayed selection criterion admits for `η`.
pub fn admissible_eta_prime(eta: f64, d: usize, a_norm: i64) -> f64 {
    let growth = (d as f64 * a_norm as f64 + 2.0 / 3.0) / (1.0 / 3.0) + 1.0;
    eta / (2.0 * growth)
}

/// One generator's first-order expansion at `y = t⁻¹x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorTerm {
    pub generator: String,
    /// `‖Δ_x(ψ(s)) − Δ_y(s)‖`.
    pub lhs: f64,
    /// `N · ‖D_y t − 1‖ · ‖Δ_y(s)‖`.
    pub jacobian_term: f64,
    /// `2η′ ‖Δ_y(s)‖`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCarthyReport {
    pub x: f64,
    pub y: f64,
    pub eta: f64,
    pub eta_prime: f64,
    pub report: InequalityReport,
    pub taylor: Vec<TaylorTerm>,
}

pub fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 / 3.0 {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("eta {eta} must lie in (0, 1/3)")))
    }
}

/// `‖Δ_{t⁻¹x}(S0) − AΔ_x(S0)‖ ≤ η‖Δ_x(S0)‖`, with the first-order diagnostics.
pub fn check_mccarthy(rep: &RepTuple, x: f64, eta: f64) -> Result<McCarthyReport> {
    check_eta(eta)?;
    let p = &rep.presentation;
    let m = &rep.manifold;
    let t = rep.stable();
    let y = m.normalize(t.inverse().eval(x));
    let dx = s0_displacement(rep, x);
    let dy = s0_displacement(rep, y);
    let a = to_real(p.monodromy());
    let report = InequalityReport::new(
        InequalityName::Mccarthy,
        max_abs(&(&dy - &a * &dx)),
        eta * max_abs(&dx),
        defect_budget(rep),
    );

    let eta_prime = admissible_eta_prime(eta, p.d, p.a_norm());
    let n = m.ambient_dim() as f64;
    let jac_dev = (t.derivative(y) - 1.0).abs();
    let taylor = p
        .s0()
        .map(|j| {
            let dys = dy.row(j).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let dpsi = word_displacement(rep, &p.psi[j], x);
            let lhs = dpsi.iter().zip(dy.row(j).iter()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            let rhs = 2.0 * eta_prime * dys;
            TaylorTerm {
                generator: p.alphabet.name(j).to_string(),
                lhs,
                jacobian_term: n * jac_dev * dys,
                rhs,
                holds: lhs <= rhs,
            }
        })
        .collect();
    Ok(McCarthyReport { x, y, eta, eta_prime, report, taylor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::{DiffeoLiteral, Manifold};
    use crate::presentation::{PresentationSpec, SemidirectPresentation};
    use crate::representation::{gallery, scale_family, GalleryAction, GallerySpec, ScaleBuilder};
    use crate::words::GroupClass;
    use approx::assert_relative_eq;

    fn fibonacci() -> SemidirectPresentation {
        let spec = PresentationSpec {
            group_class: GroupClass::Free,
            s0: vec!["a".into(), "b".into()],
            s1: vec![],
            psi: [("a", "b"), ("b", "b a")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            torsion_relators: vec![],
            k_override: None,
        };
        SemidirectPresentation::from_spec(&spec).unwrap()
    }

    fn rep_of(spec: GallerySpec, manifold: Manifold) -> RepTuple {
        match gallery(&spec, fibonacci(), manifold).unwrap() {
            GalleryAction::Rep(r) => *r,
            GalleryAction::C0(_) => unreachable!(),
        }
    }

    fn bump(eps: f64) -> RepTuple {
        scale_family(&ScaleBuilder::Bump, fibonacci(), Manifold::interval(), eps).unwrap()
    }

    #[test]
    fn trivial_rep_has_zero_displacement() {
        let r = RepTuple::trivial(fibonacci(), Manifold::interval());
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(s0_displacement(&r, x).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        }
    }

    #[test]
    fn bump_row_at_half() {
        let r = bump(0.01);
        let d = s0_displacement(&r, 0.5);
        assert_relative_eq!(d[(0, 0)], 0.0025, max_relative = 1e-12);
        assert_eq!(d[(1, 0)], 0.0);
    }

    #[test]
    fn rotation_of_t_leaves_s0_fixed() {
        let presentation = SemidirectPresentation::free_abelian_from_matrix(
            &DMatrix::from_row_slice(2, 2, &[2, 1, 1, 1]),
        )
        .unwrap();
        let GalleryAction::Rep(r) = gallery(
            &GallerySpec::TrivialH { t: Some(DiffeoLiteral::Rotation { theta: 0.2 }) },
            presentation,
            Manifold::circle(),
        )
        .unwrap() else { unreachable!() };
        for k in 0..16 {
            assert_eq!(max_abs(&s0_displacement(&r, k as f64 / 16.0)), 0.0);
        }
    }

    #[test]
    fn residual_examples() {
        let r = bump(0.01);
        let a = Word::generator(0);
        let cancel = linearization_residual(&r, &a.concat(&a.inverse()), 0.25).unwrap();
        assert_eq!(cancel.residual, 0.0);

        let sq = linearization_residual(&r, &Word::power_of(0, 2), 0.25).unwrap();
        // f(x) = x + εx(1−x): Δ(f²) − 2Δ(f) = εΔ(f)(1 − 2x − Δ(f)) at x = 1/4
        let delta = 0.01 * 0.25 * 0.75;
        let oracle = 0.01 * delta * (1.0 - 0.5 - delta);
        assert_relative_eq!(sq.residual, oracle, max_relative = 1e-9);
        assert_relative_eq!(sq.residual, 9.34e-6, max_relative = 2e-3);
        assert_relative_eq!(sq.reference, 1.875e-3, max_relative = 1e-12);
        assert_relative_eq!(sq.eta_hat.unwrap(), 4.98e-3, max_relative = 1e-2);
    }

    #[test]
    fn degenerate_reference_is_flagged() {
        let r = RepTuple::trivial(fibonacci(), Manifold::interval());
        let res = linearization_residual(&r, &Word::power_of(1, 3), 0.4).unwrap();
        assert!(!res.degenerate && res.eta_hat.is_none());
        assert!(linearization_residual(&r, &Word::identity(), 0.4).is_err());
    }

    #[test]
    fn inverse_displacement_identity() {
        let r = rep_of(GallerySpec::CommutingFlow { eps: 0.05, c: Some(vec![1.0, 0.4]), t_eps: None }, Manifold::interval());
        for g in 0..3 {
            let w = Word::generator(g);
            for k in 0..=20 {
                let x = k as f64 / 20.0;
                let gx = r.eval_word(&w, x);
                let back = word_displacement(&r, &w.inverse(), gx);
                let fwd = word_displacement(&r, &w, x);
                assert!((fwd[0] + back[0]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reductions_on_trivial_h_vanish() {
        let r = rep_of(GallerySpec::TrivialH { t: None }, Manifold::interval());
        for rep in check_reduction(&r, 0.4, 0.3) {
            assert!(rep.holds);
            assert_eq!(rep.lhs, 0.0);
        }
        let mc = check_mccarthy(&r, 0.4, 0.3).unwrap();
        assert!(mc.report.holds && mc.report.lhs == 0.0 && mc.report.rhs == 0.0);
    }

    #[test]
    fn eta_prime_formula() {
        assert_relative_eq!(admissible_eta_prime(0.3, 2, 1), 0.3 / 18.0, max_relative = 1e-14);
    }

    #[test]
    fn mccarthy_rejects_eta_out_of_range() {
        let r = bump(0.01);
        assert!(check_mccarthy(&r, 0.5, 1.0 / 3.0).is_err());
        assert!(check_mccarthy(&r, 0.5, 0.0).is_err());
    }

    #[test]
    fn report_invariant() {
        let r = InequalityReport::new(InequalityName::Red1, 1.0, 0.5, 0.6);
        assert!(r.holds && !r.decisive && r.budget_dependent());
        assert_relative_eq!(r.slack, 0.1, epsilon = 1e-15);
        let r = InequalityReport::new(InequalityName::Red1, 1.0, 0.5, 0.0);
        assert!(!r.holds && r.decisive);
    }

    #[test]
    fn commuting_flow_reductions_reported() {
        let r = rep_of(GallerySpec::CommutingFlow { eps: 1e-3, c: None, t_eps: None }, Manifold::interval());
        let reports = check_reduction(&r, 0.5, 0.1);
        assert_eq!(reports.len(), 4);
        assert!(reports.iter().all(|r| r.defect_budget > 0.0));
    }
}
