//! Orbit iteration under the stable letter and certificate synthesis.
//!
//! A certificate either records that `H` acts trivially (up to tolerance),
//! or exhibits consecutive orbit steps on which the unstable (or stable)
//! part of the displacement matrix grows by at least `2(1 − η)` while the
//! linearization inequality holds, or names the constraint that blocked
//! both conclusions. The verdict is a pure function of the recorded trace.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::displacement::{
    admissible_eta_prime, check_eta, check_linearization, check_mccarthy, check_reduction, defect_budget,
    s0_displacement, InequalityName, InequalityReport, McCarthyReport,
};
use crate::error::Result;
use crate::hyperbolic::{analyze, is_hyperbolic, to_real, HyperbolicSplitting, P0Options, DEFAULT_HYPERBOLIC_TOL};
use crate::norms::max_abs;
use crate::representation::RepTuple;

/// Consecutive certified steps needed for a growth verdict.
pub const MIN_GROWTH_STEPS: usize = 3;
pub const DEFAULT_ETA: f64 = 0.3;
pub const DEFAULT_DEFECT_TOL: f64 = 1e-10;
pub const DEFAULT_STEPS: usize = 12;
/// Smallest seed scale the linear model rescales to, well above subnormals.
const MIN_SEED_LOG2: f64 = -990.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[serde(rename = "H_trivial")]
    HTrivial,
    GrowthWitnessed,
    HypothesisViolated,
    Inconclusive,
}

/// Which half of the splitting the orbit follows: `E⁺` under `t⁻¹`, or
/// `E⁻` under `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub eta: f64,
    pub n_steps: usize,
    pub defect_tol: f64,
    pub seed: u64,
    pub p_max: u32,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            n_steps: DEFAULT_STEPS,
            defect_tol: DEFAULT_DEFECT_TOL,
            seed: 0,
            p_max: crate::hyperbolic::DEFAULT_P_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupPoint {
    pub index: usize,
    pub x: f64,
    /// `max(‖π₊Δ‖, ‖π₋Δ‖)`.
    pub value: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitStep {
    pub step: usize,
    pub x: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub norm: f64,
    /// Growth of the followed component since the previous step.
    pub ratio: Option<f64>,
    /// Linearization inequality from the previous step to this one.
    pub mccarthy: Option<InequalityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub hypotheses: Vec<HypothesisCheck>,
    /// Power `p` with `A ← A^p`, `t ← t^p`.
    pub power: u32,
    pub grid_resolution: f64,
    pub grid_size: usize,
    /// `sup_z ‖Δ_z(S0)‖` over the grid.
    pub sup_s0: f64,
    pub sup_point: Option<SupPoint>,
    pub defect_aggregate: f64,
    pub defect_budget: f64,
    pub reductions: Vec<InequalityReport>,
    pub linearization: Vec<InequalityReport>,
    pub mccarthy: Option<McCarthyReport>,
    pub branch: Option<Branch>,
    pub orbit: Vec<OrbitStep>,
    pub orbit_stop: Option<String>,
    /// Orbit norms are the displacement times `2^orbit_scale_log2`; every
    /// other field is unscaled.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub orbit_scale_log2: i32,
}

fn is_zero(k: &i32) -> bool {
    *k == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub eta: f64,
    pub eta_prime: Option<f64>,
    pub p: u32,
    pub defect_tol: f64,
    pub n_steps: usize,
    /// `2(1 − η)`.
    pub growth_threshold: f64,
    pub min_growth_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub binding_constraint: Option<String>,
    pub params: CertificateParams,
    pub trace: Trace,
}

impl Certificate {
    /// Orbit trace as CSV.
    pub fn orbit_csv(&self) -> String {
        let mut out = String::from("step,x,norm_plus,norm_minus,ratio,mccarthy_lhs,mccarthy_rhs,holds\n");
        for s in &self.trace.orbit {
            let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{},{},{},{}\n",
                s.step,
                s.x,
                s.norm_plus,
                s.norm_minus,
                opt(s.ratio),
                opt(s.mccarthy.as_ref().map(|m| m.lhs)),
                opt(s.mccarthy.as_ref().map(|m| m.rhs)),
                s.mccarthy.as_ref().map_or(String::new(), |m| m.holds.to_string()),
            ));
        }
        out
    }

    /// Whether the stored verdict is the one its trace implies.
    pub fn is_consistent(&self) -> bool {
        derive_verdict(&self.trace, &self.params) == (self.verdict, self.binding_constraint.clone())
    }
}

/// A system whose `S0` displacement matrices can be sampled and moved along
/// the orbit of the stable letter (already raised to the working power).
pub trait OrbitModel: Sync {
    fn positions(&self) -> Vec<f64>;
    fn resolution(&self) -> f64;
    fn s0_displacement(&self, x: f64) -> DMatrix<f64>;
    /// `t⁻¹x` on the unstable branch, `tx` on the stable one.
    fn advance(&self, x: f64, branch: Branch) -> f64;
    fn defect_aggregate(&self) -> f64;
    fn defect_budget(&self) -> f64;
    /// Orbit iteration stops once `‖Δ‖` reaches this scale.
    fn displacement_cap(&self) -> f64;
    /// Displacements are reported times `2^k` for this `k`.
    fn scale_log2(&self) -> i32 {
        0
    }
    /// Reduction, linearization and first-order checks at a point.
    fn local_checks(&self, _x: f64, _eta: f64) -> LocalChecks {
        LocalChecks::default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LocalChecks {
    pub reductions: Vec<InequalityReport>,
    pub linearization: Vec<InequalityReport>,
    pub mccarthy: Option<McCarthyReport>,
}

/// A representation of `H ⋊_{ψ^p} ⟨t^p⟩` on a manifold grid.
pub struct RepModel {
    rep: RepTuple,
    t_inverse: crate::diffeo::Diffeo,
}

impl RepModel {
    pub fn new(rep: RepTuple) -> Self {
        let t_inverse = rep.stable().inverse();
        Self { rep, t_inverse }
    }

    pub fn rep(&self) -> &RepTuple {
        &self.rep
    }
}

impl OrbitModel for RepModel {
    fn positions(&self) -> Vec<f64> {
        self.rep.manifold.grid_points()
    }

    fn resolution(&self) -> f64 {
        self.rep.manifold.resolution()
    }

    fn s0_displacement(&self, x: f64) -> DMatrix<f64> {
        s0_displacement(&self.rep, x)
    }

    fn advance(&self, x: f64, branch: Branch) -> f64 {
        let f = match branch {
            Branch::Unstable => &self.t_inverse,
            Branch::Stable => self.rep.stable(),
        };
        f.eval(x)
    }

    fn defect_aggregate(&self) -> f64 {
        self.rep.defect.aggregate
    }

    fn defect_budget(&self) -> f64 {
        defect_budget(&self.rep)
    }

    fn displacement_cap(&self) -> f64 {
        self.rep.manifold.diameter()
    }

    fn local_checks(&self, x: f64, eta: f64) -> LocalChecks {
        let p = &self.rep.presentation;
        LocalChecks {
            reductions: check_reduction(&self.rep, x, eta),
            linearization: p
                .s0()
                .filter_map(|j| check_linearization(&self.rep, &p.psi[j], x, eta).ok())
                .collect(),
            mccarthy: check_mccarthy(&self.rep, x, eta).ok(),
        }
    }
}

/// Exact linear dynamics `Δ ↦ MΔ + E` with injected noise `E`, the
/// displacement model the growth argument is run on.
///
/// Positions are orbit indices. The noise obeys `‖E‖ ≤ η‖Δ‖` and
/// `‖πE‖ ≤ 2η‖πΔ‖` for both projections, where `π` is the projection onto
/// the followed subspace.
///
/// The dynamics are homogeneous, so when `n_steps` steps from the given seed
/// would overflow, the seed is first scaled down by `2^seed_scale_log2`
/// (exact; growth ratios are unchanged).
pub struct LinearModel {
    trajectory: Vec<DMatrix<f64>>,
    cap: f64,
    pub branch: Branch,
    pub seed_scale_log2: i32,
}

impl LinearModel {
    pub fn new(
        a_power: &DMatrix<f64>,
        split: &HyperbolicSplitting,
        seed_matrix: DMatrix<f64>,
        eta: f64,
        n_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let branch = branch_of(split, &seed_matrix);
        let (m, p, q) = match branch {
            Branch::Unstable => (a_power.clone(), &split.p_plus, &split.p_minus),
            Branch::Stable => {
                let inv = a_power.clone().try_inverse().ok_or(crate::error::LabError::SingularMonodromy)?;
                (inv, &split.p_minus, &split.p_plus)
            }
        };
        // Below the cap one more step, and its projections, cannot overflow.
        let d = m.nrows() as f64;
        let amp = d * max_abs(&m).max(1.0) * (1.0 + 2.0 * eta) * d * max_abs(p).max(max_abs(q)).max(1.0);
        let cap = f64::MAX / (16.0 * amp);
        let growth = m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(1.0, f64::max) * (1.0 + eta);
        let start = max_abs(&seed_matrix);
        let seed_scale_log2 = if start > 0.0 && start.is_finite() {
            let room = cap.log2() - 1.0 - n_steps as f64 * growth.log2();
            let target = room.max(MIN_SEED_LOG2);
            (target - start.log2()).floor().min(0.0) as i32
        } else {
            0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trajectory = vec![seed_matrix * 2f64.powi(seed_scale_log2)];
        for _ in 0..n_steps {
            let last = trajectory.last().expect("nonempty");
            if max_abs(last) >= cap {
                trajectory.push(last.clone());
                continue;
            }
            let (rows, cols) = last.shape();
            let e = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
            let followed = max_abs(&(p * last));
            let bounds = [
                eta * max_abs(last) / max_abs(&e),
                2.0 * eta * followed / max_abs(&(p * &e)),
                2.0 * eta * followed / max_abs(&(q * &e)),
            ];
            let scale = bounds.iter().copied().filter(|b| b.is_finite()).fold(f64::INFINITY, f64::min);
            let u: f64 = rng.random();
            let noise = if scale.is_finite() { e * (scale * u) } else { DMatrix::zeros(rows, cols) };
            trajectory.push(&m * last + noise);
        }
        Ok(Self { trajectory, cap, branch, seed_scale_log2 })
    }

    /// Seed `Δ₀ = π₊G₊·s₊ + π₋G₋·s₋` from seeded uniform random
    /// matrices, scaled so that `‖π₊Δ₀‖ ≈ s₊` and `‖π₋Δ₀‖ ≈ s₋`.
    pub fn seed_matrix(split: &HyperbolicSplitting, ambient: usize, plus: f64, minus: f64, seed: u64) -> DMatrix<f64> {
        let d = split.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut part = |p: &DMatrix<f64>, s: f64| {
            let g = DMatrix::from_fn(d, ambient, |_, _| rng.random_range(-1.0..1.0));
            let v = p * g;
            let n = max_abs(&v);
            if n > 0.0 && s > 0.0 { v * (s / n) } else { DMatrix::zeros(d, ambient) }
        };
        let a = part(&split.p_plus, plus);
        let b = part(&split.p_minus, minus);
        a + b
    }
}

impl OrbitModel for LinearModel {
    fn positions(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn resolution(&self) -> f64 {
        0.0
    }

    fn s0_displacement(&self, x: f64) -> DMatrix<f64> {
        self.trajectory[x as usize].clone()
    }

    fn advance(&self, x: f64, _branch: Branch) -> f64 {
        x + 1.0
    }

    fn defect_aggregate(&self) -> f64 {
        0.0
    }

    fn defect_budget(&self) -> f64 {
        0.0
    }

    fn displacement_cap(&self) -> f64 {
        self.cap
    }

    fn scale_log2(&self) -> i32 {
        self.seed_scale_log2
    }
}

fn branch_of(split: &HyperbolicSplitting, delta: &DMatrix<f64>) -> Branch {
    if max_abs(&(&split.p_plus * delta)) >= max_abs(&(&split.p_minus * delta)) {
        Branch::Unstable
    } else {
        Branch::Stable
    }
}

/// Grid argmax of `max(‖π₊Δ_z(S0)‖, ‖π₋Δ_z(S0)‖)`, lowest index on ties;
/// also returns `sup_z ‖Δ_z(S0)‖`.
pub fn find_sup_point(model: &dyn OrbitModel, split: &HyperbolicSplitting) -> (SupPoint, f64) {
    let positions = model.positions();
    let values: Vec<(f64, f64, f64)> = positions
        .par_iter()
        .map(|&x| {
            let delta = model.s0_displacement(x);
            (max_abs(&(&split.p_plus * &delta)), max_abs(&(&split.p_minus * &delta)), max_abs(&delta))
        })
        .collect();
    let mut best = SupPoint { index: 0, x: positions[0], value: -1.0, norm_plus: 0.0, norm_minus: 0.0 };
    let mut sup = 0.0f64;
    for (i, &(plus, minus, total)) in values.iter().enumerate() {
        sup = sup.max(total);
        let v = plus.max(minus);
        if v > best.value {
            best = SupPoint { index: i, x: positions[i], value: v, norm_plus: plus, norm_minus: minus };
        }
    }
    (best, sup)
}

/// Follows `x ↦ t∓¹x` from `x0`, recording projected norms, growth ratios
/// and the linearization inequality between consecutive points.
pub fn iterate_orbit(
    model: &dyn OrbitModel,
    split: &HyperbolicSplitting,
    a_power: &DMatrix<f64>,
    branch: Branch,
    x0: f64,
    eta: f64,
    n_steps: usize,
) -> Result<(Vec<OrbitStep>, String)> {
    let step_matrix = match branch {
        Branch::Unstable => a_power.clone(),
        Branch::Stable => a_power.clone().try_inverse().ok_or(crate::error::LabError::SingularMonodromy)?,
    };
    let budget = model.defect_budget();
    let followed = |plus: f64, minus: f64| match branch {
        Branch::Unstable => plus,
        Branch::Stable => minus,
    };

    let mut x = x0;
    let mut delta = model.s0_displacement(x);
    let mut steps = vec![OrbitStep {
        step: 0,
        x,
        norm_plus: max_abs(&(&split.p_plus * &delta)),
        norm_minus: max_abs(&(&split.p_minus * &delta)),
        norm: max_abs(&delta),
        ratio: None,
        mccarthy: None,
    }];
    for j in 1..=n_steps {
        if max_abs(&delta) >= model.displacement_cap() {
            return Ok((steps, "displacement reached the model's scale cap".into()));
        }
        let prev = steps.last().expect("nonempty").clone();
        x = model.advance(x, branch);
        let next = model.s0_displacement(x);
        let mc = InequalityReport::new(
            InequalityName::Mccarthy,
            max_abs(&(&next - &step_matrix * &delta)),
            eta * max_abs(&delta),
            budget,
        );
        let norm_plus = max_abs(&(&split.p_plus * &next));
        let norm_minus = max_abs(&(&split.p_minus * &next));
        let before = followed(prev.norm_plus, prev.norm_minus);
        steps.push(OrbitStep {
            step: j,
            x,
            norm_plus,
            norm_minus,
            norm: max_abs(&next),
            ratio: (before > 0.0).then(|| followed(norm_plus, norm_minus) / before),
            mccarthy: Some(mc),
        });
        delta = next;
    }
    Ok((steps, "step limit".into()))
}

/// Verdict and binding constraint implied by a trace.
pub fn derive_verdict(trace: &Trace, params: &CertificateParams) -> (Verdict, Option<String>) {
    if let Some(h) = trace.hypotheses.iter().find(|h| !h.holds) {
        return (Verdict::HypothesisViolated, Some(format!("{}: {}", h.name, h.detail)));
    }
    if trace.sup_s0 <= params.defect_tol {
        return (Verdict::HTrivial, None);
    }

    let followed = |s: &OrbitStep| match trace.branch {
        Some(Branch::Stable) => s.norm_minus,
        _ => s.norm_plus,
    };
    let mut run = 0usize;
    let mut best = 0usize;
    for w in trace.orbit.windows(2) {
        let certified = w[1].mccarthy.as_ref().is_some_and(|m| m.holds && m.decisive)
            && w[1].ratio.is_some_and(|r| r >= params.growth_threshold)
            && followed(&w[0]) > params.defect_tol * 2f64.powi(trace.orbit_scale_log2);
        run = if certified { run + 1 } else { 0 };
        best = best.max(run);
    }
    if best >= params.min_growth_steps {
        return (Verdict::GrowthWitnessed, None);
    }

    let orbit_reports = trace.orbit.iter().filter_map(|s| s.mccarthy.as_ref());
    let point_reports = trace.mccarthy.iter().map(|m| &m.report);
    let all: Vec<&InequalityReport> = trace
        .reductions
        .iter()
        .chain(&trace.linearization)
        .chain(point_reports)
        .chain(orbit_reports.clone())
        .collect();
    let binding = if all.iter().any(|r| r.defect_budget > 0.0 && r.budget_dependent()) {
        "relation defect".to_string()
    } else if orbit_reports.clone().chain(trace.mccarthy.iter().map(|m| &m.report)).any(|r| !r.holds) {
        "mccarthy inequality".to_string()
    } else if let Some(r) = trace.reductions.iter().find(|r| !r.holds) {
        format!("reduction lemma {}", serde_name(r.name))
    } else if trace.orbit.len() <= params.min_growth_steps {
        "orbit too short".to_string()
    } else {
        "growth ratio below 2(1-eta)".to_string()
    };
    (Verdict::Inconclusive, Some(binding))
}

fn serde_name(name: InequalityName) -> &'static str {
    match name {
        InequalityName::Red1 => "red1",
        InequalityName::Red2 => "red2",
        InequalityName::Red3 => "red3",
        InequalityName::Red4 => "red4",
        InequalityName::Mccarthy => "mccarthy",
        InequalityName::Bonatti => "bonatti",
        InequalityName::Growth => "growth",
    }
}

fn hypotheses(a: &DMatrix<i64>, eta: f64) -> Vec<HypothesisCheck> {
    let h = is_hyperbolic(&to_real(a), DEFAULT_HYPERBOLIC_TOL);
    vec![
        HypothesisCheck {
            name: "eta range".into(),
            holds: check_eta(eta).is_ok(),
            detail: format!("eta = {eta}, required in (0, 1/3)"),
        },
        HypothesisCheck {
            name: "psi* hyperbolic".into(),
            holds: h.hyperbolic,
            detail: format!("psi* not hyperbolic unless margin > 0; spectral margin {:e}", h.margin),
        },
    ]
}

fn params_for(params: &CertifyParams, p: u32, eta_prime: Option<f64>) -> CertificateParams {
    CertificateParams {
        eta: params.eta,
        eta_prime,
        p,
        defect_tol: params.defect_tol,
        n_steps: params.n_steps,
        growth_threshold: 2.0 * (1.0 - params.eta),
        min_growth_steps: MIN_GROWTH_STEPS,
    }
}

fn empty_trace(hypotheses: Vec<HypothesisCheck>) -> Trace {
    Trace {
        hypotheses,
        power: 1,
        grid_resolution: 0.0,
        grid_size: 0,
        sup_s0: 0.0,
        sup_point: None,
        defect_aggregate: 0.0,
        defect_budget: 0.0,
        reductions: vec![],
        linearization: vec![],
        mccarthy: None,
        branch: None,
        orbit: vec![],
        orbit_stop: None,
        orbit_scale_log2: 0,
    }
}

fn finish(trace: Trace, params: CertificateParams) -> Certificate {
    let (verdict, binding_constraint) = derive_verdict(&trace, &params);
    Certificate { verdict, binding_constraint, params, trace }
}

/// Hypotheses and splitting for `A`; `Err` carries the early certificate.
fn prepare(a: &DMatrix<i64>, params: &CertifyParams) -> std::result::Result<(Vec<HypothesisCheck>, HyperbolicSplitting), Box<Certificate>> {
    let mut checks = hypotheses(a, params.eta);
    if checks.iter().any(|h| !h.holds) {
        return Err(Box::new(finish(empty_trace(checks), params_for(params, 1, None))));
    }
    let opts = P0Options { p_max: params.p_max, seed: params.seed, safety: crate::hyperbolic::CONTRACTION_SAFETY };
    match analyze(&to_real(a), opts) {
        Ok(split) => Ok((checks, split)),
        Err(e) => {
            checks.push(HypothesisCheck { name: "p0 witness".into(), holds: false, detail: e.to_string() });
            Err(Box::new(finish(empty_trace(checks), params_for(params, 1, None))))
        }
    }
}

/// Runs the scan / local checks / orbit pipeline on a prepared model.
pub fn certify_model(
    model: &dyn OrbitModel,
    split: &HyperbolicSplitting,
    a_power: &DMatrix<f64>,
    hypotheses: Vec<HypothesisCheck>,
    params: &CertifyParams,
    p: u32,
    eta_prime: Option<f64>,
) -> Result<Certificate> {
    let (mut sup_point, mut sup_s0) = find_sup_point(model, split);
    let unscale = 2f64.powi(-model.scale_log2());
    sup_s0 *= unscale;
    sup_point.value *= unscale;
    sup_point.norm_plus *= unscale;
    sup_point.norm_minus *= unscale;
    let local = model.local_checks(sup_point.x, params.eta);
    let mut trace = Trace {
        hypotheses,
        power: p,
        grid_resolution: model.resolution(),
        grid_size: model.positions().len(),
        sup_s0,
        sup_point: Some(sup_point.clone()),
        defect_aggregate: model.defect_aggregate(),
        defect_budget: model.defect_budget(),
        reductions: local.reductions,
        linearization: local.linearization,
        mccarthy: local.mccarthy,
        branch: None,
        orbit: vec![],
        orbit_stop: None,
        orbit_scale_log2: model.scale_log2(),
    };
    if sup_s0 > params.defect_tol {
        let branch = if sup_point.norm_plus >= sup_point.norm_minus { Branch::Unstable } else { Branch::Stable };
        let (orbit, stop) = iterate_orbit(model, split, a_power, branch, sup_point.x, params.eta, params.n_steps)?;
        trace.branch = Some(branch);
        trace.orbit = orbit;
        trace.orbit_stop = Some(stop);
    }
    Ok(finish(trace, params_for(params, p, eta_prime)))
}

/// Certificate for a representation, after the power substitution that
/// makes one application of `A` expand `E⁺` and contract `E⁻` by 2.
pub fn certify(rep: &RepTuple, params: &CertifyParams) -> Result<Certificate> {
    let (checks, split) = match prepare(rep.presentation.monodromy(), params) {
        Ok(v) => v,
        Err(cert) => return Ok(*cert),
    };
    let p = split.p0().unwrap_or(1);
    let powered = if p > 1 { rep.power_substitution(p)? } else { rep.clone() };
    let a_power = to_real(powered.presentation.monodromy());
    let eta_prime = Some(admissible_eta_prime(params.eta, powered.presentation.d, powered.presentation.a_norm()));
    let model = RepModel::new(powered);
    certify_model(&model, &split, &a_power, checks, params, p, eta_prime)
}

/// Hyperbolic analysis of an integer monodromy, shared by every linear-model
/// certificate for that matrix.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DMatrix<i64>,
    analysis: std::result::Result<HyperbolicSplitting, HypothesisCheck>,
}

impl LinearSystem {
    /// Splits `a` and finds `p0` with the sampling seed `seed`.
    pub fn new(a: &DMatrix<i64>, p_max: u32, seed: u64) -> Self {
        let real = to_real(a);
        let analysis = if !is_hyperbolic(&real, DEFAULT_HYPERBOLIC_TOL).hyperbolic {
            Err(HypothesisCheck { name: "psi* hyperbolic".into(), holds: false, detail: String::new() })
        } else {
            let opts = P0Options { p_max, seed, safety: crate::hyperbolic::CONTRACTION_SAFETY };
            analyze(&real, opts).map_err(|e| HypothesisCheck { name: "p0 witness".into(), holds: false, detail: e.to_string() })
        };
        Self { a: a.clone(), analysis }
    }

    pub fn splitting(&self) -> Option<&HyperbolicSplitting> {
        self.analysis.as_ref().ok()
    }

    /// Certificate for the model seeded with `‖π₊Δ₀‖ = plus` and
    /// `‖π₋Δ₀‖ = minus` in `ambient` columns.
    pub fn certify(&self, ambient: usize, plus: f64, minus: f64, params: &CertifyParams) -> Result<Certificate> {
        let mut checks = hypotheses(&self.a, params.eta);
        let split = match (&self.analysis, checks.iter().all(|h| h.holds)) {
            (Ok(split), true) => split,
            (Err(failure), true) => {
                checks.push(failure.clone());
                return Ok(finish(empty_trace(checks), params_for(params, 1, None)));
            }
            (_, false) => return Ok(finish(empty_trace(checks), params_for(params, 1, None))),
        };
        let p = split.p0().unwrap_or(1);
        let a_power = to_real(&self.a).pow(p);
        let seed = LinearModel::seed_matrix(split, ambient, plus, minus, params.seed);
        let model = LinearModel::new(&a_power, split, seed, params.eta, params.n_steps, params.seed ^ 0x5eed)?;
        let a_norm = a_power.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eta_prime = admissible_eta_prime(params.eta, self.a.nrows(), a_norm.round() as i64);
        certify_model(&model, split, &a_power, checks, params, p, Some(eta_prime))
    }
}

/// Certificate for the synthetic linear model seeded with `‖π₊Δ₀‖ = plus`
/// and `‖π₋Δ₀‖ = minus` in `ambient` columns.
pub fn certify_linear(
    a: &DMatrix<i64>,
    ambient: usize,
    plus: f64,
    minus: f64,
    params: &CertifyParams,
) -> Result<Certificate> {
    LinearSystem::new(a, params.p_max, params.seed).certify(ambient, plus, minus, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::Manifold;
    use crate::presentation::{PresentationSpec, SemidirectPresentation};
    use crate::representation::{gallery, scale_family, GalleryAction, GallerySpec, ScaleBuilder};
    use crate::words::GroupClass;

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

    fn rep_of(spec: GallerySpec) -> RepTuple {
        match gallery(&spec, fibonacci(), Manifold::interval().with_grid(512)).unwrap() {
            GalleryAction::Rep(r) => *r,
            GalleryAction::C0(_) => unreachable!(),
        }
    }

    fn m(rows: usize, v: &[i64]) -> DMatrix<i64> {
        DMatrix::from_row_slice(rows, rows, v)
    }

    #[test]
    fn trivial_h_is_certified_trivial() {
        let cert = certify(&rep_of(GallerySpec::TrivialH { t: None }), &CertifyParams::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::HTrivial);
        assert_eq!(cert.params.p, 2);
        assert!(cert.trace.reductions.iter().all(|r| r.holds && r.lhs == 0.0));
        assert!(cert.is_consistent());
    }

    #[test]
    fn unipotent_violates_hypothesis() {
        let p = SemidirectPresentation::free_abelian_from_matrix(&m(2, &[1, 1, 0, 1])).unwrap();
        let rep = RepTuple::trivial(p, Manifold::interval().with_grid(64));
        let cert = certify(&rep, &CertifyParams::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::HypothesisViolated);
        assert!(cert.binding_constraint.unwrap().contains("not hyperbolic"));
    }

    #[test]
    fn eta_out_of_range_violates_hypothesis() {
        let rep = rep_of(GallerySpec::TrivialH { t: None });
        let cert = certify(&rep, &CertifyParams { eta: 0.4, ..Default::default() }).unwrap();
        assert_eq!(cert.verdict, Verdict::HypothesisViolated);
    }

    #[test]
    fn sup_point_of_single_bump_is_half() {
        let rep = scale_family(&ScaleBuilder::Bump, fibonacci(), Manifold::interval().with_grid(512), 0.01).unwrap();
        let split = analyze(&to_real(rep.presentation.monodromy()), P0Options::default()).unwrap();
        let (sup, _) = find_sup_point(&RepModel::new(rep), &split);
        assert_eq!(sup.x, 0.5);
    }

    #[test]
    fn sup_point_of_trivial_is_first() {
        let rep = RepTuple::trivial(fibonacci(), Manifold::interval().with_grid(64));
        let split = analyze(&to_real(rep.presentation.monodromy()), P0Options::default()).unwrap();
        let (sup, total) = find_sup_point(&RepModel::new(rep), &split);
        assert_eq!((sup.index, sup.value, total), (0, 0.0, 0.0));
    }

    // x⁴ − 3x³ − 3x² + 3 has roots of modulus 1.0042, so p0 is in the
    // hundreds and one step multiplies by ~1e147: the orbit only fits f64
    // after rescaling the seed
    #[test]
    fn huge_power_orbit_is_rescaled() {
        let a = DMatrix::from_row_slice(4, 4, &[0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, -3, 0, 3, 3]);
        let params = CertifyParams { eta: 0.05, ..CertifyParams::default() };
        let cert = certify_linear(&a, 1, 1.0, 0.5, &params).unwrap();
        assert_eq!(cert.verdict, Verdict::GrowthWitnessed, "{:?}", cert.binding_constraint);
        assert!(cert.params.p > 100);
        assert!(cert.trace.orbit_scale_log2 < -300);
        assert!((cert.trace.sup_s0 - 1.0).abs() < 0.5, "sup reported unscaled: {}", cert.trace.sup_s0);
        assert!(cert.trace.orbit.iter().all(|s| s.norm.is_finite()));
        let (v, b) = derive_verdict(&cert.trace, &cert.params);
        assert_eq!((v, b), (cert.verdict, cert.binding_constraint.clone()));
    }

    #[test]
    fn commuting_flow_is_never_trivial() {
        let rep = rep_of(GallerySpec::CommutingFlow { eps: 1e-2, c: None, t_eps: None });
        let cert = certify(&rep, &CertifyParams::default()).unwrap();
        assert!(matches!(cert.verdict, Verdict::Inconclusive | Verdict::GrowthWitnessed));
        if cert.verdict == Verdict::Inconclusive {
            assert!(cert.binding_constraint.is_some());
        }
        assert!(cert.is_consistent());
    }

    #[test]
    fn linear_model_growth_and_zero_seed() {
        for a in [m(2, &[2, 1, 1, 1]), m(2, &[0, 1, 1, 1]), m(1, &[-3]), m(2, &[3, 0, 0, -2])] {
            for eta in [0.05, 0.3] {
                let params = CertifyParams { eta, ..Default::default() };
                let cert = certify_linear(&a, 2, 1.0, 0.5, &params).unwrap();
                assert_eq!(cert.verdict, Verdict::GrowthWitnessed, "{a} {eta}");
                for s in &cert.trace.orbit[1..] {
                    assert!(s.ratio.unwrap() >= 2.0 * (1.0 - eta));
                }
                let zero = certify_linear(&a, 2, 0.0, 0.0, &params).unwrap();
                assert_eq!(zero.verdict, Verdict::HTrivial);
            }
        }
    }

    #[test]
    fn verdict_is_rederivable_and_csv_has_header() {
        let cert = certify_linear(&m(2, &[2, 1, 1, 1]), 1, 1.0, 0.0, &CertifyParams::default()).unwrap();
        assert!(cert.is_consistent());
        let csv = cert.orbit_csv();
        assert!(csv.starts_with("step,x,norm_plus,norm_minus,ratio,mccarthy_lhs,mccarthy_rhs,holds\n"));
        assert_eq!(csv.lines().count(), cert.trace.orbit.len() + 1);
        let mut tampered = cert.clone();
        tampered.verdict = Verdict::HTrivial;
        assert!(!tampered.is_consistent());
    }
}
