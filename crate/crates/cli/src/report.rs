//! Constants and splitting reports.

use nalgebra::{DMatrix, Scalar};
use rigidity_core::hyperbolic::{self, is_hyperbolic, P0Options, P0Witness, DEFAULT_HYPERBOLIC_TOL};
use rigidity_core::presentation::SemidirectPresentation;
use serde::{Deserialize, Serialize};

pub fn rows<T: Scalar + Copy>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub group_class: String,
    pub generators: Vec<String>,
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub a_norm: i64,
    #[serde(rename = "K")]
    pub k_torsion: i64,
    pub k0: i64,
    pub k: i64,
    pub tau: Vec<String>,
    pub s_prime: Vec<(String, String)>,
    pub relators: Vec<String>,
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub hyperbolic: bool,
    pub spectral_margin: f64,
    /// `None` when the monodromy is not hyperbolic.
    pub p0: Option<u32>,
    pub p0_witness: Option<P0Witness>,
    pub p0_error: Option<String>,
}

pub fn constants_report(p: &SemidirectPresentation, opts: P0Options) -> ConstantsReport {
    let a = hyperbolic::to_real(p.monodromy());
    let hyp = is_hyperbolic(&a, DEFAULT_HYPERBOLIC_TOL);
    let (witness, error) = if hyp.hyperbolic {
        match hyperbolic::analyze(&a, opts) {
            Ok(split) => (split.p0, None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("psi* not hyperbolic".to_string()))
    };
    let mut eigenvalues: Vec<[f64; 2]> = hyperbolic::eigenvalues(&a).iter().map(|z| [z.re, z.im]).collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    ConstantsReport {
        group_class: serde_json::to_value(p.group_class).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        generators: p.alphabet.names().to_vec(),
        d: p.d,
        a: rows(p.monodromy()),
        a_norm: p.a_norm(),
        k_torsion: p.derived.k_torsion,
        k0: p.derived.k0,
        k: p.derived.k,
        tau: p.derived.tau.iter().map(|w| p.alphabet.format(w)).collect(),
        s_prime: p.s_prime().into_iter().map(|(name, w)| (name, p.format_extended(&w))).collect(),
        relators: p.relators().into_iter().map(|r| r.name).collect(),
        eigenvalues,
        hyperbolic: hyp.hyperbolic,
        spectral_margin: hyp.margin,
        p0: witness.as_ref().map(|w| w.p0),
        p0_witness: witness,
        p0_error: error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub hyperbolic: bool,
    pub spectral_margin: f64,
    pub dim_plus: usize,
    pub dim_minus: usize,
    pub e_plus: Vec<Vec<f64>>,
    pub e_minus: Vec<Vec<f64>>,
    pub p_plus: Vec<Vec<f64>>,
    pub p_minus: Vec<Vec<f64>>,
    /// `‖A P₊ − P₊ A‖∞`.
    pub commutator_defect: f64,
    /// `‖P₊ + P₋ − I‖∞`.
    pub projection_defect: f64,
    pub p0: Option<u32>,
    pub p0_witness: Option<P0Witness>,
    pub norm: String,
    pub error: Option<String>,
}

pub fn splitting_report(p: &SemidirectPresentation, opts: P0Options) -> SplittingReport {
    let a = hyperbolic::to_real(p.monodromy());
    let hyp = is_hyperbolic(&a, DEFAULT_HYPERBOLIC_TOL);
    let empty = |a: &DMatrix<f64>, error: String| SplittingReport {
        a: rows(a),
        hyperbolic: hyp.hyperbolic,
        spectral_margin: hyp.margin,
        dim_plus: 0,
        dim_minus: 0,
        e_plus: vec![],
        e_minus: vec![],
        p_plus: vec![],
        p_minus: vec![],
        commutator_defect: 0.0,
        projection_defect: 0.0,
        p0: None,
        p0_witness: None,
        norm: String::new(),
        error: Some(error),
    };
    if !hyp.hyperbolic {
        return empty(&a, "psi* not hyperbolic".into());
    }
    let split = match hyperbolic::invariant_splitting(&a) {
        Ok(s) => s,
        Err(e) => return empty(&a, e.to_string()),
    };
    let (witness, error) = match hyperbolic::compute_p0(&split, opts) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    SplittingReport {
        a: rows(&split.a),
        hyperbolic: true,
        spectral_margin: split.margin,
        dim_plus: split.dim_plus(),
        dim_minus: split.dim_minus(),
        e_plus: rows(&split.e_plus),
        e_minus: rows(&split.e_minus),
        p_plus: rows(&split.p_plus),
        p_minus: rows(&split.p_minus),
        commutator_defect: split.commutator_defect(),
        projection_defect: split.projection_defect(),
        p0: witness.as_ref().map(|w| w.p0),
        p0_witness: witness,
        norm: split.norm_tag.clone(),
        error,
    }
}
