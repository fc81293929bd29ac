//! Orchestration of the subcommands: each writes a run directory and
//! returns a short summary for the terminal.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rigidity_core::certificate::{certify, derive_verdict, Certificate, CertifyParams, Verdict};
use rigidity_core::displacement::linearization_residual;
use rigidity_core::hyperbolic::{P0Options, CONTRACTION_SAFETY};
use rigidity_core::representation::{
    distance_to_trivial, gallery, scale_family, GalleryAction, GallerySpec, RepTuple, ScaleBuilder,
};
use rigidity_core::words::Word;
use serde::{Deserialize, Serialize};

use crate::artifacts::{to_json, ArtifactWriter, Manifest};
use crate::config::{ActionConfig, Experiment};
use crate::plot::emit_plot;
use crate::report::{constants_report, splitting_report};

pub const CONFIG_ECHO: &str = "config.json";
pub const CERTIFICATE: &str = "certificate.json";
pub const ORBIT_CSV: &str = "orbit.csv";

pub fn p0_options(exp: &Experiment, seed: u64) -> P0Options {
    P0Options { p_max: exp.config.analysis.p_max, seed, safety: CONTRACTION_SAFETY }
}

pub fn certify_params(exp: &Experiment, seed: u64) -> CertifyParams {
    let a = &exp.config.analysis;
    CertifyParams { eta: a.eta, n_steps: a.n_steps, defect_tol: a.defect_tol, seed, p_max: a.p_max }
}

pub fn build_action(exp: &Experiment) -> Result<GalleryAction> {
    Ok(match &exp.config.action {
        ActionConfig::Gallery { gallery: spec } => gallery(spec, exp.presentation.clone(), exp.manifold)
            .with_context(|| format!("building the `{}` gallery action", gallery_name(spec)))?,
        ActionConfig::Images { images } => GalleryAction::Rep(Box::new(
            RepTuple::from_literals(exp.presentation.clone(), exp.manifold, images)
                .context("building the action from explicit images")?,
        )),
    })
}

fn gallery_name(spec: &GallerySpec) -> String {
    serde_json::to_value(spec).ok().and_then(|v| v["name"].as_str().map(String::from)).unwrap_or_default()
}

fn write_common(w: &mut ArtifactWriter, exp: &Experiment, seed: u64) -> Result<()> {
    let mut echo = exp.config.clone();
    echo.seed = seed;
    w.write_json(CONFIG_ECHO, &echo)?;
    w.write_json("constants.json", &constants_report(&exp.presentation, p0_options(exp, seed)))
}

/// Certificate, its orbit CSV and (optionally) the orbit chart under `prefix`.
fn write_certificate(w: &mut ArtifactWriter, prefix: &str, cert: &Certificate, plots: bool) -> Result<()> {
    w.write_json(&format!("{prefix}{CERTIFICATE}"), cert)?;
    let csv = cert.orbit_csv();
    w.write(&format!("{prefix}{ORBIT_CSV}"), csv.as_bytes())?;
    if plots && cert.trace.orbit.len() >= 2 {
        w.write(&format!("{prefix}orbit.svg"), emit_plot(&csv)?.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub out: String,
    pub verdict: Option<Verdict>,
    pub binding_constraint: Option<String>,
    /// Faithfulness verdict for `C⁰` exhibits, which carry no certificate.
    pub ping_pong_faithful: Option<bool>,
    pub files: usize,
}

pub fn run_constants(exp: &Experiment, out: &Path, seed: u64) -> Result<Manifest> {
    let mut w = ArtifactWriter::create(out)?;
    write_common(&mut w, exp, seed)?;
    w.finish()
}

pub fn run_splitting(exp: &Experiment, out: &Path, seed: u64) -> Result<Manifest> {
    let mut w = ArtifactWriter::create(out)?;
    write_common(&mut w, exp, seed)?;
    w.write_json("splitting.json", &splitting_report(&exp.presentation, p0_options(exp, seed)))?;
    w.finish()
}

/// constants → splitting → action → analysis → certificate.
pub fn run_certify(exp: &Experiment, out: &Path, seed: u64) -> Result<RunSummary> {
    let mut w = ArtifactWriter::create(out)?;
    write_common(&mut w, exp, seed)?;
    w.write_json("splitting.json", &splitting_report(&exp.presentation, p0_options(exp, seed)))?;
    let (verdict, binding, faithful) = match build_action(exp)? {
        GalleryAction::Rep(rep) => {
            w.write_json("rep.json", &rep.summary())?;
            let cert = certify(&rep, &certify_params(exp, seed)).context("certifying")?;
            write_certificate(&mut w, "", &cert, exp.config.analysis.plots)?;
            (Some(cert.verdict), cert.binding_constraint, None)
        }
        GalleryAction::C0(c0) => {
            w.write_json("pingpong.json", &c0)?;
            (None, None, Some(c0.certificate.faithful))
        }
    };
    let manifest = w.finish()?;
    Ok(RunSummary {
        name: exp.config.name.clone(),
        out: out.display().to_string(),
        verdict,
        binding_constraint: binding,
        ping_pong_faithful: faithful,
        files: manifest.files.len() + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub rep_distance: f64,
    pub defect: f64,
    pub verdict: Verdict,
    /// Largest `residual / reference` over the residual word and the
    /// certificate's linearization checks.
    pub max_eta_hat: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub builder: ScaleBuilder,
    pub residual_word: String,
    pub residual_point: f64,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log residual` against `log ε`; needs two
    /// points with a positive residual.
    pub slope: Option<f64>,
}

pub fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        bail!("configuration field `analysis.eps_sweep`: a sweep needs at least one eps");
    }
    if let Some(w) = eps.windows(2).find(|w| w[1] >= w[0]) {
        bail!("configuration field `analysis.eps_sweep`: eps must strictly decrease ({} then {})", w[0], w[1]);
    }
    Ok(())
}

pub fn sweep_builder(exp: &Experiment) -> Result<ScaleBuilder> {
    match &exp.config.action {
        ActionConfig::Gallery { gallery: GallerySpec::Bump { .. } } => Ok(ScaleBuilder::Bump),
        ActionConfig::Gallery { gallery: GallerySpec::CommutingFlow { c, .. } } => {
            Ok(ScaleBuilder::CommutingFlow { c: c.clone() })
        }
        _ => bail!("configuration field `action`: sweep needs a `bump` or `commuting_flow` gallery action"),
    }
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run_sweep(exp: &Experiment, out: &Path, seed: u64) -> Result<SweepSummary> {
    let analysis = &exp.config.analysis;
    check_eps_list(&analysis.eps_sweep)?;
    let builder = sweep_builder(exp)?;
    let word = if analysis.residual_word.trim().is_empty() {
        Word::power_of(0, 2)
    } else {
        exp.presentation
            .alphabet
            .parse(&analysis.residual_word)
            .context("configuration field `analysis.residual_word`")?
    };
    let word_text = exp.presentation.alphabet.format(&word);
    let params = certify_params(exp, seed);

    let mut w = ArtifactWriter::create(out)?;
    write_common(&mut w, exp, seed)?;
    let mut points = Vec::with_capacity(analysis.eps_sweep.len());
    for (i, &eps) in analysis.eps_sweep.iter().enumerate() {
        let rep = scale_family(&builder, exp.presentation.clone(), exp.manifold, eps)
            .with_context(|| format!("building the family member at eps = {eps}"))?;
        let residual = linearization_residual(&rep, &word, analysis.residual_point)?;
        let cert = certify(&rep, &params).with_context(|| format!("certifying at eps = {eps}"))?;
        let prefix = format!("eps_{i:02}/");
        w.write_json(&format!("{prefix}rep.json"), &rep.summary())?;
        write_certificate(&mut w, &prefix, &cert, analysis.plots)?;
        let cert_eta = cert
            .trace
            .linearization
            .iter()
            .filter(|r| r.rhs > 0.0)
            .map(|r| r.lhs * cert.params.eta / r.rhs);
        let max_eta_hat = residual.eta_hat.into_iter().chain(cert_eta).reduce(f64::max);
        points.push(SweepPoint {
            eps,
            rep_distance: distance_to_trivial(&rep),
            defect: rep.defect.aggregate,
            verdict: cert.verdict,
            max_eta_hat,
            residual: residual.residual,
        });
    }
    let slope = log_log_slope(&points.iter().map(|p| (p.eps, p.residual)).collect::<Vec<_>>());

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["eps", "rep_distance", "defect", "verdict", "max_eta_hat", "residual"])?;
    for p in &points {
        let verdict = serde_json::to_value(p.verdict)?.as_str().unwrap_or_default().to_string();
        csv.write_record([
            format!("{:e}", p.eps),
            format!("{:e}", p.rep_distance),
            format!("{:e}", p.defect),
            verdict,
            p.max_eta_hat.map_or(String::new(), |v| format!("{v:e}")),
            format!("{:e}", p.residual),
        ])?;
    }
    w.write("summary.csv", &csv.into_inner().context("flushing summary.csv")?)?;

    let summary = SweepSummary {
        name: exp.config.name.clone(),
        builder,
        residual_word: word_text,
        residual_point: analysis.residual_point,
        points,
        slope,
    };
    w.write_json("sweep.json", &summary)?;
    w.finish()?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub path: String,
    pub verdict: Verdict,
    /// The stored verdict and binding constraint are the ones the trace implies.
    pub consistent: bool,
    /// Re-serializing the re-derived certificate reproduces the file.
    pub identical: bool,
    /// The sibling orbit CSV equals the one regenerated from the trace.
    pub orbit_csv_identical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub out: String,
    /// Files whose content no longer matches the manifest hash.
    pub hash_mismatches: Vec<String>,
    pub certificates: Vec<ReplayEntry>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.hash_mismatches.is_empty()
            && self.certificates.iter().all(|c| c.consistent && c.identical && c.orbit_csv_identical != Some(false))
    }
}

/// Re-derives every certificate listed in a run's manifest from its trace.
pub fn replay(out: &Path) -> Result<ReplayReport> {
    let manifest = Manifest::read(out)?;
    let mut report = ReplayReport { out: out.display().to_string(), hash_mismatches: vec![], certificates: vec![] };
    for entry in &manifest.files {
        let bytes = std::fs::read(out.join(&entry.path)).with_context(|| format!("reading {}", entry.path))?;
        if crate::artifacts::sha256_hex(&bytes) != entry.sha256 {
            report.hash_mismatches.push(entry.path.clone());
        }
        let Some(prefix) = entry.path.strip_suffix(CERTIFICATE) else { continue };
        let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", entry.path))?;
        let stored: Certificate =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", entry.path))?;
        let (verdict, binding_constraint) = derive_verdict(&stored.trace, &stored.params);
        let consistent = verdict == stored.verdict && binding_constraint == stored.binding_constraint;
        let rederived = Certificate { verdict, binding_constraint, params: stored.params, trace: stored.trace };
        let identical = to_json(&rederived)? == text;
        let csv_rel = format!("{prefix}{ORBIT_CSV}");
        let orbit_csv_identical = if manifest.files.iter().any(|e| e.path == csv_rel) {
            let stored_csv = std::fs::read_to_string(out.join(&csv_rel)).with_context(|| format!("reading {csv_rel}"))?;
            Some(stored_csv == rederived.orbit_csv())
        } else {
            None
        };
        report.certificates.push(ReplayEntry {
            path: entry.path.clone(),
            verdict,
            consistent,
            identical,
            orbit_csv_identical,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_lists() {
        assert!(check_eps_list(&[]).is_err());
        assert!(check_eps_list(&[1e-2]).is_ok());
        assert!(check_eps_list(&[1e-2, 1e-3]).is_ok());
        assert!(check_eps_list(&[1e-3, 1e-2]).is_err());
        assert!(check_eps_list(&[1e-2, 1e-2]).is_err());
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4].iter().map(|&e: &f64| (e, 7.0 * e * e)).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
        assert_eq!(log_log_slope(&[(1e-2, 0.0), (1e-3, 0.0)]), None);
    }
}
