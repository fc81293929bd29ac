//! Candidate representations of `G = H ⋊_ψ ⟨t⟩` given by generator images,
//! their relation defect, and the gallery of constructed actions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{c1_components, c1_distance, BumpShape, Diffeo, DiffeoLiteral, Manifold, ManifoldKind};
use crate::error::{LabError, Result};
use crate::homeo::{PingPongAction, PingPongCertificate, PingPongParams};
use crate::presentation::{RelatorKind, SemidirectPresentation, STABLE_LETTER};
use crate::words::{GroupClass, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatorDefect {
    pub name: String,
    pub kind: RelatorKind,
    /// `sup_x ‖ρ(r)(x) − x‖`.
    pub displacement: f64,
    /// `sup_x ‖D_x ρ(r) − 1‖`.
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDefect {
    pub relators: Vec<RelatorDefect>,
    pub aggregate: f64,
}

impl RelationDefect {
    /// Largest defect among relators of one kind.
    pub fn max_of(&self, kind: RelatorKind) -> f64 {
        self.relators
            .iter()
            .filter(|r| r.kind == kind)
            .fold(0.0f64, |m, r| m.max(r.displacement).max(r.derivative))
    }
}

/// Generator images for `S ∪ {t}` on one manifold.
#[derive(Debug, Clone)]
pub struct RepTuple {
    pub manifold: Manifold,
    pub presentation: SemidirectPresentation,
    /// Indexed by the extended alphabet: `S0`, `S1`, then `t`.
    images: Vec<Diffeo>,
    inverses: Vec<Diffeo>,
    pub defect: RelationDefect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepSummary {
    pub manifold: Manifold,
    pub images: BTreeMap<String, DiffeoLiteral>,
    pub defect: RelationDefect,
}

impl RepTuple {
    pub fn build(
        presentation: SemidirectPresentation,
        manifold: Manifold,
        mut images: BTreeMap<String, Diffeo>,
    ) -> Result<Self> {
        let names = extended_names(&presentation);
        let mut ordered = Vec::with_capacity(names.len());
        for name in &names {
            let f = images.remove(name).ok_or_else(|| LabError::MissingImage(name.clone()))?;
            if f.kind() != manifold.kind {
                return Err(LabError::InvalidDiffeo(format!(
                    "image of `{name}` lives on a different manifold"
                )));
            }
            if f.derivative_bounds().0 <= 0.0 {
                return Err(LabError::InvalidDiffeo(format!("image of `{name}` is not a diffeomorphism")));
            }
            ordered.push(f);
        }
        if let Some(extra) = images.keys().next() {
            return Err(LabError::UnknownGenerator(extra.clone()));
        }
        let inverses = ordered.iter().map(Diffeo::inverse).collect();
        let mut rep = Self {
            manifold,
            presentation,
            images: ordered,
            inverses,
            defect: RelationDefect { relators: Vec::new(), aggregate: 0.0 },
        };
        rep.defect = rep.measure_defect();
        Ok(rep)
    }

    pub fn from_literals(
        presentation: SemidirectPresentation,
        manifold: Manifold,
        literals: &BTreeMap<String, DiffeoLiteral>,
    ) -> Result<Self> {
        let images = literals
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.build(manifold.kind)?)))
            .collect::<Result<_>>()?;
        Self::build(presentation, manifold, images)
    }

    /// The trivial representation `ρ₀` of the same presentation.
    pub fn trivial(presentation: SemidirectPresentation, manifold: Manifold) -> Self {
        let images = extended_names(&presentation)
            .into_iter()
            .map(|n| (n, Diffeo::identity(manifold.kind)))
            .collect();
        Self::build(presentation, manifold, images).expect("identity images are valid")
    }

    pub fn names(&self) -> Vec<String> {
        extended_names(&self.presentation)
    }

    pub fn image(&self, generator: usize) -> &Diffeo {
        &self.images[generator]
    }

    pub fn image_by_name(&self, name: &str) -> Result<&Diffeo> {
        self.names()
            .iter()
            .position(|n| n == name)
            .map(|i| &self.images[i])
            .ok_or_else(|| LabError::MissingImage(name.to_string()))
    }

    pub fn stable(&self) -> &Diffeo {
        &self.images[self.presentation.stable_index()]
    }

    /// `ρ(w)` as a composite diffeomorphism (extended alphabet).
    pub fn word_image(&self, w: &Word) -> Diffeo {
        let maps = w
            .syllables()
            .iter()
            .map(|&(g, e)| self.images[g].power(e))
            .collect();
        Diffeo::compose(self.manifold.kind, maps).expect("images share the manifold")
    }

    /// Lifted value and derivative of `ρ(w)` at `x`, letter by letter.
    pub fn word_jet(&self, w: &Word, x: f64) -> (f64, f64) {
        w.syllables().iter().rev().fold((x, 1.0), |(y, dy), &(g, e)| {
            let f = if e > 0 { &self.images[g] } else { &self.inverses[g] };
            (0..e.unsigned_abs()).fold((y, dy), |(z, dz), _| {
                let (v, dv) = f.jet(z);
                (v, dz * dv)
            })
        })
    }

    /// `ρ(w)(x)` as a canonical manifold parameter.
    pub fn eval_word(&self, w: &Word, x: f64) -> f64 {
        self.manifold.normalize(self.word_jet(w, x).0)
    }

    pub fn summary(&self) -> RepSummary {
        RepSummary {
            manifold: self.manifold,
            images: self
                .names()
                .into_iter()
                .zip(&self.images)
                .map(|(n, f)| (n, f.to_literal()))
                .collect(),
            defect: self.defect.clone(),
        }
    }

    /// The same images read as a representation of `H ⋊_{ψ^p} ⟨t^p⟩`.
    pub fn power_substitution(&self, p: u32) -> Result<Self> {
        let presentation = self.presentation.power(p)?;
        let mut images: BTreeMap<String, Diffeo> = self.names().into_iter().zip(self.images.iter().cloned()).collect();
        images.insert(STABLE_LETTER.to_string(), self.stable().power(p as i64));
        Self::build(presentation, self.manifold, images)
    }

    fn measure_defect(&self) -> RelationDefect {
        let identity = Diffeo::identity(self.manifold.kind);
        let relators: Vec<RelatorDefect> = self
            .presentation
            .relators()
            .par_iter()
            .map(|r| {
                let f = self.word_image(&r.word);
                let (displacement, derivative) = if f.is_identity() {
                    (0.0, 0.0)
                } else {
                    c1_components(&self.manifold, &f, &identity)
                };
                RelatorDefect { name: r.name.clone(), kind: r.kind, displacement, derivative }
            })
            .collect();
        let aggregate = relators.iter().fold(0.0f64, |m, r| m.max(r.displacement).max(r.derivative));
        RelationDefect { relators, aggregate }
    }
}

fn extended_names(p: &SemidirectPresentation) -> Vec<String> {
    let mut names = p.alphabet.names().to_vec();
    names.push(STABLE_LETTER.to_string());
    names
}

/// `d_B(ρ, ρ′) = max_{b ∈ B} d(ρ(b), ρ′(b))`.
pub fn rep_distance(a: &RepTuple, b: &RepTuple, generators: &[String]) -> Result<f64> {
    if a.manifold != b.manifold {
        return Err(LabError::InvalidDiffeo("representations live on different manifolds".into()));
    }
    generators.iter().try_fold(0.0f64, |m, g| {
        Ok(m.max(c1_distance(&a.manifold, a.image_by_name(g)?, b.image_by_name(g)?)))
    })
}

/// Distance to the trivial representation over all of `S ∪ {t}`.
pub fn distance_to_trivial(rep: &RepTuple) -> f64 {
    let identity = Diffeo::identity(rep.manifold.kind);
    rep.images
        .par_iter()
        .map(|f| if f.is_identity() { 0.0 } else { c1_distance(&rep.manifold, f, &identity) })
        .reduce(|| 0.0, f64::max)
}

/// Bump shape native to each manifold.
pub fn default_shape(kind: ManifoldKind) -> BumpShape {
    match kind {
        ManifoldKind::Interval => BumpShape::Quadratic,
        ManifoldKind::Circle => BumpShape::Sine,
    }
}

/// Named constructions selectable from a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum GallerySpec {
    /// `ρ(s) = id` on `H`; `t` acts by the given map (a small bump by default).
    #[serde(rename = "trivial_H")]
    TrivialH {
        #[serde(default)]
        t: Option<DiffeoLiteral>,
    },
    /// `ρ(s_i)` is the time-`c_i ε` map of one vector field, `ρ(t)` a bump.
    CommutingFlow {
        eps: f64,
        #[serde(default)]
        c: Option<Vec<f64>>,
        #[serde(default)]
        t_eps: Option<f64>,
    },
    /// `ρ(s_1)` a bump of amplitude `ε`, every other generator trivial.
    Bump { eps: f64 },
    /// Ping-pong homeomorphisms of `C⁰` size `δ` for a free group of rank 2.
    C0Leftorder {
        delta: f64,
        #[serde(default)]
        stretch: Option<f64>,
        #[serde(default)]
        half_width: Option<f64>,
    },
}

pub const GALLERY: &[(&str, &str)] = &[
    ("trivial_H", "H acts trivially; t acts by a chosen diffeomorphism (exact representation)"),
    ("commuting_flow", "S0 acts by commuting flow maps, t by a bump; near-action with measured defect"),
    ("bump", "first S0 generator acts by an interval/circle bump, everything else trivially"),
    ("c0_leftorder", "faithful C0-small ping-pong action of F_2 on [0,1] (homeomorphisms, no C1 control)"),
];

/// A `C⁰` action outside the diffeomorphism type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0ActionTuple {
    pub generators: Vec<String>,
    pub action: PingPongAction,
    pub certificate: PingPongCertificate,
}

#[derive(Debug, Clone)]
pub enum GalleryAction {
    Rep(Box<RepTuple>),
    C0(C0ActionTuple),
}

pub fn gallery(spec: &GallerySpec, presentation: SemidirectPresentation, manifold: Manifold) -> Result<GalleryAction> {
    let kind = manifold.kind;
    let names = extended_names(&presentation);
    let t_name = STABLE_LETTER.to_string();
    let mut images: BTreeMap<String, Diffeo> =
        names.iter().map(|n| (n.clone(), Diffeo::identity(kind))).collect();
    match spec {
        GallerySpec::TrivialH { t } => {
            let t_map = match t {
                Some(lit) => lit.build(kind)?,
                None => Diffeo::bump(kind, 0.05, default_shape(kind))?,
            };
            images.insert(t_name, t_map);
        }
        GallerySpec::CommutingFlow { eps, c, t_eps } => {
            check_eps(*eps)?;
            let d = presentation.d;
            let c = c.clone().unwrap_or_else(|| {
                let mut v = vec![0.0; d];
                v[0] = 1.0;
                v
            });
            if c.len() != d {
                return Err(LabError::DimensionMismatch { expected: format!("{d} flow coefficients"), got: c.len().to_string() });
            }
            for (i, ci) in c.iter().enumerate() {
                images.insert(names[i].clone(), Diffeo::flow(kind, ci * eps)?);
            }
            images.insert(t_name, Diffeo::bump(kind, t_eps.unwrap_or(*eps), default_shape(kind))?);
        }
        GallerySpec::Bump { eps } => {
            check_eps(*eps)?;
            images.insert(names[0].clone(), Diffeo::bump(kind, *eps, default_shape(kind))?);
        }
        GallerySpec::C0Leftorder { delta, stretch, half_width } => {
            if presentation.group_class != GroupClass::Free || presentation.n_generators() != 2 {
                return Err(LabError::Parameter(
                    "c0_leftorder needs H free of rank 2".into(),
                ));
            }
            if kind != ManifoldKind::Interval {
                return Err(LabError::Parameter("c0_leftorder acts on the interval".into()));
            }
            let defaults = PingPongParams::default();
            let params = PingPongParams {
                stretch: stretch.unwrap_or(defaults.stretch),
                half_width: half_width.unwrap_or(defaults.half_width),
            };
            let action = PingPongAction::new(*delta, params)?;
            let certificate = action.certificate(manifold.grid);
            return Ok(GalleryAction::C0(C0ActionTuple {
                generators: presentation.alphabet.names().to_vec(),
                action,
                certificate,
            }));
        }
    }
    Ok(GalleryAction::Rep(Box::new(RepTuple::build(presentation, manifold, images)?)))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("eps {eps} must lie in (0, 1)")))
    }
}

/// One-parameter families `ε ↦ ρ_ε` shrinking to `ρ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum ScaleBuilder {
    Bump,
    CommutingFlow {
        #[serde(default)]
        c: Option<Vec<f64>>,
    },
}

impl ScaleBuilder {
    pub fn spec(&self, eps: f64) -> GallerySpec {
        match self {
            Self::Bump => GallerySpec::Bump { eps },
            Self::CommutingFlow { c } => GallerySpec::CommutingFlow { eps, c: c.clone(), t_eps: None },
        }
    }
}

pub fn scale_family(
    builder: &ScaleBuilder,
    presentation: SemidirectPresentation,
    manifold: Manifold,
    eps: f64,
) -> Result<RepTuple> {
    match gallery(&builder.spec(eps), presentation, manifold)? {
        GalleryAction::Rep(rep) => Ok(*rep),
        GalleryAction::C0(_) => unreachable!("scale builders produce diffeomorphisms"),
    }
}
