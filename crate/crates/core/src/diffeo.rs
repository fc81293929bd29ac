//! Closed-form C¹ diffeomorphisms of the interval and the circle.
//!
//! Every map is an expression tree evaluated together with its derivative
//! (a 1-jet), so derivatives are exact up to rounding. Circle maps are
//! handled through their lifts `F: ℝ → ℝ` with `F(x + 1) = F(x) + 1`.
//! Only orientation-preserving primitives exist; each node carries bounds
//! `lo ≤ F′ ≤ hi` with `lo > 0`, which certify monotonicity.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Interval,
    Circle,
}

/// `[0,1] ⊂ ℝ` or the circle `t ↦ (cos 2πt, sin 2πt)` in `ℝ²`, with a
/// uniform sample grid used for every supremum over the manifold. `grid` is
/// the number of cells, so the spacing is `1/grid` on both manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
    pub grid: usize,
}

/// Ambient vector; only the first `ambient_dim()` entries are meaningful.
pub type Ambient = [f64; 2];

impl Manifold {
    pub fn interval() -> Self {
        Self { kind: ManifoldKind::Interval, grid: DEFAULT_GRID }
    }

    pub fn circle() -> Self {
        Self { kind: ManifoldKind::Circle, grid: DEFAULT_GRID }
    }

    pub fn with_grid(self, grid: usize) -> Self {
        Self { grid: grid.max(2), ..self }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Interval => 1,
            ManifoldKind::Circle => 2,
        }
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let m = self.grid.max(2);
        match self.kind {
            ManifoldKind::Interval => (0..=m).map(|i| i as f64 / m as f64).collect(),
            ManifoldKind::Circle => (0..m).map(|i| i as f64 / m as f64).collect(),
        }
    }

    /// Grid spacing in the manifold parameter.
    pub fn resolution(&self) -> f64 {
        1.0 / self.grid.max(2) as f64
    }

    /// Canonical parameter of a (lifted) point.
    pub fn normalize(&self, x: f64) -> f64 {
        match self.kind {
            ManifoldKind::Interval => x.clamp(0.0, 1.0),
            ManifoldKind::Circle => x.rem_euclid(1.0),
        }
    }

    pub fn embed(&self, x: f64) -> Ambient {
        match self.kind {
            ManifoldKind::Interval => [x, 0.0],
            ManifoldKind::Circle => [(TAU * x).cos(), (TAU * x).sin()],
        }
    }

    /// Unit tangent at `x`; parameter speed is constant, so `D_x f` in this
    /// frame is `f′(x) · tangent(f(x))`.
    pub fn tangent(&self, x: f64) -> Ambient {
        match self.kind {
            ManifoldKind::Interval => [1.0, 0.0],
            ManifoldKind::Circle => [-(TAU * x).sin(), (TAU * x).cos()],
        }
    }

    /// `embed(to) − embed(from)`.
    pub fn displacement(&self, from: f64, to: f64) -> Ambient {
        let a = self.embed(from);
        let b = self.embed(to);
        [b[0] - a[0], b[1] - a[1]]
    }

    pub fn linf(&self, v: &Ambient) -> f64 {
        v[..self.ambient_dim()].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            ManifoldKind::Interval => 1.0,
            ManifoldKind::Circle => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BumpShape {
    /// `x(1 − x)`; interval only.
    #[serde(rename = "x(1-x)")]
    Quadratic,
    /// `sin(2πx) / 2π`.
    #[serde(rename = "sin2pi")]
    Sine,
    /// `sin²(πx) / π`.
    #[serde(rename = "sin^2")]
    SineSquared,
}

impl BumpShape {
    fn jet(self, x: f64) -> (f64, f64) {
        match self {
            BumpShape::Quadratic => (x * (1.0 - x), 1.0 - 2.0 * x),
            BumpShape::Sine => ((TAU * x).sin() / TAU, (TAU * x).cos()),
            BumpShape::SineSquared => {
                let s = (PI * x).sin();
                (s * s / PI, (TAU * x).sin())
            }
        }
    }

    /// `sup |φ′|`.
    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Identity,
    Bump { eps: f64, shape: BumpShape },
    /// Time-`time` map of the vector field `x(1 − x)`.
    Flow { time: f64 },
    Rotation { theta: f64 },
    /// `of[0] ∘ of[1] ∘ ...`, so the last entry acts first.
    Compose(Vec<Diffeo>),
    Inverse(Diffeo),
    Power(Diffeo, u32),
}

#[derive(Debug, Clone)]
pub struct Diffeo {
    kind: ManifoldKind,
    expr: Arc<Expr>,
    lo: f64,
    hi: f64,
}

impl PartialEq for Diffeo {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && (Arc::ptr_eq(&self.expr, &other.expr) || self.expr == other.expr)
    }
}

impl Diffeo {
    fn node(kind: ManifoldKind, expr: Expr, lo: f64, hi: f64) -> Self {
        Self { kind, expr: Arc::new(expr), lo, hi }
    }

    pub fn identity(kind: ManifoldKind) -> Self {
        Self::node(kind, Expr::Identity, 1.0, 1.0)
    }

    /// `x ↦ x + eps·φ(x)`, requiring `|eps|·sup|φ′| < 1`.
    pub fn bump(kind: ManifoldKind, eps: f64, shape: BumpShape) -> Result<Self> {
        if !eps.is_finite() || eps.abs() * shape.lipschitz() >= 1.0 {
            return Err(LabError::InvalidDiffeo(format!(
                "bump amplitude {eps} must satisfy |eps| < 1"
            )));
        }
        if kind == ManifoldKind::Circle && shape == BumpShape::Quadratic {
            return Err(LabError::InvalidDiffeo(
                "shape x(1-x) is not C1 on the circle".into(),
            ));
        }
        if eps == 0.0 {
            return Ok(Self::identity(kind));
        }
        let c = eps.abs() * shape.lipschitz();
        Ok(Self::node(kind, Expr::Bump { eps, shape }, 1.0 - c, 1.0 + c))
    }

    /// Flow of `x(1 − x)` on the interval for the given time.
    pub fn flow(kind: ManifoldKind, time: f64) -> Result<Self> {
        if kind != ManifoldKind::Interval {
            return Err(LabError::InvalidDiffeo("flows are defined on the interval only".into()));
        }
        if !time.is_finite() {
            return Err(LabError::InvalidDiffeo("flow time must be finite".into()));
        }
        if time == 0.0 {
            return Ok(Self::identity(kind));
        }
        Ok(Self::node(kind, Expr::Flow { time }, (-time.abs()).exp(), time.abs().exp()))
    }

    pub fn rotation(kind: ManifoldKind, theta: f64) -> Result<Self> {
        if kind != ManifoldKind::Circle {
            return Err(LabError::InvalidDiffeo("rotations are defined on the circle only".into()));
        }
        if !theta.is_finite() {
            return Err(LabError::InvalidDiffeo("rotation angle must be finite".into()));
        }
        if theta == 0.0 {
            return Ok(Self::identity(kind));
        }
        Ok(Self::node(kind, Expr::Rotation { theta }, 1.0, 1.0))
    }

    /// `maps[0] ∘ maps[1] ∘ ...`. Identities are dropped and adjacent
    /// structurally inverse pairs cancel.
    pub fn compose(kind: ManifoldKind, maps: Vec<Diffeo>) -> Result<Self> {
        let mut flat: Vec<Diffeo> = Vec::new();
        for f in maps {
            if f.kind != kind {
                return Err(LabError::InvalidDiffeo("composition across manifolds".into()));
            }
            match &*f.expr {
                Expr::Compose(inner) => flat.extend(inner.iter().cloned()),
                Expr::Identity => {}
                _ => flat.push(f),
            }
        }
        let mut stack: Vec<Diffeo> = Vec::with_capacity(flat.len());
        for f in flat {
            if stack.last().is_some_and(|top| top.inverse() == f) {
                stack.pop();
            } else {
                stack.push(f);
            }
        }
        Ok(match stack.len() {
            0 => Self::identity(kind),
            1 => stack.pop().expect("one element"),
            _ => {
                let lo = stack.iter().map(|f| f.lo).product();
                let hi = stack.iter().map(|f| f.hi).product();
                Self::node(kind, Expr::Compose(stack), lo, hi)
            }
        })
    }

    pub fn then(&self, after: &Diffeo) -> Result<Self> {
        Self::compose(self.kind, vec![after.clone(), self.clone()])
    }

    pub fn inverse(&self) -> Self {
        let (lo, hi) = (1.0 / self.hi, 1.0 / self.lo);
        match &*self.expr {
            Expr::Identity => self.clone(),
            Expr::Rotation { theta } => Self::node(self.kind, Expr::Rotation { theta: -theta }, 1.0, 1.0),
            Expr::Flow { time } => Self::node(self.kind, Expr::Flow { time: -time }, lo, hi),
            Expr::Inverse(f) => f.clone(),
            Expr::Compose(v) => Self::node(
                self.kind,
                Expr::Compose(v.iter().rev().map(Diffeo::inverse).collect()),
                lo,
                hi,
            ),
            Expr::Power(f, n) => Self::node(self.kind, Expr::Power(f.inverse(), *n), lo, hi),
            Expr::Bump { .. } => Self::node(self.kind, Expr::Inverse(self.clone()), lo, hi),
        }
    }

    pub fn power(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let m = n.unsigned_abs();
        match (m, &*base.expr) {
            (0, _) | (_, Expr::Identity) => Self::identity(self.kind),
            (1, _) => base,
            (_, Expr::Rotation { theta }) => Self::node(self.kind, Expr::Rotation { theta: theta * m as f64 }, 1.0, 1.0),
            _ => {
                let m = u32::try_from(m).expect("power exponent fits in u32");
                let (lo, hi) = (base.lo.powi(m as i32), base.hi.powi(m as i32));
                Self::node(self.kind, Expr::Power(base, m), lo, hi)
            }
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(*self.expr, Expr::Identity)
    }

    /// `(lo, hi)` with `lo ≤ F′ ≤ hi` everywhere; `lo > 0` certifies that the
    /// map is an orientation-preserving diffeomorphism.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Lifted value and derivative at a lifted point.
    pub fn jet(&self, x: f64) -> (f64, f64) {
        match &*self.expr {
            Expr::Identity => (x, 1.0),
            Expr::Bump { eps, shape } => {
                let (phi, dphi) = shape.jet(x);
                (x + eps * phi, 1.0 + eps * dphi)
            }
            Expr::Flow { time } => {
                let e = time.exp();
                let den = 1.0 - x + x * e;
                (x * e / den, e / (den * den))
            }
            Expr::Rotation { theta } => (x + theta, 1.0),
            Expr::Compose(v) => v.iter().rev().fold((x, 1.0), |(y, dy), f| {
                let (z, dz) = f.jet(y);
                (z, dy * dz)
            }),
            Expr::Inverse(f) => {
                let y = f.solve(x);
                (y, 1.0 / f.jet(y).1)
            }
            Expr::Power(f, n) => (0..*n).fold((x, 1.0), |(y, dy), _| {
                let (z, dz) = f.jet(y);
                (z, dy * dz)
            }),
        }
    }

    /// Image of a point, as a canonical manifold parameter.
    pub fn eval(&self, x: f64) -> f64 {
        let y = self.jet(x).0;
        match self.kind {
            ManifoldKind::Interval => y.clamp(0.0, 1.0),
            ManifoldKind::Circle => y.rem_euclid(1.0),
        }
    }

    /// Derivative along the manifold (with respect to the parameter).
    pub fn derivative(&self, x: f64) -> f64 {
        self.jet(x).1
    }

    /// `D_x f` as an `N × 1` matrix in the unit-tangent frame at `x`.
    pub fn ambient_jacobian(&self, m: &Manifold, x: f64) -> Ambient {
        let (y, dy) = self.jet(x);
        let u = m.tangent(y);
        [dy * u[0], dy * u[1]]
    }

    /// Solves `F(y) = x` for the lift `F` of this map: bracketing followed
    /// by safeguarded Newton steps.
    fn solve(&self, x: f64) -> f64 {
        let (mut lo, mut hi) = match self.kind {
            ManifoldKind::Interval => (0.0, 1.0),
            ManifoldKind::Circle => {
                let mut lo = x - 1.0;
                let mut hi = x + 1.0;
                while self.jet(lo).0 > x {
                    lo -= 1.0;
                }
                while self.jet(hi).0 < x {
                    hi += 1.0;
                }
                (lo, hi)
            }
        };
        let mut y = x.clamp(lo, hi);
        for _ in 0..200 {
            let (fy, dfy) = self.jet(y);
            let r = fy - x;
            if r == 0.0 {
                return y;
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let mut next = y - r / dfy;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-16 * y.abs().max(1.0) || hi - lo <= 1e-16 * y.abs().max(1.0) {
                return next;
            }
            y = next;
        }
        y
    }

    pub fn to_literal(&self) -> DiffeoLiteral {
        match &*self.expr {
            Expr::Identity => DiffeoLiteral::Identity,
            Expr::Bump { eps, shape } => DiffeoLiteral::Bump { eps: *eps, shape: *shape },
            Expr::Flow { time } => DiffeoLiteral::Flow { time: *time },
            Expr::Rotation { theta } => DiffeoLiteral::Rotation { theta: *theta },
            Expr::Compose(v) => DiffeoLiteral::Compose { of: v.iter().map(Diffeo::to_literal).collect() },
            Expr::Inverse(f) => DiffeoLiteral::Inverse { of: Box::new(f.to_literal()) },
            Expr::Power(f, n) => DiffeoLiteral::Power { of: Box::new(f.to_literal()), n: *n as i64 },
        }
    }
}

/// Configuration-file form of a diffeomorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffeoLiteral {
    Identity,
    Bump {
        eps: f64,
        #[serde(default = "default_shape")]
        shape: BumpShape,
    },
    Flow {
        time: f64,
    },
    Rotation {
        theta: f64,
    },
    Compose {
        of: Vec<DiffeoLiteral>,
    },
    Inverse {
        of: Box<DiffeoLiteral>,
    },
    Power {
        of: Box<DiffeoLiteral>,
        n: i64,
    },
}

fn default_shape() -> BumpShape {
    BumpShape::Quadratic
}

impl DiffeoLiteral {
    pub fn build(&self, kind: ManifoldKind) -> Result<Diffeo> {
        match self {
            DiffeoLiteral::Identity => Ok(Diffeo::identity(kind)),
            DiffeoLiteral::Bump { eps, shape } => Diffeo::bump(kind, *eps, *shape),
            DiffeoLiteral::Flow { time } => Diffeo::flow(kind, *time),
            DiffeoLiteral::Rotation { theta } => Diffeo::rotation(kind, *theta),
            DiffeoLiteral::Compose { of } => {
                let maps = of.iter().map(|l| l.build(kind)).collect::<Result<Vec<_>>>()?;
                Diffeo::compose(kind, maps)
            }
            DiffeoLiteral::Inverse { of } => Ok(of.build(kind)?.inverse()),
            DiffeoLiteral::Power { of, n } => Ok(of.build(kind)?.power(*n)),
        }
    }
}

/// `sup ‖f − g‖ + sup ‖D_x f − D_x g‖` over the manifold grid, ambient ℓ∞.
pub fn c1_distance(m: &Manifold, f: &Diffeo, g: &Diffeo) -> f64 {
    let (c0, c1) = c1_components(m, f, g);
    c0 + c1
}

/// The `C⁰` and derivative parts of [`c1_distance`] separately.
pub fn c1_components(m: &Manifold, f: &Diffeo, g: &Diffeo) -> (f64, f64) {
    use rayon::prelude::*;
    m.grid_points()
        .par_iter()
        .map(|&x| {
            let (fy, fd) = f.jet(x);
            let (gy, gd) = g.jet(x);
            let pf = m.embed(fy);
            let pg = m.embed(gy);
            let c0 = m.linf(&[pf[0] - pg[0], pf[1] - pg[1]]);
            let uf = m.tangent(fy);
            let ug = m.tangent(gy);
            let c1 = m.linf(&[fd * uf[0] - gd * ug[0], fd * uf[1] - gd * ug[1]]);
            (c0, c1)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}
