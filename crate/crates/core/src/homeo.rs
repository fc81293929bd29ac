//! A faithful action of the free group `F_2` on `[0,1]` by homeomorphisms of
//! arbitrarily small C⁰ size.
//!
//! Two hyperbolic elements of `SL_2(ℝ)` play ping-pong on the circle of
//! lines `ℝP¹`. Their lifts to the universal cover `ℝ` are conjugated into
//! `(0, δ)` by `s ↦ δ(1/2 + atan(s)/π)` and extended by the identity, so
//! every point moves by less than `δ`. These maps are homeomorphisms only;
//! nothing controls their derivatives near `0` and `δ`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::words::Word;

/// Outward rounding applied to every computed arc endpoint.
const OUTWARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PingPongParams {
    /// Eigenvalue of the diagonal generator.
    pub stretch: f64,
    /// Half-width of each ping-pong arc, in turns of `ℝP¹` (period 1).
    pub half_width: f64,
}

impl Default for PingPongParams {
    fn default() -> Self {
        Self { stretch: 3.0, half_width: 0.11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub name: String,
    /// Lifted endpoints, `lo < hi`, `hi − lo < 1`.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingPongCheck {
    pub map: String,
    pub source: String,
    pub target: String,
    /// Outward-rounded image of the closed complement of `source`.
    pub image_lo: f64,
    pub image_hi: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub delta: f64,
    pub arcs: Vec<Arc>,
    pub disjoint: bool,
    pub checks: Vec<PingPongCheck>,
    /// Grid maxima of `|g(x) − x|` for `g ∈ {a, a⁻¹, b, b⁻¹}`.
    pub sup_displacements: Vec<(String, f64)>,
    pub support: (f64, f64),
    pub faithful: bool,
    pub c1_controlled: bool,
}

impl PingPongCertificate {
    pub fn max_displacement(&self) -> f64 {
        self.sup_displacements.iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingPongAction {
    pub delta: f64,
    pub params: PingPongParams,
    /// Symmetric positive definite generators `[[p, q], [q, r]]`.
    matrices: [[f64; 3]; 2],
}

impl PingPongAction {
    pub fn new(delta: f64, params: PingPongParams) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(LabError::Parameter(format!("delta {delta} must lie in (0, 1]")));
        }
        if !(params.stretch > 1.0 && params.half_width > 0.0 && params.half_width < 0.125) {
            return Err(LabError::Parameter(
                "ping-pong needs stretch > 1 and half_width in (0, 1/8)".into(),
            ));
        }
        let l = params.stretch;
        let a = [l, 0.0, 1.0 / l];
        // the same map conjugated by a quarter turn of lines (angle π/4)
        let b = [(l + 1.0 / l) / 2.0, (l - 1.0 / l) / 2.0, (l + 1.0 / l) / 2.0];
        Ok(Self { delta, params, matrices: [a, b] })
    }

    fn matrix(&self, g: usize, inverse: bool) -> [f64; 3] {
        let [p, q, r] = self.matrices[g];
        if inverse { [r, -q, p] } else { [p, q, r] }
    }

    /// Lift to `ℝ` (period 1 = half turn) of the projective action.
    pub fn lift(&self, g: usize, inverse: bool, s: f64) -> f64 {
        let [p, q, r] = self.matrix(g, inverse);
        let th = std::f64::consts::PI * s;
        let (c, sn) = (th.cos(), th.sin());
        let (wx, wy) = (p * c + q * sn, q * c + r * sn);
        // positive definite, so v·Mv > 0 and the turn stays in (−π/2, π/2)
        let turn = (c * wy - sn * wx).atan2(c * wx + sn * wy);
        s + turn / std::f64::consts::PI
    }

    fn line_coord(&self, x: f64) -> f64 {
        (std::f64::consts::PI * (x / self.delta - 0.5)).tan()
    }

    fn unit_coord(&self, s: f64) -> f64 {
        self.delta * (0.5 + s.atan() / std::f64::consts::PI)
    }

    /// Action of a generator (or its inverse) on `[0,1]`.
    pub fn act(&self, g: usize, inverse: bool, x: f64) -> f64 {
        if x <= 0.0 || x >= self.delta {
            return x;
        }
        self.unit_coord(self.lift(g, inverse, self.line_coord(x))).clamp(0.0, self.delta)
    }

    /// Action of a word on generators `0` (`a`) and `1` (`b`); the last
    /// letter acts first.
    pub fn act_word(&self, w: &Word, x: f64) -> f64 {
        w.signed_letters()
            .iter()
            .rev()
            .fold(x, |y, &(g, e)| self.act(g, e < 0, y))
    }

    /// Same as [`act_word`](Self::act_word) on the universal cover.
    pub fn lift_word(&self, w: &Word, s: f64) -> f64 {
        w.signed_letters()
            .iter()
            .rev()
            .fold(s, |y, &(g, e)| self.lift(g, e < 0, y))
    }

    fn arcs(&self) -> Vec<Arc> {
        let w = self.params.half_width;
        [("A+", 0.0), ("B+", 0.25), ("A-", 0.5), ("B-", 0.75)]
            .iter()
            .map(|&(name, c)| Arc { name: name.into(), lo: c - w, hi: c + w })
            .collect()
    }

    pub fn certificate(&self, grid: usize) -> PingPongCertificate {
        let arcs = self.arcs();
        let find = |n: &str| arcs.iter().find(|a| a.name == n).expect("arc exists").clone();

        let mut sorted: Vec<&Arc> = arcs.iter().collect();
        sorted.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let disjoint = sorted.windows(2).all(|p| p[0].hi < p[1].lo)
            && sorted.last().is_some_and(|l| l.hi < sorted[0].lo + 1.0);

        // (generator, inverse?, label, source arc, target arc)
        let rules = [
            (0, false, "a", "A-", "A+"),
            (0, true, "a^-1", "A+", "A-"),
            (1, false, "b", "B-", "B+"),
            (1, true, "b^-1", "B+", "B-"),
        ];
        let checks: Vec<PingPongCheck> = rules
            .iter()
            .map(|&(g, inv, label, src, dst)| {
                let s = find(src);
                let t = find(dst);
                // closed complement of the source arc, as one lifted interval
                let (c_lo, c_hi) = (s.hi, s.lo + 1.0);
                let lo = self.lift(g, inv, c_lo) - OUTWARD;
                let hi = self.lift(g, inv, c_hi) + OUTWARD;
                let k = ((lo + hi) / 2.0 - (t.lo + t.hi) / 2.0).round();
                let holds = hi - lo < 1.0 && lo > t.lo + k && hi < t.hi + k;
                PingPongCheck {
                    map: label.into(),
                    source: format!("complement of {src}"),
                    target: dst.into(),
                    image_lo: lo,
                    image_hi: hi,
                    holds,
                }
            })
            .collect();

        // uniform on [0,1] plus a dense sample of the support [0,δ]
        let n = grid.max(2);
        let points: Vec<f64> = (0..=n)
            .map(|i| i as f64 / n as f64)
            .chain((0..=n).map(|i| self.delta * i as f64 / n as f64))
            .collect();
        let sup_displacements = rules
            .iter()
            .map(|&(g, inv, label, _, _)| {
                let sup = points.iter().fold(0.0f64, |m, &x| m.max((self.act(g, inv, x) - x).abs()));
                (label.to_string(), sup)
            })
            .collect();

        let faithful = disjoint && checks.iter().all(|c| c.holds);
        PingPongCertificate {
            delta: self.delta,
            arcs,
            disjoint,
            checks,
            sup_displacements,
            support: (0.0, self.delta),
            faithful,
            c1_controlled: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn certificate_at_one_percent() {
        let act = PingPongAction::new(1e-2, PingPongParams::default()).unwrap();
        let cert = act.certificate(4096);
        assert!(cert.disjoint);
        assert!(cert.checks.iter().all(|c| c.holds), "{:?}", cert.checks);
        assert!(cert.faithful && !cert.c1_controlled);
        assert!(cert.max_displacement() <= 1e-2);
        // the conjugation compresses motion to roughly a tenth of δ
        assert!(cert.max_displacement() > 5e-4);
    }

    #[test]
    fn weak_stretch_fails_the_check() {
        // cot(2π·0.11) ≈ 1.23 is the threshold stretch for this width
        let act = PingPongAction::new(1e-2, PingPongParams { stretch: 1.1, half_width: 0.11 }).unwrap();
        assert!(!act.certificate(64).faithful);
    }

    #[test]
    fn lifts_commute_with_deck_translation() {
        let act = PingPongAction::new(0.5, PingPongParams::default()).unwrap();
        for k in 0..50 {
            let s = -3.0 + k as f64 * 0.123;
            for g in 0..2 {
                for inv in [false, true] {
                    let d = act.lift(g, inv, s + 1.0) - act.lift(g, inv, s) - 1.0;
                    assert!(d.abs() < 1e-12);
                    let back = act.lift(g, !inv, act.lift(g, inv, s));
                    assert!((back - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PingPongAction::new(0.0, PingPongParams::default()).is_err());
        assert!(PingPongAction::new(0.1, PingPongParams { stretch: 3.0, half_width: 0.2 }).is_err());
    }

    proptest! {
        // Nontrivial reduced words move some point of the cover.
        #[test]
        fn reduced_words_act_nontrivially(letters in prop::collection::vec((0usize..2, prop_oneof![Just(-1i64), Just(1)]), 1..10)) {
            let w = Word::from_syllables(letters).free_reduce();
            prop_assume!(!w.is_identity());
            let act = PingPongAction::new(1e-2, PingPongParams::default()).unwrap();
            let moved = (0..64).map(|i| -2.0 + i as f64 / 16.0)
                .any(|s| (act.lift_word(&w, s) - s).abs() > 1e-9);
            prop_assert!(moved);
        }
    }
}
