//! The generalized scalarizing function
//!
//! ```text
//! S(z) = α · max{λ1·|z̄1 − z1|, λ2·|z̄2 − z2|} + ε · (w1·|z̄1 − z1| + w2·|z̄2 − z2|)
//! ```
//!
//! which is minimized. Weighted sum, weighted Chebychev, augmented Chebychev and
//! the normalized WS/T blend are all special cases; see the `make_*` constructors.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::landscape::ObjectiveVector;

/// Named members of the scalarizing family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarizerKind {
    /// Weighted sum.
    Ws,
    /// Weighted Chebychev.
    Chebychev,
    /// Augmented Chebychev: T plus ε times an unweighted sum.
    Aug,
    /// Normalized blend (1 − ε)·T + ε·WS.
    Norm,
}

impl ScalarizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ws => "ws",
            Self::Chebychev => "chebychev",
            Self::Aug => "aug",
            Self::Norm => "norm",
        }
    }

    /// Configuration of this kind for a direction angle. `eps` is ignored by WS and T.
    pub fn config(self, delta: f64, eps: f64) -> Result<ScalarizerConfig> {
        match self {
            Self::Ws => make_ws(delta),
            Self::Chebychev => make_chebychev(delta),
            Self::Aug => make_aug(delta, eps),
            Self::Norm => make_norm(delta, eps),
        }
    }
}

impl fmt::Display for ScalarizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ws" => Ok(Self::Ws),
            "chebychev" | "t" => Ok(Self::Chebychev),
            "aug" => Ok(Self::Aug),
            "norm" => Ok(Self::Norm),
            other => Err(invalid(format!("unknown scalarizer kind `{other}`"))),
        }
    }
}

/// A search direction `(cos δ, sin δ)` with δ measured from the f1-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub delta: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Direction {
    /// Axis-parallel directions are rejected.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < FRAC_PI_2) {
            return Err(invalid(format!("direction angle {delta} must lie in (0, π/2)")));
        }
        Ok(Self {
            delta,
            d1: delta.cos(),
            d2: delta.sin(),
        })
    }

    /// Chebychev weights `λi = 1/di`.
    pub fn chebychev_weights(&self) -> [f64; 2] {
        [1.0 / self.d1, 1.0 / self.d2]
    }
}

/// Polar angles, w.r.t. the f1-axis, of the two arms of an equal-value line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpeningAngles {
    /// Lower arm, in (−π/2, 0].
    pub theta1: f64,
    /// Upper arm, in [π/2, π).
    pub theta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarizerConfig {
    alpha: f64,
    eps: f64,
    lambda: [f64; 2],
    w: [f64; 2],
    utopia: ObjectiveVector,
}

/// Utopian point used by the named constructors.
pub const DEFAULT_UTOPIA: ObjectiveVector = ObjectiveVector::new(1.0, 1.0);

impl ScalarizerConfig {
    pub fn new(alpha: f64, eps: f64, lambda: [f64; 2], w: [f64; 2], utopia: ObjectiveVector) -> Result<Self> {
        let finite = [alpha, eps, lambda[0], lambda[1], w[0], w[1], utopia.z1, utopia.z2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("scalarizer coefficients must be finite"));
        }
        if alpha < 0.0 || eps < 0.0 || alpha + eps <= 0.0 {
            return Err(invalid(format!("need alpha, eps >= 0 with alpha + eps > 0 (got {alpha}, {eps})")));
        }
        if lambda.iter().chain(&w).any(|&v| v <= 0.0) {
            return Err(invalid("weights lambda and w must be positive"));
        }
        Ok(Self { alpha, eps, lambda, w, utopia })
    }

    pub fn with_utopia(mut self, utopia: ObjectiveVector) -> Result<Self> {
        self.utopia = utopia;
        Self::new(self.alpha, self.eps, self.lambda, self.w, self.utopia)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lambda(&self) -> [f64; 2] {
        self.lambda
    }

    pub fn w(&self) -> [f64; 2] {
        self.w
    }

    pub fn utopia(&self) -> ObjectiveVector {
        self.utopia
    }

    fn gaps(&self, z: ObjectiveVector) -> (f64, f64) {
        ((self.utopia.z1 - z.z1).abs(), (self.utopia.z2 - z.z2).abs())
    }

    /// Scalarized value of `z` (lower is better).
    pub fn value(&self, z: ObjectiveVector) -> f64 {
        let (u1, u2) = self.gaps(z);
        let chebychev = (self.lambda[0] * u1).max(self.lambda[1] * u2);
        let linear = self.w[0] * u1 + self.w[1] * u2;
        self.alpha * chebychev + self.eps * linear
    }

    /// Which Chebychev term is binding at `z`: 0 when `λ1·u1 ≥ λ2·u2`, else 1.
    pub fn binding_term(&self, z: ObjectiveVector) -> usize {
        let (u1, u2) = self.gaps(z);
        usize::from(self.lambda[0] * u1 < self.lambda[1] * u2)
    }

    pub fn opening_angles(&self) -> OpeningAngles {
        let Self { alpha, eps, lambda, w, .. } = *self;
        OpeningAngles {
            theta1: (-(eps * w[0]) / (alpha * lambda[1] + eps * w[1])).atan(),
            theta2: FRAC_PI_2 + ((eps * w[1]) / (alpha * lambda[0] + eps * w[0])).atan(),
        }
    }

    /// `|S(z0 + step·(cos θ, sin θ)) − S(z0)|`.
    ///
    /// Along an opening angle this vanishes up to rounding, provided both
    /// points sit on the same side of the Chebychev kink. Crossing the kink
    /// is reported as [`Error::KinkCrossed`].
    pub fn level_set_residual(&self, z0: ObjectiveVector, theta: f64, step: f64) -> Result<f64> {
        if !(step > 0.0) {
            return Err(invalid("step must be positive"));
        }
        let z1 = ObjectiveVector::new(z0.z1 + step * theta.cos(), z0.z2 + step * theta.sin());
        if self.alpha > 0.0 && self.binding_term(z0) != self.binding_term(z1) {
            return Err(Error::KinkCrossed);
        }
        Ok((self.value(z1) - self.value(z0)).abs())
    }

    /// Apex of the equal-value line through `z`: the point on the kink ray
    /// `z̄ − τ·(1/λ1, 1/λ2)` with the same value.
    pub fn iso_apex(&self, z: ObjectiveVector) -> ObjectiveVector {
        let [l1, l2] = self.lambda;
        let per_tau = self.alpha + self.eps * (self.w[0] / l1 + self.w[1] / l2);
        let tau = self.value(z) / per_tau;
        ObjectiveVector::new(self.utopia.z1 - tau / l1, self.utopia.z2 - tau / l2)
    }
}

/// Weighted sum with `w = (cos δ, sin δ)`.
pub fn make_ws(delta: f64) -> Result<ScalarizerConfig> {
    let d = Direction::new(delta)?;
    ScalarizerConfig::new(0.0, 1.0, d.chebychev_weights(), [d.d1, d.d2], DEFAULT_UTOPIA)
}

/// Weighted Chebychev with `λi = 1/di`; the linear weights are stored but unused.
pub fn make_chebychev(delta: f64) -> Result<ScalarizerConfig> {
    let d = Direction::new(delta)?;
    ScalarizerConfig::new(1.0, 0.0, d.chebychev_weights(), [d.d1, d.d2], DEFAULT_UTOPIA)
}

/// Augmented Chebychev: `T + ε·(u1 + u2)`.
pub fn make_aug(delta: f64, eps: f64) -> Result<ScalarizerConfig> {
    let d = Direction::new(delta)?;
    if !(eps >= 0.0) {
        return Err(invalid(format!("S_aug needs eps >= 0, got {eps}")));
    }
    ScalarizerConfig::new(1.0, eps, d.chebychev_weights(), [1.0, 1.0], DEFAULT_UTOPIA)
}

/// `(1 − ε)·T + ε·WS` with `wi = 1/λi`.
pub fn make_norm(delta: f64, eps: f64) -> Result<ScalarizerConfig> {
    let d = Direction::new(delta)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("S_norm needs eps in [0, 1], got {eps}")));
    }
    let lambda = d.chebychev_weights();
    ScalarizerConfig::new(1.0 - eps, eps, lambda, [1.0 / lambda[0], 1.0 / lambda[1]], DEFAULT_UTOPIA)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    use proptest::prelude::*;

    use super::*;

    fn z(a: f64, b: f64) -> ObjectiveVector {
        ObjectiveVector::new(a, b)
    }

    fn unit_weights(alpha: f64, eps: f64) -> ScalarizerConfig {
        ScalarizerConfig::new(alpha, eps, [1.0, 1.0], [1.0, 1.0], DEFAULT_UTOPIA).unwrap()
    }

    #[test]
    fn direct_substitution() {
        assert!((unit_weights(1.0, 0.0).value(z(0.6, 0.8)) - 0.4).abs() < 1e-15);
        assert!((unit_weights(0.0, 1.0).value(z(0.6, 0.8)) - 0.6).abs() < 1e-15);
        let norm = make_norm(FRAC_PI_4, 0.5).unwrap();
        assert!((norm.value(z(0.5, 0.5)) - 0.707_106_8).abs() < 1e-7);
        assert!((norm.value(z(0.5, 0.5)) - SQRT_2 / 2.0).abs() < 1e-9);
        assert_eq!(norm.value(DEFAULT_UTOPIA), 0.0);
    }

    #[test]
    fn symmetric_direction_weights() {
        let c = make_norm(FRAC_PI_4, 0.3).unwrap();
        for i in 0..2 {
            assert!((c.lambda()[i] - SQRT_2).abs() < 1e-12);
            assert!((c.w()[i] - SQRT_2 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_configs() {
        for delta in [0.0, FRAC_PI_2, -0.1, 2.0, f64::NAN] {
            assert!(make_ws(delta).is_err());
            assert!(make_norm(delta, 0.5).is_err());
        }
        assert!(make_norm(0.5, 1.1).is_err());
        assert!(make_norm(0.5, -0.1).is_err());
        assert!(make_aug(0.5, -1.0).is_err());
        assert!(ScalarizerConfig::new(0.0, 0.0, [1.0; 2], [1.0; 2], DEFAULT_UTOPIA).is_err());
        assert!(ScalarizerConfig::new(1.0, 0.0, [0.0, 1.0], [1.0; 2], DEFAULT_UTOPIA).is_err());
        assert!(ScalarizerConfig::new(1.0, 0.0, [1.0; 2], [1.0, -1.0], DEFAULT_UTOPIA).is_err());
    }

    #[test]
    fn table_opening_angles() {
        let ws = unit_weights(0.0, 1.0).opening_angles();
        assert!((ws.theta1 + FRAC_PI_4).abs() < 1e-15);
        assert!((ws.theta2 - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let t = make_chebychev(0.3).unwrap().opening_angles();
        assert_eq!((t.theta1, t.theta2), (0.0, FRAC_PI_2));
        let norm = make_norm(FRAC_PI_4, 0.5).unwrap().opening_angles();
        assert!((norm.theta1 + 0.321_751).abs() < 1e-6);
        // Augmented Chebychev closed form.
        let aug = make_aug(0.4, 0.25).unwrap();
        let [l1, l2] = aug.lambda();
        let a = aug.opening_angles();
        assert!((a.theta1 - (-0.25 / (l2 + 0.25f64)).atan()).abs() < 1e-15);
        assert!((a.theta2 - FRAC_PI_2 - (0.25 / (l1 + 0.25f64)).atan()).abs() < 1e-15);
    }

    #[test]
    fn level_set_examples() {
        let t = make_chebychev(FRAC_PI_4).unwrap();
        // Below the direction ray the second term binds.
        assert_eq!(t.level_set_residual(z(0.7, 0.2), 0.0, 1e-3).unwrap(), 0.0);
        let ws = unit_weights(0.0, 1.0);
        for z0 in [z(0.1, 0.9), z(0.5, 0.5), z(0.3, 0.05)] {
            assert!(ws.level_set_residual(z0, -FRAC_PI_4, 1e-4).unwrap() <= 1e-12);
        }
        let norm = make_norm(FRAC_PI_4, 0.5).unwrap();
        let theta1 = norm.opening_angles().theta1;
        assert!(norm.level_set_residual(z(0.9, 0.3), theta1, 1e-4).unwrap() <= 1e-9);
        assert!(norm.level_set_residual(z(0.9, 0.3), -0.321_751, 1e-4).unwrap() <= 1e-9);
    }

    #[test]
    fn kink_crossing_is_detected() {
        let t = make_chebychev(FRAC_PI_4).unwrap();
        // Just below the diagonal; moving left makes the first term bind.
        let pi = std::f64::consts::PI;
        assert!(matches!(t.level_set_residual(z(0.5, 0.5 - 1e-6), pi, 1e-3), Err(Error::KinkCrossed)));
        assert!(t.level_set_residual(z(0.5, 0.5), 0.0, 0.0).is_err());
    }

    #[test]
    fn iso_apex_lies_on_level_line_and_kink() {
        let c = make_norm(0.4, 0.35).unwrap();
        let p = z(0.62, 0.41);
        let apex = c.iso_apex(p);
        assert!((c.value(apex) - c.value(p)).abs() < 1e-12);
        let [l1, l2] = c.lambda();
        assert!((l1 * (1.0 - apex.z1) - l2 * (1.0 - apex.z2)).abs() < 1e-12);
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for k in [ScalarizerKind::Ws, ScalarizerKind::Chebychev, ScalarizerKind::Aug, ScalarizerKind::Norm] {
            assert_eq!(k.as_str().parse::<ScalarizerKind>().unwrap(), k);
        }
        assert!("pbi".parse::<ScalarizerKind>().is_err());
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    fn delta() -> impl Strategy<Value = f64> {
        (1u32..100).prop_map(|j| j as f64 * 1e-2 * FRAC_PI_2)
    }

    proptest! {
        #[test]
        fn norm_reduces_to_ws_and_t(d in delta(), a in unit(), b in unit()) {
            let p = z(a, b);
            let t = make_chebychev(d).unwrap();
            prop_assert_eq!(make_norm(d, 0.0).unwrap().value(p), t.value(p));
            let ws = make_ws(d).unwrap();
            prop_assert!((make_norm(d, 1.0).unwrap().value(p) - ws.value(p)).abs() <= 1e-12);
        }

        #[test]
        fn dominance_means_strictly_lower_value(
            d in delta(), eps in prop_oneof![Just(0.0), 0.01..=1.0f64],
            a in unit(), b in unit(), da in 0.0..0.5f64, db in 0.0..0.5f64,
        ) {
            let worse = z(a * (1.0 - da), b * (1.0 - db));
            // Differences below rounding resolution cannot show up in the value.
            prop_assume!(a - worse.z1 > 1e-9 || b - worse.z2 > 1e-9);
            let better = z(a, b);
            let c = make_norm(d, eps).unwrap();
            if eps > 0.0 {
                prop_assert!(c.value(better) < c.value(worse));
            } else {
                prop_assert!(c.value(better) <= c.value(worse));
            }
        }

        #[test]
        fn angle_intervals(d in delta(), eps in 0.0..=1.0f64, aug_eps in 0.0..=100.0f64) {
            let t1 = make_norm(d, eps).unwrap().opening_angles().theta1;
            prop_assert!(t1 <= 0.0 && t1 >= d - FRAC_PI_2 - 1e-12);
            let a = make_aug(d, aug_eps).unwrap().opening_angles();
            prop_assert!(a.theta1 <= 0.0 && a.theta1 >= -FRAC_PI_4);
            prop_assert!(a.theta2 >= FRAC_PI_2 && a.theta2 <= 3.0 * FRAC_PI_4);
        }

        #[test]
        fn common_weight_scaling(
            eps in 0.0..=1.0f64, factor in 0.01..100.0f64,
            pts in proptest::collection::vec((unit(), unit()), 1..20),
        ) {
            let base = ScalarizerConfig::new(1.0 - eps + 0.1, eps, [1.3, 2.1], [0.4, 0.9], DEFAULT_UTOPIA).unwrap();
            let scaled = ScalarizerConfig::new(
                1.0 - eps + 0.1, eps, [1.3 * factor, 2.1 * factor], [0.4 * factor, 0.9 * factor], DEFAULT_UTOPIA,
            ).unwrap();
            let argmin = |c: &ScalarizerConfig| {
                pts.iter().enumerate()
                    .min_by(|x, y| c.value(z(x.1.0, x.1.1)).total_cmp(&c.value(z(y.1.0, y.1.1))))
                    .map(|(i, _)| i)
            };
            for &(a, b) in &pts {
                let (v, s) = (base.value(z(a, b)), scaled.value(z(a, b)));
                prop_assert!((s - factor * v).abs() <= 1e-12 * (1.0 + s.abs()));
            }
            // Exact ties may be broken differently after rounding; compare values instead.
            let (i, j) = (argmin(&base).unwrap(), argmin(&scaled).unwrap());
            let (zi, zj) = (z(pts[i].0, pts[i].1), z(pts[j].0, pts[j].1));
            prop_assert!((base.value(zi) - base.value(zj)).abs() <= 1e-12);
        }
    }
}
