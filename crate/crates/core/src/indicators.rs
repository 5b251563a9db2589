//! Point- and set-based quality measures (both objectives maximized).

use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Error, Result};
use crate::evolve::RunKey;
use crate::landscape::ObjectiveVector;
use crate::scalarize::ScalarizerConfig;

/// `a` dominates `b`: no worse in both objectives and strictly better in one.
pub fn dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool {
    a.z1 >= b.z1 && a.z2 >= b.z2 && (a.z1 > b.z1 || a.z2 > b.z2)
}

/// An objective vector with the run that produced it, if known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxPoint {
    pub z: ObjectiveVector,
    pub origin: Option<RunKey>,
}

impl From<ObjectiveVector> for ApproxPoint {
    fn from(z: ObjectiveVector) -> Self {
        Self { z, origin: None }
    }
}

/// A mutually non-dominated, duplicate-free set sorted by descending z1
/// (hence ascending z2). Only [`pareto_filter`] builds one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ApproxSet {
    points: Vec<ApproxPoint>,
}

impl ApproxSet {
    pub fn points(&self) -> &[ApproxPoint] {
        &self.points
    }

    pub fn vectors(&self) -> impl Iterator<Item = ObjectiveVector> + '_ {
        self.points.iter().map(|p| p.z)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Keeps the non-dominated points; among duplicates the first one seen survives.
pub fn pareto_filter<I, P>(points: I) -> ApproxSet
where
    I: IntoIterator<Item = P>,
    P: Into<ApproxPoint>,
{
    let mut all: Vec<ApproxPoint> = points.into_iter().map(Into::into).collect();
    all.sort_by(|a, b| b.z.z1.total_cmp(&a.z.z1).then(b.z.z2.total_cmp(&a.z.z2)));
    let mut kept: Vec<ApproxPoint> = Vec::new();
    for p in all {
        // Sorted by z1 descending, so p survives iff it beats every kept z2.
        if kept.last().is_none_or(|last| p.z.z2 > last.z.z2) {
            kept.push(p);
        }
    }
    ApproxSet { points: kept }
}

/// Polar angle of `z` w.r.t. the f1-axis, in [0, π/2] for non-negative input.
pub fn final_angle(z: ObjectiveVector) -> Result<f64> {
    if z.z1 == 0.0 && z.z2 == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    if z.z1 == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok((z.z2 / z.z1).atan())
}

/// Relative excess of `T(z)` over `T(best)` for a pure Chebychev config.
///
/// Negative values mean `z` beats the recorded best, which signals a stale registry.
pub fn deviation_to_best(z: ObjectiveVector, best: ObjectiveVector, chebychev: &ScalarizerConfig) -> Result<f64> {
    let reference = chebychev.value(best);
    if reference == 0.0 {
        return Err(Error::ZeroBest);
    }
    Ok((chebychev.value(z) - reference) / reference)
}

/// Area dominated by `set` and bounded below by `reference`.
pub fn hypervolume(set: &ApproxSet, reference: ObjectiveVector) -> Result<f64> {
    if let Some(p) = set.points.iter().find(|p| !(p.z.z1 > reference.z1 && p.z.z2 > reference.z2)) {
        return Err(Error::NotAboveReference { z1: p.z.z1, z2: p.z.z2 });
    }
    let mut area = 0.0;
    let mut floor = reference.z2;
    for p in &set.points {
        area += (p.z.z1 - reference.z1) * (p.z.z2 - floor);
        floor = p.z.z2;
    }
    Ok(area)
}

/// Reference point and best-known set against which approximations are judged.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceData {
    pub ref_point: ObjectiveVector,
    pub ref_set: ApproxSet,
}

impl ReferenceData {
    pub fn new(ref_point: ObjectiveVector, ref_set: ApproxSet) -> Result<Self> {
        hypervolume(&ref_set, ref_point)?;
        Ok(Self { ref_point, ref_set })
    }

    /// Reference set built from everything observed, with the origin as reference point.
    pub fn from_points<I, P>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: Into<ApproxPoint>,
    {
        Self::new(ObjectiveVector::new(0.0, 0.0), pareto_filter(points))
    }
}

/// `HV(reference set) − HV(set)`.
pub fn hypervolume_difference(set: &ApproxSet, reference: &ReferenceData) -> Result<f64> {
    Ok(hypervolume(&reference.ref_set, reference.ref_point)? - hypervolume(set, reference.ref_point)?)
}

fn check_positive(z: ObjectiveVector) -> Result<()> {
    if z.z1 > 0.0 && z.z2 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { z1: z.z1, z2: z.z2 })
    }
}

/// Multiplicative epsilon indicator `max_r min_a max_i r_i / a_i`.
///
/// The smallest factor by which `set` must be scaled up to weakly dominate `reference`.
pub fn multiplicative_epsilon(set: &ApproxSet, reference: &ApproxSet) -> Result<f64> {
    if set.is_empty() || reference.is_empty() {
        return Err(invalid("epsilon indicator needs non-empty sets"));
    }
    for z in set.vectors().chain(reference.vectors()) {
        check_positive(z)?;
    }
    let worst = reference
        .vectors()
        .map(|r| {
            set.vectors()
                .map(|a| (r.z1 / a.z1).max(r.z2 / a.z2))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(worst)
}
