//! Aggregations over completed runs: final angles, deviation to best and the
//! regression of the final angle on the opening angle.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use super::Results;
use crate::error::{Error, Result};
use crate::evolve::{RunKey, RunRecord};
use crate::indicators::{deviation_to_best, final_angle};
use crate::landscape::ObjectiveVector;
use crate::scalarize::{make_chebychev, ScalarizerConfig, ScalarizerKind};
use crate::stats::{linear_regression, mean, RegressionFit};

/// `(0, 3π/16]`.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (0.0, 3.0 * std::f64::consts::PI / 16.0);

/// Best final point found for one (ρ, δ) under the pure Chebychev function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestEntry {
    pub z: ObjectiveVector,
    pub t_value: f64,
    pub origin: RunKey,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BestRegistry {
    entries: BTreeMap<(usize, usize), BestEntry>,
}

fn chebychev_for(results: &Results, delta_index: usize) -> Result<ScalarizerConfig> {
    let c = &results.campaign;
    make_chebychev(c.delta(delta_index))?.with_utopia(c.utopia)
}

impl BestRegistry {
    /// Keeps `record` if its T value is strictly below the current entry.
    pub fn offer(&mut self, record: &RunRecord, chebychev: &ScalarizerConfig) -> bool {
        let t_value = chebychev.value(record.final_z);
        let slot = (record.key.rho_index, record.key.delta_index);
        match self.entries.get(&slot) {
            Some(e) if e.t_value <= t_value => false,
            _ => {
                self.entries.insert(
                    slot,
                    BestEntry {
                        z: record.final_z,
                        t_value,
                        origin: record.key,
                    },
                );
                true
            }
        }
    }

    pub fn get(&self, rho_index: usize, delta_index: usize) -> Option<&BestEntry> {
        self.entries.get(&(rho_index, delta_index))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &BestEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Minimum-T final point per (ρ, δ) over every kind, ε and run; the first run in
/// key order wins ties. Every (ρ, δ) of the grid must have at least one run.
pub fn build_best_registry(results: &Results) -> Result<BestRegistry> {
    let c = &results.campaign;
    let mut registry = BestRegistry::default();
    let cfgs: BTreeMap<usize, ScalarizerConfig> =
        c.deltas().map(|(j, _)| Ok((j, chebychev_for(results, j)?))).collect::<Result<_>>()?;
    for r in results.records() {
        let cfg = cfgs
            .get(&r.key.delta_index)
            .ok_or_else(|| Error::MissingCell(format!("direction index {} outside the grid", r.key.delta_index)))?;
        registry.offer(r, cfg);
    }
    for rho_index in 0..c.rhos.len() {
        for (j, _) in c.deltas() {
            if registry.get(rho_index, j).is_none() {
                return Err(Error::MissingCell(format!("no run for rho index {rho_index}, direction index {j}")));
            }
        }
    }
    Ok(registry)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleRow {
    pub rho_index: usize,
    pub rho: f64,
    pub kind: ScalarizerKind,
    pub delta_index: usize,
    pub delta: f64,
    pub eps_index: usize,
    pub eps: f64,
    pub mean_phi: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub runs: usize,
}

/// Mean final angle per cell next to the cell's opening angles.
pub fn analyze_angles(results: &Results) -> Result<Vec<AngleRow>> {
    let c = &results.campaign;
    results
        .cells()
        .map(|cell| {
            let key = cell[0].key;
            let angles = c.config(&key)?.opening_angles();
            let phis = cell.iter().map(|r| final_angle(r.final_z)).collect::<Result<Vec<_>>>()?;
            Ok(AngleRow {
                rho_index: key.rho_index,
                rho: cell[0].rho,
                kind: key.kind,
                delta_index: key.delta_index,
                delta: cell[0].delta,
                eps_index: key.eps_index,
                eps: cell[0].eps,
                mean_phi: mean(&phis),
                theta1: angles.theta1,
                theta2: angles.theta2,
                runs: cell.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub rho_index: usize,
    pub rho: f64,
    pub kind: ScalarizerKind,
    pub delta_index: usize,
    pub delta: f64,
    pub eps_index: usize,
    pub eps: f64,
    pub mean_deviation: f64,
    pub runs: usize,
}

/// The ε with the lowest mean deviation for one (ρ, kind, δ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestEpsRow {
    pub rho_index: usize,
    pub rho: f64,
    pub kind: ScalarizerKind,
    pub delta_index: usize,
    pub delta: f64,
    pub eps_index: usize,
    pub eps: f64,
    pub mean_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviationAnalysis {
    pub cells: Vec<DeviationRow>,
    pub best_eps: Vec<BestEpsRow>,
}

impl DeviationAnalysis {
    /// Per-direction ε* for one (ρ, kind), keyed by direction index.
    pub fn best_eps_map(&self, rho_index: usize, kind: ScalarizerKind) -> BTreeMap<usize, f64> {
        self.best_eps
            .iter()
            .filter(|b| b.rho_index == rho_index && b.kind == kind)
            .map(|b| (b.delta_index, b.eps))
            .collect()
    }
}

pub fn analyze_deviation(results: &Results, registry: &BestRegistry) -> Result<DeviationAnalysis> {
    let mut out = DeviationAnalysis::default();
    for cell in results.cells() {
        let key = cell[0].key;
        let best = registry.get(key.rho_index, key.delta_index).ok_or_else(|| {
            Error::MissingCell(format!("no best point for rho index {}, direction index {}", key.rho_index, key.delta_index))
        })?;
        let cheb = chebychev_for(results, key.delta_index)?;
        let devs = cell
            .iter()
            .map(|r| deviation_to_best(r.final_z, best.z, &cheb))
            .collect::<Result<Vec<_>>>()?;
        out.cells.push(DeviationRow {
            rho_index: key.rho_index,
            rho: cell[0].rho,
            kind: key.kind,
            delta_index: key.delta_index,
            delta: cell[0].delta,
            eps_index: key.eps_index,
            eps: cell[0].eps,
            mean_deviation: mean(&devs),
            runs: cell.len(),
        });
    }
    // Cells arrive sorted by (ρ, kind, δ, ε) with ε ascending, so a strict comparison
    // leaves ties on the smaller ε.
    for group in out
        .cells
        .chunk_by(|a, b| (a.rho_index, a.kind, a.delta_index) == (b.rho_index, b.kind, b.delta_index))
    {
        let mut best = &group[0];
        for row in &group[1..] {
            if row.mean_deviation < best.mean_deviation {
                best = row;
            }
        }
        out.best_eps.push(BestEpsRow {
            rho_index: best.rho_index,
            rho: best.rho,
            kind: best.kind,
            delta_index: best.delta_index,
            delta: best.delta,
            eps_index: best.eps_index,
            eps: best.eps,
            mean_deviation: best.mean_deviation,
        });
    }
    Ok(out)
}

/// Least-squares fit of mean φ on θ1 over the rows whose δ lies in `(lo, hi]`.
///
/// Rows with δ > π/4 enter mirrored across the diagonal, as
/// `(π/2 − θ2, π/2 − φ)`. Callers pick the rows of one ρ and one kind.
pub fn fit_phi_theta(rows: &[AngleRow], delta_range: (f64, f64)) -> Result<RegressionFit> {
    let (lo, hi) = delta_range;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.delta > lo && r.delta <= hi)
        .map(|r| {
            if r.delta <= FRAC_PI_4 {
                (r.theta1, r.mean_phi)
            } else {
                (FRAC_PI_2 - r.theta2, FRAC_PI_2 - r.mean_phi)
            }
        })
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!("{} cells in the direction range", xs.len())));
    }
    linear_regression(&xs, &ys)
}
