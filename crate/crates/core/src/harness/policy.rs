//! ε policies: which ε each direction uses when the final points of one replicate
//! are pooled into a single approximation set.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::analysis::DeviationAnalysis;
use super::Results;
use crate::error::{Error, Result};
use crate::evolve::RunKey;
use crate::indicators::{hypervolume_difference, multiplicative_epsilon, pareto_filter, ApproxPoint, ReferenceData};
use crate::scalarize::ScalarizerKind;

#[derive(Debug, Clone, PartialEq)]
pub enum EpsChoice {
    Uniform(f64),
    /// ε per direction index; must cover the whole direction grid.
    PerDirection(BTreeMap<usize, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsPolicy {
    pub label: String,
    pub kind: ScalarizerKind,
    pub choice: EpsChoice,
}

impl EpsPolicy {
    pub fn uniform(kind: ScalarizerKind, eps: f64) -> Self {
        Self {
            label: format!("{kind}({eps})"),
            kind,
            choice: EpsChoice::Uniform(eps),
        }
    }

    pub fn nonuniform(kind: ScalarizerKind, map: BTreeMap<usize, f64>) -> Self {
        Self {
            label: format!("{kind}*"),
            kind,
            choice: EpsChoice::PerDirection(map),
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The per-direction ε* of `analysis` for one ρ.
    pub fn best_deviation(analysis: &DeviationAnalysis, rho_index: usize, kind: ScalarizerKind) -> Self {
        Self::nonuniform(kind, analysis.best_eps_map(rho_index, kind))
    }

    pub fn eps_for(&self, delta_index: usize) -> Option<f64> {
        match &self.choice {
            EpsChoice::Uniform(eps) => Some(*eps),
            EpsChoice::PerDirection(map) => map.get(&delta_index).copied(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.choice, EpsChoice::Uniform(_))
    }
}

impl fmt::Display for EpsPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Indicator values of one replicate's pooled approximation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyScore {
    pub run: usize,
    pub hv_diff: f64,
    pub eps_ind: f64,
    pub n_points: usize,
}

/// Reference set for one ρ: the non-dominated final points of every run, judged
/// from the origin.
pub fn reference_data(results: &Results, rho_index: usize) -> Result<ReferenceData> {
    let records = results.for_rho(rho_index);
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    ReferenceData::from_points(records.iter().map(|r| ApproxPoint {
        z: r.final_z,
        origin: Some(r.key),
    }))
}

/// For every replicate, pools the final points of all directions under the policy's
/// ε map, filters them and scores the result against `reference`.
pub fn evaluate_policy(
    results: &Results,
    rho_index: usize,
    policy: &EpsPolicy,
    reference: &ReferenceData,
) -> Result<Vec<PolicyScore>> {
    let c = &results.campaign;
    let mut cells = Vec::new();
    for (delta_index, _) in c.deltas() {
        let eps = policy
            .eps_for(delta_index)
            .ok_or_else(|| Error::MissingCell(format!("policy {policy} has no eps for direction index {delta_index}")))?;
        let eps_index = c
            .eps_index(policy.kind, eps)
            .ok_or_else(|| Error::MissingCell(format!("eps {eps} is not in the {} grid", policy.kind)))?;
        cells.push((delta_index, eps_index));
    }
    (0..c.runs)
        .map(|run| {
            let points = cells
                .iter()
                .map(|&(delta_index, eps_index)| {
                    let key = RunKey {
                        rho_index,
                        kind: policy.kind,
                        delta_index,
                        eps_index,
                        run,
                    };
                    let r = results.require(&key)?;
                    Ok(ApproxPoint {
                        z: r.final_z,
                        origin: Some(key),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let set = pareto_filter(points);
            Ok(PolicyScore {
                run,
                hv_diff: hypervolume_difference(&set, reference)?,
                eps_ind: multiplicative_epsilon(&set, &reference.ref_set)?,
                n_points: set.len(),
            })
        })
        .collect()
}

/// The comparison set for one ρ: WS, T and the per-direction ε* policy of each
/// generalized kind, as far as the campaign grid provides them.
pub fn comparison_policies(results: &Results, analysis: &DeviationAnalysis, rho_index: usize) -> Vec<EpsPolicy> {
    use ScalarizerKind::*;
    let c = &results.campaign;
    let first = |kind| c.eps_grid(kind).map(|g| g[0]);
    let with = |kind, eps: f64| c.eps_index(kind, eps).map(|_| EpsPolicy::uniform(kind, eps));
    let mut out = Vec::new();
    let ws = first(Ws).map(|e| EpsPolicy::uniform(Ws, e)).or_else(|| with(Norm, 1.0));
    let t = first(Chebychev)
        .map(|e| EpsPolicy::uniform(Chebychev, e))
        .or_else(|| with(Norm, 0.0))
        .or_else(|| with(Aug, 0.0));
    out.extend(ws.map(|p| p.labeled("WS")));
    out.extend(t.map(|p| p.labeled("T")));
    for kind in [Norm, Aug] {
        if c.eps_grid(kind).is_some() {
            out.push(EpsPolicy::best_deviation(analysis, rho_index, kind));
        }
    }
    out
}
