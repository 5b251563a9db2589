//! Plot-ready CSV tables and a markdown summary.
//!
//! | file | content |
//! |------|---------|
//! | `angles.csv` | mean final angle and opening angles per cell |
//! | `deviation.csv` | mean deviation to best per cell |
//! | `best_eps.csv` | ε with the lowest mean deviation per (ρ, kind, δ) |
//! | `registry.csv` | best Chebychev point per (ρ, δ) |
//! | `regression.csv` | φ on θ1 fit per (ρ, kind) over δ ∈ (0, 3π/16] |
//! | `indicators.csv` | hypervolume difference and multiplicative epsilon per policy and replicate |
//! | `comparison.csv` | WS, T and the ε* policies with outperformance counts |
//! | `reference_rho{i}.csv` | reference set per ρ |
//! | `dynamics.csv` | parent paths and equal-value lines of a few selected runs |
//! | `summary.md` | the comparison table and fits in readable form |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::Serialize;

use super::analysis::{
    analyze_angles, analyze_deviation, build_best_registry, fit_phi_theta, AngleRow, BestRegistry, DeviationAnalysis,
    DEFAULT_FIT_RANGE,
};
use super::policy::{comparison_policies, evaluate_policy, reference_data, EpsPolicy, PolicyScore};
use super::{Campaign, Results};
use crate::error::Result;
use crate::evolve::RunKey;
use crate::indicators::ReferenceData;
use crate::scalarize::ScalarizerKind;
use crate::stats::{mean, outperformance_counts, Better, RegressionFit};

/// Significance level of the pairwise policy comparison.
pub const ALPHA: f64 = 0.05;

/// Everything derived from a results set before it is written out.
#[derive(Debug, Clone, Default)]
pub struct Analyses {
    pub angles: Vec<AngleRow>,
    pub registry: BestRegistry,
    pub deviation: DeviationAnalysis,
    pub regression: Vec<RegressionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegistryRow {
    pub rho_index: usize,
    pub rho: f64,
    pub delta_index: usize,
    pub delta: f64,
    pub z1: f64,
    pub z2: f64,
    pub t_value: f64,
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionRow {
    pub rho_index: usize,
    pub rho: f64,
    pub kind: ScalarizerKind,
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorRow {
    pub instance_id: String,
    pub rho: f64,
    pub scalarizer: ScalarizerKind,
    /// `uniform` or `nonuniform`.
    pub eps_policy: &'static str,
    /// Empty for non-uniform policies.
    pub eps: Option<f64>,
    pub hv_diff: f64,
    pub eps_ind: f64,
    pub n_points: usize,
    pub run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub rho_index: usize,
    pub rho: f64,
    pub policy: String,
    pub scalarizer: ScalarizerKind,
    pub mean_hv_diff: f64,
    /// Empty when a policy has fewer than two replicates.
    pub hv_outperformed_by: Option<usize>,
    pub mean_eps_ind: f64,
    pub eps_outperformed_by: Option<usize>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReferenceRow {
    z1: f64,
    z2: f64,
    run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsRow {
    pub run_id: String,
    pub rho: f64,
    pub delta: f64,
    pub eps: f64,
    pub generation: usize,
    /// `parent`, `apex`, `arm1` or `arm2`.
    pub series: &'static str,
    pub z1: f64,
    pub z2: f64,
}

const ANGLES_HEADER: &[&str] = &[
    "rho_index", "rho", "kind", "delta_index", "delta", "eps_index", "eps", "mean_phi", "theta1", "theta2", "runs",
];
const DEVIATION_HEADER: &[&str] =
    &["rho_index", "rho", "kind", "delta_index", "delta", "eps_index", "eps", "mean_deviation", "runs"];
const BEST_EPS_HEADER: &[&str] =
    &["rho_index", "rho", "kind", "delta_index", "delta", "eps_index", "eps", "mean_deviation"];
const REGISTRY_HEADER: &[&str] = &["rho_index", "rho", "delta_index", "delta", "z1", "z2", "t_value", "run_id"];
const REGRESSION_HEADER: &[&str] = &["rho_index", "rho", "kind", "slope", "intercept", "pearson_r", "n_points"];
const INDICATORS_HEADER: &[&str] =
    &["instance_id", "rho", "scalarizer", "eps_policy", "eps", "hv_diff", "eps_ind", "n_points", "run"];
const COMPARISON_HEADER: &[&str] = &[
    "rho_index", "rho", "policy", "scalarizer", "mean_hv_diff", "hv_outperformed_by", "mean_eps_ind",
    "eps_outperformed_by", "runs",
];
const REFERENCE_HEADER: &[&str] = &["z1", "z2", "run_id"];
const DYNAMICS_HEADER: &[&str] = &["run_id", "rho", "delta", "eps", "generation", "series", "z1", "z2"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn fit_rows(results: &Results, angles: &[AngleRow]) -> Vec<RegressionRow> {
    let c = &results.campaign;
    let mut out = Vec::new();
    for rho_index in 0..c.rhos.len() {
        for kind in c.kinds() {
            let rows: Vec<AngleRow> = angles
                .iter()
                .filter(|r| r.rho_index == rho_index && r.kind == kind)
                .cloned()
                .collect();
            if rows.is_empty() {
                continue;
            }
            match fit_phi_theta(&rows, DEFAULT_FIT_RANGE) {
                Ok(RegressionFit {
                    slope,
                    intercept,
                    pearson_r,
                    n_points,
                }) => out.push(RegressionRow {
                    rho_index,
                    rho: c.rhos[rho_index],
                    kind,
                    slope,
                    intercept,
                    pearson_r,
                    n_points,
                }),
                Err(e) => warn!("no phi/theta fit for rho {} / {kind}: {e}", c.rhos[rho_index]),
            }
        }
    }
    out
}

/// Angle, deviation and regression analyses; empty for empty results.
pub fn analyze(results: &Results) -> Result<Analyses> {
    if results.is_empty() {
        return Ok(Analyses::default());
    }
    let angles = analyze_angles(results)?;
    let registry = build_best_registry(results)?;
    let deviation = analyze_deviation(results, &registry)?;
    let regression = fit_rows(results, &angles);
    Ok(Analyses {
        angles,
        registry,
        deviation,
        regression,
    })
}

fn references(results: &Results) -> Result<BTreeMap<usize, ReferenceData>> {
    let mut out = BTreeMap::new();
    for rho_index in 0..results.campaign.rhos.len() {
        if !results.for_rho(rho_index).is_empty() {
            out.insert(rho_index, reference_data(results, rho_index)?);
        }
    }
    Ok(out)
}

/// Every uniform ε of every kind, then the ε* policy of each generalized kind.
fn indicator_policies(results: &Results, analyses: &Analyses, rho_index: usize) -> Vec<EpsPolicy> {
    let mut out = Vec::new();
    for (kind, grid) in &results.campaign.scalarizers {
        out.extend(grid.iter().map(|&eps| EpsPolicy::uniform(*kind, eps)));
    }
    for (kind, _) in &results.campaign.scalarizers {
        if matches!(kind, ScalarizerKind::Norm | ScalarizerKind::Aug) {
            out.push(EpsPolicy::best_deviation(&analyses.deviation, rho_index, *kind));
        }
    }
    out
}

pub fn indicator_rows(results: &Results, analyses: &Analyses) -> Result<Vec<IndicatorRow>> {
    let c = &results.campaign;
    let mut rows = Vec::new();
    for (rho_index, reference) in references(results)? {
        for policy in indicator_policies(results, analyses, rho_index) {
            let (eps_policy, eps) = match policy.eps_for(0).filter(|_| policy.is_uniform()) {
                Some(eps) => ("uniform", Some(eps)),
                None => ("nonuniform", None),
            };
            for s in evaluate_policy(results, rho_index, &policy, &reference)? {
                rows.push(IndicatorRow {
                    instance_id: c.instance_id(rho_index),
                    rho: c.rhos[rho_index],
                    scalarizer: policy.kind,
                    eps_policy,
                    eps,
                    hv_diff: s.hv_diff,
                    eps_ind: s.eps_ind,
                    n_points: s.n_points,
                    run: s.run,
                });
            }
        }
    }
    Ok(rows)
}

/// WS, T, S_norm* and S_aug* per ρ with the number of policies that significantly
/// beat each one on either indicator.
pub fn comparison(results: &Results, analyses: &Analyses) -> Result<Vec<ComparisonRow>> {
    let c = &results.campaign;
    let mut rows = Vec::new();
    for (rho_index, reference) in references(results)? {
        let policies = comparison_policies(results, &analyses.deviation, rho_index);
        let scores: Vec<Vec<PolicyScore>> = policies
            .iter()
            .map(|p| evaluate_policy(results, rho_index, p, &reference))
            .collect::<Result<_>>()?;
        let column = |f: fn(&PolicyScore) -> f64| -> Vec<Vec<f64>> {
            scores.iter().map(|s| s.iter().map(f).collect()).collect()
        };
        let hv = column(|s| s.hv_diff);
        let eps = column(|s| s.eps_ind);
        let counts = |groups: &[Vec<f64>]| -> Option<Vec<usize>> {
            (groups.len() >= 2 && c.runs >= 2)
                .then(|| outperformance_counts(groups, ALPHA, Better::Lower).ok())
                .flatten()
        };
        let (hv_counts, eps_counts) = (counts(&hv), counts(&eps));
        for (i, p) in policies.iter().enumerate() {
            rows.push(ComparisonRow {
                rho_index,
                rho: c.rhos[rho_index],
                policy: p.label.clone(),
                scalarizer: p.kind,
                mean_hv_diff: mean(&hv[i]),
                hv_outperformed_by: hv_counts.as_ref().map(|v| v[i]),
                mean_eps_ind: mean(&eps[i]),
                eps_outperformed_by: eps_counts.as_ref().map(|v| v[i]),
                runs: hv[i].len(),
            });
        }
    }
    Ok(rows)
}

/// Runs whose paths go to `dynamics.csv`: S_norm, replicate 0, for each ρ the
/// settings (δ ≈ 0.3·π/2, ε = 0), (δ ≈ 0.3·π/2, ε = 1) and (δ ≈ 0.7·π/2, ε = 0.6),
/// each snapped to the nearest grid value.
pub fn dynamics_keys(campaign: &Campaign) -> Vec<RunKey> {
    let Some(grid) = campaign.eps_grid(ScalarizerKind::Norm) else {
        return Vec::new();
    };
    let d = campaign.delta_divisions;
    let delta_index = |frac: f64| ((frac * d as f64).round() as usize).clamp(1, d - 1);
    let eps_index = |eps: f64| {
        (0..grid.len())
            .min_by(|&a, &b| (grid[a] - eps).abs().total_cmp(&(grid[b] - eps).abs()))
            .unwrap_or(0)
    };
    let mut keys = Vec::new();
    for rho_index in 0..campaign.rhos.len() {
        for (frac, eps) in [(0.3, 0.0), (0.3, 1.0), (0.7, 0.6)] {
            keys.push(RunKey {
                rho_index,
                kind: ScalarizerKind::Norm,
                delta_index: delta_index(frac),
                eps_index: eps_index(eps),
                run: 0,
            });
        }
    }
    keys.sort();
    keys.dedup();
    keys
}

/// Generations at which equal-value lines are drawn: 0, quarters, and the last.
fn marked_generations(last: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..=4).map(|q| q * last / 4).collect();
    g.dedup();
    g
}

pub fn dynamics_rows(results: &Results) -> Result<Vec<DynamicsRow>> {
    let c = &results.campaign;
    let mut rows = Vec::new();
    for key in dynamics_keys(c) {
        let Some(r) = results.get(&key) else { continue };
        if r.trajectory.is_empty() {
            continue;
        }
        let cfg = c.config(&key)?;
        let angles = cfg.opening_angles();
        let utopia = cfg.utopia();
        let row = |generation, series, z1, z2| DynamicsRow {
            run_id: key.to_string(),
            rho: r.rho,
            delta: r.delta,
            eps: r.eps,
            generation,
            series,
            z1,
            z2,
        };
        for (g, t) in r.trajectory.iter().enumerate() {
            rows.push(row(g, "parent", t.parent.z1, t.parent.z2));
        }
        for g in marked_generations(r.trajectory.len() - 1) {
            let apex = cfg.iso_apex(r.trajectory[g].parent);
            rows.push(row(g, "apex", apex.z1, apex.z2));
            // Each arm runs from the apex until it meets the utopian line it heads for.
            let (c1, s1) = (angles.theta1.cos(), angles.theta1.sin());
            let l1 = (utopia.z1 - apex.z1) / c1;
            rows.push(row(g, "arm1", apex.z1 + l1 * c1, apex.z2 + l1 * s1));
            let (c2, s2) = (angles.theta2.cos(), angles.theta2.sin());
            let l2 = (utopia.z2 - apex.z2) / s2;
            rows.push(row(g, "arm2", apex.z1 + l2 * c2, apex.z2 + l2 * s2));
        }
    }
    Ok(rows)
}

fn fmt_count(c: Option<usize>) -> String {
    c.map_or_else(String::new, |c| format!(" ({c})"))
}

fn summary_markdown(results: &Results, analyses: &Analyses, table: &[ComparisonRow]) -> String {
    let c = &results.campaign;
    let mut s = String::new();
    let _ = writeln!(s, "# Campaign summary\n");
    let _ = writeln!(
        s,
        "{} of {} runs; n = {}, k = {}; {} directions; {} replicates per cell; master seed {}.\n",
        results.records().len(),
        c.total_runs(),
        c.n,
        c.k,
        c.delta_divisions - 1,
        c.runs,
        c.master_seed
    );
    let mut labels: Vec<&str> = Vec::new();
    for row in table {
        if !labels.contains(&row.policy.as_str()) {
            labels.push(&row.policy);
        }
    }
    let sections: [(&str, fn(&ComparisonRow) -> String); 2] = [
        ("Average hypervolume difference (×10⁻¹)", |r| {
            format!("{:.3}{}", r.mean_hv_diff * 10.0, fmt_count(r.hv_outperformed_by))
        }),
        ("Average multiplicative epsilon", |r| {
            format!("{:.3}{}", r.mean_eps_ind, fmt_count(r.eps_outperformed_by))
        }),
    ];
    for (title, cell) in sections {
        let _ = writeln!(s, "## {title}\n");
        let _ = writeln!(s, "| ρ | {} |", labels.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(labels.len()));
        let mut by_rho: BTreeMap<usize, Vec<&ComparisonRow>> = BTreeMap::new();
        for row in table {
            by_rho.entry(row.rho_index).or_default().push(row);
        }
        for rows in by_rho.values() {
            let cells: Vec<String> = labels
                .iter()
                .map(|l| rows.iter().find(|r| r.policy == *l).map(|r| cell(r)).unwrap_or_default())
                .collect();
            let _ = writeln!(s, "| {} | {} |", rows[0].rho, cells.join(" | "));
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(
        s,
        "Parentheses: number of policies that beat the row at p < {ALPHA} (two-sided Mann-Whitney, lower is better).\n"
    );
    let _ = writeln!(s, "## Final angle against opening angle, δ ∈ (0, 3π/16]\n");
    let _ = writeln!(s, "| ρ | kind | slope | intercept | r |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for r in &analyses.regression {
        let _ = writeln!(
            s,
            "| {} | {} | {:.3} | {:.3} | {:.3} |",
            r.rho, r.kind, r.slope, r.intercept, r.pearson_r
        );
    }
    s
}

/// Angle, deviation, registry and regression tables.
pub fn write_analysis(results: &Results, analyses: &Analyses, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("angles.csv"), ANGLES_HEADER, &analyses.angles)?;
    write_csv(&dir.join("deviation.csv"), DEVIATION_HEADER, &analyses.deviation.cells)?;
    write_csv(&dir.join("best_eps.csv"), BEST_EPS_HEADER, &analyses.deviation.best_eps)?;
    let c = &results.campaign;
    write_csv(
        &dir.join("registry.csv"),
        REGISTRY_HEADER,
        analyses.registry.iter().map(|((rho_index, delta_index), e)| RegistryRow {
            rho_index,
            rho: c.rhos[rho_index],
            delta_index,
            delta: c.delta(delta_index),
            z1: e.z.z1,
            z2: e.z.z2,
            t_value: e.t_value,
            run_id: e.origin.to_string(),
        }),
    )?;
    write_csv(&dir.join("regression.csv"), REGRESSION_HEADER, &analyses.regression)
}

pub fn write_indicators(results: &Results, analyses: &Analyses, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("indicators.csv"), INDICATORS_HEADER, indicator_rows(results, analyses)?)
}

/// Writes every table and `summary.md` into `dir`. Trajectories, when attached to
/// the records, feed `dynamics.csv`.
pub fn write_report(results: &Results, dir: &Path) -> Result<()> {
    let analyses = analyze(results)?;
    write_analysis(results, &analyses, dir)?;
    write_indicators(results, &analyses, dir)?;
    let table = comparison(results, &analyses)?;
    write_csv(&dir.join("comparison.csv"), COMPARISON_HEADER, &table)?;
    for rho_index in 0..results.campaign.rhos.len() {
        let rows: Vec<ReferenceRow> = if results.for_rho(rho_index).is_empty() {
            Vec::new()
        } else {
            reference_data(results, rho_index)?
                .ref_set
                .points()
                .iter()
                .map(|p| ReferenceRow {
                    z1: p.z.z1,
                    z2: p.z.z2,
                    run_id: p.origin.map(|k| k.to_string()).unwrap_or_default(),
                })
                .collect()
        };
        write_csv(&dir.join(format!("reference_rho{rho_index}.csv")), REFERENCE_HEADER, rows)?;
    }
    write_csv(&dir.join("dynamics.csv"), DYNAMICS_HEADER, dynamics_rows(results)?)?;
    let mut f = BufWriter::new(File::create(dir.join("summary.md"))?);
    f.write_all(summary_markdown(results, &analyses, &table).as_bytes())?;
    f.flush()?;
    Ok(())
}
