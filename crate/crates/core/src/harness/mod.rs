//! Experiment campaigns: grids, execution, the on-disk store, analyses and reports.

pub mod analysis;
pub mod campaign;
pub mod policy;
pub mod report;
pub mod store;

pub use analysis::{
    analyze_angles, analyze_deviation, build_best_registry, fit_phi_theta, AngleRow, BestEntry, BestEpsRow,
    BestRegistry, DeviationAnalysis, DeviationRow, DEFAULT_FIT_RANGE,
};
pub use campaign::{Campaign, CampaignFile, EpsGrid, Profile, SCHEMA};
pub use policy::{comparison_policies, evaluate_policy, reference_data, EpsChoice, EpsPolicy, PolicyScore};
pub use report::{analyze, dynamics_keys, comparison, write_report, Analyses, ComparisonRow};
pub use store::{execute_campaign, load_results, load_trajectories, run_campaign, RunOptions, RunSummary};

use crate::error::{Error, Result};
use std::collections::BTreeMap;

use crate::evolve::{RunKey, RunRecord, TrajectoryPoint};

/// Completed runs of a campaign, sorted by key.
#[derive(Debug, Clone)]
pub struct Results {
    pub campaign: Campaign,
    records: Vec<RunRecord>,
}

impl Results {
    pub fn new(campaign: Campaign, mut records: Vec<RunRecord>) -> Self {
        records.sort_by_key(|r| r.key);
        records.dedup_by_key(|r| r.key);
        Self { campaign, records }
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &RunKey) -> Option<&RunRecord> {
        self.records
            .binary_search_by_key(key, |r| r.key)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn require(&self, key: &RunKey) -> Result<&RunRecord> {
        self.get(key).ok_or_else(|| Error::MissingCell(key.to_string()))
    }

    /// Records grouped by cell, i.e. by key without the run index.
    pub fn cells(&self) -> impl Iterator<Item = &[RunRecord]> {
        self.records.chunk_by(|a, b| cell_of(&a.key) == cell_of(&b.key))
    }

    /// Replaces the trajectories of the listed runs.
    pub fn attach_trajectories(&mut self, paths: BTreeMap<RunKey, Vec<TrajectoryPoint>>) {
        for (key, path) in paths {
            if let Ok(i) = self.records.binary_search_by_key(&key, |r| r.key) {
                self.records[i].trajectory = path;
            }
        }
    }

    /// Every run for one ρ.
    pub fn for_rho(&self, rho_index: usize) -> &[RunRecord] {
        let start = self.records.partition_point(|r| r.key.rho_index < rho_index);
        let end = self.records.partition_point(|r| r.key.rho_index <= rho_index);
        &self.records[start..end]
    }
}

fn cell_of(key: &RunKey) -> RunKey {
    RunKey { run: 0, ..*key }
}
