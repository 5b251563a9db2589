//! Campaign execution and the on-disk results store.
//!
//! A store directory holds:
//!
//! - `manifest.toml`: the resolved campaign with every grid listed;
//! - `instances/rho{i}.rmnk`: one binary instance per ρ;
//! - `results.csv`: one row per run;
//! - `trajectories.csv`: the parent path of each run, keyed by `run_id`;
//! - `offspring.csv`: every offspring evaluation, only with `dump_offspring`.
//!
//! Rows are appended one (ρ, kind) chunk at a time, trajectories before results, so an
//! interrupted run leaves a canonical prefix that a later call completes.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Campaign, Results};
use crate::error::{invalid, Error, Result};
use crate::evolve::{bits_from_str, bits_to_string, run_ea_recording, RunKey, RunRecord, TrajectoryPoint};
use crate::landscape::{generate_instance, Instance, ObjectiveVector};

pub const MANIFEST: &str = "manifest.toml";
pub const RESULTS: &str = "results.csv";
pub const TRAJECTORIES: &str = "trajectories.csv";
pub const OFFSPRING: &str = "offspring.csv";
pub const INSTANCES: &str = "instances";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub dump_offspring: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            dump_offspring: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultRow {
    run_id: String,
    instance_id: String,
    rho_index: usize,
    rho: f64,
    kind: String,
    delta_index: usize,
    delta: f64,
    eps_index: usize,
    eps: f64,
    run: usize,
    seed: u64,
    z1: f64,
    z2: f64,
    value: f64,
    bits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryRow {
    run_id: String,
    iteration: usize,
    value: f64,
    z1: f64,
    z2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OffspringRow {
    run_id: String,
    generation: usize,
    index: usize,
    z1: f64,
    z2: f64,
}

impl ResultRow {
    fn from_record(r: &RunRecord) -> Self {
        Self {
            run_id: r.key.to_string(),
            instance_id: r.instance_id.clone(),
            rho_index: r.key.rho_index,
            rho: r.rho,
            kind: r.key.kind.to_string(),
            delta_index: r.key.delta_index,
            delta: r.delta,
            eps_index: r.key.eps_index,
            eps: r.eps,
            run: r.key.run,
            seed: r.seed,
            z1: r.final_z.z1,
            z2: r.final_z.z2,
            value: r.final_value,
            bits: bits_to_string(&r.final_bits),
        }
    }

    fn into_record(self) -> Result<RunRecord> {
        let key: RunKey = self.run_id.parse()?;
        if key.kind.as_str() != self.kind
            || key.rho_index != self.rho_index
            || key.delta_index != self.delta_index
            || key.eps_index != self.eps_index
            || key.run != self.run
        {
            return Err(Error::Format(format!("run id `{}` disagrees with its columns", self.run_id)));
        }
        Ok(RunRecord {
            key,
            instance_id: self.instance_id,
            rho: self.rho,
            delta: self.delta,
            eps: self.eps,
            seed: self.seed,
            final_bits: bits_from_str(&self.bits)?,
            final_z: ObjectiveVector::new(self.z1, self.z2),
            final_value: self.value,
            trajectory: Vec::new(),
            offspring: None,
        })
    }
}

pub fn generate_instances(campaign: &Campaign) -> Result<Vec<Instance>> {
    (0..campaign.rhos.len())
        .map(|i| generate_instance(campaign.instance_params(i)))
        .collect()
}

/// Executes one run. `instance` must be the instance of `key.rho_index`.
pub fn execute_run(campaign: &Campaign, instance: &Instance, key: RunKey, record_offspring: bool) -> Result<RunRecord> {
    let cfg = campaign.config(&key)?;
    let seed = key.seed(campaign.master_seed);
    let run = run_ea_recording(instance, &cfg, &campaign.ea_params(seed), record_offspring)?;
    Ok(RunRecord {
        key,
        instance_id: campaign.instance_id(key.rho_index),
        rho: campaign.rhos[key.rho_index],
        delta: campaign.delta(key.delta_index),
        eps: cfg.eps(),
        seed,
        final_bits: run.final_bits,
        final_z: run.final_z,
        final_value: run.final_value,
        trajectory: run.trajectory,
        offspring: run.offspring,
    })
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

fn execute_keys(
    pool: &rayon::ThreadPool,
    campaign: &Campaign,
    instances: &[Instance],
    keys: &[RunKey],
    record_offspring: bool,
) -> Result<Vec<RunRecord>> {
    pool.install(|| {
        keys.par_iter()
            .map(|key| execute_run(campaign, &instances[key.rho_index], *key, record_offspring))
            .collect()
    })
}

/// Runs the whole campaign in memory.
pub fn execute_campaign(campaign: &Campaign, options: RunOptions) -> Result<Results> {
    campaign.validate()?;
    let instances = generate_instances(campaign)?;
    let pool = build_pool(options.workers)?;
    let records = execute_keys(&pool, campaign, &instances, &campaign.run_keys(), options.dump_offspring)?;
    Ok(Results::new(campaign.clone(), records))
}

fn csv_writer<W: Write>(w: W, headers: bool) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(headers)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Opens an append-only CSV, dropping a torn last line and writing the header if the
/// file is new.
fn open_append(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path)?;
    let mut text = Vec::new();
    file.read_to_end(&mut text)?;
    let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    file.set_len(keep as u64)?;
    file.seek(SeekFrom::End(0))?;
    let mut writer = csv_writer(BufWriter::new(file), false);
    if keep == 0 {
        writer.write_record(header)?;
        writer.flush()?;
    }
    Ok(writer)
}

const RESULT_HEADER: &[&str] = &[
    "run_id", "instance_id", "rho_index", "rho", "kind", "delta_index", "delta", "eps_index", "eps", "run", "seed",
    "z1", "z2", "value", "bits",
];
const TRAJECTORY_HEADER: &[&str] = &["run_id", "iteration", "value", "z1", "z2"];
const OFFSPRING_HEADER: &[&str] = &["run_id", "generation", "index", "z1", "z2"];

fn read_result_rows(path: &Path) -> Result<Vec<ResultRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut text = fs::read(path)?;
    let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    text.truncate(keep);
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_slice());
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Rewrites a sidecar file keeping only rows whose first column is a completed run id.
fn drop_orphans(path: &Path, done: &HashSet<String>) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(BufReader::new(File::open(path)?));
        let mut writer = csv_writer(BufWriter::new(File::create(&tmp)?), false);
        let header = reader.headers()?.clone();
        writer.write_record(&header)?;
        for record in reader.records() {
            let Ok(record) = record else { break };
            if record.len() == header.len() && done.contains(&record[0]) {
                writer.write_record(&record)?;
            }
        }
        writer.flush()?;
    }
    // The reader may have stopped at a torn line; the tmp copy is always whole.
    fs::rename(tmp, path)?;
    Ok(())
}

fn write_manifest(dir: &Path, campaign: &Campaign) -> Result<()> {
    let path = dir.join(MANIFEST);
    let text = campaign.to_toml_string()?;
    if path.exists() {
        let existing = Campaign::from_toml_str(&fs::read_to_string(&path)?)?;
        if existing != *campaign {
            return Err(invalid(format!(
                "{} describes a different campaign; use a fresh output directory",
                path.display()
            )));
        }
    } else {
        fs::write(&path, text)?;
    }
    Ok(())
}

pub fn instance_path(dir: &Path, rho_index: usize) -> PathBuf {
    dir.join(INSTANCES).join(format!("rho{rho_index}.rmnk"))
}

/// Executes the campaign into `dir`, skipping runs already present there.
pub fn run_campaign(campaign: &Campaign, dir: &Path, options: RunOptions) -> Result<RunSummary> {
    campaign.validate()?;
    fs::create_dir_all(dir.join(INSTANCES))?;
    write_manifest(dir, campaign)?;

    let instances = generate_instances(campaign)?;
    for (i, inst) in instances.iter().enumerate() {
        let path = instance_path(dir, i);
        if !path.exists() {
            inst.write_binary(BufWriter::new(File::create(path)?))?;
        }
    }

    let done: HashSet<String> = read_result_rows(&dir.join(RESULTS))?.into_iter().map(|r| r.run_id).collect();
    if !done.is_empty() {
        info!("resuming: {} runs already stored", done.len());
    }
    drop_orphans(&dir.join(TRAJECTORIES), &done)?;
    drop_orphans(&dir.join(OFFSPRING), &done)?;

    let mut results = open_append(&dir.join(RESULTS), RESULT_HEADER)?;
    let mut trajectories = open_append(&dir.join(TRAJECTORIES), TRAJECTORY_HEADER)?;
    let mut offspring = if options.dump_offspring {
        Some(open_append(&dir.join(OFFSPRING), OFFSPRING_HEADER)?)
    } else {
        None
    };

    let pool = build_pool(options.workers)?;
    let keys = campaign.run_keys();
    let mut summary = RunSummary { executed: 0, skipped: 0 };
    for chunk in keys.chunk_by(|a, b| (a.rho_index, a.kind) == (b.rho_index, b.kind)) {
        let pending: Vec<RunKey> = chunk.iter().filter(|k| !done.contains(&k.to_string())).copied().collect();
        summary.skipped += chunk.len() - pending.len();
        if pending.is_empty() {
            continue;
        }
        debug!("rho {} / {}: {} runs", chunk[0].rho_index, chunk[0].kind, pending.len());
        let records = execute_keys(&pool, campaign, &instances, &pending, options.dump_offspring)?;
        for r in &records {
            let id = r.key.to_string();
            for (iteration, t) in r.trajectory.iter().enumerate() {
                trajectories.serialize(TrajectoryRow {
                    run_id: id.clone(),
                    iteration,
                    value: t.value,
                    z1: t.parent.z1,
                    z2: t.parent.z2,
                })?;
            }
            if let (Some(w), Some(clouds)) = (offspring.as_mut(), r.offspring.as_ref()) {
                for (generation, cloud) in clouds.iter().enumerate() {
                    for (index, z) in cloud.iter().enumerate() {
                        w.serialize(OffspringRow {
                            run_id: id.clone(),
                            generation: generation + 1,
                            index,
                            z1: z.z1,
                            z2: z.z2,
                        })?;
                    }
                }
            }
        }
        trajectories.flush()?;
        if let Some(w) = offspring.as_mut() {
            w.flush()?;
        }
        for r in &records {
            results.serialize(ResultRow::from_record(r))?;
        }
        results.flush()?;
        summary.executed += records.len();
        info!("{} / {} runs stored", summary.executed + summary.skipped, keys.len());
    }
    Ok(summary)
}

pub fn load_campaign(dir: &Path) -> Result<Campaign> {
    Campaign::from_toml_str(&fs::read_to_string(dir.join(MANIFEST))?)
}

/// Loads a store. Trajectories are attached only when `with_trajectories` is set.
pub fn load_results(dir: &Path, with_trajectories: bool) -> Result<Results> {
    let campaign = load_campaign(dir)?;
    let records = read_result_rows(&dir.join(RESULTS))?
        .into_iter()
        .map(ResultRow::into_record)
        .collect::<Result<Vec<_>>>()?;
    let mut results = Results::new(campaign, records);
    if with_trajectories {
        results.attach_trajectories(load_trajectories(dir, |_| true)?);
    }
    Ok(results)
}

/// Reads the trajectories of the runs accepted by `keep`.
pub fn load_trajectories(
    dir: &Path,
    keep: impl Fn(&RunKey) -> bool,
) -> Result<std::collections::BTreeMap<RunKey, Vec<TrajectoryPoint>>> {
    let mut out = std::collections::BTreeMap::<RunKey, Vec<TrajectoryPoint>>::new();
    let path = dir.join(TRAJECTORIES);
    if !path.exists() {
        return Ok(out);
    }
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    for row in reader.deserialize::<TrajectoryRow>() {
        let row = row?;
        let key: RunKey = row.run_id.parse()?;
        if !keep(&key) {
            continue;
        }
        let path = out.entry(key).or_default();
        if row.iteration != path.len() {
            return Err(Error::Format(format!("trajectory of {key} is out of order")));
        }
        path.push(TrajectoryPoint {
            value: row.value,
            parent: ObjectiveVector::new(row.z1, row.z2),
        });
    }
    Ok(out)
}
