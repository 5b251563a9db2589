//! Scalarized (1+λ)-EA with standard bit mutation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::landscape::{Instance, ObjectiveVector};
use crate::scalarize::{ScalarizerConfig, ScalarizerKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EaParams {
    /// Offspring per generation (λ).
    pub offspring: usize,
    /// Independent per-bit flip probability.
    pub flip_rate: f64,
    /// Number of generations.
    pub max_iterations: usize,
    pub seed: u64,
}

impl EaParams {
    /// λ = n, flip rate 1/n, n generations.
    pub fn for_length(n: usize, seed: u64) -> Self {
        Self {
            offspring: n,
            flip_rate: 1.0 / n as f64,
            max_iterations: n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.offspring == 0 {
            return Err(invalid("offspring count must be at least 1"));
        }
        if !(self.flip_rate > 0.0 && self.flip_rate < 1.0) {
            return Err(invalid(format!("flip rate {} must lie in (0, 1)", self.flip_rate)));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Flips each bit independently with probability `flip_rate`.
pub fn mutate<R: Rng + ?Sized>(bits: &[bool], flip_rate: f64, rng: &mut R) -> Vec<bool> {
    let mut child = bits.to_vec();
    mutate_in_place(&mut child, flip_rate, rng);
    child
}

fn mutate_in_place<R: Rng + ?Sized>(bits: &mut [bool], flip_rate: f64, rng: &mut R) {
    for b in bits.iter_mut() {
        if rng.random_bool(flip_rate) {
            *b = !*b;
        }
    }
}

/// State after one generation (entry 0 is the initial solution).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub value: f64,
    pub parent: ObjectiveVector,
}

/// Outcome of a single EA execution.
#[derive(Debug, Clone, PartialEq)]
pub struct EaRun {
    pub final_bits: Vec<bool>,
    pub final_z: ObjectiveVector,
    pub final_value: f64,
    /// `max_iterations + 1` points: the initial parent, then one per generation.
    pub trajectory: Vec<TrajectoryPoint>,
    /// Objective vectors of every offspring, per generation, when requested.
    pub offspring: Option<Vec<Vec<ObjectiveVector>>>,
    /// Mutant evaluations performed.
    pub evaluations: usize,
}

/// Runs the EA with the trajectory of parents only.
pub fn run_ea(inst: &Instance, cfg: &ScalarizerConfig, params: &EaParams) -> Result<EaRun> {
    run_ea_recording(inst, cfg, params, false)
}

/// Runs the EA, optionally keeping every offspring's objective vector.
///
/// Selection keeps the minimum of parent and offspring; an offspring tying
/// with the parent replaces it, and tied offspring resolve to the earliest one.
pub fn run_ea_recording(
    inst: &Instance,
    cfg: &ScalarizerConfig,
    params: &EaParams,
    record_offspring: bool,
) -> Result<EaRun> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = inst.n();

    let mut parent: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let mut parent_z = inst.evaluate_unchecked(&parent);
    let mut parent_value = cfg.value(parent_z);

    let mut trajectory = Vec::with_capacity(params.max_iterations + 1);
    trajectory.push(TrajectoryPoint {
        value: parent_value,
        parent: parent_z,
    });
    let mut clouds = record_offspring.then(|| Vec::with_capacity(params.max_iterations));
    let mut evaluations = 0;

    let mut child = vec![false; n];
    let mut best_child = vec![false; n];
    for _ in 0..params.max_iterations {
        let mut best: Option<(f64, ObjectiveVector)> = None;
        let mut cloud = Vec::new();
        for _ in 0..params.offspring {
            child.copy_from_slice(&parent);
            mutate_in_place(&mut child, params.flip_rate, &mut rng);
            let z = inst.evaluate_unchecked(&child);
            let value = cfg.value(z);
            evaluations += 1;
            if record_offspring {
                cloud.push(z);
            }
            if best.is_none_or(|(v, _)| value < v) {
                best = Some((value, z));
                best_child.copy_from_slice(&child);
            }
        }
        if let Some((value, z)) = best {
            if value <= parent_value {
                std::mem::swap(&mut parent, &mut best_child);
                parent_z = z;
                parent_value = value;
            }
        }
        trajectory.push(TrajectoryPoint {
            value: parent_value,
            parent: parent_z,
        });
        if let Some(c) = clouds.as_mut() {
            c.push(cloud);
        }
    }

    Ok(EaRun {
        final_bits: parent,
        final_z: parent_z,
        final_value: parent_value,
        trajectory,
        offspring: clouds,
        evaluations,
    })
}

/// SplitMix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent 64-bit stream seed from a master seed and coordinates.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(master), |acc, &c| {
        mix64(acc ^ mix64(c.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// Coordinates of one run inside a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub rho_index: usize,
    pub kind: ScalarizerKind,
    /// Direction index `j` in `δ_j = j·(π/2)/divisions`.
    pub delta_index: usize,
    /// Position in the kind's sorted ε grid.
    pub eps_index: usize,
    pub run: usize,
}

impl RunKey {
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[
                RUN_STREAM,
                self.rho_index as u64,
                self.kind as u64,
                self.delta_index as u64,
                self.eps_index as u64,
                self.run as u64,
            ],
        )
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.rho_index, self.kind, self.delta_index, self.eps_index, self.run
        )
    }
}

impl std::str::FromStr for RunKey {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || crate::Error::Format(format!("bad run id `{s}`"));
        let [rho, kind, delta, eps, run] = parts[..] else {
            return Err(bad());
        };
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        Ok(Self {
            rho_index: num(rho)?,
            kind: kind.parse()?,
            delta_index: num(delta)?,
            eps_index: num(eps)?,
            run: num(run)?,
        })
    }
}

pub(crate) const RUN_STREAM: u64 = 1;
pub(crate) const INSTANCE_STREAM: u64 = 2;

/// One EA execution together with the campaign coordinates that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub key: RunKey,
    pub instance_id: String,
    pub rho: f64,
    pub delta: f64,
    pub eps: f64,
    pub seed: u64,
    pub final_bits: Vec<bool>,
    pub final_z: ObjectiveVector,
    pub final_value: f64,
    /// Empty when loaded from a store without trajectories.
    pub trajectory: Vec<TrajectoryPoint>,
    pub offspring: Option<Vec<Vec<ObjectiveVector>>>,
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn bits_from_str(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(crate::Error::Format(format!("bad bit `{c}`"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::landscape::{generate_instance, InstanceParams};
    use crate::scalarize::{make_chebychev, make_norm};

    fn hamming(a: &[bool], b: &[bool]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn mutation_distance_statistics() {
        let n = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let parent: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let trials = 100_000;
        let (mut total, mut unchanged) = (0usize, 0usize);
        for _ in 0..trials {
            let d = hamming(&parent, &mutate(&parent, 1.0 / n as f64, &mut rng));
            total += d;
            unchanged += usize::from(d == 0);
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 1.0).abs() <= 0.05, "mean distance {mean}");
        let expected = (1.0 - 1.0 / n as f64).powi(n as i32);
        let freq = unchanged as f64 / trials as f64;
        assert!((freq - expected).abs() <= 0.02, "unchanged frequency {freq} vs {expected}");
    }

    #[test]
    fn mutation_is_deterministic_per_seed() {
        let parent = vec![true; 64];
        let a = mutate(&parent, 1e-9, &mut ChaCha8Rng::seed_from_u64(3));
        let b = mutate(&parent, 1e-9, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let inst = generate_instance(InstanceParams::new(8, 1, 0.0, 1)).unwrap();
        let cfg = make_chebychev(0.5).unwrap();
        for p in [
            EaParams { offspring: 0, ..EaParams::for_length(8, 1) },
            EaParams { flip_rate: 0.0, ..EaParams::for_length(8, 1) },
            EaParams { flip_rate: 1.0, ..EaParams::for_length(8, 1) },
            EaParams { max_iterations: 0, ..EaParams::for_length(8, 1) },
        ] {
            assert!(run_ea(&inst, &cfg, &p).is_err());
        }
    }

    #[test]
    fn flat_landscape_keeps_initial_value() {
        let params = InstanceParams::new(6, 1, 0.0, 0);
        let links = (0..6).map(|j| vec![(j + 1) % 6]).collect();
        let table = vec![vec![0.4; 4]; 6];
        let inst = Instance::from_parts(params, links, [table.clone(), table]).unwrap();
        let cfg = make_norm(0.7, 0.3).unwrap();
        let run = run_ea(&inst, &cfg, &EaParams::for_length(6, 5)).unwrap();
        assert!(run.trajectory.iter().all(|t| t.value == run.trajectory[0].value));
        assert_eq!(run.final_value, run.trajectory[0].value);
    }

    #[test]
    fn elitism_budget_and_reproducibility() {
        let inst = generate_instance(InstanceParams::new(30, 3, -0.7, 2)).unwrap();
        let cfg = make_norm(0.3 * FRAC_PI_2, 0.4).unwrap();
        let params = EaParams::for_length(30, 77);
        let run = run_ea_recording(&inst, &cfg, &params, true).unwrap();
        assert_eq!(run.trajectory.len(), 31);
        assert!(run.trajectory.windows(2).all(|w| w[1].value <= w[0].value));
        assert_eq!(run.final_value, run.trajectory.last().unwrap().value);
        assert_eq!(run.evaluations, 30 * 30);
        let clouds = run.offspring.as_ref().unwrap();
        assert_eq!(clouds.len(), 30);
        assert!(clouds.iter().all(|c| c.len() == 30));
        assert_eq!(inst.evaluate(&run.final_bits).unwrap(), run.final_z);
        assert_eq!(cfg.value(run.final_z), run.final_value);

        let again = run_ea_recording(&inst, &cfg, &params, true).unwrap();
        assert_eq!(again, run);
        let plain = run_ea(&inst, &cfg, &params).unwrap();
        assert_eq!(plain.trajectory, run.trajectory);
        assert!(plain.offspring.is_none());
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let key = RunKey {
            rho_index: 0,
            kind: ScalarizerKind::Norm,
            delta_index: 3,
            eps_index: 2,
            run: 1,
        };
        let variants = [
            RunKey { rho_index: 1, ..key },
            RunKey { kind: ScalarizerKind::Aug, ..key },
            RunKey { delta_index: 4, ..key },
            RunKey { eps_index: 1, ..key },
            RunKey { run: 2, ..key },
        ];
        let base = key.seed(42);
        assert_eq!(base, key.seed(42));
        assert_ne!(base, key.seed(43));
        for v in variants {
            assert_ne!(v.seed(42), base, "{v}");
        }
    }

    #[test]
    fn run_key_and_bits_round_trip() {
        let key = RunKey {
            rho_index: 2,
            kind: ScalarizerKind::Aug,
            delta_index: 19,
            eps_index: 10,
            run: 14,
        };
        assert_eq!(key.to_string(), "2:aug:19:10:14");
        assert_eq!(key.to_string().parse::<RunKey>().unwrap(), key);
        assert!("1:norm:2".parse::<RunKey>().is_err());
        let bits = vec![true, false, false, true];
        assert_eq!(bits_from_str(&bits_to_string(&bits)).unwrap(), bits);
        assert!(bits_from_str("10x").is_err());
    }
}
