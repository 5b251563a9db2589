//! Campaign definition: the parameter grid, seeds and EA settings of an experiment.
//!
//! Campaign files are TOML. The first key must be the schema line:
//!
//! ```toml
//! schema = "openangle-campaign/1"
//! master_seed = 1
//! rhos = [-0.7, 0.0, 0.7]
//! runs = 15
//!
//! [instance]
//! n = 32
//! k = 4
//!
//! [ea]                 # optional; defaults are λ = n, rate 1/n, n generations
//! offspring = 32
//! flip_rate = 0.03125
//! iterations = 32
//!
//! [delta]
//! divisions = 20       # δ_j = j·(π/2)/divisions for j in 1..divisions
//!
//! [[scalarizers]]
//! kind = "norm"
//! eps = { steps = 10 } # ε = ℓ/steps for ℓ in 0..=steps
//!
//! [[scalarizers]]
//! kind = "aug"
//! eps = [0.0, 0.01, 0.1, 1.0]   # or { l_max = 10, k_min = -1, k_max = 2 }: ε = ℓ·10^-k
//! ```

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::{derive_seed, EaParams, RunKey, INSTANCE_STREAM};
use crate::landscape::{InstanceParams, ObjectiveVector};
use crate::scalarize::{ScalarizerConfig, ScalarizerKind};

pub const SCHEMA: &str = "openangle-campaign/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offspring: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaGrid {
    pub divisions: usize,
}

/// An ε grid, either listed or generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsGrid {
    Values(Vec<f64>),
    /// `ℓ / steps` for `ℓ ∈ [0, steps]`.
    Linear { steps: u32 },
    /// `ℓ · 10^-k` for `ℓ ∈ [0, l_max]`, `k ∈ [k_min, k_max]`.
    Decades { l_max: u32, k_min: i32, k_max: i32 },
}

impl EpsGrid {
    /// Sorted, duplicate-free values.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let mut values = match self {
            Self::Values(v) => v.clone(),
            Self::Linear { steps } => {
                if *steps == 0 {
                    return Err(invalid("linear eps grid needs steps >= 1"));
                }
                (0..=*steps).map(|l| f64::from(l) / f64::from(*steps)).collect()
            }
            Self::Decades { l_max, k_min, k_max } => {
                if k_min > k_max || k_min.abs().max(k_max.abs()) > 300 {
                    return Err(invalid("bad decade range in eps grid"));
                }
                let mut out = Vec::new();
                for k in *k_min..=*k_max {
                    for l in 0..=*l_max {
                        let l = f64::from(l);
                        // Division by an exact power of ten rounds the rational correctly,
                        // so equal rationals from different decades collapse.
                        out.push(if k >= 0 { l / 10f64.powi(k) } else { l * 10f64.powi(-k) });
                    }
                }
                out
            }
        };
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("eps values must be finite and non-negative"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.is_empty() {
            return Err(invalid("eps grid is empty"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarizerGrid {
    pub kind: ScalarizerKind,
    pub eps: EpsGrid,
}

fn default_utopia() -> [f64; 2] {
    [1.0, 1.0]
}

/// A campaign as written in a campaign file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub schema: String,
    pub master_seed: u64,
    pub rhos: Vec<f64>,
    pub runs: usize,
    #[serde(default = "default_utopia")]
    pub utopia: [f64; 2],
    pub instance: InstanceSpec,
    #[serde(default)]
    pub ea: EaSpec,
    pub delta: DeltaGrid,
    pub scalarizers: Vec<ScalarizerGrid>,
}

/// Named campaign presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// n = 32, 19 directions, 11 ε values per kind, 15 runs, ρ ∈ {−0.7, 0, 0.7}.
    Desk,
    /// The full grid: n = 128, 99 directions, 101 S_norm and 38 S_aug ε values,
    /// 30 runs, ρ ∈ {−0.9, −0.8, …, 0.9}.
    Full,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "full" => Ok(Self::Full),
            other => Err(invalid(format!("unknown profile `{other}`"))),
        }
    }
}

impl CampaignFile {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self {
                schema: SCHEMA.into(),
                master_seed: 1,
                rhos: vec![-0.7, 0.0, 0.7],
                runs: 15,
                utopia: default_utopia(),
                instance: InstanceSpec { n: 32, k: 4 },
                ea: EaSpec::default(),
                delta: DeltaGrid { divisions: 20 },
                scalarizers: vec![
                    ScalarizerGrid {
                        kind: ScalarizerKind::Norm,
                        eps: EpsGrid::Linear { steps: 10 },
                    },
                    ScalarizerGrid {
                        kind: ScalarizerKind::Aug,
                        eps: EpsGrid::Values(vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]),
                    },
                ],
            },
            Profile::Full => Self {
                schema: SCHEMA.into(),
                master_seed: 1,
                rhos: (-9..=9).map(|i| f64::from(i) / 10.0).collect(),
                runs: 30,
                utopia: default_utopia(),
                instance: InstanceSpec { n: 128, k: 4 },
                ea: EaSpec::default(),
                delta: DeltaGrid { divisions: 100 },
                scalarizers: vec![
                    ScalarizerGrid {
                        kind: ScalarizerKind::Norm,
                        eps: EpsGrid::Linear { steps: 100 },
                    },
                    ScalarizerGrid {
                        kind: ScalarizerKind::Aug,
                        eps: EpsGrid::Decades { l_max: 10, k_min: -1, k_max: 2 },
                    },
                ],
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text)?;
        if file.schema != SCHEMA {
            return Err(Error::Format(format!("unsupported campaign schema `{}`, expected `{SCHEMA}`", file.schema)));
        }
        Ok(file)
    }

    pub fn resolve(&self) -> Result<Campaign> {
        if self.schema != SCHEMA {
            return Err(Error::Format(format!("unsupported campaign schema `{}`", self.schema)));
        }
        let InstanceSpec { n, k } = self.instance;
        let mut scalarizers = Vec::with_capacity(self.scalarizers.len());
        for grid in &self.scalarizers {
            scalarizers.push((grid.kind, grid.eps.resolve()?));
        }
        scalarizers.sort_by_key(|(kind, _)| *kind);
        let campaign = Campaign {
            master_seed: self.master_seed,
            rhos: self.rhos.clone(),
            runs: self.runs,
            utopia: ObjectiveVector::new(self.utopia[0], self.utopia[1]),
            n,
            k,
            offspring: self.ea.offspring.unwrap_or(n),
            flip_rate: self.ea.flip_rate.unwrap_or(1.0 / n.max(1) as f64),
            iterations: self.ea.iterations.unwrap_or(n),
            delta_divisions: self.delta.divisions,
            scalarizers,
        };
        campaign.validate()?;
        Ok(campaign)
    }
}

/// A validated campaign with every grid spelled out.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub master_seed: u64,
    pub rhos: Vec<f64>,
    pub runs: usize,
    pub utopia: ObjectiveVector,
    pub n: usize,
    pub k: usize,
    pub offspring: usize,
    pub flip_rate: f64,
    pub iterations: usize,
    pub delta_divisions: usize,
    /// Sorted by kind; each ε grid sorted ascending without duplicates.
    pub scalarizers: Vec<(ScalarizerKind, Vec<f64>)>,
}

impl Campaign {
    pub fn profile(profile: Profile) -> Self {
        CampaignFile::profile(profile).resolve().expect("built-in profiles are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.rhos.is_empty() {
            return Err(invalid("rho list is empty"));
        }
        for (i, rho) in self.rhos.iter().enumerate() {
            InstanceParams::new(self.n, self.k, *rho, 0).validate()?;
            if self.rhos[..i].contains(rho) {
                return Err(invalid(format!("rho {rho} listed twice")));
            }
        }
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if self.delta_divisions < 2 {
            return Err(invalid("delta grid is empty (divisions must be at least 2)"));
        }
        if self.scalarizers.is_empty() {
            return Err(invalid("no scalarizers configured"));
        }
        for (i, (kind, grid)) in self.scalarizers.iter().enumerate() {
            if self.scalarizers[..i].iter().any(|(k, _)| k == kind) {
                return Err(invalid(format!("scalarizer `{kind}` listed twice")));
            }
            if grid.is_empty() {
                return Err(invalid(format!("empty eps grid for `{kind}`")));
            }
            if matches!(kind, ScalarizerKind::Ws | ScalarizerKind::Chebychev) && grid.len() > 1 {
                return Err(invalid(format!("`{kind}` ignores eps; give a single value")));
            }
            for &eps in grid {
                kind.config(FRAC_PI_2 / 2.0, eps)?;
            }
        }
        ScalarizerConfig::new(1.0, 0.0, [1.0; 2], [1.0; 2], self.utopia)?;
        self.ea_params(0).validate()
    }

    pub fn delta(&self, delta_index: usize) -> f64 {
        delta_index as f64 * FRAC_PI_2 / self.delta_divisions as f64
    }

    /// `(j, δ_j)` for every direction of the grid.
    pub fn deltas(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (1..self.delta_divisions).map(|j| (j, self.delta(j)))
    }

    pub fn kinds(&self) -> impl Iterator<Item = ScalarizerKind> + '_ {
        self.scalarizers.iter().map(|(k, _)| *k)
    }

    pub fn eps_grid(&self, kind: ScalarizerKind) -> Option<&[f64]> {
        self.scalarizers.iter().find(|(k, _)| *k == kind).map(|(_, g)| g.as_slice())
    }

    /// Index of an exact ε value in the kind's grid.
    pub fn eps_index(&self, kind: ScalarizerKind, eps: f64) -> Option<usize> {
        self.eps_grid(kind)?.iter().position(|&e| e == eps)
    }

    pub fn instance_params(&self, rho_index: usize) -> InstanceParams {
        InstanceParams::new(
            self.n,
            self.k,
            self.rhos[rho_index],
            derive_seed(self.master_seed, &[INSTANCE_STREAM, rho_index as u64]),
        )
    }

    pub fn instance_id(&self, rho_index: usize) -> String {
        let p = self.instance_params(rho_index);
        format!("rmnk-n{}-k{}-rho{}-{:016x}", p.n, p.k, p.rho, p.seed)
    }

    pub fn ea_params(&self, seed: u64) -> EaParams {
        EaParams {
            offspring: self.offspring,
            flip_rate: self.flip_rate,
            max_iterations: self.iterations,
            seed,
        }
    }

    pub fn config(&self, key: &RunKey) -> Result<ScalarizerConfig> {
        let eps = self
            .eps_grid(key.kind)
            .and_then(|g| g.get(key.eps_index))
            .ok_or_else(|| Error::MissingCell(key.to_string()))?;
        key.kind.config(self.delta(key.delta_index), *eps)?.with_utopia(self.utopia)
    }

    /// Every run of the campaign in canonical (sorted) order.
    pub fn run_keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::with_capacity(self.total_runs());
        for rho_index in 0..self.rhos.len() {
            for (kind, grid) in &self.scalarizers {
                for (delta_index, _) in self.deltas() {
                    for eps_index in 0..grid.len() {
                        for run in 0..self.runs {
                            keys.push(RunKey {
                                rho_index,
                                kind: *kind,
                                delta_index,
                                eps_index,
                                run,
                            });
                        }
                    }
                }
            }
        }
        keys
    }

    pub fn total_runs(&self) -> usize {
        let eps: usize = self.scalarizers.iter().map(|(_, g)| g.len()).sum();
        self.rhos.len() * (self.delta_divisions - 1) * eps * self.runs
    }

    /// The campaign in file form with every grid listed explicitly.
    pub fn to_file(&self) -> CampaignFile {
        CampaignFile {
            schema: SCHEMA.into(),
            master_seed: self.master_seed,
            rhos: self.rhos.clone(),
            runs: self.runs,
            utopia: [self.utopia.z1, self.utopia.z2],
            instance: InstanceSpec { n: self.n, k: self.k },
            ea: EaSpec {
                offspring: Some(self.offspring),
                flip_rate: Some(self.flip_rate),
                iterations: Some(self.iterations),
            },
            delta: DeltaGrid {
                divisions: self.delta_divisions,
            },
            scalarizers: self
                .scalarizers
                .iter()
                .map(|(kind, grid)| ScalarizerGrid {
                    kind: *kind,
                    eps: EpsGrid::Values(grid.clone()),
                })
                .collect(),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(&self.to_file())?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        CampaignFile::from_toml_str(text)?.resolve()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_profile_matches_the_large_grid() {
        let c = Campaign::profile(Profile::Full);
        assert_eq!(c.deltas().count(), 99);
        assert!((c.delta(1) - 1e-2 * FRAC_PI_2).abs() < 1e-15);
        assert!((c.delta(99) - 0.99 * FRAC_PI_2).abs() < 1e-15);
        let norm = c.eps_grid(ScalarizerKind::Norm).unwrap();
        assert_eq!(norm.len(), 101);
        assert_eq!((norm[0], norm[37], norm[100]), (0.0, 0.37, 1.0));
        let aug = c.eps_grid(ScalarizerKind::Aug).unwrap();
        // 11 values for k = 2, then 9 new ones for each coarser decade.
        assert_eq!(aug.len(), 38);
        assert_eq!((aug[0], aug[1], aug[10], aug[37]), (0.0, 0.01, 0.1, 100.0));
        assert!(aug.contains(&0.3) && aug.contains(&7.0) && aug.contains(&40.0));
        assert_eq!((c.n, c.k, c.runs, c.offspring, c.iterations), (128, 4, 30, 128, 128));
        assert_eq!(c.flip_rate, 1.0 / 128.0);
        assert_eq!(c.rhos.len(), 19);
        assert_eq!((c.rhos[0], c.rhos[9], c.rhos[18]), (-0.9, 0.0, 0.9));
        assert_eq!(c.utopia, ObjectiveVector::new(1.0, 1.0));
        // 99 δ × 101 ε × 30 runs per ρ for S_norm.
        let per_rho_norm = c.run_keys().iter().filter(|k| k.rho_index == 0 && k.kind == ScalarizerKind::Norm).count();
        assert_eq!(per_rho_norm, 99 * 101 * 30);
    }

    #[test]
    fn desk_profile_shape() {
        let c = Campaign::profile(Profile::Desk);
        assert_eq!(c.deltas().count(), 19);
        assert!((c.delta(6) - 0.3 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(c.eps_grid(ScalarizerKind::Norm).unwrap().len(), 11);
        assert_eq!(c.eps_grid(ScalarizerKind::Aug).unwrap().len(), 11);
        assert_eq!(c.total_runs(), 3 * 19 * 22 * 15);
        let keys = c.run_keys();
        assert_eq!(keys.len(), c.total_runs());
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn toml_round_trip() {
        let c = Campaign::profile(Profile::Desk);
        let text = c.to_toml_string().unwrap();
        assert!(text.starts_with(&format!("schema = \"{SCHEMA}\"")));
        assert_eq!(Campaign::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"
schema = "openangle-campaign/1"
master_seed = 5
rhos = [-0.7]
runs = 5

[instance]
n = 32
k = 4

[delta]
divisions = 10

[[scalarizers]]
kind = "norm"
eps = { steps = 4 }

[[scalarizers]]
kind = "aug"
eps = { l_max = 10, k_min = 1, k_max = 2 }
"#;
        let c = Campaign::from_toml_str(text).unwrap();
        assert_eq!(c.eps_grid(ScalarizerKind::Norm).unwrap(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.eps_grid(ScalarizerKind::Aug).unwrap().len(), 20);
        assert_eq!((c.offspring, c.iterations), (32, 32));
        assert_eq!(c.total_runs(), 9 * 25 * 5);
    }

    #[test]
    fn rejects_bad_campaigns() {
        let base = CampaignFile::profile(Profile::Desk);
        let cases: Vec<Box<dyn Fn(&mut CampaignFile)>> = vec![
            Box::new(|c| c.delta.divisions = 1),
            Box::new(|c| c.rhos.clear()),
            Box::new(|c| c.rhos = vec![1.0]),
            Box::new(|c| c.rhos = vec![0.1, 0.1]),
            Box::new(|c| c.runs = 0),
            Box::new(|c| c.scalarizers.clear()),
            Box::new(|c| c.scalarizers[0].eps = EpsGrid::Values(vec![])),
            Box::new(|c| c.scalarizers[0].eps = EpsGrid::Values(vec![1.5])),
            Box::new(|c| c.scalarizers[1].kind = ScalarizerKind::Norm),
            Box::new(|c| c.instance.k = 32),
            Box::new(|c| {
                c.scalarizers[0].kind = ScalarizerKind::Chebychev;
                c.scalarizers[0].eps = EpsGrid::Values(vec![0.0, 1.0]);
            }),
            Box::new(|c| c.ea.flip_rate = Some(0.0)),
            Box::new(|c| c.schema = "openangle-campaign/0".into()),
        ];
        for (i, mutate) in cases.iter().enumerate() {
            let mut c = base.clone();
            mutate(&mut c);
            assert!(c.resolve().is_err(), "case {i} accepted");
        }
        assert!(CampaignFile::from_toml_str("schema = \"x\"\nmaster_seed = 1").is_err());
    }

    #[test]
    fn instance_seeds_differ_per_rho() {
        let c = Campaign::profile(Profile::Desk);
        let seeds: Vec<u64> = (0..3).map(|i| c.instance_params(i).seed).collect();
        assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
        assert!(c.instance_id(0).starts_with("rmnk-n32-k4-rho-0.7-"));
    }
}
