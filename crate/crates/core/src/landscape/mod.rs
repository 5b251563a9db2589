//! Bi-objective ρMNK-landscapes.
//!
//! Each bit position owns `k` epistatic links (shared by both objectives) and,
//! per objective, a table of `2^(k+1)` component values. Paired table entries
//! are drawn from a Gaussian copula so that the two objectives are correlated
//! with coefficient `rho`.

mod file;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::stats;

pub use file::MAGIC;

/// Number of objectives. Only the bi-objective case is supported.
pub const OBJECTIVES: usize = 2;

/// A point in objective space. Both objectives are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub z1: f64,
    pub z2: f64,
}

impl ObjectiveVector {
    pub const fn new(z1: f64, z2: f64) -> Self {
        Self { z1, z2 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::new(self.z1 * factor, self.z2 * factor)
    }
}

impl From<(f64, f64)> for ObjectiveVector {
    fn from((z1, z2): (f64, f64)) -> Self {
        Self::new(z1, z2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// Bit-string length.
    pub n: usize,
    /// Epistatic links per bit, not counting the bit itself.
    pub k: usize,
    /// Target Pearson correlation between the two objectives.
    pub rho: f64,
    pub seed: u64,
}

impl InstanceParams {
    pub fn new(n: usize, k: usize, rho: f64, seed: u64) -> Self {
        Self { n, k, rho, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.k >= self.n {
            return Err(invalid(format!("k = {} must be below n = {}", self.k, self.n)));
        }
        // Tables are indexed by a machine word.
        if self.k + 1 >= usize::BITS as usize {
            return Err(invalid(format!("k = {} is too large", self.k)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho = {} must lie in (-1, 1)", self.rho)));
        }
        Ok(())
    }

    /// Rows per component table.
    pub fn rows(&self) -> usize {
        1 << (self.k + 1)
    }
}

/// An immutable ρMNK-landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    params: InstanceParams,
    /// `n * k` positions; the links of bit `j` are `links[j*k..(j+1)*k]`.
    links: Vec<usize>,
    /// Per objective, `n * rows` values; the table of bit `j` starts at `j*rows`.
    tables: [Vec<f64>; OBJECTIVES],
}

/// Pearson correlation of the Gaussian pair whose uniform images correlate at `rho`.
pub fn normal_correlation_for(rho: f64) -> f64 {
    2.0 * (PI * rho / 6.0).sin()
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Builds an instance from its parameters. Deterministic in `params.seed`.
pub fn generate_instance(params: InstanceParams) -> Result<Instance> {
    params.validate()?;
    let InstanceParams { n, k, rho, seed } = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut links = Vec::with_capacity(n * k);
    for owner in 0..n {
        // Sample among the n-1 other positions, then skip over the owner.
        for other in index::sample(&mut rng, n - 1, k) {
            links.push(if other >= owner { other + 1 } else { other });
        }
    }

    let rho_n = normal_correlation_for(rho);
    let residual = (1.0 - rho_n * rho_n).sqrt();
    let rows = params.rows();
    let mut first = Vec::with_capacity(n * rows);
    let mut second = Vec::with_capacity(n * rows);
    for _ in 0..n * rows {
        let g1: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let g2 = rho_n * g1 + residual * e;
        first.push(normal_cdf(g1));
        second.push(normal_cdf(g2));
    }

    Ok(Instance {
        params,
        links,
        tables: [first, second],
    })
}

impl Instance {
    /// Assembles an instance from explicit parts, checking every structural invariant.
    ///
    /// `links[j]` holds the k links of bit `j`; `tables[i][j]` the `2^(k+1)`
    /// values of objective `i` at bit `j`, indexed with the owner bit as the
    /// most significant bit followed by the linked bits in order.
    pub fn from_parts(
        params: InstanceParams,
        links: Vec<Vec<usize>>,
        tables: [Vec<Vec<f64>>; OBJECTIVES],
    ) -> Result<Self> {
        params.validate()?;
        let InstanceParams { n, k, .. } = params;
        if links.len() != n {
            return Err(invalid(format!("expected {n} link lists, got {}", links.len())));
        }
        let mut flat_links = Vec::with_capacity(n * k);
        for (owner, list) in links.iter().enumerate() {
            if list.len() != k {
                return Err(invalid(format!("bit {owner} has {} links, expected {k}", list.len())));
            }
            for (i, &l) in list.iter().enumerate() {
                if l >= n || l == owner || list[..i].contains(&l) {
                    return Err(invalid(format!("bit {owner} has an invalid link {l}")));
                }
            }
            flat_links.extend_from_slice(list);
        }

        let rows = params.rows();
        let mut flat_tables: [Vec<f64>; OBJECTIVES] = Default::default();
        for (objective, per_bit) in tables.iter().enumerate() {
            if per_bit.len() != n {
                return Err(invalid(format!("objective {objective}: expected {n} tables")));
            }
            for table in per_bit {
                if table.len() != rows {
                    return Err(invalid(format!("objective {objective}: expected {rows} rows per table")));
                }
                if let Some(v) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(invalid(format!("table value {v} outside [0, 1]")));
                }
                flat_tables[objective].extend_from_slice(table);
            }
        }
        Ok(Self {
            params,
            links: flat_links,
            tables: flat_tables,
        })
    }

    pub fn params(&self) -> &InstanceParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Links of bit `owner`.
    pub fn links_of(&self, owner: usize) -> &[usize] {
        let k = self.params.k;
        &self.links[owner * k..(owner + 1) * k]
    }

    /// Component table of `objective` at bit `owner`.
    pub fn table(&self, objective: usize, owner: usize) -> &[f64] {
        let rows = self.params.rows();
        &self.tables[objective][owner * rows..(owner + 1) * rows]
    }

    fn row_index(&self, owner: usize, bits: &[bool]) -> usize {
        self.links_of(owner)
            .iter()
            .fold(bits[owner] as usize, |idx, &l| (idx << 1) | bits[l] as usize)
    }

    /// Objective vector of `bits`.
    pub fn evaluate(&self, bits: &[bool]) -> Result<ObjectiveVector> {
        if bits.len() != self.params.n {
            return Err(Error::LengthMismatch {
                expected: self.params.n,
                got: bits.len(),
            });
        }
        Ok(self.evaluate_unchecked(bits))
    }

    /// Same as [`Instance::evaluate`] without the length check.
    pub(crate) fn evaluate_unchecked(&self, bits: &[bool]) -> ObjectiveVector {
        let rows = self.params.rows();
        let (mut s1, mut s2) = (0.0, 0.0);
        for owner in 0..self.params.n {
            let at = owner * rows + self.row_index(owner, bits);
            s1 += self.tables[0][at];
            s2 += self.tables[1][at];
        }
        let n = self.params.n as f64;
        ObjectiveVector::new(s1 / n, s2 / n)
    }

    /// Bits whose component value depends on bit `pos`: `pos` itself plus every bit linking to it.
    pub fn dependents_of(&self, pos: usize) -> Vec<usize> {
        (0..self.params.n)
            .filter(|&owner| owner == pos || self.links_of(owner).contains(&pos))
            .collect()
    }

    /// Pearson correlation of the two objectives over `samples` uniform random bit-strings.
    pub fn empirical_correlation(&self, samples: usize, seed: u64) -> Result<f64> {
        if samples < 2 {
            return Err(invalid("at least two samples are needed"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bits = vec![false; self.params.n];
        let (mut xs, mut ys) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
        for _ in 0..samples {
            bits.iter_mut().for_each(|b| *b = rng.random());
            let z = self.evaluate_unchecked(&bits);
            xs.push(z.z1);
            ys.push(z.z2);
        }
        stats::pearson(&xs, &ys)
    }
}
