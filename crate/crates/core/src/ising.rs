//! Finite one-dimensional Ising chains with free boundary conditions.
//!
//! `H(σ) = -Σ_{i<j} V(|i-j|) σ_i σ_j - k Σ_i σ_i` on sites `1..=N`, with
//! Gibbs weights `exp(-β H)`. Exact observables come from enumerating all
//! `2^N` configurations, so everything here is limited by an enumeration
//! cap (default [`DEFAULT_ENUMERATION_CAP`]).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;
/// Hard ceiling for any configured cap; `2^28` energies is already 2 GiB.
pub const MAX_ENUMERATION_CAP: usize = 28;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::invalid(
                "spin configuration must have at least one site",
            ));
        }
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("spin value {s} is not ±1")));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n.max(1)])
    }

    /// Decodes an enumeration index: bit `i` set means site `i` points down.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| spin_of(bits, i)).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| s as i64).sum()
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        Self(spins)
    }
}

#[inline]
fn spin_of(bits: u64, i: usize) -> i8 {
    1 - 2 * ((bits >> i) & 1) as i8
}

/// Parameters of one chain. The coupling table is materialised at
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    n_sites: usize,
    beta: f64,
    field: f64,
    couplings: CouplingSpec,
    table: Vec<f64>,
}

impl IsingParams {
    pub fn new(n_sites: usize, beta: f64, field: f64, couplings: CouplingSpec) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::invalid("n_sites must be at least 1"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !field.is_finite() {
            return Err(Error::invalid(format!("field must be finite, got {field}")));
        }
        let table = couplings.distance_table(n_sites);
        Ok(Self {
            n_sites,
            beta,
            field,
            couplings,
            table,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn couplings(&self) -> &CouplingSpec {
        &self.couplings
    }

    /// `V(r)` at index `r - 1`, for `r = 1..n_sites`.
    pub fn coupling_table(&self) -> &[f64] {
        &self.table
    }

    /// `V(r)`, read from the cached table for distances inside the chain.
    #[inline]
    pub fn coupling(&self, r: usize) -> f64 {
        match r {
            0 => 0.0,
            _ => self
                .table
                .get(r - 1)
                .copied()
                .unwrap_or_else(|| self.couplings.value(r)),
        }
    }

    pub fn with_field(&self, field: f64) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::invalid(format!("field must be finite, got {field}")));
        }
        Ok(Self {
            field,
            ..self.clone()
        })
    }

    /// Replaces one coupling value in the materialised table.
    pub fn with_coupling_override(&self, r: usize, value: f64) -> Result<Self> {
        if r == 0 || r >= self.n_sites {
            return Err(Error::invalid(format!(
                "distance {r} outside 1..{}",
                self.n_sites
            )));
        }
        let mut out = self.clone();
        out.table[r - 1] = value;
        Ok(out)
    }
}

/// Energy of `config`, summing pairs in ascending `(i, j)` order.
pub fn ising_hamiltonian(config: &SpinConfig, params: &IsingParams) -> Result<f64> {
    if config.len() != params.n_sites {
        return Err(Error::Shape {
            expected: params.n_sites,
            got: config.len(),
        });
    }
    let s = config.spins();
    let mut energy = 0.0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            energy -= params.coupling(j - i) * f64::from(s[i] * s[j]);
        }
    }
    let m: f64 = s.iter().map(|&x| f64::from(x)).sum();
    Ok(energy - params.field * m)
}

/// `ln Σ exp(x_i)` with the maximum factored out.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// All `2^N` configurations of a chain, stored as their coupling energy
/// and magnetization so that any field can be re-weighted cheaply.
#[derive(Debug, Clone)]
pub struct IsingEnumeration {
    n_sites: usize,
    beta: f64,
    field: f64,
    coupling_energy: Vec<f64>,
    magnetization: Vec<i32>,
}

impl IsingEnumeration {
    pub fn new(params: &IsingParams) -> Result<Self> {
        Self::with_cap(params, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(params: &IsingParams, cap: usize) -> Result<Self> {
        let n = params.n_sites();
        let cap = cap.min(MAX_ENUMERATION_CAP);
        if n > cap {
            return Err(Error::CapExceeded {
                what: "ising chain",
                size: n,
                cap,
            });
        }
        let count = 1usize << n;
        let mut coupling_energy = Vec::with_capacity(count);
        let mut magnetization = Vec::with_capacity(count);
        for x in 0..count as u64 {
            // σ_i σ_{i+r} = 1 - 2 [bit_i xor bit_{i+r}]
            let mut e = 0.0;
            for r in 1..n {
                let mask = (1u64 << (n - r)) - 1;
                let disagree = ((x ^ (x >> r)) & mask).count_ones() as i64;
                let aligned_sum = (n - r) as i64 - 2 * disagree;
                e -= params.coupling(r) * aligned_sum as f64;
            }
            coupling_energy.push(e);
            magnetization.push(n as i32 - 2 * x.count_ones() as i32);
        }
        Ok(Self {
            n_sites: n,
            beta: params.beta(),
            field: params.field(),
            coupling_energy,
            magnetization,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    /// `-β H(σ)` for every configuration at field `k`.
    fn log_weights(&self, field: f64) -> impl Iterator<Item = f64> + Clone + '_ {
        self.coupling_energy
            .iter()
            .zip(&self.magnetization)
            .map(move |(&e, &m)| -self.beta * (e - field * f64::from(m)))
    }

    /// `ln Z` at the enumeration's own field.
    pub fn ln_z(&self) -> f64 {
        self.ln_z_at_field(self.field)
    }

    /// `ln Z` at an arbitrary field, same β and couplings.
    pub fn ln_z_at_field(&self, field: f64) -> f64 {
        log_sum_exp(self.log_weights(field))
    }

    /// Normalised Gibbs probabilities, indexed by [`SpinConfig::to_bits`].
    pub fn probabilities(&self) -> Vec<f64> {
        let ln_z = self.ln_z();
        self.log_weights(self.field)
            .map(|w| (w - ln_z).exp())
            .collect()
    }

    /// `⟨f⟩` for an arbitrary observable evaluated on each configuration.
    pub fn expectation<F>(&self, f: F) -> f64
    where
        F: Fn(&[i8]) -> f64,
    {
        let n = self.n_sites;
        let max = self
            .log_weights(self.field)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut buf = vec![1i8; n];
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, lw) in self.log_weights(self.field).enumerate() {
            for (i, s) in buf.iter_mut().enumerate() {
                *s = spin_of(x as u64, i);
            }
            let w = (lw - max).exp();
            num += w * f(&buf);
            den += w;
        }
        num / den
    }

    /// Site magnetizations `⟨σ_i⟩`.
    pub fn magnetizations(&self) -> Vec<f64> {
        let n = self.n_sites;
        let probs = self.probabilities();
        let mut out = vec![0.0; n];
        for (x, p) in probs.iter().enumerate() {
            for (i, m) in out.iter_mut().enumerate() {
                *m += p * f64::from(spin_of(x as u64, i));
            }
        }
        out
    }

    /// Matrix of `⟨σ_i σ_j⟩` with unit diagonal.
    pub fn two_point_matrix(&self) -> Array2<f64> {
        let n = self.n_sites;
        let probs = self.probabilities();
        let mut acc = Array2::<f64>::zeros((n, n));
        for (x, p) in probs.iter().enumerate() {
            let x = x as u64;
            for i in 0..n {
                for j in i + 1..n {
                    let s = 1 - 2 * (((x >> i) ^ (x >> j)) & 1) as i64;
                    acc[[i, j]] += p * s as f64;
                }
            }
        }
        for i in 0..n {
            acc[[i, i]] = 1.0;
            for j in i + 1..n {
                acc[[j, i]] = acc[[i, j]];
            }
        }
        acc
    }

    /// Mean and variance of the total magnetization `Σ σ_i`.
    pub fn magnetization_moments(&self) -> (f64, f64) {
        let probs = self.probabilities();
        let mean: f64 = probs
            .iter()
            .zip(&self.magnetization)
            .map(|(p, &m)| p * f64::from(m))
            .sum();
        let var: f64 = probs
            .iter()
            .zip(&self.magnetization)
            .map(|(p, &m)| p * (f64::from(m) - mean).powi(2))
            .sum();
        (mean, var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactExpectation {
    pub value: f64,
    pub ln_z: f64,
}

/// `⟨f⟩` by full enumeration under the default cap.
pub fn exact_expectation<F>(f: F, params: &IsingParams) -> Result<ExactExpectation>
where
    F: Fn(&[i8]) -> f64,
{
    let e = IsingEnumeration::new(params)?;
    Ok(ExactExpectation {
        value: e.expectation(f),
        ln_z: e.ln_z(),
    })
}

pub fn two_point_matrix(params: &IsingParams) -> Result<Array2<f64>> {
    Ok(IsingEnumeration::new(params)?.two_point_matrix())
}

pub fn ln_partition(params: &IsingParams) -> Result<f64> {
    Ok(IsingEnumeration::new(params)?.ln_z())
}
