//! Single-spin-flip Metropolis dynamics with cached local fields.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ising::{ising_hamiltonian, IsingParams, SpinConfig};

/// Relative tolerance for cached fields and energy against a recompute.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ChainState {
    spins: Vec<i8>,
    /// `Σ_{j≠i} V(|i-j|) σ_j`
    local_fields: Vec<f64>,
    energy: f64,
    sweep_count: u64,
    accepted: u64,
    proposed: u64,
}

impl ChainState {
    pub fn new(config: SpinConfig, params: &IsingParams) -> Result<Self> {
        if config.len() != params.n_sites() {
            return Err(Error::Shape {
                expected: params.n_sites(),
                got: config.len(),
            });
        }
        let spins = config.spins().to_vec();
        let local_fields = compute_local_fields(&spins, params);
        let energy = ising_hamiltonian(&config, params)?;
        Ok(Self {
            spins,
            local_fields,
            energy,
            sweep_count: 0,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn all_up(params: &IsingParams) -> Self {
        Self::new(SpinConfig::all_up(params.n_sites()), params).expect("length matches")
    }

    pub fn random<R: Rng + ?Sized>(params: &IsingParams, rng: &mut R) -> Self {
        let spins = (0..params.n_sites())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::new(SpinConfig::from_raw(spins), params).expect("length matches")
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn config(&self) -> SpinConfig {
        SpinConfig::from_raw(self.spins.clone())
    }

    pub fn local_fields(&self) -> &[f64] {
        &self.local_fields
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweep_count
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| i64::from(s)).sum()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Largest relative deviation of the cached fields and energy from a
    /// fresh recomputation.
    pub fn drift(&self, params: &IsingParams) -> Result<f64> {
        let fresh = compute_local_fields(&self.spins, params);
        let field_drift = self
            .local_fields
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        let exact = ising_hamiltonian(&self.config(), params)?;
        let energy_drift = (self.energy - exact).abs() / (1.0 + exact.abs());
        Ok(field_drift.max(energy_drift))
    }

    pub fn check_consistency(&self, params: &IsingParams) -> Result<()> {
        let drift = self.drift(params)?;
        if drift > CONSISTENCY_TOLERANCE {
            return Err(Error::Invariant {
                sweep: self.sweep_count,
                detail: format!("cached fields drifted by {drift:e} (relative)"),
            });
        }
        Ok(())
    }

    #[inline]
    fn flip(&mut self, site: usize, table: &[f64], delta_e: f64) {
        let old = f64::from(self.spins[site]);
        self.spins[site] = -self.spins[site];
        self.energy += delta_e;
        let change = -2.0 * old;
        let (left, rest) = self.local_fields.split_at_mut(site);
        // Site j < i sits at distance i - j.
        for (f, v) in left.iter_mut().rev().zip(table) {
            *f += change * v;
        }
        for (f, v) in rest[1..].iter_mut().zip(table) {
            *f += change * v;
        }
    }
}

pub(crate) fn compute_local_fields(spins: &[i8], params: &IsingParams) -> Vec<f64> {
    let n = spins.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| params.coupling(i.abs_diff(j)) * f64::from(spins[j]))
                .sum()
        })
        .collect()
}

/// One sweep: `N` single-spin Metropolis proposals at uniformly random
/// sites (drawn with replacement). `ΔE = 2σ_i(h_i + k)`, accepted with
/// probability `min(1, exp(-βΔE))`.
///
/// Sites are drawn with replacement because a fixed or permuted order is
/// periodic when every proposal is accepted (β → 0): each sweep would flip
/// every spin and leave `M²` frozen.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &IsingParams,
    rng: &mut R,
) {
    let beta = params.beta();
    let k = params.field();
    let table = params.coupling_table();
    let n = state.spins.len();
    for _ in 0..n {
        let site = rng.random_range(0..n);
        let s = f64::from(state.spins[site]);
        let delta_e = 2.0 * s * (state.local_fields[site] + k);
        state.proposed += 1;
        if delta_e <= 0.0 || rng.random::<f64>() < (-beta * delta_e).exp() {
            state.accepted += 1;
            state.flip(site, table, delta_e);
        }
    }
    state.sweep_count += 1;
}

/// Runs `sweeps` sweeps, checking cache consistency every `check_interval`.
pub fn advance<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &IsingParams,
    rng: &mut R,
    sweeps: u64,
    check_interval: u64,
) -> Result<()> {
    for _ in 0..sweeps {
        metropolis_sweep(state, params, rng);
        if check_interval > 0 && state.sweep_count.is_multiple_of(check_interval) {
            state.check_consistency(params)?;
        }
    }
    Ok(())
}
