//! Metropolis Monte Carlo for long-range Ising chains and, through the
//! step/spin decoupling, for the polymer.
//!
//! Replicas run concurrently on the rayon pool; each owns its chain state
//! and RNG stream, and results are reduced in replica order so output does
//! not depend on scheduling.

mod chain;
mod stats;

pub use chain::{advance, metropolis_sweep, ChainState, CONSISTENCY_TOLERANCE};
pub use stats::{
    batch_means, mean, pool_replicas, sample_variance, EstimateWithError, SeriesEstimate,
    SPREAD_FACTOR,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingSpec;
use crate::decoupling::{IsingSampler, PolymerSampler};
use crate::error::{Error, Result};
use crate::ising::{IsingParams, SpinConfig};
use crate::polymer::PolymerParams;
use crate::rng::{labels, stream, task_seed, SimRng};

pub const DEFAULT_CHECK_INTERVAL: u64 = 1000;
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Random,
    AllUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcPlan {
    /// Total sweeps per replica, burn-in included.
    pub n_sweeps: u64,
    pub burn_in: u64,
    /// Sweeps between recorded measurements.
    pub thinning: u64,
    pub n_replicas: usize,
    pub seed: u64,
    pub batch_count: usize,
    pub initial: InitialState,
    pub check_interval: u64,
    pub record_trace: bool,
}

impl McmcPlan {
    pub fn new(n_sweeps: u64, burn_in: u64, n_replicas: usize, seed: u64) -> Self {
        Self {
            n_sweeps,
            burn_in,
            thinning: 1,
            n_replicas,
            seed,
            batch_count: 32,
            initial: InitialState::Random,
            check_interval: DEFAULT_CHECK_INTERVAL,
            record_trace: false,
        }
    }

    pub fn with_thinning(mut self, thinning: u64) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn measurements(&self) -> u64 {
        (self.n_sweeps.saturating_sub(self.burn_in)) / self.thinning.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps <= self.burn_in {
            return Err(Error::invalid(format!(
                "n_sweeps ({}) must exceed burn_in ({})",
                self.n_sweeps, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        if self.n_replicas == 0 {
            return Err(Error::invalid("n_replicas must be at least 1"));
        }
        if self.batch_count < 8 {
            return Err(Error::invalid(format!(
                "batch_count must be at least 8, got {}",
                self.batch_count
            )));
        }
        if self.measurements() < self.batch_count as u64 {
            return Err(Error::invalid(format!(
                "{} measurements cannot fill {} batches",
                self.measurements(),
                self.batch_count
            )));
        }
        Ok(())
    }
}

/// Quantities measured on a single chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// `σ_i` (0-based site).
    Site(usize),
    /// `σ_i σ_j` (0-based sites).
    Pair(usize, usize),
    /// `M / N`
    Magnetization,
    /// `|M| / N`
    AbsMagnetization,
    /// `M²`
    MagnetizationSquared,
    Energy,
}

impl Observable {
    fn measure(&self, state: &ChainState) -> f64 {
        let s = state.spins();
        let n = s.len() as f64;
        match *self {
            Observable::Site(i) => f64::from(s[i]),
            Observable::Pair(i, j) => f64::from(s[i] * s[j]),
            Observable::Magnetization => state.magnetization() as f64 / n,
            Observable::AbsMagnetization => state.magnetization().abs() as f64 / n,
            Observable::MagnetizationSquared => (state.magnetization() as f64).powi(2),
            Observable::Energy => state.energy(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Observable::Site(i) if i >= n => Err(Error::invalid(format!("site {i} out of range"))),
            Observable::Pair(i, j) if i >= n || j >= n => {
                Err(Error::invalid(format!("pair ({i},{j}) out of range")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: u64,
    pub energy: f64,
    pub magnetization: f64,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub estimates: Vec<(Observable, EstimateWithError)>,
    pub acceptance_rate: f64,
    /// Per-replica traces, empty unless the plan asks for them.
    pub traces: Vec<Vec<TraceRow>>,
}

impl ChainRun {
    pub fn get(&self, obs: Observable) -> Option<&EstimateWithError> {
        self.estimates
            .iter()
            .find(|(o, _)| *o == obs)
            .map(|(_, e)| e)
    }

    pub fn converged(&self) -> bool {
        self.estimates.iter().all(|(_, e)| e.is_converged())
    }
}

fn initial_state(params: &IsingParams, initial: InitialState, rng: &mut SimRng) -> ChainState {
    match initial {
        InitialState::Random => ChainState::random(params, rng),
        InitialState::AllUp => ChainState::all_up(params),
    }
}

struct ReplicaSeries {
    series: Vec<Vec<f64>>,
    trace: Vec<TraceRow>,
    acceptance: f64,
}

fn run_replica(
    params: &IsingParams,
    plan: &McmcPlan,
    observables: &[Observable],
    replica: usize,
) -> Result<ReplicaSeries> {
    let mut rng = stream(plan.seed, labels::FIRST_CHAIN, replica);
    let mut state = initial_state(params, plan.initial, &mut rng);
    advance(
        &mut state,
        params,
        &mut rng,
        plan.burn_in,
        plan.check_interval,
    )?;
    let m = plan.measurements() as usize;
    let mut series = vec![Vec::with_capacity(m); observables.len()];
    let mut trace = Vec::new();
    for _ in 0..m {
        advance(
            &mut state,
            params,
            &mut rng,
            plan.thinning,
            plan.check_interval,
        )?;
        for (obs, out) in observables.iter().zip(series.iter_mut()) {
            out.push(obs.measure(&state));
        }
        if plan.record_trace {
            trace.push(TraceRow {
                sweep: state.sweep_count(),
                energy: state.energy(),
                magnetization: state.magnetization() as f64 / params.n_sites() as f64,
            });
        }
    }
    state.check_consistency(params)?;
    Ok(ReplicaSeries {
        series,
        trace,
        acceptance: state.acceptance_rate(),
    })
}

/// Runs `plan.n_replicas` independent chains and pools batch-means
/// estimates of every requested observable.
pub fn run_chain(
    params: &IsingParams,
    plan: &McmcPlan,
    observables: &[Observable],
) -> Result<ChainRun> {
    plan.validate()?;
    for obs in observables {
        obs.validate(params.n_sites())?;
    }
    let replicas: Vec<ReplicaSeries> = (0..plan.n_replicas)
        .into_par_iter()
        .map(|r| run_replica(params, plan, observables, r))
        .collect::<Result<_>>()?;
    let estimates = observables
        .iter()
        .enumerate()
        .map(|(k, &obs)| {
            let per_replica: Vec<SeriesEstimate> = replicas
                .iter()
                .map(|r| batch_means(&r.series[k], plan.batch_count))
                .collect();
            (obs, pool_replicas(&per_replica))
        })
        .collect();
    Ok(ChainRun {
        estimates,
        acceptance_rate: mean(&replicas.iter().map(|r| r.acceptance).collect::<Vec<_>>()),
        traces: replicas.into_iter().map(|r| r.trace).collect(),
    })
}

/// Metropolis chain exposed as an [`IsingSampler`]: the first draw runs the
/// burn-in, every draw advances `sweeps_per_draw` sweeps.
pub struct MetropolisSampler {
    params: IsingParams,
    state: Option<ChainState>,
    initial: InitialState,
    burn_in: u64,
    sweeps_per_draw: u64,
    check_interval: u64,
}

impl MetropolisSampler {
    pub fn new(params: &IsingParams, plan: &McmcPlan) -> Self {
        Self {
            params: params.clone(),
            state: None,
            initial: plan.initial,
            burn_in: plan.burn_in,
            sweeps_per_draw: plan.thinning.max(1),
            check_interval: plan.check_interval,
        }
    }

    pub fn state(&self) -> Option<&ChainState> {
        self.state.as_ref()
    }
}

impl IsingSampler for MetropolisSampler {
    fn draw(&mut self, rng: &mut SimRng) -> Result<SpinConfig> {
        if self.state.is_none() {
            let mut state = initial_state(&self.params, self.initial, rng);
            advance(
                &mut state,
                &self.params,
                rng,
                self.burn_in,
                self.check_interval,
            )?;
            self.state = Some(state);
        }
        let state = self.state.as_mut().expect("initialised above");
        advance(
            state,
            &self.params,
            rng,
            self.sweeps_per_draw,
            self.check_interval,
        )?;
        Ok(state.config())
    }
}

/// Per-draw polymer quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolymerDraw {
    pub endpoint: [i64; 2],
}

impl PolymerDraw {
    pub fn squared_displacement(&self) -> f64 {
        let [x, y] = self.endpoint;
        (x * x + y * y) as f64
    }

    pub fn projection(&self, v: [f64; 2]) -> f64 {
        self.endpoint[0] as f64 * v[0] + self.endpoint[1] as f64 * v[1]
    }
}

/// Draws `plan.measurements()` walks per replica through two Metropolis
/// chains; replicas are concatenated in order.
pub fn sample_polymer_draws(
    params: &PolymerParams,
    plan: &McmcPlan,
) -> Result<Vec<Vec<PolymerDraw>>> {
    plan.validate()?;
    (0..plan.n_replicas)
        .into_par_iter()
        .map(|replica| {
            let mut sampler = PolymerSampler::new(
                params,
                |p| Ok(MetropolisSampler::new(p, plan)),
                plan.seed,
                replica,
            )?;
            (0..plan.measurements())
                .map(|_| {
                    sampler.sample().map(|w| PolymerDraw {
                        endpoint: w.endpoint(),
                    })
                })
                .collect()
        })
        .collect()
}

/// Pools a per-draw statistic over replicas with batch-means errors.
pub fn pooled_estimate(
    draws: &[Vec<PolymerDraw>],
    batch_count: usize,
    f: impl Fn(&PolymerDraw) -> f64,
) -> EstimateWithError {
    let per: Vec<SeriesEstimate> = draws
        .iter()
        .map(|r| batch_means(&r.iter().map(&f).collect::<Vec<_>>(), batch_count))
        .collect();
    pool_replicas(&per)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdPoint {
    pub n: usize,
    pub msd: EstimateWithError,
    pub msd_over_n: EstimateWithError,
    pub msd_over_n2: EstimateWithError,
}

impl MsdPoint {
    pub fn converged(&self) -> bool {
        self.msd.is_converged()
    }
}

/// `E‖S_N‖²` for each `N`; every size gets its own seed derived from
/// `plan.seed`.
pub fn estimate_msd_curve(
    couplings: &CouplingSpec,
    beta: f64,
    drift: [f64; 2],
    sizes: &[usize],
    plan: &McmcPlan,
) -> Result<Vec<MsdPoint>> {
    plan.validate()?;
    let max_n = sizes.iter().copied().max().unwrap_or(0);
    couplings.require_positive(max_n)?;
    sizes
        .iter()
        .map(|&n| {
            let params = PolymerParams::new(n, beta, drift, couplings.clone())?;
            let task_plan = plan.clone().with_seed(task_seed(plan.seed, n as u64));
            let draws = sample_polymer_draws(&params, &task_plan)?;
            let msd = pooled_estimate(&draws, plan.batch_count, PolymerDraw::squared_displacement);
            let nf = n as f64;
            Ok(MsdPoint {
                n,
                msd,
                msd_over_n: msd.scaled(1.0 / nf),
                msd_over_n2: msd.scaled(1.0 / (nf * nf)),
            })
        })
        .collect()
}

pub fn estimate_msd_curve_power_law(
    alpha: f64,
    beta: f64,
    drift: [f64; 2],
    sizes: &[usize],
    plan: &McmcPlan,
) -> Result<Vec<MsdPoint>> {
    estimate_msd_curve(&CouplingSpec::power_law(alpha)?, beta, drift, sizes, plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpontaneousMagnetization {
    pub n: usize,
    pub epsilon: f64,
    /// `⟨M/N⟩` at field `ε`, started from all spins up.
    pub field_proxy: EstimateWithError,
    /// `⟨|M|/N⟩` at zero field.
    pub abs_proxy: EstimateWithError,
}

/// Surrogates for the spontaneous magnetization of the zero-field chain at
/// inverse temperature `beta`, over a ladder of sizes.
pub fn estimate_spontaneous_magnetization(
    couplings: &CouplingSpec,
    beta: f64,
    sizes: &[usize],
    plan: &McmcPlan,
    epsilon: f64,
) -> Result<Vec<SpontaneousMagnetization>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let max_n = sizes.iter().copied().max().unwrap_or(0);
    couplings.require_positive(max_n)?;
    sizes
        .iter()
        .map(|&n| {
            let task = plan.clone().with_seed(task_seed(plan.seed, n as u64));
            let tilted = IsingParams::new(n, beta, epsilon, couplings.clone())?;
            let field_run = run_chain(
                &tilted,
                &task.clone().with_initial(InitialState::AllUp),
                &[Observable::Magnetization],
            )?;
            let free = tilted.with_field(0.0)?;
            let abs_run = run_chain(&free, &task, &[Observable::AbsMagnetization])?;
            Ok(SpontaneousMagnetization {
                n,
                epsilon,
                field_proxy: field_run.estimates[0].1,
                abs_proxy: abs_run.estimates[0].1,
            })
        })
        .collect()
}

/// `⟨M/N⟩` at each field of `epsilons` for one size, started from all up.
pub fn magnetization_field_ladder(
    couplings: &CouplingSpec,
    beta: f64,
    n: usize,
    epsilons: &[f64],
    plan: &McmcPlan,
) -> Result<Vec<(f64, EstimateWithError)>> {
    couplings.require_positive(n)?;
    epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let params = IsingParams::new(n, beta, eps, couplings.clone())?;
            let task = plan
                .clone()
                .with_seed(task_seed(plan.seed, k as u64))
                .with_initial(InitialState::AllUp);
            let run = run_chain(&params, &task, &[Observable::Magnetization])?;
            Ok((eps, run.estimates[0].1))
        })
        .collect()
}
