//! Step/spin bijection between walks and pairs of Ising chains.
//!
//! Each unit step `X` maps to `σ = ⟨X, e1 - e2⟩` and `σ̃ = ⟨X, e1 + e2⟩`.
//! Under this map the polymer measure at inverse temperature `β` and drift
//! `h` is the product of two free-boundary Ising measures at `β/2` with
//! fields `h1 = ⟨h, e1 - e2⟩` and `h2 = ⟨h, e1 + e2⟩`.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingEnumeration, IsingParams, SpinConfig};
use crate::polymer::{enumerate_polymer, PolymerParams, Step, Walk};
use crate::rng::{labels, stream, SimRng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinPair {
    sigma: SpinConfig,
    sigma_tilde: SpinConfig,
}

impl SpinPair {
    pub fn new(sigma: SpinConfig, sigma_tilde: SpinConfig) -> Result<Self> {
        if sigma.len() != sigma_tilde.len() {
            return Err(Error::Shape {
                expected: sigma.len(),
                got: sigma_tilde.len(),
            });
        }
        Ok(Self { sigma, sigma_tilde })
    }

    pub fn sigma(&self) -> &SpinConfig {
        &self.sigma
    }

    pub fn sigma_tilde(&self) -> &SpinConfig {
        &self.sigma_tilde
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub h1: f64,
    pub h2: f64,
}

impl FieldPair {
    /// Both fields nonzero with the same sign.
    pub fn same_sign(&self) -> bool {
        self.h1 * self.h2 > 0.0
    }
}

/// `(⟨X, e1 - e2⟩, ⟨X, e1 + e2⟩)` for one step.
pub fn step_to_spins(step: Step) -> (i8, i8) {
    let [x, y] = step.vector();
    ((x - y) as i8, (x + y) as i8)
}

/// Inverse of [`step_to_spins`]: `X = (σ(e1 - e2) + σ̃(e1 + e2)) / 2`.
pub fn spins_to_step(sigma: i8, sigma_tilde: i8) -> Step {
    let x = (i32::from(sigma) + i32::from(sigma_tilde)) / 2;
    let y = (i32::from(sigma_tilde) - i32::from(sigma)) / 2;
    Step::from_vector([x, y]).expect("±1 spin pair always maps to a unit step")
}

pub fn walk_to_spins(walk: &Walk) -> SpinPair {
    let (s, t): (Vec<i8>, Vec<i8>) = walk.steps().iter().map(|&x| step_to_spins(x)).unzip();
    SpinPair {
        sigma: SpinConfig::from_raw(s),
        sigma_tilde: SpinConfig::from_raw(t),
    }
}

pub fn spins_to_walk(pair: &SpinPair) -> Walk {
    Walk::new(
        pair.sigma
            .spins()
            .iter()
            .zip(pair.sigma_tilde.spins())
            .map(|(&s, &t)| spins_to_step(s, t))
            .collect(),
    )
}

/// Endpoint `S_N` from the two chain magnetizations `M = Σσ`, `M̃ = Σσ̃`.
pub fn endpoint_from_magnetizations(m: i64, m_tilde: i64) -> [i64; 2] {
    [(m + m_tilde) / 2, (m_tilde - m) / 2]
}

pub fn drift_to_fields(h: [f64; 2]) -> FieldPair {
    FieldPair {
        h1: h[0] - h[1],
        h2: h[0] + h[1],
    }
}

/// Projections of a direction `v` onto `e1 - e2` and `e1 + e2`.
pub fn direction_projections(v: [f64; 2]) -> (f64, f64) {
    let f = drift_to_fields(v);
    (f.h1, f.h2)
}

/// The two Ising chains equivalent to a polymer: `β/2` with fields `h1`
/// and `h2`.
pub fn decoupled_chains(params: &PolymerParams) -> Result<(IsingParams, IsingParams)> {
    let fields = drift_to_fields(params.drift());
    let mk = |k| {
        IsingParams::new(
            params.n_steps(),
            params.beta() / 2.0,
            k,
            params.couplings().clone(),
        )
    };
    Ok((mk(fields.h1)?, mk(fields.h2)?))
}

/// Largest `|P(S) - P(σ) P(σ̃)|` over all walks.
pub fn measure_factorization_check(params: &PolymerParams) -> Result<f64> {
    let dist = enumerate_polymer(params)?;
    let (first, second) = decoupled_chains(params)?;
    let p1 = IsingEnumeration::new(&first)?.probabilities();
    let p2 = IsingEnumeration::new(&second)?.probabilities();
    Ok(dist
        .iter()
        .map(|(walk, p)| {
            let pair = walk_to_spins(&walk);
            let q = p1[pair.sigma.to_bits() as usize] * p2[pair.sigma_tilde.to_bits() as usize];
            (p - q).abs()
        })
        .fold(0.0, f64::max))
}

/// `E‖S_N‖² = ½ Σ_{i,j} (G1_ij + G2_ij)`.
pub fn msd_from_correlations(corr1: &Array2<f64>, corr2: &Array2<f64>) -> Result<f64> {
    let (r, c) = corr1.dim();
    if r != c {
        return Err(Error::Shape {
            expected: r,
            got: c,
        });
    }
    if corr2.dim() != (r, c) {
        return Err(Error::Shape {
            expected: r,
            got: corr2.nrows().max(corr2.ncols()),
        });
    }
    Ok(0.5 * (corr1.sum() + corr2.sum()))
}

/// Source of Ising configurations for one chain.
pub trait IsingSampler {
    fn draw(&mut self, rng: &mut SimRng) -> Result<SpinConfig>;
}

/// Exact sampler by inversion of the enumerated distribution.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    n_sites: usize,
    cumulative: Vec<f64>,
}

impl ExactSampler {
    pub fn new(params: &IsingParams) -> Result<Self> {
        let probs = IsingEnumeration::new(params)?.probabilities();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            n_sites: params.n_sites(),
            cumulative,
        })
    }
}

impl IsingSampler for ExactSampler {
    fn draw(&mut self, rng: &mut SimRng) -> Result<SpinConfig> {
        let total = *self.cumulative.last().expect("non-empty enumeration");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        Ok(SpinConfig::from_bits(idx as u64, self.n_sites))
    }
}

/// Two independent chain samplers, each with its own RNG stream, combined
/// into walks.
pub struct PolymerSampler<S> {
    first: S,
    second: S,
    first_rng: SimRng,
    second_rng: SimRng,
}

impl<S: IsingSampler> PolymerSampler<S> {
    /// `make` is called with the `h1` chain first, then the `h2` chain.
    pub fn new<F>(params: &PolymerParams, mut make: F, seed: u64, replica: usize) -> Result<Self>
    where
        F: FnMut(&IsingParams) -> Result<S>,
    {
        let (p1, p2) = decoupled_chains(params)?;
        Ok(Self {
            first: make(&p1)?,
            second: make(&p2)?,
            first_rng: stream(seed, labels::FIRST_CHAIN, replica),
            second_rng: stream(seed, labels::SECOND_CHAIN, replica),
        })
    }

    pub fn sample_pair(&mut self) -> Result<SpinPair> {
        let sigma = self.first.draw(&mut self.first_rng)?;
        let sigma_tilde = self.second.draw(&mut self.second_rng)?;
        SpinPair::new(sigma, sigma_tilde)
    }

    pub fn sample(&mut self) -> Result<Walk> {
        Ok(spins_to_walk(&self.sample_pair()?))
    }
}

/// One polymer draw from two independent chain samplers.
pub fn sample_polymer<S, F>(params: &PolymerParams, make: F, seed: u64) -> Result<Walk>
where
    S: IsingSampler,
    F: FnMut(&IsingParams) -> Result<S>,
{
    PolymerSampler::new(params, make, seed, 0)?.sample()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingSpec;
    use crate::ising::{ising_hamiltonian, two_point_matrix};
    use crate::polymer::{exact_msd, polymer_hamiltonian};
    use approx::assert_abs_diff_eq;

    #[test]
    fn step_images() {
        assert_eq!(step_to_spins(Step::East), (1, 1));
        assert_eq!(step_to_spins(Step::North), (-1, 1));
        assert_eq!(step_to_spins(Step::West), (-1, -1));
        assert_eq!(step_to_spins(Step::South), (1, -1));
        assert_eq!(spins_to_step(1, 1), Step::East);
        assert_eq!(spins_to_step(1, -1), Step::South);
    }

    #[test]
    fn bijection_is_exhaustive() {
        for n in 1..=8 {
            for code in 0..1u64 << (2 * n) {
                let w = Walk::from_code(code, n);
                assert_eq!(spins_to_walk(&walk_to_spins(&w)), w);
            }
        }
    }

    #[test]
    fn endpoint_formula() {
        for code in 0..1024 {
            let w = Walk::from_code(code, 5);
            let pair = walk_to_spins(&w);
            assert_eq!(
                endpoint_from_magnetizations(
                    pair.sigma.magnetization(),
                    pair.sigma_tilde.magnetization()
                ),
                w.endpoint()
            );
        }
    }

    #[test]
    fn field_mapping() {
        assert_eq!(drift_to_fields([0.0, 0.0]), FieldPair { h1: 0.0, h2: 0.0 });
        assert_eq!(drift_to_fields([1.0, 0.0]), FieldPair { h1: 1.0, h2: 1.0 });
        let f = drift_to_fields([1.0, -1.0]);
        assert_eq!(f, FieldPair { h1: 2.0, h2: 0.0 });
        assert!(!f.same_sign());
        assert!(drift_to_fields([1.0, 0.0]).same_sign());
    }

    #[test]
    fn energy_split_is_exact() {
        for n in 1..=6 {
            let p = PolymerParams::new(n, 1.7, [0.3, 0.1], CouplingSpec::power_law(1.5).unwrap())
                .unwrap();
            let (c1, c2) = decoupled_chains(&p).unwrap();
            for code in 0..1u64 << (2 * n) {
                let w = Walk::from_code(code, n);
                let pair = walk_to_spins(&w);
                let lhs = p.beta() * polymer_hamiltonian(&w, &p).unwrap();
                let rhs = c1.beta() * ising_hamiltonian(pair.sigma(), &c1).unwrap()
                    + c2.beta() * ising_hamiltonian(pair.sigma_tilde(), &c2).unwrap();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn factorization_examples() {
        let nn = CouplingSpec::nearest_neighbour(1.0).unwrap();
        let p = PolymerParams::new(2, 1.0, [0.0, 0.0], nn.clone()).unwrap();
        assert!(measure_factorization_check(&p).unwrap() < 1e-12);
        let p =
            PolymerParams::new(3, 2.0, [1.0, 0.0], CouplingSpec::power_law(1.5).unwrap()).unwrap();
        assert!(measure_factorization_check(&p).unwrap() < 1e-12);
        let p = PolymerParams::new(1, 0.4, [0.2, -1.3], nn).unwrap();
        assert!(measure_factorization_check(&p).unwrap() < 1e-15);
    }

    #[test]
    fn literal_drift_sign_breaks_factorization() {
        // With +⟨h,S_N⟩ inside H the chain fields come out as -h1, -h2.
        let p =
            PolymerParams::new(3, 1.0, [1.0, 0.0], CouplingSpec::power_law(2.0).unwrap()).unwrap();
        let literal = p.with_drift([-1.0, 0.0]).unwrap();
        let dist = enumerate_polymer(&literal).unwrap();
        let (c1, c2) = decoupled_chains(&p).unwrap();
        let p1 = IsingEnumeration::new(&c1).unwrap().probabilities();
        let p2 = IsingEnumeration::new(&c2).unwrap().probabilities();
        let worst = dist
            .iter()
            .map(|(w, q)| {
                let pair = walk_to_spins(&w);
                (q - p1[pair.sigma.to_bits() as usize] * p2[pair.sigma_tilde.to_bits() as usize])
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-2);
    }

    #[test]
    fn msd_from_correlation_examples() {
        let id = Array2::<f64>::eye(5);
        assert_eq!(msd_from_correlations(&id, &id).unwrap(), 5.0);
        let ones = Array2::<f64>::ones((5, 5));
        assert_eq!(msd_from_correlations(&ones, &ones).unwrap(), 25.0);
        let beta: f64 = 2.0;
        let t = (beta / 2.0).tanh();
        let g = ndarray::arr2(&[[1.0, t], [t, 1.0]]);
        assert_abs_diff_eq!(
            msd_from_correlations(&g, &g).unwrap(),
            2.0 + 2.0 * t,
            epsilon = 1e-15
        );
        assert!(msd_from_correlations(&Array2::zeros((2, 3)), &Array2::zeros((2, 3))).is_err());
        assert!(msd_from_correlations(&id, &Array2::eye(4)).is_err());
    }

    #[test]
    fn msd_identity_matches_enumeration() {
        let p =
            PolymerParams::new(5, 1.3, [0.3, 0.1], CouplingSpec::power_law(2.0).unwrap()).unwrap();
        let (c1, c2) = decoupled_chains(&p).unwrap();
        let via_spins = msd_from_correlations(
            &two_point_matrix(&c1).unwrap(),
            &two_point_matrix(&c2).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(via_spins, exact_msd(&p).unwrap(), epsilon = 1e-10);
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn exact_sampling_at_infinite_temperature_is_uniform() {
        let p = PolymerParams::new(4, 1e-12, [0.0, 0.0], CouplingSpec::power_law(1.5).unwrap())
            .unwrap();
        let mut sampler = PolymerSampler::new(&p, ExactSampler::new, 11, 0).unwrap();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[sampler.sample().unwrap().steps()[0].index()] += 1;
        }
        let expect = draws as f64 / 4.0;
        let se = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 4.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn exact_sampling_reproduces_msd() {
        let p =
            PolymerParams::new(8, 1.0, [0.0, 0.0], CouplingSpec::power_law(1.5).unwrap()).unwrap();
        let mut sampler = PolymerSampler::new(&p, ExactSampler::new, 2024, 0).unwrap();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sampler.sample().unwrap().squared_displacement() as f64)
            .collect();
        let (mean, se) = mean_and_se(&xs);
        let exact = exact_msd(&p).unwrap();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "{mean} vs {exact} (se {se})"
        );
    }

    #[test]
    fn drift_pushes_along_e1() {
        let p =
            PolymerParams::new(6, 1.0, [1.0, 0.0], CouplingSpec::power_law(1.5).unwrap()).unwrap();
        let xs: Vec<f64> = {
            let mut sampler = PolymerSampler::new(&p, ExactSampler::new, 5, 0).unwrap();
            (0..10_000)
                .map(|_| sampler.sample().unwrap().endpoint()[0] as f64)
                .collect()
        };
        let (mean, se) = mean_and_se(&xs);
        assert!(mean > 5.0 * se);
        let w = sample_polymer(&p, ExactSampler::new, 5).unwrap();
        assert_eq!(w.len(), 6);
    }
}
