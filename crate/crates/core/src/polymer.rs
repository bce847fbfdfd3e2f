//! Origin-rooted nearest-neighbour walks on Z² under the Gibbs measure
//!
//! `P(S) ∝ exp(-β H(S))`, `H(S) = -Σ_{i<j} V(|i-j|) ⟨X_i, X_j⟩ - ⟨h, S_N⟩`.
//!
//! The drift enters with a minus sign so that `h` favours displacement
//! along `h` and the decoupled Ising fields are `⟨h, e1 - e2⟩` and
//! `⟨h, e1 + e2⟩` without a sign flip.

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::ising::log_sum_exp;

pub const DEFAULT_WALK_CAP: usize = 10;
pub const MAX_WALK_CAP: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    /// `+e1`
    East,
    /// `+e2`
    North,
    /// `-e1`
    West,
    /// `-e2`
    South,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::East, Step::North, Step::West, Step::South];

    pub fn vector(self) -> [i32; 2] {
        match self {
            Step::East => [1, 0],
            Step::North => [0, 1],
            Step::West => [-1, 0],
            Step::South => [0, -1],
        }
    }

    pub fn from_vector(v: [i32; 2]) -> Option<Self> {
        match v {
            [1, 0] => Some(Step::East),
            [0, 1] => Some(Step::North),
            [-1, 0] => Some(Step::West),
            [0, -1] => Some(Step::South),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Step::East => 0,
            Step::North => 1,
            Step::West => 2,
            Step::South => 3,
        }
    }

    pub fn dot(self, other: Step) -> i32 {
        let (a, b) = (self.vector(), other.vector());
        a[0] * b[0] + a[1] * b[1]
    }

    pub fn reversed(self) -> Step {
        Step::ALL[(self.index() + 2) % 4]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Walk {
    steps: Vec<Step>,
}

impl Walk {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    /// Base-4 decoding: step `i` is digit `i` of `code`.
    pub fn from_code(code: u64, n: usize) -> Self {
        Self {
            steps: (0..n)
                .map(|i| Step::ALL[((code >> (2 * i)) & 3) as usize])
                .collect(),
        }
    }

    pub fn code(&self) -> u64 {
        self.steps
            .iter()
            .enumerate()
            .fold(0, |acc, (i, s)| acc | ((s.index() as u64) << (2 * i)))
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `S_0 = 0, S_1, ..., S_N`.
    pub fn positions(&self) -> Vec<[i64; 2]> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut p = [0i64; 2];
        out.push(p);
        for s in &self.steps {
            let v = s.vector();
            p[0] += i64::from(v[0]);
            p[1] += i64::from(v[1]);
            out.push(p);
        }
        out
    }

    pub fn endpoint(&self) -> [i64; 2] {
        endpoint(&self.steps)
    }

    /// Squared Euclidean end-to-end distance.
    pub fn squared_displacement(&self) -> i64 {
        let [x, y] = self.endpoint();
        x * x + y * y
    }

    pub fn map_steps(&self, f: impl Fn(Step) -> Step) -> Walk {
        Walk::new(self.steps.iter().map(|&s| f(s)).collect())
    }
}

fn endpoint(steps: &[Step]) -> [i64; 2] {
    steps.iter().fold([0, 0], |[x, y], s| {
        let v = s.vector();
        [x + i64::from(v[0]), y + i64::from(v[1])]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerParams {
    n_steps: usize,
    beta: f64,
    drift: [f64; 2],
    couplings: CouplingSpec,
    table: Vec<f64>,
}

impl PolymerParams {
    pub fn new(
        n_steps: usize,
        beta: f64,
        drift: [f64; 2],
        couplings: CouplingSpec,
    ) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !drift.iter().all(|h| h.is_finite()) {
            return Err(Error::invalid("drift must be finite"));
        }
        let table = couplings.distance_table(n_steps);
        Ok(Self {
            n_steps,
            beta,
            drift,
            couplings,
            table,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn drift(&self) -> [f64; 2] {
        self.drift
    }

    pub fn couplings(&self) -> &CouplingSpec {
        &self.couplings
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

    pub fn with_drift(&self, drift: [f64; 2]) -> Result<Self> {
        Self::new(self.n_steps, self.beta, drift, self.couplings.clone())
    }

    pub fn with_n_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(n_steps, self.beta, self.drift, self.couplings.clone())
    }
}

fn energy_of_steps(steps: &[Step], params: &PolymerParams) -> f64 {
    let mut energy = 0.0;
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            energy -= params.coupling(j - i) * f64::from(steps[i].dot(steps[j]));
        }
    }
    let [x, y] = endpoint(steps);
    let h = params.drift;
    energy - (h[0] * x as f64 + h[1] * y as f64)
}

pub fn polymer_hamiltonian(walk: &Walk, params: &PolymerParams) -> Result<f64> {
    if walk.len() != params.n_steps {
        return Err(Error::Shape {
            expected: params.n_steps,
            got: walk.len(),
        });
    }
    Ok(energy_of_steps(walk.steps(), params))
}

/// Exact Gibbs distribution over all `4^N` walks.
#[derive(Debug, Clone)]
pub struct PolymerDistribution {
    n_steps: usize,
    probabilities: Vec<f64>,
    ln_z: f64,
}

impl PolymerDistribution {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn ln_z(&self) -> f64 {
        self.ln_z
    }

    /// Probabilities indexed by [`Walk::code`].
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, walk: &Walk) -> f64 {
        self.probabilities[walk.code() as usize]
    }

    pub fn expectation(&self, f: impl Fn(&Walk) -> f64) -> f64 {
        self.iter().map(|(w, p)| p * f(&w)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Walk, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(code, &p)| (Walk::from_code(code as u64, self.n_steps), p))
    }
}

pub fn enumerate_polymer(params: &PolymerParams) -> Result<PolymerDistribution> {
    enumerate_polymer_with_cap(params, DEFAULT_WALK_CAP)
}

pub fn enumerate_polymer_with_cap(
    params: &PolymerParams,
    cap: usize,
) -> Result<PolymerDistribution> {
    let n = params.n_steps;
    let cap = cap.min(MAX_WALK_CAP);
    if n > cap {
        return Err(Error::CapExceeded {
            what: "polymer",
            size: n,
            cap,
        });
    }
    let count = 1usize << (2 * n);
    let mut steps = vec![Step::East; n];
    let log_weights: Vec<f64> = (0..count as u64)
        .map(|code| {
            for (i, s) in steps.iter_mut().enumerate() {
                *s = Step::ALL[((code >> (2 * i)) & 3) as usize];
            }
            -params.beta * energy_of_steps(&steps, params)
        })
        .collect();
    let ln_z = log_sum_exp(log_weights.iter().copied());
    let probabilities = log_weights.iter().map(|w| (w - ln_z).exp()).collect();
    Ok(PolymerDistribution {
        n_steps: n,
        probabilities,
        ln_z,
    })
}

/// `E‖S_N‖²` with the Euclidean norm.
pub fn exact_msd(params: &PolymerParams) -> Result<f64> {
    let dist = enumerate_polymer(params)?;
    Ok(dist.expectation(|w| w.squared_displacement() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nn() -> CouplingSpec {
        CouplingSpec::nearest_neighbour(1.0).unwrap()
    }

    fn rotate(s: Step) -> Step {
        Step::ALL[(s.index() + 1) % 4]
    }

    fn reflect(s: Step) -> Step {
        match s {
            Step::North => Step::South,
            Step::South => Step::North,
            other => other,
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let p = PolymerParams::new(2, 1.0, [0.0, 0.0], nn()).unwrap();
        let aligned = Walk::new(vec![Step::East, Step::East]);
        let ortho = Walk::new(vec![Step::East, Step::North]);
        assert_eq!(polymer_hamiltonian(&aligned, &p).unwrap(), -1.0);
        assert_eq!(polymer_hamiltonian(&ortho, &p).unwrap(), 0.0);
        let p = p.with_drift([1.0, 0.0]).unwrap();
        assert_eq!(polymer_hamiltonian(&aligned, &p).unwrap(), -3.0);
        assert!(matches!(
            polymer_hamiltonian(&Walk::new(vec![Step::East]), &p),
            Err(Error::Shape {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn walk_codes_round_trip() {
        for code in 0..256 {
            let w = Walk::from_code(code, 4);
            assert_eq!(w.code(), code);
            assert_eq!(w.positions()[0], [0, 0]);
            for pair in w.positions().windows(2) {
                let d = (pair[1][0] - pair[0][0]).abs() + (pair[1][1] - pair[0][1]).abs();
                assert_eq!(d, 1);
            }
        }
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let p = PolymerParams::new(5, 1e-12, [0.3, -0.2], CouplingSpec::power_law(1.5).unwrap())
            .unwrap();
        let d = enumerate_polymer(&p).unwrap();
        let u = 4f64.powi(-5);
        assert!(d.probabilities().iter().all(|q| (q - u).abs() < 1e-9));
        assert_abs_diff_eq!(exact_msd(&p).unwrap(), 5.0, epsilon = 1e-8);
    }

    #[test]
    fn single_step() {
        let p = PolymerParams::new(1, 1.0, [0.0, 0.0], nn()).unwrap();
        let d = enumerate_polymer(&p).unwrap();
        assert!(d.probabilities().iter().all(|q| (q - 0.25).abs() < 1e-15));
        assert_eq!(exact_msd(&p).unwrap(), 1.0);

        let p = p.with_drift([0.7, -0.4]).unwrap();
        let d = enumerate_polymer(&p).unwrap();
        let z: f64 = [0.7, -0.4, -0.7, 0.4].iter().map(|x: &f64| x.exp()).sum();
        assert_abs_diff_eq!(
            d.probability(&Walk::new(vec![Step::East])),
            0.7f64.exp() / z,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d.probability(&Walk::new(vec![Step::South])),
            0.4f64.exp() / z,
            epsilon = 1e-15
        );
    }

    #[test]
    fn aligned_to_orthogonal_ratio_is_e() {
        let p = PolymerParams::new(2, 1.0, [0.0, 0.0], nn()).unwrap();
        let d = enumerate_polymer(&p).unwrap();
        let a = d.probability(&Walk::new(vec![Step::East, Step::East]));
        let o = d.probability(&Walk::new(vec![Step::East, Step::North]));
        assert_abs_diff_eq!(a / o, std::f64::consts::E, epsilon = 1e-13);
        let total: f64 = d.probabilities().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_step_msd_closed_form() {
        let p = PolymerParams::new(2, 2.0, [0.0, 0.0], nn()).unwrap();
        assert_abs_diff_eq!(
            exact_msd(&p).unwrap(),
            2.0 + 2.0 * 1f64.tanh(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(exact_msd(&p).unwrap(), 3.523188, epsilon = 1e-6);
    }

    #[test]
    fn drift_reversal_reverses_steps() {
        let c = CouplingSpec::power_law(2.0).unwrap();
        let p = PolymerParams::new(4, 1.2, [0.5, 0.2], c).unwrap();
        let q = p.with_drift([-0.5, -0.2]).unwrap();
        let dp = enumerate_polymer(&p).unwrap();
        let dq = enumerate_polymer(&q).unwrap();
        for (w, prob) in dp.iter() {
            assert_abs_diff_eq!(
                prob,
                dq.probability(&w.map_steps(Step::reversed)),
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(
            exact_msd(&p).unwrap(),
            exact_msd(&q).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_drift_has_square_symmetry() {
        let p =
            PolymerParams::new(5, 0.9, [0.0, 0.0], CouplingSpec::power_law(1.5).unwrap()).unwrap();
        let d = enumerate_polymer(&p).unwrap();
        for (w, prob) in d.iter() {
            let mut g = w.clone();
            for _ in 0..4 {
                g = g.map_steps(rotate);
                assert_abs_diff_eq!(prob, d.probability(&g), epsilon = 1e-15);
                assert_abs_diff_eq!(prob, d.probability(&g.map_steps(reflect)), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn msd_bounds_for_positive_couplings() {
        for n in 1..=7 {
            for beta in [0.3, 1.0, 3.0] {
                let p =
                    PolymerParams::new(n, beta, [0.0, 0.0], CouplingSpec::power_law(1.5).unwrap())
                        .unwrap();
                let msd = exact_msd(&p).unwrap();
                let n = n as f64;
                assert!(
                    msd >= n - 1e-12 && msd <= n * n + 1e-12,
                    "n={n} beta={beta} msd={msd}"
                );
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let p = PolymerParams::new(11, 1.0, [0.0, 0.0], nn()).unwrap();
        assert!(matches!(
            enumerate_polymer(&p),
            Err(Error::CapExceeded {
                size: 11,
                cap: 10,
                ..
            })
        ));
    }
}
