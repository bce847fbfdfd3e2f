//! Nearest-neighbour chains through 2×2 transfer matrices.
//!
//! Free boundaries: each bond matrix carries half of the field weight of
//! both of its sites, and the two unpaired halves at the chain ends live in
//! the boundary vector `u(s) = exp(βks/2)`. Partial products are kept as
//! unit-sum vectors with separate log-scale accumulators.

use ndarray::Array2;

use crate::error::{Error, Result};

const SPINS: [f64; 2] = [1.0, -1.0];
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NNChainParams {
    pub n_sites: usize,
    pub beta: f64,
    pub j_coupling: f64,
    pub field: f64,
}

impl NNChainParams {
    pub fn new(n_sites: usize, beta: f64, j_coupling: f64, field: f64) -> Result<Self> {
        let p = Self {
            n_sites,
            beta,
            j_coupling,
            field,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::invalid("n_sites must be at least 1"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.j_coupling.is_finite() && self.j_coupling > 0.0) {
            return Err(Error::invalid(format!(
                "nearest-neighbour coupling must be positive, got {}",
                self.j_coupling
            )));
        }
        if !self.field.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        if self.beta * self.j_coupling > MAX_EXPONENT
            || (self.beta * self.field).abs() > MAX_EXPONENT
        {
            return Err(Error::invalid("beta*J and |beta*k| must not exceed 700"));
        }
        Ok(())
    }
}

/// Unit-sum vector with its log normalisation.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    v: [f64; 2],
    log_scale: f64,
}

impl Scaled {
    fn new(v: [f64; 2], log_scale: f64) -> Self {
        let s = v[0].abs() + v[1].abs();
        Self {
            v: [v[0] / s, v[1] / s],
            log_scale: log_scale + s.ln(),
        }
    }
}

struct Chain {
    /// Bond matrix divided by `exp(shift)`.
    t: [[f64; 2]; 2],
    /// Log of the factor removed from every bond matrix.
    shift: f64,
    /// Boundary half-field vector divided by `exp(boundary_shift)`.
    u: [f64; 2],
    boundary_shift: f64,
    n: usize,
}

impl Chain {
    fn new(p: &NNChainParams) -> Self {
        let bj = p.beta * p.j_coupling;
        let bk = p.beta * p.field;
        let shift = bj + bk.abs();
        let mut t = [[0.0; 2]; 2];
        for (a, &sa) in SPINS.iter().enumerate() {
            for (b, &sb) in SPINS.iter().enumerate() {
                t[a][b] = (bj * sa * sb + bk * (sa + sb) / 2.0 - shift).exp();
            }
        }
        let boundary_shift = bk.abs() / 2.0;
        let u = [
            (bk / 2.0 - boundary_shift).exp(),
            (-bk / 2.0 - boundary_shift).exp(),
        ];
        Self {
            t,
            shift,
            u,
            boundary_shift,
            n: p.n_sites,
        }
    }

    fn left_mul(&self, x: &Scaled) -> Scaled {
        let v = [
            x.v[0] * self.t[0][0] + x.v[1] * self.t[1][0],
            x.v[0] * self.t[0][1] + x.v[1] * self.t[1][1],
        ];
        Scaled::new(v, x.log_scale)
    }

    fn right_mul(&self, x: &Scaled) -> Scaled {
        let v = [
            self.t[0][0] * x.v[0] + self.t[0][1] * x.v[1],
            self.t[1][0] * x.v[0] + self.t[1][1] * x.v[1],
        ];
        Scaled::new(v, x.log_scale)
    }

    /// `L_i = u^T T^(i-1)` and `R_i = T^(N-i) u` for every site.
    fn partial_products(&self) -> (Vec<Scaled>, Vec<Scaled>) {
        let n = self.n;
        let mut left = Vec::with_capacity(n);
        left.push(Scaled::new(self.u, 0.0));
        for i in 1..n {
            let next = self.left_mul(&left[i - 1]);
            left.push(next);
        }
        let mut right = vec![Scaled::new(self.u, 0.0); n];
        for i in (0..n - 1).rev() {
            right[i] = self.right_mul(&right[i + 1]);
        }
        (left, right)
    }

    fn total_shift(&self) -> f64 {
        (self.n - 1) as f64 * self.shift + 2.0 * self.boundary_shift
    }
}

fn dot(l: &Scaled, r: &Scaled) -> f64 {
    l.v[0] * r.v[0] + l.v[1] * r.v[1]
}

fn signed_dot(l: &Scaled, r: &Scaled) -> f64 {
    l.v[0] * r.v[0] - l.v[1] * r.v[1]
}

#[derive(Debug, Clone)]
pub struct NnObservables {
    pub magnetizations: Vec<f64>,
    pub correlations: Array2<f64>,
    pub ln_z: f64,
}

/// Site magnetizations and `ln Z` in O(N).
pub fn nn_magnetizations(params: &NNChainParams) -> Result<(Vec<f64>, f64)> {
    params.validate()?;
    let chain = Chain::new(params);
    let (left, right) = chain.partial_products();
    let mags = left
        .iter()
        .zip(&right)
        .map(|(l, r)| signed_dot(l, r) / dot(l, r))
        .collect();
    let ln_z = left[0].log_scale
        + right[0].log_scale
        + dot(&left[0], &right[0]).ln()
        + chain.total_shift();
    Ok((mags, ln_z))
}

pub fn nn_ln_z(params: &NNChainParams) -> Result<f64> {
    nn_magnetizations(params).map(|(_, ln_z)| ln_z)
}

/// Magnetizations, the full correlation matrix and `ln Z`; the matrix costs
/// O(N²).
pub fn nn_observables(params: &NNChainParams) -> Result<NnObservables> {
    params.validate()?;
    let n = params.n_sites;
    let chain = Chain::new(params);
    let (left, right) = chain.partial_products();
    // Normalised partition function: identical at every cut.
    let log_norm: Vec<f64> = left
        .iter()
        .zip(&right)
        .map(|(l, r)| l.log_scale + r.log_scale + dot(l, r).ln())
        .collect();
    let magnetizations = left
        .iter()
        .zip(&right)
        .map(|(l, r)| signed_dot(l, r) / dot(l, r))
        .collect();

    let mut correlations = Array2::<f64>::eye(n);
    for i in 0..n {
        // w = (L_i ∘ s) T^(j-i), carried forward one bond at a time.
        let mut w = Scaled::new([left[i].v[0], -left[i].v[1]], left[i].log_scale);
        for j in i + 1..n {
            w = chain.left_mul(&w);
            let value =
                signed_dot(&w, &right[j]) * (w.log_scale + right[j].log_scale - log_norm[0]).exp();
            correlations[[i, j]] = value;
            correlations[[j, i]] = value;
        }
    }
    Ok(NnObservables {
        magnetizations,
        correlations,
        ln_z: log_norm[0] + chain.total_shift(),
    })
}

/// Infinite-volume magnetization of the nearest-neighbour chain,
/// `sinh(βk) / sqrt(sinh²(βk) + exp(-4βV(1)))`.
pub fn limit_magnetization(beta: f64, v1: f64, k: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if !(v1.is_finite() && v1 > 0.0) {
        return Err(Error::invalid(format!("V(1) must be positive, got {v1}")));
    }
    if !k.is_finite() {
        return Err(Error::invalid("field must be finite"));
    }
    let bk = beta * k;
    if bk == 0.0 {
        return Ok(0.0);
    }
    // Divide through by sinh(βk) so large |βk| cannot overflow.
    let ratio = if bk.abs() < 20.0 {
        (-4.0 * beta * v1).exp() / bk.sinh().powi(2)
    } else {
        4.0 * (-4.0 * beta * v1 - 2.0 * bk.abs()).exp()
    };
    Ok(bk.signum() / (1.0 + ratio).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingSpec;
    use crate::ising::{IsingEnumeration, IsingParams};
    use approx::assert_abs_diff_eq;

    fn enumerated(p: &NNChainParams) -> IsingEnumeration {
        let ip = IsingParams::new(
            p.n_sites,
            p.beta,
            p.field,
            CouplingSpec::nearest_neighbour(p.j_coupling).unwrap(),
        )
        .unwrap();
        IsingEnumeration::new(&ip).unwrap()
    }

    #[test]
    fn zero_field_is_unmagnetized() {
        let p = NNChainParams::new(9, 1.3, 1.0, 0.0).unwrap();
        let obs = nn_observables(&p).unwrap();
        assert!(obs.magnetizations.iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn two_sites_closed_form() {
        let p = NNChainParams::new(2, 1.0, 1.0, 0.0).unwrap();
        let obs = nn_observables(&p).unwrap();
        assert_abs_diff_eq!(obs.correlations[[0, 1]], 1f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(obs.ln_z, (4.0 * 1f64.cosh()).ln(), epsilon = 1e-14);
    }

    #[test]
    fn single_site() {
        let p = NNChainParams::new(1, 0.5, 1.0, 0.8).unwrap();
        let obs = nn_observables(&p).unwrap();
        assert_abs_diff_eq!(obs.magnetizations[0], 0.4f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(obs.ln_z, (2.0 * 0.4f64.cosh()).ln(), epsilon = 1e-15);
    }

    #[test]
    fn matches_enumeration_at_twelve_sites() {
        let p = NNChainParams::new(12, 0.7, 1.0, 0.3).unwrap();
        let obs = nn_observables(&p).unwrap();
        let e = enumerated(&p);
        assert_abs_diff_eq!(obs.ln_z, e.ln_z(), epsilon = 1e-10);
        for (a, b) in obs.magnetizations.iter().zip(e.magnetizations()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        let g = e.two_point_matrix();
        for (a, b) in obs.correlations.iter().zip(g.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn large_parameters_stay_finite() {
        let p = NNChainParams::new(5000, 40.0, 1.0, -0.5).unwrap();
        let (m, ln_z) = nn_magnetizations(&p).unwrap();
        assert!(ln_z.is_finite());
        assert!(m.iter().all(|v| (*v + 1.0).abs() < 1e-9));
        assert!(NNChainParams::new(5, 800.0, 1.0, 0.0).is_err());
        assert!(NNChainParams::new(5, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn limit_magnetization_examples() {
        assert_eq!(limit_magnetization(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            limit_magnetization(1.0, 1e-12, 1.0).unwrap(),
            1f64.tanh(),
            epsilon = 1e-11
        );
        let m = limit_magnetization(1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(m, 0.993_434, epsilon = 5e-7);
        assert_abs_diff_eq!(
            limit_magnetization(1.0, 1.0, -1.0).unwrap(),
            -m,
            epsilon = 1e-16
        );
        assert_eq!(limit_magnetization(1.0, 1.0, 1e6).unwrap(), 1.0);
        assert!(limit_magnetization(0.0, 1.0, 1.0).is_err());
        assert!(limit_magnetization(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn midpoint_converges_monotonically_to_limit() {
        for &(beta, j, k) in &[
            (1.0, 1.0, 0.25),
            (0.1, 2.0, 0.1),
            (2.0, 0.1, -2.0),
            (0.5, 1.0, 1.0),
        ] {
            let limit = limit_magnetization(beta, j, k).unwrap();
            let mut prev_gap = f64::INFINITY;
            for n in [10, 25, 50, 100, 200, 400] {
                let p = NNChainParams::new(n, beta, j, k).unwrap();
                let (m, _) = nn_magnetizations(&p).unwrap();
                let gap = (m[n.div_ceil(2) - 1] - limit).abs();
                assert!(gap <= prev_gap + 1e-15, "gap grew at n={n}");
                prev_gap = gap;
            }
            assert!(prev_gap < 1e-6, "({beta},{j},{k}): gap {prev_gap}");
        }
    }

    #[test]
    fn limit_is_monotone_in_field_and_coupling() {
        let mut prev = -1.0;
        for i in 1..=50 {
            let m = limit_magnetization(0.8, 1.0, i as f64 * 0.05).unwrap();
            assert!(m > prev);
            prev = m;
        }
        let mut prev = 0.0;
        for i in 1..=50 {
            let m = limit_magnetization(1.0, i as f64 * 0.05, 0.3).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }
}
