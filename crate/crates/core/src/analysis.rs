//! Scaling fits, the pressure functional and the normality test.

use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coupling::CouplingSpec;
use crate::decoupling::{direction_projections, drift_to_fields};
use crate::error::{Error, Result};
use crate::ising::{IsingEnumeration, IsingParams};
use crate::polymer::{enumerate_polymer, PolymerParams};
use crate::rng::{labels, stream};
use crate::transfer::{nn_ln_z, NNChainParams};

/// `Σ_{1≤i<j≤N} |i-j|^(-α) = Σ_{r=1}^{N-1} (N-r) r^(-α)`.
pub fn coupling_sum_bound(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Domain(format!(
            "coupling sum is only O(N) for alpha > 1, got alpha = {alpha}"
        )));
    }
    Ok((1..n)
        .map(|r| (n - r) as f64 * (r as f64).powf(-alpha))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Diffusive,
    Superdiffusive,
    Ballistic,
    Inconclusive,
}

impl Regime {
    /// Classifies by where `[γ̂ - 2se, γ̂ + 2se]` falls.
    pub fn classify(gamma: f64, stderr: f64) -> Self {
        let (lo, hi) = (gamma - 2.0 * stderr, gamma + 2.0 * stderr);
        let inside = |a: f64, b: f64| lo > a && hi < b;
        if inside(0.8, 1.2) {
            Regime::Diffusive
        } else if inside(1.2, 1.8) {
            Regime::Superdiffusive
        } else if inside(1.8, 2.05) {
            Regime::Ballistic
        } else {
            Regime::Inconclusive
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Diffusive => "diffusive",
            Regime::Superdiffusive => "superdiffusive",
            Regime::Ballistic => "ballistic",
            Regime::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub gamma_hat: f64,
    pub gamma_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdSample {
    pub n: f64,
    pub msd: f64,
    pub stderr: f64,
}

/// Weighted least squares of `ln msd` on `ln N`.
///
/// With positive standard errors the weights are `(msd/se)²` and the slope
/// error follows from the weights alone; if any error is zero the fit is
/// unweighted and the slope error comes from the residuals.
pub fn fit_gamma(points: &[MsdSample]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| !(w[1].n > w[0].n)) {
        return Err(Error::Fit(
            "system sizes must be strictly increasing".into(),
        ));
    }
    if points
        .iter()
        .any(|p| !(p.n > 0.0 && p.msd > 0.0) || !p.stderr.is_finite())
    {
        return Err(Error::Fit("sizes and msd values must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.msd.ln()).collect();
    let weighted = points.iter().all(|p| p.stderr > 0.0);
    let ws: Vec<f64> = points
        .iter()
        .map(|p| {
            if weighted {
                (p.msd / p.stderr).powi(2)
            } else {
                1.0
            }
        })
        .collect();

    let sw: f64 = ws.iter().sum();
    let xbar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws
        .iter()
        .zip(&xs)
        .map(|(w, x)| w * (x - xbar).powi(2))
        .sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2))
        .sum();
    let sst: f64 = ws
        .iter()
        .zip(&ys)
        .map(|(w, y)| w * (y - ybar).powi(2))
        .sum();
    let stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        (ssr / (points.len() as f64 - 2.0) / sxx).sqrt()
    };
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(ScalingFit {
        gamma_hat: slope,
        gamma_stderr: stderr,
        intercept,
        r_squared,
        n_points: points.len(),
        regime: Regime::classify(slope, stderr),
    })
}

/// `ln Z` of one decoupled chain as a function of its field.
#[derive(Debug, Clone)]
enum ChainLnZ {
    Enumerated(IsingEnumeration),
    NearestNeighbour { n: usize, beta: f64, j: f64 },
}

impl ChainLnZ {
    fn ln_z(&self, field: f64) -> Result<f64> {
        match self {
            ChainLnZ::Enumerated(e) => Ok(e.ln_z_at_field(field)),
            &ChainLnZ::NearestNeighbour { n, beta, j } => {
                nn_ln_z(&NNChainParams::new(n, beta, j, field)?)
            }
        }
    }
}

/// `Ψ_N(t) = (1/N) ln E[exp(β t ⟨S_N, v⟩)]`, evaluated through the two
/// chain partition functions at fields `h1 + t v1` and `h2 + t v2`.
#[derive(Debug, Clone)]
pub struct PressureFunctional {
    n: usize,
    direction: [f64; 2],
    v1: f64,
    v2: f64,
    h1: f64,
    h2: f64,
    chain: ChainLnZ,
    base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub t_grid: Vec<f64>,
    pub psi_values: Vec<f64>,
    pub n_sites: usize,
    pub direction: [f64; 2],
    pub v1: f64,
    pub v2: f64,
}

pub const DEFAULT_FD_STEP: f64 = 0.02;

impl PressureFunctional {
    pub fn new(params: &PolymerParams, v: [f64; 2]) -> Result<Self> {
        let couplings = params.couplings();
        couplings.require_summable()?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("direction must be finite"));
        }
        let n = params.n_steps();
        let fields = drift_to_fields(params.drift());
        let (v1, v2) = direction_projections(v);
        let half_beta = params.beta() / 2.0;
        let chain = match nn_coupling(couplings) {
            Some(j) => ChainLnZ::NearestNeighbour {
                n,
                beta: half_beta,
                j,
            },
            None => {
                let chain = IsingParams::new(n, half_beta, fields.h1, couplings.clone())?;
                ChainLnZ::Enumerated(IsingEnumeration::new(&chain)?)
            }
        };
        let base = chain.ln_z(fields.h1)? + chain.ln_z(fields.h2)?;
        Ok(Self {
            n,
            direction: v,
            v1,
            v2,
            h1: fields.h1,
            h2: fields.h2,
            chain,
            base,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let tilted =
            self.chain.ln_z(self.h1 + t * self.v1)? + self.chain.ln_z(self.h2 + t * self.v2)?;
        Ok((tilted - self.base) / self.n as f64)
    }

    /// Central first difference at `t0`, Richardson-extrapolated over the
    /// steps `step`, `step/2` and `step/4`.
    pub fn first_derivative(&self, t0: f64, step: f64) -> Result<f64> {
        richardson(step, |d| {
            Ok((self.value(t0 + d)? - self.value(t0 - d)?) / (2.0 * d))
        })
    }

    /// Central second difference at `t0`, Richardson-extrapolated over the
    /// steps `step`, `step/2` and `step/4`.
    pub fn second_derivative(&self, t0: f64, step: f64) -> Result<f64> {
        let centre = self.value(t0)?;
        richardson(step, |d| {
            Ok((self.value(t0 + d)? - 2.0 * centre + self.value(t0 - d)?) / (d * d))
        })
    }

    pub fn curve(&self, t_grid: &[f64]) -> Result<PressureCurve> {
        Ok(PressureCurve {
            t_grid: t_grid.to_vec(),
            psi_values: t_grid
                .iter()
                .map(|&t| self.value(t))
                .collect::<Result<_>>()?,
            n_sites: self.n,
            direction: self.direction,
            v1: self.v1,
            v2: self.v2,
        })
    }
}

/// Eliminates the `d²` and `d⁴` error terms of a central difference.
fn richardson(step: f64, diff: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::invalid(format!(
            "step must lie in (0, 0.1], got {step}"
        )));
    }
    let d = [diff(step)?, diff(step / 2.0)?, diff(step / 4.0)?];
    let r1 = (4.0 * d[1] - d[0]) / 3.0;
    let r2 = (4.0 * d[2] - d[1]) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

fn nn_coupling(c: &CouplingSpec) -> Option<f64> {
    let j = c.value(1);
    (c.is_nearest_neighbour() && j > 0.0).then_some(j)
}

pub fn pressure(params: &PolymerParams, v: [f64; 2], t: f64) -> Result<f64> {
    PressureFunctional::new(params, v)?.value(t)
}

pub fn pressure_second_derivative(
    params: &PolymerParams,
    v: [f64; 2],
    t0: f64,
    step: f64,
) -> Result<f64> {
    PressureFunctional::new(params, v)?.second_derivative(t0, step)
}

/// `(1/N) ln E[exp(β t ⟨S_N, v⟩)]` by direct enumeration of walks.
pub fn pressure_by_walk_enumeration(params: &PolymerParams, v: [f64; 2], t: f64) -> Result<f64> {
    let dist = enumerate_polymer(params)?;
    let bt = params.beta() * t;
    let m = dist.expectation(|w| {
        let [x, y] = w.endpoint();
        (bt * (x as f64 * v[0] + y as f64 * v[1])).exp()
    });
    Ok(m.ln() / params.n_steps() as f64)
}

/// `(1/N) Var(β⟨S_N, v⟩)` under the exact polymer measure.
pub fn projection_variance_by_walk_enumeration(params: &PolymerParams, v: [f64; 2]) -> Result<f64> {
    let dist = enumerate_polymer(params)?;
    let proj = |w: &crate::polymer::Walk| {
        let [x, y] = w.endpoint();
        params.beta() * (x as f64 * v[0] + y as f64 * v[1])
    };
    let mean = dist.expectation(proj);
    let var = dist.expectation(|w| (proj(w) - mean).powi(2));
    Ok(var / params.n_steps() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureExtrapolation {
    /// `(N, Ψ''_N(0))` for each size.
    pub table: Vec<(usize, f64)>,
    /// Linear extrapolation in `1/N` through the two largest sizes.
    pub extrapolated: f64,
}

/// `Ψ''_N(0)` over a ladder of sizes and its `1/N → 0` extrapolation.
pub fn extrapolate_curvature(
    couplings: &CouplingSpec,
    beta: f64,
    drift: [f64; 2],
    v: [f64; 2],
    sizes: &[usize],
    step: f64,
) -> Result<CurvatureExtrapolation> {
    if sizes.len() < 2 {
        return Err(Error::invalid("need at least two sizes to extrapolate"));
    }
    let table: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| {
            let p = PolymerParams::new(n, beta, drift, couplings.clone())?;
            Ok((
                n,
                PressureFunctional::new(&p, v)?.second_derivative(0.0, step)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut sorted = table.clone();
    sorted.sort_by_key(|&(n, _)| n);
    let (n1, c1) = sorted[sorted.len() - 2];
    let (n2, c2) = sorted[sorted.len() - 1];
    if n1 == n2 {
        return Err(Error::invalid("extrapolation sizes must differ"));
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    let extrapolated = (n2 * c2 - n1 * c1) / (n2 - n1);
    Ok(CurvatureExtrapolation {
        table,
        extrapolated,
    })
}

pub const MIN_CLT_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub ks_statistic: f64,
    pub p_value: f64,
    pub sample_variance: f64,
    pub target_variance: f64,
    pub n_samples: usize,
    /// Centred by the sample mean rather than a known mean; the asymptotic
    /// p-value is then conservative.
    pub mean_estimated: bool,
}

/// One-sample Kolmogorov–Smirnov test of `samples` against a centred normal
/// with variance `target_variance`.
pub fn clt_test(
    samples: &[f64],
    target_variance: f64,
    known_mean: Option<f64>,
) -> Result<CltResult> {
    if samples.len() < MIN_CLT_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_CLT_SAMPLES,
            got: samples.len(),
        });
    }
    if !(target_variance.is_finite() && target_variance > 0.0) {
        return Err(Error::invalid(format!(
            "target variance must be positive, got {target_variance}"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let n = samples.len();
    let sample_mean = samples.iter().sum::<f64>() / n as f64;
    let centre = known_mean.unwrap_or(sample_mean);
    let mut centred: Vec<f64> = samples.iter().map(|x| x - centre).collect();
    centred.sort_by(f64::total_cmp);
    let normal =
        Normal::new(0.0, target_variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let nf = n as f64;
    let d = centred
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sample_variance = samples
        .iter()
        .map(|x| (x - sample_mean).powi(2))
        .sum::<f64>()
        / (nf - 1.0);
    Ok(CltResult {
        ks_statistic: d,
        p_value: kolmogorov_p_value(d, n),
        sample_variance,
        target_variance,
        n_samples: n,
        mean_estimated: known_mean.is_none(),
    })
}

/// Asymptotic `P(D_n > d)` with Stephens' small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_survival(lambda)
}

/// `Q(λ) = 2 Σ_{j≥1} (-1)^(j-1) exp(-2 j² λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltCalibration {
    pub repetitions: usize,
    pub rejections: usize,
    pub level: f64,
    pub rejection_rate: f64,
}

/// Runs [`clt_test`] on `repetitions` exact normal samples of size
/// `n_samples` with known mean and variance and counts rejections at `level`.
pub fn calibrate_clt(
    repetitions: usize,
    n_samples: usize,
    variance: f64,
    level: f64,
    seed: u64,
) -> Result<CltCalibration> {
    if repetitions == 0 {
        return Err(Error::invalid("calibration needs at least one repetition"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::invalid(format!(
            "variance must be positive, got {variance}"
        )));
    }
    let dist =
        rand_distr::Normal::new(0.0, variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let rejections = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, labels::SYNTHETIC, rep);
            let xs: Vec<f64> = (0..n_samples).map(|_| dist.sample(&mut rng)).collect();
            clt_test(&xs, variance, Some(0.0)).map(|r| usize::from(r.p_value < level))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(CltCalibration {
        repetitions,
        rejections,
        level,
        rejection_rate: rejections as f64 / repetitions as f64,
    })
}
