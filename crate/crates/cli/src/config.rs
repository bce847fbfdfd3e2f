//! TOML experiment configs and their fail-fast validation.

use std::path::{Path, PathBuf};

use lrpolymer::analysis::{coupling_sum_bound, MIN_CLT_SAMPLES};
use lrpolymer::decoupling::{drift_to_fields, FieldPair};
use lrpolymer::ising::DEFAULT_ENUMERATION_CAP;
use lrpolymer::montecarlo::{InitialState, McmcPlan, DEFAULT_CHECK_INTERVAL};
use lrpolymer::polymer::DEFAULT_WALK_CAP;
use lrpolymer::{CouplingSpec, PolymerParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Largest size accepted by the oracle suite.
pub const ORACLE_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Enumerate,
    MsdScan,
    GammaFit,
    BallisticCheck,
    CltTest,
    PressureScan,
    OracleSuite,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Enumerate => "enumerate",
            ExperimentKind::MsdScan => "msd-scan",
            ExperimentKind::GammaFit => "gamma-fit",
            ExperimentKind::BallisticCheck => "ballistic-check",
            ExperimentKind::CltTest => "clt-test",
            ExperimentKind::PressureScan => "pressure-scan",
            ExperimentKind::OracleSuite => "oracle-suite",
        }
    }

    pub fn uses_mcmc(&self) -> bool {
        matches!(
            self,
            ExperimentKind::MsdScan
                | ExperimentKind::GammaFit
                | ExperimentKind::BallisticCheck
                | ExperimentKind::CltTest
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub pressure: PressureConfig,
    #[serde(default)]
    pub clt: CltConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Power-law exponent of `V(r) = r^(-alpha)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Explicit `V(1), V(2), ...`; exclusive with `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_distance: Option<usize>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub drift: [f64; 2],
    #[serde(default = "default_direction")]
    pub direction: [f64; 2],
    pub n: Vec<usize>,
}

fn default_direction() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    /// Total sweeps per replica, burn-in included.
    pub sweeps: u64,
    pub burn_in: u64,
    pub replicas: usize,
    pub thinning: u64,
    pub batches: usize,
    pub initial: InitialState,
    pub check_interval: u64,
    /// Write per-replica energy and magnetization traces.
    pub trace: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            sweeps: 22_000,
            burn_in: 2_000,
            replicas: 4,
            thinning: 1,
            batches: 32,
            initial: InitialState::Random,
            check_interval: DEFAULT_CHECK_INTERVAL,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Also tabulate the `O(N)` coupling-sum bound.
    pub coupling_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureConfig {
    pub t: Vec<f64>,
    pub step: f64,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            t: (-4..=4).map(|k| k as f64 * 0.05).collect(),
            step: lrpolymer::analysis::DEFAULT_FD_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltConfig {
    /// Enumerable sizes whose curvature is extrapolated when `N` itself is
    /// too large.
    pub extrapolation_sizes: Vec<usize>,
    pub step: f64,
    pub calibration_reps: usize,
    pub level: f64,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            extrapolation_sizes: vec![18, 20],
            step: lrpolymer::analysis::DEFAULT_FD_STEP,
            calibration_reps: 0,
            level: 0.05,
        }
    }
}

fn bad(msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(msg.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| bad(format!("config does not parse: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// SHA-256 of the normalised config, seed included.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn couplings(&self) -> Result<CouplingSpec, CliError> {
        let m = &self.model;
        let spec = match (m.alpha, &m.couplings) {
            (Some(alpha), None) => CouplingSpec::power_law(alpha),
            (None, Some(table)) => CouplingSpec::table(table.clone()),
            _ => return Err(bad("model needs exactly one of `alpha` or `couplings`")),
        }
        .map_err(bad)?;
        Ok(match m.max_distance {
            Some(0) => return Err(bad("max_distance must be at least 1")),
            Some(d) => spec.with_max_distance(d),
            None => spec,
        })
    }

    pub fn fields(&self) -> FieldPair {
        drift_to_fields(self.model.drift)
    }

    pub fn plan(&self) -> McmcPlan {
        let c = &self.mcmc;
        let mut plan = McmcPlan::new(c.sweeps, c.burn_in, c.replicas, self.seed)
            .with_thinning(c.thinning)
            .with_initial(c.initial);
        plan.batch_count = c.batches;
        plan.check_interval = c.check_interval;
        plan.record_trace = c.trace;
        plan
    }

    pub fn max_n(&self) -> usize {
        self.model.n.iter().copied().max().unwrap_or(0)
    }

    /// Checks every parameter against the preconditions of the library
    /// calls the experiment will make. Nothing is computed.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        let couplings = self.couplings()?;
        if m.beta.is_empty() {
            return Err(bad("model.beta is empty"));
        }
        if m.n.is_empty() {
            return Err(bad("model.n is empty"));
        }
        if m.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("model.n must be strictly increasing"));
        }
        if !m.direction.iter().all(|x| x.is_finite()) {
            return Err(bad("model.direction must be finite"));
        }
        for &beta in &m.beta {
            for &n in &m.n {
                PolymerParams::new(n, beta, m.drift, couplings.clone()).map_err(bad)?;
            }
        }

        if self.kind.uses_mcmc() {
            self.plan().validate().map_err(bad)?;
            couplings.require_positive(self.max_n()).map_err(bad)?;
        }

        match self.kind {
            ExperimentKind::Enumerate => {
                self.require_max_n(DEFAULT_WALK_CAP, "walk enumeration")?
            }
            ExperimentKind::OracleSuite => self.require_max_n(ORACLE_MAX_N, "the oracle suite")?,
            ExperimentKind::MsdScan => {}
            ExperimentKind::GammaFit | ExperimentKind::BallisticCheck => {
                if m.n.len() < 3 {
                    return Err(bad("a scaling fit needs at least 3 sizes in model.n"));
                }
                if self.fit.coupling_bound {
                    let alpha = m
                        .alpha
                        .ok_or_else(|| bad("fit.coupling_bound needs a power-law `alpha`"))?;
                    coupling_sum_bound(alpha, 2).map_err(bad)?;
                }
            }
            ExperimentKind::PressureScan => {
                couplings.require_summable().map_err(bad)?;
                if !couplings.is_nearest_neighbour() {
                    self.require_max_n(DEFAULT_ENUMERATION_CAP, "exact pressure")?;
                }
                let p = &self.pressure;
                if p.t.is_empty() || !p.t.iter().all(|t| t.is_finite()) {
                    return Err(bad("pressure.t must be a non-empty list of finite values"));
                }
                check_step(p.step)?;
            }
            ExperimentKind::CltTest => {
                couplings.require_summable().map_err(bad)?;
                if m.direction == [0.0, 0.0] {
                    return Err(bad("model.direction must be nonzero"));
                }
                let c = &self.clt;
                check_step(c.step)?;
                if !(c.level > 0.0 && c.level < 1.0) {
                    return Err(bad(format!(
                        "clt.level must lie in (0, 1), got {}",
                        c.level
                    )));
                }
                let samples = self.plan().measurements() as usize * self.mcmc.replicas;
                if samples < MIN_CLT_SAMPLES {
                    return Err(bad(format!(
                        "clt-test needs at least {MIN_CLT_SAMPLES} samples, the mcmc plan yields {samples}"
                    )));
                }
                let needs_extrapolation =
                    !couplings.is_nearest_neighbour() && self.max_n() > DEFAULT_ENUMERATION_CAP;
                if needs_extrapolation {
                    let sizes = &c.extrapolation_sizes;
                    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(bad(
                            "clt.extrapolation_sizes needs at least two increasing sizes",
                        ));
                    }
                    if let Some(&big) = sizes.iter().find(|&&s| s > DEFAULT_ENUMERATION_CAP) {
                        return Err(bad(format!(
                            "clt.extrapolation_sizes entry {big} exceeds the enumeration cap {DEFAULT_ENUMERATION_CAP}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn require_max_n(&self, cap: usize, what: &str) -> Result<(), CliError> {
        let n = self.max_n();
        if n > cap {
            return Err(bad(format!(
                "N = {n} is too large for {what} (at most {cap})"
            )));
        }
        Ok(())
    }
}

fn check_step(step: f64) -> Result<(), CliError> {
    if step > 0.0 && step <= 0.1 {
        Ok(())
    } else {
        Err(bad(format!(
            "finite-difference step must lie in (0, 0.1], got {step}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "enumerate"
[model]
alpha = 1.5
beta = [1.0]
n = [1, 2, 3]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::Enumerate);
        assert_eq!(c.seed, 0);
        assert_eq!(c.model.drift, [0.0, 0.0]);
        assert_eq!(c.model.direction, [1.0, 0.0]);
        assert_eq!(c.mcmc.batches, 32);
        c.validate().unwrap();
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("alpha = 1.5", "alpah = 1.5");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn validation_failures() {
        let base = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let check = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c.validate().unwrap_err()
        };
        check(&|c| c.model.n = vec![3, 2]);
        check(&|c| c.model.n = vec![11]);
        check(&|c| c.model.beta = vec![-1.0]);
        check(&|c| c.model.couplings = Some(vec![1.0]));
        check(&|c| c.model.alpha = None);
        check(&|c| {
            c.kind = ExperimentKind::OracleSuite;
            c.model.n = vec![9];
        });
        check(&|c| {
            c.kind = ExperimentKind::MsdScan;
            c.mcmc.burn_in = c.mcmc.sweeps;
        });
        check(&|c| {
            c.kind = ExperimentKind::PressureScan;
            c.model.alpha = Some(0.9);
        });
    }

    #[test]
    fn coupling_bound_needs_alpha_above_one() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        c.kind = ExperimentKind::GammaFit;
        c.model.alpha = Some(0.9);
        c.fit.coupling_bound = true;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("alpha > 1"), "{msg}");
        c.fit.coupling_bound = false;
        c.validate().unwrap();
    }

    #[test]
    fn clt_sample_floor() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        c.kind = ExperimentKind::CltTest;
        c.mcmc.sweeps = 2_100;
        c.mcmc.burn_in = 2_000;
        assert!(c.validate().unwrap_err().to_string().contains("samples"));
        c.mcmc.sweeps = 2_200;
        c.validate().unwrap();
    }
}
