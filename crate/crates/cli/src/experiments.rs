//! One function per experiment kind; each returns its result tables and
//! per-task statuses without touching the filesystem.

use lrpolymer::analysis::{
    calibrate_clt, clt_test, coupling_sum_bound, extrapolate_curvature, fit_gamma,
    pressure_by_walk_enumeration, projection_variance_by_walk_enumeration, CltResult, MsdSample,
    PressureFunctional, Regime, ScalingFit,
};
use lrpolymer::decoupling::{
    decoupled_chains, measure_factorization_check, msd_from_correlations, FieldPair,
};
use lrpolymer::ising::{two_point_matrix, IsingEnumeration, DEFAULT_ENUMERATION_CAP};
use lrpolymer::montecarlo::{
    estimate_msd_curve, pooled_estimate, run_chain, sample_polymer_draws, McmcPlan, MsdPoint,
    Observable, PolymerDraw,
};
use lrpolymer::polymer::{enumerate_polymer, exact_msd};
use lrpolymer::rng::task_seed;
use lrpolymer::transfer::{nn_observables, NNChainParams};
use lrpolymer::{CouplingSpec, IsingParams, PolymerParams};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::{TaskRecord, TaskStatus};
use crate::output::Table;
use crate::CliError;

pub const OUTSIDE_HYPOTHESES: &str = "outside theorem hypotheses";

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub tasks: Vec<TaskRecord>,
}

impl Outcome {
    fn task(&mut self, name: String, status: TaskStatus, detail: Option<String>) {
        self.tasks.push(TaskRecord {
            name,
            status,
            detail,
        });
    }
}

fn lib(e: lrpolymer::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn converged_status(ok: bool) -> TaskStatus {
    if ok {
        TaskStatus::Ok
    } else {
        TaskStatus::Unconverged
    }
}

/// Runs the experiment named by `config.kind`; the config must already be
/// validated.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    match config.kind {
        ExperimentKind::Enumerate => enumerate(config),
        ExperimentKind::MsdScan => msd_scan(config, false),
        ExperimentKind::GammaFit => msd_scan(config, true),
        ExperimentKind::BallisticCheck => ballistic_check(config),
        ExperimentKind::CltTest => clt(config),
        ExperimentKind::PressureScan => pressure_scan(config),
        ExperimentKind::OracleSuite => oracle_suite(config),
    }
}

fn polymer(
    config: &ExperimentConfig,
    couplings: &CouplingSpec,
    n: usize,
    beta: f64,
) -> Result<PolymerParams, CliError> {
    PolymerParams::new(n, beta, config.model.drift, couplings.clone()).map_err(lib)
}

fn enumerate(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let couplings = config.couplings()?;
    let v = config.model.direction;
    let fields = config.fields();
    let mut t = Table::new(
        "enumerate",
        &[
            "beta",
            "n",
            "h1",
            "h2",
            "ln_z",
            "ln_z_chain1",
            "ln_z_chain2",
            "msd",
            "msd_over_n",
            "msd_over_n2",
            "mean_projection",
        ],
    );
    let mut out = Outcome::default();
    for &beta in &config.model.beta {
        for &n in &config.model.n {
            let p = polymer(config, &couplings, n, beta)?;
            let dist = enumerate_polymer(&p).map_err(lib)?;
            let (c1, c2) = decoupled_chains(&p).map_err(lib)?;
            let z1 = IsingEnumeration::new(&c1).map_err(lib)?.ln_z();
            let z2 = IsingEnumeration::new(&c2).map_err(lib)?.ln_z();
            let msd = dist.expectation(|w| w.squared_displacement() as f64);
            let proj = dist.expectation(|w| {
                let [x, y] = w.endpoint();
                x as f64 * v[0] + y as f64 * v[1]
            });
            let nf = n as f64;
            t.push(vec![
                beta.into(),
                n.into(),
                fields.h1.into(),
                fields.h2.into(),
                dist.ln_z().into(),
                z1.into(),
                z2.into(),
                msd.into(),
                (msd / nf).into(),
                (msd / (nf * nf)).into(),
                proj.into(),
            ]);
            out.task(format!("beta={beta} n={n}"), TaskStatus::Ok, None);
        }
    }
    out.tables.push(t);
    Ok(out)
}

fn msd_table() -> Table {
    Table::new(
        "msd",
        &[
            "beta",
            "n",
            "msd",
            "msd_se",
            "msd_over_n",
            "msd_over_n_se",
            "msd_over_n2",
            "msd_over_n2_se",
            "n_effective",
            "replica_spread",
            "converged",
        ],
    )
}

fn push_msd_rows(t: &mut Table, beta: f64, pts: &[MsdPoint]) {
    for p in pts {
        t.push(vec![
            beta.into(),
            p.n.into(),
            p.msd.value.into(),
            p.msd.std_error.into(),
            p.msd_over_n.value.into(),
            p.msd_over_n.std_error.into(),
            p.msd_over_n2.value.into(),
            p.msd_over_n2.std_error.into(),
            p.msd.n_effective.into(),
            p.msd.replica_spread.into(),
            p.converged().into(),
        ]);
    }
}

fn fit_table() -> Table {
    Table::new(
        "fit",
        &[
            "beta",
            "gamma_hat",
            "gamma_se",
            "ci_low",
            "ci_high",
            "intercept",
            "r_squared",
            "n_points",
            "regime",
        ],
    )
}

fn push_fit_row(t: &mut Table, beta: f64, fit: &ScalingFit) {
    t.push(vec![
        beta.into(),
        fit.gamma_hat.into(),
        fit.gamma_stderr.into(),
        (fit.gamma_hat - 2.0 * fit.gamma_stderr).into(),
        (fit.gamma_hat + 2.0 * fit.gamma_stderr).into(),
        fit.intercept.into(),
        fit.r_squared.into(),
        fit.n_points.into(),
        fit.regime.as_str().into(),
    ]);
}

pub fn fit_curve(pts: &[MsdPoint]) -> Result<ScalingFit, CliError> {
    let samples: Vec<MsdSample> = pts
        .iter()
        .map(|p| MsdSample {
            n: p.n as f64,
            msd: p.msd.value,
            stderr: p.msd.std_error,
        })
        .collect();
    fit_gamma(&samples).map_err(lib)
}

/// The plan for the `index`-th inverse temperature of a scan.
fn beta_plan(config: &ExperimentConfig, index: usize) -> McmcPlan {
    let plan = config.plan();
    let seed = task_seed(plan.seed, 1 << 32 | index as u64);
    plan.with_seed(seed)
}

fn msd_curves(
    config: &ExperimentConfig,
    out: &mut Outcome,
) -> Result<Vec<(f64, Vec<MsdPoint>)>, CliError> {
    let couplings = config.couplings()?;
    let mut curves = Vec::new();
    for (bi, &beta) in config.model.beta.iter().enumerate() {
        let plan = beta_plan(config, bi);
        let pts = estimate_msd_curve(&couplings, beta, config.model.drift, &config.model.n, &plan)
            .map_err(lib)?;
        for p in &pts {
            let status = converged_status(p.converged());
            let detail = (status == TaskStatus::Unconverged).then(|| {
                format!(
                    "replica spread {} exceeds the pooled error {}",
                    p.msd.replica_spread, p.msd.std_error
                )
            });
            out.task(format!("beta={beta} n={}", p.n), status, detail);
        }
        if config.mcmc.trace {
            trace_tables(config, &couplings, beta, &plan, out)?;
        }
        curves.push((beta, pts));
    }
    Ok(curves)
}

fn trace_tables(
    config: &ExperimentConfig,
    couplings: &CouplingSpec,
    beta: f64,
    plan: &McmcPlan,
    out: &mut Outcome,
) -> Result<(), CliError> {
    for &n in &config.model.n {
        let p = polymer(config, couplings, n, beta)?;
        let (c1, c2) = decoupled_chains(&p).map_err(lib)?;
        for (label, chain) in [("chain1", c1), ("chain2", c2)] {
            let run = run_chain(&chain, plan, &[Observable::Magnetization]).map_err(lib)?;
            for (r, rows) in run.traces.iter().enumerate() {
                let mut t = Table::new(
                    &format!("trace_beta{beta}_n{n}_{label}_r{r}"),
                    &["sweep", "energy", "magnetization"],
                );
                for row in rows {
                    t.push(vec![
                        row.sweep.into(),
                        row.energy.into(),
                        row.magnetization.into(),
                    ]);
                }
                out.tables.push(t);
            }
        }
    }
    Ok(())
}

fn msd_scan(config: &ExperimentConfig, with_fit: bool) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let curves = msd_curves(config, &mut out)?;
    let mut msd = msd_table();
    let mut fits = fit_table();
    for (beta, pts) in &curves {
        push_msd_rows(&mut msd, *beta, pts);
        if with_fit {
            push_fit_row(&mut fits, *beta, &fit_curve(pts)?);
        }
    }
    out.tables.push(msd);
    if with_fit {
        out.tables.push(fits);
        if config.fit.coupling_bound {
            out.tables.push(bound_table(config)?);
        }
    }
    Ok(out)
}

fn bound_table(config: &ExperimentConfig) -> Result<Table, CliError> {
    let alpha = config
        .model
        .alpha
        .ok_or_else(|| CliError::Validation("coupling bound needs alpha".into()))?;
    let mut t = Table::new("bound", &["n", "bound", "bound_over_n"]);
    for &n in &config.model.n {
        let b = coupling_sum_bound(alpha, n).map_err(lib)?;
        t.push(vec![n.into(), b.into(), (b / n as f64).into()]);
    }
    Ok(t)
}

pub fn ballistic_label(fields: FieldPair) -> &'static str {
    if fields.h1 * fields.h2 > 0.0 {
        "h1*h2>0"
    } else {
        OUTSIDE_HYPOTHESES
    }
}

pub fn clt_label(fields: FieldPair) -> &'static str {
    if fields.h1 * fields.h2 != 0.0 {
        "h1*h2!=0"
    } else {
        OUTSIDE_HYPOTHESES
    }
}

/// Verdicts on an `msd/N²` curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallisticVerdict {
    pub positive: bool,
    /// Each ratio is at least the previous one minus two combined errors.
    pub nondecreasing: bool,
    pub final_ratio: f64,
    pub final_ratio_se: f64,
}

pub fn ballistic_verdict(pts: &[MsdPoint]) -> BallisticVerdict {
    let positive = pts.iter().all(|p| p.msd_over_n2.value > 0.0);
    let nondecreasing = pts.windows(2).all(|w| {
        let (a, b) = (w[0].msd_over_n2, w[1].msd_over_n2);
        b.value >= a.value - 2.0 * (a.std_error + b.std_error)
    });
    let last = pts.last().map(|p| p.msd_over_n2);
    BallisticVerdict {
        positive,
        nondecreasing,
        final_ratio: last.map_or(f64::NAN, |e| e.value),
        final_ratio_se: last.map_or(f64::NAN, |e| e.std_error),
    }
}

fn ballistic_check(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let curves = msd_curves(config, &mut out)?;
    let fields = config.fields();
    let mut msd = msd_table();
    let mut fits = fit_table();
    let mut verdicts = Table::new(
        "ballistic",
        &[
            "beta",
            "h1",
            "h2",
            "hypotheses",
            "positive",
            "nondecreasing",
            "final_msd_over_n2",
            "final_msd_over_n2_se",
            "gamma_hat",
            "gamma_se",
            "regime",
            "ballistic",
        ],
    );
    for (beta, pts) in &curves {
        push_msd_rows(&mut msd, *beta, pts);
        let fit = fit_curve(pts)?;
        push_fit_row(&mut fits, *beta, &fit);
        let v = ballistic_verdict(pts);
        verdicts.push(vec![
            (*beta).into(),
            fields.h1.into(),
            fields.h2.into(),
            ballistic_label(fields).into(),
            v.positive.into(),
            v.nondecreasing.into(),
            v.final_ratio.into(),
            v.final_ratio_se.into(),
            fit.gamma_hat.into(),
            fit.gamma_stderr.into(),
            fit.regime.as_str().into(),
            (v.positive && v.nondecreasing && fit.regime == Regime::Ballistic).into(),
        ]);
    }
    out.tables.extend([msd, fits, verdicts]);
    Ok(out)
}

/// Where the CLT target variance came from.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureSource {
    Exact,
    /// Extrapolated from `(N, Ψ''_N(0))` at enumerable sizes.
    Extrapolated(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRun {
    pub n: usize,
    pub beta: f64,
    /// `β⟨S_N, v⟩/√N` per draw, replicas in order.
    pub samples: Vec<Vec<f64>>,
    pub target_variance: f64,
    pub source: CurvatureSource,
    /// `√N Ψ'_N(0)` when `N` is enumerable.
    pub known_mean: Option<f64>,
    pub converged: bool,
    /// `None` when the target variance is not positive.
    pub test: Option<CltResult>,
}

fn enumerable(couplings: &CouplingSpec, n: usize) -> bool {
    couplings.is_nearest_neighbour() || n <= DEFAULT_ENUMERATION_CAP
}

/// Draws from the decoupled sampler and tests `β⟨S_N, v⟩/√N` against the
/// centred normal with the curvature of the pressure as variance.
pub fn clt_run(
    params: &PolymerParams,
    v: [f64; 2],
    plan: &McmcPlan,
    extrapolation_sizes: &[usize],
    step: f64,
) -> Result<CltRun, CliError> {
    let n = params.n_steps();
    let beta = params.beta();
    let couplings = params.couplings();
    let (target_variance, source, known_mean) = if enumerable(couplings, n) {
        let psi = PressureFunctional::new(params, v).map_err(lib)?;
        let var = psi.second_derivative(0.0, step).map_err(lib)?;
        let slope = psi.first_derivative(0.0, step).map_err(lib)?;
        (var, CurvatureSource::Exact, Some((n as f64).sqrt() * slope))
    } else {
        let ex = extrapolate_curvature(
            couplings,
            beta,
            params.drift(),
            v,
            extrapolation_sizes,
            step,
        )
        .map_err(lib)?;
        (
            ex.extrapolated,
            CurvatureSource::Extrapolated(ex.table),
            None,
        )
    };
    let draws = sample_polymer_draws(params, plan).map_err(lib)?;
    let converged = pooled_estimate(&draws, plan.batch_count, |d| d.projection(v)).is_converged();
    let scale = beta / (n as f64).sqrt();
    let samples: Vec<Vec<f64>> = draws
        .iter()
        .map(|r| {
            r.iter()
                .map(|d: &PolymerDraw| scale * d.projection(v))
                .collect()
        })
        .collect();
    let flat: Vec<f64> = samples.iter().flatten().copied().collect();
    let test = if target_variance.is_finite() && target_variance > 0.0 {
        Some(clt_test(&flat, target_variance, known_mean).map_err(lib)?)
    } else {
        None
    };
    Ok(CltRun {
        n,
        beta,
        samples,
        target_variance,
        source,
        known_mean,
        converged,
        test,
    })
}

fn clt(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let couplings = config.couplings()?;
    let v = config.model.direction;
    let fields = config.fields();
    let c = &config.clt;
    let mut out = Outcome::default();
    let mut summary = Table::new(
        "clt",
        &[
            "beta",
            "n",
            "h1",
            "h2",
            "hypotheses",
            "samples",
            "mean_estimated",
            "sample_mean",
            "sample_variance",
            "target_variance",
            "target_source",
            "ks_statistic",
            "p_value",
            "reject",
            "converged",
        ],
    );
    let mut curvature = Table::new("curvature", &["beta", "n", "curvature"]);
    let mut samples = Table::new("clt_samples", &["beta", "n", "replica", "value"]);
    let mut task = 0u64;
    for &beta in &config.model.beta {
        for &n in &config.model.n {
            let p = polymer(config, &couplings, n, beta)?;
            let plan = config.plan().with_seed(task_seed(config.seed, task));
            task += 1;
            let run = clt_run(&p, v, &plan, &c.extrapolation_sizes, c.step)?;
            let flat: Vec<f64> = run.samples.iter().flatten().copied().collect();
            let m = flat.len() as f64;
            let mean = flat.iter().sum::<f64>() / m;
            let var = flat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let source = match &run.source {
                CurvatureSource::Exact => "exact",
                CurvatureSource::Extrapolated(table) => {
                    for &(k, c2) in table {
                        curvature.push(vec![beta.into(), k.to_string().into(), c2.into()]);
                    }
                    curvature.push(vec![beta.into(), "inf".into(), run.target_variance.into()]);
                    "extrapolated"
                }
            };
            let (d, pv) = run
                .test
                .map_or((f64::NAN, f64::NAN), |t| (t.ks_statistic, t.p_value));
            summary.push(vec![
                beta.into(),
                n.into(),
                fields.h1.into(),
                fields.h2.into(),
                clt_label(fields).into(),
                flat.len().into(),
                run.known_mean.is_none().into(),
                mean.into(),
                var.into(),
                run.target_variance.into(),
                source.into(),
                d.into(),
                pv.into(),
                (pv < c.level || pv.is_nan()).into(),
                run.converged.into(),
            ]);
            for (r, xs) in run.samples.iter().enumerate() {
                for &x in xs {
                    samples.push(vec![beta.into(), n.into(), r.into(), x.into()]);
                }
            }
            let detail = match (&run.test, run.converged) {
                (_, false) => Some("replica means disagree".to_string()),
                (None, _) => Some(format!(
                    "target variance {} is not positive; KS test skipped",
                    run.target_variance
                )),
                _ => None,
            };
            out.task(
                format!("beta={beta} n={n}"),
                converged_status(run.converged),
                detail,
            );
        }
    }
    out.tables.push(summary);
    if !curvature.rows.is_empty() {
        out.tables.push(curvature);
    }
    out.tables.push(samples);
    if c.calibration_reps > 0 {
        let size = config.plan().measurements() as usize * config.mcmc.replicas;
        let cal =
            calibrate_clt(c.calibration_reps, size, 1.0, c.level, config.seed).map_err(lib)?;
        let mut t = Table::new(
            "clt_calibration",
            &[
                "repetitions",
                "n_samples",
                "level",
                "rejections",
                "rejection_rate",
            ],
        );
        t.push(vec![
            cal.repetitions.into(),
            size.into(),
            cal.level.into(),
            cal.rejections.into(),
            cal.rejection_rate.into(),
        ]);
        out.tables.push(t);
        out.task("calibration".into(), TaskStatus::Ok, None);
    }
    Ok(out)
}

/// Smallest slope increment along a sorted grid; nonnegative for convex
/// data.
pub fn min_second_difference(t: &[f64], psi: &[f64]) -> f64 {
    (1..t.len().saturating_sub(1))
        .map(|i| {
            let left = (psi[i] - psi[i - 1]) / (t[i] - t[i - 1]);
            let right = (psi[i + 1] - psi[i]) / (t[i + 1] - t[i]);
            right - left
        })
        .fold(f64::INFINITY, f64::min)
}

fn pressure_scan(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let couplings = config.couplings()?;
    let v = config.model.direction;
    let pc = &config.pressure;
    let mut grid = pc.t.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut out = Outcome::default();
    let mut curve = Table::new("pressure", &["beta", "n", "t", "psi", "psi_second"]);
    let mut curv = Table::new(
        "curvature",
        &[
            "beta",
            "n",
            "psi_second_at_zero",
            "min_second_difference",
            "convex",
        ],
    );
    for &beta in &config.model.beta {
        for &n in &config.model.n {
            let p = polymer(config, &couplings, n, beta)?;
            let psi = PressureFunctional::new(&p, v).map_err(lib)?;
            let values = psi.curve(&grid).map_err(lib)?.psi_values;
            for (&t, &value) in grid.iter().zip(&values) {
                let second = psi.second_derivative(t, pc.step).map_err(lib)?;
                curve.push(vec![
                    beta.into(),
                    n.into(),
                    t.into(),
                    value.into(),
                    second.into(),
                ]);
            }
            let min_diff = min_second_difference(&grid, &values);
            curv.push(vec![
                beta.into(),
                n.into(),
                psi.second_derivative(0.0, pc.step).map_err(lib)?.into(),
                min_diff.into(),
                (min_diff >= -1e-9).into(),
            ]);
            out.task(format!("beta={beta} n={n}"), TaskStatus::Ok, None);
        }
    }
    out.tables.extend([curve, curv]);
    Ok(out)
}

struct OracleCheck {
    name: &'static str,
    error: f64,
    tolerance: f64,
}

fn oracle_checks(p: &PolymerParams, v: [f64; 2]) -> Result<Vec<OracleCheck>, CliError> {
    let mut checks = Vec::new();
    let mut push = |name, error, tolerance| {
        checks.push(OracleCheck {
            name,
            error,
            tolerance,
        })
    };

    push(
        "measure-factorization",
        measure_factorization_check(p).map_err(lib)?,
        1e-12,
    );

    let (c1, c2) = decoupled_chains(p).map_err(lib)?;
    let g1 = two_point_matrix(&c1).map_err(lib)?;
    let g2 = two_point_matrix(&c2).map_err(lib)?;
    let msd = msd_from_correlations(&g1, &g2).map_err(lib)?;
    push(
        "msd-from-correlations",
        (msd - exact_msd(p).map_err(lib)?).abs(),
        1e-10,
    );

    let ln_z = enumerate_polymer(p).map_err(lib)?.ln_z();
    let split = IsingEnumeration::new(&c1).map_err(lib)?.ln_z()
        + IsingEnumeration::new(&c2).map_err(lib)?.ln_z();
    push("partition-split", (ln_z - split).abs(), 1e-10);

    if p.couplings().is_summable() {
        let psi = PressureFunctional::new(p, v).map_err(lib)?;
        let err = [-0.3, 0.1, 0.5]
            .iter()
            .map(|&t| {
                Ok((psi.value(t).map_err(lib)?
                    - pressure_by_walk_enumeration(p, v, t).map_err(lib)?)
                .abs())
            })
            .collect::<Result<Vec<f64>, CliError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        push("pressure-two-routes", err, 1e-10);
        let curvature = psi
            .second_derivative(0.0, lrpolymer::analysis::DEFAULT_FD_STEP)
            .map_err(lib)?;
        let var = projection_variance_by_walk_enumeration(p, v).map_err(lib)?;
        push("variance-identity", (curvature - var).abs(), 1e-6);
    }

    let j = match p.couplings().value(1) {
        v if v > 0.0 => v,
        _ => 1.0,
    };
    let nn = NNChainParams::new(p.n_steps(), c1.beta(), j, c1.field()).map_err(lib)?;
    let tm = nn_observables(&nn).map_err(lib)?;
    let nn_chain = IsingParams::new(
        p.n_steps(),
        c1.beta(),
        c1.field(),
        CouplingSpec::nearest_neighbour(j).map_err(lib)?,
    )
    .map_err(lib)?;
    let e = IsingEnumeration::new(&nn_chain).map_err(lib)?;
    let err = tm
        .correlations
        .iter()
        .zip(e.two_point_matrix().iter())
        .map(|(a, b)| (a - b).abs())
        .chain(
            tm.magnetizations
                .iter()
                .zip(e.magnetizations())
                .map(|(a, b)| (a - b).abs()),
        )
        .fold((tm.ln_z - e.ln_z()).abs(), f64::max);
    push("transfer-matrix", err, 1e-10);
    Ok(checks)
}

fn oracle_suite(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let couplings = config.couplings()?;
    let v = config.model.direction;
    let mut out = Outcome::default();
    let mut t = Table::new(
        "oracle",
        &["check", "beta", "n", "error", "tolerance", "pass"],
    );
    for &beta in &config.model.beta {
        for &n in &config.model.n {
            let p = polymer(config, &couplings, n, beta)?;
            let checks = oracle_checks(&p, v)?;
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !(c.error < c.tolerance))
                .map(|c| c.name)
                .collect();
            for c in &checks {
                t.push(vec![
                    c.name.into(),
                    beta.into(),
                    n.into(),
                    c.error.into(),
                    c.tolerance.into(),
                    (c.error < c.tolerance).into(),
                ]);
            }
            let (status, detail) = if failed.is_empty() {
                (TaskStatus::Ok, None)
            } else {
                (
                    TaskStatus::Failed,
                    Some(format!("failed: {}", failed.join(", "))),
                )
            };
            out.task(format!("beta={beta} n={n}"), status, detail);
        }
    }
    out.tables.push(t);
    Ok(out)
}
