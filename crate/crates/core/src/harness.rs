//! Config-driven experiment runner.
//!
//! A JSON [`ExperimentConfig`] names a model, a domain, a target zone count
//! and a task list; [`run_config`] executes the tasks in dependency order
//! (solve, profile, spectrum, morse, oracle, verify), writes `report.json`
//! plus the CSV artifacts into an output directory, and never panics on a
//! task failure: the report is persisted partially with a `failed_at`
//! marker instead. [`sweep`] runs a parameter grid concurrently with
//! order-stable merging, and [`verify_theorems`] re-evaluates the index
//! bounds from stored report numbers without recomputing anything.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constants::{
    B_POINTWISE_FLOOR, DIAG_EIGVEC_TOL, K_MAX, NEG_EIG_TOL, ORACLE_NODES, QUAD_IDENTITY_TOL,
    SCAN_SAMPLES, SINGULAR_CUTOFF_REL, SOLUTION_NODES, SPECTRAL_NODES, TEST_FN_COUNT, THRESHOLD_TOL,
    TIE_TOL, TOL_BC, TOL_IDENTITY, TOL_ODE, TOL_RESIDUAL, TRUNC_SLACK, UNION_TOL, VERIFY_INTERVALS,
};
use crate::domain::Domain;
use crate::error::{CoreError, Result};
use crate::{log_error, log_info};
use crate::model::{
    check_convexity, check_strong_coupling, potentials_along_profile, Hamiltonian, HamiltonianModel,
};
use crate::morse::{full_morse_index, radial_morse_index, verify_theorem_bounds};
use crate::nodal::{extract_nodal_data, verify_profile};
use crate::oracle::{coupled_spectrum, derivative_pair_check, quad_form_identity_gap, test_function_estimates};
use crate::report::{
    load_report, save_pencil_csv, save_plot_data_csv, save_regular_spectrum_csv, save_report,
    save_singular_spectrum_csv, save_sweep_csv, MorseReport, OracleSection, RunReport,
    SolutionSummary, SpectraSection, SpectrumSummary, SweepRow, Verdict, VerifyCheck, VerifySection,
};
use crate::shooting::{find_solution, save_solution_csv, RadialSolution, ShootParams};
use crate::sturm::{eigen_solve, singular_spectrum_with, SturmProblem};

// ─────────────────────────────────────────────────────────────────────────
// Configuration
// ─────────────────────────────────────────────────────────────────────────

/// Solver tolerances, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Adaptive ODE integration tolerance.
    pub tol_ode: f64,
    /// Boundary-condition tolerance, relative to the component amplitudes.
    pub tol_bc: f64,
    /// Cap on the discrete flux defect of an accepted solution.
    pub tol_residual: f64,
    /// Margin deciding angular/sign ties in the index combinatorics.
    pub tie_tol: f64,
    /// Margin for the Hardy-threshold classification of singular eigenvalues.
    pub tol_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_ode: TOL_ODE,
            tol_bc: TOL_BC,
            tol_residual: TOL_RESIDUAL,
            tie_tol: TIE_TOL,
            tol_threshold: THRESHOLD_TOL,
        }
    }
}

/// Grid sizes for the individual pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSizes {
    /// Stored output nodes per solution profile.
    pub solution_nodes: usize,
    /// Node count of the scalar eigensolver grids (before refinement).
    pub spectral_nodes: usize,
    /// Node count of the coupled-pencil oracle grid.
    pub oracle_nodes: usize,
    /// Interval count of the uniform residual-verification grid.
    pub verify_intervals: usize,
    /// Eigenvalues reported per spectrum.
    pub k_max: usize,
}

impl Default for GridSizes {
    fn default() -> Self {
        Self {
            solution_nodes: SOLUTION_NODES,
            spectral_nodes: SPECTRAL_NODES,
            oracle_nodes: ORACLE_NODES,
            verify_intervals: VERIFY_INTERVALS,
            k_max: K_MAX,
        }
    }
}

/// The pipeline stages a run may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Solve,
    Profile,
    Spectrum,
    Morse,
    Oracle,
    Verify,
}

impl Task {
    /// Fixed execution order; dependencies always precede dependents.
    pub const ORDER: [Task; 6] =
        [Task::Solve, Task::Profile, Task::Spectrum, Task::Morse, Task::Oracle, Task::Verify];

    /// Direct dependencies of a task.
    pub fn deps(self) -> &'static [Task] {
        match self {
            Task::Solve => &[],
            Task::Profile | Task::Spectrum => &[Task::Solve],
            Task::Morse => &[Task::Solve, Task::Spectrum],
            Task::Oracle => &[Task::Solve, Task::Profile],
            Task::Verify => {
                &[Task::Solve, Task::Profile, Task::Spectrum, Task::Morse, Task::Oracle]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Profile => "profile",
            Task::Spectrum => "spectrum",
            Task::Morse => "morse",
            Task::Oracle => "oracle",
            Task::Verify => "verify",
        }
    }
}

/// Dependency closure of the requested tasks, in execution order.
pub fn task_closure(tasks: &[Task]) -> Vec<Task> {
    let mut wanted = std::collections::HashSet::new();
    let mut stack: Vec<Task> = tasks.to_vec();
    while let Some(t) = stack.pop() {
        if wanted.insert(t) {
            stack.extend_from_slice(t.deps());
        }
    }
    Task::ORDER.iter().copied().filter(|t| wanted.contains(t)).collect()
}

/// One experiment: model, domain, target zone count, tolerances, grids and
/// the tasks to run. Unknown JSON fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: HamiltonianModel,
    pub domain: Domain,
    /// Target number of nodal zones per component.
    pub m: usize,
    /// Sign of the first nodal zone.
    #[serde(default = "default_first_sign")]
    pub first_sign: i8,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridSizes,
    pub tasks: Vec<Task>,
    /// Output directory; a CLI `--out` flag overrides it.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Dump the raw pencils next to the spectra for external comparison.
    #[serde(default)]
    pub dump_pencils: bool,
}

fn default_first_sign() -> i8 {
    1
}

impl ExperimentConfig {
    /// Check every invariant the schema cannot express; error messages name
    /// the offending field.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.domain.validate()?;
        if self.m == 0 {
            return Err(CoreError::InvalidConfig("m must be at least 1".into()));
        }
        if self.first_sign != 1 && self.first_sign != -1 {
            return Err(CoreError::InvalidConfig(format!(
                "first_sign must be 1 or -1, got {}",
                self.first_sign
            )));
        }
        let t = &self.tolerances;
        for (name, value) in [
            ("tol_ode", t.tol_ode),
            ("tol_bc", t.tol_bc),
            ("tol_residual", t.tol_residual),
            ("tie_tol", t.tie_tol),
            ("tol_threshold", t.tol_threshold),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "tolerance {name} must be positive and finite, got {value}"
                )));
            }
        }
        let g = &self.grid;
        for (name, value, min) in [
            ("solution_nodes", g.solution_nodes, 16),
            ("spectral_nodes", g.spectral_nodes, 33),
            ("oracle_nodes", g.oracle_nodes, 33),
            ("verify_intervals", g.verify_intervals, 16),
            ("k_max", g.k_max, 1),
        ] {
            if value < min {
                return Err(CoreError::InvalidConfig(format!(
                    "grid size {name} must be at least {min}, got {value}"
                )));
            }
        }
        if self.tasks.is_empty() {
            return Err(CoreError::InvalidConfig("tasks must be nonempty".into()));
        }
        Ok(())
    }

    fn shoot_params(&self) -> ShootParams {
        ShootParams {
            tol_ode: self.tolerances.tol_ode,
            tol_bc: self.tolerances.tol_bc,
            tol_residual: self.tolerances.tol_residual,
            nodes: self.grid.solution_nodes,
            verify_intervals: self.grid.verify_intervals,
        }
    }
}

/// Parse and validate a config file. Schema violations (including unknown
/// or missing fields) surface as [`CoreError::InvalidConfig`] naming the
/// field.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Exit-code class of an error: `"config"`, `"solver"` or `"inconclusive"`.
pub fn error_kind(err: &CoreError) -> &'static str {
    match err {
        CoreError::InvalidModel(_)
        | CoreError::InvalidDomain(_)
        | CoreError::InvalidConfig(_)
        | CoreError::Artifact(_) => "config",
        CoreError::Ambiguous(_) => "inconclusive",
        _ => "solver",
    }
}

/// CLI exit code for an error class.
pub fn error_exit_code(err: &CoreError) -> i32 {
    match error_kind(err) {
        "config" => 2,
        "inconclusive" => 4,
        _ => 3,
    }
}

// ─────────────────────────────────────────────────────────────────────────
// Potentials along a solution
// ─────────────────────────────────────────────────────────────────────────

/// The a-potential `-(H_uu + H_vv)/2 - H_uv` at `(u(r), v(r))`.
pub fn potential_a(sol: &RadialSolution, r: f64) -> f64 {
    let (u, v, _, _) = sol.profile.sample(r);
    let h = sol.model.hessian(u, v);
    -0.5 * (h.huu + h.hvv) - h.huv
}

/// The b-potential `(H_uu + H_vv)/2 - H_uv` at `(u(r), v(r))`.
pub fn potential_b(sol: &RadialSolution, r: f64) -> f64 {
    let (u, v, _, _) = sol.profile.sample(r);
    let h = sol.model.hessian(u, v);
    0.5 * (h.huu + h.hvv) - h.huv
}

// ─────────────────────────────────────────────────────────────────────────
// Single-run pipeline
// ─────────────────────────────────────────────────────────────────────────

#[derive(Default)]
struct RunContext {
    solution: Option<RadialSolution>,
}

/// Execute the dependency closure of `config.tasks`, writing `report.json`
/// and the CSV artifacts into `out_dir`.
///
/// A task hard-failure does not return `Err`: the persisted report carries
/// `status = "partial"`, the failed task name and the error class, and the
/// partial report is returned. `Err` is reserved for config validation and
/// filesystem problems.
pub fn run_config(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let plan = task_closure(&config.tasks);
    let mut report = RunReport::new(config.clone());
    let mut ctx = RunContext::default();
    for &task in &plan {
        let started = Instant::now();
        let outcome = run_task(task, config, out_dir, &mut report, &mut ctx);
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        report.timings_ms.insert(task.name().to_string(), elapsed);
        log_info!("task {} finished in {elapsed:.1} ms", task.name());
        if let Err(err) = outcome {
            log_error!("task {} failed: {err}", task.name());
            report.status = "partial".to_string();
            report.failed_at = Some(task.name().to_string());
            report.failed_kind = Some(error_kind(&err).to_string());
            report.failed_message = Some(err.to_string());
            break;
        }
    }
    save_report(&report, &out_dir.join("report.json"))?;
    Ok(report)
}

fn run_task(
    task: Task,
    config: &ExperimentConfig,
    out_dir: &Path,
    report: &mut RunReport,
    ctx: &mut RunContext,
) -> Result<()> {
    match task {
        Task::Solve => {
            let sol = find_solution(
                &config.model,
                &config.domain,
                config.m,
                config.first_sign,
                &config.shoot_params(),
            )?;
            save_solution_csv(&sol, &out_dir.join("solution.csv"))?;
            report.artifacts.push("solution.csv".to_string());
            report.solution = Some(SolutionSummary::from_solution(&sol));
            ctx.solution = Some(sol);
        }
        Task::Profile => {
            let sol = ctx.solution.as_ref().expect("solve precedes profile");
            let data = extract_nodal_data(sol)?;
            report.profile = Some(verify_profile(&data, config.m, config.first_sign));
        }
        Task::Spectrum => {
            let sol = ctx.solution.as_ref().expect("solve precedes spectrum");
            let pa = |r: f64| potential_a(sol, r);
            let pb = |r: f64| potential_b(sol, r);
            let prob_a = SturmProblem::regular(&config.domain, &pa);
            let prob_b = SturmProblem::regular(&config.domain, &pb);
            let res_a = eigen_solve(&prob_a, config.grid.k_max, config.grid.spectral_nodes)?;
            let res_b = eigen_solve(&prob_b, config.grid.k_max, config.grid.spectral_nodes)?;
            let a = SpectrumSummary::from_result(&res_a);
            let b = SpectrumSummary::from_result(&res_b);
            save_regular_spectrum_csv(&a, &out_dir.join("spectrum_a.csv"))?;
            report.artifacts.push("spectrum_a.csv".to_string());
            save_regular_spectrum_csv(&b, &out_dir.join("spectrum_b.csv"))?;
            report.artifacts.push("spectrum_b.csv".to_string());

            // Plot data on the fine eigen grid; all pairs share it.
            let grid = res_a.pairs.first().map(|p| p.grid.clone()).unwrap_or_default();
            let mut u = Vec::with_capacity(grid.len());
            let mut v = Vec::with_capacity(grid.len());
            for &r in &grid {
                let (ur, vr, _, _) = sol.profile.sample(r);
                u.push(ur);
                v.push(vr);
            }
            let pots = potentials_along_profile(&sol.model, &grid, &u, &v);
            let eigenfunctions: Vec<Vec<f64>> =
                res_a.pairs.iter().map(|p| p.vector.clone()).collect();
            save_plot_data_csv(
                &grid,
                &u,
                &v,
                &pots.a,
                &pots.b,
                &eigenfunctions,
                &out_dir.join("plot_data.csv"),
            )?;
            report.artifacts.push("plot_data.csv".to_string());

            if config.dump_pencils {
                for (name, prob) in [("pencil_a.csv", &prob_a), ("pencil_b.csv", &prob_b)] {
                    let pencil = prob.assemble(&prob.nodes(config.grid.spectral_nodes));
                    save_pencil_csv(&pencil, &out_dir.join(name))?;
                    report.artifacts.push(name.to_string());
                }
                let cut = SINGULAR_CUTOFF_REL * config.domain.r_out();
                for (name, pot) in [
                    ("pencil_singular_a.csv", &pa as &dyn Fn(f64) -> f64),
                    ("pencil_singular_b.csv", &pb as &dyn Fn(f64) -> f64),
                ] {
                    let prob = SturmProblem::singular(&config.domain, cut, pot);
                    let pencil = prob.assemble(&prob.nodes(config.grid.spectral_nodes));
                    save_pencil_csv(&pencil, &out_dir.join(name))?;
                    report.artifacts.push(name.to_string());
                }
            }

            let b_pointwise_min = pots.b.iter().copied().fold(f64::INFINITY, f64::min);
            report.spectra =
                Some(SpectraSection { a, b, b_pointwise_min, k_max: config.grid.k_max });
        }
        Task::Morse => {
            let sol = ctx.solution.as_ref().expect("solve precedes morse");
            let pa = |r: f64| potential_a(sol, r);
            let m_lin_rad = radial_morse_index(&config.domain, &pa, config.grid.spectral_nodes)?;
            let singular = singular_spectrum_with(
                &config.domain,
                &pa,
                config.grid.k_max,
                config.grid.spectral_nodes,
                config.tolerances.tol_threshold,
            )?;
            save_singular_spectrum_csv(
                &singular,
                config.tolerances.tol_threshold,
                &out_dir.join("spectrum_singular_a.csv"),
            )?;
            report.artifacts.push("spectrum_singular_a.csv".to_string());
            if singular.ambiguous {
                return Err(CoreError::Ambiguous(
                    "singular spectrum carries a threshold-ambiguous eigenvalue or an \
                     inconsistent cutoff ordering"
                        .into(),
                ));
            }
            let tie = config.tolerances.tie_tol;
            if singular.below_threshold.iter().any(|&v| v.abs() <= tie) {
                return Err(CoreError::Ambiguous(format!(
                    "a singular eigenvalue lies within {tie:e} of zero; its angular \
                     contribution cannot be called"
                )));
            }
            // Nonnegative eigenvalues contribute no angular terms; dropping
            // them equals summing their empty inner sums.
            let lambda_hats: Vec<f64> =
                singular.below_threshold.iter().copied().filter(|&v| v < -tie).collect();
            let indices = full_morse_index(&lambda_hats, config.domain.dim, m_lin_rad)?;
            let flags = verify_theorem_bounds(
                config.m,
                config.domain.dim,
                m_lin_rad,
                indices.m_lin,
                &lambda_hats,
            );
            let (u_max, v_max) = sol.value_box();
            let convexity = check_convexity(&sol.model, u_max, v_max, SCAN_SAMPLES);
            let coupling = check_strong_coupling(&sol.model, u_max, v_max, SCAN_SAMPLES);
            report.morse = Some(MorseReport {
                m: config.m,
                m_lin_rad,
                singular,
                lambda_hats,
                indices,
                flags,
                convexity,
                coupling,
            });
        }
        Task::Oracle => {
            let sol = ctx.solution.as_ref().expect("solve precedes oracle");
            let reg = coupled_spectrum(sol, false, config.grid.k_max, config.grid.oracle_nodes)?;
            let sing = coupled_spectrum(sol, true, config.grid.k_max, config.grid.oracle_nodes)?;
            let mut diag_max = 0.0f64;
            for (value, (phi, psi)) in reg.values.iter().zip(&reg.vectors) {
                if *value >= -NEG_EIG_TOL {
                    continue;
                }
                let norm = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>().sqrt();
                let diff: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
                diag_max = diag_max.max(norm(&diff) / norm(phi));
            }
            report.oracle = Some(OracleSection {
                union_gap_regular: reg.union_gap,
                union_gap_singular: sing.union_gap,
                negative_count: reg.negative_count,
                eigenvector_diag_max: diag_max,
                quad_form_identity_gap: quad_form_identity_gap(sol, TEST_FN_COUNT),
                pair_residual: derivative_pair_check(sol)?,
                truncations: test_function_estimates(sol)?,
                annulus_flagged: !config.domain.is_ball(),
            });
        }
        Task::Verify => {
            report.verify = Some(build_verify(report));
        }
    }
    Ok(())
}

/// Assemble the named verification checks from the sections computed this
/// run. Grid-instability of a negative count makes the verdict inconclusive
/// rather than pass/fail.
fn build_verify(report: &RunReport) -> VerifySection {
    let profile = report.profile.as_ref().expect("profile precedes verify");
    let spectra = report.spectra.as_ref().expect("spectrum precedes verify");
    let morse = report.morse.as_ref().expect("morse precedes verify");
    let oracle = report.oracle.as_ref().expect("oracle precedes verify");
    let mut checks = Vec::new();

    let worst_zone = profile
        .checks
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    checks.push(VerifyCheck {
        name: "profile_all_pass".into(),
        pass: profile.all_pass,
        margin: worst_zone,
        detail: format!("{} zone checks, worst margin {worst_zone:.3e}", profile.checks.len()),
    });

    let convex = morse.convexity.convex;
    checks.push(VerifyCheck {
        name: "b_pointwise_nonnegative".into(),
        pass: !convex || spectra.b_pointwise_min >= B_POINTWISE_FLOOR,
        margin: spectra.b_pointwise_min - B_POINTWISE_FLOOR,
        detail: if convex {
            format!("min b = {:.3e} on the spectral grid", spectra.b_pointwise_min)
        } else {
            "void: model not convex on the attained box".into()
        },
    });
    let b_low = spectra.b.values.first().copied().unwrap_or(f64::INFINITY);
    checks.push(VerifyCheck {
        name: "b_spectrum_nonnegative".into(),
        pass: !convex || spectra.b.negative_count == 0,
        margin: b_low,
        detail: if convex {
            format!("{} negative b-eigenvalues, lowest {b_low:.6e}", spectra.b.negative_count)
        } else {
            "void: model not convex on the attained box".into()
        },
    });

    let diff = spectra.a.negative_count as i64 - morse.lambda_hats.len() as i64;
    checks.push(VerifyCheck {
        name: "count_agreement".into(),
        pass: diff == 0,
        margin: -(diff.abs() as f64),
        detail: format!(
            "{} negative regular vs {} negative singular a-eigenvalues",
            spectra.a.negative_count,
            morse.lambda_hats.len()
        ),
    });

    checks.push(VerifyCheck {
        name: "uno".into(),
        pass: morse.flags.uno,
        margin: morse.flags.margin_uno as f64,
        detail: format!("m_lin_rad = {} vs m = {}", morse.m_lin_rad, morse.m),
    });
    checks.push(VerifyCheck {
        name: "due".into(),
        pass: morse.flags.due,
        margin: morse.flags.margin_due as f64,
        detail: format!("m_lin = {} vs m_lin_rad + (m-1)N", morse.indices.m_lin),
    });
    if let (Some(tre), Some(margin)) = (morse.flags.tre, morse.flags.margin_tre) {
        checks.push(VerifyCheck {
            name: "tre".into(),
            pass: tre,
            margin,
            detail: format!(
                "lambda_hat_1 = {:.6e} vs -(N-1)",
                morse.lambda_hats.first().copied().unwrap_or(f64::NAN)
            ),
        });
    }

    for (name, gap, tol) in [
        ("oracle_union_regular", oracle.union_gap_regular, UNION_TOL),
        ("oracle_union_singular", oracle.union_gap_singular, UNION_TOL),
        ("oracle_diag_eigenvectors", oracle.eigenvector_diag_max, DIAG_EIGVEC_TOL),
        ("quad_form_identities", oracle.quad_form_identity_gap, QUAD_IDENTITY_TOL),
        ("derivative_pair_residual", oracle.pair_residual.residual, TOL_IDENTITY),
    ] {
        checks.push(VerifyCheck {
            name: name.into(),
            pass: gap <= tol,
            margin: tol - gap,
            detail: format!("{gap:.3e} against {tol:.0e}"),
        });
    }

    let trunc_margin = oracle
        .truncations
        .nodal
        .iter()
        .map(|t| -t.q_lin)
        .chain(oracle.truncations.derivative.iter().map(|t| TRUNC_SLACK - t.stable_sum))
        .fold(f64::INFINITY, f64::min);
    checks.push(VerifyCheck {
        name: "truncation_estimates".into(),
        pass: oracle.truncations.all_pass,
        margin: trunc_margin,
        detail: format!(
            "{} nodal and {} derivative truncations",
            oracle.truncations.nodal.len(),
            oracle.truncations.derivative.len()
        ),
    });

    let ambiguous =
        !spectra.a.stable_negative_count || !spectra.b.stable_negative_count;
    VerifySection::from_checks(checks, ambiguous)
}

// ─────────────────────────────────────────────────────────────────────────
// Sweep
// ─────────────────────────────────────────────────────────────────────────

/// A parameter grid over Lane-Emden exponents, dimensions and zone counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Zip `p` with `q` (equal lengths) instead of crossing them.
    #[serde(default)]
    pub pair_pq: bool,
    pub dims: Vec<u32>,
    pub m: Vec<usize>,
    /// Outer radius of every cell's domain.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Inner radius; cells run on an annulus when set, a ball otherwise.
    #[serde(default)]
    pub inner: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridSizes,
}

fn default_radius() -> f64 {
    1.0
}

impl SweepConfig {
    /// The default desk-scale grid: `p = q` in {2, 3}, `N` in {2, 3},
    /// `m` in {1, 2} on the unit ball.
    pub fn default_grid() -> Self {
        Self {
            p: vec![2.0, 3.0],
            q: vec![2.0, 3.0],
            pair_pq: true,
            dims: vec![2, 3],
            m: vec![1, 2],
            radius: 1.0,
            inner: None,
            tolerances: Tolerances::default(),
            grid: GridSizes::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pair_pq && self.p.len() != self.q.len() {
            return Err(CoreError::InvalidConfig(format!(
                "pair_pq requires p and q of equal length, got {} and {}",
                self.p.len(),
                self.q.len()
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(CoreError::InvalidConfig(format!("radius must be positive, got {}", self.radius)));
        }
        if let Some(inner) = self.inner {
            if !(inner.is_finite() && inner > 0.0 && inner < self.radius) {
                return Err(CoreError::InvalidConfig(format!(
                    "inner must lie in (0, radius), got {inner}"
                )));
            }
        }
        Ok(())
    }

    /// The `(p, q, N, m)` cells in input order.
    pub fn cells(&self) -> Vec<(f64, f64, u32, usize)> {
        let pq: Vec<(f64, f64)> = if self.pair_pq {
            self.p.iter().copied().zip(self.q.iter().copied()).collect()
        } else {
            self.p
                .iter()
                .flat_map(|&p| self.q.iter().map(move |&q| (p, q)))
                .collect()
        };
        let mut out = Vec::with_capacity(pq.len() * self.dims.len() * self.m.len());
        for &(p, q) in &pq {
            for &dim in &self.dims {
                for &m in &self.m {
                    out.push((p, q, dim, m));
                }
            }
        }
        out
    }
}

/// Parse and validate a sweep config file.
pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let config: SweepConfig =
        serde_json::from_str(&text).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Run every cell of the grid (concurrently when `jobs != 1`), each in its
/// own `cell_XXX` directory, and write `sweep.csv`. Cell failures are
/// recorded in their row's status and never abort the sweep; row order is
/// the input order regardless of scheduling.
pub fn sweep(config: &SweepConfig, out_dir: &Path, jobs: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let cells = config.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CoreError::InvalidConfig(format!("jobs: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(p, q, dim, m))| run_sweep_cell(config, out_dir, i, p, q, dim, m))
            .collect()
    });
    save_sweep_csv(&rows, config.grid.k_max, &out_dir.join("sweep.csv"))?;
    Ok(rows)
}

fn run_sweep_cell(
    config: &SweepConfig,
    out_dir: &Path,
    index: usize,
    p: f64,
    q: f64,
    dim: u32,
    m: usize,
) -> SweepRow {
    let mut row = SweepRow {
        p,
        q,
        dim,
        m,
        m_lin_rad: None,
        m_lin: None,
        lambda_hats: Vec::new(),
        uno: None,
        due: None,
        tre: None,
        margin_uno: None,
        margin_due: None,
        margin_tre: None,
        status: "ok".to_string(),
    };
    let outcome = (|| -> Result<RunReport> {
        let model = HamiltonianModel::lane_emden(p, q)?;
        let domain = match config.inner {
            Some(inner) => Domain::annulus(inner, config.radius, dim)?,
            None => Domain::ball(config.radius, dim)?,
        };
        let cell = ExperimentConfig {
            model,
            domain,
            m,
            first_sign: 1,
            tolerances: config.tolerances,
            grid: config.grid,
            tasks: vec![Task::Spectrum, Task::Morse],
            out_dir: None,
            dump_pencils: false,
        };
        run_config(&cell, &out_dir.join(format!("cell_{index:03}")))
    })();
    match outcome {
        Ok(report) => {
            if let Some(kind) = &report.failed_kind {
                row.status = format!(
                    "failed_{kind}: {}",
                    report.failed_message.as_deref().unwrap_or("unknown")
                );
            }
            if let Some(morse) = &report.morse {
                row.m_lin_rad = Some(morse.m_lin_rad);
                row.m_lin = Some(morse.indices.m_lin);
                row.lambda_hats = morse.lambda_hats.clone();
                row.uno = Some(morse.flags.uno);
                row.due = Some(morse.flags.due);
                row.tre = morse.flags.tre;
                row.margin_uno = Some(morse.flags.margin_uno);
                row.margin_due = Some(morse.flags.margin_due);
                row.margin_tre = morse.flags.margin_tre;
            }
        }
        Err(err) => {
            row.status = format!("failed_{}: {err}", error_kind(&err));
        }
    }
    row
}

// ─────────────────────────────────────────────────────────────────────────
// Theorem verification over stored reports
// ─────────────────────────────────────────────────────────────────────────

/// Verification outcome for one stored report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportVerdict {
    pub path: String,
    pub checks: Vec<VerifyCheck>,
    pub verdict: Verdict,
}

/// Consolidated verification table over several reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremTable {
    pub rows: Vec<ReportVerdict>,
    pub verdict: Verdict,
}

/// Re-evaluate the index bounds of stored reports from their persisted
/// numbers alone; nothing is recomputed from models or grids. Reports with
/// ambiguity flags, or without the sections the bounds need, come back
/// inconclusive.
pub fn verify_theorems(paths: &[PathBuf]) -> Result<TheoremTable> {
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let report = load_report(path)?;
        rows.push(report_verdict(&path.display().to_string(), &report));
    }
    let verdict = if rows.iter().any(|r| r.verdict == Verdict::Failed) {
        Verdict::Failed
    } else if rows.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Verified
    };
    Ok(TheoremTable { rows, verdict })
}

fn report_verdict(path: &str, report: &RunReport) -> ReportVerdict {
    let mut checks = Vec::new();
    let mut ambiguous = false;

    if let Some(failed_at) = &report.failed_at {
        let kind = report.failed_kind.as_deref().unwrap_or("solver");
        let verdict = if kind == "inconclusive" { Verdict::Inconclusive } else { Verdict::Failed };
        checks.push(VerifyCheck {
            name: "run_completed".into(),
            pass: false,
            margin: f64::NEG_INFINITY,
            detail: format!(
                "run stopped at task {failed_at}: {}",
                report.failed_message.as_deref().unwrap_or("unknown")
            ),
        });
        return ReportVerdict { path: path.to_string(), checks, verdict };
    }

    let Some(morse) = &report.morse else {
        checks.push(VerifyCheck {
            name: "morse_section_present".into(),
            pass: false,
            margin: f64::NEG_INFINITY,
            detail: "report has no morse section; bounds cannot be re-evaluated".into(),
        });
        return ReportVerdict { path: path.to_string(), checks, verdict: Verdict::Inconclusive };
    };

    let tie = report.config.tolerances.tie_tol;
    if morse.singular.ambiguous || morse.lambda_hats.iter().any(|&v| v.abs() <= tie) {
        ambiguous = true;
    }
    let dim = report.config.domain.dim;
    let flags =
        verify_theorem_bounds(morse.m, dim, morse.m_lin_rad, morse.indices.m_lin, &morse.lambda_hats);
    checks.push(VerifyCheck {
        name: "uno".into(),
        pass: flags.uno,
        margin: flags.margin_uno as f64,
        detail: format!("m_lin_rad = {} vs m = {}", morse.m_lin_rad, morse.m),
    });
    checks.push(VerifyCheck {
        name: "due".into(),
        pass: flags.due,
        margin: flags.margin_due as f64,
        detail: format!(
            "m_lin = {} vs m_lin_rad + (m-1)N = {}",
            morse.indices.m_lin,
            morse.m_lin_rad as i64 + (morse.m as i64 - 1) * i64::from(dim)
        ),
    });
    if let (Some(tre), Some(margin)) = (flags.tre, flags.margin_tre) {
        checks.push(VerifyCheck {
            name: "tre".into(),
            pass: tre,
            margin,
            detail: format!(
                "lambda_hat_1 = {:.6e} vs -(N-1) = {}",
                morse.lambda_hats.first().copied().unwrap_or(f64::NAN),
                -(i64::from(dim) - 1)
            ),
        });
    }
    if let Some(spectra) = &report.spectra {
        let diff = spectra.a.negative_count as i64 - morse.lambda_hats.len() as i64;
        checks.push(VerifyCheck {
            name: "count_agreement".into(),
            pass: diff == 0,
            margin: -(diff.abs() as f64),
            detail: format!(
                "{} negative regular vs {} negative singular a-eigenvalues",
                spectra.a.negative_count,
                morse.lambda_hats.len()
            ),
        });
        if !spectra.a.stable_negative_count || !spectra.b.stable_negative_count {
            ambiguous = true;
        }
    }
    if let Some(verify) = &report.verify {
        checks.push(VerifyCheck {
            name: "stored_verify_verdict".into(),
            pass: verify.verdict == Verdict::Verified,
            margin: if verify.verdict == Verdict::Verified { 0.0 } else { f64::NEG_INFINITY },
            detail: format!("stored verdict: {:?}", verify.verdict),
        });
        if verify.verdict == Verdict::Inconclusive {
            ambiguous = true;
        }
    }

    let section = VerifySection::from_checks(checks, ambiguous);
    ReportVerdict { path: path.to_string(), checks: section.checks, verdict: section.verdict }
}

/// Fixed-width human-readable rendering of a verification table.
pub fn render_table(table: &TheoremTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<40} {:<26} {:<6} {:>12}\n",
        "report", "check", "pass", "margin"
    ));
    for row in &table.rows {
        for check in &row.checks {
            out.push_str(&format!(
                "{:<40} {:<26} {:<6} {:>12.4e}    {}\n",
                row.path,
                check.name,
                if check.pass { "yes" } else { "NO" },
                check.margin,
                check.detail
            ));
        }
        out.push_str(&format!("{:<40} verdict: {:?}\n", row.path, row.verdict));
    }
    out.push_str(&format!("overall: {:?}\n", table.verdict));
    out
}
