//! Serializable result types for experiment runs, plus the CSV emitters.
//!
//! A run produces a single `report.json` (the [`RunReport`] tree) and a set
//! of CSV artifacts: the solution profile, one spectrum file per scalar
//! problem, a plot-data table, the sweep summary, and (behind a debug flag)
//! raw pencil dumps. Everything here is plain data; the orchestration lives
//! in [`crate::harness`].

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::NEG_EIG_TOL;
use crate::error::{CoreError, Result};
use crate::harness::ExperimentConfig;
use crate::model::{ConvexityReport, CouplingReport};
use crate::morse::{MorseIndices, TheoremFlags};
use crate::nodal::ProfileReport;
use crate::oracle::{PairResidual, TruncationChecks};
use crate::shooting::RadialSolution;
use crate::sturm::{Pencil, SingularSpectrum, SpectralResult};

/// Report schema version. The verifier refuses to read reports whose major
/// component differs from its own.
pub const SCHEMA_VERSION: &str = "1.0.0";

/// Major component of a `major.minor.patch` version string.
pub fn schema_major(version: &str) -> Option<u64> {
    version.split('.').next()?.parse().ok()
}

/// Check that a stored report's schema is readable by this build.
pub fn check_schema(version: &str) -> Result<()> {
    let ours = schema_major(SCHEMA_VERSION).expect("own version parses");
    match schema_major(version) {
        Some(major) if major == ours => Ok(()),
        Some(major) => Err(CoreError::Artifact(format!(
            "schema major mismatch: report has {major}, reader supports {ours}"
        ))),
        None => Err(CoreError::Artifact(format!("unparseable schema_version `{version}`"))),
    }
}

/// Scalar summary of a found solution; the full profile lives in
/// `solution.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub m: usize,
    pub first_sign: i8,
    pub alpha: f64,
    pub beta: f64,
    pub residual_norm: f64,
    pub bc_defect: f64,
    pub amp_u: f64,
    pub amp_v: f64,
    pub profile_nodes: usize,
}

impl SolutionSummary {
    pub fn from_solution(sol: &RadialSolution) -> Self {
        let (amp_u, amp_v) = sol.profile.amplitudes();
        Self {
            m: sol.m,
            first_sign: sol.first_sign,
            alpha: sol.alpha,
            beta: sol.beta,
            residual_norm: sol.residual_norm,
            bc_defect: sol.bc_defect,
            amp_u,
            amp_v,
            profile_nodes: sol.profile.len(),
        }
    }
}

/// Eigenvalues of one scalar regular problem, without the vectors (those go
/// to the spectrum CSV and plot data).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub negative_count: usize,
    /// Negative count agreed between the two nested grids.
    pub stable_negative_count: bool,
    pub nodes: usize,
}

impl SpectrumSummary {
    pub fn from_result(res: &SpectralResult) -> Self {
        Self {
            values: res.pairs.iter().map(|p| p.value).collect(),
            errors: res.pairs.iter().map(|p| p.error).collect(),
            negative_count: res.negative_count,
            stable_negative_count: res.stable_negative_count,
            nodes: res.nodes,
        }
    }
}

/// Regular a/b spectra along one solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectraSection {
    pub a: SpectrumSummary,
    pub b: SpectrumSummary,
    /// Pointwise minimum of the b-potential on the spectral grid; convex
    /// models must keep this nonnegative up to roundoff.
    pub b_pointwise_min: f64,
    pub k_max: usize,
}

/// Radial and full Morse-index bounds for one solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseReport {
    pub m: usize,
    pub m_lin_rad: usize,
    /// Singular a-spectrum with threshold flags.
    pub singular: SingularSpectrum,
    /// Strictly negative singular eigenvalues used in the decomposition.
    pub lambda_hats: Vec<f64>,
    /// Angular decomposition: cutoffs, contribution table, m_lin.
    pub indices: MorseIndices,
    pub flags: TheoremFlags,
    pub convexity: ConvexityReport,
    pub coupling: CouplingReport,
}

/// Independent cross-checks embedded under `"oracle"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSection {
    /// Max |coupled - merged scalar| over the regular spectrum union check.
    pub union_gap_regular: f64,
    /// Same for the singular-weight pencils.
    pub union_gap_singular: f64,
    /// Negative coupled eigenvalues found on the regular pencil.
    pub negative_count: usize,
    /// Max over negative coupled eigenvectors of |phi - psi| / |phi|.
    pub eigenvector_diag_max: f64,
    /// Max relative defect of the two quadratic-form identities over the
    /// deterministic test-function family.
    pub quad_form_identity_gap: f64,
    pub pair_residual: PairResidual,
    pub truncations: TruncationChecks,
    /// The derivative-pair identity is stated on balls; annulus runs apply
    /// the same computation and carry this flag.
    pub annulus_flagged: bool,
}

/// One named verification check with its numeric margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    /// Signed slack; nonnegative on pass, the violation size on failure.
    pub margin: f64,
    pub detail: String,
}

/// Overall verdict of a verification pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Failed,
    Inconclusive,
}

impl Verdict {
    /// CLI exit code for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Failed => 1,
            Verdict::Inconclusive => 4,
        }
    }
}

/// Named checks plus the combined verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySection {
    pub checks: Vec<VerifyCheck>,
    pub verdict: Verdict,
}

impl VerifySection {
    pub fn from_checks(checks: Vec<VerifyCheck>, ambiguous: bool) -> Self {
        let verdict = if ambiguous {
            Verdict::Inconclusive
        } else if checks.iter().all(|c| c.pass) {
            Verdict::Verified
        } else {
            Verdict::Failed
        };
        Self { checks, verdict }
    }
}

/// The persisted run report. Field order is the serialization order;
/// identical configs reproduce this byte for byte apart from `timings_ms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub config: ExperimentConfig,
    /// `"complete"` or `"partial"` (some task hard-failed).
    pub status: String,
    /// Name of the task that hard-failed, when status is partial.
    pub failed_at: Option<String>,
    /// Error class of the failed task: `"config"`, `"solver"`, or
    /// `"inconclusive"`; drives the CLI exit code.
    pub failed_kind: Option<String>,
    pub failed_message: Option<String>,
    pub solution: Option<SolutionSummary>,
    pub profile: Option<ProfileReport>,
    pub spectra: Option<SpectraSection>,
    pub morse: Option<MorseReport>,
    pub oracle: Option<OracleSection>,
    pub verify: Option<VerifySection>,
    pub timings_ms: BTreeMap<String, f64>,
    /// File names written next to the report, relative to its directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            status: "complete".to_string(),
            failed_at: None,
            failed_kind: None,
            failed_message: None,
            solution: None,
            profile: None,
            spectra: None,
            morse: None,
            oracle: None,
            verify: None,
            timings_ms: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }
}

/// Write a report as pretty JSON.
pub fn save_report(report: &RunReport, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Read a report back, refusing schema-major mismatches.
pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)?;
    // Peek at the version before deserializing the full tree so a future
    // major bump fails with the schema message, not a field error.
    #[derive(Deserialize)]
    struct VersionOnly {
        schema_version: String,
    }
    let v: VersionOnly = serde_json::from_str(&text)?;
    check_schema(&v.schema_version)?;
    Ok(serde_json::from_str(&text)?)
}

// ─────────────────────────────────────────────────────────────────────────
// CSV emitters
// ─────────────────────────────────────────────────────────────────────────

/// Sign classification of a regular eigenvalue; near-zero values are kernel
/// candidates and must not silently change an index.
pub fn regular_flag(value: f64) -> &'static str {
    if value < -NEG_EIG_TOL {
        "negative"
    } else if value <= NEG_EIG_TOL {
        "kernel_candidate"
    } else {
        "nonnegative"
    }
}

/// Threshold classification of a singular eigenvalue. Membership below the
/// threshold is taken from the certified prefix, never from the extrapolated
/// value alone; an uncertified value at or under the threshold band is a tie.
pub fn singular_flag(certified: bool, value: f64, hardy: f64, threshold_tol: f64) -> &'static str {
    if certified {
        "below_threshold"
    } else if value <= hardy + threshold_tol {
        "threshold_ambiguous"
    } else {
        "above_threshold"
    }
}

/// Write a regular spectrum as `k,eigenvalue,error_estimate,flag`.
pub fn save_regular_spectrum_csv(summary: &SpectrumSummary, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "k,eigenvalue,error_estimate,flag")?;
    for (k, (&v, &e)) in summary.values.iter().zip(&summary.errors).enumerate() {
        writeln!(f, "{},{:.16e},{:.16e},{}", k + 1, v, e, regular_flag(v))?;
    }
    Ok(())
}

/// Write a singular spectrum as `k,eigenvalue,error_estimate,flag`.
pub fn save_singular_spectrum_csv(
    spec: &SingularSpectrum,
    threshold_tol: f64,
    path: &Path,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "k,eigenvalue,error_estimate,flag")?;
    for (k, (&v, &e)) in spec.values.iter().zip(&spec.errors).enumerate() {
        let certified = k < spec.below_threshold.len();
        let flag = singular_flag(certified, v, spec.hardy_threshold, threshold_tol);
        writeln!(f, "{},{:.16e},{:.16e},{}", k + 1, v, e, flag)?;
    }
    Ok(())
}

/// Write the plot-data table: radius, components, both potentials, and the
/// a-problem eigenfunctions, all on the spectral fine grid.
pub fn save_plot_data_csv(
    r: &[f64],
    u: &[f64],
    v: &[f64],
    a: &[f64],
    b: &[f64],
    eigenfunctions: &[Vec<f64>],
    path: &Path,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("r,u,v,a,b");
    for k in 1..=eigenfunctions.len() {
        header.push_str(&format!(",xi_{k}"));
    }
    writeln!(f, "{header}")?;
    for i in 0..r.len() {
        let mut line = format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r[i], u[i], v[i], a[i], b[i]
        );
        for xi in eigenfunctions {
            line.push_str(&format!(",{:.16e}", xi[i]));
        }
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Raw pencil dump for oracle comparison (debug flag only):
/// `i,r,t_diag,t_off,potw,mass,c`. The off-diagonal column is empty on the
/// last row.
pub fn save_pencil_csv(pencil: &Pencil, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "i,r,t_diag,t_off,potw,mass,c")?;
    for i in 0..pencil.n() {
        let off = if i + 1 < pencil.n() { format!("{:.16e}", pencil.t_off[i]) } else { String::new() };
        writeln!(
            f,
            "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            i, pencil.r[i], pencil.t_diag[i], off, pencil.potw[i], pencil.mass[i], pencil.c[i]
        )?;
    }
    Ok(())
}

/// One sweep-summary row; `None` numeric fields render as empty cells so
/// failed runs keep their place without inventing numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub dim: u32,
    pub m: usize,
    pub m_lin_rad: Option<usize>,
    pub m_lin: Option<u64>,
    pub lambda_hats: Vec<f64>,
    pub uno: Option<bool>,
    pub due: Option<bool>,
    pub tre: Option<bool>,
    pub margin_uno: Option<i64>,
    pub margin_due: Option<i64>,
    pub margin_tre: Option<f64>,
    /// `"ok"`, or `"failed_<kind>: <message>"` for a failed cell.
    pub status: String,
}

/// Write the sweep summary with `k_max` eigenvalue columns. An empty grid
/// still gets the header line.
pub fn save_sweep_csv(rows: &[SweepRow], k_max: usize, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("p,q,N,m,m_lin_rad,m_lin");
    for k in 1..=k_max {
        header.push_str(&format!(",lambda_hat_{k}"));
    }
    header.push_str(",uno,due,tre,margin_uno,margin_due,margin_tre,status");
    writeln!(f, "{header}")?;
    let opt_int = |x: Option<i64>| x.map(|v| v.to_string()).unwrap_or_default();
    let opt_bool = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let mut line = format!("{},{},{},{}", row.p, row.q, row.dim, row.m);
        line.push(',');
        line.push_str(&opt_int(row.m_lin_rad.map(|v| v as i64)));
        line.push(',');
        line.push_str(&opt_int(row.m_lin.map(|v| v as i64)));
        for k in 0..k_max {
            line.push(',');
            if let Some(&lh) = row.lambda_hats.get(k) {
                line.push_str(&format!("{lh:.16e}"));
            }
        }
        for flag in [row.uno, row.due, row.tre] {
            line.push(',');
            line.push_str(&opt_bool(flag));
        }
        line.push(',');
        line.push_str(&opt_int(row.margin_uno));
        line.push(',');
        line.push_str(&opt_int(row.margin_due));
        line.push(',');
        if let Some(mt) = row.margin_tre {
            line.push_str(&format!("{mt:.16e}"));
        }
        line.push(',');
        line.push_str(&row.status);
        writeln!(f, "{line}")?;
    }
    Ok(())
}
