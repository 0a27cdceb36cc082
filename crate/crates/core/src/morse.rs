//! Sphere-harmonic combinatorics and the Morse-index decomposition: angular
//! eigenvalues and multiplicities, the per-mode angular cutoff, the radial
//! and full linearized indices, and the three theorem bounds with margins.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::constants::{SPECTRAL_NODES, TIE_TOL};
use crate::domain::Domain;
use crate::error::{CoreError, Result};
use crate::sturm::{count_negative, SturmProblem};

/// Eigenvalue of the sphere Laplacian at degree `j`: `j (N + j - 2)`.
pub fn beltrami_eigenvalue(dim: u32, j: u32) -> u64 {
    u64::from(j) * u64::from(dim + j - 2)
}

/// Multiplicity of that eigenvalue: `1` for `j = 0`, else
/// `(N + 2j - 2) (N + j - 3)! / ((N - 2)! j!)`, evaluated exactly.
pub fn beltrami_multiplicity(dim: u32, j: u32) -> u64 {
    assert!(dim >= 2, "dimension below 2");
    if j == 0 {
        return 1;
    }
    let factorial = |n: u32| (1..=u64::from(n)).map(BigUint::from).product::<BigUint>();
    let num = BigUint::from(u64::from(dim + 2 * j - 2)) * factorial(dim + j - 3);
    let den = factorial(dim - 2) * factorial(j);
    let exact = num / den;
    u64::try_from(exact).expect("multiplicity exceeds u64")
}

/// Independent route: dimension of homogeneous harmonic polynomials of
/// degree `j` in `N` variables, `C(N+j-1, j) - C(N+j-3, j-2)`.
pub fn beltrami_multiplicity_oracle(dim: u32, j: u32) -> u64 {
    let binom = |n: u64, k: u64| -> u64 {
        if k > n {
            return 0;
        }
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        for i in 1..=k {
            acc = acc * u128::from(n - k + i) / u128::from(i);
        }
        u64::try_from(acc).expect("binomial exceeds u64")
    };
    let n = u64::from(dim);
    let j = u64::from(j);
    let total = binom(n + j - 1, j);
    let lower = if j >= 2 { binom(n + j - 3, j - 2) } else { 0 };
    total - lower
}

/// Angular cutoff for one negative radial eigenvalue.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AngularCutoff {
    /// Largest degree `j` with `lambda_j + lambda_hat < -tie_tol`; `None`
    /// when not even `j = 0` qualifies.
    pub enumerated: Option<u32>,
    /// Closed form `min { n >= sqrt(((N-2)/2)^2 - lambda_hat) - N/2 }`.
    pub closed_form: u32,
    /// False when some `lambda_j + lambda_hat` sits within `tie_tol` of 0.
    pub exact: bool,
}

/// Largest contributing sphere-harmonic degree for radial eigenvalue
/// `lambda_hat`, by direct enumeration, together with the closed form.
pub fn angular_cutoff(dim: u32, lambda_hat: f64, tie_tol: f64) -> AngularCutoff {
    let mut enumerated = None;
    let mut exact = true;
    let mut j = 0u32;
    loop {
        let shifted = beltrami_eigenvalue(dim, j) as f64 + lambda_hat;
        if shifted.abs() <= tie_tol {
            exact = false;
        }
        if shifted < -tie_tol {
            enumerated = Some(j);
        } else if shifted > tie_tol {
            break;
        }
        j += 1;
    }

    let half = f64::from(dim - 2) / 2.0;
    let x = (half * half - lambda_hat).max(0.0).sqrt() - f64::from(dim) / 2.0;
    let closed_form = if x <= 0.0 { 0 } else { x.ceil() as u32 };
    AngularCutoff { enumerated, closed_form, exact }
}

/// One radial eigenvalue's block of angular contributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContributionTerm {
    pub j: u32,
    pub lambda_j: u64,
    pub n_j: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Contribution {
    pub k: usize,
    pub lambda_hat: f64,
    pub m_k: u32,
    pub terms: Vec<ContributionTerm>,
}

/// Radial and full linearized Morse indices with the contribution table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseIndices {
    pub m_lin_rad: usize,
    /// Canonical decomposition value `sum_k sum_{j=0}^{M_k} N_j`.
    pub m_lin: u64,
    /// Literal alternative reading that adds `m_lin_rad` on top; reported
    /// for the discrepancy record, never used in the bounds.
    pub m_lin_prop12: u64,
    pub contributions: Vec<Contribution>,
}

/// Assemble the full linearized Morse index from the strictly negative
/// singular radial eigenvalues.
///
/// # Errors
///
/// [`CoreError::Ambiguous`] when an input eigenvalue is not strictly
/// negative beyond the tie tolerance, or an angular tie makes some cutoff
/// inexact: integer counts must not be guessed.
pub fn full_morse_index(
    lambda_hats: &[f64],
    dim: u32,
    m_lin_rad: usize,
) -> Result<MorseIndices> {
    let mut contributions = Vec::with_capacity(lambda_hats.len());
    let mut m_lin: u64 = 0;
    for (k, &lh) in lambda_hats.iter().enumerate() {
        if lh >= -TIE_TOL {
            return Err(CoreError::Ambiguous(format!(
                "radial eigenvalue {k} = {lh:.6e} is not strictly negative"
            )));
        }
        let cutoff = angular_cutoff(dim, lh, TIE_TOL);
        if !cutoff.exact {
            return Err(CoreError::Ambiguous(format!(
                "angular tie at radial eigenvalue {k} = {lh:.6e}"
            )));
        }
        let m_k = cutoff.enumerated.expect("negative eigenvalue admits j = 0");
        debug_assert_eq!(m_k, cutoff.closed_form, "cutoff routes disagree off ties");
        let mut terms = Vec::with_capacity(m_k as usize + 1);
        for j in 0..=m_k {
            let n_j = beltrami_multiplicity(dim, j);
            terms.push(ContributionTerm { j, lambda_j: beltrami_eigenvalue(dim, j), n_j });
            m_lin += n_j;
        }
        contributions.push(Contribution { k: k + 1, lambda_hat: lh, m_k, terms });
    }
    Ok(MorseIndices {
        m_lin_rad,
        m_lin,
        m_lin_prop12: m_lin + m_lin_rad as u64,
        contributions,
    })
}

/// Radial linearized Morse index: negative-eigenvalue count of the regular
/// problem with the given potential, two-grid stability required.
pub fn radial_morse_index(
    domain: &Domain,
    potential: &dyn Fn(f64) -> f64,
    nodes: usize,
) -> Result<usize> {
    let problem = SturmProblem::regular(domain, potential);
    let (count, stable) = count_negative(&problem, nodes);
    if !stable {
        return Err(CoreError::Ambiguous(format!(
            "negative count changed between grids ({nodes} nodes)"
        )));
    }
    Ok(count)
}

/// Default spectral grid size for index computations.
pub fn default_spectral_nodes() -> usize {
    SPECTRAL_NODES
}

/// The three index bounds with integer/real margins. `margin >= 0` iff a
/// bound holds; the strict chain bound reports its slack as a real number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremFlags {
    pub uno: bool,
    pub margin_uno: i64,
    pub due: bool,
    pub margin_due: i64,
    /// Only defined for `m >= 2`.
    pub tre: Option<bool>,
    pub margin_tre: Option<f64>,
}

/// Evaluate the three bounds:
///
/// * `uno`: `m_lin_rad >= m`;
/// * `due`: `m_lin >= m_lin_rad + (m-1) N` and `m_lin >= m + (m-1) N`;
/// * `tre` (`m >= 2`): the chain `lambda_1 < ... < lambda_{m-1} < -(N-1)`
///   holds strictly.
pub fn verify_theorem_bounds(
    m: usize,
    dim: u32,
    m_lin_rad: usize,
    m_lin: u64,
    lambda_hats: &[f64],
) -> TheoremFlags {
    let n = i64::from(dim);
    let margin_uno = m_lin_rad as i64 - m as i64;
    let uno = margin_uno >= 0;

    let floor_rad = m_lin_rad as i64 + (m as i64 - 1) * n;
    let floor_abs = m as i64 + (m as i64 - 1) * n;
    let margin_due = (m_lin as i64 - floor_rad).min(m_lin as i64 - floor_abs);
    let due = margin_due >= 0;

    let (tre, margin_tre) = if m >= 2 {
        if lambda_hats.len() < m - 1 {
            (None, None)
        } else {
            let head = &lambda_hats[..m - 1];
            let ordered = head.windows(2).all(|w| w[0] < w[1]);
            let bound = -(f64::from(dim) - 1.0);
            let margin = bound - head[m - 2];
            (Some(ordered && margin > 0.0), Some(margin))
        }
    } else {
        (None, None)
    };

    TheoremFlags { uno, margin_uno, due, margin_due, tre, margin_tre }
}
