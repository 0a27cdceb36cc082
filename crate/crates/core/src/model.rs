//! Hamiltonian nonlinearities `H(u, v)` and their pointwise diagnostics.
//!
//! The system under study is
//!
//! ```text
//!   -Δu = H_v(u, v),   -Δv = H_u(u, v),
//! ```
//!
//! so the `u` equation is driven by the `v`-derivative of `H` and vice
//! versa. Everything downstream needs only values, gradients and Hessians of
//! `H`, exposed through the [`Hamiltonian`] trait; concrete families live in
//! [`HamiltonianModel`].
//!
//! Two pointwise scans qualify a model on a value box:
//!
//! * [`check_convexity`]: `H_uu >= 0`, `H_vv >= 0`, `det >= 0` (convexity of
//!   `H`), which makes the `b`-potential below nonnegative.
//! * [`check_strong_coupling`]: the sign and dominance conditions
//!   `H_u/u > 0`, `H_v/v > 0` and
//!   `H_uu > (H_u - H_uv v)/u > 0`, `H_vv > (H_v - H_uv u)/v > 0`
//!   that drive the zone-interlacing arguments for nodal solutions.
//!
//! Along a solution profile the linearization decouples (after rotating by
//! 45 degrees) into two scalar potentials
//!
//! ```text
//!   a(r) = -(H_uu + H_vv)/2 - H_uv,      b(r) = (H_uu + H_vv)/2 - H_uv,
//! ```
//!
//! evaluated at `(u(r), v(r))`; see [`potentials_along_solution`].

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Second derivatives of `H` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub huu: f64,
    pub huv: f64,
    pub hvv: f64,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.huu * self.hvv - self.huv * self.huv
    }

    pub fn trace(&self) -> f64 {
        self.huu + self.hvv
    }
}

/// Evaluation interface for Hamiltonians.
pub trait Hamiltonian {
    fn value(&self, u: f64, v: f64) -> f64;
    /// `(H_u, H_v)`.
    fn gradient(&self, u: f64, v: f64) -> (f64, f64);
    fn hessian(&self, u: f64, v: f64) -> Hessian;
}

/// One power term `coeff * |s|^exponent` of a separable Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerTerm {
    fn value(&self, s: f64) -> f64 {
        self.coeff * s.abs().powf(self.exponent)
    }

    /// Odd first derivative `coeff * exponent * |s|^(exponent-2) * s`.
    fn d1(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.coeff * self.exponent * s.abs().powf(self.exponent - 2.0) * s
    }

    /// Even second derivative `coeff * exponent * (exponent-1) * |s|^(exponent-2)`.
    fn d2(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.coeff * self.exponent * (self.exponent - 1.0) * s.abs().powf(self.exponent - 2.0)
    }
}

/// Supported Hamiltonian families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianModel {
    /// `H = |u|^(p+1)/(p+1) + |v|^(q+1)/(q+1)` with `p, q > 1`:
    /// the system couples `u` to `|v|^(q-1) v` and `v` to `|u|^(p-1) u`.
    LaneEmden { p: f64, q: f64 },
    /// `H = sum g_i(u) + sum f_j(v)` with superquadratic power terms.
    /// `g_terms` drive the `v` equation, `f_terms` drive the `u` equation.
    SeparablePowers {
        g_terms: Vec<PowerTerm>,
        f_terms: Vec<PowerTerm>,
    },
}

impl HamiltonianModel {
    pub fn lane_emden(p: f64, q: f64) -> Result<Self> {
        let m = Self::LaneEmden { p, q };
        m.validate()?;
        Ok(m)
    }

    pub fn separable(g_terms: Vec<PowerTerm>, f_terms: Vec<PowerTerm>) -> Result<Self> {
        let m = Self::SeparablePowers { g_terms, f_terms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::LaneEmden { p, q } => {
                for (name, e) in [("p", *p), ("q", *q)] {
                    if !(e.is_finite() && e > 1.0) {
                        return Err(CoreError::InvalidModel(format!(
                            "exponent {name} must be finite and > 1, got {e}"
                        )));
                    }
                }
            }
            Self::SeparablePowers { g_terms, f_terms } => {
                for (name, terms) in [("g_terms", g_terms), ("f_terms", f_terms)] {
                    if terms.is_empty() {
                        return Err(CoreError::InvalidModel(format!("{name} is empty")));
                    }
                    for t in terms {
                        if !(t.coeff.is_finite() && t.coeff > 0.0) {
                            return Err(CoreError::InvalidModel(format!(
                                "{name}: coeff must be positive, got {}",
                                t.coeff
                            )));
                        }
                        if !(t.exponent.is_finite() && t.exponent > 2.0) {
                            return Err(CoreError::InvalidModel(format!(
                                "{name}: exponent must be > 2 for a superquadratic \
                                 twice-differentiable term, got {}",
                                t.exponent
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Lane-Emden exponents if this is that family.
    pub fn lane_emden_exponents(&self) -> Option<(f64, f64)> {
        match self {
            Self::LaneEmden { p, q } => Some((*p, *q)),
            Self::SeparablePowers { .. } => None,
        }
    }
}

impl Hamiltonian for HamiltonianModel {
    fn value(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::LaneEmden { p, q } => {
                u.abs().powf(p + 1.0) / (p + 1.0) + v.abs().powf(q + 1.0) / (q + 1.0)
            }
            Self::SeparablePowers { g_terms, f_terms } => {
                g_terms.iter().map(|t| t.value(u)).sum::<f64>()
                    + f_terms.iter().map(|t| t.value(v)).sum::<f64>()
            }
        }
    }

    fn gradient(&self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Self::LaneEmden { p, q } => (signed_pow(u, *p), signed_pow(v, *q)),
            Self::SeparablePowers { g_terms, f_terms } => (
                g_terms.iter().map(|t| t.d1(u)).sum(),
                f_terms.iter().map(|t| t.d1(v)).sum(),
            ),
        }
    }

    fn hessian(&self, u: f64, v: f64) -> Hessian {
        match self {
            Self::LaneEmden { p, q } => Hessian {
                huu: p * u.abs().powf(p - 1.0),
                huv: 0.0,
                hvv: q * v.abs().powf(q - 1.0),
            },
            Self::SeparablePowers { g_terms, f_terms } => Hessian {
                huu: g_terms.iter().map(|t| t.d2(u)).sum(),
                huv: 0.0,
                hvv: f_terms.iter().map(|t| t.d2(v)).sum(),
            },
        }
    }
}

/// `|s|^(e-1) * s`, the odd power with `signed_pow(s, e)' = e |s|^(e-1)`.
fn signed_pow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s.abs().powf(e - 1.0) * s
}

impl std::fmt::Display for HamiltonianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::LaneEmden { p, q } => write!(f, "lane_emden(p={p},q={q})"),
            Self::SeparablePowers { g_terms, f_terms } => {
                let fmt_terms = |ts: &[PowerTerm]| {
                    ts.iter()
                        .map(|t| format!("{}*|s|^{}", t.coeff, t.exponent))
                        .collect::<Vec<_>>()
                        .join("+")
                };
                write!(f, "separable(g={};f={})", fmt_terms(g_terms), fmt_terms(f_terms))
            }
        }
    }
}

impl std::str::FromStr for HamiltonianModel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoreError::Artifact(format!("unparseable model `{s}`"));
        if let Some(rest) = s.strip_prefix("lane_emden(p=") {
            let body = rest.strip_suffix(')').ok_or_else(bad)?;
            let (ps, qs) = body.split_once(",q=").ok_or_else(bad)?;
            let p: f64 = ps.parse().map_err(|_| bad())?;
            let q: f64 = qs.parse().map_err(|_| bad())?;
            return Self::lane_emden(p, q);
        }
        if let Some(rest) = s.strip_prefix("separable(g=") {
            let body = rest.strip_suffix(')').ok_or_else(bad)?;
            let (gs, fs) = body.split_once(";f=").ok_or_else(bad)?;
            let parse_terms = |part: &str| -> Result<Vec<PowerTerm>> {
                part.split('+')
                    .map(|t| {
                        let (c, e) = t.split_once("*|s|^").ok_or_else(bad)?;
                        Ok(PowerTerm {
                            coeff: c.parse().map_err(|_| bad())?,
                            exponent: e.parse().map_err(|_| bad())?,
                        })
                    })
                    .collect()
            };
            return Self::separable(parse_terms(gs)?, parse_terms(fs)?);
        }
        Err(bad())
    }
}

/// Result of a pointwise convexity scan over a value box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub convex: bool,
    pub huu_min: f64,
    pub hvv_min: f64,
    pub det_min: f64,
    /// Sample point of the worst determinant violation, if any.
    pub witness: Option<(f64, f64)>,
}

/// Scan `H` for convexity on `[-u_max, u_max] x [-v_max, v_max]`.
pub fn check_convexity(
    h: &dyn Hamiltonian,
    u_max: f64,
    v_max: f64,
    n_samples: usize,
) -> ConvexityReport {
    let mut rep = ConvexityReport {
        convex: true,
        huu_min: f64::INFINITY,
        hvv_min: f64::INFINITY,
        det_min: f64::INFINITY,
        witness: None,
    };
    for iu in 0..n_samples {
        for iv in 0..n_samples {
            let u = box_sample(u_max, iu, n_samples);
            let v = box_sample(v_max, iv, n_samples);
            let hs = h.hessian(u, v);
            rep.huu_min = rep.huu_min.min(hs.huu);
            rep.hvv_min = rep.hvv_min.min(hs.hvv);
            if hs.det() < rep.det_min {
                rep.det_min = hs.det();
                if hs.det() < 0.0 {
                    rep.witness = Some((u, v));
                }
            }
        }
    }
    rep.convex = rep.huu_min >= 0.0 && rep.hvv_min >= 0.0 && rep.det_min >= 0.0;
    rep
}

/// Result of the strong-coupling scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport {
    /// `H_u/u > 0` and `H_v/v > 0` away from the axes.
    pub sign_condition: bool,
    /// `H_uu > (H_u - H_uv v)/u > 0` and the symmetric `v` chain.
    pub dominance_condition: bool,
    /// Smallest observed value of the strict inequalities (positive iff they
    /// all hold on the sample set).
    pub margin: f64,
    pub witness: Option<(f64, f64)>,
}

/// Scan the sign and dominance conditions on `[-u_max, u_max] x [-v_max, v_max]`,
/// excluding a small band around each axis where the quotients degenerate.
pub fn check_strong_coupling(
    h: &dyn Hamiltonian,
    u_max: f64,
    v_max: f64,
    n_samples: usize,
) -> CouplingReport {
    let mut rep = CouplingReport {
        sign_condition: true,
        dominance_condition: true,
        margin: f64::INFINITY,
        witness: None,
    };
    let record = |rep: &mut CouplingReport, value: f64, u: f64, v: f64, dominance: bool| {
        if value < rep.margin {
            rep.margin = value;
            if value <= 0.0 {
                rep.witness = Some((u, v));
            }
        }
        if value <= 0.0 {
            if dominance {
                rep.dominance_condition = false;
            } else {
                rep.sign_condition = false;
            }
        }
    };
    for iu in 0..n_samples {
        for iv in 0..n_samples {
            let u = box_sample(u_max, iu, n_samples);
            let v = box_sample(v_max, iv, n_samples);
            if u.abs() < 1e-9 * u_max || v.abs() < 1e-9 * v_max {
                continue;
            }
            let (hu, hv) = h.gradient(u, v);
            let hs = h.hessian(u, v);
            record(&mut rep, hu / u, u, v, false);
            record(&mut rep, hv / v, u, v, false);
            let mu = (hu - hs.huv * v) / u;
            let mv = (hv - hs.huv * u) / v;
            record(&mut rep, mu, u, v, true);
            record(&mut rep, hs.huu - mu, u, v, true);
            record(&mut rep, mv, u, v, true);
            record(&mut rep, hs.hvv - mv, u, v, true);
        }
    }
    rep
}

/// Symmetric sample of `[-m, m]` avoiding exact duplicates at the ends.
fn box_sample(m: f64, i: usize, n: usize) -> f64 {
    -m + 2.0 * m * (i as f64 + 0.5) / n as f64
}

/// Scalar potentials of the decoupled linearization along a profile.
#[derive(Debug, Clone)]
pub struct LinearizedPotentials {
    pub r: Vec<f64>,
    /// `-(H_uu + H_vv)/2 - H_uv` at `(u(r), v(r))`.
    pub a: Vec<f64>,
    /// `(H_uu + H_vv)/2 - H_uv` at `(u(r), v(r))`.
    pub b: Vec<f64>,
    pub huu: Vec<f64>,
    pub huv: Vec<f64>,
    pub hvv: Vec<f64>,
}

impl LinearizedPotentials {
    pub fn trace(&self, i: usize) -> f64 {
        self.huu[i] + self.hvv[i]
    }
}

/// Evaluate the decoupled potentials at the sample points of a profile.
pub fn potentials_along_profile(
    h: &dyn Hamiltonian,
    r: &[f64],
    u: &[f64],
    v: &[f64],
) -> LinearizedPotentials {
    assert!(r.len() == u.len() && r.len() == v.len());
    let n = r.len();
    let mut out = LinearizedPotentials {
        r: r.to_vec(),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        huu: Vec::with_capacity(n),
        huv: Vec::with_capacity(n),
        hvv: Vec::with_capacity(n),
    };
    for i in 0..n {
        let hs = h.hessian(u[i], v[i]);
        let half_tr = 0.5 * hs.trace();
        out.a.push(-half_tr - hs.huv);
        out.b.push(half_tr - hs.huv);
        out.huu.push(hs.huu);
        out.huv.push(hs.huv);
        out.hvv.push(hs.hvv);
    }
    out
}
