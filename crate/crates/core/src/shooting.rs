//! Two-parameter radial shooting for `m`-nodal solutions.
//!
//! In radial variables the system becomes, with `' = d/dr`,
//!
//! ```text
//!   -(r^{N-1} u')' = r^{N-1} H_v(u, v),
//!   -(r^{N-1} v')' = r^{N-1} H_u(u, v),
//! ```
//!
//! integrated as the first-order system in `(u, P, v, Q)` with the fluxes
//! `P = r^{N-1} u'`, `Q = r^{N-1} v'`. Keeping the fluxes as state avoids the
//! `1/r^{N-1}` stiffness at the origin; the error weights make `P` accurate
//! relative to `r^{N-1}`, so the recovered derivative `u' = P / r^{N-1}` is
//! uniformly accurate down to `r = 0`.
//!
//! Shooting parameters: on a ball, the center values `(alpha, beta)`; on an
//! annulus, the inner slopes `(u'(r_in), v'(r_in))`. A solution with `m`
//! nodal zones per component is located in three stages:
//!
//! 1. For the scale-invariant Lane-Emden family on balls, one unit shot is
//!    rescaled onto the domain (one inner root-find matches the `m`-th zeros
//!    of the two components when the exponents differ).
//! 2. Otherwise a nested scan over amplitude and component ratio pins the
//!    `m`-th zero of `u` at the outer radius and then drives `v` there too.
//! 3. A damped two-dimensional Newton iteration polishes the boundary
//!    condition `u(R) = v(R) = 0` in all routes.
//!
//! An accepted solution must pass hard gates: Newton convergence, exact
//! nodal-zone counts in both components, the pointwise coupling conditions
//! on the attained value box, and a discrete flux-defect residual measured
//! on an independently integrated uniform verification grid.

use serde::{Deserialize, Serialize};

use crate::constants::{
    BALL_START_REL, BLOWUP_CAP, NEWTON_MAX_ITER, NEWTON_MIN_DAMPING, SHOOT_R_CAP, SOLUTION_NODES,
    TOL_BC, TOL_ODE, TOL_RESIDUAL, TOL_VERIFY, VERIFY_INTERVALS, VERIFY_INTERVALS_CAP,
};
use crate::domain::Domain;
use crate::error::{CoreError, Result};
use crate::grid::{clustered_nodes, uniform_nodes};
use crate::log_debug;
use crate::model::{check_strong_coupling, Hamiltonian, HamiltonianModel};
use crate::ode::{Dopri5, IvpOutcome, Trajectory};

/// Tolerances and grid sizes of the solution pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootParams {
    /// Adaptive integration tolerance.
    pub tol_ode: f64,
    /// Boundary defect tolerance, relative to the component amplitude.
    pub tol_bc: f64,
    /// Cap on the verification-grid flux defect.
    pub tol_residual: f64,
    /// Stored profile nodes.
    pub nodes: usize,
    /// Interval count of the uniform verification grid.
    pub verify_intervals: usize,
}

impl Default for ShootParams {
    fn default() -> Self {
        Self {
            tol_ode: TOL_ODE,
            tol_bc: TOL_BC,
            tol_residual: TOL_RESIDUAL,
            nodes: SOLUTION_NODES,
            verify_intervals: VERIFY_INTERVALS,
        }
    }
}

/// Sampled radial profile: component values and derivatives on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileData {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

impl ProfileData {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Cubic-Hermite sample of `(u, v, u', v')` at `r` (clamped to the grid).
    pub fn sample(&self, r: f64) -> (f64, f64, f64, f64) {
        let n = self.r.len();
        if r <= self.r[0] {
            return (self.u[0], self.v[0], self.du[0], self.dv[0]);
        }
        if r >= self.r[n - 1] {
            return (self.u[n - 1], self.v[n - 1], self.du[n - 1], self.dv[n - 1]);
        }
        let j = self.r.partition_point(|&x| x < r).max(1) - 1;
        let (u, du) = hermite(self.r[j], self.r[j + 1], self.u[j], self.u[j + 1], self.du[j], self.du[j + 1], r);
        let (v, dv) = hermite(self.r[j], self.r[j + 1], self.v[j], self.v[j + 1], self.dv[j], self.dv[j + 1], r);
        (u, v, du, dv)
    }

    /// Largest absolute component values, `(max |u|, max |v|)`.
    pub fn amplitudes(&self) -> (f64, f64) {
        let amax = |xs: &[f64]| xs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        (amax(&self.u), amax(&self.v))
    }
}

/// Cubic Hermite value and derivative on `[ra, rb]`.
fn hermite(ra: f64, rb: f64, ya: f64, yb: f64, da: f64, db: f64, r: f64) -> (f64, f64) {
    let h = rb - ra;
    let t = (r - ra) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let y = ya * (2.0 * t3 - 3.0 * t2 + 1.0)
        + yb * (-2.0 * t3 + 3.0 * t2)
        + h * da * (t3 - 2.0 * t2 + t)
        + h * db * (t3 - t2);
    let dy = (ya * (6.0 * t2 - 6.0 * t) + yb * (-6.0 * t2 + 6.0 * t)) / h
        + da * (3.0 * t2 - 4.0 * t + 1.0)
        + db * (3.0 * t2 - 2.0 * t);
    (y, dy)
}

/// An `m`-nodal radial solution together with its quality measures.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub model: HamiltonianModel,
    pub domain: Domain,
    /// Nodal zones per component.
    pub m: usize,
    /// Sign of the first nodal zone.
    pub first_sign: i8,
    /// Shooting parameter of `u`: center value on balls, inner slope on annuli.
    pub alpha: f64,
    /// Shooting parameter of `v`.
    pub beta: f64,
    pub profile: ProfileData,
    /// Largest flux defect of the verification grid.
    pub residual_norm: f64,
    /// Boundary defect relative to the component amplitudes.
    pub bc_defect: f64,
}

impl RadialSolution {
    /// Half-widths of the attained value box `(max |u|, max |v|)`.
    pub fn value_box(&self) -> (f64, f64) {
        self.profile.amplitudes()
    }
}

// ─────────────────────────────────────────────────────────────────────────
// Integration of one shot
// ─────────────────────────────────────────────────────────────────────────

/// Series expansion of a ball solution at the origin, used below the
/// integration start radius `h0` where the flux formulation degenerates.
#[derive(Debug, Clone, Copy)]
struct BallSeries {
    r0: f64,
    alpha: f64,
    beta: f64,
    a2: f64,
    b2: f64,
    a4: f64,
    b4: f64,
}

impl BallSeries {
    fn new(model: &HamiltonianModel, dim: u32, alpha: f64, beta: f64, r0: f64) -> Self {
        let n = dim as f64;
        let (hu, hv) = model.gradient(alpha, beta);
        let hs = model.hessian(alpha, beta);
        // Quartic balance of -(r^{N-1}w')' = r^{N-1} rhs for both components.
        let a2 = -hv / (2.0 * n);
        let b2 = -hu / (2.0 * n);
        let a4 = -(hs.huv * a2 + hs.hvv * b2) / (4.0 * n + 8.0);
        let b4 = -(hs.huu * a2 + hs.huv * b2) / (4.0 * n + 8.0);
        Self { r0, alpha, beta, a2, b2, a4, b4 }
    }

    fn eval(&self, r: f64) -> (f64, f64, f64, f64) {
        let r2 = r * r;
        let u = self.alpha + r2 * (self.a2 + r2 * self.a4);
        let v = self.beta + r2 * (self.b2 + r2 * self.b4);
        let du = r * (2.0 * self.a2 + 4.0 * r2 * self.a4);
        let dv = r * (2.0 * self.b2 + 4.0 * r2 * self.b4);
        (u, v, du, dv)
    }

    /// State vector `(u, P, v, Q)` at `r`.
    fn state(&self, r: f64, dim: u32) -> [f64; 4] {
        let (u, v, du, dv) = self.eval(r);
        let w = r.powi(dim as i32 - 1);
        [u, w * du, v, w * dv]
    }
}

/// One integrated shot: dense trajectory plus origin series (balls only).
pub struct Shot {
    traj: Trajectory<4>,
    series: Option<BallSeries>,
    dim: u32,
    r_in: f64,
    pub blew_up: bool,
}

impl Shot {
    /// `(u, v, u', v')` at `r`, valid on `[r_in, r_end]`.
    pub fn sample(&self, r: f64) -> (f64, f64, f64, f64) {
        if let Some(s) = &self.series {
            if r < s.r0 {
                return s.eval(r);
            }
        }
        let y = self.traj.eval(r);
        let w = r.powi(self.dim as i32 - 1);
        (y[0], y[2], y[1] / w, y[3] / w)
    }

    /// Batched [`Shot::sample`] for ascending radii (linear step walk).
    pub fn sample_sorted(&self, radii: &[f64]) -> Vec<(f64, f64, f64, f64)> {
        let series_end = self.series.as_ref().map_or(self.r_in, |s| s.r0);
        let split = radii.partition_point(|&r| r < series_end);
        let mut out = Vec::with_capacity(radii.len());
        if let Some(s) = &self.series {
            out.extend(radii[..split].iter().map(|&r| s.eval(r)));
        }
        let states = self.traj.eval_sorted(&radii[split..]);
        out.extend(radii[split..].iter().zip(states).map(|(&r, y)| {
            let w = r.powi(self.dim as i32 - 1);
            (y[0], y[2], y[1] / w, y[3] / w)
        }));
        out
    }

    pub fn r_end(&self) -> f64 {
        self.traj.r_end
    }

    pub fn end_state(&self) -> [f64; 4] {
        self.traj.y_end
    }

    /// Component value at `r` (0 for `u`, 1 for `v`).
    fn component(&self, cmp: usize, r: f64) -> f64 {
        let s = self.sample(r);
        if cmp == 0 { s.0 } else { s.1 }
    }

    /// Zeros of one component in `(r_in, r_limit)`, by dense sign scan plus
    /// bisection. Starts from the interior (boundary zeros on annuli are not
    /// crossings).
    pub fn zeros(&self, cmp: usize, r_limit: f64) -> Vec<f64> {
        let mut zeros = Vec::new();
        let span = r_limit - self.r_in;
        // Walk each accepted step with five interpolant samples.
        let mut r_prev = self.r_in;
        let mut f_prev = match &self.series {
            Some(s) => { let e = s.eval(self.r_in); if cmp == 0 { e.0 } else { e.1 } }
            None => {
                // Annulus boundary: the component vanishes there; take its sign
                // from the initial slope direction.
                let y0 = self.traj.steps.first().map(|st| st.eval(self.r_in)).unwrap_or(self.traj.y_end);
                let slope = if cmp == 0 { y0[1] } else { y0[3] };
                1e-300 * slope.signum()
            }
        };
        'outer: for step in &self.traj.steps {
            for k in 1..=5usize {
                let r = step.r0 + step.h * k as f64 / 5.0;
                if r <= r_prev {
                    continue;
                }
                if r > r_limit {
                    break 'outer;
                }
                let y = step.eval(r);
                let f = if cmp == 0 { y[0] } else { y[2] };
                if f_prev != 0.0 && f != 0.0 && f_prev.signum() != f.signum() {
                    zeros.push(self.refine_zero(cmp, r_prev, r, span));
                } else if f == 0.0 && f_prev != 0.0 {
                    zeros.push(r);
                }
                r_prev = r;
                f_prev = f;
            }
        }
        zeros
    }

    fn refine_zero(&self, cmp: usize, mut ra: f64, mut rb: f64, span: f64) -> f64 {
        let mut fa = self.component(cmp, ra);
        for _ in 0..90 {
            if rb - ra <= 1e-15 * span {
                break;
            }
            let rm = 0.5 * (ra + rb);
            let fm = self.component(cmp, rm);
            if fm == 0.0 {
                return rm;
            }
            if fa.signum() == fm.signum() {
                ra = rm;
                fa = fm;
            } else {
                rb = rm;
            }
        }
        0.5 * (ra + rb)
    }
}

/// Right-hand side of the flux-form first-order system.
fn rhs(model: &HamiltonianModel, dim: u32) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    let nm1 = dim as i32 - 1;
    move |r, y| {
        let w = r.powi(nm1);
        let (hu, hv) = model.gradient(y[0], y[2]);
        [y[1] / w, -w * hv, y[3] / w, -w * hu]
    }
}

/// Error weights: component values relative to the amplitude scale, fluxes
/// relative to `r^{N-1}` times that scale so that `P / r^{N-1}` stays
/// accurate near the origin.
fn weights(dim: u32, tol: f64, val_scale: f64, r_floor: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
    let nm1 = dim as i32 - 1;
    move |r, y| {
        let w = r.max(r_floor).powi(nm1);
        let su = tol * (y[0].abs() + val_scale);
        let sp = tol * (y[1].abs() + val_scale * w);
        let sv = tol * (y[2].abs() + val_scale);
        let sq = tol * (y[3].abs() + val_scale * w);
        [su, sp, sv, sq]
    }
}

/// Shot initial data: start radius, state, origin series (balls only), and
/// the amplitude scale used for error weighting.
fn shot_start(
    model: &HamiltonianModel,
    domain_dim: u32,
    is_ball: bool,
    r_in: f64,
    (pa, pb): (f64, f64),
    r_target: f64,
) -> (f64, [f64; 4], Option<BallSeries>, f64) {
    if is_ball {
        let r0 = BALL_START_REL * r_target.min(1.0).max(r_target * 1e-3);
        let series = BallSeries::new(model, domain_dim, pa, pb, r0);
        let y0 = series.state(r0, domain_dim);
        (r0, y0, Some(series), pa.abs().max(pb.abs()))
    } else {
        let w = r_in.powi(domain_dim as i32 - 1);
        // Amplitude estimate: slope times a fraction of the domain span.
        let scale = (pa.abs().max(pb.abs()) * 0.1 * (r_target - r_in)).max(1e-12);
        (r_in, [0.0, w * pa, 0.0, w * pb], None, scale)
    }
}

/// Integrate one shot on `[r_start, r_target]`, stopping early on blow-up or
/// when `stop_zeros` crossings of `u` have been seen (0 disables).
fn integrate_shot(
    model: &HamiltonianModel,
    domain_dim: u32,
    is_ball: bool,
    r_in: f64,
    params: (f64, f64),
    r_target: f64,
    tol: f64,
    stop_zeros: usize,
) -> Result<Shot> {
    let (r0, y0, series, val_scale) =
        shot_start(model, domain_dim, is_ball, r_in, params, r_target);

    let mut sign_u = params.0.signum();
    let mut crossings = 0usize;
    let stop = move |_r: f64, y: &[f64; 4]| {
        if y[0].abs() + y[2].abs() > BLOWUP_CAP {
            return true;
        }
        if stop_zeros > 0 && y[0] != 0.0 {
            let s = y[0].signum();
            if s != sign_u {
                sign_u = s;
                crossings += 1;
                if crossings >= stop_zeros {
                    return true;
                }
            }
        }
        false
    };

    let ode = Dopri5 { h_init: 0.1 * (r0 - r_in).max(1e-9 * r_target), ..Dopri5::default() };
    let traj = ode.integrate(
        rhs(model, domain_dim),
        weights(domain_dim, tol, val_scale, r0),
        stop,
        r0,
        y0,
        r_target,
    )?;
    let blew_up = traj.outcome == IvpOutcome::Stopped
        && traj.y_end[0].abs() + traj.y_end[2].abs() > BLOWUP_CAP;
    Ok(Shot { traj, series, dim: domain_dim, r_in, blew_up })
}

/// Integrate one shot to `r_target` with forced step endpoints at `cuts`
/// (ascending, strictly inside the interval): the integrator restarts at
/// each cut, so no accepted step straddles one.
fn integrate_shot_through(
    model: &HamiltonianModel,
    domain_dim: u32,
    is_ball: bool,
    r_in: f64,
    params: (f64, f64),
    cuts: &[f64],
    r_target: f64,
    tol: f64,
) -> Result<Shot> {
    let (r0, y0, series, val_scale) =
        shot_start(model, domain_dim, is_ball, r_in, params, r_target);
    let f = rhs(model, domain_dim);
    let scale = weights(domain_dim, tol, val_scale, r0);

    let mut r_cur = r0;
    let mut y_cur = y0;
    let mut steps = Vec::new();
    let mut n_evals = 0usize;
    for &stop_r in cuts.iter().chain(std::iter::once(&r_target)) {
        if stop_r <= r_cur {
            continue;
        }
        let ode = Dopri5::default();
        let seg = ode.integrate(&f, &scale, |_, _| false, r_cur, y_cur, stop_r)?;
        r_cur = seg.r_end;
        y_cur = seg.y_end;
        n_evals += seg.n_evals;
        steps.extend(seg.steps);
    }
    let traj = Trajectory {
        r_start: r0,
        r_end: r_cur,
        y_end: y_cur,
        outcome: IvpOutcome::ReachedEnd,
        n_evals,
        steps,
    };
    Ok(Shot { traj, series, dim: domain_dim, r_in, blew_up: false })
}

// ─────────────────────────────────────────────────────────────────────────
// Solution finding
// ─────────────────────────────────────────────────────────────────────────

/// Scaling exponents `(kappa_u, kappa_v)` of the Lane-Emden family:
/// `u_l(r) = l^{kappa_u} u(l r)`, `v_l(r) = l^{kappa_v} v(l r)` maps
/// solutions to solutions.
pub fn lane_emden_scaling_exponents(p: f64, q: f64) -> (f64, f64) {
    let d = p * q - 1.0;
    (2.0 * (q + 1.0) / d, 2.0 * (p + 1.0) / d)
}

/// Rescale a Lane-Emden profile by `l`: radii shrink by `l`, values grow by
/// the family exponents. Maps exact solutions on `[0, R]` to exact solutions
/// on `[0, R/l]`.
pub fn rescale_lane_emden(profile: &ProfileData, p: f64, q: f64, l: f64) -> ProfileData {
    let (ku, kv) = lane_emden_scaling_exponents(p, q);
    let cu = l.powf(ku);
    let cv = l.powf(kv);
    ProfileData {
        r: profile.r.iter().map(|&r| r / l).collect(),
        u: profile.u.iter().map(|&u| cu * u).collect(),
        v: profile.v.iter().map(|&v| cv * v).collect(),
        du: profile.du.iter().map(|&d| cu * l * d).collect(),
        dv: profile.dv.iter().map(|&d| cv * l * d).collect(),
    }
}

struct ShotConfig<'a> {
    model: &'a HamiltonianModel,
    dim: u32,
    is_ball: bool,
    r_in: f64,
}

impl ShotConfig<'_> {
    fn shoot(&self, params: (f64, f64), r_target: f64, tol: f64, stop_zeros: usize) -> Result<Shot> {
        integrate_shot(self.model, self.dim, self.is_ball, self.r_in, params, r_target, tol, stop_zeros)
    }

    /// `m`-th zero of each component under the given parameters, if both
    /// occur before blow-up or the radius cap.
    fn mth_zeros(&self, params: (f64, f64), m: usize, tol: f64) -> Result<Option<(f64, f64)>> {
        let shot = self.shoot(params, SHOOT_R_CAP, tol, m + 1)?;
        let zu = shot.zeros(0, shot.r_end());
        let zv = shot.zeros(1, shot.r_end());
        if zu.len() >= m && zv.len() >= m {
            Ok(Some((zu[m - 1], zv[m - 1])))
        } else {
            Ok(None)
        }
    }
}

/// Find the `m`-nodal radial solution with the given first-zone sign.
///
/// # Errors
///
/// [`CoreError::Solver`] when no parameter bracket is found, Newton stalls,
/// or the residual gates fail; [`CoreError::InvalidModel`] when the coupling
/// conditions fail on the attained value box.
pub fn find_solution(
    model: &HamiltonianModel,
    domain: &Domain,
    m: usize,
    first_sign: i8,
    params: &ShootParams,
) -> Result<RadialSolution> {
    model.validate()?;
    domain.validate()?;
    if m == 0 || m > 6 {
        return Err(CoreError::InvalidConfig(format!(
            "nodal zone count m must be in 1..=6, got {m}"
        )));
    }
    if first_sign != 1 && first_sign != -1 {
        return Err(CoreError::InvalidConfig(format!(
            "first_sign must be +1 or -1, got {first_sign}"
        )));
    }
    let sigma = first_sign as f64;
    let cfg = ShotConfig { model, dim: domain.dim, is_ball: domain.is_ball(), r_in: domain.r_in() };
    let r_out = domain.r_out();

    let guess = match (model.lane_emden_exponents(), domain.is_ball()) {
        (Some((p, q)), true) => lane_emden_ball_guess(&cfg, p, q, m, sigma, r_out, params)?,
        _ => nested_scan_guess(&cfg, m, sigma, r_out, params)?,
    };
    log_debug!("initial guess ({:.6e}, {:.6e})", guess.0, guess.1);

    let (alpha, beta, shot, bc_defect) = newton_polish(&cfg, guess, r_out, params)?;
    build_solution(&cfg, domain, m, first_sign, alpha, beta, shot, bc_defect, params)
}

/// Scaling route: one unit shot, rescaled onto the ball.
fn lane_emden_ball_guess(
    cfg: &ShotConfig,
    p: f64,
    q: f64,
    m: usize,
    sigma: f64,
    r_out: f64,
    params: &ShootParams,
) -> Result<(f64, f64)> {
    let tol = params.tol_ode.max(1e-9);
    let alpha0 = sigma;
    let (s, t, beta0) = if (p - q).abs() < 1e-12 {
        // Symmetric family: the diagonal u = v solves both equations.
        let (s, t) = cfg
            .mth_zeros((alpha0, alpha0), m, tol)?
            .ok_or_else(|| CoreError::Solver("diagonal ray lost its zeros".into()))?;
        (s, t, alpha0)
    } else {
        // Away from the matched ray the components eventually take opposite
        // signs and the free trajectory diverges before both reach their
        // m-th zero, so a direct mismatch function has almost empty domain.
        // Instead bisect on the ordering "whose m-th crossing comes first":
        // it flips exactly at the matched ray, and near the flip both m-th
        // zeros exist and coalesce.
        let best = std::cell::Cell::new(None::<(f64, f64, f64)>);
        let probe = |tau: f64| -> Result<f64> {
            let b0 = sigma * 10f64.powf(tau);
            let shot = cfg.shoot((alpha0, b0), SHOOT_R_CAP, tol, m + 1)?;
            let r_end = shot.r_end();
            let zu = shot.zeros(0, r_end);
            let zv = shot.zeros(1, r_end);
            if zu.len() >= m && zv.len() >= m {
                let (s, t) = (zu[m - 1], zv[m - 1]);
                if best.get().map_or(true, |(bs, bt, _)| (s - t).abs() < (bs - bt).abs()) {
                    best.set(Some((s, t, b0)));
                }
                return Ok(s - t);
            }
            let cu = zu.len().min(m);
            let cv = zv.len().min(m);
            if cu != cv {
                // The component with more crossings is ahead.
                return Ok(if cu > cv { -1.0 } else { 1.0 });
            }
            if cu > 0 {
                return Ok(zu[cu - 1] - zv[cu - 1]);
            }
            Err(CoreError::Solver("ray with no crossings at all".into()))
        };
        let taus: Vec<f64> = (0..=40).map(|i| -2.0 + 4.0 * i as f64 / 40.0).collect();
        let mut bracket = None;
        let mut prev: Option<(f64, f64)> = None;
        for &tau in &taus {
            if let Ok(chi) = probe(tau) {
                if let Some((tp, cp)) = prev {
                    if cp.signum() != chi.signum() {
                        bracket = Some((tp, tau, cp));
                        break;
                    }
                }
                prev = Some((tau, chi));
            } else {
                prev = None;
            }
        }
        let (mut ta, mut tb, mut ca) = bracket.ok_or_else(|| {
            CoreError::Solver("no ratio bracket ordering the m-th zeros".into())
        })?;
        for _ in 0..70 {
            let tm = 0.5 * (ta + tb);
            let cm = probe(tm)?;
            if cm == 0.0 || tb - ta < 1e-15 {
                break;
            }
            if ca.signum() == cm.signum() {
                ta = tm;
                ca = cm;
            } else {
                tb = tm;
            }
            if let Some((s, t, _)) = best.get() {
                if (s - t).abs() <= 1e-9 * (s + t).abs() {
                    break;
                }
            }
        }
        best.get().ok_or_else(|| {
            CoreError::Solver("ordering bisection never saw both m-th zeros".into())
        })?
    };
    let rho = 0.5 * (s + t);
    let l = rho / r_out;
    let (ku, kv) = lane_emden_scaling_exponents(p, q);
    Ok((l.powf(ku) * alpha0, l.powf(kv) * beta0))
}

/// General route: amplitude bisection pins the `m`-th zero of `u` at the
/// outer radius along each parameter ray; the ray angle then drives `v(R)`
/// through zero. Symmetric models shortcut to the diagonal ray.
fn nested_scan_guess(
    cfg: &ShotConfig,
    m: usize,
    sigma: f64,
    r_out: f64,
    params: &ShootParams,
) -> Result<(f64, f64)> {
    let tol = params.tol_ode.max(1e-9);

    // Inner stage: on the ray (s, s*10^tau), find s with m-th zero of u at R.
    let pin_amplitude = |tau: f64| -> Result<Option<f64>> {
        let ray = |ls: f64| (sigma * 10f64.powf(ls), sigma * 10f64.powf(ls + tau));
        // Zero position decreases as amplitude grows; bracket in log10 s.
        let zero_pos = |ls: f64| -> Result<Option<f64>> {
            let shot = cfg.shoot(ray(ls), SHOOT_R_CAP, tol, m + 1)?;
            let zu = shot.zeros(0, shot.r_end());
            Ok(zu.get(m - 1).copied())
        };
        let mut lo: Option<(f64, f64)> = None; // zero beyond R (small amplitude)
        let mut hi: Option<(f64, f64)> = None; // zero inside R (large amplitude)
        for i in 0..=48 {
            let ls = -4.0 + 8.0 * i as f64 / 48.0;
            match zero_pos(ls)? {
                Some(z) if z > r_out => {
                    lo = Some((ls, z));
                    if hi.is_some() {
                        break;
                    }
                }
                Some(z) => {
                    hi = Some((ls, z));
                    if lo.is_some() {
                        break;
                    }
                }
                None => {
                    // Too little oscillation before the cap: amplitude too
                    // small; treat as "zero beyond R".
                    lo = Some((ls, f64::INFINITY));
                }
            }
        }
        let (mut la, mut lb) = match (lo, hi) {
            (Some((la, _)), Some((lb, _))) => (la, lb),
            _ => return Ok(None),
        };
        for _ in 0..70 {
            let lm = 0.5 * (la + lb);
            match zero_pos(lm)? {
                Some(z) if (z - r_out).abs() < 1e-12 * r_out => {
                    la = lm;
                    lb = lm;
                    break;
                }
                Some(z) if z > r_out => la = lm,
                Some(_) => lb = lm,
                None => la = lm,
            }
            if (lb - la).abs() < 1e-13 {
                break;
            }
        }
        Ok(Some(0.5 * (la + lb)))
    };

    // Outer stage: v(R) as a function of the ray angle.
    let v_defect = |tau: f64| -> Result<Option<(f64, f64, f64)>> {
        let Some(ls) = pin_amplitude(tau)? else { return Ok(None) };
        let pa = sigma * 10f64.powf(ls);
        let pb = sigma * 10f64.powf(ls + tau);
        let shot = cfg.shoot((pa, pb), r_out, tol, 0)?;
        if shot.blew_up || shot.r_end() < r_out {
            return Ok(None);
        }
        let (_, v, _, _) = shot.sample(r_out);
        Ok(Some((pa, pb, v)))
    };

    if cfg.model.is_symmetric() {
        let Some(ls) = pin_amplitude(0.0)? else {
            return Err(CoreError::Solver("no amplitude bracket on the diagonal ray".into()));
        };
        let s = sigma * 10f64.powf(ls);
        return Ok((s, s));
    }

    let taus: Vec<f64> = (0..61).map(|i| -1.5 + 3.0 * i as f64 / 60.0).collect();
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for &tau in &taus {
        if let Some((_, _, v)) = v_defect(tau)? {
            if let Some((tp, vp)) = prev {
                if vp.signum() != v.signum() {
                    bracket = Some((tp, tau, vp));
                    break;
                }
            }
            prev = Some((tau, v));
        } else {
            prev = None;
        }
    }
    let (mut ta, mut tb, mut va) =
        bracket.ok_or_else(|| CoreError::Solver("no ray bracket for the v boundary value".into()))?;
    let mut best = None;
    for _ in 0..60 {
        let tm = 0.5 * (ta + tb);
        let Some((pa, pb, vm)) = v_defect(tm)? else {
            return Err(CoreError::Solver("ray bisection left the feasible set".into()));
        };
        best = Some((pa, pb));
        if vm == 0.0 || tb - ta < 1e-13 {
            break;
        }
        if va.signum() == vm.signum() {
            ta = tm;
            va = vm;
        } else {
            tb = tm;
        }
    }
    best.ok_or_else(|| CoreError::Solver("ray bisection failed".into()))
}

/// Damped Newton iteration on the boundary map `F(a, b) = (u(R), v(R))`.
fn newton_polish(
    cfg: &ShotConfig,
    guess: (f64, f64),
    r_out: f64,
    params: &ShootParams,
) -> Result<(f64, f64, Shot, f64)> {
    // Boundary defect normalized by the component amplitudes along the shot.
    let eval = |x: (f64, f64)| -> Result<(f64, f64, f64, Shot)> {
        let shot = cfg.shoot(x, r_out, params.tol_ode, 0)?;
        if shot.blew_up || shot.r_end() < r_out * (1.0 - 1e-12) {
            return Ok((f64::INFINITY, f64::INFINITY, f64::INFINITY, shot));
        }
        let (u, v, _, _) = shot.sample(r_out);
        let (mut su, mut sv) = (0.0f64, 0.0f64);
        for st in &shot.traj.steps {
            let y = st.eval(st.r0);
            su = su.max(y[0].abs());
            sv = sv.max(y[2].abs());
        }
        let norm = (u.abs() / su.max(1e-300)).max(v.abs() / sv.max(1e-300));
        Ok((u, v, norm, shot))
    };

    let mut x = guess;
    let (mut fu, mut fv, mut norm, mut shot) = eval(x)?;
    for iter in 0..NEWTON_MAX_ITER {
        if norm <= params.tol_bc {
            log_debug!("newton converged in {iter} iterations, defect {norm:.3e}");
            return Ok((x.0, x.1, shot, norm));
        }
        // Forward-difference Jacobian.
        let e0 = 1e-7 * x.0.abs().max(1e-12);
        let e1 = 1e-7 * x.1.abs().max(1e-12);
        let (fu0, fv0, _, _) = eval((x.0 + e0, x.1))?;
        let (fu1, fv1, _, _) = eval((x.0, x.1 + e1))?;
        let j = [
            [(fu0 - fu) / e0, (fu1 - fu) / e1],
            [(fv0 - fv) / e0, (fv1 - fv) / e1],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(CoreError::Solver("singular shooting Jacobian".into()));
        }
        let step = (
            -(j[1][1] * fu - j[0][1] * fv) / det,
            -(-j[1][0] * fu + j[0][0] * fv) / det,
        );
        let mut damping = 1.0;
        loop {
            let cand = (x.0 + damping * step.0, x.1 + damping * step.1);
            let (cu, cv, cnorm, cshot) = eval(cand)?;
            if cnorm < norm {
                x = cand;
                (fu, fv, norm, shot) = (cu, cv, cnorm, cshot);
                break;
            }
            damping *= 0.5;
            if damping < NEWTON_MIN_DAMPING {
                return Err(CoreError::Solver(format!(
                    "newton stalled at defect {norm:.3e} after {iter} iterations"
                )));
            }
        }
    }
    if norm <= params.tol_bc {
        return Ok((x.0, x.1, shot, norm));
    }
    Err(CoreError::Solver(format!(
        "newton did not reach the boundary tolerance (defect {norm:.3e})"
    )))
}

/// Assemble the output profile and enforce the acceptance gates.
#[allow(clippy::too_many_arguments)]
fn build_solution(
    cfg: &ShotConfig,
    domain: &Domain,
    m: usize,
    first_sign: i8,
    alpha: f64,
    beta: f64,
    shot: Shot,
    bc_defect: f64,
    params: &ShootParams,
) -> Result<RadialSolution> {
    let r_out = domain.r_out();
    let grid = clustered_nodes(domain.r_in(), r_out, params.nodes);
    let mut profile = ProfileData {
        r: grid.clone(),
        u: Vec::with_capacity(grid.len()),
        v: Vec::with_capacity(grid.len()),
        du: Vec::with_capacity(grid.len()),
        dv: Vec::with_capacity(grid.len()),
    };
    for &r in &grid {
        let (u, v, du, dv) = if domain.is_ball() && r == 0.0 {
            (alpha, beta, 0.0, 0.0)
        } else {
            shot.sample(r)
        };
        profile.u.push(u);
        profile.v.push(v);
        profile.du.push(du);
        profile.dv.push(dv);
    }

    // Gate: exact nodal-zone counts, leaving out the terminal boundary zero.
    let window = 1e-7 * r_out;
    for (cmp, name) in [(0usize, "u"), (1usize, "v")] {
        let zeros = shot.zeros(cmp, r_out - window);
        if zeros.len() != m - 1 {
            return Err(CoreError::Solver(format!(
                "component {name} has {} interior zeros, expected {}",
                zeros.len(),
                m - 1
            )));
        }
    }
    // Gate: first-zone sign.
    let probe = 0.5 * (domain.r_in()
        + shot.zeros(0, r_out - window).first().copied().unwrap_or(r_out));
    let (u_probe, v_probe, _, _) = shot.sample(probe.max(domain.r_in() + 1e-3 * r_out));
    if u_probe.signum() as i8 != first_sign || v_probe.signum() as i8 != first_sign {
        return Err(CoreError::Solver("first nodal zone has the wrong sign".into()));
    }

    // Gate: coupling conditions on the attained value box.
    let (umax, vmax) = profile.amplitudes();
    let coupling = check_strong_coupling(cfg.model, umax, vmax, 33);
    if !(coupling.sign_condition && coupling.dominance_condition) {
        return Err(CoreError::InvalidModel(format!(
            "coupling conditions fail on the value box (margin {:.3e} at {:?})",
            coupling.margin, coupling.witness
        )));
    }

    // Gate: independent verification residual. The centered defect is second
    // order in the sampling grid, so refine until it meets tolerance or the
    // cap shows the profile itself is bad.
    let vshot = verification_shot(cfg.model, domain, alpha, beta)?;
    let mut intervals = params.verify_intervals;
    let residual_norm = loop {
        let vprof = sample_shot_uniform(&vshot, domain, alpha, beta, intervals);
        let defect = flux_defect_max(cfg.model, domain.dim, &vprof);
        if defect <= params.tol_residual || intervals >= VERIFY_INTERVALS_CAP {
            break defect;
        }
        intervals *= 2;
    };
    if residual_norm > params.tol_residual {
        return Err(CoreError::Solver(format!(
            "verification residual {residual_norm:.3e} exceeds {:.3e} at {intervals} intervals",
            params.tol_residual
        )));
    }

    Ok(RadialSolution {
        model: cfg.model.clone(),
        domain: *domain,
        m,
        first_sign,
        alpha,
        beta,
        profile,
        residual_norm,
        bc_defect,
    })
}

// ─────────────────────────────────────────────────────────────────────────
// Verification grid and flux defects
// ─────────────────────────────────────────────────────────────────────────

/// Re-integrate the shot at tight tolerance and sample it on a uniform grid
/// of `2 * intervals + 1` nodes (nodes plus midpoints).
pub fn verification_profile(
    model: &HamiltonianModel,
    domain: &Domain,
    alpha: f64,
    beta: f64,
    intervals: usize,
) -> Result<ProfileData> {
    let shot = verification_shot(model, domain, alpha, beta)?;
    Ok(sample_shot_uniform(&shot, domain, alpha, beta, intervals))
}

/// Independent re-integration of a solution candidate at tight tolerance.
///
/// Power gradients with exponent below 3 lose a derivative wherever a
/// component crosses zero, and a dense-output step straddling a crossing
/// carries an interpolation error that no sampling refinement can remove.
/// A first pass locates the crossings; a second pass restarts the
/// integrator at each one so every accepted step sees a smooth right side.
pub fn verification_shot(
    model: &HamiltonianModel,
    domain: &Domain,
    alpha: f64,
    beta: f64,
) -> Result<Shot> {
    let r_out = domain.r_out();
    let first = integrate_shot(
        model,
        domain.dim,
        domain.is_ball(),
        domain.r_in(),
        (alpha, beta),
        r_out,
        TOL_VERIFY,
        0,
    )?;
    if first.blew_up || first.traj.outcome == IvpOutcome::Stopped {
        return Ok(first);
    }
    // Crossings within `window` of a boundary (or of each other) stay inside
    // one step; the induced error scales with the squared distance and is
    // negligible there, while degenerate segments would underflow the
    // integrator.
    let window = 1e-7 * r_out;
    let mut cuts = first.zeros(0, r_out);
    cuts.extend(first.zeros(1, r_out));
    cuts.retain(|&z| z > first.traj.r_start + window && z < r_out - window);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| *b - *a <= window);
    if cuts.is_empty() {
        return Ok(first);
    }
    integrate_shot_through(
        model,
        domain.dim,
        domain.is_ball(),
        domain.r_in(),
        (alpha, beta),
        &cuts,
        r_out,
        TOL_VERIFY,
    )
}

/// Sample a shot on a uniform grid of `2 * intervals + 1` nodes.
pub fn sample_shot_uniform(
    shot: &Shot,
    domain: &Domain,
    alpha: f64,
    beta: f64,
    intervals: usize,
) -> ProfileData {
    let grid = uniform_nodes(domain.r_in(), domain.r_out(), 2 * intervals + 1);
    let samples = shot.sample_sorted(&grid);
    let mut out = ProfileData {
        r: grid,
        u: Vec::with_capacity(samples.len()),
        v: Vec::with_capacity(samples.len()),
        du: Vec::with_capacity(samples.len()),
        dv: Vec::with_capacity(samples.len()),
    };
    for (i, &(u, v, du, dv)) in samples.iter().enumerate() {
        let (u, v, du, dv) = if domain.is_ball() && out.r[i] == 0.0 {
            (alpha, beta, 0.0, 0.0)
        } else {
            (u, v, du, dv)
        };
        out.u.push(u);
        out.v.push(v);
        out.du.push(du);
        out.dv.push(dv);
    }
    out
}

/// Discrete flux defects of a sampled profile at its interior nodes:
///
/// ```text
///   (P_{i+1} - P_{i-1}) / (r_{i+1} - r_{i-1}) + r_i^{N-1} H_v(u_i, v_i)
/// ```
///
/// (and symmetrically for `v` with `H_u`), where `P = r^{N-1} u'`. Second
/// order on uniform grids; an exact solution sampled exactly gives zero.
pub fn flux_defects(model: &HamiltonianModel, dim: u32, profile: &ProfileData) -> Vec<(f64, f64, f64)> {
    let n = profile.len();
    let nm1 = dim as i32 - 1;
    let w = |r: f64| r.powi(nm1);
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    for i in 1..n - 1 {
        let dr = profile.r[i + 1] - profile.r[i - 1];
        let dp = w(profile.r[i + 1]) * profile.du[i + 1] - w(profile.r[i - 1]) * profile.du[i - 1];
        let dq = w(profile.r[i + 1]) * profile.dv[i + 1] - w(profile.r[i - 1]) * profile.dv[i - 1];
        let (hu, hv) = model.gradient(profile.u[i], profile.v[i]);
        let wi = w(profile.r[i]);
        out.push((profile.r[i], dp / dr + wi * hv, dq / dr + wi * hu));
    }
    out
}

/// Largest combined flux defect `|defect_u| + |defect_v|` over the grid.
pub fn flux_defect_max(model: &HamiltonianModel, dim: u32, profile: &ProfileData) -> f64 {
    flux_defects(model, dim, profile)
        .iter()
        .fold(0.0f64, |m, &(_, a, b)| m.max(a.abs() + b.abs()))
}

/// Keep every second node of a uniform profile (for defect convergence checks).
pub fn coarsen_profile(profile: &ProfileData) -> ProfileData {
    let take = |xs: &[f64]| xs.iter().step_by(2).copied().collect::<Vec<_>>();
    ProfileData {
        r: take(&profile.r),
        u: take(&profile.u),
        v: take(&profile.v),
        du: take(&profile.du),
        dv: take(&profile.dv),
    }
}

// ─────────────────────────────────────────────────────────────────────────
// CSV persistence
// ─────────────────────────────────────────────────────────────────────────

/// Write a solution as CSV: `# key=value` comment header, then
/// `r,u,v,du,dv` rows with full round-trip precision.
pub fn save_solution_csv(sol: &RadialSolution, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# model={}", sol.model)?;
    writeln!(f, "# N={}", sol.domain.dim)?;
    writeln!(f, "# domain={}", sol.domain)?;
    writeln!(f, "# alpha={:.16e}", sol.alpha)?;
    writeln!(f, "# beta={:.16e}", sol.beta)?;
    writeln!(f, "# residual={:.16e}", sol.residual_norm)?;
    writeln!(f, "# m={} first_sign={} bc_defect={:.16e}", sol.m, sol.first_sign, sol.bc_defect)?;
    writeln!(f, "r,u,v,du,dv")?;
    for i in 0..sol.profile.len() {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            sol.profile.r[i], sol.profile.u[i], sol.profile.v[i], sol.profile.du[i], sol.profile.dv[i]
        )?;
    }
    Ok(())
}

/// Read a solution back from [`save_solution_csv`] output.
pub fn load_solution_csv(path: &std::path::Path) -> Result<RadialSolution> {
    let text = std::fs::read_to_string(path)?;
    let mut header = std::collections::HashMap::new();
    let mut profile = ProfileData { r: vec![], u: vec![], v: vec![], du: vec![], dv: vec![] };
    let mut saw_columns = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            for kv in rest.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            }
            // model/domain values may contain no spaces; keyed split above
            // handles them because they are single tokens.
            continue;
        }
        if !saw_columns {
            if line.trim() != "r,u,v,du,dv" {
                return Err(CoreError::Artifact(format!("unexpected column header `{line}`")));
            }
            saw_columns = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.parse::<f64>().map_err(|_| CoreError::Artifact(format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if vals.len() != 5 {
            return Err(CoreError::Artifact(format!("expected 5 columns, got {}", vals.len())));
        }
        profile.r.push(vals[0]);
        profile.u.push(vals[1]);
        profile.v.push(vals[2]);
        profile.du.push(vals[3]);
        profile.dv.push(vals[4]);
    }
    let get = |k: &str| header.get(k).ok_or_else(|| CoreError::Artifact(format!("missing header key {k}")));
    let model: HamiltonianModel = get("model")?.parse()?;
    let domain: Domain = get("domain")?.parse()?;
    let m: usize = get("m")?.parse().map_err(|_| CoreError::Artifact("bad m".into()))?;
    let first_sign: i8 = get("first_sign")?.parse().map_err(|_| CoreError::Artifact("bad first_sign".into()))?;
    let parse_f = |k: &str| -> Result<f64> {
        get(k)?.parse::<f64>().map_err(|_| CoreError::Artifact(format!("bad float for {k}")))
    };
    Ok(RadialSolution {
        model,
        domain,
        m,
        first_sign,
        alpha: parse_f("alpha")?,
        beta: parse_f("beta")?,
        profile,
        residual_norm: parse_f("residual")?,
        bc_defect: parse_f("bc_defect")?,
    })
}

impl HamiltonianModel {
    /// Whether the model is invariant under swapping `u` and `v`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::LaneEmden { p, q } => (p - q).abs() < 1e-12,
            Self::SeparablePowers { g_terms, f_terms } => g_terms == f_terms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le33() -> HamiltonianModel {
        HamiltonianModel::lane_emden(3.0, 3.0).unwrap()
    }

    fn ball3() -> Domain {
        Domain::ball(1.0, 3).unwrap()
    }

    #[test]
    fn series_start_matches_integration() {
        // Integrate from h0 to 4 h0 and compare against the quartic series;
        // both should agree to far better than the series truncation error.
        let model = le33();
        let shot = integrate_shot(&model, 3, true, 0.0, (2.0, 1.5), 1.0, 1e-12, 0).unwrap();
        let s = shot.series.unwrap();
        for &r in &[2.0 * s.r0, 4.0 * s.r0, 10.0 * s.r0] {
            let (u_series, v_series, du_series, dv_series) = s.eval(r);
            let (u, v, du, dv) = shot.sample(r);
            assert!((u - u_series).abs() < 1e-13, "u at {r}: {u} vs {u_series}");
            assert!((v - v_series).abs() < 1e-13);
            assert!((du - du_series).abs() < 1e-13 * (1.0 + du.abs()));
            assert!((dv - dv_series).abs() < 1e-13 * (1.0 + dv.abs()));
        }
    }

    #[test]
    fn derivative_recovery_is_accurate_near_origin() {
        // u'' (0) = -H_v(alpha,beta)/N; the recovered du/r must approach it.
        let model = le33();
        let (alpha, beta) = (2.0, 1.5);
        let shot = integrate_shot(&model, 3, true, 0.0, (alpha, beta), 1.0, 1e-11, 0).unwrap();
        let upp0 = -model.gradient(alpha, beta).1 / 3.0;
        for &r in &[1e-5, 1e-4, 1e-3] {
            let (_, _, du, _) = shot.sample(r);
            let rel = (du / r - upp0).abs() / upp0.abs();
            assert!(rel < 2e-4 + 40.0 * r * r, "du/r at {r}: rel {rel:.3e}");
        }
    }

    #[test]
    fn fixed_step_oracle_agrees_on_symmetric_scalar_reduction() {
        // For p = q and alpha = beta the system collapses to the scalar cubic
        // equation; a plain fixed-step fourth-order integrator of the scalar
        // radial equation must reproduce the endpoint.
        let model = le33();
        let alpha = 3.0;
        let shot = integrate_shot(&model, 3, true, 0.0, (alpha, alpha), 1.0, 1e-12, 0).unwrap();
        let (u_end, v_end, _, _) = shot.sample(1.0);
        assert!((u_end - v_end).abs() < 1e-10, "diagonal symmetry broken");

        // Scalar oracle: w'' + (2/r) w' + w^3 = 0 as (w, z = w'), RK4.
        let f = |r: f64, y: [f64; 2]| {
            let w3 = y[0] * y[0] * y[0];
            if r == 0.0 {
                // Limit: w'' = -w^3/3 at the origin, w' = 0.
                [y[1], -w3 / 3.0]
            } else {
                [y[1], -2.0 * y[1] / r - w3]
            }
        };
        let h = 1e-5;
        let mut y = [alpha, 0.0];
        let mut r = 0.0;
        while r < 1.0 - 0.5 * h {
            let k1 = f(r, y);
            let k2 = f(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            r += h;
        }
        assert!(
            (u_end - y[0]).abs() < 1e-8,
            "endpoint mismatch: adaptive {u_end:.12e} vs fixed-step {:.12e}",
            y[0]
        );
    }

    #[test]
    fn endpoint_stability_under_tolerance_halving() {
        let model = le33();
        let run = |tol: f64| {
            let shot = integrate_shot(&model, 3, true, 0.0, (1.0, 0.9), 1.0, tol, 0).unwrap();
            shot.sample(1.0)
        };
        let a = run(1e-9);
        let b = run(5e-10);
        assert!((a.0 - b.0).abs() < 1e-8, "u(R): {} vs {}", a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-8, "v(R): {} vs {}", a.1, b.1);
    }

    #[test]
    fn ground_state_matches_classical_cubic_value() {
        // The scalar cubic ground state on the unit ball in dimension 3 has
        // center value equal to the first zero of the standard cubic profile,
        // 6.89684861937... (independent high-accuracy integration).
        let sol = find_solution(&le33(), &ball3(), 1, 1, &ShootParams::default()).unwrap();
        assert!((sol.alpha - 6.8968486193765).abs() < 1e-6, "alpha {:.12}", sol.alpha);
        assert!((sol.alpha - sol.beta).abs() < 1e-9 * sol.alpha.abs());
        assert!(sol.bc_defect <= TOL_BC);
        assert!(sol.residual_norm <= 1e-5, "residual {:.3e}", sol.residual_norm);
    }

    #[test]
    fn two_zone_solution_on_ball() {
        let sol = find_solution(&le33(), &ball3(), 2, 1, &ShootParams::default()).unwrap();
        assert!(sol.alpha > 0.0);
        // One interior sign change per component.
        let signs_u: Vec<i8> = sol.profile.u.iter().filter(|x| x.abs() > 1e-6).map(|x| x.signum() as i8).collect();
        let flips = signs_u.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1, "expected exactly one interior sign flip of u");
        assert!(sol.residual_norm <= 1e-5);
    }

    #[test]
    fn negative_first_zone() {
        let sol = find_solution(&le33(), &ball3(), 1, -1, &ShootParams::default()).unwrap();
        assert!(sol.alpha < 0.0 && sol.beta < 0.0);
        // Nonpositive up to the boundary defect scale.
        let slack = 10.0 * TOL_BC * sol.alpha.abs();
        assert!(sol.profile.u.iter().all(|&x| x <= slack));
    }

    #[test]
    fn asymmetric_exponents_on_ball() {
        let model = HamiltonianModel::lane_emden(2.0, 3.0).unwrap();
        let sol = find_solution(&model, &ball3(), 1, 1, &ShootParams::default()).unwrap();
        assert!(sol.bc_defect <= TOL_BC);
        assert!(sol.residual_norm <= 1e-5, "residual {:.3e}", sol.residual_norm);
        // Components differ but have matching sign structure.
        assert!((sol.alpha - sol.beta).abs() > 1e-3);
        assert!(sol.alpha > 0.0 && sol.beta > 0.0);
    }

    #[test]
    fn annulus_solution() {
        let domain = Domain::annulus(0.5, 1.0, 3).unwrap();
        let sol = find_solution(&le33(), &domain, 1, 1, &ShootParams::default()).unwrap();
        assert!(sol.bc_defect <= TOL_BC);
        assert!(sol.alpha > 0.0, "inner slope should rise into the positive zone");
        // Endpoint values on the stored grid are small.
        assert!(sol.profile.u[0].abs() < 1e-9 && sol.profile.u.last().unwrap().abs() < 1e-7);
    }

    #[test]
    fn separable_model_on_ball() {
        use crate::model::PowerTerm;
        let model = HamiltonianModel::separable(
            vec![PowerTerm { coeff: 0.25, exponent: 4.0 }],
            vec![PowerTerm { coeff: 0.2, exponent: 5.0 }],
        )
        .unwrap();
        let sol = find_solution(&model, &ball3(), 1, 1, &ShootParams::default()).unwrap();
        assert!(sol.bc_defect <= TOL_BC);
        assert!(sol.residual_norm <= 1e-5);
    }

    #[test]
    fn verification_residual_converges_at_second_order() {
        let sol = find_solution(&le33(), &ball3(), 1, 1, &ShootParams::default()).unwrap();
        let fine = verification_profile(&sol.model, &sol.domain, sol.alpha, sol.beta, 4096).unwrap();
        let coarse = coarsen_profile(&fine);
        let d_fine = flux_defect_max(&sol.model, 3, &fine);
        let d_coarse = flux_defect_max(&sol.model, 3, &coarse);
        let ratio = d_coarse / d_fine;
        assert!((2.5..8.0).contains(&ratio), "defect ratio {ratio} (fine {d_fine:.3e})");
    }

    #[test]
    fn scaled_profile_keeps_small_defect() {
        // The scaling family maps solutions to solutions: rescaled fine
        // profiles must stay within a small factor of the original defect.
        let sol = find_solution(&le33(), &ball3(), 1, 1, &ShootParams::default()).unwrap();
        let fine = verification_profile(&sol.model, &sol.domain, sol.alpha, sol.beta, 8192).unwrap();
        let base = flux_defect_max(&sol.model, 3, &fine);
        let scaled = rescale_lane_emden(&fine, 3.0, 3.0, 2.0);
        let d_scaled = flux_defect_max(&sol.model, 3, &scaled);
        assert!(d_scaled <= 10.0 * base, "scaled defect {d_scaled:.3e} vs base {base:.3e}");
    }

    #[test]
    fn corrupted_profile_is_detected() {
        let sol = find_solution(&le33(), &ball3(), 1, 1, &ShootParams::default()).unwrap();
        let mut fine = verification_profile(&sol.model, &sol.domain, sol.alpha, sol.beta, 2048).unwrap();
        let base = flux_defect_max(&sol.model, 3, &fine);
        let mid = fine.len() / 2;
        fine.u[mid] += 1e-4 * sol.alpha.abs();
        let corrupted = flux_defect_max(&sol.model, 3, &fine);
        assert!(corrupted > 100.0 * base, "corruption not visible: {corrupted:.3e} vs {base:.3e}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let sol = find_solution(&le33(), &ball3(), 1, 1, &ShootParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.csv");
        save_solution_csv(&sol, &path).unwrap();
        let back = load_solution_csv(&path).unwrap();
        assert_eq!(sol.model, back.model);
        assert_eq!(sol.domain, back.domain);
        assert_eq!(sol.m, back.m);
        assert_eq!(sol.alpha, back.alpha);
        assert_eq!(sol.beta, back.beta);
        assert_eq!(sol.profile, back.profile);
        assert_eq!(sol.residual_norm, back.residual_norm);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            find_solution(&le33(), &ball3(), 0, 1, &ShootParams::default()),
            Err(CoreError::InvalidConfig(_))
        ));
        assert!(matches!(
            find_solution(&le33(), &ball3(), 1, 0, &ShootParams::default()),
            Err(CoreError::InvalidConfig(_))
        ));
    }
}

/// Test scaffolding: integrate a raw shot (kept out of the public pipeline).
#[doc(hidden)]
pub fn debug_shot(
    model: &HamiltonianModel,
    domain: &Domain,
    params: (f64, f64),
    r_target: f64,
    tol: f64,
) -> Result<Shot> {
    integrate_shot(model, domain.dim, domain.is_ball(), domain.r_in(), params, r_target, tol, 0)
}
