//! Radial grids.
//!
//! Output and spectral grids cluster nodes near the inner endpoint through a
//! fixed smooth parameter map `g : [0,1] -> [0,1]`. The map does not depend
//! on the node count, so doubling the number of intervals halves every
//! spacing uniformly; two-grid Richardson extrapolation stays valid on these
//! grids.
//!
//! The map integrates the weight `w(t) = exp(beta * min(t, frac))`: spacings
//! grow geometrically over the first `frac` of the parameter interval and
//! stay uniform afterwards. `beta` is chosen so that at the reference
//! resolution the geometric growth ratio per interval equals
//! [`constants::GRID_RATIO`].

use crate::constants::{GRID_CLUSTER_FRAC, GRID_RATIO, GRID_REF_INTERVALS};

/// Resolution-independent clustering map for radial grids.
#[derive(Debug, Clone)]
pub struct GridMap {
    beta: f64,
    frac: f64,
    /// Cumulative weight at `frac` and at 1, cached for evaluation.
    cum_at_frac: f64,
    total: f64,
}

impl GridMap {
    /// Map with explicit clustering strength and clustered fraction.
    pub fn new(beta: f64, frac: f64) -> Self {
        assert!(beta > 0.0 && (0.0..1.0).contains(&frac));
        let cum_at_frac = ((beta * frac).exp() - 1.0) / beta;
        let total = cum_at_frac + (1.0 - frac) * (beta * frac).exp();
        Self { beta, frac, cum_at_frac, total }
    }

    /// The crate-wide reference map (ratio 1.02 at 2047 intervals, clustered
    /// over the first quarter of the parameter interval).
    pub fn reference() -> Self {
        Self::new(GRID_REF_INTERVALS as f64 * GRID_RATIO.ln(), GRID_CLUSTER_FRAC)
    }

    /// Monotone map with `g(0) = 0`, `g(1) = 1`.
    pub fn eval(&self, t: f64) -> f64 {
        let cum = if t <= self.frac {
            ((self.beta * t).exp() - 1.0) / self.beta
        } else {
            self.cum_at_frac + (t - self.frac) * (self.beta * self.frac).exp()
        };
        cum / self.total
    }

    /// `n_nodes` grid points on `[r_in, r_out]`, clustered near `r_in`.
    /// Endpoints are exact.
    pub fn nodes(&self, r_in: f64, r_out: f64, n_nodes: usize) -> Vec<f64> {
        assert!(n_nodes >= 2 && r_out > r_in);
        let span = r_out - r_in;
        let mut out = Vec::with_capacity(n_nodes);
        out.push(r_in);
        for i in 1..n_nodes - 1 {
            let t = i as f64 / (n_nodes - 1) as f64;
            out.push(r_in + span * self.eval(t));
        }
        out.push(r_out);
        out
    }
}

/// Reference clustered grid (see [`GridMap::reference`]).
pub fn clustered_nodes(r_in: f64, r_out: f64, n_nodes: usize) -> Vec<f64> {
    GridMap::reference().nodes(r_in, r_out, n_nodes)
}

/// Uniform grid with exact endpoints.
pub fn uniform_nodes(r_in: f64, r_out: f64, n_nodes: usize) -> Vec<f64> {
    assert!(n_nodes >= 2 && r_out > r_in);
    let span = r_out - r_in;
    let h = span / (n_nodes - 1) as f64;
    let mut out: Vec<f64> = (0..n_nodes).map(|i| r_in + i as f64 * h).collect();
    out[n_nodes - 1] = r_out;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotonicity() {
        let g = clustered_nodes(0.5, 2.0, 777);
        assert_eq!(g[0], 0.5);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn doubling_is_nested() {
        // Coarse nodes must reappear exactly on the doubled grid, otherwise
        // two-grid extrapolation on these meshes is meaningless.
        let coarse = clustered_nodes(0.0, 1.0, 1025);
        let fine = clustered_nodes(0.0, 1.0, 2049);
        for (i, &rc) in coarse.iter().enumerate() {
            assert_eq!(rc, fine[2 * i], "node {i} not nested");
        }
    }

    #[test]
    fn doubling_halves_spacings() {
        let coarse = clustered_nodes(0.0, 1.0, 513);
        let fine = clustered_nodes(0.0, 1.0, 1025);
        for i in 0..coarse.len() - 1 {
            let hc = coarse[i + 1] - coarse[i];
            let hf = fine[2 * i + 1] - fine[2 * i];
            assert!((hf / hc - 0.5).abs() < 0.011, "interval {i}: ratio {}", hf / hc);
        }
    }

    #[test]
    fn reference_ratio_and_first_spacing() {
        let g = clustered_nodes(0.0, 1.0, 2048);
        let ratio = (g[2] - g[1]) / (g[1] - g[0]);
        assert!((ratio - GRID_RATIO).abs() < 1e-4, "ratio {ratio}");
        // First spacing is ~2.5e-8 of the span: deep clustering at the origin.
        assert!(g[1] < 5e-8 && g[1] > 5e-9, "h_first {}", g[1]);
        // Outer zone is uniform.
        let n = g.len();
        let hu1 = g[n - 1] - g[n - 2];
        let hu2 = g[n - 2] - g[n - 3];
        assert!((hu1 / hu2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_grid_spacing() {
        let g = uniform_nodes(1.0, 3.0, 5);
        for (i, &r) in g.iter().enumerate() {
            assert!((r - (1.0 + 0.5 * i as f64)).abs() < 1e-15);
        }
    }
}
