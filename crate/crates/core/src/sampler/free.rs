//! Exact sampling of the free (non-interacting) filament measure.
//!
//! Per planar component the free action of one filament is the quadratic
//! form xᵀAx with A the periodic tridiagonal k(2I − S − Sᵀ) + tI, where
//! k = βα/(2δ) is the segment spring and t = μδ the per-bead trap. The
//! sampler factors the measure as
//!
//!   bead 1  ~  N(0, 1/(2s)),  s the Schur complement of A onto bead 1,
//!   beads 2..M | bead 1  ~  N(w·x₁, (2T)⁻¹),
//!
//! where T is the interior tridiagonal (conditioning on bead 1 cuts the
//! cycle open) and w solves T w = k(e₁ + e_{M−1}). Everything reduces to
//! one O(M) Cholesky factorization, done once per chain; each draw is one
//! back-substitution per component. No approximation is involved anywhere,
//! which is what lets the Metropolis filter ignore all but the interaction
//! term.

use crate::ensemble::{ModelParams, Planar};
use rand::Rng;
use rand_distr::StandardNormal;

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone)]
pub(crate) struct FreeFilamentSampler {
    n_segments: usize,
    /// Per-component standard deviation of the bead-1 marginal.
    bead1_sigma: f64,
    /// Cholesky factor L of the interior tridiagonal T = L Lᵀ.
    chol_diag: Vec<f64>,
    chol_sub: Vec<f64>,
    /// Conditional mean of interior bead j per unit bead-1 coordinate.
    mean_profile: Vec<f64>,
}

impl FreeFilamentSampler {
    pub(crate) fn new(p: &ModelParams) -> Self {
        let m = p.n_segments;
        let delta = p.delta();
        let k = p.beta * p.alpha / (2.0 * delta);
        let t = p.mu * delta;

        if m == 1 {
            return Self {
                n_segments: 1,
                bead1_sigma: (1.0 / (2.0 * t)).sqrt(),
                chol_diag: Vec::new(),
                chol_sub: Vec::new(),
                mean_profile: Vec::new(),
            };
        }

        let n = m - 1;
        // T = tridiag(-k, 2k + t, -k); for M = 2 the single interior bead
        // couples to bead 1 through both links, which only changes b.
        let mut chol_diag = vec![0.0; n];
        let mut chol_sub = vec![0.0; n.saturating_sub(1)];
        let diag = 2.0 * k + t;
        chol_diag[0] = diag.sqrt();
        for i in 1..n {
            chol_sub[i - 1] = -k / chol_diag[i - 1];
            chol_diag[i] = (diag - chol_sub[i - 1] * chol_sub[i - 1]).sqrt();
        }

        // b = coupling of the interior block to bead 1.
        let mut b = vec![0.0; n];
        b[0] += k;
        b[n - 1] += k;

        // w = T⁻¹ b via the factorization: forward L u = b, back Lᵀ w = u.
        let mut u = vec![0.0; n];
        u[0] = b[0] / chol_diag[0];
        for i in 1..n {
            u[i] = (b[i] - chol_sub[i - 1] * u[i - 1]) / chol_diag[i];
        }
        let mut w = vec![0.0; n];
        w[n - 1] = u[n - 1] / chol_diag[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = (u[i] - chol_sub[i] * w[i + 1]) / chol_diag[i];
        }

        // Schur complement of A onto bead 1: s = (2k + t) − b·w.
        let s = diag - b.iter().zip(&w).map(|(bi, wi)| bi * wi).sum::<f64>();

        Self {
            n_segments: m,
            bead1_sigma: (1.0 / (2.0 * s)).sqrt(),
            chol_diag,
            chol_sub,
            mean_profile: w,
        }
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn bead1_sigma(&self) -> f64 {
        self.bead1_sigma
    }

    /// Conditional mean profile w (interior bead j per unit of bead 1).
    #[cfg(test)]
    pub(crate) fn mean_profile(&self) -> &[f64] {
        &self.mean_profile
    }

    /// Draws beads 2..M of the free measure conditioned on bead 1,
    /// writing them into `out` (length M − 1, layer order).
    pub(crate) fn sample_conditional_into<R: Rng>(
        &self,
        bead1: Planar,
        rng: &mut R,
        out: &mut [Planar],
    ) {
        let n = self.n_segments - 1;
        debug_assert_eq!(out.len(), n);
        for c in 0..2 {
            for slot in out.iter_mut() {
                slot[c] = rng.sample::<f64, _>(StandardNormal);
            }
            // Fluctuation: solve Lᵀ y = z/√2 in place (cov = (2T)⁻¹).
            out[n - 1][c] = out[n - 1][c] * INV_SQRT2 / self.chol_diag[n - 1];
            for i in (0..n - 1).rev() {
                out[i][c] =
                    (out[i][c] * INV_SQRT2 - self.chol_sub[i] * out[i + 1][c]) / self.chol_diag[i];
            }
            for (slot, w) in out.iter_mut().zip(&self.mean_profile) {
                slot[c] += bead1[c] * w;
            }
        }
    }

    /// Draws a complete free filament (all M beads) exactly.
    pub(crate) fn sample_full_into<R: Rng>(&self, rng: &mut R, out: &mut [Planar]) {
        debug_assert_eq!(out.len(), self.n_segments);
        let bead1 = [
            self.bead1_sigma * rng.sample::<f64, _>(StandardNormal),
            self.bead1_sigma * rng.sample::<f64, _>(StandardNormal),
        ];
        out[0] = bead1;
        if self.n_segments > 1 {
            let (head, rest) = out.split_at_mut(1);
            self.sample_conditional_into(head[0], rng, rest);
        }
    }
}
