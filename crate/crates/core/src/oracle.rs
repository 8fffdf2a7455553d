//! Independent verifiers: closed-form circulant statistics of the free
//! filament, numeric saddle-point location, tiny-ensemble closed forms with
//! quadrature cross-checks, and a from-scratch energy evaluator.
//!
//! Nothing in this module reuses the algebra it is meant to check: the
//! saddle point is found by bisecting the hand-derived derivative of the
//! free energy, the two-vortex average comes from radial integrals, and the
//! energy recomputation walks the ensemble layer-major with per-term logs.

use crate::ensemble::{EnergyBreakdown, FilamentEnsemble, ModelParams};
use crate::error::{domain, Error, Result};
use crate::meanfield::ScaledParams;
use std::f64::consts::TAU;

/// The circulant Gaussian describing one free filament.
///
/// Per planar component the free action is a quadratic form whose
/// eigenvalues (in the discrete Fourier basis) are
///
/// ```text
/// p_q = 2·coupling·(1 − cos(2πq/M)) + trap,   coupling = βα/δ,  trap = 2μδ.
/// ```
#[derive(Debug, Clone, Copy)]
pub struct CirculantSpec {
    pub n_segments: usize,
    pub coupling: f64,
    pub trap: f64,
}

impl CirculantSpec {
    pub fn from_params(p: &ModelParams) -> Self {
        Self {
            n_segments: p.n_segments,
            coupling: p.beta * p.alpha / p.delta(),
            trap: 2.0 * p.mu * p.delta(),
        }
    }

    pub fn eigenvalue(&self, q: usize) -> f64 {
        let m = self.n_segments as f64;
        2.0 * self.coupling * (1.0 - (TAU * q as f64 / m).cos()) + self.trap
    }

    /// ⟨|ψ_j|²⟩ = (2/M) Σ_q 1/p_q (the 2 covers the two planar components).
    pub fn bead_variance(&self) -> f64 {
        let m = self.n_segments;
        let sum: f64 = (0..m).map(|q| 1.0 / self.eigenvalue(q)).sum();
        2.0 * sum / m as f64
    }

    /// ⟨ψ_j · ψ_{j+lag}⟩ = (2/M) Σ_q cos(2πq·lag/M)/p_q.
    pub fn layer_covariance(&self, lag: usize) -> f64 {
        let m = self.n_segments;
        let sum: f64 = (0..m)
            .map(|q| (TAU * (q * lag) as f64 / m as f64).cos() / self.eigenvalue(q))
            .sum();
        2.0 * sum / m as f64
    }
}

/// Exact per-bead mean-square position of a single trap-confined free
/// filament (no interactions), via the circulant eigenvalue sum.
pub fn free_filament_bead_variance(p: &ModelParams) -> f64 {
    CirculantSpec::from_params(p).bead_variance()
}

/// Exact lag-k layer autocovariance of the free filament.
pub fn free_filament_layer_covariance(p: &ModelParams, lag: usize) -> f64 {
    CirculantSpec::from_params(p).layer_covariance(lag)
}

/// Closed-form ⟨R²_MC⟩ for exactly two single-bead vortices:
///
/// splitting the weight |ψ₁−ψ₂|^{βL}·exp(−μL(|ψ₁|²+|ψ₂|²)) into
/// center-of-mass and relative coordinates gives (βL + 4)/(4μL).
pub fn two_vortex_r2_closed_form(p: &ModelParams) -> Result<f64> {
    if p.n_filaments != 2 || p.n_segments != 1 {
        return Err(domain(format!(
            "closed form needs N = 2, M = 1, got N = {}, M = {}",
            p.n_filaments, p.n_segments
        )));
    }
    let bl = p.beta * p.length;
    let mul = p.mu * p.length;
    Ok((bl + 4.0) / (4.0 * mul))
}

/// Same average by numeric quadrature of the radial integrals:
/// ⟨R²⟩ = ⟨|u|²⟩ + ¼⟨|w|²⟩ with u the center of mass and w the separation.
pub fn two_vortex_r2_quadrature(p: &ModelParams) -> Result<f64> {
    if p.n_filaments != 2 || p.n_segments != 1 {
        return Err(domain("quadrature oracle needs N = 2, M = 1"));
    }
    let mul = p.mu * p.length;
    let bl = p.beta * p.length;
    // COM: density ∝ r·exp(−2μL r²); relative: ∝ r^{βL+1}·exp(−μL/2 r²).
    let com = gaussian_moment_ratio(1.0, 2.0 * mul)?;
    let rel = gaussian_moment_ratio(bl + 1.0, 0.5 * mul)?;
    Ok(com + 0.25 * rel)
}

/// ⟨r²⟩ of the density r^s e^{−a r²} on (0, ∞):
/// the ratio ∫ r^{s+2}e^{−ar²} / ∫ r^{s}e^{−ar²}, each integral evaluated
/// by doubling composite Simpson with the integrand shifted to log scale
/// (r^s alone can underflow long before the product is negligible).
fn gaussian_moment_ratio(s: f64, a: f64) -> Result<f64> {
    let log_num = log_gaussian_integral(s + 2.0, a)?;
    let log_den = log_gaussian_integral(s, a)?;
    Ok((log_num - log_den).exp())
}

/// ln ∫₀^∞ r^s e^{−a r²} dr for s ≥ 0, a > 0.
fn log_gaussian_integral(s: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && s >= 0.0) {
        return Err(domain(format!("bad gaussian integral arguments s={s}, a={a}")));
    }
    // Peak of s·ln r − a r² sits at r² = s/(2a).
    let shift = if s > 0.0 {
        let r_pk_sq = s / (2.0 * a);
        0.5 * s * r_pk_sq.ln() - a * r_pk_sq
    } else {
        0.0
    };
    let f = |r: f64| {
        if r <= 0.0 {
            if s == 0.0 { (-shift).exp() } else { 0.0 }
        } else {
            (s * r.ln() - a * r * r - shift).exp()
        }
    };
    let r_max = ((s.max(1.0) + 800.0) / a).sqrt();
    let value = simpson_doubling(&f, 0.0, r_max, 1e-13, 1 << 22)?;
    Ok(value.ln() + shift)
}

/// Composite Simpson, doubling panel counts until two successive estimates
/// agree to `rel_tol`.
fn simpson_doubling(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut n = 64;
    let mut prev = simpson(f, lo, hi, n);
    loop {
        n *= 2;
        let cur = simpson(f, lo, hi, n);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        if n >= max_panels {
            return Err(Error::Solver(format!(
                "Simpson failed to reach {rel_tol} by {max_panels} panels"
            )));
        }
        prev = cur;
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

/// Hand-derived derivative of the ground free energy,
/// f′(λ) = 1/(2√(λα′β′)) − β′/(8(μ − λ/2)).
///
/// Strictly decreasing on (0, 2μ): +∞ at the left edge, −∞ at the right.
fn ground_free_energy_derivative(p: &ScaledParams, lambda: f64) -> f64 {
    1.0 / (2.0 * (lambda * p.alpha_p * p.beta_p).sqrt())
        - p.beta_p / (8.0 * (p.mu - 0.5 * lambda))
}

/// Numerically locates the stationary point of the ground free energy on
/// (0, 2μ) by bisecting its derivative.
///
/// Restricted to the real λ axis the free energy is strictly concave (the
/// steepest-descent contour crosses the ridge at right angles), so the
/// derivative changes sign exactly once and bisection cannot miss it.
/// Golden section on raw function values would stall near the extremum at
/// ~√ε precision; the derivative root is sharp to full precision.
pub fn saddle_eta_numeric(p: &ScaledParams) -> Result<f64> {
    let two_mu = 2.0 * p.mu;
    let mut lo = 1e-9 * p.mu;
    let mut hi = two_mu - 1e-9 * p.mu;
    // Expand toward the edges if a default bracket endpoint sits on the
    // wrong side of the root.
    let mut guard = 0;
    while ground_free_energy_derivative(p, lo) <= 0.0 {
        lo *= 1e-3;
        guard += 1;
        if guard > 90 || lo == 0.0 {
            return Err(Error::Solver("no positive-derivative left bracket".into()));
        }
    }
    guard = 0;
    while ground_free_energy_derivative(p, hi) >= 0.0 {
        hi = two_mu - (two_mu - hi) * 1e-3;
        guard += 1;
        if guard > 90 || hi == two_mu {
            return Err(Error::Solver("no negative-derivative right bracket".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval no longer representable
        }
        if ground_free_energy_derivative(p, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stationary point of the finite-L free energy, from its derivative
/// f′(λ)/L = coth(ωL/2)/(2√(λα′β′)) − β′/(8(μ − λ/2)), again by bisection.
pub fn stationary_free_energy_lambda(p: &ScaledParams) -> Result<f64> {
    let deriv = |lambda: f64| {
        let omega = (lambda / (p.alpha_p * p.beta_p)).sqrt();
        let coth = 1.0 / (0.5 * omega * p.length).tanh();
        coth / (2.0 * (lambda * p.alpha_p * p.beta_p).sqrt())
            - p.beta_p / (8.0 * (p.mu - 0.5 * lambda))
    };
    let two_mu = 2.0 * p.mu;
    let mut lo = 1e-12 * p.mu;
    let mut hi = two_mu - 1e-12 * p.mu;
    if deriv(lo) <= 0.0 || deriv(hi) >= 0.0 {
        return Err(Error::Solver("finite-L bracket failed".into()));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The discarded "−" branch of the saddle-point quadratic,
/// 2μ + (β′/8)(β′²α′ + √(β′⁴α′² + 32α′β′μ)). Always exceeds 2μ, so it can
/// never satisfy the domain constraint; kept only so tests can inspect it.
pub fn rejected_eta_root(p: &ScaledParams) -> f64 {
    let bb_a = p.beta_p * p.beta_p * p.alpha_p;
    let surd = (bb_a * bb_a + 32.0 * p.alpha_p * p.beta_p * p.mu).sqrt();
    2.0 * p.mu + 0.125 * p.beta_p * (bb_a + surd)
}

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= rel_tol * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// From-scratch O(N²M) energy audit. Walks layer-major with one log per
/// pair, deliberately sharing no code with the cached incremental path.
pub fn recompute_energies(ens: &FilamentEnsemble, p: &ModelParams) -> EnergyBreakdown {
    let n = ens.n_filaments();
    let m = ens.n_segments();
    let delta = p.delta();
    let mut self_sum = 0.0;
    let mut int_sum = 0.0;
    let mut trap_sum = 0.0;
    for j in 0..m {
        let j_next = (j + 1) % m;
        for k in 0..n {
            let bead = ens.bead(k, j);
            let next = ens.bead(k, j_next);
            let (dx, dy) = (next[0] - bead[0], next[1] - bead[1]);
            self_sum += dx * dx + dy * dy;
            trap_sum += bead[0] * bead[0] + bead[1] * bead[1];
            for i in 0..k {
                let other = ens.bead(i, j);
                let dist = ((bead[0] - other[0]).powi(2) + (bead[1] - other[1]).powi(2)).sqrt();
                int_sum -= dist.ln();
            }
        }
    }
    EnergyBreakdown::from_parts(
        p.alpha * self_sum / (2.0 * delta),
        delta * int_sum,
        delta * trap_sum,
        p,
    )
}
