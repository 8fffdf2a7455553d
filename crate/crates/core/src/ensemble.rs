//! Discretized filament ensembles and exact/incremental energy evaluation.
//!
//! A filament is M planar beads ψ(j) = (x, y) at equally spaced heights with
//! periodic layer index, ψ(M+1) ≡ ψ(1). The energy splits into
//!
//! ```text
//! H_self = α Σ_{j,k} |ψ_k(j+1) − ψ_k(j)|² / (2δ)       (self-induction)
//! H_int  = −δ Σ_j Σ_{i<k} ln|ψ_i(j) − ψ_k(j)|          (pair interaction)
//! I      =  δ Σ_{j,k} |ψ_k(j)|²                        (angular momentum)
//! ```
//!
//! with segment length δ = L/M. Coincident beads of two filaments in the
//! same layer are a forbidden state: `h_int` returns +∞ and the move that
//! proposed it is rejected.

use crate::error::{domain, Error, Result};
use std::io::{Read, Write};

/// A planar bead position (x, y).
pub type Planar = [f64; 2];

#[inline]
fn dist_sq(a: Planar, b: Planar) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[inline]
fn norm_sq(a: Planar) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

/// Physical and discretization constants of one model instance.
///
/// δ is derived as L/M and can never be set independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_filaments: usize,
    pub n_segments: usize,
    pub length: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    delta: f64,
}

impl ModelParams {
    pub fn new(
        n_filaments: usize,
        n_segments: usize,
        length: f64,
        alpha: f64,
        beta: f64,
        mu: f64,
    ) -> Result<Self> {
        if n_filaments < 1 {
            return Err(domain("n_filaments must be >= 1"));
        }
        if n_segments < 1 {
            return Err(domain("n_segments must be >= 1"));
        }
        for (name, v) in [("length", length), ("alpha", alpha), ("beta", beta), ("mu", mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            n_filaments,
            n_segments,
            length,
            alpha,
            beta,
            mu,
            delta: length / n_segments as f64,
        })
    }

    /// Segment length δ = L/M.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The scaled (per-filament) parameters α′ = α/N, β′ = βN.
    pub fn scaled(&self) -> crate::meanfield::ScaledParams {
        let n = self.n_filaments as f64;
        crate::meanfield::ScaledParams {
            alpha_p: self.alpha / n,
            beta_p: self.beta * n,
            mu: self.mu,
            length: self.length,
        }
    }
}

/// N filaments × M beads, filament-major with layer stride 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FilamentEnsemble {
    n_filaments: usize,
    n_segments: usize,
    beads: Vec<Planar>,
}

impl FilamentEnsemble {
    /// All beads at the origin.
    pub fn new(n_filaments: usize, n_segments: usize) -> Self {
        Self { n_filaments, n_segments, beads: vec![[0.0, 0.0]; n_filaments * n_segments] }
    }

    /// Straight filaments through the given planar endpoints.
    pub fn straight(endpoints: &[Planar], n_segments: usize) -> Self {
        let mut ens = Self::new(endpoints.len(), n_segments);
        for (f, &pos) in endpoints.iter().enumerate() {
            ens.filament_mut(f).fill(pos);
        }
        ens
    }

    #[inline]
    pub fn n_filaments(&self) -> usize {
        self.n_filaments
    }

    #[inline]
    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    /// Bead j (0-based layer) of filament f.
    #[inline]
    pub fn bead(&self, filament: usize, layer: usize) -> Planar {
        self.beads[filament * self.n_segments + layer]
    }

    #[inline]
    pub fn filament(&self, filament: usize) -> &[Planar] {
        let start = filament * self.n_segments;
        &self.beads[start..start + self.n_segments]
    }

    #[inline]
    pub fn filament_mut(&mut self, filament: usize) -> &mut [Planar] {
        let start = filament * self.n_segments;
        &mut self.beads[start..start + self.n_segments]
    }

    pub fn translate_filament(&mut self, filament: usize, displacement: Planar) {
        for bead in self.filament_mut(filament) {
            bead[0] += displacement[0];
            bead[1] += displacement[1];
        }
    }

    pub fn all_finite(&self) -> bool {
        self.beads.iter().all(|b| b[0].is_finite() && b[1].is_finite())
    }
}

/// Cached energy components of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub h_self: f64,
    pub h_int: f64,
    pub i_n: f64,
    /// −β(H_self + H_int) − μI, the log of the unnormalized Gibbs weight.
    pub total_action: f64,
}

impl EnergyBreakdown {
    pub fn from_parts(h_self: f64, h_int: f64, i_n: f64, p: &ModelParams) -> Self {
        Self { h_self, h_int, i_n, total_action: -p.beta * (h_self + h_int) - p.mu * i_n }
    }
}

/// Σ ln(r²ᵢ) accumulated through a running product, flushed to log space
/// before the product can over- or underflow. One `ln` per ~40 factors
/// instead of one per factor; the chain inner loop lives on this.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumAccumulator {
    log_sum: f64,
    product: f64,
    coincident: bool,
}

impl LogSumAccumulator {
    pub(crate) fn new() -> Self {
        Self { log_sum: 0.0, product: 1.0, coincident: false }
    }

    #[inline]
    pub(crate) fn push_sq(&mut self, r_sq: f64) {
        if r_sq == 0.0 {
            self.coincident = true;
            return;
        }
        self.product *= r_sq;
        if !(1e-256..=1e256).contains(&self.product) {
            self.log_sum += self.product.ln();
            self.product = 1.0;
        }
    }

    /// Σ ln(rᵢ) = ½ Σ ln(r²ᵢ), or −∞ if any radius was zero.
    pub(crate) fn finish_half(self) -> f64 {
        if self.coincident {
            f64::NEG_INFINITY
        } else {
            0.5 * (self.log_sum + self.product.ln())
        }
    }
}

/// Self-induction energy α Σ |Δψ|²/(2δ) with periodic wraparound.
pub fn h_self(ens: &FilamentEnsemble, p: &ModelParams) -> f64 {
    let m = ens.n_segments();
    let mut sum = 0.0;
    for f in 0..ens.n_filaments() {
        let beads = ens.filament(f);
        for j in 0..m {
            sum += dist_sq(beads[(j + 1) % m], beads[j]);
        }
    }
    p.alpha * sum / (2.0 * p.delta())
}

/// Pair interaction −δ Σ_j Σ_{i<k} ln|ψ_i(j) − ψ_k(j)|, each pair counted
/// once. Coincident beads in a layer make the state forbidden: +∞.
pub fn h_int(ens: &FilamentEnsemble, p: &ModelParams) -> f64 {
    let n = ens.n_filaments();
    if n < 2 {
        return 0.0;
    }
    let mut acc = LogSumAccumulator::new();
    for k in 1..n {
        let fk = ens.filament(k);
        for i in 0..k {
            let fi = ens.filament(i);
            for j in 0..ens.n_segments() {
                acc.push_sq(dist_sq(fi[j], fk[j]));
            }
        }
    }
    -p.delta() * acc.finish_half()
}

/// Angular momentum δ Σ |ψ|².
pub fn angular_momentum(ens: &FilamentEnsemble, p: &ModelParams) -> f64 {
    let sum: f64 = (0..ens.n_filaments())
        .map(|f| ens.filament(f).iter().map(|&b| norm_sq(b)).sum::<f64>())
        .sum();
    p.delta() * sum
}

/// Full from-scratch energy evaluation, O(N²M).
pub fn energy_breakdown(ens: &FilamentEnsemble, p: &ModelParams) -> EnergyBreakdown {
    EnergyBreakdown::from_parts(h_self(ens, p), h_int(ens, p), angular_momentum(ens, p), p)
}

/// Change in (H_int, I) if `filament` were rigidly translated by
/// `displacement`. H_self is unchanged by construction. O(NM).
///
/// A proposed coincidence returns ΔH_int = +∞ (the move is then rejected).
pub fn delta_action_translate(
    ens: &FilamentEnsemble,
    p: &ModelParams,
    filament: usize,
    displacement: Planar,
) -> (f64, f64) {
    let m = ens.n_segments();
    let moved = ens.filament(filament);

    // ΔI = δ (2 v·Σψ + M|v|²)
    let (sum_x, sum_y) = moved.iter().fold((0.0, 0.0), |(sx, sy), b| (sx + b[0], sy + b[1]));
    let d_i = p.delta()
        * (2.0 * (displacement[0] * sum_x + displacement[1] * sum_y)
            + m as f64 * norm_sq(displacement));

    if ens.n_filaments() < 2 {
        return (0.0, d_i);
    }

    let mut new_acc = LogSumAccumulator::new();
    let mut old_acc = LogSumAccumulator::new();
    for other in 0..ens.n_filaments() {
        if other == filament {
            continue;
        }
        let beads = ens.filament(other);
        for j in 0..m {
            let shifted = [moved[j][0] + displacement[0], moved[j][1] + displacement[1]];
            new_acc.push_sq(dist_sq(shifted, beads[j]));
            old_acc.push_sq(dist_sq(moved[j], beads[j]));
        }
    }
    let new_half = new_acc.finish_half();
    if new_half == f64::NEG_INFINITY {
        // Proposed coincidence: forbidden state, reject unconditionally.
        return (f64::INFINITY, d_i);
    }
    let d_hint = -p.delta() * (new_half - old_acc.finish_half());
    (d_hint, d_i)
}

/// Change in H_int if `filament`'s beads were replaced by `new_beads`
/// (M entries). Trap and self terms are the proposal's business. O(NM).
pub fn delta_hint_regrow(
    ens: &FilamentEnsemble,
    p: &ModelParams,
    filament: usize,
    new_beads: &[Planar],
) -> f64 {
    assert_eq!(new_beads.len(), ens.n_segments(), "regrow needs all M beads");
    if ens.n_filaments() < 2 {
        return 0.0;
    }
    let old_beads = ens.filament(filament);
    let mut new_acc = LogSumAccumulator::new();
    let mut old_acc = LogSumAccumulator::new();
    for other in 0..ens.n_filaments() {
        if other == filament {
            continue;
        }
        let beads = ens.filament(other);
        for j in 0..ens.n_segments() {
            new_acc.push_sq(dist_sq(new_beads[j], beads[j]));
            old_acc.push_sq(dist_sq(old_beads[j], beads[j]));
        }
    }
    let new_half = new_acc.finish_half();
    if new_half == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    -p.delta() * (new_half - old_acc.finish_half())
}

/// Self-induction energy of a single bead sequence (periodic), used for
/// cache updates when a filament is regrown.
pub(crate) fn filament_self_energy(beads: &[Planar], p: &ModelParams) -> f64 {
    let m = beads.len();
    let mut sum = 0.0;
    for j in 0..m {
        sum += dist_sq(beads[(j + 1) % m], beads[j]);
    }
    p.alpha * sum / (2.0 * p.delta())
}

/// δ Σ |ψ|² of a single bead sequence.
pub(crate) fn filament_trap_term(beads: &[Planar], p: &ModelParams) -> f64 {
    p.delta() * beads.iter().map(|&b| norm_sq(b)).sum::<f64>()
}

// --- ensemble snapshot serialization -------------------------------------
//
// Versioned binary format, little-endian throughout:
//   magic "VFEN" | version u8 | N u64 | M u64 | L, alpha, beta, mu f64
//   | N*M beads as (x, y) f64 pairs, filament-major.

const SNAPSHOT_MAGIC: &[u8; 4] = b"VFEN";
pub const SNAPSHOT_VERSION: u8 = 1;

pub(crate) fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn get_u8(r: &mut impl Read) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

pub fn write_snapshot(w: &mut impl Write, ens: &FilamentEnsemble, p: &ModelParams) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&[SNAPSHOT_VERSION])?;
    put_u64(w, p.n_filaments as u64)?;
    put_u64(w, p.n_segments as u64)?;
    for v in [p.length, p.alpha, p.beta, p.mu] {
        put_f64(w, v)?;
    }
    for bead in &ens.beads {
        put_f64(w, bead[0])?;
        put_f64(w, bead[1])?;
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<(FilamentEnsemble, ModelParams)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("snapshot magic mismatch".into()));
    }
    let version = get_u8(r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = get_u64(r)? as usize;
    let m = get_u64(r)? as usize;
    let length = get_f64(r)?;
    let alpha = get_f64(r)?;
    let beta = get_f64(r)?;
    let mu = get_f64(r)?;
    let p = ModelParams::new(n, m, length, alpha, beta, mu)?;
    let mut ens = FilamentEnsemble::new(n, m);
    for bead in &mut ens.beads {
        bead[0] = get_f64(r)?;
        bead[1] = get_f64(r)?;
    }
    if !ens.all_finite() {
        return Err(Error::Format("snapshot contains non-finite coordinates".into()));
    }
    Ok((ens, p))
}
