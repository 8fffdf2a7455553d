//! Equilibrium statistics of measured configurations and the model-validity
//! diagnostics built from them.
//!
//! Per configuration:
//!
//! ```text
//! R²  = (MN)⁻¹ Σ_{i,k} |ψ_i(k)|²                 mean square position
//! A²  = (MN)⁻¹ Σ_{i,k} |ψ_i(k) − ψ_i(1)|²        mean square amplitude
//! a²  = (MN)⁻¹ Σ_{i,k} |ψ_i(k) − ψ_i(k+1)|²      amplitude per segment
//! d²  = N⁻¹ Σ_i min_{j≠i, k} |ψ_i(k) − ψ_j(k)|²  nearest-neighbor distance
//! ```
//!
//! d² takes same-layer distances only (unequal-layer pairs never interact).
//! Aggregation uses blocking for autocorrelation-corrected error bars.

use crate::ensemble::{EnergyBreakdown, FilamentEnsemble, ModelParams};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[inline]
fn dist_sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Mean square vortex position (not translation invariant).
pub fn r2_mc(ens: &FilamentEnsemble) -> f64 {
    let mut sum = 0.0;
    for f in 0..ens.n_filaments() {
        for bead in ens.filament(f) {
            sum += bead[0] * bead[0] + bead[1] * bead[1];
        }
    }
    sum / (ens.n_filaments() * ens.n_segments()) as f64
}

/// Mean square amplitude: spread of each filament around its own bead 1.
pub fn amplitude_sq(ens: &FilamentEnsemble) -> f64 {
    let mut sum = 0.0;
    for f in 0..ens.n_filaments() {
        let beads = ens.filament(f);
        let anchor = beads[0];
        for &bead in beads {
            sum += dist_sq(bead, anchor);
        }
    }
    sum / (ens.n_filaments() * ens.n_segments()) as f64
}

/// Mean square amplitude per segment (periodic wraparound).
pub fn amplitude_sq_per_segment(ens: &FilamentEnsemble) -> f64 {
    let m = ens.n_segments();
    let mut sum = 0.0;
    for f in 0..ens.n_filaments() {
        let beads = ens.filament(f);
        for k in 0..m {
            sum += dist_sq(beads[k], beads[(k + 1) % m]);
        }
    }
    sum / (ens.n_filaments() * m) as f64
}

/// Mean square nearest-neighbor distance; `None` for a single filament.
pub fn nn_distance_sq(ens: &FilamentEnsemble) -> Option<f64> {
    let n = ens.n_filaments();
    if n < 2 {
        return None;
    }
    let m = ens.n_segments();
    let mut total = 0.0;
    for i in 0..n {
        let fi = ens.filament(i);
        let mut min_sq = f64::INFINITY;
        for j in 0..n {
            if j == i {
                continue;
            }
            let fj = ens.filament(j);
            for k in 0..m {
                let d = dist_sq(fi[k], fj[k]);
                if d < min_sq {
                    min_sq = d;
                }
            }
        }
        total += min_sq;
    }
    Some(total / n as f64)
}

/// The per-configuration observable values fed into aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotObservables {
    pub r2_mc: f64,
    pub a2_amp: f64,
    pub a2_seg: f64,
    pub d2_nn: Option<f64>,
    /// Total energy H = H_self + H_int of the configuration.
    pub energy: f64,
}

/// Measures one configuration. The energy comes from the caller's cache so
/// measurement never pays the O(N²M) interaction sum twice.
pub fn snapshot(ens: &FilamentEnsemble, energy: &EnergyBreakdown) -> SnapshotObservables {
    let s = SnapshotObservables {
        r2_mc: r2_mc(ens),
        a2_amp: amplitude_sq(ens),
        a2_seg: amplitude_sq_per_segment(ens),
        d2_nn: nn_distance_sq(ens),
        energy: energy.h_self + energy.h_int,
    };
    // Triangle-inequality bound linking adjacent beads to the anchor.
    debug_assert!(s.a2_seg <= 4.0 * s.a2_amp + 1e-12 * s.a2_amp.max(1.0));
    s
}

/// Standard errors of the mean, blocking-corrected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub r2_mc: f64,
    pub a2_amp: f64,
    pub a2_seg: f64,
    pub d2_nn: Option<f64>,
}

/// Aggregated equilibrium statistics of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub r2_mc: f64,
    pub a2_amp: f64,
    pub a2_seg: f64,
    pub d2_nn: Option<f64>,
    pub energy_mean: f64,
    pub energy_var: f64,
    pub n_samples: usize,
    pub std_errors: StdErrors,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn naive_stderr(v: &[f64]) -> f64 {
    (variance(v) / v.len() as f64).sqrt()
}

/// Fewest blocks at which a blocking level still contributes an estimate.
const MIN_BLOCKS: usize = 32;

/// Standard error of the mean of a correlated series by the blocking
/// method: halve by pair-averaging until fewer than `MIN_BLOCKS` blocks
/// remain and take the largest (plateau) estimate seen.
pub fn blocked_stderr(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let mut best = naive_stderr(series);
    let mut blocks = series.to_vec();
    while blocks.len() / 2 >= MIN_BLOCKS {
        blocks = blocks.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        best = best.max(naive_stderr(&blocks));
    }
    best
}

/// Effective number of independent samples implied by the blocking
/// analysis: s²/SE², which equals n when the series is white.
pub fn effective_samples(series: &[f64]) -> f64 {
    let se = blocked_stderr(series);
    if se == 0.0 {
        return series.len() as f64;
    }
    variance(series) / (se * se)
}

/// Arithmetic means with blocking error bars over a snapshot series.
pub fn aggregate(snapshots: &[SnapshotObservables]) -> Result<ObservableRecord> {
    if snapshots.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "aggregation needs at least 2 snapshots, got {}",
            snapshots.len()
        )));
    }
    let r2: Vec<f64> = snapshots.iter().map(|s| s.r2_mc).collect();
    let a2_amp: Vec<f64> = snapshots.iter().map(|s| s.a2_amp).collect();
    let a2_seg: Vec<f64> = snapshots.iter().map(|s| s.a2_seg).collect();
    let energy: Vec<f64> = snapshots.iter().map(|s| s.energy).collect();
    let d2: Option<Vec<f64>> = snapshots.iter().map(|s| s.d2_nn).collect();

    Ok(ObservableRecord {
        r2_mc: mean(&r2),
        a2_amp: mean(&a2_amp),
        a2_seg: mean(&a2_seg),
        d2_nn: d2.as_ref().map(|v| mean(v)),
        energy_mean: mean(&energy),
        energy_var: variance(&energy),
        n_samples: snapshots.len(),
        std_errors: StdErrors {
            r2_mc: blocked_stderr(&r2),
            a2_amp: blocked_stderr(&a2_amp),
            a2_seg: blocked_stderr(&a2_seg),
            d2_nn: d2.as_ref().map(|v| blocked_stderr(v)),
        },
    })
}

/// Default operational reading of "a ≪ L/M": the ratio must stay below 0.1.
pub const DEFAULT_STRAIGHTNESS_RATIO: f64 = 0.1;

/// Asymptotic-validity diagnostics of one aggregated record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityFlags {
    /// √(a²)·M/L < threshold: segments stay much shorter than their rise.
    pub straight_ok: bool,
    /// d² > A² strictly: filaments keep farther apart than they are wide.
    pub no_braiding: bool,
    pub threshold_ratio: f64,
}

/// Pure function of a record and the model constants. With a single
/// filament there is nothing to braid with, so `no_braiding` holds.
pub fn validity_flags(
    record: &ObservableRecord,
    p: &ModelParams,
    threshold_ratio: f64,
) -> ValidityFlags {
    let ratio = record.a2_seg.sqrt() * p.n_segments as f64 / p.length;
    ValidityFlags {
        straight_ok: ratio < threshold_ratio,
        no_braiding: record.d2_nn.map(|d2| d2 > record.a2_amp).unwrap_or(true),
        threshold_ratio,
    }
}
