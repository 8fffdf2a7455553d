//! Versioned binary checkpointing of a driven chain.
//!
//! Restoring a checkpoint reproduces the exact continuation of the original
//! trajectory: beads, energy cache, the full energy trace, the ChaCha seed /
//! stream / word position, counters, autotune window and driver phase are
//! all stored bit-exactly (little-endian f64 throughout). A config hash
//! written at save time is verified on load so a checkpoint can never be
//! resumed under a different configuration.
//!
//! Layout (version 1):
//!
//! ```text
//! "VFCK" | version u8 | config_hash u64
//! | ModelParams:   N u64, M u64, L, alpha, beta, mu (f64)
//! | SamplerConfig: halfwidth f64, moves u64, burn_in u64, interval u64,
//! |                window u64, tol f64, autotune u8, init_side f64
//! | chain: sweep_index u64, delta f64, frozen u8, counters 4×u64,
//! |        tune 2×u64, energy 4×f64, trace_len u64, trace f64…,
//! |        rng seed [u8;32], rng stream u64, rng word_pos u128,
//! |        beads 2·N·M × f64
//! | driver: n_snapshots u64, emitted u64, in_measure u64, phase u8,
//! |         equilibrated u8, cap_present u8, cap u64, hit_cap u8
//! | aux: len u64, bytes (caller-owned blob, e.g. harness bookkeeping)
//! ```

use super::free::FreeFilamentSampler;
use super::{ChainDriver, ChainState, MoveCounters, Phase, SamplerConfig};
use crate::ensemble::{
    get_f64, get_u64, get_u8, put_f64, put_u64, FilamentEnsemble, ModelParams,
};
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

const CHECKPOINT_MAGIC: &[u8; 4] = b"VFCK";
pub const CHECKPOINT_VERSION: u8 = 1;

pub fn write_checkpoint(
    w: &mut impl Write,
    driver: &ChainDriver,
    config_hash: u64,
    aux: &[u8],
) -> Result<()> {
    let chain = &driver.chain;
    let p = &chain.params;
    let cfg = &chain.config;

    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&[CHECKPOINT_VERSION])?;
    put_u64(w, config_hash)?;

    put_u64(w, p.n_filaments as u64)?;
    put_u64(w, p.n_segments as u64)?;
    for v in [p.length, p.alpha, p.beta, p.mu] {
        put_f64(w, v)?;
    }

    put_f64(w, cfg.translation_halfwidth)?;
    put_u64(w, cfg.moves_per_sweep as u64)?;
    put_u64(w, cfg.burn_in_sweeps as u64)?;
    put_u64(w, cfg.measure_interval as u64)?;
    put_u64(w, cfg.equilibration_window as u64)?;
    put_f64(w, cfg.equilibration_tol)?;
    w.write_all(&[cfg.autotune as u8])?;
    put_f64(w, cfg.init_square_side)?;

    put_u64(w, chain.sweep_index)?;
    put_f64(w, chain.delta)?;
    w.write_all(&[chain.delta_frozen as u8])?;
    for c in [
        chain.counters.translate_proposed,
        chain.counters.translate_accepted,
        chain.counters.regrow_proposed,
        chain.counters.regrow_accepted,
        chain.tune_proposed,
        chain.tune_accepted,
    ] {
        put_u64(w, c)?;
    }
    for v in [
        chain.energy.h_self,
        chain.energy.h_int,
        chain.energy.i_n,
        chain.energy.total_action,
    ] {
        put_f64(w, v)?;
    }
    put_u64(w, chain.energy_trace.len() as u64)?;
    for &v in &chain.energy_trace {
        put_f64(w, v)?;
    }

    w.write_all(&chain.rng.get_seed())?;
    put_u64(w, chain.rng.get_stream())?;
    w.write_all(&chain.rng.get_word_pos().to_le_bytes())?;

    for f in 0..p.n_filaments {
        for bead in chain.ensemble.filament(f) {
            put_f64(w, bead[0])?;
            put_f64(w, bead[1])?;
        }
    }

    put_u64(w, driver.n_snapshots)?;
    put_u64(w, driver.snapshots_emitted)?;
    put_u64(w, driver.sweeps_in_measure)?;
    let phase = match driver.phase {
        Phase::BurnIn => 0u8,
        Phase::Measure => 1,
        Phase::Done => 2,
    };
    w.write_all(&[phase, driver.equilibrated as u8])?;
    w.write_all(&[driver.sweep_cap.is_some() as u8])?;
    put_u64(w, driver.sweep_cap.unwrap_or(0))?;
    w.write_all(&[driver.hit_cap as u8])?;

    put_u64(w, aux.len() as u64)?;
    w.write_all(aux)?;
    Ok(())
}

/// Restores a driver from a checkpoint. When `expected_hash` is given, a
/// mismatch with the stored config hash is a hard error.
pub fn read_checkpoint(
    r: &mut impl Read,
    expected_hash: Option<u64>,
) -> Result<(ChainDriver, Vec<u8>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("checkpoint magic mismatch".into()));
    }
    let version = get_u8(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let stored_hash = get_u64(r)?;
    if let Some(expect) = expected_hash {
        if stored_hash != expect {
            return Err(Error::Format(format!(
                "config hash mismatch: checkpoint {stored_hash:#018x}, expected {expect:#018x}"
            )));
        }
    }

    let n = get_u64(r)? as usize;
    let m = get_u64(r)? as usize;
    let length = get_f64(r)?;
    let alpha = get_f64(r)?;
    let beta = get_f64(r)?;
    let mu = get_f64(r)?;
    let params = ModelParams::new(n, m, length, alpha, beta, mu)?;

    let config = SamplerConfig {
        translation_halfwidth: get_f64(r)?,
        moves_per_sweep: get_u64(r)? as usize,
        burn_in_sweeps: get_u64(r)? as usize,
        measure_interval: get_u64(r)? as usize,
        equilibration_window: get_u64(r)? as usize,
        equilibration_tol: get_f64(r)?,
        autotune: get_u8(r)? != 0,
        init_square_side: get_f64(r)?,
    };
    config.validate()?;

    let sweep_index = get_u64(r)?;
    let delta = get_f64(r)?;
    let delta_frozen = get_u8(r)? != 0;
    let counters = MoveCounters {
        translate_proposed: get_u64(r)?,
        translate_accepted: get_u64(r)?,
        regrow_proposed: get_u64(r)?,
        regrow_accepted: get_u64(r)?,
    };
    if counters.translate_accepted > counters.translate_proposed
        || counters.regrow_accepted > counters.regrow_proposed
    {
        return Err(Error::Format("corrupt counters: acceptances exceed proposals".into()));
    }
    let tune_proposed = get_u64(r)?;
    let tune_accepted = get_u64(r)?;

    let h_self = get_f64(r)?;
    let h_int = get_f64(r)?;
    let i_n = get_f64(r)?;
    let total_action = get_f64(r)?;

    let trace_len = get_u64(r)? as usize;
    let mut energy_trace = Vec::with_capacity(trace_len);
    let mut trace_prefix = Vec::with_capacity(trace_len);
    let mut running = 0.0;
    for _ in 0..trace_len {
        let v = get_f64(r)?;
        running += v;
        energy_trace.push(v);
        trace_prefix.push(running);
    }

    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let stream = get_u64(r)?;
    let mut word_pos_bytes = [0u8; 16];
    r.read_exact(&mut word_pos_bytes)?;
    let word_pos = u128::from_le_bytes(word_pos_bytes);
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);

    let mut ensemble = FilamentEnsemble::new(n, m);
    for f in 0..n {
        for bead in ensemble.filament_mut(f) {
            bead[0] = get_f64(r)?;
            bead[1] = get_f64(r)?;
        }
    }
    if !ensemble.all_finite() {
        return Err(Error::Format("checkpoint contains non-finite coordinates".into()));
    }

    let free_sampler = FreeFilamentSampler::new(&params);
    let chain = ChainState {
        scratch: vec![[0.0, 0.0]; params.n_segments],
        params,
        config,
        ensemble,
        energy: crate::ensemble::EnergyBreakdown { h_self, h_int, i_n, total_action },
        rng,
        counters,
        sweep_index,
        delta,
        delta_frozen,
        free_sampler,
        energy_trace,
        trace_prefix,
        tune_proposed,
        tune_accepted,
    };

    let n_snapshots = get_u64(r)?;
    let snapshots_emitted = get_u64(r)?;
    let sweeps_in_measure = get_u64(r)?;
    let phase = match get_u8(r)? {
        0 => Phase::BurnIn,
        1 => Phase::Measure,
        2 => Phase::Done,
        other => return Err(Error::Format(format!("bad phase byte {other}"))),
    };
    let equilibrated = get_u8(r)? != 0;
    let cap_present = get_u8(r)? != 0;
    let cap = get_u64(r)?;
    let hit_cap = get_u8(r)? != 0;

    let driver = ChainDriver {
        chain,
        n_snapshots,
        snapshots_emitted,
        sweeps_in_measure,
        phase,
        equilibrated,
        sweep_cap: cap_present.then_some(cap),
        hit_cap,
    };

    let aux_len = get_u64(r)? as usize;
    let mut aux = vec![0u8; aux_len];
    r.read_exact(&mut aux)?;
    Ok((driver, aux))
}
