//! Markov-chain Monte Carlo over filament ensembles.
//!
//! Two moves, each picked with probability ½:
//!
//! * **translate** — a random filament is rigidly shifted by a vector
//!   uniform in [−Δ, Δ]². Self-induction is unchanged, so the Metropolis
//!   exponent is −βΔH_int − μΔI.
//! * **regrow** — a random filament keeps bead 1 (its periodic end-point)
//!   and redraws beads 2..M exactly from the free measure conditioned on
//!   bead 1. Because the proposal carries the full free action, only
//!   −βΔH_int enters the acceptance.
//!
//! One chain owns one ChaCha stream; identical seeds give bit-identical
//! trajectories. Equilibration is declared when the cumulative mean of the
//! total energy stops drifting.

mod checkpoint;
mod free;

pub use checkpoint::{read_checkpoint, write_checkpoint};

use crate::ensemble::{
    self, energy_breakdown, EnergyBreakdown, FilamentEnsemble, ModelParams, Planar,
};
use crate::error::{domain, Error, Result};
use free::FreeFilamentSampler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tuning and scheduling knobs of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Initial half-width Δ of the square translation proposal.
    pub translation_halfwidth: f64,
    /// Moves per sweep; the conventional choice is N.
    pub moves_per_sweep: usize,
    /// Upper bound on burn-in sweeps (burn-in ends early once equilibrated).
    pub burn_in_sweeps: usize,
    /// Sweeps between measurement snapshots.
    pub measure_interval: usize,
    /// Window W of the cumulative-mean equilibration test.
    pub equilibration_window: usize,
    /// Relative tolerance ε of the equilibration test.
    pub equilibration_tol: f64,
    /// Adapt Δ toward 30–50% acceptance during burn-in.
    pub autotune: bool,
    /// Side of the square the initial straight filaments are scattered in.
    pub init_square_side: f64,
}

impl SamplerConfig {
    pub fn for_model(p: &ModelParams) -> Self {
        Self {
            translation_halfwidth: 1.0,
            moves_per_sweep: p.n_filaments,
            burn_in_sweeps: 5000,
            measure_interval: 2,
            equilibration_window: 500,
            equilibration_tol: 1e-3,
            autotune: true,
            init_square_side: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.translation_halfwidth > 0.0 && self.translation_halfwidth.is_finite()) {
            return Err(domain("translation_halfwidth must be positive"));
        }
        for (name, v) in [
            ("moves_per_sweep", self.moves_per_sweep),
            ("burn_in_sweeps", self.burn_in_sweeps),
            ("measure_interval", self.measure_interval),
            ("equilibration_window", self.equilibration_window),
        ] {
            if v < 1 {
                return Err(domain(format!("{name} must be >= 1")));
            }
        }
        if !(self.equilibration_tol > 0.0 && self.equilibration_tol < 1.0) {
            return Err(domain("equilibration_tol must lie in (0, 1)"));
        }
        if !(self.init_square_side > 0.0 && self.init_square_side.is_finite()) {
            return Err(domain("init_square_side must be positive"));
        }
        Ok(())
    }
}

/// One chain = one ChaCha stream. `stream` separates chains sharing a
/// master seed (the sweep harness uses the β index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSeed {
    pub master: u64,
    pub stream: u64,
}

impl ChainSeed {
    fn build_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Proposal/acceptance counts per move type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounters {
    pub translate_proposed: u64,
    pub translate_accepted: u64,
    pub regrow_proposed: u64,
    pub regrow_accepted: u64,
}

impl MoveCounters {
    pub fn translate_rate(&self) -> f64 {
        if self.translate_proposed == 0 {
            0.0
        } else {
            self.translate_accepted as f64 / self.translate_proposed as f64
        }
    }

    pub fn regrow_rate(&self) -> f64 {
        if self.regrow_proposed == 0 {
            0.0
        } else {
            self.regrow_accepted as f64 / self.regrow_proposed as f64
        }
    }
}

/// Sweeps between from-scratch cache refreshes (and, in debug builds,
/// cache-vs-recomputation assertions).
const CACHE_REFRESH_INTERVAL: u64 = 1024;
/// Sweeps between autotune adjustments during burn-in.
const TUNE_INTERVAL: u64 = 32;

/// A running chain: ensemble, energy cache, RNG stream and counters.
#[derive(Debug, Clone)]
pub struct ChainState {
    params: ModelParams,
    config: SamplerConfig,
    ensemble: FilamentEnsemble,
    energy: EnergyBreakdown,
    rng: ChaCha8Rng,
    counters: MoveCounters,
    sweep_index: u64,
    delta: f64,
    delta_frozen: bool,
    free_sampler: FreeFilamentSampler,
    /// Total energy H per sweep, with running prefix sums for O(1)
    /// cumulative-mean queries.
    energy_trace: Vec<f64>,
    trace_prefix: Vec<f64>,
    tune_proposed: u64,
    tune_accepted: u64,
    scratch: Vec<Planar>,
}

impl ChainState {
    pub fn new(params: ModelParams, config: SamplerConfig, seed: ChainSeed) -> Result<Self> {
        config.validate()?;
        let mut rng = seed.build_rng();
        let side = config.init_square_side;
        let (n, m) = (params.n_filaments, params.n_segments);

        // Straight filaments at end-points uniform in the init square.
        // Coincident end-points have probability zero; redraw if they occur.
        let mut ensemble = FilamentEnsemble::new(n, m);
        let mut energy = EnergyBreakdown::from_parts(0.0, f64::INFINITY, 0.0, &params);
        for _attempt in 0..100 {
            let endpoints: Vec<Planar> = (0..n)
                .map(|_| {
                    [
                        rng.random_range(-0.5 * side..0.5 * side),
                        rng.random_range(-0.5 * side..0.5 * side),
                    ]
                })
                .collect();
            ensemble = FilamentEnsemble::straight(&endpoints, m);
            energy = energy_breakdown(&ensemble, &params);
            if energy.h_int.is_finite() {
                break;
            }
        }
        if !energy.h_int.is_finite() {
            return Err(Error::Solver("could not draw a non-coincident start".into()));
        }

        let delta = config.translation_halfwidth;
        let free_sampler = FreeFilamentSampler::new(&params);
        Ok(Self {
            params,
            config,
            ensemble,
            energy,
            rng,
            counters: MoveCounters::default(),
            sweep_index: 0,
            delta,
            delta_frozen: false,
            free_sampler,
            energy_trace: Vec::new(),
            trace_prefix: Vec::new(),
            tune_proposed: 0,
            tune_accepted: 0,
            scratch: vec![[0.0, 0.0]; m],
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn ensemble(&self) -> &FilamentEnsemble {
        &self.ensemble
    }

    pub fn energy(&self) -> &EnergyBreakdown {
        &self.energy
    }

    pub fn counters(&self) -> &MoveCounters {
        &self.counters
    }

    pub fn sweep_index(&self) -> u64 {
        self.sweep_index
    }

    /// Current translation half-width (autotuned during burn-in).
    pub fn translation_halfwidth(&self) -> f64 {
        self.delta
    }

    pub fn energy_trace(&self) -> &[f64] {
        &self.energy_trace
    }

    /// Stops all further Δ adaptation. Called once burn-in ends so the
    /// measured chain is time-homogeneous.
    pub fn freeze_delta(&mut self) {
        self.delta_frozen = true;
    }

    pub fn delta_frozen(&self) -> bool {
        self.delta_frozen
    }

    /// One rigid-translation Metropolis move. Returns whether it was
    /// accepted.
    pub fn translate_move(&mut self) -> bool {
        let f = self.rng.random_range(0..self.params.n_filaments);
        let d = self.delta;
        let disp = [
            self.rng.random_range(-d..d),
            self.rng.random_range(-d..d),
        ];
        let (d_hint, d_i) = ensemble::delta_action_translate(&self.ensemble, &self.params, f, disp);
        let log_accept = -self.params.beta * d_hint - self.params.mu * d_i;
        self.counters.translate_proposed += 1;
        self.tune_proposed += 1;
        let accept = log_accept >= 0.0 || self.rng.random::<f64>() < log_accept.exp();
        if accept {
            self.ensemble.translate_filament(f, disp);
            self.energy = EnergyBreakdown::from_parts(
                self.energy.h_self,
                self.energy.h_int + d_hint,
                self.energy.i_n + d_i,
                &self.params,
            );
            self.counters.translate_accepted += 1;
            self.tune_accepted += 1;
        }
        accept
    }

    /// One regrow Metropolis move: redraw beads 2..M of a random filament
    /// from the exact free measure conditioned on bead 1; accept on the
    /// interaction change alone. A single-bead filament has nothing to
    /// regrow and counts as an accepted no-op.
    pub fn regrow_move(&mut self) -> bool {
        self.counters.regrow_proposed += 1;
        if self.params.n_segments == 1 {
            self.counters.regrow_accepted += 1;
            return true;
        }
        let f = self.rng.random_range(0..self.params.n_filaments);
        let bead1 = self.ensemble.bead(f, 0);
        self.scratch[0] = bead1;
        let (head, rest) = self.scratch.split_at_mut(1);
        self.free_sampler.sample_conditional_into(head[0], &mut self.rng, rest);

        let d_hint =
            ensemble::delta_hint_regrow(&self.ensemble, &self.params, f, &self.scratch);
        let log_accept = -self.params.beta * d_hint;
        let accept = log_accept >= 0.0 || self.rng.random::<f64>() < log_accept.exp();
        if accept {
            let old_self = ensemble::filament_self_energy(self.ensemble.filament(f), &self.params);
            let old_trap = ensemble::filament_trap_term(self.ensemble.filament(f), &self.params);
            self.ensemble.filament_mut(f).copy_from_slice(&self.scratch);
            let new_self = ensemble::filament_self_energy(self.ensemble.filament(f), &self.params);
            let new_trap = ensemble::filament_trap_term(self.ensemble.filament(f), &self.params);
            self.energy = EnergyBreakdown::from_parts(
                self.energy.h_self + (new_self - old_self),
                self.energy.h_int + d_hint,
                self.energy.i_n + (new_trap - old_trap),
                &self.params,
            );
            self.counters.regrow_accepted += 1;
        }
        accept
    }

    /// One sweep: `moves_per_sweep` moves, each translate or regrow with
    /// probability ½. Appends the total energy to the trace and performs
    /// the periodic bookkeeping (cache refresh, burn-in autotuning).
    pub fn sweep(&mut self) {
        for _ in 0..self.config.moves_per_sweep {
            if self.rng.random_bool(0.5) {
                self.translate_move();
            } else {
                self.regrow_move();
            }
        }
        self.sweep_index += 1;

        if self.sweep_index.is_multiple_of(CACHE_REFRESH_INTERVAL) {
            self.refresh_energy_cache();
        }
        if self.config.autotune && !self.delta_frozen && self.sweep_index.is_multiple_of(TUNE_INTERVAL) {
            self.autotune_step();
        }

        let total = self.energy.h_self + self.energy.h_int;
        let prev = self.trace_prefix.last().copied().unwrap_or(0.0);
        self.energy_trace.push(total);
        self.trace_prefix.push(prev + total);
    }

    /// Incremental updates drift by rounding; rebase the cache on a full
    /// recomputation at a deterministic cadence. In debug builds, assert
    /// the drift stayed within 1e-8 relative first.
    fn refresh_energy_cache(&mut self) {
        let fresh = energy_breakdown(&self.ensemble, &self.params);
        debug_assert!(
            {
                let close = |cached: f64, exact: f64| {
                    (cached - exact).abs() <= 1e-8 * exact.abs().max(1.0)
                };
                close(self.energy.h_self, fresh.h_self)
                    && close(self.energy.h_int, fresh.h_int)
                    && close(self.energy.i_n, fresh.i_n)
            },
            "energy cache drifted: cached {:?} vs fresh {:?}",
            self.energy,
            fresh
        );
        self.energy = fresh;
    }

    fn autotune_step(&mut self) {
        if self.tune_proposed < 32 {
            return;
        }
        let rate = self.tune_accepted as f64 / self.tune_proposed as f64;
        if rate < 0.30 {
            self.delta *= 0.7;
        } else if rate > 0.50 {
            self.delta *= 1.4;
        }
        self.delta = self.delta.clamp(1e-9, 1e9);
        self.tune_proposed = 0;
        self.tune_accepted = 0;
    }

    /// The equilibration test on this chain's own trace, O(1) thanks to
    /// the prefix sums. Matches `is_equilibrated` on the same data.
    fn equilibrated_now(&self) -> bool {
        let w = self.config.equilibration_window;
        let t = self.energy_trace.len();
        if t < 2 * w {
            return false;
        }
        let mean_now = self.trace_prefix[t - 1] / t as f64;
        let mean_then = self.trace_prefix[t - w - 1] / (t - w) as f64;
        (mean_now - mean_then).abs() <= self.config.equilibration_tol * mean_now.abs()
    }
}

/// Draws one exact sample of the free (non-interacting) filament measure:
/// self-induction plus trap, periodic in the layer index, both planar
/// components independent. Builds the factorization on the fly; chains
/// keep a cached one internally.
pub fn sample_free_filament(p: &ModelParams, rng: &mut impl Rng) -> Vec<Planar> {
    let sampler = FreeFilamentSampler::new(p);
    let mut beads = vec![[0.0, 0.0]; p.n_segments];
    sampler.sample_full_into(rng, &mut beads);
    beads
}

/// Has the cumulative arithmetic mean of the energy settled? True when its
/// relative change over the last `window` entries is at most `tol`.
pub fn is_equilibrated(trace: &[f64], window: usize, tol: f64) -> Result<bool> {
    if window < 1 {
        return Err(domain("window must be >= 1"));
    }
    if trace.len() < 2 * window {
        return Err(Error::NotEnoughData(format!(
            "equilibration test needs at least {} entries, got {}",
            2 * window,
            trace.len()
        )));
    }
    let mean_now = trace.iter().sum::<f64>() / trace.len() as f64;
    let head = &trace[..trace.len() - window];
    let mean_then = head.iter().sum::<f64>() / head.len() as f64;
    Ok((mean_now - mean_then).abs() <= tol * mean_now.abs())
}

/// Where a driven chain currently is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    BurnIn,
    Measure,
    Done,
}

/// What one driver step produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    /// A sweep with nothing else to report.
    Swept,
    /// Burn-in just ended (`equilibrated` = false means the cap was hit).
    BurnInComplete { equilibrated: bool },
    /// A measurement snapshot is ready; read the chain now.
    Snapshot,
    /// The chain is finished; no sweep was performed.
    Finished,
}

/// Drives a chain through burn-in and measurement one sweep at a time, so
/// callers can interleave checkpointing, observable extraction or halting.
#[derive(Debug, Clone)]
pub struct ChainDriver {
    chain: ChainState,
    n_snapshots: u64,
    snapshots_emitted: u64,
    sweeps_in_measure: u64,
    phase: Phase,
    equilibrated: bool,
    sweep_cap: Option<u64>,
    hit_cap: bool,
}

impl ChainDriver {
    pub fn new(chain: ChainState, n_snapshots: u64) -> Self {
        Self {
            chain,
            n_snapshots,
            snapshots_emitted: 0,
            sweeps_in_measure: 0,
            phase: Phase::BurnIn,
            equilibrated: false,
            sweep_cap: None,
            hit_cap: false,
        }
    }

    /// Hard cap on total sweeps; the run is truncated (and flagged) there.
    pub fn with_sweep_cap(mut self, cap: Option<u64>) -> Self {
        self.sweep_cap = cap;
        self
    }

    pub fn chain(&self) -> &ChainState {
        &self.chain
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn equilibrated(&self) -> bool {
        self.equilibrated
    }

    pub fn snapshots_emitted(&self) -> u64 {
        self.snapshots_emitted
    }

    pub fn n_snapshots(&self) -> u64 {
        self.n_snapshots
    }

    pub fn hit_sweep_cap(&self) -> bool {
        self.hit_cap
    }

    pub fn step(&mut self) -> StepEvent {
        match self.phase {
            Phase::Done => StepEvent::Finished,
            Phase::BurnIn => {
                self.chain.sweep();
                if self.capped() {
                    return StepEvent::Finished;
                }
                let max_burn_in = self.chain.config.burn_in_sweeps as u64;
                let eq = self.chain.equilibrated_now();
                if eq || self.chain.sweep_index >= max_burn_in {
                    self.equilibrated = eq;
                    self.chain.freeze_delta();
                    self.phase = if self.n_snapshots == 0 { Phase::Done } else { Phase::Measure };
                    StepEvent::BurnInComplete { equilibrated: eq }
                } else {
                    StepEvent::Swept
                }
            }
            Phase::Measure => {
                self.chain.sweep();
                self.sweeps_in_measure += 1;
                if self.capped() {
                    return StepEvent::Finished;
                }
                if self.sweeps_in_measure.is_multiple_of(self.chain.config.measure_interval as u64) {
                    self.snapshots_emitted += 1;
                    if self.snapshots_emitted >= self.n_snapshots {
                        self.phase = Phase::Done;
                    }
                    StepEvent::Snapshot
                } else {
                    StepEvent::Swept
                }
            }
        }
    }

    fn capped(&mut self) -> bool {
        if let Some(cap) = self.sweep_cap {
            if self.chain.sweep_index >= cap {
                self.hit_cap = true;
                self.phase = Phase::Done;
                return true;
            }
        }
        false
    }
}

/// Outcome summary of a completed chain run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    /// False means burn-in hit its sweep cap without settling; data is
    /// still produced but flagged.
    pub equilibrated: bool,
    pub sweeps_run: u64,
    pub snapshots: u64,
}

/// Runs a fresh chain to completion: straight-filament initialization,
/// burn-in until equilibrated (or the configured cap), then `n_snapshots`
/// measurement snapshots every `measure_interval` sweeps, each handed to
/// `on_snapshot`.
pub fn run_chain(
    params: &ModelParams,
    config: &SamplerConfig,
    seed: ChainSeed,
    n_snapshots: u64,
    mut on_snapshot: impl FnMut(&ChainState),
) -> Result<RunSummary> {
    let chain = ChainState::new(params.clone(), config.clone(), seed)?;
    let mut driver = ChainDriver::new(chain, n_snapshots);
    loop {
        match driver.step() {
            StepEvent::Snapshot => on_snapshot(driver.chain()),
            StepEvent::Finished => break,
            StepEvent::Swept | StepEvent::BurnInComplete { .. } => {}
        }
    }
    Ok(RunSummary {
        equilibrated: driver.equilibrated(),
        sweeps_run: driver.chain().sweep_index(),
        snapshots: driver.snapshots_emitted(),
    })
}
