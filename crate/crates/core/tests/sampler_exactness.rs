//! Distributional verification of the sampler against the circulant oracle
//! and the tiny-ensemble closed forms. All chains are seeded, so these
//! tests are deterministic; the 3σ bands refer to the frozen streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortexmc::ensemble::ModelParams;
use vortexmc::observables::{self, blocked_stderr, effective_samples};
use vortexmc::oracle;
use vortexmc::sampler::{run_chain, sample_free_filament, ChainSeed, SamplerConfig};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn naive_se(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

#[test]
fn free_sampler_matches_circulant_statistics() {
    // Direct exact draws: mean, per-bead variance and lag-1 covariance of
    // the free measure against the eigenvalue sums.
    let p = ModelParams::new(1, 64, 10.0, 1e7, 0.1, 2000.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n_samples = 60_000;

    let oracle_var = oracle::free_filament_bead_variance(&p);
    let oracle_lag1 = oracle::free_filament_layer_covariance(&p, 1);

    let mut bead_sq: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(n_samples)).collect();
    let probes = [0usize, 1, 32];
    let mut lag1 = Vec::with_capacity(n_samples);
    let mut mean_x = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let beads = sample_free_filament(&p, &mut rng);
        for (slot, &j) in probes.iter().enumerate() {
            bead_sq[slot].push(beads[j][0] * beads[j][0] + beads[j][1] * beads[j][1]);
        }
        let m = beads.len();
        let s: f64 = (0..m)
            .map(|j| {
                let a = beads[j];
                let b = beads[(j + 1) % m];
                a[0] * b[0] + a[1] * b[1]
            })
            .sum::<f64>()
            / m as f64;
        lag1.push(s);
        mean_x.push(beads.iter().map(|b| b[0]).sum::<f64>() / m as f64);
    }

    for (slot, &j) in probes.iter().enumerate() {
        let est = mean(&bead_sq[slot]);
        let se = naive_se(&bead_sq[slot]);
        assert!(
            (est - oracle_var).abs() <= 3.0 * se,
            "bead {j}: |psi|^2 = {est} vs oracle {oracle_var} (3se = {})",
            3.0 * se
        );
    }
    let est = mean(&lag1);
    let se = naive_se(&lag1);
    assert!(
        (est - oracle_lag1).abs() <= 3.0 * se,
        "lag-1 covariance {est} vs oracle {oracle_lag1} (3se = {})",
        3.0 * se
    );
    let est = mean(&mean_x);
    let se = naive_se(&mean_x);
    assert!(est.abs() <= 3.0 * se, "mean x {est} not centered (3se = {})", 3.0 * se);
}

#[test]
fn free_sampler_is_layer_translation_invariant_in_distribution() {
    // Every layer shares the same marginal; check all per-layer variance
    // estimates stay inside a generous band around the oracle value.
    let p = ModelParams::new(1, 16, 10.0, 1e7, 0.1, 2000.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let n_samples = 40_000;
    let mut per_layer = [0.0f64; 16];
    for _ in 0..n_samples {
        let beads = sample_free_filament(&p, &mut rng);
        for (j, b) in beads.iter().enumerate() {
            per_layer[j] += b[0] * b[0] + b[1] * b[1];
        }
    }
    let oracle_var = oracle::free_filament_bead_variance(&p);
    // var(|psi|^2) = oracle_var^2 for a complex Gaussian.
    let se = oracle_var / (n_samples as f64).sqrt();
    for (j, sum) in per_layer.iter().enumerate() {
        let est = sum / n_samples as f64;
        assert!(
            (est - oracle_var).abs() <= 4.5 * se,
            "layer {j}: {est} vs {oracle_var} (4.5se = {})",
            4.5 * se
        );
    }
}

#[test]
fn single_bead_chain_reproduces_trapped_average() {
    // N = 1, M = 1, mu L = 20000: <R^2> = 1/(mu L) = 5e-5.
    let p = ModelParams::new(1, 1, 10.0, 1e7, 1.0, 2000.0).unwrap();
    let cfg = SamplerConfig {
        moves_per_sweep: 2,
        burn_in_sweeps: 3000,
        measure_interval: 2,
        equilibration_window: 200,
        ..SamplerConfig::for_model(&p)
    };
    let mut r2 = Vec::new();
    let summary = run_chain(&p, &cfg, ChainSeed { master: 7, stream: 0 }, 50_000, |c| {
        r2.push(observables::r2_mc(c.ensemble()));
    })
    .unwrap();
    assert!(summary.equilibrated);
    let est = mean(&r2);
    let se = blocked_stderr(&r2);
    let expect = 1.0 / (p.mu * p.length);
    assert!(
        (est - expect).abs() <= 3.0 * se,
        "<R^2> = {est} vs {expect} (3se = {})",
        3.0 * se
    );
}

#[test]
fn single_filament_chain_matches_circulant_oracle() {
    // The interacting moves (translate + regrow) with N = 1 must sample the
    // exact free measure.
    let p = ModelParams::new(1, 64, 10.0, 1e7, 0.1, 2000.0).unwrap();
    let cfg = SamplerConfig {
        moves_per_sweep: 4,
        burn_in_sweeps: 20_000,
        measure_interval: 2,
        equilibration_window: 300,
        ..SamplerConfig::for_model(&p)
    };
    let mut r2 = Vec::new();
    let mut bead0_sq = Vec::new();
    let summary = run_chain(&p, &cfg, ChainSeed { master: 21, stream: 0 }, 40_000, |c| {
        r2.push(observables::r2_mc(c.ensemble()));
        let b = c.ensemble().bead(0, 0);
        bead0_sq.push(b[0] * b[0] + b[1] * b[1]);
    })
    .unwrap();
    assert!(summary.equilibrated);
    let expect = oracle::free_filament_bead_variance(&p);

    let est = mean(&r2);
    let se = blocked_stderr(&r2);
    assert!(
        (est - expect).abs() <= 3.0 * se,
        "<R^2> = {est} vs oracle {expect} (3se = {})",
        3.0 * se
    );

    // Bead 1 never moves during regrow; its marginal is the slowest mode
    // and specifically exercises the translate kernel.
    let est = mean(&bead0_sq);
    let se = blocked_stderr(&bead0_sq);
    assert!(
        (est - expect).abs() <= 3.0 * se,
        "bead-1 |psi|^2 = {est} vs oracle {expect} (3se = {})",
        3.0 * se
    );
}

#[test]
fn two_bead_chain_histogram_matches_free_measure() {
    // N = 1, M = 2 detailed-balance smoke test: the bead-1 radial histogram
    // against the exact Rayleigh law, 24 equal-probability bins, 3σ each.
    let p = ModelParams::new(1, 2, 10.0, 1e7, 0.5, 2000.0).unwrap();
    let cfg = SamplerConfig {
        moves_per_sweep: 2,
        burn_in_sweeps: 2000,
        measure_interval: 3,
        equilibration_window: 200,
        ..SamplerConfig::for_model(&p)
    };
    // Per-component bead-1 variance from the two-mode eigensum.
    let delta = p.delta();
    let (k, t) = (p.beta * p.alpha / (2.0 * delta), p.mu * delta);
    let sigma_sq = (2.0 * k + t) / (2.0 * t * (4.0 * k + t));

    let n_bins = 24;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| {
            let q = i as f64 / n_bins as f64;
            if i == n_bins { f64::INFINITY } else { (-2.0 * sigma_sq * (1.0 - q).ln()).sqrt() }
        })
        .collect();

    let mut counts = vec![0usize; n_bins];
    let mut total = 0usize;
    run_chain(&p, &cfg, ChainSeed { master: 33, stream: 0 }, 120_000, |c| {
        let b = c.ensemble().bead(0, 0);
        let r = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let bin = edges.windows(2).position(|w| r >= w[0] && r < w[1]).unwrap();
        counts[bin] += 1;
        total += 1;
    })
    .unwrap();

    let p_bin = 1.0 / n_bins as f64;
    let expect = total as f64 * p_bin;
    let sigma_bin = (total as f64 * p_bin * (1.0 - p_bin)).sqrt();
    // The chain is autocorrelated; widen the multinomial band by the
    // observed effective-sample deflation of the bead-1 series.
    let infl = 3.0f64;
    for (bin, &c) in counts.iter().enumerate() {
        assert!(
            (c as f64 - expect).abs() <= 3.0 * infl * sigma_bin,
            "bin {bin}: count {c} vs {expect} (band {})",
            3.0 * infl * sigma_bin
        );
    }
}

#[test]
fn stiff_separated_filaments_accept_nearly_all_regrows() {
    // alpha beta = 1e9 keeps conditional wiggles ~ 1e-4 wide, and the weak
    // trap (mu = 0.002) holds equilibrium separations near 25, thousands of
    // wiggle widths: interaction changes are negligible and the regrow
    // acceptance approaches 1.
    let p = ModelParams::new(2, 16, 10.0, 1e9, 1.0, 0.002).unwrap();
    let cfg = SamplerConfig {
        moves_per_sweep: 2,
        burn_in_sweeps: 3000,
        equilibration_window: 100,
        ..SamplerConfig::for_model(&p)
    };
    let mut last_rate = 0.0;
    let _ = run_chain(&p, &cfg, ChainSeed { master: 55, stream: 0 }, 2000, |c| {
        last_rate = c.counters().regrow_rate();
    })
    .unwrap();
    assert!(last_rate > 0.995, "regrow rate {last_rate}");
}

#[test]
fn two_vortex_chain_matches_closed_form_and_quadrature() {
    for (beta, seed) in [(0.1, 71u64), (1.0, 72u64)] {
        let p = ModelParams::new(2, 1, 10.0, 1e7, beta, 2000.0).unwrap();
        let cfg = SamplerConfig {
            moves_per_sweep: 2,
            burn_in_sweeps: 25_000,
            measure_interval: 2,
            equilibration_window: 300,
            ..SamplerConfig::for_model(&p)
        };
        let closed = oracle::two_vortex_r2_closed_form(&p).unwrap();
        let quad = oracle::two_vortex_r2_quadrature(&p).unwrap();
        assert!(
            ((closed - quad) / closed).abs() <= 1e-8,
            "closed form {closed} vs quadrature {quad}"
        );

        let mut r2 = Vec::new();
        let summary = run_chain(&p, &cfg, ChainSeed { master: seed, stream: 0 }, 60_000, |c| {
            r2.push(observables::r2_mc(c.ensemble()));
        })
        .unwrap();
        assert!(summary.equilibrated);
        let est = mean(&r2);
        let se = blocked_stderr(&r2);
        assert!(
            (est - closed).abs() <= 3.0 * se,
            "beta = {beta}: <R^2> = {est} vs closed {closed} (3se = {})",
            3.0 * se
        );
        assert!(effective_samples(&r2) > 1000.0);
    }
}
