//! The `verify` subcommand: runs the oracle suite end to end and prints one
//! pass/fail line per check with the measured tolerance. Exit status 1 if
//! anything fails. Budget: well under a minute on commodity hardware.

use vortexmc::ensemble::ModelParams;
use vortexmc::meanfield::{beta0, beta_for_error, rsq_2d, ScaledParams};
use vortexmc::observables::{self, blocked_stderr};
use vortexmc::oracle;
use vortexmc::sampler::{run_chain, ChainSeed, SamplerConfig};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: String) -> Self {
        Self { name, pass: true, detail }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self { name, pass: false, detail }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_2d_limit(),
        saddle_agreement_check_with("saddle-grid", |p| p.saddle_eta()),
        check_beta0_round_trip(),
        check_error_locus(),
        check_consistency_identity(),
        check_circulant_vs_sampler(),
        check_two_vortex(),
    ]
}

fn check_2d_limit() -> CheckResult {
    const NAME: &str = "2d-limit";
    let (bp, mu) = (20.0, 2000.0);
    let r2d = rsq_2d(bp, mu).unwrap();
    let mut prev = f64::INFINITY;
    for &ap in &[1e8, 1e10, 1e12] {
        let p = ScaledParams::new(ap, bp, mu, 10.0).unwrap();
        let dev = (p.rsq_3d() - r2d).abs() / r2d;
        if dev > 1e-3 || dev >= prev {
            return CheckResult::fail(NAME, format!("deviation {dev:.2e} at alpha' = {ap}"));
        }
        prev = dev;
    }
    let p = ScaledParams::new(1e12, bp, mu, 10.0).unwrap();
    let round_trip =
        (beta_for_error(p.error_vs_2d(), 1e12, mu).unwrap() - bp).abs() / bp;
    if round_trip > 1e-5 {
        return CheckResult::fail(NAME, format!("round-trip error {round_trip:.2e} > 1e-5"));
    }
    CheckResult::pass(
        NAME,
        format!("deviation {prev:.2e} <= 1e-3 at alpha'=1e12, round trip {round_trip:.2e} <= 1e-5"),
    )
}

/// The saddle-agreement check with an injectable explicit-η route, so the
/// harness itself can be tested for sensitivity (a perturbed η must fail).
pub fn saddle_agreement_check_with(
    name: &'static str,
    eta_of: impl Fn(&ScaledParams) -> vortexmc::Result<f64>,
) -> CheckResult {
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..5).map(|i| lo * (hi / lo).powf(i as f64 / 4.0)).collect()
    };
    let mut worst_agree: f64 = 0.0;
    let mut worst_stat: f64 = 0.0;
    for &a in &grid(1e3, 1e7) {
        for &b in &grid(0.05, 50.0) {
            for &m in &grid(100.0, 1e4) {
                let p = ScaledParams::new(a, b, m, 10.0).unwrap();
                let explicit = match eta_of(&p) {
                    Ok(v) => v,
                    Err(e) => return CheckResult::fail(name, format!("eta failed: {e}")),
                };
                let numeric = match oracle::saddle_eta_numeric(&p) {
                    Ok(v) => v,
                    Err(e) => return CheckResult::fail(name, format!("numeric saddle failed: {e}")),
                };
                worst_agree = worst_agree.max((explicit - numeric).abs() / numeric.abs());
                if let Ok(f) = p.ground_free_energy(explicit) {
                    let gap = 2.0 * m - explicit;
                    let c = 1e-4 * (gap / explicit).min(1.0);
                    let fp = p.ground_free_energy(explicit * (1.0 + c)).unwrap();
                    let fm = p.ground_free_energy(explicit * (1.0 - c)).unwrap();
                    worst_stat = worst_stat.max(((fp - fm) / (2.0 * c)).abs() / f.abs());
                } else {
                    return CheckResult::fail(name, format!("eta {explicit} outside domain"));
                }
            }
        }
    }
    if worst_agree > 1e-6 {
        return CheckResult::fail(
            name,
            format!("explicit vs numeric saddle disagree by {worst_agree:.2e} > 1e-6"),
        );
    }
    if worst_stat > 1e-8 {
        return CheckResult::fail(name, format!("stationarity residual {worst_stat:.2e} > 1e-8"));
    }
    CheckResult::pass(
        name,
        format!(
            "125 points: max disagreement {worst_agree:.2e} <= 1e-6, stationarity {worst_stat:.2e} <= 1e-8"
        ),
    )
}

fn check_beta0_round_trip() -> CheckResult {
    const NAME: &str = "beta0-round-trip";
    let (ap, mu) = (5e5, 2000.0);
    let b0 = beta0(ap, mu).unwrap();
    let numeric = oracle::golden_section_min(
        |bp| ScaledParams::new(ap, bp, mu, 10.0).unwrap().rsq_3d(),
        b0 / 50.0,
        b0 * 50.0,
        1e-10,
    );
    let err = (numeric - b0).abs() / b0;
    if err > 1e-4 {
        return CheckResult::fail(NAME, format!("argmin {numeric:.6} vs beta0' {b0:.6}"));
    }
    CheckResult::pass(NAME, format!("beta0' = {b0:.6}, numeric argmin {numeric:.6} ({err:.2e} <= 1e-4)"))
}

fn check_error_locus() -> CheckResult {
    const NAME: &str = "error-locus";
    let (ap, mu) = (5e5, 2000.0);
    let mut parts = Vec::new();
    for &e in &[0.1, 0.5, 1.0, 2.0] {
        let bp = beta_for_error(e, ap, mu).unwrap();
        let p = ScaledParams::new(ap, bp, mu, 10.0).unwrap();
        let r2 = rsq_2d(bp, mu).unwrap();
        let recovered = (p.rsq_3d() - r2) / r2;
        if ((recovered - e) / e).abs() > 1e-6 {
            return CheckResult::fail(
                NAME,
                format!("E = {e}: beta' = {bp:.6} recovered {recovered:.8}"),
            );
        }
        parts.push(format!("E={e} -> beta'={bp:.5} -> E={recovered:.6}"));
    }
    CheckResult::pass(NAME, format!("{} (all within 1e-6)", parts.join(", ")))
}

fn check_consistency_identity() -> CheckResult {
    const NAME: &str = "consistency-identity";
    let mut worst: f64 = 0.0;
    for &(a, b, m) in &[
        (1e3, 0.05, 100.0),
        (5e5, 0.2, 2000.0),
        (5e5, 20.0, 2000.0),
        (1e7, 50.0, 1e4),
        (1e12, 20.0, 2000.0),
    ] {
        let p = ScaledParams::new(a, b, m, 10.0).unwrap();
        let eta = p.saddle_eta().unwrap();
        let via_eta = b / (4.0 * (m - 0.5 * eta));
        worst = worst.max((p.rsq_3d() - via_eta).abs() / via_eta);
    }
    if worst > 1e-10 {
        return CheckResult::fail(NAME, format!("two forms of R² disagree by {worst:.2e}"));
    }
    CheckResult::pass(NAME, format!("two algebraic forms of R² agree to {worst:.2e} <= 1e-10"))
}

fn check_circulant_vs_sampler() -> CheckResult {
    const NAME: &str = "circulant-vs-sampler";
    let p = ModelParams::new(1, 16, 10.0, 1e7, 0.1, 2000.0).unwrap();
    let cfg = SamplerConfig {
        moves_per_sweep: 4,
        burn_in_sweeps: 20_000,
        measure_interval: 2,
        equilibration_window: 500,
        ..SamplerConfig::for_model(&p)
    };
    let expect = oracle::free_filament_bead_variance(&p);
    let mut r2 = Vec::new();
    let summary = run_chain(&p, &cfg, ChainSeed { master: 2001, stream: 0 }, 30_000, |c| {
        r2.push(observables::r2_mc(c.ensemble()));
    });
    let summary = match summary {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, format!("chain failed: {e}")),
    };
    if !summary.equilibrated {
        return CheckResult::fail(NAME, "chain did not equilibrate".into());
    }
    let est = mean(&r2);
    let se = blocked_stderr(&r2);
    let z = (est - expect) / se;
    if z.abs() > 3.0 {
        return CheckResult::fail(
            NAME,
            format!("R² = {est:.6e} vs circulant {expect:.6e} (z = {z:+.2})"),
        );
    }
    CheckResult::pass(NAME, format!("R² = {est:.6e} vs circulant {expect:.6e} (z = {z:+.2}, |z| <= 3)"))
}

fn check_two_vortex() -> CheckResult {
    const NAME: &str = "two-vortex";
    let p = ModelParams::new(2, 1, 10.0, 1e7, 1.0, 2000.0).unwrap();
    let closed = oracle::two_vortex_r2_closed_form(&p).unwrap();
    let quad = oracle::two_vortex_r2_quadrature(&p).unwrap();
    let qerr = ((closed - quad) / closed).abs();
    if qerr > 1e-8 {
        return CheckResult::fail(NAME, format!("closed {closed:.8e} vs quadrature {quad:.8e}"));
    }
    let cfg = SamplerConfig {
        moves_per_sweep: 2,
        burn_in_sweeps: 25_000,
        measure_interval: 2,
        equilibration_window: 500,
        ..SamplerConfig::for_model(&p)
    };
    let mut r2 = Vec::new();
    if let Err(e) = run_chain(&p, &cfg, ChainSeed { master: 2002, stream: 0 }, 40_000, |c| {
        r2.push(observables::r2_mc(c.ensemble()));
    }) {
        return CheckResult::fail(NAME, format!("chain failed: {e}"));
    }
    let est = mean(&r2);
    let se = blocked_stderr(&r2);
    let z = (est - closed) / se;
    if z.abs() > 3.0 {
        return CheckResult::fail(NAME, format!("chain R² = {est:.6e} vs closed {closed:.6e} (z = {z:+.2})"));
    }
    CheckResult::pass(
        NAME,
        format!("quadrature agreement {qerr:.1e} <= 1e-8, chain z = {z:+.2} (|z| <= 3)"),
    )
}
