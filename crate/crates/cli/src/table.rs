//! Analysis-table emission: a wide results table (one row per β, sorted by
//! descending β, flags as 0/1) and a long-format companion for plotting the
//! R²-vs-β curves.

use crate::sweep::RunRecord;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use vortexmc::Result;

pub const RESULTS_FILE: &str = "results.tsv";
pub const CURVES_FILE: &str = "curves_long.tsv";

pub const RESULTS_HEADER: &str = "beta\tr2_mc\tr2_mc_stderr\tr2_3d_pred\tr2_2d_pred\tA2\ta2\td2\tstraight_ok\tno_braiding\tequilibrated";

fn flag(b: bool) -> u8 {
    b as u8
}

/// Writes both table files; returns their paths.
pub fn emit_tables(records: &[RunRecord], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.beta.total_cmp(&a.beta));

    let results_path = dir.join(RESULTS_FILE);
    let mut w = BufWriter::new(File::create(&results_path)?);
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in &sorted {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.beta,
            r.observables.r2_mc,
            r.observables.std_errors.r2_mc,
            r.r2_3d_pred,
            r.r2_2d_pred,
            r.observables.a2_amp,
            r.observables.a2_seg,
            r.observables.d2_nn.unwrap_or(f64::NAN),
            flag(r.flags.straight_ok),
            flag(r.flags.no_braiding),
            flag(r.equilibrated),
        )?;
    }
    w.flush()?;

    let curves_path = dir.join(CURVES_FILE);
    let mut w = BufWriter::new(File::create(&curves_path)?);
    writeln!(w, "beta\tseries\tvalue")?;
    for r in &sorted {
        for (series, value) in [
            ("r2_mc", r.observables.r2_mc),
            ("r2_mc_stderr", r.observables.std_errors.r2_mc),
            ("r2_3d_pred", r.r2_3d_pred),
            ("r2_2d_pred", r.r2_2d_pred),
        ] {
            writeln!(w, "{}\t{series}\t{value}", r.beta)?;
        }
    }
    w.flush()?;
    Ok((results_path, curves_path))
}
