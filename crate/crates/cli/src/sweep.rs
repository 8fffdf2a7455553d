//! β-sweep execution: one chain per β scheduled over a worker pool, with
//! per-β append-only observable files, periodic checkpoints, and idempotent
//! resume. Per-β seeds derive from the master seed and the β index alone,
//! so results are independent of worker scheduling.

use crate::config::SweepConfig;
use serde::{Deserialize, Serialize};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;
use vortexmc::meanfield::rsq_2d;
use vortexmc::observables::{
    aggregate, snapshot, validity_flags, ObservableRecord, SnapshotObservables, ValidityFlags,
    DEFAULT_STRAIGHTNESS_RATIO,
};
use vortexmc::sampler::{
    read_checkpoint, write_checkpoint, ChainDriver, ChainSeed, ChainState, Phase, StepEvent,
};
use vortexmc::{Error, Result};

/// Everything recorded about one finished β point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub beta: f64,
    pub beta_index: usize,
    pub observables: ObservableRecord,
    pub flags: ValidityFlags,
    /// Quasi-2D and 2D predictions, recomputed from the model constants.
    pub r2_3d_pred: f64,
    pub r2_2d_pred: f64,
    pub equilibrated: bool,
    pub sweeps_run: u64,
    pub wall_time_s: f64,
    pub master_seed: u64,
    pub stream: u64,
}

#[derive(Debug)]
pub enum JobOutcome {
    Completed(Box<RunRecord>),
    Halted,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub halted: usize,
}

pub fn obs_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("obs").join(format!("beta_{index:03}.tsv"))
}

pub fn ckpt_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("ckpt").join(format!("beta_{index:03}.ckpt"))
}

pub fn record_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("records").join(format!("beta_{index:03}.json"))
}

fn resolved_config_path(dir: &Path) -> PathBuf {
    dir.join("config.resolved.json")
}

/// Creates the output tree. A fresh `run` refuses a directory that was
/// initialized before (resume exists for that); `resume` requires it and
/// verifies the configuration is unchanged.
pub fn prepare_output(cfg: &SweepConfig, resume: bool) -> Result<()> {
    let dir = &cfg.run.output_dir;
    let marker = resolved_config_path(dir);
    if resume {
        let text = fs::read_to_string(&marker).map_err(|e| {
            Error::Format(format!("cannot resume: missing {}: {e}", marker.display()))
        })?;
        let stored: SweepConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("corrupt resolved config: {e}")))?;
        if stored.hash() != cfg.hash() {
            return Err(Error::Format(
                "cannot resume: configuration differs from the one in the output directory"
                    .into(),
            ));
        }
    } else {
        if marker.exists() {
            return Err(Error::Format(format!(
                "output directory {} is already initialized; use `resume` to continue it",
                dir.display()
            )));
        }
        for sub in ["obs", "ckpt", "records"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        let mut f = File::create(&marker)?;
        serde_json::to_writer_pretty(&mut f, cfg)
            .map_err(|e| Error::Format(format!("cannot write resolved config: {e}")))?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs every β point over the worker pool. Returns the records of all
/// completed points; `halted` counts chains stopped by `halt_after`.
pub fn run_sweep(
    cfg: &SweepConfig,
    resume: bool,
    halt_after: Option<u64>,
) -> Result<SweepOutcome> {
    prepare_output(cfg, resume)?;
    let n_jobs = cfg.betas.len();
    let workers = if cfg.run.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cfg.run.workers
    }
    .clamp(1, n_jobs);

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<JobOutcome>>>> = Mutex::new((0..n_jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_jobs {
                    break;
                }
                let outcome = run_beta_job(cfg, i, resume, halt_after);
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut outcome = SweepOutcome::default();
    for slot in slots.into_inner().unwrap() {
        match slot.expect("every job ran") {
            Ok(JobOutcome::Completed(record)) => outcome.records.push(*record),
            Ok(JobOutcome::Halted) => outcome.halted += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(outcome)
}

/// Drives one β point to completion (or to the halt mark), checkpointing
/// every `checkpoint_interval` sweeps. Safe to call again after any
/// interruption: the checkpoint records how many observable rows were
/// valid, and everything past that point is regenerated bit-identically.
fn run_beta_job(
    cfg: &SweepConfig,
    index: usize,
    resume: bool,
    halt_after: Option<u64>,
) -> Result<JobOutcome> {
    let started = Instant::now();
    let dir = &cfg.run.output_dir;
    let beta = cfg.betas[index];
    let record_file = record_path(dir, index);
    if record_file.exists() {
        if resume {
            let text = fs::read_to_string(&record_file)?;
            let record: RunRecord = serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("corrupt record {}: {e}", record_file.display())))?;
            return Ok(JobOutcome::Completed(Box::new(record)));
        }
        return Err(Error::Format(format!(
            "record {} already exists",
            record_file.display()
        )));
    }

    let params = cfg.model_params(beta)?;
    let sampler_cfg = cfg.sampler_config(&params);
    let config_hash = cfg.hash();
    let seed = ChainSeed { master: cfg.run.master_seed, stream: index as u64 + 1 };
    let obs_file = obs_path(dir, index);
    let ckpt_file = ckpt_path(dir, index);

    let (mut driver, mut rows_written) = if resume && ckpt_file.exists() {
        let mut reader = BufReader::new(File::open(&ckpt_file)?);
        let (driver, aux) = read_checkpoint(&mut reader, Some(config_hash))?;
        let rows = u64::from_le_bytes(
            aux.as_slice()
                .try_into()
                .map_err(|_| Error::Format("checkpoint aux is not a row count".into()))?,
        );
        truncate_obs_file(&obs_file, rows)?;
        (driver, rows)
    } else {
        let chain = ChainState::new(params.clone(), sampler_cfg, seed)?;
        write_obs_header(&obs_file)?;
        (ChainDriver::new(chain, cfg.run.n_snapshots), 0)
    };

    let mut obs = BufWriter::new(OpenOptions::new().append(true).open(&obs_file)?);
    loop {
        let event = driver.step();
        match event {
            StepEvent::Snapshot => {
                let chain = driver.chain();
                let s = snapshot(chain.ensemble(), chain.energy());
                write_obs_row(&mut obs, chain.sweep_index(), &s)?;
                rows_written += 1;
            }
            StepEvent::Finished => break,
            StepEvent::Swept | StepEvent::BurnInComplete { .. } => {}
        }
        let sweep = driver.chain().sweep_index();
        if sweep % cfg.run.checkpoint_interval == 0 {
            obs.flush()?;
            save_checkpoint(&ckpt_file, &driver, config_hash, rows_written)?;
        }
        if let Some(halt) = halt_after {
            if sweep >= halt && driver.phase() != Phase::Done {
                obs.flush()?;
                save_checkpoint(&ckpt_file, &driver, config_hash, rows_written)?;
                return Ok(JobOutcome::Halted);
            }
        }
    }
    obs.flush()?;
    drop(obs);

    let snapshots = read_obs_rows(&obs_file)?;
    let observables = aggregate(&snapshots)?;
    let flags = validity_flags(&observables, &params, DEFAULT_STRAIGHTNESS_RATIO);
    let scaled = params.scaled();
    let record = RunRecord {
        beta,
        beta_index: index,
        observables,
        flags,
        r2_3d_pred: scaled.rsq_3d(),
        r2_2d_pred: rsq_2d(scaled.beta_p, scaled.mu)?,
        equilibrated: driver.equilibrated(),
        sweeps_run: driver.chain().sweep_index(),
        wall_time_s: started.elapsed().as_secs_f64(),
        master_seed: cfg.run.master_seed,
        stream: index as u64 + 1,
    };
    let mut f = File::create(&record_file)?;
    serde_json::to_writer_pretty(&mut f, &record)
        .map_err(|e| Error::Format(format!("cannot write record: {e}")))?;
    f.write_all(b"\n")?;
    Ok(JobOutcome::Completed(Box::new(record)))
}

fn save_checkpoint(
    path: &Path,
    driver: &ChainDriver,
    config_hash: u64,
    rows_written: u64,
) -> Result<()> {
    // Write-then-rename so an interrupt mid-write never corrupts the
    // previous checkpoint.
    let tmp = path.with_extension("ckpt.tmp");
    let mut w = BufWriter::new(File::create(&tmp)?);
    write_checkpoint(&mut w, driver, config_hash, &rows_written.to_le_bytes())?;
    w.flush()?;
    drop(w);
    fs::rename(&tmp, path)?;
    Ok(())
}

const OBS_HEADER: &str = "sweep\tr2_mc\ta2_amp\ta2_seg\td2_nn\tenergy";

fn write_obs_header(path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "{OBS_HEADER}")?;
    Ok(())
}

fn write_obs_row(w: &mut impl Write, sweep: u64, s: &SnapshotObservables) -> Result<()> {
    writeln!(
        w,
        "{sweep}\t{}\t{}\t{}\t{}\t{}",
        s.r2_mc,
        s.a2_amp,
        s.a2_seg,
        s.d2_nn.unwrap_or(f64::NAN),
        s.energy
    )?;
    Ok(())
}

/// Keeps the header plus the first `rows` data rows; everything after the
/// checkpoint row count is a leftover from the interrupted run and will be
/// regenerated identically.
fn truncate_obs_file(path: &Path, rows: u64) -> Result<()> {
    let reader = BufReader::new(File::open(path)?);
    let keep: Vec<String> =
        reader.lines().take(rows as usize + 1).collect::<std::io::Result<_>>()?;
    let mut f = BufWriter::new(File::create(path)?);
    for line in keep {
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_obs_rows(path: &Path) -> Result<Vec<SnapshotObservables>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != OBS_HEADER {
                return Err(Error::Format(format!("bad observable header in {}", path.display())));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "bad observable row {lineno} in {}",
                path.display()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad float '{s}' at row {lineno}: {e}")))
        };
        let d2 = parse(fields[4])?;
        rows.push(SnapshotObservables {
            r2_mc: parse(fields[1])?,
            a2_amp: parse(fields[2])?,
            a2_seg: parse(fields[3])?,
            d2_nn: if d2.is_nan() { None } else { Some(d2) },
            energy: parse(fields[5])?,
        });
    }
    Ok(rows)
}

/// Loads every record present in the output directory, ordered by β index.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let records_dir = dir.join("records");
    let mut entries: Vec<PathBuf> = fs::read_dir(&records_dir)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", records_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut records = Vec::new();
    for path in entries {
        let text = fs::read_to_string(&path)?;
        let record: RunRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("corrupt record {}: {e}", path.display())))?;
        records.push(record);
    }
    Ok(records)
}

