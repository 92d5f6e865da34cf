//! Chain construction with per-stage snapshots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use towerplex_core::multiplex::equal_partition;
use towerplex_core::snapshot::{parse_stage, write_stage};
use towerplex_core::{Chain, Rat, SchedulePlanner, StageState};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn snapshot_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("stage_{n:03}.snap"))
}

/// Write-temp-then-rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(CliError::io(dir))?;
    tmp.write_all(contents).map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

fn running_kappa(stages: &[StageState]) -> Option<Rat> {
    stages.iter().filter_map(StageState::kappa_ratio).max()
}

fn save_stage(dir: &Path, chain: &Chain, n: usize) -> CliResult<()> {
    let stages = chain.stages();
    let text = write_stage(&stages[n - 1], running_kappa(&stages[..n]).as_ref());
    write_atomic(&snapshot_path(dir, n), text.as_bytes())
}

pub fn initial_partition(config: &RunConfig, chain_space: &towerplex_core::IntervalSet) -> CliResult<Vec<towerplex_core::IntervalSet>> {
    equal_partition(chain_space, config.cells).map_err(CliError::core(Some(1)))
}

/// Grows `chain` to `config.stages`, rewriting the old deepest snapshot and
/// writing each new one as soon as it exists.
fn grow(config: &RunConfig, dir: &Path, chain: &mut Chain, planner: &mut SchedulePlanner) -> CliResult<()> {
    while chain.depth() < config.stages {
        let n = chain.depth();
        chain.extend(planner).map_err(CliError::core(Some(n)))?;
        save_stage(dir, chain, n)?;
        save_stage(dir, chain, n + 1)?;
    }
    Ok(())
}

pub fn cmd_build(config: &RunConfig, dir: &Path) -> CliResult<Chain> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let starter = config.starter()?;
    let p0 = initial_partition(config, &starter.space)?;
    let mut planner = SchedulePlanner::new(config.schedule.clone());
    let mut chain =
        Chain::start(starter, config.chain.clone(), p0, &mut planner).map_err(CliError::core(Some(1)))?;
    save_stage(dir, &chain, 1)?;
    grow(config, dir, &mut chain, &mut planner)?;
    Ok(chain)
}

/// Snapshot files `stage_001.snap, ...` in order; gaps are corruption.
pub fn load_chain(config: &RunConfig, dir: &Path) -> CliResult<Chain> {
    let mut stages = Vec::new();
    loop {
        let n = stages.len() + 1;
        let path = snapshot_path(dir, n);
        if !path.exists() {
            break;
        }
        let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
        let corrupt = |detail: String| CliError::CorruptSnapshot { path: path.clone(), stage: Some(n), detail };
        let snap = parse_stage(&text).map_err(|e| corrupt(e.to_string()))?;
        if snap.stage.n != n {
            return Err(corrupt(format!("file holds stage {}", snap.stage.n)));
        }
        stages.push(snap.stage);
    }
    if stages.is_empty() {
        return Err(CliError::MissingSnapshot(dir.to_path_buf()));
    }
    let starter = config.starter()?;
    let p0 = initial_partition(config, &starter.space)?;
    if stages[0].x != starter.space || stages[0].r != starter.map {
        return Err(CliError::CorruptSnapshot {
            path: snapshot_path(dir, 1),
            stage: Some(1),
            detail: "stage 1 does not match the configured starter".into(),
        });
    }
    Chain::from_stages(starter, config.chain.clone(), p0, stages).map_err(CliError::core(None))
}

pub fn cmd_resume(config: &RunConfig, dir: &Path) -> CliResult<Chain> {
    let mut chain = load_chain(config, dir)?;
    let mut planner = SchedulePlanner::new(config.schedule.clone());
    grow(config, dir, &mut chain, &mut planner)?;
    Ok(chain)
}
