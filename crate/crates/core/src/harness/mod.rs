//! Experiment harness: configuration, grid expansion, batch scheduling,
//! persistence and built-in validation.
//!
//! An output directory holds
//!
//! - `results.csv`: one row per (cell, checkpoint);
//! - `metadata.json`: resolved configuration, code version, cell list and skipped cells;
//! - `cells/<id>.csv`, `cells/<id>.reps.csv`, `cells/<id>.done.json`: per-cell
//!   rows, per-repetition samples and the completion marker used for resumption;
//! - `bounds.csv`: theoretical curves, written by [`write_bounds`].

pub mod config;
pub mod grid;
pub mod output;
pub mod validate;

use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{Axis, DeltaPreset, Family, GridConfig, PolicyKind, RuleKind};
pub use grid::{cell_seed, expand_grid, Cell, CellCoords, Expansion, Skipped};
pub use output::{OutputLayout, ResultRecord, RESULT_HEADER, SCHEMA_VERSION};
pub use validate::{run_validation, InvariantCheck, ValidationReport};

use crate::bounds::{self, LowerBoundForm, PullBoundForm};
use crate::error::{Error, Result};
use crate::policies::{Alpha, PolicyConfig};
use crate::sim::{run_batch, ExecutionMode};
use crate::tuning::beta_tau;
use output::{BoundContext, CellDone, CellEntry, Metadata};

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    pub records: Vec<ResultRecord>,
    pub computed: usize,
    pub reused: usize,
    pub skipped: Vec<Skipped>,
}

fn reported_wall_time(mode: ExecutionMode, seconds: f64) -> f64 {
    match mode {
        ExecutionMode::Ordered => 0.0,
        ExecutionMode::Parallel => seconds,
    }
}

/// Rows of a completed cell, if its marker matches the current configuration.
fn completed(layout: &OutputLayout, cell: &Cell) -> Option<Vec<ResultRecord>> {
    let done: CellDone = output::read_json(&layout.cell_done(&cell.id)).ok()?;
    if done.config_hash != cell.config_hash() || done.seed != cell.spec.master_seed {
        log::info!("cell {} changed since its last run; recomputing", cell.id);
        return None;
    }
    output::read_records(&layout.cell_csv(&cell.id)).ok()
}

fn compute_cell(layout: &OutputLayout, cell: &Cell, mode: ExecutionMode) -> Result<Vec<ResultRecord>> {
    let started = Instant::now();
    let summary = run_batch(&cell.spec, mode)?;
    let seconds = started.elapsed().as_secs_f64();
    let records = output::cell_records(&cell.coords, cell.spec.master_seed, &summary, reported_wall_time(mode, seconds));
    output::write_reps(&layout.cell_reps(&cell.id), &summary)?;
    output::write_records_file(&layout.cell_csv(&cell.id), &records)?;
    let done = CellDone {
        id: cell.id.clone(),
        seed: cell.spec.master_seed,
        config_hash: cell.config_hash(),
        wall_time: seconds,
    };
    output::write_json(&layout.cell_done(&cell.id), &done)?;
    Ok(records)
}

/// Runs every cell of the grid into `out`. With `resume`, cells whose
/// completion marker matches their configuration hash are read back instead
/// of recomputed.
pub fn run_grid(config: &GridConfig, out: &Path, resume: bool) -> Result<GridOutcome> {
    let expansion = expand_grid(config)?;
    run_expansion(config, &expansion, out, resume)
}

fn run_expansion(config: &GridConfig, expansion: &Expansion, out: &Path, resume: bool) -> Result<GridOutcome> {
    let layout = OutputLayout::new(out);
    std::fs::create_dir_all(layout.cell_dir())?;
    let total = expansion.cells.len();
    let finished = AtomicUsize::new(0);
    let reused = AtomicUsize::new(0);
    let mode = config.mode;

    let per_cell: Vec<Vec<ResultRecord>> = expansion
        .cells
        .par_iter()
        .map(|cell| {
            let started = Instant::now();
            let records = match resume.then(|| completed(&layout, cell)).flatten() {
                Some(r) => {
                    reused.fetch_add(1, Ordering::Relaxed);
                    r
                }
                None => compute_cell(&layout, cell, mode)?,
            };
            let n = finished.fetch_add(1, Ordering::Relaxed) + 1;
            log::info!("[{n}/{total}] {} ({:.2?})", cell.coords.canonical(), started.elapsed());
            Ok(records)
        })
        .collect::<Result<_>>()?;

    let records: Vec<ResultRecord> = per_cell.into_iter().flatten().collect();
    output::write_records_file(&layout.results(), &records)?;
    let metadata = Metadata {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        cells: expansion.cells.iter().map(CellEntry::from).collect(),
        skipped: expansion.skipped.clone(),
    };
    output::write_json(&layout.metadata(), &metadata)?;
    let reused = reused.into_inner();
    Ok(GridOutcome { records, computed: total - reused, reused, skipped: expansion.skipped.clone() })
}

/// Runs a configuration that expands to exactly one cell, overwriting previous output.
pub fn run_single(config: &GridConfig, out: &Path) -> Result<GridOutcome> {
    let expansion = expand_grid(config)?;
    if expansion.cells.len() != 1 {
        let why = match expansion.skipped.first() {
            Some(s) if expansion.cells.is_empty() => format!(": {}", s.diagnostic),
            _ => String::new(),
        };
        return Err(Error::config(
            "grid",
            format!("`run` needs exactly one cell, the configuration expands to {}{why}", expansion.cells.len()),
        ));
    }
    run_expansion(config, &expansion, out, false)
}

/// Recomputes every row of `results.csv` from the stored per-repetition
/// samples and rewrites it. Ordered-mode output is reproduced byte for byte.
pub fn summarize(out: &Path) -> Result<Vec<ResultRecord>> {
    let layout = OutputLayout::new(out);
    let metadata: Metadata = output::read_json(&layout.metadata())?;
    if metadata.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("expected {SCHEMA_VERSION}, found {}", metadata.schema_version),
        ));
    }
    let mut records = Vec::new();
    for entry in &metadata.cells {
        let summary = output::read_reps(&layout.cell_reps(&entry.id))?;
        let done: CellDone = output::read_json(&layout.cell_done(&entry.id))?;
        let wall = reported_wall_time(metadata.config.mode, done.wall_time);
        records.extend(output::cell_records(&entry.coords, entry.seed, &summary, wall));
    }
    output::write_records_file(&layout.results(), &records)?;
    Ok(records)
}

fn context(coords: &CellCoords, with_cell: bool) -> BoundContext {
    BoundContext {
        tau: with_cell.then(|| coords.tau.map(|t| t.to_string())).flatten(),
        rule: with_cell.then(|| coords.rule.map(|r| r.tag().to_string())).flatten(),
        delta: if with_cell { coords.delta } else { None },
        sigma: coords.sigma,
        gap: coords.gap,
        arms: coords.arms,
    }
}

/// Theoretical curves for every instance and UCB-tau cell of the grid, on
/// the same checkpoints as the simulations.
///
/// Per instance: both lower-bound forms. Per UCB-tau cell: both pull-count
/// forms when every sub-optimal mass exceeds its threshold, the
/// under-exploration curve otherwise, and the minimax curve for cells tuned
/// by the minimax rule. `eta` is the pull-count slack and `proof_delta` the
/// free constant of the under-exploration bound.
pub fn bound_rows(config: &GridConfig, eta: f64, proof_delta: f64) -> Result<Vec<ResultRecord>> {
    let expansion = expand_grid(config)?;
    let mut rows = Vec::new();
    let mut seen_env = HashSet::new();
    for cell in &expansion.cells {
        let env = &cell.spec.env;
        let cp = &cell.spec.checkpoints;
        let env_key = format!("{:?}|{}|{:?}", env.arms(), cell.coords.horizon, cp);
        if seen_env.insert(env_key) {
            for form in [LowerBoundForm::GapWeighted, LowerBoundForm::PullCount] {
                match bounds::lai_robbins_curve(env, form, cp) {
                    Ok(curve) => rows.extend(output::bound_records(&curve, &context(&cell.coords, false))),
                    Err(Error::UnsupportedFamily(msg)) => log::warn!("no lower bound: {msg}"),
                    Err(e) => return Err(e),
                }
            }
        }

        let (tau, alphas) = match &cell.spec.policy {
            PolicyConfig::UcbTau { tau, alpha, .. } => {
                let alphas = match alpha {
                    Alpha::Scalar(a) => vec![*a; env.k()],
                    Alpha::PerArm(v) => v.clone(),
                };
                (*tau, alphas)
            }
            _ => continue,
        };
        let ctx = context(&cell.coords, true);
        let sigma_star = env.sigma_star();
        let mut explored = true;
        let mut star_explored = true;
        let alpha_star = alphas[env.optimal_arm()];
        for (a, &gap) in env.gaps().iter().enumerate() {
            if gap > 0.0 {
                let beta = beta_tau(sigma_star, gap, tau)?;
                explored &= alphas[a] > beta;
                star_explored &= alpha_star > beta;
            }
        }
        if tau.value() >= 0.5 && explored {
            for form in [PullBoundForm::Nta, PullBoundForm::NtaRe] {
                let curve = bounds::thm1_regret_curve(env, &alphas, tau, eta, form, cp)?;
                rows.extend(output::bound_records(&curve, &ctx));
            }
        }
        if !star_explored {
            let curve = bounds::thm5_curve(env, alpha_star, tau, proof_delta, cp)?;
            rows.extend(output::bound_records(&curve, &ctx));
        }
        if cell.coords.rule == Some(RuleKind::Minimax) {
            let t = tau.value();
            let gamma = env.noise_gap_statistic(1.0 - 1.0 / (2.0 * t))?;
            let curve = bounds::thm2_curve(t, gamma, env.k(), cp)?;
            rows.extend(output::bound_records(&curve, &ctx));
        }
    }
    Ok(rows)
}

/// Writes [`bound_rows`] to `bounds.csv` under `out`.
pub fn write_bounds(config: &GridConfig, out: &Path, eta: f64, proof_delta: f64) -> Result<Vec<ResultRecord>> {
    let rows = bound_rows(config, eta, proof_delta)?;
    output::write_records_file(&OutputLayout::new(out).bounds(), &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(doc: &str) -> GridConfig {
        GridConfig::from_toml_str(&format!("horizon = 200\nrepetitions = 8\narms = 3\n{doc}")).unwrap()
    }

    #[test]
    fn grid_writes_results_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small("tau = [0.5, 2]\npolicies = [\"ucb_tau\", \"greedy\"]");
        let out = run_grid(&cfg, dir.path(), false).unwrap();
        assert_eq!(out.computed, 3);
        // geometric checkpoints 1..128 plus 200
        assert_eq!(out.records.len(), 3 * 9);
        let layout = OutputLayout::new(dir.path());
        assert_eq!(output::read_records(&layout.results()).unwrap(), out.records);
        let meta: Metadata = output::read_json(&layout.metadata()).unwrap();
        assert_eq!(meta.cells.len(), 3);
        assert_eq!(meta.config, cfg);
    }

    #[test]
    fn resume_reuses_completed_cells() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small("tau = [0.5, 2]");
        let first = run_grid(&cfg, dir.path(), true).unwrap();
        assert_eq!((first.computed, first.reused), (2, 0));
        let bytes = std::fs::read(dir.path().join("results.csv")).unwrap();
        let second = run_grid(&cfg, dir.path(), true).unwrap();
        assert_eq!((second.computed, second.reused), (0, 2));
        assert_eq!(std::fs::read(dir.path().join("results.csv")).unwrap(), bytes);

        // a changed seed changes every hash
        let third = run_grid(&small("tau = [0.5, 2]\nmaster_seed = 3"), dir.path(), true).unwrap();
        assert_eq!(third.computed, 2);

        // a tampered marker forces recomputation of that cell only
        let cells = expand_grid(&cfg).unwrap().cells;
        let layout = OutputLayout::new(dir.path());
        run_grid(&cfg, dir.path(), true).unwrap();
        let mut done: CellDone = output::read_json(&layout.cell_done(&cells[0].id)).unwrap();
        done.config_hash = "stale".into();
        output::write_json(&layout.cell_done(&cells[0].id), &done).unwrap();
        let fourth = run_grid(&cfg, dir.path(), true).unwrap();
        assert_eq!((fourth.computed, fourth.reused), (1, 1));
    }

    #[test]
    fn summarize_round_trips_results() {
        let dir = tempfile::tempdir().unwrap();
        run_grid(&small("tau = [0.5, 1]\npolicies = [\"ucb_tau\", \"thompson\", \"eps_greedy\"]"), dir.path(), false)
            .unwrap();
        let path = dir.path().join("results.csv");
        let before = std::fs::read(&path).unwrap();
        summarize(dir.path()).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }

    #[test]
    fn run_requires_one_cell() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run_single(&small("tau = [0.5, 1]"), dir.path()), Err(Error::Config { .. })));
        let err = run_single(&small("tau = 1\nrule = \"phi\""), dir.path()).unwrap_err();
        assert!(err.to_string().contains("not tunable"), "{err}");
        let out = run_single(&small("rule = \"alpha\"\nalpha = 2.1"), dir.path()).unwrap();
        assert_eq!(out.records.last().unwrap().rule.as_deref(), Some("alpha"));
        assert_eq!(out.records.last().unwrap().delta, Some(2.1));
    }

    #[test]
    fn bounds_cover_instances_and_cells() {
        let cfg = small("tau = [0.5, 0.75, 2]\nrule = [\"explicit_beta\", \"minimax\"]\ndelta = [0.1, 2.0]");
        let rows = bound_rows(&cfg, 0.0, 1.0).unwrap();
        let count = |tag: &str| rows.iter().filter(|r| r.policy == tag).count();
        let cp = 9;
        assert_eq!(count("bound:lai_robbins"), cp);
        assert_eq!(count("bound:lai_robbins_pull"), cp);
        // explicit_beta explores at delta = 2 and under-explores at 0.1 for all
        // three taus. Minimax uses alpha = 2 gamma^2 = 2: beta(1/2) = 2 is not
        // exceeded, beta(3/4) = 2 (2/3)^(4/3) is.
        assert_eq!(count("bound:thm1_nta"), 4 * cp);
        assert_eq!(count("bound:thm1_nta_re"), 4 * cp);
        assert_eq!(count("bound:thm5_underexploration"), 4 * cp);
        // minimax cells exist for tau = 1/2 and 3/4
        assert_eq!(count("bound:thm2_minimax"), 2 * cp);
        let lr = rows.iter().find(|r| r.policy == "bound:lai_robbins" && r.t_checkpoint == 200).unwrap();
        assert!((lr.regret_mean - 2.0 * 2.0 * 200f64.ln()).abs() < 1e-9);
    }
}
