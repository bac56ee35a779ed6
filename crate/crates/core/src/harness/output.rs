//! Result records, per-cell files and atomic persistence.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::GridConfig;
use super::grid::{Cell, CellCoords, Skipped};
use crate::bounds::BoundCurve;
use crate::error::{Error, Result};
use crate::metrics::RegretSummary;

/// Version of the CSV and metadata layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const RESULT_HEADER: [&str; 18] = [
    "policy",
    "tau",
    "rule",
    "delta",
    "sigma",
    "gap",
    "arms",
    "t_checkpoint",
    "repetitions",
    "regret_mean",
    "regret_std",
    "regret_stderr",
    "rar_50",
    "rar_90",
    "rar_95",
    "worst_arm_pulls",
    "seed",
    "wall_time",
];

/// One CSV row: a cell at one checkpoint, or a bound curve at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub policy: String,
    pub tau: Option<String>,
    pub rule: Option<String>,
    pub delta: Option<f64>,
    pub sigma: f64,
    pub gap: f64,
    pub arms: usize,
    pub t_checkpoint: u64,
    pub repetitions: u64,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub regret_stderr: f64,
    pub rar_50: Option<f64>,
    pub rar_90: Option<f64>,
    pub rar_95: Option<f64>,
    pub worst_arm_pulls: Option<f64>,
    pub seed: Option<u64>,
    pub wall_time: f64,
}

/// Rows of one simulated cell.
pub fn cell_records(coords: &CellCoords, seed: u64, summary: &RegretSummary, wall_time: f64) -> Vec<ResultRecord> {
    summary
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &t)| ResultRecord {
            policy: coords.policy.tag().into(),
            tau: coords.tau.map(|t| t.to_string()),
            rule: coords.rule.map(|r| r.tag().into()),
            delta: coords.delta,
            sigma: coords.sigma,
            gap: coords.gap,
            arms: coords.arms,
            t_checkpoint: t,
            repetitions: summary.repetitions,
            regret_mean: summary.mean[c],
            regret_std: summary.std[c],
            regret_stderr: summary.stderr[c],
            rar_50: Some(summary.quantiles[c][0]),
            rar_90: Some(summary.quantiles[c][1]),
            rar_95: Some(summary.quantiles[c][2]),
            worst_arm_pulls: Some(summary.worst_arm_pulls[c]),
            seed: Some(seed),
            wall_time,
        })
        .collect()
}

/// Where a bound curve row sits in the grid. Curve-specific coordinates are
/// left empty for instance-level curves.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundContext {
    pub tau: Option<String>,
    pub rule: Option<String>,
    pub delta: Option<f64>,
    pub sigma: f64,
    pub gap: f64,
    pub arms: usize,
}

pub fn bound_records(curve: &BoundCurve, ctx: &BoundContext) -> Vec<ResultRecord> {
    curve
        .values
        .iter()
        .map(|&(t, v)| ResultRecord {
            policy: curve.policy_tag(),
            tau: ctx.tau.clone(),
            rule: ctx.rule.clone(),
            delta: ctx.delta,
            sigma: ctx.sigma,
            gap: ctx.gap,
            arms: ctx.arms,
            t_checkpoint: t,
            repetitions: 0,
            regret_mean: v,
            regret_std: 0.0,
            regret_stderr: 0.0,
            rar_50: None,
            rar_90: None,
            rar_95: None,
            worst_arm_pulls: None,
            seed: None,
            wall_time: 0.0,
        })
        .collect()
}

/// Writes `path` through a temporary file in the same directory, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serializes records with the fixed header, even when there are none.
pub fn write_records(w: &mut dyn Write, records: &[ResultRecord]) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(RESULT_HEADER)?;
    for r in records {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[ResultRecord]) -> Result<()> {
    write_atomic(path, |w| write_records(w, records))
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_HEADER {
        return Err(Error::config(path.display().to_string(), format!("unexpected header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct RepRow {
    t_checkpoint: u64,
    repetition: u64,
    regret: f64,
    worst_arm_pulls: u64,
}

/// Per-repetition regret and worst-arm pull counts, checkpoint-major.
pub fn write_reps(path: &Path, summary: &RegretSummary) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for (c, &t) in summary.checkpoints.iter().enumerate() {
            for (r, (&regret, &worst)) in summary.regret_samples[c].iter().zip(&summary.worst_samples[c]).enumerate() {
                csv.serialize(RepRow { t_checkpoint: t, repetition: r as u64, regret, worst_arm_pulls: worst })?;
            }
        }
        csv.flush()?;
        Ok(())
    })
}

/// Rebuilds a summary from a per-repetition file, reducing in repetition order.
pub fn read_reps(path: &Path) -> Result<RegretSummary> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut checkpoints: Vec<u64> = Vec::new();
    let mut regrets: Vec<Vec<f64>> = Vec::new();
    let mut worst: Vec<Vec<u64>> = Vec::new();
    for row in rdr.deserialize() {
        let row: RepRow = row?;
        if checkpoints.last() != Some(&row.t_checkpoint) {
            checkpoints.push(row.t_checkpoint);
            regrets.push(Vec::new());
            worst.push(Vec::new());
        }
        let c = checkpoints.len() - 1;
        if row.repetition != regrets[c].len() as u64 {
            return Err(Error::config(path.display().to_string(), "repetitions out of order"));
        }
        regrets[c].push(row.regret);
        worst[c].push(row.worst_arm_pulls);
    }
    RegretSummary::from_samples(checkpoints, regrets, worst, Vec::new())
}

/// Completion marker of a cell, written after its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDone {
    pub id: String,
    pub seed: u64,
    pub config_hash: String,
    /// Measured seconds; the CSV carries 0 in ordered mode.
    pub wall_time: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub id: String,
    pub coords: CellCoords,
    pub seed: u64,
    pub config_hash: String,
}

impl From<&Cell> for CellEntry {
    fn from(cell: &Cell) -> Self {
        CellEntry {
            id: cell.id.clone(),
            coords: cell.coords.clone(),
            seed: cell.spec.master_seed,
            config_hash: cell.config_hash(),
        }
    }
}

/// The metadata sidecar next to `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub code_version: String,
    pub config: GridConfig,
    pub cells: Vec<CellEntry>,
    pub skipped: Vec<Skipped>,
}

/// File layout of an output directory.
#[derive(Clone, Debug)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputLayout { root: root.into() }
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.csv")
    }

    pub fn bounds(&self) -> PathBuf {
        self.root.join("bounds.csv")
    }

    pub fn metadata(&self) -> PathBuf {
        self.root.join("metadata.json")
    }

    pub fn cell_dir(&self) -> PathBuf {
        self.root.join("cells")
    }

    pub fn cell_csv(&self, id: &str) -> PathBuf {
        self.cell_dir().join(format!("{id}.csv"))
    }

    pub fn cell_reps(&self, id: &str) -> PathBuf {
        self.cell_dir().join(format!("{id}.reps.csv"))
    }

    pub fn cell_done(&self, id: &str) -> PathBuf {
        self.cell_dir().join(format!("{id}.done.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PolicyKind;
    use crate::policies::Tau;

    fn summary() -> RegretSummary {
        RegretSummary::from_samples(
            vec![1, 4],
            vec![vec![0.0, 1.0, 0.5], vec![1.5, 2.25, 0.1]],
            vec![vec![0, 1, 0], vec![1, 2, 0]],
            vec![],
        )
        .unwrap()
    }

    fn coords() -> CellCoords {
        CellCoords {
            policy: PolicyKind::UcbTau,
            tau: Some(Tau::Infinite),
            rule: None,
            delta: Some(0.1),
            sigma: 1.0,
            gap: 0.5,
            arms: 3,
            horizon: 4,
            repetitions: 3,
        }
    }

    #[test]
    fn records_round_trip_byte_identically() {
        let records = cell_records(&coords(), 42, &summary(), 0.0);
        let mut first = Vec::new();
        write_records(&mut first, &records).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(text.starts_with(&RESULT_HEADER.join(",")));
        assert!(text.contains("ucb_tau,inf,,0.1,1.0,0.5,3,1,3,"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, &first).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back, records);
        let mut second = Vec::new();
        write_records(&mut second, &back).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn reps_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells").join("x.reps.csv");
        let s = summary();
        write_reps(&path, &s).unwrap();
        let back = read_reps(&path).unwrap();
        assert_eq!(back.mean, s.mean);
        assert_eq!(back.std, s.std);
        assert_eq!(back.quantiles, s.quantiles);
        assert_eq!(back.worst_arm_pulls, s.worst_arm_pulls);
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old").unwrap();
        let err = write_atomic(&path, |w| {
            w.write_all(b"half")?;
            Err(Error::EmptySample)
        });
        assert!(err.is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "old");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn bound_rows_leave_simulation_fields_empty() {
        let curve = BoundCurve { name: "lai_robbins".into(), parameters: Default::default(), values: vec![(10, 4.6)] };
        let rows = bound_records(&curve, &BoundContext { sigma: 1.0, gap: 1.0, arms: 2, ..Default::default() });
        let mut buf = Vec::new();
        write_records(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "bound:lai_robbins,,,,1.0,1.0,2,10,0,4.6,0.0,0.0,,,,,,0.0");
    }
}
