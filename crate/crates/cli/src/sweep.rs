//! `sweep`: reconstruct and score a case over a parameter grid.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use pcsmri::container::DType;
use pcsmri::metrics::{format_psnr, Metrics};
use pcsmri::SensitivitySet;

use crate::args::SweepArgs;
use crate::case::{create_dir, load_case, LoadedCase};
use crate::config::{read_pairs, Grid, ReconConfig};
use crate::error::{CliError, CliResult};
use crate::recon::{reconstruct, resolve_sens, score, write_outputs};

pub const REPORT: &str = "sweep.csv";

pub type Point = Vec<(String, String)>;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: Point,
    pub outcome: Result<Metrics, String>,
}

struct Job<'a> {
    case: &'a LoadedCase,
    sens: &'a SensitivitySet,
    base: &'a [(String, String)],
    base_dir: &'a Path,
    out_dir: &'a Path,
    dtype: DType,
}

impl Job<'_> {
    fn run(&self, index: usize, point: &Point) -> CliResult<Metrics> {
        let mut pairs = self.base.to_vec();
        pairs.extend(point.iter().cloned());
        let cfg = ReconConfig::from_pairs(&pairs, self.base_dir)?;
        let dir = self.out_dir.join(format!("run_{index:03}"));
        create_dir(&dir)?;
        let out = reconstruct(self.case, self.sens, &cfg, &dir)?;
        let scores = score(self.case, self.sens, &out)?;
        write_outputs(&dir, &out, &cfg, scores.as_ref(), self.dtype)?;
        Ok(scores.expect("ground truth checked").1)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Index of the highest-PSNR successful row; the first one wins ties.
pub fn best_row(rows: &[SweepRow]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Ok(m) = &r.outcome {
            if best.map_or(true, |(_, p)| m.psnr > p) {
                best = Some((i, m.psnr));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn render_report(keys: &[String], rows: &[SweepRow]) -> String {
    let best = best_row(rows);
    let mut out = String::from("run");
    for k in keys {
        out.push(',');
        out += k;
    }
    out += ",status,PSNR,SSIM,RMSE,NMSE,best\n";
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "{i}");
        for (_, v) in &row.point {
            let _ = write!(out, ",{}", quote(v));
        }
        match &row.outcome {
            Ok(m) => {
                let _ = write!(
                    out,
                    ",ok,{},{:.6},{:.6e},{:.6e}",
                    format_psnr(m.psnr),
                    m.ssim,
                    m.rmse,
                    m.nmse
                );
            }
            Err(e) => {
                let _ = write!(out, ",{},,,,", quote(&format!("failed: {e}")));
            }
        }
        out += if best == Some(i) { ",*\n" } else { ",\n" };
    }
    out
}

pub fn run_grid(
    case: &LoadedCase,
    sens: &SensitivitySet,
    base: &[(String, String)],
    base_dir: &Path,
    points: &[Point],
    out_dir: &Path,
    jobs: usize,
    dtype: DType,
) -> Vec<SweepRow> {
    let job = Job {
        case,
        sens,
        base,
        base_dir,
        out_dir,
        dtype,
    };
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Metrics, String>>>> = points.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..jobs.min(points.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let outcome = job
                    .run(i, &points[i])
                    .map_err(|e| format!("exit {}: {}", e.kind.code(), e.message));
                *slots[i].lock().expect("slot lock") = Some(outcome);
            });
        }
    });
    points
        .iter()
        .zip(slots)
        .map(|(p, slot)| SweepRow {
            point: p.clone(),
            outcome: slot.into_inner().expect("slot lock").expect("every point runs"),
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> CliResult<String> {
    if args.jobs == 0 {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let grid = Grid::from_file(&args.grid)?;
    let (base, base_dir) = match &args.config {
        Some(p) => (read_pairs(p)?, p.parent().unwrap_or(Path::new(".")).to_path_buf()),
        None => (Vec::new(), PathBuf::from(".")),
    };
    let case = load_case(&args.case_dir, true)?;
    if case.gt.is_none() {
        return Err(CliError::config(format!(
            "{} has no ground truth to score against",
            args.case_dir.display()
        )));
    }
    let sens = resolve_sens(&case, false, None, true)?;
    let out_dir = args.out.clone().unwrap_or_else(|| args.case_dir.join("sweep"));
    create_dir(&out_dir)?;

    let points = grid.points();
    let rows = run_grid(&case, &sens, &base, &base_dir, &points, &out_dir, args.jobs, args.dtype);
    let keys: Vec<String> = grid.axes.iter().map(|(k, _)| k.clone()).collect();
    let report = render_report(&keys, &rows);
    let path = out_dir.join(REPORT);
    fs::write(&path, &report).map_err(|e| CliError::io(&path, e))?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see {}", rows.len(), path.display());
    }
    Ok(report)
}
