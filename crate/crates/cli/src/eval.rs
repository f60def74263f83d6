//! `eval`: metric reports.

use std::fs;
use std::path::Path;

use pcsmri::acquisition::zero_filled;
use pcsmri::container::{self, data_path};
use pcsmri::metrics::{evaluate, render_csv, render_table, ReportRow};

use crate::args::{EvalArgs, Format};
use crate::case::{self, load_case};
use crate::error::{CliError, CliResult};

pub const ZERO_FILLED: &str = "zero_filled";

/// Rows for the zero-filled image and every `recon/<method>/recon` of a case.
pub fn case_rows(dir: &Path) -> CliResult<Vec<ReportRow>> {
    let case = load_case(dir, true)?;
    let sens = case.sens.as_ref().expect("sensitivities requested");
    let gt = case
        .gt
        .as_ref()
        .ok_or_else(|| CliError::config(format!("{} has no ground truth", dir.display())))?;
    let support = sens.support();
    let mut rows = vec![ReportRow {
        case: case.name.clone(),
        method: ZERO_FILLED.into(),
        metrics: evaluate(&sens.restrict(&zero_filled(&case.kspace, sens)?)?, gt, Some(support))?,
    }];
    let recon_root = dir.join(case::RECON_DIR);
    if recon_root.is_dir() {
        let entries = fs::read_dir(&recon_root).map_err(|e| CliError::io(&recon_root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(&recon_root, e))?;
            let path = case::artifact(&entry.path(), case::RECON);
            if !path.exists() {
                continue;
            }
            let rec = container::read_image(&path)?;
            rows.push(ReportRow {
                case: case.name.clone(),
                method: entry.file_name().to_string_lossy().into_owned(),
                metrics: evaluate(&rec, gt, Some(support))?,
            });
        }
    }
    Ok(rows)
}

pub fn eval(args: &EvalArgs) -> CliResult<String> {
    let rows = if !args.batch.is_empty() {
        let mut rows = Vec::new();
        for dir in &args.batch {
            rows.extend(case_rows(dir)?);
        }
        rows
    } else {
        let (Some(rec), Some(gt)) = (&args.recon, &args.gt) else {
            return Err(CliError::config("eval needs --batch or both --recon and --gt"));
        };
        let rec = container::read_image(&data_path(rec))?;
        let gt = container::read_image(&data_path(gt))?;
        let sens = args
            .support
            .as_ref()
            .map(|s| container::read_sens(&data_path(s)))
            .transpose()?;
        let region = sens.as_ref().map(|s| s.support());
        vec![ReportRow {
            case: args.case.clone(),
            method: args.method.clone(),
            metrics: evaluate(&rec, &gt, region)?,
        }]
    };
    let report = match args.format {
        Format::Csv => render_csv(&rows),
        Format::Table => render_table(&rows),
    };
    match &args.out {
        Some(path) => {
            fs::write(path, &report).map_err(|e| CliError::io(path, e))?;
            Ok(format!("wrote {} rows to {}\n", rows.len(), path.display()))
        }
        None => Ok(report),
    }
}
