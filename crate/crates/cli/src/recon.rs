//! `recon`: one reconstruction of a case directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pcsmri::acquisition::zero_filled;
use pcsmri::container::{self, data_path, DType};
use pcsmri::metrics::{evaluate, format_psnr, Metrics};
use pcsmri::sensitivity::estimate_maps;
use pcsmri::solver::SolverState;
use pcsmri::{ComplexImage, SensitivitySet};

use crate::args::ReconArgs;
use crate::case::{self, create_dir, load_case, LoadedCase, Manifest};
use crate::config::{read_pairs, PriorName, ReconConfig};
use crate::error::{CliError, CliResult};

pub const OBJECTIVE_LOG: &str = "objective.log";
pub const CONFIG_ECHO: &str = "config.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub struct ReconOutput {
    pub image: ComplexImage,
    pub state: SolverState,
    pub zero_filled: ComplexImage,
}

/// Stored maps, or an estimate from the calibration block.
pub fn resolve_sens(case: &LoadedCase, estimate: bool, acs: Option<usize>, apodize: bool) -> CliResult<SensitivitySet> {
    if estimate {
        let acs = acs.unwrap_or(case.mask.acs_width());
        return Ok(estimate_maps(&case.kspace, &case.mask, acs, apodize)?);
    }
    case.sens
        .clone()
        .ok_or_else(|| CliError::config(format!("{} has no sensitivity maps", case.dir.display())))
}

/// Runs the solver; an external prior exchanges files under `work_dir`.
pub fn reconstruct(
    case: &LoadedCase,
    sens: &SensitivitySet,
    cfg: &ReconConfig,
    work_dir: &Path,
) -> CliResult<ReconOutput> {
    let exchange = work_dir.join("exchange");
    if cfg.prior == PriorName::External {
        create_dir(&exchange)?;
    }
    let solver_cfg = cfg.solver_config(&exchange)?;
    let (image, state) = pcsmri::solve(&case.kspace, sens, &case.mask, &solver_cfg)?;
    let zero_filled = sens.restrict(&zero_filled(&case.kspace, sens)?)?;
    Ok(ReconOutput {
        image,
        state,
        zero_filled,
    })
}

/// Zero-filled and final metrics against the case ground truth.
pub fn score(case: &LoadedCase, sens: &SensitivitySet, out: &ReconOutput) -> CliResult<Option<(Metrics, Metrics)>> {
    let Some(gt) = &case.gt else {
        return Ok(None);
    };
    let support = sens.support();
    Ok(Some((
        evaluate(&out.zero_filled, gt, Some(support))?,
        evaluate(&out.image, gt, Some(support))?,
    )))
}

pub fn render_log(state: &SolverState, scores: Option<&(Metrics, Metrics)>) -> String {
    let mut log = String::from("# iteration objective\n");
    if !state.prior_term_included {
        log += "# prior term omitted: the external prior has no closed-form value\n";
    }
    for (t, v) in state.objective_history.iter().enumerate() {
        let _ = writeln!(log, "{t} {v:.12e}");
    }
    if !state.unconverged_filter_steps.is_empty() {
        let its: Vec<String> = state.unconverged_filter_steps.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(log, "# inner TV solve hit its iteration budget at: {}", its.join(" "));
    }
    if let Some((zf, rec)) = scores {
        let _ = writeln!(
            log,
            "# PSNR zero_filled = {} final = {} gain = {:.4}",
            format_psnr(zf.psnr),
            format_psnr(rec.psnr),
            rec.psnr - zf.psnr
        );
        let _ = writeln!(log, "# SSIM zero_filled = {:.6} final = {:.6}", zf.ssim, rec.ssim);
    }
    log
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes the image, objective log and resolved config into `dir`.
pub fn write_outputs(
    dir: &Path,
    out: &ReconOutput,
    cfg: &ReconConfig,
    scores: Option<&(Metrics, Metrics)>,
    dtype: DType,
) -> CliResult<()> {
    create_dir(dir)?;
    container::write_image(&case::artifact(dir, case::RECON), "image", &out.image, dtype)?;
    write_text(&dir.join(OBJECTIVE_LOG), &render_log(&out.state, scores))?;
    write_text(&dir.join(CONFIG_ECHO), &cfg.render())?;
    if !out.state.snapshots.is_empty() {
        let snap = dir.join(SNAPSHOT_DIR);
        create_dir(&snap)?;
        for s in &out.state.snapshots {
            let t = s.iteration;
            container::write_image(&data_path(&snap.join(format!("x_{t:03}"))), "image", &s.x, dtype)?;
            container::write_image(&data_path(&snap.join(format!("z_{t:03}"))), "image", &s.z, dtype)?;
        }
    }
    Ok(())
}

fn output_dir(args: &ReconArgs, cfg: &ReconConfig) -> PathBuf {
    match (&args.out, &args.name) {
        (Some(out), _) => out.clone(),
        (None, Some(name)) => args.case_dir.join(case::RECON_DIR).join(name),
        (None, None) => args.case_dir.join(case::RECON_DIR).join(cfg.prior.as_str()),
    }
}

pub fn config_for(args: &ReconArgs) -> CliResult<ReconConfig> {
    let (mut pairs, base) = match &args.config {
        Some(path) => (read_pairs(path)?, path.parent().unwrap_or(Path::new(".")).to_path_buf()),
        None => (Vec::new(), PathBuf::from(".")),
    };
    let mut push = |k: &str, v: &str| pairs.push((k.to_string(), v.to_string()));
    match (&args.prior, &args.cmd) {
        (Some(p), _) => push("prior", p),
        (None, Some(_)) => push("prior", "external"),
        _ => {}
    }
    if let Some(cmd) = &args.cmd {
        push("command", cmd);
    }
    if args.snapshots {
        push("record_history", "true");
    }
    ReconConfig::from_pairs(&pairs, &base)
}

pub fn recon(args: &ReconArgs) -> CliResult<String> {
    let cfg = config_for(args)?;
    let case = load_case(&args.case_dir, !args.estimate_sens)?;
    let sens = resolve_sens(&case, args.estimate_sens, args.acs, !args.no_apodize)?;
    let dir = output_dir(args, &cfg);
    create_dir(&dir)?;
    let out = reconstruct(&case, &sens, &cfg, &dir)?;
    let scores = score(&case, &sens, &out)?;
    write_outputs(&dir, &out, &cfg, scores.as_ref(), args.dtype)?;
    if args.estimate_sens {
        container::write_sens(&case::artifact(&dir, case::SENS), &sens, args.dtype)?;
    }
    let mut m = Manifest::new("recon");
    m.push("case", &case.name)
        .push("prior", cfg.prior.as_str())
        .push("estimate_sens", args.estimate_sens)
        .push("iterations", out.state.iteration)
        .push("dtype", args.dtype);
    m.write(&dir.join(case::MANIFEST))?;

    let final_obj = out.state.objective_history.last().copied().unwrap_or(f64::NAN);
    let mut msg = format!(
        "{}: {} iterations of {} (alpha={}, beta={}, lambda={}), objective {:.6e}\n",
        dir.display(),
        out.state.iteration,
        cfg.prior.as_str(),
        cfg.alpha,
        cfg.beta,
        cfg.lambda,
        final_obj
    );
    if let Some((zf, rec)) = &scores {
        let _ = writeln!(
            msg,
            "PSNR {} -> {} dB, SSIM {:.4} -> {:.4}",
            format_psnr(zf.psnr),
            format_psnr(rec.psnr),
            zf.ssim,
            rec.ssim
        );
    }
    Ok(msg)
}
