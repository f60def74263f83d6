//! Image quality metrics and reports.
//!
//! All metrics compare magnitude images; complex inputs are reduced with
//! `|.|` by [`evaluate`]. PSNR peak and SSIM dynamic range come from the
//! ground truth, so both are orientation-sensitive. An optional region
//! (typically the sensitivity support) restricts which pixels count.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tensor::{ComplexImage, RealImage};

/// PSNR reported for identical images in text output.
pub const PSNR_CAP: f64 = 99.99;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_pair(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> Result<()> {
    gt.shape().expect(rec.shape(), "metric inputs")?;
    if let Some(r) = region {
        if r.len() != gt.shape().len() {
            return Err(Error::DataLength {
                expected: gt.shape().len(),
                found: r.len(),
            });
        }
        if !r.iter().any(|&b| b) {
            return Err(Error::Metric("evaluation region is empty".into()));
        }
    }
    Ok(())
}

fn selected<'a>(
    rec: &'a RealImage,
    gt: &'a RealImage,
    region: Option<&'a [bool]>,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    rec.data()
        .iter()
        .zip(gt.data())
        .enumerate()
        .filter(move |(i, _)| region.map_or(true, |r| r[*i]))
        .map(|(_, (&a, &b))| (a, b))
}

fn mse(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> f64 {
    let (sum, n) = selected(rec, gt, region).fold((0.0, 0usize), |(s, n), (a, b)| (s + (a - b).powi(2), n + 1));
    sum / n as f64
}

/// `10 log10(peak^2 / MSE)` with `peak = max(gt)`; `+inf` for identical
/// inputs.
pub fn psnr(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> Result<f64> {
    check_pair(rec, gt, region)?;
    let peak = selected(rec, gt, region).map(|(_, b)| b).fold(f64::MIN, f64::max);
    if peak <= 0.0 {
        return Err(Error::Metric("ground truth has no positive intensity".into()));
    }
    let err = mse(rec, gt, region);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

pub fn rmse(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> Result<f64> {
    check_pair(rec, gt, region)?;
    Ok(mse(rec, gt, region).sqrt())
}

/// `||rec - gt||^2 / ||gt||^2`.
pub fn nmse(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> Result<f64> {
    check_pair(rec, gt, region)?;
    let (num, den) = selected(rec, gt, region).fold((0.0, 0.0), |(n, d), (a, b)| (n + (a - b).powi(2), d + b * b));
    if den == 0.0 {
        return Err(Error::Metric("NMSE is undefined for an all-zero ground truth".into()));
    }
    Ok(num / den)
}

/// Normalized 1D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - mid).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable "valid" filtering: output `(h - k + 1) x (w - k + 1)`.
fn filter_valid(data: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().enumerate().map(|(j, t)| t * data[r * w + c + j]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps.iter().enumerate().map(|(j, t)| t * rows[(r + j) * ow + c]).sum();
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11x11 Gaussian
/// windows (sigma 1.5), with dynamic range `max(gt) - min(gt)`.
///
/// With a region, only windows centered on region pixels are averaged. A
/// constant ground truth falls back to a unit dynamic range.
pub fn ssim(rec: &RealImage, gt: &RealImage, region: Option<&[bool]>) -> Result<f64> {
    check_pair(rec, gt, region)?;
    let (h, w) = (gt.height(), gt.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Metric(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let (lo, hi) = selected(rec, gt, region).fold((f64::MAX, f64::MIN), |(lo, hi), (_, b)| (lo.min(b), hi.max(b)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);

    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let x = rec.data();
    let y = gt.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(x, h, w, &taps);
    let my = filter_valid(y, h, w, &taps);
    let mxx = filter_valid(&xx, h, w, &taps);
    let myy = filter_valid(&yy, h, w, &taps);
    let mxy = filter_valid(&xy, h, w, &taps);

    let half = SSIM_WINDOW / 2;
    let ow = w - SSIM_WINDOW + 1;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, ((((&ux, &uy), &sxx), &syy), &sxy)) in mx.iter().zip(&my).zip(&mxx).zip(&myy).zip(&mxy).enumerate() {
        let (r, c) = (i / ow + half, i % ow + half);
        if region.is_some_and(|reg| !reg[r * w + c]) {
            continue;
        }
        let vx = sxx - ux * ux;
        let vy = syy - uy * uy;
        let cov = sxy - ux * uy;
        sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        count += 1;
    }
    if count == 0 {
        return Err(Error::Metric("no SSIM window is centered inside the region".into()));
    }
    Ok(sum / count as f64)
}

/// `x_init - x_gt`, the error map of an initial estimate.
pub fn artifact_residual(x_init: &ComplexImage, x_gt: &ComplexImage) -> Result<ComplexImage> {
    x_init.sub(x_gt)
}

/// The four reported metrics for one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub psnr: f64,
    pub ssim: f64,
    pub rmse: f64,
    pub nmse: f64,
}

/// Metrics of `|rec|` against `|gt|`.
pub fn evaluate(rec: &ComplexImage, gt: &ComplexImage, region: Option<&[bool]>) -> Result<Metrics> {
    let (r, g) = (rec.magnitude(), gt.magnitude());
    Ok(Metrics {
        psnr: psnr(&r, &g, region)?,
        ssim: ssim(&r, &g, region)?,
        rmse: rmse(&r, &g, region)?,
        nmse: nmse(&r, &g, region)?,
    })
}

/// One report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub method: String,
    pub metrics: Metrics,
}

pub const CSV_HEADER: &str = "case,method,PSNR,SSIM,RMSE,NMSE";

/// PSNR as printed: infinite or overly large values show as the cap.
pub fn format_psnr(psnr: f64) -> String {
    format!("{:.4}", psnr.min(PSNR_CAP))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows sorted by case then method, as comma-separated values.
pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.case.cmp(&b.case).then_with(|| a.method.cmp(&b.method)));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        let m = r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6e},{:.6e}",
            csv_field(&r.case),
            csv_field(&r.method),
            format_psnr(m.psnr),
            m.ssim,
            m.rmse,
            m.nmse
        );
    }
    out
}

/// Aligned text table of the same rows.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.case.cmp(&b.case).then_with(|| a.method.cmp(&b.method)));
    let cw = rows.iter().map(|r| r.case.len()).max().unwrap_or(0).max(4);
    let mw = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<cw$}  {:<mw$}  {:>8}  {:>8}  {:>12}  {:>12}\n",
        "case", "method", "PSNR", "SSIM", "RMSE", "NMSE"
    );
    for r in &rows {
        let m = r.metrics;
        let _ = writeln!(
            out,
            "{:<cw$}  {:<mw$}  {:>8}  {:>8.4}  {:>12.4e}  {:>12.4e}",
            r.case,
            r.method,
            format!("{:.2}", m.psnr.min(PSNR_CAP)),
            m.ssim,
            m.rmse,
            m.nmse
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::rng;
    use rand::Rng;

    fn real(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> RealImage {
        let data = (0..h * w).map(|i| f(i / w, i % w)).collect();
        RealImage::from_vec(h, w, data).unwrap()
    }

    fn random_real(seed: u64, h: usize, w: usize) -> RealImage {
        let mut r = rng(seed);
        let data = (0..h * w).map(|_| r.gen_range(0.0..1.0)).collect();
        RealImage::from_vec(h, w, data).unwrap()
    }

    #[test]
    fn identical_images() {
        let g = random_real(1, 16, 16);
        assert_eq!(psnr(&g, &g, None).unwrap(), f64::INFINITY);
        assert_eq!(format_psnr(f64::INFINITY), "99.9900");
        assert_eq!(ssim(&g, &g, None).unwrap(), 1.0);
        assert_eq!(rmse(&g, &g, None).unwrap(), 0.0);
        assert_eq!(nmse(&g, &g, None).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_values() {
        // peak 1, every error 0.1 -> MSE 0.01 -> 20 dB
        let g = real(4, 4, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.5 });
        let rec = real(4, 4, |r, c| g.get(r, c) + 0.1);
        assert!((psnr(&rec, &g, None).unwrap() - 20.0).abs() < 1e-10);
        let plus_one = real(4, 4, |r, c| g.get(r, c) + 1.0);
        assert!((rmse(&plus_one, &g, None).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn luminance_shift_lowers_ssim() {
        let g = random_real(2, 20, 20);
        let range =
            g.data().iter().cloned().fold(f64::MIN, f64::max) - g.data().iter().cloned().fold(f64::MAX, f64::min);
        let shifted = real(20, 20, |r, c| g.get(r, c) + 0.5 * range);
        assert!(ssim(&shifted, &g, None).unwrap() < 1.0);
    }

    #[test]
    fn orientation() {
        let a = random_real(3, 16, 16);
        let b = real(16, 16, |r, c| 2.0 * a.get(r, c) + 0.1);
        assert_eq!(rmse(&a, &b, None).unwrap(), rmse(&b, &a, None).unwrap());
        assert_ne!(psnr(&a, &b, None).unwrap(), psnr(&b, &a, None).unwrap());
        assert_ne!(ssim(&a, &b, None).unwrap(), ssim(&b, &a, None).unwrap());
    }

    #[test]
    fn errors() {
        let g = random_real(4, 16, 16);
        let other = random_real(4, 16, 17);
        assert!(matches!(psnr(&other, &g, None), Err(Error::ShapeMismatch { .. })));
        let zero = real(16, 16, |_, _| 0.0);
        assert!(matches!(psnr(&g, &zero, None), Err(Error::Metric(_))));
        assert!(matches!(nmse(&g, &zero, None), Err(Error::Metric(_))));
        let small = random_real(5, 8, 8);
        assert!(matches!(ssim(&small, &small, None), Err(Error::Metric(_))));
        assert!(psnr(&g, &g, Some(&[false; 256])).is_err());
    }

    #[test]
    fn region_restricts_pixels() {
        let g = random_real(6, 16, 16);
        let mut rec = g.data().to_vec();
        rec[0] += 5.0;
        let rec = RealImage::from_vec(16, 16, rec).unwrap();
        let mut region = vec![true; 256];
        region[0] = false;
        assert_eq!(rmse(&rec, &g, Some(&region)).unwrap(), 0.0);
        assert!(rmse(&rec, &g, None).unwrap() > 0.0);
    }

    #[test]
    fn residual() {
        let mut r = rng(7);
        let a = crate::test_util::random_image(&mut r, 6, 6);
        let b = crate::test_util::random_image(&mut r, 6, 6);
        assert_eq!(artifact_residual(&a, &a).unwrap().l2_norm(), 0.0);
        let res = artifact_residual(&a.add(&b).unwrap(), &a).unwrap();
        assert!(crate::test_util::rel_err(res.data(), b.data()) < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let m = Metrics {
            psnr: f64::INFINITY,
            ssim: 1.0,
            rmse: 0.0,
            nmse: 0.0,
        };
        let rows = vec![
            ReportRow {
                case: "knee".into(),
                method: "zf".into(),
                metrics: m,
            },
            ReportRow {
                case: "brain".into(),
                method: "tv".into(),
                metrics: m,
            },
        ];
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "case,method,PSNR,SSIM,RMSE,NMSE");
        assert!(lines[1].starts_with("brain,tv,99.9900,1.000000,"));
        assert!(lines[2].starts_with("knee,zf,"));
        assert!(render_table(&rows).contains("99.99"));
    }
}
