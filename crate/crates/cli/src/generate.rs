//! `phantom`, `mask`, `sense` and `simulate`.

use pcsmri::container::{self, data_path};
use pcsmri::phantom::{make_coil_profiles, make_phantom, simulate_case};
use pcsmri::sampling::make_equispaced_mask_with_offset;
use pcsmri::sensitivity::estimate_maps;
use pcsmri::{CaseSpec, MaskKind, MaskProtocol, Organ, PhantomKind, SensitivitySet};

use crate::args::{MaskArgs, PhantomArgs, SenseArgs, SimulateArgs};
use crate::case::{create_dir, manifest_for, write_case, Manifest};
use crate::error::{CliError, CliResult};

fn ensure_parent(path: &std::path::Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

pub fn phantom(args: &PhantomArgs) -> CliResult<String> {
    let (h, w) = args.grid.dims();
    let img = make_phantom(h, w, args.kind, args.phase_ramp, args.seed)?;
    let path = data_path(&args.out);
    ensure_parent(&path)?;
    container::write_image(&path, "image", &img, args.dtype)?;
    let mut m = Manifest::new("phantom");
    m.push("kind", args.kind)
        .push("height", h)
        .push("width", w)
        .push("phase_ramp", args.phase_ramp)
        .push("seed", args.seed);
    m.write(&manifest_for(&args.out))?;
    Ok(format!("wrote {} ({h}x{w} {})\n", path.display(), args.kind))
}

pub fn mask(args: &MaskArgs) -> CliResult<String> {
    let height = args.height.unwrap_or(args.width);
    let mask = match (args.kind, args.offset) {
        (MaskKind::Equispaced, Some(offset)) => {
            make_equispaced_mask_with_offset(height, args.width, args.acceleration, args.acs, offset)?
        }
        (_, Some(_)) => return Err(CliError::config("--offset applies to equispaced masks only")),
        (kind, None) => MaskProtocol {
            kind,
            acceleration: args.acceleration,
            acs_width: args.acs,
        }
        .build(height, args.width, args.seed)?,
    };
    let path = data_path(&args.out);
    ensure_parent(&path)?;
    container::write_mask(&path, &mask)?;
    let mut m = Manifest::new("mask");
    m.push("kind", args.kind)
        .push("height", height)
        .push("width", args.width)
        .push("R", args.acceleration)
        .push("acs_width", args.acs)
        .push("seed", args.seed);
    if let Some(o) = args.offset {
        m.push("offset", o);
    }
    m.write(&manifest_for(&args.out))?;
    Ok(format!(
        "wrote {}: {} of {} lines selected (ratio {:.4})\n",
        path.display(),
        mask.selected_count(),
        mask.width(),
        mask.sampling_ratio()
    ))
}

pub fn sense(args: &SenseArgs) -> CliResult<String> {
    let mut m = Manifest::new("sense");
    let sens = match (&args.kspace, &args.mask) {
        (Some(k), Some(mk)) => {
            let y = container::read_kspace(&data_path(k))?;
            let mask = container::read_mask(&data_path(mk))?;
            let acs = args.acs.unwrap_or(mask.acs_width());
            m.push("mode", "estimate")
                .push("kspace", k.display())
                .push("mask", mk.display())
                .push("acs", acs)
                .push("apodize", !args.no_apodize);
            estimate_maps(&y, &mask, acs, !args.no_apodize)?
        }
        (Some(_), None) => return Err(CliError::config("--kspace needs --mask")),
        _ => {
            let (h, w) = args.grid.dims();
            m.push("mode", "simulate")
                .push("coils", args.coils)
                .push("height", h)
                .push("width", w)
                .push("seed", args.seed);
            SensitivitySet::normalized(make_coil_profiles(h, w, args.coils, args.seed)?)?
        }
    };
    let path = data_path(&args.out);
    ensure_parent(&path)?;
    container::write_sens(&path, &sens, args.dtype)?;
    m.write(&manifest_for(&args.out))?;
    Ok(format!("wrote {} ({} coils)\n", path.display(), sens.num_coils()))
}

/// Case recipe from a preset (or the brain-like defaults) plus overrides.
pub fn case_spec(args: &SimulateArgs) -> CliResult<CaseSpec> {
    let (h, w) = args.grid.dims();
    let mut spec = match args.preset {
        Some(organ) => CaseSpec::preset(organ, w, args.seed),
        None => CaseSpec {
            phantom: PhantomKind::SheppLogan,
            height: h,
            width: w,
            phase_ramp: false,
            coils: 4,
            mask: MaskProtocol {
                kind: MaskKind::Random,
                acceleration: 4.0,
                acs_width: 24,
            }
            .fitted(w),
            noise_sigma: 0.0,
            seed: args.seed,
        },
    };
    spec.height = h;
    spec.width = w;
    if let Some(p) = args.phantom {
        spec.phantom = p;
    }
    if let Some(k) = args.kind {
        spec.mask.kind = k;
    }
    if let Some(r) = args.acceleration {
        spec.mask.acceleration = r;
        if args.acs.is_none() {
            spec.mask = MaskProtocol {
                acs_width: 24,
                ..spec.mask
            }
            .fitted(w);
        }
    }
    if let Some(a) = args.acs {
        spec.mask.acs_width = a;
    }
    spec.coils = args.coils;
    spec.noise_sigma = args.noise;
    spec.phase_ramp = args.phase_ramp;
    Ok(spec)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<String> {
    let spec = case_spec(args)?;
    let case = simulate_case(&spec)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "case".into())
    });
    let mut m = Manifest::new("simulate");
    m.push("name", &name)
        .push("preset", args.preset.map_or("none", |o: Organ| o.as_str()))
        .push("phantom", spec.phantom)
        .push("height", spec.height)
        .push("width", spec.width)
        .push("phase_ramp", spec.phase_ramp)
        .push("coils", spec.coils)
        .push("mask_kind", spec.mask.kind)
        .push("R", spec.mask.acceleration)
        .push("acs_width", spec.mask.acs_width)
        .push("selected_lines", case.mask.selected_count())
        .push("noise_sigma", spec.noise_sigma)
        .push("seed", spec.seed)
        .push("dtype", args.dtype);
    write_case(&args.out, &case, &m, args.dtype)?;
    Ok(format!(
        "wrote case `{name}` to {}: {}x{} {} coils, {} mask R={} ({} lines, ACS {})\n",
        args.out.display(),
        spec.height,
        spec.width,
        spec.coils,
        spec.mask.kind,
        spec.mask.acceleration,
        case.mask.selected_count(),
        spec.mask.acs_width
    ))
}
