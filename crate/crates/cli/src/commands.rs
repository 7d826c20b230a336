use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ringtherm_core::defaults;
use ringtherm_core::ingest::{extract_site_intensities, load_image, Background, SiteSpot};
use ringtherm_core::layout::{layout_from_couplings, CouplingCalibration};
use ringtherm_core::stats::{
    bootstrap_g2, classify_amplitude_distribution, excited_samples, g2, histogram, localization_level,
    mean_intensities, AmplitudeClassification, BootstrapReport, Histogram, DEFAULT_REPEATS,
};
use ringtherm_core::sweep::{derive_bound, ensemble_size_study, gap_map, simulate_ensemble, PhaseMap};
use ringtherm_core::{sample_couplings, DisorderSpec, EnsembleParams, RandomStream, SweepGrid};
use serde::Serialize;

use crate::args::{
    BoundArgs, CommonArgs, EnsembleArgs, Format, GridArgs, IngestArgs, LayoutArgs, SeedArg, SimulateArgs,
    SizeStudyArgs, StatsArgs, SweepArgs,
};
use crate::config::{FileConfig, GridSection};
use crate::error::{CliError, CliResult};
use crate::output::{emit, float, persist_all, read_records, read_text, records_csv, records_jsonl, stage, Sink};

const DEFAULT_BINS: usize = 20;
const DEFAULT_THRESHOLD: f64 = 0.3;
const DEFAULT_SIZES: [usize; 7] = [5, 10, 20, 50, 100, 120, 200];

fn resolve_seed(common: &CommonArgs) -> Option<u64> {
    common.seed.map(|s| match s {
        SeedArg::Fixed(v) => v,
        SeedArg::Auto => {
            let v = rand::random();
            eprintln!("seed: {v}");
            v
        }
    })
}

fn require_seed(common: &CommonArgs) -> CliResult<u64> {
    resolve_seed(common)
        .ok_or_else(|| CliError::Config("--seed is required; pass `--seed auto` to draw a fresh seed".into()))
}

fn ensemble_params(
    flags: &EnsembleArgs,
    eta: Option<f64>,
    c_mean: Option<f64>,
    z: Option<f64>,
    excited: Option<usize>,
) -> EnsembleParams {
    let d = EnsembleParams::default();
    EnsembleParams {
        eta: flags.eta.or(eta).unwrap_or(d.eta),
        c_mean: flags.c_mean.or(c_mean).unwrap_or(d.c_mean),
        z_normalized: flags.z_normalized.or(z).unwrap_or(d.z_normalized),
        excited_site: flags.excited_site.or(excited).unwrap_or(d.excited_site),
    }
}

fn positive(name: &str, value: usize) -> CliResult<usize> {
    if value == 0 {
        return Err(CliError::Config(format!("{name} must be positive")));
    }
    Ok(value)
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text.into_bytes()
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let f = &file.simulate;
    let sites = a.sites.or(f.sites).ok_or_else(|| CliError::Config("--sites is required".into()))?;
    let params = ensemble_params(&a.ensemble, f.eta, f.c_mean, f.z_normalized, f.excited_site);
    params.validate(sites)?;
    let default_samples = if sites >= defaults::LOCALIZATION_MIN_SITES {
        defaults::LOCALIZATION_ENSEMBLE_SIZE
    } else {
        defaults::ENSEMBLE_SIZE
    };
    let samples = positive("samples", a.samples.or(f.samples).unwrap_or(default_samples))?;
    let seed = require_seed(&a.common)?;

    let records = simulate_ensemble(sites, &params, samples, &RandomStream::new(seed))?;
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => records_jsonl(&records),
        Format::Csv => records_csv(&records),
    };
    emit(Sink::from_option(a.common.out.as_ref()), text.as_bytes())
}

#[derive(Serialize)]
struct SiteLaw {
    site: usize,
    #[serde(flatten)]
    fit: AmplitudeClassification,
}

#[derive(Serialize)]
struct Histograms {
    excited_intensity: Histogram,
    excited_amplitude: Histogram,
}

#[derive(Serialize)]
struct StatsReport {
    input: String,
    records: usize,
    n_sites: usize,
    excited_site: usize,
    seed: u64,
    g2: f64,
    bootstrap: BootstrapReport,
    lambda: f64,
    mean_intensities: Vec<f64>,
    /// `None` where a site never lights up.
    per_site_g2: Vec<Option<f64>>,
    /// `None` where a site has too few or degenerate amplitudes.
    amplitude_laws: Vec<Option<SiteLaw>>,
    histograms: Histograms,
}

pub fn stats(a: StatsArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let f = &file.stats;
    let excited = a.excited_site.or(f.excited_site).unwrap_or(0);
    let repeats = positive("repeats", a.repeats.or(f.repeats).unwrap_or(DEFAULT_REPEATS))?;
    let bins = positive("bins", a.bins.or(f.bins).unwrap_or(DEFAULT_BINS))?;
    let resample = a.resample_size.or(f.resample_size);
    if resample == Some(0) {
        return Err(CliError::Config("resample size must be positive".into()));
    }
    let format = a.common.format.unwrap_or(Format::Json);
    let seed = require_seed(&a.common)?;

    let records = read_records(&a.input, excited)?;
    let n = records[0].n_sites;
    let samples = excited_samples(&records);
    let bootstrap = bootstrap_g2(&records, resample.unwrap_or(records.len()), repeats, &RandomStream::new(seed))?;
    let means = mean_intensities(&records)?;
    let column = |k: usize| records.iter().map(|r| r.normalized_intensities[k]).collect::<Vec<f64>>();
    let amplitudes: Vec<f64> = samples.iter().map(|i| i.sqrt()).collect();
    let report = StatsReport {
        input: a.input.display().to_string(),
        records: records.len(),
        n_sites: n,
        excited_site: records[0].excited_site,
        seed,
        g2: g2(&samples)?,
        bootstrap,
        lambda: localization_level(&means)?,
        per_site_g2: (0..n).map(|k| g2(&column(k)).ok()).collect(),
        amplitude_laws: (0..n)
            .map(|k| {
                let amps: Vec<f64> = column(k).iter().map(|i| i.sqrt()).collect();
                classify_amplitude_distribution(&amps).ok().map(|fit| SiteLaw { site: k, fit })
            })
            .collect(),
        mean_intensities: means,
        histograms: Histograms {
            excited_intensity: histogram(&samples, bins, None)?,
            excited_amplitude: histogram(&amplitudes, bins, None)?,
        },
    };

    let bytes = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut out = String::from("site,mean_intensity,g2,amplitude_law\n");
            for k in 0..n {
                out.push_str(&format!(
                    "{k},{},{},{}\n",
                    float(report.mean_intensities[k]),
                    report.per_site_g2[k].map(float).unwrap_or_default(),
                    report.amplitude_laws[k].as_ref().map(|l| l.fit.label.to_string()).unwrap_or_default()
                ));
            }
            out.into_bytes()
        }
    };
    emit(Sink::from_option(a.common.out.as_ref()), &bytes)
}

fn build_grid(flags: &GridArgs, file: &GridSection, master_seed: u64) -> CliResult<SweepGrid> {
    let d = SweepGrid::default();
    let site_counts = if flags.min_sites.is_some() || flags.max_sites.is_some() || file.site_counts.is_none() {
        let lo = flags.min_sites.or(file.min_sites).unwrap_or(d.site_counts[0]);
        let hi = flags.max_sites.or(file.max_sites).unwrap_or(*d.site_counts.last().unwrap());
        if hi < lo {
            return Err(CliError::Config(format!("max sites {hi} is below min sites {lo}")));
        }
        (lo..=hi).collect()
    } else {
        file.site_counts.clone().unwrap_or_default()
    };
    let disorder_levels = if flags.eta_step.is_some() || flags.eta_max.is_some() || file.disorder_levels.is_none() {
        let step = flags.eta_step.or(file.eta_step).unwrap_or(0.05);
        let max = flags.eta_max.or(file.eta_max).unwrap_or(1.0);
        if !(step > 0.0 && step.is_finite() && max >= step) {
            return Err(CliError::Config(format!("need 0 < eta step <= eta max, got step {step}, max {max}")));
        }
        let count = (max / step + 1e-9).floor() as usize;
        (1..=count).map(|k| k as f64 * step).collect()
    } else {
        file.disorder_levels.clone().unwrap_or_default()
    };
    let grid = SweepGrid {
        site_counts,
        disorder_levels,
        c_mean: flags.c_mean.or(file.c_mean).unwrap_or(d.c_mean),
        z_normalized: flags.z_normalized.or(file.z_normalized).unwrap_or(d.z_normalized),
        ensemble_size: flags.ensemble_size.or(file.ensemble_size).unwrap_or(d.ensemble_size),
        repeats: flags.repeats.or(file.repeats).unwrap_or(d.repeats),
        master_seed,
        excited_site: flags.excited_site.or(file.excited_site).unwrap_or(d.excited_site),
    };
    grid.validate()?;
    Ok(grid)
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    build_grid(&a.grid, &file.grid, 0)?;
    let seed = require_seed(&a.common)?;
    let grid = build_grid(&a.grid, &file.grid, seed)?;
    let map = gap_map(&grid)?;
    let bytes = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => map.to_csv().into_bytes(),
        Format::Json => json(&map),
    };
    emit(Sink::from_option(a.common.out.as_ref()), &bytes)
}

fn load_map(path: &Path) -> CliResult<PhaseMap> {
    PhaseMap::from_csv(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn bound(a: BoundArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let threshold = a.threshold.or(file.bound.threshold).unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(CliError::Config(format!("threshold must be finite and >= 0, got {threshold}")));
    }
    let (gap, loc) = match &a.gap {
        Some(path) => {
            let gap = load_map(path)?;
            let loc = match &a.loc {
                Some(p) => load_map(p)?,
                None => gap.clone(),
            };
            (gap, loc)
        }
        None => {
            if a.loc.is_some() {
                return Err(CliError::Config("--loc needs --gap".into()));
            }
            build_grid(&a.grid, &file.grid, 0)?;
            let seed = require_seed(&a.common)?;
            let map = gap_map(&build_grid(&a.grid, &file.grid, seed)?)?;
            (map.clone(), map)
        }
    };
    let estimate = derive_bound(&gap, &loc, threshold)?;
    eprintln!("bound: {:.4} ({} boundary pairs at threshold {threshold})", estimate.bound, estimate.boundary_count());
    let bytes = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => json(&estimate),
        Format::Csv => {
            let mut out = String::from("n_even,eta,g2_difference,lambda,marked,boundary\n");
            for c in &estimate.comparisons {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.n_even, c.eta, c.g2_difference, c.lambda, c.marked, c.boundary
                ));
            }
            out.into_bytes()
        }
    };
    emit(Sink::from_option(a.common.out.as_ref()), &bytes)
}

pub fn size_study(a: SizeStudyArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let f = &file.size_study;
    let odd = a.odd_sites.or(f.odd_sites).unwrap_or(3);
    let even = a.even_sites.or(f.even_sites).unwrap_or(4);
    let sizes = a.sizes.clone().or(f.sizes.clone()).unwrap_or(DEFAULT_SIZES.to_vec());
    let repeats = a.repeats.or(f.repeats).unwrap_or(defaults::SIMULATION_REPEATS);
    let params = ensemble_params(&a.ensemble, f.eta, f.c_mean, f.z_normalized, f.excited_site);
    params.validate(odd.min(even))?;
    let seed = require_seed(&a.common)?;

    let bands = ensemble_size_study(odd, even, &sizes, repeats, &params, &RandomStream::new(seed))?;
    let bytes = match a.common.format.unwrap_or(Format::Csv) {
        Format::Json => json(&bands),
        Format::Csv => {
            let mut out =
                String::from("ensemble_size,odd_mean,odd_std,even_mean,even_std,overlapping,operating_point\n");
            for b in &bands {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    b.ensemble_size,
                    b.odd.mean,
                    b.odd.std,
                    b.even.mean,
                    b.even.std,
                    b.overlapping(),
                    b.operating_point
                ));
            }
            out.into_bytes()
        }
    };
    emit(Sink::from_option(a.common.out.as_ref()), &bytes)
}

#[derive(Serialize)]
struct LayoutMetadata {
    circumradius_um: f64,
    waveguide_length_mm: f64,
    calibration: CouplingCalibration,
    seed: Option<u64>,
    couplings: Vec<f64>,
    chord_lengths_um: Vec<f64>,
    central_angles_rad: Vec<f64>,
}

#[derive(Serialize)]
struct LayoutDocument {
    #[serde(flatten)]
    metadata: LayoutMetadata,
    sites_um: Vec<(f64, f64)>,
}

pub fn layout(a: LayoutArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let f = &file.layout;
    let d = CouplingCalibration::default();
    let cal = CouplingCalibration {
        d_ref_um: a.d_ref.or(f.d_ref_um).unwrap_or(d.d_ref_um),
        c_ref: a.c_ref.or(f.c_ref).unwrap_or(d.c_ref),
        decay_length_um: a.decay_length.or(f.decay_length_um).unwrap_or(d.decay_length_um),
        wavelength_nm: a.wavelength.or(f.wavelength_nm).unwrap_or(d.wavelength_nm),
    };
    cal.validate()?;
    let waveguide_length_mm = a.waveguide_length.or(f.waveguide_length_mm).unwrap_or(defaults::WAVEGUIDE_LENGTH_MM);
    if !(waveguide_length_mm > 0.0 && waveguide_length_mm.is_finite()) {
        return Err(CliError::Config(format!("waveguide length must be positive, got {waveguide_length_mm}")));
    }
    let format = a.common.format.unwrap_or(Format::Csv);
    let side_path = match (&a.common.out, format) {
        (Some(out), Format::Csv) => {
            let side = out.with_extension("json");
            if &side == out {
                return Err(CliError::Config("CSV layout output must not use a .json extension".into()));
            }
            Some(side)
        }
        _ => None,
    };

    let (couplings, seed) = match a.couplings.clone().or(f.couplings.clone()) {
        Some(c) => (c, resolve_seed(&a.common)),
        None => {
            let sites = a.sites.or(f.sites).ok_or_else(|| CliError::Config("give --couplings or --sites".into()))?;
            let spec = DisorderSpec::new(
                a.c_mean.or(f.c_mean).unwrap_or(defaults::C_MEAN),
                a.eta.or(f.eta).unwrap_or(defaults::ETA),
            )?;
            if sites < ringtherm_core::lattice::MIN_RING_SITES {
                return Err(CliError::Config(format!("ring needs at least 3 sites, got {sites}")));
            }
            let seed = require_seed(&a.common)?;
            (sample_couplings(&spec, sites, &RandomStream::new(seed))?, Some(seed))
        }
    };
    if couplings.len() < ringtherm_core::lattice::MIN_RING_SITES {
        return Err(CliError::Config(format!("ring needs at least 3 couplings, got {}", couplings.len())));
    }

    let mut chip = layout_from_couplings(&couplings, &cal)?;
    chip.waveguide_length_mm = waveguide_length_mm;
    let metadata = LayoutMetadata {
        circumradius_um: chip.circumradius_um,
        waveguide_length_mm,
        calibration: cal,
        seed,
        central_angles_rad: chip.central_angles(),
        chord_lengths_um: chip.chord_lengths.clone(),
        couplings,
    };
    match format {
        Format::Json => {
            let doc = LayoutDocument { metadata, sites_um: chip.sites.clone() };
            emit(Sink::from_option(a.common.out.as_ref()), &json(&doc))
        }
        Format::Csv => match (&a.common.out, side_path) {
            (Some(out), Some(side)) => {
                persist_all(vec![stage(out, chip.to_csv().as_bytes())?, stage(&side, &json(&metadata))?])
            }
            _ => emit(Sink::Stdout, chip.to_csv().as_bytes()),
        },
    }
}

fn parse_background(text: &str) -> CliResult<Background> {
    match text.trim().to_ascii_lowercase().as_str() {
        "annulus" | "annulus-median" => Ok(Background::AnnulusMedian),
        "none" => Ok(Background::None),
        other => {
            other.parse::<f64>().ok().filter(|v| v.is_finite()).map(Background::Constant).ok_or_else(|| {
                CliError::Config(format!("background must be `annulus`, `none` or a number, got `{text}`"))
            })
        }
    }
}

fn read_spots(path: &Path) -> CliResult<Vec<SiteSpot>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header: Vec<String> =
        lines.next().map(|(_, h)| h.split(',').map(|s| s.trim().to_string()).collect()).unwrap_or_default();
    if header != ["x", "y", "radius_1e"] {
        return Err(CliError::parse(path, "expected header `x,y,radius_1e`"));
    }
    let mut spots = Vec::new();
    for (i, line) in lines {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::parse(path, format!("line {}: bad number", i + 1)))?;
        if v.len() != 3 {
            return Err(CliError::parse(path, format!("line {}: expected 3 fields", i + 1)));
        }
        spots.push(SiteSpot { x: v[0], y: v[1], radius_1e: v[2] });
    }
    if spots.is_empty() {
        return Err(CliError::parse(path, "no spots"));
    }
    Ok(spots)
}

#[derive(Serialize)]
struct IngestRow {
    image: String,
    intensities: Vec<f64>,
}

pub fn ingest(a: IngestArgs) -> CliResult<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let spots_path: PathBuf = a
        .spots
        .clone()
        .or(file.ingest.spots.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::Config("--spots is required".into()))?;
    let background = match a.background.as_deref().or(file.ingest.background.as_deref()) {
        Some(b) => parse_background(b)?,
        None => Background::AnnulusMedian,
    };
    resolve_seed(&a.common);
    let spots = read_spots(&spots_path)?;

    let rows = a
        .images
        .par_iter()
        .map(|path| -> CliResult<IngestRow> {
            let image = load_image(path)?;
            let intensities = extract_site_intensities(&image, &spots, background)?;
            Ok(IngestRow { image: path.display().to_string(), intensities })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let bytes = match a.common.format.unwrap_or(Format::Csv) {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut out = String::from("image");
            for k in 0..spots.len() {
                out.push_str(&format!(",I_{k}"));
            }
            out.push('\n');
            for r in &rows {
                if r.image.contains(',') {
                    return Err(CliError::Config(format!("image path `{}` contains a comma", r.image)));
                }
                out.push_str(&r.image);
                for &v in &r.intensities {
                    out.push(',');
                    out.push_str(&float(v));
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    emit(Sink::from_option(a.common.out.as_ref()), &bytes)
}
