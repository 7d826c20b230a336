//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use ringtherm_core::evolve::{eigendecompose, propagate, propagate_stepper, FieldState};
use ringtherm_core::ingest::{extract_site_intensities, parse_pgm, Background, RasterImage, SiteSpot};
use ringtherm_core::lattice::{build_hamiltonian, find_chiral_permutation, DisorderSpec, RingLattice};
use ringtherm_core::layout::{
    distance_to_coupling, layout_from_couplings, place_sites, solve_circumradius, CouplingCalibration,
};
use ringtherm_core::stats::{
    bootstrap_g2, classify_amplitude_distribution, excited_samples, g2, localization_level, mean_intensities,
    AmplitudeLaw,
};
use ringtherm_core::sweep::{derive_bound, ensemble_size_study, gap_map, simulate_ensemble, EnsembleParams, SweepGrid};
use ringtherm_core::{defaults, sample_couplings, RandomStream};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn params(eta: f64) -> EnsembleParams {
    EnsembleParams { eta, ..EnsembleParams::default() }
}

fn disordered(n: usize, seed: u64) -> RingLattice {
    let spec = DisorderSpec::new(defaults::C_MEAN, defaults::ETA).unwrap();
    RingLattice::sample(&spec, n, 0, &RandomStream::new(seed)).unwrap()
}

fn c1_zero_disorder() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=12 {
        let ens = simulate_ensemble(n, &params(0.0), 120, &RandomStream::new(n as u64)).unwrap();
        worst = worst.max((g2(&excited_samples(&ens)).unwrap() - 1.0).abs());
    }
    outcome(worst < 1e-9, format!("max |g2 - 1| over N=3..12 = {worst:.2e} (tol 1e-9)"))
}

fn c2_chiral_parity() -> Outcome {
    let mut law_ok = true;
    for n in 3..=30 {
        let h = build_hamiltonian(&disordered(n, 1000 + n as u64));
        let found = find_chiral_permutation(&h);
        law_ok &= found.is_some() == (n % 2 == 0);
        if let Some(bp) = found {
            law_ok &= bp.block_off_diagonalizes(&h);
        }
    }
    let mut worst_even: f64 = 0.0;
    let mut broken_odd = 0;
    let mut intact_by_n = std::collections::BTreeMap::new();
    for r in 0..1000u64 {
        let even = 4 + 2 * (r as usize % 14);
        let odd = 3 + 2 * (r as usize % 14);
        worst_even =
            worst_even.max(eigendecompose(&build_hamiltonian(&disordered(even, r))).unwrap().chiral_mismatch());
        if eigendecompose(&build_hamiltonian(&disordered(odd, 50_000 + r))).unwrap().chiral_mismatch() > 1e-3 {
            broken_odd += 1;
        } else {
            *intact_by_n.entry(odd).or_insert(0) += 1;
        }
    }
    outcome(
        law_ok && worst_even < 1e-9 && broken_odd >= 990,
        format!(
            "bipartite <=> even for N=3..30: {law_ok}; even max pairing error {worst_even:.2e} (tol 1e-9); \
             odd N=3..29 broken {broken_odd}/1000 (need >= 990), unbroken by N {intact_by_n:?}"
        ),
    )
}

fn c3_gap() -> Outcome {
    let p = EnsembleParams::default();
    let sizes = [defaults::ENSEMBLE_SIZE];
    let reps = defaults::SIMULATION_REPEATS;
    let a = ensemble_size_study(3, 4, &sizes, reps, &p, &RandomStream::new(31)).unwrap();
    let b = ensemble_size_study(5, 6, &sizes, reps, &p, &RandomStream::new(56)).unwrap();
    let (g3, g4, g5, g6) = (a[0].odd.mean, a[0].even.mean, b[0].odd.mean, b[0].even.mean);
    let diffs_ok = g4 - g3 >= 0.1 && g6 - g5 >= 0.1;
    let even_ok = g4 >= 1.40 && g6 >= 1.40;
    let odd_ok = g3 <= 1.45 && g5 <= 1.45;
    outcome(
        diffs_ok && even_ok && odd_ok,
        format!(
            "mean g2: N3={g3:.3} N4={g4:.3} N5={g5:.3} N6={g6:.3}; gaps {:.3}, {:.3} (need >= 0.1): {diffs_ok}; \
             even >= 1.40: {even_ok}; odd <= 1.45: {odd_ok}",
            g4 - g3,
            g6 - g5
        ),
    )
}

fn c4_size_separation() -> Outcome {
    let sizes = [5, 10, 20, 50, 100, 120, 200];
    let bands = ensemble_size_study(
        3,
        4,
        &sizes,
        defaults::SIMULATION_REPEATS,
        &EnsembleParams::default(),
        &RandomStream::new(44),
    )
    .unwrap();
    let small_overlap = bands.iter().filter(|b| b.ensemble_size <= 20).any(|b| b.overlapping());
    let large_disjoint = bands.iter().filter(|b| b.ensemble_size >= 100).all(|b| !b.overlapping());
    let summary: Vec<String> = bands
        .iter()
        .map(|b| {
            format!(
                "{}:[{:.2},{:.2}]v[{:.2},{:.2}]{}",
                b.ensemble_size,
                b.odd.lower(),
                b.odd.upper(),
                b.even.lower(),
                b.even.upper(),
                if b.overlapping() { "o" } else { "" }
            )
        })
        .collect();
    outcome(
        small_overlap && large_disjoint,
        format!(
            "overlap at some size <= 20: {small_overlap}; disjoint at all sizes >= 100: {large_disjoint}; {}",
            summary.join(" ")
        ),
    )
}

fn c5_localization() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, size, below) in
        [(3, 2000, true), (4, 2000, true), (5, 2000, true), (6, 2000, true), (11, 2000, false), (12, 2000, false)]
    {
        let ens = simulate_ensemble(n, &EnsembleParams::default(), size, &RandomStream::new(500 + n as u64)).unwrap();
        let lambda = localization_level(&mean_intensities(&ens).unwrap()).unwrap();
        let pass = if below { lambda < 0.2 - 0.02 } else { lambda > 0.2 + 0.02 };
        ok &= pass;
        parts.push(format!("N{n}={lambda:.3}{}", if pass { "" } else { "!" }));
    }
    outcome(ok, format!("lambda (need <0.18 for N<=6, >0.22 for N>=11; 2000 samples each): {}", parts.join(" ")))
}

fn c6_bound() -> Outcome {
    let grid = SweepGrid { ensemble_size: 1000, repeats: 50, master_seed: 66, ..SweepGrid::default() };
    let map = gap_map(&grid).unwrap();
    match derive_bound(&map, &map, 0.3) {
        Ok(est) => outcome(
            (0.15..=0.25).contains(&est.bound),
            format!(
                "bound {:.3} from {} boundary pairs (need [0.15, 0.25]); grid N=3..30 x eta=0.05..1.0, 1000 realizations/cell",
                est.bound,
                est.boundary_count()
            ),
        ),
        Err(e) => outcome(false, format!("derive_bound failed: {e}")),
    }
}

fn c7_numerical_core() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_norm: f64 = 0.0;
    let mut worst_compose: f64 = 0.0;
    for r in 0..1000u64 {
        use rand::Rng;
        let n = rng.random_range(3..=30);
        let eta: f64 = rng.random_range(0.0..=1.0);
        let z1: f64 = rng.random_range(0.0..50.0);
        let z2: f64 = rng.random_range(0.0..50.0);
        let spec = DisorderSpec::new(0.5, eta).unwrap();
        let h = build_hamiltonian(&RingLattice::sample(&spec, n, 0, &RandomStream::new(r)).unwrap());
        let psi0 = FieldState::single_site(n, rng.random_range(0..n));
        let direct = propagate(&h, &psi0, z1 + z2).unwrap();
        worst_norm = worst_norm.max((direct.norm_sqr() - 1.0).abs());
        let composed = propagate(&h, &propagate(&h, &psi0, z1).unwrap(), z2).unwrap();
        let d = direct.amplitudes.iter().zip(&composed.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst_compose = worst_compose.max(d);
    }
    let z = defaults::Z_NORMALIZED_EXPERIMENT / defaults::C_MEAN;
    let mut worst_oracle: f64 = 0.0;
    for n in 3..=12 {
        let h = build_hamiltonian(&disordered(n, 700 + n as u64));
        let psi0 = FieldState::single_site(n, 0);
        let exact = propagate(&h, &psi0, z).unwrap();
        let rk = propagate_stepper(&h, &psi0, z, z / 1e5).unwrap();
        let d = exact.amplitudes.iter().zip(&rk.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst_oracle = worst_oracle.max(d);
    }
    outcome(
        worst_norm < 1e-10 && worst_oracle < 1e-6 && worst_compose < 1e-9,
        format!(
            "unitarity {worst_norm:.2e} (tol 1e-10); spectral vs RK4 N=3..12 {worst_oracle:.2e} (tol 1e-6); \
             composition {worst_compose:.2e} (tol 1e-9)"
        ),
    )
}

fn c8_statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<f64> = (0..1_000_000).map(|_| Exp1.sample(&mut rng)).collect();
    let thermal = g2(&samples).unwrap();
    let thermal_ok = (thermal - 2.0).abs() <= 0.01;

    let ens = simulate_ensemble(4, &EnsembleParams::default(), 120, &RandomStream::new(88)).unwrap();
    let rep = bootstrap_g2(&ens, 120, 1000, &RandomStream::new(89)).unwrap();
    let std_ok = (0.005..=0.06).contains(&rep.g2_std);
    let mut others = Vec::new();
    for n in [3, 5, 6] {
        let ens = simulate_ensemble(n, &EnsembleParams::default(), 120, &RandomStream::new(88 + n as u64)).unwrap();
        let r = bootstrap_g2(&ens, 120, 1000, &RandomStream::new(89)).unwrap();
        others.push(format!("N{n}={:.3}", r.g2_std));
    }
    outcome(
        thermal_ok && std_ok,
        format!(
            "exponential g2 {thermal:.4} (need 2.00 +/- 0.01); bootstrap std N=4, 120 records, 1000 repeats = {:.3} \
             (need [0.005, 0.06]); for reference {}",
            rep.g2_std,
            others.join(" ")
        ),
    )
}

fn site_amplitudes(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let ens = simulate_ensemble(n, &EnsembleParams::default(), 800, &RandomStream::new(seed)).unwrap();
    (0..n).map(|k| ens.iter().map(|r| r.normalized_intensities[k].sqrt()).collect()).collect()
}

fn c9_amplitude_parity() -> Outcome {
    let five: Vec<AmplitudeLaw> =
        site_amplitudes(5, 95).iter().map(|a| classify_amplitude_distribution(a).unwrap().label).collect();
    let six: Vec<AmplitudeLaw> =
        site_amplitudes(6, 96).iter().map(|a| classify_amplitude_distribution(a).unwrap().label).collect();
    let lattice_ok =
        five.iter().all(|l| *l == AmplitudeLaw::RayleighLike) && six.iter().all(|l| *l == AmplitudeLaw::GaussianLike);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials = 200;
    let mut correct = 0;
    for _ in 0..trials {
        let rayleigh: Vec<f64> = (0..1000)
            .map(|_| {
                let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                x.hypot(y)
            })
            .collect();
        let half: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).map(|x: f64| x.abs()).collect();
        correct += (classify_amplitude_distribution(&rayleigh).unwrap().label == AmplitudeLaw::RayleighLike) as usize;
        correct += (classify_amplitude_distribution(&half).unwrap().label == AmplitudeLaw::GaussianLike) as usize;
    }
    let accuracy = correct as f64 / (2 * trials) as f64;
    outcome(
        lattice_ok && accuracy >= 0.99,
        format!(
            "N=5 sites {five:?}; N=6 sites {six:?} (800 realizations); synthetic accuracy {:.1}% over {} sets of 1000 (need >= 99%)",
            100.0 * accuracy,
            2 * trials
        ),
    )
}

fn c10_layout() -> Outcome {
    let cal = CouplingCalibration::default();
    let hex = layout_from_couplings(&[defaults::C_MEAN; 6], &cal).unwrap();
    let side = hex.chord_lengths[0];
    let hex_err = (hex.circumradius_um - side).abs() / side;

    let spec = DisorderSpec::new(0.5, 0.8).unwrap();
    let mut worst_round: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for r in 0..1000u64 {
        let n = 3 + (r as usize % 10);
        let c = sample_couplings(&spec, n, &RandomStream::new(10_000 + r)).unwrap();
        let lay = layout_from_couplings(&c, &cal).unwrap();
        for (a, d) in c.iter().zip(lay.measured_chords()) {
            worst_round = worst_round.max((distance_to_coupling(d, &cal) - a).abs() / a);
        }
        let radius = solve_circumradius(&lay.chord_lengths).unwrap();
        let residual: f64 =
            lay.chord_lengths.iter().map(|&c| 2.0 * (c / (2.0 * radius)).asin()).sum::<f64>() - 2.0 * PI;
        worst_residual = worst_residual.max(residual.abs());
        debug_assert_eq!(place_sites(&lay.chord_lengths, radius).unwrap(), lay);
    }
    outcome(
        hex_err < 1e-9 && worst_round < 1e-9 && worst_residual < 1e-10,
        format!(
            "hexagon |R - side|/side {hex_err:.1e} (tol 1e-9); round trip {worst_round:.1e} (tol 1e-9); \
             angle residual {worst_residual:.1e} (tol 1e-10)"
        ),
    )
}

fn two_spot_image(maxval: u16, peak: f64, offset: f64) -> RasterImage {
    let w = 4.0;
    let spot =
        |x0: f64, y0: f64, a: f64| move |x: f64, y: f64| a * (-((x - x0).powi(2) + (y - y0).powi(2)) / (w * w)).exp();
    let (s1, s2) = (spot(24.3, 31.8, peak), spot(71.6, 32.4, peak / 3.0));
    let img = RasterImage::from_fn(96, 64, maxval, |x, y| s1(x, y) + s2(x, y) + offset);
    parse_pgm(&img.to_pgm()).unwrap()
}

fn c11_ingest() -> Outcome {
    let spots = [SiteSpot { x: 24.0, y: 32.0, radius_1e: 4.0 }, SiteSpot { x: 72.0, y: 32.0, radius_1e: 4.0 }];
    let mut ok = true;
    let mut parts = Vec::new();
    for (maxval, peak) in [(255u16, 220.0), (65535, 50_000.0)] {
        let clean =
            extract_site_intensities(&two_spot_image(maxval, peak / 1.1, 0.0), &spots, Background::None).unwrap();
        let noisy = extract_site_intensities(
            &two_spot_image(maxval, peak / 1.1, 0.1 * peak / 1.1),
            &spots,
            Background::AnnulusMedian,
        )
        .unwrap();
        let err = |v: &[f64]| ((v[0] - 0.75).abs() / 0.75).max((v[1] - 0.25).abs() / 0.25);
        let (e1, e2) = (err(&clean), err(&noisy));
        ok &= e1 < 0.01 && e2 < 0.01;
        parts.push(format!(
            "{}-bit: clean ({:.4}, {:.4}) err {:.2}%, 10% background ({:.4}, {:.4}) err {:.2}%",
            if maxval < 256 { 8 } else { 16 },
            clean[0],
            clean[1],
            100.0 * e1,
            noisy[0],
            noisy[1],
            100.0 * e2
        ));
    }
    outcome(ok, format!("{} (tol 1%)", parts.join("; ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1", "zero-disorder law", Duration::from_secs(1), c1_zero_disorder),
        ("2", "chiral parity law", Duration::from_secs(10), c2_chiral_parity),
        ("3", "gap reproduction", Duration::from_secs(120), c3_gap),
        ("4", "ensemble-size separation", Duration::from_secs(120), c4_size_separation),
        ("5", "localization regimes", Duration::from_secs(30), c5_localization),
        ("6", "bound derivation", Duration::from_secs(600), c6_bound),
        ("7", "numerical core", Duration::from_secs(600), c7_numerical_core),
        ("8", "statistics oracles", Duration::from_secs(600), c8_statistics_oracles),
        ("9", "amplitude-distribution parity", Duration::from_secs(600), c9_amplitude_parity),
        ("10", "layout geometry", Duration::from_secs(600), c10_layout),
        ("11", "ingest fidelity", Duration::from_secs(600), c11_ingest),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        println!(
            "[{}] criterion {id:>2} {name}: {} | {:.2}s (budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
