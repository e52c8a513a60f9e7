//! Acceptance criteria for the Pt/C/WSi₂/C/Pt cavity and the general
//! property suites. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` are evaluated at their stated
//! tolerance and reported as FAIL; the run only aborts on an outcome that
//! differs from the expectation.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xcavity::dispersion::{kramers_kronig, lorentzian_delta_f, ResonanceLine};
use xcavity::greens_model::{coupling_matrix, dipole_sq_from_f0, greens_kernel, greens_reflectance, SublayerGrid};
use xcavity::io::paper_cavity;
use xcavity::matrix_model::{bare_cavity, expansion_error, matrix_reflectance, AtomicSheet, BareCavity};
use xcavity::parallel::Execution;
use xcavity::parratt::{parratt_reflectance, FluorescenceOptions};
use xcavity::scan_fit::{
    avoided_crossing, fit_lorentzian, fit_parameter, fluorescence_map, linspace, locate_first_mode, max_abs_difference,
    rms_difference, scan_map, spectrum, FitParameter, FitWindow, MapGrid, Solver,
};
use xcavity::stack::{fresnel, CavityStack, Layer, ScanPoint, Thickness};

const OMEGA0: f64 = 10208.0;
/// Natural width of the white line, supplied rather than fitted.
const GAMMA: f64 = 5.0;
const F0: f64 = 0.36;
const DIPOLE_REF: f64 = 3.3e-7;
const SUBLAYERS: usize = 8;

/// Criteria known not to be reachable; see the README.
const EXPECTED_FAIL: &[u32] = &[5];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Setup {
    stack: CavityStack,
    theta1: f64,
    line: ResonanceLine,
    fitted_f0: f64,
    fitted_dipole: f64,
}

fn setup() -> Setup {
    let stack = paper_cavity().unwrap();
    let theta1 = locate_first_mode(&stack, OMEGA0, (0.05, 0.5)).unwrap();
    let line = ResonanceLine::new(OMEGA0, GAMMA, F0, 0.0).unwrap();
    let grid = MapGrid::new(linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 301), vec![0.0, 1e-3], theta1).unwrap();
    let bench = scan_map(&stack, Solver::Parratt, &grid, &line, Execution::Parallel);
    let window = FitWindow {
        energy: (OMEGA0 - 15.0, OMEGA0 + 15.0),
        offset: (0.0, 0.0),
    };
    let fitted_f0 = fit_parameter(
        &bench,
        &stack,
        Solver::Matrix,
        &line,
        FitParameter::F0,
        &window,
        Execution::Parallel,
    )
    .unwrap()
    .value;
    let fitted_dipole = fit_parameter(
        &bench,
        &stack,
        Solver::Greens { sublayers: SUBLAYERS },
        &line,
        FitParameter::DipoleSq,
        &window,
        Execution::Parallel,
    )
    .unwrap()
    .value;
    Setup {
        stack,
        theta1,
        line,
        fitted_f0,
        fitted_dipole,
    }
}

fn three_model_agreement(s: &Setup) -> Outcome {
    let energies = linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 301);
    let line = s.line.with_f0(s.fitted_f0).with_dipole_sq(s.fitted_dipole);
    let mut worst_matrix: f64 = 0.0;
    let mut worst_greens: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for solver in [Solver::Parratt, Solver::Matrix, Solver::Greens { sublayers: SUBLAYERS }] {
        let t = Instant::now();
        for dth in [-5e-3, 0.0, 5e-3] {
            let bench = spectrum(
                &s.stack,
                Solver::Parratt,
                s.theta1 + dth,
                &energies,
                &s.line,
                Execution::Parallel,
            )
            .unwrap();
            let model = spectrum(&s.stack, solver, s.theta1 + dth, &energies, &line, Execution::Parallel).unwrap();
            let d = max_abs_difference(&bench, &model);
            match solver {
                Solver::Matrix => worst_matrix = worst_matrix.max(d),
                Solver::Greens { .. } => worst_greens = worst_greens.max(d),
                Solver::Parratt => {}
            }
        }
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    Outcome {
        id: 1,
        name: "three-model agreement without refit",
        pass: worst_matrix < 0.02 && worst_greens < 0.02 && slowest < 5.0,
        detail: format!(
            "max |Δ|R|²| matrix {worst_matrix:.2e}, greens {worst_greens:.2e} (tol 0.02); slowest triple {slowest:.2} s (limit 5 s)"
        ),
    }
}

fn peak_reflectance(s: &Setup) -> Outcome {
    let energies = linspace(OMEGA0 - GAMMA / 2.0, OMEGA0 + GAMMA / 2.0, 51);
    let r = spectrum(
        &s.stack,
        Solver::Parratt,
        s.theta1,
        &energies,
        &s.line,
        Execution::Parallel,
    )
    .unwrap();
    let peak = r.iter().cloned().fold(0.0, f64::max);
    let f0_ok = (0.32..=0.40).contains(&s.fitted_f0);
    Outcome {
        id: 2,
        name: "peak on-mode reflectance",
        pass: (peak - 0.25).abs() <= 0.05 && f0_ok,
        detail: format!(
            "max |R|² over ω0 ± Γ/2 at Δθ = 0 is {peak:.4} (want 0.25 ± 0.05); fitted f0 {:.4} (want [0.32, 0.40])",
            s.fitted_f0
        ),
    }
}

fn dipole_fit(s: &Setup) -> Outcome {
    let ratio = s.fitted_dipole / DIPOLE_REF;
    Outcome {
        id: 3,
        name: "dipole-moment fit",
        pass: (0.5..=2.0).contains(&ratio),
        detail: format!(
            "fitted |d|² {:.4e} = {ratio:.3} × 3.3e-7 (want factor 2)",
            s.fitted_dipole
        ),
    }
}

fn eta_phenomenology(s: &Setup) -> Outcome {
    let step = 1e-4;
    let angles: Vec<f64> = (-300..=300).map(|i| s.theta1 + i as f64 * step).collect();
    let depth = AtomicSheet::from_stack(&s.stack).unwrap().depth;
    let eta: Vec<Complex64> = angles
        .iter()
        .map(|&t| {
            bare_cavity(&s.stack, &ScanPoint::new(OMEGA0, t).unwrap(), depth)
                .unwrap()
                .eta
        })
        .collect();
    let imax = (0..eta.len()).max_by(|&a, &b| eta[a].re.total_cmp(&eta[b].re)).unwrap();
    let peak_offset = angles[imax] - s.theta1;
    // neighbourhood: ±0.01 deg
    let near: Vec<usize> = (0..angles.len())
        .filter(|&i| (angles[i] - s.theta1).abs() <= 0.01 + 1e-12)
        .collect();
    let crossings: Vec<usize> = near
        .windows(2)
        .filter(|w| eta[w[0]].im.signum() != eta[w[1]].im.signum())
        .map(|w| w[1])
        .collect();
    let first = near[0];
    let last = *near.last().unwrap();
    let ordered = eta[first].im < 0.0 && eta[last].im > 0.0;
    Outcome {
        id: 4,
        name: "η phenomenology",
        pass: peak_offset.abs() <= step + 1e-12 && crossings.len() == 1 && ordered,
        detail: format!(
            "Re η peaks at Δθ = {peak_offset:+.1e} (step {step:.0e}); Im η changes sign {} time(s) within ±0.01°, {:.3} below → {:.3} above",
            crossings.len(),
            eta[first].im,
            eta[last].im
        ),
    }
}

fn anti_crossing(s: &Setup) -> Outcome {
    let grid = MapGrid::paper_default(OMEGA0, s.theta1);
    let line = s.line.with_f0(s.fitted_f0).with_dipole_sq(s.fitted_dipole);
    let mut maps = Vec::new();
    let mut slowest: f64 = 0.0;
    for (solver, l) in [
        (Solver::Parratt, s.line),
        (Solver::Matrix, line),
        (Solver::Greens { sublayers: SUBLAYERS }, line),
    ] {
        let t = Instant::now();
        maps.push(scan_map(&s.stack, solver, &grid, &l, Execution::Parallel));
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let rms: Vec<f64> = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(a, b)| rms_difference(&maps[a], &maps[b]).unwrap())
        .collect();
    let worst_rms = rms.iter().cloned().fold(0.0, f64::max);
    let ac = avoided_crossing(&maps[0]).unwrap();
    let separated = !ac.intersect && ac.min_gap > GAMMA / 2.0;
    Outcome {
        id: 5,
        name: "anti-crossing on the default map",
        pass: separated && worst_rms < 0.01 && slowest < 60.0,
        detail: format!(
            "ridge branches intersect: {}, min gap {:.2} eV (want > {:.2}), splitting at Δθ→0 {:.2} eV, {} of {} rows minimal at a window edge; pairwise RMS max {worst_rms:.2e} (tol 0.01); slowest map {slowest:.2} s",
            ac.intersect,
            ac.min_gap,
            GAMMA / 2.0,
            ac.splitting,
            ac.edge_rows,
            grid.rows(),
        ),
    }
}

fn fluorescence_width(s: &Setup) -> Outcome {
    let offsets = [
        -0.1, -0.08, -0.06, -0.04, -0.02, -0.01, -0.005, -0.002, -0.001, 0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.04,
        0.06, 0.08, 0.1,
    ];
    let grid = MapGrid::new(linspace(OMEGA0 - 30.0, OMEGA0 + 30.0, 241), offsets.to_vec(), s.theta1).unwrap();
    let map = fluorescence_map(
        &s.stack,
        &grid,
        &s.line,
        &FluorescenceOptions::default(),
        Execution::Parallel,
    );
    let widths: Vec<f64> = (0..offsets.len())
        .map(|r| fit_lorentzian(&grid.energies, map.row(r)).unwrap().width)
        .collect();
    let imax = (0..widths.len())
        .max_by(|&a, &b| widths[a].total_cmp(&widths[b]))
        .unwrap();
    let far: Vec<(f64, f64)> = offsets
        .iter()
        .zip(&widths)
        .filter(|(o, _)| o.abs() > 0.05)
        .map(|(&o, &w)| (o, w))
        .collect();
    let worst_far = far.iter().map(|(_, w)| (w / GAMMA - 1.0).abs()).fold(0.0, f64::max);
    Outcome {
        id: 6,
        name: "fluorescence linewidth",
        pass: offsets[imax].abs() <= 0.001 && worst_far <= 0.05,
        detail: format!(
            "widest {:.3} eV at Δθ = {:+}; at |Δθ| > 0.05° widths {} (worst deviation {:.1}% of Γ, tol 5%)",
            widths[imax],
            offsets[imax],
            far.iter()
                .map(|(o, w)| format!("{o:+}:{w:.3}"))
                .collect::<Vec<_>>()
                .join(" "),
            100.0 * worst_far
        ),
    }
}

fn random_stack(rng: &mut ChaCha8Rng) -> CavityStack {
    let n = rng.random_range(1..=8);
    let mut layers = vec![Layer::vacuum("vacuum")];
    for i in 0..n - 1 {
        layers.push(Layer::constant(
            &format!("f{i}"),
            Thickness::Finite(rng.random_range(1.0..50.0)),
            rng.random_range(0.0..1e-4),
            rng.random_range(0.0..1e-5),
        ));
    }
    layers.push(Layer::constant(
        "substrate",
        Thickness::SemiInfinite,
        rng.random_range(0.0..1e-4),
        rng.random_range(0.0..1e-5),
    ));
    CavityStack::new(layers).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng) -> ScanPoint {
    ScanPoint::new(rng.random_range(5000.0..20000.0), rng.random_range(0.02..2.0)).unwrap()
}

fn with_resonant_thickness(stack: &CavityStack, d: f64) -> CavityStack {
    // keep the layer centre fixed
    let i = stack.resonant_layer().unwrap();
    let old = stack.resonant_thickness().unwrap();
    let mut layers = stack.layers().to_vec();
    let pad = 0.5 * (old - d);
    for j in [i - 1, i + 1] {
        let t = layers[j].thickness.finite().unwrap();
        layers[j].thickness = Thickness::Finite(t + pad);
    }
    layers[i].thickness = Thickness::Finite(d);
    CavityStack::new(layers).unwrap()
}

fn property_suites(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut fresnel_err: f64 = 0.0;
    for _ in 0..10_000 {
        let ki = Complex64::new(rng.random_range(1e-4..1.0), rng.random_range(0.0..0.5));
        let kj = Complex64::new(rng.random_range(1e-4..1.0), rng.random_range(0.0..0.5));
        let (r_ij, t_ij) = fresnel(ki, kj).unwrap();
        let (r_ji, _) = fresnel(kj, ki).unwrap();
        fresnel_err = fresnel_err.max((1.0 + r_ij - t_ij).norm()).max((r_ij + r_ji).norm());
    }
    ok &= fresnel_err < 1e-12;
    notes.push(format!("fresnel {fresnel_err:.1e}"));

    let mut tmm_err: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    for _ in 0..10_000 {
        let stack = random_stack(&mut rng);
        let p = random_point(&mut rng);
        let a = parratt_reflectance(&stack, &p, None).unwrap();
        let b = BareCavity::new(&stack, &p).unwrap().r0;
        if a.norm() > 0.0 {
            tmm_err = tmm_err.max((a - b).norm() / a.norm());
        }
        max_r = max_r.max(a.norm_sqr());
    }
    ok &= tmm_err < 1e-10 && max_r <= 1.0;
    notes.push(format!("parratt-vs-tmm {tmm_err:.1e}, max |r|² {max_r:.6}"));

    let mut tir_err: f64 = 0.0;
    for _ in 0..1000 {
        let delta = rng.random_range(1e-6..1e-4);
        let stack = CavityStack::new(vec![
            Layer::vacuum("vacuum"),
            Layer::constant("s", Thickness::SemiInfinite, delta, 0.0),
        ])
        .unwrap();
        let theta = (2.0 * delta).sqrt().asin().to_degrees() * rng.random_range(0.01..0.99);
        let p = ScanPoint::new(rng.random_range(5000.0..20000.0), theta).unwrap();
        tir_err = tir_err.max((parratt_reflectance(&stack, &p, None).unwrap().norm_sqr() - 1.0).abs());
    }
    ok &= tir_err < 1e-9;
    notes.push(format!("total reflection {tir_err:.1e}"));

    let kk_error = |step: f64| {
        let n = (2.0 * 200.0 * GAMMA / step).round() as usize;
        let e = linspace(OMEGA0 - 200.0 * GAMMA, OMEGA0 + 200.0 * GAMMA, n + 1);
        let line = ResonanceLine::new(OMEGA0, GAMMA, F0, 0.0).unwrap();
        let df: Vec<Complex64> = e.iter().map(|&x| lorentzian_delta_f(&line, x)).collect();
        let im: Vec<f64> = df.iter().map(|v| v.im).collect();
        let re = kramers_kronig(&e, &im).unwrap().re;
        re.iter().zip(&df).map(|(r, d)| (r - d.re).abs()).fold(0.0, f64::max)
    };
    let (kk1, kk2) = (kk_error(0.25), kk_error(0.125));
    ok &= kk1 < 1e-3 * F0 && kk2 <= 0.5 * kk1;
    notes.push(format!("KK {:.1e} → {:.1e} f0", kk1 / F0, kk2 / F0));

    let energies = linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 31);
    let expansion_max = |d: f64| {
        let stack = with_resonant_thickness(&s.stack, d);
        energies
            .iter()
            .map(|&e| expansion_error(&stack, &ScanPoint::new(e, s.theta1).unwrap(), &s.line).unwrap())
            .fold(0.0, f64::max)
    };
    let (e2, e1) = (expansion_max(2.0), expansion_max(1.0));
    ok &= e2 / e1 >= 3.5;
    notes.push(format!("expansion {e2:.1e} → {e1:.1e} (×{:.1})", e2 / e1));

    let mut asym: f64 = 0.0;
    let mut min_gamma = f64::INFINITY;
    let (top, bottom) = s.stack.resonant_span().unwrap();
    for _ in 0..1000 {
        let p = ScanPoint::new(rng.random_range(9000.0..11000.0), rng.random_range(0.1..0.6)).unwrap();
        let zi = rng.random_range(top..bottom);
        let zj = rng.random_range(top..bottom);
        let a = greens_kernel(&s.stack, &p, zi, zj).unwrap();
        let b = greens_kernel(&s.stack, &p, zj, zi).unwrap();
        asym = asym.max((a - b).norm() / a.norm());
        let line = s.line.with_dipole_sq(DIPOLE_REF);
        let grid = SublayerGrid::slice(&s.stack, rng.random_range(1..=16)).unwrap();
        let g = coupling_matrix(&s.stack, &p, &grid, &line).unwrap().gamma();
        for l in 0..g.nrows() {
            min_gamma = min_gamma.min(g[(l, l)]);
        }
    }
    ok &= asym == 0.0 && min_gamma >= 0.0;
    notes.push(format!("kernel asymmetry {asym:.1e}, min Γ_ll {min_gamma:.2e}"));

    let spectrum_at = |n: usize| -> Vec<f64> {
        let line = s.line.with_dipole_sq(s.fitted_dipole);
        linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 61)
            .iter()
            .map(|&e| {
                greens_reflectance(&s.stack, &ScanPoint::new(e, s.theta1).unwrap(), &line, n)
                    .unwrap()
                    .norm_sqr()
            })
            .collect()
    };
    let (r4, r8, r16) = (spectrum_at(4), spectrum_at(8), spectrum_at(16));
    let (d48, d816) = (max_abs_difference(&r4, &r8), max_abs_difference(&r8, &r16));
    ok &= d816 < d48;
    notes.push(format!("sublayers 4→8 {d48:.1e}, 8→16 {d816:.1e}"));

    let line = s.line.with_dipole_sq(dipole_sq_from_f0(F0, OMEGA0));
    let mut single: f64 = 0.0;
    for dth in [-5e-3, 0.0, 5e-3] {
        for &e in &linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 61) {
            let p = ScanPoint::new(e, s.theta1 + dth).unwrap();
            let g = greens_reflectance(&s.stack, &p, &line, 1).unwrap().norm_sqr();
            let m = matrix_reflectance(&s.stack, &p, &line).unwrap().norm_sqr();
            single = single.max((g - m).abs());
        }
    }
    ok &= single < 1e-3;
    notes.push(format!("single sheet vs matrix {single:.1e}"));

    Outcome {
        id: 7,
        name: "property suites",
        pass: ok,
        detail: notes.join("; "),
    }
}

fn self_fits(s: &Setup) -> Outcome {
    let grid = MapGrid::new(
        linspace(OMEGA0 - 15.0, OMEGA0 + 15.0, 61),
        vec![-0.01, -0.005, 0.0, 0.005, 0.01],
        s.theta1,
    )
    .unwrap();
    let window = FitWindow::paper_default(OMEGA0);
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut ok = true;
    for f0 in [0.1, 0.36, 1.0] {
        let planted = s.line.with_f0(f0);
        let bench = scan_map(&s.stack, Solver::Matrix, &grid, &planted, Execution::Parallel);
        let guess = s.line.with_f0(0.5);
        match fit_parameter(
            &bench,
            &s.stack,
            Solver::Matrix,
            &guess,
            FitParameter::F0,
            &window,
            Execution::Parallel,
        ) {
            Ok(fit) => {
                let rel = (fit.value / f0 - 1.0).abs();
                worst = worst.max(rel);
                notes.push(format!("f0 {f0}: {rel:.1e}"));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("f0 {f0}: {e}"));
            }
        }
    }
    for f0 in [0.1, 0.36, 1.0] {
        let d = dipole_sq_from_f0(f0, OMEGA0);
        let planted = s.line.with_dipole_sq(d);
        let solver = Solver::Greens { sublayers: SUBLAYERS };
        let bench = scan_map(&s.stack, solver, &grid, &planted, Execution::Parallel);
        match fit_parameter(
            &bench,
            &s.stack,
            solver,
            &planted.with_dipole_sq(1e-6),
            FitParameter::DipoleSq,
            &window,
            Execution::Parallel,
        ) {
            Ok(fit) => {
                let rel = (fit.value / d - 1.0).abs();
                worst = worst.max(rel);
                notes.push(format!("|d|² {d:.2e}: {rel:.1e}"));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("|d|² {d:.2e}: {e}"));
            }
        }
    }
    Outcome {
        id: 8,
        name: "self-fit round trips",
        pass: ok && worst < 1e-6,
        detail: format!("{} (tol 1e-6 relative)", notes.join("; ")),
    }
}

fn main() -> ExitCode {
    let t = Instant::now();
    let s = setup();
    println!(
        "paper cavity: θ1 = {:.7}°, ω0 = {OMEGA0} eV, Γ = {GAMMA} eV, benchmark f0 = {F0}; fitted f0 = {:.4}, |d|² = {:.4e} ({:.2} s)",
        s.theta1,
        s.fitted_f0,
        s.fitted_dipole,
        t.elapsed().as_secs_f64()
    );
    let checks: [fn(&Setup) -> Outcome; 8] = [
        three_model_agreement,
        peak_reflectance,
        dipole_fit,
        eta_phenomenology,
        anti_crossing,
        fluorescence_width,
        property_suites,
        self_fits,
    ];
    let mut unexpected = Vec::new();
    for check in checks {
        let t = Instant::now();
        let o = check(&s);
        let expected_fail = EXPECTED_FAIL.contains(&o.id);
        println!(
            "criterion {} [{}] {}: {} ({:.2} s){}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            t.elapsed().as_secs_f64(),
            if expected_fail && !o.pass { " [known]" } else { "" }
        );
        if o.pass == expected_fail {
            unexpected.push(o.id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
