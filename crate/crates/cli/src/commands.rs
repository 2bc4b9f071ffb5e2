//! The three commands: `verify` (identity residuals against their formulas),
//! `futaki` (invariance sampling and the obstruction verdict), and `solve`
//! (coupled Newton–Krylov run with oracle cross-check and field dumps).

use std::path::Path;

use serde::Serialize;

use vortex_sphere::fields::{
    bandlimited_field, dbar_psi_zero_residual, higgs_density, phi_eta, phi_eta_dbar_residual,
    psi_zero, structural_residuals, VortexConfig,
};
use vortex_sphere::futaki::{
    classical_futaki, emh_futaki, emh_futaki_closed, invariance_report, poincare_lelong_check,
    poincare_lelong_fd_residual,
};
use vortex_sphere::grid::{AreaForm, ComplexField, PoleBand, ScalarField, SphereGrid};
use vortex_sphere::solver::{
    bradlow_check, compare_with_radial, radial_oracle, residuals, solve_coupled, SolverError,
};

use crate::config::RunConfig;
use crate::report::{print_table, write_csv, write_jsonl, write_meta, CheckRecord};

const PI: f64 = std::f64::consts::PI;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OBSTRUCTED: i32 = 3;
pub const EXIT_BRADLOW: i32 = 4;

fn band(run: &RunConfig) -> PoleBand {
    PoleBand {
        theta_min: run.band_fraction * PI,
        theta_max: (1.0 - run.band_fraction) * PI,
    }
}

struct Setup {
    config: VortexConfig,
    grid: SphereGrid,
}

fn setup(run: &RunConfig) -> Result<Setup, String> {
    let config = run.vortex_config().map_err(|e| e.to_string())?;
    let grid = SphereGrid::build(run.n_theta, run.n_phi, run.volume).map_err(|e| e.to_string())?;
    Ok(Setup { config, grid })
}

/// Identity verification: one record per check, exit 0 iff all pass.
pub fn cmd_verify(run: &RunConfig, out_dir: &Path, config_path: Option<&str>) -> i32 {
    let Setup { config, grid } = match setup(run) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let band = band(run);
    let seed0 = run.seeds[0];
    let mut records: Vec<CheckRecord> = Vec::new();

    // Quadrature of the constant against both area forms.
    let one = grid.scalar_from(|_| 1.0);
    let vol = grid.integrate_scalar(&one, AreaForm::Omega0);
    records.push(
        CheckRecord::new(
            "quadrature_volume",
            "int 1 omega0 = V",
            (vol - grid.volume).abs() / grid.volume,
            run.tolerance("quadrature_volume", 1e-10),
        )
        .with_value(vol, 0.0)
        .with_expected(grid.volume, 0.0),
    );
    let fs_mass = grid.integrate_scalar(&one, AreaForm::FubiniStudy);
    records.push(
        CheckRecord::new(
            "quadrature_fs_mass",
            "int 1 omega_FS = 2 pi",
            (fs_mass - 2.0 * PI).abs() / (2.0 * PI),
            run.tolerance("quadrature_fs_mass", 1e-10),
        )
        .with_value(fs_mass, 0.0)
        .with_expected(2.0 * PI, 0.0),
    );
    // Gauss–Bonnet: ∫ 2 K ω₀ = 8π for the quantised coupling.
    let gb = 2.0 * grid.curvature() * vol;
    records.push(
        CheckRecord::new(
            "gauss_bonnet",
            "int 2 K_g0 omega0 = 8 pi = a 4 pi N",
            (gb - 8.0 * PI).abs(),
            run.tolerance("gauss_bonnet", 1e-10),
        )
        .with_value(gb, 0.0)
        .with_expected(8.0 * PI, 0.0),
    );

    // ψ₀ quadrature oracles over the whole small-(ℓ,N) lattice.
    let mut psi0_worst = 0.0f64;
    let mut mixed_worst = 0.0f64;
    for n in 0..=8u32 {
        for ell in 0..=n {
            if n == 0 {
                continue;
            }
            let c = VortexConfig::new(n, ell, 1.0, grid.volume).expect("lattice config");
            let psi0 = psi_zero(&c, &grid);
            let got = grid.integrate_scalar(&psi0, AreaForm::FubiniStudy);
            let expect = PI * (2.0 * ell as f64 - n as f64);
            psi0_worst = psi0_worst.max((got - expect).abs() / expect.abs().max(PI));
            let dens = higgs_density(&c, &grid);
            let mixed = grid.scalar_from(|nd| {
                let idx = nd.i_theta * grid.n_phi + nd.j_phi;
                dens.values[idx] * (psi0.values[idx] + nd.x)
            });
            mixed_worst =
                mixed_worst.max(grid.integrate_scalar(&mixed, AreaForm::FubiniStudy).abs());
        }
    }
    records.push(CheckRecord::new(
        "psi0_mean",
        "int psi0 omega_FS = pi (2 ell - N), 0 <= ell <= N <= 8",
        psi0_worst,
        run.tolerance("psi0_mean", 1e-8),
    ));
    records.push(CheckRecord::new(
        "phi_psi0_mixed",
        "int Phi (psi0 + cos theta) omega_FS = 0, 0 <= ell <= N <= 8",
        mixed_worst,
        run.tolerance("phi_psi0_mixed", 1e-8 * PI),
    ));

    // Eigenfunction identity Δ_FS φ₀ = -4 φ₀ (φ₀ is the η = 0 potential).
    {
        let eta0 = ScalarField::constant(0.0, grid.n_nodes());
        let phi0 = phi_eta(&eta0, &grid).expect("phi_0");
        let lap = grid.laplacian_complex(&phi0);
        let fs_scale = grid.volume / (2.0 * PI);
        let mut worst = 0.0f64;
        for (l, p) in lap.values.iter().zip(&phi0.values) {
            // Δ_FS = (V/2π) Δ_{g₀}
            worst = worst.max((fs_scale * l + 4.0 * p).norm());
        }
        records.push(CheckRecord::new(
            "eigenfunction_phi0",
            "Delta_FS phi0 = -4 phi0",
            worst,
            run.tolerance("eigenfunction_phi0", 1e-7 * fs_scale),
        ));
    }

    // Interior curvature identity for log Φ, split route and sampled stencils.
    records.push(CheckRecord::new(
        "poincare_lelong",
        "Delta_g0 log Phi = -4 pi N / V (interior band, singular split)",
        poincare_lelong_check(&config, &grid, band),
        run.tolerance("poincare_lelong", 1e-6),
    ));
    let deep = PoleBand {
        theta_min: 0.3 * PI,
        theta_max: 0.7 * PI,
    };
    records.push(CheckRecord::new(
        "poincare_lelong_fd",
        "Delta_g0 log Phi = -4 pi N / V (sampled log Phi, local stencils)",
        poincare_lelong_fd_residual(&config, &grid, deep),
        run.tolerance("poincare_lelong_fd", 1e-4),
    ));

    // ∂̄ψ₀ closed form.
    records.push(CheckRecord::new(
        "dbar_psi0",
        "dbar psi0 = -N z dzbar / (1+|z|^2)^2",
        dbar_psi_zero_residual(&config, &grid, band),
        run.tolerance("dbar_psi0", 1e-6),
    ));

    // Structural identities for seeded bandlimited f.
    {
        let mut first = 0.0f64;
        let mut section = 0.0f64;
        let mut mixed = 0.0f64;
        for k in 0..5u64 {
            let f = bandlimited_field(&grid, seed0.wrapping_add(k), 6, 0.8);
            let r = structural_residuals(&f, &config, &grid, band);
            first = first.max(r.first);
            section = section.max(r.section);
            mixed = mixed.max(r.mixed);
        }
        records.push(CheckRecord::new(
            "structural_first",
            "-i dbar psi_f = iota_v (i dbar d log h), h = e^f h_FS^N",
            first,
            run.tolerance("structural_first", 1e-6),
        ));
        records.push(CheckRecord::new(
            "structural_section",
            "iota_v (d phi + (d log h) phi) = psi_f phi",
            section,
            run.tolerance("structural_section", 1e-6),
        ));
        records.push(CheckRecord::new(
            "structural_mixed",
            "dbar(psi_f (e^f Phi - tau^2)) = -iota_v (dbar d (e^f Phi) - tau^2 dbar d log h)",
            mixed,
            run.tolerance("structural_mixed", 1e-6),
        ));
    }

    // ∂̄-potential: defining equation, normalisation, homogeneity.
    {
        let mut dbar_worst = 0.0f64;
        let mut norm_worst = 0.0f64;
        for k in 0..3u64 {
            let eta = bandlimited_field(&grid, seed0.wrapping_add(100 + k), 6, 0.7);
            let phi = phi_eta(&eta, &grid).expect("phi_eta");
            dbar_worst = dbar_worst.max(phi_eta_dbar_residual(&phi, &eta, &grid, band));
            let weighted = ComplexField {
                values: phi
                    .values
                    .iter()
                    .zip(&eta.values)
                    .map(|(p, e)| p * e.exp())
                    .collect(),
            };
            let m = grid.integrate(&weighted, AreaForm::Omega0).norm();
            norm_worst = norm_worst.max(m / (grid.volume * phi.sup_norm().max(1.0)));
        }
        records.push(CheckRecord::new(
            "phi_eta_dbar",
            "dbar phi_eta = (i/2) rho e^eta z dzbar",
            dbar_worst,
            run.tolerance("phi_eta_dbar", 1e-6),
        ));
        records.push(CheckRecord::new(
            "phi_eta_normalization",
            "int phi_eta e^eta omega0 = 0",
            norm_worst,
            run.tolerance("phi_eta_normalization", 1e-10),
        ));
        let eta = bandlimited_field(&grid, seed0.wrapping_add(200), 6, 0.6);
        let phi = phi_eta(&eta, &grid).expect("phi_eta");
        let mut scale_worst = 0.0f64;
        for t in [2.0f64, 1.0 / 3.0] {
            let phi_t = phi_eta(&eta.shifted(t.ln()), &grid).expect("phi_eta");
            let mut w = 0.0f64;
            for (a, b) in phi_t.values.iter().zip(&phi.values) {
                w = w.max((a - b * t).norm());
            }
            scale_worst = scale_worst.max(w / (phi.sup_norm() * t.max(1.0)));
        }
        records.push(CheckRecord::new(
            "phi_eta_scaling",
            "phi_(eta + log t) = t phi_eta",
            scale_worst,
            run.tolerance("phi_eta_scaling", 1e-8),
        ));
    }

    // Classical functional vanishes for seeded conformal factors.
    {
        let mut worst = 0.0f64;
        for k in 0..10u64 {
            let eta = bandlimited_field(&grid, seed0.wrapping_add(300 + k), 6, 0.8);
            let f0 = classical_futaki(&eta, &grid).expect("classical");
            worst = worst.max(f0.norm());
        }
        records.push(CheckRecord::new(
            "classical_futaki",
            "F0 = -int phi_eta (2 K_g0 - Delta eta) omega0 = 0",
            worst / grid.volume,
            run.tolerance("classical_futaki", 1e-7),
        ));
    }

    // Operator sanity: self-adjointness, negativity, Poisson round trip.
    {
        let u = bandlimited_field(&grid, seed0.wrapping_add(400), 8, 1.0).to_complex();
        let w = bandlimited_field(&grid, seed0.wrapping_add(401), 8, 1.0).to_complex();
        let lu = grid.laplacian_complex(&u);
        let lw = grid.laplacian_complex(&w);
        let scale = grid.volume * grid.curvature() * 64.0;
        let sym = (grid.inner(&lu, &w) - grid.inner(&u, &lw)).norm() / scale;
        records.push(CheckRecord::new(
            "laplacian_selfadjoint",
            "<Delta u, v>_omega0 = <u, Delta v>_omega0",
            sym,
            run.tolerance("laplacian_selfadjoint", 1e-10),
        ));
        let neg = grid.inner(&lu, &u).re.max(0.0) / scale;
        records.push(CheckRecord::new(
            "laplacian_negative",
            "<Delta u, u>_omega0 <= 0",
            neg,
            run.tolerance("laplacian_negative", 1e-10),
        ));
        let rhs = grid.laplacian_complex(&w);
        let solved = grid.poisson_solve(&rhs).expect("poisson");
        let back = grid.laplacian_complex(&solved);
        let mut worst = 0.0f64;
        for (a, b) in back.values.iter().zip(&rhs.values) {
            worst = worst.max((a - b).norm());
        }
        records.push(CheckRecord::new(
            "poisson_roundtrip",
            "Delta_g0 poisson_solve(rhs) = rhs for zero-mean rhs",
            worst / grid.curvature().max(1.0),
            run.tolerance("poisson_roundtrip", 1e-9),
        ));
    }

    // Compatibility: ∫(r₂ - a r₁) ω₀ = 0 for any pair (Gauss–Bonnet + a = 2/N).
    {
        let f = bandlimited_field(&grid, seed0.wrapping_add(500), 5, 0.5);
        let eta = bandlimited_field(&grid, seed0.wrapping_add(501), 5, 0.5);
        let (r1, r2) = residuals(&f, &eta, &config, &grid);
        let a = config.coupling();
        let i1 = grid.integrate_scalar(&r1, AreaForm::Omega0);
        let i2 = grid.integrate_scalar(&r2, AreaForm::Omega0);
        records.push(CheckRecord::new(
            "residual_compat",
            "int (r2 - a r1) omega0 = 0 for any (f, eta)",
            (i2 - a * i1).abs() / (1.0 + i1.abs()),
            run.tolerance("residual_compat", 1e-10),
        ));
    }

    print_table(&records);
    let all_pass = records.iter().all(|r| r.pass);
    if let Err(e) = write_jsonl(&out_dir.join("verify_report.jsonl"), &records) {
        eprintln!("cannot write report: {e}");
        return EXIT_CHECK_FAILED;
    }
    let _ = write_meta(&out_dir.join("verify_meta.json"), "verify", config_path);
    if all_pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

#[derive(Serialize)]
struct FutakiSampleRecord {
    record: &'static str,
    index: usize,
    descriptor: String,
    value: [f64; 2],
}

#[derive(Serialize)]
struct FutakiSummaryRecord {
    record: &'static str,
    anchor: &'static str,
    n: u32,
    ell: u32,
    tau: f64,
    volume: f64,
    coupling: f64,
    mean: [f64; 2],
    closed_form: [f64; 2],
    max_spread: f64,
    max_re: f64,
    tolerance: f64,
    obstructed: bool,
    pass: bool,
}

/// Invariance sampling and obstruction verdict; `--sweep ell` additionally
/// tabulates the functional across ℓ = 0..N.
pub fn cmd_futaki(run: &RunConfig, out_dir: &Path, config_path: Option<&str>, sweep: bool) -> i32 {
    let Setup { config, grid } = match setup(run) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let report = match invariance_report(&config, &grid, run.n_samples, run.seeds[0]) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CHECK_FAILED;
        }
    };

    let mut rows = Vec::new();
    let mut records_json = Vec::new();
    for (i, s) in report.samples.iter().enumerate() {
        rows.push(format!("{},{},{}", i, s.value.re, s.value.im));
        records_json.push(serde_json::to_value(FutakiSampleRecord {
            record: "sample",
            index: i,
            descriptor: s.descriptor.clone(),
            value: [s.value.re, s.value.im],
        }));
    }
    records_json.push(serde_json::to_value(FutakiSummaryRecord {
        record: "summary",
        anchor: "F = i a (V - 4 pi N / tau^2)(N - 2 ell), independent of (eta, f)",
        n: config.n,
        ell: config.ell,
        tau: config.tau,
        volume: config.volume,
        coupling: config.coupling(),
        mean: [report.value.re, report.value.im],
        closed_form: [report.closed_form.re, report.closed_form.im],
        max_spread: report.max_spread,
        max_re: report.max_re,
        tolerance: report.tolerance,
        obstructed: report.obstructed,
        pass: report.pass,
    }));
    let records_json: Vec<_> = records_json.into_iter().map(|r| r.unwrap()).collect();

    if let Err(e) = write_jsonl(&out_dir.join("futaki_report.jsonl"), &records_json) {
        eprintln!("cannot write report: {e}");
        return EXIT_CHECK_FAILED;
    }
    if let Err(e) = write_csv(
        &out_dir.join("futaki_samples.csv"),
        "index,re_f,im_f",
        &rows,
    ) {
        eprintln!("cannot write samples: {e}");
        return EXIT_CHECK_FAILED;
    }

    if sweep {
        let zero = ScalarField::constant(0.0, grid.n_nodes());
        let mut rows = Vec::new();
        for ell in 0..=config.n {
            let c =
                VortexConfig::new(config.n, ell, config.tau, config.volume).expect("sweep config");
            let val = emh_futaki(&zero, &zero, &c, &grid).expect("sweep futaki");
            let closed = emh_futaki_closed(&c);
            rows.push(format!(
                "{},{},{},{},{}",
                ell, val.re, val.im, closed.re, closed.im
            ));
        }
        if let Err(e) = write_csv(
            &out_dir.join("futaki_sweep.csv"),
            "ell,re_f,im_f,closed_re,closed_im",
            &rows,
        ) {
            eprintln!("cannot write sweep: {e}");
            return EXIT_CHECK_FAILED;
        }
    }
    let _ = write_meta(&out_dir.join("futaki_meta.json"), "futaki", config_path);

    println!(
        "{}  N={} ell={} tau={} V={}  closed form = {:+.6e}{:+.6e}i  spread {:.3e}",
        if report.obstructed {
            "OBSTRUCTED"
        } else {
            "UNOBSTRUCTED"
        },
        config.n,
        config.ell,
        config.tau,
        config.volume,
        report.closed_form.re,
        report.closed_form.im,
        report.max_spread,
    );
    if report.pass {
        EXIT_OK
    } else {
        eprintln!(
            "invariance spread {:.3e} exceeds tolerance {:.3e}: internal inconsistency",
            report.max_spread, report.tolerance
        );
        EXIT_CHECK_FAILED
    }
}

#[derive(Serialize)]
struct SolveRecord {
    converged: bool,
    iterations: usize,
    residual_1: f64,
    residual_2: f64,
    conserved_integral: f64,
    expected_conserved: f64,
    futaki_at_solution: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    obstruction_certificate: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_f_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_eta_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_conserved: Option<f64>,
}

/// Coupled solve with convergence trace, field dumps, conserved-integral check
/// and (for N = 2ℓ) the radial-oracle cross-check.
pub fn cmd_solve(run: &RunConfig, out_dir: &Path, config_path: Option<&str>) -> i32 {
    let Setup { config, grid } = match setup(run) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let result = match solve_coupled(&config, &grid, &run.solver) {
        Ok(r) => r,
        Err(SolverError::BradlowRefused { margin }) => {
            eprintln!("Bradlow refusal: tau^2 V - 4 pi N = {margin:.6e} (must be positive)");
            return EXIT_BRADLOW;
        }
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CHECK_FAILED;
        }
    };

    let trace_rows: Vec<String> = result
        .trace
        .iter()
        .map(|t| format!("{},{},{},{}", t.iter, t.residual_1, t.residual_2, t.step))
        .collect();
    let _ = write_csv(
        &out_dir.join("solve_trace.csv"),
        "iter,residual_1,residual_2,step",
        &trace_rows,
    );
    let mut field_rows = Vec::with_capacity(grid.n_nodes());
    for nd in grid.nodes() {
        let idx = nd.i_theta * grid.n_phi + nd.j_phi;
        field_rows.push(format!(
            "{},{},{},{}",
            nd.theta, nd.phi, result.f.values[idx], result.eta.values[idx]
        ));
    }
    let _ = write_csv(
        &out_dir.join("solve_fields.csv"),
        "theta,phi,f,eta",
        &field_rows,
    );

    let expected_conserved = bradlow_check(&config);
    let mut record = SolveRecord {
        converged: result.converged,
        iterations: result.iterations,
        residual_1: result.residual_1,
        residual_2: result.residual_2,
        conserved_integral: result.conserved_integral,
        expected_conserved,
        futaki_at_solution: [result.futaki_at_solution.re, result.futaki_at_solution.im],
        obstruction_certificate: result.obstruction_certificate.map(|c| [c.re, c.im]),
        oracle_f_mismatch: None,
        oracle_eta_mismatch: None,
        oracle_conserved: None,
    };
    if config.n == 2 * config.ell && result.converged {
        match radial_oracle(&config, 4096) {
            Ok(profile) => {
                let (df, de) = compare_with_radial(&result, &profile, &grid);
                record.oracle_f_mismatch = Some(df);
                record.oracle_eta_mismatch = Some(de);
                record.oracle_conserved = Some(profile.conserved_integral);
            }
            Err(e) => eprintln!("radial oracle unavailable: {e}"),
        }
    }
    let _ = write_jsonl(&out_dir.join("solve_result.jsonl"), &[&record]);
    let _ = write_meta(&out_dir.join("solve_meta.json"), "solve", config_path);

    if let Some(cert) = result.obstruction_certificate {
        println!(
            "OBSTRUCTED  certificate F = {:+.6e}{:+.6e}i (nonzero invariant: no solution exists)",
            cert.re, cert.im
        );
        return EXIT_OBSTRUCTED;
    }
    if result.converged {
        println!(
            "CONVERGED  {} iterations, residuals ({:.3e}, {:.3e}), conserved integral {:.12e} (expected {:.12e})",
            result.iterations,
            result.residual_1,
            result.residual_2,
            result.conserved_integral,
            expected_conserved,
        );
        EXIT_OK
    } else {
        eprintln!(
            "NOT CONVERGED after {} iterations: residuals ({:.3e}, {:.3e}); no nonexistence claim is implied",
            result.iterations, result.residual_1, result.residual_2
        );
        EXIT_CHECK_FAILED
    }
}
