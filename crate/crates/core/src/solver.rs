//! Newton–Krylov solution of the coupled system at ε = 1,
//!
//!   Δ_{g₀} f = e^η (e^f Φ - τ²) + 4πN/V,
//!   Δ_{g₀}(η + (a/τ²) e^f Φ) = 2K_{g₀} + a e^η (e^f Φ - τ²),
//!
//! together with the Bradlow precheck, an independent axisymmetric oracle, and
//! obstruction certification. The two equations are only compatible when
//! a = 2/N (integrating the recombination r₂ - a·r₁ uses ∫2K₀ω₀ = 8π = a·4πN),
//! and the conformal factor η carries the gauge ∫ e^η ω₀ = V, re-imposed after
//! every Newton update.
//!
//! Internally Newton runs on the equivalent recombined residual
//! (r₁, r₂ - a·r₁ + (κ/V)(∫e^η ω₀ - V)·1): subtracting a·r₁ cancels the
//! zeroth-order terms of the second equation exactly, and the rank-one volume
//! term fills the constant-mode deficiency of the Laplacian, giving a square
//! nonsingular linearisation. The reported residuals are always those of the
//! two original equations. The linearised steps are solved matrix-free by
//! right-preconditioned GMRES with degree-diagonal Poisson-type inverses from
//! the grid module.

use num_complex::Complex64;
use thiserror::Error;

use crate::fields::{higgs_density, FieldsError, VortexConfig};
use crate::futaki::{emh_futaki_closed, obstruction_threshold, FutakiError};
use crate::grid::{AreaForm, GridError, ScalarField, SphereGrid};
use crate::stencil::fd_weights;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Bradlow bound violated: τ²V - 4πN = {margin:.6e} must be positive")]
    BradlowRefused { margin: f64 },
    #[error("axisymmetric reduction needs N = 2ℓ, got N = {n}, ℓ = {ell}")]
    NonAxisymmetric { n: u32, ell: u32 },
    #[error("options invalid: {0}")]
    BadOptions(String),
    #[error("radial oracle failed to converge: residual {residual:.3e} after {iters} iterations")]
    RadialDiverged { residual: f64, iters: usize },
    #[error(transparent)]
    Fields(#[from] FieldsError),
    #[error(transparent)]
    Futaki(#[from] FutakiError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Initial iterate for the coupled solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Constant f matching e^f Φ ≈ τ² in the mean, η = 0.
    Flat,
    /// Interpolate the 1-D axisymmetric oracle (requires N = 2ℓ).
    RadialSeed,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_newton_iters: usize,
    /// Convergence threshold on the sup-norms of both equation residuals.
    pub newton_tol: f64,
    /// Relative GMRES tolerance for each Newton step.
    pub linear_tol: f64,
    /// Initial step fraction for the backtracking line search, in (0, 1].
    pub damping: f64,
    /// Number of τ-continuation stages (1 = direct solve). Stages walk the
    /// Bradlow margin down from a comfortable value to the target,
    /// warm-starting Newton; useful near the existence boundary.
    pub continuation_steps: usize,
    pub init_strategy: InitStrategy,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_newton_iters: 40,
            newton_tol: 1e-10,
            linear_tol: 1e-10,
            damping: 1.0,
            continuation_steps: 1,
            init_strategy: InitStrategy::Flat,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), SolverError> {
        if !self.newton_tol.is_finite()
            || self.newton_tol <= 0.0
            || !self.linear_tol.is_finite()
            || self.linear_tol <= 0.0
        {
            return Err(SolverError::BadOptions(
                "tolerances must be positive".into(),
            ));
        }
        if !self.damping.is_finite() || self.damping <= 0.0 || self.damping > 1.0 {
            return Err(SolverError::BadOptions(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// One Newton iteration record for the convergence trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_1: f64,
    pub residual_2: f64,
    /// Accepted line-search fraction (0 when no step was taken).
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub f: ScalarField,
    pub eta: ScalarField,
    /// Sup-norm of the first equation residual at the final iterate.
    pub residual_1: f64,
    /// Sup-norm of the second equation residual at the final iterate.
    pub residual_2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ∫ e^η e^f Φ ω₀; equals τ²V - 4πN at a solution.
    pub conserved_integral: f64,
    /// Vortex Futaki functional evaluated at the final pair.
    pub futaki_at_solution: Complex64,
    /// Closed-form invariant when it is nonzero (N ≠ 2ℓ): a proof that no
    /// solution exists, regardless of how the iteration behaved.
    pub obstruction_certificate: Option<Complex64>,
    pub trace: Vec<IterationRecord>,
}

/// Bradlow margin τ²V - 4πN. The coupled solve refuses to run unless positive.
pub fn bradlow_check(config: &VortexConfig) -> f64 {
    config.bradlow_margin()
}

/// Pointwise residuals of the two equations at (f, η).
pub fn residuals(
    f: &ScalarField,
    eta: &ScalarField,
    config: &VortexConfig,
    grid: &SphereGrid,
) -> (ScalarField, ScalarField) {
    let a = config.coupling();
    let tau2 = config.tau * config.tau;
    let nf = config.n as f64;
    let source = 4.0 * PI * nf / grid.volume;
    let two_k = 2.0 * grid.curvature();
    let dens = higgs_density(config, grid);

    let lap_f = grid.laplacian(f);
    let combo = grid.scalar_from(|nd| {
        let idx = nd.i_theta * grid.n_phi + nd.j_phi;
        eta.values[idx] + a / tau2 * f.values[idx].exp() * dens.values[idx]
    });
    let lap_combo = grid.laplacian(&combo);

    let n_nodes = grid.n_nodes();
    let mut r1 = vec![0.0; n_nodes];
    let mut r2 = vec![0.0; n_nodes];
    for idx in 0..n_nodes {
        let nonlinear = eta.values[idx].exp() * (f.values[idx].exp() * dens.values[idx] - tau2);
        r1[idx] = lap_f.values[idx] - nonlinear - source;
        r2[idx] = lap_combo.values[idx] - two_k - a * nonlinear;
    }
    (ScalarField { values: r1 }, ScalarField { values: r2 })
}

/// Directional derivative of [`residuals`] at (f, η) along (df, dη).
pub fn jacobian_apply(
    f: &ScalarField,
    eta: &ScalarField,
    df: &ScalarField,
    deta: &ScalarField,
    config: &VortexConfig,
    grid: &SphereGrid,
) -> (ScalarField, ScalarField) {
    let a = config.coupling();
    let tau2 = config.tau * config.tau;
    let dens = higgs_density(config, grid);
    let n_nodes = grid.n_nodes();

    let lap_df = grid.laplacian(df);
    // Δ(dη + (a/τ²) e^f Φ df)
    let combo = ScalarField {
        values: (0..n_nodes)
            .map(|idx| {
                deta.values[idx]
                    + a / tau2 * f.values[idx].exp() * dens.values[idx] * df.values[idx]
            })
            .collect(),
    };
    let lap_combo = grid.laplacian(&combo);

    let mut j1 = vec![0.0; n_nodes];
    let mut j2 = vec![0.0; n_nodes];
    for idx in 0..n_nodes {
        let ef_phi = f.values[idx].exp() * dens.values[idx];
        let w = eta.values[idx].exp() * ef_phi;
        let s = eta.values[idx].exp() * (ef_phi - tau2);
        let bulk = w * df.values[idx] + s * deta.values[idx];
        j1[idx] = lap_df.values[idx] - bulk;
        j2[idx] = lap_combo.values[idx] - a * bulk;
    }
    (ScalarField { values: j1 }, ScalarField { values: j2 })
}

/// Matrix-free GMRES with right preconditioning and modified Gram–Schmidt.
/// Returns (solution, iterations, achieved relative residual).
fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> (Vec<f64>, usize, f64) {
    let n = b.len();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return (vec![0.0; n], 0, 0.0);
    }
    let m = max_iters.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(b.iter().map(|x| x / b_norm).collect());
    let mut h = vec![vec![0.0f64; m]; m + 1];
    let mut cs = vec![0.0f64; m];
    let mut sn = vec![0.0f64; m];
    let mut g = vec![0.0f64; m + 1];
    g[0] = b_norm;
    let mut k_used = 0;
    let mut rel = 1.0;
    for k in 0..m {
        let zk = precond(&basis[k]);
        let mut w = apply(&zk);
        for (j, bj) in basis.iter().enumerate().take(k + 1) {
            let hjk: f64 = w.iter().zip(bj).map(|(a, b)| a * b).sum();
            h[j][k] = hjk;
            for (wi, bi) in w.iter_mut().zip(bj) {
                *wi -= hjk * bi;
            }
        }
        let hk1 = norm(&w);
        h[k + 1][k] = hk1;
        // Apply accumulated Givens rotations to the new column.
        for j in 0..k {
            let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
            h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
            h[j][k] = tmp;
        }
        let denom = (h[k][k] * h[k][k] + hk1 * hk1).sqrt();
        if denom == 0.0 {
            k_used = k;
            break;
        }
        cs[k] = h[k][k] / denom;
        sn[k] = hk1 / denom;
        h[k][k] = denom;
        g[k + 1] = -sn[k] * g[k];
        g[k] *= cs[k];
        k_used = k + 1;
        rel = g[k + 1].abs() / b_norm;
        if rel <= rel_tol || hk1 == 0.0 {
            break;
        }
        basis.push(w.iter().map(|x| x / hk1).collect());
    }
    // Back-substitute the triangular system for the Krylov coefficients.
    let mut y = vec![0.0f64; k_used];
    for i in (0..k_used).rev() {
        let mut s = g[i];
        for j in (i + 1)..k_used {
            s -= h[i][j] * y[j];
        }
        y[i] = s / h[i][i];
    }
    let mut z = vec![0.0f64; n];
    for (j, yj) in y.iter().enumerate() {
        for (zi, bi) in z.iter_mut().zip(&basis[j]) {
            *zi += yj * bi;
        }
    }
    (precond(&z), k_used, rel)
}

/// Workspace for one Newton stage at fixed (config, grid).
struct NewtonStage<'a> {
    config: VortexConfig,
    grid: &'a SphereGrid,
    dens: ScalarField,
    /// Rank-one volume-gauge coupling scale (curvature units).
    kappa: f64,
}

impl<'a> NewtonStage<'a> {
    fn new(config: VortexConfig, grid: &'a SphereGrid) -> Self {
        let dens = higgs_density(&config, grid);
        let kappa = 8.0 * PI / grid.volume;
        NewtonStage {
            config,
            grid,
            dens,
            kappa,
        }
    }

    fn exp_eta_volume(&self, eta: &ScalarField) -> f64 {
        let e = ScalarField {
            values: eta.values.iter().map(|v| v.exp()).collect(),
        };
        self.grid.integrate_scalar(&e, AreaForm::Omega0)
    }

    /// Recombined residual vector [r₁; r₂ - a r₁ + (κ/V)(∫e^η - V)·1].
    fn newton_residual(&self, f: &ScalarField, eta: &ScalarField) -> (Vec<f64>, f64, f64) {
        let (r1, r2) = residuals(f, eta, &self.config, self.grid);
        let a = self.config.coupling();
        let vol_defect = self.exp_eta_volume(eta) - self.grid.volume;
        let shift = self.kappa / self.grid.volume * vol_defect;
        let n = self.grid.n_nodes();
        let mut out = vec![0.0; 2 * n];
        for idx in 0..n {
            out[idx] = r1.values[idx];
            out[n + idx] = r2.values[idx] - a * r1.values[idx] + shift;
        }
        (out, r1.sup_norm(), r2.sup_norm())
    }

    /// Jacobian of the recombined residual. The a·r₁ subtraction cancels all
    /// zeroth-order terms of the second block analytically:
    /// J₂ - a J₁ = Δ(dη + ((a/τ²) e^f Φ - a) df).
    fn newton_jacobian(&self, f: &ScalarField, eta: &ScalarField, v: &[f64]) -> Vec<f64> {
        let n = self.grid.n_nodes();
        let a = self.config.coupling();
        let tau2 = self.config.tau * self.config.tau;
        let df = &v[..n];
        let deta = &v[n..];

        let lap_df = self.grid.laplacian(&ScalarField {
            values: df.to_vec(),
        });
        let combo = ScalarField {
            values: (0..n)
                .map(|idx| {
                    deta[idx]
                        + (a / tau2 * f.values[idx].exp() * self.dens.values[idx] - a) * df[idx]
                })
                .collect(),
        };
        let lap_combo = self.grid.laplacian(&combo);
        // (κ/V) ∫ e^η dη ω₀
        let weighted = ScalarField {
            values: (0..n)
                .map(|idx| eta.values[idx].exp() * deta[idx])
                .collect(),
        };
        let shift =
            self.kappa / self.grid.volume * self.grid.integrate_scalar(&weighted, AreaForm::Omega0);

        let mut out = vec![0.0; 2 * n];
        for idx in 0..n {
            let ef_phi = f.values[idx].exp() * self.dens.values[idx];
            let w = eta.values[idx].exp() * ef_phi;
            let s = eta.values[idx].exp() * (ef_phi - tau2);
            out[idx] = lap_df.values[idx] - w * df[idx] - s * deta[idx];
            out[n + idx] = lap_combo.values[idx] + shift;
        }
        out
    }

    /// Block-diagonal Poisson-type inverse: (Δ - c₁)⁻¹ on the f block and the
    /// regularised Poisson inverse (constant mode ↦ 1/κ) on the η block.
    fn preconditioner(&self, f: &ScalarField, eta: &ScalarField, v: &[f64]) -> Vec<f64> {
        let n = self.grid.n_nodes();
        let mean_w = {
            let w = ScalarField {
                values: (0..n)
                    .map(|idx| eta.values[idx].exp() * f.values[idx].exp() * self.dens.values[idx])
                    .collect(),
            };
            self.grid.integrate_scalar(&w, AreaForm::Omega0) / self.grid.volume
        };
        let c1 = mean_w.max(1e-6 * self.config.tau * self.config.tau);
        let s1 = ScalarField {
            values: v[..n].to_vec(),
        };
        let s2 = ScalarField {
            values: v[n..].to_vec(),
        };
        let p1 = self.grid.helmholtz_inverse(&s1, c1);
        let kappa = self.kappa;
        let p2 = self.grid.spectral_multiply(&s2, |l| {
            if l == 0 {
                1.0 / kappa
            } else {
                1.0 / self.grid.laplacian_eigenvalue(l)
            }
        });
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(&p1.values);
        out[n..].copy_from_slice(&p2.values);
        out
    }

    /// Damped Newton loop from the given iterate. Returns the final fields,
    /// residual sup-norms, iteration count, convergence flag and trace.
    #[allow(clippy::type_complexity)]
    fn run(
        &self,
        mut f: ScalarField,
        mut eta: ScalarField,
        opts: &SolveOptions,
        trace: &mut Vec<IterationRecord>,
    ) -> (ScalarField, ScalarField, f64, f64, usize, bool) {
        let n = self.grid.n_nodes();
        let mut iters = 0;
        let mut converged = false;
        for it in 0..opts.max_newton_iters {
            // Volume gauge: ∫ e^η ω₀ = V exactly at every outer iterate.
            let total = self.exp_eta_volume(&eta);
            if total.is_finite() && total > 0.0 {
                eta = eta.shifted((self.grid.volume / total).ln());
            }
            let (rvec, sup1, sup2) = self.newton_residual(&f, &eta);
            trace.push(IterationRecord {
                iter: it,
                residual_1: sup1,
                residual_2: sup2,
                step: 0.0,
            });
            iters = it;
            if sup1 <= opts.newton_tol && sup2 <= opts.newton_tol {
                converged = true;
                break;
            }
            let rhs: Vec<f64> = rvec.iter().map(|x| -x).collect();
            let (delta, _lin_iters, _lin_rel) = gmres(
                |v| self.newton_jacobian(&f, &eta, v),
                |v| self.preconditioner(&f, &eta, v),
                &rhs,
                opts.linear_tol,
                240,
            );
            // Backtracking on the Euclidean norm of the recombined residual.
            let merit0 = rvec.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut lambda = opts.damping;
            let mut accepted = false;
            for _ in 0..30 {
                let f_try = ScalarField {
                    values: (0..n).map(|i| f.values[i] + lambda * delta[i]).collect(),
                };
                let eta_try = ScalarField {
                    values: (0..n)
                        .map(|i| eta.values[i] + lambda * delta[n + i])
                        .collect(),
                };
                let (rv, _, _) = self.newton_residual(&f_try, &eta_try);
                let merit = rv.iter().map(|x| x * x).sum::<f64>().sqrt();
                if merit.is_finite() && merit <= (1.0 - 1e-4 * lambda) * merit0 {
                    f = f_try;
                    eta = eta_try;
                    trace.last_mut().unwrap().step = lambda;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                // Stalled line search: no productive direction left.
                break;
            }
        }
        let total = self.exp_eta_volume(&eta);
        if total.is_finite() && total > 0.0 {
            eta = eta.shifted((self.grid.volume / total).ln());
        }
        let (_, sup1, sup2) = self.newton_residual(&f, &eta);
        (f, eta, sup1, sup2, iters, converged)
    }
}

fn flat_initial(config: &VortexConfig, grid: &SphereGrid) -> (ScalarField, ScalarField) {
    let dens = higgs_density(config, grid);
    let mean = grid.integrate_scalar(&dens, AreaForm::Omega0) / grid.volume;
    let f0 = (config.tau * config.tau).ln() - mean.ln();
    (
        ScalarField::constant(f0, grid.n_nodes()),
        ScalarField::constant(0.0, grid.n_nodes()),
    )
}

/// Solve the coupled system on the grid. Refuses configurations at or below
/// the Bradlow bound. For N ≠ 2ℓ the closed-form invariant is nonzero and
/// certifies nonexistence; the iteration still runs for diagnostics, but the
/// result can never report convergence — the certificate, not the iteration,
/// is the verdict.
pub fn solve_coupled(
    config: &VortexConfig,
    grid: &SphereGrid,
    opts: &SolveOptions,
) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    config.check_grid(grid)?;
    let margin = bradlow_check(config);
    if margin <= 0.0 {
        return Err(SolverError::BradlowRefused { margin });
    }
    let closed = emh_futaki_closed(config);
    let obstructed = closed.norm() > obstruction_threshold(config);
    let certificate = if obstructed { Some(closed) } else { None };

    let (mut f, mut eta) = match opts.init_strategy {
        InitStrategy::Flat => flat_initial(config, grid),
        InitStrategy::RadialSeed => {
            let profile = radial_oracle(config, 1024)?;
            let fv = grid.scalar_from(|nd| profile.interp_f(nd.theta));
            let ev = grid.scalar_from(|nd| profile.interp_eta(nd.theta));
            (fv, ev)
        }
    };

    let mut trace = Vec::new();
    let (sup1, sup2, iters, newton_ok);
    if opts.continuation_steps > 1 {
        // Walk the Bradlow margin down from a comfortable start, re-solving
        // with warm starts; only the τ parameter changes along the path, so
        // the grid is reused as is.
        let m_target = margin;
        let m_start = m_target.max(4.0 * PI * config.n as f64);
        let steps = opts.continuation_steps;
        let mut out = None;
        for k in 0..steps {
            let cfg_k = if k + 1 == steps {
                *config
            } else {
                let frac = (k + 1) as f64 / steps as f64;
                let m_k = m_start + (m_target - m_start) * frac;
                let tau_k = ((m_k + 4.0 * PI * config.n as f64) / config.volume).sqrt();
                VortexConfig::new(config.n, config.ell, tau_k, config.volume)?
            };
            let stage = NewtonStage::new(cfg_k, grid);
            let r = stage.run(f, eta, opts, &mut trace);
            f = r.0;
            eta = r.1;
            out = Some((r.2, r.3, r.4, r.5));
        }
        let o = out.expect("continuation ran at least one stage");
        sup1 = o.0;
        sup2 = o.1;
        iters = o.2;
        newton_ok = o.3;
    } else {
        let stage = NewtonStage::new(*config, grid);
        let r = stage.run(f, eta, opts, &mut trace);
        f = r.0;
        eta = r.1;
        sup1 = r.2;
        sup2 = r.3;
        iters = r.4;
        newton_ok = r.5;
    }

    let dens = higgs_density(config, grid);
    let integrand = grid.scalar_from(|nd| {
        let idx = nd.i_theta * grid.n_phi + nd.j_phi;
        eta.values[idx].exp() * f.values[idx].exp() * dens.values[idx]
    });
    let conserved = grid.integrate_scalar(&integrand, AreaForm::Omega0);
    let futaki_at_solution = if f.values.iter().chain(&eta.values).all(|v| v.is_finite()) {
        crate::futaki::emh_futaki(&eta, &f, config, grid)?
    } else {
        Complex64::new(f64::NAN, f64::NAN)
    };

    Ok(SolveResult {
        f,
        eta,
        residual_1: sup1,
        residual_2: sup2,
        iterations: iters,
        converged: newton_ok && !obstructed,
        conserved_integral: conserved,
        futaki_at_solution,
        obstruction_certificate: certificate,
        trace,
    })
}

/// Axisymmetric profile from the 1-D collocation oracle, with a doubled-mesh
/// companion solve for Richardson-extrapolated interpolation.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    /// Cell-centre colatitudes θ_i = (i+1/2)π/n.
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub eta: Vec<f64>,
    /// Additive constant in η = a f - (a/τ²) e^f Φ + c.
    pub constant: f64,
    /// (V/2) ∫ e^η e^f Φ sin θ dθ from the fine mesh.
    pub conserved_integral: f64,
    fine_theta: Vec<f64>,
    fine_f: Vec<f64>,
    fine_eta: Vec<f64>,
}

impl RadialProfile {
    /// Richardson-extrapolated f(θ): second-order cell-centred profiles at n
    /// and 2n combine to an O(h⁴) value at arbitrary θ.
    pub fn interp_f(&self, theta: f64) -> f64 {
        let coarse = interp_even(&self.theta, &self.f, theta);
        let fine = interp_even(&self.fine_theta, &self.fine_f, theta);
        (4.0 * fine - coarse) / 3.0
    }

    pub fn interp_eta(&self, theta: f64) -> f64 {
        let coarse = interp_even(&self.theta, &self.eta, theta);
        let fine = interp_even(&self.fine_theta, &self.fine_eta, theta);
        (4.0 * fine - coarse) / 3.0
    }

    /// One-sided estimate of f'(0) from the first three cells (no symmetry
    /// assumption); a smooth axisymmetric profile must give ≈ 0.
    pub fn endpoint_derivative_start(&self) -> f64 {
        let w = fd_weights(0.0, &self.theta[..3], 1);
        w.iter().zip(&self.f).map(|(wi, fi)| wi * fi).sum()
    }

    pub fn endpoint_derivative_end(&self) -> f64 {
        let n = self.theta.len();
        let w = fd_weights(PI, &self.theta[n - 3..], 1);
        w.iter().zip(&self.f[n - 3..]).map(|(wi, fi)| wi * fi).sum()
    }
}

/// 4-point Lagrange interpolation of cell-centred data on [0, π] with even
/// ghost extension across both ends (smooth axisymmetric data is even there).
fn interp_even(theta: &[f64], values: &[f64], at: f64) -> f64 {
    let n = theta.len();
    let mut xs = Vec::with_capacity(n + 4);
    let mut fs = Vec::with_capacity(n + 4);
    xs.push(-theta[1]);
    xs.push(-theta[0]);
    fs.push(values[1]);
    fs.push(values[0]);
    xs.extend_from_slice(theta);
    fs.extend_from_slice(values);
    xs.push(2.0 * PI - theta[n - 1]);
    xs.push(2.0 * PI - theta[n - 2]);
    fs.push(values[n - 1]);
    fs.push(values[n - 2]);
    crate::stencil::local_apply(at, &xs, &fs, 4, 0)
}

/// Solve the axisymmetric reduction on a 1-D colatitude mesh by conservative
/// finite differences + Newton, eliminating η through the exact relation
/// η = a f - (a/τ²) e^f Φ + c with c pinned by the volume constraint.
///
/// Requires N = 2ℓ (otherwise Φ breaks the ansatz) and a positive Bradlow
/// margin. Entirely independent of the spectral machinery: different mesh,
/// different operator discretisation, different unknowns.
pub fn radial_oracle(config: &VortexConfig, n_radial: usize) -> Result<RadialProfile, SolverError> {
    if config.n != 2 * config.ell {
        return Err(SolverError::NonAxisymmetric {
            n: config.n,
            ell: config.ell,
        });
    }
    let margin = bradlow_check(config);
    if margin <= 0.0 {
        return Err(SolverError::BradlowRefused { margin });
    }
    let n_radial = n_radial.max(64);
    let coarse = radial_solve(config, n_radial)?;
    let fine = radial_solve(config, 2 * n_radial)?;
    let conserved = fine.3;
    Ok(RadialProfile {
        theta: coarse.0.clone(),
        f: coarse.1,
        eta: coarse.2,
        constant: coarse.4,
        conserved_integral: conserved,
        fine_theta: fine.0,
        fine_f: fine.1,
        fine_eta: fine.2,
    })
}

type RadialSolve = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64);

fn radial_solve(config: &VortexConfig, n: usize) -> Result<RadialSolve, SolverError> {
    let a = config.coupling();
    let tau2 = config.tau * config.tau;
    let nf = config.n as f64;
    let ell = config.ell as i32;
    let v = config.volume;
    let h = PI / n as f64;
    let theta: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let sin_c: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    // Face factors sin(i h); exact zeros close the fluxes at both poles.
    let sin_f: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                0.0
            } else {
                (i as f64 * h).sin()
            }
        })
        .collect();
    let phi_d: Vec<f64> = theta
        .iter()
        .map(|t| {
            let x = t.cos();
            (0.5 * (1.0 - x)).powi(ell) * (0.5 * (1.0 + x)).powi(config.n as i32 - ell)
        })
        .collect();

    // Flat start consistent with the 2-D initialisation.
    let mean_phi: f64 = phi_d
        .iter()
        .zip(&sin_c)
        .map(|(p, s)| p * s * h)
        .sum::<f64>()
        / 2.0;
    let mut f = vec![tau2.ln() - mean_phi.ln(); n];
    // Pin c so the volume constraint starts satisfied.
    let mut c = {
        let raw: f64 = (0..n)
            .map(|i| (a * f[i] - a / tau2 * f[i].exp() * phi_d[i]).exp() * sin_c[i] * h)
            .sum();
        (2.0 / raw).ln()
    };

    let lap_scale = 4.0 * PI / v / (h * h);
    let source = 4.0 * PI * nf / v;
    let eval = |f: &[f64], c: f64| -> (Vec<f64>, f64, Vec<f64>) {
        let mut eta = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 0..n {
            let e_i = f[i].exp() * phi_d[i];
            eta[i] = a * f[i] - a / tau2 * e_i + c;
        }
        for i in 0..n {
            let fl = if i == 0 {
                0.0
            } else {
                sin_f[i] * (f[i] - f[i - 1])
            };
            let fr = if i == n - 1 {
                0.0
            } else {
                sin_f[i + 1] * (f[i + 1] - f[i])
            };
            let lap = lap_scale * (fr - fl) / sin_c[i];
            let e_i = f[i].exp() * phi_d[i];
            r[i] = lap - eta[i].exp() * (e_i - tau2) - source;
        }
        let vol: f64 = (0..n).map(|i| eta[i].exp() * sin_c[i] * h).sum();
        (r, vol - 2.0, eta)
    };

    // Pole-adjacent rows divide the flux difference by sin(h/2), so the
    // evaluated residual carries a roundoff floor ~ eps·(8π/V)/h²·|f|;
    // converge to a safe multiple of it.
    let noise_floor = f64::EPSILON * 8.0 * PI / (v * h * h) * (1.0 + f[0].abs());
    let tol = (50.0 * noise_floor).max(1e-12);
    let mut converged = false;
    let mut last_res = f64::INFINITY;
    for _ in 0..60 {
        let (r, rv, eta) = eval(&f, c);
        let sup = r.iter().fold(rv.abs(), |acc, x| acc.max(x.abs()));
        last_res = sup;
        if sup < tol {
            converged = true;
            break;
        }
        // Bordered tridiagonal Newton system:
        // [T  b; rowᵀ d] [δf; δc] = -[r; rv].
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut bcol = vec![0.0; n];
        let mut row = vec![0.0; n];
        let mut d = 0.0;
        for i in 0..n {
            let e_i = f[i].exp() * phi_d[i];
            let g_i = a - a / tau2 * e_i; // ∂η/∂f
            let sl = sin_f[i];
            let sr = sin_f[i + 1];
            lower[i] = lap_scale * sl / sin_c[i];
            upper[i] = lap_scale * sr / sin_c[i];
            diag[i] = -lap_scale * (sl + sr) / sin_c[i] - eta[i].exp() * (g_i * (e_i - tau2) + e_i);
            bcol[i] = -eta[i].exp() * (e_i - tau2);
            row[i] = eta[i].exp() * g_i * sin_c[i] * h;
            d += eta[i].exp() * sin_c[i] * h;
        }
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let y = thomas(&lower, &diag, &upper, &neg_r);
        let q = thomas(&lower, &diag, &upper, &bcol);
        let row_dot = |u: &[f64]| row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        let dc = (-rv - row_dot(&y)) / (d - row_dot(&q));
        let df: Vec<f64> = (0..n).map(|i| y[i] - q[i] * dc).collect();
        // Damped update with a merit decrease guard.
        let merit0 = r.iter().map(|x| x * x).sum::<f64>() + rv * rv;
        let mut lambda = 1.0;
        let mut stepped = false;
        for _ in 0..25 {
            let f_try: Vec<f64> = (0..n).map(|i| f[i] + lambda * df[i]).collect();
            let c_try = c + lambda * dc;
            let (rt, rvt, _) = eval(&f_try, c_try);
            let merit = rt.iter().map(|x| x * x).sum::<f64>() + rvt * rvt;
            if merit.is_finite() && merit < merit0 {
                f = f_try;
                c = c_try;
                stepped = true;
                break;
            }
            lambda *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    if !converged {
        return Err(SolverError::RadialDiverged {
            residual: last_res,
            iters: 60,
        });
    }
    let (_, _, eta) = eval(&f, c);
    let conserved: f64 = (0..n)
        .map(|i| eta[i].exp() * f[i].exp() * phi_d[i] * sin_c[i] * h)
        .sum::<f64>()
        * v
        / 2.0;
    Ok((theta, f, eta, conserved, c))
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]`
/// are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = upper[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / m;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Sup-norm mismatch between a 2-D solution and the 1-D oracle, per field.
pub fn compare_with_radial(
    result: &SolveResult,
    profile: &RadialProfile,
    grid: &SphereGrid,
) -> (f64, f64) {
    let mut df = 0.0f64;
    let mut de = 0.0f64;
    for nd in grid.nodes() {
        let idx = nd.i_theta * grid.n_phi + nd.j_phi;
        df = df.max((result.f.values[idx] - profile.interp_f(nd.theta)).abs());
        de = de.max((result.eta.values[idx] - profile.interp_eta(nd.theta)).abs());
    }
    (df, de)
}
