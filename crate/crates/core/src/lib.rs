//! Spectral toolkit for the self-dual Abelian vortex system on the round
//! two-sphere: discretisation and conformal operators (`grid`), the Higgs
//! density and automorphism potentials (`fields`), the obstruction functionals
//! and their invariance verdicts (`futaki`), and the coupled Newton–Krylov
//! solver with its independent axisymmetric oracle (`solver`).
//!
//! The central objects are the coupled system
//!
//! ```text
//! Δ_{g₀} f              = e^η (e^f Φ − τ²) + 4πN/V
//! Δ_{g₀}(η + (a/τ²)e^fΦ) = 2K_{g₀} + a e^η (e^f Φ − τ²)
//! ```
//!
//! on the volume-V round sphere with the quantised coupling a = 2/N, and the
//! invariant F = ia(V − 4πN/τ²)(N − 2ℓ), computable from any conformal data
//! pair (η, f) under the volume constraint ∫ e^η ω₀ = V: it vanishes whenever
//! the system is solvable, so a nonzero value (exactly the case N ≠ 2ℓ) is a
//! proof of nonexistence that no amount of iteration can override.

pub mod fields;
pub mod futaki;
pub mod grid;
pub mod sht;
pub mod solver;
pub mod stencil;

pub use fields::VortexConfig;
pub use futaki::{emh_futaki, emh_futaki_closed, invariance_report, FutakiReport};
pub use grid::{AreaForm, ComplexField, PoleBand, ScalarField, SphereGrid};
pub use solver::{radial_oracle, solve_coupled, SolveOptions, SolveResult};
