//! Robust L∞ state-feedback synthesis with actuator selection: problem data,
//! the four matrix-inequality blocks and fixed-scalar certification.
//!
//! For decision variables `P ≻ 0`, `Y`, selection `Γ`, scalars `μ0, μ1, μ2`
//! and decay rate `α`, the blocks are
//!
//! ```text
//! M1 = [ PAᵀ + AP + αP − YᵀΓBuᵀ − BuΓY    Bd      ]
//!      [ Bdᵀ                              −αμ0 I  ]
//!
//! M2 = [ −μ1 P      O       (CP − DY)ᵀ ]
//!      [ O          −μ2 I   O          ]
//!      [ CP − DY    O       −I         ]
//!
//! M3 = [ −μ0ρ²   x0ᵀ ]        M4 = [ −(u²/ρ²) P   μ0 Yᵀ ]
//!      [ x0      −P  ]             [ μ0 Y         −μ0 I ]
//! ```
//!
//! and all must be `⪯ −ε I`. A feasible point certifies the gain
//! `K = −Y P⁻¹` with `‖p(t)‖ ≤ μρ`, `μ = √(μ0μ1 + μ2)`, and `‖u(t)‖ ≤ u_max`
//! for every disturbance with `sup_t ‖d(t)‖ ≤ ρ`.

pub(crate) mod blocks;
pub(crate) mod certify;
pub mod expr;
mod problem;
pub(crate) mod scaling;

pub use blocks::{
    assemble_m1, assemble_m2, assemble_m3, assemble_m4, residual, BlockId, BlockResiduals,
};
pub use certify::{certify_fixed, certify_fixed_with};
pub use problem::{
    CertStatus, ControllerSolution, LogisticConstraints, ProblemConfig, SynthError,
    SynthVariables, SynthesisProblem,
};

/// Strict-feasibility margin applied to every block.
pub const EPS1: f64 = 1e-4;

/// Largest block residual accepted as a certificate.
pub const CERT_TOL: f64 = 1e-7;
