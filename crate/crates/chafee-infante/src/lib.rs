//! Spectral-Galerkin simulation and finite-time Lyapunov analysis for the
//! stochastic Chafee-Infante equation
//!
//! ```text
//!     du = (Δu + αu − u³) dt + dW_t,   u|_∂ = 0  on [0, L],
//! ```
//!
//! driven by additive trace-class Q-Wiener noise. The library locates the
//! singleton random pullback attractor a(ω), propagates tangent frames under
//! the first-variation equation to estimate finite-time Lyapunov exponents
//! Λ_k(t; ω) and k-volume growth rates V_k(t; ω), and numerically certifies
//! the exponential upper and lower bounds that hold along the attractor:
//!
//! * upper bounds Λ_1 ≤ α − λ_1 and V_k ≤ Σ_{i≤k} (α − λ_i) for every path,
//! * lower bounds Λ_1 ≥ α − λ_1 − δ (and the V_k analogue) on
//!   positive-probability events where the attractor stays small in H¹₀,
//!   certified through invariant-cone quadratic forms Q_δ on H and on the
//!   wedge spaces ∧^k H.
//!
//! Module map:
//!
//! * [`spectral`] — truncated sine basis, norms, dealiased products.
//! * [`noise`] — Q-Wiener increments, Wiener shift, Ornstein–Uhlenbeck
//!   auxiliary process.
//! * [`dynamics`] — exponential/semi-implicit Euler steppers for the SPDE,
//!   the OU-subtracted random PDE, and the variational equation.
//! * [`attractor`] — pullback attractor location, synchronization checks,
//!   rejection sampling of smallness events, Gronwall envelope checks.
//! * [`exterior`] — wedge-space linear algebra and compound operators.
//! * [`lyapunov`] — tangent-frame propagation, FTLE and volume reports.
//! * [`cones`] — quadratic forms Q_δ and Q_δ^{(k)}, admissible δ,
//!   cone-growth certificates.
//! * [`special`] — Mittag-Leffler series, singular Gronwall bounds, the H¹
//!   decay envelope.
//! * [`config`] / [`experiments`] — experiment configuration and the
//!   canonical experiment drivers behind the CLI.
//!
//! The runnable `examples/` directory demonstrates each capability; the
//! `chafee-infante` binary drives the same experiments from config files.

pub mod attractor;
pub mod cones;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod exterior;
pub mod lyapunov;
pub mod noise;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{BasisConvention, DomainSpec, SpectralField};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
