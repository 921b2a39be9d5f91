//! Simulation and analysis toolkit for single-photon funneling from a
//! dephased quantum emitter through a nested plasmonic-resonator +
//! dielectric-cavity system.
//!
//! The model lives on the single-excitation basis
//! {|e,0,0⟩, |g,1,0⟩, |g,0,1⟩} (emitter excited, one plasmon, one cavity
//! photon) with an absorbing ground state. All rates are normalized to the
//! emitter's free-space decay rate Γ₁.
//!
//! Pipeline:
//!
//! 1. [`params`] — validated rate parameters and physical-unit conversions.
//! 2. [`liouvillian`] — the 9×9 Lindblad generator and density-matrix
//!    propagation.
//! 3. [`greens`] — the retarded Green's function exp(Mτ) and two-time
//!    output-mode correlators ⟨m†(t+τ)m(t)⟩.
//! 4. [`metrics`] — photon indistinguishability I, extraction efficiency β,
//!    and funneling ratio F, by log-grid quadrature and by an independent
//!    spectral closed form.
//! 5. [`analytic`] — exchange rates, rate equations, the effective-emitter
//!    reduction, closed-form I/β, and Purcell factors.
//! 6. [`sweep`] — 1-D/2-D parameter grids with figure presets.

pub mod analytic;
pub mod greens;
pub mod liouvillian;
pub mod metrics;
pub mod params;
pub mod sweep;
pub mod validation;

pub use analytic::{EffectiveParams, ExchangeRates, PurcellReport, RateMatrix};
pub use greens::{CorrelatorGrid, EffectiveGenerator, OutputMode, PropagatorGrid};
pub use liouvillian::{DensityMatrix3, GridSpec, Hamiltonian3, LiouvillianMap, Trajectory};
pub use metrics::{compute_point, MetricsError, MetricsResult, Method, PointResult};
pub use params::{ParamsError, PhysicalSpec, Preset, RateParams, RegimeFlags};
pub use sweep::{Axis, AxisScale, FigurePreset, SweepError, SweepResult, SweepSpec};
