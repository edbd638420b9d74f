//! Single-photon scattering in a coupled-resonator waveguide (CRW) whose
//! transport is controlled by a phonon mode through a giant atom coupled at
//! two lattice sites.
//!
//! The crate is organised around one abstraction: an [`EmitterBlock`] is any
//! finite set of local modes with an internal Hermitian Hamiltonian and linear
//! couplings to the two connection sites of the waveguide. The exact
//! atom + phonon system and its dispersive (Schrieffer-Wolff) effective model
//! are both instances of this block, so the boundary-matching solver in
//! [`solver`] serves both, and the closed-form reflection rate in [`analytic`]
//! acts as an independent cross-check.
//!
//! * [`model`] - parameter records, lattice dispersion, detuning helpers and
//!   the exact emitter block.
//! * [`analytic`] - closed-form reflection rate and its special-case
//!   identities.
//! * [`solver`] - boundary-matching linear solver returning full complex
//!   scattering amplitudes.
//! * [`sweff`] - Schrieffer-Wolff effective model, its single-excitation
//!   projection and a brute-force operator oracle for that projection.
//! * [`wavepacket`] - time-domain Gaussian wavepacket propagation as an
//!   independent dynamical check of the steady-state rates.
//! * [`experiments`] - spectra over the detuning axis, peak/valley/width
//!   extraction and even/odd connection-distance classification.

pub mod analytic;
pub mod experiments;
pub mod model;
pub mod solver;
pub mod sweff;
pub mod wavepacket;

pub use analytic::{reflection_analytic, reflection_at_q_zero, ReflectionValue, WhichRoot};
pub use experiments::{
    analyze, parity_classification, sweep, width_scan, BlockKind, ParityClass, ParityRow,
    SpectralFeatures, Spectrum, VaryCoupling,
};
pub use model::{
    dispersion, exact_emitter_block, scattering_point, wavevector_of_energy, EmitterBlock,
    ScatteringPoint, SystemParams,
};
pub use solver::{solve_scattering, solve_scattering_merged, ScatteringSolution};
pub use sweff::{reflection_effective, sw_emitter_block, sw_model, verify_sw_projection, SWModel};
pub use wavepacket::{momentum_filter_estimate, propagate, WavepacketConfig, WavepacketOutcome};
