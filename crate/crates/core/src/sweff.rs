//! Dispersive (Schrieffer-Wolff) effective model of the atom + phonon block.
//!
//! For `|lambda / Delta_c| << 1` the atom and the phonon stop exchanging
//! excitation and interact only through state-dependent frequency shifts
//! `-+ lambda^2 / Delta_c`; the waveguide picks up a direct phonon coupling
//! `(lambda / Delta_c) g` and a corrected atom coupling
//! `g (1 + lambda^2 / (2 Delta_c^2))`. Everything beyond those second-order
//! coefficients is cubic in the excitation operators and contributes nothing
//! in the single-excitation sector - a fact [`verify_sw_projection`] proves by
//! building every term of the transformed Hamiltonian as explicit ladder
//! operators on a truncated Fock space and projecting, rather than assuming.

use serde::Serialize;
use thiserror::Error;

use crate::analytic::ReflectionValue;
use crate::model::{scattering_point, EmitterBlock, ModelError, SystemParams};
use crate::solver::{solve_scattering, SolverError};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Perturbative validity bound on `|lambda / Delta_c|`. Beyond this the
/// second-order expansion is meaningless and construction fails loudly.
pub const SMALL_PARAMETER_LIMIT: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwError {
    #[error("dispersive-regime violation: atom and phonon are resonant (Delta_c = 0)")]
    Resonant,
    #[error(
        "perturbative-validity error: |lambda / Delta_c| = {small_parameter} >= {SMALL_PARAMETER_LIMIT}"
    )]
    PerturbativeValidity { small_parameter: f64 },
    #[error("oracle configuration: {0}")]
    OracleConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Second-order coefficients of the dispersive effective Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SWModel {
    /// `Delta_c = omega_0 - omega_a`.
    pub delta_c: f64,
    /// Shift applied to the atom frequency: `-lambda^2 / Delta_c`.
    pub atom_shift: f64,
    /// Shift applied to the phonon frequency: `+lambda^2 / Delta_c`.
    pub phonon_shift: f64,
    /// Dressed atom-waveguide coupling `g (1 + lambda^2 / (2 Delta_c^2))`.
    pub atom_wg_coupling: f64,
    /// Phonon-waveguide coupling `(lambda / Delta_c) g` inherited in the
    /// atom-ground sector.
    pub phonon_wg_coupling: f64,
    /// Expansion parameter `|lambda / Delta_c|`.
    pub small_parameter: f64,
}

/// Closed-form second-order coefficients of the effective Hamiltonian.
pub fn sw_model(params: &SystemParams) -> Result<SWModel, SwError> {
    let delta_c = params.delta_c();
    if delta_c == 0.0 {
        return Err(SwError::Resonant);
    }
    let small_parameter = (params.lambda / delta_c).abs();
    if small_parameter >= SMALL_PARAMETER_LIMIT {
        return Err(SwError::PerturbativeValidity { small_parameter });
    }
    let lam2 = params.lambda * params.lambda;
    Ok(SWModel {
        delta_c,
        atom_shift: -lam2 / delta_c,
        phonon_shift: lam2 / delta_c,
        atom_wg_coupling: params.g * (1.0 + lam2 / (2.0 * delta_c * delta_c)),
        phonon_wg_coupling: (params.lambda / delta_c) * params.g,
        small_parameter,
    })
}

/// The effective model as an emitter block for the scattering solver:
/// diagonal internal Hamiltonian (no excitation exchange), both internal
/// modes coupled to both connection sites.
pub fn sw_emitter_block(params: &SystemParams) -> Result<EmitterBlock, SwError> {
    let sw = sw_model(params)?;
    let r = |x: f64| Complex64::new(x, 0.0);
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            r(params.omega_a + sw.atom_shift),
            r(0.0),
            r(0.0),
            r(params.omega_0 + sw.phonon_shift),
        ],
    );
    let w = DMatrix::from_row_slice(
        2,
        2,
        &[
            r(sw.atom_wg_coupling),
            r(sw.atom_wg_coupling),
            r(sw.phonon_wg_coupling),
            r(sw.phonon_wg_coupling),
        ],
    );
    Ok(EmitterBlock::new(h, w, params.n).expect("SW block is real symmetric"))
}

/// Reflection rate `R'` of the effective model, via the shared solver.
pub fn reflection_effective(params: &SystemParams, k: f64) -> Result<ReflectionValue, SwError> {
    let block = sw_emitter_block(params)?;
    let solution = solve_scattering(&block, params, k)?;
    let point = scattering_point(params, k)?;
    Ok(ReflectionValue {
        r_rate: solution.reflection(),
        point,
    })
}

// ---------------------------------------------------------------------------
// Brute-force projection oracle
// ---------------------------------------------------------------------------

/// One ladder-operator factor acting on the truncated product space.
#[derive(Debug, Clone, Copy)]
enum Factor {
    PhononLower,
    PhononRaise,
    AtomRaise,
    AtomLower,
    ProjExcited,
    ProjGround,
    PhotonLower(usize),
    PhotonRaise(usize),
}

/// Occupation-number state on atom x phonon Fock x photon modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct FockState {
    atom: bool,
    phonon: usize,
    photons: Vec<u8>,
}

impl FockState {
    fn excitation(&self) -> usize {
        self.atom as usize + self.phonon + self.photons.iter().map(|&o| o as usize).sum::<usize>()
    }
}

/// Apply a single factor; `None` means the state is annihilated (including
/// truncation at the phonon cut or single photon occupancy).
fn apply_factor(f: Factor, state: &FockState, phonon_cut: usize) -> Option<(f64, FockState)> {
    let mut s = state.clone();
    let amp = match f {
        Factor::PhononLower => {
            if s.phonon == 0 {
                return None;
            }
            let a = (s.phonon as f64).sqrt();
            s.phonon -= 1;
            a
        }
        Factor::PhononRaise => {
            if s.phonon >= phonon_cut {
                return None;
            }
            s.phonon += 1;
            (s.phonon as f64).sqrt()
        }
        Factor::AtomRaise => {
            if s.atom {
                return None;
            }
            s.atom = true;
            1.0
        }
        Factor::AtomLower => {
            if !s.atom {
                return None;
            }
            s.atom = false;
            1.0
        }
        Factor::ProjExcited => {
            if !s.atom {
                return None;
            }
            1.0
        }
        Factor::ProjGround => {
            if s.atom {
                return None;
            }
            1.0
        }
        Factor::PhotonLower(j) => {
            if s.photons[j] == 0 {
                return None;
            }
            s.photons[j] = 0;
            1.0
        }
        Factor::PhotonRaise(j) => {
            if s.photons[j] != 0 {
                return None;
            }
            s.photons[j] = 1;
            1.0
        }
    };
    Some((amp, s))
}

/// A term is a coefficient times a product of factors written left to right;
/// application order is right to left.
struct Term {
    coeff: f64,
    factors: Vec<Factor>,
}

fn apply_term(term: &Term, state: &FockState, phonon_cut: usize) -> Option<(f64, FockState)> {
    let mut amp = term.coeff;
    let mut s = state.clone();
    for &f in term.factors.iter().rev() {
        let (a, next) = apply_factor(f, &s, phonon_cut)?;
        amp *= a;
        s = next;
    }
    Some((amp, s))
}

/// Every term of the transformed Hamiltonian on a finite test chain of
/// `sites` resonators, written out literally.
fn effective_hamiltonian_terms(params: &SystemParams, sites: usize) -> Vec<Term> {
    use Factor::*;
    let dc = params.delta_c();
    let lam = params.lambda;
    let g = params.g;
    let lam2_dc = lam * lam / dc;
    let chi = lam / dc;
    let legs = [0usize, params.n];

    let mut terms = vec![
        Term {
            coeff: params.omega_0,
            factors: vec![PhononRaise, PhononLower],
        },
        Term {
            coeff: params.omega_a,
            factors: vec![ProjExcited],
        },
        Term {
            coeff: -lam2_dc,
            factors: vec![PhononLower, PhononRaise, ProjExcited],
        },
        Term {
            coeff: lam2_dc,
            factors: vec![PhononRaise, PhononLower, ProjGround],
        },
    ];
    for j in 0..sites {
        terms.push(Term {
            coeff: params.omega_c,
            factors: vec![PhotonRaise(j), PhotonLower(j)],
        });
        if j + 1 < sites {
            terms.push(Term {
                coeff: -params.xi,
                factors: vec![PhotonRaise(j + 1), PhotonLower(j)],
            });
            terms.push(Term {
                coeff: -params.xi,
                factors: vec![PhotonRaise(j), PhotonLower(j + 1)],
            });
        }
    }
    for &s in &legs {
        let b_up = PhotonRaise(s);
        let b_dn = PhotonLower(s);
        // direct and second-order atom-waveguide exchange
        for coeff in [g, 0.5 * chi * chi * g] {
            terms.push(Term {
                coeff,
                factors: vec![b_up, AtomLower],
            });
            terms.push(Term {
                coeff,
                factors: vec![AtomRaise, b_dn],
            });
        }
        // phonon-waveguide exchange, opposite sign in the two atom sectors
        for (proj, sign) in [(ProjGround, 1.0), (ProjExcited, -1.0)] {
            terms.push(Term {
                coeff: sign * chi * g,
                factors: vec![b_up, PhononLower, proj],
            });
            terms.push(Term {
                coeff: sign * chi * g,
                factors: vec![PhononRaise, b_dn, proj],
            });
        }
        // cubic leftovers of the transformation
        let c3 = chi * chi * g;
        terms.push(Term {
            coeff: c3,
            factors: vec![b_up, PhononLower, PhononLower, AtomRaise],
        });
        terms.push(Term {
            coeff: c3,
            factors: vec![PhononRaise, b_dn, PhononLower, AtomRaise],
        });
        terms.push(Term {
            coeff: c3,
            factors: vec![PhononRaise, b_up, PhononLower, AtomLower],
        });
        terms.push(Term {
            coeff: c3,
            factors: vec![PhononRaise, PhononRaise, b_dn, AtomLower],
        });
    }
    terms
}

/// Build every term of the effective Hamiltonian as explicit operators on
/// (atom x phonon Fock up to `n_phonon_cut` x `n_test_sites` photon modes),
/// project onto the single-excitation sector and return the maximum absolute
/// entry-wise deviation from the matrix implied by [`sw_emitter_block`]
/// embedded on the same sites. Any leakage out of the sector counts toward
/// the deviation.
pub fn verify_sw_projection(
    params: &SystemParams,
    n_phonon_cut: usize,
    n_test_sites: usize,
) -> Result<f64, SwError> {
    if n_phonon_cut < 2 {
        return Err(SwError::OracleConfig(format!(
            "n_phonon_cut must be >= 2, got {n_phonon_cut}"
        )));
    }
    if n_test_sites < params.n + 3 {
        return Err(SwError::OracleConfig(format!(
            "n_test_sites must be >= N + 3 = {}, got {n_test_sites}",
            params.n + 3
        )));
    }
    let block = sw_emitter_block(params)?;

    // single-excitation sector basis: |e, 0, vac>, |g, 1, vac>, |g, 0, 1_j>
    let vac = vec![0u8; n_test_sites];
    let mut sector: Vec<FockState> = Vec::with_capacity(2 + n_test_sites);
    sector.push(FockState {
        atom: true,
        phonon: 0,
        photons: vac.clone(),
    });
    sector.push(FockState {
        atom: false,
        phonon: 1,
        photons: vac.clone(),
    });
    for j in 0..n_test_sites {
        let mut photons = vac.clone();
        photons[j] = 1;
        sector.push(FockState {
            atom: false,
            phonon: 0,
            photons,
        });
    }
    let index_of = |s: &FockState| sector.iter().position(|t| t == s);

    let terms = effective_hamiltonian_terms(params, n_test_sites);
    let dim = sector.len();
    let mut h_brute = DMatrix::<f64>::zeros(dim, dim);
    let mut leakage: f64 = 0.0;
    for (col, state) in sector.iter().enumerate() {
        for term in &terms {
            if let Some((amp, out)) = apply_term(term, state, n_phonon_cut) {
                match index_of(&out) {
                    Some(row) => h_brute[(row, col)] += amp,
                    None => {
                        debug_assert_ne!(out.excitation(), 1);
                        leakage = leakage.max(amp.abs());
                    }
                }
            }
        }
    }

    // the same sector Hamiltonian implied by the emitter block on this chain
    let mut h_block = DMatrix::<f64>::zeros(dim, dim);
    h_block[(0, 0)] = block.h_internal()[(0, 0)].re;
    h_block[(1, 1)] = block.h_internal()[(1, 1)].re;
    for (mode, leg) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
        let site = if leg == 0 { 0 } else { params.n };
        let w = block.coupling()[(mode, leg)].re;
        h_block[(mode, 2 + site)] += w;
        h_block[(2 + site, mode)] += w;
    }
    for j in 0..n_test_sites {
        h_block[(2 + j, 2 + j)] = params.omega_c;
        if j + 1 < n_test_sites {
            h_block[(2 + j, 2 + j + 1)] = -params.xi;
            h_block[(2 + j + 1, 2 + j)] = -params.xi;
        }
    }

    let entry_dev = (&h_brute - &h_block)
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    Ok(entry_dev.max(leakage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{analyze, sweep, BlockKind};
    use crate::model::{exact_emitter_block, wavevector_of_energy};
    use rand::{Rng, SeedableRng};

    fn detuned_reference() -> SystemParams {
        SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.2, 0.5, 4).unwrap()
    }

    #[test]
    fn sw_model_reference_values() {
        let sw = sw_model(&detuned_reference()).unwrap();
        assert_eq!(sw.delta_c, -2.0);
        assert!((20.0 + sw.atom_shift - 20.02).abs() < 1e-14);
        assert!((18.0 + sw.phonon_shift - 17.98).abs() < 1e-14);
        assert!((sw.phonon_wg_coupling + 0.05).abs() < 1e-14);
        assert!((sw.atom_wg_coupling - 0.5 * (1.0 + 0.04 / 8.0)).abs() < 1e-14);
        assert!((sw.small_parameter - 0.1).abs() < 1e-14);
    }

    #[test]
    fn sw_model_identity_at_zero_coupling() {
        let p = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.0, 0.5, 4).unwrap();
        let sw = sw_model(&p).unwrap();
        assert_eq!(sw.atom_shift, 0.0);
        assert_eq!(sw.phonon_shift, 0.0);
        assert_eq!(sw.phonon_wg_coupling, 0.0);
        assert_eq!(sw.atom_wg_coupling, 0.5);
    }

    #[test]
    fn sw_model_guards() {
        let resonant = SystemParams::new(20.0, 1.0, 20.0, 20.0, 0.2, 0.5, 4).unwrap();
        assert!(matches!(sw_model(&resonant), Err(SwError::Resonant)));

        let strong = SystemParams::new(20.0, 1.0, 19.5, 20.0, 0.2, 0.5, 4).unwrap();
        assert!(matches!(
            sw_model(&strong),
            Err(SwError::PerturbativeValidity { .. })
        ));
    }

    #[test]
    fn sw_block_reference_and_sign_flip() {
        let b = sw_emitter_block(&detuned_reference()).unwrap();
        assert!((b.h_internal()[(0, 0)].re - 20.02).abs() < 1e-14);
        assert!((b.h_internal()[(1, 1)].re - 17.98).abs() < 1e-14);
        assert_eq!(b.h_internal()[(0, 1)], Complex64::ZERO);

        let flipped = SystemParams::new(20.0, 1.0, 22.0, 20.0, 0.2, 0.5, 4).unwrap();
        let sw = sw_model(&flipped).unwrap();
        assert!((sw.atom_shift + 0.02).abs() < 1e-14);
        assert!((sw.phonon_shift - 0.02).abs() < 1e-14);
    }

    #[test]
    fn sw_block_equals_exact_block_without_phonon_coupling() {
        let p = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.0, 0.5, 4).unwrap();
        assert_eq!(sw_emitter_block(&p).unwrap(), exact_emitter_block(&p));
    }

    #[test]
    fn projection_oracle_at_reference_point() {
        let dev = verify_sw_projection(&detuned_reference(), 3, 9).unwrap();
        assert!(dev <= 1e-12, "deviation {dev}");
    }

    #[test]
    fn projection_oracle_exact_at_zero_coupling() {
        let p = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.0, 0.5, 4).unwrap();
        assert_eq!(verify_sw_projection(&p, 2, 7).unwrap(), 0.0);
    }

    #[test]
    fn projection_oracle_on_random_dispersive_draws() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let mut done = 0;
        while done < 20 {
            let omega_0 = 20.0 + [-1.0, 1.0][rng.random_range(0..2)] * rng.random_range(1.0..3.0);
            let p = SystemParams::new(
                20.0,
                1.0,
                omega_0,
                20.0,
                rng.random_range(0.0..0.25),
                rng.random_range(0.0..1.0),
                rng.random_range(0..5),
            )
            .unwrap();
            if sw_model(&p).is_err() {
                continue;
            }
            let dev = verify_sw_projection(&p, 3, p.n + 4).unwrap();
            assert!(dev <= 1e-12, "deviation {dev} for {p:?}");
            done += 1;
        }
    }

    #[test]
    fn oracle_config_is_validated() {
        assert!(matches!(
            verify_sw_projection(&detuned_reference(), 1, 9),
            Err(SwError::OracleConfig(_))
        ));
        assert!(matches!(
            verify_sw_projection(&detuned_reference(), 3, 5),
            Err(SwError::OracleConfig(_))
        ));
    }

    #[test]
    fn effective_reflection_special_cases() {
        let p = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.2, 0.0, 4).unwrap();
        let k = wavevector_of_energy(&p, 20.3).unwrap();
        assert!(reflection_effective(&p, k).unwrap().r_rate <= 1e-24);

        // lambda = 0: the effective block is the exact block, bit for bit
        let p = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.0, 0.5, 4).unwrap();
        let k = wavevector_of_energy(&p, 20.3).unwrap();
        let exact = solve_scattering(&exact_emitter_block(&p), &p, k).unwrap();
        assert_eq!(
            reflection_effective(&p, k).unwrap().r_rate,
            exact.reflection()
        );
    }

    fn sup_gap(params: &SystemParams, n_points: usize) -> f64 {
        let exact = sweep(params, BlockKind::Exact, -1.5, 1.5, n_points).unwrap();
        let eff = sweep(params, BlockKind::SchriefferWolff, -1.5, 1.5, n_points).unwrap();
        exact
            .values
            .iter()
            .zip(eff.values.iter())
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn effective_spectrum_tracks_exact_and_scales_quadratically() {
        let sup_02 = sup_gap(&detuned_reference(), 301);
        assert!(sup_02 <= 0.02, "sup gap {sup_02}");

        let mut half = detuned_reference();
        half.lambda = 0.1;
        let sup_01 = sup_gap(&half, 301);
        assert!(sup_02 >= 2.0 * sup_01, "scaling {sup_02} vs {sup_01}");
    }

    #[test]
    fn detuned_spectrum_has_a_single_peak() {
        let s = sweep(
            &detuned_reference(),
            BlockKind::SchriefferWolff,
            -1.5,
            1.5,
            2001,
        )
        .unwrap();
        let features = analyze(&s, 0.5);
        assert_eq!(features.n_peaks, 1);
    }
}
