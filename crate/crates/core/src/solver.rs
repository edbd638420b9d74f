//! Boundary-matching linear solver for single-excitation plane-wave
//! scattering off an arbitrary [`EmitterBlock`].
//!
//! The scattering ansatz is
//!
//! ```text
//! c_j = e^{ikj} + r e^{-ikj}   (j < 0)
//! c_j = A e^{ikj} + B e^{-ikj} (0 <= j <= N)
//! c_j = t e^{ikj}              (j > N)
//! ```
//!
//! Interior sites `0 < j < N` never appear as unknowns: each plane-wave
//! branch satisfies the bulk lattice equation identically once
//! `E = omega_c - 2 xi cos k`, so only the rows at the connection sites
//! survive. The assembled system couples `(r, t, A, B)` to the `d` internal
//! mode amplitudes through the continuity conditions `1 + r = A + B` and
//! `A e^{ikN} + B e^{-ikN} = t e^{ikN}`, the lattice equations at sites 0 and
//! `N`, and one row per internal mode. It is dense, `(4 + d)`-dimensional,
//! and solved by pivoted LU; nothing iterative is involved.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{dispersion, EmitterBlock, ModelError, SystemParams};

/// Condition numbers above this are reported as near-bound-state points
/// instead of being solved through.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("near-bound-state singularity at E = {energy} (condition number {condition:e})")]
    NearBoundState { energy: f64, condition: f64 },
    #[error("block connects sites (0, {block_n}) but params set N = {params_n}")]
    SiteMismatch { block_n: usize, params_n: usize },
    #[error("merged-site solver requires N = 0, got N = {n}")]
    MergedRequiresZeroSeparation { n: usize },
}

/// Full complex solution of one scattering problem at unit incident
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    /// Reflection amplitude.
    pub r: Complex64,
    /// Transmission amplitude.
    pub t: Complex64,
    /// Interior right-mover amplitude (reported as `t` when `N = 0`).
    pub a_amp: Complex64,
    /// Interior left-mover amplitude (reported as `0` when `N = 0`).
    pub b_amp: Complex64,
    /// Internal mode amplitudes, in the block's mode order.
    pub emitter_amps: DVector<Complex64>,
    /// `| |r|^2 + |t|^2 - 1 |`.
    pub unitarity_residual: f64,
}

impl ScatteringSolution {
    /// Reflection rate `|r|^2`.
    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// Transmission rate `|t|^2`.
    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }
}

fn guard_condition(m: &DMatrix<Complex64>, energy: f64) -> Result<(), SolverError> {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(SolverError::NearBoundState { energy, condition });
    }
    Ok(())
}

fn solve_dense(
    m: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
    energy: f64,
) -> Result<DVector<Complex64>, SolverError> {
    guard_condition(&m, energy)?;
    m.lu().solve(&rhs).ok_or(SolverError::NearBoundState {
        energy,
        condition: f64::INFINITY,
    })
}

/// Scatter a unit-amplitude plane wave with wave vector `k` off `block`.
///
/// `N = 0` geometries are routed to [`solve_scattering_merged`].
pub fn solve_scattering(
    block: &EmitterBlock,
    params: &SystemParams,
    k: f64,
) -> Result<ScatteringSolution, SolverError> {
    let (_, block_n) = block.site_indices();
    if block_n != params.n {
        return Err(SolverError::SiteMismatch {
            block_n,
            params_n: params.n,
        });
    }
    if params.n == 0 {
        return solve_scattering_merged(block, params, k);
    }

    let energy = dispersion(params, k)?;
    let d = block.dim();
    let xi = Complex64::new(params.xi, 0.0);
    let e = Complex64::new(energy, 0.0);
    let omega_c = Complex64::new(params.omega_c, 0.0);
    let i = Complex64::i();
    let n = params.n as f64;
    let eik = (i * k).exp();
    let emik = (-i * k).exp();
    let eikn = (i * k * n).exp();
    let emikn = (-i * k * n).exp();

    // unknown order: r, t, A, B, m_0 .. m_{d-1}
    let dim = 4 + d;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rhs = DVector::<Complex64>::zeros(dim);

    // continuity at j = 0: 1 + r = A + B
    m[(0, 0)] = Complex64::ONE;
    m[(0, 2)] = -Complex64::ONE;
    m[(0, 3)] = -Complex64::ONE;
    rhs[0] = -Complex64::ONE;

    // continuity at j = N: A e^{ikN} + B e^{-ikN} = t e^{ikN}
    m[(1, 1)] = -eikn;
    m[(1, 2)] = eikn;
    m[(1, 3)] = emikn;

    // lattice equation at j = 0 with c_{-1} = e^{-ik} + r e^{ik} and
    // c_1 = A e^{ik} + B e^{-ik}:
    // (omega_c - E) c_0 - xi (c_{-1} + c_1) + sum_m conj(W[m][0]) m_m = 0
    m[(2, 0)] = -xi * eik;
    m[(2, 2)] = (omega_c - e) - xi * eik;
    m[(2, 3)] = (omega_c - e) - xi * emik;
    for mode in 0..d {
        m[(2, 4 + mode)] = block.coupling()[(mode, 0)].conj();
    }
    rhs[2] = xi * emik;

    // lattice equation at j = N with c_{N+1} = t e^{ik(N+1)}
    m[(3, 1)] = -xi * eikn * eik;
    m[(3, 2)] = ((omega_c - e) - xi * emik) * eikn;
    m[(3, 3)] = ((omega_c - e) - xi * eik) * emikn;
    for mode in 0..d {
        m[(3, 4 + mode)] = block.coupling()[(mode, 1)].conj();
    }

    // internal mode rows: (h - E) m + W (c_0, c_N) = 0
    for row in 0..d {
        for col in 0..d {
            m[(4 + row, 4 + col)] =
                block.h_internal()[(row, col)] - if row == col { e } else { Complex64::ZERO };
        }
        let w0 = block.coupling()[(row, 0)];
        let wn = block.coupling()[(row, 1)];
        m[(4 + row, 2)] = w0 + wn * eikn;
        m[(4 + row, 3)] = w0 + wn * emikn;
    }

    let sol = solve_dense(m, rhs, energy)?;
    let (r, t) = (sol[0], sol[1]);
    Ok(ScatteringSolution {
        r,
        t,
        a_amp: sol[2],
        b_amp: sol[3],
        emitter_amps: DVector::from_iterator(d, (0..d).map(|j| sol[4 + j])),
        unitarity_residual: (r.norm_sqr() + t.norm_sqr() - 1.0).abs(),
    })
}

/// Degenerate `N = 0` geometry: both legs of the block act on site 0, so the
/// per-mode coupling is the row sum of the coupling matrix and the ansatz
/// collapses to `c_j = e^{ikj} + r e^{-ikj}` for `j <= 0`, `t e^{ikj}` for
/// `j >= 0` with `1 + r = t`.
pub fn solve_scattering_merged(
    block: &EmitterBlock,
    params: &SystemParams,
    k: f64,
) -> Result<ScatteringSolution, SolverError> {
    let (_, block_n) = block.site_indices();
    if block_n != 0 || params.n != 0 {
        return Err(SolverError::MergedRequiresZeroSeparation {
            n: params.n.max(block_n),
        });
    }

    let energy = dispersion(params, k)?;
    let d = block.dim();
    let xi = Complex64::new(params.xi, 0.0);
    let e = Complex64::new(energy, 0.0);
    let omega_c = Complex64::new(params.omega_c, 0.0);
    let i = Complex64::i();
    let eik = (i * k).exp();
    let emik = (-i * k).exp();

    // unknown order: r, t, m_0 .. m_{d-1}
    let dim = 2 + d;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rhs = DVector::<Complex64>::zeros(dim);

    // continuity: 1 + r = t
    m[(0, 0)] = Complex64::ONE;
    m[(0, 1)] = -Complex64::ONE;
    rhs[0] = -Complex64::ONE;

    // lattice equation at j = 0 with c_{-1} = e^{-ik} + r e^{ik}, c_1 = t e^{ik}
    m[(1, 0)] = -xi * eik;
    m[(1, 1)] = (omega_c - e) - xi * eik;
    for mode in 0..d {
        let w_sum = block.coupling()[(mode, 0)] + block.coupling()[(mode, 1)];
        m[(1, 2 + mode)] = w_sum.conj();
    }
    rhs[1] = xi * emik;

    for row in 0..d {
        for col in 0..d {
            m[(2 + row, 2 + col)] =
                block.h_internal()[(row, col)] - if row == col { e } else { Complex64::ZERO };
        }
        m[(2 + row, 1)] = block.coupling()[(row, 0)] + block.coupling()[(row, 1)];
    }

    let sol = solve_dense(m, rhs, energy)?;
    let (r, t) = (sol[0], sol[1]);
    Ok(ScatteringSolution {
        r,
        t,
        a_amp: t,
        b_amp: Complex64::ZERO,
        emitter_amps: DVector::from_iterator(d, (0..d).map(|j| sol[2 + j])),
        unitarity_residual: (r.norm_sqr() + t.norm_sqr() - 1.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::reflection_analytic;
    use crate::model::{exact_emitter_block, wavevector_of_energy};
    use rand::{Rng, SeedableRng};

    fn resonant(lambda: f64, g: f64, n: usize) -> SystemParams {
        SystemParams::new(20.0, 1.0, 20.0, 20.0, lambda, g, n).unwrap()
    }

    fn random_params(rng: &mut impl Rng) -> SystemParams {
        let omega_0 = if rng.random_bool(0.5) {
            20.0
        } else {
            rng.random_range(18.0..22.0)
        };
        SystemParams::new(
            20.0,
            1.0,
            omega_0,
            20.0,
            rng.random_range(0.0..0.5),
            rng.random_range(0.0..1.0),
            rng.random_range(0..9),
        )
        .unwrap()
    }

    fn random_k(rng: &mut impl Rng) -> f64 {
        rng.random_range(0.1..3.0)
    }

    #[test]
    fn decoupled_waveguide_is_free_propagation() {
        for n in [0, 1, 4] {
            let p = resonant(0.2, 0.0, n);
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, 1.3).unwrap();
            assert!(s.r.norm() < 1e-14, "N = {n}");
            assert!((s.t.norm() - 1.0).abs() < 1e-14, "N = {n}");
        }
    }

    #[test]
    fn resonant_odd_n_transmits_completely() {
        let p = resonant(0.2, 0.5, 1);
        let b = exact_emitter_block(&p);
        let k = wavevector_of_energy(&p, 20.0).unwrap();
        let s = solve_scattering(&b, &p, k).unwrap();
        assert!(s.reflection() <= 1e-12);
    }

    #[test]
    fn solver_matches_closed_form_on_random_draws() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let p = random_params(&mut rng);
            let k = random_k(&mut rng);
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, k).unwrap();
            let r = reflection_analytic(&p, k).unwrap();
            assert!(
                (s.reflection() - r.r_rate).abs() <= 1e-10,
                "mismatch {} vs {} for {p:?} k = {k}",
                s.reflection(),
                r.r_rate
            );
            checked += 1;
        }
    }

    #[test]
    fn flux_is_conserved_on_random_draws() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        for _ in 0..1000 {
            let p = random_params(&mut rng);
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, random_k(&mut rng)).unwrap();
            assert!(s.unitarity_residual <= 1e-10, "{p:?}");
        }
    }

    #[test]
    fn continuity_holds_at_site_zero() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        for _ in 0..200 {
            let mut p = random_params(&mut rng);
            p.n = p.n.max(1);
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, random_k(&mut rng)).unwrap();
            let gap = (Complex64::ONE + s.r) - (s.a_amp + s.b_amp);
            assert!(gap.norm() <= 1e-10);
        }
    }

    #[test]
    fn merged_q_zero_reflects_fully() {
        let p = resonant(0.2, 0.5, 0);
        let b = exact_emitter_block(&p);
        let k = wavevector_of_energy(&p, 20.2).unwrap();
        let s = solve_scattering_merged(&b, &p, k).unwrap();
        assert!((s.reflection() - 1.0).abs() <= 1e-10);
        assert_eq!(s.a_amp, s.t);
        assert_eq!(s.b_amp, Complex64::ZERO);
    }

    #[test]
    fn merged_rejects_separated_sites() {
        let p = resonant(0.2, 0.5, 3);
        let b = exact_emitter_block(&p);
        assert!(matches!(
            solve_scattering_merged(&b, &p, 1.0),
            Err(SolverError::MergedRequiresZeroSeparation { n: 3 })
        ));
    }

    #[test]
    fn site_mismatch_is_rejected() {
        let p = resonant(0.2, 0.5, 3);
        let b = exact_emitter_block(&p);
        let mut other = p;
        other.n = 4;
        assert!(matches!(
            solve_scattering(&b, &other, 1.0),
            Err(SolverError::SiteMismatch {
                block_n: 3,
                params_n: 4
            })
        ));
    }

    #[test]
    fn phonon_amplitude_follows_atom_amplitude() {
        // eliminating the phonon row: v = lambda u / (E - omega_0)
        let mut rng = rand::rngs::StdRng::seed_from_u64(14);
        for _ in 0..200 {
            let p = random_params(&mut rng);
            let k = random_k(&mut rng);
            let energy = dispersion(&p, k).unwrap();
            if (energy - p.omega_0).abs() < 1e-3 || p.lambda == 0.0 {
                continue;
            }
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, k).unwrap();
            let expected = p.lambda * s.emitter_amps[0] / Complex64::new(energy - p.omega_0, 0.0);
            assert!(
                (s.emitter_amps[1] - expected).norm() <= 1e-10 * s.emitter_amps[0].norm().max(1.0)
            );
        }
    }

    #[test]
    fn transmission_magnitude_survives_mirror() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(15);
        for _ in 0..200 {
            let p = random_params(&mut rng);
            let k = random_k(&mut rng);
            let b = exact_emitter_block(&p);
            let s = solve_scattering(&b, &p, k).unwrap();
            let mirrored = solve_scattering(&b.swapped_sites(), &p, k).unwrap();
            assert!((s.t.norm() - mirrored.t.norm()).abs() <= 1e-10);
        }
    }

    #[test]
    fn complex_asymmetric_block_is_unitary_and_reciprocal() {
        // unequal legs with a relative coupling phase (synthetic flux) and a
        // complex internal exchange; the exact block never exercises these
        use crate::model::EmitterBlock;
        let c = Complex64::new;
        let p = resonant(0.2, 0.5, 3);
        let h = nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[c(20.1, 0.0), c(0.15, -0.1), c(0.15, 0.1), c(19.9, 0.0)],
        );
        let w = nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.4, 0.0),
                c(0.55, 0.0) * (Complex64::i() * 0.7).exp(),
                c(0.0, 0.1),
                c(0.2, 0.0),
            ],
        );
        let block = EmitterBlock::new(h, w, p.n).unwrap();
        for k in [0.4, 1.1, std::f64::consts::FRAC_PI_2, 2.3, 2.9] {
            let s = solve_scattering(&block, &p, k).unwrap();
            assert!(s.unitarity_residual <= 1e-10, "k = {k}");
            let gap = (Complex64::ONE + s.r) - (s.a_amp + s.b_amp);
            assert!(gap.norm() <= 1e-10, "k = {k}");
            // two-terminal unitarity forces |t| to survive the mirror even
            // with a flux-carrying block
            let mirrored = solve_scattering(&block.swapped_sites(), &p, k).unwrap();
            assert!((s.t.norm() - mirrored.t.norm()).abs() <= 1e-10, "k = {k}");
        }

        // merged geometry with the same block
        let mut p0 = p;
        p0.n = 0;
        let block0 =
            EmitterBlock::new(block.h_internal().clone(), block.coupling().clone(), 0).unwrap();
        for k in [0.7, 1.9] {
            let s = solve_scattering_merged(&block0, &p0, k).unwrap();
            assert!(s.unitarity_residual <= 1e-10, "k = {k}");
        }
    }

    #[test]
    fn decoupled_singular_point_reports_near_bound_state() {
        // g = 0 and E exactly at an internal eigenvalue: the emitter row is
        // identically zero
        let p = resonant(0.0, 0.0, 2);
        let b = exact_emitter_block(&p);
        let k = wavevector_of_energy(&p, 20.0).unwrap();
        assert!(matches!(
            solve_scattering(&b, &p, k),
            Err(SolverError::NearBoundState { .. })
        ));
    }
}
