//! Closed-form single-photon reflection rate and its special-case identities.
//!
//! The rate is evaluated as a literal transcription of
//!
//! ```text
//! R = 4 g^4 Dk^2 cos^4(kN/2)
//!     / [ 4 g^4 Dk^2 cos^2(kN/2) + xi^2 Q^2 sin^2 k + 2 xi g^2 Q Dk sin k sin kN ]
//! ```
//!
//! with the three denominator terms computed separately and summed, so the
//! implementation can be audited term by term. The boundary-matching solver
//! reproduces this rate to machine precision; the solver-equivalence test is
//! the arbiter for the cross-term sign convention.

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    scattering_point, wavevector_of_energy, ModelError, ScatteringPoint, SystemParams,
};

/// Denominators below this are treated as exact 0/0 points rather than
/// divided through. Only reachable at `lambda = 0` with exact triple
/// resonance.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// Agreement required between the full formula and the reduced `Q = 0`
/// identity `R = cos^2(kN/2)`.
pub const Q_ZERO_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("indeterminate point (denominator {denominator:e} at k = {k}); evaluate as a limit")]
    Degenerate { k: f64, denominator: f64 },
    #[error("Q = 0 identity violated: full formula {full}, reduced cos^2(kN/2) {reduced}")]
    QZeroIdentityMismatch { full: f64, reduced: f64 },
}

/// A reflection rate `R = |r|^2` together with the point it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionValue {
    pub r_rate: f64,
    pub point: ScatteringPoint,
}

/// Which root of `Q(Delta) = 0` to evaluate at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichRoot {
    Minus,
    Plus,
}

fn eq7_terms(params: &SystemParams, pt: &ScatteringPoint) -> (f64, f64) {
    let g2 = params.g * params.g;
    let g4 = g2 * g2;
    let xi = params.xi;
    let n = pt.k * params.n as f64;
    let cos_half = (0.5 * n).cos();
    let cos2 = cos_half * cos_half;
    let sin_k = pt.k.sin();

    let numerator = 4.0 * g4 * pt.delta_k * pt.delta_k * cos2 * cos2;
    let term_resonant = 4.0 * g4 * pt.delta_k * pt.delta_k * cos2;
    let term_background = xi * xi * pt.q_value * pt.q_value * sin_k * sin_k;
    let term_cross = 2.0 * xi * g2 * pt.q_value * pt.delta_k * sin_k * n.sin();
    (numerator, term_resonant + term_background + term_cross)
}

/// Closed-form reflection rate at wave vector `k`.
pub fn reflection_analytic(
    params: &SystemParams,
    k: f64,
) -> Result<ReflectionValue, AnalyticError> {
    let point = scattering_point(params, k)?;
    let (numerator, denominator) = eq7_terms(params, &point);
    if denominator.abs() < DEGENERATE_DENOMINATOR {
        return Err(AnalyticError::Degenerate { k, denominator });
    }
    Ok(ReflectionValue {
        r_rate: numerator / denominator,
        point,
    })
}

/// Reflection rate at a root of `Q`, evaluated both through the full formula
/// and through the reduced identity `R = cos^2(kN/2)`; the two routes must
/// agree to [`Q_ZERO_IDENTITY_TOL`].
pub fn reflection_at_q_zero(
    params: &SystemParams,
    which_root: WhichRoot,
) -> Result<ReflectionValue, AnalyticError> {
    let (minus, plus) = params.q_zero_detunings();
    let delta = match which_root {
        WhichRoot::Minus => minus,
        WhichRoot::Plus => plus,
    };
    let energy = params.omega_a + delta;
    let k = wavevector_of_energy(params, energy)?;
    let full = reflection_analytic(params, k)?;
    let cos_half = (0.5 * k * params.n as f64).cos();
    let reduced = cos_half * cos_half;
    if (full.r_rate - reduced).abs() > Q_ZERO_IDENTITY_TOL {
        return Err(AnalyticError::QZeroIdentityMismatch {
            full: full.r_rate,
            reduced,
        });
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn resonant(lambda: f64, g: f64, n: usize) -> SystemParams {
        SystemParams::new(20.0, 1.0, 20.0, 20.0, lambda, g, n).unwrap()
    }

    fn r_of_delta(p: &SystemParams, delta: f64) -> f64 {
        let k = wavevector_of_energy(p, p.omega_a + delta).unwrap();
        reflection_analytic(p, k).unwrap().r_rate
    }

    #[test]
    fn full_transmission_on_resonance_for_odd_n() {
        // phonon-induced transparency: Delta_k = 0 kills the numerator while
        // lambda keeps the denominator finite
        let p = resonant(0.2, 0.5, 1);
        assert!(r_of_delta(&p, 0.0) <= 1e-30);
    }

    #[test]
    fn decoupled_waveguide_reflects_nothing() {
        let p = resonant(0.2, 0.0, 3);
        assert_eq!(r_of_delta(&p, 0.37), 0.0);
    }

    #[test]
    fn no_phonon_limit_recovers_half_reflection() {
        let p = resonant(0.0, 0.5, 1);
        assert!((r_of_delta(&p, 1e-3) - 0.5).abs() < 2e-3);
    }

    #[test]
    fn q_zero_with_merged_sites_reflects_fully() {
        let p = resonant(0.2, 0.5, 0);
        assert!((r_of_delta(&p, 0.2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_zero_identity_reference_values() {
        let p0 = resonant(0.2, 0.5, 0);
        assert!((reflection_at_q_zero(&p0, WhichRoot::Plus).unwrap().r_rate - 1.0).abs() < 1e-12);

        // N = 2: R = cos^2 k at k = arccos(-lambda / 2 xi), i.e. (lambda/2)^2
        let p2 = resonant(0.2, 0.5, 2);
        let r = reflection_at_q_zero(&p2, WhichRoot::Plus).unwrap();
        assert!((r.r_rate - 0.01).abs() < 1e-12);

        // both routes agree for the minus root as well
        let p1 = resonant(0.2, 0.5, 1);
        let r = reflection_at_q_zero(&p1, WhichRoot::Minus).unwrap();
        let k = wavevector_of_energy(&p1, 19.8).unwrap();
        assert!((r.r_rate - (0.5 * k).cos().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn q_zero_root_out_of_band_is_reported() {
        // Delta_plus = 2.56 > 2 xi: out of band
        let p = SystemParams::new(20.0, 1.0, 22.5, 20.0, 0.4, 0.5, 2).unwrap();
        assert!(matches!(
            reflection_at_q_zero(&p, WhichRoot::Plus),
            Err(AnalyticError::Model(ModelError::EnergyOutOfBand { .. }))
        ));
    }

    #[test]
    fn degenerate_point_is_flagged_not_nan() {
        // lambda = 0 and exact triple resonance: numerator and denominator both 0
        let p = resonant(0.0, 0.5, 1);
        match reflection_analytic(&p, PI / 2.0) {
            Err(AnalyticError::Degenerate { .. }) => {}
            other => panic!("expected degenerate point, got {other:?}"),
        }
    }

    #[test]
    fn resonance_zero_requires_nonzero_lambda() {
        for n in [1, 2, 4, 5] {
            let p = resonant(0.2, 0.5, n);
            assert_eq!(r_of_delta(&p, 0.0), 0.0, "N = {n}");
        }
    }

    #[test]
    fn odd_n_spectrum_is_asymmetric() {
        let p = resonant(0.2, 0.5, 1);
        let mut max_asym: f64 = 0.0;
        for i in 1..200 {
            let d = i as f64 * 0.005;
            max_asym = max_asym.max((r_of_delta(&p, d) - r_of_delta(&p, -d)).abs());
        }
        assert!(max_asym > 0.05, "max asymmetry {max_asym}");
    }

    #[test]
    fn kn_at_odd_pi_multiple_gives_zero() {
        // N = 4, k = pi/4: cos^4(kN/2) = 0 while Q != 0
        let p = resonant(0.2, 0.5, 4);
        let r = reflection_analytic(&p, PI / 4.0).unwrap();
        assert!(r.r_rate < 1e-30);
    }

    #[test]
    fn rate_is_a_probability_over_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        for _ in 0..100_000 {
            let p = SystemParams::new(
                20.0,
                1.0,
                rng.random_range(18.5..21.5),
                20.0,
                rng.random_range(0.0..0.5),
                rng.random_range(0.0..1.0),
                rng.random_range(0..9),
            )
            .unwrap();
            let k = rng.random_range(0.05..3.0);
            match reflection_analytic(&p, k) {
                Ok(r) => assert!(
                    (-0.0..=1.0 + 1e-12).contains(&r.r_rate),
                    "R = {} at k = {k} for {p:?}",
                    r.r_rate
                ),
                Err(AnalyticError::Degenerate { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    proptest! {
        #[test]
        fn rate_is_a_probability(
            g in 0.0..1.0f64,
            lambda in 0.0..0.5f64,
            n in 0usize..9,
            omega_0 in 18.5..21.5f64,
            k in 0.05..3.0f64,
        ) {
            let p = SystemParams::new(20.0, 1.0, omega_0, 20.0, lambda, g, n).unwrap();
            match reflection_analytic(&p, k) {
                Ok(r) => {
                    prop_assert!(r.r_rate >= 0.0);
                    prop_assert!(r.r_rate <= 1.0 + 1e-12);
                }
                Err(AnalyticError::Degenerate { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }
    }
}
