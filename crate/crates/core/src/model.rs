//! Parameter records, lattice dispersion and the exact emitter block.
//!
//! All frequencies and couplings are measured in units of the hopping
//! strength `xi`; `xi` itself stays a field so dimensional sweeps remain
//! possible. `hbar = 1` throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest allowed `sin k`. Below this the group velocity is numerically
/// zero and every downstream scattering formula is singular.
pub const BAND_EDGE_TOL: f64 = 1e-8;

/// Hermiticity tolerance for emitter-block internal Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("wave vector k = {k} outside the open interval (0, pi)")]
    WaveVectorOutOfDomain { k: f64 },
    #[error("energy {energy} at or outside the open band ({lo}, {hi})")]
    EnergyOutOfBand { energy: f64, lo: f64, hi: f64 },
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("internal Hamiltonian is not Hermitian: max |h - h^dag| = {deviation}")]
    NotHermitian { deviation: f64 },
    #[error("coupling matrix must be d x 2, got {rows} x {cols}")]
    BadCouplingShape { rows: usize, cols: usize },
}

/// Full parameter record of the hybrid system, in units of `xi`.
///
/// `omega_c` is the bare frequency of the waveguide resonators, `xi` the
/// nearest-neighbour hopping, `omega_0` the phonon (SAW resonator) frequency,
/// `omega_a` the atom transition frequency, `lambda` the atom-phonon coupling,
/// `g` the atom-waveguide coupling and `n` the index of the second connection
/// site (the first is always site 0; `n = 0` attaches both legs to the same
/// site).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub xi: f64,
    pub omega_0: f64,
    pub omega_a: f64,
    pub lambda: f64,
    pub g: f64,
    pub n: usize,
}

impl SystemParams {
    pub fn new(
        omega_c: f64,
        xi: f64,
        omega_0: f64,
        omega_a: f64,
        lambda: f64,
        g: f64,
        n: usize,
    ) -> Result<Self, ModelError> {
        let p = Self {
            omega_c,
            xi,
            omega_0,
            omega_a,
            lambda,
            g,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    field,
                    reason: format!("{v} is not finite"),
                })
            }
        };
        finite("omega_c", self.omega_c)?;
        finite("xi", self.xi)?;
        finite("omega_0", self.omega_0)?;
        finite("omega_a", self.omega_a)?;
        finite("lambda", self.lambda)?;
        finite("g", self.g)?;
        if self.xi <= 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "xi",
                reason: format!("hopping must be positive, got {}", self.xi),
            });
        }
        if self.lambda < 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "lambda",
                reason: format!("coupling must be >= 0, got {}", self.lambda),
            });
        }
        if self.g < 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "g",
                reason: format!("coupling must be >= 0, got {}", self.g),
            });
        }
        Ok(())
    }

    /// Band edges `omega_c -+ 2 xi` of the cosine dispersion.
    pub fn band(&self) -> (f64, f64) {
        (self.omega_c - 2.0 * self.xi, self.omega_c + 2.0 * self.xi)
    }

    /// Atom-phonon detuning `Delta_c = omega_0 - omega_a`.
    pub fn delta_c(&self) -> f64 {
        self.omega_0 - self.omega_a
    }

    /// Detunings at which `Q(Delta) = Delta (Delta + omega_a - omega_0) - lambda^2`
    /// vanishes, ordered `(minus, plus)`. At `omega_a = omega_0` these are
    /// `-+ lambda`.
    pub fn q_zero_detunings(&self) -> (f64, f64) {
        let dc = self.delta_c();
        let disc = (dc * dc + 4.0 * self.lambda * self.lambda).sqrt();
        (0.5 * (dc - disc), 0.5 * (dc + disc))
    }
}

impl Default for SystemParams {
    /// Resonant workhorse parameter set: `omega_c = omega_0 = omega_a = 20 xi`,
    /// `lambda = 0.2 xi`, `g = 0.5 xi`, connection sites 0 and 4.
    fn default() -> Self {
        Self {
            omega_c: 20.0,
            xi: 1.0,
            omega_0: 20.0,
            omega_a: 20.0,
            lambda: 0.2,
            g: 0.5,
            n: 4,
        }
    }
}

/// One scattering evaluation point: wave vector `k` with every derived
/// detuning used by the closed-form rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringPoint {
    /// Dimensionless wave vector in (0, pi).
    pub k: f64,
    /// Photon energy `omega_c - 2 xi cos k`.
    pub energy: f64,
    /// Photon-atom detuning `Delta = E - omega_a`.
    pub delta: f64,
    /// Phonon-photon detuning `Delta_k = omega_0 - E`.
    pub delta_k: f64,
    /// Atom-phonon detuning `Delta_c = omega_0 - omega_a`.
    pub delta_c: f64,
    /// `Q = Delta (Delta + omega_a - omega_0) - lambda^2`.
    pub q_value: f64,
}

/// Photon energy of the right-moving lattice mode with wave vector `k`.
pub fn dispersion(params: &SystemParams, k: f64) -> Result<f64, ModelError> {
    if !(k > 0.0 && k < std::f64::consts::PI) || k.sin() < BAND_EDGE_TOL {
        return Err(ModelError::WaveVectorOutOfDomain { k });
    }
    Ok(params.omega_c - 2.0 * params.xi * k.cos())
}

/// Unique `k` in (0, pi) with `E = omega_c - 2 xi cos k`.
pub fn wavevector_of_energy(params: &SystemParams, energy: f64) -> Result<f64, ModelError> {
    let (lo, hi) = params.band();
    let out_of_band = || ModelError::EnergyOutOfBand { energy, lo, hi };
    if !(energy > lo && energy < hi) {
        return Err(out_of_band());
    }
    let k = ((params.omega_c - energy) / (2.0 * params.xi)).acos();
    if k.sin() < BAND_EDGE_TOL {
        return Err(out_of_band());
    }
    Ok(k)
}

/// Populate every derived detuning for the point `k`.
pub fn scattering_point(params: &SystemParams, k: f64) -> Result<ScatteringPoint, ModelError> {
    let energy = dispersion(params, k)?;
    let delta = energy - params.omega_a;
    let delta_k = params.omega_0 - energy;
    let delta_c = params.delta_c();
    let q_value = delta * (delta + params.omega_a - params.omega_0) - params.lambda * params.lambda;
    Ok(ScatteringPoint {
        k,
        energy,
        delta,
        delta_k,
        delta_c,
        q_value,
    })
}

/// A finite set of local modes attached to waveguide sites 0 and `n`:
/// a `d x d` Hermitian internal Hamiltonian plus a `d x 2` matrix of
/// couplings (row = mode, column = connection site).
///
/// Row `m`, column `s` of `coupling` is the matrix element
/// `<mode m excited| H |photon on site s>`; the conjugate appears in the
/// site equations so the single-excitation Hamiltonian stays Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterBlock {
    h_internal: DMatrix<Complex64>,
    coupling: DMatrix<Complex64>,
    site_n: usize,
}

impl EmitterBlock {
    pub fn new(
        h_internal: DMatrix<Complex64>,
        coupling: DMatrix<Complex64>,
        site_n: usize,
    ) -> Result<Self, ModelError> {
        if h_internal.nrows() != h_internal.ncols() || h_internal.nrows() == 0 {
            return Err(ModelError::InvalidParameter {
                field: "h_internal",
                reason: format!(
                    "must be square and non-empty, got {} x {}",
                    h_internal.nrows(),
                    h_internal.ncols()
                ),
            });
        }
        let deviation = (&h_internal - h_internal.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > HERMITICITY_TOL {
            return Err(ModelError::NotHermitian { deviation });
        }
        if coupling.nrows() != h_internal.nrows() || coupling.ncols() != 2 {
            return Err(ModelError::BadCouplingShape {
                rows: coupling.nrows(),
                cols: coupling.ncols(),
            });
        }
        Ok(Self {
            h_internal,
            coupling,
            site_n,
        })
    }

    /// Number of internal modes.
    pub fn dim(&self) -> usize {
        self.h_internal.nrows()
    }

    pub fn h_internal(&self) -> &DMatrix<Complex64> {
        &self.h_internal
    }

    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.coupling
    }

    /// Connection sites `(0, n)`.
    pub fn site_indices(&self) -> (usize, usize) {
        (0, self.site_n)
    }

    /// The spatially mirrored block: couplings to the two connection sites
    /// exchanged. `|t|` must be invariant under this.
    pub fn swapped_sites(&self) -> Self {
        let mut coupling = self.coupling.clone();
        coupling.swap_columns(0, 1);
        Self {
            h_internal: self.h_internal.clone(),
            coupling,
            site_n: self.site_n,
        }
    }
}

/// The exact atom + phonon block: internal Hamiltonian
/// `[[omega_a, lambda], [lambda, omega_0]]`, atom coupled to both sites with
/// strength `g`, phonon not coupled to the waveguide.
pub fn exact_emitter_block(params: &SystemParams) -> EmitterBlock {
    let r = |x: f64| Complex64::new(x, 0.0);
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            r(params.omega_a),
            r(params.lambda),
            r(params.lambda),
            r(params.omega_0),
        ],
    );
    let w = DMatrix::from_row_slice(2, 2, &[r(params.g), r(params.g), r(0.0), r(0.0)]);
    EmitterBlock::new(h, w, params.n).expect("exact block is Hermitian by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn resonant(lambda: f64, g: f64, n: usize) -> SystemParams {
        SystemParams::new(20.0, 1.0, 20.0, 20.0, lambda, g, n).unwrap()
    }

    #[test]
    fn dispersion_at_band_center_and_beyond() {
        let p = resonant(0.2, 0.5, 1);
        assert_eq!(dispersion(&p, PI / 2.0).unwrap(), 20.0);
        assert!((dispersion(&p, 2.0 * PI / 3.0).unwrap() - 21.0).abs() < 1e-14);
        // band edge limit E -> omega_c - 2 xi
        let e = dispersion(&p, 1e-4).unwrap();
        assert!((e - 18.0).abs() < 1e-7);
    }

    #[test]
    fn dispersion_rejects_out_of_domain() {
        let p = resonant(0.2, 0.5, 1);
        for k in [0.0, -0.3, PI, 3.5, 1e-12] {
            assert!(matches!(
                dispersion(&p, k),
                Err(ModelError::WaveVectorOutOfDomain { .. })
            ));
        }
        let msg = dispersion(&p, 0.0).unwrap_err().to_string();
        assert!(msg.contains("(0, pi)"));
    }

    #[test]
    fn wavevector_inverts_dispersion_at_reference_points() {
        let p = resonant(0.2, 0.5, 1);
        assert!((wavevector_of_energy(&p, 20.0).unwrap() - PI / 2.0).abs() < 1e-14);
        assert!((wavevector_of_energy(&p, 21.0).unwrap() - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!(matches!(
            wavevector_of_energy(&p, 22.0),
            Err(ModelError::EnergyOutOfBand { .. })
        ));
        assert!(matches!(
            wavevector_of_energy(&p, 17.9),
            Err(ModelError::EnergyOutOfBand { .. })
        ));
    }

    #[test]
    fn dispersion_strictly_increasing_on_grid() {
        let p = resonant(0.2, 0.5, 1);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=1000 {
            let k = PI * i as f64 / 1001.0;
            let e = dispersion(&p, k).unwrap();
            assert!(e > prev, "not increasing at k = {k}");
            prev = e;
        }
    }

    #[test]
    fn scattering_point_resonant_values() {
        let p = resonant(0.2, 0.5, 1);
        let pt = scattering_point(&p, PI / 2.0).unwrap();
        assert_eq!(pt.delta, 0.0);
        assert_eq!(pt.delta_k, 0.0);
        assert!((pt.q_value + 0.04).abs() < 1e-15);

        // Q = 0 at Delta = lambda
        let k = wavevector_of_energy(&p, 20.2).unwrap();
        let pt = scattering_point(&p, k).unwrap();
        assert!(pt.q_value.abs() < 1e-15);

        let detuned = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.2, 0.5, 1).unwrap();
        let pt = scattering_point(&detuned, PI / 2.0).unwrap();
        assert_eq!(pt.delta_c, -2.0);
    }

    #[test]
    fn scattering_point_is_idempotent_under_recomputation() {
        let p = SystemParams::new(20.0, 1.0, 19.3, 20.4, 0.31, 0.7, 5).unwrap();
        let pt = scattering_point(&p, 1.234).unwrap();
        let again = scattering_point(&p, pt.k).unwrap();
        assert_eq!(pt, again);
        assert!((pt.energy - dispersion(&p, pt.k).unwrap()).abs() == 0.0);
    }

    #[test]
    fn q_zero_detunings_match_bisection_roots() {
        let q_of = |p: &SystemParams, d: f64| d * (d + p.omega_a - p.omega_0) - p.lambda * p.lambda;
        let bisect = |p: &SystemParams, mut lo: f64, mut hi: f64| {
            assert!(q_of(p, lo) * q_of(p, hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q_of(p, lo) * q_of(p, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for (omega_0, lambda) in [(20.0, 0.2), (18.5, 0.35), (21.0, 0.1)] {
            let p = SystemParams::new(20.0, 1.0, omega_0, 20.0, lambda, 0.5, 2).unwrap();
            let (minus, plus) = p.q_zero_detunings();
            assert!((bisect(&p, minus - 1.0, minus + 1e-3) - minus).abs() < 1e-10);
            assert!((bisect(&p, plus - 1e-3, plus + 1.0) - plus).abs() < 1e-10);
        }
        // resonant case: roots are exactly -+ lambda
        let p = resonant(0.2, 0.5, 0);
        let (minus, plus) = p.q_zero_detunings();
        assert!((minus + 0.2).abs() < 1e-15);
        assert!((plus - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_block_transcribes_parameters() {
        let p = resonant(0.2, 0.5, 4);
        let b = exact_emitter_block(&p);
        assert_eq!(b.dim(), 2);
        assert_eq!(b.site_indices(), (0, 4));
        assert_eq!(b.h_internal()[(0, 0)].re, 20.0);
        assert_eq!(b.h_internal()[(0, 1)].re, 0.2);
        assert_eq!(b.h_internal()[(1, 0)].re, 0.2);
        assert_eq!(b.h_internal()[(1, 1)].re, 20.0);
        assert_eq!(b.coupling()[(0, 0)].re, 0.5);
        assert_eq!(b.coupling()[(0, 1)].re, 0.5);
        assert_eq!(b.coupling()[(1, 0)].re, 0.0);
        assert_eq!(b.coupling()[(1, 1)].re, 0.0);

        let decoupled_phonon = exact_emitter_block(&resonant(0.0, 0.5, 4));
        assert_eq!(decoupled_phonon.h_internal()[(0, 1)].re, 0.0);

        let decoupled_wg = exact_emitter_block(&resonant(0.2, 0.0, 4));
        assert!(decoupled_wg.coupling().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn exact_block_is_exactly_hermitian() {
        let p = SystemParams::new(20.0, 1.0, 18.7, 20.3, 0.45, 0.9, 7).unwrap();
        let b = exact_emitter_block(&p);
        let dev = (b.h_internal() - b.h_internal().adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn params_validation_rejects_bad_values() {
        assert!(SystemParams::new(20.0, 0.0, 20.0, 20.0, 0.2, 0.5, 1).is_err());
        assert!(SystemParams::new(20.0, -1.0, 20.0, 20.0, 0.2, 0.5, 1).is_err());
        assert!(SystemParams::new(20.0, 1.0, 20.0, 20.0, -0.2, 0.5, 1).is_err());
        assert!(SystemParams::new(20.0, 1.0, 20.0, 20.0, 0.2, -0.5, 1).is_err());
        assert!(SystemParams::new(f64::NAN, 1.0, 20.0, 20.0, 0.2, 0.5, 1).is_err());
    }

    #[test]
    fn emitter_block_rejects_non_hermitian() {
        let r = |x: f64| Complex64::new(x, 0.0);
        let h = DMatrix::from_row_slice(2, 2, &[r(1.0), r(0.5), r(0.3), r(1.0)]);
        let w = DMatrix::from_row_slice(2, 2, &[r(0.1); 4]);
        assert!(matches!(
            EmitterBlock::new(h, w, 1),
            Err(ModelError::NotHermitian { .. })
        ));
    }

    #[test]
    fn wavevector_roundtrips_dispersion_on_random_draws() {
        use rand::{Rng, SeedableRng};
        let p = resonant(0.2, 0.5, 3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let k = rng.random_range(1e-6..(PI - 1e-6));
            let e = dispersion(&p, k).unwrap();
            let k2 = wavevector_of_energy(&p, e).unwrap();
            assert!((k - k2).abs() < 1e-12, "k = {k}, k2 = {k2}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        // Near the band edges the inversion is ill conditioned: E is stored
        // to ~ulp(omega_c) and acos maps that onto k with slope 1/sin k, so
        // the achievable accuracy is eps * omega_c / (2 xi sin k). Away from
        // the edges this reduces to the 1e-12 round-trip bound.
        #[test]
        fn wavevector_roundtrip_within_conditioning_bound(k in 1e-6..(PI - 1e-6)) {
            let p = resonant(0.2, 0.5, 3);
            let e = dispersion(&p, k).unwrap();
            let k2 = wavevector_of_energy(&p, e).unwrap();
            let bound = 1e-12 + 20.0 * f64::EPSILON * p.omega_c / (2.0 * p.xi * k.sin());
            prop_assert!((k - k2).abs() < bound, "k = {}, k2 = {}, bound = {}", k, k2, bound);
        }
    }
}
