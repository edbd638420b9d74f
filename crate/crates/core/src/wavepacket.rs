//! Time-domain oracle: Gaussian single-photon wavepacket propagation on a
//! finite chain, measuring reflected and transmitted probability.
//!
//! The state is evolved under the full single-excitation Hamiltonian with the
//! Crank-Nicolson (implicit midpoint) step
//! `(1 + i dt H / 2) psi' = (1 - i dt H / 2) psi`, a Cayley transform that is
//! unitary for Hermitian `H` up to linear-solve roundoff. The chain part of
//! `1 + i dt H / 2` is tridiagonal and the emitter couples to at most two
//! sites, so each step costs one Thomas solve plus a d-dimensional Schur
//! complement - no dense linear algebra in the time loop.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::experiments::Spectrum;
use crate::model::{wavevector_of_energy, EmitterBlock, ModelError, SystemParams};

/// Interior + emitter population that arms the stop detector.
const ARM_POPULATION: f64 = 1e-4;
/// Interior + emitter population below which an armed run stops.
const STOP_POPULATION: f64 = 1e-6;
/// Population allowed within `absorb_guard` sites of a chain end.
const GUARD_POPULATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavepacketError {
    #[error("wavepacket configuration: {0}")]
    Config(String),
    #[error("inconclusive run: packet reached the absorb guard at t = {time}")]
    Inconclusive { time: f64 },
    #[error("spectrum covers k in [{available_lo}, {available_hi}] but the packet needs [{required_lo}, {required_hi}]")]
    SupportNotCovered {
        required_lo: f64,
        required_hi: f64,
        available_lo: f64,
        available_hi: f64,
    },
    #[error("spectrum has a skipped point inside the packet support at index {index}")]
    SkippedInSupport { index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Configuration of one propagation run. Distances are in lattice sites,
/// times in `1/xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavepacketConfig {
    /// Total number of chain sites (>= 500), spanning `[-L/2, L/2)`.
    pub chain_length: usize,
    /// Carrier wave vector in (0, pi).
    pub k0: f64,
    /// Spatial width (>= 10 sites, so the packet is narrow in k).
    pub sigma_x: f64,
    /// Launch center, fully left of site 0 (`x0 + 4 sigma_x < 0`).
    pub x0: i64,
    pub time_step: f64,
    pub max_time: f64,
    /// Minimum distance the packet must keep from the chain ends.
    pub absorb_guard: usize,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        Self {
            chain_length: 4000,
            k0: std::f64::consts::FRAC_PI_2,
            sigma_x: 40.0,
            x0: -220,
            time_step: 0.05,
            max_time: 3000.0,
            absorb_guard: 50,
        }
    }
}

impl WavepacketConfig {
    fn validate(&self, n: usize) -> Result<(), WavepacketError> {
        let err = |msg: String| Err(WavepacketError::Config(msg));
        if self.chain_length < 500 {
            return err(format!(
                "chain_length must be >= 500, got {}",
                self.chain_length
            ));
        }
        if self.sigma_x < 10.0 || self.sigma_x.is_nan() {
            return err(format!("sigma_x must be >= 10 sites, got {}", self.sigma_x));
        }
        if !(self.k0 > 0.0 && self.k0 < std::f64::consts::PI && self.k0.sin() >= 1e-8) {
            return err(format!(
                "k0 = {} outside the open interval (0, pi)",
                self.k0
            ));
        }
        if (self.x0 as f64) + 4.0 * self.sigma_x >= 0.0 {
            return err(format!(
                "packet must start fully left of site 0: x0 + 4 sigma_x = {}",
                self.x0 as f64 + 4.0 * self.sigma_x
            ));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return err(format!(
                "time_step must be positive, got {}",
                self.time_step
            ));
        }
        if self.max_time <= 0.0 || self.max_time.is_nan() {
            return err(format!("max_time must be positive, got {}", self.max_time));
        }
        let offset = (self.chain_length / 2) as i64;
        let left_margin = self.x0 - (4.0 * self.sigma_x) as i64;
        if left_margin <= -offset + self.absorb_guard as i64 {
            return err(format!(
                "packet tail at site {left_margin} overlaps the left guard zone"
            ));
        }
        let right_needed = n as i64 + self.absorb_guard as i64;
        if right_needed >= self.chain_length as i64 - offset {
            return err(format!(
                "chain too short: second connection site {n} plus guard does not fit"
            ));
        }
        Ok(())
    }
}

/// Result of one propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavepacketOutcome {
    /// Probability left of site 0 at stop time.
    pub r_wp: f64,
    /// Probability right of site `N` at stop time.
    pub t_wp: f64,
    /// Residual population on the emitter and the interior sites.
    pub leak: f64,
    /// Physical time reached.
    pub elapsed: f64,
    pub steps: usize,
    /// Maximum `| ||psi|| - 1 |` observed over the run.
    pub norm_drift: f64,
    /// `| <H>(end) - <H>(0) |`.
    pub energy_drift: f64,
}

/// Per-frame site probabilities for the optional snapshot dump.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFrame {
    pub time: f64,
    /// Leftmost chain site (sites run `first_site ..= first_site + L - 1`).
    pub first_site: i64,
    pub site_probabilities: Vec<f64>,
}

struct Propagator {
    theta: f64,
    // Thomas factorization of T = 1 + i theta H_chain (constant tridiagonal)
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    offdiag: Complex64,
    // H_chain coefficients
    omega_c: f64,
    xi: f64,
    // emitter block data: (mode, chain index, coupling)
    h: DMatrix<Complex64>,
    entries: Vec<(usize, usize, Complex64)>,
    // Y = T^{-1} Wsel^H, one column per mode
    y_cols: Vec<Vec<Complex64>>,
    // LU of the Schur complement S = 1 + i theta h + theta^2 Wsel Y
    schur: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Propagator {
    fn new(block: &EmitterBlock, params: &SystemParams, dt: f64, len: usize, offset: i64) -> Self {
        let d = block.dim();
        let theta = 0.5 * dt;
        let i_theta = Complex64::new(0.0, theta);

        let mut entries = Vec::new();
        let (_, site_n) = block.site_indices();
        for mode in 0..d {
            for (leg, site) in [(0usize, 0i64), (1, site_n as i64)] {
                let w = block.coupling()[(mode, leg)];
                entries.push((mode, (site + offset) as usize, w));
            }
        }

        // Thomas factorization of the constant tridiagonal T
        let a = Complex64::ONE + i_theta * params.omega_c;
        let offdiag = -i_theta * params.xi;
        let mut sub = vec![Complex64::ZERO; len];
        let mut diag = vec![Complex64::ZERO; len];
        diag[0] = a;
        for i in 1..len {
            sub[i] = offdiag / diag[i - 1];
            diag[i] = a - sub[i] * offdiag;
        }

        let mut prop = Self {
            theta,
            sub,
            diag,
            offdiag,
            omega_c: params.omega_c,
            xi: params.xi,
            h: block.h_internal().clone(),
            entries,
            y_cols: Vec::new(),
            schur: DMatrix::identity(d, d).lu(),
        };

        // Y columns: T^{-1} (conj coupling at the connection rows)
        let mut y_cols = vec![vec![Complex64::ZERO; len]; d];
        for (mode, idx, w) in &prop.entries {
            y_cols[*mode][*idx] += w.conj();
        }
        for col in &mut y_cols {
            prop.solve_tridiag(col);
        }

        let mut s = DMatrix::<Complex64>::identity(d, d) + &prop.h * i_theta;
        for (mode, idx, w) in &prop.entries {
            for other in 0..d {
                s[(*mode, other)] += theta * theta * w * y_cols[other][*idx];
            }
        }
        prop.y_cols = y_cols;
        prop.schur = s.lu();
        prop
    }

    fn solve_tridiag(&self, rhs: &mut [Complex64]) {
        let len = rhs.len();
        for i in 1..len {
            let carry = self.sub[i] * rhs[i - 1];
            rhs[i] -= carry;
        }
        rhs[len - 1] /= self.diag[len - 1];
        for i in (0..len - 1).rev() {
            rhs[i] = (rhs[i] - self.offdiag * rhs[i + 1]) / self.diag[i];
        }
    }

    /// `out = H psi` for the full single-excitation Hamiltonian.
    fn apply_h(
        &self,
        m: &DVector<Complex64>,
        c: &[Complex64],
        out_m: &mut DVector<Complex64>,
        out_c: &mut [Complex64],
    ) {
        let len = c.len();
        for i in 0..len {
            let mut v = Complex64::new(self.omega_c, 0.0) * c[i];
            if i > 0 {
                v -= self.xi * c[i - 1];
            }
            if i + 1 < len {
                v -= self.xi * c[i + 1];
            }
            out_c[i] = v;
        }
        *out_m = &self.h * m;
        for (mode, idx, w) in &self.entries {
            out_m[*mode] += w * c[*idx];
            out_c[*idx] += w.conj() * m[*mode];
        }
    }

    /// One Crank-Nicolson step, in place.
    fn step(
        &self,
        m: &mut DVector<Complex64>,
        c: &mut [Complex64],
        hm: &mut DVector<Complex64>,
        hc: &mut [Complex64],
    ) {
        let i_theta = Complex64::new(0.0, self.theta);
        self.apply_h(m, c, hm, hc);
        // b = psi - i theta H psi
        let b_m = &*m - &*hm * i_theta;
        for (ci, hi) in c.iter_mut().zip(hc.iter()) {
            *ci -= i_theta * hi;
        }
        self.solve_tridiag(c); // c now holds z = T^{-1} b_c
        let mut rhs_m = b_m;
        for (mode, idx, w) in &self.entries {
            rhs_m[*mode] -= i_theta * w * c[*idx];
        }
        let m_new = self
            .schur
            .solve(&rhs_m)
            .expect("Schur complement is nonsingular");
        for (col, amp) in self.y_cols.iter().zip(m_new.iter()) {
            let scale = i_theta * amp;
            for (ci, yi) in c.iter_mut().zip(col.iter()) {
                *ci -= scale * yi;
            }
        }
        *m = m_new;
    }
}

fn energy_expectation(prop: &Propagator, m: &DVector<Complex64>, c: &[Complex64]) -> f64 {
    let mut hm = DVector::zeros(m.len());
    let mut hc = vec![Complex64::ZERO; c.len()];
    prop.apply_h(m, c, &mut hm, &mut hc);
    let mut e = Complex64::ZERO;
    for (a, b) in m.iter().zip(hm.iter()) {
        e += a.conj() * b;
    }
    for (a, b) in c.iter().zip(hc.iter()) {
        e += a.conj() * b;
    }
    e.re
}

/// Propagate a Gaussian packet through the scattering region and measure the
/// reflected/transmitted probability split.
pub fn propagate(
    block: &EmitterBlock,
    params: &SystemParams,
    cfg: &WavepacketConfig,
) -> Result<WavepacketOutcome, WavepacketError> {
    propagate_impl(block, params, cfg, 0).map(|(outcome, _)| outcome)
}

/// Same as [`propagate`] but also records site probabilities every
/// `snapshot_stride` steps (the initial and final frames are always
/// included).
pub fn propagate_with_snapshots(
    block: &EmitterBlock,
    params: &SystemParams,
    cfg: &WavepacketConfig,
    snapshot_stride: usize,
) -> Result<(WavepacketOutcome, Vec<SnapshotFrame>), WavepacketError> {
    propagate_impl(block, params, cfg, snapshot_stride.max(1))
}

fn propagate_impl(
    block: &EmitterBlock,
    params: &SystemParams,
    cfg: &WavepacketConfig,
    snapshot_stride: usize,
) -> Result<(WavepacketOutcome, Vec<SnapshotFrame>), WavepacketError> {
    let (_, site_n) = block.site_indices();
    cfg.validate(site_n)?;
    let len = cfg.chain_length;
    let offset = (len / 2) as i64;
    let d = block.dim();
    let prop = Propagator::new(block, params, cfg.time_step, len, offset);

    // Gaussian packet, carrier k0, fully left of site 0
    let mut c = vec![Complex64::ZERO; len];
    for (idx, ci) in c.iter_mut().enumerate() {
        let j = idx as i64 - offset;
        let arg = ((j - cfg.x0) as f64).powi(2) / (4.0 * cfg.sigma_x * cfg.sigma_x);
        if arg < 700.0 {
            *ci = Complex64::from_polar((-arg).exp(), cfg.k0 * j as f64);
        }
    }
    let mut m = DVector::<Complex64>::zeros(d);
    let norm0 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Err(WavepacketError::Config(
            "initial packet has zero norm".into(),
        ));
    }
    for ci in &mut c {
        *ci /= norm0;
    }

    let idx_zero = offset as usize;
    let idx_n = (site_n as i64 + offset) as usize;
    let guard = cfg.absorb_guard.min(len / 2);
    let populations = |m: &DVector<Complex64>, c: &[Complex64]| {
        let mut left = 0.0;
        let mut right = 0.0;
        let mut inner = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut guard_pop = 0.0;
        for (idx, z) in c.iter().enumerate() {
            let p = z.norm_sqr();
            if idx < idx_zero {
                left += p;
            } else if idx > idx_n {
                right += p;
            } else {
                inner += p;
            }
            if idx < guard || idx >= len - guard {
                guard_pop += p;
            }
        }
        (left, right, inner, guard_pop)
    };

    let energy_start = energy_expectation(&prop, &m, &c);
    let max_steps = (cfg.max_time / cfg.time_step).ceil() as usize;
    let mut hm = DVector::zeros(d);
    let mut hc = vec![Complex64::ZERO; len];
    let mut frames = Vec::new();
    let snapshot = |time: f64, c: &[Complex64], frames: &mut Vec<SnapshotFrame>| {
        if snapshot_stride > 0 {
            frames.push(SnapshotFrame {
                time,
                first_site: -offset,
                site_probabilities: c.iter().map(|z| z.norm_sqr()).collect(),
            });
        }
    };
    snapshot(0.0, &c, &mut frames);

    let mut armed = false;
    let mut norm_drift: f64 = 0.0;
    let mut steps = 0;
    let mut time = 0.0;
    while steps < max_steps {
        prop.step(&mut m, &mut c, &mut hm, &mut hc);
        steps += 1;
        time = steps as f64 * cfg.time_step;
        if snapshot_stride > 0 && steps % snapshot_stride == 0 {
            snapshot(time, &c, &mut frames);
        }

        let norm = (m.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sqrt();
        norm_drift = norm_drift.max((norm - 1.0).abs());

        let (_, _, inner, guard_pop) = populations(&m, &c);
        if guard_pop > GUARD_POPULATION {
            return Err(WavepacketError::Inconclusive { time });
        }
        if !armed && inner > ARM_POPULATION {
            armed = true;
        }
        if armed && inner < STOP_POPULATION {
            break;
        }
    }

    if snapshot_stride > 0 && steps % snapshot_stride != 0 {
        snapshot(time, &c, &mut frames);
    }
    let (left, right, inner, _) = populations(&m, &c);
    let energy_drift = (energy_expectation(&prop, &m, &c) - energy_start).abs();
    Ok((
        WavepacketOutcome {
            r_wp: left,
            t_wp: right,
            leak: inner,
            elapsed: time,
            steps,
            norm_drift,
            energy_drift,
        },
        frames,
    ))
}

/// Bandwidth-averaged reflection prediction `integral |phi(k)|^2 R(k) dk`
/// for the packet of `cfg`, evaluated on the momentum support of `r_curve`.
///
/// The packet `exp(-(x - x0)^2 / (4 sigma_x^2)) e^{i k0 x}` has
/// `|phi(k)|^2 ~ exp(-2 sigma_x^2 (k - k0)^2)`; the curve must cover
/// `k0 -+ 4 / sigma_x` (eight intensity standard deviations).
pub fn momentum_filter_estimate(
    cfg: &WavepacketConfig,
    r_curve: &Spectrum,
) -> Result<f64, WavepacketError> {
    let params: &SystemParams = &r_curve.meta.params;
    let half_support = 4.0 / cfg.sigma_x;
    let (required_lo, required_hi) = (cfg.k0 - half_support, cfg.k0 + half_support);

    let mut ks = Vec::with_capacity(r_curve.deltas.len());
    for (i, &delta) in r_curve.deltas.iter().enumerate() {
        match wavevector_of_energy(params, params.omega_a + delta) {
            Ok(k) => ks.push(Some((k, r_curve.values[i], i))),
            Err(_) => ks.push(None),
        }
    }
    let in_band: Vec<(f64, f64, usize)> = ks.into_iter().flatten().collect();
    let available_lo = in_band.first().map(|p| p.0).unwrap_or(f64::NAN);
    let available_hi = in_band.last().map(|p| p.0).unwrap_or(f64::NAN);
    if !(available_lo <= required_lo && available_hi >= required_hi) {
        return Err(WavepacketError::SupportNotCovered {
            required_lo,
            required_hi,
            available_lo,
            available_hi,
        });
    }

    let weight = |k: f64| (-2.0 * cfg.sigma_x * cfg.sigma_x * (k - cfg.k0).powi(2)).exp();
    let mut num = 0.0;
    let mut den = 0.0;
    for pair in in_band.windows(2) {
        let (k_a, r_a, i_a) = pair[0];
        let (k_b, r_b, i_b) = pair[1];
        if k_a > required_hi || k_b < required_lo {
            continue;
        }
        if !r_a.is_finite() {
            return Err(WavepacketError::SkippedInSupport { index: i_a });
        }
        if !r_b.is_finite() {
            return Err(WavepacketError::SkippedInSupport { index: i_b });
        }
        let (w_a, w_b) = (weight(k_a), weight(k_b));
        let h = k_b - k_a;
        num += 0.5 * h * (w_a * r_a + w_b * r_b);
        den += 0.5 * h * (w_a + w_b);
    }
    Ok(num / den)
}
