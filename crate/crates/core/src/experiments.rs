//! Reflection spectra over the detuning axis and their quantitative
//! features: peak finding, valley/window widths and even/odd
//! connection-distance classification.
//!
//! Width conventions (printed into every report):
//! * `central_dip_fwhm` is the full width at half depth of the dip containing
//!   `Delta = 0`, with the half level set midway between the dip bottom and
//!   the lower of the two bounding local maxima.
//! * `window_width` is the contiguous span around `Delta = 0` with
//!   `R <= 0.5`, bounded by interpolated threshold crossings.
//!
//! A feature whose boundary falls off the scanned grid is reported as absent
//! rather than clamped.

use serde::Serialize;
use thiserror::Error;

use crate::model::{exact_emitter_block, wavevector_of_energy, ModelError, SystemParams};
use crate::solver::solve_scattering;
use crate::sweff::{sw_emitter_block, SwError};

/// Default reflection-rate floor above which local maxima are counted.
pub const DEFAULT_PEAK_FLOOR: f64 = 0.5;

/// Threshold defining the transmission window.
pub const WINDOW_THRESHOLD: f64 = 0.5;

/// Grid density used by [`width_scan`] and [`parity_classification`]. The
/// near-unit reflection spikes bounding the `N = 4m + 2` window are a few
/// 1e-4 xi wide at small lambda and alias away on coarser grids.
pub const WIDTH_GRID_POINTS: usize = 8001;

/// Asymmetry flag threshold for odd connection distances.
pub const ASYMMETRY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentsError {
    #[error("sweep needs at least 2 points, got {n_points}")]
    TooFewPoints { n_points: usize },
    #[error("entire range [{delta_min}, {delta_max}] maps outside the band ({lo}, {hi})")]
    RangeOutOfBand {
        delta_min: f64,
        delta_max: f64,
        lo: f64,
        hi: f64,
    },
    #[error("classification requires resonant parameters (omega_a = omega_0 = omega_c), got omega_c = {omega_c}, omega_0 = {omega_0}, omega_a = {omega_a}")]
    NotResonant {
        omega_c: f64,
        omega_0: f64,
        omega_a: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sw(#[from] SwError),
}

/// Which emitter block a spectrum was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "sw")]
    SchriefferWolff,
}

impl std::fmt::Display for BlockKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockKind::Exact => write!(f, "exact"),
            BlockKind::SchriefferWolff => write!(f, "sw"),
        }
    }
}

/// Provenance carried by every spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub params: SystemParams,
    pub block_kind: BlockKind,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_points: usize,
    pub unix_time_s: u64,
}

/// An ordered reflection spectrum over the photon-atom detuning.
///
/// `values[i]` is `NaN` exactly when `i` appears in `skipped`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub skipped: Vec<(usize, String)>,
    pub meta: SweepMeta,
}

impl Spectrum {
    /// Value at the grid point nearest `Delta = 0`.
    pub fn value_nearest_zero(&self) -> Option<f64> {
        let i = nearest_index(&self.deltas, 0.0)?;
        let v = self.values[i];
        v.is_finite().then_some(v)
    }
}

/// Extracted features of one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralFeatures {
    /// Local maxima `(Delta, R)` above the floor, parabolically refined.
    pub maxima: Vec<(f64, f64)>,
    /// Full width at half depth of the dip containing `Delta = 0`.
    pub central_dip_fwhm: Option<f64>,
    /// Contiguous span around `Delta = 0` with `R <= 0.5`.
    pub window_width: Option<f64>,
    pub n_peaks: usize,
}

/// Sweep the reflection rate over a uniform detuning grid.
///
/// Out-of-band or near-bound-state points are recorded in `skipped` (their
/// value is `NaN`); a sweep whose every point is out of band is an error.
pub fn sweep(
    params: &SystemParams,
    block_kind: BlockKind,
    delta_min: f64,
    delta_max: f64,
    n_points: usize,
) -> Result<Spectrum, ExperimentsError> {
    if n_points < 2 {
        return Err(ExperimentsError::TooFewPoints { n_points });
    }
    params.validate()?;
    let block = match block_kind {
        BlockKind::Exact => exact_emitter_block(params),
        BlockKind::SchriefferWolff => sw_emitter_block(params)?,
    };
    let step = (delta_max - delta_min) / (n_points - 1) as f64;
    let mut deltas = Vec::with_capacity(n_points);
    let mut values = Vec::with_capacity(n_points);
    let mut skipped = Vec::new();
    for i in 0..n_points {
        let delta = delta_min + step * i as f64;
        deltas.push(delta);
        let result = wavevector_of_energy(params, params.omega_a + delta)
            .map_err(|e| e.to_string())
            .and_then(|k| {
                solve_scattering(&block, params, k)
                    .map(|s| s.reflection())
                    .map_err(|e| e.to_string())
            });
        match result {
            Ok(r) => values.push(r),
            Err(reason) => {
                skipped.push((i, reason));
                values.push(f64::NAN);
            }
        }
    }
    if skipped.len() == n_points {
        let (lo, hi) = params.band();
        return Err(ExperimentsError::RangeOutOfBand {
            delta_min,
            delta_max,
            lo,
            hi,
        });
    }
    Ok(Spectrum {
        deltas,
        values,
        skipped,
        meta: SweepMeta {
            params: *params,
            block_kind,
            delta_min,
            delta_max,
            n_points,
            unix_time_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    })
}

fn nearest_index(deltas: &[f64], target: f64) -> Option<usize> {
    deltas
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - target)
                .abs()
                .partial_cmp(&(*b - target).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
}

fn finite(v: &[f64], i: usize) -> bool {
    v[i].is_finite()
}

/// Local maxima by 3-point comparison with parabolic refinement.
fn find_maxima(deltas: &[f64], values: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let n = values.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(finite(values, i - 1) && finite(values, i) && finite(values, i + 1)) {
            continue;
        }
        let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
        if y1 > y0 && y1 >= y2 && y1 > floor {
            let denom = y0 - 2.0 * y1 + y2;
            let offset = if denom != 0.0 {
                (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let h = deltas[i + 1] - deltas[i];
            out.push((deltas[i] + offset * h, y1 - 0.25 * (y0 - y2) * offset));
        }
    }
    out
}

/// Walk downhill from `start` to the bottom of the dip containing it.
fn descend_to_minimum(values: &[f64], start: usize) -> usize {
    let n = values.len();
    let mut i = start;
    loop {
        if i > 0 && finite(values, i - 1) && values[i - 1] < values[i] {
            i -= 1;
        } else if i + 1 < n && finite(values, i + 1) && values[i + 1] < values[i] {
            i += 1;
        } else {
            return i;
        }
    }
}

fn central_dip_fwhm(deltas: &[f64], values: &[f64]) -> Option<f64> {
    let start = nearest_index(deltas, 0.0)?;
    if !finite(values, start) {
        return None;
    }
    let n = values.len();
    let bottom = descend_to_minimum(values, start);
    // a bottom on the grid edge is a monotone flank, not a dip
    if bottom == 0 || bottom == n - 1 {
        return None;
    }
    let v_min = values[bottom];

    // climb to the bounding shoulders (local maxima or, failing that, the
    // grid edges - the crossings below must still be interior)
    let mut left = bottom;
    while left > 0 && finite(values, left - 1) && values[left - 1] > values[left] {
        left -= 1;
    }
    let mut right = bottom;
    while right + 1 < n && finite(values, right + 1) && values[right + 1] > values[right] {
        right += 1;
    }
    if left == bottom || right == bottom {
        return None;
    }
    let top = values[left].min(values[right]);
    let half = v_min + 0.5 * (top - v_min);
    if half <= v_min {
        return None;
    }

    let mut a = bottom;
    while a > left && values[a] < half {
        a -= 1;
    }
    let d_left = interpolate_crossing(deltas, values, a, a + 1, half);
    let mut b = bottom;
    while b < right && values[b] < half {
        b += 1;
    }
    let d_right = interpolate_crossing(deltas, values, b - 1, b, half);
    Some(d_right - d_left)
}

/// Linear interpolation of the `level` crossing between grid points `i` and `j`.
fn interpolate_crossing(deltas: &[f64], values: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let (x0, x1, y0, y1) = (deltas[i], deltas[j], values[i], values[j]);
    if y1 == y0 {
        return x0;
    }
    x0 + (level - y0) / (y1 - y0) * (x1 - x0)
}

fn window_width(deltas: &[f64], values: &[f64]) -> Option<f64> {
    let start = nearest_index(deltas, 0.0)?;
    if !finite(values, start) || values[start] > WINDOW_THRESHOLD {
        return None;
    }
    let n = values.len();
    let mut a = start;
    while a > 0 && finite(values, a - 1) && values[a - 1] <= WINDOW_THRESHOLD {
        a -= 1;
    }
    let mut b = start;
    while b + 1 < n && finite(values, b + 1) && values[b + 1] <= WINDOW_THRESHOLD {
        b += 1;
    }
    // a window that runs off the scanned grid has no measurable width
    if a == 0 || b == n - 1 || !finite(values, a - 1) || !finite(values, b + 1) {
        return None;
    }
    let d_left = interpolate_crossing(deltas, values, a - 1, a, WINDOW_THRESHOLD);
    let d_right = interpolate_crossing(deltas, values, b, b + 1, WINDOW_THRESHOLD);
    Some(d_right - d_left)
}

/// Extract maxima and central widths from a spectrum. `floor` is the minimum
/// height for a counted peak ([`DEFAULT_PEAK_FLOOR`] distinguishes genuine
/// reflection peaks from ripple).
pub fn analyze(spectrum: &Spectrum, floor: f64) -> SpectralFeatures {
    let maxima = find_maxima(&spectrum.deltas, &spectrum.values, floor);
    let n_peaks = maxima.len();
    SpectralFeatures {
        maxima,
        central_dip_fwhm: central_dip_fwhm(&spectrum.deltas, &spectrum.values),
        window_width: window_width(&spectrum.deltas, &spectrum.values),
        n_peaks,
    }
}

/// Which coupling a width scan varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VaryCoupling {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "g")]
    G,
}

impl std::fmt::Display for VaryCoupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VaryCoupling::Lambda => write!(f, "lambda"),
            VaryCoupling::G => write!(f, "g"),
        }
    }
}

/// Sweep + analyze for each coupling value, holding the other coupling at
/// `fixed`. Per-point failures are recorded, not fatal.
pub fn width_scan(
    params: &SystemParams,
    vary: VaryCoupling,
    values: &[f64],
    fixed: f64,
) -> Vec<(f64, Result<SpectralFeatures, ExperimentsError>)> {
    values
        .iter()
        .map(|&value| {
            let mut p = *params;
            match vary {
                VaryCoupling::Lambda => {
                    p.lambda = value;
                    p.g = fixed;
                }
                VaryCoupling::G => {
                    p.g = value;
                    p.lambda = fixed;
                }
            }
            let features = p
                .validate()
                .map_err(ExperimentsError::from)
                .and_then(|()| sweep(&p, BlockKind::Exact, -1.0, 1.0, WIDTH_GRID_POINTS))
                .map(|s| analyze(&s, DEFAULT_PEAK_FLOOR));
            (value, features)
        })
        .collect()
}

/// Structural class of a resonant spectrum by connection distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParityClass {
    /// Odd `N`: full transmission at resonance plus an asymmetric line shape.
    #[serde(rename = "odd-transparent")]
    OddTransparent,
    /// `N = 4m`: narrow reflection valley around resonance.
    #[serde(rename = "valley")]
    Valley,
    /// `N = 4m + 2`: wide transmission window around resonance.
    #[serde(rename = "window")]
    Window,
}

impl std::fmt::Display for ParityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParityClass::OddTransparent => write!(f, "odd-transparent"),
            ParityClass::Valley => write!(f, "valley"),
            ParityClass::Window => write!(f, "window"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityRow {
    pub n: usize,
    pub class: ParityClass,
    /// Reflection at the grid point nearest `Delta = 0`.
    pub r_at_zero: f64,
    /// Valley FWHM for `N = 4m`, window width for `N = 4m + 2`, absent for
    /// odd `N`.
    pub width: Option<f64>,
    /// `max_Delta |R(Delta) - R(-Delta)|` over the scanned grid.
    pub max_asymmetry: f64,
    /// Whether `max_asymmetry` exceeds [`ASYMMETRY_THRESHOLD`].
    pub asymmetric: bool,
}

/// Classify resonant spectra for each connection distance in `n_values`.
pub fn parity_classification(
    params_base: &SystemParams,
    n_values: &[usize],
) -> Result<Vec<ParityRow>, ExperimentsError> {
    if params_base.omega_a != params_base.omega_0 || params_base.omega_a != params_base.omega_c {
        return Err(ExperimentsError::NotResonant {
            omega_c: params_base.omega_c,
            omega_0: params_base.omega_0,
            omega_a: params_base.omega_a,
        });
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut p = *params_base;
        p.n = n;
        let s = sweep(&p, BlockKind::Exact, -1.0, 1.0, WIDTH_GRID_POINTS)?;
        let features = analyze(&s, DEFAULT_PEAK_FLOOR);
        let r_at_zero = s.value_nearest_zero().unwrap_or(f64::NAN);
        let len = s.values.len();
        let max_asymmetry = (0..len)
            .filter_map(|i| {
                let j = len - 1 - i;
                (finite(&s.values, i) && finite(&s.values, j))
                    .then(|| (s.values[i] - s.values[j]).abs())
            })
            .fold(0.0, f64::max);
        let (class, width) = if n % 2 == 1 {
            (ParityClass::OddTransparent, None)
        } else if n % 4 == 0 {
            (ParityClass::Valley, features.central_dip_fwhm)
        } else {
            (ParityClass::Window, features.window_width)
        };
        rows.push(ParityRow {
            n,
            class,
            r_at_zero,
            width,
            max_asymmetry,
            asymmetric: max_asymmetry > ASYMMETRY_THRESHOLD,
        });
    }
    Ok(rows)
}
