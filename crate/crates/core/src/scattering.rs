//! Multichannel scattering primitives: channel kinematics, matrix Wronskians,
//! the S-matrix built from a Jost matrix, and the two-channel eigenphase
//! (Blatt–Biedenharn) decomposition.
//!
//! Channel-space matrices act on the left index as the channel of the wave
//! function. Wave numbers live on the physical sheet, `Im k_i >= 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry_c, complex_diag, condition_estimate, max_abs_c, CMatrix};

/// Default tolerance for unitarity and symmetry checks on S.
pub const DEFAULT_S_TOLERANCE: f64 = 1e-8;

/// Relative determinant threshold below which a Jost matrix is treated as singular.
pub const SINGULAR_JOST_TOLERANCE: f64 = 1e-12;

/// The set of coupled channels and their (pairwise distinct) thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    thresholds: Vec<f64>,
    permutation: Vec<usize>,
}

impl ChannelSet {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        let n = thresholds.len();
        Self::with_permutation(thresholds, (0..n).collect())
    }

    /// `permutation[i]` is the original index of channel `i`, recording a
    /// reordering applied by the caller.
    pub fn with_permutation(thresholds: Vec<f64>, permutation: Vec<usize>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidChannels("at least one channel is required".into()));
        }
        if let Some(t) = thresholds.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidChannels(format!("threshold {t} is not finite")));
        }
        for i in 0..thresholds.len() {
            for j in i + 1..thresholds.len() {
                if thresholds[i] == thresholds[j] {
                    return Err(Error::InvalidChannels(format!(
                        "thresholds of channels {} and {} coincide ({})",
                        i + 1,
                        j + 1,
                        thresholds[i]
                    )));
                }
            }
        }
        if !crate::linalg::is_permutation(&permutation, thresholds.len()) {
            return Err(Error::InvalidChannels(format!(
                "{permutation:?} is not a permutation of the channel indices"
            )));
        }
        Ok(Self {
            thresholds,
            permutation,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn max_threshold(&self) -> f64 {
        self.thresholds.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_threshold(&self) -> f64 {
        self.thresholds.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Open means strictly above threshold; a channel exactly at threshold is closed.
    pub fn open_mask(&self, energy: f64) -> Vec<bool> {
        self.thresholds.iter().map(|&d| energy > d).collect()
    }
}

/// Channel wave numbers `k_i` with `k_i^2 = E - Delta_i` and `Im k_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveNumbers {
    values: Vec<Complex64>,
    energy: f64,
}

impl WaveNumbers {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn diag(&self) -> CMatrix {
        complex_diag(&self.values)
    }

    /// `-k`, used for `F(-k)`. Leaves the physical sheet for closed channels.
    pub fn negated(&self) -> Vec<Complex64> {
        self.values.iter().map(|k| -k).collect()
    }

    /// `-k*`, the reflection entering the symmetry `F(k) = F*(-k*)`.
    pub fn reflected(&self) -> Vec<Complex64> {
        self.values.iter().map(|k| -k.conj()).collect()
    }
}

pub fn channel_wavenumbers(energy: f64, channels: &ChannelSet) -> WaveNumbers {
    let values = channels
        .thresholds()
        .iter()
        .map(|&d| {
            let e = energy - d;
            if e >= 0.0 {
                Complex64::new(e.sqrt(), 0.0)
            } else {
                Complex64::new(0.0, (-e).sqrt())
            }
        })
        .collect();
    WaveNumbers { values, energy }
}

/// Value and radial derivative of a matrix-valued solution at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSample {
    pub value: CMatrix,
    pub derivative: CMatrix,
}

impl SolutionSample {
    pub fn new(value: CMatrix, derivative: CMatrix) -> Self {
        Self { value, derivative }
    }
}

/// Matrix Wronskian `W[a, b] = a^T b' - (a')^T b` (plain transpose, no conjugation).
pub fn wronskian(a: &SolutionSample, b: &SolutionSample) -> Result<CMatrix> {
    let n = a.value.nrows();
    for m in [&a.value, &a.derivative, &b.value, &b.derivative] {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    if a.value.ncols() != a.derivative.ncols() || b.value.ncols() != b.derivative.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.value.ncols(),
            got: a.derivative.ncols(),
        });
    }
    Ok(a.value.transpose() * &b.derivative - a.derivative.transpose() * &b.value)
}

/// S-matrix at one energy, restricted to the open channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixPoint {
    pub energy: f64,
    pub s: CMatrix,
    pub open_mask: Vec<bool>,
}

impl SMatrixPoint {
    pub fn n_open(&self) -> usize {
        self.open_mask.iter().filter(|&&o| o).count()
    }

    pub fn open_indices(&self) -> Vec<usize> {
        self.open_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
            .collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.s)
    }

    pub fn symmetry_defect(&self) -> f64 {
        asymmetry_c(&self.s)
    }
}

/// `max |S S^H - I|`.
pub fn unitarity_defect(s: &CMatrix) -> f64 {
    let n = s.nrows();
    max_abs_c(&(s * s.adjoint() - CMatrix::identity(n, n)))
}

/// `S = k^{-1/2} F(-k) F(k)^{-1} k^{1/2}` restricted to the open channels.
///
/// `k^{1/2}` is the principal root. The restriction is taken before the
/// `k^{±1/2}` scaling so that a channel sitting exactly at threshold never
/// divides by zero.
pub fn s_matrix_from_jost(
    f_plus: &CMatrix,
    f_minus: &CMatrix,
    k: &WaveNumbers,
    channels: &ChannelSet,
) -> Result<SMatrixPoint> {
    let n = k.len();
    for m in [f_plus, f_minus] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    let scale = max_abs_c(f_plus).max(f64::MIN_POSITIVE);
    let det = f_plus.determinant();
    let inverse = f_plus.clone().try_inverse();
    if det.norm() < SINGULAR_JOST_TOLERANCE * scale.powi(n as i32) || inverse.is_none() {
        return Err(Error::SingularJost {
            energy: k.energy(),
            condition: condition_estimate(f_plus),
        });
    }
    let ratio = f_minus * inverse.unwrap();

    let open_mask = channels.open_mask(k.energy());
    let open: Vec<usize> = open_mask
        .iter()
        .enumerate()
        .filter_map(|(i, &o)| o.then_some(i))
        .collect();
    let roots: Vec<Complex64> = k.values().iter().map(|v| v.sqrt()).collect();
    let s = CMatrix::from_fn(open.len(), open.len(), |a, b| {
        let (i, j) = (open[a], open[b]);
        ratio[(i, j)] * roots[j] / roots[i]
    });
    Ok(SMatrixPoint {
        energy: k.energy(),
        s,
        open_mask,
    })
}

/// Two-channel eigenphase representation
/// `S = R(eps)^T diag(e^{2i delta1}, e^{2i delta2}) R(eps)` with
/// `R(eps) = [[cos eps, -sin eps], [sin eps, cos eps]]`. The angle is only defined modulo
/// pi; [`swapped`](Self::swapped) gives the other label order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenphases {
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
}

impl Eigenphases {
    /// The same decomposition with the eigenphase labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            delta1: self.delta2,
            delta2: self.delta1,
            epsilon: wrap_half_open(self.epsilon + FRAC_PI_2, PI),
        }
    }

    pub fn recompose(&self) -> CMatrix {
        let (s, c) = self.epsilon.sin_cos();
        let r = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ],
        );
        let d = complex_diag(&[
            Complex64::from_polar(1.0, 2.0 * self.delta1),
            Complex64::from_polar(1.0, 2.0 * self.delta2),
        ]);
        r.transpose() * d * r
    }
}

/// Maps `x` into `(-period/2, period/2]`.
fn wrap_half_open(x: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    let mut y = (x + half).rem_euclid(period) - half;
    if y <= -half {
        y += period;
    }
    y
}

/// Eigenphase decomposition of a symmetric unitary 2x2 S-matrix.
///
/// Returns `delta1, delta2` in `(-pi/2, pi/2]` and `epsilon` in `(-pi/2, pi/2]`.
/// The real and imaginary parts of S commute and share the eigenvectors
/// `R(eps)`; the angle is read from whichever part is further from a multiple
/// of the identity.
pub fn eigenphases_2ch(s: &SMatrixPoint, tolerance: f64) -> Result<Eigenphases> {
    if s.s.nrows() != 2 || s.s.ncols() != 2 {
        return Err(Error::NotTwoChannel(s.s.nrows()));
    }
    let defect = unitarity_defect(&s.s);
    if defect > tolerance {
        return Err(Error::NotUnitary { defect });
    }
    let defect = s.symmetry_defect();
    if defect > tolerance {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(decompose_2x2(&s.s))
}

fn decompose_2x2(s: &CMatrix) -> Eigenphases {
    let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    let diff = s[(0, 0)] - s[(1, 1)];
    // R^T D R has S11 - S22 = cos(2 eps)(d1 - d2), 2 S12 = -sin(2 eps)(d1 - d2).
    let re = (-2.0 * off.re, diff.re);
    let im = (-2.0 * off.im, diff.im);
    let pick = if re.0.hypot(re.1) >= im.0.hypot(im.1) {
        re
    } else {
        im
    };
    let epsilon = if pick.0 == 0.0 && pick.1 == 0.0 {
        0.0
    } else {
        wrap_half_open(0.5 * pick.0.atan2(pick.1), PI)
    };
    let (sn, c) = epsilon.sin_cos();
    // D = R S R^T
    let d1 = c * c * s[(0, 0)] - c * sn * (s[(0, 1)] + s[(1, 0)]) + sn * sn * s[(1, 1)];
    let d2 = sn * sn * s[(0, 0)] + c * sn * (s[(0, 1)] + s[(1, 0)]) + c * c * s[(1, 1)];
    Eigenphases {
        delta1: wrap_half_open(0.5 * d1.arg(), PI),
        delta2: wrap_half_open(0.5 * d2.arg(), PI),
        epsilon,
    }
}

/// One row of a continuity-unwrapped eigenphase table for two channels.
///
/// With a single open channel its phase is reported as `delta2` and
/// `delta1`/`epsilon` are absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenphaseRow {
    pub energy: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub open_channels: usize,
}

fn nearest_shift(value: f64, target: f64, period: f64) -> f64 {
    value + period * ((target - value) / period).round()
}

/// Largest label step (radians) [`track_eigenphases`] accepts without refining.
pub const MAX_TRACKING_STEP: f64 = 0.2;
/// Bisection depth limit of [`track_eigenphases`] per grid interval.
pub const MAX_TRACKING_DEPTH: usize = 40;

/// Continuity state between consecutive energies.
#[derive(Debug, Clone, Copy, Default)]
struct Tracker {
    /// Phase and index of the only open channel.
    single: Option<(f64, usize)>,
    pair: Option<Eigenphases>,
}

impl Tracker {
    /// Row at `p`, the state after it and the size of the label step taken.
    fn advance(&self, p: &SMatrixPoint, tolerance: f64) -> Result<(EigenphaseRow, Tracker, f64)> {
        let row = |delta1, delta2, epsilon, open_channels| EigenphaseRow {
            energy: p.energy,
            delta1,
            delta2,
            epsilon,
            open_channels,
        };
        match p.n_open() {
            0 => Ok((row(None, None, None, 0), Tracker::default(), 0.0)),
            1 => {
                let raw = wrap_half_open(0.5 * p.s[(0, 0)].arg(), PI);
                let (delta, step) = match self.single {
                    Some((prev, _)) => {
                        let d = nearest_shift(raw, prev, PI);
                        (d, (d - prev).abs())
                    }
                    None => (raw, 0.0),
                };
                let next = Tracker {
                    single: Some((delta, p.open_indices()[0])),
                    pair: None,
                };
                Ok((row(None, Some(delta), None, 1), next, step))
            }
            2 => {
                let raw = eigenphases_2ch(p, tolerance)?;
                let (chosen, step) = match (self.pair, self.single) {
                    (Some(prev), _) => continue_pair(raw, prev),
                    (None, Some((single, channel))) => enter_pair(raw, single, channel),
                    (None, None) => (if raw.epsilon.abs() <= PI / 4.0 { raw } else { raw.swapped() }, 0.0),
                };
                let next = Tracker {
                    single: None,
                    pair: Some(chosen),
                };
                Ok((row(Some(chosen.delta1), Some(chosen.delta2), Some(chosen.epsilon), 2), next, step))
            }
            n => Err(Error::NotTwoChannel(n)),
        }
    }
}

/// Turns per-energy S-matrices of a two-channel problem (sorted by energy)
/// into continuous eigenphase curves.
///
/// Each eigenphase is shifted by multiples of pi to minimise the jump from the
/// previous grid point; labels are exchanged (with `epsilon -> epsilon + pi/2`)
/// when that gives a smaller total jump, which follows crossing eigenvalue
/// trajectories. On entering the two-open-channel region, `delta2` is the
/// eigenphase whose eigenvector lies closest to the channel that was already
/// open. Labels are only as good as the grid; see [`track_eigenphases`].
pub fn unwrap_eigenphases(points: &[SMatrixPoint], tolerance: f64) -> Result<Vec<EigenphaseRow>> {
    let mut state = Tracker::default();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let (row, next, _) = state.advance(p, tolerance)?;
        rows.push(row);
        state = next;
    }
    Ok(rows)
}

/// Like [`unwrap_eigenphases`], but evaluates `s_at` at extra energies
/// wherever a label step exceeds [`MAX_TRACKING_STEP`], so the labels do not
/// depend on the spacing of `energies`. Just above a threshold the mixing
/// angle moves like a fractional power of `E - Delta`; bisection resolves it.
/// Rows are returned for `energies` only.
pub fn track_eigenphases<F>(s_at: F, energies: &[f64], tolerance: f64) -> Result<Vec<EigenphaseRow>>
where
    F: Fn(f64) -> Result<SMatrixPoint>,
{
    let mut state = Tracker::default();
    let mut rows = Vec::with_capacity(energies.len());
    let mut previous: Option<f64> = None;
    for &e in energies {
        let p = s_at(e)?;
        let row = match previous {
            Some(e0) => refine(&s_at, &mut state, e0, &p, tolerance, MAX_TRACKING_DEPTH)?,
            None => {
                let (row, next, _) = state.advance(&p, tolerance)?;
                state = next;
                row
            }
        };
        rows.push(row);
        previous = Some(e);
    }
    Ok(rows)
}

/// Advances `state` from energy `e0` to `p`, inserting midpoints while the step is too large.
fn refine<F>(
    s_at: &F,
    state: &mut Tracker,
    e0: f64,
    p: &SMatrixPoint,
    tolerance: f64,
    depth: usize,
) -> Result<EigenphaseRow>
where
    F: Fn(f64) -> Result<SMatrixPoint>,
{
    let (row, next, step) = state.advance(p, tolerance)?;
    if step <= MAX_TRACKING_STEP || depth == 0 {
        *state = next;
        return Ok(row);
    }
    let mid = 0.5 * (e0 + p.energy);
    refine(s_at, state, e0, &s_at(mid)?, tolerance, depth - 1)?;
    refine(s_at, state, mid, p, tolerance, depth - 1)
}

/// Best relabelling of `raw` next to `prev` and the largest single jump it implies.
fn continue_pair(raw: Eigenphases, prev: Eigenphases) -> (Eigenphases, f64) {
    let candidates = [raw, raw.swapped()].map(|c| Eigenphases {
        delta1: nearest_shift(c.delta1, prev.delta1, PI),
        delta2: nearest_shift(c.delta2, prev.delta2, PI),
        epsilon: nearest_shift(c.epsilon, prev.epsilon, PI),
    });
    let jumps = |c: &Eigenphases| {
        [
            (c.delta1 - prev.delta1).abs(),
            (c.delta2 - prev.delta2).abs(),
            (c.epsilon - prev.epsilon).abs(),
        ]
    };
    let cost = |c: &Eigenphases| jumps(c).iter().sum::<f64>();
    let chosen = if cost(&candidates[1]) < cost(&candidates[0]) {
        candidates[1]
    } else {
        candidates[0]
    };
    (chosen, jumps(&chosen).into_iter().fold(0.0, f64::max))
}

/// `delta2` continues the single-channel phase and its eigenvector
/// `(sin eps, cos eps)` is the one closer to the channel open below threshold.
/// The step is the misalignment angle or the phase jump, whichever is larger.
fn enter_pair(raw: Eigenphases, single: f64, channel: usize) -> (Eigenphases, f64) {
    let alignment = |c: &Eigenphases| {
        let (s, c) = c.epsilon.sin_cos();
        if channel == 0 { s.abs() } else { c.abs() }
    };
    let chosen = if alignment(&raw.swapped()) > alignment(&raw) {
        raw.swapped()
    } else {
        raw
    };
    let chosen = Eigenphases {
        delta2: nearest_shift(chosen.delta2, single, PI),
        ..chosen
    };
    let misalignment = alignment(&chosen).min(1.0).acos();
    (chosen, misalignment.max((chosen.delta2 - single).abs()))
}

/// `max |F(k) - F*(-k*)|`, plus `max |Im F(k)|` when E lies below every threshold.
pub fn jost_symmetry_check<F>(jost: F, energy: f64, channels: &ChannelSet) -> f64
where
    F: Fn(&[Complex64]) -> CMatrix,
{
    let k = channel_wavenumbers(energy, channels);
    let at_k = jost(k.values());
    let at_reflected = jost(&k.reflected()).map(|z| z.conj());
    let mut defect = max_abs_c(&(&at_k - at_reflected));
    if energy < channels.min_threshold() {
        defect = defect.max(at_k.iter().fold(0.0, |acc, z| acc.max(z.im.abs())));
    }
    defect
}
