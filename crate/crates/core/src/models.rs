//! Closed-form partners of the zero potential, written out entry by entry.
//!
//! These deliberately do not call into [`crate::susy`]: they serve as an
//! independent cross-check of the generic machinery and as the named figure
//! presets.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::scattering::{channel_wavenumbers, ChannelSet};
use crate::susy::{FactorizationSpec, Parametrization, Transform, U0Parametrization};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_channels(spec: &FactorizationSpec, n: usize) -> Result<()> {
    if spec.n_channels() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.n_channels(),
        });
    }
    Ok(())
}

/// Two-channel model with a full-rank growing part, fixed by
/// `U(0) = [[alpha1, beta], [beta, alpha2]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxModel2x2 {
    spec: FactorizationSpec,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
}

impl CoxModel2x2 {
    /// Rejects parameters with `(kappa1 + alpha1)(kappa2 + alpha2) - beta^2 = 0`
    /// (to `1e-10` relative), where the model degenerates to rank one.
    pub fn new(spec: FactorizationSpec, alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        require_channels(&spec, 2)?;
        if ![alpha1, alpha2, beta].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParametrization("non-finite model parameter".into()));
        }
        let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
        let cond = (k1 + alpha1) * (k2 + alpha2) - beta * beta;
        if cond.abs() <= 1e-10 * rank_condition_scale(k1, k2, alpha1, alpha2, beta) {
            return Err(Error::RankDrop);
        }
        Ok(Self {
            spec,
            alpha1,
            alpha2,
            beta,
        })
    }

    pub fn spec(&self) -> &FactorizationSpec {
        &self.spec
    }

    /// `(alpha1, alpha2, beta)`.
    pub fn parameters(&self) -> (f64, f64, f64) {
        (self.alpha1, self.alpha2, self.beta)
    }

    pub fn u0(&self) -> RMatrix {
        RMatrix::from_row_slice(2, 2, &[self.alpha1, self.beta, self.beta, self.alpha2])
    }

    pub fn det_sigma(&self, r: f64) -> f64 {
        let (k1, k2) = (self.spec.kappa()[0], self.spec.kappa()[1]);
        let (a1, a2, b) = (self.alpha1, self.alpha2, self.beta);
        let (c1, s1) = ((k1 * r).cosh(), (k1 * r).sinh());
        let (c2, s2) = ((k2 * r).cosh(), (k2 * r).sinh());
        a2 / k2 * c1 * s2 + a1 / k1 * c2 * s1 + c1 * c2 + (a1 * a2 - b * b) / (k1 * k2) * s1 * s2
    }
}

fn rank_condition_scale(k1: f64, k2: f64, a1: f64, a2: f64, b: f64) -> f64 {
    ((k1 + a1.abs()) * (k2 + a2.abs())).max(b * b)
}

/// Coefficients of `e^{(+k1+k2)r}, e^{(+k1-k2)r}, e^{(-k1+k2)r}, e^{(-k1-k2)r}`
/// in `4 det sigma`. Grouping by exponentials keeps the leading coefficient,
/// `det(kappa + U0) / (k1 k2)`, a single product; summing the hyperbolic terms
/// directly cancels badly near the rank-one edge.
fn cox_exponential_coefficients(m: &CoxModel2x2) -> [f64; 4] {
    let (k1, k2) = (m.spec.kappa()[0], m.spec.kappa()[1]);
    let (a1, a2, b) = (m.alpha1, m.alpha2, m.beta);
    let kk = k1 * k2;
    [
        ((k1 + a1) * (k2 + a2) - b * b) / kk,
        ((k1 + a1) * (k2 - a2) + b * b) / kk,
        ((k1 - a1) * (k2 + a2) + b * b) / kk,
        ((k1 - a1) * (k2 - a2) - b * b) / kk,
    ]
}

/// `u12 = beta / det sigma`, `u11` from the hyperbolic closed form and `u22`
/// by exchanging the channel labels, all scaled by `e^{-(k1+k2)r}`.
pub fn cox_superpotential(m: &CoxModel2x2, r: f64) -> Result<RMatrix> {
    let (k1, k2) = (m.spec.kappa()[0], m.spec.kappa()[1]);
    let [a, b, c, d] = cox_exponential_coefficients(m);
    let e2 = (-2.0 * k2 * r).exp();
    let e1 = (-2.0 * k1 * r).exp();
    let e12 = e1 * e2;
    let scaled_det = a + b * e2 + c * e1 + d * e12;
    if !scaled_det.is_finite() || scaled_det <= 0.0 {
        return Err(Error::SingularSigma { radius: r });
    }
    let u11 = k1 * (a + b * e2 - c * e1 - d * e12) / scaled_det;
    let u22 = k2 * (a - b * e2 + c * e1 - d * e12) / scaled_det;
    let u12 = 4.0 * m.beta * (-(k1 + k2) * r).exp() / scaled_det;
    Ok(RMatrix::from_row_slice(2, 2, &[u11, u12, u12, u22]))
}

pub fn cox_jost(m: &CoxModel2x2, energy: f64) -> CMatrix {
    let k = channel_wavenumbers(energy, m.spec.channels());
    cox_jost_k(m, k.values())
}

/// Jost matrix at arbitrary complex wave numbers.
pub fn cox_jost_k(m: &CoxModel2x2, k: &[Complex64]) -> CMatrix {
    let (k1, k2) = (m.spec.kappa()[0], m.spec.kappa()[1]);
    let d1 = k1 - I * k[0];
    let d2 = k2 - I * k[1];
    CMatrix::from_row_slice(
        2,
        2,
        &[
            (m.alpha1 - I * k[0]) / d1,
            m.beta / d1,
            m.beta / d2,
            (m.alpha2 - I * k[1]) / d2,
        ],
    )
}

/// Two-channel model whose growing part has rank one (`kappa1 > kappa2`), with
/// `q(r) = q0 e^{(kappa2 - kappa1) r}` and `x(r) = x0 e^{-2 kappa1 r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneModel2x2 {
    spec: FactorizationSpec,
    q0: f64,
    x0: f64,
}

impl RankOneModel2x2 {
    pub fn new(spec: FactorizationSpec, q0: f64, x0: f64) -> Result<Self> {
        require_channels(&spec, 2)?;
        if spec.kappa()[0] <= spec.kappa()[1] {
            return Err(Error::InvalidParametrization(
                "rank-one model needs kappa1 > kappa2".into(),
            ));
        }
        if !(q0.is_finite() && x0.is_finite()) || x0 <= -1.0 - q0 * q0 {
            return Err(Error::InvalidParametrization(format!(
                "rank-one model needs x0 > -1 - q0^2 (q0 = {q0}, x0 = {x0})"
            )));
        }
        Ok(Self { spec, q0, x0 })
    }

    /// Recovers `(q0, x0)` from `U(0) = [[alpha1, beta], [beta, alpha2]]`,
    /// which must satisfy `(kappa1 + alpha1)(kappa2 + alpha2) = beta^2` to `1e-10`.
    pub fn from_alpha_beta(spec: FactorizationSpec, alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        require_channels(&spec, 2)?;
        let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
        let cond = (k1 + alpha1) * (k2 + alpha2) - beta * beta;
        if cond.abs() > 1e-10 * rank_condition_scale(k1, k2, alpha1, alpha2, beta) {
            return Err(Error::InvalidParametrization(format!(
                "U(0) is not of rank one: (kappa1 + alpha1)(kappa2 + alpha2) - beta^2 = {cond:e}"
            )));
        }
        if alpha1 + k1 <= 0.0 {
            return Err(Error::InvalidParametrization(
                "rank-one model needs alpha1 > -kappa1".into(),
            ));
        }
        let y0 = 2.0 * k1 / (alpha1 + k1);
        let q0 = beta * y0 / (2.0 * (k1 * k2).sqrt());
        let x0 = y0 - 1.0 - q0 * q0;
        Self::new(spec, q0, x0)
    }

    pub fn spec(&self) -> &FactorizationSpec {
        &self.spec
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `(alpha1, alpha2, beta)` read off `U(0)`.
    pub fn alpha_beta(&self) -> (f64, f64, f64) {
        let u = rank1_entries(self, 0.0);
        (u[0], u[1], u[2])
    }
}

fn rank1_entries(m: &RankOneModel2x2, r: f64) -> [f64; 3] {
    let (k1, k2) = (m.spec.kappa()[0], m.spec.kappa()[1]);
    let q = if m.q0 == 0.0 { 0.0 } else { m.q0 * ((k2 - k1) * r).exp() };
    let x = if m.x0 == 0.0 { 0.0 } else { m.x0 * (-2.0 * k1 * r).exp() };
    let den = 1.0 + x + q * q;
    let a1 = (1.0 - x - q * q) / den * k1;
    let a2 = -(1.0 + x - q * q) / den * k2;
    let b = 2.0 * q * (k1 * k2).sqrt() / den;
    [a1, a2, b]
}

pub fn rank1_superpotential(m: &RankOneModel2x2, r: f64) -> RMatrix {
    let [a1, a2, b] = rank1_entries(m, r);
    RMatrix::from_row_slice(2, 2, &[a1, b, b, a2])
}

pub fn rank1_jost(m: &RankOneModel2x2, energy: f64) -> CMatrix {
    let k = channel_wavenumbers(energy, m.spec.channels());
    rank1_jost_k(m, k.values())
}

pub fn rank1_jost_k(m: &RankOneModel2x2, k: &[Complex64]) -> CMatrix {
    let (k1, k2) = (m.spec.kappa()[0], m.spec.kappa()[1]);
    let (a1, a2, b) = m.alpha_beta();
    let d1 = k1 - I * k[0];
    let d2 = k2 + I * k[1];
    CMatrix::from_row_slice(2, 2, &[(a1 - I * k[0]) / d1, b / d1, -b / d2, -(a2 - I * k[1]) / d2])
}

/// Three-channel rank-two model with `kappa1 > kappa3 > kappa2`: channels 1
/// and 2 grow, channel 3 decays, `Q0 = (q0, 0)` and `X0 = [[0, x0], [x0, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeChannelRank2Model {
    spec: FactorizationSpec,
    q0: f64,
    x0: f64,
}

impl ThreeChannelRank2Model {
    pub fn new(spec: FactorizationSpec, q0: f64, x0: f64) -> Result<Self> {
        require_channels(&spec, 3)?;
        let k = spec.kappa();
        if !(k[0] > k[2] && k[2] > k[1]) {
            return Err(Error::InvalidParametrization(
                "three-channel model needs kappa1 > kappa3 > kappa2".into(),
            ));
        }
        if !(q0.is_finite() && x0.is_finite()) || q0 * q0 <= x0 * x0 - 1.0 {
            return Err(Error::InvalidParametrization(format!(
                "three-channel model needs q0^2 > x0^2 - 1 (q0 = {q0}, x0 = {x0})"
            )));
        }
        Ok(Self { spec, q0, x0 })
    }

    pub fn spec(&self) -> &FactorizationSpec {
        &self.spec
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
}

pub fn three_channel_superpotential(m: &ThreeChannelRank2Model, r: f64) -> RMatrix {
    let k = m.spec.kappa();
    let x = if m.x0 == 0.0 { 0.0 } else { m.x0 * (-(k[0] + k[1]) * r).exp() };
    let q = if m.q0 == 0.0 { 0.0 } else { m.q0 * ((k[2] - k[0]) * r).exp() };
    let det = 1.0 + q * q - x * x;
    let inner = [
        [1.0, -x, q],
        [-x, 1.0 + q * q, -x * q],
        [q, -x * q, q * q],
    ];
    RMatrix::from_fn(3, 3, |i, j| {
        let diag = if i == j { -k[i] } else { 0.0 };
        diag + 2.0 / det * k[i].sqrt() * inner[i][j] * k[j].sqrt()
    })
}

/// Jost matrix `[U(inf) - ik]^{-1}[U(0) - ik]` with `U(inf) = diag(kappa1, kappa2, -kappa3)`.
pub fn three_channel_jost(m: &ThreeChannelRank2Model, energy: f64) -> CMatrix {
    let wave = channel_wavenumbers(energy, m.spec.channels());
    let k = wave.values();
    let u0 = three_channel_superpotential(m, 0.0);
    let kappa = m.spec.kappa();
    let u_inf = [kappa[0], kappa[1], -kappa[2]];
    CMatrix::from_fn(3, 3, |i, j| {
        let diag = if i == j { I * k[i] } else { Complex64::new(0.0, 0.0) };
        (u0[(i, j)] - diag) / (u_inf[i] - I * k[i])
    })
}

/// Root in `(2, 3)` of `(sqrt(10 + x^2) - 2)(x - 2) = 0.36`: the value of
/// `kappa2` at which the figure parametrization drops to rank one.
pub fn rank_one_kappa2() -> f64 {
    let f = |x: f64| ((10.0 + x * x).sqrt() - 2.0) * (x - 2.0) - 0.36;
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig1,
    Fig2,
    Fig3,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [PresetName::Fig1, PresetName::Fig2, PresetName::Fig3];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig1 => "fig1",
            PresetName::Fig2 => "fig2",
            PresetName::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(PresetName::Fig1),
            "fig2" => Ok(PresetName::Fig2),
            "fig3" => Ok(PresetName::Fig3),
            other => Err(Error::InvalidParametrization(format!(
                "unknown preset {other:?} (expected fig1, fig2 or fig3)"
            ))),
        }
    }
}

/// The closed-form model behind a preset.
#[derive(Debug, Clone, PartialEq)]
pub enum FigureModel {
    Cox(CoxModel2x2),
    RankOne(RankOneModel2x2),
}

impl FigureModel {
    pub fn superpotential(&self, r: f64) -> Result<RMatrix> {
        match self {
            FigureModel::Cox(m) => cox_superpotential(m, r),
            FigureModel::RankOne(m) => Ok(rank1_superpotential(m, r)),
        }
    }

    pub fn jost(&self, energy: f64) -> CMatrix {
        match self {
            FigureModel::Cox(m) => cox_jost(m, energy),
            FigureModel::RankOne(m) => rank1_jost(m, energy),
        }
    }
}

/// Thresholds `(10, 0)`, `U(0) = [[-2, 0.6], [0.6, -2]]` and a preset `kappa2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigurePreset {
    pub name: PresetName,
    pub spec: FactorizationSpec,
    pub u0: RMatrix,
    /// Default radial range of the tables, not taken from any source figure.
    pub r_range: (f64, f64),
    /// Default energy range of the tables, not taken from any source figure.
    pub e_range: (f64, f64),
}

pub const PRESET_THRESHOLDS: [f64; 2] = [10.0, 0.0];
pub const PRESET_U0: [f64; 4] = [-2.0, 0.6, 0.6, -2.0];

impl FigurePreset {
    pub fn new(name: PresetName) -> Self {
        let kappa2 = match name {
            PresetName::Fig1 => 3.0,
            PresetName::Fig2 => 2.2,
            PresetName::Fig3 => rank_one_kappa2(),
        };
        let kappa1 = (PRESET_THRESHOLDS[0] + kappa2 * kappa2).sqrt();
        let channels = ChannelSet::new(PRESET_THRESHOLDS.to_vec()).expect("distinct thresholds");
        let spec = FactorizationSpec::from_kappa(channels, vec![kappa1, kappa2]).expect("consistent kappa");
        Self {
            name,
            spec,
            u0: RMatrix::from_row_slice(2, 2, &PRESET_U0),
            r_range: (0.0, 8.0),
            e_range: (0.0, 20.0),
        }
    }

    pub fn kappa2(&self) -> f64 {
        self.spec.kappa()[1]
    }

    pub fn u0_parametrization(&self) -> U0Parametrization {
        U0Parametrization::new(self.u0.clone(), &self.spec).expect("symmetric preset U(0)")
    }

    pub fn transform(&self) -> Result<Transform> {
        Transform::new(self.spec.clone(), Parametrization::U0(self.u0_parametrization()))
    }

    pub fn model(&self) -> Result<FigureModel> {
        let (a1, a2, b) = (self.u0[(0, 0)], self.u0[(1, 1)], self.u0[(0, 1)]);
        match self.name {
            PresetName::Fig1 | PresetName::Fig2 => {
                Ok(FigureModel::Cox(CoxModel2x2::new(self.spec.clone(), a1, a2, b)?))
            }
            PresetName::Fig3 => Ok(FigureModel::RankOne(RankOneModel2x2::from_alpha_beta(
                self.spec.clone(),
                a1,
                a2,
                b,
            )?)),
        }
    }
}
