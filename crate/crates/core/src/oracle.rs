//! Direct integration of the coupled radial equation, used to check the
//! closed-form Jost and S matrices without relying on them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix, RMatrix};
use crate::scattering::{channel_wavenumbers, s_matrix_from_jost, ChannelSet, SMatrixPoint, WaveNumbers};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest amplification `e^{2 kappa r_max}` of a closed channel accepted by
/// [`extract_jost`].
pub const MAX_MATCH_CONDITION: f64 = 1e12;

/// Norm beyond which [`integrate_regular`] declares the step unstable.
const OVERFLOW_GUARD: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMethod {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Fixed-step RK4 at `h` and `h/2` combined as `(16 y_{h/2} - y_h) / 15`,
    /// which cancels the `h^4` term of the global error.
    Rk4Richardson,
}

impl IntegrationMethod {
    /// Potential samples needed per step of size `h`.
    fn samples_per_step(self) -> usize {
        match self {
            IntegrationMethod::Rk4 => 2,
            IntegrationMethod::Rk4Richardson => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub r_max: f64,
    /// Requested step; the actual step is `r_max / ceil(r_max / step)`.
    pub step: f64,
    pub method: IntegrationMethod,
    /// Bound on `max|V(r_max)|` for the free-wave match to be meaningful.
    pub match_tolerance: f64,
}

impl IntegrationConfig {
    /// Defaults to [`IntegrationMethod::Rk4Richardson`].
    pub fn new(r_max: f64, step: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::PreconditionViolated(format!("r_max {r_max} must be positive")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::PreconditionViolated(format!("step {step} must be positive")));
        }
        Ok(Self {
            r_max,
            step,
            method: IntegrationMethod::Rk4Richardson,
            match_tolerance: 1e-12,
        })
    }

    /// Step `min(1/(20 kappa_max), 1/(20 sqrt(E)))`.
    pub fn default_step(kappa_max: f64, energy: f64) -> f64 {
        let mut step = 1.0 / (20.0 * kappa_max);
        if energy > 0.0 {
            step = step.min(1.0 / (20.0 * energy.sqrt()));
        }
        step
    }

    pub fn with_default_step(r_max: f64, kappa_max: f64, energy: f64) -> Result<Self> {
        Self::new(r_max, Self::default_step(kappa_max, energy))
    }

    pub fn with_method(mut self, method: IntegrationMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_match_tolerance(mut self, tol: f64) -> Self {
        self.match_tolerance = tol;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.r_max / self.step).ceil().max(1.0) as usize
    }

    pub fn actual_step(&self) -> f64 {
        self.r_max / self.n_steps() as f64
    }

    /// Checks `r_max >= 10 / kappa_min`.
    pub fn validate_for(&self, kappa_min: f64) -> Result<()> {
        if self.r_max < 10.0 / kappa_min {
            return Err(Error::PreconditionViolated(format!(
                "r_max {} is below 10 / kappa_min = {}",
                self.r_max,
                10.0 / kappa_min
            )));
        }
        Ok(())
    }
}

/// Potential sampled on the grid an integration needs, reusable across
/// energies.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    spacing: f64,
    n_steps: usize,
    method: IntegrationMethod,
    samples: Vec<RMatrix>,
}

impl PotentialTable {
    pub fn new<P>(potential: P, cfg: &IntegrationConfig) -> Result<Self>
    where
        P: Fn(f64) -> Result<RMatrix>,
    {
        let n = cfg.n_steps();
        let per_step = cfg.method.samples_per_step();
        let spacing = cfg.actual_step() / per_step as f64;
        let last = n * per_step;
        let samples = (0..=last)
            .map(|j| {
                let r = if j == last { cfg.r_max } else { spacing * j as f64 };
                let v = potential(r)?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::PreconditionViolated(format!("potential not finite at r = {r}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = max_abs(samples.last().expect("non-empty table"));
        if tail >= cfg.match_tolerance {
            return Err(Error::PreconditionViolated(format!(
                "potential at r_max = {} is {tail:e}, above the match tolerance {:e}",
                cfg.r_max, cfg.match_tolerance
            )));
        }
        Ok(Self {
            spacing,
            n_steps: n,
            method: cfg.method,
            samples,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.spacing * self.method.samples_per_step() as f64
    }

    pub fn method(&self) -> IntegrationMethod {
        self.method
    }

    pub fn r_max(&self) -> f64 {
        self.spacing * (self.samples.len() - 1) as f64
    }
}

/// Regular solution at one radius, with the energy it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularSolutionTrace {
    pub energy: f64,
    pub radius: f64,
    pub phi: CMatrix,
    pub phi_prime: CMatrix,
}

impl PotentialTable {
    /// Table index of `r`, which must be a point of the coarsest step grid.
    fn step_index(&self, r: f64) -> Result<usize> {
        let per_step = self.method.samples_per_step();
        let steps = r / self.step();
        let rounded = steps.round();
        if !(0.0..=self.n_steps as f64).contains(&rounded) || (steps - rounded).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::PreconditionViolated(format!(
                "radius {r} is not on the integration grid (step {})",
                self.step()
            )));
        }
        Ok(rounded as usize * per_step)
    }
}

/// Integrates `phi'' = (V - k^2) phi` from `phi(0) = 0`, `phi'(0) = I` to
/// `r_max` with `k_i^2 = E - Delta_i`.
pub fn integrate_regular(table: &PotentialTable, channels: &ChannelSet, energy: f64) -> Result<RegularSolutionTrace> {
    integrate_regular_to(table, channels, energy, table.r_max())
}

/// Same as [`integrate_regular`] but stops at `radius`, a point of the step grid.
pub fn integrate_regular_to(
    table: &PotentialTable,
    channels: &ChannelSet,
    energy: f64,
    radius: f64,
) -> Result<RegularSolutionTrace> {
    let end = table.step_index(radius)?;
    let n = table.n_channels();
    let (y, p) = sweep(
        table,
        channels,
        energy,
        0,
        end,
        (RMatrix::zeros(n, n), RMatrix::identity(n, n)),
        &mut |_, _, _| {},
    )?;
    Ok(RegularSolutionTrace {
        energy,
        radius: table.radius_of(end),
        phi: y.map(|x| Complex64::new(x, 0.0)),
        phi_prime: p.map(|x| Complex64::new(x, 0.0)),
    })
}

/// Plain RK4 run of the regular solution on the finest grid of the table,
/// calling `visit(r, phi, phi')` at every point.
pub fn integrate_regular_traced<F>(table: &PotentialTable, channels: &ChannelSet, energy: f64, mut visit: F) -> Result<()>
where
    F: FnMut(f64, &RMatrix, &RMatrix),
{
    check_channels(table, channels)?;
    let n = table.n_channels();
    let last = table.samples.len() - 1;
    rk4_pass(
        table,
        channels,
        energy,
        0,
        last,
        1,
        (RMatrix::zeros(n, n), RMatrix::identity(n, n)),
        &mut visit,
    )?;
    Ok(())
}

/// Jost solution `f(k, r)` and its derivative at `radius`, integrated inwards
/// from `f(k, r_max) = diag(e^{i k r_max})`. Real and imaginary parts are
/// carried as two real solutions, so `E` must be real.
pub fn integrate_jost_solution(
    table: &PotentialTable,
    channels: &ChannelSet,
    energy: f64,
    radius: f64,
) -> Result<(CMatrix, CMatrix)> {
    let end = table.step_index(radius)?;
    let start = table.samples.len() - 1;
    let k = channel_wavenumbers(energy, channels);
    let r_max = table.r_max();
    let wave: Vec<Complex64> = k.values().iter().map(|ki| (I * ki * r_max).exp()).collect();
    let slope: Vec<Complex64> = k.values().iter().zip(&wave).map(|(ki, w)| I * ki * w).collect();
    let part = |values: &[Complex64], take: fn(&Complex64) -> f64| {
        crate::linalg::real_diag(&values.iter().map(take).collect::<Vec<_>>())
    };
    let re = sweep(
        table,
        channels,
        energy,
        start,
        end,
        (part(&wave, |z| z.re), part(&slope, |z| z.re)),
        &mut |_, _, _| {},
    )?;
    let im = sweep(
        table,
        channels,
        energy,
        start,
        end,
        (part(&wave, |z| z.im), part(&slope, |z| z.im)),
        &mut |_, _, _| {},
    )?;
    let join = |a: &RMatrix, b: &RMatrix| a.zip_map(b, Complex64::new);
    Ok((join(&re.0, &im.0), join(&re.1, &im.1)))
}

fn check_channels(table: &PotentialTable, channels: &ChannelSet) -> Result<()> {
    if channels.n_channels() != table.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: table.n_channels(),
            got: channels.n_channels(),
        });
    }
    Ok(())
}

/// Integrates from table index `from` to `to` (either direction) with the
/// table's method.
fn sweep<F>(
    table: &PotentialTable,
    channels: &ChannelSet,
    energy: f64,
    from: usize,
    to: usize,
    initial: (RMatrix, RMatrix),
    visit: &mut F,
) -> Result<(RMatrix, RMatrix)>
where
    F: FnMut(f64, &RMatrix, &RMatrix),
{
    check_channels(table, channels)?;
    match table.method {
        IntegrationMethod::Rk4 => rk4_pass(table, channels, energy, from, to, 1, initial, visit),
        IntegrationMethod::Rk4Richardson => {
            let (yc, pc) = rk4_pass(table, channels, energy, from, to, 2, initial.clone(), &mut |_, _, _| {})?;
            let (yf, pf) = rk4_pass(table, channels, energy, from, to, 1, initial, visit)?;
            Ok(((16.0 * yf - yc) / 15.0, (16.0 * pf - pc) / 15.0))
        }
    }
}

impl PotentialTable {
    fn radius_of(&self, index: usize) -> f64 {
        if index == self.samples.len() - 1 {
            self.r_max()
        } else {
            self.spacing * index as f64
        }
    }
}

/// One RK4 sweep between table indices whose half step spans `stride` samples.
#[allow(clippy::too_many_arguments)]
fn rk4_pass<F>(
    table: &PotentialTable,
    channels: &ChannelSet,
    energy: f64,
    from: usize,
    to: usize,
    stride: usize,
    initial: (RMatrix, RMatrix),
    visit: &mut F,
) -> Result<(RMatrix, RMatrix)>
where
    F: FnMut(f64, &RMatrix, &RMatrix),
{
    // effective coupling W(r) = V(r) + Delta - E
    let shift: Vec<f64> = channels.thresholds().iter().map(|d| d - energy).collect();
    let coupling = |j: usize| {
        let mut w = table.samples[j].clone();
        for (i, s) in shift.iter().enumerate() {
            w[(i, i)] += s;
        }
        w
    };
    let forward = to >= from;
    let span = if forward { to - from } else { from - to };
    let steps = span / (2 * stride);
    let index = |offset: usize| if forward { from + offset } else { from - offset };
    let sign = if forward { 1.0 } else { -1.0 };
    let h = sign * 2.0 * stride as f64 * table.spacing;
    let (mut y, mut p) = initial;
    visit(table.radius_of(from), &y, &p);
    let mut w0 = coupling(from);
    for step in 0..steps {
        let wm = coupling(index((2 * step + 1) * stride));
        let i1 = index((2 * step + 2) * stride);
        let w1 = coupling(i1);
        let k1y = p.clone();
        let k1p = &w0 * &y;
        let y2 = &y + 0.5 * h * &k1y;
        let p2 = &p + 0.5 * h * &k1p;
        let k2y = p2.clone();
        let k2p = &wm * &y2;
        let y3 = &y + 0.5 * h * &k2y;
        let p3 = &p + 0.5 * h * &k2p;
        let k3y = p3.clone();
        let k3p = &wm * &y3;
        let y4 = &y + h * &k3y;
        let p4 = &p + h * &k3p;
        let k4y = p4;
        let k4p = &w1 * &y4;
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        let r = table.radius_of(i1);
        let norm = max_abs(&y).max(max_abs(&p));
        if !norm.is_finite() || norm > OVERFLOW_GUARD {
            return Err(Error::StepUnstable { radius: r, norm });
        }
        visit(r, &y, &p);
        w0 = w1;
    }
    Ok((y, p))
}

/// `F(k)` and `F(-k)` read off the regular solution by matching each row to
/// `a e^{ikr} + b e^{-ikr}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JostExtraction {
    pub k: WaveNumbers,
    pub plus: CMatrix,
    pub minus: CMatrix,
    /// Largest closed-channel amplification `e^{2 kappa r}` (1 when all are open).
    pub condition: f64,
}

impl JostExtraction {
    pub fn s_matrix(&self, channels: &ChannelSet) -> Result<SMatrixPoint> {
        s_matrix_from_jost(&self.plus, &self.minus, &self.k, channels)
    }
}

/// Row `i` of `phi` at large `r` equals
/// `[e^{ik_i r} F(-k)_i - e^{-ik_i r} F(k)_i] / (2 i k_i)`.
pub fn extract_jost(trace: &RegularSolutionTrace, channels: &ChannelSet) -> Result<JostExtraction> {
    let k = channel_wavenumbers(trace.energy, channels);
    let r = trace.radius;
    let condition = k
        .values()
        .iter()
        .map(|ki| (2.0 * ki.im * r).exp())
        .fold(1.0, f64::max);
    if condition > MAX_MATCH_CONDITION {
        return Err(Error::IllConditionedMatch { condition });
    }
    if k.values().iter().any(|ki| ki.norm() == 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "energy {} sits exactly on a threshold",
            trace.energy
        )));
    }
    let n = k.len();
    let mut plus = CMatrix::zeros(n, n);
    let mut minus = CMatrix::zeros(n, n);
    for i in 0..n {
        let ki = k.values()[i];
        let out = (I * ki * r).exp();
        let inc = (-I * ki * r).exp();
        for j in 0..n {
            let (phi, dphi) = (trace.phi[(i, j)], trace.phi_prime[(i, j)]);
            let b = out * (I * ki * phi - dphi) / (2.0 * I * ki);
            let a = inc * (I * ki * phi + dphi) / (2.0 * I * ki);
            plus[(i, j)] = -2.0 * I * ki * b;
            minus[(i, j)] = 2.0 * I * ki * a;
        }
    }
    Ok(JostExtraction {
        k,
        plus,
        minus,
        condition,
    })
}

/// Integrates and matches in one go.
pub fn oracle_jost(table: &PotentialTable, channels: &ChannelSet, energy: f64) -> Result<JostExtraction> {
    let trace = integrate_regular(table, channels, energy)?;
    extract_jost(&trace, channels)
}

/// Bound-state energies in `[e_min, e_max]` (below every threshold) from sign
/// changes of the real `det F(E)` on an `n_grid` grid, refined by bisection to
/// `1e-10`. Sign changes through poles are discarded.
pub fn bound_state_scan<F>(jost: F, channels: &ChannelSet, e_min: f64, e_max: f64, n_grid: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> CMatrix,
{
    if e_max >= channels.min_threshold() {
        return Err(Error::PreconditionViolated(format!(
            "bound-state scan must stay below every threshold (e_max = {e_max}, min threshold = {})",
            channels.min_threshold()
        )));
    }
    if e_min.is_nan() || e_max.is_nan() || e_min >= e_max || n_grid < 2 {
        return Err(Error::PreconditionViolated(
            "bound-state scan needs e_min < e_max and at least two grid points".into(),
        ));
    }
    let det = |e: f64| jost(e).determinant().re;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| e_min + (e_max - e_min) * i as f64 / (n_grid - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&e| det(e)).collect();
    let mut roots = Vec::new();
    for w in 0..n_grid - 1 {
        let (mut lo, mut hi) = (grid[w], grid[w + 1]);
        let (d_lo, d_hi) = (values[w], values[w + 1]);
        if d_lo == 0.0 {
            roots.push(lo);
            continue;
        }
        if d_lo.signum() == d_hi.signum() || d_hi == 0.0 {
            continue;
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if det(mid).signum() == d_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        if det(root).abs() <= d_lo.abs().min(d_hi.abs()) {
            roots.push(root);
        }
    }
    if values[n_grid - 1] == 0.0 {
        roots.push(grid[n_grid - 1]);
    }
    Ok(roots)
}
