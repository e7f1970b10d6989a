use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, to_complex, CMatrix, RMatrix};
use crate::scattering::{channel_wavenumbers, s_matrix_from_jost, SMatrixPoint};

use super::canonical::{canonicalize, superpotential_canonical, CanonicalParametrization};
use super::u0::{sigma_from_u0, U0Parametrization};
use super::FactorizationSpec;

/// Number of radii in the regularity pre-scan of `det sigma`.
pub const REGULARITY_GRID_POINTS: usize = 512;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub enum Parametrization {
    U0(U0Parametrization),
    Canonical(CanonicalParametrization),
}

/// A regular transformation of the zero potential, ready for evaluation.
///
/// Construction canonicalizes the parametrization and rejects it if
/// `det sigma` changes sign on `[0, r_max]`. All evaluations go through the
/// canonical form, which only involves decaying exponentials.
#[derive(Debug, Clone)]
pub struct Transform {
    spec: FactorizationSpec,
    param: Parametrization,
    canonical: CanonicalParametrization,
    u0: RMatrix,
    u_inf: RMatrix,
    r_max: f64,
}

impl Transform {
    pub fn new(spec: FactorizationSpec, param: Parametrization) -> Result<Self> {
        Self::build(spec, param, None)
    }

    /// Same as [`new`](Self::new) with an explicit outer radius for the regularity scan.
    pub fn with_scan_radius(spec: FactorizationSpec, param: Parametrization, r_max: f64) -> Result<Self> {
        if r_max.is_nan() || r_max <= 0.0 {
            return Err(Error::PreconditionViolated(format!("scan radius {r_max} must be positive")));
        }
        Self::build(spec, param, Some(r_max))
    }

    fn build(spec: FactorizationSpec, param: Parametrization, r_max: Option<f64>) -> Result<Self> {
        let canonical = match &param {
            Parametrization::U0(p) => {
                let (c2, d2) = p.growth_blocks(&spec);
                canonicalize(&c2, &d2, &spec)?.param
            }
            Parametrization::Canonical(p) => {
                if p.reorder().len() != spec.n_channels() {
                    return Err(Error::DimensionMismatch {
                        expected: spec.n_channels(),
                        got: p.reorder().len(),
                    });
                }
                p.clone()
            }
        };
        let r_max = r_max.unwrap_or_else(|| {
            spec.default_r_max()
                .max((1e14f64).ln() / canonical.decay_rate(&spec))
        });
        let singular = |radius: f64| match &param {
            Parametrization::U0(_) => Error::SingularSigma { radius },
            Parametrization::Canonical(_) => Error::SingularY { radius },
        };
        if let Some(radius) = scan_regularity(&canonical, &spec, r_max) {
            return Err(singular(radius));
        }
        let u0 = match &param {
            Parametrization::U0(p) => p.u0().clone(),
            Parametrization::Canonical(p) => superpotential_canonical(p, &spec, 0.0)?,
        };
        let u_inf = canonical.u_at_infinity(&spec);
        Ok(Self {
            spec,
            param,
            canonical,
            u0,
            u_inf,
            r_max,
        })
    }

    pub fn spec(&self) -> &FactorizationSpec {
        &self.spec
    }

    pub fn parametrization(&self) -> &Parametrization {
        &self.param
    }

    pub fn canonical(&self) -> &CanonicalParametrization {
        &self.canonical
    }

    pub fn rank(&self) -> usize {
        self.canonical.rank()
    }

    /// `U(0)`.
    pub fn u0(&self) -> &RMatrix {
        &self.u0
    }

    /// `U(inf) = diag(+kappa', -kappa'')` in caller order.
    pub fn u_at_infinity(&self) -> &RMatrix {
        &self.u_inf
    }

    pub fn scan_radius(&self) -> f64 {
        self.r_max
    }

    pub fn superpotential(&self, r: f64) -> Result<RMatrix> {
        if r == 0.0 {
            return Ok(self.u0.clone());
        }
        let u = superpotential_canonical(&self.canonical, &self.spec, r)?;
        Ok(0.5 * (&u + u.transpose()))
    }

    /// `V~(r) = -2 U'(r) = 2 (U^2 - kappa^2)`, using `sigma'' = kappa^2 sigma`.
    pub fn potential(&self, r: f64) -> Result<RMatrix> {
        let u = self.superpotential(r)?;
        let mut v = &u * &u;
        for (i, k) in self.spec.kappa().iter().enumerate() {
            v[(i, i)] -= k * k;
        }
        v *= 2.0;
        Ok(0.5 * (&v + v.transpose()))
    }

    /// `F~(k) = [U(inf) - ik]^{-1} [U(0) - ik]` for arbitrary complex `k`.
    pub fn jost(&self, k: &[Complex64]) -> CMatrix {
        let n = self.spec.n_channels();
        CMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { I * k[i] } else { Complex64::new(0.0, 0.0) };
            (self.u0[(i, j)] - diag) / (self.u_inf[(i, i)] - I * k[i])
        })
    }

    pub fn jost_at_energy(&self, energy: f64) -> CMatrix {
        let k = channel_wavenumbers(energy, self.spec.channels());
        self.jost(k.values())
    }

    /// S-matrix on the open channels at a real energy.
    pub fn s_matrix(&self, energy: f64) -> Result<SMatrixPoint> {
        let k = channel_wavenumbers(energy, self.spec.channels());
        let plus = self.jost(k.values());
        let minus = self.jost(&k.negated());
        s_matrix_from_jost(&plus, &minus, &k, self.spec.channels())
    }

    /// `f~(k, r) = [U(r) - ik] e^{ikr} [U(inf) - ik]^{-1}`.
    pub fn jost_solution(&self, k: &[Complex64], r: f64) -> Result<CMatrix> {
        let u = self.superpotential(r)?;
        let n = self.spec.n_channels();
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { I * k[i] } else { Complex64::new(0.0, 0.0) };
            (u[(i, j)] - diag) * (I * k[j] * r).exp() / (self.u_inf[(j, j)] - I * k[j])
        }))
    }

    /// Radial derivative of [`jost_solution`](Self::jost_solution), using `U' = kappa^2 - U^2`.
    pub fn jost_solution_derivative(&self, k: &[Complex64], r: f64) -> Result<CMatrix> {
        let u = self.superpotential(r)?;
        let mut du = -(&u * &u);
        for (i, kk) in self.spec.kappa().iter().enumerate() {
            du[(i, i)] += kk * kk;
        }
        let n = self.spec.n_channels();
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { I * k[i] } else { Complex64::new(0.0, 0.0) };
            let phase = (I * k[j] * r).exp();
            (du[(i, j)] + (u[(i, j)] - diag) * I * k[j]) * phase / (self.u_inf[(j, j)] - I * k[j])
        }))
    }

    /// Factorization solution and its derivative. For a `U(0)` parametrization
    /// this is `cosh(kappa r) + sinh(kappa r) kappa^{-1} U(0)`.
    pub fn sigma(&self, r: f64) -> (RMatrix, RMatrix) {
        match &self.param {
            Parametrization::U0(p) => sigma_from_u0(p, &self.spec, r),
            Parametrization::Canonical(p) => p.sigma(&self.spec, r),
        }
    }

    /// Solutions of the transformed equation at the factorization energy:
    /// `phi = (sigma^T)^{-1}` and `psi = phi * int_{r0}^{r} sigma^T sigma ds`.
    pub fn factorization_solutions(&self, r: f64, r0: f64) -> Result<FactorizationSolutions> {
        let (sigma, sigma_prime) = self.sigma(r);
        let sigma_t_inv = sigma
            .transpose()
            .try_inverse()
            .ok_or(Error::SingularSigma { radius: r })?;
        let gram = |s: f64| {
            let (m, _) = self.sigma(s);
            m.transpose() * m
        };
        let integral = integrate_matrix(&gram, r0, r, 1e-12);
        let phi = sigma_t_inv.clone();
        let phi_prime = -(&sigma_t_inv * sigma_prime.transpose() * &sigma_t_inv);
        let psi = &phi * &integral;
        let psi_prime = &phi_prime * &integral + &phi * (sigma.transpose() * &sigma);
        Ok(FactorizationSolutions {
            phi,
            phi_prime,
            psi,
            psi_prime,
        })
    }

    /// Least-squares slope of `ln max|U(r) - U(inf)|` over the part of
    /// `[0, r_end]` where the deviation lies between `1e-11` and `1e-2` of its
    /// value at the origin. `None` when the deviation vanishes identically.
    pub fn tail_decay_slope(&self, r_end: f64, samples: usize) -> Option<f64> {
        let at_origin = max_abs(&(&self.u0 - &self.u_inf));
        if at_origin == 0.0 {
            return None;
        }
        let points: Vec<(f64, f64)> = (0..=samples)
            .filter_map(|i| {
                let r = r_end * i as f64 / samples as f64;
                let dev = max_abs(&(self.superpotential(r).ok()? - &self.u_inf));
                let rel = dev / at_origin;
                (rel > 1e-11 && rel < 1e-2).then(|| (r, dev.ln()))
            })
            .collect();
        if points.len() < 3 {
            return None;
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Matrix solutions at the factorization energy with their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationSolutions {
    pub phi: RMatrix,
    pub phi_prime: RMatrix,
    pub psi: RMatrix,
    pub psi_prime: RMatrix,
}

/// Generic Jost-matrix transformation for an arbitrary initial potential with
/// Jost matrix `F(k)` and `G(k) = -[f'(k, 0)]^T`:
/// `F~(k) = [U(inf) - ik]^{-1} [F(k) U(0) + G(k)]`.
pub fn transformed_jost_generic(
    u0: &RMatrix,
    u_inf: &RMatrix,
    k: &[Complex64],
    initial_jost: &CMatrix,
    initial_g: &CMatrix,
) -> Result<CMatrix> {
    let n = k.len();
    let left = CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { I * k[i] } else { Complex64::new(0.0, 0.0) };
        u_inf[(i, j)] - diag
    });
    let left_inv = left.try_inverse().ok_or_else(|| {
        Error::PreconditionViolated("U(inf) - ik is singular".into())
    })?;
    Ok(left_inv * (initial_jost * to_complex(u0) + initial_g))
}

/// Returns the radius of the first sign change (or zero) of `det Y` on
/// `[0, r_max]`, located by bisection.
fn scan_regularity(param: &CanonicalParametrization, spec: &FactorizationSpec, r_max: f64) -> Option<f64> {
    if param.rank() == 0 {
        return None;
    }
    let det = |r: f64| param.y_matrix(spec, r).determinant();
    let r_min = r_max * 1e-6;
    let ratio = (r_max / r_min).powf(1.0 / (REGULARITY_GRID_POINTS as f64 - 2.0));
    let grid = std::iter::once(0.0)
        .chain((0..REGULARITY_GRID_POINTS - 1).map(|j| r_min * ratio.powi(j as i32)));
    let mut prev: Option<(f64, f64)> = None;
    for r in grid {
        let d = det(r);
        if !d.is_finite() || d == 0.0 {
            return Some(r);
        }
        if let Some((r_prev, d_prev)) = prev {
            if d.signum() != d_prev.signum() {
                let (mut lo, mut hi) = (r_prev, r);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if det(mid).signum() == d_prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
        prev = Some((r, d));
    }
    // det Y -> 1 at infinity; a negative tail means the zero lies beyond r_max
    match prev {
        Some((r, d)) if d < 0.0 => Some(r),
        _ => None,
    }
}

/// Adaptive Simpson quadrature of a matrix-valued integrand (signed for `b < a`).
fn integrate_matrix<F: Fn(f64) -> RMatrix>(f: &F, a: f64, b: f64, tol: f64) -> RMatrix {
    if a == b {
        let m = f(a);
        return RMatrix::zeros(m.nrows(), m.ncols());
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (&fa + 4.0 * &fm + &fb);
    let scale = max_abs(&whole).max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, &fa, &fm, &fb, whole, tol * scale, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> RMatrix>(
    f: &F,
    a: f64,
    b: f64,
    fa: &RMatrix,
    fm: &RMatrix,
    fb: &RMatrix,
    whole: RMatrix,
    tol: f64,
    depth: usize,
) -> RMatrix {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * &flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * &frm + fb);
    let sum = &left + &right;
    let err = max_abs(&(&sum - &whole));
    if depth == 0 || err <= 15.0 * tol {
        return &sum + (&sum - whole) / 15.0;
    }
    simpson_step(f, a, m, fa, &flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, &frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_c, real_diag};
    use crate::scattering::ChannelSet;
    use crate::susy::superpotential_from_u0;

    fn fig1() -> (FactorizationSpec, Parametrization) {
        let spec = FactorizationSpec::from_energy(ChannelSet::new(vec![10.0, 0.0]).unwrap(), -9.0).unwrap();
        let u0 = U0Parametrization::new(RMatrix::from_row_slice(2, 2, &[-2.0, 0.6, 0.6, -2.0]), &spec).unwrap();
        (spec, Parametrization::U0(u0))
    }

    #[test]
    fn potential_at_origin() {
        let (spec, p) = fig1();
        let t = Transform::new(spec, p).unwrap();
        let v = t.potential(0.0).unwrap();
        let expected = RMatrix::from_row_slice(2, 2, &[-29.28, -4.8, -4.8, -9.28]);
        assert!(max_abs(&(v - expected)) < 1e-12);
    }

    #[test]
    fn canonical_route_matches_sigma_route() {
        let (spec, p) = fig1();
        let t = Transform::new(spec.clone(), p.clone()).unwrap();
        let Parametrization::U0(u0) = p else { unreachable!() };
        for i in 0..=80 {
            let r = 0.1 * i as f64;
            let a = t.superpotential(r).unwrap();
            let b = superpotential_from_u0(&u0, &spec, r).unwrap();
            // sigma'sigma^{-1} loses digits with the conditioning of sigma
            let cond = ((spec.kappa()[0] - spec.kappa()[1]) * r).exp();
            assert!(max_abs(&(a - b)) < 1e-14 * cond.max(100.0), "r = {r}");
        }
    }

    #[test]
    fn potential_identity_against_finite_difference() {
        let (spec, p) = fig1();
        let t = Transform::new(spec, p).unwrap();
        let r = 0.9;
        let mut prev_err = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let du = (t.superpotential(r + h).unwrap() - t.superpotential(r - h).unwrap()) / (2.0 * h);
            let err = max_abs(&(t.potential(r).unwrap() + 2.0 * du));
            // second order: halving h quarters the error
            assert!(err < prev_err / 3.5 || prev_err.is_infinite(), "h = {h}, err = {err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-4);
    }

    #[test]
    fn trivial_transforms() {
        let spec = FactorizationSpec::from_energy(ChannelSet::new(vec![10.0, 0.0]).unwrap(), -9.0).unwrap();
        let kappa = spec.kappa_diag();
        let plus = Transform::new(
            spec.clone(),
            Parametrization::U0(U0Parametrization::new(kappa.clone(), &spec).unwrap()),
        )
        .unwrap();
        assert_eq!(plus.rank(), 2);
        assert_eq!(plus.u_at_infinity(), &kappa);
        assert!(max_abs_c(&(plus.jost_at_energy(12.0) - CMatrix::identity(2, 2))) < 1e-15);

        let minus = Transform::new(
            spec.clone(),
            Parametrization::U0(U0Parametrization::new(-kappa.clone(), &spec).unwrap()),
        )
        .unwrap();
        assert_eq!(minus.rank(), 0);
        assert_eq!(minus.u_at_infinity(), &(-kappa));
        assert!(max_abs(&minus.potential(1.3).unwrap()) < 1e-12);
    }

    #[test]
    fn jost_solution_at_origin_is_jost_transposed() {
        let (spec, p) = fig1();
        let t = Transform::new(spec.clone(), p).unwrap();
        for e in [-3.0, 5.0, 12.0] {
            let k = channel_wavenumbers(e, spec.channels());
            let f0 = t.jost_solution(k.values(), 0.0).unwrap();
            assert!(max_abs_c(&(f0.transpose() - t.jost(k.values()))) < 1e-12);
        }
    }

    #[test]
    fn jost_solution_tends_to_plane_waves() {
        let (spec, p) = fig1();
        let t = Transform::new(spec.clone(), p).unwrap();
        let k = channel_wavenumbers(12.0, spec.channels());
        let r = 20.0;
        let f = t.jost_solution(k.values(), r).unwrap();
        let waves: Vec<Complex64> = k.values().iter().map(|kk| (-I * kk * r).exp()).collect();
        let scaled = f * crate::linalg::complex_diag(&waves);
        assert!(max_abs_c(&(scaled - CMatrix::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn generic_jost_with_free_initial_data() {
        let (spec, p) = fig1();
        let t = Transform::new(spec.clone(), p).unwrap();
        let k = channel_wavenumbers(7.0, spec.channels());
        let f = CMatrix::identity(2, 2);
        let g = -crate::linalg::complex_diag(&k.values().iter().map(|kk| I * kk).collect::<Vec<_>>());
        let generic = transformed_jost_generic(t.u0(), t.u_at_infinity(), k.values(), &f, &g).unwrap();
        assert!(max_abs_c(&(generic - t.jost(k.values()))) < 1e-14);
    }

    #[test]
    fn singular_parametrization_is_rejected() {
        // kappa2 below the rank-one limit makes det sigma change sign
        let spec = FactorizationSpec::from_kappa(
            ChannelSet::new(vec![10.0, 0.0]).unwrap(),
            vec![(10.0f64 + 4.0).sqrt(), 2.0],
        )
        .unwrap();
        let u0 = U0Parametrization::new(RMatrix::from_row_slice(2, 2, &[-2.0, 0.6, 0.6, -2.0]), &spec).unwrap();
        let err = Transform::new(spec, Parametrization::U0(u0)).unwrap_err();
        assert!(matches!(err, Error::SingularSigma { .. }), "{err:?}");
    }

    #[test]
    fn factorization_solutions_wronskian() {
        let (spec, p) = fig1();
        let t = Transform::new(spec, p).unwrap();
        for (r, r0) in [(0.7, 0.0), (1.5, 0.4), (0.2, 1.0)] {
            let s = t.factorization_solutions(r, r0).unwrap();
            let w = s.phi.transpose() * &s.psi_prime - s.phi_prime.transpose() * &s.psi;
            assert!(max_abs(&(w - RMatrix::identity(2, 2))) < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn trivial_factorization_solution_is_decaying() {
        let spec = FactorizationSpec::from_energy(ChannelSet::new(vec![10.0, 0.0]).unwrap(), -9.0).unwrap();
        let t = Transform::new(
            spec.clone(),
            Parametrization::U0(U0Parametrization::new(spec.kappa_diag(), &spec).unwrap()),
        )
        .unwrap();
        let r = 0.8;
        let s = t.factorization_solutions(r, 0.0).unwrap();
        let expected = real_diag(&spec.kappa().iter().map(|k| (-k * r).exp()).collect::<Vec<_>>());
        assert!(max_abs(&(s.phi - expected)) < 1e-14);
    }
}
