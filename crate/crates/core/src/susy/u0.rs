use crate::error::{Error, Result};
use crate::linalg::{permute, RMatrix};

use super::canonical::{descending_kappa_order, superpotential_canonical, CanonicalParametrization};
use super::FactorizationSpec;

/// The superpotential at the origin, `U(0)`, as a real symmetric matrix.
/// Together with the factorization energy it fixes the transformed potential.
#[derive(Debug, Clone, PartialEq)]
pub struct U0Parametrization {
    u0: RMatrix,
}

impl U0Parametrization {
    pub fn new(u0: RMatrix, spec: &FactorizationSpec) -> Result<Self> {
        let n = spec.n_channels();
        if u0.nrows() != n || u0.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u0.nrows(),
            });
        }
        if u0 != u0.transpose() {
            return Err(Error::InvalidParametrization("U(0) must be symmetric".into()));
        }
        if u0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParametrization("U(0) has non-finite entries".into()));
        }
        Ok(Self { u0 })
    }

    pub fn u0(&self) -> &RMatrix {
        &self.u0
    }

    /// The blocks `(C2, D2)` of `sigma = kappa^{-1/2} [e^{kappa r} C2 + e^{-kappa r} D2]`
    /// for the zero initial potential.
    pub fn growth_blocks(&self, spec: &FactorizationSpec) -> (RMatrix, RMatrix) {
        let n = spec.n_channels();
        let k = spec.kappa();
        let c2 = RMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            0.5 * k[i].sqrt() * (delta + self.u0[(i, j)] / k[i])
        });
        let d2 = RMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            0.5 * k[i].sqrt() * (delta - self.u0[(i, j)] / k[i])
        });
        (c2, d2)
    }
}

/// `sigma(r) = cosh(kappa r) + sinh(kappa r) kappa^{-1} U(0)` and its exact derivative
/// `kappa sinh(kappa r) + cosh(kappa r) U(0)`.
pub fn sigma_from_u0(param: &U0Parametrization, spec: &FactorizationSpec, r: f64) -> (RMatrix, RMatrix) {
    let n = spec.n_channels();
    let k = spec.kappa();
    let u0 = param.u0();
    let sigma = RMatrix::from_fn(n, n, |i, j| {
        let (s, c) = ((k[i] * r).sinh(), (k[i] * r).cosh());
        let diag = if i == j { c } else { 0.0 };
        diag + s / k[i] * u0[(i, j)]
    });
    let sigma_prime = RMatrix::from_fn(n, n, |i, j| {
        let (s, c) = ((k[i] * r).sinh(), (k[i] * r).cosh());
        let diag = if i == j { k[i] * s } else { 0.0 };
        diag + c * u0[(i, j)]
    });
    (sigma, sigma_prime)
}

pub(crate) fn relative_det(m: &RMatrix) -> f64 {
    let scale: f64 = m.row_iter().map(|row| row.norm()).product();
    if scale == 0.0 {
        return 0.0;
    }
    m.determinant() / scale
}

/// `U(r) = sigma'(r) sigma(r)^{-1}` straight from the factorization solution.
pub fn superpotential_from_u0(param: &U0Parametrization, spec: &FactorizationSpec, r: f64) -> Result<RMatrix> {
    let (sigma, sigma_prime) = sigma_from_u0(param, spec, r);
    if relative_det(&sigma).abs() < 1e-14 {
        return Err(Error::SingularSigma { radius: r });
    }
    let inv = sigma
        .try_inverse()
        .ok_or(Error::SingularSigma { radius: r })?;
    Ok(sigma_prime * inv)
}

/// Two-channel map from `U(0) = [[a1, b], [b, a2]]` to the rank-2 canonical
/// form, `x0 = kappa^{-1/2} (kappa - U0)(kappa + U0)^{-1} kappa^{1/2}` written
/// out entrywise.
pub fn canonical_from_u0_2x2(
    param: &U0Parametrization,
    spec: &FactorizationSpec,
) -> Result<CanonicalParametrization> {
    if spec.n_channels() != 2 {
        return Err(Error::PreconditionViolated(format!(
            "two-channel map called with {} channels",
            spec.n_channels()
        )));
    }
    let u = param.u0();
    let (a1, a2, b) = (u[(0, 0)], u[(1, 1)], u[(0, 1)]);
    let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
    let det = (a1 + k1) * (a2 + k2) - b * b;
    let scale = ((a1.abs() + k1) * (a2.abs() + k2)).max(b * b).max(f64::MIN_POSITIVE);
    if det.abs() < 1e-10 * scale {
        return Err(Error::RankDrop);
    }
    let x11 = (b * b - (a1 - k1) * (a2 + k2)) / det;
    let x22 = (b * b - (a1 + k1) * (a2 - k2)) / det;
    let x12 = -2.0 * b * (k1 * k2).sqrt() / det;
    let x_user = RMatrix::from_row_slice(2, 2, &[x11, x12, x12, x22]);
    let reorder = descending_kappa_order(spec);
    CanonicalParametrization::new(
        2,
        reorder.clone(),
        RMatrix::zeros(0, 2),
        permute(&x_user, &reorder),
        spec,
    )
}

/// `U(0)` of a canonical parametrization.
pub fn u0_from_canonical(param: &CanonicalParametrization, spec: &FactorizationSpec) -> Result<U0Parametrization> {
    let u = superpotential_canonical(param, spec, 0.0)?;
    let sym = 0.5 * (&u + u.transpose());
    U0Parametrization::new(sym, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, real_diag};
    use crate::scattering::ChannelSet;

    fn fig1_spec() -> FactorizationSpec {
        FactorizationSpec::from_energy(ChannelSet::new(vec![10.0, 0.0]).unwrap(), -9.0).unwrap()
    }

    fn fig1_u0(spec: &FactorizationSpec) -> U0Parametrization {
        U0Parametrization::new(RMatrix::from_row_slice(2, 2, &[-2.0, 0.6, 0.6, -2.0]), spec).unwrap()
    }

    #[test]
    fn sigma_collapses_to_exponentials() {
        let spec = fig1_spec();
        let kappa = spec.kappa_diag();
        let r = 0.7;
        let plus = U0Parametrization::new(kappa.clone(), &spec).unwrap();
        let (s, sp) = sigma_from_u0(&plus, &spec, r);
        let growing = real_diag(&spec.kappa().iter().map(|k| (k * r).exp()).collect::<Vec<_>>());
        assert!(max_abs(&(&s - &growing)) < 1e-12 * max_abs(&growing));
        assert!(max_abs(&(&sp - &kappa * &growing)) < 1e-12 * max_abs(&sp));

        let minus = U0Parametrization::new(-kappa.clone(), &spec).unwrap();
        let (s, _) = sigma_from_u0(&minus, &spec, r);
        let decaying = real_diag(&spec.kappa().iter().map(|k| (-k * r).exp()).collect::<Vec<_>>());
        assert!(max_abs(&(s - decaying)) < 1e-14);
    }

    #[test]
    fn sigma_boundary_values() {
        let spec = fig1_spec();
        let p = fig1_u0(&spec);
        let (s, sp) = sigma_from_u0(&p, &spec, 0.0);
        assert_eq!(s, RMatrix::identity(2, 2));
        assert_eq!(&sp, p.u0());
    }

    #[test]
    fn trivial_superpotential_is_constant() {
        let spec = fig1_spec();
        let p = U0Parametrization::new(spec.kappa_diag(), &spec).unwrap();
        for r in [0.0, 0.5, 3.0] {
            let u = superpotential_from_u0(&p, &spec, r).unwrap();
            assert!(max_abs(&(u - spec.kappa_diag())) < 1e-12);
        }
    }

    #[test]
    fn off_diagonal_is_beta_over_det_sigma() {
        let spec = fig1_spec();
        let p = fig1_u0(&spec);
        let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
        let (a1, a2, b) = (-2.0, -2.0, 0.6);
        for r in [0.2, 1.0, 2.5] {
            let (c1, s1, c2, s2) = ((k1 * r).cosh(), (k1 * r).sinh(), (k2 * r).cosh(), (k2 * r).sinh());
            let det = a2 / k2 * c1 * s2 + a1 / k1 * c2 * s1 + c1 * c2 + (a1 * a2 - b * b) / (k1 * k2) * s1 * s2;
            let u = superpotential_from_u0(&p, &spec, r).unwrap();
            assert!((u[(0, 1)] - b / det).abs() < 1e-13);
            assert!((u[(1, 0)] - b / det).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_asymmetric_u0() {
        let spec = fig1_spec();
        let bad = RMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(U0Parametrization::new(bad, &spec).is_err());
    }

    #[test]
    fn two_channel_map_matches_closed_form_x12() {
        let spec = fig1_spec();
        let p = fig1_u0(&spec);
        let canon = canonical_from_u0_2x2(&p, &spec).unwrap();
        let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
        let det = (k1 - 2.0) * (k2 - 2.0) - 0.36;
        let x12 = -2.0 * 0.6 * (k1 * k2).sqrt() / det;
        assert!((canon.x0()[(0, 1)] - x12).abs() < 1e-14);
        assert_eq!(canon.rank(), 2);
    }

    #[test]
    fn two_channel_map_trivial_and_rank_drop() {
        let spec = fig1_spec();
        let p = U0Parametrization::new(spec.kappa_diag(), &spec).unwrap();
        let canon = canonical_from_u0_2x2(&p, &spec).unwrap();
        assert_eq!(max_abs(canon.x0()), 0.0);

        // (k1 + a1)(k2 + a2) = b^2
        let (k1, k2) = (spec.kappa()[0], spec.kappa()[1]);
        let a1 = -2.0;
        let b = 0.6;
        let a2 = b * b / (k1 + a1) - k2;
        let u = RMatrix::from_row_slice(2, 2, &[a1, b, b, a2]);
        let p = U0Parametrization::new(u, &spec).unwrap();
        assert_eq!(canonical_from_u0_2x2(&p, &spec).unwrap_err(), Error::RankDrop);
    }

    #[test]
    fn two_channel_round_trip() {
        let spec = fig1_spec();
        let p = fig1_u0(&spec);
        let canon = canonical_from_u0_2x2(&p, &spec).unwrap();
        let back = u0_from_canonical(&canon, &spec).unwrap();
        assert!(max_abs(&(back.u0() - p.u0())) < 1e-13);
        for i in 0..40 {
            let r = 0.1 * i as f64;
            let a = superpotential_from_u0(&p, &spec, r).unwrap();
            let b = superpotential_canonical(&canon, &spec, r).unwrap();
            assert!(max_abs(&(a - b)) < 1e-12, "r = {r}");
        }
    }
}
