//! Supersymmetric (Darboux) transformations of the coupled-channel radial
//! equation, specialised to partners of the zero potential.
//!
//! A transformation is fixed by a [`FactorizationSpec`] (channels plus a
//! factorization energy below every threshold) and one of two equivalent
//! parametrizations of the factorization solution:
//!
//! * [`U0Parametrization`]: the symmetric value `U(0)` of the superpotential;
//! * [`CanonicalParametrization`]: the rank `R` of the growing part together
//!   with the reduced blocks `Q0` and `X0`.
//!
//! [`Transform`] ties the two together and evaluates the superpotential,
//! the transformed potential and its Jost data.

mod canonical;
mod transform;
mod u0;

pub use canonical::{
    canonicalize, superpotential_canonical, superpotential_closed_form, superpotential_dyadic,
    CanonicalParametrization, Canonicalization, ClosedForm,
};
pub use transform::{
    transformed_jost_generic, FactorizationSolutions, Parametrization, Transform,
    REGULARITY_GRID_POINTS,
};
pub use u0::{
    canonical_from_u0_2x2, sigma_from_u0, superpotential_from_u0, u0_from_canonical,
    U0Parametrization,
};

use crate::error::{Error, Result};
use crate::linalg::{real_diag, RMatrix};
use crate::scattering::ChannelSet;

/// Channels together with a factorization energy below every threshold and
/// the matching positive wave numbers `kappa_i = sqrt(Delta_i - E_f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationSpec {
    channels: ChannelSet,
    energy: f64,
    kappa: Vec<f64>,
}

impl FactorizationSpec {
    pub fn from_energy(channels: ChannelSet, energy: f64) -> Result<Self> {
        if !energy.is_finite() || energy >= channels.min_threshold() {
            return Err(Error::InvalidFactorization(format!(
                "factorization energy {energy} must lie below every threshold (min {})",
                channels.min_threshold()
            )));
        }
        let kappa = channels
            .thresholds()
            .iter()
            .map(|d| (d - energy).sqrt())
            .collect();
        Ok(Self {
            channels,
            energy,
            kappa,
        })
    }

    /// Builds the spec from the wave numbers themselves. They must all
    /// correspond to one factorization energy (relative tolerance 1e-12); the
    /// given values are kept verbatim.
    pub fn from_kappa(channels: ChannelSet, kappa: Vec<f64>) -> Result<Self> {
        if kappa.len() != channels.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: channels.n_channels(),
                got: kappa.len(),
            });
        }
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(Error::InvalidFactorization(format!(
                "kappa entries must be positive and finite, got {k}"
            )));
        }
        let energies: Vec<f64> = channels
            .thresholds()
            .iter()
            .zip(&kappa)
            .map(|(d, k)| d - k * k)
            .collect();
        let energy = energies[0];
        let scale = channels
            .thresholds()
            .iter()
            .zip(&kappa)
            .fold(1.0f64, |acc, (d, k)| acc.max(d.abs()).max(k * k));
        if let Some(e) = energies.iter().find(|e| (*e - energy).abs() > 1e-12 * scale) {
            return Err(Error::InvalidFactorization(format!(
                "kappa values imply different factorization energies ({energy} vs {e})"
            )));
        }
        Ok(Self {
            channels,
            energy,
            kappa,
        })
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.kappa.len()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn kappa_diag(&self) -> RMatrix {
        real_diag(&self.kappa)
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa.iter().cloned().fold(0.0, f64::max)
    }

    /// Default outer radius of the regularity scan: `exp(-2 kappa_min r) < 1e-14`.
    pub fn default_r_max(&self) -> f64 {
        (1e14f64).ln() / (2.0 * self.kappa_min())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_from_energy() {
        let ch = ChannelSet::new(vec![10.0, 0.0]).unwrap();
        let spec = FactorizationSpec::from_energy(ch.clone(), -9.0).unwrap();
        assert_eq!(spec.kappa(), &[19f64.sqrt(), 3.0]);
        assert!(FactorizationSpec::from_energy(ch.clone(), 0.0).is_err());
        assert!(FactorizationSpec::from_energy(ch, 5.0).is_err());
    }

    #[test]
    fn kappa_list_must_be_consistent() {
        let ch = ChannelSet::new(vec![10.0, 0.0]).unwrap();
        let spec = FactorizationSpec::from_kappa(ch.clone(), vec![19f64.sqrt(), 3.0]).unwrap();
        assert!((spec.energy() + 9.0).abs() < 1e-14);
        assert!(FactorizationSpec::from_kappa(ch.clone(), vec![4.0, 3.0]).is_err());
        assert!(FactorizationSpec::from_kappa(ch.clone(), vec![-1.0, 3.0]).is_err());
        assert!(FactorizationSpec::from_kappa(ch, vec![3.0]).is_err());
    }
}
