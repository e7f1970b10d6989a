//! Exactly-solvable coupled-channel potentials built as supersymmetric
//! partners of the zero potential, with their Jost and scattering matrices.
//!
//! * [`scattering`]: channels, wave numbers, S-matrix and eigenphases.
//! * [`susy`]: the transformation itself and its parametrizations.
//! * [`models`]: closed-form two- and three-channel models plus figure presets.
//! * [`oracle`]: direct integration of the radial equation for cross-checks.
//!
//! ```
//! use coupled_susy::models::{FigurePreset, PresetName};
//!
//! let preset = FigurePreset::new(PresetName::Fig1);
//! let transform = preset.transform().unwrap();
//! let s = transform.s_matrix(12.0).unwrap();
//! assert!(s.unitarity_defect() < 1e-12);
//! ```

pub mod error;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod scattering;
pub mod susy;

pub use error::{Error, Result};
pub use scattering::{ChannelSet, Eigenphases, SMatrixPoint};
pub use susy::{FactorizationSpec, Parametrization, Transform};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/superpotential.md")]
    mod superpotential {}
    #[doc = include_str!("../../../book/src/canonical.md")]
    mod canonical {}
    #[doc = include_str!("../../../book/src/jost.md")]
    mod jost {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
