//! Semi-discrete spatial operators: entropy-conservative
//! flux-differencing volume terms, BR1 gradient lifting and surface
//! coupling for the 3D compressible Navier-Stokes equations, plus the
//! 1D viscous Burgers and linear advection-diffusion operators. The
//! standard (non-split) volume integral is kept alongside for the
//! instability comparison; it carries no stability contract.

pub mod nse;
pub mod scalar;

pub use nse::{
    compute_entropy_gradients, compute_entropy_variables, flux_difference_volume, rhs_nse,
    FieldsNse, NseWorkspace,
};
pub use scalar::{
    advective_face_energy, burgers_flux_difference_volume, rhs_burgers, rhs_linear_advdiff,
    BurgersSetup, Fields1d, LinearAdvDiffSetup,
};

/// Volume integral mode for the advective terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMode {
    /// Two-point entropy-conservative flux differencing with two-point
    /// averaged metric terms.
    EntropyConservative,
    /// Strong-form derivative of the interpolated contravariant flux.
    Standard,
}

/// Interface flux for the advective terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceFlux {
    /// Entropy-conservative two-point flux, no added dissipation.
    Ec,
    /// EC flux plus matrix dissipation (entropy stable).
    EcDissipation,
    /// 1D linear flux with blending `sigma` (1 = fully upwind).
    Upwind,
    /// 1D central flux (`sigma = 0`).
    Central,
}

/// Spatial scheme selection. Combinations are validated when a case
/// configuration is loaded.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub volume: VolumeMode,
    pub interface: InterfaceFlux,
    /// Blending parameter of the 1D linear numerical flux.
    pub sigma: f64,
    /// Audit-only switch: replace the viscous interface coupling by
    /// one-sided values. Never used in production runs.
    pub suppress_viscous_interface: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            volume: VolumeMode::EntropyConservative,
            interface: InterfaceFlux::Ec,
            sigma: 1.0,
            suppress_viscous_interface: false,
        }
    }
}

impl SchemeConfig {
    pub fn sigma_value(&self) -> f64 {
        match self.interface {
            InterfaceFlux::Upwind => self.sigma,
            InterfaceFlux::Central => 0.0,
            _ => self.sigma,
        }
    }
}
