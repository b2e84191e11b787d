//! Monte-Carlo estimators with dipole polarization.

pub mod estimators;
pub mod path;
pub mod pol;

pub use estimators::{
    mc_breakdown, mc_inelastic_crossed, mc_inelastic_ladder, mc_linear, mc_prop, mc_prop_crossed, mc_prop_ladder,
    mc_scattering, mc_spectral_point, path_statistics, FinalFrequency, LinearEstimate, McBreakdown, McOptions,
    PathStatistics, SpectralPoint,
};
