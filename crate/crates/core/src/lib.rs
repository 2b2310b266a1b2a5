//! Ergodic-rate analysis of linear beamforming in spatially correlated
//! multi-antenna broadcast channels, driven entirely by channel statistics.

pub mod channel;
pub mod design;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod rates;

pub use channel::{
    Beamformer, BeamformerSet, ChannelSample, CovarianceMatrix, EffectiveSpectrum, LinkStatistics,
};
pub use design::{DesignMethod, DesignResult, GridObjective};
pub use error::{Error, Result};
pub use montecarlo::{EmpiricalCdf, McEstimate};
pub use numerics::EigenDecomposition;
pub use rates::{RateMethod, RateReport, SinrBreakdown};
