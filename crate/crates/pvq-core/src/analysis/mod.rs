//! Circuit diagnostics: Fisher-information trainability analysis and
//! Fourier-spectrum expressivity analysis.

mod fim;
mod fourier;

pub use fim::{
    fim_eigenspectrum, fim_estimate, fim_rank_curve, qdi_family, vvrq_family, CircuitFamily,
    EigenHistogram, FimResult, RANK_TOLERANCE,
};
pub use fourier::{fourier_spectrum, FourierSpectrum, COEFF_STD_THRESHOLD, MAX_GRID_CELLS};
