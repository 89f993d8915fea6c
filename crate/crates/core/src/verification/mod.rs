//! Estimators and statistical tests for the quantitative bounds the kernels satisfy.

mod consistency;
mod decay;
mod moments;
mod tails;
mod tempered;

pub use consistency::{compare_ensembles, consistency_test, kernel_equivalence_test, window_observables, Ensemble, TwoSampleReport};
pub use decay::{decay_fit, estimate_cphi_bound, single_loop_weight, DecayFit};
pub use moments::{exp_moment_test, fkg_test, free_gas_check, free_gas_test, ph_intensity_moment, poisson_exp_moment, ExpMomentReport, FkgReport, FreeGasReport};
pub use tails::{diameter_tail_test, empirical_tail, loop_diameters, DiameterTailReport};
pub use tempered::{calibrate_tempered, tempered_membership, tempered_statistics, TemperedSpec, TemperedVerdict};
