//! Fisher information, homodyne sampling and maximum-likelihood estimation.

pub mod fisher;
pub mod homodyne;
pub mod mle;

pub use fisher::{cfim, info_distance, lo_direction, pinv_sym, qfim, sensitivities, sld_phase_space, InfoMatrices, SldPhaseSpace};
pub use homodyne::{homodyne_pdf, homodyne_rate, sample_homodyne, sample_homodyne_stream, sufficient_statistic, task_rng, HomodyneLaw, Setting};
pub use mle::{joint_fisher, mle_multi_setting, mle_solution_set, ForwardModel, MleEstimate, MleOptions, SettingData, DECREMENT_TOL, STALL_TOL, SettingResidual, SolutionPoint, SolutionSet};
