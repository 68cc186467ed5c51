//! Shortcuts to adiabaticity for two-level systems and harmonic traps.
//!
//! The two-level stack works in units with `ħ = 1`. A Hamiltonian is a
//! traceless Hermitian 2×2 matrix `Xσ_x + Yσ_y + Zσ_z`, stored as its Pauli
//! vector [`Su2Coords`].

pub mod adiabatic;
pub mod error;
pub mod harmonic;
pub mod pictures;
pub mod propagator;
pub mod quadrature;
pub mod schedules;
pub mod su2;

pub use adiabatic::{cd_term_0, cd_term_01, cd_term_1, iterate, AdiabaticFrame, FrameOptions, IterateSchedule};
pub use error::{Error, Result};
pub use pictures::{ip_transform, z_rotation_shortcut, FrameGenerator, LabFrameHamiltonian};
pub use propagator::{eigen_populations, propagate, PropagatorOptions, TwoLevelTrajectory};
pub use schedules::{DriveSchedule, Hamiltonian, LzSchedule, TimeGrid};
pub use su2::{Su2Coords, TwoLevelState, Unitary2};
