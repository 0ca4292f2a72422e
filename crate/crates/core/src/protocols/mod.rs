//! Experiment suites built on the operational representation.

pub mod clifford;
pub mod design;
pub mod fit;
pub mod germs;
pub mod ramsey;
pub mod rb;
pub mod statetomo;
pub mod tvd;

pub use clifford::{build_clifford_table, CliffordTable, Generator};
pub use design::{Experiment, ExperimentDesign};
pub use fit::{fit_decay, rb_credible_interval, CredibleIntervals, DecayFit, DecayPoint, Interval};
pub use germs::{germ_design, lsgst_design, lsgst_fiducials, lsgst_germs};
pub use ramsey::{fit_ramsey_frequency, ramsey_design, ramsey_sequence, RamseyFit};
pub use rb::{rb_design, rb_sequence, rb_survival, survival_curve, RbGroup, RbSequence, RbSurvival};
pub use statetomo::{naive_pseudo_bloch, pseudo_bloch, statetomo_design};
pub use tvd::{tvd, tvd_total};
