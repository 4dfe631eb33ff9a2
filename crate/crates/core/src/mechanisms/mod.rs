//! Reference mechanisms and the compromiser assignments that realise them.

mod marriage;
mod school;
mod serial;
mod ttc;

pub use marriage::{marriage_da, MarriageSpec};
pub use school::{cumulative_da, da_alpha, immediate_acceptance, SchoolSpec};
pub use serial::{sd_alpha, serial_dictatorship, DictatorOrder};
pub use ttc::{ttc, ttc_alpha, ttc_pointer_compromisers, Endowment};
