//! Series plug-in hybrid energy management: drive-cycle analysis, road-load
//! and component models, a rule-based charge-depleting/charge-sustaining
//! controller, SOC-grid dynamic programming for the charge-sustaining phase,
//! and utility-factor energy accounting.

pub mod accounting;
pub mod cycle;
pub mod dpopt;
pub mod drive;
pub mod dynamics;
pub mod ems;
pub mod error;
pub mod powertrain;
pub mod synth;

pub use error::{Error, Result};
