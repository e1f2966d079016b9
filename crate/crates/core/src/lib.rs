//! Multiphase Cahn-Hilliard tumour growth with Brinkman or Darcy flow.

pub mod constitutive;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod flow;
pub mod diagnostics;
pub mod initial;
pub mod output;
pub mod simulation;
pub mod stepper;
pub mod sweep;
pub mod mms;
