//! Robust L∞ control with actuator selection for networks of
//! electromagnetic soft actuators.

pub mod kv;
pub mod linalg;
pub mod lmi;
pub mod misdp;
pub mod model;
pub mod sca;
pub mod scenario;
pub mod sdp;
pub mod selection;
pub mod sim;
