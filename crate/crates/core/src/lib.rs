pub mod bounds;
pub mod error;
pub mod game;
pub mod oracle;
pub mod potentials;
pub mod simulator;
pub mod specfun;
pub mod strategies;
pub mod verify;

pub use error::{Error, Result};
pub use game::*;
pub use potentials::{Family, PotentialHandle, Side};
pub use specfun::QuadratureSettings;
