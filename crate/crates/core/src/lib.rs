//! Exterior calculus on almost Hermitian germs and a numerical verification
//! harness for the commutation identities between the Lefschetz operators and
//! the exterior differential.

pub mod calculus;
pub mod campaign;
pub mod error;
pub mod exterior;
pub mod form;
pub mod geometry;
pub mod identities;
pub mod jet;
pub mod linalg;
pub mod ring;
pub mod sampling;

pub use campaign::{run_campaign, CampaignConfig, Suite, Trial, VerificationReport};
pub use error::{Error, Result};
pub use exterior::{FiberOps, PrimitiveDecomposition};
pub use form::{Form, FormAtPoint, JetForm};
pub use geometry::{AlmostHermitianStructure, Fiber, Preset};
pub use jet::{Jet, JetShape};
pub use ring::{Coeff, C64};
