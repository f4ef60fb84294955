//! Relaxation oscillations of Gause-type predator–prey systems
//!
//! ```text
//! ẋ = r x (1 - x/K) - y p(x),    ẏ = y (-ε + c p(x))
//! ```
//!
//! in the limit of small predator death rate ε. The singular (ε = 0) analysis
//! reduces the question of which relaxation cycles exist, and whether they
//! attract, to two integrals along fast orbits: `χ(x0)` locates the cycles and
//! `λ(x0)` decides their stability. [`criteria::predict_dynamics`] turns these
//! into a verdict; [`full_sim`] checks the verdict against the ε > 0 flow.

pub mod criteria;
pub mod error;
pub mod fast_orbit;
pub mod full_sim;
pub mod hausdorff;
pub mod io;
pub mod model;
pub mod ode;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Family, HumpClass, IsoclineShape, ModelParams, ModelSpec};
