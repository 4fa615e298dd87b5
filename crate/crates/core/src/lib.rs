//! Zero-energy scattering for attractive potentials `V(r) ≈ -γ r^(-μ)`,
//! `0 < μ < 2`.
//!
//! * [`potentials`]: the radial potential family, `g`, `h`, effective
//!   potentials and turning points.
//! * [`classical`]: zero-energy orbits, their deflection angle, the reduced
//!   flow and the spherically symmetric eikonal phase.
//! * [`radial`]: zero-energy phase shifts from the regular solution and
//!   from semiclassical closed forms.
//! * [`sphere`]: Gegenbauer kernels, the half-wave evolution `e^{iθΛ}` and
//!   partial-wave synthesis of the zero-energy scattering matrix.
//! * [`phases`]: short-range and Dollard modifiers and their threshold
//!   asymptotics.

pub mod classical;
pub mod error;
pub mod export;
pub mod numeric;
pub mod phases;
pub mod potentials;
pub mod radial;
pub mod sphere;

pub use error::{Error, Result};
pub use potentials::{turning_point, Channel, CutoffMode, PotentialModel};
