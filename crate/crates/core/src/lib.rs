//! Natural density, `f`-density and the comparison of the statistical ideal
//! with the ideal generated by a modulus function.
//!
//! - [`modulus`]: modulus families, exact and approximate evaluation, axiom sampling.
//! - [`sets`]: subsets of the naturals, counting functions, density profiles.
//! - [`diagnostics`]: finite-horizon estimates of `h_f(t) = limsup f(n)/f(tn)`
//!   and `g_f(k) = h_f(2^k)`, and verdicts on whether the two ideals coincide.
//! - [`separator`]: builds a set of density zero whose `f`-density does not
//!   vanish, from witnesses `f(n) > ξ f(2^k n)`, and verifies it.
//! - [`cli`]: the `fdensity` command-line front end.

pub mod approx;
pub mod bignum;
pub mod cli;
pub mod diagnostics;
pub mod format;
pub mod modulus;
pub mod separator;
pub mod sets;

pub use approx::ApproxReal;
pub use modulus::{ModulusDescriptor, ModulusError};
pub use sets::{Block, Builtin, DensityProfile, HorizonGrid, IntegerSet};
