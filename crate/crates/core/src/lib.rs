//! Barycenters, Wasserstein-1 transport and Fubini-type inequalities for
//! maps from finite product mm-spaces into CAT(0) spaces.
//!
//! The expectation of a map into a CAT(0) space is the barycenter (center of
//! mass) of its pushforward measure. For a map on a product `X x Y` one can
//! also take barycenters slice by slice and then over `Y`; in a nonlinear
//! target the two results differ. [`fubini::fubini_report`] measures that
//! difference and checks it against the L1 and L2 variation of the map.
//!
//! | module | contents |
//! |---|---|
//! | [`spaces`] | Euclidean, metric tree, hyperboloid and product targets |
//! | [`measures`] | discrete measures, finite mm-spaces, map tables |
//! | [`barycenter`] | exact and iterative centers of mass |
//! | [`transport`] | exact W1 with primal plan and dual potential |
//! | [`fubini`] | expectations, repeated integrals, variation bounds |
//! | [`obsvar`] | Lipschitz maps, observable variation, graph spectral gaps |

pub mod barycenter;
pub mod error;
pub mod fubini;
pub mod measures;
pub mod obsvar;
pub mod spaces;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, Domain, MMSpace, MapTable, ProductMMSpace};
pub use spaces::{Point, Space, TangentVector};

/// Derives a per-instance seed from a master seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
