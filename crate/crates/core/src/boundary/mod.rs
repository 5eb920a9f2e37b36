//! Boundary maps of the Mayer-Vietoris sequence built from approximate ideal structures.

pub mod classes;
pub mod homotopy;
pub mod ideal;
pub mod lift;
pub mod region;
pub mod uniformity;

pub use classes::{boundary_class, boxplus, inverse_lift, iota_lift, sigma_witness, BoundaryClass, SigmaWitness};
pub use homotopy::{discretize_homotopy, sigma_reconstruct, whitehead_split};
pub use ideal::{check_delta_ideal_structure, tensor_scale_ideal_structure, IdealCert, IdealStructure};
pub use lift::{build_lift_v, check_inv_cut, Lift, LiftCert, Pair};
pub use region::{MatRegion, Region};
pub use uniformity::{uniformity_probe, UniformityReport};
