//! The correspondence between subgroups generated by (residually) unipotent
//! elements and Lie subalgebras generated by (residually) nilpotent elements,
//! over `F_p` and over `Z/p^N`.

pub mod fp;
pub mod padic;

pub use fp::{
    enumerate_nilpotently_generated, enumerate_unipotent_generated, grpc_bar, h_plus, liec_bar,
    roundtrip_check_fp, unipotent_elements, FpLieSubalgebra, FpRoundTrip, FpSubgroup,
};
pub use padic::{grpc_padic, liec_of_group, liec_padic, roundtrip_check_padic, PadicRoundTrip};
