//! The three register protocols.

mod authenticated;
mod common;
mod help;
mod sticky;
mod verifiable;
mod verify;

pub use authenticated::AuthenticatedRegister;
pub use sticky::StickyRegister;
pub use verifiable::VerifiableRegister;
pub use verify::VerifyVariant;

use crate::runtime::{Protocol, TypeTag};

/// Default initial value of the verifiable and authenticated registers.
pub const V0: u64 = 0;

/// The register protocol implementing `tag`. Test-or-set has no register of
/// its own; see [`crate::tos`].
pub fn register_protocol(tag: TypeTag, v0: u64, variant: VerifyVariant) -> Option<Box<dyn Protocol>> {
    match tag {
        TypeTag::Verifiable => Some(Box::new(VerifiableRegister::new(v0).with_variant(variant))),
        TypeTag::Authenticated => Some(Box::new(AuthenticatedRegister::new(v0))),
        TypeTag::Sticky => Some(Box::new(StickyRegister::new())),
        TypeTag::TestOrSet => None,
    }
}
