//! Mutation testing for MiniJ with masked-token prediction.

pub mod analysis;
pub mod assertions;
pub mod cli;
pub mod lang;
pub mod masking;
pub mod mutagen;
pub mod predict;
pub mod simulate;
