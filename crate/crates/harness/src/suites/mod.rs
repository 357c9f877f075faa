pub mod common;
pub mod core;
pub mod hp;
pub mod multiplier;
