pub mod align;
pub mod bench;
pub mod eval;
pub mod simulate;
