//! Reference programs.

pub mod level_crossing;
pub mod sokoban;
