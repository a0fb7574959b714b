//! Verifies the level crossing with must-finish requesters and prints the
//! freight-starvation counterexample, then verifies the version with the
//! scheduling fix threads.

use bp_liveness::models::level_crossing::{
    level_crossing, level_crossing_with_fixes, LevelCrossingConfig,
};
use bp_liveness::verifier::{summary, verify};
use bp_liveness::ExploreLimits;

fn main() -> bp_liveness::Result<()> {
    let config = LevelCrossingConfig::motivating();
    let report = verify(&level_crossing(&config)?, ExploreLimits::default())?;
    println!("{report}");
    println!("primary witnesses:\n{}", summary(&report));

    let fixed = verify(
        &level_crossing_with_fixes(&config)?,
        ExploreLimits::default(),
    )?;
    println!("with fixes:\n{}", summary(&fixed));
    Ok(())
}
