//! Builds the three liveness pattern threads over proposition events and
//! compares lasso liveness with each pattern's LTL formula.

use bp_liveness::patterns::{check_pattern, ltl, PatternKind};

fn main() -> bp_liveness::Result<()> {
    for kind in PatternKind::ALL {
        let (stem, cycle) = kind.default_bounds();
        let r = check_pattern(kind, stem, cycle)?;
        println!(
            "{kind:<22} {:<48} {:>4} states {:>7} lassos {:>7} live, agrees: {}",
            ltl::parse(kind.formula())?.to_string(),
            r.states,
            r.lassos,
            r.live,
            r.agrees()
        );
    }
    Ok(())
}
