//! Hand-derived gradients against central differences for every model and
//! objective.

use cible::train::gradcheck::{audit, GradCheckConfig};

fn main() -> cible::Result<()> {
    let rows = audit(&[0, 1], &GradCheckConfig::default())?;
    println!("{:<10} {:<22} {:>4} {:>8} {:>8} {:>10}", "model", "objective", "seed", "checked", "skipped", "max rel");
    for r in rows {
        println!(
            "{:<10} {:<22} {:>4} {:>8} {:>8} {:>10.2e}",
            r.model.name(),
            r.objective,
            r.seed,
            r.report.checked,
            r.report.skipped,
            r.report.max_rel_error
        );
    }
    Ok(())
}
