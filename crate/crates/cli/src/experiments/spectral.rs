//! Spectrum of the linearized kernel of binary uniform crossover.

use recomb_core::rqs::{linearize, spectrum, ConservedBasis, RecombinationGenerator};
use recomb_core::{CrossoverLaw, ProductMeasure, ProductSpace};

use crate::config::SpectralGapSpec;
use crate::report::{num, opt, Outcome, Table};
use crate::Result;

pub const REST_BOUND: f64 = 0.25;
pub const REST_TOL: f64 = 1e-8;

pub(super) fn run(spec: &SpectralGapSpec, out: &mut Outcome) -> Result<()> {
    let mut summary = Table::new(
        "summary",
        &["n", "multiplicity_one", "multiplicity_half", "largest_rest", "complement_max", "conserved_residual"],
    );
    let mut values = Table::new("eigenvalues", &["n", "index", "eigenvalue"]);
    let mut failures = Vec::new();
    for n in 1..=spec.max_n {
        let space = ProductSpace::binary(n)?;
        let mu = ProductMeasure::uniform(&space);
        let g = RecombinationGenerator::new(&space, &CrossoverLaw::uniform(n)?)?;
        let k = linearize(&g, &mu)?;
        let rep = spectrum(&k, &ConservedBasis::single_site(&mu))?;
        // eigenvalues come sorted in descending order: 1, then ½ n times, then the rest
        let rest = rep.eigenvalues.get(n + 1).copied();
        if rep.multiplicity_one != 1 {
            failures.push(format!("n={n}: eigenvalue 1 has multiplicity {}", rep.multiplicity_one));
        }
        if rep.multiplicity_half != n {
            failures.push(format!("n={n}: eigenvalue ½ has multiplicity {}", rep.multiplicity_half));
        }
        if rest.is_some_and(|r| r > REST_BOUND + REST_TOL) || rep.complement_max.is_some_and(|r| r > REST_BOUND + REST_TOL)
        {
            failures.push(format!("n={n}: remaining eigenvalue {rest:?} above ¼"));
        }
        summary.push(vec![
            n.to_string(),
            rep.multiplicity_one.to_string(),
            rep.multiplicity_half.to_string(),
            opt(rest),
            opt(rep.complement_max),
            num(rep.conserved_residual),
        ]);
        for (i, v) in rep.eigenvalues.iter().enumerate() {
            values.push(vec![n.to_string(), i.to_string(), num(*v)]);
        }
    }
    out.tables.push(summary);
    out.tables.push(values);
    out.check(
        format!("spectrum {{1 (×1), ½ (×n), rest ≤ ¼ + {REST_TOL:e}}} for n ≤ {}", spec.max_n),
        failures.is_empty(),
        if failures.is_empty() { "all sizes match".into() } else { failures.join("; ") },
    );
    Ok(())
}
