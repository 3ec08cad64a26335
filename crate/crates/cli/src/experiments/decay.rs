//! Relative entropy decay of the recombination flow and of its discrete map.

use rand::Rng;
use rayon::prelude::*;
use recomb_core::dynamics::{evolve_continuous_with, evolve_discrete, IntegrationOptions, RecombinationOperator};
use recomb_core::inequality::{discrete_decay_check, kappa_theoretical, sharp_test_closed_form, sharp_test_density};
use recomb_core::sampling::{random_distribution, rng_for};
use recomb_core::{ProductMeasure, ProductSpace};

use super::{all_laws, entropy_derivative, law_label, Ctx};
use crate::config::EntropyDecaySpec;
use crate::report::{num, opt, Outcome, Table};
use crate::Result;

/// Slack on `H(p_t|π) ≤ e^{−κt}H(p|π)`.
pub const CONTINUOUS_SLACK: f64 = 1e-8;
/// Slack on `H(p⁽ᵏ⁾|π) ≤ (1−κ)ᵏH(p|π)`.
pub const DISCRETE_SLACK: f64 = 1e-12;
const DERIVATIVE_STEP: f64 = 1e-4;

struct TraceSummary {
    /// Largest `H(p_t|π) − e^{−κt}H(p|π)` over snapshots.
    continuous_excess: f64,
    discrete_excess: f64,
    h0: f64,
    h_end: f64,
}

pub(super) fn run(spec: &EntropyDecaySpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let space = ProductSpace::binary(spec.n)?;
    let laws = all_laws(spec.n, &spec.qs)?;
    let mut t = Table::new(
        "random_starts",
        &["model", "q", "sample", "kappa", "h0", "h_end", "continuous_excess", "discrete_excess"],
    );
    let mut cont_worst = f64::NEG_INFINITY;
    let mut disc_worst = f64::NEG_INFINITY;
    for law in &laws {
        let kappa = kappa_theoretical(law)?;
        let seed = ctx.seed(&law_label(law), 0);
        let rows: Vec<TraceSummary> = (0..spec.samples as u64)
            .into_par_iter()
            .map(|i| -> Result<TraceSummary> {
                let mut rng = rng_for(seed, i);
                let alpha = 10f64.powf(rng.random_range(-1.0..1.0));
                let p = random_distribution(&mut rng, &space, alpha);
                let trace = evolve_continuous_with(&p, law, IntegrationOptions::new(spec.t_end).dt(spec.dt).cadence(1))?;
                let h0 = trace.relative_entropy[0];
                let continuous_excess = trace
                    .times
                    .iter()
                    .zip(&trace.relative_entropy)
                    .map(|(t, h)| h - (-kappa * t).exp() * h0)
                    .fold(f64::NEG_INFINITY, f64::max);
                let disc = evolve_discrete(&p, law, spec.discrete_steps)?;
                let discrete_excess = disc
                    .relative_entropy
                    .iter()
                    .enumerate()
                    .map(|(k, h)| h - (1.0 - kappa).powi(k as i32) * h0)
                    .fold(f64::NEG_INFINITY, f64::max);
                let h_end = *trace.relative_entropy.last().expect("nonempty trace");
                Ok(TraceSummary { continuous_excess, discrete_excess, h0, h_end })
            })
            .collect::<Result<_>>()?;
        for (i, r) in rows.iter().enumerate() {
            cont_worst = cont_worst.max(r.continuous_excess);
            disc_worst = disc_worst.max(r.discrete_excess);
            t.push(vec![
                law.name().into(),
                opt(law.q()),
                i.to_string(),
                num(kappa),
                num(r.h0),
                num(r.h_end),
                num(r.continuous_excess),
                num(r.discrete_excess),
            ]);
        }
    }
    out.tables.push(t);
    out.check(
        format!("H(p_t|π) ≤ e^(−κt)H(p|π) + {CONTINUOUS_SLACK:e} at every snapshot"),
        cont_worst <= CONTINUOUS_SLACK,
        format!("largest excess {cont_worst:e}"),
    );
    out.check(
        format!("H(p⁽ᵏ⁾|π) ≤ (1−κ)ᵏH(p|π) + {DISCRETE_SLACK:e} for k ≤ {}", spec.discrete_steps),
        disc_worst <= DISCRETE_SLACK,
        format!("largest excess {disc_worst:e}"),
    );

    // sharp test density: first-step sandwich and the initial slope
    let n = spec.sharp_n;
    let p = sharp_test_density(n)?.to_distribution();
    let pi = ProductMeasure::from_marginals(&p);
    let mut s = Table::new(
        "sharp_sandwich",
        &["n", "model", "q", "kappa", "gamma", "h0", "h1", "lower", "upper", "slope", "slope_bound"],
    );
    let mut failures = Vec::new();
    for law in all_laws(n, &spec.qs)? {
        let label = law_label(&law);
        let c = discrete_decay_check(&p, &law)?;
        let r = sharp_test_closed_form(n, &law)?;
        let gamma = c.gamma.expect("sharp density has full support");
        let (lower, upper) = ((1.0 - gamma) * c.h0, c.upper.expect("named model"));
        if !(c.h1 <= upper + DISCRETE_SLACK) {
            failures.push(format!("{label}: H(p⁽¹⁾) = {} > (1−κ)H = {upper}", c.h1));
        }
        if !(c.h1 >= lower - DISCRETE_SLACK) {
            failures.push(format!("{label}: H(p⁽¹⁾) = {} < (1−γ)H = {lower}", c.h1));
        }
        if ((gamma - r.ratio) / r.ratio).abs() > 1e-8 {
            failures.push(format!("{label}: observed D/Ent {gamma} differs from the closed form {}", r.ratio));
        }
        let op = RecombinationOperator::new(p.space(), &law)?;
        let slope = entropy_derivative(&p, pi.weights(), |x| op.field(x), DERIVATIVE_STEP)?;
        // d/dt H at 0⁺ equals −D = −γH; the difference quotient carries O(h²) error
        if (slope + gamma * c.h0).abs() > 1e-6 * gamma * c.h0 {
            failures.push(format!("{label}: dH/dt at 0 is {slope}, expected −γH = {}", -gamma * c.h0));
        }
        s.push(vec![
            n.to_string(),
            law.name().into(),
            opt(law.q()),
            opt(c.kappa),
            num(gamma),
            num(c.h0),
            num(c.h1),
            num(lower),
            num(upper),
            num(slope),
            num(-gamma * c.h0),
        ]);
    }
    out.tables.push(s);
    out.check(
        format!("sharp density at n={n}: (1−γ)H ≤ H(p⁽¹⁾|π) ≤ (1−κ)H and dH/dt(0⁺) = −γH"),
        failures.is_empty(),
        if failures.is_empty() { "sandwich holds for every model".into() } else { failures.join("; ") },
    );
    Ok(())
}
