//! Second-order behaviour of Ent and D near equilibrium: for `f = 1 + εφ`,
//! `ε⁻²Ent(f) → ½μ[φ²]` and `ε⁻²D(f,f) → −μ[(Γφ)φ]`.
//!
//! Both quotients carry an O(ε) error (the cubic terms), so two step sizes
//! are combined by first-order Richardson extrapolation.

use recomb_core::entropy::ent_raw;
use recomb_core::ising::{gibbs, FoldingGenerator, IsingGenerator, IsingModel};
use recomb_core::rqs::linear::{gamma_matrix_raw, inner, linear_dissipation, ConservedBasis};
use recomb_core::rqs::{entropy_production_raw, RecombinationGenerator};
use recomb_core::sampling::{random_product_measure, rng_for};
use recomb_core::{CrossoverLaw, PairGenerator, ProductSpace};

use super::{all_laws, law_label, Ctx};
use crate::config::LinearizationSpec;
use crate::report::{num, Outcome, Table};
use crate::Result;

pub const REL_TOL: f64 = 1e-4;

/// `(e₁·q(e₂) − e₂·q(e₁))/(e₁ − e₂)`, exact for `q(e) = a + b·e`.
pub fn richardson(e1: f64, q1: f64, e2: f64, q2: f64) -> f64 {
    (e1 * q2 - e2 * q1) / (e1 - e2)
}

/// Single-site indicator functions of a binary or mixed space, plus constants.
fn single_site_functions(space: &ProductSpace) -> Vec<Vec<f64>> {
    let m = space.total_size();
    let mut fns = vec![vec![1.0; m]];
    for i in 0..space.num_sites() {
        for a in 1..space.size(i) {
            fns.push((0..m).map(|x| f64::from(space.digit(x, i) == a)).collect());
        }
    }
    fns
}

struct Target {
    label: String,
    generator: Box<dyn PairGenerator>,
    mu: Vec<f64>,
}

fn targets(spec: &LinearizationSpec, ctx: &Ctx) -> Result<Vec<Target>> {
    let n = spec.n;
    let space = ProductSpace::binary(n)?;
    let mu = random_product_measure(&mut rng_for(ctx.seed("measure", 0), 0), &space, 0.1);
    let mut out = Vec::new();
    for law in all_laws(n, &[0.25])? {
        out.push(Target {
            label: format!("recombination/{}", law_label(&law)),
            generator: Box::new(RecombinationGenerator::new(&space, &law)?),
            mu: mu.weights().to_vec(),
        });
    }
    let model = IsingModel::cycle(n, 0.5)?.with_fields(&vec![0.2; n])?;
    let g = gibbs(&model).into_weights();
    out.push(Target {
        label: "ising/single_site".into(),
        generator: Box::new(IsingGenerator::new(&model, &CrossoverLaw::single_site(n)?)?),
        mu: g.clone(),
    });
    out.push(Target { label: "folding".into(), generator: Box::new(FoldingGenerator::new(&model)), mu: g });
    Ok(out)
}

pub(super) fn run(spec: &LinearizationSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let [e1, e2] = spec.epsilons;
    let mut t = Table::new("samples", &["generator", "sample", "ent_limit", "ent_target", "d_limit", "d_target"]);
    let mut worst_ent = 0.0f64;
    let mut worst_d = 0.0f64;
    for (ti, target) in targets(spec, ctx)?.into_iter().enumerate() {
        let g = target.generator.as_ref();
        let mu = &target.mu;
        let basis = ConservedBasis::from_functions(mu, single_site_functions(g.space()));
        let gamma = gamma_matrix_raw(g, mu)?;
        let seed = ctx.seed(&target.label, ti as u64);
        for i in 0..spec.samples as u64 {
            let mut phi = basis.random_orthogonal(&mut rng_for(seed, i));
            // keep 1 + εφ positive for both step sizes
            let scale = phi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            phi.iter_mut().for_each(|x| *x /= scale);
            let f = |e: f64| -> Vec<f64> { phi.iter().map(|x| 1.0 + e * x).collect() };
            let ent_q = |e: f64| ent_raw(&f(e), mu) / (e * e);
            let d_q = |e: f64| -> Result<f64> {
                let fe = f(e);
                Ok(entropy_production_raw(&fe, &fe, mu, g)? / (e * e))
            };
            let ent_limit = richardson(e1, ent_q(e1), e2, ent_q(e2));
            let d_limit = richardson(e1, d_q(e1)?, e2, d_q(e2)?);
            let ent_target = 0.5 * inner(mu, &phi, &phi);
            let d_target = linear_dissipation(&gamma, mu, &phi);
            worst_ent = worst_ent.max(((ent_limit - ent_target) / ent_target).abs());
            worst_d = worst_d.max(((d_limit - d_target) / d_target).abs());
            t.push(vec![target.label.clone(), i.to_string(), num(ent_limit), num(ent_target), num(d_limit), num(d_target)]);
        }
    }
    out.tables.push(t);
    out.check(
        format!("ε⁻²Ent → ½μ[φ²] within {REL_TOL:e} relative"),
        worst_ent <= REL_TOL,
        format!("largest relative error {worst_ent:e}"),
    );
    out.check(
        format!("ε⁻²D → −μ[(Γφ)φ] within {REL_TOL:e} relative"),
        worst_d <= REL_TOL,
        format!("largest relative error {worst_d:e}"),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_linear_term() {
        let q = |e: f64| 2.0 + 3.0 * e;
        assert!((richardson(1e-2, q(1e-2), 1e-3, q(1e-3)) - 2.0).abs() < 1e-14);
    }
}
