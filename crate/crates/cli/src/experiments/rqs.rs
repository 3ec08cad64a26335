//! Reversibility, symmetry, Φ under symmetrization, D ≥ 0, the H-theorem
//! identity and conserved quantities, for recombination, Ising and folding
//! generators.

use rand::Rng;
use recomb_core::ising::{gibbs, ExternalField, FoldingGenerator, IsingGenerator, IsingModel, Pin};
use recomb_core::rqs::{
    all_pairs, conserved_check, drift, entropy_production_raw, evolve, pair_symmetry_defect, phi_matrix,
    reversibility_defect, RecombinationGenerator, Symmetrized,
};
use recomb_core::dynamics::IntegrationOptions;
use recomb_core::sampling::{random_distribution, random_product_measure, rng_for};
use recomb_core::{CrossoverLaw, Distribution, PairGenerator, ProductSpace};

use super::{entropy_derivative, law_label, max_abs_diff, Ctx};
use crate::config::RqsAxiomsSpec;
use crate::report::{num, Outcome, Table};
use crate::Result;

pub const DEFECT_TOL: f64 = 1e-12;
pub const CONSERVED_TOL: f64 = 1e-8;
/// `|dH/dt + D| ≤ DERIVATIVE_FACTOR · h²` for the central difference with step h.
pub const DERIVATIVE_FACTOR: f64 = 10.0;
/// Mass spread uniformly over Ω in the random test states.
const STATE_FLOOR: f64 = 0.2;

/// One generator under test: its reversible measure and a stationary state.
struct Case {
    label: String,
    generator: Box<dyn PairGenerator>,
    mu: Vec<f64>,
    rho: Distribution,
}

fn ising_models(beta: f64) -> Result<Vec<(String, IsingModel)>> {
    let pinned = IsingModel::new(
        4,
        vec![(0, 1), (1, 2), (2, 3)],
        beta,
        vec![ExternalField::Finite(0.3), ExternalField::Pinned(Pin::Plus), ExternalField::Finite(-0.2), ExternalField::Finite(0.0)],
    )?;
    Ok(vec![
        (format!("path3(β={beta})"), IsingModel::path(3, beta)?),
        (format!("cycle4(β={beta})"), IsingModel::cycle(4, beta)?.with_fields(&[0.1, -0.4, 0.0, 0.25])?),
        (format!("complete4(β={beta})"), IsingModel::complete(4, beta)?),
        (format!("path4-pinned(β={beta})"), pinned),
    ])
}

fn cases(spec: &RqsAxiomsSpec, ctx: &Ctx) -> Result<Vec<Case>> {
    let mut cases = Vec::new();
    let space = ProductSpace::new(vec![2, 3, 2])?;
    let mut rng = rng_for(ctx.seed("measures", 0), 0);
    for law in super::all_laws(3, &[0.25])? {
        let mu = random_product_measure(&mut rng, &space, 0.05);
        let rho = random_product_measure(&mut rng, &space, 0.05).to_distribution();
        cases.push(Case {
            label: format!("recombination/{}", law_label(&law)),
            generator: Box::new(RecombinationGenerator::new(&space, &law)?),
            mu: mu.weights().to_vec(),
            rho,
        });
    }
    for &beta in &spec.betas {
        for (name, model) in ising_models(beta)? {
            let k = model.num_free();
            let mu = gibbs(&model).into_weights();
            // any field-modified Gibbs measure is stationary
            let h: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rho = gibbs(&model.with_fields(&h)?);
            for law in [CrossoverLaw::single_site(k)?, CrossoverLaw::uniform(k)?, CrossoverLaw::one_point(k)?] {
                cases.push(Case {
                    label: format!("ising/{name}/{}", law_label(&law)),
                    generator: Box::new(IsingGenerator::new(&model, &law)?),
                    mu: mu.clone(),
                    rho: rho.clone(),
                });
            }
            cases.push(Case {
                label: format!("folding/{name}"),
                generator: Box::new(FoldingGenerator::new(&model)),
                mu: mu.clone(),
                rho,
            });
        }
    }
    Ok(cases)
}

#[derive(Default)]
struct Measured {
    reversibility: f64,
    symmetry: f64,
    phi_gap: f64,
    min_production: f64,
    derivative_error: f64,
    /// The same at step h/2; about a quarter of the above.
    derivative_error_half: f64,
    conserved_drift: f64,
}

fn measure(case: &Case, spec: &RqsAxiomsSpec, seed: u64) -> Result<Measured> {
    let g = case.generator.as_ref();
    let m = case.mu.len();
    let space = g.space().clone();
    let sym = Symmetrized::new(g);
    let mut out = Measured {
        reversibility: reversibility_defect(g, &case.mu, all_pairs(m)),
        symmetry: pair_symmetry_defect(g, all_pairs(m)),
        min_production: f64::INFINITY,
        ..Default::default()
    };
    for i in 0..spec.samples as u64 {
        let mut rng = rng_for(seed, i);
        // a uniform floor keeps the higher derivatives of H moderate
        let raw = random_distribution(&mut rng, &space, 1.0);
        let floor = STATE_FLOOR / m as f64;
        let p = Distribution::new(space.clone(), raw.weights().iter().map(|w| (1.0 - STATE_FLOOR) * w + floor).collect())?;
        out.phi_gap = out.phi_gap.max(max_abs_diff(&phi_matrix(g, p.weights()), &phi_matrix(&sym, p.weights())));
        let f: Vec<f64> = p.weights().iter().zip(&case.mu).map(|(a, b)| a / b).collect();
        let d = entropy_production_raw(&f, &f, &case.mu, g)?;
        out.min_production = out.min_production.min(d);
        let slope = entropy_derivative(&p, &case.mu, |x| drift(g, x), spec.step)?;
        out.derivative_error = out.derivative_error.max((slope + d).abs());
        let half = entropy_derivative(&p, &case.mu, |x| drift(g, x), spec.step / 2.0)?;
        out.derivative_error_half = out.derivative_error_half.max((half + d).abs());
        let trace = evolve(&p, g, &case.mu, IntegrationOptions::new(spec.t_end))?;
        out.conserved_drift = out.conserved_drift.max(conserved_check(&trace, &case.rho, &case.mu, g)?);
    }
    Ok(out)
}

pub(super) fn run(spec: &RqsAxiomsSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let cases = cases(spec, ctx)?;
    let mut t = Table::new(
        "generators",
        &["generator", "reversibility", "symmetry", "phi_gap", "min_production", "derivative_error", "derivative_error_half", "conserved_drift"],
    );
    let derivative_tol = DERIVATIVE_FACTOR * spec.step * spec.step;
    let mut failures: [Vec<String>; 7] = Default::default();
    for (i, case) in cases.iter().enumerate() {
        let r = measure(case, spec, ctx.seed("states", i as u64))?;
        let checks = [
            r.reversibility <= DEFECT_TOL,
            r.symmetry <= DEFECT_TOL,
            r.phi_gap <= DEFECT_TOL,
            r.min_production >= 0.0,
            r.derivative_error <= derivative_tol,
            // halving h divides a second-order error by four; tiny errors are roundoff
            r.derivative_error < 1e-11 || (3.0..=5.0).contains(&(r.derivative_error / r.derivative_error_half)),
            r.conserved_drift <= CONSERVED_TOL,
        ];
        for (k, ok) in checks.iter().enumerate() {
            if !ok {
                failures[k].push(case.label.clone());
            }
        }
        t.push(vec![
            case.label.clone(),
            num(r.reversibility),
            num(r.symmetry),
            num(r.phi_gap),
            num(r.min_production),
            num(r.derivative_error),
            num(r.derivative_error_half),
            num(r.conserved_drift),
        ]);
    }
    out.tables.push(t);
    let labels = [
        format!("reversibility μμG = μμG within {DEFECT_TOL:e}"),
        format!("pair exchange symmetry within {DEFECT_TOL:e}"),
        format!("Φ unchanged by symmetrization within {DEFECT_TOL:e}"),
        "D(f,f) ≥ 0".to_string(),
        format!("|dH/dt + D| ≤ {DERIVATIVE_FACTOR}·h² with h = {}", spec.step),
        "the dH/dt error shrinks fourfold when h halves".to_string(),
        format!("conserved quantities drift ≤ {CONSERVED_TOL:e}"),
    ];
    for (label, fails) in labels.into_iter().zip(failures) {
        let detail = if fails.is_empty() {
            format!("{} generators", cases.len())
        } else {
            format!("fails for {}", fails.join(", "))
        };
        out.check(label, fails.is_empty(), detail);
    }
    Ok(())
}
