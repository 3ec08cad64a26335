//! Properties that tie several modules together: the recombination operator,
//! its pair-generator form, the entropy functionals and the equilibrium.

use proptest::prelude::*;
use recomb_core::dynamics::{equilibrium_of, evolve_continuous, psi_step, recombination_field};
use recomb_core::entropy::{ent, relative_entropy};
use recomb_core::inequality::kappa_theoretical;
use recomb_core::rqs::{drift, entropy_production, RecombinationGenerator};
use recomb_core::sampling::{random_distribution, rng_for};
use recomb_core::space::Projection;
use recomb_core::{CrossoverLaw, Density, Distribution, ProductMeasure, ProductSpace};

fn laws(n: usize) -> Vec<CrossoverLaw> {
    vec![
        CrossoverLaw::single_site(n).unwrap(),
        CrossoverLaw::one_point(n).unwrap(),
        CrossoverLaw::uniform(n).unwrap(),
        CrossoverLaw::bernoulli(n, 0.3).unwrap(),
    ]
}

fn sizes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 2..=4)
}

/// `Σ_A ν(A)(p_A ⊗ p_{Aᶜ} − p)` summed straight from the marginals.
fn naive_field(p: &Distribution, law: &CrossoverLaw) -> Vec<f64> {
    let space = p.space();
    let mut out = vec![0.0; space.total_size()];
    for (a, w) in law.enumerate_support().unwrap() {
        let (pa, pc) = (Projection::new(space, a), Projection::new(space, a.complement()));
        let (ma, mc) = (p.marginal(a), p.marginal(a.complement()));
        for (x, o) in out.iter_mut().enumerate() {
            *o += w * (ma.prob(pa.index(x)) * mc.prob(pc.index(x)) - p.prob(x));
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn field_matches_generator_drift_and_marginal_formula(sizes in sizes(), seed in any::<u64>()) {
        let space = ProductSpace::new(sizes).unwrap();
        let p = random_distribution(&mut rng_for(seed, 0), &space, 1.0);
        for law in laws(space.num_sites()) {
            let field = recombination_field(&p, &law).unwrap();
            let g = RecombinationGenerator::new(&space, &law).unwrap();
            prop_assert!(max_diff(&field, &drift(&g, p.weights())) < 1e-12);
            prop_assert!(max_diff(&field, &naive_field(&p, &law)) < 1e-12);
        }
    }

    #[test]
    fn psi_keeps_marginals_and_fixes_their_product(sizes in sizes(), seed in any::<u64>()) {
        let space = ProductSpace::new(sizes).unwrap();
        let p = random_distribution(&mut rng_for(seed, 0), &space, 0.5);
        let pi = equilibrium_of(&p).measure.to_distribution();
        for law in laws(space.num_sites()) {
            let next = psi_step(&p, &law).unwrap();
            for i in 0..space.num_sites() {
                prop_assert!(max_diff(&next.site_marginal(i), &p.site_marginal(i)) < 1e-12);
            }
            prop_assert!(max_diff(psi_step(&pi, &law).unwrap().weights(), pi.weights()) < 1e-14);
        }
    }

    #[test]
    fn relative_entropy_to_equilibrium_is_ent_of_the_density(sizes in sizes(), seed in any::<u64>()) {
        let space = ProductSpace::new(sizes).unwrap();
        let p = random_distribution(&mut rng_for(seed, 0), &space, 1.0);
        let mu = ProductMeasure::from_marginals(&p);
        let f = Density::from_distribution(&p, &mu).unwrap();
        let h = relative_entropy(&p, &mu.to_distribution()).unwrap();
        prop_assert!((h - ent(&f)).abs() < 1e-12 * (1.0 + h));
    }

    #[test]
    fn production_dominates_kappa_times_entropy(seed in any::<u64>()) {
        // D(f,f) ≥ κ·Ent(f) for densities with equilibrium μ
        let space = ProductSpace::binary(3).unwrap();
        let p = random_distribution(&mut rng_for(seed, 0), &space, 1.0);
        let mu = ProductMeasure::from_marginals(&p);
        let f = Density::from_distribution(&p, &mu).unwrap();
        for law in laws(3) {
            let g = RecombinationGenerator::new(&space, &law).unwrap();
            let d = entropy_production(&f, &f, &g).unwrap();
            let kappa = kappa_theoretical(&law).unwrap();
            prop_assert!(d >= kappa * ent(&f) - 1e-12, "{}: D {d} < κ·Ent {}", law.name(), kappa * ent(&f));
        }
    }
}

#[test]
fn continuous_flow_relaxes_to_product_of_marginals() {
    let space = ProductSpace::new(vec![2, 3, 2]).unwrap();
    let p = random_distribution(&mut rng_for(11, 0), &space, 0.7);
    let pi = equilibrium_of(&p).measure.to_distribution();
    for law in laws(3) {
        let trace = evolve_continuous(&p, &law, 30.0, 0.01).unwrap();
        assert!(trace.max_entropy_increase() <= 1e-12, "{}", law.name());
        let (h0, h) = (trace.relative_entropy[0], *trace.relative_entropy.last().unwrap());
        assert!(h <= (-kappa_theoretical(&law).unwrap() * 30.0).exp() * h0 + 1e-12, "{}", law.name());
        assert!(max_diff(trace.last().weights(), pi.weights()) < 1e-3, "{}", law.name());
    }
}
