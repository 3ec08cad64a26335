//! Entropy functionals: `Ent_μ(f)`, relative entropy, Shannon entropy, the
//! conditional decomposition along a subset, and the identity linking mutual
//! information of the marginals of `fμ` to entropies of marginal densities.
//!
//! All sums are compensated.

use crate::numeric::{kahan_sum, xlog_ratio, xlogx, KahanSum};
use crate::space::{Density, Distribution, SiteSubset};
use crate::{Error, Result};

/// `Ent(f) = μ[f log f] − μ[f] log μ[f]` for raw vectors.
pub fn ent_raw(f: &[f64], mu: &[f64]) -> f64 {
    let mut flogf = KahanSum::new();
    let mut mass = KahanSum::new();
    for (&v, &m) in f.iter().zip(mu) {
        flogf.add(m * xlogx(v));
        mass.add(m * v);
    }
    (flogf.value() - xlogx(mass.value())).max(0.0)
}

pub fn ent(f: &Density) -> f64 {
    ent_raw(f.values(), f.measure().weights())
}

/// `H(p|q) = Σ p log(p/q)`; `+∞` when `p` charges a zero of `q`.
pub fn relative_entropy_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (&a, &b) in p.iter().zip(q) {
        let t = xlog_ratio(a, b);
        if t.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(t);
    }
    acc.value().max(0.0)
}

pub fn relative_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.space() != q.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(relative_entropy_raw(p.weights(), q.weights()))
}

/// `−Σ p log p`.
pub fn shannon(p: &[f64]) -> f64 {
    -kahan_sum(p.iter().map(|&x| xlogx(x)))
}

pub fn total_variation_raw(p: &[f64], q: &[f64]) -> f64 {
    0.5 * kahan_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs()))
}

/// `(Ent(f_A), μ[Ent(f | A)])`; the two parts add up to `Ent(f)`.
///
/// The second part is evaluated directly: for every `σ_A`, the entropy of
/// `σ_{Aᶜ} ↦ f(σ_A σ_{Aᶜ})` under `μ_{Aᶜ}`, averaged over `μ_A`.
pub fn conditional_decomposition(f: &Density, a: SiteSubset) -> (f64, f64) {
    let space = f.space();
    let proj_a = space.projection(a);
    let mu = f.measure().weights();
    let mu_a = f.measure().restrict(a);
    let m = proj_a.sub_space().total_size();
    // μ_{Aᶜ}(σ_{Aᶜ}) = μ(σ)/μ_A(σ_A)
    let mut flogf = vec![KahanSum::new(); m];
    let mut mass = vec![KahanSum::new(); m];
    for (x, &v) in f.values().iter().enumerate() {
        let y = proj_a.index(x);
        let cond = mu[x] / mu_a.prob(y);
        flogf[y].add(cond * xlogx(v));
        mass[y].add(cond * v);
    }
    let fa: Vec<f64> = mass.iter().map(KahanSum::value).collect();
    let outer = ent_raw(&fa, mu_a.weights());
    let inner = kahan_sum(
        (0..m).map(|y| mu_a.prob(y) * (flogf[y].value() - xlogx(mass[y].value())).max(0.0)),
    );
    (outer, inner)
}

/// `Ent(f_A)` for every subset, indexed by bitmask.
pub fn subset_entropies(f: &Density) -> Vec<f64> {
    let n = f.space().num_sites();
    SiteSubset::all(n).map(|a| ent(&f.marginal(a))).collect()
}

/// Both sides of `Σ_{i∈A} H(Zᵢ) − H(Z_A) = Ent(f_A) − Σ_{i∈A} Ent(fᵢ)`, where
/// `Z ~ fμ`. The left side uses Shannon entropies of the marginals of `fμ`,
/// the right side entropies of marginal densities.
pub fn shannon_bridge(f: &Density, a: SiteSubset) -> (f64, f64) {
    let p = f.to_distribution();
    let n = f.space().num_sites();
    let h_a = shannon(p.marginal(a).weights());
    let h_sites: f64 = a.iter().map(|i| shannon(&p.site_marginal(i))).sum();
    let lhs = h_sites - h_a;
    let ent_a = ent(&f.marginal(a));
    let ent_sites: f64 = a.iter().map(|i| ent(&f.marginal(SiteSubset::singleton(i, n)))).sum();
    (lhs, ent_a - ent_sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ProductMeasure, ProductSpace};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(sizes: &[usize], seed: u64) -> Density {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = ProductMeasure::new(
            sizes
                .iter()
                .map(|&a| {
                    let raw: Vec<f64> = (0..a).map(|_| rng.random_range(0.1..1.0)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / t).collect()
                })
                .collect(),
        )
        .unwrap();
        let m = mu.space().total_size();
        let g: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
        Density::normalized(mu, g).unwrap()
    }

    #[test]
    fn ent_examples() {
        let s = ProductSpace::binary(1).unwrap();
        let mu = ProductMeasure::uniform(&s);
        assert_eq!(ent(&Density::constant(mu.clone()).unwrap()), 0.0);
        let f = Density::new(mu, vec![2.0, 0.0]).unwrap();
        assert!((ent(&f) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ent_equals_relative_entropy_for_normalized_f() {
        let f = random_density(&[2, 3, 2], 5);
        let h = relative_entropy(&f.to_distribution(), &f.measure().to_distribution()).unwrap();
        assert!((ent(&f) - h).abs() < 1e-13);
    }

    #[test]
    fn relative_entropy_examples() {
        let s = ProductSpace::new(vec![5]).unwrap();
        let u = Distribution::uniform(s.clone());
        assert_eq!(relative_entropy(&u, &u).unwrap(), 0.0);
        let d = Distribution::point_mass(s.clone(), 2);
        assert!((relative_entropy(&d, &u).unwrap() - 5f64.ln()).abs() < 1e-15);
        assert!(relative_entropy(&u, &d).unwrap().is_infinite());
    }

    #[test]
    fn decomposition_edges() {
        let f = random_density(&[2, 2, 3], 9);
        let e = ent(&f);
        let (outer, inner) = conditional_decomposition(&f, SiteSubset::full(3));
        assert!((outer - e).abs() < 1e-13 && inner.abs() < 1e-13);
        let (outer, inner) = conditional_decomposition(&f, SiteSubset::empty(3));
        assert!(outer.abs() < 1e-13 && (inner - e).abs() < 1e-13);
    }

    #[test]
    fn bridge_vanishes_for_products() {
        let mu = ProductMeasure::new(vec![vec![0.4, 0.6], vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let s = mu.space().clone();
        // product of site factors with μᵢ-mean one
        let f1 = [0.5, 1.0 / 0.6 * (1.0 - 0.2)];
        let f2 = [2.0, (1.0 - 0.6) / 0.7];
        let values: Vec<f64> = (0..8).map(|x| f1[s.digit(x, 0)] * f2[s.digit(x, 1)]).collect();
        let f = Density::new(mu, values).unwrap();
        for a in SiteSubset::all(3) {
            let (l, r) = shannon_bridge(&f, a);
            assert!(l.abs() < 1e-13 && r.abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn decomposition_sums_to_ent(seed in 0u64..300, bits in 0u64..16) {
            let f = random_density(&[2, 3, 2, 2], seed);
            let a = SiteSubset::new(bits, 4).unwrap();
            let (outer, inner) = conditional_decomposition(&f, a);
            prop_assert!(outer >= 0.0 && inner >= 0.0);
            prop_assert!((outer + inner - ent(&f)).abs() < 1e-12);
            // Ent(f_A) computed independently
            prop_assert!((outer - ent(&f.marginal(a))).abs() < 1e-12);
        }

        #[test]
        fn bridge_sides_agree(seed in 0u64..300, bits in 0u64..8) {
            let f = random_density(&[2, 3, 3], seed);
            let (l, r) = shannon_bridge(&f, SiteSubset::new(bits, 3).unwrap());
            prop_assert!((l - r).abs() < 1e-10);
        }

        #[test]
        fn tensorization_and_subadditivity(seed in 0u64..300, bits in 0u64..16) {
            let f = random_density(&[2, 2, 3, 2], seed);
            let a = SiteSubset::new(bits, 4).unwrap();
            let e = ent(&f);
            let (_, inner_a) = conditional_decomposition(&f, a);
            let (_, inner_c) = conditional_decomposition(&f, a.complement());
            prop_assert!(e <= inner_a + inner_c + 1e-12);
            let ea = ent(&f.marginal(a));
            let ec = ent(&f.marginal(a.complement()));
            prop_assert!(ea + ec <= e + 1e-12);
            prop_assert!(ea <= e + 1e-12);
        }

        #[test]
        fn pinsker(seed in 0u64..300) {
            let f = random_density(&[3, 2, 2], seed);
            let p = f.to_distribution();
            let q = f.measure().to_distribution();
            let h = relative_entropy(&p, &q).unwrap();
            prop_assert!(total_variation_raw(p.weights(), q.weights()) <= (h / 2.0).sqrt() + 1e-15);
        }

        #[test]
        fn recombination_identity(seed in 0u64..200, bits in 0u64..8) {
            // μ[f_A f_{Aᶜ} log f] = −H(p_A⊗p_{Aᶜ}|p) + H(p_A|μ_A) + H(p_{Aᶜ}|μ_{Aᶜ})
            let f = random_density(&[2, 3, 2], seed);
            let a = SiteSubset::new(bits, 3).unwrap();
            let mu = f.measure().weights();
            let fa = f.lifted_marginal(a);
            let fc = f.lifted_marginal(a.complement());
            let lhs: f64 = (0..mu.len()).map(|x| mu[x] * fa[x] * fc[x] * f.value(x).ln()).sum();
            let p = f.to_distribution();
            let q = p.product_of_marginals(a);
            let mu_d = f.measure().to_distribution();
            let rhs = -relative_entropy(&q, &p).unwrap()
                + relative_entropy(&p.marginal(a), &mu_d.marginal(a)).unwrap()
                + relative_entropy(&p.marginal(a.complement()), &mu_d.marginal(a.complement())).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-11, "{} vs {}", lhs, rhs);
        }
    }
}
