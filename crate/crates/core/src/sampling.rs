//! Random test objects: distributions, product measures, and densities in
//! `S_μ` (unit mass, all single-site marginal densities equal to one).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};

use crate::space::{ipf_fit, ipf_project, Density, Distribution, ProductMeasure, ProductSpace};
use crate::{Error, Result};

/// IPF settings used for random `S_μ` samples.
pub const IPF_TOL: f64 = 1e-13;
pub const IPF_MAX_ITER: usize = 20_000;

/// Per-sample seed derived from a master seed (splitmix64 finalizer).
pub fn sample_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(master, index))
}

/// A Dirichlet(α, …, α) draw of length `k`.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let raw: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 && total.is_finite() {
            return raw.into_iter().map(|v| v / total).collect();
        }
    }
}

/// A random full-support distribution on Ω (Dirichlet(α) weights, floored).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, space: &ProductSpace, alpha: f64) -> Distribution {
    let w: Vec<f64> = dirichlet(rng, space.total_size(), alpha).into_iter().map(|v| v + 1e-14).collect();
    Distribution::from_unnormalized(space.clone(), w).expect("positive weights")
}

/// A random strictly positive product measure; every site probability is at
/// least `floor / aᵢ`.
pub fn random_product_measure<R: Rng + ?Sized>(rng: &mut R, space: &ProductSpace, floor: f64) -> ProductMeasure {
    let sites = space
        .sizes()
        .iter()
        .map(|&a| {
            let d = dirichlet(rng, a, 1.0);
            d.into_iter().map(|v| (1.0 - floor) * v + floor / a as f64).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    // renormalize exactly
    let sites = sites
        .into_iter()
        .map(|s| {
            let t: f64 = s.iter().sum();
            s.into_iter().map(|v| v / t).collect()
        })
        .collect();
    ProductMeasure::new(sites).expect("valid site vectors")
}

/// A random positive function on Ω, alternating between Dirichlet tensors with
/// random concentration and log-normal tensors with random spread.
pub fn random_positive_function<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<f64> {
    if rng.random::<bool>() {
        let alpha = 10f64.powf(rng.random_range(-1.0..0.5));
        dirichlet(rng, size, alpha).into_iter().map(|v| v * size as f64 + 1e-4).collect()
    } else {
        let spread = rng.random_range(0.2..3.0);
        (0..size)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                (spread * z).exp()
            })
            .collect()
    }
}

/// Draws per call of [`random_s_mu_density`] before giving up.
pub const IPF_ATTEMPTS: usize = 16;

/// A random density in `S_μ`, obtained by IPF-projecting a random positive
/// function. Near-degenerate draws on which IPF stalls are redrawn.
pub fn random_s_mu_density<R: Rng + ?Sized>(rng: &mut R, measure: &ProductMeasure) -> Result<Density> {
    let mut last = None;
    for _ in 0..IPF_ATTEMPTS {
        let g = random_positive_function(rng, measure.space().total_size());
        match ipf_project(&g, measure, measure.sites(), IPF_TOL, IPF_MAX_ITER) {
            Err(e @ Error::IpfNonConvergence { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Weights of a random distribution `p = IPF(g·ref)` with the given
/// single-site marginals, for an arbitrary positive reference `ref`.
pub fn random_with_marginals<R: Rng + ?Sized>(
    rng: &mut R,
    space: &ProductSpace,
    reference: &[f64],
    targets: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let mut last = None;
    for _ in 0..IPF_ATTEMPTS {
        let start: Vec<f64> =
            random_positive_function(rng, reference.len()).iter().zip(reference).map(|(a, b)| a * b).collect();
        match ipf_fit(space, &start, targets, IPF_TOL, IPF_MAX_ITER) {
            Err(e @ Error::IpfNonConvergence { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|i| sample_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(sample_seed(7, 3), a[3]);
        assert_ne!(sample_seed(8, 3), a[3]);
    }

    #[test]
    fn dirichlet_is_normalized() {
        let mut rng = rng_for(1, 0);
        for alpha in [0.1, 1.0, 5.0] {
            let d = dirichlet(&mut rng, 17, alpha);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn s_mu_samples_have_unit_marginals() {
        let space = ProductSpace::new(vec![3, 2, 3]).unwrap();
        for i in 0..50 {
            let mut rng = rng_for(42, i);
            let mu = random_product_measure(&mut rng, &space, 0.2);
            assert!(mu.is_positive());
            let f = random_s_mu_density(&mut rng, &mu).unwrap();
            assert!(f.in_s_mu(1e-11), "deviation {}", f.max_site_deviation());
        }
    }
}
