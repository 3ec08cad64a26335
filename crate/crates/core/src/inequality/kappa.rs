//! The generalized subadditivity constant
//! `κ(ν) = inf_{f∈S_μ} 1 − Σ_A ν(A)(Ent f_A + Ent f_{Aᶜ}) / Ent(f)`,
//! its closed forms for the named models, and random scans over `S_μ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::crossover::{CrossoverKind, CrossoverLaw};
use crate::entropy::subset_entropies;
use crate::sampling::{rng_for, random_s_mu_density};
use crate::space::{Density, ProductMeasure, SiteSubset};
use crate::{Error, Result};

/// Densities with `Ent(f)` below this are skipped by scans.
pub const MIN_SCAN_ENTROPY: f64 = 1e-12;

/// Closed-form `κ(ν)` for the named models.
pub fn kappa_theoretical(law: &CrossoverLaw) -> Result<f64> {
    let n = law.n();
    if n < 2 {
        return Err(Error::OutOfRange(format!("κ needs at least two sites, got {n}")));
    }
    let m = (n - 1) as f64;
    let ni = n as i32;
    Ok(match law.kind() {
        CrossoverKind::SingleSite => 1.0 / m,
        CrossoverKind::OnePoint => 1.0 / (n + 1) as f64,
        CrossoverKind::Uniform => (1.0 - 0.5f64.powi(ni - 1)) / m,
        CrossoverKind::Bernoulli { q } => (1.0 - (1.0 - q).powi(ni) - q.powi(ni)) / m,
        CrossoverKind::Explicit { .. } => {
            return Err(Error::NoClosedForm("κ of an explicit law; scan it instead".into()))
        }
    })
}

/// `Σ_A ν(A)(E[A] + E[Aᶜ])` from a table of marginal entropies.
pub fn generalized_subadditivity(entropies: &[f64], law: &CrossoverLaw) -> Result<f64> {
    let n = law.n();
    if entropies.len() != 1 << n {
        return Err(Error::SpaceMismatch);
    }
    let support = law.enumerate_support()?;
    Ok(support
        .iter()
        .map(|&(a, w)| w * (entropies[a.bits() as usize] + entropies[a.complement().bits() as usize]))
        .sum())
}

/// `(Σ_A ν(A)(Ent f_A + Ent f_{Aᶜ}), Ent(f))`.
pub fn subadditivity_ratio(f: &Density, law: &CrossoverLaw) -> Result<(f64, f64)> {
    if law.n() != f.space().num_sites() {
        return Err(Error::SpaceMismatch);
    }
    let table = subset_entropies(f);
    let lhs = generalized_subadditivity(&table, law)?;
    Ok((lhs, table[table.len() - 1]))
}

/// Density of `(Z₀,…,Z₀)`, `Z₀ ~ μ₀`, relative to `μ₀^{⊗n}`:
/// `f = μ₀(x)^{1−n}` on the diagonal, 0 elsewhere.
pub fn identical_copies_density(n: usize, base: &[f64]) -> Result<Density> {
    if base.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidDistribution("identical copies need a full-support base".into()));
    }
    let measure = ProductMeasure::new(vec![base.to_vec(); n])?;
    let space = measure.space().clone();
    let mut values = vec![0.0; space.total_size()];
    for (x, &m0) in base.iter().enumerate() {
        let idx = space.encode_values(&vec![x; n])?;
        values[idx] = m0.powi(1 - n as i32);
    }
    Density::new(measure, values)
}

/// Result of a random scan of the subadditivity ratio over `S_μ`.
#[derive(Clone, Debug, Serialize)]
pub struct KappaScan {
    pub model: String,
    pub n: usize,
    pub q: Option<f64>,
    /// `κ(ν)` when a closed form exists.
    pub kappa: Option<f64>,
    pub samples: usize,
    /// Largest `lhs/Ent(f)` over the random samples.
    pub max_ratio: f64,
    /// Sample index attaining `max_ratio`.
    pub witness_index: Option<u64>,
    /// Ratio at the identical-copies density, when μ is a product of equal factors.
    pub identical_copies_ratio: Option<f64>,
    #[serde(skip)]
    pub witness: Option<Density>,
}

impl KappaScan {
    /// `max(max_ratio, identical_copies_ratio) − (1 − κ)`; positive means a violation.
    pub fn excess(&self) -> Option<f64> {
        let k = self.kappa?;
        let best = self.identical_copies_ratio.map_or(self.max_ratio, |r| r.max(self.max_ratio));
        Some(best - (1.0 - k))
    }
}

/// Scans a single law; see [`kappa_scan_many`].
pub fn kappa_scan(law: &CrossoverLaw, measure: &ProductMeasure, samples: usize, seed: u64) -> Result<KappaScan> {
    Ok(kappa_scan_many(std::slice::from_ref(law), measure, samples, seed)?.remove(0))
}

/// Per-sample ratios `lhs/Ent(f)` of every law on `samples` densities in
/// `S_μ`; sample `i` uses the seed derived from `(seed, i)`. Samples with
/// `Ent(f)` below [`MIN_SCAN_ENTROPY`] are reported as `None`.
pub fn kappa_ratios(
    laws: &[CrossoverLaw],
    measure: &ProductMeasure,
    samples: usize,
    seed: u64,
) -> Result<Vec<Option<Vec<f64>>>> {
    let n = measure.space().num_sites();
    if laws.iter().any(|l| l.n() != n) {
        return Err(Error::SpaceMismatch);
    }
    let supports: Vec<Vec<(SiteSubset, f64)>> = laws.iter().map(|l| l.enumerate_support()).collect::<Result<_>>()?;
    (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<f64>>> {
            let f = random_s_mu_density(&mut rng_for(seed, i), measure)?;
            let table = subset_entropies(&f);
            if table[table.len() - 1] < MIN_SCAN_ENTROPY {
                return Ok(None);
            }
            Ok(Some(ratios_from_table(&supports, &table)))
        })
        .collect()
}

fn ratios_from_table(supports: &[Vec<(SiteSubset, f64)>], table: &[f64]) -> Vec<f64> {
    let total = table[table.len() - 1];
    supports
        .iter()
        .map(|s| {
            let lhs: f64 =
                s.iter().map(|&(a, w)| w * (table[a.bits() as usize] + table[a.complement().bits() as usize])).sum();
            lhs / total
        })
        .collect()
}

/// Evaluates every law on the same random densities (see [`kappa_ratios`])
/// and keeps the largest ratio per law. Results do not depend on thread
/// scheduling.
pub fn kappa_scan_many(
    laws: &[CrossoverLaw],
    measure: &ProductMeasure,
    samples: usize,
    seed: u64,
) -> Result<Vec<KappaScan>> {
    let n = measure.space().num_sites();
    let per_sample = kappa_ratios(laws, measure, samples, seed)?;

    let identical = identical_base(measure).map(|base| -> Result<Vec<f64>> {
        let f = identical_copies_density(n, &base)?;
        let supports: Vec<Vec<(SiteSubset, f64)>> = laws.iter().map(|l| l.enumerate_support()).collect::<Result<_>>()?;
        Ok(ratios_from_table(&supports, &subset_entropies(&f)))
    });
    let identical = identical.transpose()?;

    let mut out = Vec::with_capacity(laws.len());
    for (j, law) in laws.iter().enumerate() {
        let mut max_ratio = f64::NEG_INFINITY;
        let mut witness_index = None;
        for (i, r) in per_sample.iter().enumerate() {
            if let Some(r) = r {
                if r[j] > max_ratio {
                    max_ratio = r[j];
                    witness_index = Some(i as u64);
                }
            }
        }
        let witness = witness_index.map(|i| random_s_mu_density(&mut rng_for(seed, i), measure)).transpose()?;
        out.push(KappaScan {
            model: law.name().to_string(),
            n,
            q: law.q(),
            kappa: kappa_theoretical(law).ok(),
            samples,
            max_ratio,
            witness_index,
            identical_copies_ratio: identical.as_ref().map(|r| r[j]),
            witness,
        });
    }
    Ok(out)
}

/// `μ₀` when `μ = μ₀^{⊗n}`.
fn identical_base(measure: &ProductMeasure) -> Option<Vec<f64>> {
    let first = measure.site(0);
    measure.sites().iter().all(|s| s.as_slice() == first).then(|| first.to_vec())
}

/// `Ent(f)` for the identical-copies density: `(n−1)H(μ₀)`.
pub fn identical_copies_entropy(n: usize, base: &[f64]) -> f64 {
    (n.saturating_sub(1)) as f64 * crate::entropy::shannon(base)
}

/// `lhs/Ent(f)` at the identical-copies density.
pub fn identical_copies_ratio(law: &CrossoverLaw, base: &[f64]) -> Result<f64> {
    let f = identical_copies_density(law.n(), base)?;
    let (lhs, total) = subadditivity_ratio(&f, law)?;
    Ok(lhs / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{ent, shannon};
    use crate::space::ProductSpace;

    fn laws(n: usize) -> Vec<CrossoverLaw> {
        let mut v = vec![
            CrossoverLaw::single_site(n).unwrap(),
            CrossoverLaw::one_point(n).unwrap(),
            CrossoverLaw::uniform(n).unwrap(),
        ];
        for q in [0.1, 0.25, 0.5] {
            v.push(CrossoverLaw::bernoulli(n, q).unwrap());
        }
        v
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(kappa_theoretical(&CrossoverLaw::single_site(2).unwrap()).unwrap(), 1.0);
        assert!((kappa_theoretical(&CrossoverLaw::uniform(3).unwrap()).unwrap() - 0.375).abs() < 1e-15);
        for n in 2..10 {
            let u = kappa_theoretical(&CrossoverLaw::uniform(n).unwrap()).unwrap();
            let b = kappa_theoretical(&CrossoverLaw::bernoulli(n, 0.5).unwrap()).unwrap();
            assert!((u - b).abs() < 1e-15);
        }
        let explicit = CrossoverLaw::explicit(2, vec![(SiteSubset::singleton(0, 2), 1.0)]).unwrap();
        assert!(matches!(kappa_theoretical(&explicit), Err(Error::NoClosedForm(_))));
    }

    #[test]
    fn identical_copies_small_example() {
        let f = identical_copies_density(3, &[0.5, 0.5]).unwrap();
        let v = f.values();
        assert_eq!(v[0], 4.0);
        assert_eq!(v[7], 4.0);
        assert!(v[1..7].iter().all(|&x| x == 0.0));
        assert!((ent(&f) - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(f.in_s_mu(1e-12));
        let one = identical_copies_density(1, &[0.3, 0.7]).unwrap();
        assert!(one.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn identical_copies_marginal_entropies() {
        let base = [0.2, 0.5, 0.3];
        let h0 = shannon(&base);
        let f = identical_copies_density(4, &base).unwrap();
        for (mask, e) in subset_entropies(&f).into_iter().enumerate() {
            let k = mask.count_ones() as f64;
            assert!((e - (k - 1.0).max(0.0) * h0).abs() < 1e-12, "mask {mask}");
        }
    }

    #[test]
    fn identical_copies_saturate_all_models() {
        for n in 2..=6 {
            for law in laws(n) {
                let k = kappa_theoretical(&law).unwrap();
                let f = identical_copies_density(n, &[0.5, 0.5]).unwrap();
                let (lhs, total) = subadditivity_ratio(&f, &law).unwrap();
                assert!((lhs - (1.0 - k) * total).abs() < 1e-10, "{} n={n}", law.name());
            }
        }
        let r = identical_copies_ratio(&CrossoverLaw::single_site(5).unwrap(), &[0.5, 0.5]).unwrap();
        assert!((r - 3.0 / 4.0).abs() < 1e-12);
        let r = identical_copies_ratio(&CrossoverLaw::one_point(5).unwrap(), &[0.5, 0.5]).unwrap();
        assert!((r - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn scan_respects_bound_and_is_reproducible() {
        let space = ProductSpace::new(vec![2, 3, 2, 2]).unwrap();
        let mu = ProductMeasure::uniform(&space);
        let ls = laws(4);
        let a = kappa_scan_many(&ls, &mu, 200, 11).unwrap();
        let b = kappa_scan_many(&ls, &mu, 200, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.max_ratio, y.max_ratio);
            assert_eq!(x.witness_index, y.witness_index);
            assert!(x.excess().unwrap() <= 1e-9, "{}", x.model);
            assert!(x.identical_copies_ratio.is_none());
        }
        let bin = ProductMeasure::uniform(&ProductSpace::binary(4).unwrap());
        let s = kappa_scan(&ls[2], &bin, 50, 3).unwrap();
        let k = s.kappa.unwrap();
        assert!((s.identical_copies_ratio.unwrap() - (1.0 - k)).abs() < 1e-10);
        assert!(s.witness.is_some());
    }

    #[test]
    fn identical_copies_entropy_closed_form() {
        let base = [0.1, 0.9];
        let f = identical_copies_density(5, &base).unwrap();
        assert!((ent(&f) - identical_copies_entropy(5, &base)).abs() < 1e-12);
    }
}
