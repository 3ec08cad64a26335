//! Recombination dynamics: the quadratic map `Ψ[p] = Σ_A ν(A) p_A ⊗ p_{Aᶜ}`,
//! the flow `dp/dt = Ψ[p] − p`, and a fixed-step RK4 integrator shared with
//! the general pair-generator flows.

use rand::Rng;
use serde::Serialize;

use crate::crossover::CrossoverLaw;
use crate::entropy::{relative_entropy_raw, total_variation_raw};
use crate::numeric::kahan_sum;
use crate::space::{Distribution, ProductMeasure, ProductSpace, Projection, SiteSubset};
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_CADENCE: usize = 10;
/// Accumulated `|Σp − 1|` beyond which integration aborts.
pub const MASS_DRIFT_LIMIT: f64 = 1e-9;

/// `Ψ` with its projections tabulated. A and Aᶜ give the same product, so
/// their weights are merged.
#[derive(Clone, Debug)]
pub struct RecombinationOperator {
    space: ProductSpace,
    terms: Vec<(f64, Projection, Projection)>,
}

impl RecombinationOperator {
    pub fn new(space: &ProductSpace, law: &CrossoverLaw) -> Result<Self> {
        if law.n() != space.num_sites() {
            return Err(Error::SpaceMismatch);
        }
        let mut merged: Vec<(SiteSubset, f64)> = Vec::new();
        for (a, w) in law.enumerate_support()? {
            let key = if a.bits() <= a.complement().bits() { a } else { a.complement() };
            match merged.iter_mut().find(|(b, _)| *b == key) {
                Some(e) => e.1 += w,
                None => merged.push((key, w)),
            }
        }
        let terms = merged
            .into_iter()
            .map(|(a, w)| (w, space.projection(a), space.projection(a.complement())))
            .collect();
        Ok(Self { space: space.clone(), terms })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    /// `Ψ[p]` on raw weights.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for (w, pa, pc) in &self.terms {
            let ma = pa.push_forward(p);
            let mc = pc.push_forward(p);
            for (x, o) in out.iter_mut().enumerate() {
                *o += w * ma[pa.index(x)] * mc[pc.index(x)];
            }
        }
        out
    }

    /// `Ψ[p] − (Σp)·p`, the homogeneous quadratic form of `Ψ[p] − p`.
    ///
    /// Both agree on the simplex, but only this one keeps `Σp` a true
    /// invariant; with `− p` the mass error grows like `eᵗ`.
    pub fn field(&self, p: &[f64]) -> Vec<f64> {
        let mass = kahan_sum(p.iter().copied());
        let mut out = self.apply(p);
        out.iter_mut().zip(p).for_each(|(o, v)| *o -= mass * v);
        out
    }
}

/// One step of the discrete map, exact.
pub fn psi_step(p: &Distribution, law: &CrossoverLaw) -> Result<Distribution> {
    let op = RecombinationOperator::new(p.space(), law)?;
    Ok(Distribution::from_raw(p.space().clone(), op.apply(p.weights())))
}

/// Unbiased Monte Carlo estimate of `Ψ[p]` from `samples` draws of A.
/// Approximate by construction; intended for laws too large to enumerate.
pub fn psi_step_sampled<R: Rng + ?Sized>(
    p: &Distribution,
    law: &CrossoverLaw,
    samples: usize,
    rng: &mut R,
) -> Result<Distribution> {
    if law.n() != p.space().num_sites() {
        return Err(Error::SpaceMismatch);
    }
    if samples == 0 {
        return Err(Error::OutOfRange("at least one sample is required".into()));
    }
    let mut out = vec![0.0; p.space().total_size()];
    for _ in 0..samples {
        let a = law.sample_subset(rng);
        let q = crate::space::product_of_marginals_raw(p.space(), p.weights(), a);
        out.iter_mut().zip(q).for_each(|(o, v)| *o += v / samples as f64);
    }
    Ok(Distribution::from_raw(p.space().clone(), out))
}

/// `Σ_A ν(A)(p_A⊗p_{Aᶜ} − p)`.
pub fn recombination_field(p: &Distribution, law: &CrossoverLaw) -> Result<Vec<f64>> {
    Ok(RecombinationOperator::new(p.space(), law)?.field(p.weights()))
}

/// The product of single-site marginals of `p`, with the per-site supports.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub measure: ProductMeasure,
    /// Symbols with positive marginal mass, per site.
    pub support: Vec<Vec<usize>>,
    /// The space restricted to those symbols.
    pub restricted: ProductSpace,
}

impl Equilibrium {
    /// Whether every symbol carries positive mass.
    pub fn is_full_support(&self) -> bool {
        self.support.iter().zip(self.measure.space().sizes()).all(|(s, &a)| s.len() == a)
    }

    /// Re-expresses a distribution supported on the restricted space there.
    pub fn restrict(&self, p: &Distribution) -> Result<Distribution> {
        let space = p.space();
        if space != self.measure.space() {
            return Err(Error::SpaceMismatch);
        }
        let mut w = vec![0.0; self.restricted.total_size()];
        for (x, &v) in p.weights().iter().enumerate() {
            let mut idx = 0;
            let mut inside = true;
            for i in 0..space.num_sites() {
                match self.support[i].iter().position(|&s| s == space.digit(x, i)) {
                    Some(k) => idx += k * self.restricted.stride(i),
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            if inside {
                w[idx] += v;
            } else if v > 0.0 {
                return Err(Error::InvalidDistribution("mass outside the restricted space".into()));
            }
        }
        Ok(Distribution::from_raw(self.restricted.clone(), w))
    }
}

/// `π = ⊗ᵢ pᵢ`.
pub fn equilibrium_of(p: &Distribution) -> Equilibrium {
    let measure = ProductMeasure::from_marginals(p);
    let support: Vec<Vec<usize>> = measure
        .sites()
        .iter()
        .map(|s| s.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(k, _)| k).collect())
        .collect();
    let restricted = ProductSpace::from_sizes(support.iter().map(Vec::len).collect());
    Equilibrium { measure, support, restricted }
}

/// Snapshots of a trajectory with `H(p|π)` and `TV(p, π)` against a fixed reference.
#[derive(Clone, Debug, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<Distribution>,
    pub relative_entropy: Vec<f64>,
    pub total_variation: Vec<f64>,
    #[serde(skip)]
    pub reference: Vec<f64>,
}

impl EvolutionTrace {
    fn new(reference: Vec<f64>) -> Self {
        Self {
            times: Vec::new(),
            snapshots: Vec::new(),
            relative_entropy: Vec::new(),
            total_variation: Vec::new(),
            reference,
        }
    }

    fn record(&mut self, t: f64, p: Distribution) {
        self.relative_entropy.push(relative_entropy_raw(p.weights(), &self.reference));
        self.total_variation.push(total_variation_raw(p.weights(), &self.reference));
        self.times.push(t);
        self.snapshots.push(p);
    }

    pub fn last(&self) -> &Distribution {
        self.snapshots.last().expect("traces hold the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest increase of H between consecutive snapshots (≤ 0 for a monotone trace).
    pub fn max_entropy_increase(&self) -> f64 {
        self.relative_entropy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `TV − sqrt(H/2)` over snapshots (≤ 0 by Pinsker).
    pub fn max_pinsker_excess(&self) -> f64 {
        self.relative_entropy
            .iter()
            .zip(&self.total_variation)
            .map(|(h, tv)| tv - (h / 2.0).sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Record every `cadence` steps (the final state is always recorded).
    pub cadence: usize,
}

impl IntegrationOptions {
    pub fn new(t_end: f64) -> Self {
        Self { t_end, dt: DEFAULT_DT, cadence: DEFAULT_CADENCE }
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence;
        self
    }
}

/// Classical RK4 for `dp/dt = field(p)` without renormalization.
///
/// The last step is shortened to land on `t_end`. Fails with
/// [`Error::MassDrift`] once `|Σp − 1|` exceeds [`MASS_DRIFT_LIMIT`].
pub fn integrate<F>(
    p0: &Distribution,
    reference: &[f64],
    field: F,
    opts: IntegrationOptions,
) -> Result<EvolutionTrace>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::OutOfRange(format!("step size {}", opts.dt)));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::OutOfRange(format!("end time {}", opts.t_end)));
    }
    let cadence = opts.cadence.max(1);
    let space = p0.space().clone();
    let mut trace = EvolutionTrace::new(reference.to_vec());
    trace.record(0.0, p0.clone());
    let steps = (opts.t_end / opts.dt - 1e-9).ceil().max(0.0) as usize;
    let mut p = p0.weights().to_vec();
    let mut t = 0.0;
    let m = p.len();
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { (0..m).map(|i| x[i] + h * k[i]).collect() };
    for step in 1..=steps {
        let h = if step == steps { opts.t_end - t } else { opts.dt };
        let k1 = field(&p);
        let k2 = field(&axpy(&p, &k1, h / 2.0));
        let k3 = field(&axpy(&p, &k2, h / 2.0));
        let k4 = field(&axpy(&p, &k3, h));
        for i in 0..m {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if step == steps { opts.t_end } else { step as f64 * opts.dt };
        let drift = (kahan_sum(p.iter().copied()) - 1.0).abs();
        if drift > MASS_DRIFT_LIMIT {
            return Err(Error::MassDrift { drift, time: t });
        }
        if step % cadence == 0 || step == steps {
            trace.record(t, Distribution::from_raw(space.clone(), p.clone()));
        }
    }
    Ok(trace)
}

/// Integrates the recombination flow from `p`; H and TV are measured against `π = ⊗pᵢ`.
pub fn evolve_continuous(p: &Distribution, law: &CrossoverLaw, t_end: f64, dt: f64) -> Result<EvolutionTrace> {
    evolve_continuous_with(p, law, IntegrationOptions::new(t_end).dt(dt))
}

pub fn evolve_continuous_with(p: &Distribution, law: &CrossoverLaw, opts: IntegrationOptions) -> Result<EvolutionTrace> {
    let op = RecombinationOperator::new(p.space(), law)?;
    let pi = ProductMeasure::from_marginals(p);
    integrate(p, pi.weights(), |x| op.field(x), opts)
}

/// Iterates Ψ `k` times; times are step indices.
pub fn evolve_discrete(p: &Distribution, law: &CrossoverLaw, k: usize) -> Result<EvolutionTrace> {
    let op = RecombinationOperator::new(p.space(), law)?;
    let pi = ProductMeasure::from_marginals(p);
    let mut trace = EvolutionTrace::new(pi.weights().to_vec());
    trace.record(0.0, p.clone());
    let mut cur = p.weights().to_vec();
    for step in 1..=k {
        cur = op.apply(&cur);
        trace.record(step as f64, Distribution::from_raw(p.space().clone(), cur.clone()));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::relative_entropy;
    use crate::sampling::{random_distribution, rng_for};
    use proptest::prelude::*;

    fn laws(n: usize) -> Vec<CrossoverLaw> {
        vec![
            CrossoverLaw::single_site(n).unwrap(),
            CrossoverLaw::one_point(n).unwrap(),
            CrossoverLaw::uniform(n).unwrap(),
            CrossoverLaw::bernoulli(n, 0.25).unwrap(),
        ]
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn product_is_fixed() {
        let mu = ProductMeasure::new(vec![vec![0.2, 0.8], vec![0.5, 0.3, 0.2], vec![0.6, 0.4]]).unwrap();
        let p = mu.to_distribution();
        for law in laws(3) {
            let q = psi_step(&p, &law).unwrap();
            assert!(max_abs_diff(q.weights(), p.weights()) < 1e-15);
        }
    }

    #[test]
    fn correlated_pair_becomes_uniform() {
        let s = ProductSpace::binary(2).unwrap();
        let p = Distribution::new(s, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let q = psi_step(&p, &CrossoverLaw::single_site(2).unwrap()).unwrap();
        assert!(q.weights().iter().all(|w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn psi_matches_brute_force() {
        let s = ProductSpace::new(vec![2, 3, 2]).unwrap();
        let mut rng = rng_for(3, 0);
        let p = random_distribution(&mut rng, &s, 1.0);
        let law = CrossoverLaw::uniform(3).unwrap();
        // direct sum over all 8 subsets, by decoding configurations
        let mut direct = vec![0.0; s.total_size()];
        for a in SiteSubset::all(3) {
            for x in 0..s.total_size() {
                let cx = s.decode(x);
                let (mut pa, mut pc) = (0.0, 0.0);
                for y in 0..s.total_size() {
                    let cy = s.decode(y);
                    if a.iter().all(|i| cx.0[i] == cy.0[i]) {
                        pa += p.prob(y);
                    }
                    if a.complement().iter().all(|i| cx.0[i] == cy.0[i]) {
                        pc += p.prob(y);
                    }
                }
                direct[x] += 0.125 * pa * pc;
            }
        }
        let q = psi_step(&p, &law).unwrap();
        assert!(max_abs_diff(q.weights(), &direct) < 1e-15);
    }

    #[test]
    fn sampled_psi_is_close_to_exact() {
        let s = ProductSpace::binary(4).unwrap();
        let mut rng = rng_for(5, 0);
        let p = random_distribution(&mut rng, &s, 1.0);
        let law = CrossoverLaw::uniform(4).unwrap();
        let exact = psi_step(&p, &law).unwrap();
        let approx = psi_step_sampled(&p, &law, 20_000, &mut rng).unwrap();
        assert!(exact.total_variation(&approx).unwrap() < 0.01);
    }

    #[test]
    fn equilibrium_examples() {
        let s = ProductSpace::binary(2).unwrap();
        let p = Distribution::new(s.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let eq = equilibrium_of(&p);
        assert!(eq.measure.weights().iter().all(|w| (w - 0.25).abs() < 1e-15));
        assert!(eq.is_full_support());
        // supported on {0,1}×{0}: site 1 only takes symbol 0
        let p = Distribution::new(s, vec![0.3, 0.7, 0.0, 0.0]).unwrap();
        let eq = equilibrium_of(&p);
        assert_eq!(eq.support, vec![vec![0, 1], vec![0]]);
        assert_eq!(eq.restricted.sizes(), &[2, 1]);
        assert_eq!(eq.restrict(&p).unwrap().weights(), &[0.3, 0.7]);
        let prod = ProductMeasure::new(vec![vec![0.1, 0.9], vec![0.6, 0.4]]).unwrap();
        let eq = equilibrium_of(&prod.to_distribution());
        assert!(max_abs_diff(eq.measure.weights(), prod.weights()) < 1e-15);
    }

    #[test]
    fn stationary_trace_stays_put() {
        let pi = ProductMeasure::new(vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let trace = evolve_continuous(&pi.to_distribution(), &CrossoverLaw::uniform(3).unwrap(), 2.0, 0.01).unwrap();
        assert!(trace.relative_entropy.iter().all(|h| *h < 1e-15));
        assert!(max_abs_diff(trace.last().weights(), pi.weights()) < 1e-14);
    }

    #[test]
    fn identical_copies_discrete_factor() {
        let s = ProductSpace::binary(3).unwrap();
        let p = Distribution::new(s, vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let trace = evolve_discrete(&p, &CrossoverLaw::uniform(3).unwrap(), 1).unwrap();
        let factor = trace.relative_entropy[1] / trace.relative_entropy[0];
        assert!(factor <= 0.625 + 1e-12, "{factor}");
        let zero = evolve_discrete(&p, &CrossoverLaw::uniform(3).unwrap(), 0).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.last(), &p);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = ProductSpace::binary(3).unwrap();
        let mut rng = rng_for(9, 0);
        let p = random_distribution(&mut rng, &s, 0.5);
        let law = CrossoverLaw::one_point(3).unwrap();
        let end = |dt| evolve_continuous(&p, &law, 1.0, dt).unwrap().last().weights().to_vec();
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let e1 = max_abs_diff(&a, &b);
        let e2 = max_abs_diff(&b, &c);
        // halving the step divides the error by about 16
        assert!(e2 < e1 / 10.0, "{e1} {e2}");
        assert!(e2 <= 0.1f64.powi(4));
    }

    #[test]
    fn small_step_matches_field() {
        let s = ProductSpace::new(vec![2, 3]).unwrap();
        let mut rng = rng_for(1, 1);
        let p = random_distribution(&mut rng, &s, 1.0);
        let law = CrossoverLaw::single_site(2).unwrap();
        let field = recombination_field(&p, &law).unwrap();
        for dt in [1e-3, 1e-4] {
            let q = evolve_continuous(&p, &law, dt, dt).unwrap();
            let fd: Vec<f64> = q.last().weights().iter().zip(p.weights()).map(|(a, b)| (a - b) / dt).collect();
            assert!(max_abs_diff(&fd, &field) < 2.0 * dt);
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let p = Distribution::uniform(ProductSpace::binary(2).unwrap());
        let law = CrossoverLaw::uniform(2).unwrap();
        assert!(evolve_continuous(&p, &law, 1.0, 0.0).is_err());
        assert!(evolve_continuous(&p, &law, -1.0, 0.1).is_err());
        assert_eq!(psi_step(&p, &CrossoverLaw::uniform(3).unwrap()), Err(Error::SpaceMismatch));
    }

    #[test]
    fn leaking_field_trips_the_mass_monitor() {
        let s = ProductSpace::binary(3).unwrap();
        let p = Distribution::new(s, vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let op = RecombinationOperator::new(p.space(), &CrossoverLaw::uniform(3).unwrap()).unwrap();
        let res = integrate(&p, &[0.125; 8], |x| {
            let mut f = op.field(x);
            f[0] += 1.0;
            f
        }, IntegrationOptions::new(1.0));
        assert!(matches!(res, Err(Error::MassDrift { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn marginals_conserved_and_entropy_monotone(seed in 0u64..10_000, which in 0usize..4) {
            let s = ProductSpace::new(vec![2, 3, 2]).unwrap();
            let mut rng = rng_for(seed, 0);
            let p = random_distribution(&mut rng, &s, 0.7);
            let law = laws(3).swap_remove(which);
            let trace = evolve_continuous_with(&p, &law, IntegrationOptions::new(3.0).cadence(5)).unwrap();
            let m0 = p.site_marginals();
            for q in &trace.snapshots {
                for (a, b) in q.site_marginals().iter().zip(&m0) {
                    prop_assert!(max_abs_diff(a, b) < 1e-10);
                }
            }
            prop_assert!(trace.max_entropy_increase() <= 1e-10);
            prop_assert!(trace.max_pinsker_excess() <= 1e-12);
            let disc = evolve_discrete(&p, &law, 5).unwrap();
            for q in &disc.snapshots {
                for (a, b) in q.site_marginals().iter().zip(&m0) {
                    prop_assert!(max_abs_diff(a, b) < 1e-12);
                }
            }
            let pi = ProductMeasure::from_marginals(&p).to_distribution();
            prop_assert!((relative_entropy(&p, &pi).unwrap() - trace.relative_entropy[0]).abs() < 1e-15);
        }
    }
}
