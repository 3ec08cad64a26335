//! Finite product spaces Ω = X₁ × … × Xₙ and dense objects living on them.
//!
//! A configuration σ is stored as a mixed-radix integer: site `i` is the
//! `i`-th digit with radix `aᵢ`, site 0 being the least significant digit.
//! Subsets of sites are bitmasks (so `n ≤ 63`). Distributions, product
//! measures and densities are dense vectors indexed by configuration index.

use serde::{Deserialize, Serialize};

use crate::numeric::kahan_sum;
use crate::{Error, Result};

/// Default cap on `|Ω|`.
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;
/// Subsets are machine words.
pub const MAX_SITES: usize = 63;
/// Tolerance on `Σ p = 1` for probability vectors.
pub const PROBABILITY_TOL: f64 = 1e-12;
/// Tolerance on `μ[f] = 1` for densities.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ProductSpace {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        Self::with_cap(sizes, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(sizes: Vec<usize>, cap: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidSpace("at least one site is required".into()));
        }
        if sizes.len() > MAX_SITES {
            return Err(Error::InvalidSpace(format!(
                "{} sites exceed the maximum of {MAX_SITES}",
                sizes.len()
            )));
        }
        if let Some(site) = sizes.iter().position(|&a| a == 0) {
            return Err(Error::InvalidSpace(format!("site {site} has an empty alphabet")));
        }
        let size: u128 = sizes.iter().fold(1u128, |acc, &a| acc.saturating_mul(a as u128));
        if size > cap as u128 {
            return Err(Error::SpaceTooLarge { size, cap });
        }
        Ok(Self::from_sizes(sizes))
    }

    /// `{0,1}ⁿ`.
    pub fn binary(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    /// Builds a space without validation; used for (possibly empty) subspaces.
    pub(crate) fn from_sizes(sizes: Vec<usize>) -> Self {
        let mut strides = Vec::with_capacity(sizes.len());
        let mut total = 1usize;
        for &a in &sizes {
            strides.push(total);
            total *= a;
        }
        Self { sizes, strides, total }
    }

    pub fn num_sites(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, site: usize) -> usize {
        self.sizes[site]
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    pub fn total_size(&self) -> usize {
        self.total
    }

    /// Symbol of configuration `idx` at `site`.
    #[inline]
    pub fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / self.strides[site]) % self.sizes[site]
    }

    pub fn full_subset(&self) -> SiteSubset {
        SiteSubset::full(self.num_sites())
    }

    pub fn encode(&self, config: &Configuration) -> Result<usize> {
        self.encode_values(&config.0)
    }

    pub fn encode_values(&self, values: &[usize]) -> Result<usize> {
        self.check_values(values)?;
        Ok(values.iter().zip(&self.strides).map(|(v, s)| v * s).sum())
    }

    pub fn decode(&self, idx: usize) -> Configuration {
        assert!(idx < self.total, "index {idx} out of range for |Ω| = {}", self.total);
        Configuration((0..self.num_sites()).map(|i| self.digit(idx, i)).collect())
    }

    fn check_values(&self, values: &[usize]) -> Result<()> {
        if values.len() != self.num_sites() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} sites, got {}",
                self.num_sites(),
                values.len()
            )));
        }
        for (i, (&v, &a)) in values.iter().zip(&self.sizes).enumerate() {
            if v >= a {
                return Err(Error::InvalidConfiguration(format!(
                    "symbol {v} at site {i} is outside [0, {a})"
                )));
            }
        }
        Ok(())
    }

    fn check_subset(&self, a: SiteSubset) {
        assert_eq!(a.n(), self.num_sites(), "subset over {} sites used on a {}-site space", a.n(), self.num_sites());
    }

    /// The A-coordinates of `idx`, kept in place: `Σ_{i∈A} σᵢ·strideᵢ`.
    #[inline]
    pub fn component(&self, idx: usize, a: SiteSubset) -> usize {
        a.iter().map(|i| self.digit(idx, i) * self.strides[i]).sum()
    }

    /// Index-level recombination: `(η_A σ_{Aᶜ}, σ_A η_{Aᶜ})`.
    #[inline]
    pub fn recombine_indices(&self, sigma: usize, eta: usize, a: SiteSubset) -> (usize, usize) {
        let ps = self.component(sigma, a);
        let pe = self.component(eta, a);
        (sigma - ps + pe, eta - pe + ps)
    }

    /// `X_A = Π_{i∈A} Xᵢ`, with sites renumbered in increasing order.
    pub fn subspace(&self, a: SiteSubset) -> ProductSpace {
        self.check_subset(a);
        ProductSpace::from_sizes(a.iter().map(|i| self.sizes[i]).collect())
    }

    pub fn projection(&self, a: SiteSubset) -> Projection {
        Projection::new(self, a)
    }
}

/// A configuration σ = (σ₁, …, σₙ).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration(pub Vec<usize>);

impl Configuration {
    pub fn new(space: &ProductSpace, values: Vec<usize>) -> Result<Self> {
        space.check_values(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// Swaps the A-components of σ and η: returns `(η_A σ_{Aᶜ}, σ_A η_{Aᶜ})`.
pub fn recombine(
    space: &ProductSpace,
    sigma: &Configuration,
    eta: &Configuration,
    a: SiteSubset,
) -> Result<(Configuration, Configuration)> {
    space.check_values(&sigma.0).map_err(|_| Error::SpaceMismatch)?;
    space.check_values(&eta.0).map_err(|_| Error::SpaceMismatch)?;
    if a.n() != space.num_sites() {
        return Err(Error::SpaceMismatch);
    }
    let mut left = sigma.0.clone();
    let mut right = eta.0.clone();
    for i in a.iter() {
        std::mem::swap(&mut left[i], &mut right[i]);
    }
    Ok((Configuration(left), Configuration(right)))
}

/// A subset of sites `A ⊆ [n]` as a bitmask; bit `i` is site `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteSubset {
    bits: u64,
    n: usize,
}

impl SiteSubset {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n > MAX_SITES {
            return Err(Error::InvalidSubset(format!("{n} sites exceed {MAX_SITES}")));
        }
        if bits >> n != 0 {
            return Err(Error::InvalidSubset(format!("mask {bits:#b} has bits above site {}", n.saturating_sub(1))));
        }
        Ok(Self { bits, n })
    }

    pub fn from_sites(sites: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &i in sites {
            if i >= n {
                return Err(Error::InvalidSubset(format!("site {i} outside [0, {n})")));
            }
            bits |= 1 << i;
        }
        Self::new(bits, n)
    }

    pub fn empty(n: usize) -> Self {
        Self { bits: 0, n }
    }

    pub fn full(n: usize) -> Self {
        Self { bits: full_mask(n), n }
    }

    pub fn singleton(i: usize, n: usize) -> Self {
        debug_assert!(i < n);
        Self { bits: 1 << i, n }
    }

    /// `{0, …, k−1}` (the one-point crossover blocks).
    pub fn prefix(k: usize, n: usize) -> Self {
        debug_assert!(k <= n);
        Self { bits: full_mask(k), n }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_full(self) -> bool {
        self.bits == full_mask(self.n)
    }

    pub fn contains(self, i: usize) -> bool {
        i < self.n && self.bits >> i & 1 == 1
    }

    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_mask(self.n), n: self.n }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { bits: self.bits | other.bits, n: self.n }
    }

    pub fn intersection(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { bits: self.bits & other.bits, n: self.n }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Sites in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.bits;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All `2ⁿ` subsets of `[n]`, by increasing mask.
    pub fn all(n: usize) -> impl Iterator<Item = SiteSubset> {
        assert!(n < 64);
        (0..1u64 << n).map(move |bits| SiteSubset { bits, n })
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// The map Ω → X_A, σ ↦ σ_A, tabulated.
#[derive(Clone, Debug)]
pub struct Projection {
    subset: SiteSubset,
    sub_space: ProductSpace,
    map: Vec<u32>,
}

impl Projection {
    pub fn new(space: &ProductSpace, a: SiteSubset) -> Self {
        let sub_space = space.subspace(a);
        let n = space.num_sites();
        // per-site stride inside X_A (0 for sites outside A)
        let mut sub_stride = vec![0usize; n];
        for (k, i) in a.iter().enumerate() {
            sub_stride[i] = sub_space.stride(k);
        }
        let mut map = Vec::with_capacity(space.total_size());
        let mut digits = vec![0usize; n];
        let mut sub = 0usize;
        for _ in 0..space.total_size() {
            map.push(sub as u32);
            // odometer increment
            for i in 0..n {
                digits[i] += 1;
                sub += sub_stride[i];
                if digits[i] < space.size(i) {
                    break;
                }
                sub -= sub_stride[i] * digits[i];
                digits[i] = 0;
            }
        }
        Self { subset: a, sub_space, map }
    }

    #[inline]
    pub fn index(&self, idx: usize) -> usize {
        self.map[idx] as usize
    }

    pub fn subset(&self) -> SiteSubset {
        self.subset
    }

    pub fn sub_space(&self) -> &ProductSpace {
        &self.sub_space
    }

    /// Pushes a vector on Ω forward to X_A by summation.
    pub fn push_forward(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.sub_space.total_size()];
        for (x, &v) in values.iter().enumerate() {
            out[self.map[x] as usize] += v;
        }
        out
    }

    /// Lifts a function on X_A to Ω (constant along Aᶜ).
    pub fn lift(&self, values: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&y| values[y as usize]).collect()
    }
}

/// A probability vector on Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    space: ProductSpace,
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(space: ProductSpace, weights: Vec<f64>) -> Result<Self> {
        check_probability_vector(&weights, space.total_size())?;
        Ok(Self { space, weights })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_unnormalized(space: ProductSpace, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.total_size() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} weights, got {}",
                space.total_size(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let total = kahan_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("total weight is zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { space, weights })
    }

    /// Wraps a vector produced by an integrator without re-checking it.
    pub(crate) fn from_raw(space: ProductSpace, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), space.total_size());
        Self { space, weights }
    }

    pub fn uniform(space: ProductSpace) -> Self {
        let m = space.total_size();
        Self { space, weights: vec![1.0 / m as f64; m] }
    }

    pub fn point_mass(space: ProductSpace, idx: usize) -> Self {
        let mut weights = vec![0.0; space.total_size()];
        weights[idx] = 1.0;
        Self { space, weights }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    pub fn is_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Marginal p_A as a distribution on X_A.
    pub fn marginal(&self, a: SiteSubset) -> Distribution {
        let proj = self.space.projection(a);
        let weights = proj.push_forward(&self.weights);
        Distribution { space: proj.sub_space().clone(), weights }
    }

    /// Marginal at a single site, as a plain vector.
    pub fn site_marginal(&self, site: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.space.size(site)];
        for (x, &w) in self.weights.iter().enumerate() {
            out[self.space.digit(x, site)] += w;
        }
        out
    }

    pub fn site_marginals(&self) -> Vec<Vec<f64>> {
        (0..self.space.num_sites()).map(|i| self.site_marginal(i)).collect()
    }

    /// `p_A ⊗ p_{Aᶜ}`.
    pub fn product_of_marginals(&self, a: SiteSubset) -> Distribution {
        let weights = product_of_marginals_raw(&self.space, &self.weights, a);
        Distribution { space: self.space.clone(), weights }
    }

    /// `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(0.5 * kahan_sum(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs())))
    }
}

/// `p_A ⊗ p_{Aᶜ}` on raw weight vectors.
pub fn product_of_marginals_raw(space: &ProductSpace, p: &[f64], a: SiteSubset) -> Vec<f64> {
    let pa = space.projection(a);
    let pc = space.projection(a.complement());
    let ma = pa.push_forward(p);
    let mc = pc.push_forward(p);
    (0..space.total_size()).map(|x| ma[pa.index(x)] * mc[pc.index(x)]).collect()
}

/// `p_A ⊗ p_{Aᶜ}` for a distribution.
pub fn product_of_marginals(p: &Distribution, a: SiteSubset) -> Distribution {
    p.product_of_marginals(a)
}

fn check_probability_vector(weights: &[f64], len: usize) -> Result<()> {
    if weights.len() != len {
        return Err(Error::InvalidDistribution(format!("expected {len} weights, got {}", weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDistribution(format!("weight {w} is not a probability")));
    }
    let total = kahan_sum(weights.iter().copied());
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
    }
    Ok(())
}

/// A product measure `μ = ⊗ μᵢ`, with its dense table cached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductMeasure {
    space: ProductSpace,
    sites: Vec<Vec<f64>>,
    dense: Vec<f64>,
}

impl ProductMeasure {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        let space = ProductSpace::new(sites.iter().map(Vec::len).collect())?;
        for (i, s) in sites.iter().enumerate() {
            check_probability_vector(s, s.len())
                .map_err(|e| Error::InvalidDistribution(format!("site {i}: {e}")))?;
        }
        Ok(Self::build(space, sites))
    }

    fn build(space: ProductSpace, sites: Vec<Vec<f64>>) -> Self {
        let mut dense = vec![1.0; space.total_size()];
        for (x, d) in dense.iter_mut().enumerate() {
            for (i, s) in sites.iter().enumerate() {
                *d *= s[space.digit(x, i)];
            }
        }
        Self { space, sites, dense }
    }

    pub fn uniform(space: &ProductSpace) -> Self {
        let sites = space.sizes().iter().map(|&a| vec![1.0 / a as f64; a]).collect();
        Self::build(space.clone(), sites)
    }

    /// Product of Bernoulli(w) on `{0,1}ⁿ`: each site is 1 with probability `w`.
    pub fn bernoulli(n: usize, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange(format!("Bernoulli parameter {w}")));
        }
        Self::new(vec![vec![1.0 - w, w]; n])
    }

    /// `⊗ᵢ pᵢ` built from the single-site marginals of `p`.
    pub fn from_marginals(p: &Distribution) -> Self {
        Self::build(p.space().clone(), p.site_marginals())
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    #[inline]
    pub fn prob(&self, idx: usize) -> f64 {
        self.dense[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.dense
    }

    pub fn is_positive(&self) -> bool {
        self.sites.iter().flatten().all(|&w| w > 0.0)
    }

    pub fn to_distribution(&self) -> Distribution {
        Distribution { space: self.space.clone(), weights: self.dense.clone() }
    }

    /// The marginal `μ_A` on `X_A` (the unit mass on a point when `A = ∅`).
    pub fn restrict(&self, a: SiteSubset) -> ProductMeasure {
        let sub = self.space.subspace(a);
        let sites = a.iter().map(|i| self.sites[i].clone()).collect();
        Self::build(sub, sites)
    }

    /// `μ[g]`.
    pub fn expect(&self, g: &[f64]) -> f64 {
        kahan_sum(self.dense.iter().zip(g).map(|(m, v)| m * v))
    }
}

/// A density `f = p/μ` with respect to a strictly positive product measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    measure: ProductMeasure,
    values: Vec<f64>,
}

impl Density {
    pub fn new(measure: ProductMeasure, values: Vec<f64>) -> Result<Self> {
        if !measure.is_positive() {
            return Err(Error::NonPositive("reference measure of a density".into()));
        }
        if values.len() != measure.space().total_size() {
            return Err(Error::InvalidDensity(format!(
                "expected {} values, got {}",
                measure.space().total_size(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDensity(format!("value {v} is not a nonnegative real")));
        }
        let mass = measure.expect(&values);
        if (mass - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("μ[f] = {mass}")));
        }
        Ok(Self { measure, values })
    }

    /// Rescales a nonnegative function so that `μ[f] = 1`.
    pub fn normalized(measure: ProductMeasure, mut values: Vec<f64>) -> Result<Self> {
        let mass = measure.expect(&values);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidDensity(format!("cannot normalize: μ[f] = {mass}")));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Self::new(measure, values)
    }

    pub fn constant(measure: ProductMeasure) -> Result<Self> {
        let m = measure.space().total_size();
        Self::new(measure, vec![1.0; m])
    }

    /// `f = p/μ`.
    pub fn from_distribution(p: &Distribution, measure: &ProductMeasure) -> Result<Self> {
        if p.space() != measure.space() {
            return Err(Error::SpaceMismatch);
        }
        if !measure.is_positive() {
            return Err(Error::NonPositive("reference measure of a density".into()));
        }
        let values = p.weights().iter().zip(measure.weights()).map(|(p, m)| p / m).collect();
        Self::new(measure.clone(), values)
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.measure
    }

    pub fn space(&self) -> &ProductSpace {
        self.measure.space()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn mean(&self) -> f64 {
        self.measure.expect(&self.values)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// The measure `fμ`.
    pub fn to_distribution(&self) -> Distribution {
        let weights = self.values.iter().zip(self.measure.weights()).map(|(f, m)| f * m).collect();
        Distribution::from_raw(self.space().clone(), weights)
    }

    /// `f_A(σ_A) = Σ_{σ'} μ(σ') f(σ_A σ'_{Aᶜ})`, as a density on `X_A` w.r.t. `μ_A`.
    pub fn marginal(&self, a: SiteSubset) -> Density {
        let proj = self.space().projection(a);
        self.marginal_with(&proj)
    }

    pub fn marginal_with(&self, proj: &Projection) -> Density {
        let mu_a = self.measure.restrict(proj.subset());
        let p: Vec<f64> = self.values.iter().zip(self.measure.weights()).map(|(f, m)| f * m).collect();
        let pa = proj.push_forward(&p);
        let values = pa.iter().zip(mu_a.weights()).map(|(p, m)| p / m).collect();
        Density { measure: mu_a, values }
    }

    /// `f_A` regarded as a function on Ω.
    pub fn lifted_marginal(&self, a: SiteSubset) -> Vec<f64> {
        let proj = self.space().projection(a);
        proj.lift(self.marginal_with(&proj).values())
    }

    /// `max_{i,x} |fᵢ(x) − 1|`: zero exactly on `S_μ`.
    pub fn max_site_deviation(&self) -> f64 {
        let n = self.space().num_sites();
        let p = self.to_distribution();
        (0..n)
            .flat_map(|i| {
                let m = p.site_marginal(i);
                let mu = self.measure.site(i).to_vec();
                m.into_iter().zip(mu).map(|(pm, mm)| (pm / mm - 1.0).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Membership in `S_μ`: `μ[f] = 1` and `fᵢ ≡ 1` for all sites.
    pub fn in_s_mu(&self, tol: f64) -> bool {
        (self.mean() - 1.0).abs() <= tol && self.max_site_deviation() <= tol
    }
}

/// `f_A` as a density on `X_A`.
pub fn marginal_density(f: &Density, a: SiteSubset) -> Density {
    f.marginal(a)
}

/// Iterative proportional fitting of a positive measure on Ω to prescribed
/// single-site marginals. Returns the fitted weights.
///
/// Sites are rescaled cyclically; after each sweep the largest deviation
/// `max_{i,x} |mᵢ(x) − targetᵢ(x)|` is compared against `tol`.
pub fn ipf_fit(
    space: &ProductSpace,
    weights: &[f64],
    targets: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = space.num_sites();
    if weights.len() != space.total_size() || targets.len() != n {
        return Err(Error::SpaceMismatch);
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::NonPositive("IPF start".into()));
    }
    for (i, t) in targets.iter().enumerate() {
        if t.len() != space.size(i) {
            return Err(Error::SpaceMismatch);
        }
        if t.iter().any(|&v| v <= 0.0) {
            return Err(Error::NonPositive(format!("IPF target at site {i}")));
        }
        check_probability_vector(t, t.len())?;
    }
    let total = kahan_sum(weights.iter().copied());
    let mut w: Vec<f64> = weights.iter().map(|x| x / total).collect();
    let digits: Vec<Vec<usize>> =
        (0..n).map(|i| (0..space.total_size()).map(|x| space.digit(x, i)).collect()).collect();
    let site_marginal = |w: &[f64], i: usize| {
        let mut m = vec![0.0; space.size(i)];
        for (x, &v) in w.iter().enumerate() {
            m[digits[i][x]] += v;
        }
        m
    };
    let mut deviation = f64::INFINITY;
    for _ in 0..max_iter {
        for i in 0..n {
            let m = site_marginal(&w, i);
            let scale: Vec<f64> = targets[i].iter().zip(&m).map(|(t, m)| t / m).collect();
            for (x, v) in w.iter_mut().enumerate() {
                *v *= scale[digits[i][x]];
            }
        }
        deviation = (0..n)
            .flat_map(|i| {
                site_marginal(&w, i).into_iter().zip(&targets[i]).map(|(m, t)| (m - t).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        if deviation <= tol {
            return Ok(w);
        }
    }
    Err(Error::IpfNonConvergence { iterations: max_iter, deviation })
}

/// Projects a positive function `g` (relative to `μ`) onto densities whose
/// measure `fμ` has the given single-site marginals; `μ[f] = 1` on return.
pub fn ipf_project(
    g: &[f64],
    measure: &ProductMeasure,
    targets: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<Density> {
    if !measure.is_positive() {
        return Err(Error::NonPositive("reference measure".into()));
    }
    let start: Vec<f64> = g.iter().zip(measure.weights()).map(|(g, m)| g * m).collect();
    let fitted = ipf_fit(measure.space(), &start, targets, tol, max_iter)?;
    let values = fitted.iter().zip(measure.weights()).map(|(p, m)| p / m).collect();
    Density::normalized(measure.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(v: &[usize]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn encode_decode_exhaustive() {
        for sizes in [vec![2, 2, 2], vec![3, 1, 4], vec![2, 3, 2, 3, 2], vec![4; 5]] {
            let s = ProductSpace::new(sizes).unwrap();
            assert!(s.total_size() <= 1 << 10);
            for idx in 0..s.total_size() {
                let c = s.decode(idx);
                assert_eq!(s.encode(&c).unwrap(), idx);
            }
        }
    }

    #[test]
    fn space_validation() {
        assert!(ProductSpace::new(vec![]).is_err());
        assert!(ProductSpace::new(vec![2, 0]).is_err());
        assert!(matches!(ProductSpace::binary(21), Err(Error::SpaceTooLarge { .. })));
        assert!(ProductSpace::with_cap(vec![2; 21], 1 << 21).is_ok());
        let s = ProductSpace::new(vec![2, 3]).unwrap();
        assert!(s.encode_values(&[1, 3]).is_err());
        assert!(s.encode_values(&[1]).is_err());
    }

    #[test]
    fn subset_basics() {
        let a = SiteSubset::from_sites(&[0, 2], 4).unwrap();
        assert_eq!(a.complement().complement(), a);
        assert_eq!(a.complement().iter().collect::<Vec<_>>(), vec![1, 3]);
        assert!(SiteSubset::new(0b10000, 4).is_err());
        assert_eq!(SiteSubset::all(3).count(), 8);
        assert!(SiteSubset::empty(4).is_subset_of(a));
        assert_eq!(a.union(SiteSubset::singleton(1, 4)).intersection(a), a);
        assert_eq!(SiteSubset::prefix(2, 4).iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn recombine_examples() {
        let s = ProductSpace::binary(2).unwrap();
        let (a, b) = (cfg(&[0, 0]), cfg(&[1, 1]));
        let empty = SiteSubset::empty(2);
        assert_eq!(recombine(&s, &a, &b, empty).unwrap(), (a.clone(), b.clone()));
        let full = SiteSubset::full(2);
        assert_eq!(recombine(&s, &a, &b, full).unwrap(), (b.clone(), a.clone()));
        let first = SiteSubset::singleton(0, 2);
        assert_eq!(recombine(&s, &a, &b, first).unwrap(), (cfg(&[1, 0]), cfg(&[0, 1])));
        assert_eq!(recombine(&s, &a, &cfg(&[1, 1, 0]), first), Err(Error::SpaceMismatch));
    }

    #[test]
    fn recombine_indices_agree_with_configurations() {
        let s = ProductSpace::new(vec![2, 3, 2]).unwrap();
        for x in 0..s.total_size() {
            for y in 0..s.total_size() {
                for a in SiteSubset::all(3) {
                    let (u, v) = s.recombine_indices(x, y, a);
                    let (cu, cv) = recombine(&s, &s.decode(x), &s.decode(y), a).unwrap();
                    assert_eq!((s.decode(u), s.decode(v)), (cu, cv));
                }
            }
        }
    }

    #[test]
    fn projection_matches_digits() {
        let s = ProductSpace::new(vec![3, 2, 4]).unwrap();
        let a = SiteSubset::from_sites(&[0, 2], 3).unwrap();
        let proj = s.projection(a);
        for x in 0..s.total_size() {
            let c = s.decode(x);
            let expect = proj.sub_space().encode_values(&[c.0[0], c.0[2]]).unwrap();
            assert_eq!(proj.index(x), expect);
        }
        let empty = s.projection(SiteSubset::empty(3));
        assert_eq!(empty.sub_space().total_size(), 1);
        assert!((0..s.total_size()).all(|x| empty.index(x) == 0));
    }

    #[test]
    fn empty_marginal_is_one() {
        let mu = ProductMeasure::new(vec![vec![0.3, 0.7], vec![0.2, 0.5, 0.3]]).unwrap();
        let f = Density::normalized(mu, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let f0 = f.marginal(SiteSubset::empty(2));
        assert_eq!(f0.values().len(), 1);
        assert!((f0.values()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_density_marginals_factor() {
        let mu = ProductMeasure::new(vec![vec![0.25, 0.75], vec![0.5, 0.5], vec![0.1, 0.6, 0.3]]).unwrap();
        let f1 = [2.0, 2.0 / 3.0];
        let f2 = [1.5, 0.5];
        let f3 = [3.0, 0.5, 1.0 / 0.3 * (1.0 - 0.3 - 0.3)];
        // each factor has μᵢ[fᵢ] = 1
        for (f, m) in [(&f1[..], mu.site(0)), (&f2[..], mu.site(1)), (&f3[..], mu.site(2))] {
            let e: f64 = f.iter().zip(m).map(|(a, b)| a * b).sum();
            assert!((e - 1.0).abs() < 1e-12);
        }
        let s = mu.space().clone();
        let values: Vec<f64> =
            (0..s.total_size()).map(|x| f1[s.digit(x, 0)] * f2[s.digit(x, 1)] * f3[s.digit(x, 2)]).collect();
        let f = Density::new(mu, values).unwrap();
        let a = SiteSubset::from_sites(&[0, 2], 3).unwrap();
        let fa = f.marginal(a);
        let sub = fa.space().clone();
        for y in 0..sub.total_size() {
            let expect = f1[sub.digit(y, 0)] * f3[sub.digit(y, 1)];
            assert!((fa.value(y) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_consistency_exhaustive() {
        let mu = ProductMeasure::new(vec![vec![0.3, 0.7], vec![0.2, 0.8], vec![0.5, 0.25, 0.25]]).unwrap();
        let values: Vec<f64> = (0..12).map(|x| 1.0 + ((x * 7) % 5) as f64).collect();
        let f = Density::normalized(mu, values).unwrap();
        for a in SiteSubset::all(3) {
            let fa = f.marginal(a);
            for b in SiteSubset::all(3).filter(|b| b.is_subset_of(a)) {
                // position of B's sites inside A
                let inner: Vec<usize> = a.iter().enumerate().filter(|(_, i)| b.contains(*i)).map(|(k, _)| k).collect();
                let inner = SiteSubset::from_sites(&inner, a.len()).unwrap();
                let direct = f.marginal(b);
                let nested = if a.is_empty() { fa.clone() } else { fa.marginal(inner) };
                for (u, v) in direct.values().iter().zip(nested.values()) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_of_marginals_examples() {
        let s = ProductSpace::binary(2).unwrap();
        let p = Distribution::new(s.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let q = p.product_of_marginals(SiteSubset::singleton(0, 2));
        for w in q.weights() {
            assert!((w - 0.25).abs() < 1e-15);
        }
        let mu = ProductMeasure::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap().to_distribution();
        let r = mu.product_of_marginals(SiteSubset::singleton(1, 2));
        assert!(r.total_variation(&mu).unwrap() < 1e-15);
    }

    #[test]
    fn product_of_marginals_preserves_site_marginals() {
        let s = ProductSpace::new(vec![2, 3, 2]).unwrap();
        let raw: Vec<f64> = (0..12).map(|x| ((x * 5 + 3) % 11) as f64 + 0.5).collect();
        let p = Distribution::from_unnormalized(s, raw).unwrap();
        for a in SiteSubset::all(3) {
            let q = p.product_of_marginals(a);
            // oracle: site marginals by explicit decoding
            for i in 0..3 {
                let mut direct = vec![0.0; p.space().size(i)];
                for x in 0..p.space().total_size() {
                    direct[p.space().decode(x).0[i]] += q.prob(x);
                }
                for (u, v) in direct.iter().zip(p.site_marginal(i)) {
                    assert!((u - v).abs() < 1e-14);
                }
            }
            let twice = q.product_of_marginals(a);
            assert!(twice.total_variation(&q).unwrap() < 1e-15);
        }
    }

    #[test]
    fn ipf_examples() {
        let s = ProductSpace::binary(2).unwrap();
        let mu = ProductMeasure::uniform(&s);
        let targets = vec![vec![0.5, 0.5]; 2];
        let f = ipf_project(&[4.0, 1.0, 1.0, 4.0], &mu, &targets, 1e-14, 100).unwrap();
        for (v, e) in f.values().iter().zip([1.6, 0.4, 0.4, 1.6]) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        // already matching: unchanged up to normalization
        let g = [2.0, 2.0, 2.0, 2.0];
        let f = ipf_project(&g, &mu, &targets, 1e-14, 10).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn ipf_reports_nonconvergence() {
        let s = ProductSpace::binary(3).unwrap();
        let mu = ProductMeasure::uniform(&s);
        let g: Vec<f64> = (0..8).map(|x| 1.0 + x as f64 * 10.0).collect();
        let err = ipf_project(&g, &mu, &[vec![0.1, 0.9], vec![0.5, 0.5], vec![0.2, 0.8]], 0.0, 1).unwrap_err();
        assert!(matches!(err, Error::IpfNonConvergence { iterations: 1, .. }));
    }

    proptest! {
        #[test]
        fn ipf_hits_targets(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = ProductSpace::new(vec![2, 3, 2, 2]).unwrap();
            let mu = ProductMeasure::new(
                s.sizes().iter().map(|&a| {
                    let raw: Vec<f64> = (0..a).map(|_| rng.random_range(0.1..1.0)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / t).collect()
                }).collect()).unwrap();
            let g: Vec<f64> = (0..s.total_size()).map(|_| rng.random_range(0.01..5.0)).collect();
            let f = ipf_project(&g, &mu, mu.sites(), 1e-13, 10_000).unwrap();
            prop_assert!(f.max_site_deviation() < 1e-11);
            prop_assert!((f.mean() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn recombine_is_involutive_and_preserves_symbols(x in 0usize..36, y in 0usize..36, bits in 0u64..4) {
            let s = ProductSpace::new(vec![6, 6]).unwrap();
            let a = SiteSubset::new(bits, 2).unwrap();
            let (u, v) = recombine(&s, &s.decode(x), &s.decode(y), a).unwrap();
            for i in 0..2 {
                let mut before = [s.decode(x).0[i], s.decode(y).0[i]];
                let mut after = [u.0[i], v.0[i]];
                before.sort();
                after.sort();
                prop_assert_eq!(before, after);
            }
            let (bx, by) = recombine(&s, &u, &v, a).unwrap();
            prop_assert_eq!((s.encode(&bx).unwrap(), s.encode(&by).unwrap()), (x, y));
        }
    }
}
