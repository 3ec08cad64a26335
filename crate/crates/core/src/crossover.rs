//! Subset laws ν on `[n]`: which block of sites two parents exchange.
//!
//! Four named models carry closed-form moments; an explicit list of weighted
//! subsets covers everything else.

use rand::Rng;

use crate::space::{SiteSubset, MAX_SITES, PROBABILITY_TOL};
use crate::{Error, Result};

/// Largest `n` for which Uniform/Bernoulli laws are enumerated exactly.
pub const ENUMERATION_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub enum CrossoverKind {
    /// A = {i} with i uniform.
    SingleSite,
    /// A = {0, …, k−1} with k uniform in `0..=n`.
    OnePoint,
    /// A uniform over all subsets.
    Uniform,
    /// Each site included independently with probability `q ∈ [0, ½]`.
    Bernoulli { q: f64 },
    /// Arbitrary finite law (duplicates merged, zero weights dropped).
    Explicit { support: Vec<(SiteSubset, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossoverLaw {
    kind: CrossoverKind,
    n: usize,
}

impl CrossoverLaw {
    fn checked(kind: CrossoverKind, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::InvalidLaw(format!("number of sites {n} outside [1, {MAX_SITES}]")));
        }
        Ok(Self { kind, n })
    }

    pub fn single_site(n: usize) -> Result<Self> {
        Self::checked(CrossoverKind::SingleSite, n)
    }

    pub fn one_point(n: usize) -> Result<Self> {
        Self::checked(CrossoverKind::OnePoint, n)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::checked(CrossoverKind::Uniform, n)
    }

    pub fn bernoulli(n: usize, q: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::InvalidLaw(format!("Bernoulli parameter q = {q} outside [0, 1/2]")));
        }
        Self::checked(CrossoverKind::Bernoulli { q }, n)
    }

    pub fn explicit(n: usize, support: Vec<(SiteSubset, f64)>) -> Result<Self> {
        let mut merged: Vec<(SiteSubset, f64)> = Vec::new();
        for (a, w) in support {
            if a.n() != n {
                return Err(Error::InvalidLaw(format!("subset over {} sites in a {n}-site law", a.n())));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidLaw(format!("weight {w} is not a probability")));
            }
            match merged.iter_mut().find(|(b, _)| *b == a) {
                Some(entry) => entry.1 += w,
                None => merged.push((a, w)),
            }
        }
        merged.retain(|(_, w)| *w > 0.0);
        merged.sort_by_key(|(a, _)| a.bits());
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidLaw(format!("weights sum to {total}")));
        }
        Self::checked(CrossoverKind::Explicit { support: merged }, n)
    }

    pub fn kind(&self) -> &CrossoverKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Short machine name, as used in configs and CSV output.
    pub fn name(&self) -> &'static str {
        match self.kind {
            CrossoverKind::SingleSite => "single_site",
            CrossoverKind::OnePoint => "one_point",
            CrossoverKind::Uniform => "uniform",
            CrossoverKind::Bernoulli { .. } => "bernoulli",
            CrossoverKind::Explicit { .. } => "explicit",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self.kind {
            CrossoverKind::Bernoulli { q } => Some(q),
            _ => None,
        }
    }

    /// The same model on a different number of sites (explicit laws excluded).
    pub fn with_sites(&self, n: usize) -> Result<Self> {
        match &self.kind {
            CrossoverKind::Explicit { .. } => {
                Err(Error::InvalidLaw("an explicit law cannot be resized".into()))
            }
            kind => Self::checked(kind.clone(), n),
        }
    }

    /// ν(A).
    pub fn weight(&self, a: SiteSubset) -> f64 {
        let n = self.n;
        match &self.kind {
            CrossoverKind::SingleSite => {
                if a.len() == 1 {
                    1.0 / n as f64
                } else {
                    0.0
                }
            }
            CrossoverKind::OnePoint => {
                if a == SiteSubset::prefix(a.len(), n) {
                    1.0 / (n + 1) as f64
                } else {
                    0.0
                }
            }
            CrossoverKind::Uniform => 0.5f64.powi(n as i32),
            CrossoverKind::Bernoulli { q } => {
                let k = a.len() as i32;
                q.powi(k) * (1.0 - q).powi(n as i32 - k)
            }
            CrossoverKind::Explicit { support } => {
                support.iter().find(|(b, _)| *b == a).map_or(0.0, |(_, w)| *w)
            }
        }
    }

    /// The support of ν with weights, using the default enumeration cap.
    pub fn enumerate_support(&self) -> Result<Vec<(SiteSubset, f64)>> {
        self.enumerate_support_capped(ENUMERATION_CAP)
    }

    pub fn enumerate_support_capped(&self, cap: usize) -> Result<Vec<(SiteSubset, f64)>> {
        let n = self.n;
        match &self.kind {
            CrossoverKind::SingleSite => {
                Ok((0..n).map(|i| (SiteSubset::singleton(i, n), 1.0 / n as f64)).collect())
            }
            CrossoverKind::OnePoint => {
                Ok((0..=n).map(|k| (SiteSubset::prefix(k, n), 1.0 / (n + 1) as f64)).collect())
            }
            CrossoverKind::Uniform | CrossoverKind::Bernoulli { .. } => {
                if n > cap {
                    return Err(Error::EnumerationCap { n, cap });
                }
                Ok(SiteSubset::all(n)
                    .map(|a| (a, self.weight(a)))
                    .filter(|(_, w)| *w > 0.0)
                    .collect())
            }
            CrossoverKind::Explicit { support } => Ok(support.clone()),
        }
    }

    /// Draws A ~ ν.
    pub fn sample_subset<R: Rng + ?Sized>(&self, rng: &mut R) -> SiteSubset {
        let n = self.n;
        match &self.kind {
            CrossoverKind::SingleSite => SiteSubset::singleton(rng.random_range(0..n), n),
            CrossoverKind::OnePoint => SiteSubset::prefix(rng.random_range(0..=n), n),
            CrossoverKind::Uniform => {
                let bits = rng.random::<u64>() & SiteSubset::full(n).bits();
                SiteSubset::new(bits, n).expect("masked to n bits")
            }
            CrossoverKind::Bernoulli { q } => {
                let mut bits = 0u64;
                for i in 0..n {
                    if rng.random::<f64>() < *q {
                        bits |= 1 << i;
                    }
                }
                SiteSubset::new(bits, n).expect("bits below n")
            }
            CrossoverKind::Explicit { support } => {
                let mut u = rng.random::<f64>();
                for (a, w) in support {
                    if u < *w {
                        return *a;
                    }
                    u -= w;
                }
                support.last().expect("nonempty support").0
            }
        }
    }

    /// `M(u, v) = Σ_A ν(A) u^{|A|} v^{|Aᶜ|}`.
    pub fn mixed_moment(&self, u: f64, v: f64) -> f64 {
        let n = self.n as i32;
        match &self.kind {
            CrossoverKind::SingleSite => u * v.powi(n - 1),
            CrossoverKind::OnePoint => {
                (0..=n).map(|i| u.powi(i) * v.powi(n - i)).sum::<f64>() / (n + 1) as f64
            }
            CrossoverKind::Uniform => (0.5 * (u + v)).powi(n),
            CrossoverKind::Bernoulli { q } => (q * u + (1.0 - q) * v).powi(n),
            CrossoverKind::Explicit { support } => support
                .iter()
                .map(|(a, w)| {
                    let k = a.len() as i32;
                    w * u.powi(k) * v.powi(n - k)
                })
                .sum(),
        }
    }

    /// `Δ_ν = Σ_A ν(A)(2^{−|A|} + 2^{−|Aᶜ|}) = M(½,1) + M(1,½)`.
    pub fn delta_nu(&self) -> f64 {
        self.mixed_moment(0.5, 1.0) + self.mixed_moment(1.0, 0.5)
    }

    /// Probability that A separates sites `i` and `j`.
    pub fn separation_probability(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        debug_assert!(i < n && j < n);
        if i == j {
            return 0.0;
        }
        match &self.kind {
            CrossoverKind::SingleSite => 2.0 / n as f64,
            CrossoverKind::OnePoint => {
                // J_k separates i < j iff i < k ≤ j
                let (lo, hi) = (i.min(j), i.max(j));
                (hi - lo) as f64 / (n + 1) as f64
            }
            CrossoverKind::Uniform => 0.5,
            CrossoverKind::Bernoulli { q } => 2.0 * q * (1.0 - q),
            CrossoverKind::Explicit { support } => support
                .iter()
                .filter(|(a, _)| a.contains(i) != a.contains(j))
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Every pair of distinct sites is separated with positive probability.
    pub fn is_nondegenerate(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.separation_probability(i, j) > 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binomial;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn named(n: usize) -> Vec<CrossoverLaw> {
        vec![
            CrossoverLaw::single_site(n).unwrap(),
            CrossoverLaw::one_point(n).unwrap(),
            CrossoverLaw::uniform(n).unwrap(),
            CrossoverLaw::bernoulli(n, 0.1).unwrap(),
            CrossoverLaw::bernoulli(n, 0.25).unwrap(),
            CrossoverLaw::bernoulli(n, 0.5).unwrap(),
        ]
    }

    #[test]
    fn support_examples() {
        let s = CrossoverLaw::single_site(3).unwrap().enumerate_support().unwrap();
        assert_eq!(s.len(), 3);
        for (i, (a, w)) in s.iter().enumerate() {
            assert_eq!(a.iter().collect::<Vec<_>>(), vec![i]);
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        let o = CrossoverLaw::one_point(2).unwrap().enumerate_support().unwrap();
        let masks: Vec<u64> = o.iter().map(|(a, _)| a.bits()).collect();
        assert_eq!(masks, vec![0b00, 0b01, 0b11]);
        assert!(o.iter().all(|(_, w)| (w - 1.0 / 3.0).abs() < 1e-15));
        for n in 1..8 {
            let b = CrossoverLaw::bernoulli(n, 0.5).unwrap().enumerate_support().unwrap();
            assert_eq!(b.len(), 1 << n);
            assert!(b.iter().all(|(_, w)| *w == 0.5f64.powi(n as i32)));
        }
    }

    #[test]
    fn supports_are_normalized() {
        for n in 1..=12 {
            for law in named(n) {
                let total: f64 = law.enumerate_support().unwrap().iter().map(|(_, w)| w).sum();
                assert!((total - 1.0).abs() < 1e-12, "{} n={n}", law.name());
            }
        }
    }

    #[test]
    fn enumeration_cap() {
        let law = CrossoverLaw::uniform(25).unwrap();
        assert_eq!(law.enumerate_support(), Err(Error::EnumerationCap { n: 25, cap: ENUMERATION_CAP }));
        assert_eq!(CrossoverLaw::one_point(40).unwrap().enumerate_support().unwrap().len(), 41);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CrossoverLaw::bernoulli(4, 0.6).is_err());
        assert!(CrossoverLaw::bernoulli(4, -0.1).is_err());
        assert!(CrossoverLaw::uniform(0).is_err());
        let a = SiteSubset::singleton(0, 2);
        assert!(CrossoverLaw::explicit(2, vec![(a, 0.5)]).is_err());
        assert!(CrossoverLaw::explicit(2, vec![(a, 0.5), (a, 0.5)]).is_ok());
    }

    #[test]
    fn moments_match_enumeration() {
        let grid: [f64; 4] = [0.0, 0.25, 0.5, 1.0];
        for n in 1..=12 {
            for law in named(n) {
                let support = law.enumerate_support().unwrap();
                let explicit = CrossoverLaw::explicit(n, support.clone()).unwrap();
                for &u in &grid {
                    for &v in &grid {
                        let direct: f64 = support
                            .iter()
                            .map(|(a, w)| w * u.powi(a.len() as i32) * v.powi((n - a.len()) as i32))
                            .sum();
                        let closed = law.mixed_moment(u, v);
                        assert!((closed - direct).abs() < 1e-12, "{} n={n} u={u} v={v}", law.name());
                        assert!((explicit.mixed_moment(u, v) - direct).abs() < 1e-12);
                    }
                }
                assert!((law.mixed_moment(1.0, 1.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_examples() {
        for n in 2..=12 {
            let nf = n as i32;
            let s = CrossoverLaw::single_site(n).unwrap();
            assert!((s.delta_nu() - (0.5 + 2f64.powi(1 - nf))).abs() < 1e-14);
            let u = CrossoverLaw::uniform(n).unwrap();
            // binomial-sum oracle
            let direct: f64 = (0..=n)
                .map(|k| {
                    binomial(n as u64, k as u64)
                        * 0.5f64.powi(nf)
                        * (0.5f64.powi(k as i32) + 0.5f64.powi(nf - k as i32))
                })
                .sum();
            assert!((u.delta_nu() - direct).abs() < 1e-14);
            assert!((u.delta_nu() - 2.0 * 0.75f64.powi(nf)).abs() < 1e-14);
            assert!((u.mixed_moment(0.5, 1.0) - 0.75f64.powi(nf)).abs() < 1e-14);
            for q in [0.1, 0.25, 0.5] {
                let b = CrossoverLaw::bernoulli(n, q).unwrap();
                assert!((b.mixed_moment(0.5, 1.0) - (1.0 - q / 2.0).powi(nf)).abs() < 1e-14);
                let expect = (1.0 - q / 2.0).powi(nf) + 0.5f64.powi(nf) * (1.0 + q).powi(nf);
                assert!((b.delta_nu() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn nondegeneracy() {
        for n in 2..=10 {
            for law in named(n) {
                assert!(law.is_nondegenerate(), "{} n={n}", law.name());
            }
            assert!(!CrossoverLaw::bernoulli(n, 0.0).unwrap().is_nondegenerate());
        }
        let a = SiteSubset::from_sites(&[0, 1], 3).unwrap();
        let law = CrossoverLaw::explicit(3, vec![(a, 1.0)]).unwrap();
        assert!(!law.is_nondegenerate());
    }

    #[test]
    fn separation_matches_enumeration() {
        for n in 2..=7 {
            for law in named(n) {
                let support = law.enumerate_support().unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let direct: f64 = support
                            .iter()
                            .filter(|(a, _)| i != j && a.contains(i) != a.contains(j))
                            .map(|(_, w)| w)
                            .sum();
                        assert!((law.separation_probability(i, j) - direct).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 100_000;
        let n = 10;
        let q = 0.25;
        let law = CrossoverLaw::bernoulli(n, q).unwrap();
        let mut hits = 0usize;
        for _ in 0..samples {
            hits += law.sample_subset(&mut rng).len();
        }
        let trials = (samples * n) as f64;
        let freq = hits as f64 / trials;
        let sigma = (q * (1.0 - q) / trials).sqrt();
        assert!((freq - q).abs() <= 3.0 * sigma, "{freq}");

        let law = CrossoverLaw::uniform(n).unwrap();
        let mean = (0..samples).map(|_| law.sample_subset(&mut rng).len() as f64).sum::<f64>() / samples as f64;
        let sigma = (n as f64 / 4.0 / samples as f64).sqrt();
        assert!((mean - n as f64 / 2.0).abs() <= 3.0 * sigma, "{mean}");

        let law = CrossoverLaw::single_site(n).unwrap();
        assert!((0..1000).all(|_| law.sample_subset(&mut rng).len() == 1));
    }

    #[test]
    fn sampling_is_deterministic() {
        let law = CrossoverLaw::one_point(6).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| law.sample_subset(&mut rng).bits()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    proptest! {
        #[test]
        fn explicit_law_sampling_stays_in_support(seed in 0u64..500, w in 0.05f64..0.95) {
            let a = SiteSubset::from_sites(&[0], 3).unwrap();
            let b = SiteSubset::from_sites(&[1, 2], 3).unwrap();
            let law = CrossoverLaw::explicit(3, vec![(a, w), (b, 1.0 - w)]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = law.sample_subset(&mut rng);
            prop_assert!(s == a || s == b);
        }
    }
}
