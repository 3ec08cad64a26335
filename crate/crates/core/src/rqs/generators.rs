//! Concrete pair generators: recombination, the symmetrized version of any
//! generator, the lift of a single-chain Markov generator, and sums.

use crate::crossover::CrossoverLaw;
use crate::eigen::Matrix;
use crate::space::{ProductSpace, SiteSubset};
use crate::{Error, Result};

use super::PairGenerator;

/// `Q(σ,σ'; τ,τ') = Σ_A ν(A) 1(τ = σ'_A σ_{Aᶜ}, τ' = σ_A σ'_{Aᶜ})`, `G = Q − 1`.
#[derive(Clone, Debug)]
pub struct RecombinationGenerator {
    space: ProductSpace,
    support: Vec<(SiteSubset, f64)>,
}

impl RecombinationGenerator {
    pub fn new(space: &ProductSpace, law: &CrossoverLaw) -> Result<Self> {
        if law.n() != space.num_sites() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space: space.clone(), support: law.enumerate_support()? })
    }

    pub fn support(&self) -> &[(SiteSubset, f64)] {
        &self.support
    }
}

impl PairGenerator for RecombinationGenerator {
    fn space(&self) -> &ProductSpace {
        &self.space
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        for &(a, w) in &self.support {
            let (t, t2) = self.space.recombine_indices(s, s2, a);
            if (t, t2) != (s, s2) {
                visit(t, t2, w);
            }
        }
    }
}

/// The symmetrized generator
/// `G_sym(τ,τ'; σ,σ') = ½(G(τ,τ'; σ,σ') + G(τ',τ; σ,σ'))` off `{(τ,τ'), (τ',τ)}`,
/// with `G_sym(τ,τ'; τ',τ) = G(τ,τ'; τ',τ)`. It drives the same flow as `G`
/// whenever `G` has the pair symmetry.
#[derive(Clone, Debug)]
pub struct Symmetrized<G> {
    inner: G,
}

impl<G: PairGenerator> Symmetrized<G> {
    pub fn new(inner: G) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: PairGenerator> PairGenerator for Symmetrized<G> {
    fn space(&self) -> &ProductSpace {
        self.inner.space()
    }

    fn for_each_transition(&self, t: usize, t2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        if t == t2 {
            self.inner.for_each_transition(t, t2, visit);
            return;
        }
        self.inner.for_each_transition(t, t2, &mut |s, s2, r| {
            if (s, s2) == (t2, t) {
                visit(s, s2, r);
            } else {
                visit(s, s2, 0.5 * r);
            }
        });
        self.inner.for_each_transition(t2, t, &mut |s, s2, r| {
            if (s, s2) != (t, t2) {
                visit(s, s2, 0.5 * r);
            }
        });
    }

    fn is_kernel_form(&self) -> bool {
        self.inner.is_kernel_form()
    }
}

/// A single-chain generator `G₀` acting on each member of the pair:
/// `G(σ,σ'; τ,τ') = G₀(σ,τ)1(σ'=τ') + G₀(σ',τ')1(σ=τ)`.
#[derive(Clone, Debug)]
pub struct MarkovLift {
    space: ProductSpace,
    /// Off-diagonal rates of `G₀`, sparse per row.
    rows: Vec<Vec<(usize, f64)>>,
}

impl MarkovLift {
    /// From a dense generator matrix; the diagonal is ignored.
    pub fn new(space: &ProductSpace, generator: &Matrix) -> Result<Self> {
        let m = space.total_size();
        if generator.dim != m {
            return Err(Error::SpaceMismatch);
        }
        let mut rows = vec![Vec::new(); m];
        for (s, row) in rows.iter_mut().enumerate() {
            for t in 0..m {
                let r = generator[(s, t)];
                if t != s && r != 0.0 {
                    if r < 0.0 {
                        return Err(Error::OutOfRange(format!("negative rate {r} from {s} to {t}")));
                    }
                    row.push((t, r));
                }
            }
        }
        Ok(Self { space: space.clone(), rows })
    }
}

impl PairGenerator for MarkovLift {
    fn space(&self) -> &ProductSpace {
        &self.space
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        for &(t, r) in &self.rows[s] {
            visit(t, s2, r);
        }
        for &(t2, r) in &self.rows[s2] {
            visit(s, t2, r);
        }
    }

    fn is_kernel_form(&self) -> bool {
        false
    }
}

/// `G₁ + G₂`.
#[derive(Clone, Debug)]
pub struct SumGenerator<A, B> {
    first: A,
    second: B,
}

impl<A: PairGenerator, B: PairGenerator> SumGenerator<A, B> {
    pub fn new(first: A, second: B) -> Result<Self> {
        if first.space() != second.space() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> &A {
        &self.first
    }

    pub fn second(&self) -> &B {
        &self.second
    }
}

impl<A: PairGenerator, B: PairGenerator> PairGenerator for SumGenerator<A, B> {
    fn space(&self) -> &ProductSpace {
        self.first.space()
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        self.first.for_each_transition(s, s2, visit);
        self.second.for_each_transition(s, s2, visit);
    }

    fn is_kernel_form(&self) -> bool {
        false
    }
}

impl<G: PairGenerator + ?Sized> PairGenerator for &G {
    fn space(&self) -> &ProductSpace {
        (**self).space()
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        (**self).for_each_transition(s, s2, visit)
    }

    fn is_kernel_form(&self) -> bool {
        (**self).is_kernel_form()
    }
}

impl<G: PairGenerator + ?Sized> PairGenerator for Box<G> {
    fn space(&self) -> &ProductSpace {
        (**self).space()
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        (**self).for_each_transition(s, s2, visit)
    }

    fn is_kernel_form(&self) -> bool {
        (**self).is_kernel_form()
    }
}
