//! Linearization around a reference measure μ.
//!
//! For `f = 1 + εφ`, `ε⁻²Ent(f) → ½μ[φ²]` and `ε⁻²D(f,f) → −μ[(Γφ)φ]` with
//! `Γ(τ,σ) = Σ_{σ',τ'} μ(τ')[G(τ,τ'; σ,σ') + G(τ,τ'; σ',σ)]`. When `G = Q − 1`
//! this is `Γ = 2K − I − 1⊗μ` for the μ-reversible Markov kernel
//! `K(τ,σ) = ½ Σ μ(τ')[Q(τ,τ'; σ,σ') + Q(τ,τ'; σ',σ)]`.

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Serialize;

use crate::eigen::{symmetric_eigen, Matrix};
use crate::numeric::kahan_sum;
use crate::space::{ProductMeasure, ProductSpace};
use crate::{Error, Result};

use super::{exit_rate, PairGenerator};

/// Largest `|Ω|` for dense linear algebra.
pub const SPECTRAL_CAP: usize = 1 << 10;
/// Tolerance on row sums and reversibility of K.
pub const KERNEL_TOL: f64 = 1e-12;
/// Eigenvalues within this distance of ½ count as conserved.
pub const EIGEN_MATCH_TOL: f64 = 1e-8;

fn check_cap(space: &ProductSpace) -> Result<usize> {
    let m = space.total_size();
    if m > SPECTRAL_CAP {
        return Err(Error::SpaceTooLarge { size: m as u128, cap: SPECTRAL_CAP });
    }
    Ok(m)
}

/// Dense Γ; works for any generator.
pub fn gamma_matrix<G: PairGenerator + ?Sized>(g: &G, measure: &ProductMeasure) -> Result<Matrix> {
    if measure.space() != g.space() {
        return Err(Error::SpaceMismatch);
    }
    gamma_matrix_raw(g, measure.weights())
}

/// [`gamma_matrix`] for a reference measure given by its weights.
pub fn gamma_matrix_raw<G: PairGenerator + ?Sized>(g: &G, mu: &[f64]) -> Result<Matrix> {
    let m = check_cap(g.space())?;
    if mu.len() != m {
        return Err(Error::SpaceMismatch);
    }
    let mut gamma = Matrix::zeros(m);
    for t in 0..m {
        for t2 in 0..m {
            let w = mu[t2];
            let mut exit = 0.0;
            g.for_each_transition(t, t2, &mut |s, s2, r| {
                gamma[(t, s)] += w * r;
                gamma[(t, s2)] += w * r;
                exit += r;
            });
            gamma[(t, t)] -= w * exit;
            gamma[(t, t2)] -= w * exit;
        }
    }
    Ok(gamma)
}

/// The kernel K together with μ.
#[derive(Clone, Debug)]
pub struct LinearizedKernel {
    pub kernel: Matrix,
    pub mu: Vec<f64>,
}

impl LinearizedKernel {
    pub fn row_sum_defect(&self) -> f64 {
        let m = self.kernel.dim;
        (0..m)
            .map(|i| (kahan_sum((0..m).map(|j| self.kernel[(i, j)])) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|μ(τ)K(τ,σ) − μ(σ)K(σ,τ)|`.
    pub fn reversibility_defect(&self) -> f64 {
        let m = self.kernel.dim;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((self.mu[i] * self.kernel[(i, j)] - self.mu[j] * self.kernel[(j, i)]).abs());
            }
        }
        worst
    }

    /// `Γ = 2K − I − 1⊗μ`.
    pub fn gamma(&self) -> Matrix {
        let m = self.kernel.dim;
        Matrix::from_fn(m, |i, j| 2.0 * self.kernel[(i, j)] - if i == j { 1.0 } else { 0.0 } - self.mu[j])
    }
}

/// K for a generator of the form `G = Q − 1`.
pub fn linearize<G: PairGenerator + ?Sized>(g: &G, measure: &ProductMeasure) -> Result<LinearizedKernel> {
    if measure.space() != g.space() {
        return Err(Error::SpaceMismatch);
    }
    linearize_raw(g, measure.weights())
}

/// [`linearize`] for a reference measure given by its weights.
pub fn linearize_raw<G: PairGenerator + ?Sized>(g: &G, mu: &[f64]) -> Result<LinearizedKernel> {
    if !g.is_kernel_form() {
        return Err(Error::NotKernelForm);
    }
    let m = check_cap(g.space())?;
    if mu.len() != m {
        return Err(Error::SpaceMismatch);
    }
    let mut k = Matrix::zeros(m);
    for t in 0..m {
        for t2 in 0..m {
            let w = 0.5 * mu[t2];
            g.for_each_transition(t, t2, &mut |s, s2, r| {
                k[(t, s)] += w * r;
                k[(t, s2)] += w * r;
            });
            // Q keeps the pair with the remaining mass
            let stay = 1.0 - exit_rate(g, t, t2);
            if stay < -KERNEL_TOL {
                return Err(Error::NotKernelForm);
            }
            k[(t, t)] += w * stay;
            k[(t, t2)] += w * stay;
        }
    }
    Ok(LinearizedKernel { kernel: k, mu: mu.to_vec() })
}

/// An L²(μ)-orthonormal family spanning the constants and the conserved
/// quantities; the constant function comes first.
#[derive(Clone, Debug)]
pub struct ConservedBasis {
    pub vectors: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl ConservedBasis {
    /// Constants plus all single-site functions (the conserved quantities of
    /// recombination and of the conservative Ising systems).
    pub fn single_site(measure: &ProductMeasure) -> Self {
        let space = measure.space();
        let m = space.total_size();
        let mut fns = vec![vec![1.0; m]];
        for i in 0..space.num_sites() {
            for a in 1..space.size(i) {
                fns.push((0..m).map(|x| if space.digit(x, i) == a { 1.0 } else { 0.0 }).collect());
            }
        }
        Self::from_functions(measure.weights(), fns)
    }

    /// Gram–Schmidt in L²(μ); numerically dependent functions are dropped.
    pub fn from_functions(mu: &[f64], fns: Vec<Vec<f64>>) -> Self {
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for mut v in fns {
            for _ in 0..2 {
                for b in &vectors {
                    let c = inner(mu, &v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = inner(mu, &v, &v).sqrt();
            if norm > 1e-10 {
                v.iter_mut().for_each(|x| *x /= norm);
                vectors.push(v);
            }
        }
        Self { vectors, mu: mu.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Removes the span of the basis from `φ` (twice, for stability).
    pub fn project_out(&self, phi: &mut [f64]) {
        for _ in 0..2 {
            for b in &self.vectors {
                let c = inner(&self.mu, phi, b);
                phi.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
    }

    /// A random direction orthogonal to the basis, normalized so `μ[φ²] = 1`.
    pub fn random_orthogonal<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let mut phi: Vec<f64> = (0..self.mu.len()).map(|_| StandardNormal.sample(rng)).collect();
            self.project_out(&mut phi);
            let norm = inner(&self.mu, &phi, &phi).sqrt();
            if norm > 1e-6 {
                phi.iter_mut().for_each(|x| *x /= norm);
                return phi;
            }
        }
    }
}

/// `μ[uv]`.
pub fn inner(mu: &[f64], u: &[f64], v: &[f64]) -> f64 {
    kahan_sum(mu.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b))
}

/// `−μ[(Γφ)φ]`.
pub fn linear_dissipation(gamma: &Matrix, mu: &[f64], phi: &[f64]) -> f64 {
    -inner(mu, &gamma.mul_vec(phi), phi)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// All eigenvalues of K, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues within tolerance of 1 and of ½.
    pub multiplicity_one: usize,
    pub multiplicity_half: usize,
    /// Dimension of the supplied conserved span, constants excluded.
    pub conserved_dimension: usize,
    /// `max ‖K1 − 1‖` and `max ‖Kψ̄ − ½ψ̄‖` (sup norm) over the basis.
    pub constant_residual: f64,
    pub conserved_residual: f64,
    /// Largest eigenvalue on the L²(μ)-orthogonal complement of the basis.
    pub complement_max: Option<f64>,
}

/// Spectrum of K, split along the conserved basis.
pub fn spectrum(k: &LinearizedKernel, basis: &ConservedBasis) -> Result<SpectrumReport> {
    let rev = k.reversibility_defect();
    if rev > KERNEL_TOL {
        return Err(Error::NotReversible(format!("μ(τ)K(τ,σ) − μ(σ)K(σ,τ) reaches {rev:e}")));
    }
    let m = k.kernel.dim;
    let sq: Vec<f64> = k.mu.iter().map(|v| v.sqrt()).collect();
    let s = Matrix::from_fn(m, |i, j| sq[i] / sq[j] * k.kernel[(i, j)]);
    let (eigenvalues, _) = symmetric_eigen(&s)?;

    let residual = |v: &[f64], lambda: f64| -> f64 {
        let kv = k.kernel.mul_vec(v);
        kv.iter().zip(v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max)
    };
    let constant_residual = basis.vectors.first().map_or(0.0, |v| residual(v, 1.0));
    let conserved_residual = basis.vectors.iter().skip(1).map(|v| residual(v, 0.5)).fold(0.0, f64::max);

    // orthonormal complement of {√μ·b} in Euclidean coordinates
    let transformed: Vec<Vec<f64>> =
        basis.vectors.iter().map(|b| b.iter().zip(&sq).map(|(x, r)| x * r).collect()).collect();
    let mut comp: Vec<Vec<f64>> = Vec::new();
    for e in 0..m {
        let mut v = vec![0.0; m];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in transformed.iter().chain(comp.iter()) {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            comp.push(v);
        }
        if comp.len() + transformed.len() == m {
            break;
        }
    }
    let complement_max = if comp.is_empty() {
        None
    } else {
        let sv: Vec<Vec<f64>> = comp.iter().map(|v| s.mul_vec(v)).collect();
        let c = Matrix::from_fn(comp.len(), |i, j| comp[i].iter().zip(&sv[j]).map(|(a, b)| a * b).sum());
        let (vals, _) = symmetric_eigen(&c)?;
        vals.first().copied()
    };
    let count = |target: f64| eigenvalues.iter().filter(|v| (*v - target).abs() <= EIGEN_MATCH_TOL).count();
    Ok(SpectrumReport {
        multiplicity_one: count(1.0),
        multiplicity_half: count(0.5),
        conserved_dimension: basis.dim().saturating_sub(1),
        constant_residual,
        conserved_residual,
        complement_max,
        eigenvalues,
    })
}
