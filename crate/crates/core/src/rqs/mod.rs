//! Reversible quadratic systems.
//!
//! A pair generator `G(σ,σ'; τ,τ')` is given lazily: from a pair `(σ,σ')` it
//! lists the off-diagonal targets `(τ,τ')` with their rates; the diagonal is
//! implied by zero row sums. The flow is `dp/dt(τ) = Σ_{τ'} Φ[p](τ,τ')` with
//! `Φ[p](τ,τ') = Σ p(σ)p(σ')G(σ,σ';τ,τ')`.

pub mod generators;
pub mod linear;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, EvolutionTrace, IntegrationOptions};
use crate::numeric::{kahan_sum, KahanSum};
use crate::space::{Density, Distribution, ProductSpace};
use crate::{Error, Result};

pub use generators::{MarkovLift, RecombinationGenerator, SumGenerator, Symmetrized};
pub use linear::{gamma_matrix, linearize, spectrum, ConservedBasis, LinearizedKernel, SpectrumReport};

/// Tolerance of the product identity in [`is_stationary`].
pub const STATIONARITY_TOL: f64 = 1e-10;

pub trait PairGenerator: Send + Sync {
    fn space(&self) -> &ProductSpace;

    /// Calls `visit(τ, τ', rate)` for the off-diagonal transitions out of
    /// `(σ, σ')`. The pair `(σ, σ')` itself is never visited; a target may be
    /// visited more than once, in which case the rates add up.
    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64));

    /// Whether `G = Q − 1` for a Markov kernel `Q` (exit rates at most one).
    fn is_kernel_form(&self) -> bool {
        true
    }
}

/// Aggregated off-diagonal transitions out of `(σ, σ')`, sorted by target.
pub fn transitions<G: PairGenerator + ?Sized>(g: &G, s: usize, s2: usize) -> Vec<((usize, usize), f64)> {
    let mut out: Vec<((usize, usize), f64)> = Vec::new();
    g.for_each_transition(s, s2, &mut |t, t2, r| out.push(((t, t2), r)));
    out.sort_by_key(|e| e.0);
    let mut merged: Vec<((usize, usize), f64)> = Vec::with_capacity(out.len());
    for (k, r) in out {
        match merged.last_mut() {
            Some(last) if last.0 == k => last.1 += r,
            _ => merged.push((k, r)),
        }
    }
    merged
}

pub fn exit_rate<G: PairGenerator + ?Sized>(g: &G, s: usize, s2: usize) -> f64 {
    let mut acc = KahanSum::new();
    g.for_each_transition(s, s2, &mut |_, _, r| acc.add(r));
    acc.value()
}

/// `G(σ,σ'; τ,τ')`, diagonal included.
pub fn rate<G: PairGenerator + ?Sized>(g: &G, s: usize, s2: usize, t: usize, t2: usize) -> f64 {
    if (s, s2) == (t, t2) {
        return -exit_rate(g, s, s2);
    }
    let mut acc = 0.0;
    g.for_each_transition(s, s2, &mut |a, b, r| {
        if (a, b) == (t, t2) {
            acc += r;
        }
    });
    acc
}

/// All ordered pairs of a space of `m` states.
pub fn all_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |s| (0..m).map(move |s2| (s, s2)))
}

/// Largest violation of `μ(σ)μ(σ')G(σ,σ';τ,τ') = μ(τ)μ(τ')G(τ,τ';σ,σ')` over
/// transitions out of the given pairs.
pub fn reversibility_defect<G, I>(g: &G, mu: &[f64], pairs: I) -> f64
where
    G: PairGenerator + ?Sized,
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut worst = 0.0f64;
    for (s, s2) in pairs {
        for ((t, t2), r) in transitions(g, s, s2) {
            let back = rate(g, t, t2, s, s2);
            worst = worst.max((mu[s] * mu[s2] * r - mu[t] * mu[t2] * back).abs());
        }
    }
    worst
}

/// Largest violation of `G(σ,σ'; τ,τ') = G(σ',σ; τ',τ)`, diagonal included.
pub fn pair_symmetry_defect<G, I>(g: &G, pairs: I) -> f64
where
    G: PairGenerator + ?Sized,
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut worst = 0.0f64;
    for (s, s2) in pairs {
        let fwd = transitions(g, s, s2);
        let mut bwd: Vec<((usize, usize), f64)> =
            transitions(g, s2, s).into_iter().map(|((a, b), r)| ((b, a), r)).collect();
        bwd.sort_by_key(|e| e.0);
        worst = worst.max(sorted_rate_distance(&fwd, &bwd));
        worst = worst.max((exit_rate(g, s, s2) - exit_rate(g, s2, s)).abs());
    }
    worst
}

/// Largest violation of `G(τ,τ'; σ,σ') = G(τ',τ; σ,σ')` for `(σ,σ') ∉ {(τ,τ'), (τ',τ)}`.
pub fn swap_symmetry_defect<G, I>(g: &G, pairs: I) -> f64
where
    G: PairGenerator + ?Sized,
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut worst = 0.0f64;
    for (t, t2) in pairs {
        let keep = |v: Vec<((usize, usize), f64)>| -> Vec<((usize, usize), f64)> {
            v.into_iter().filter(|(k, _)| *k != (t, t2) && *k != (t2, t)).collect()
        };
        let a = keep(transitions(g, t, t2));
        let b = keep(transitions(g, t2, t));
        worst = worst.max(sorted_rate_distance(&a, &b));
    }
    worst
}

fn sorted_rate_distance(a: &[((usize, usize), f64)], b: &[((usize, usize), f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut worst = 0.0f64;
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                worst = worst.max((x.1 - y.1).abs());
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                worst = worst.max(x.1.abs());
                i += 1;
            }
            (Some(_), Some(y)) => {
                worst = worst.max(y.1.abs());
                j += 1;
            }
            (Some(x), None) => {
                worst = worst.max(x.1.abs());
                i += 1;
            }
            (None, Some(y)) => {
                worst = worst.max(y.1.abs());
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    worst
}

/// `drift(τ) = Σ_{τ'} Φ[p](τ,τ')`.
pub fn drift<G: PairGenerator + ?Sized>(g: &G, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut out = vec![0.0; m];
    for s in 0..m {
        if p[s] == 0.0 {
            continue;
        }
        for s2 in 0..m {
            let w = p[s] * p[s2];
            if w == 0.0 {
                continue;
            }
            g.for_each_transition(s, s2, &mut |t, _, r| {
                out[t] += w * r;
                out[s] -= w * r;
            });
        }
    }
    out
}

/// The full matrix `Φ[p]` (row-major over `(τ, τ')`).
pub fn phi_matrix<G: PairGenerator + ?Sized>(g: &G, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut out = vec![0.0; m * m];
    for s in 0..m {
        for s2 in 0..m {
            let w = p[s] * p[s2];
            if w == 0.0 {
                continue;
            }
            g.for_each_transition(s, s2, &mut |t, t2, r| {
                out[t * m + t2] += w * r;
                out[s * m + s2] -= w * r;
            });
        }
    }
    out
}

/// `D(f,g) = ¼ Σ μ(τ)μ(τ')G(τ,τ';σ,σ')[f(σ)f(σ') − f(τ)f(τ')] log(g(σ)g(σ')/(g(τ)g(τ')))`.
///
/// `g` must be strictly positive.
pub fn entropy_production<G: PairGenerator + ?Sized>(f: &Density, g_density: &Density, g: &G) -> Result<f64> {
    if f.measure() != g_density.measure() || f.space() != g.space() {
        return Err(Error::SpaceMismatch);
    }
    entropy_production_raw(f.values(), g_density.values(), f.measure().weights(), g)
}

/// [`entropy_production`] on raw vectors; `f` and `g` need not be normalized.
pub fn entropy_production_raw<G: PairGenerator + ?Sized>(f: &[f64], gv: &[f64], mu: &[f64], g: &G) -> Result<f64> {
    if let Some(v) = gv.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositive(format!("second argument of D has the value {v}")));
    }
    let logg: Vec<f64> = gv.iter().map(|v| v.ln()).collect();
    entropy_production_logs(f, &logg, mu, g)
}

/// [`entropy_production`] with `log g` supplied by the caller (useful when `g`
/// is so close to one that `ln_1p` matters).
pub fn entropy_production_logs<G: PairGenerator + ?Sized>(f: &[f64], logg: &[f64], mu: &[f64], g: &G) -> Result<f64> {
    let m = f.len();
    if logg.len() != m || mu.len() != m || g.space().total_size() != m {
        return Err(Error::SpaceMismatch);
    }
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|t| {
            let mut acc = KahanSum::new();
            for t2 in 0..m {
                let w = mu[t] * mu[t2];
                let ft = f[t] * f[t2];
                let lt = logg[t] + logg[t2];
                g.for_each_transition(t, t2, &mut |s, s2, r| {
                    acc.add(w * r * (f[s] * f[s2] - ft) * (logg[s] + logg[s2] - lt));
                });
            }
            acc.value()
        })
        .collect();
    Ok(0.25 * kahan_sum(partial))
}

/// A transition on which the stationarity identity fails most.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityReport {
    pub stationary: bool,
    pub worst: Option<Witness>,
}

/// Checks `f(σ)f(σ') = f(τ)f(τ')` (with `f = p/μ`) on every positive-rate
/// transition. The violation is measured as `μ(σ)μ(σ')|f(σ)f(σ') − f(τ)f(τ')|`.
pub fn is_stationary<G: PairGenerator + ?Sized>(
    p: &Distribution,
    g: &G,
    mu: &[f64],
    tol: f64,
) -> Result<StationarityReport> {
    if p.space() != g.space() || mu.len() != g.space().total_size() {
        return Err(Error::SpaceMismatch);
    }
    if mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::NonPositive("reference measure".into()));
    }
    let f: Vec<f64> = p.weights().iter().zip(mu).map(|(p, m)| p / m).collect();
    let mut worst: Option<Witness> = None;
    for (s, s2) in all_pairs(f.len()) {
        g.for_each_transition(s, s2, &mut |t, t2, r| {
            if r <= 0.0 {
                return;
            }
            let v = mu[s] * mu[s2] * (f[s] * f[s2] - f[t] * f[t2]).abs();
            if worst.as_ref().is_none_or(|w| v > w.violation) {
                worst = Some(Witness { from: (s, s2), to: (t, t2), violation: v });
            }
        });
    }
    let stationary = worst.as_ref().is_none_or(|w| w.violation <= tol);
    Ok(StationarityReport { stationary, worst })
}

/// Largest `|p_t[ψ] − p_0[ψ]|` along a trace for `ψ = log(ρ/μ)`.
pub fn conserved_check<G: PairGenerator + ?Sized>(
    trace: &EvolutionTrace,
    rho: &Distribution,
    mu: &[f64],
    g: &G,
) -> Result<f64> {
    if !rho.is_full_support() {
        return Err(Error::NonPositive("conserved quantities need a full-support stationary state".into()));
    }
    let report = is_stationary(rho, g, mu, STATIONARITY_TOL)?;
    if !report.stationary {
        let w = report.worst.expect("a violation was found");
        return Err(Error::NotStationary(format!(
            "transition {:?} -> {:?} violates the product identity by {:e}",
            w.from, w.to, w.violation
        )));
    }
    let psi: Vec<f64> = rho.weights().iter().zip(mu).map(|(r, m)| (r / m).ln()).collect();
    let value = |p: &Distribution| kahan_sum(p.weights().iter().zip(&psi).map(|(a, b)| a * b));
    let start = value(&trace.snapshots[0]);
    Ok(trace.snapshots.iter().map(|p| (value(p) - start).abs()).fold(0.0, f64::max))
}

/// Integrates `dp/dt = drift(p)`; H and TV are measured against `reference`.
pub fn evolve<G: PairGenerator + ?Sized>(
    p: &Distribution,
    g: &G,
    reference: &[f64],
    opts: IntegrationOptions,
) -> Result<EvolutionTrace> {
    if p.space() != g.space() || reference.len() != p.space().total_size() {
        return Err(Error::SpaceMismatch);
    }
    integrate(p, reference, |x| drift(g, x), opts)
}
