//! The sharp test density and one-step decay bounds.
//!
//! With `w = 2⁻ⁿ`, `μ = Bernoulli(w)^{⊗n}` and `B(u)` the product of
//! Bernoulli(u) laws, the mixture `p = w²B(1) + (1−w)²B(0) + 2w(1−w)B(½)` has
//! the marginals of μ. Its density takes three levels:
//! `a/wⁿ` at `1…1`, `b/(1−w)ⁿ` at `0…0`, and `c/μ(σ)` elsewhere. Both
//! `Ent(f)` and `D(f,f)` have closed forms in terms of the mixed moments of ν,
//! and `D/Ent ≈ 4(1−Δ_ν)/n` for large n.

use serde::Serialize;

use crate::crossover::CrossoverLaw;
use crate::dynamics::RecombinationOperator;
use crate::entropy::{ent, relative_entropy_raw};
use crate::numeric::kahan_sum;
use crate::rqs::generators::RecombinationGenerator;
use crate::rqs::entropy_production;
use crate::space::{Density, Distribution, ProductMeasure};
use crate::{Error, Result};

use super::kappa::kappa_theoretical;

/// Largest n accepted by the closed-form evaluation.
pub const SHARP_MAX_N: usize = 40;
/// Largest n for which the density itself is materialized.
pub const SHARP_DENSITY_MAX_N: usize = 20;

fn check_n(n: usize, max: usize) -> Result<()> {
    if !(2..=max).contains(&n) {
        return Err(Error::OutOfRange(format!("sharp test needs 2 ≤ n ≤ {max}, got {n}")));
    }
    Ok(())
}

fn levels(n: usize) -> (f64, f64, f64, f64) {
    let w = 0.5f64.powi(n as i32);
    let c = 2.0 * w * (1.0 - w) * w;
    (w, w * w + c, (1.0 - w) * (1.0 - w) + c, c)
}

/// `f = p/μ` on `{0,1}ⁿ` with `μ = Bernoulli(2⁻ⁿ)^{⊗n}`.
pub fn sharp_test_density(n: usize) -> Result<Density> {
    check_n(n, SHARP_DENSITY_MAX_N)?;
    let (w, a, b, c) = levels(n);
    let measure = ProductMeasure::bernoulli(n, w)?;
    let top = (1usize << n) - 1;
    let values = (0..=top)
        .map(|x| {
            let p = match x {
                0 => b,
                _ if x == top => a,
                _ => c,
            };
            p / measure.prob(x)
        })
        .collect();
    Density::new(measure, values)
}

/// Closed-form evaluation of the sharp test.
#[derive(Clone, Debug, Serialize)]
pub struct SharpTestReport {
    pub n: usize,
    pub model: String,
    pub q: Option<f64>,
    pub w: f64,
    pub ent: f64,
    pub d: f64,
    /// `D/Ent`.
    pub ratio: f64,
    pub delta_nu: f64,
    /// `4(1−Δ_ν)/n`.
    pub asymptote: f64,
    pub kappa: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `Ψ[p](0…0)` and `Ψ[p](1…1)`.
    pub alpha_0: f64,
    pub alpha_n: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `a + b + (2ⁿ−2)c − 1`.
    pub normalization_defect: f64,
}

/// The nine components `(weight; u, v)` of `Ψ[p]`: products
/// `B_A(u) ⊗ B_{Aᶜ}(v)` from pairs of mixture components.
fn components(w: f64) -> [(f64, f64, f64); 9] {
    let v = 1.0 - w;
    [
        (w.powi(4), 1.0, 1.0),
        (v.powi(4), 0.0, 0.0),
        (4.0 * w * w * v * v, 0.5, 0.5),
        (w * w * v * v, 1.0, 0.0),
        (w * w * v * v, 0.0, 1.0),
        (2.0 * w * v.powi(3), 0.0, 0.5),
        (2.0 * w * v.powi(3), 0.5, 0.0),
        (2.0 * w.powi(3) * v, 1.0, 0.5),
        (2.0 * w.powi(3) * v, 0.5, 1.0),
    ]
}

/// `Ent(f)` and `D(f,f)` from the closed forms, each summand in double
/// precision; `1 − α₀` is accumulated directly to avoid cancellation.
pub fn sharp_test_closed_form(n: usize, law: &CrossoverLaw) -> Result<SharpTestReport> {
    check_n(n, SHARP_MAX_N)?;
    if law.n() != n {
        return Err(Error::SpaceMismatch);
    }
    let nf = n as f64;
    let (w, a, b, c) = levels(n);
    let spread = 1.0 - 2.0 * w; // 1 − 2^{−n+1}

    let lw = -nf * std::f64::consts::LN_2;
    let l1w = (-w).ln_1p();
    let b_minus_one = w * w - 2.0 * w + c;
    let log_top = 2.0 * lw + (3.0 - 2.0 * w).ln() - nf * lw; // log(a/wⁿ)
    let log_bottom = b_minus_one.ln_1p() - nf * l1w; // log(b/(1−w)ⁿ)
    let log_mid = std::f64::consts::LN_2 + 2.0 * lw + l1w - nf * l1w; // log(c/(1−w)ⁿ)
    let log_odds = l1w - lw; // log((1−w)/w)

    let mid_mass = 2.0 * w * (1.0 - w) * spread;
    let ent_val = kahan_sum([
        a * log_top,
        b * log_bottom,
        mid_mass * log_mid,
        nf * w * (1.0 - w) * spread * log_odds,
    ]);

    let comps = components(w);
    let alpha_n = kahan_sum(comps.iter().map(|&(wt, u, v)| wt * law.mixed_moment(u, v)));
    let one_minus_alpha0 = kahan_sum(comps.iter().map(|&(wt, u, v)| {
        if u == 0.0 && v == 0.0 {
            0.0
        } else {
            wt * (1.0 - law.mixed_moment(1.0 - u, 1.0 - v))
        }
    }));
    let alpha_0 = 1.0 - one_minus_alpha0;
    let beta = mid_mass - one_minus_alpha0 + alpha_n;
    let gamma = nf * alpha_n - nf * w * (2.0 * w * (1.0 - w) + w);
    let d = kahan_sum([
        (a - alpha_n) * log_top,
        (b_minus_one + one_minus_alpha0) * log_bottom,
        beta * log_mid,
        gamma * log_odds,
    ]);

    let delta_nu = law.delta_nu();
    let two_n = 2f64.powi(n as i32);
    Ok(SharpTestReport {
        n,
        model: law.name().to_string(),
        q: law.q(),
        w,
        ent: ent_val,
        d,
        ratio: d / ent_val,
        delta_nu,
        asymptote: 4.0 * (1.0 - delta_nu) / nf,
        kappa: kappa_theoretical(law).ok(),
        a,
        b,
        c,
        alpha_0,
        alpha_n,
        beta,
        gamma,
        normalization_defect: (a - 1.0) + b + (two_n - 2.0) * c,
    })
}

/// `(Ent(f), D(f,f))` by exhaustive summation over Ω and Ω×Ω.
pub fn sharp_test_exhaustive(n: usize, law: &CrossoverLaw) -> Result<(f64, f64)> {
    let f = sharp_test_density(n)?;
    let g = RecombinationGenerator::new(f.space(), law)?;
    let d = entropy_production(&f, &f, &g)?;
    Ok((ent(&f), d))
}

/// `max_n n·|n·ratio − 4(1−Δ_ν)|` over the given range of n, i.e. the
/// smallest C with `|n·ratio − 4(1−Δ_ν)| ≤ C/n` there.
pub fn fit_sharp_constant(law: &CrossoverLaw, ns: impl IntoIterator<Item = usize>) -> Result<f64> {
    let mut c = 0.0f64;
    for n in ns {
        let r = sharp_test_closed_form(n, &law.with_sites(n)?)?;
        let nf = n as f64;
        c = c.max(nf * (nf * r.ratio - 4.0 * (1.0 - r.delta_nu)).abs());
    }
    Ok(c)
}

/// One discrete step `p ↦ Ψ[p]` measured against `π = ⊗pᵢ`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayCheck {
    /// `H(p|π)` and `H(Ψ[p]|π)`.
    pub h0: f64,
    pub h1: f64,
    pub kappa: Option<f64>,
    /// `(1−κ)H(p|π)`.
    pub upper: Option<f64>,
    /// `Σ Ψ[p] log(p/π) = H(p|π) − D(f,f)`, a lower bound for `H(Ψ[p]|π)`
    /// by the variational principle; needs `p` of full support.
    pub lower: Option<f64>,
    /// `D(f,f)/Ent(f)`.
    pub gamma: Option<f64>,
}

impl DecayCheck {
    pub fn upper_holds(&self, tol: f64) -> bool {
        self.upper.is_none_or(|u| self.h1 <= u + tol)
    }

    pub fn lower_holds(&self, tol: f64) -> bool {
        self.lower.is_none_or(|l| self.h1 >= l - tol)
    }
}

pub fn discrete_decay_check(p: &Distribution, law: &CrossoverLaw) -> Result<DecayCheck> {
    let op = RecombinationOperator::new(p.space(), law)?;
    let pi = ProductMeasure::from_marginals(p);
    let next = op.apply(p.weights());
    let h0 = relative_entropy_raw(p.weights(), pi.weights());
    let h1 = relative_entropy_raw(&next, pi.weights());
    let kappa = kappa_theoretical(law).ok();
    let (lower, gamma) = if p.is_full_support() && pi.is_positive() {
        let l = kahan_sum(next.iter().zip(p.weights()).zip(pi.weights()).map(|((q, x), m)| q * (x / m).ln()));
        (Some(l), (h0 > 0.0).then(|| (h0 - l) / h0))
    } else {
        (None, None)
    };
    Ok(DecayCheck { h0, h1, kappa, upper: kappa.map(|k| (1.0 - k) * h0), lower, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::kappa::identical_copies_density;

    fn models(n: usize) -> Vec<CrossoverLaw> {
        vec![
            CrossoverLaw::single_site(n).unwrap(),
            CrossoverLaw::one_point(n).unwrap(),
            CrossoverLaw::uniform(n).unwrap(),
            CrossoverLaw::bernoulli(n, 0.1).unwrap(),
            CrossoverLaw::bernoulli(n, 0.25).unwrap(),
        ]
    }

    #[test]
    fn density_has_equilibrium_marginals() {
        for n in [2, 5, 8] {
            let f = sharp_test_density(n).unwrap();
            assert!(f.is_strictly_positive());
            assert!(f.max_site_deviation() < 1e-12, "n={n}");
        }
        assert!(sharp_test_density(1).is_err());
    }

    #[test]
    fn normalization() {
        for n in 2..=40 {
            let r = sharp_test_closed_form(n, &CrossoverLaw::uniform(n).unwrap()).unwrap();
            assert!(r.normalization_defect.abs() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn closed_form_matches_exhaustive_small() {
        for n in [3, 5] {
            for law in models(n) {
                let r = sharp_test_closed_form(n, &law).unwrap();
                let (e, d) = sharp_test_exhaustive(n, &law).unwrap();
                assert!((r.ent - e).abs() <= 1e-12 * e, "{} n={n}: {} vs {e}", law.name(), r.ent);
                assert!((r.d - d).abs() <= 1e-9 * d, "{} n={n}: {} vs {d}", law.name(), r.d);
            }
        }
    }

    #[test]
    fn alphas_match_a_direct_step() {
        let n = 6;
        for law in models(n) {
            let f = sharp_test_density(n).unwrap();
            let p = f.to_distribution();
            let op = RecombinationOperator::new(p.space(), &law).unwrap();
            let next = op.apply(p.weights());
            let r = sharp_test_closed_form(n, &law).unwrap();
            assert!((next[0] - r.alpha_0).abs() < 1e-14);
            assert!((next[(1 << n) - 1] - r.alpha_n).abs() < 1e-14 * r.alpha_n.max(1e-300) + 1e-20);
        }
    }

    #[test]
    fn alpha_zero_expansion() {
        for n in 10..=40 {
            for law in models(n) {
                let r = sharp_test_closed_form(n, &law).unwrap();
                let approx = 1.0 - 4.0 * r.w + 2.0 * r.w * r.delta_nu;
                assert!((r.alpha_0 - approx).abs() <= 100.0 * r.w * r.w, "{} n={n}", law.name());
            }
        }
    }

    #[test]
    fn decay_at_equilibrium_is_trivial() {
        let pi = ProductMeasure::new(vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let c = discrete_decay_check(&pi.to_distribution(), &CrossoverLaw::uniform(3).unwrap()).unwrap();
        assert!(c.h0.abs() < 1e-15 && c.h1.abs() < 1e-15);
    }

    #[test]
    fn identical_copies_uniform_three() {
        let f = identical_copies_density(3, &[0.5, 0.5]).unwrap();
        let c = discrete_decay_check(&f.to_distribution(), &CrossoverLaw::uniform(3).unwrap()).unwrap();
        assert!(c.h1 <= 5.0 / 8.0 * c.h0 + 1e-12);
        assert!(c.lower.is_none());
    }

    #[test]
    fn sharp_density_sandwich() {
        let n = 8;
        for law in models(n) {
            let p = sharp_test_density(n).unwrap().to_distribution();
            let c = discrete_decay_check(&p, &law).unwrap();
            assert!(c.upper_holds(1e-12), "{}", law.name());
            assert!(c.lower_holds(1e-12), "{}", law.name());
            let r = sharp_test_closed_form(n, &law).unwrap();
            assert!((c.gamma.unwrap() - r.ratio).abs() < 1e-8 * r.ratio, "{}", law.name());
        }
    }
}
