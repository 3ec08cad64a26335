//! Experiment implementations. Each takes its config and a master seed and
//! returns the tables it produced plus pass/fail assertions.

mod decay;
mod ising;
mod kappa;
mod linearization;
mod rqs;
mod sharp;
mod shearer;
mod spectral;

use recomb_core::dynamics::{integrate, IntegrationOptions};
use recomb_core::entropy::relative_entropy_raw;
use recomb_core::{CrossoverLaw, Distribution};

use crate::config::{ExperimentSpec, Model};
use crate::report::Outcome;
use crate::seeds::task_seed;
use crate::Result;

/// Runs one experiment. Its own `seed` field, when present, replaces `master`.
pub fn run(spec: &ExperimentSpec, master: u64) -> Result<Outcome> {
    let seed = spec.seed().unwrap_or(master);
    let ctx = Ctx { master: seed, experiment: spec.name() };
    let mut out = Outcome::new(spec.name());
    match spec {
        ExperimentSpec::KappaScan(s) => kappa::scan(s, &ctx, &mut out)?,
        ExperimentSpec::KappaTightness(s) => kappa::tightness(s, &mut out)?,
        ExperimentSpec::KappaValidity(s) => kappa::validity(s, &ctx, &mut out)?,
        ExperimentSpec::SharpTest(s) => sharp::table(s, &mut out)?,
        ExperimentSpec::SharpUpperBound(s) => sharp::upper_bound(s, &mut out)?,
        ExperimentSpec::EntropyDecay(s) => decay::run(s, &ctx, &mut out)?,
        ExperimentSpec::SpectralGap(s) => spectral::run(s, &mut out)?,
        ExperimentSpec::Shearer(s) => shearer::run(s, &ctx, &mut out)?,
        ExperimentSpec::RqsAxioms(s) => rqs::run(s, &ctx, &mut out)?,
        ExperimentSpec::IsingStructure(s) => ising::structure(s, &ctx, &mut out)?,
        ExperimentSpec::DissipativeDecay(s) => ising::dissipative(s, &ctx, &mut out)?,
        ExperimentSpec::ConjectureEvidence(s) => ising::conjecture(s, &ctx, &mut out)?,
        ExperimentSpec::Linearization(s) => linearization::run(s, &ctx, &mut out)?,
    }
    Ok(out)
}

/// Seed derivation for the sub-tasks of one experiment.
pub(crate) struct Ctx {
    pub master: u64,
    pub experiment: &'static str,
}

impl Ctx {
    pub fn seed(&self, task: &str, index: u64) -> u64 {
        task_seed(self.master, &format!("{}/{task}", self.experiment), index)
    }
}

/// The four named models on `n` sites, Bernoulli once per `q`.
pub(crate) fn all_laws(n: usize, qs: &[f64]) -> Result<Vec<CrossoverLaw>> {
    let mut laws = vec![Model::SingleSite.law(None, n)?, Model::OnePoint.law(None, n)?, Model::Uniform.law(None, n)?];
    for &q in qs {
        laws.push(Model::Bernoulli.law(Some(q), n)?);
    }
    Ok(laws)
}

/// `single_site`, `bernoulli(q=0.25)`, ...
pub(crate) fn law_label(law: &CrossoverLaw) -> String {
    match law.q() {
        Some(q) => format!("{}(q={q})", law.name()),
        None => law.name().to_string(),
    }
}

/// κ(ν) for the named models, written out independently of the library.
pub(crate) fn kappa_reference(law: &CrossoverLaw) -> Option<f64> {
    let n = law.n() as f64;
    let ni = law.n() as i32;
    match law.name() {
        "single_site" => Some(1.0 / (n - 1.0)),
        "one_point" => Some(1.0 / (n + 1.0)),
        "uniform" => Some((1.0 - 2f64.powi(1 - ni)) / (n - 1.0)),
        "bernoulli" => {
            let q = law.q()?;
            Some((1.0 - (1.0 - q).powi(ni) - q.powi(ni)) / (n - 1.0))
        }
        _ => None,
    }
}

/// Central difference of `t ↦ H(p_t|reference)` at `t = 0` along
/// `dp/dt = field(p)`, one RK4 step forward and one backward.
pub(crate) fn entropy_derivative<F>(p: &Distribution, reference: &[f64], field: F, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let opts = IntegrationOptions::new(h).dt(h);
    let fwd = integrate(p, reference, &field, opts)?;
    let bwd = integrate(p, reference, |x| field(x).into_iter().map(|v| -v).collect(), opts)?;
    let hf = relative_entropy_raw(fwd.last().weights(), reference);
    let hb = relative_entropy_raw(bwd.last().weights(), reference);
    Ok((hf - hb) / (2.0 * h))
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use recomb_core::inequality::kappa_theoretical;

    #[test]
    fn library_kappa_matches_reference() {
        for n in 2..=12 {
            for law in all_laws(n, &[0.0, 0.1, 0.25, 0.5]).unwrap() {
                let a = kappa_theoretical(&law).unwrap();
                let b = kappa_reference(&law).unwrap();
                assert!((a - b).abs() <= 1e-15, "{} n={n}", law_label(&law));
            }
        }
    }

    #[test]
    fn derivative_of_linear_flow() {
        // dp/dt = π − p relaxes towards π; dH/dt at 0 is −Σ(p−π)log(p/π)
        let space = recomb_core::ProductSpace::binary(2).unwrap();
        let p = Distribution::new(space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let pi = [0.25; 4];
        let expect: f64 = -p.weights().iter().map(|&x| (x - 0.25) * (x / 0.25).ln()).sum::<f64>();
        let got = entropy_derivative(&p, &pi, |x| x.iter().zip(&pi).map(|(a, b)| b - a).collect(), 1e-3).unwrap();
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
    }
}
