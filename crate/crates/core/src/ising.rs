//! Nonlinear stochastic Ising models.
//!
//! Spins live on the binary space of the free (unpinned) vertices: digit 0 is
//! spin −1 and digit 1 is spin +1. A vertex with an infinite external field is
//! pinned and removed from the dynamic space; its spin still enters the
//! energy `H(σ) = −Σ_{ij∈E} σᵢσⱼ`. Gibbs weights are
//! `μ(σ) ∝ exp(−βH(σ) + Σᵢ hᵢσᵢ)`.
//!
//! Three pair generators are provided: swaps at a subset `A` accepted with
//! probability `α_A`, the folding kernel, and the swap generator plus Glauber
//! dynamics acting on each member of the pair.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossover::CrossoverLaw;
use crate::dynamics::{EvolutionTrace, IntegrationOptions};
use crate::eigen::{symmetric_eigen, Matrix};
use crate::entropy::{ent_raw, relative_entropy_raw};
use crate::numeric::kahan_sum;
use crate::rqs::generators::{MarkovLift, SumGenerator};
use crate::rqs::linear::gamma_matrix_raw;
use crate::rqs::{drift, entropy_production_raw, evolve, PairGenerator};
use crate::sampling::{random_distribution, random_with_marginals, rng_for};
use crate::space::{Distribution, ProductSpace, SiteSubset};
use crate::{Error, Result};

/// Fixed-point iteration step size.
pub const DAMPING: f64 = 0.5;
/// Fixed-point iteration stops once `‖drift‖₁` drops below this.
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 200_000;
/// Field fitting stops once every marginal is matched to this accuracy.
pub const FIELD_FIT_TOL: f64 = 1e-13;
pub const FIELD_FIT_MAX_SWEEPS: usize = 10_000;
/// Bracket for the field bisection.
pub const FIELD_BOUND: f64 = 60.0;
/// A marginal within this distance of 0 or 1 marks a pinned site.
pub const PIN_TOL: f64 = 1e-12;
/// Fixed points must match the fitted Gibbs measure to this accuracy.
pub const ISING_FORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pin {
    #[serde(rename = "+inf")]
    Plus,
    #[serde(rename = "-inf")]
    Minus,
}

impl Pin {
    pub fn spin(self) -> f64 {
        match self {
            Pin::Plus => 1.0,
            Pin::Minus => -1.0,
        }
    }
}

/// An external field: a real number, or `"+inf"`/`"-inf"` for a pinned spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExternalField {
    Finite(f64),
    Pinned(Pin),
}

/// Serialized form of [`IsingModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub beta: f64,
    /// Defaults to zero fields.
    #[serde(default)]
    pub fields: Option<Vec<ExternalField>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsingSpec", into = "IsingSpec")]
pub struct IsingModel {
    n: usize,
    edges: Vec<(usize, usize)>,
    beta: f64,
    fields: Vec<ExternalField>,
    free: Vec<usize>,
    /// Position of each vertex among the free ones.
    position: Vec<Option<usize>>,
    space: ProductSpace,
}

impl TryFrom<IsingSpec> for IsingModel {
    type Error = Error;

    fn try_from(spec: IsingSpec) -> Result<Self> {
        let fields = spec.fields.unwrap_or_else(|| vec![ExternalField::Finite(0.0); spec.n]);
        IsingModel::new(spec.n, spec.edges, spec.beta, fields)
    }
}

impl From<IsingModel> for IsingSpec {
    fn from(m: IsingModel) -> Self {
        IsingSpec { n: m.n, edges: m.edges, beta: m.beta, fields: Some(m.fields) }
    }
}

impl IsingModel {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, beta: f64, fields: Vec<ExternalField>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("an Ising model needs at least one vertex".into()));
        }
        if !beta.is_finite() {
            return Err(Error::OutOfRange(format!("inverse temperature {beta}")));
        }
        if fields.len() != n {
            return Err(Error::InvalidConfiguration(format!("{} fields for {n} vertices", fields.len())));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidConfiguration(format!("edge ({i},{j}) on {n} vertices")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidConfiguration(format!("duplicate edge ({i},{j})")));
            }
        }
        if let Some(h) = fields.iter().find_map(|f| match f {
            ExternalField::Finite(h) if !h.is_finite() => Some(*h),
            _ => None,
        }) {
            return Err(Error::OutOfRange(format!("field {h}; use a pinned spin instead")));
        }
        let free: Vec<usize> = (0..n).filter(|&i| matches!(fields[i], ExternalField::Finite(_))).collect();
        if free.is_empty() {
            return Err(Error::InvalidSpace("every vertex is pinned".into()));
        }
        let mut position = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            position[i] = Some(k);
        }
        let space = ProductSpace::binary(free.len())?;
        Ok(Self { n, edges, beta, fields, free, position, space })
    }

    /// Zero external fields.
    pub fn zero_field(n: usize, edges: Vec<(usize, usize)>, beta: f64) -> Result<Self> {
        Self::new(n, edges, beta, vec![ExternalField::Finite(0.0); n])
    }

    /// The path `0 − 1 − … − (n−1)`.
    pub fn path(n: usize, beta: f64) -> Result<Self> {
        Self::zero_field(n, (1..n).map(|i| (i - 1, i)).collect(), beta)
    }

    /// The cycle on n ≥ 3 vertices.
    pub fn cycle(n: usize, beta: f64) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Self::zero_field(n, edges, beta)
    }

    /// The complete graph.
    pub fn complete(n: usize, beta: f64) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::zero_field(n, edges, beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn fields(&self) -> &[ExternalField] {
        &self.fields
    }

    pub fn free_sites(&self) -> &[usize] {
        &self.free
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// The dynamic space `{−1,+1}^{free}`.
    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()).max().unwrap_or(0)
    }

    /// Finite fields of the free vertices.
    pub fn free_fields(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|&i| match self.fields[i] {
                ExternalField::Finite(h) => h,
                ExternalField::Pinned(_) => unreachable!("free vertices have finite fields"),
            })
            .collect()
    }

    /// Same graph, β and pins; `h` gives the fields of the free vertices.
    pub fn with_fields(&self, h: &[f64]) -> Result<Self> {
        if h.len() != self.free.len() {
            return Err(Error::InvalidConfiguration(format!("{} fields for {} free vertices", h.len(), self.free.len())));
        }
        let mut fields = self.fields.clone();
        for (&i, &v) in self.free.iter().zip(h) {
            fields[i] = ExternalField::Finite(v);
        }
        Self::new(self.n, self.edges.clone(), self.beta, fields)
    }

    /// Same graph and fields at another inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n, self.edges.clone(), beta, self.fields.clone())
    }

    /// Spin of vertex `v` in the dynamic configuration `idx`.
    pub fn spin(&self, idx: usize, v: usize) -> f64 {
        match self.position[v] {
            Some(k) => {
                if idx >> k & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            None => match self.fields[v] {
                ExternalField::Pinned(p) => p.spin(),
                ExternalField::Finite(_) => unreachable!("vertices without a position are pinned"),
            },
        }
    }

    pub fn spins(&self, idx: usize) -> Vec<f64> {
        (0..self.n).map(|v| self.spin(idx, v)).collect()
    }

    /// `H(σ) = −Σ_{ij∈E} σᵢσⱼ`.
    pub fn energy(&self, idx: usize) -> f64 {
        -self.edges.iter().map(|&(i, j)| self.spin(idx, i) * self.spin(idx, j)).sum::<f64>()
    }

    /// `−βH(σ) + Σ_{free} hᵢσᵢ`.
    pub fn log_weight(&self, idx: usize) -> f64 {
        let field: f64 = self.free_fields().iter().zip(&self.free).map(|(h, &v)| h * self.spin(idx, v)).sum();
        -self.beta * self.energy(idx) + field
    }

    fn log_weights(&self) -> Vec<f64> {
        let h = self.free_fields();
        (0..self.space.total_size())
            .map(|x| {
                let field: f64 = h.iter().zip(&self.free).map(|(h, &v)| h * self.spin(x, v)).sum();
                -self.beta * self.energy(x) + field
            })
            .collect()
    }

    /// Whether vertex `v` lies in `A`, a subset of the free vertices.
    fn in_subset(&self, a: SiteSubset, v: usize) -> bool {
        self.position[v].is_some_and(|k| a.contains(k))
    }
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z = kahan_sum(w.iter().copied());
    w.into_iter().map(|v| v / z).collect()
}

/// The Gibbs measure on the dynamic space, computed in the log domain.
pub fn gibbs(model: &IsingModel) -> Distribution {
    Distribution::from_unnormalized(model.space.clone(), softmax(&model.log_weights()))
        .expect("Gibbs weights are positive")
}

/// `P(σ_v = +1)` for each free vertex.
pub fn spin_up_marginals(p: &Distribution) -> Vec<f64> {
    (0..p.space().num_sites()).map(|k| p.site_marginal(k)[1]).collect()
}

/// `φ_A(σ,σ') = Σ_{ij∈E, i∈A, j∉A} (σᵢ−σ'ᵢ)(σⱼ−σ'ⱼ)`.
pub fn cut_interaction(model: &IsingModel, a: SiteSubset, s: usize, s2: usize) -> f64 {
    model
        .edges
        .iter()
        .filter(|&&(i, j)| model.in_subset(a, i) != model.in_subset(a, j))
        .map(|&(i, j)| (model.spin(s, i) - model.spin(s2, i)) * (model.spin(s, j) - model.spin(s2, j)))
        .sum()
}

/// `α_A(σ,σ') = 1/(1 + e^{βφ_A})`.
pub fn alpha(model: &IsingModel, a: SiteSubset, s: usize, s2: usize) -> f64 {
    1.0 / (1.0 + (model.beta * cut_interaction(model, a, s, s2)).exp())
}

/// `α_A` as the μ⊗μ probability of the swapped pair given `{(σ,σ'), (τ,τ')}`.
pub fn alpha_from_measure(model: &IsingModel, mu: &[f64], a: SiteSubset, s: usize, s2: usize) -> f64 {
    let (t, t2) = model.space.recombine_indices(s, s2, a);
    let swapped = mu[t] * mu[t2];
    swapped / (mu[s] * mu[s2] + swapped)
}

/// `G = Σ_A ν(A)Q_A − 1`: swap at `A` with probability `α_A`.
#[derive(Clone, Debug)]
pub struct IsingGenerator {
    model: IsingModel,
    support: Vec<(SiteSubset, f64)>,
}

impl IsingGenerator {
    /// `law` ranges over subsets of the free vertices.
    pub fn new(model: &IsingModel, law: &CrossoverLaw) -> Result<Self> {
        if law.n() != model.num_free() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { model: model.clone(), support: law.enumerate_support()? })
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }
}

impl PairGenerator for IsingGenerator {
    fn space(&self) -> &ProductSpace {
        &self.model.space
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        for &(a, w) in &self.support {
            let (t, t2) = self.model.space.recombine_indices(s, s2, a);
            if (t, t2) != (s, s2) {
                visit(t, t2, w * alpha(&self.model, a, s, s2));
            }
        }
    }
}

pub fn make_ising_generator(model: &IsingModel, law: &CrossoverLaw) -> Result<IsingGenerator> {
    IsingGenerator::new(model, law)
}

/// The folding kernel: on the disagreement set `Bᶜ` the pair is resampled
/// as `(τ, −τ)` with probability proportional to `μ(σ_Bτ)μ(σ_B(−τ))`.
#[derive(Clone, Debug)]
pub struct FoldingGenerator {
    space: ProductSpace,
    /// `−βH`; the fields cancel in the kernel.
    log_weight: Vec<f64>,
}

impl FoldingGenerator {
    pub fn new(model: &IsingModel) -> Self {
        let log_weight = (0..model.space.total_size()).map(|x| -model.beta * model.energy(x)).collect();
        Self { space: model.space.clone(), log_weight }
    }
}

impl PairGenerator for FoldingGenerator {
    fn space(&self) -> &ProductSpace {
        &self.space
    }

    fn for_each_transition(&self, s: usize, s2: usize, visit: &mut dyn FnMut(usize, usize, f64)) {
        let disagree = s ^ s2;
        if disagree == 0 {
            return;
        }
        let base = s & !disagree;
        let mut targets = Vec::with_capacity(1 << disagree.count_ones());
        // enumerate the sub-masks of the disagreement set
        let mut t = disagree;
        loop {
            let tau = base | t;
            let tau2 = base | (disagree & !t);
            targets.push((tau, tau2, self.log_weight[tau] + self.log_weight[tau2]));
            if t == 0 {
                break;
            }
            t = (t - 1) & disagree;
        }
        let logs: Vec<f64> = targets.iter().map(|x| x.2).collect();
        let probs = softmax(&logs);
        for (&(tau, tau2, _), pr) in targets.iter().zip(probs) {
            if (tau, tau2) != (s, s2) {
                visit(tau, tau2, pr);
            }
        }
    }
}

pub fn make_folding_generator(model: &IsingModel) -> FoldingGenerator {
    FoldingGenerator::new(model)
}

/// Heat-bath Glauber kernel: pick a free vertex uniformly and resample its
/// spin from μ conditioned on the rest.
pub fn glauber_kernel(model: &IsingModel) -> Matrix {
    let m = model.space.total_size();
    let k = model.num_free();
    let lw = model.log_weights();
    let mut w = Matrix::zeros(m);
    for s in 0..m {
        let mut out = 0.0;
        for i in 0..k {
            let t = s ^ (1 << i);
            let r = 1.0 / (k as f64 * (1.0 + (lw[s] - lw[t]).exp()));
            w[(s, t)] = r;
            out += r;
        }
        w[(s, s)] = 1.0 - out;
    }
    w
}

/// The swap generator plus Glauber dynamics acting on each member of the pair.
pub type DissipativeGenerator = SumGenerator<IsingGenerator, MarkovLift>;

pub fn make_dissipative_generator(model: &IsingModel, law: &CrossoverLaw) -> Result<DissipativeGenerator> {
    let swap = IsingGenerator::new(model, law)?;
    let lift = MarkovLift::new(&model.space, &glauber_kernel(model))?;
    SumGenerator::new(swap, lift)
}

/// Fields of the free vertices whose Gibbs measure has the spin-up
/// probabilities `targets`, by cyclic coordinate-wise bisection.
pub fn fit_fields(model: &IsingModel, targets: &[f64]) -> Result<Vec<f64>> {
    let k = model.num_free();
    if targets.len() != k {
        return Err(Error::SpaceMismatch);
    }
    if let Some(t) = targets.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::OutOfRange(format!("spin-up probability {t} needs an infinite field")));
    }
    let mut h = model.free_fields();
    let marginal = |h: &[f64], i: usize| -> Result<f64> { Ok(gibbs(&model.with_fields(h)?).site_marginal(i)[1]) };
    let mut error = f64::INFINITY;
    for _ in 0..FIELD_FIT_MAX_SWEEPS {
        for i in 0..k {
            let (mut lo, mut hi) = (-FIELD_BOUND, FIELD_BOUND);
            while hi - lo > 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                h[i] = mid;
                if marginal(&h, i)? < targets[i] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            h[i] = 0.5 * (lo + hi);
        }
        let g = gibbs(&model.with_fields(&h)?);
        error = (0..k).map(|i| (g.site_marginal(i)[1] - targets[i]).abs()).fold(0.0, f64::max);
        if error < FIELD_FIT_TOL {
            return Ok(h);
        }
    }
    Err(Error::FieldFit { sweeps: FIELD_FIT_MAX_SWEEPS, error })
}

/// The Gibbs measure with the single-site marginals of `p`.
pub fn matched_gibbs(model: &IsingModel, p: &Distribution) -> Result<Distribution> {
    if p.space() != model.space() {
        return Err(Error::SpaceMismatch);
    }
    let h = fit_fields(model, &spin_up_marginals(p))?;
    Ok(gibbs(&model.with_fields(&h)?))
}

/// A fixed point of `p ↦ p + η·drift(p)` and its Ising-form check.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    pub start: u64,
    pub iterations: usize,
    pub drift_l1: f64,
    /// Free vertices (as positions in the dynamic space) found pinned, with their spin.
    pub pinned: Vec<(usize, f64)>,
    /// Fitted fields of the remaining vertices.
    pub fields: Vec<f64>,
    /// `max_σ |p(σ) − μ_{h'}(σ)|` for the fitted Gibbs measure.
    pub deviation: f64,
    pub ising_form: bool,
}

/// Damped iteration `p ← p + η·drift(p)` until `‖drift‖₁ ≤ FIXED_POINT_TOL`.
pub fn find_fixed_point<G: PairGenerator + ?Sized>(g: &G, p0: &Distribution) -> Result<(Distribution, usize, f64)> {
    let mut p = p0.weights().to_vec();
    let mut norm = f64::INFINITY;
    for it in 0..FIXED_POINT_MAX_ITER {
        let d = drift(g, &p);
        norm = kahan_sum(d.iter().map(|x| x.abs()));
        if norm <= FIXED_POINT_TOL {
            return Ok((Distribution::from_unnormalized(p0.space().clone(), p)?, it, norm));
        }
        for (x, dx) in p.iter_mut().zip(&d) {
            *x = (*x + DAMPING * dx).max(0.0);
        }
    }
    Err(Error::NotStationary(format!(
        "damped iteration stalled at drift {norm:e} after {FIXED_POINT_MAX_ITER} steps"
    )))
}

/// Checks whether `p` is a Gibbs measure of `model`'s graph and β for some
/// (possibly infinite) fields. Sites with a spin-up probability within
/// [`PIN_TOL`] of 0 or 1 are pinned before fitting the rest.
pub fn ising_form(model: &IsingModel, p: &Distribution) -> Result<(Vec<(usize, f64)>, Vec<f64>, f64)> {
    let marg = spin_up_marginals(p);
    let mut fields = model.fields().to_vec();
    let mut pinned = Vec::new();
    for (k, &m) in marg.iter().enumerate() {
        let v = model.free_sites()[k];
        if m <= PIN_TOL {
            fields[v] = ExternalField::Pinned(Pin::Minus);
            pinned.push((k, -1.0));
        } else if m >= 1.0 - PIN_TOL {
            fields[v] = ExternalField::Pinned(Pin::Plus);
            pinned.push((k, 1.0));
        }
    }
    if pinned.len() == marg.len() {
        // a point mass: Ising form with every field infinite
        let idx = pinned.iter().map(|&(k, s)| if s > 0.0 { 1usize << k } else { 0 }).sum::<usize>();
        let deviation = p.weights().iter().enumerate().map(|(x, &w)| (w - f64::from(x == idx)).abs()).fold(0.0, f64::max);
        return Ok((pinned, Vec::new(), deviation));
    }
    let reduced = IsingModel::new(model.n(), model.edges().to_vec(), model.beta(), fields)?;
    let keep: Vec<usize> = (0..marg.len()).filter(|k| !pinned.iter().any(|(j, _)| j == k)).collect();
    let targets: Vec<f64> = keep.iter().map(|&k| marg[k]).collect();
    let h = fit_fields(&reduced, &targets)?;
    let g = gibbs(&reduced.with_fields(&h)?);
    // embed the reduced Gibbs measure back into the dynamic space
    let mut deviation = 0.0f64;
    for (x, &w) in p.weights().iter().enumerate() {
        let aligned = pinned.iter().all(|&(k, s)| (x >> k & 1 == 1) == (s > 0.0));
        let q = if aligned {
            let y = keep.iter().enumerate().map(|(j, &k)| (x >> k & 1) << j).sum::<usize>();
            g.prob(y)
        } else {
            0.0
        };
        deviation = deviation.max((w - q).abs());
    }
    Ok((pinned, h, deviation))
}

/// Fixed points of the single-site swap dynamics reached from `starts`
/// random initial distributions, each checked for Ising form.
pub fn stationary_structure_scan(model: &IsingModel, starts: usize, seed: u64) -> Result<Vec<FixedPointReport>> {
    let law = CrossoverLaw::single_site(model.num_free())?;
    let g = IsingGenerator::new(model, &law)?;
    (0..starts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let alpha = 10f64.powf(rng.random_range(-0.5..0.5));
            let p0 = random_distribution(&mut rng, model.space(), alpha);
            fixed_point_report(model, &g, &p0, i)
        })
        .collect()
}

/// Runs the damped iteration from `p0` and checks the limit for Ising form.
pub fn fixed_point_report(model: &IsingModel, g: &IsingGenerator, p0: &Distribution, start: u64) -> Result<FixedPointReport> {
    let (p, iterations, drift_l1) = find_fixed_point(g, p0)?;
    let (pinned, fields, deviation) = ising_form(model, &p)?;
    Ok(FixedPointReport { start, iterations, drift_l1, pinned, fields, deviation, ising_form: deviation <= ISING_FORM_TOL })
}

/// Relaxation of the dissipative system towards `gibbs(model)`.
#[derive(Clone, Debug, Serialize)]
pub struct DissipativeDecay {
    pub trace: EvolutionTrace,
    /// Largest increase of `H(p_t|μ)` between snapshots.
    pub max_increase: f64,
    /// Least-squares slope of `log H(p_t|μ)` over the second half of the trace.
    pub fitted_slope: f64,
    pub final_entropy: f64,
}

pub fn dissipative_decay(model: &IsingModel, law: &CrossoverLaw, p0: &Distribution, opts: IntegrationOptions) -> Result<DissipativeDecay> {
    let g = make_dissipative_generator(model, law)?;
    let mu = gibbs(model);
    let trace = evolve(p0, &g, mu.weights(), opts)?;
    let max_increase = trace.max_entropy_increase();
    let half = trace.len() / 2;
    let pts: Vec<(f64, f64)> = trace.times[half..]
        .iter()
        .zip(&trace.relative_entropy[half..])
        .filter(|(_, h)| **h > 1e-13)
        .map(|(t, h)| (*t, h.ln()))
        .collect();
    let fitted_slope = least_squares_slope(&pts);
    let final_entropy = *trace.relative_entropy.last().expect("nonempty trace");
    Ok(DissipativeDecay { trace, max_increase, fitted_slope, final_entropy })
}

/// Slope of the least-squares line through `pts`; NaN for fewer than two points.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Spectral gap of the linearized dissipative flow at `gibbs(model)`:
/// minus the largest eigenvalue of Γ away from the constants. Relative
/// entropy then decays like `e^{−2·gap·t}`.
pub fn dissipative_gap(model: &IsingModel, law: &CrossoverLaw) -> Result<f64> {
    let g = make_dissipative_generator(model, law)?;
    let mu = gibbs(model);
    let gamma = gamma_matrix_raw(&g, mu.weights())?;
    let sq: Vec<f64> = mu.weights().iter().map(|v| v.sqrt()).collect();
    let m = sq.len();
    // √μ Γ √μ⁻¹, with the constant mode pushed far down
    let shift = 1e3;
    let s = Matrix::from_fn(m, |i, j| {
        let sym = 0.5 * (sq[i] / sq[j] * gamma[(i, j)] + sq[j] / sq[i] * gamma[(j, i)]);
        sym - shift * sq[i] * sq[j]
    });
    let (vals, _) = symmetric_eigen(&s)?;
    Ok(-vals[0])
}

/// Smallest observed `n·D(f,f)/Ent(f)` over random densities `f` whose
/// measure `fμ` has the spin marginals of `μ = gibbs(model)`, for the
/// single-site swap dynamics. Reported only.
#[derive(Clone, Debug, Serialize)]
pub struct ConjectureEvidence {
    pub beta: f64,
    pub samples: usize,
    pub min_scaled_ratio: f64,
}

pub fn conjecture_evidence(model: &IsingModel, samples: usize, seed: u64) -> Result<ConjectureEvidence> {
    let k = model.num_free();
    let g = IsingGenerator::new(model, &CrossoverLaw::single_site(k)?)?;
    let mu = gibbs(model);
    let targets = mu.site_marginals();
    let ratios: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = rng_for(seed, i);
            let p = random_with_marginals(&mut rng, model.space(), mu.weights(), &targets)?;
            let f: Vec<f64> = p.iter().zip(mu.weights()).map(|(a, b)| a / b).collect();
            let e = ent_raw(&f, mu.weights());
            let d = entropy_production_raw(&f, &f, mu.weights(), &g)?;
            Ok(k as f64 * d / e)
        })
        .collect::<Result<_>>()?;
    Ok(ConjectureEvidence {
        beta: model.beta(),
        samples,
        min_scaled_ratio: ratios.into_iter().fold(f64::INFINITY, f64::min),
    })
}

/// `H(p|μ)` for the Gibbs measure μ of `model`.
pub fn relative_entropy_to_gibbs(model: &IsingModel, p: &Distribution) -> f64 {
    relative_entropy_raw(p.weights(), gibbs(model).weights())
}
