//! Stationary structure, dissipative relaxation and the scaled-gap evidence
//! for the Ising systems.

use rand::Rng;
use recomb_core::dynamics::IntegrationOptions;
use recomb_core::ising::{
    conjecture_evidence, dissipative_decay, dissipative_gap, gibbs, stationary_structure_scan, ExternalField,
    FoldingGenerator, IsingGenerator, IsingModel, Pin,
};
use recomb_core::rqs::{drift, is_stationary};
use recomb_core::sampling::{random_distribution, rng_for};
use recomb_core::{CrossoverLaw, PairGenerator};

use super::{law_label, Ctx};
use crate::config::{ConjectureEvidenceSpec, DissipativeDecaySpec, IsingStructureSpec};
use crate::report::{num, Outcome, Table};
use crate::Result;

/// Stationarity of field-modified Gibbs measures, in the product identity
/// and in the ℓ¹ norm of the drift.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Largest accepted increase of H between snapshots of a dissipative trace.
pub const MONOTONE_TOL: f64 = 1e-12;
const DISSIPATIVE_STARTS: u64 = 5;

fn models() -> Result<Vec<(&'static str, IsingModel)>> {
    Ok(vec![
        ("path3", IsingModel::path(3, 0.8)?),
        ("cycle4", IsingModel::cycle(4, 0.5)?.with_fields(&[0.2, -0.1, 0.0, 0.3])?),
        ("complete4", IsingModel::complete(4, -0.5)?),
        (
            "star4-pinned",
            IsingModel::new(
                4,
                vec![(0, 1), (0, 2), (0, 3)],
                1.0,
                vec![ExternalField::Finite(0.0), ExternalField::Finite(0.4), ExternalField::Pinned(Pin::Minus), ExternalField::Finite(-0.3)],
            )?,
        ),
    ])
}

pub(super) fn structure(spec: &IsingStructureSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    // forward direction: every field-modified Gibbs measure is stationary
    let mut st = Table::new("stationarity", &["model", "generator", "fields", "violation", "drift_l1"]);
    let mut worst = 0.0f64;
    let mut rng = rng_for(ctx.seed("fields", 0), 0);
    for (name, model) in models()? {
        let k = model.num_free();
        let mu = gibbs(&model);
        let mut gens: Vec<(String, Box<dyn PairGenerator>)> = Vec::new();
        for law in [CrossoverLaw::single_site(k)?, CrossoverLaw::uniform(k)?, CrossoverLaw::one_point(k)?] {
            gens.push((law_label(&law), Box::new(IsingGenerator::new(&model, &law)?)));
        }
        gens.push(("folding".into(), Box::new(FoldingGenerator::new(&model))));
        for _ in 0..4 {
            let h: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
            let rho = gibbs(&model.with_fields(&h)?);
            for (label, g) in &gens {
                let rep = is_stationary(&rho, g.as_ref(), mu.weights(), STATIONARY_TOL)?;
                let violation = rep.worst.map_or(0.0, |w| w.violation);
                let d: f64 = drift(g.as_ref(), rho.weights()).iter().map(|x| x.abs()).sum();
                worst = worst.max(violation).max(d);
                let fields = h.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
                st.push(vec![name.into(), label.clone(), fields, num(violation), num(d)]);
            }
        }
    }
    out.tables.push(st);
    out.check(
        format!("field-modified Gibbs measures are stationary within {STATIONARY_TOL:e}"),
        worst <= STATIONARY_TOL,
        format!("largest violation {worst:e}"),
    );

    // reverse direction: fixed points from random starts are of Ising form
    let mut fp = Table::new("fixed_points", &["model", "start", "iterations", "drift_l1", "pinned", "deviation", "ising_form"]);
    let mut bad = Vec::new();
    let mut max_dev = 0.0f64;
    for (i, (name, model)) in models()?.into_iter().enumerate() {
        let reports = stationary_structure_scan(&model, spec.starts, ctx.seed("starts", i as u64))?;
        for r in reports {
            max_dev = max_dev.max(r.deviation);
            if !r.ising_form {
                bad.push(format!("{name}#{}", r.start));
            }
            let pinned = r.pinned.iter().map(|(k, s)| format!("{k}:{s:+}")).collect::<Vec<_>>().join(" ");
            fp.push(vec![
                name.into(),
                r.start.to_string(),
                r.iterations.to_string(),
                num(r.drift_l1),
                pinned,
                num(r.deviation),
                r.ising_form.to_string(),
            ]);
        }
    }
    out.tables.push(fp);
    out.check(
        format!("fixed points from {} random starts are Ising-form within 1e-8", spec.starts),
        bad.is_empty(),
        if bad.is_empty() { format!("largest deviation {max_dev:e}") } else { format!("not Ising-form: {}", bad.join(", ")) },
    );

    // dissipative relaxation to gibbs(model)
    let mut dt = Table::new("dissipative", &["model", "start", "h0", "h_end", "max_increase", "fitted_slope", "gap"]);
    let mut failures = Vec::new();
    for (i, (name, model)) in models()?.into_iter().enumerate() {
        let law = CrossoverLaw::single_site(model.num_free())?;
        let gap = dissipative_gap(&model, &law)?;
        for s in 0..DISSIPATIVE_STARTS {
            let mut rng = rng_for(ctx.seed("dissipative", i as u64), s);
            let p0 = random_distribution(&mut rng, model.space(), 0.5);
            let r = dissipative_decay(&model, &law, &p0, IntegrationOptions::new(spec.t_end))?;
            let h0 = r.trace.relative_entropy[0];
            if r.max_increase > MONOTONE_TOL || !(r.fitted_slope < 0.0) || !(r.final_entropy < h0) {
                failures.push(format!("{name}#{s}: increase {:e}, slope {}", r.max_increase, r.fitted_slope));
            }
            dt.push(vec![
                name.into(),
                s.to_string(),
                num(h0),
                num(r.final_entropy),
                num(r.max_increase),
                num(r.fitted_slope),
                num(gap),
            ]);
        }
    }
    out.tables.push(dt);
    out.check(
        "dissipative H(p_t|gibbs) decays monotonically with a negative fitted log-slope",
        failures.is_empty(),
        if failures.is_empty() { "all traces monotone".into() } else { failures.join("; ") },
    );
    out.note("the decay constant of the dissipative system is reported, not asserted");
    Ok(())
}

pub(super) fn dissipative(spec: &DissipativeDecaySpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let model = &spec.ising;
    let law = spec.model.law(spec.q, model.num_free())?;
    let p0 = random_distribution(&mut rng_for(ctx.seed("start", 0), 0), model.space(), 0.5);
    let r = dissipative_decay(model, &law, &p0, IntegrationOptions::new(spec.t_end).dt(spec.dt))?;
    let gap = dissipative_gap(model, &law)?;
    let mut t = Table::new("trace", &["t", "relative_entropy", "total_variation"]);
    for ((time, h), tv) in r.trace.times.iter().zip(&r.trace.relative_entropy).zip(&r.trace.total_variation) {
        t.push(vec![num(*time), num(*h), num(*tv)]);
    }
    out.tables.push(t);
    out.check("H(p_t|gibbs) is non-increasing", r.max_increase <= MONOTONE_TOL, format!("largest increase {:e}", r.max_increase));
    out.check("fitted log-slope is negative", r.fitted_slope < 0.0, format!("slope {}", r.fitted_slope));
    out.note(format!("fitted slope {}, linearized rate −2·gap = {}", r.fitted_slope, -2.0 * gap));
    Ok(())
}

pub(super) fn conjecture(spec: &ConjectureEvidenceSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let ev = conjecture_evidence(&spec.ising, spec.samples, ctx.seed("densities", 0))?;
    let mut t = Table::new("evidence", &["beta", "free_sites", "samples", "min_scaled_ratio"]);
    t.push(vec![num(ev.beta), spec.ising.num_free().to_string(), ev.samples.to_string(), num(ev.min_scaled_ratio)]);
    out.tables.push(t);
    out.note(format!("smallest n·D/Ent observed: {}", ev.min_scaled_ratio));
    Ok(())
}
