//! Generalized subadditivity: random scans and the identical-copies witness.

use recomb_core::inequality::{identical_copies_density, kappa_ratios, kappa_theoretical, subadditivity_ratio};
use recomb_core::sampling::{rng_for, random_product_measure};
use recomb_core::{ProductMeasure, ProductSpace};

use super::{all_laws, kappa_reference, law_label, Ctx};
use crate::config::{KappaScanSpec, KappaTightnessSpec, KappaValiditySpec, MeasureKind};
use crate::report::{num, opt, Outcome, Table};
use crate::Result;

pub const VALIDITY_TOL: f64 = 1e-9;
pub const TIGHTNESS_TOL: f64 = 1e-10;

fn measure_for(kind: MeasureKind, space: &ProductSpace, seed: u64) -> ProductMeasure {
    match kind {
        MeasureKind::Uniform => ProductMeasure::uniform(space),
        MeasureKind::Random => random_product_measure(&mut rng_for(seed, 0), space, 0.05),
    }
}

pub(super) fn scan(spec: &KappaScanSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let law = spec.model.law(spec.q, spec.n)?;
    let sizes = spec.alphabet.clone().unwrap_or_else(|| vec![2; spec.n]);
    let space = ProductSpace::new(sizes)?;
    let measure = measure_for(spec.measure, &space, ctx.seed("measure", 0));
    let ratios = kappa_ratios(std::slice::from_ref(&law), &measure, spec.samples, ctx.seed("densities", 0))?;
    let kappa = kappa_theoretical(&law).ok();

    let mut t = Table::new("ratios", &["sample", "model", "q", "n", "ratio", "bound"]);
    let mut max = f64::NEG_INFINITY;
    for (i, r) in ratios.iter().enumerate() {
        let ratio = r.as_ref().map(|v| v[0]);
        if let Some(x) = ratio {
            max = max.max(x);
        }
        t.push(vec![
            i.to_string(),
            law.name().into(),
            opt(law.q()),
            spec.n.to_string(),
            opt(ratio),
            opt(kappa.map(|k| 1.0 - k)),
        ]);
    }
    out.tables.push(t);
    if let Some(k) = kappa {
        out.check(
            format!("max ratio ≤ 1−κ + {VALIDITY_TOL:e} for {}", law_label(&law)),
            max <= 1.0 - k + VALIDITY_TOL,
            format!("max ratio {max} vs 1−κ = {}", 1.0 - k),
        );
    }
    out.note(format!("max ratio {max} over {} samples", spec.samples));
    Ok(())
}

pub(super) fn tightness(spec: &KappaTightnessSpec, out: &mut Outcome) -> Result<()> {
    let mut t = Table::new("tightness", &["n", "model", "q", "kappa", "lhs", "ent", "error"]);
    let mut worst = 0.0f64;
    let mut worst_kappa = 0.0f64;
    for n in spec.n_range[0]..=spec.n_range[1] {
        let f = identical_copies_density(n, &[0.5, 0.5])?;
        for law in all_laws(n, &spec.qs)? {
            let kappa = kappa_theoretical(&law)?;
            let reference = kappa_reference(&law).expect("named model");
            worst_kappa = worst_kappa.max((kappa - reference).abs());
            let (lhs, ent) = subadditivity_ratio(&f, &law)?;
            let err = lhs - (1.0 - reference) * ent;
            worst = worst.max(err.abs());
            t.push(vec![n.to_string(), law.name().into(), opt(law.q()), num(kappa), num(lhs), num(ent), num(err)]);
        }
    }
    out.tables.push(t);
    out.check(
        format!("identical copies attain (1−κ)Ent within {TIGHTNESS_TOL:e}"),
        worst <= TIGHTNESS_TOL,
        format!("largest |lhs − (1−κ)Ent| = {worst:e}"),
    );
    out.check("library κ equals the closed forms", worst_kappa <= 1e-15, format!("largest difference {worst_kappa:e}"));
    Ok(())
}

/// Alphabet layouts scanned per `n`: binary with uniform μ, ternary and
/// mixed binary/ternary with a random product μ.
fn layouts(n: usize) -> Vec<(&'static str, Vec<usize>, MeasureKind)> {
    vec![
        ("binary", vec![2; n], MeasureKind::Uniform),
        ("ternary", vec![3; n], MeasureKind::Random),
        ("mixed", (0..n).map(|i| 2 + i % 2).collect(), MeasureKind::Random),
    ]
}

pub(super) fn validity(spec: &KappaValiditySpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let mut t = Table::new(
        "validity",
        &["n", "alphabet", "measure", "model", "q", "kappa", "bound", "max_ratio", "witness", "samples"],
    );
    let mut failures = Vec::new();
    for &n in &spec.n_values {
        let laws = all_laws(n, &spec.qs)?;
        for (name, sizes, kind) in layouts(n) {
            let task = format!("n{n}/{name}");
            let space = ProductSpace::new(sizes)?;
            let measure = measure_for(kind, &space, ctx.seed(&task, 0));
            let ratios = kappa_ratios(&laws, &measure, spec.samples, ctx.seed(&task, 1))?;
            for (j, law) in laws.iter().enumerate() {
                let (witness, max) = ratios
                    .iter()
                    .enumerate()
                    .filter_map(|(i, r)| r.as_ref().map(|v| (i, v[j])))
                    .fold((None, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (Some(i), x) } else { acc });
                let kappa = kappa_theoretical(law)?;
                let bound = 1.0 - kappa;
                if max > bound + VALIDITY_TOL {
                    failures.push(format!("{} n={n} {name}: {max} > {bound}", law_label(law)));
                }
                t.push(vec![
                    n.to_string(),
                    name.into(),
                    format!("{kind:?}").to_lowercase(),
                    law.name().into(),
                    opt(law.q()),
                    num(kappa),
                    num(bound),
                    num(max),
                    witness.map(|w| w.to_string()).unwrap_or_default(),
                    spec.samples.to_string(),
                ]);
            }
        }
    }
    out.tables.push(t);
    out.check(
        format!("no ratio exceeds 1−κ + {VALIDITY_TOL:e}"),
        failures.is_empty(),
        if failures.is_empty() { "all scans within bound".to_string() } else { failures.join("; ") },
    );
    Ok(())
}
