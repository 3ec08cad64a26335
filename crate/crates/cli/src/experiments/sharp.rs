//! The sharp test density: D/Ent against κ and the 4(1−Δ_ν)/n asymptote.

use recomb_core::inequality::sharp::{fit_sharp_constant, SHARP_MAX_N};
use recomb_core::inequality::{sharp_test_closed_form, sharp_test_exhaustive, SharpTestReport};

use super::{all_laws, law_label};
use crate::config::{SharpTestSpec, SharpUpperBoundSpec};
use crate::report::{num, opt, Outcome, Table};
use crate::Result;

/// Closed form against exhaustive sums over Ω.
pub const EXHAUSTIVE_REL_TOL: f64 = 1e-9;
const LOWER_TOL: f64 = 1e-12;

const COLUMNS: [&str; 9] = ["n", "model", "q", "kappa", "ratio", "delta_nu", "asymptote", "ent", "d"];

fn row(r: &SharpTestReport) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.model.clone(),
        opt(r.q),
        opt(r.kappa),
        num(r.ratio),
        num(r.delta_nu),
        num(r.asymptote),
        num(r.ent),
        num(r.d),
    ]
}

pub(super) fn table(spec: &SharpTestSpec, out: &mut Outcome) -> Result<()> {
    let mut t = Table::new("sharp", &COLUMNS);
    let mut below = Vec::new();
    for n in spec.n_range[0]..=spec.n_range[1] {
        let law = spec.model.law(spec.q, n)?;
        let r = sharp_test_closed_form(n, &law)?;
        if r.kappa.is_some_and(|k| r.ratio < k - LOWER_TOL) {
            below.push(n.to_string());
        }
        t.push(row(&r));
    }
    out.tables.push(t);
    out.check("κ ≤ D/Ent on the sharp density", below.is_empty(), format!("violations at n = [{}]", below.join(",")));
    Ok(())
}

pub(super) fn upper_bound(spec: &SharpUpperBoundSpec, out: &mut Outcome) -> Result<()> {
    // exhaustive sums against the closed form
    let n = spec.exhaustive_n;
    let mut ex = Table::new("exhaustive", &["n", "model", "q", "ent_closed", "ent_exhaustive", "d_closed", "d_exhaustive"]);
    let mut worst = 0.0f64;
    for law in all_laws(n, &spec.qs)? {
        let r = sharp_test_closed_form(n, &law)?;
        let (e, d) = sharp_test_exhaustive(n, &law)?;
        worst = worst.max(((r.ent - e) / e).abs()).max(((r.d - d) / d).abs());
        ex.push(vec![n.to_string(), law.name().into(), opt(law.q()), num(r.ent), num(e), num(r.d), num(d)]);
    }
    out.tables.push(ex);
    out.check(
        format!("closed form matches exhaustive sums at n={n} within {EXHAUSTIVE_REL_TOL:e} relative"),
        worst <= EXHAUSTIVE_REL_TOL,
        format!("largest relative difference {worst:e}"),
    );

    // one fitted C per model over the fit range
    let [lo, hi] = spec.fit_range;
    let mut fits = Table::new("fit", &["model", "q", "c", "c_cap"]);
    let mut sweep = Table::new("sweep", &COLUMNS);
    let mut fit_failures = Vec::new();
    let mut lower_failures = Vec::new();
    for law in all_laws(lo, &spec.qs)? {
        let label = law_label(&law);
        let c = fit_sharp_constant(&law, lo..=hi)?;
        fits.push(vec![law.name().into(), opt(law.q()), num(c), num(spec.c_cap)]);
        if !(c <= spec.c_cap) {
            fit_failures.push(format!("{label}: C = {c}"));
        }
        for m in lo..=hi {
            let r = sharp_test_closed_form(m, &law.with_sites(m)?)?;
            let nf = m as f64;
            let dev = (nf * r.ratio - 4.0 * (1.0 - r.delta_nu)).abs();
            if dev > c / nf * (1.0 + 1e-12) {
                fit_failures.push(format!("{label} n={m}: |n·ratio − 4(1−Δ)| = {dev} > C/n"));
            }
            if r.ratio > r.asymptote + c / (nf * nf) + 1e-15 {
                fit_failures.push(format!("{label} n={m}: ratio above 4(1−Δ)/n + C/n²"));
            }
        }
        for m in 2..=SHARP_MAX_N {
            let r = sharp_test_closed_form(m, &law.with_sites(m)?)?;
            if r.kappa.is_some_and(|k| r.ratio < k - LOWER_TOL) {
                lower_failures.push(format!("{label} n={m}"));
            }
            sweep.push(row(&r));
        }
    }
    out.tables.push(fits);
    out.tables.push(sweep);
    out.check(
        format!("|n·D/Ent − 4(1−Δ_ν)| ≤ C/n and D/Ent ≤ 4(1−Δ_ν)/n + C/n² on n ∈ [{lo},{hi}], C ≤ {}", spec.c_cap),
        fit_failures.is_empty(),
        if fit_failures.is_empty() { "all models within their fitted constant".into() } else { fit_failures.join("; ") },
    );
    out.check(
        format!("κ ≤ D/Ent for n ∈ [2,{SHARP_MAX_N}]"),
        lower_failures.is_empty(),
        if lower_failures.is_empty() { "no violations".into() } else { lower_failures.join("; ") },
    );

    // the ratio γ/κ is recorded, no constant is asserted
    let mut ratios = Table::new("gamma_over_kappa", &["n", "model", "q", "gamma", "kappa", "gamma_over_kappa"]);
    let mut worst_ratio = 0.0f64;
    for m in 4..=SHARP_MAX_N {
        let mut laws = all_laws(m, &spec.qs)?;
        laws.push(crate::config::Model::Bernoulli.law(Some(1.0 / (m * m) as f64), m)?);
        for law in laws {
            let r = sharp_test_closed_form(m, &law)?;
            let k = r.kappa.expect("named model");
            worst_ratio = worst_ratio.max(r.ratio / k);
            ratios.push(vec![m.to_string(), law.name().into(), opt(law.q()), num(r.ratio), num(k), num(r.ratio / k)]);
        }
    }
    out.tables.push(ratios);
    out.note(format!("largest D/Ent ÷ κ for n ∈ [4,{SHARP_MAX_N}] (Bernoulli with q ≥ n⁻²): {worst_ratio}"));
    Ok(())
}
