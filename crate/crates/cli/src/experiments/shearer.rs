//! Submodularity, Shearer bounds and the c/d coefficient identities.

use rand::Rng;
use rayon::prelude::*;
use recomb_core::entropy::subset_entropies;
use recomb_core::inequality::shearer::{bernoulli_shearer_factor, frac, SHEARER_MAX_N};
use recomb_core::inequality::{
    check_submodular, improved_shearer_check, naive_shearer_kappa, shearer_bound, shearer_coefficients,
    weighted_shearer_check,
};
use recomb_core::sampling::{random_positive_function, random_product_measure, random_s_mu_density, rng_for};
use recomb_core::{Density, ProductSpace, SiteSubset};

use super::Ctx;
use crate::config::ShearerSpec;
use crate::report::{num, Outcome, Table};
use crate::Result;

pub const SLACK_TOL: f64 = 1e-10;

#[derive(Clone, Copy)]
struct Slacks {
    submodular: f64,
    shearer: f64,
    improved: f64,
    weighted: f64,
    /// `improved − weighted(γ=1)`, expected to be exactly zero.
    unit_weight_gap: f64,
}

fn slacks(f: &Density, n: usize, gammas: &[f64]) -> Result<Slacks> {
    let table = subset_entropies(f);
    let submodular = check_submodular(&table, n).min_slack;
    let mut shearer = f64::INFINITY;
    for k in 1..n {
        let cover: Vec<SiteSubset> = SiteSubset::all(n).filter(|a| a.len() == k).collect();
        shearer = shearer.min(shearer_bound(&table, n, &cover).slack);
    }
    let improved = improved_shearer_check(&table, n)?;
    let mut weighted = f64::INFINITY;
    for &g in gammas {
        weighted = weighted.min(weighted_shearer_check(&table, n, g)?);
    }
    let unit_weight_gap = improved - weighted_shearer_check(&table, n, 1.0)?;
    Ok(Slacks { submodular, shearer, improved, weighted, unit_weight_gap })
}

pub(super) fn run(spec: &ShearerSpec, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let mut t = Table::new(
        "random_densities",
        &["n", "alphabet", "samples", "min_submodular", "min_shearer", "min_improved", "min_weighted", "unit_weight_gap"],
    );
    let mut worst = f64::INFINITY;
    let mut gap = 0.0f64;
    for n in 2..=spec.max_n {
        for (name, sizes) in [("binary", vec![2; n]), ("mixed", (0..n).map(|i| 2 + i % 2).collect::<Vec<_>>())] {
            let task = format!("n{n}/{name}");
            let space = ProductSpace::new(sizes)?;
            let mu = random_product_measure(&mut rng_for(ctx.seed(&task, 0), 0), &space, 0.05);
            let seed = ctx.seed(&task, 1);
            let all: Vec<Slacks> = (0..spec.samples as u64)
                .into_par_iter()
                .map(|i| -> Result<Slacks> {
                    let mut rng = rng_for(seed, i);
                    // alternate densities in S_μ with unconstrained ones
                    let f = if rng.random::<bool>() {
                        random_s_mu_density(&mut rng, &mu)?
                    } else {
                        Density::normalized(mu.clone(), random_positive_function(&mut rng, space.total_size()))?
                    };
                    slacks(&f, n, &spec.gammas)
                })
                .collect::<Result<_>>()?;
            let min = |sel: fn(&Slacks) -> f64| all.iter().map(sel).fold(f64::INFINITY, f64::min);
            let row = [min(|s| s.submodular), min(|s| s.shearer), min(|s| s.improved), min(|s| s.weighted)];
            let g = all.iter().map(|s| s.unit_weight_gap.abs()).fold(0.0, f64::max);
            worst = row.iter().copied().fold(worst, f64::min);
            gap = gap.max(g);
            let mut cells = vec![n.to_string(), name.to_string(), spec.samples.to_string()];
            cells.extend(row.iter().map(|v| num(*v)));
            cells.push(num(g));
            t.push(cells);
        }
    }
    out.tables.push(t);
    out.check(
        format!("submodularity, Shearer and weighted/improved Shearer slacks ≥ −{SLACK_TOL:e}"),
        worst >= -SLACK_TOL,
        format!("smallest slack {worst:e}"),
    );
    out.check("weighted check at γ = 1 equals the improved check bit for bit", gap == 0.0, format!("largest gap {gap:e}"));

    // exact coefficient identities
    let gammas = [frac(1, 3), frac(1, 1), frac(2, 1), frac(3, 7)];
    let mut bad = Vec::new();
    let mut coef = Table::new("coefficients", &["n", "sum_c", "sum_d", "naive_kappa", "improved_kappa"]);
    for n in 2..=SHEARER_MAX_N {
        let c = shearer_coefficients(n)?;
        if c.sum_c() != c.expected_sum_c() || c.sum_d() != c.expected_sum_d() {
            bad.push(format!("n={n}: plain sums"));
        }
        for g in &gammas {
            if c.weighted_sum_c(g) != c.expected_weighted_sum_c(g) || c.weighted_sum_d(g) != c.expected_weighted_sum_d(g)
            {
                bad.push(format!("n={n}: weighted sums at γ={g}"));
            }
        }
        let improved = (1.0 - 0.5f64.powi(n as i32 - 1)) / (n - 1) as f64;
        coef.push(vec![
            n.to_string(),
            c.sum_c().to_string(),
            c.sum_d().to_string(),
            num(naive_shearer_kappa(n)),
            num(improved),
        ]);
    }
    out.tables.push(coef);
    out.check(
        format!("c/d sum identities hold exactly for n ≤ {SHEARER_MAX_N}"),
        bad.is_empty(),
        if bad.is_empty() { "all identities exact".into() } else { bad.join("; ") },
    );

    let dominated: Vec<usize> = (3..=SHEARER_MAX_N)
        .filter(|&n| naive_shearer_kappa(n) >= (1.0 - 0.5f64.powi(n as i32 - 1)) / (n - 1) as f64)
        .collect();
    out.check(
        "naive Shearer κ = 2^(−n+1) strictly below (1−2^(−n+1))/(n−1) for n ≥ 3",
        dominated.is_empty(),
        format!("failures at n = {dominated:?}"),
    );

    // the Bernoulli factor reproduces the Bernoulli κ
    let factor_err = (2..=SHEARER_MAX_N)
        .flat_map(|n| [0.1, 0.25, 0.5].map(|q: f64| (n, q)))
        .map(|(n, q)| {
            let kappa = (1.0 - (1.0 - q).powi(n as i32) - q.powi(n as i32)) / (n - 1) as f64;
            (bernoulli_shearer_factor(q, n) - (1.0 - kappa)).abs()
        })
        .fold(0.0, f64::max);
    out.check(
        "Bernoulli-weighted coefficient sums equal 1 − κ",
        factor_err <= 1e-12,
        format!("largest difference {factor_err:e}"),
    );
    Ok(())
}
