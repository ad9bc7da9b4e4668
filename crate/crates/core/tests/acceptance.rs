//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::time::Instant;

use coolimit::channel::{
    conditional_state, ground_projector, project_b, tripartite_state, unconditional_state, ChannelParams,
    EnvironmentSpec,
};
use coolimit::cli::{run_pipeline, RunConfig};
use coolimit::entanglement::{is_entangled, negativity, DEFAULT_TOL};
use coolimit::limits::{
    cond_boundary, critical_ps_numeric, evaluate, high_temp_boundary, uncond_boundary, Axis, Regime, Route,
};
use coolimit::photonics::{mix_detections, rate_ratio, simulate_streams, CoincidenceTally, NoisePolarization, RateConfig};
use coolimit::qmat::fidelity;
use coolimit::tomography::{simulate_tomography, NoiseModel, TomographySettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_unconditional_threshold() -> Outcome {
    let b = uncond_boundary(0.5).map_err(|e| e.to_string())?;
    let spec = EnvironmentSpec::new(0.5).unwrap();
    let above = is_entangled(&unconditional_state(1.0 / 3.0 + 1e-4, &spec).unwrap(), DEFAULT_TOL).unwrap();
    let below = is_entangled(&unconditional_state(1.0 / 3.0 - 1e-4, &spec).unwrap(), DEFAULT_TOL).unwrap();
    ensure(
        (b - 1.0 / 3.0).abs() <= 1e-12 && above && !below,
        format!("boundary(0.5) - 1/3 = {:.1e}; entangled above: {above}, below: {below}", b - 1.0 / 3.0),
    )
}

fn c2_closed_form_vs_numeric() -> Outcome {
    let mut worst_u: f64 = 0.0;
    for k in 1..=200 {
        let p_t = 0.5 * k as f64 / 200.0;
        let numeric = critical_ps_numeric(p_t, 0.0, Route::Unconditional).map_err(|e| e.to_string())?;
        worst_u = worst_u.max((uncond_boundary(p_t).unwrap() - numeric).abs());
    }
    let mut worst_c: f64 = 0.0;
    for i in 1..=50 {
        let p_t = 0.5 * i as f64 / 50.0;
        for &pl in &Axis::linspace(0.0, 0.6, 50).0 {
            let numeric = critical_ps_numeric(p_t, pl, Route::Conditional).map_err(|e| format!("({p_t}, {pl}): {e}"))?;
            worst_c = worst_c.max((cond_boundary(p_t * pl).unwrap() - numeric).abs());
        }
    }
    ensure(
        worst_u <= 1e-6 && worst_c <= 1e-6,
        format!("max |closed - numeric|: unconditional {worst_u:.2e} (200 pts), conditional {worst_c:.2e} (50x50)"),
    )
}

fn c3_construction_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut state_err, mut weight_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let (a, b) = (u.min(v), u.max(v));
        let params = ChannelParams::new(a, b - a, 1.0 - b).unwrap();
        let spec = EnvironmentSpec::new(rng.random_range(0.0..=0.5)).unwrap();
        let (closed, n) = conditional_state(&params, &spec).unwrap();
        let (projected, w) = project_b(&tripartite_state(&params, &spec), &ground_projector()).unwrap();
        let expected_n = (1.0 - spec.p_t()) * (1.0 - params.pf) + params.pf / 2.0;
        state_err = state_err.max(closed.matrix().max_abs_diff(projected.matrix()));
        weight_err = weight_err.max((w - n).abs()).max((n - expected_n).abs());
    }
    ensure(
        state_err <= 1e-12 && weight_err <= 1e-12,
        format!("1000 draws: max elementwise {state_err:.1e}, max weight error {weight_err:.1e}"),
    )
}

fn c4_product_law() -> Outcome {
    let (mut worst, mut pairs): (f64, u32) = (0.0, 0);
    for k in 1..=40 {
        let x = 0.3 * k as f64 / 40.0;
        // The crossing must lie in [0, 1 - P_L], so p_T > x / (1 - cond_boundary(x)).
        let lo = x / (0.99 - cond_boundary(x).unwrap());
        if lo >= 0.5 {
            continue;
        }
        let values: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|f| {
                let p_t = lo + f * (0.5 - lo);
                critical_ps_numeric(p_t, x / p_t, Route::Conditional).unwrap()
            })
            .collect();
        pairs += 1;
        for v in &values {
            worst = worst.max((v - values[0]).abs());
        }
    }
    let n = 1_000_000;
    let (arg, max) = (0..=n)
        .map(|k| {
            let x = k as f64 / n as f64;
            (x, cond_boundary(x).unwrap())
        })
        .fold((0.0, f64::MIN), |best, c| if c.1 > best.1 { c } else { best });
    ensure(
        pairs == 40 && worst <= 1e-6 && (arg - 1.0 / 3.0).abs() <= 1e-6 && (max - 1.0 / 3.0).abs() <= 1e-6,
        format!("{pairs} products x 3 factorisations, spread {worst:.1e}; max cond_boundary {max:.9} at P_TL = {arg:.6}"),
    )
}

fn c5_approximation_regimes() -> Outcome {
    let mut worst_u: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for &p_t in &[1e-7, 1e-6, 1e-5, 1e-4, 1e-3] {
        worst_u = worst_u.max((uncond_boundary(p_t).unwrap() / p_t.sqrt() - 1.0).abs());
        for &pl in &[0.01, 0.1, 0.5, 1.0] {
            let x = p_t * pl;
            worst_c = worst_c.max((cond_boundary(x).unwrap() / x.sqrt() - 1.0).abs());
        }
    }
    let mut worst_h: f64 = 0.0;
    for &pl in &[1e-6, 1e-4, 1e-3, 5e-3, 1e-2] {
        let exact = cond_boundary(0.5 * pl).unwrap();
        worst_h = worst_h.max((exact / high_temp_boundary(pl).unwrap() - 1.0).abs());
    }
    ensure(
        worst_u <= 0.05 && worst_c <= 0.05 && worst_h <= 0.05,
        format!(
            "max relative error: sqrt(p_T) {:.2}%, sqrt(P_TL) {:.2}%, sqrt(P_L/2) {:.2}%",
            100.0 * worst_u,
            100.0 * worst_c,
            100.0 * worst_h
        ),
    )
}

fn linear_r2(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

fn c6_monte_carlo_constraint() -> Outcome {
    let mut worst_sigma: f64 = 0.0;
    let mut min_triples = u64::MAX;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, tau) in [0.25e-6, 0.5e-6, 0.75e-6, 1e-6].into_iter().enumerate() {
        let c = RateConfig::new(1e5, 1e5, 4e5, tau, NoisePolarization::Ground).unwrap();
        let t = simulate_streams(&c, 30.0, 60 + k as u64).map_err(|e| e.to_string())?;
        let (residual, se) = t.plane_residual().map_err(|e| e.to_string())?;
        worst_sigma = worst_sigma.max(residual.abs() / se);
        min_triples = min_triples.min(t.n_triple());
        xs.push(rate_ratio(&c).unwrap());
        ys.push(t.loss_ratio().ok_or("no successes")?);
    }
    let (slope, r2) = linear_r2(&xs, &ys);
    ensure(
        worst_sigma <= 3.0 && min_triples >= 10_000 && r2 >= 0.99,
        format!(
            "|2P_S+P_L-1| <= {worst_sigma:.2} sigma at >= {min_triples} triples; P_L/P_S vs R: R^2 = {r2:.5}, fitted constant {slope:.4}"
        ),
    )
}

fn c7_mixing_equivalence() -> Outcome {
    let c = RateConfig::new(1e5, 1e5, 4e5, 1e-6, NoisePolarization::Ground).unwrap();
    let spec = EnvironmentSpec::new(0.25).unwrap();
    let ground = simulate_streams(&c, 30.0, 71).unwrap();
    let excited = simulate_streams(&c.with_noise(NoisePolarization::Excited), 30.0, 72).unwrap();
    let mixed = mix_detections(&ground, &excited, 0.25, 73).map_err(|e| e.to_string())?;
    let direct = simulate_streams(&c.with_noise(NoisePolarization::Thermal(spec)), 30.0, 74).unwrap();
    let z = |a: &CoincidenceTally, b: &CoincidenceTally, heralded: bool| -> f64 {
        let (x, y) = if heralded {
            (a.heralded_fractions().unwrap(), b.heralded_fractions().unwrap())
        } else {
            (a.empirical().unwrap(), b.empirical().unwrap())
        };
        (0..3)
            .map(|k| (x.values[k] - y.values[k]).abs() / (x.std_errors[k].powi(2) + y.std_errors[k].powi(2)).sqrt())
            .fold(0.0, f64::max)
    };
    let (z_all, z_her) = (z(&mixed, &direct, false), z(&mixed, &direct, true));
    ensure(
        z_all <= 3.0 && z_her <= 3.0 && mixed.n_triple() >= 10_000,
        format!(
            "{} mixed vs {} direct triples: max |z| {z_all:.2} on (P_S, P_F, P_L), {z_her:.2} on analyser-passing fractions",
            mixed.n_triple(),
            direct.n_triple()
        ),
    )
}

fn c8_tomography_closure() -> Outcome {
    let mut min_fid: f64 = 1.0;
    let mut worst_neg: f64 = 0.0;
    for (k, &(ps, pl, p_t)) in [(0.4, 0.4, 0.1), (0.7, 0.1, 0.3), (0.3, 0.3, 0.5), (0.5, 0.0, 0.2), (0.2, 0.7, 0.05)]
        .iter()
        .enumerate()
    {
        let params = ChannelParams::from_success_loss(ps, pl).unwrap();
        let (truth, _) = conditional_state(&params, &EnvironmentSpec::new(p_t).unwrap()).unwrap();
        let s = TomographySettings::new(1_000_000, 80 + k as u64, NoiseModel::Multinomial).unwrap();
        let (_, rho) = simulate_tomography(&truth, &s).map_err(|e| e.to_string())?;
        min_fid = min_fid.min(fidelity(&rho, &truth).unwrap());
        worst_neg = worst_neg.max((negativity(&rho).unwrap() - negativity(&truth).unwrap()).abs());
    }

    let (mut agree, mut total, mut seed) = (0u32, 0u32, 1000u64);
    for &p_t in &Axis::linspace(0.05, 0.5, 10).0 {
        for &ps in &Axis::linspace(0.05, 0.95, 10).0 {
            for &pl in &[0.0, 0.2, 0.4, 0.6] {
                if ps + pl > 1.0 {
                    continue;
                }
                let v = evaluate(p_t, ps, pl).unwrap();
                if (ps - v.uncond_boundary_ps).abs() <= 0.02 || (ps - v.cond_boundary_ps).abs() <= 0.02 {
                    continue;
                }
                let spec = EnvironmentSpec::new(p_t).unwrap();
                let params = ChannelParams::from_success_loss(ps, pl).unwrap();
                let unheralded = unconditional_state(ps, &spec).unwrap();
                let (heralded, _) = conditional_state(&params, &spec).unwrap();
                let mut entangled = |truth| {
                    seed += 1;
                    let s = TomographySettings::new(100_000, seed, NoiseModel::Multinomial).unwrap();
                    negativity(&simulate_tomography(truth, &s).unwrap().1).unwrap() > DEFAULT_TOL
                };
                let measured = Regime::from_verdicts(entangled(&unheralded), entangled(&heralded));
                total += 1;
                agree += u32::from(measured == v.regime());
            }
        }
    }
    let rate = agree as f64 / total as f64;
    ensure(
        min_fid >= 0.999 && worst_neg <= 0.01 && rate >= 0.99,
        format!(
            "1e6 shots: min fidelity {min_fid:.5}, max negativity error {worst_neg:.4}; classification {agree}/{total} ({:.1}%)",
            100.0 * rate
        ),
    )
}

fn c9_pipeline_classes() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/pipeline.toml");
    let config = RunConfig::load(&path).map_err(|e| e.to_string())?;
    let rows = run_pipeline(&config).map_err(|e| e.to_string())?;
    let classes: Vec<&str> = rows.iter().map(|r| r.class_tomography.as_str()).collect();
    let all = ["unconditional", "conditional_only", "separable"].iter().all(|c| classes.contains(c));
    let agree = rows.iter().all(|r| r.agree);
    ensure(all && agree, format!("scenario classes {classes:?}, all agree with closed form: {agree}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("unconditional threshold", c1_unconditional_threshold),
        ("closed form vs numeric boundary", c2_closed_form_vs_numeric),
        ("heralded state construction", c3_construction_equivalence),
        ("product-error law", c4_product_law),
        ("approximation regimes", c5_approximation_regimes),
        ("Monte Carlo constraint", c6_monte_carlo_constraint),
        ("mixing equivalence", c7_mixing_equivalence),
        ("tomography closure", c8_tomography_closure),
        ("pipeline point classes", c9_pipeline_classes),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
