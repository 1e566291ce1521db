//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use manireg::graph::{families, heat_kernel, laplacian, DataGraph, GraphSpec};
use manireg::harness::{generate_toy, ToyDatasetSpec, ToyKind};
use manireg::kernels::{gram_matrix, Kernel};
use manireg::learn::objectives::{finite_difference_gradient, LogisticObjective, Objective};
use manireg::learn::{fit_lap_rls, fit_rls, lap_rls_objective, KernelModel, SemiSupervisedDataset};
use manireg::manifold::{
    convergence_experiment, cycle_circle_correspondence, AnalyticManifold, ConvergenceTrend, Eigenfunction,
};
use manireg::spectral::{check_interlacing, cheeger_constant_bruteforce, complement_spectrum, spectrum, sweep_cut};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eig(g: &DataGraph) -> Vec<f64> {
    spectrum(&laplacian(g, false).unwrap()).unwrap().eigenvalues
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn classic_spectra() -> Check {
    let mut worst = 0.0f64;
    for n in 2..=12 {
        let mut kn = vec![n as f64; n];
        kn[0] = 0.0;
        worst = worst.max(max_abs_diff(&eig(&families::complete(n)), &kn));
        if n >= 3 {
            let mut star = vec![1.0; n];
            star[0] = 0.0;
            star[n - 1] = n as f64;
            worst = worst.max(max_abs_diff(&eig(&families::star(n)), &star));
        }
    }
    for m in 1..=6 {
        for n in 1..=6 {
            let direct = eig(&families::complete_bipartite(m, n));
            let via = sorted(complement_spectrum(&families::two_cliques(m, n)).unwrap());
            worst = worst.max(max_abs_diff(&direct, &via));
            let mut analytic = vec![0.0, (m + n) as f64];
            analytic.extend(std::iter::repeat_n(m as f64, n - 1));
            analytic.extend(std::iter::repeat_n(n as f64, m - 1));
            worst = worst.max(max_abs_diff(&direct, &sorted(analytic)));
        }
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:e} > 1e-8"))?;
    Ok(format!("K_n, star, K_m,n (n <= 12) max deviation {worst:.1e}"))
}

fn cycle_circle() -> Check {
    let rows = cycle_circle_correspondence(100, 3).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for r in &rows {
        ensure(r.max_relative_error <= 0.02, || {
            format!("k={}: scaled eigenvalues {:?} off by {:.3}%", r.k, r.scaled, 100.0 * r.max_relative_error)
        })?;
        let align = r.alignment.0.min(r.alignment.1);
        ensure(align >= 0.999, || format!("k={}: alignment {align}", r.k))?;
        detail.push(format!("k={} err {:.3}% align {:.6}", r.k, 100.0 * r.max_relative_error, align));
    }
    Ok(detail.join(", "))
}

fn cheeger() -> Check {
    for n in 5..=9usize {
        let (h, _) = cheeger_constant_bruteforce(&families::path(n)).map_err(|e| e.to_string())?;
        let expect = 1.0 / (n - 1).div_ceil(2) as f64;
        ensure(h == expect, || format!("path n={n}: h = {h}, expected {expect}"))?;
    }
    let mut rng = rng(3);
    let mut violations = 0;
    let mut sweep_below = 0;
    for _ in 0..50 {
        let n = 2 * rng.random_range(3..=8);
        let g = random_regular_graph(&mut rng, n, 3);
        let (h, _) = cheeger_constant_bruteforce(&g).map_err(|e| e.to_string())?;
        let l2 = eig(&g)[1];
        if h > (2.0 * 3.0 * l2).sqrt() + 1e-12 {
            violations += 1;
        }
        if manireg::graph::connected_components(&g) == 1 {
            let cut = sweep_cut(&g).map_err(|e| e.to_string())?;
            if cut.conductance < h - 1e-12 {
                sweep_below += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} Cheeger violations on 3-regular graphs"))?;
    ensure(sweep_below == 0, || format!("{sweep_below} sweep cuts below h(G)"))?;
    for m in 3..=8 {
        let g = families::bridged_cliques(m);
        let (h, _) = cheeger_constant_bruteforce(&g).map_err(|e| e.to_string())?;
        let cut = sweep_cut(&g).map_err(|e| e.to_string())?;
        ensure((cut.conductance - h).abs() <= 1e-12, || {
            format!("bridged cliques m={m}: sweep {} vs h {h}", cut.conductance)
        })?;
    }
    Ok("paths 5..9 exact; 50 random 3-regular graphs: 0 violations; sweep >= h, equal on bridged cliques".into())
}

fn interlacing() -> Check {
    let mut rng = rng(4);
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(3..=12);
        let p = rng.random_range(0.1..0.8);
        let g = random_graph(&mut rng, n, p);
        let absent: Vec<(usize, usize)> =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| !g.has_edge(i, j)).collect();
        if absent.is_empty() {
            continue;
        }
        let e = absent[rng.random_range(0..absent.len())];
        let r = check_interlacing(&g, e).map_err(|e| e.to_string())?;
        ensure(r.interlaces(), || format!("n={n} edge {e:?}: violations at {:?}", r.violations))?;
        ensure(r.trace_difference() == 2.0, || format!("trace difference {}", r.trace_difference()))?;
        done += 1;
    }
    Ok("100 random (graph, absent edge) pairs interlace; trace difference exactly 2".into())
}

fn heat() -> Check {
    let mut rng = rng(5);
    let mut worst_id = 0.0f64;
    let mut worst_semi = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=20);
        let g = random_weighted_graph(&mut rng, n, 0.4);
        let lap = laplacian(&g, false).unwrap();
        let h0 = heat_kernel(&lap, 0.0).unwrap().matrix;
        worst_id = worst_id.max((h0 - DMatrix::identity(n, n)).amax());
        let (s, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let hs = heat_kernel(&lap, s).unwrap().matrix;
        let ht = heat_kernel(&lap, t).unwrap().matrix;
        let hst = heat_kernel(&lap, s + t).unwrap().matrix;
        worst_semi = worst_semi.max(inf_norm(&(&hs * &ht - hst)));

        // |e^{-tλ} − 1 + tλ| ≤ (tλ)²/2 eigenwise, so C = λ_max²/2 in the 2-norm.
        let lmax = spectrum(&lap).unwrap().lambda_max();
        let c = 0.5 * lmax * lmax;
        for k in 0..=4 {
            let t = 1e-3 * 10f64.powf(k as f64 / 4.0);
            let ht = heat_kernel(&lap, t).unwrap().matrix;
            let approx = DMatrix::identity(n, n) - &lap.matrix * t;
            let err = (ht - approx).svd(false, false).singular_values.max();
            if c > 0.0 {
                worst_ratio = worst_ratio.max(err / (c * t * t));
            }
        }
    }
    ensure(worst_id <= 1e-12, || format!("H_0 deviates from I by {worst_id:e}"))?;
    ensure(worst_semi <= 1e-9, || format!("semigroup defect {worst_semi:e}"))?;
    ensure(worst_ratio <= 1.0 + 1e-6, || format!("Taylor ratio {worst_ratio}"))?;
    Ok(format!(
        "H_0 err {worst_id:.1e}, semigroup err {worst_semi:.1e}, max ||H_t-(I-tL)||/(Ct^2) {worst_ratio:.3} over t in [1e-3, 1e-2]"
    ))
}

fn rls_equivalence() -> Check {
    let mut rng = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(5..=40);
        let lambda = rng.random_range(0.01..1.0);
        let xs = random_points(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = fit_rls(&Kernel::linear(), &xs, &y, lambda).map_err(|e| e.to_string())?;
        let x = DMatrix::from_fn(n, d, |i, j| xs[i][j]);
        let lhs = x.transpose() * &x + DMatrix::identity(d, d) * (lambda * n as f64);
        let w = lhs.lu().solve(&(x.transpose() * DVector::from_vec(y.clone()))).ok_or("singular")?;
        for test in random_points(&mut rng, 5, d) {
            let kernel_form = model.predict(&test).unwrap();
            let reg_form = w.dot(&DVector::from_vec(test));
            worst = worst.max((kernel_form - reg_form).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("kernel vs regression form differ by {worst:e}"))?;

    // Coefficients are unique only up to the null space of K; predictions
    // are not affected by that freedom.
    let mut worst_null = 0.0f64;
    for _ in 0..10 {
        let xs = random_points(&mut rng, 15, 3);
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = fit_rls(&Kernel::linear(), &xs, &y, 0.1).map_err(|e| e.to_string())?;
        let k = gram_matrix(&Kernel::linear(), &xs).unwrap().entries;
        let eig = k.symmetric_eigen();
        let null_idx = (0..15).filter(|&i| eig.eigenvalues[i].abs() < 1e-10).collect::<Vec<_>>();
        ensure(null_idx.len() == 12, || format!("expected rank 3, found nullity {}", null_idx.len()))?;
        let mut shifted = model.clone();
        for &c in &null_idx {
            let scale = rng.random_range(-5.0..5.0);
            for (a, v) in shifted.coefficients.iter_mut().zip(eig.eigenvectors.column(c).iter()) {
                *a += scale * v;
            }
        }
        for test in random_points(&mut rng, 5, 3) {
            worst_null = worst_null.max((model.predict(&test).unwrap() - shifted.predict(&test).unwrap()).abs());
        }
    }
    ensure(worst_null <= 1e-8, || format!("null-space shift changed predictions by {worst_null:e}"))?;
    Ok(format!("20 problems max diff {worst:.1e}; null-space invariance {worst_null:.1e}"))
}

fn gradient_oracles() -> Check {
    let mut rng = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(5..=25);
        let xs = random_points(&mut rng, n, 2);
        let gram = gram_matrix(&Kernel::gaussian(0.5).unwrap(), &xs).unwrap().entries;
        let y = DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        let obj = LogisticObjective { gram, y, lambda: rng.random_range(0.01..1.0) };
        let a = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let fd = finite_difference_gradient(&obj, &a, 1e-5);
        worst = worst.max((obj.gradient(&a) - &fd).norm() / fd.norm().max(1e-12));

        let nl = rng.random_range(1..n);
        let labels: Vec<f64> = (0..nl).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = SemiSupervisedDataset::new(xs, labels).unwrap();
        let obj = lap_rls_objective(&Kernel::gaussian(0.5).unwrap(), &data, 0.05, 2.0, &GraphSpec::Knn { k: 3 })
            .map_err(|e| e.to_string())?;
        let fd = finite_difference_gradient(&obj, &a, 1e-5);
        worst = worst.max((obj.gradient(&a) - &fd).norm() / fd.norm().max(1e-12));
    }
    ensure(worst <= 1e-5, || format!("relative gradient error {worst:e}"))?;

    let toy = generate_toy(&ToyDatasetSpec {
        kind: ToyKind::TwoMoons { noise: 0.05 },
        n_per_class: 50,
        n_labeled_per_class: 3,
        seed: 11,
    })
    .unwrap();
    let kernel = Kernel::gaussian(0.25).unwrap();
    let graph = GraphSpec::Knn { k: 6 };
    let model = fit_lap_rls(&kernel, &toy.data, 0.01, 1.0, &graph).map_err(|e| e.to_string())?;
    let obj = lap_rls_objective(&kernel, &toy.data, 0.01, 1.0, &graph).unwrap();
    let gnorm = obj.gradient(&DVector::from_vec(model.coefficients.clone())).norm();
    ensure(gnorm <= 1e-6, || format!("Lap-RLS solution gradient norm {gnorm:e}"))?;
    Ok(format!("max relative FD error {worst:.1e}; Lap-RLS solution gradient norm {gnorm:.1e}"))
}

fn accuracy(model: &KernelModel, points: &[Vec<f64>], truth: &[f64]) -> f64 {
    let hits = points.iter().zip(truth).filter(|(p, y)| model.classify(p).unwrap() == **y).count();
    hits as f64 / truth.len() as f64
}

fn semi_supervised_win() -> Check {
    let toy = generate_toy(&ToyDatasetSpec {
        kind: ToyKind::TwoMoons { noise: 0.05 },
        n_per_class: 100,
        n_labeled_per_class: 1,
        seed: 0,
    })
    .unwrap();
    let kernel = Kernel::gaussian(0.25).unwrap();
    let lap = fit_lap_rls(&kernel, &toy.data, 1e-4, 1e4, &GraphSpec::Knn { k: 8 }).map_err(|e| e.to_string())?;
    let rls = fit_rls(&kernel, toy.data.labeled_points(), toy.data.labels(), 1e-4).map_err(|e| e.to_string())?;
    let (acc_lap, acc_rls) =
        (accuracy(&lap, toy.data.points(), &toy.truth), accuracy(&rls, toy.data.points(), &toy.truth));
    ensure(acc_lap >= 0.95, || format!("Lap-RLS accuracy {acc_lap}"))?;
    ensure(acc_rls < 0.80, || format!("RLS accuracy {acc_rls}"))?;
    Ok(format!("Lap-RLS {:.1}% vs RLS {:.1}% on 200 points, 2 labels", 100.0 * acc_lap, 100.0 * acc_rls))
}

fn convergence() -> Check {
    let m = AnalyticManifold::circle(1.0).unwrap();
    let z = m.point_at(&[PI / 2.0]).unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    let reports = convergence_experiment(&m, &Eigenfunction::Sin(vec![1]), &z, &[500, 2000, 8000], 1.0, &seeds)
        .map_err(|e| e.to_string())?;
    let target = 1.0 / (2.0 * PI);
    ensure((reports[0].analytic_target - target).abs() < 1e-15, || "wrong target".into())?;
    let trend = ConvergenceTrend::from_reports(&reports);
    let final_rel = trend.medians.last().unwrap().1 / target;
    ensure(trend.converges(1.5), || format!("medians {:?}", trend.medians))?;
    ensure(final_rel <= 0.25, || format!("final median relative error {final_rel}"))?;
    let meds: Vec<String> = trend.medians.iter().map(|(n, e)| format!("{n}:{e:.2e}")).collect();
    Ok(format!(
        "medians [{}], reduction {:.2}x, final relative error {:.1}%",
        meds.join(", "),
        trend.reduction,
        100.0 * final_rel
    ))
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_golden_pipeline(a.path())?;
    let second = run_golden_pipeline(b.path())?;
    ensure(first.len() == second.len(), || "different output file sets".into())?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} output files byte-identical across two runs", first.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "classic spectra", limit: Some(Duration::from_secs(1)), run: classic_spectra },
        Criterion { id: 2, name: "cycle-circle correspondence", limit: None, run: cycle_circle },
        Criterion { id: 3, name: "Cheeger constant and sweep cut", limit: None, run: cheeger },
        Criterion { id: 4, name: "edge-addition interlacing", limit: None, run: interlacing },
        Criterion { id: 5, name: "heat kernel", limit: None, run: heat },
        Criterion { id: 6, name: "RLS kernel/regression equivalence", limit: None, run: rls_equivalence },
        Criterion { id: 7, name: "gradient oracles", limit: None, run: gradient_oracles },
        Criterion {
            id: 8,
            name: "semi-supervised two moons",
            limit: Some(Duration::from_secs(5)),
            run: semi_supervised_win,
        },
        Criterion {
            id: 9,
            name: "pointwise Laplacian convergence",
            limit: Some(Duration::from_secs(60)),
            run: convergence,
        },
        Criterion { id: 10, name: "CLI determinism", limit: None, run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {} ({elapsed:.2?}): {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {} ({elapsed:.2?}): {why}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
