//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::time::Instant;

use chipstack_core::annealer::{
    accept, length_weight, stress_weight, temperature_weight, AnnealOptions, OptimizationReport,
};
use chipstack_core::metrics::{compare_runs, pearson, RunSummary};
use chipstack_core::model::{LayerRole, Material, Net};
use chipstack_core::router::{build_routing_graph, hpwl_estimate, route_nets};
use chipstack_core::stress::{evaluate_stress, von_mises, StressTensor};
use chipstack_core::thermal::{
    build_grid, solve_steady_state, surface_gradient_stats, BoundaryConditions, GridGeometry, PlaneSelector,
    ScalarField, SolverOptions, VoxelGrid, ZCell,
};
use chipstack_core::{
    bundled, initial_placement, run_optimization, AnnealSchedule, ArchitectureSpec, EvalOptions, Fidelity,
    FinalMetrics, Objective, Placement, Pose,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: &'static str,
    name: &'static str,
    checks: Vec<(bool, String)>,
}

impl Outcome {
    fn new(id: &'static str, name: &'static str) -> Self {
        Self { id, name, checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(ok, _)| *ok)
    }

    fn report(&self) {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let details: Vec<String> = self
            .checks
            .iter()
            .map(|(ok, d)| if *ok { d.clone() } else { format!("FAILED {d}") })
            .collect();
        println!("{verdict} [{}] {}: {}", self.id, self.name, details.join("; "));
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn weight_formulas() -> Outcome {
    let mut o = Outcome::new("1", "weight formulas at 20 tabulated points");
    let start = Instant::now();
    // Hand-evaluated: a = 0 below 75 C, else min(0.1 + 0.01 (m - 23), 0.5) (m - 60) / 40 clamped.
    let temperature = [
        ((70.0, 72.0), 0.0),
        ((74.99, 60.0), 0.0),
        ((75.0, 75.0), 0.1875),
        ((76.0, 23.0), 0.2),
        ((82.0, 78.0), 0.275),
        ((90.0, 80.0), 0.375),
        ((100.0, 90.0), 0.5),
        ((120.0, 23.0), 0.5),
    ];
    // b = min(0.1 + 0.5 (max / 400)^1.5, 0.5).
    let stress = [
        ((0.0, 0.0), 0.1),
        ((50.0, 25.0), 0.12209708691207961),
        ((100.0, 50.0), 0.1625),
        ((200.0, 150.0), 0.2767766952966369),
        ((300.0, 0.0), 0.4247595264191645),
        ((0.0, 322.4), 0.4618033360819106),
        ((400.0, 400.0), 0.5),
        ((800.0, 10.0), 0.5),
    ];
    let length = [((0.5, 0.5), 0.0), ((0.0, 0.1), 0.9), ((0.275, 0.27678), 0.44822), ((0.4, 0.5), 0.1)];
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for ((x, y), want) in temperature {
        let err = (temperature_weight(x, y) - want).abs();
        worst = worst.max(err);
        hits += usize::from(err <= 1e-9);
    }
    for ((x, y), want) in stress {
        let err = (stress_weight(x, y, 400.0).unwrap() - want).abs();
        worst = worst.max(err);
        hits += usize::from(err <= 1e-9);
    }
    for ((x, y), want) in length {
        let err = (length_weight(x, y) - want).abs();
        worst = worst.max(err);
        hits += usize::from(err <= 1e-9);
    }
    o.check(hits == 20, format!("{hits}/20 within 1e-9 (max error {worst:.1e})"));
    let t = start.elapsed().as_secs_f64();
    o.check(t < 1.0, format!("{t:.3} s < 1 s"));
    o
}

/// Von Mises stress from the second deviatoric invariant.
fn von_mises_j2(s: &StressTensor) -> f64 {
    let p = (s.sigma_x + s.sigma_y + s.sigma_z) / 3.0;
    let (dx, dy, dz) = (s.sigma_x - p, s.sigma_y - p, s.sigma_z - p);
    let j2 = 0.5 * (dx * dx + dy * dy + dz * dz) + s.tau_xy * s.tau_xy + s.tau_yz * s.tau_yz + s.tau_zx * s.tau_zx;
    (3.0 * j2).sqrt()
}

fn von_mises_identities() -> Outcome {
    let mut o = Outcome::new("2", "von Mises identities and invariances");
    let start = Instant::now();
    let uni = von_mises(&StressTensor::normal(123.0, 0.0, 0.0));
    let shear = von_mises(&StressTensor::shear(0.0, 0.0, 40.0));
    let hydro = von_mises(&StressTensor::normal(75.0, 75.0, 75.0));
    o.check(
        rel_close(uni, 123.0, 1e-12) && rel_close(shear, 3f64.sqrt() * 40.0, 1e-12) && hydro.abs() <= 1e-12,
        format!("uniaxial {uni}, pure shear {shear:.12}, hydrostatic {hydro}"),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut offset_ok, mut sign_ok, mut j2_ok) = (0, 0, 0);
    for _ in 0..1000 {
        let mut r = || rng.random_range(-500.0..500.0);
        let s = StressTensor { sigma_x: r(), sigma_y: r(), sigma_z: r(), tau_xy: r(), tau_yz: r(), tau_zx: r() };
        let p = r();
        let shifted = StressTensor { sigma_x: s.sigma_x + p, sigma_y: s.sigma_y + p, sigma_z: s.sigma_z + p, ..s };
        let v = von_mises(&s);
        offset_ok += usize::from(rel_close(von_mises(&shifted), v, 1e-12));
        sign_ok += usize::from(rel_close(von_mises(&s.scaled(-1.0)), v, 1e-12));
        j2_ok += usize::from(rel_close(von_mises_j2(&s), v, 1e-12));
    }
    o.check(offset_ok == 1000, format!("hydrostatic offset {offset_ok}/1000"));
    o.check(sign_ok == 1000, format!("sign flip {sign_ok}/1000"));
    o.check(j2_ok == 1000, format!("J2 oracle {j2_ok}/1000"));
    let t = start.elapsed().as_secs_f64();
    o.check(t < 1.0, format!("{t:.3} s < 1 s"));
    o
}

/// Laterally uniform three-layer stack heated in its bottom layer.
fn layered_slab() -> (VoxelGrid, f64) {
    let layers = [(0.150, 150.0), (0.050, 86.0), (2.0, 398.0)];
    let geometry = GridGeometry {
        nx: 8,
        ny: 8,
        dx: 1.0,
        dy: 1.0,
        z: layers
            .iter()
            .enumerate()
            .map(|(k, &(dz, _))| ZCell { layer: k, role: LayerRole::Chiplet, dz, z_index: k })
            .collect(),
    };
    let plane = geometry.n_columns();
    let mut materials = vec![Material::air()];
    materials.extend(layers.iter().enumerate().map(|(k, &(_, kt))| Material::new(&format!("m{k}"), kt, 3.0, 100.0)));
    let cell_material = (0..3).flat_map(|k| vec![k as u16 + 1; plane]).collect();
    let flux = 2e5;
    let mut source = vec![0.0; 3 * plane];
    source[..plane].fill(flux / (layers[0].0 * 1e-3));
    let grid = VoxelGrid::from_parts(geometry, materials, cell_material, source, 1).unwrap();
    // Peak at the adiabatic bottom face: half the heated layer, the rest in series, then the sink.
    let h = 5000.0;
    let resistance = layers[0].0 * 1e-3 / (2.0 * layers[0].1)
        + layers[1..].iter().map(|&(dz, k)| dz * 1e-3 / k).sum::<f64>()
        + 1.0 / h;
    (grid, 23.0 + flux * resistance)
}

fn thermal_oracle() -> Outcome {
    let mut o = Outcome::new("3", "thermal oracle");
    let (slab, analytic) = layered_slab();
    let bc = BoundaryConditions { h_top: 5000.0, h_bottom: 1e-9, ambient: 23.0 };
    let (t, _) = solve_steady_state(&slab, &bc, &SolverOptions::default()).unwrap();
    let err = (t.max() - analytic).abs() / (analytic - 23.0);
    o.check(err <= 0.02, format!("series slab peak {:.4} vs {analytic:.4} C ({:.3}% of rise)", t.max(), err * 100.0));

    let mut worst: f64 = 0.0;
    for spec in bundled::all() {
        let p = initial_placement(&spec, 0).unwrap();
        let grid = build_grid(&spec, &p, 1.0).unwrap();
        let (_, stats) =
            solve_steady_state(&grid, &BoundaryConditions::from_package(&spec.package), &SolverOptions::default()).unwrap();
        worst = worst.max(stats.energy_imbalance());
    }
    o.check(worst <= 1e-6, format!("energy imbalance {worst:.1e} <= 1e-6 on 4 bundled configs"));

    let mut cold = bundled::toy4().with_uniform_power();
    cold.chiplets.iter_mut().for_each(|c| c.power = 0.0);
    let p = initial_placement(&cold, 0).unwrap();
    let grid = build_grid(&cold, &p, 1.0).unwrap();
    let (t, _) = solve_steady_state(&grid, &BoundaryConditions::from_package(&cold.package), &SolverOptions::default()).unwrap();
    o.check(t.values.iter().all(|&v| v == 23.0), "zero power gives exactly 23 C everywhere");

    let spec = bundled::toy4();
    let p = initial_placement(&spec, 0).unwrap();
    let resolution = 64.0 / spec.package.interposer_width;
    let start = Instant::now();
    let grid = build_grid(&spec, &p, resolution).unwrap();
    let (t, _) = solve_steady_state(&grid, &BoundaryConditions::from_package(&spec.package), &SolverOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let g = &t.geometry;
    o.check(
        g.nx == 64 && g.ny == 64 && secs < 10.0,
        format!("{}x{}x{} solve in {secs:.2} s < 10 s", g.nx, g.ny, g.nz()),
    );
    o
}

/// toy4 with its dies mirrored about x = W/2.
fn mirrored_toy() -> (ArchitectureSpec, Placement) {
    let spec = bundled::toy4().with_uniform_power();
    let w = spec.package.interposer_width;
    let mut p = Placement::new();
    p.insert("cpu0", Pose::at(5.2, 9.0));
    p.insert("cpu1", Pose::at(w - 5.2, 9.0));
    p.insert("mem0", Pose::at(4.3, 15.3));
    p.insert("mem1", Pose::at(w - 4.3, 15.3));
    (spec, p)
}

fn mirror_error(f: &ScalarField) -> f64 {
    let g = &f.geometry;
    let mut worst: f64 = 0.0;
    for k in 0..g.nz() {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (a, b) = (f.at(i, j, k), f.at(g.nx - 1 - i, j, k));
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
    }
    worst
}

fn symmetry_suite() -> Outcome {
    let mut o = Outcome::new("4", "symmetry suite");
    let (spec, p) = mirrored_toy();
    assert!(chipstack_core::validate_placement(&p, &spec).unwrap().is_ok());
    let grid = build_grid(&spec, &p, 1.0).unwrap();
    let bc = BoundaryConditions::from_package(&spec.package);
    let (t, _) = solve_steady_state(&grid, &bc, &SolverOptions::default()).unwrap();
    let s = evaluate_stress(&t, &grid, &spec).unwrap();
    let (et, es) = (mirror_error(&t), mirror_error(&s.von_mises));
    o.check(et <= 1e-6, format!("T mirror mismatch {et:.1e} relative"));
    o.check(es <= 1e-6, format!("sigma_vm mirror mismatch {es:.1e} relative"));

    let mut still = spec.clone();
    still.package.gravity = 0.0;
    still.chiplets.iter_mut().for_each(|c| c.power = 0.0);
    let grid = build_grid(&still, &p, 1.0).unwrap();
    let (t, _) = solve_steady_state(&grid, &BoundaryConditions::from_package(&still.package), &SolverOptions::default()).unwrap();
    let peak = evaluate_stress(&t, &grid, &still).unwrap().von_mises.max();
    o.check(peak <= 1e-9, format!("zero gravity, uniform ambient: max sigma_vm {peak:e} MPa"));
    o
}

fn side_for(seed: u64) -> usize {
    4 + (seed % 2) as usize
}

fn router_optimality() -> Outcome {
    let mut o = Outcome::new("5", "router optimality");
    let mut joint_equal = 0;
    for seed in 0..40 {
        let inst = common::tiny_instance(seed, side_for(seed));
        let g = build_routing_graph(&inst.spec, &inst.placement, 1.0, inst.capacity).unwrap();
        let r = route_nets(&g, &inst.spec.nets).unwrap();
        joint_equal += usize::from(r.feasible && Some(r.total_wirelength) == common::brute_force_optimum(&inst));
    }
    o.check(joint_equal == 40, format!("equals exhaustive joint optimum on {joint_equal}/40 instances"));

    const SWEEP: u64 = 2000;
    let (mut lex_equal, mut joint_gaps, mut hpwl_ok, mut feasible) = (0, 0, 0, 0);
    for seed in 0..SWEEP {
        let inst = common::tiny_instance(seed, side_for(seed));
        let g = build_routing_graph(&inst.spec, &inst.placement, 1.0, inst.capacity).unwrap();
        let r = route_nets(&g, &inst.spec.nets).unwrap();
        let per_net: Vec<f64> = r.nets.iter().map(|n| n.length_mm).collect();
        lex_equal += usize::from(Some(per_net) == common::lexicographic_optimum(&inst));
        if r.feasible {
            feasible += 1;
            joint_gaps += usize::from(Some(r.total_wirelength) != common::brute_force_optimum(&inst));
            hpwl_ok += usize::from(hpwl_estimate(&inst.placement, &inst.spec.nets).unwrap() <= r.total_wirelength + 1e-9);
        }
    }
    o.check(lex_equal == SWEEP as usize, format!("equals net-ordered exhaustive optimum on {lex_equal}/{SWEEP}"));
    o.check(hpwl_ok == feasible, format!("hpwl <= routed on {hpwl_ok}/{feasible} feasible instances"));
    println!("INFO [5] joint-optimum gaps on the {SWEEP}-instance sweep: {joint_gaps} (sequential routing order)");

    let mut spec = bundled::toy4();
    spec.chiplets.truncate(2);
    spec.nets = vec![Net { src: "cpu0".into(), dst: "cpu1".into(), wires: 24, bandwidth: 24.0, approximate: false }];
    let mut p = Placement::new();
    p.insert("cpu0", Pose::at(4.0, 6.0));
    p.insert("cpu1", Pose::at(13.0, 14.0));
    let g = build_routing_graph(&spec, &p, 1.0, 128).unwrap();
    let r = route_nets(&g, &spec.nets).unwrap();
    let manhattan = (13.0 - 4.0) + (14.0 - 6.0);
    o.check(
        r.total_wirelength == manhattan * 24.0,
        format!("uncongested pair routes {} mm = {manhattan} mm x 24 wires", r.total_wirelength),
    );
    o
}

fn toy_run(objective: Objective, seed: u64) -> OptimizationReport {
    let spec = bundled::toy4();
    let schedule = AnnealSchedule { iters_per_level: 10, seed, ..AnnealSchedule::default() };
    let options = AnnealOptions { fidelity: Fidelity::HpwlProxy, ..AnnealOptions::default() };
    run_optimization(&spec, objective, &schedule, &options, &EvalOptions::default()).unwrap().0
}

fn sa_mechanics(trend_reports: &[OptimizationReport]) -> Outcome {
    let mut o = Outcome::new("6", "SA mechanics");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 100_000;
    let hits = (0..trials).filter(|_| accept(1.0, 1.2, 0.5, rng.random())).count();
    let rate = hits as f64 / trials as f64;
    let expected = (-0.4f64).exp();
    o.check(
        (rate - expected).abs() <= 0.005 * expected,
        format!("acceptance rate {rate:.4} vs exp(-0.4) = {expected:.4} (within 0.5%)"),
    );
    let always = (0..10_000).all(|_| {
        let d = rng.random_range(1e-9..10.0);
        accept(5.0, 5.0 - d, rng.random_range(0.001..1.0), rng.random())
    });
    o.check(always, "delta > 0 accepted in 10000/10000 draws");
    let monotone = trend_reports
        .iter()
        .all(|r| r.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
    o.check(monotone, format!("best-so-far non-increasing in {} traces", trend_reports.len()));
    let spec = bundled::toy4();
    let schedule = AnnealSchedule { iters_per_level: 2, seed: 11, ..AnnealSchedule::default() };
    let options = AnnealOptions { fidelity: Fidelity::HpwlProxy, warmup_samples: 5, ..AnnealOptions::default() };
    let run = || {
        run_optimization(&spec, Objective::Wst, &schedule, &options, &EvalOptions::default())
            .unwrap()
            .0
            .to_json_without_timing()
    };
    let (a, b) = (run(), run());
    o.check(a == b, format!("same seed gives byte-identical reports ({} bytes)", a.len()));
    o
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn trend(reports: &[OptimizationReport], secs: f64) -> Outcome {
    let mut o = Outcome::new("7", "desk-scale trend on toy4");
    let med = |obj: Objective, f: fn(&FinalMetrics) -> f64| {
        median(reports.iter().filter(|r| r.objective == obj).map(|r| f(r.final_metrics.as_ref().unwrap())).collect())
    };
    let s_wt = med(Objective::Wt, |m| m.peak_stress);
    let s_wst = med(Objective::Wst, |m| m.peak_stress);
    let t_ws = med(Objective::Ws, |m| m.peak_temp);
    let t_wst = med(Objective::Wst, |m| m.peak_temp);
    o.check(s_wst <= s_wt, format!("median sigma_vm WST {s_wst:.3} <= WT {s_wt:.3} MPa"));
    o.check(t_wst <= 1.05 * t_ws, format!("median T WST {t_wst:.3} <= 1.05 x WS {t_ws:.3} C"));
    o.check(secs < 1800.0, format!("15 runs in {secs:.0} s < 30 min"));
    o
}

fn metrics_suite() -> Outcome {
    let mut o = Outcome::new("8", "metrics");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: Vec<f64> = (0..100).map(|_| rng.random_range(-50.0..50.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 * v + rng.random_range(-40.0..40.0)).collect();
        worst = worst.max((pearson(&x, &y).unwrap() - common::pearson_two_pass(&x, &y)).abs());
    }
    o.check(worst <= 1e-12, format!("pearson vs two-pass oracle max diff {worst:.1e} over 200 pairs"));

    let spec = bundled::toy4();
    let p = initial_placement(&spec, 0).unwrap();
    let grid = build_grid(&spec, &p, 1.0).unwrap();
    let (t, _) = solve_steady_state(&grid, &BoundaryConditions::from_package(&spec.package), &SolverOptions::default()).unwrap();
    let (stats, _) = surface_gradient_stats(&t, PlaneSelector::INTERPOSER_TOP).unwrap();
    let plane = t.plane(PlaneSelector::INTERPOSER_TOP).unwrap();
    let g = &plane.geometry;
    let (nx, ny) = (g.nx as i64, g.ny as i64);
    let v = |i: i64, j: i64| plane.values[(i + nx * j) as usize];
    let mut mags = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (il, ir) = ((i - 1).max(0), (i + 1).min(nx - 1));
            let (jl, jr) = ((j - 1).max(0), (j + 1).min(ny - 1));
            let gx = (v(ir, j) - v(il, j)) / ((ir - il) as f64 * g.dx);
            let gy = (v(i, jr) - v(i, jl)) / ((jr - jl) as f64 * g.dy);
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    let std = (mags.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n).sqrt();
    let max = mags.iter().copied().fold(f64::MIN, f64::max);
    o.check(
        stats.mean == mean && stats.std == std && stats.max == max,
        format!("gradient stats equal brute force (mean {mean:.6}, std {std:.6}, max {max:.6} C/mm)"),
    );

    let fixture = |objective, temp, stress, length| RunSummary {
        architecture: "ascend910".into(),
        objective,
        seed: 0,
        metrics: FinalMetrics {
            peak_temp: temp,
            peak_stress: stress,
            wirelength: length,
            routing_feasible: true,
            hpwl: length,
            gradient: chipstack_core::thermal::GradientStats { mean: 0.0, std: 0.0, max: 0.0 },
            correlations: Default::default(),
        },
    };
    let runs = [
        fixture(Objective::Wt, 81.06, 232.63, 27200.0),
        fixture(Objective::Ws, 81.21, 226.89, 25895.0),
        fixture(Objective::Wst, 79.04, 222.14, 27787.0),
    ];
    let table = compare_runs(&runs, None).unwrap();
    let d = table.rows.iter().find(|r| r.objective == Objective::Wst).unwrap().delta_stress_pct;
    let hand = (222.14 - 232.63) / 232.63 * 100.0;
    o.check(
        (d - hand).abs() <= 0.001 * hand.abs() && (d - (-4.5)).abs() < 0.05,
        format!("WT->WST stress delta {d:.3}% (hand {hand:.3}%, published -4.5%)"),
    );
    o
}

fn main() {
    let mut outcomes = vec![weight_formulas(), von_mises_identities(), thermal_oracle(), symmetry_suite(), router_optimality()];

    let start = Instant::now();
    let mut reports = Vec::new();
    for objective in Objective::ALL {
        for seed in 1..=5 {
            reports.push(toy_run(objective, seed));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcomes.push(sa_mechanics(&reports));
    outcomes.push(trend(&reports, secs));
    outcomes.push(metrics_suite());

    for o in &outcomes {
        o.report();
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
