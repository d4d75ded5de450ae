//! Acceptance suite. Every criterion runs at its stated tolerance and prints
//! one `PASS`/`FAIL` line; the assertion comes after the line is printed.
//!
//! The 2D benchmark pipeline (default configuration) is run once and shared
//! by criteria 5 to 8 and 10.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use leray_rom::config::PipelineConfig;
use leray_rom::fom::*;
use leray_rom::mesh::*;
use leray_rom::metrics::{kinetic_energy, peak_errors};
use leray_rom::pipeline::{self, StageDirs};
use leray_rom::pod::*;
use leray_rom::rom_offline::{assemble, ModeSet, OperatorConstants};
use leray_rom::rom_online::{rom_step, PpeBoundaryForm, ReducedState, RomConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

fn verdict(id: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn scratch(name: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(&p).unwrap();
    p
}

/// Columns of a CSV file with a header row, keyed by header name.
fn csv_columns(path: &Path) -> BTreeMap<String, Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let names: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols: BTreeMap<String, Vec<String>> = names.iter().map(|n| (n.clone(), Vec::new())).collect();
    for line in lines {
        for (n, v) in names.iter().zip(line.split(',')) {
            cols.get_mut(n).unwrap().push(v.to_string());
        }
    }
    cols
}

fn floats(cols: &BTreeMap<String, Vec<String>>, name: &str) -> Vec<f64> {
    cols[name].iter().map(|x| x.parse().unwrap()).collect()
}

fn json_number(path: &Path, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v[key].as_f64().unwrap()
}

/// Mean over the samples after the initial one.
fn tail_mean(v: &[f64]) -> f64 {
    v[1..].iter().sum::<f64>() / (v.len() - 1) as f64
}

struct Bench {
    root: PathBuf,
}

fn bench() -> &'static Bench {
    static B: OnceLock<Bench> = OnceLock::new();
    B.get_or_init(|| {
        let root = scratch("benchmark_a");
        pipeline::run_all(&PipelineConfig::default(), &root).expect("benchmark pipeline");
        Bench { root }
    })
}

impl Bench {
    fn dirs(&self) -> StageDirs {
        StageDirs::standard(&self.root)
    }

    fn errors(&self) -> BTreeMap<String, Vec<String>> {
        csv_columns(&self.dirs().report.join("errors.csv"))
    }
}

#[test]
fn criterion_01_pod_matches_svd() {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1000 + seed);
        let s = DMatrix::from_fn(30, 10, |_, _| rng.gen_range(-1.0..1.0));
        let mut sv: Vec<f64> = s.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let layout = FieldLayout { kind: FieldKind::Pressure, n_cells: 30, n_boundary: 0, n_faces: 0 };
        let snaps = SnapshotMatrix { layout, data: s.clone() };
        for r in 1..=5 {
            let b = pod(&snaps, &[1.0; 30], RankSelection::Fixed(r)).unwrap();
            let err = (&s - &b.modes * (b.modes.transpose() * &s)).norm_squared();
            let want: f64 = sv[r..].iter().map(|x| x * x).sum();
            worst = worst.max((err - want).abs() / want.max(1.0));
        }
    }
    verdict("1", worst <= 1e-10, format!("max |POD - SVD| projection error {worst:.2e} (tol 1e-10)"));
}

#[test]
fn criterion_02_operator_oracle() {
    let mesh = common::oracle::oracle_mesh();
    assert!(mesh.n_cells() <= 50);
    // Panics with the offending operator on a mismatch.
    let ok = std::panic::catch_unwind(|| common::oracle::brute_force_equivalence(3, 2024)).is_ok();
    verdict("2", ok, format!("{} cells, rank 3: every operator and tensor entry within 1e-12 of the loop oracle", mesh.n_cells()));
}

#[test]
fn criterion_03_zero_radius_identity() {
    let mesh = generate_channel_cylinder_mesh(&ChannelGeometry::benchmark_2d(), 0.02).unwrap();
    let bc = common::benchmark_bc(&mesh);
    let dt = 2e-3;
    let steps = 100;
    let cfg = FomConfig {
        props: FluidProperties::new(1.0, 1e-3).unwrap(),
        filter: FilterParams::new(0.0).unwrap(),
        time: TimeSetup::new(0.0, dt * steps as f64, dt, 10.0 * dt).unwrap(),
        model: Model::EvolveFilter,
        boundary: bc.clone(),
        controls: SolverControls::default(),
        drag: None,
    };
    let mut fom = Fom::new(&mesh, cfg.clone()).unwrap();
    let vl = FieldLayout::velocity(&mesh);
    let ql = FieldLayout::pressure(&mesh);
    let mut set = SnapshotSet::new(&mesh);
    let mut fom_worst = 0.0f64;
    for n in 1..=steps {
        fom.step().unwrap();
        let s = &fom.state;
        let d = s.u.cells.iter().zip(&s.v.cells).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        fom_worst = fom_worst.max(d);
        if n % 10 == 0 {
            set.times.push(s.time);
            set.params.push(0.0);
            set.amplitudes.push(bc.amplitude(s.time));
            set.v.push(&vl.pack_velocity(&s.v, &s.phi_v));
            set.u.push(&vl.pack_velocity(&s.u, &s.phi_u));
            set.q.push(&ql.pack_pressure(&s.q));
            set.qbar.push(&ql.pack_pressure(&s.qbar));
        }
    }

    // Shared velocity and pressure bases for both the evolved and the
    // filtered unknowns.
    let w = vl.weights(&mesh);
    let wq = ql.weights(&mesh);
    let bv = pod(&set.v, &w, RankSelection::Fixed(3)).unwrap();
    let bq = pod(&set.q, &wq, RankSelection::Fixed(3)).unwrap();
    let modes = ModeSet { v: bv.modes.clone(), u: bv.modes.clone(), q: bq.modes.clone(), qbar: bq.modes.clone() };
    let ops = assemble(&mesh, &bc, &modes, None, OperatorConstants { rho: 1.0, mu: 1e-3, alpha: 0.0, dt }).unwrap();
    let rc = RomConfig {
        rho: 1.0,
        mu: 1e-3,
        alpha: 0.0,
        time: TimeSetup::new(0.0, dt * steps as f64, dt, dt).unwrap(),
        model: Model::EvolveFilter,
        ppe_form: PpeBoundaryForm::Consistent,
        amplitude: TimeFactor::Sine { period: 8.0 },
    };
    let b0 = DVector::from_vec(bv.project(set.v.column(set.n_snapshots() - 1), &w));
    let mut st = ReducedState::initial(0.0, b0.clone(), b0, ops.ranks, 0.0);
    let mut rom_worst = 0.0f64;
    for _ in 0..steps {
        rom_step(&ops, &rc, &mut st).unwrap();
        rom_worst = rom_worst.max((&st.beta_bar - &st.beta).amax() / st.beta.amax().max(1.0));
    }
    verdict(
        "3",
        fom_worst <= 1e-8 && rom_worst <= 1e-12,
        format!("max per-step |u - v|_inf {fom_worst:.2e} (tol 1e-8), max |beta_bar - beta| {rom_worst:.2e} (tol 1e-12)"),
    );
}

/// Channel flow started from rest under a smooth inflow pulse that rises and
/// decays; velocity at `t_end`.
fn decaying_run(mesh: &Mesh, dt: f64, t_end: f64) -> Vec<Vec3> {
    let cfg = FomConfig {
        props: FluidProperties::new(1.0, 1e-2).unwrap(),
        filter: FilterParams::new(0.0).unwrap(),
        time: TimeSetup::new(0.0, t_end, dt, dt).unwrap(),
        model: Model::Nse,
        boundary: FlowBoundary::standard(mesh, InflowProfile::Parabolic2d { height: 1.0 }, TimeFactor::RiseDecay { tau: 0.1 }),
        controls: SolverControls { momentum_rtol: 1e-13, pressure_rtol: 1e-13, ..SolverControls::default() },
        drag: None,
    };
    let steps = cfg.time.n_steps();
    let mut fom = Fom::new(mesh, cfg).unwrap();
    for _ in 0..steps {
        fom.step().unwrap();
    }
    fom.state.v.cells.clone()
}

#[test]
fn criterion_04_bdf2_order() {
    let mesh = common::grid2d(24, 12, 2.0, 1.0);
    let dts = [8e-3, 4e-3, 2e-3, 1e-3];
    let runs: Vec<Vec<Vec3>> = dts.iter().map(|&dt| decaying_run(&mesh, dt, 0.4)).collect();
    let vol = mesh.cell_volumes();
    let dist = |a: &[Vec3], b: &[Vec3]| -> f64 {
        a.iter().zip(b).zip(vol).map(|((x, y), w)| w * (x - y).norm_squared()).sum::<f64>().sqrt()
    };
    // L2 errors against the finest step.
    let errors: Vec<f64> = (0..3).map(|k| dist(&runs[k], &runs[3])).collect();
    let orders: Vec<f64> = (0..2).map(|k| (errors[k] / errors[k + 1]).log2()).collect();
    let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict("4", min >= 1.8, format!("observed orders {orders:.3?} (need >= 1.8), errors vs dt = 1e-3: {errors:?}"));
}

#[test]
fn criterion_05_divergence_every_step() {
    let b = bench();
    let cols = csv_columns(&b.dirs().fom.join("steps.csv"));
    let dv = floats(&cols, "div_v");
    let du = floats(&cols, "div_u");
    let worst = dv.iter().chain(&du).cloned().fold(0.0, f64::max);
    verdict("5", dv.len() >= 500 && worst <= 1e-7, format!("{} steps, max volume-normalized divergence {worst:.2e} (tol 1e-7)", dv.len()));
}

#[test]
fn criterion_06a_energy() {
    let b = bench();
    let cols = csv_columns(&b.dirs().pod.join("eigen_v.csv"));
    let cum = floats(&cols, "cumulative")[1];
    verdict("6a", cum >= 0.99, format!("cumulative energy of 2 velocity modes {cum:.6} (need >= 0.99)"));
}

#[test]
fn criterion_06b_velocity_errors() {
    let e = bench().errors();
    let (ev, eu) = (tail_mean(&floats(&e, "Ev")), tail_mean(&floats(&e, "Eu")));
    verdict("6b", ev <= 5e-2 && eu <= 5e-2, format!("time-averaged E_v {ev:.4e}, E_u {eu:.4e} (tol 5e-2)"));
}

#[test]
fn criterion_06c_pressure_error() {
    let e = bench().errors();
    let eq = tail_mean(&floats(&e, "Eq"));
    verdict("6c", eq <= 0.25, format!("time-averaged E_q {eq:.4e} (tol 2.5e-1)"));
}

#[test]
fn criterion_06d_peak_times() {
    let e = bench().errors();
    let t = floats(&e, "t");
    let d = peak_errors(&t, &floats(&e, "cd_fom"), &floats(&e, "cd"));
    let l = peak_errors(&t, &floats(&e, "cl_fom"), &floats(&e, "cl"));
    let same = |a: f64, b: f64| (a - b).abs() < 0.05;
    verdict(
        "6d",
        same(d.t_fom, d.t_rom) && same(l.t_fom, l.t_rom),
        format!("argmax c_d FOM {:.1} / ROM {:.1}; argmax c_l FOM {:.1} / ROM {:.1}", d.t_fom, d.t_rom, l.t_fom, l.t_rom),
    );
}

#[test]
fn criterion_06e_peak_values() {
    let e = bench().errors();
    let t = floats(&e, "t");
    let d = peak_errors(&t, &floats(&e, "cd_fom"), &floats(&e, "cd"));
    let l = peak_errors(&t, &floats(&e, "cl_fom"), &floats(&e, "cl"));
    verdict(
        "6e",
        d.value_error.abs() <= 0.2 && l.value_error.abs() <= 0.2,
        format!(
            "E_cd {:.4} (max {:.4} vs {:.4}), E_cl {:.4} (max {:.4} vs {:.4}), tol 0.2",
            d.value_error, d.max_fom, d.max_rom, l.value_error, l.max_fom, l.max_rom
        ),
    );
}

#[test]
fn criterion_07_speedup() {
    let b = bench();
    let d = b.dirs();
    let fom = json_number(&d.fom.join("timing.json"), "wall_seconds");
    let rom = json_number(&d.online.join("timing.json"), "wall_seconds");
    let s = fom / rom;
    verdict("7", s >= 10.0, format!("FOM {fom:.2} s, ROM {rom:.4} s, speed-up {s:.0}x (need >= 10x)"));
}

#[test]
fn criterion_08_alpha_sweep() {
    let b = bench();
    let e_u_bench = tail_mean(&floats(&b.errors(), "Eu"));
    let mesh = load_mesh(&b.dirs().mesh.join("mesh.txt")).unwrap();
    let h_min = (0..mesh.n_internal_faces()).map(|f| mesh.delta(f).norm()).fold(f64::INFINITY, f64::min);
    let alphas: Vec<String> = (0..6).map(|i| format!("{:?}", 0.0032 + (h_min - 0.0032) * i as f64 / 5.0)).collect();
    let cfg = PipelineConfig::load(None, &[format!("physics.alphas={}", alphas.join(","))]).unwrap();
    let (_, test) = cfg.sweep_points();
    let root = scratch("sweep");
    pipeline::stage_mesh(&cfg, &StageDirs::standard(&root)).unwrap();
    pipeline::stage_sweep(&cfg, &root, 1).unwrap();
    let table = csv_columns(&root.join("sweep/sweep.csv"));
    let k = table["role"].iter().position(|r| r == "test").expect("held-out row");
    let e_u: f64 = table["Eu"][k].parse().unwrap();
    verdict(
        "8",
        e_u <= 2.5 * e_u_bench,
        format!(
            "training alphas [{}] (h_min {h_min:.4}), held-out {test:.5}: E_u {e_u:.4e} vs 2.5 x {e_u_bench:.4e} = {:.4e}",
            alphas.join(", "),
            2.5 * e_u_bench
        ),
    );
}

#[test]
fn criterion_09_three_dimensional_leray() {
    let geom = ChannelGeometry::benchmark_3d();
    let mesh = channel_cylinder_lattice(&geom, [30, 10, 10]).unwrap();
    assert!(mesh.n_cells() <= 3000);
    let h_min = (0..mesh.n_internal_faces()).map(|f| mesh.delta(f).norm()).fold(f64::INFINITY, f64::min);
    let profile = InflowProfile::Parabolic3d { height: 0.41, width: 0.41 };
    let time = TimeFactor::Sine { period: 8.0 };
    let dt = 1e-2;
    let cfg = FomConfig {
        props: FluidProperties::new(1.0, 1e-3).unwrap(),
        filter: FilterParams::new(h_min).unwrap(),
        time: TimeSetup::new(0.0, 100.0 * dt, dt, dt).unwrap(),
        model: Model::Leray,
        boundary: FlowBoundary::standard(&mesh, profile, time),
        controls: SolverControls::default(),
        drag: None,
    };
    let vol = mesh.cell_volumes().to_vec();
    let mut fom = Fom::new(&mesh, cfg).unwrap();
    let (mut div, mut excess, mut kmax, mut bound_ok) = (0.0f64, f64::NEG_INFINITY, 0.0f64, true);
    let mut amp_max = 0.0f64;
    for _ in 0..100 {
        let r = fom.step().unwrap();
        div = div.max(r.divergence_v).max(r.divergence_u);
        let kv = kinetic_energy(&fom.state.v.cells, 1.0, &vol);
        let ku = kinetic_energy(&fom.state.u.cells, 1.0, &vol);
        excess = excess.max((ku - kv) / kv);
        kmax = kmax.max(kv).max(ku);
        // Energy of the whole domain moving at the largest inflow speed so far.
        amp_max = amp_max.max(time.eval(r.time).abs());
        let cap = 0.5 * mesh.total_volume() * (2.25 * amp_max).powi(2);
        bound_ok &= kv.is_finite() && ku.is_finite() && kv <= cap && ku <= cap;
    }
    let eps = 1e-10;
    verdict(
        "9",
        div <= 1e-7 && bound_ok && excess <= eps,
        format!(
            "{} cells, 100 steps: max divergence {div:.2e} (tol 1e-7), energies bounded {bound_ok} (max K {kmax:.3e}), \
             max (K_u - K_v)/K_v {excess:.3e} (tol {eps:e})",
            mesh.n_cells()
        ),
    );
}

/// Files below `dir` with their bytes, except wall-clock records.
fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.json" {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_10_round_trip_and_determinism() {
    let b = bench();
    let mesh = load_mesh(&b.dirs().mesh.join("mesh.txt")).unwrap();
    let fresh = generate_channel_cylinder_mesh(&ChannelGeometry::benchmark_2d(), 0.02).unwrap();
    let tmp = scratch("mesh_round_trip");
    save_mesh(&mesh, &tmp.join("m.txt")).unwrap();
    let again = load_mesh(&tmp.join("m.txt")).unwrap();
    let mesh_ok = [&fresh, &again].iter().all(|m| {
        m.points() == mesh.points()
            && m.faces() == mesh.faces()
            && m.owner() == mesh.owner()
            && m.neighbour() == mesh.neighbour()
            && format!("{:?}", m.patches()) == format!("{:?}", mesh.patches())
            && m.cell_volumes() == mesh.cell_volumes()
    });

    let root_b = scratch("benchmark_b");
    pipeline::run_all(&PipelineConfig::default(), &root_b).unwrap();
    let (a, c) = (artifacts(&b.root), artifacts(&root_b));
    let differing: Vec<String> = a
        .keys()
        .chain(c.keys())
        .filter(|k| a.get(*k) != c.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    verdict(
        "10",
        mesh_ok && differing.is_empty() && !a.is_empty(),
        format!("mesh save/load identical {mesh_ok}; {} artifacts compared, differing {differing:?}", a.len()),
    );
}
