mod common;

use leray_rom::fom::{Bdf, Model, TimeFactor, TimeSetup};
use leray_rom::pod::FieldLayout;
use leray_rom::rom_offline::*;
use leray_rom::rom_online::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn ops_for(seed: u64, r: [usize; 4], shared: bool, lifting: bool) -> ReducedOperators {
    let mesh = common::small_cylinder(12, 5);
    let bc = common::benchmark_bc(&mesh);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let vl = FieldLayout::velocity(&mesh).len();
    let pl = FieldLayout::pressure(&mesh).len();
    let mut m = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0) * 0.1);
    let mut modes = ModeSet { v: m(vl, r[0]), u: m(vl, r[1]), q: m(pl, r[2]), qbar: m(pl, r[3]) };
    let chi: Vec<f64> = m(vl, 1).iter().copied().collect();
    if shared {
        modes.u = modes.v.clone();
        modes.qbar = modes.q.clone();
    }
    let k = OperatorConstants { rho: 1.0, mu: 1e-2, alpha: 0.0, dt: 1e-3 };
    assemble(&mesh, &bc, &modes, lifting.then_some(&chi[..]), k).unwrap()
}

fn cfg(model: Model, alpha: f64, steps: usize, amplitude: TimeFactor) -> RomConfig {
    let dt = 1e-3;
    RomConfig {
        rho: 1.0,
        mu: 1e-2,
        alpha,
        time: TimeSetup::new(0.0, dt * steps as f64, dt, dt).unwrap(),
        model,
        ppe_form: PpeBoundaryForm::Consistent,
        amplitude,
    }
}

fn small(seed: u64) -> ReducedOperators {
    // Scalar operators written out by hand.
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut x = || rng.gen_range(0.5..2.0);
    let s = |v: f64| DMatrix::from_element(1, 1, v);
    let mut g = Tensor3::zeros([1, 1, 1]);
    g.set(0, 0, 0, x());
    let mut j = Tensor3::zeros([1, 1, 1]);
    j.set(0, 0, 0, x());
    ReducedOperators {
        ranks: Ranks { v: 1, u: 1, q: 1, qbar: 1 },
        constants: OperatorConstants { rho: 1.0, mu: 1.0, alpha: 0.0, dt: 1.0 },
        m: s(x()),
        m_tilde: s(x()),
        a: s(-x()),
        b: s(x()),
        p: s(x()),
        g,
        d: s(x()),
        n: s(x()),
        f_v: s(x()),
        f_u: s(x()),
        j,
        m_bar: s(x()),
        a_bar: s(-x()),
        b_bar: s(x()),
        p_bar: s(x()),
        d_bar: s(x()),
        n_bar: s(x()),
        lifting: None,
    }
}

fn cramer(k: [[f64; 2]; 2], r: [f64; 2]) -> (f64, f64) {
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    ((r[0] * k[1][1] - k[0][1] * r[1]) / det, (k[0][0] * r[1] - r[0] * k[1][0]) / det)
}

#[test]
fn scalar_evolve_step_by_hand() {
    let o = small(1);
    let e = |m: &DMatrix<f64>| m[(0, 0)];
    let (rho, mu, dt) = (1.3, 0.02, 0.01);
    let (h0, h1, conv) = (0.7, 0.4, 1.1);
    for (bdf, form, s) in [
        (Bdf::BDF1, PpeBoundaryForm::Consistent, 1.0),
        (Bdf::BDF2, PpeBoundaryForm::Consistent, 1.0),
        (Bdf::BDF2, PpeBoundaryForm::Literal, -1.0),
    ] {
        let hist = bdf.c1 * h0 - bdf.c2 * h1;
        let k = [
            [rho * bdf.c0 / dt * e(&o.m) + rho * o.g.get(0, 0, 0) * conv - 2.0 * mu * e(&o.a), e(&o.b)],
            [rho * o.j.get(0, 0, 0) * conv - 2.0 * mu * e(&o.n) + s * rho * bdf.c0 / dt * e(&o.f_v), e(&o.d)],
        ];
        let r = [rho / dt * e(&o.m_tilde) * hist, s * rho / dt * e(&o.f_u) * hist];
        let want = cramer(k, r);
        let (hv0, hv1, cv) = (DVector::from_element(1, h0), DVector::from_element(1, h1), DVector::from_element(1, conv));
        let inp = EvolveStepInput {
            rho,
            mu,
            dt,
            bdf,
            model: Model::EvolveFilter,
            ppe_form: form,
            history: [&hv0, &hv1],
            convecting: &cv,
            amplitudes: [0.0; 3],
        };
        let (b, g) = reduced_evolve_step(&o, &inp).unwrap();
        common::assert_close(b[0], want.0, 1e-12 * want.0.abs().max(1.0), "beta");
        common::assert_close(g[0], want.1, 1e-12 * want.1.abs().max(1.0), "gamma");
    }
}

#[test]
fn scalar_filter_step_by_hand() {
    let o = small(2);
    let e = |m: &DMatrix<f64>| m[(0, 0)];
    let (rho, mu_bar, dt, beta) = (1.0, 0.3, 0.05, 0.9);
    for (form, c) in [(PpeBoundaryForm::Consistent, mu_bar), (PpeBoundaryForm::Literal, 2.0 * mu_bar)] {
        let k = [[rho / dt * e(&o.m_bar) - mu_bar * e(&o.a_bar), e(&o.b_bar)], [-c * e(&o.n_bar), e(&o.d_bar)]];
        let want = cramer(k, [rho / dt * e(&o.m_tilde) * beta, 0.0]);
        let (b, g) = reduced_filter_step(&o, &DVector::from_element(1, beta), 0.0, rho, mu_bar, dt, form).unwrap();
        common::assert_close(b[0], want.0, 1e-12, "beta bar");
        common::assert_close(g[0], want.1, 1e-12, "gamma bar");
    }
}

#[test]
fn divergence_indicator_by_hand() {
    let o = small(3);
    let d = divergence_indicator(&o, &DVector::from_element(1, -2.0), 0.0);
    common::assert_close(d, 2.0 * o.p[(0, 0)].abs(), 1e-15, "indicator");
}

#[test]
fn zero_state_and_zero_inflow_stay_at_rest() {
    let o = ops_for(4, [3, 3, 2, 2], false, true);
    let c = cfg(Model::EvolveFilter, 0.01, 20, TimeFactor::Constant(0.0));
    let traj = run_rom(&o, &c, ReducedState::zeros(0.0, o.ranks)).unwrap();
    assert_eq!(traj.t.len(), 21);
    for k in 0..traj.t.len() {
        for v in [&traj.beta[k], &traj.gamma[k], &traj.beta_bar[k], &traj.gamma_bar[k]] {
            assert!(v.iter().all(|x| *x == 0.0));
        }
    }
}

#[test]
fn zero_radius_filter_is_identity_with_shared_bases() {
    let o = ops_for(5, [3, 3, 3, 3], true, true);
    let amp = TimeFactor::RiseDecay { tau: 0.01 };
    let mut s = ReducedState::initial(0.0, DVector::from_vec(vec![0.1, -0.2, 0.05]), DVector::from_vec(vec![0.1, -0.2, 0.05]), o.ranks, 0.0);
    let c = cfg(Model::EvolveFilter, 0.0, 30, amp);
    let mut n = ReducedState::initial(0.0, s.beta.clone(), s.beta_bar.clone(), o.ranks, 0.0);
    let cn = cfg(Model::Nse, 0.0, 30, amp);
    for _ in 0..30 {
        rom_step(&o, &c, &mut s).unwrap();
        rom_step(&o, &cn, &mut n).unwrap();
        let scale = s.beta.amax().max(1e-300);
        assert!((&s.beta_bar - &s.beta).amax() <= 1e-12 * scale.max(1.0), "filtered differs from evolved");
        assert!((&s.beta - &n.beta).amax() <= 1e-10 * scale.max(1.0), "Evolve-Filter with zero radius departs from NSE");
    }
}

#[test]
fn trajectory_table_round_trip() {
    let o = ops_for(6, [2, 3, 2, 1], false, true);
    let amp = TimeFactor::Sine { period: 0.05 };
    let init = ReducedState::initial(0.0, DVector::from_vec(vec![0.01, 0.02]), DVector::from_vec(vec![0.0, 0.01, -0.01]), o.ranks, 0.0);
    let traj = run_rom(&o, &cfg(Model::Leray, 0.005, 10, amp), init).unwrap();
    let back = RomTrajectory::from_csv(&traj.to_csv(), o.ranks, &amp).unwrap();
    assert_eq!(back.t, traj.t);
    assert_eq!((&back.beta, &back.gamma, &back.beta_bar, &back.gamma_bar), (&traj.beta, &traj.gamma, &traj.beta_bar, &traj.gamma_bar));
    assert_eq!(back.amplitude, traj.amplitude);
    assert!(RomTrajectory::from_csv("t,beta_1\n0.0,1.0\n", o.ranks, &amp).is_err());
}

#[test]
fn mismatched_state_is_rejected() {
    let o = ops_for(7, [2, 2, 1, 1], false, false);
    let bad = ReducedState::zeros(0.0, Ranks { v: 3, u: 2, q: 1, qbar: 1 });
    assert!(run_rom(&o, &cfg(Model::EvolveFilter, 0.0, 2, TimeFactor::Constant(1.0)), bad).is_err());
    let nse = cfg(Model::Nse, 0.0, 2, TimeFactor::Constant(1.0));
    let o2 = ops_for(7, [2, 3, 1, 1], false, false);
    assert!(run_rom(&o2, &nse, ReducedState::zeros(0.0, o2.ranks)).is_err());
}

proptest! {
    #[test]
    fn tensor_contraction_matches_triple_loop(
        dims in (1usize..5, 1usize..5, 1usize..5),
        seed in 0u64..1000,
    ) {
        let (a, b, c) = dims;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = Tensor3::zeros([a, b, c]);
        for i in 0..a { for j in 0..b { for k in 0..c { t.set(i, j, k, rng.gen_range(-1.0..1.0)); } } }
        let x: Vec<f64> = (0..b).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = t.contract(&x, &y);
        let m = t.contract_last(&y);
        for i in 0..a {
            let mut want = 0.0;
            for j in 0..b {
                let mut row = 0.0;
                for k in 0..c {
                    want += t.get(i, j, k) * x[j] * y[k];
                    row += t.get(i, j, k) * y[k];
                }
                prop_assert!((m[(i, j)] - row).abs() <= 1e-14);
            }
            prop_assert!((got[i] - want).abs() <= 1e-13);
        }
    }
}
