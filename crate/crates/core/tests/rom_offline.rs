mod common;

use common::oracle::{bc, brute_force_equivalence, oracle_mesh, random_modes};
use leray_rom::pod::FieldLayout;
use leray_rom::rom_offline::*;
use proptest::prelude::*;

#[test]
fn oracle_mesh_is_small_and_has_an_obstacle() {
    let mesh = oracle_mesh();
    assert!(mesh.n_cells() <= 50);
    assert!(mesh.patch_by_name("cylinder").is_some());
}

#[test]
fn operators_match_loop_oracle_at_rank_three() {
    brute_force_equivalence(3, 7);
}

#[test]
fn operators_do_not_depend_on_physical_constants() {
    let mesh = oracle_mesh();
    let b = bc(&mesh);
    let modes = random_modes(&mesh, [2, 3, 2, 1], 5);
    let a = assemble(&mesh, &b, &modes, None, OperatorConstants { rho: 1.0, mu: 1e-3, alpha: 0.0, dt: 1e-3 }).unwrap();
    let c = assemble(&mesh, &b, &modes, None, OperatorConstants { rho: 7.5, mu: 2.0, alpha: 0.3, dt: 0.1 }).unwrap();
    assert_eq!(encode_operators(&a).unwrap()[..8], encode_operators(&c).unwrap()[..8]);
    assert_eq!((a.m.clone(), a.g.clone(), a.j.clone(), a.n.clone()), (c.m.clone(), c.g.clone(), c.j.clone(), c.n.clone()));
    assert_eq!((a.a_bar.clone(), a.d_bar.clone()), (c.a_bar.clone(), c.d_bar.clone()));
}

#[test]
fn constant_pressure_mode_has_no_gradient() {
    let mesh = oracle_mesh();
    let b = bc(&mesh);
    let mut modes = random_modes(&mesh, [2, 2, 2, 2], 11);
    modes.q.column_mut(0).fill(1.0);
    let ops = assemble(&mesh, &b, &modes, None, OperatorConstants { rho: 1.0, mu: 1.0, alpha: 0.0, dt: 1.0 }).unwrap();
    for j in 0..2 {
        assert!(ops.d[(0, j)].abs() < 1e-12 && ops.d[(j, 0)].abs() < 1e-12);
        assert!(ops.b[(j, 0)].abs() < 1e-12);
    }
}

#[test]
fn archive_round_trip_and_corruption() {
    let mesh = oracle_mesh();
    let b = bc(&mesh);
    let modes = random_modes(&mesh, [3, 2, 2, 1], 3);
    let chi = vec![0.25; FieldLayout::velocity(&mesh).len()];
    let ops = assemble(&mesh, &b, &modes, Some(&chi), OperatorConstants { rho: 1.0, mu: 1e-3, alpha: 0.01, dt: 2e-3 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ops.lrop");
    save_operators(&ops, &path).unwrap();
    let back = load_operators(&path).unwrap();
    assert_eq!(back, ops);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    assert!(decode_operators(&bytes, &path).is_err());
    assert!(decode_operators(b"not an archive at all", &path).is_err());
    write_operators_csv(&ops, &dir.path().join("csv")).unwrap();
    let g = std::fs::read_to_string(dir.path().join("csv/G.csv")).unwrap();
    assert_eq!(g.lines().count(), 1 + 3 * 3 * 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_matrices_are_spd_and_d_is_psd(seed in 0u64..10_000, rv in 1usize..5, rq in 1usize..4) {
        let mesh = oracle_mesh();
        let modes = random_modes(&mesh, [rv, rv, rq, rq], seed);
        let ops = assemble(&mesh, &bc(&mesh), &modes, None, OperatorConstants { rho: 1.0, mu: 1.0, alpha: 0.0, dt: 1.0 }).unwrap();
        for (name, m) in [("M", &ops.m), ("Mbar", &ops.m_bar), ("D", &ops.d), ("Dbar", &ops.d_bar)] {
            prop_assert!((m - m.transpose()).amax() <= 1e-13 * m.amax(), "{} not symmetric", name);
            let ev = m.clone().symmetric_eigenvalues();
            let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-12 * m.amax(), "{} has eigenvalue {}", name, min);
            if name.starts_with('M') {
                prop_assert!(min > 0.0);
            }
        }
    }

    #[test]
    fn shared_bases_give_matching_bar_operators(seed in 0u64..10_000, r in 1usize..4) {
        let mesh = oracle_mesh();
        let mut modes = random_modes(&mesh, [r, r, r, r], seed);
        modes.u = modes.v.clone();
        modes.qbar = modes.q.clone();
        let ops = assemble(&mesh, &bc(&mesh), &modes, None, OperatorConstants { rho: 1.0, mu: 1.0, alpha: 0.0, dt: 1.0 }).unwrap();
        prop_assert_eq!(&ops.m, &ops.m_bar);
        prop_assert_eq!(&ops.m, &ops.m_tilde);
        prop_assert_eq!(&ops.a, &ops.a_bar);
        prop_assert_eq!(&ops.d, &ops.d_bar);
        prop_assert_eq!(&ops.n, &ops.n_bar);
        prop_assert_eq!(&ops.f_v, &ops.f_u);
    }
}
