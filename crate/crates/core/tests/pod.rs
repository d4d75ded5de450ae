mod common;

use leray_rom::pod::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn layout(n: usize) -> FieldLayout {
    FieldLayout { kind: FieldKind::Pressure, n_cells: n, n_boundary: 0, n_faces: 0 }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `Σ_k ‖s_k - Z Zᵀ s_k‖²` with unit weights.
fn projection_error(s: &DMatrix<f64>, modes: &DMatrix<f64>) -> f64 {
    let p = modes * (modes.transpose() * s);
    (s - p).norm_squared()
}

#[test]
fn projection_error_matches_truncated_svd() {
    for seed in 0..10 {
        let s = random_matrix(30, 10, seed);
        let sv = s.clone().svd(false, false).singular_values;
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let snaps = SnapshotMatrix { layout: layout(30), data: s.clone() };
        for r in 1..=5 {
            let b = pod(&snaps, &[1.0; 30], RankSelection::Fixed(r)).unwrap();
            let svd_err: f64 = sorted[r..].iter().map(|x| x * x).sum();
            let pod_err = projection_error(&s, &b.modes);
            assert!((pod_err - svd_err).abs() <= 1e-10 * svd_err.max(1.0), "seed {seed} r {r}: {pod_err} vs {svd_err}");
        }
    }
}

#[test]
fn eigenvalues_equal_squared_singular_values() {
    let s = random_matrix(20, 6, 42);
    let c = correlation_matrix(&s, &[1.0; 20]);
    let e = symmetric_eigen(&c).unwrap();
    let mut sv: Vec<f64> = s.svd(false, false).singular_values.iter().map(|x| x * x).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in e.values.iter().zip(&sv) {
        assert!((a - b).abs() < 1e-12 * sv[0]);
    }
}

#[test]
fn requesting_more_modes_than_the_rank_fails() {
    let mut s = random_matrix(15, 4, 3);
    let c0 = s.column(0).clone_owned();
    s.set_column(3, &(c0 * 2.0));
    let snaps = SnapshotMatrix { layout: layout(15), data: s };
    assert!(pod(&snaps, &[1.0; 15], RankSelection::Fixed(3)).is_ok());
    assert!(pod(&snaps, &[1.0; 15], RankSelection::Fixed(4)).is_err());
}

#[test]
fn energy_selection_picks_the_smallest_sufficient_rank() {
    // Columns with energies 100, 1, 0.01 along orthogonal directions.
    let mut s = DMatrix::zeros(5, 3);
    s[(0, 0)] = 10.0;
    s[(1, 1)] = 1.0;
    s[(2, 2)] = 0.1;
    let snaps = SnapshotMatrix { layout: layout(5), data: s };
    let w = [1.0; 5];
    assert_eq!(pod(&snaps, &w, RankSelection::Energy(0.98)).unwrap().rank(), 1);
    assert_eq!(pod(&snaps, &w, RankSelection::Energy(0.995)).unwrap().rank(), 2);
    assert_eq!(pod(&snaps, &w, RankSelection::Energy(1.0)).unwrap().rank(), 3);
    assert!(pod(&snaps, &w, RankSelection::Energy(1.5)).is_err());
}

#[test]
fn snapshot_sets_concatenate_column_wise() {
    let mesh = common::grid2d(3, 2, 1.0, 1.0);
    let mut a = SnapshotSet::new(&mesh);
    let mut b = SnapshotSet::new(&mesh);
    let vl = FieldLayout::velocity(&mesh);
    let ql = FieldLayout::pressure(&mesh);
    let push = |set: &mut SnapshotSet, t: f64| {
        set.times.push(t);
        set.params.push(t * 2.0);
        set.amplitudes.push(1.0);
        for m in [&mut set.v, &mut set.u] {
            m.push(&vec![t; vl.len()]);
        }
        for m in [&mut set.q, &mut set.qbar] {
            m.push(&vec![t; ql.len()]);
        }
    };
    push(&mut a, 0.0);
    push(&mut a, 0.1);
    push(&mut b, 0.0);
    let c = a.concat(&b).unwrap();
    assert_eq!(c.n_snapshots(), 3);
    assert_eq!(c.times, vec![0.0, 0.1, 0.0]);
    assert_eq!(c.v.column(1)[0], 0.1);
    c.check().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigen_residual_and_orthogonality(n in 1usize..12, seed in 0u64..10_000) {
        let a = random_matrix(n, n, seed);
        let c = &a + a.transpose();
        let e = symmetric_eigen(&c).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let res = (&c * &e.vectors - &e.vectors * lam).norm();
        prop_assert!(res <= 1e-10 * c.norm().max(1e-300));
        let orth = (e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n)).amax();
        prop_assert!(orth < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn modes_are_weighted_orthonormal(rows in 8usize..25, cols in 2usize..7, seed in 0u64..10_000) {
        let s = random_matrix(rows, cols, seed);
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0xabc);
        let w: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.1..2.0)).collect();
        let snaps = SnapshotMatrix { layout: layout(rows), data: s.clone() };
        let b = pod(&snaps, &w, RankSelection::Fixed(cols)).unwrap();
        let g = gram(&b.modes, &w);
        prop_assert!((g - DMatrix::identity(cols, cols)).amax() < 1e-12);
        // Full rank reproduces every snapshot.
        for k in 0..cols {
            let col: Vec<f64> = s.column(k).iter().copied().collect();
            let back = b.reconstruct(&b.project(&col, &w));
            for (x, y) in col.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
        // Cumulative energy is non-decreasing and ends at one.
        prop_assert!(b.cumulative.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((b.cumulative.last().unwrap() - 1.0).abs() < 1e-12);
    }
}
