mod common;

use leray_rom::fom::*;
use leray_rom::fvops::divergence;
use leray_rom::lifting::*;
use leray_rom::mesh::{PatchKind, Vec3};
use leray_rom::pod::FieldLayout;
use proptest::prelude::*;

#[test]
fn parabolic_lifting_carries_the_inflow_and_is_solenoidal() {
    let mesh = common::small_cylinder(44, 8);
    let bc = common::benchmark_bc(&mesh);
    let lift = build_lifting(&mesh, &bc, &LiftingOptions::default()).unwrap();
    let div = divergence(&mesh, &lift.flux);
    let scale = lift.flux.iter().fold(0.0f64, |m, x| m.max(x.abs())) / mesh.cell_volumes().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(div.iter().all(|d| d.abs() <= 1e-9 * scale), "max div {:e}", div.iter().fold(0.0f64, |m, d| m.max(d.abs())));
    let n_int = mesh.n_internal_faces();
    for p in mesh.patches() {
        for f in p.faces() {
            let b = lift.field.boundary[f - n_int];
            match p.kind {
                PatchKind::Inlet => {
                    let want = bc.profile.eval(mesh.face_centre(f));
                    assert!((b - want).amax() < 1e-14);
                }
                PatchKind::Wall | PatchKind::Cylinder => assert_eq!(b, Vec3::zeros()),
                _ => {}
            }
        }
    }
}

#[test]
fn plug_inflow_balances_mass() {
    let mesh = common::grid2d(20, 6, 2.0, 0.5);
    let bc = FlowBoundary::standard(&mesh, InflowProfile::Plug(Vec3::new(2.0, 0.0, 0.0)), TimeFactor::Constant(1.0));
    let lift = build_lifting(&mesh, &bc, &LiftingOptions { alpha: 0.05, ..LiftingOptions::default() }).unwrap();
    let sum = |k: PatchKind| -> f64 { mesh.patches_of_kind(k).flat_map(|(_, p)| p.faces()).map(|f| lift.flux[f]).sum() };
    // Unit depth: inflow 2.0 * 0.5 through the inlet.
    common::assert_close(sum(PatchKind::Inlet), -1.0, 1e-12, "inlet flux");
    common::assert_close(sum(PatchKind::Outlet), 1.0, 1e-8, "outlet flux");
    common::assert_close(sum(PatchKind::Wall), 0.0, 1e-14, "wall flux");
}

#[test]
fn lifting_needs_an_inflow_patch() {
    let mesh = common::grid2d(6, 3, 1.0, 1.0);
    let bc = FlowBoundary::standard(&mesh, InflowProfile::Plug(Vec3::new(1.0, 0.0, 0.0)), TimeFactor::Constant(1.0))
        .with_patch(&mesh, "inlet", PatchBc { velocity: VelocityBc::NoSlip, pressure: PressureBc::ZeroGradient })
        .unwrap();
    assert!(build_lifting(&mesh, &bc, &LiftingOptions::default()).is_err());
}

#[test]
fn homogenized_snapshots_vanish_on_dirichlet_faces() {
    let mesh = common::small_cylinder(22, 6);
    let bc = FlowBoundary::standard(&mesh, InflowProfile::Parabolic2d { height: 0.41 }, TimeFactor::Sine { period: 0.1 });
    let cfg = FomConfig {
        props: FluidProperties::new(1.0, 1e-2).unwrap(),
        filter: FilterParams::new(0.02).unwrap(),
        time: TimeSetup::new(0.0, 0.05, 5e-3, 1e-2).unwrap(),
        model: Model::EvolveFilter,
        boundary: bc.clone(),
        controls: SolverControls::default(),
        drag: None,
    };
    let set = run_fom(&mesh, &cfg).unwrap().snapshots;
    let chi = build_lifting(&mesh, &bc, &LiftingOptions::default()).unwrap().column(&mesh);
    let h = homogenize_set(&set, &chi).unwrap();
    assert_eq!(h.q, set.q);
    assert_eq!(h.qbar, set.qbar);
    for j in 0..set.n_snapshots() {
        assert!(dirichlet_trace(&mesh, &bc, set.v.column(j)) > 0.0 || set.amplitudes[j] == 0.0);
        assert!(dirichlet_trace(&mesh, &bc, h.v.column(j)) < 1e-14);
        assert!(dirichlet_trace(&mesh, &bc, h.u.column(j)) < 1e-14);
    }
    assert!(homogenize_set(&set, &chi[1..]).is_err());
    assert_eq!(chi.len(), FieldLayout::velocity(&mesh).len());
}

proptest! {
    #[test]
    fn reapply_inverts_homogenize(
        col in prop::collection::vec(-10.0f64..10.0, 1..40),
        a in -3.0f64..3.0,
        seed in 0.5f64..2.0,
    ) {
        let chi: Vec<f64> = (0..col.len()).map(|i| (i as f64 * seed).sin()).collect();
        let back = reapply_lifting(&homogenize(&col, &chi, a), &chi, a);
        for (x, y) in col.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }
}
