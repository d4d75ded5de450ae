//! Training and evaluation of a reduced model from full-order snapshots,
//! independent of any file layout.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fom::FlowBoundary;
use crate::lifting::{homogenize, homogenize_set, reapply_lifting};
use crate::mesh::{Mesh, Vec3};
use crate::metrics::{drag_lift, peak_errors, relative_l2_error, DragLiftParams, PeakComparison};
use crate::pod::{pod, FieldLayout, PodBasis, RankSelection, SnapshotSet};
use crate::rom_offline::{assemble, ModeSet, OperatorConstants, ReducedOperators};
use crate::rom_online::{ReducedState, RomTrajectory};

/// Rank selection per field `v, u, q, q̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPlan {
    pub v: RankSelection,
    pub u: RankSelection,
    pub q: RankSelection,
    pub qbar: RankSelection,
}

impl RankPlan {
    pub fn fixed(v: usize, u: usize, q: usize, qbar: usize) -> Self {
        use RankSelection::Fixed;
        RankPlan { v: Fixed(v), u: Fixed(u), q: Fixed(q), qbar: Fixed(qbar) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedRom {
    /// Lifting column in the velocity layout, when snapshots were homogenized.
    pub lifting: Option<Vec<f64>>,
    pub v: PodBasis,
    pub u: PodBasis,
    pub q: PodBasis,
    pub qbar: PodBasis,
    pub ops: ReducedOperators,
}

/// POD of the (homogenized) snapshots, in the order `v, u, q, q̄`.
pub fn fit_bases(mesh: &Mesh, set: &SnapshotSet, ranks: &RankPlan, lifting: Option<&[f64]>) -> Result<[PodBasis; 4]> {
    set.check()?;
    let hom = match lifting {
        Some(l) => homogenize_set(set, l)?,
        None => set.clone(),
    };
    let wv = FieldLayout::velocity(mesh).weights(mesh);
    let wq = FieldLayout::pressure(mesh).weights(mesh);
    Ok([
        pod(&hom.v, &wv, ranks.v)?,
        pod(&hom.u, &wv, ranks.u)?,
        pod(&hom.q, &wq, ranks.q)?,
        pod(&hom.qbar, &wq, ranks.qbar)?,
    ])
}

/// POD followed by projection of the operators.
pub fn train(
    mesh: &Mesh,
    bc: &FlowBoundary,
    set: &SnapshotSet,
    ranks: &RankPlan,
    lifting: Option<Vec<f64>>,
    constants: OperatorConstants,
) -> Result<TrainedRom> {
    let bases = fit_bases(mesh, set, ranks, lifting.as_deref())?;
    TrainedRom::from_bases(mesh, bc, lifting, bases, constants)
}

impl TrainedRom {
    pub fn from_bases(
        mesh: &Mesh,
        bc: &FlowBoundary,
        lifting: Option<Vec<f64>>,
        bases: [PodBasis; 4],
        constants: OperatorConstants,
    ) -> Result<Self> {
        let [v, u, q, qbar] = bases;
        let ops = assemble(mesh, bc, &ModeSet::from_bases(&v, &u, &q, &qbar), lifting.as_deref(), constants)?;
        Ok(TrainedRom { lifting, v, u, q, qbar, ops })
    }

    fn homogenized(&self, col: &[f64], amplitude: f64) -> Vec<f64> {
        match &self.lifting {
            Some(l) => homogenize(col, l, amplitude),
            None => col.to_vec(),
        }
    }

    fn lifted(&self, col: Vec<f64>, amplitude: f64) -> Vec<f64> {
        match &self.lifting {
            Some(l) => reapply_lifting(&col, l, amplitude),
            None => col,
        }
    }

    /// Galerkin projection of the full-order fields in column `k` of `set`.
    pub fn initial_state(&self, mesh: &Mesh, set: &SnapshotSet, k: usize) -> ReducedState {
        let wv = FieldLayout::velocity(mesh).weights(mesh);
        let wq = FieldLayout::pressure(mesh).weights(mesh);
        let a = set.amplitudes[k];
        let beta = self.v.project(&self.homogenized(set.v.column(k), a), &wv);
        let beta_bar = self.u.project(&self.homogenized(set.u.column(k), a), &wv);
        let mut s = ReducedState::initial(
            set.times[k],
            DVector::from_vec(beta),
            DVector::from_vec(beta_bar),
            self.ops.ranks,
            a,
        );
        s.gamma = DVector::from_vec(self.q.project(set.q.column(k), &wq));
        s.gamma_bar = DVector::from_vec(self.qbar.project(set.qbar.column(k), &wq));
        s
    }

    /// Full columns `(v, u, q, q̄)` of sample `k` of a trajectory.
    pub fn reconstruct(&self, traj: &RomTrajectory, k: usize) -> [Vec<f64>; 4] {
        let a = traj.amplitude[k];
        [
            self.lifted(self.v.reconstruct(traj.beta[k].as_slice()), a),
            self.lifted(self.u.reconstruct(traj.beta_bar[k].as_slice()), a),
            self.q.reconstruct(traj.gamma[k].as_slice()),
            self.qbar.reconstruct(traj.gamma_bar[k].as_slice()),
        ]
    }
}

/// Errors of a reduced trajectory against reference snapshots sampled at
/// the same instants.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub t: Vec<f64>,
    pub e_v: Vec<f64>,
    pub e_u: Vec<f64>,
    pub e_q: Vec<f64>,
    pub e_qbar: Vec<f64>,
    pub cd: Vec<f64>,
    pub cl: Vec<f64>,
    pub cd_ref: Vec<f64>,
    pub cl_ref: Vec<f64>,
    pub kv: Vec<f64>,
    pub ku: Vec<f64>,
    pub kv_ref: Vec<f64>,
    pub ku_ref: Vec<f64>,
}

impl Evaluation {
    /// Time averages of `E_v, E_u, E_q, E_q̄` over the samples after the
    /// initial one (the initial condition is a projection, not a prediction).
    pub fn mean_errors(&self) -> [f64; 4] {
        let mean = |e: &[f64]| {
            let tail = if e.len() > 1 { &e[1..] } else { e };
            let finite: Vec<f64> = tail.iter().copied().filter(|x| x.is_finite()).collect();
            if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 }
        };
        [mean(&self.e_v), mean(&self.e_u), mean(&self.e_q), mean(&self.e_qbar)]
    }

    pub fn drag_peaks(&self) -> PeakComparison {
        peak_errors(&self.t, &self.cd_ref, &self.cd)
    }

    pub fn lift_peaks(&self) -> PeakComparison {
        peak_errors(&self.t, &self.cl_ref, &self.cl)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,Ev,Eu,Eq,Eqbar,cd,cl,cd_fom,cl_fom,Kv,Ku,Kv_fom,Ku_fom\n");
        for i in 0..self.t.len() {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                self.t[i],
                self.e_v[i],
                self.e_u[i],
                self.e_q[i],
                self.e_qbar[i],
                self.cd[i],
                self.cl[i],
                self.cd_ref[i],
                self.cl_ref[i],
                self.kv[i],
                self.ku[i],
                self.kv_ref[i],
                self.ku_ref[i]
            ));
        }
        s
    }
}

pub fn evaluate(
    mesh: &Mesh,
    bc: &FlowBoundary,
    rom: &TrainedRom,
    traj: &RomTrajectory,
    reference: &SnapshotSet,
    rho: f64,
    drag: Option<&DragLiftParams>,
) -> Result<Evaluation> {
    let n = traj.t.len();
    if reference.n_snapshots() < n {
        return Err(Error::Dimension(format!(
            "{} reference snapshots for {n} reduced samples",
            reference.n_snapshots()
        )));
    }
    for k in 0..n {
        if (reference.times[k] - traj.t[k]).abs() > 1e-9 * traj.t[k].abs().max(1.0) {
            return Err(Error::Dimension(format!(
                "sample {k}: reference at t = {}, reduced at t = {}",
                reference.times[k], traj.t[k]
            )));
        }
    }
    let vl = FieldLayout::velocity(mesh);
    let ql = FieldLayout::pressure(mesh);
    let vol = mesh.cell_volumes();
    let cells = |col: &[f64]| -> Vec<Vec3> { vl.velocity_cells(col) };
    let mut ev = Evaluation {
        t: traj.t.clone(),
        e_v: Vec::new(),
        e_u: Vec::new(),
        e_q: Vec::new(),
        e_qbar: Vec::new(),
        cd: Vec::new(),
        cl: Vec::new(),
        cd_ref: Vec::new(),
        cl_ref: Vec::new(),
        kv: Vec::new(),
        ku: Vec::new(),
        kv_ref: Vec::new(),
        ku_ref: Vec::new(),
    };
    for k in 0..n {
        let [v, u, q, qb] = rom.reconstruct(traj, k);
        let (vr, ur) = (cells(&v), cells(&u));
        ev.e_v.push(relative_l2_error(&cells(reference.v.column(k)), &vr, vol));
        ev.e_u.push(relative_l2_error(&cells(reference.u.column(k)), &ur, vol));
        ev.e_q.push(relative_l2_error(&reference.q.column(k)[..ql.n_cells], &q[..ql.n_cells], vol));
        ev.e_qbar.push(relative_l2_error(&reference.qbar.column(k)[..ql.n_cells], &qb[..ql.n_cells], vol));
        ev.kv.push(crate::metrics::kinetic_energy(&vr, rho, vol));
        ev.ku.push(crate::metrics::kinetic_energy(&ur, rho, vol));
        ev.kv_ref.push(crate::metrics::kinetic_energy(&cells(reference.v.column(k)), rho, vol));
        ev.ku_ref.push(crate::metrics::kinetic_energy(&cells(reference.u.column(k)), rho, vol));
        let (cd, cl, cdr, clr) = match drag {
            Some(p) => {
                let (uf, _) = vl.unpack_velocity(&u, bc.velocity_bcs());
                let qf = ql.unpack_pressure(&q, bc.pressure_bcs());
                let (uref, _) = vl.unpack_velocity(reference.u.column(k), bc.velocity_bcs());
                let qref = ql.unpack_pressure(reference.q.column(k), bc.pressure_bcs());
                let (cd, cl) = drag_lift(mesh, &uf, &qf, p)?;
                let (cdr, clr) = drag_lift(mesh, &uref, &qref, p)?;
                (cd, cl, cdr, clr)
            }
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        ev.cd.push(cd);
        ev.cl.push(cl);
        ev.cd_ref.push(cdr);
        ev.cl_ref.push(clr);
    }
    Ok(ev)
}
