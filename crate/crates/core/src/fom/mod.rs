//! Full-order time integration: Evolve-Filter (PISO evolve + SIMPLEC
//! filter), the monolithic Leray variant and plain Navier–Stokes.
//!
//! The evolve step solves
//! `ρ c0/Δt v + ρ ∇·(φ* v) - 2μ Δv + ∇q = ρ (c1 x^n - c2 x^{n-1})/Δt`
//! with BDF2 (`c = 3/2, 2, 1/2`) after a BDF1 first step (`c = 1, 1, 0`).
//! The history `x` is the filtered velocity for Evolve-Filter and the
//! unfiltered one for the Leray variant; the convecting flux `φ*` is always
//! extrapolated from the filtered velocity. The filter step solves the
//! generalized Stokes problem with `μ̄ = ρ α²/Δt`.

mod boundary;
mod coupling;
mod piso;
mod simplec;

use std::time::Instant;

pub use boundary::{FlowBoundary, InflowProfile, PatchBc, PressureBc, TimeFactor, VelocityBc};
pub use coupling::{max_courant, max_divergence};
pub use piso::{evolve_step, EvolveInput, EvolveReport};
pub use simplec::{filter_step, FilterCache, FilterReport};

use crate::error::{Error, Result};
use crate::fvops::{face_flux, CellField};
use crate::mesh::{Mesh, Vec3};
use crate::metrics::{drag_lift, kinetic_energy, DragLiftParams};
use crate::pod::{FieldLayout, SnapshotSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    pub rho: f64,
    pub mu: f64,
}

impl FluidProperties {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && mu > 0.0) {
            return Err(Error::config(format!("density and viscosity must be positive (rho = {rho}, mu = {mu})")));
        }
        Ok(FluidProperties { rho, mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub alpha: f64,
}

impl FilterParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::config_key("alpha", format!("filter radius must be non-negative, got {alpha}")));
        }
        Ok(FilterParams { alpha })
    }

    /// `ρ α² / Δt`.
    pub fn mu_bar(&self, rho: f64, dt: f64) -> f64 {
        rho * self.alpha * self.alpha / dt
    }
}

/// BDF coefficients `c0 x^{n+1} - c1 x^n + c2 x^{n-1}` (over `Δt`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bdf {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Bdf {
    pub const BDF1: Bdf = Bdf { c0: 1.0, c1: 1.0, c2: 0.0 };
    pub const BDF2: Bdf = Bdf { c0: 1.5, c1: 2.0, c2: 0.5 };

    pub fn order(&self) -> usize {
        if self.c2 == 0.0 { 1 } else { 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSetup {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Snapshot every this many steps.
    pub sample_every: usize,
}

impl TimeSetup {
    /// Checks that the horizon and the sampling interval are whole numbers
    /// of steps.
    pub fn new(t0: f64, t_end: f64, dt: f64, sample_interval: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config_key("dt", format!("time step must be positive, got {dt}")));
        }
        if t_end < t0 {
            return Err(Error::config_key("t_end", "end time before start time"));
        }
        let whole = |x: f64, key: &str| -> Result<usize> {
            let k = (x / dt).round();
            if (k * dt - x).abs() > 1e-9 * x.abs().max(dt) {
                return Err(Error::config_key(key, format!("{x} is not an integer multiple of dt = {dt}")));
            }
            Ok(k as usize)
        };
        whole(t_end - t0, "t_end")?;
        let sample_every = whole(sample_interval, "sample_interval")?;
        if sample_every == 0 {
            return Err(Error::config_key("sample_interval", "sampling interval must be at least one step"));
        }
        Ok(TimeSetup { t0, t_end, dt, sample_every })
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt).round() as usize
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    EvolveFilter,
    Leray,
    Nse,
}

impl Model {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ef" => Some(Model::EvolveFilter),
            "leray" => Some(Model::Leray),
            "nse" => Some(Model::Nse),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::EvolveFilter => "ef",
            Model::Leray => "leray",
            Model::Nse => "nse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverControls {
    pub momentum_rtol: f64,
    pub pressure_rtol: f64,
    pub max_iter: usize,
    pub n_correctors: usize,
    pub filter_tol: f64,
    pub filter_max_outer: usize,
    pub convection: bool,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            momentum_rtol: 1e-7,
            pressure_rtol: 1e-12,
            max_iter: 5000,
            n_correctors: 2,
            filter_tol: 1e-7,
            filter_max_outer: 50,
            convection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FomConfig {
    pub props: FluidProperties,
    pub filter: FilterParams,
    pub time: TimeSetup,
    pub model: Model,
    pub boundary: FlowBoundary,
    pub controls: SolverControls,
    /// Drag and lift are recorded when set and the patch exists.
    pub drag: Option<DragLiftParams>,
}

/// Fields at level n and the n-1 history. `v, q` are the evolve unknowns,
/// `u, qbar` the filtered ones (equal to `v` and zero for plain NSE).
#[derive(Debug, Clone, PartialEq)]
pub struct FomState {
    pub time: f64,
    pub step: usize,
    pub v: CellField<Vec3>,
    pub q: CellField<f64>,
    pub phi_v: Vec<f64>,
    pub u: CellField<Vec3>,
    pub qbar: CellField<f64>,
    pub phi_u: Vec<f64>,
    pub v_old: Vec<Vec3>,
    pub phi_v_old: Vec<f64>,
    pub u_old: Vec<Vec3>,
    pub phi_u_old: Vec<f64>,
}

impl FomState {
    /// Rest state with the boundary data of time `t0`.
    pub fn rest(mesh: &Mesh, bc: &FlowBoundary, t0: f64) -> Self {
        let mut v = bc.new_velocity(mesh);
        bc.apply_velocity(mesh, &mut v, t0);
        Self::from_velocity(mesh, bc, t0, v)
    }

    /// Initial state from a velocity field; fluxes are interpolated and the
    /// pressures start at zero (with their Dirichlet data).
    pub fn from_velocity(mesh: &Mesh, bc: &FlowBoundary, t0: f64, v: CellField<Vec3>) -> Self {
        let phi = face_flux(mesh, &v);
        FomState {
            time: t0,
            step: 0,
            q: bc.new_pressure(mesh),
            qbar: bc.new_pressure(mesh),
            u: v.clone(),
            phi_u: phi.clone(),
            v_old: v.cells.clone(),
            phi_v_old: phi.clone(),
            u_old: v.cells.clone(),
            phi_u_old: phi.clone(),
            phi_v: phi,
            v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub bdf_order: usize,
    pub evolve: EvolveReport,
    pub filter: Option<FilterReport>,
    pub divergence_v: f64,
    pub divergence_u: f64,
    pub courant: f64,
}

/// Time stepper holding the state and solver caches.
pub struct Fom<'a> {
    mesh: &'a Mesh,
    cfg: FomConfig,
    pub state: FomState,
    cache: FilterCache,
    cfl_warned: bool,
}

impl<'a> Fom<'a> {
    pub fn new(mesh: &'a Mesh, cfg: FomConfig) -> Result<Self> {
        cfg.boundary.check(mesh)?;
        let state = FomState::rest(mesh, &cfg.boundary, cfg.time.t0);
        Ok(Fom { mesh, cfg, state, cache: FilterCache::default(), cfl_warned: false })
    }

    pub fn with_state(mesh: &'a Mesh, cfg: FomConfig, state: FomState) -> Result<Self> {
        cfg.boundary.check(mesh)?;
        Ok(Fom { mesh, cfg, state, cache: FilterCache::default(), cfl_warned: false })
    }

    pub fn config(&self) -> &FomConfig {
        &self.cfg
    }

    /// Advances one time step with the configured model.
    pub fn step(&mut self) -> Result<StepReport> {
        let n = self.state.step;
        let t = self.state.time;
        self.advance().map_err(|e| Error::Step { step: n + 1, time: t + self.cfg.time.dt, source: Box::new(e) })
    }

    fn advance(&mut self) -> Result<StepReport> {
        let mesh = self.mesh;
        let cfg = &self.cfg;
        let s = &self.state;
        let dt = cfg.time.dt;
        let bdf = if s.step == 0 { Bdf::BDF1 } else { Bdf::BDF2 };
        let t_new = s.time + dt;

        let convecting: Vec<f64> = if bdf.order() == 1 {
            s.phi_u.clone()
        } else {
            s.phi_u.iter().zip(&s.phi_u_old).map(|(a, b)| 2.0 * a - b).collect()
        };
        let (history, history_flux) = match cfg.model {
            Model::EvolveFilter | Model::Nse => ([&s.u.cells[..], &s.u_old[..]], [&s.phi_u[..], &s.phi_u_old[..]]),
            Model::Leray => ([&s.v.cells[..], &s.v_old[..]], [&s.phi_v[..], &s.phi_v_old[..]]),
        };
        let inp = EvolveInput {
            props: cfg.props,
            dt,
            bdf,
            history,
            history_flux,
            convecting_flux: &convecting,
            convection: cfg.controls.convection,
            controls: &cfg.controls,
        };
        let mut v = s.v.clone();
        cfg.boundary.apply_velocity(mesh, &mut v, t_new);
        let mut q = s.q.clone();
        let (phi_v, evolve) = evolve_step(mesh, &inp, &mut v, &mut q)?;

        let (u, qbar, phi_u, filter) = match cfg.model {
            Model::Nse => (v.clone(), s.qbar.clone(), phi_v.clone(), None),
            Model::EvolveFilter | Model::Leray => {
                let mut u = s.u.clone();
                u.cells.copy_from_slice(&v.cells);
                cfg.boundary.apply_velocity(mesh, &mut u, t_new);
                let mut qbar = s.qbar.clone();
                let mu_bar = cfg.filter.mu_bar(cfg.props.rho, dt);
                let (phi_u, rep) = filter_step(
                    mesh,
                    cfg.props.rho,
                    mu_bar,
                    dt,
                    &v.cells,
                    &phi_v,
                    &mut u,
                    &mut qbar,
                    &cfg.controls,
                    &mut self.cache,
                )?;
                (u, qbar, phi_u, Some(rep))
            }
        };
        for (name, x) in [("v", &v.cells), ("u", &u.cells)] {
            if x.iter().any(|c| !c.iter().all(|e| e.is_finite())) {
                return Err(Error::Numerical(format!("non-finite {name} after step")));
            }
        }
        let courant = max_courant(mesh, &phi_u, dt);
        if courant > 0.9 && !self.cfl_warned {
            log::warn!("Courant number {courant:.2} exceeds 0.9 at t = {t_new}");
            self.cfl_warned = true;
        }
        let divergence_u = max_divergence(mesh, &phi_u);
        let s = &mut self.state;
        s.v_old = std::mem::replace(&mut s.v, v).cells;
        s.phi_v_old = std::mem::replace(&mut s.phi_v, phi_v);
        s.u_old = std::mem::replace(&mut s.u, u).cells;
        s.phi_u_old = std::mem::replace(&mut s.phi_u, phi_u);
        s.q = q;
        s.qbar = qbar;
        s.step += 1;
        s.time = cfg.time.time(s.step);
        Ok(StepReport {
            step: s.step,
            time: s.time,
            bdf_order: bdf.order(),
            divergence_v: evolve.divergence,
            evolve,
            filter,
            divergence_u,
            courant,
        })
    }
}

/// Sampled scalar series `t, cd, cl, Kv, Ku`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub cd: Vec<f64>,
    pub cl: Vec<f64>,
    pub kv: Vec<f64>,
    pub ku: Vec<f64>,
}

impl TimeSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,cd,cl,Kv,Ku\n");
        for i in 0..self.t.len() {
            s.push_str(&format!("{:?},{:?},{:?},{:?},{:?}\n", self.t[i], self.cd[i], self.cl[i], self.kv[i], self.ku[i]));
        }
        s
    }
}

#[derive(Debug)]
pub struct FomOutput {
    /// Raw (not homogenized) snapshots at the sampling instants, starting
    /// with the initial condition.
    pub snapshots: SnapshotSet,
    pub series: TimeSeries,
    pub steps: Vec<StepReport>,
    pub wall_seconds: f64,
    /// Set when a step failed; the outputs then stop at the last good step.
    pub failure: Option<Error>,
}

impl FomOutput {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_divergence(&self) -> f64 {
        self.steps.iter().map(|r| r.divergence_v.max(r.divergence_u)).fold(0.0, f64::max)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

fn record(mesh: &Mesh, cfg: &FomConfig, s: &FomState, snaps: &mut SnapshotSet, series: &mut TimeSeries) {
    let vl = FieldLayout::velocity(mesh);
    let ql = FieldLayout::pressure(mesh);
    snaps.times.push(s.time);
    snaps.params.push(cfg.filter.alpha);
    snaps.amplitudes.push(cfg.boundary.amplitude(s.time));
    snaps.v.push(&vl.pack_velocity(&s.v, &s.phi_v));
    snaps.u.push(&vl.pack_velocity(&s.u, &s.phi_u));
    snaps.q.push(&ql.pack_pressure(&s.q));
    snaps.qbar.push(&ql.pack_pressure(&s.qbar));
    let (cd, cl) = match &cfg.drag {
        Some(p) => drag_lift(mesh, &s.u, &s.q, p).unwrap_or((f64::NAN, f64::NAN)),
        None => (f64::NAN, f64::NAN),
    };
    series.t.push(s.time);
    series.cd.push(cd);
    series.cl.push(cl);
    series.kv.push(kinetic_energy(&s.v.cells, cfg.props.rho, mesh.cell_volumes()));
    series.ku.push(kinetic_energy(&s.u.cells, cfg.props.rho, mesh.cell_volumes()));
}

/// Runs from rest over the configured horizon, sampling every
/// `time.sample_every` steps (and at `t0`).
pub fn run_fom(mesh: &Mesh, cfg: &FomConfig) -> Result<FomOutput> {
    let fom = Fom::new(mesh, cfg.clone())?;
    Ok(run_from(fom))
}

/// Runs an already initialised stepper to the configured end time.
pub fn run_from(mut fom: Fom) -> FomOutput {
    let start = Instant::now();
    let mesh = fom.mesh;
    let cfg = fom.cfg.clone();
    let mut snapshots = SnapshotSet::new(mesh);
    let mut series = TimeSeries::default();
    let mut steps = Vec::new();
    let mut failure = None;
    record(mesh, &cfg, &fom.state, &mut snapshots, &mut series);
    for n in fom.state.step + 1..=cfg.time.n_steps() {
        match fom.step() {
            Ok(rep) => steps.push(rep),
            Err(e) => {
                log::error!("{e}");
                failure = Some(e);
                break;
            }
        }
        if n % cfg.time.sample_every == 0 {
            record(mesh, &cfg, &fom.state, &mut snapshots, &mut series);
        }
    }
    FomOutput { snapshots, series, steps, wall_seconds: start.elapsed().as_secs_f64(), failure }
}
