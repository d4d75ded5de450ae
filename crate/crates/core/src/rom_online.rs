//! Online integration of the reduced Evolve-Filter system.
//!
//! Each step solves two small saddle systems by dense LU: the evolve
//! momentum equations coupled with the reduced pressure Poisson equation,
//! then the filter equations coupled with their own Poisson equation. Time
//! discretization mirrors the full-order solver: BDF1 on the first step,
//! BDF2 with the extrapolated convecting field afterwards.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fom::{Bdf, Model, TimeFactor, TimeSetup};
use crate::fvops::dense_lu;
use crate::rom_offline::{Ranks, ReducedOperators};

/// Boundary terms of the reduced pressure Poisson equations. `Consistent`
/// follows the Neumann conditions obtained from the momentum and filter
/// equations; `Literal` flips the sign of the time-derivative term and
/// doubles the filter curl term, as printed in the source formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpeBoundaryForm {
    Consistent,
    Literal,
}

impl PpeBoundaryForm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "consistent" => Some(PpeBoundaryForm::Consistent),
            "literal" => Some(PpeBoundaryForm::Literal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PpeBoundaryForm::Consistent => "consistent",
            PpeBoundaryForm::Literal => "literal",
        }
    }

    fn sign(self) -> f64 {
        match self {
            PpeBoundaryForm::Consistent => 1.0,
            PpeBoundaryForm::Literal => -1.0,
        }
    }

    /// Factor on `μ̄ N̄` in the filter Poisson equation: the filter carries
    /// `μ̄ Δu`, while the printed reduced equation has `2μ̄`.
    fn filter_factor(self) -> f64 {
        match self {
            PpeBoundaryForm::Consistent => 1.0,
            PpeBoundaryForm::Literal => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomConfig {
    pub rho: f64,
    pub mu: f64,
    pub alpha: f64,
    pub time: TimeSetup,
    pub model: Model,
    pub ppe_form: PpeBoundaryForm,
    /// Lifting amplitude `v_BC(t)`.
    pub amplitude: TimeFactor,
}

impl RomConfig {
    pub fn mu_bar(&self) -> f64 {
        self.rho * self.alpha * self.alpha / self.time.dt
    }
}

/// Reduced coefficients at level `n` and the `n-1` history.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub time: f64,
    pub step: usize,
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub beta_bar: DVector<f64>,
    pub gamma_bar: DVector<f64>,
    pub beta_old: DVector<f64>,
    pub beta_bar_old: DVector<f64>,
    /// Lifting amplitude at `n` and `n-1`.
    pub amplitude: f64,
    pub amplitude_old: f64,
}

impl ReducedState {
    /// Initial state; the history equals the initial level.
    pub fn initial(time: f64, beta: DVector<f64>, beta_bar: DVector<f64>, ranks: Ranks, amplitude: f64) -> Self {
        ReducedState {
            time,
            step: 0,
            beta_old: beta.clone(),
            beta_bar_old: beta_bar.clone(),
            beta,
            beta_bar,
            gamma: DVector::zeros(ranks.q),
            gamma_bar: DVector::zeros(ranks.qbar),
            amplitude,
            amplitude_old: amplitude,
        }
    }

    pub fn zeros(time: f64, ranks: Ranks) -> Self {
        Self::initial(time, DVector::zeros(ranks.v), DVector::zeros(ranks.u), ranks, 0.0)
    }

    fn check(&self, r: Ranks) -> Result<()> {
        let ok = self.beta.len() == r.v
            && self.beta_old.len() == r.v
            && self.beta_bar.len() == r.u
            && self.beta_bar_old.len() == r.u
            && self.gamma.len() == r.q
            && self.gamma_bar.len() == r.qbar;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "reduced state ({}, {}, {}, {}) does not match ranks {r:?}",
                self.beta.len(),
                self.beta_bar.len(),
                self.gamma.len(),
                self.gamma_bar.len()
            )))
        }
    }
}

/// Block system `[K11 K12; K21 K22] [x; y] = [r1; r2]` solved by dense LU.
fn solve_saddle(
    k11: DMatrix<f64>,
    k12: &DMatrix<f64>,
    k21: DMatrix<f64>,
    k22: &DMatrix<f64>,
    r1: DVector<f64>,
    r2: DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (n, m) = (k11.nrows(), k22.nrows());
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&k11);
    k.view_mut((0, n), (n, m)).copy_from(k12);
    k.view_mut((n, 0), (m, n)).copy_from(&k21);
    k.view_mut((n, n), (m, m)).copy_from(k22);
    let mut r = DVector::zeros(n + m);
    r.rows_mut(0, n).copy_from(&r1);
    r.rows_mut(n, m).copy_from(&r2);
    let x = dense_lu(k, r.as_slice())?;
    Ok((DVector::from_column_slice(&x[..n]), DVector::from_column_slice(&x[n..])))
}

/// Known quantities of one evolve step.
#[derive(Debug, Clone, Copy)]
pub struct EvolveStepInput<'a> {
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    pub bdf: Bdf,
    pub model: Model,
    pub ppe_form: PpeBoundaryForm,
    /// History coefficients at `n` and `n-1`: `β̄` for Evolve-Filter and
    /// NSE, `β` for Leray.
    pub history: [&'a DVector<f64>; 2],
    /// Convecting coefficients `β̄*` (`β̄^n` or `2β̄^n − β̄^{n−1}`).
    pub convecting: &'a DVector<f64>,
    /// Lifting amplitudes at `n+1`, `n`, `n-1`.
    pub amplitudes: [f64; 3],
}

/// Solves the reduced momentum and pressure Poisson equations for
/// `(β^{n+1}, γ^{n+1})`.
pub fn reduced_evolve_step(ops: &ReducedOperators, inp: &EvolveStepInput) -> Result<(DVector<f64>, DVector<f64>)> {
    let EvolveStepInput { rho, mu, dt, bdf, model, ppe_form, history: [h0, h1], convecting: conv, amplitudes } = *inp;
    let [a_new, a_n, a_nm1] = amplitudes;
    let (hist_mass, hist_flux) = match model {
        Model::Leray => (&ops.m, &ops.f_v),
        Model::EvolveFilter | Model::Nse => (&ops.m_tilde, &ops.f_u),
    };
    let hist = h0 * bdf.c1 - h1 * bdf.c2;
    let s = ppe_form.sign();

    let gc = ops.g.contract_last(conv.as_slice());
    let jc = ops.j.contract_last(conv.as_slice());
    let mut k11 = &ops.m * (rho * bdf.c0 / dt) + gc * rho - &ops.a * (2.0 * mu);
    let mut k21 = jc * rho - &ops.n * (2.0 * mu) + &ops.f_v * (s * rho * bdf.c0 / dt);
    let mut r1 = hist_mass * &hist * (rho / dt);
    let mut r2 = hist_flux * &hist * (s * rho / dt);

    if let Some(l) = &ops.lifting {
        // Convecting amplitude extrapolated like the coefficients.
        let a_conv = if bdf.order() == 1 { a_n } else { 2.0 * a_n - a_nm1 };
        let a_dot = (bdf.c0 * a_new - bdf.c1 * a_n + bdf.c2 * a_nm1) * rho / dt;
        k11 += &l.g_by_chi * (rho * a_conv);
        k21 += &l.j_by_chi * (rho * a_conv);
        r1 -= &l.m_chi * a_dot;
        r1 -= (&l.g_of_chi * conv + &l.g_chi * a_conv) * (rho * a_new);
        r1 += &l.a_chi * (2.0 * mu * a_new);
        r2 -= (&l.j_of_chi * conv + &l.j_chi * a_conv) * (rho * a_new);
        r2 += &l.n_chi * (2.0 * mu * a_new);
        r2 -= &l.f_chi * (s * a_dot);
    }
    solve_saddle(k11, &ops.b, k21, &ops.d, r1, r2)
}

/// Solves the reduced filter and its pressure Poisson equation for
/// `(β̄^{n+1}, γ̄^{n+1})` given `β^{n+1}` and the amplitude at `n+1`.
pub fn reduced_filter_step(
    ops: &ReducedOperators,
    beta: &DVector<f64>,
    amplitude: f64,
    rho: f64,
    mu_bar: f64,
    dt: f64,
    ppe_form: PpeBoundaryForm,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let c = ppe_form.filter_factor() * mu_bar;
    let k11 = &ops.m_bar * (rho / dt) - &ops.a_bar * mu_bar;
    let k21 = &ops.n_bar * -c;
    let mut r1 = ops.m_tilde.tr_mul(beta) * (rho / dt);
    let mut r2 = DVector::zeros(ops.ranks.qbar);
    if let Some(l) = &ops.lifting {
        r1 += &l.abar_chi * (mu_bar * amplitude);
        r2 += &l.nbar_chi * (c * amplitude);
    }
    solve_saddle(k11, &ops.b_bar, k21, &ops.d_bar, r1, r2)
}

/// Divergence indicator `‖P β + a (ψ_i, ∇·χ)‖`.
pub fn divergence_indicator(ops: &ReducedOperators, beta: &DVector<f64>, amplitude: f64) -> f64 {
    let mut d = &ops.p * beta;
    if let Some(l) = &ops.lifting {
        d += &l.p_chi * amplitude;
    }
    d.norm()
}

/// Coefficient time series at the sampling instants.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    pub t: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub beta: Vec<DVector<f64>>,
    pub gamma: Vec<DVector<f64>>,
    pub beta_bar: Vec<DVector<f64>>,
    pub gamma_bar: Vec<DVector<f64>>,
    pub divergence: Vec<f64>,
    pub steps: usize,
    /// Wall-clock time of the stepping loop.
    pub wall_seconds: f64,
}

impl RomTrajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        let first = |v: &[DVector<f64>]| v.first().map(|x| x.len()).unwrap_or(0);
        for (name, n) in [
            ("beta", first(&self.beta)),
            ("gamma", first(&self.gamma)),
            ("betabar", first(&self.beta_bar)),
            ("gammabar", first(&self.gamma_bar)),
        ] {
            for i in 1..=n {
                s.push_str(&format!(",{name}_{i}"));
            }
        }
        s.push('\n');
        for k in 0..self.t.len() {
            s.push_str(&format!("{:?}", self.t[k]));
            for v in [&self.beta[k], &self.gamma[k], &self.beta_bar[k], &self.gamma_bar[k]] {
                for x in v.iter() {
                    s.push_str(&format!(",{x:?}"));
                }
            }
            s.push('\n');
        }
        s
    }

    /// Reads the table written by [`RomTrajectory::to_csv`]. The amplitude
    /// column is recomputed from `amplitude`; divergence and timing are not
    /// stored and come back as NaN / zero.
    pub fn from_csv(text: &str, ranks: Ranks, amplitude: &TimeFactor) -> Result<Self> {
        let bad = |m: String| Error::Dimension(format!("trajectory table: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty".into()))?;
        let width = 1 + ranks.v + ranks.q + ranks.u + ranks.qbar;
        if header.split(',').count() != width {
            return Err(bad(format!("{} columns, expected {width}", header.split(',').count())));
        }
        let mut traj = RomTrajectory {
            t: Vec::new(),
            amplitude: Vec::new(),
            beta: Vec::new(),
            gamma: Vec::new(),
            beta_bar: Vec::new(),
            gamma_bar: Vec::new(),
            divergence: Vec::new(),
            steps: 0,
            wall_seconds: 0.0,
        };
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            if row.len() != width {
                return Err(bad(format!("row {} has {} entries, expected {width}", i + 1, row.len())));
            }
            let mut at = 1;
            let mut take = |n: usize| {
                let v = DVector::from_column_slice(&row[at..at + n]);
                at += n;
                v
            };
            let (b, g, bb, gb) = (take(ranks.v), take(ranks.q), take(ranks.u), take(ranks.qbar));
            traj.t.push(row[0]);
            traj.amplitude.push(amplitude.eval(row[0]));
            traj.beta.push(b);
            traj.gamma.push(g);
            traj.beta_bar.push(bb);
            traj.gamma_bar.push(gb);
            traj.divergence.push(f64::NAN);
        }
        Ok(traj)
    }
}

/// Advances one reduced step in place.
pub fn rom_step(ops: &ReducedOperators, cfg: &RomConfig, s: &mut ReducedState) -> Result<()> {
    let dt = cfg.time.dt;
    let bdf = if s.step == 0 { Bdf::BDF1 } else { Bdf::BDF2 };
    let t_new = cfg.time.time(s.step + 1);
    let a_new = cfg.amplitude.eval(t_new);
    let conv = if bdf.order() == 1 { s.beta_bar.clone() } else { &s.beta_bar * 2.0 - &s.beta_bar_old };
    let history = match cfg.model {
        Model::Leray => [&s.beta, &s.beta_old],
        Model::EvolveFilter | Model::Nse => [&s.beta_bar, &s.beta_bar_old],
    };
    let inp = EvolveStepInput {
        rho: cfg.rho,
        mu: cfg.mu,
        dt,
        bdf,
        model: cfg.model,
        ppe_form: cfg.ppe_form,
        history,
        convecting: &conv,
        amplitudes: [a_new, s.amplitude, s.amplitude_old],
    };
    let (beta, gamma) = reduced_evolve_step(ops, &inp)?;
    let (beta_bar, gamma_bar) = match cfg.model {
        Model::Nse => (beta.clone(), DVector::zeros(ops.ranks.qbar)),
        _ => reduced_filter_step(ops, &beta, a_new, cfg.rho, cfg.mu_bar(), dt, cfg.ppe_form)?,
    };
    if beta.iter().chain(beta_bar.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite reduced coefficients".into()));
    }
    s.beta_old = std::mem::replace(&mut s.beta, beta);
    s.beta_bar_old = std::mem::replace(&mut s.beta_bar, beta_bar);
    s.gamma = gamma;
    s.gamma_bar = gamma_bar;
    s.amplitude_old = std::mem::replace(&mut s.amplitude, a_new);
    s.step += 1;
    s.time = t_new;
    Ok(())
}

/// Integrates from `init` to the configured end time, sampling at `t0`
/// and every `time.sample_every` steps.
pub fn run_rom(ops: &ReducedOperators, cfg: &RomConfig, init: ReducedState) -> Result<RomTrajectory> {
    ops.check()?;
    init.check(ops.ranks)?;
    if cfg.model == Model::Nse && ops.ranks.v != ops.ranks.u {
        return Err(Error::Dimension("plain NSE needs shared velocity bases".into()));
    }
    let mut traj = RomTrajectory {
        t: Vec::new(),
        amplitude: Vec::new(),
        beta: Vec::new(),
        gamma: Vec::new(),
        beta_bar: Vec::new(),
        gamma_bar: Vec::new(),
        divergence: Vec::new(),
        steps: 0,
        wall_seconds: 0.0,
    };
    let record = |traj: &mut RomTrajectory, s: &ReducedState| {
        traj.t.push(s.time);
        traj.amplitude.push(s.amplitude);
        traj.beta.push(s.beta.clone());
        traj.gamma.push(s.gamma.clone());
        traj.beta_bar.push(s.beta_bar.clone());
        traj.gamma_bar.push(s.gamma_bar.clone());
        traj.divergence.push(divergence_indicator(ops, &s.beta, s.amplitude));
    };
    let mut s = init;
    record(&mut traj, &s);
    let start = Instant::now();
    for n in s.step + 1..=cfg.time.n_steps() {
        let t = s.time;
        rom_step(ops, cfg, &mut s).map_err(|e| Error::Step { step: n, time: t + cfg.time.dt, source: Box::new(e) })?;
        if n % cfg.time.sample_every == 0 {
            record(&mut traj, &s);
        }
    }
    traj.steps = s.step;
    traj.wall_seconds = start.elapsed().as_secs_f64();
    Ok(traj)
}
