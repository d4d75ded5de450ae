//! Space-time boundary data for velocity and pressure.

use crate::error::{Error, Result};
use crate::fvops::{BoundaryCondition, CellField};
use crate::mesh::{Mesh, PatchKind, Vec3};

/// Spatial inflow shape, multiplied by a [`TimeFactor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InflowProfile {
    /// `(6/H²) y (H - y)` in x: unit mean velocity, peak 1.5.
    Parabolic2d { height: f64 },
    /// `36/(H² W²) y z (H - y)(W - z)` in x.
    Parabolic3d { height: f64, width: f64 },
    /// Uniform vector.
    Plug(Vec3),
}

impl InflowProfile {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match *self {
            InflowProfile::Parabolic2d { height: h } => {
                Vec3::new(6.0 / (h * h) * x.y * (h - x.y), 0.0, 0.0)
            }
            InflowProfile::Parabolic3d { height: h, width: w } => Vec3::new(
                36.0 / (h * h * w * w) * x.y * x.z * (h - x.y) * (w - x.z),
                0.0,
                0.0,
            ),
            InflowProfile::Plug(v) => v,
        }
    }
}

/// Time amplitude of the inflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFactor {
    /// `sin(π t / period)`.
    Sine { period: f64 },
    Constant(f64),
    /// `(t/τ) exp(1 - t/τ)`: smooth rise from zero, peak 1 at `τ`, then decay.
    RiseDecay { tau: f64 },
}

impl TimeFactor {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::Sine { period } => (std::f64::consts::PI * t / period).sin(),
            TimeFactor::Constant(c) => c,
            TimeFactor::RiseDecay { tau } => (t / tau) * (1.0 - t / tau).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityBc {
    /// Dirichlet `amplitude(t) * profile(x)`.
    Inflow,
    /// Dirichlet zero.
    NoSlip,
    ZeroGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureBc {
    ZeroGradient,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchBc {
    pub velocity: VelocityBc,
    pub pressure: PressureBc,
}

/// Boundary conditions of the flow problem, one entry per mesh patch
/// (entries of empty patches are ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBoundary {
    pub patches: Vec<PatchBc>,
    pub profile: InflowProfile,
    pub time: TimeFactor,
}

impl FlowBoundary {
    /// Inlet: prescribed inflow; walls and cylinder: no-slip; outlet:
    /// zero-gradient velocity with fixed zero pressure. Pressure is
    /// zero-gradient everywhere else.
    pub fn standard(mesh: &Mesh, profile: InflowProfile, time: TimeFactor) -> Self {
        let patches = mesh
            .patches()
            .iter()
            .map(|p| match p.kind {
                PatchKind::Inlet => PatchBc { velocity: VelocityBc::Inflow, pressure: PressureBc::ZeroGradient },
                PatchKind::Outlet => PatchBc { velocity: VelocityBc::ZeroGradient, pressure: PressureBc::Fixed(0.0) },
                PatchKind::Wall | PatchKind::Cylinder | PatchKind::Empty => {
                    PatchBc { velocity: VelocityBc::NoSlip, pressure: PressureBc::ZeroGradient }
                }
            })
            .collect();
        FlowBoundary { patches, profile, time }
    }

    /// Overrides the conditions of every patch named `name`.
    pub fn with_patch(mut self, mesh: &Mesh, name: &str, bc: PatchBc) -> Result<Self> {
        let (i, _) = mesh
            .patch_by_name(name)
            .ok_or_else(|| Error::config_key("boundary", format!("unknown patch `{name}`")))?;
        self.patches[i] = bc;
        Ok(self)
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.patches.len() != mesh.patches().len() {
            return Err(Error::config_key(
                "boundary",
                format!(
                    "{} patch conditions for a mesh with {} patches",
                    self.patches.len(),
                    mesh.patches().len()
                ),
            ));
        }
        Ok(())
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        self.time.eval(t)
    }

    pub fn velocity_bcs(&self) -> Vec<BoundaryCondition<Vec3>> {
        self.patches
            .iter()
            .map(|p| match p.velocity {
                VelocityBc::Inflow | VelocityBc::NoSlip => BoundaryCondition::Dirichlet,
                VelocityBc::ZeroGradient => BoundaryCondition::ZeroGradient,
            })
            .collect()
    }

    pub fn pressure_bcs(&self) -> Vec<BoundaryCondition<f64>> {
        self.patches
            .iter()
            .map(|p| match p.pressure {
                PressureBc::Fixed(_) => BoundaryCondition::Dirichlet,
                PressureBc::ZeroGradient => BoundaryCondition::ZeroGradient,
            })
            .collect()
    }

    /// True when at least one patch fixes the pressure level.
    pub fn pressure_is_anchored(&self, mesh: &Mesh) -> bool {
        self.patches
            .iter()
            .zip(mesh.patches())
            .any(|(b, p)| p.kind != PatchKind::Empty && matches!(b.pressure, PressureBc::Fixed(_)))
    }

    pub fn new_velocity(&self, mesh: &Mesh) -> CellField<Vec3> {
        CellField::zeros(mesh, self.velocity_bcs())
    }

    pub fn new_pressure(&self, mesh: &Mesh) -> CellField<f64> {
        let mut q = CellField::zeros(mesh, self.pressure_bcs());
        self.apply_pressure(mesh, &mut q);
        q
    }

    /// Writes Dirichlet velocity data at time `t` into the boundary values.
    pub fn apply_velocity(&self, mesh: &Mesh, v: &mut CellField<Vec3>, t: f64) {
        self.apply_velocity_scaled(mesh, v, self.amplitude(t));
    }

    /// Dirichlet velocity data with an explicit inflow amplitude.
    pub fn apply_velocity_scaled(&self, mesh: &Mesh, v: &mut CellField<Vec3>, amplitude: f64) {
        for (pi, (bc, p)) in self.patches.iter().zip(mesh.patches()).enumerate() {
            if p.kind == PatchKind::Empty {
                continue;
            }
            match bc.velocity {
                VelocityBc::Inflow => {
                    let profile = self.profile;
                    v.set_patch_values(mesh, pi, |x| profile.eval(x) * amplitude)
                }
                VelocityBc::NoSlip => v.set_patch_values(mesh, pi, |_| Vec3::zeros()),
                VelocityBc::ZeroGradient => {}
            }
        }
        v.update_boundary(mesh);
    }

    pub fn apply_pressure(&self, mesh: &Mesh, q: &mut CellField<f64>) {
        for (pi, (bc, p)) in self.patches.iter().zip(mesh.patches()).enumerate() {
            if p.kind == PatchKind::Empty {
                continue;
            }
            if let PressureBc::Fixed(value) = bc.pressure {
                q.set_patch_values(mesh, pi, |_| value);
            }
        }
        q.update_boundary(mesh);
    }

    /// Velocity boundary value on the patch named `patch` at point `x` and time `t`.
    pub fn boundary_value(&self, mesh: &Mesh, patch: &str, x: Vec3, t: f64) -> Result<Option<Vec3>> {
        let (i, _) = mesh
            .patch_by_name(patch)
            .ok_or_else(|| Error::config_key("boundary", format!("unknown patch `{patch}`")))?;
        Ok(match self.patches[i].velocity {
            VelocityBc::Inflow => Some(self.profile.eval(x) * self.amplitude(t)),
            VelocityBc::NoSlip => Some(Vec3::zeros()),
            VelocityBc::ZeroGradient => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_inflow_peak() {
        let p = InflowProfile::Parabolic2d { height: 0.41 };
        let t = TimeFactor::Sine { period: 8.0 };
        let u = p.eval(Vec3::new(0.0, 0.205, 0.5)) * t.eval(4.0);
        // 6/0.41² · 0.205 · 0.205 = 1.5
        assert!((u.x - 1.5).abs() < 1e-12, "{}", u.x);
        assert_eq!(t.eval(0.0), 0.0);
    }

    #[test]
    fn three_dimensional_inflow_peak() {
        let p = InflowProfile::Parabolic3d { height: 0.41, width: 0.41 };
        let u = p.eval(Vec3::new(0.0, 0.205, 0.205));
        assert!((u.x - 2.25).abs() < 1e-12);
    }
}
