//! Error measures, kinetic energy, drag and lift, peak statistics.

use crate::error::{Error, MeshError, Result};
use crate::fvops::{green_gauss_gradient, CellField, FieldValue};
use crate::mesh::{Mesh, Vec3};

/// `‖f - r‖_w / ‖f‖_w`. A zero reference gives 0 when `r` is zero too and
/// infinity otherwise.
pub fn relative_l2_error<T: FieldValue>(fom: &[T], rom: &[T], weights: &[f64]) -> f64 {
    assert_eq!(fom.len(), rom.len());
    assert_eq!(fom.len(), weights.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for ((f, r), w) in fom.iter().zip(rom).zip(weights) {
        let d = *f - *r;
        num += w * d.inner(d);
        den += w * f.inner(*f);
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// `½ ρ Σ Ω_i |u_i|²`.
pub fn kinetic_energy(u: &[Vec3], rho: f64, volumes: &[f64]) -> f64 {
    0.5 * rho * u.iter().zip(volumes).map(|(v, w)| w * v.norm_squared()).sum::<f64>()
}

/// Which projections of the surface traction define the two coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientConvention {
    /// Drag from the tangential and lift from the normal traction, with
    /// `t = (n_y, -n_x, 0)`.
    Printed,
    /// Drag and lift as the x and y components of the surface force.
    ForceComponent,
}

impl CoefficientConvention {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "printed" => Some(CoefficientConvention::Printed),
            "force-component" => Some(CoefficientConvention::ForceComponent),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientConvention::Printed => "printed",
            CoefficientConvention::ForceComponent => "force-component",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DragLiftParams {
    pub rho: f64,
    pub mu: f64,
    pub u_ref: f64,
    pub l_ref: f64,
    /// Extent normal to the plane; 1 for two dimensional meshes.
    pub depth_ref: f64,
    pub convention: CoefficientConvention,
    pub patch: String,
}

impl DragLiftParams {
    pub fn benchmark(rho: f64, mu: f64) -> Self {
        DragLiftParams {
            rho,
            mu,
            u_ref: 1.0,
            l_ref: 0.1,
            depth_ref: 1.0,
            convention: CoefficientConvention::ForceComponent,
            patch: "cylinder".into(),
        }
    }
}

/// Drag and lift coefficients from the traction `(2μ∇u - qI) n` on the
/// named patch, `n` pointing from the body into the fluid.
///
/// The velocity gradient on each face is the Green–Gauss gradient of the
/// adjacent cell (which includes the wall value); the face pressure is the
/// pressure boundary value.
pub fn drag_lift(
    mesh: &Mesh,
    u: &CellField<Vec3>,
    q: &CellField<f64>,
    p: &DragLiftParams,
) -> Result<(f64, f64)> {
    let (_, patch) = mesh
        .patch_by_name(&p.patch)
        .ok_or_else(|| Error::Mesh(MeshError::MissingPatch(p.patch.clone())))?;
    let grad = green_gauss_gradient(mesh, u);
    let n_int = mesh.n_internal_faces();
    let mut cd = 0.0;
    let mut cl = 0.0;
    for f in patch.faces() {
        let s = mesh.face_area(f);
        let area = s.norm();
        let n = -s / area;
        let j = grad[mesh.owner()[f]];
        let traction = 2.0 * p.mu * (j * n) - n * q.boundary[f - n_int];
        match p.convention {
            CoefficientConvention::Printed => {
                let t = Vec3::new(n.y, -n.x, 0.0);
                cd += traction.dot(&t) * area;
                cl += traction.dot(&n) * area;
            }
            CoefficientConvention::ForceComponent => {
                cd += traction.x * area;
                cl += traction.y * area;
            }
        }
    }
    let scale = 2.0 / (p.rho * p.l_ref * p.depth_ref * p.u_ref * p.u_ref);
    Ok((cd * scale, cl * scale))
}

/// Maximum value and the time at which it first occurs.
pub fn series_max(times: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (t, v) in times.iter().zip(values) {
        if *v > best.1 {
            best = (*t, *v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakComparison {
    pub t_fom: f64,
    pub max_fom: f64,
    pub t_rom: f64,
    pub max_rom: f64,
    /// `(max_fom - max_rom) / max_fom`.
    pub value_error: f64,
    /// `(t_fom - t_rom) / t_fom`.
    pub time_error: f64,
}

pub fn peak_errors(times: &[f64], fom: &[f64], rom: &[f64]) -> PeakComparison {
    let (t_fom, max_fom) = series_max(times, fom);
    let (t_rom, max_rom) = series_max(times, rom);
    PeakComparison {
        t_fom,
        max_fom,
        t_rom,
        max_rom,
        value_error: (max_fom - max_rom) / max_fom,
        time_error: (t_fom - t_rom) / t_fom,
    }
}

/// Summary statistics of a non-negative error series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn series_stats(values: &[f64]) -> SeriesStats {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return SeriesStats { min: f64::NAN, max: f64::NAN, mean: f64::NAN };
    }
    SeriesStats {
        min: finite.iter().cloned().fold(f64::INFINITY, f64::min),
        max: finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean: finite.iter().sum::<f64>() / finite.len() as f64,
    }
}

/// Relative error `|K_fom - K_rom| / K_fom` of the kinetic energy.
pub fn kinetic_energy_error(k_fom: f64, k_rom: f64) -> f64 {
    if k_fom == 0.0 {
        if k_rom == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (k_fom - k_rom).abs() / k_fom
    }
}
