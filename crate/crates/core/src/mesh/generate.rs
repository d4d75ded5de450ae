//! Structured channel generators.
//!
//! Cells live on a rectilinear lattice numbered with x slowest and z fastest,
//! which keeps the matrix bandwidth at roughly one lattice column. A cylinder
//! is carved out by deleting every lattice cell whose centroid falls inside
//! the circle; the faces exposed by the deletion form the `cylinder` patch.

use super::{Mesh, Patch, PatchKind, Vec3};
use crate::error::MeshError;

/// Channel, optionally with a circular cylinder whose axis is parallel to z.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGeometry {
    pub length: f64,
    pub height: f64,
    /// `None` for a two dimensional channel (unit depth, one cell thick).
    pub depth: Option<f64>,
    pub cylinder_center: [f64; 2],
    pub cylinder_radius: f64,
}

impl ChannelGeometry {
    /// 2.2 x 0.41 channel with a cylinder of radius 0.05 at (0.2, 0.2).
    pub fn benchmark_2d() -> Self {
        ChannelGeometry {
            length: 2.2,
            height: 0.41,
            depth: None,
            cylinder_center: [0.2, 0.2],
            cylinder_radius: 0.05,
        }
    }

    /// 2.5 x 0.41 x 0.41 channel with a cylinder of radius 0.05 at (0.5, 0.2).
    pub fn benchmark_3d() -> Self {
        ChannelGeometry {
            length: 2.5,
            height: 0.41,
            depth: Some(0.41),
            cylinder_center: [0.5, 0.2],
            cylinder_radius: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::Geometry(m));
        if !(self.length > 0.0 && self.height > 0.0) {
            return bad(format!(
                "channel extents must be positive (length {}, height {})",
                self.length, self.height
            ));
        }
        if let Some(d) = self.depth {
            if !(d > 0.0) {
                return bad(format!("channel depth must be positive, got {d}"));
            }
        }
        let r = self.cylinder_radius;
        if !(r > 0.0) {
            return bad(format!("cylinder radius must be positive, got {r}"));
        }
        let [cx, cy] = self.cylinder_center;
        if cx - r <= 0.0 || cx + r >= self.length || cy - r <= 0.0 || cy + r >= self.height {
            return bad(format!(
                "cylinder of radius {r} at ({cx}, {cy}) touches or crosses the channel boundary"
            ));
        }
        Ok(())
    }
}

fn divisions(extent: f64, h: f64) -> usize {
    ((extent / h) - 1e-9).ceil().max(1.0) as usize
}

fn uniform(extent: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| extent * i as f64 / n as f64).collect()
}

/// Plain channel `[0,length] x [0,height] (x [0,depth])` with spacing close to `h`.
pub fn generate_channel_mesh(
    length: f64,
    height: f64,
    depth: Option<f64>,
    h: f64,
) -> Result<Mesh, MeshError> {
    if !(h > 0.0) {
        return Err(MeshError::Geometry(format!("target spacing must be positive, got {h}")));
    }
    if !(length > 0.0 && height > 0.0) || depth.is_some_and(|d| !(d > 0.0)) {
        return Err(MeshError::Geometry("channel extents must be positive".into()));
    }
    let xs = uniform(length, divisions(length, h));
    let ys = uniform(height, divisions(height, h));
    let zs = depth.map(|d| uniform(d, divisions(d, h)));
    rectilinear_mesh(&xs, &ys, zs.as_deref(), |_| false)
}

/// Channel with a stair-step cylinder.
pub fn generate_channel_cylinder_mesh(
    geom: &ChannelGeometry,
    target_h: f64,
) -> Result<Mesh, MeshError> {
    geom.validate()?;
    if !(target_h > 0.0 && target_h <= geom.cylinder_radius) {
        return Err(MeshError::Geometry(format!(
            "target spacing {target_h} must be positive and not exceed the cylinder radius {}",
            geom.cylinder_radius
        )));
    }
    let n = [
        divisions(geom.length, target_h),
        divisions(geom.height, target_h),
        geom.depth.map_or(1, |d| divisions(d, target_h)),
    ];
    channel_cylinder_lattice(geom, n)
}

/// Channel with a stair-step cylinder on an explicit `[nx, ny, nz]` lattice
/// (`nz` is ignored for 2D geometries).
pub fn channel_cylinder_lattice(geom: &ChannelGeometry, n: [usize; 3]) -> Result<Mesh, MeshError> {
    geom.validate()?;
    if n.contains(&0) {
        return Err(MeshError::Geometry("lattice divisions must be positive".into()));
    }
    let xs = uniform(geom.length, n[0]);
    let ys = uniform(geom.height, n[1]);
    let zs = geom.depth.map(|d| uniform(d, n[2]));
    let [cx, cy] = geom.cylinder_center;
    let r2 = geom.cylinder_radius * geom.cylinder_radius;
    rectilinear_mesh(&xs, &ys, zs.as_deref(), |c| {
        (c.x - cx).powi(2) + (c.y - cy).powi(2) < r2
    })
}

/// Rectilinear mesh on the lattice `xs x ys (x zs)` with the cells selected
/// by `removed` (evaluated at lattice cell centroids) deleted.
///
/// Patches, in order: `inlet` (x = xs[0]), `outlet` (x = xs[last]), `wall`
/// (remaining outer faces), `cylinder` (faces exposed by deleted cells, only
/// if any) and, for 2D meshes (`zs == None`), `frontAndBack` of kind empty.
pub fn rectilinear_mesh(
    xs: &[f64],
    ys: &[f64],
    zs: Option<&[f64]>,
    removed: impl Fn(Vec3) -> bool,
) -> Result<Mesh, MeshError> {
    let unit = [0.0, 1.0];
    let (zs, dimension) = match zs {
        Some(z) => (z, 3),
        None => (&unit[..], 2),
    };
    for (name, c) in [("x", xs), ("y", ys), ("z", zs)] {
        if c.len() < 2 || c.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeshError::Geometry(format!(
                "{name} coordinates must be strictly increasing with at least two entries"
            )));
        }
    }
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);
    let lattice = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;

    let mut cell_id = vec![usize::MAX; nx * ny * nz];
    let mut n_cells = 0;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let c = Vec3::new(
                    0.5 * (xs[i] + xs[i + 1]),
                    0.5 * (ys[j] + ys[j + 1]),
                    0.5 * (zs[k] + zs[k + 1]),
                );
                if !removed(c) {
                    cell_id[lattice(i, j, k)] = n_cells;
                    n_cells += 1;
                }
            }
        }
    }
    if n_cells == 0 {
        return Err(MeshError::Geometry("every cell was removed".into()));
    }
    let id = |i: isize, j: isize, k: isize| -> Option<usize> {
        if i < 0 || j < 0 || k < 0 || i >= nx as isize || j >= ny as isize || k >= nz as isize {
            return None;
        }
        let c = cell_id[lattice(i as usize, j as usize, k as usize)];
        (c != usize::MAX).then_some(c)
    };
    let point = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;

    // Quad on the +/- side of lattice cell (i,j,k) normal to `axis`, ordered
    // so that its right-hand normal points along +axis for `plus`, and away
    // from the cell (towards -axis) otherwise.
    let quad = |i: usize, j: usize, k: usize, axis: usize, plus: bool| -> Vec<usize> {
        let mut q = match axis {
            0 => {
                let a = if plus { i + 1 } else { i };
                vec![point(a, j, k), point(a, j + 1, k), point(a, j + 1, k + 1), point(a, j, k + 1)]
            }
            1 => {
                let b = if plus { j + 1 } else { j };
                vec![point(i, b, k), point(i, b, k + 1), point(i + 1, b, k + 1), point(i + 1, b, k)]
            }
            _ => {
                let c = if plus { k + 1 } else { k };
                vec![point(i, j, c), point(i + 1, j, c), point(i + 1, j + 1, c), point(i, j + 1, c)]
            }
        };
        if !plus {
            q.reverse();
        }
        q
    };

    let mut faces = Vec::new();
    let mut owner = Vec::new();
    let mut neighbour = Vec::new();

    // Internal faces, upper-triangular order: by owner, then by neighbour
    // index, which for this numbering is +z, +y, +x.
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let Some(c) = id(i as isize, j as isize, k as isize) else {
                    continue;
                };
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                for (axis, n) in [(2, id(ii, jj, kk + 1)), (1, id(ii, jj + 1, kk)), (0, id(ii + 1, jj, kk))] {
                    if axis == 2 && dimension == 2 {
                        continue;
                    }
                    if let Some(n) = n {
                        faces.push(quad(i, j, k, axis, true));
                        owner.push(c);
                        neighbour.push(n);
                    }
                }
            }
        }
    }

    let mut patches = Vec::new();
    let mut push_patch = |name: &str, kind, list: Vec<(usize, Vec<usize>)>, faces: &mut Vec<Vec<usize>>, owner: &mut Vec<usize>| {
        if list.is_empty() && kind == PatchKind::Cylinder {
            return;
        }
        let start = faces.len();
        let size = list.len();
        for (c, f) in list {
            owner.push(c);
            faces.push(f);
        }
        patches.push(Patch { name: name.to_string(), kind, start, size });
    };

    let mut inlet = Vec::new();
    let mut outlet = Vec::new();
    let mut wall = Vec::new();
    let mut cylinder = Vec::new();
    let mut empty = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                let Some(c) = id(ii, jj, kk) else { continue };
                for axis in 0..3 {
                    for plus in [false, true] {
                        let step = if plus { 1 } else { -1 };
                        let (ni, nj, nk, n_axis, idx) = match axis {
                            0 => (ii + step, jj, kk, nx, ii + step),
                            1 => (ii, jj + step, kk, ny, jj + step),
                            _ => (ii, jj, kk + step, nz, kk + step),
                        };
                        let outside = idx < 0 || idx >= n_axis as isize;
                        let face = quad(i, j, k, axis, plus);
                        if outside {
                            match (axis, plus) {
                                (0, false) => inlet.push((c, face)),
                                (0, true) => outlet.push((c, face)),
                                (2, _) if dimension == 2 => empty.push((c, face)),
                                _ => wall.push((c, face)),
                            }
                        } else if id(ni, nj, nk).is_none() {
                            cylinder.push((c, face));
                        }
                    }
                }
            }
        }
    }
    push_patch("inlet", PatchKind::Inlet, inlet, &mut faces, &mut owner);
    push_patch("outlet", PatchKind::Outlet, outlet, &mut faces, &mut owner);
    push_patch("wall", PatchKind::Wall, wall, &mut faces, &mut owner);
    push_patch("cylinder", PatchKind::Cylinder, cylinder, &mut faces, &mut owner);
    if dimension == 2 {
        push_patch("frontAndBack", PatchKind::Empty, empty, &mut faces, &mut owner);
    }

    // Drop lattice points that no face references.
    let mut all_points = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for x in xs {
        for y in ys {
            for z in zs {
                all_points.push(Vec3::new(*x, *y, *z));
            }
        }
    }
    let mut remap = vec![usize::MAX; all_points.len()];
    let mut points = Vec::new();
    for f in &faces {
        for &p in f {
            if remap[p] == usize::MAX {
                remap[p] = usize::MAX - 1;
            }
        }
    }
    for (p, r) in remap.iter_mut().enumerate() {
        if *r != usize::MAX {
            *r = points.len();
            points.push(all_points[p]);
        }
    }
    for f in &mut faces {
        for p in f.iter_mut() {
            *p = remap[*p];
        }
    }

    Mesh::new(points, faces, owner, neighbour, patches, dimension)
}
