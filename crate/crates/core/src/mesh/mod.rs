//! Polyhedral finite-volume mesh.
//!
//! Faces are stored OpenFOAM style: internal faces first, each with an owner
//! and a neighbour where `owner < neighbour` and the area vector points from
//! owner to neighbour; boundary faces follow, grouped into contiguous patches,
//! with the area vector pointing out of the domain. Two dimensional meshes are
//! one cell thick with unit depth; their front and back faces live in an
//! [`PatchKind::Empty`] patch which every operator skips.

mod generate;
mod io;
mod quality;

pub use generate::{
    channel_cylinder_lattice, generate_channel_cylinder_mesh, generate_channel_mesh, rectilinear_mesh,
    ChannelGeometry,
};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use quality::{mesh_quality, QualityReport};

use std::fmt;

use nalgebra::Vector3;

use crate::error::MeshError;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchKind {
    Inlet,
    Outlet,
    Wall,
    Cylinder,
    Empty,
}

impl PatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchKind::Inlet => "inlet",
            PatchKind::Outlet => "outlet",
            PatchKind::Wall => "wall",
            PatchKind::Cylinder => "cylinder",
            PatchKind::Empty => "empty",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "inlet" => PatchKind::Inlet,
            "outlet" => PatchKind::Outlet,
            "wall" => PatchKind::Wall,
            "cylinder" => PatchKind::Cylinder,
            "empty" => PatchKind::Empty,
            _ => return None,
        })
    }
}

impl fmt::Display for PatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub name: String,
    pub kind: PatchKind,
    pub start: usize,
    pub size: usize,
}

impl Patch {
    pub fn faces(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

/// Immutable finite-volume mesh with precomputed geometry.
#[derive(Debug, Clone)]
pub struct Mesh {
    points: Vec<Vec3>,
    faces: Vec<Vec<usize>>,
    owner: Vec<usize>,
    neighbour: Vec<usize>,
    patches: Vec<Patch>,
    dimension: usize,
    n_cells: usize,

    face_area: Vec<Vec3>,
    face_centre: Vec<Vec3>,
    cell_volume: Vec<f64>,
    cell_centre: Vec<Vec3>,
    cell_faces: Vec<Vec<usize>>,
    face_patch: Vec<usize>,
}

impl PartialEq for Mesh {
    /// Topology and coordinates; derived geometry follows from them.
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
            && self.faces == other.faces
            && self.owner == other.owner
            && self.neighbour == other.neighbour
            && self.patches == other.patches
            && self.dimension == other.dimension
    }
}

impl Mesh {
    /// Builds a mesh from raw topology, computes its geometry and validates
    /// every structural invariant.
    pub fn new(
        points: Vec<Vec3>,
        faces: Vec<Vec<usize>>,
        owner: Vec<usize>,
        neighbour: Vec<usize>,
        patches: Vec<Patch>,
        dimension: usize,
    ) -> Result<Self, MeshError> {
        check_topology(&points, &faces, &owner, &neighbour, &patches, dimension)?;
        let n_cells = owner
            .iter()
            .chain(neighbour.iter())
            .copied()
            .max()
            .map_or(0, |m| m + 1);

        let mut face_area = Vec::with_capacity(faces.len());
        let mut face_centre = Vec::with_capacity(faces.len());
        for f in &faces {
            let (c, a) = polygon_geometry(f.iter().map(|&p| points[p]));
            face_centre.push(c);
            face_area.push(a);
        }

        let mut cell_faces = vec![Vec::new(); n_cells];
        for (f, &o) in owner.iter().enumerate() {
            cell_faces[o].push(f);
        }
        for (f, &n) in neighbour.iter().enumerate() {
            cell_faces[n].push(f);
        }

        let mut face_patch = vec![usize::MAX; faces.len()];
        for (pi, p) in patches.iter().enumerate() {
            for f in p.faces() {
                face_patch[f] = pi;
            }
        }

        let mut mesh = Mesh {
            points,
            faces,
            owner,
            neighbour,
            patches,
            dimension,
            n_cells,
            face_area,
            face_centre,
            cell_volume: vec![0.0; n_cells],
            cell_centre: vec![Vec3::zeros(); n_cells],
            cell_faces,
            face_patch,
        };
        mesh.compute_cell_geometry();
        mesh.validate_geometry()?;
        Ok(mesh)
    }

    fn compute_cell_geometry(&mut self) {
        for c in 0..self.n_cells {
            let faces = &self.cell_faces[c];
            let estimate = faces
                .iter()
                .fold(Vec3::zeros(), |acc, &f| acc + self.face_centre[f])
                / faces.len() as f64;
            let mut volume = 0.0;
            let mut moment = Vec3::zeros();
            for &f in faces {
                let s = self.outward_area(c, f);
                let pyramid = s.dot(&(self.face_centre[f] - estimate)) / 3.0;
                let centroid = 0.75 * self.face_centre[f] + 0.25 * estimate;
                volume += pyramid;
                moment += pyramid * centroid;
            }
            self.cell_volume[c] = volume;
            self.cell_centre[c] = if volume.abs() > 0.0 {
                moment / volume
            } else {
                estimate
            };
        }
    }

    fn validate_geometry(&self) -> Result<(), MeshError> {
        for c in 0..self.n_cells {
            if !(self.cell_volume[c] > 0.0) {
                return Err(MeshError::Validation {
                    check: "positive-volume",
                    detail: format!("cell {c} has volume {:e}", self.cell_volume[c]),
                });
            }
            let mut sum = Vec3::zeros();
            let mut surface = 0.0;
            for &f in &self.cell_faces[c] {
                let s = self.outward_area(c, f);
                sum += s;
                surface += s.norm();
            }
            if sum.norm() > 1e-12 * surface {
                return Err(MeshError::Validation {
                    check: "closure",
                    detail: format!(
                        "cell {c}: |sum of face area vectors| = {:e} (surface {:e})",
                        sum.norm(),
                        surface
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }
    pub fn owner(&self) -> &[usize] {
        &self.owner
    }
    pub fn neighbour(&self) -> &[usize] {
        &self.neighbour
    }
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_internal_faces(&self) -> usize {
        self.neighbour.len()
    }
    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.neighbour.len()
    }
    /// Faces that take part in surface sums (everything but empty patches).
    pub fn n_active_faces(&self) -> usize {
        self.n_faces()
            - self
                .patches
                .iter()
                .filter(|p| p.kind == PatchKind::Empty)
                .map(|p| p.size)
                .sum::<usize>()
    }
    pub fn face_area(&self, f: usize) -> Vec3 {
        self.face_area[f]
    }
    pub fn face_areas(&self) -> &[Vec3] {
        &self.face_area
    }
    pub fn face_centre(&self, f: usize) -> Vec3 {
        self.face_centre[f]
    }
    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_volume[c]
    }
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volume
    }
    pub fn cell_centre(&self, c: usize) -> Vec3 {
        self.cell_centre[c]
    }
    pub fn cell_centres(&self) -> &[Vec3] {
        &self.cell_centre
    }
    pub fn cell_faces(&self, c: usize) -> &[usize] {
        &self.cell_faces[c]
    }
    pub fn total_volume(&self) -> f64 {
        self.cell_volume.iter().sum()
    }

    pub fn is_internal(&self, f: usize) -> bool {
        f < self.neighbour.len()
    }

    /// Index of the patch holding boundary face `f`.
    pub fn face_patch(&self, f: usize) -> Option<usize> {
        self.face_patch.get(f).copied().filter(|&p| p != usize::MAX)
    }

    pub fn is_empty_face(&self, f: usize) -> bool {
        self.face_patch(f)
            .is_some_and(|p| self.patches[p].kind == PatchKind::Empty)
    }

    /// Area vector of `f` pointing out of cell `c`.
    pub fn outward_area(&self, c: usize, f: usize) -> Vec3 {
        if self.owner[f] == c {
            self.face_area[f]
        } else {
            -self.face_area[f]
        }
    }

    pub fn patch_by_name(&self, name: &str) -> Option<(usize, &Patch)> {
        self.patches.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn patches_of_kind(&self, kind: PatchKind) -> impl Iterator<Item = (usize, &Patch)> {
        self.patches
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.kind == kind)
    }

    /// Boundary-face slot (index into boundary value arrays) of face `f`.
    pub fn boundary_slot(&self, f: usize) -> usize {
        f - self.neighbour.len()
    }

    /// Linear interpolation weight of the owner cell on internal face `f`.
    ///
    /// Uses normal distances: `w = n·(c_N - c_f) / n·(c_N - c_P)`, which is
    /// the distance-weighted average on orthogonal meshes.
    pub fn interpolation_weight(&self, f: usize) -> f64 {
        let n = self.face_area[f];
        let cp = self.cell_centre[self.owner[f]];
        let cn = self.cell_centre[self.neighbour[f]];
        let cf = self.face_centre[f];
        n.dot(&(cn - cf)) / n.dot(&(cn - cp))
    }

    /// Owner-to-neighbour (or owner-to-face for boundaries) centroid vector.
    pub fn delta(&self, f: usize) -> Vec3 {
        let cp = self.cell_centre[self.owner[f]];
        if self.is_internal(f) {
            self.cell_centre[self.neighbour[f]] - cp
        } else {
            self.face_centre[f] - cp
        }
    }

    /// Orthogonal diffusion coefficient `|S|^2 / (S·d)` of face `f`.
    pub fn delta_coeff(&self, f: usize) -> f64 {
        let s = self.face_area[f];
        s.norm_squared() / s.dot(&self.delta(f))
    }

    /// Non-orthogonal part of the face area vector, `S - d |S|^2/(S·d)`.
    pub fn non_orthogonal_vector(&self, f: usize) -> Vec3 {
        let d = self.delta(f);
        let s = self.face_area[f];
        s - d * (s.norm_squared() / s.dot(&d))
    }

    /// True when any internal face has a non-negligible non-orthogonal part.
    pub fn is_non_orthogonal(&self) -> bool {
        (0..self.n_internal_faces())
            .any(|f| self.non_orthogonal_vector(f).norm() > 1e-10 * self.face_area[f].norm())
    }
}

/// Centre and area vector of a planar or mildly warped polygon.
pub(crate) fn polygon_geometry(points: impl Iterator<Item = Vec3>) -> (Vec3, Vec3) {
    let pts: Vec<Vec3> = points.collect();
    let n = pts.len();
    let estimate = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / n as f64;
    if n == 3 {
        let area = 0.5 * (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
        return (estimate, area);
    }
    let mut area = Vec3::zeros();
    let mut moment = Vec3::zeros();
    let mut weight = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let tri = 0.5 * (a - estimate).cross(&(b - estimate));
        let centre = (a + b + estimate) / 3.0;
        let mag = tri.norm();
        area += tri;
        moment += mag * centre;
        weight += mag;
    }
    let centre = if weight > 0.0 { moment / weight } else { estimate };
    (centre, area)
}

fn check_topology(
    points: &[Vec3],
    faces: &[Vec<usize>],
    owner: &[usize],
    neighbour: &[usize],
    patches: &[Patch],
    dimension: usize,
) -> Result<(), MeshError> {
    let fail = |check: &'static str, detail: String| Err(MeshError::Validation { check, detail });
    if dimension != 2 && dimension != 3 {
        return fail("dimension", format!("dimension must be 2 or 3, got {dimension}"));
    }
    if owner.len() != faces.len() {
        return fail(
            "owner-count",
            format!("{} owners for {} faces", owner.len(), faces.len()),
        );
    }
    if neighbour.len() > faces.len() {
        return fail("neighbour-count", "more neighbours than faces".into());
    }
    for (f, pts) in faces.iter().enumerate() {
        if pts.len() < 3 {
            return fail("face-points", format!("face {f} has {} points", pts.len()));
        }
        if let Some(&p) = pts.iter().find(|&&p| p >= points.len()) {
            return fail(
                "point-index",
                format!("face {f} references point {p} of {}", points.len()),
            );
        }
    }
    // Cell count is the number of distinct owners; a face that references a
    // cell no owner introduces is out of range.
    let n_cells = owner.iter().copied().max().map_or(0, |m| m + 1);
    for (f, (&o, &n)) in owner.iter().zip(neighbour).enumerate() {
        if n >= n_cells {
            return fail(
                "cell-index",
                format!("face {f} neighbour {n} out of range (cell count {n_cells})"),
            );
        }
        if o >= n {
            return fail(
                "owner-order",
                format!("internal face {f}: owner {o} must be lower than neighbour {n}"),
            );
        }
    }
    let mut seen = vec![false; n_cells];
    for &o in owner {
        seen[o] = true;
    }
    for &n in neighbour {
        seen[n] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return fail("cell-index", format!("cell {c} has no faces"));
    }
    let n_internal = neighbour.len();
    let mut expected = n_internal;
    for p in patches {
        if p.start != expected {
            return fail(
                "patch-partition",
                format!(
                    "patch `{}` starts at {} but the previous range ends at {expected}",
                    p.name, p.start
                ),
            );
        }
        expected += p.size;
    }
    if expected != faces.len() {
        return fail(
            "patch-partition",
            format!(
                "patches cover faces up to {expected} but there are {} faces",
                faces.len()
            ),
        );
    }
    let mut names: Vec<&str> = patches.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return fail("patch-names", "duplicate patch name".into());
    }
    Ok(())
}
