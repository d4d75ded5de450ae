//! File formats: binary field matrices, eigenvalue tables and legacy VTK.
//!
//! A field file stores one [`SnapshotMatrix`] with per-column metadata:
//!
//! ```text
//! "LRFIELD1"  kind:u64 (0 velocity, 1 pressure)  n_cells:u64  n_boundary:u64
//! n_faces:u64  n_columns:u64  times[n_columns]  params[n_columns]
//! amplitudes[n_columns]  data (column-major)
//! ```
//!
//! All integers and floats little-endian.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};
use crate::pod::{FieldKind, FieldLayout, SnapshotMatrix, SnapshotSet};

const FIELD_MAGIC: &[u8; 8] = b"LRFIELD1";

/// A field matrix with per-column time, parameter and lifting amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub matrix: SnapshotMatrix,
    pub times: Vec<f64>,
    pub params: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl FieldFile {
    /// Matrix without time metadata (all zeros), e.g. for bases.
    pub fn bare(matrix: SnapshotMatrix) -> Self {
        let n = matrix.n_snapshots();
        FieldFile { matrix, times: vec![0.0; n], params: vec![0.0; n], amplitudes: vec![0.0; n] }
    }
}

pub fn encode_field(f: &FieldFile) -> Vec<u8> {
    let l = f.matrix.layout;
    let n = f.matrix.n_snapshots();
    let mut out = Vec::with_capacity(56 + 8 * (3 * n + f.matrix.data.len()));
    out.extend_from_slice(FIELD_MAGIC);
    let kind = match l.kind {
        FieldKind::Velocity => 0u64,
        FieldKind::Pressure => 1,
    };
    for x in [kind, l.n_cells as u64, l.n_boundary as u64, l.n_faces as u64, n as u64] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for x in f.times.iter().chain(&f.params).chain(&f.amplitudes).chain(f.matrix.data.iter()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8], path: &Path) -> Result<FieldFile> {
    let bad = |m: String| Error::Archive { path: path.to_path_buf(), message: m };
    if bytes.len() < 48 || &bytes[..8] != FIELD_MAGIC {
        return Err(bad("not a field file".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
    let kind = match word(0) {
        0 => FieldKind::Velocity,
        1 => FieldKind::Pressure,
        k => return Err(bad(format!("unknown field kind {k}"))),
    };
    let layout = FieldLayout { kind, n_cells: word(1), n_boundary: word(2), n_faces: word(3) };
    let n = word(4);
    let floats: Vec<f64> =
        bytes[48..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if bytes[48..].len() % 8 != 0 || floats.len() != 3 * n + layout.len() * n {
        return Err(bad(format!(
            "expected {} values for {n} columns of length {}, found {}",
            3 * n + layout.len() * n,
            layout.len(),
            floats.len()
        )));
    }
    Ok(FieldFile {
        times: floats[..n].to_vec(),
        params: floats[n..2 * n].to_vec(),
        amplitudes: floats[2 * n..3 * n].to_vec(),
        matrix: SnapshotMatrix { layout, data: DMatrix::from_column_slice(layout.len(), n, &floats[3 * n..]) },
    })
}

pub fn save_field(f: &FieldFile, path: &Path) -> Result<()> {
    std::fs::write(path, encode_field(f)).map_err(|e| Error::io(path, e))
}

pub fn load_field(path: &Path) -> Result<FieldFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes, path)
}

const SET_FILES: [&str; 4] = ["v.field", "u.field", "q.field", "qbar.field"];

/// Writes the four matrices of a snapshot set into `dir`; returns the paths.
pub fn save_snapshot_set(set: &SnapshotSet, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    set.check()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for (name, m) in SET_FILES.iter().zip([&set.v, &set.u, &set.q, &set.qbar]) {
        let f = FieldFile {
            matrix: m.clone(),
            times: set.times.clone(),
            params: set.params.clone(),
            amplitudes: set.amplitudes.clone(),
        };
        let p = dir.join(name);
        save_field(&f, &p)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn load_snapshot_set(dir: &Path) -> Result<SnapshotSet> {
    let mut files = Vec::new();
    for name in SET_FILES {
        files.push(load_field(&dir.join(name))?);
    }
    let [v, u, q, qbar]: [FieldFile; 4] = files.try_into().expect("four files");
    let set = SnapshotSet {
        times: v.times,
        params: v.params,
        amplitudes: v.amplitudes,
        v: v.matrix,
        u: u.matrix,
        q: q.matrix,
        qbar: qbar.matrix,
    };
    set.check()?;
    Ok(set)
}

/// `index,lambda,cumulative` table.
pub fn eigenvalue_csv(values: &[f64], cumulative: &[f64]) -> String {
    let mut s = String::from("index,lambda,cumulative\n");
    for (i, (l, c)) in values.iter().zip(cumulative).enumerate() {
        let _ = writeln!(s, "{},{l:?},{c:?}", i + 1);
    }
    s
}

/// Point indices of a hexahedral cell in VTK order, or `None` when the
/// cell is not a hexahedron.
fn hex_points(mesh: &Mesh, c: usize) -> Option<[usize; 8]> {
    let faces = mesh.cell_faces(c);
    if faces.len() != 6 || faces.iter().any(|&f| mesh.faces()[f].len() != 4) {
        return None;
    }
    let f0 = faces[0];
    let mut bottom: Vec<usize> = mesh.faces()[f0].clone();
    // VTK wants the bottom face numbered so its normal points into the cell.
    if mesh.owner()[f0] == c {
        bottom.reverse();
    }
    let mut out = [0usize; 8];
    out[..4].copy_from_slice(&bottom);
    for (i, &p) in bottom.iter().enumerate() {
        let mut top = None;
        for &f in &faces[1..] {
            let pts = &mesh.faces()[f];
            let k = pts.len();
            for j in 0..k {
                let (a, b) = (pts[j], pts[(j + 1) % k]);
                let other = if a == p { b } else if b == p { a } else { continue };
                if !bottom.contains(&other) {
                    top = Some(other);
                }
            }
        }
        out[4 + i] = top?;
    }
    Some(out)
}

/// Cell data attached to a VTK file.
pub enum VtkData<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [Vec3]),
}

/// Legacy ASCII unstructured grid with cell data. Only hexahedral cells
/// are supported (every generated mesh qualifies).
pub fn vtk_legacy(mesh: &Mesh, title: &str, data: &[VtkData]) -> Result<String> {
    let n = mesh.n_cells();
    let mut cells = Vec::with_capacity(n);
    for c in 0..n {
        cells.push(hex_points(mesh, c).ok_or_else(|| {
            Error::Dimension(format!("cell {c} is not hexahedral; VTK export needs hexahedra"))
        })?);
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.points().len());
    for p in mesh.points() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "CELLS {n} {}", 9 * n);
    for c in &cells {
        let _ = writeln!(s, "8 {} {} {} {} {} {} {} {}", c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(s, "12");
    }
    if !data.is_empty() {
        let _ = writeln!(s, "CELL_DATA {n}");
    }
    for d in data {
        match d {
            VtkData::Scalar(name, v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!("VTK scalar `{name}` has {} values", v.len())));
                }
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v.iter() {
                    let _ = writeln!(s, "{x:?}");
                }
            }
            VtkData::Vector(name, v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!("VTK vector `{name}` has {} values", v.len())));
                }
                let _ = writeln!(s, "VECTORS {name} double");
                for x in v.iter() {
                    let _ = writeln!(s, "{:?} {:?} {:?}", x.x, x.y, x.z);
                }
            }
        }
    }
    Ok(s)
}
