//! Mesh quality measures.
//!
//! * non-orthogonality: angle between an internal face's area vector and the
//!   owner-to-neighbour centroid vector;
//! * skewness: distance from the face centre to the point where the
//!   owner-neighbour line crosses the face plane, divided by the
//!   owner-neighbour distance;
//! * aspect ratio: per cell, the largest over smallest centre-to-face-centre
//!   distance among its non-empty faces.

use super::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub max_non_orthogonality: f64,
    pub avg_non_orthogonality: f64,
    pub max_skewness: f64,
    pub max_aspect_ratio: f64,
    pub cell_count: usize,
}

pub fn mesh_quality(m: &Mesh) -> QualityReport {
    let mut max_no = 0.0f64;
    let mut sum_no = 0.0;
    let mut max_skew = 0.0f64;
    let n_int = m.n_internal_faces();
    for f in 0..n_int {
        let s = m.face_area(f);
        let d = m.delta(f);
        let cos = (s.dot(&d) / (s.norm() * d.norm())).clamp(-1.0, 1.0);
        let angle = cos.acos().to_degrees();
        max_no = max_no.max(angle);
        sum_no += angle;

        let cp = m.cell_centre(m.owner()[f]);
        let t = s.dot(&(m.face_centre(f) - cp)) / s.dot(&d);
        let crossing = cp + t * d;
        max_skew = max_skew.max((m.face_centre(f) - crossing).norm() / d.norm());
    }
    let mut max_ar = 1.0f64;
    for c in 0..m.n_cells() {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &f in m.cell_faces(c) {
            if m.is_empty_face(f) {
                continue;
            }
            let r = (m.face_centre(f) - m.cell_centre(c)).norm();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if lo > 0.0 && lo.is_finite() {
            max_ar = max_ar.max(hi / lo);
        }
    }
    QualityReport {
        max_non_orthogonality: max_no,
        avg_non_orthogonality: if n_int > 0 { sum_no / n_int as f64 } else { 0.0 },
        max_skewness: max_skew,
        max_aspect_ratio: max_ar,
        cell_count: m.n_cells(),
    }
}
