//! Loop oracle for the projected operators: cell loops over each cell's
//! faces, independent of the face-loop assembly.

use leray_rom::fom::{FlowBoundary, InflowProfile, PressureBc, TimeFactor};
use leray_rom::mesh::{rectilinear_mesh, Mesh, Vec3};
use leray_rom::pod::FieldLayout;
use leray_rom::rom_offline::*;
use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};

/// 8 x 5 stretched lattice with the centre cell removed: 39 cells, patches
/// inlet, outlet, wall, cylinder, frontAndBack.
pub fn oracle_mesh() -> Mesh {
    let xs = [0.0, 0.1, 0.25, 0.35, 0.5, 0.62, 0.8, 0.9, 1.1];
    let ys = [0.0, 0.08, 0.2, 0.26, 0.33, 0.41];
    rectilinear_mesh(&xs, &ys, None, |c| (c.x - 0.425).abs() < 0.05 && (c.y - 0.23).abs() < 0.03).unwrap()
}

pub fn bc(mesh: &Mesh) -> FlowBoundary {
    FlowBoundary::standard(mesh, InflowProfile::Parabolic2d { height: 0.41 }, TimeFactor::Sine { period: 8.0 })
}

pub fn random_modes(mesh: &Mesh, r: [usize; 4], seed: u64) -> ModeSet {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let vl = FieldLayout::velocity(mesh).len();
    let pl = FieldLayout::pressure(mesh).len();
    let mut m = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    ModeSet { v: m(vl, r[0]), u: m(vl, r[1]), q: m(pl, r[2]), qbar: m(pl, r[3]) }
}

/// Independent evaluation of the discrete operators for one mesh, written
/// as cell loops over each cell's faces with outward orientation.
struct Oracle<'a> {
    mesh: &'a Mesh,
    n_int: usize,
    ppe: Vec<usize>,
}

struct Vel {
    cells: Vec<Vec3>,
    bnd: Vec<Vec3>,
    flux: Vec<f64>,
}

struct Pre {
    cells: Vec<f64>,
    bnd: Vec<f64>,
}

impl<'a> Oracle<'a> {
    fn new(mesh: &'a Mesh, b: &FlowBoundary) -> Self {
        let n_int = mesh.n_internal_faces();
        let mut ppe = Vec::new();
        for (p, pb) in mesh.patches().iter().zip(&b.patches) {
            let empty = p.kind == leray_rom::mesh::PatchKind::Empty;
            if !empty && matches!(pb.pressure, PressureBc::ZeroGradient) {
                ppe.extend(p.start..p.start + p.size);
            }
        }
        Oracle { mesh, n_int, ppe }
    }

    fn vel(&self, col: &[f64]) -> Vel {
        let (nc, nb) = (self.mesh.n_cells(), self.mesh.n_boundary_faces());
        let v = |i: usize| Vec3::new(col[3 * i], col[3 * i + 1], col[3 * i + 2]);
        Vel {
            cells: (0..nc).map(v).collect(),
            bnd: (nc..nc + nb).map(v).collect(),
            flux: col[3 * (nc + nb)..].to_vec(),
        }
    }

    fn pre(&self, col: &[f64]) -> Pre {
        let nc = self.mesh.n_cells();
        Pre { cells: col[..nc].to_vec(), bnd: col[nc..].to_vec() }
    }

    fn skip(&self, f: usize) -> bool {
        f >= self.n_int && self.mesh.is_empty_face(f)
    }

    /// Outward area of face `f` seen from cell `c`, and the cell across it.
    fn side(&self, c: usize, f: usize) -> (Vec3, Option<usize>) {
        let m = self.mesh;
        let s = m.face_area(f);
        if f >= self.n_int {
            (s, None)
        } else if m.owner()[f] == c {
            (s, Some(m.neighbour()[f]))
        } else {
            (-s, Some(m.owner()[f]))
        }
    }

    /// Linear interpolation by distance along the face normal.
    fn face<T>(&self, f: usize, cells: &[T], bnd: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let m = self.mesh;
        if f >= self.n_int {
            return bnd[f - self.n_int];
        }
        let (o, n) = (m.owner()[f], m.neighbour()[f]);
        let nh = m.face_area(f).normalize();
        let dp = nh.dot(&(m.face_centre(f) - m.cell_centre(o))).abs();
        let dn = nh.dot(&(m.cell_centre(n) - m.face_centre(f))).abs();
        let wo = dn / (dp + dn);
        cells[o] * wo + cells[n] * (1.0 - wo)
    }

    fn grad(&self, p: &Pre) -> Vec<Vec3> {
        (0..self.mesh.n_cells())
            .map(|c| {
                let mut g = Vec3::zeros();
                for &f in self.mesh.cell_faces(c) {
                    if self.skip(f) {
                        continue;
                    }
                    g += self.side(c, f).0 * self.face(f, &p.cells, &p.bnd);
                }
                g / self.mesh.cell_volume(c)
            })
            .collect()
    }

    fn jacobian(&self, v: &Vel) -> Vec<Matrix3<f64>> {
        (0..self.mesh.n_cells())
            .map(|c| {
                let mut j = Matrix3::zeros();
                for &f in self.mesh.cell_faces(c) {
                    if self.skip(f) {
                        continue;
                    }
                    let s = self.side(c, f).0;
                    let uf = self.face(f, &v.cells, &v.bnd);
                    for a in 0..3 {
                        for b in 0..3 {
                            j[(a, b)] += uf[a] * s[b];
                        }
                    }
                }
                j / self.mesh.cell_volume(c)
            })
            .collect()
    }

    /// Two-point Laplacian (the mesh is orthogonal).
    fn lap(&self, v: &Vel) -> Vec<Vec3> {
        let m = self.mesh;
        (0..m.n_cells())
            .map(|c| {
                let mut l = Vec3::zeros();
                for &f in m.cell_faces(c) {
                    if self.skip(f) {
                        continue;
                    }
                    let (s, other) = self.side(c, f);
                    let (x, val) = match other {
                        Some(n) => (m.cell_centre(n), v.cells[n]),
                        None => (m.face_centre(f), v.bnd[f - self.n_int]),
                    };
                    let d = x - m.cell_centre(c);
                    l += (val - v.cells[c]) * (s.norm_squared() / s.dot(&d));
                }
                l / m.cell_volume(c)
            })
            .collect()
    }

    /// Divergence of the interpolated face velocity.
    fn div(&self, v: &Vel) -> Vec<f64> {
        (0..self.mesh.n_cells())
            .map(|c| {
                let mut d = 0.0;
                for &f in self.mesh.cell_faces(c) {
                    if !self.skip(f) {
                        d += self.face(f, &v.cells, &v.bnd).dot(&self.side(c, f).0);
                    }
                }
                d / self.mesh.cell_volume(c)
            })
            .collect()
    }

    /// Convection of `a` by the stored flux of `b`.
    fn conv(&self, a: &Vel, b: &Vel) -> Vec<Vec3> {
        let m = self.mesh;
        (0..m.n_cells())
            .map(|c| {
                let mut s = Vec3::zeros();
                for &f in m.cell_faces(c) {
                    if self.skip(f) {
                        continue;
                    }
                    let sign = if m.owner()[f] == c { 1.0 } else { -1.0 };
                    s += self.face(f, &a.cells, &a.bnd) * (sign * b.flux[f]);
                }
                s / m.cell_volume(c)
            })
            .collect()
    }

    fn ip3(&self, a: &[Vec3], b: &[Vec3]) -> f64 {
        (0..a.len()).map(|c| self.mesh.cell_volume(c) * a[c].dot(&b[c])).sum()
    }

    fn ip1(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..a.len()).map(|c| self.mesh.cell_volume(c) * a[c] * b[c]).sum()
    }

    fn n_term(&self, p: &Pre, v: &Vel) -> f64 {
        let g = self.grad(p);
        let j = self.jacobian(v);
        self.ppe
            .iter()
            .map(|&f| {
                let o = self.mesh.owner()[f];
                let cu = Vec3::new(j[o][(2, 1)] - j[o][(1, 2)], j[o][(0, 2)] - j[o][(2, 0)], j[o][(1, 0)] - j[o][(0, 1)]);
                self.mesh.face_area(f).cross(&g[o]).dot(&cu)
            })
            .sum()
    }

    fn f_term(&self, p: &Pre, v: &Vel) -> f64 {
        self.ppe.iter().map(|&f| p.bnd[f - self.n_int] * v.flux[f]).sum()
    }
}

fn cols(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

fn check(name: &str, got: &DMatrix<f64>, want: &DMatrix<f64>) {
    assert_eq!(got.shape(), want.shape(), "{name} shape");
    let scale = want.amax().max(1.0);
    let err = (got - want).amax();
    assert!(err <= 1e-12 * scale, "{name}: max deviation {err:e} (scale {scale:e})");
}

/// Every projected operator and tensor entry against the loop oracle.
pub fn brute_force_equivalence(rank: usize, seed: u64) {
    let mesh = oracle_mesh();
    let b = bc(&mesh);
    let modes = random_modes(&mesh, [rank; 4], seed);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed + 99);
    let chi: Vec<f64> = (0..FieldLayout::velocity(&mesh).len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let k = OperatorConstants { rho: 1.0, mu: 1e-3, alpha: 0.01, dt: 1e-3 };
    let ops = assemble(&mesh, &b, &modes, Some(&chi), k).unwrap();

    let o = Oracle::new(&mesh, &b);
    let phi: Vec<Vel> = cols(&modes.v).iter().map(|c| o.vel(c)).collect();
    let phib: Vec<Vel> = cols(&modes.u).iter().map(|c| o.vel(c)).collect();
    let psi: Vec<Pre> = cols(&modes.q).iter().map(|c| o.pre(c)).collect();
    let psib: Vec<Pre> = cols(&modes.qbar).iter().map(|c| o.pre(c)).collect();
    let x = o.vel(&chi);

    let mat = |r: usize, c: usize, f: &dyn Fn(usize, usize) -> f64| DMatrix::from_fn(r, c, |i, j| f(i, j));
    let n = rank;
    for (tag, vv, pp, mm) in [("", &phi, &psi, &ops), ("bar", &phib, &psib, &ops)] {
        let (m_, a_, b_, p_, d_, n_) = if tag.is_empty() {
            (&mm.m, &mm.a, &mm.b, &mm.p, &mm.d, &mm.n)
        } else {
            (&mm.m_bar, &mm.a_bar, &mm.b_bar, &mm.p_bar, &mm.d_bar, &mm.n_bar)
        };
        check(&format!("M{tag}"), m_, &mat(n, n, &|i, j| o.ip3(&vv[i].cells, &vv[j].cells)));
        check(&format!("A{tag}"), a_, &mat(n, n, &|i, j| o.ip3(&vv[i].cells, &o.lap(&vv[j]))));
        check(&format!("B{tag}"), b_, &mat(n, n, &|i, j| o.ip3(&vv[i].cells, &o.grad(&pp[j]))));
        check(&format!("P{tag}"), p_, &mat(n, n, &|i, j| o.ip1(&pp[i].cells, &o.div(&vv[j]))));
        check(&format!("D{tag}"), d_, &mat(n, n, &|i, j| o.ip3(&o.grad(&pp[i]), &o.grad(&pp[j]))));
        check(&format!("N{tag}"), n_, &mat(n, n, &|i, j| o.n_term(&pp[i], &vv[j])));
    }
    check("Mtilde", &ops.m_tilde, &mat(n, n, &|i, j| o.ip3(&phi[i].cells, &phib[j].cells)));
    check("Fv", &ops.f_v, &mat(n, n, &|i, j| o.f_term(&psi[i], &phi[j])));
    check("Fu", &ops.f_u, &mat(n, n, &|i, j| o.f_term(&psi[i], &phib[j])));

    let mut gmax = 0.0f64;
    let mut jmax = 0.0f64;
    let mut gerr = 0.0f64;
    let mut jerr = 0.0f64;
    for jj in 0..n {
        for kk in 0..n {
            let c = o.conv(&phi[jj], &phib[kk]);
            for i in 0..n {
                let g = o.ip3(&phi[i].cells, &c);
                let jv = o.ip3(&o.grad(&psi[i]), &c);
                gmax = gmax.max(g.abs());
                jmax = jmax.max(jv.abs());
                gerr = gerr.max((ops.g.get(i, jj, kk) - g).abs());
                jerr = jerr.max((ops.j.get(i, jj, kk) - jv).abs());
            }
        }
    }
    assert!(gerr <= 1e-12 * gmax.max(1.0), "G: {gerr:e}");
    assert!(jerr <= 1e-12 * jmax.max(1.0), "J: {jerr:e}");

    let l = ops.lifting.as_ref().unwrap();
    let vec = |f: &dyn Fn(usize) -> f64| DMatrix::from_fn(n, 1, |i, _| f(i));
    let as_m = |v: &nalgebra::DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let cc = o.conv(&x, &x);
    check("lift.m", &as_m(&l.m_chi), &vec(&|i| o.ip3(&phi[i].cells, &x.cells)));
    check("lift.mbar", &as_m(&l.mbar_chi), &vec(&|i| o.ip3(&phib[i].cells, &x.cells)));
    check("lift.a", &as_m(&l.a_chi), &vec(&|i| o.ip3(&phi[i].cells, &o.lap(&x))));
    check("lift.abar", &as_m(&l.abar_chi), &vec(&|i| o.ip3(&phib[i].cells, &o.lap(&x))));
    check("lift.g_by", &l.g_by_chi, &mat(n, n, &|i, j| o.ip3(&phi[i].cells, &o.conv(&phi[j], &x))));
    check("lift.g_of", &l.g_of_chi, &mat(n, n, &|i, k| o.ip3(&phi[i].cells, &o.conv(&x, &phib[k]))));
    check("lift.g", &as_m(&l.g_chi), &vec(&|i| o.ip3(&phi[i].cells, &cc)));
    check("lift.j_by", &l.j_by_chi, &mat(n, n, &|i, j| o.ip3(&o.grad(&psi[i]), &o.conv(&phi[j], &x))));
    check("lift.j_of", &l.j_of_chi, &mat(n, n, &|i, k| o.ip3(&o.grad(&psi[i]), &o.conv(&x, &phib[k]))));
    check("lift.j", &as_m(&l.j_chi), &vec(&|i| o.ip3(&o.grad(&psi[i]), &cc)));
    check("lift.n", &as_m(&l.n_chi), &vec(&|i| o.n_term(&psi[i], &x)));
    check("lift.nbar", &as_m(&l.nbar_chi), &vec(&|i| o.n_term(&psib[i], &x)));
    check("lift.f", &as_m(&l.f_chi), &vec(&|i| o.f_term(&psi[i], &x)));
    check("lift.p", &as_m(&l.p_chi), &vec(&|i| o.ip1(&psi[i].cells, &o.div(&x))));
    check("lift.pbar", &as_m(&l.pbar_chi), &vec(&|i| o.ip1(&psib[i].cells, &o.div(&x))));
}

