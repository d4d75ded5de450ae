//! Binary operator archive: magic, manifest length, JSON manifest, then the
//! arrays as little-endian `f64`, row-major. Each array carries a sha256 of
//! its bytes, checked on load.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LiftingTerms, OperatorConstants, Ranks, ReducedOperators, Tensor3};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LRROMOP1";

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    ranks: [usize; 4],
    rho: f64,
    mu: f64,
    alpha: f64,
    dt: f64,
    lifting: bool,
    arrays: Vec<ArrayEntry>,
}

fn mat(name: &str, m: &DMatrix<f64>) -> (String, Vec<usize>, Vec<f64>) {
    let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
    (name.into(), vec![m.nrows(), m.ncols()], data)
}

fn vector(name: &str, v: &DVector<f64>) -> (String, Vec<usize>, Vec<f64>) {
    (name.into(), vec![v.len()], v.as_slice().to_vec())
}

fn tensor(name: &str, t: &Tensor3) -> (String, Vec<usize>, Vec<f64>) {
    (name.into(), t.dims.to_vec(), t.data.clone())
}

fn arrays(ops: &ReducedOperators) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out = vec![
        mat("M", &ops.m),
        mat("Mtilde", &ops.m_tilde),
        mat("A", &ops.a),
        mat("B", &ops.b),
        mat("P", &ops.p),
        tensor("G", &ops.g),
        mat("D", &ops.d),
        mat("N", &ops.n),
        mat("Fv", &ops.f_v),
        mat("Fu", &ops.f_u),
        tensor("J", &ops.j),
        mat("Mbar", &ops.m_bar),
        mat("Abar", &ops.a_bar),
        mat("Bbar", &ops.b_bar),
        mat("Pbar", &ops.p_bar),
        mat("Dbar", &ops.d_bar),
        mat("Nbar", &ops.n_bar),
    ];
    if let Some(l) = &ops.lifting {
        out.extend([
            vector("lift.m", &l.m_chi),
            vector("lift.mbar", &l.mbar_chi),
            vector("lift.a", &l.a_chi),
            vector("lift.abar", &l.abar_chi),
            mat("lift.g_by", &l.g_by_chi),
            mat("lift.g_of", &l.g_of_chi),
            vector("lift.g", &l.g_chi),
            mat("lift.j_by", &l.j_by_chi),
            mat("lift.j_of", &l.j_of_chi),
            vector("lift.j", &l.j_chi),
            vector("lift.n", &l.n_chi),
            vector("lift.nbar", &l.nbar_chi),
            vector("lift.f", &l.f_chi),
            vector("lift.p", &l.p_chi),
            vector("lift.pbar", &l.pbar_chi),
        ]);
    }
    out
}

fn bytes_of(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn encode_operators(ops: &ReducedOperators) -> Result<Vec<u8>> {
    ops.check()?;
    let mut entries = Vec::new();
    let mut payload = Vec::new();
    for (name, shape, data) in arrays(ops) {
        let bytes = bytes_of(&data);
        entries.push(ArrayEntry { name, shape, offset: payload.len(), sha256: hex::encode(Sha256::digest(&bytes)) });
        payload.extend_from_slice(&bytes);
    }
    let r = ops.ranks;
    let c = ops.constants;
    let manifest = Manifest {
        format: 1,
        ranks: [r.v, r.u, r.q, r.qbar],
        rho: c.rho,
        mu: c.mu,
        alpha: c.alpha,
        dt: c.dt,
        lifting: ops.lifting.is_some(),
        arrays: entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(16 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn save_operators(ops: &ReducedOperators, path: &Path) -> Result<()> {
    let bytes = encode_operators(ops)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    path: &'a Path,
    manifest: Manifest,
    payload: &'a [u8],
}

impl Reader<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Archive { path: self.path.to_path_buf(), message: message.into() }
    }

    fn raw(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let e = self
            .manifest
            .arrays
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| self.err(format!("array `{name}` missing")))?;
        if e.shape != shape {
            return Err(self.err(format!("array `{name}` has shape {:?}, expected {shape:?}", e.shape)));
        }
        let len = 8 * shape.iter().product::<usize>();
        let bytes = self
            .payload
            .get(e.offset..e.offset + len)
            .ok_or_else(|| self.err(format!("array `{name}` runs past the end of the file")))?;
        if hex::encode(Sha256::digest(bytes)) != e.sha256 {
            return Err(self.err(format!("checksum mismatch for `{name}`")));
        }
        Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    }

    fn mat(&self, name: &str, r: usize, c: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(r, c, &self.raw(name, &[r, c])?))
    }

    fn vector(&self, name: &str, n: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.raw(name, &[n])?))
    }

    fn tensor(&self, name: &str, dims: [usize; 3]) -> Result<Tensor3> {
        Ok(Tensor3 { dims, data: self.raw(name, &dims)? })
    }
}

pub fn decode_operators(bytes: &[u8], path: &Path) -> Result<ReducedOperators> {
    let bad = |m: &str| Error::Archive { path: path.to_path_buf(), message: m.into() };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not an operator archive"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let json = bytes.get(16..16 + n).ok_or_else(|| bad("truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(json).map_err(|e| bad(&format!("manifest: {e}")))?;
    if manifest.format != 1 {
        return Err(bad(&format!("unsupported format {}", manifest.format)));
    }
    let rd = Reader { path, payload: &bytes[16 + n..], manifest };
    let [v, u, q, qb] = rd.manifest.ranks;
    let lifting = if rd.manifest.lifting {
        Some(LiftingTerms {
            m_chi: rd.vector("lift.m", v)?,
            mbar_chi: rd.vector("lift.mbar", u)?,
            a_chi: rd.vector("lift.a", v)?,
            abar_chi: rd.vector("lift.abar", u)?,
            g_by_chi: rd.mat("lift.g_by", v, v)?,
            g_of_chi: rd.mat("lift.g_of", v, u)?,
            g_chi: rd.vector("lift.g", v)?,
            j_by_chi: rd.mat("lift.j_by", q, v)?,
            j_of_chi: rd.mat("lift.j_of", q, u)?,
            j_chi: rd.vector("lift.j", q)?,
            n_chi: rd.vector("lift.n", q)?,
            nbar_chi: rd.vector("lift.nbar", qb)?,
            f_chi: rd.vector("lift.f", q)?,
            p_chi: rd.vector("lift.p", q)?,
            pbar_chi: rd.vector("lift.pbar", qb)?,
        })
    } else {
        None
    };
    let m = &rd.manifest;
    let ops = ReducedOperators {
        ranks: Ranks { v, u, q, qbar: qb },
        constants: OperatorConstants { rho: m.rho, mu: m.mu, alpha: m.alpha, dt: m.dt },
        m: rd.mat("M", v, v)?,
        m_tilde: rd.mat("Mtilde", v, u)?,
        a: rd.mat("A", v, v)?,
        b: rd.mat("B", v, q)?,
        p: rd.mat("P", q, v)?,
        g: rd.tensor("G", [v, v, u])?,
        d: rd.mat("D", q, q)?,
        n: rd.mat("N", q, v)?,
        f_v: rd.mat("Fv", q, v)?,
        f_u: rd.mat("Fu", q, u)?,
        j: rd.tensor("J", [q, v, u])?,
        m_bar: rd.mat("Mbar", u, u)?,
        a_bar: rd.mat("Abar", u, u)?,
        b_bar: rd.mat("Bbar", u, qb)?,
        p_bar: rd.mat("Pbar", qb, u)?,
        d_bar: rd.mat("Dbar", qb, qb)?,
        n_bar: rd.mat("Nbar", qb, u)?,
        lifting,
    };
    ops.check()?;
    Ok(ops)
}

pub fn load_operators(path: &Path) -> Result<ReducedOperators> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_operators(&bytes, path)
}

/// One CSV per array in `dir` (`name.csv`, rows as lines; tensors as
/// `i,j,k,value`).
pub fn write_operators_csv(ops: &ReducedOperators, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, shape, data) in arrays(ops) {
        let mut s = String::new();
        match shape.len() {
            1 => data.iter().for_each(|x| s.push_str(&format!("{x:e}\n"))),
            2 => {
                for row in data.chunks(shape[1].max(1)) {
                    let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
            }
            _ => {
                s.push_str("i,j,k,value\n");
                for (idx, x) in data.iter().enumerate() {
                    let k = idx % shape[2];
                    let j = (idx / shape[2]) % shape[1];
                    let i = idx / (shape[1] * shape[2]);
                    s.push_str(&format!("{i},{j},{k},{x:e}\n"));
                }
            }
        }
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
