//! Plain-text mesh format.
//!
//! ```text
//! # comment lines and trailing comments start with '#'
//! DIMENSION 2
//! CELLS <n>
//! POINTS <n>
//! <index> <x> <y> <z>
//! FACES <n>
//! <index> <point-count> <p0> <p1> ...
//! OWNER <n>            # one entry per face
//! <face> <cell>
//! NEIGHBOUR <n>        # one entry per internal face
//! <face> <cell>
//! PATCHES <n>
//! <name> <kind> <first-face> <face-count>
//! ```
//!
//! Tokens are whitespace separated; sections appear in the order above and
//! indices must be consecutive from zero. Coordinates are written in Rust's
//! shortest round-trip representation, so `load(save(m)) == m` bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, Patch, PatchKind, Vec3};
use crate::error::{Error, MeshError, Result};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# finite-volume mesh");
    let _ = writeln!(s, "DIMENSION {}", mesh.dimension());
    let _ = writeln!(s, "CELLS {}", mesh.n_cells());
    let _ = writeln!(s, "POINTS {}", mesh.points().len());
    for (i, p) in mesh.points().iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "FACES {}", mesh.n_faces());
    for (i, f) in mesh.faces().iter().enumerate() {
        let _ = write!(s, "{i} {}", f.len());
        for p in f {
            let _ = write!(s, " {p}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "OWNER {}", mesh.owner().len());
    for (i, o) in mesh.owner().iter().enumerate() {
        let _ = writeln!(s, "{i} {o}");
    }
    let _ = writeln!(s, "NEIGHBOUR {}", mesh.neighbour().len());
    for (i, n) in mesh.neighbour().iter().enumerate() {
        let _ = writeln!(s, "{i} {n}");
    }
    let _ = writeln!(s, "PATCHES {}", mesh.patches().len());
    for p in mesh.patches() {
        let _ = writeln!(s, "{} {} {} {}", p.name, p.kind, p.start, p.size);
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_mesh(&text)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with comments stripped, split into tokens.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let body = line.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }

    fn expect(&mut self) -> std::result::Result<(usize, Vec<&'a str>), MeshError> {
        let last = self.last;
        self.next_tokens().ok_or(MeshError::Parse {
            line: last + 1,
            message: "unexpected end of file".into(),
        })
    }

    fn header(&mut self, name: &str) -> std::result::Result<usize, MeshError> {
        let (line, t) = self.expect()?;
        if t.len() != 2 || t[0] != name {
            return Err(MeshError::Parse {
                line,
                message: format!("expected `{name} <count>`, found `{}`", t.join(" ")),
            });
        }
        num(line, t[1])
    }

    /// Record line starting with its consecutive index.
    fn record(&mut self, index: usize, min_len: usize) -> std::result::Result<(usize, Vec<&'a str>), MeshError> {
        let (line, t) = self.expect()?;
        if t.len() < min_len {
            return Err(MeshError::Parse {
                line,
                message: format!("expected at least {min_len} fields, found {}", t.len()),
            });
        }
        let got: usize = num(line, t[0])?;
        if got != index {
            return Err(MeshError::Parse {
                line,
                message: format!("expected index {index}, found {got}"),
            });
        }
        Ok((line, t))
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> std::result::Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("cannot parse `{tok}` as a number"),
    })
}

pub fn parse_mesh(text: &str) -> std::result::Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let dimension = lines.header("DIMENSION")?;
    let n_cells = lines.header("CELLS")?;

    let n_points = lines.header("POINTS")?;
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let (line, t) = lines.record(i, 4)?;
        points.push(Vec3::new(num(line, t[1])?, num(line, t[2])?, num(line, t[3])?));
    }

    let n_faces = lines.header("FACES")?;
    let mut faces = Vec::with_capacity(n_faces);
    for i in 0..n_faces {
        let (line, t) = lines.record(i, 2)?;
        let count: usize = num(line, t[1])?;
        if t.len() != count + 2 {
            return Err(MeshError::Parse {
                line,
                message: format!("face declares {count} points but lists {}", t.len() - 2),
            });
        }
        faces.push(t[2..].iter().map(|s| num(line, s)).collect::<std::result::Result<Vec<usize>, _>>()?);
    }

    let read_cells = |name: &str, lines: &mut Lines| -> std::result::Result<Vec<usize>, MeshError> {
        let n = lines.header(name)?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (line, t) = lines.record(i, 2)?;
            let c: usize = num(line, t[1])?;
            if c >= n_cells {
                return Err(MeshError::Validation {
                    check: "cell-index",
                    detail: format!("{name} entry for face {i} references cell {c} but the mesh has {n_cells} cells"),
                });
            }
            out.push(c);
        }
        Ok(out)
    };
    let owner = read_cells("OWNER", &mut lines)?;
    let neighbour = read_cells("NEIGHBOUR", &mut lines)?;

    let n_patches = lines.header("PATCHES")?;
    let mut patches = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let (line, t) = lines.expect()?;
        if t.len() != 4 {
            return Err(MeshError::Parse {
                line,
                message: "expected `<name> <kind> <first-face> <face-count>`".into(),
            });
        }
        let kind = PatchKind::parse(t[1]).ok_or_else(|| MeshError::Parse {
            line,
            message: format!("unknown patch kind `{}`", t[1]),
        })?;
        patches.push(Patch {
            name: t[0].to_string(),
            kind,
            start: num(line, t[2])?,
            size: num(line, t[3])?,
        });
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(MeshError::Parse { line, message: "trailing content after PATCHES".into() });
    }

    let mesh = Mesh::new(points, faces, owner, neighbour, patches, dimension)?;
    if mesh.n_cells() != n_cells {
        return Err(MeshError::Validation {
            check: "cell-count",
            detail: format!("CELLS declares {n_cells} but faces reference {}", mesh.n_cells()),
        });
    }
    Ok(mesh)
}
