//! Pipeline configuration: `[section]` headers followed by `key = value`
//! lines, `#` comments. Every key is optional; unknown keys are rejected.
//!
//! ```text
//! [mesh]
//! kind = benchmark2d        # benchmark2d | benchmark3d | channel | file
//! target_h = 0.02
//!
//! [physics]
//! alpha = 0.0032
//! model = ef
//! ```
//!
//! [`PipelineConfig::to_text`] writes every resolved value back in the same
//! syntax; reading that text gives the same configuration (up to the
//! workspace directory).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fom::{FlowBoundary, InflowProfile, Model, SolverControls, TimeFactor, TimeSetup};
use crate::lifting::LiftingOptions;
use crate::mesh::{
    channel_cylinder_lattice, generate_channel_cylinder_mesh, generate_channel_mesh, load_mesh,
    rectilinear_mesh, ChannelGeometry, Mesh, Vec3,
};
use crate::metrics::{CoefficientConvention, DragLiftParams};
use crate::pod::RankSelection;
use crate::rom_online::PpeBoundaryForm;
use crate::workflow::RankPlan;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: Option<usize>,
}

/// Raw `section.key -> value` map with source lines.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, Entry>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let at = |message: String| Error::Config { key: None, line: Some(line), message };
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(format!("unterminated section header `{s}`")))?
                    .trim();
                if name.is_empty() || name.contains(['.', '[', ']', ' ']) {
                    return Err(at(format!("invalid section name `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| at(format!("expected `key = value`, found `{s}`")))?;
            let k = k.trim();
            if k.is_empty() || k.contains([' ', '.']) {
                return Err(at(format!("invalid key `{k}`")));
            }
            let sec = section.as_deref().ok_or_else(|| at(format!("key `{k}` outside any [section]")))?;
            let key = format!("{sec}.{k}");
            if let Some(prev) = map.entries.get(&key) {
                return Err(Error::Config {
                    key: Some(key.clone()),
                    line: Some(line),
                    message: format!("duplicate key (first set on line {})", prev.line.unwrap_or(0)),
                });
            }
            map.entries.insert(key, Entry { value: v.trim().to_string(), line: Some(line) });
        }
        Ok(map)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{assignment}` is not of the form section.key=value")))?;
        let k = k.trim();
        match k.split_once('.') {
            Some((s, key)) if !s.is_empty() && !key.is_empty() && !key.contains('.') => {}
            _ => return Err(Error::config_key(k, "override keys take the form section.key")),
        }
        self.entries.insert(k.to_string(), Entry { value: v.trim().to_string(), line: None });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config { key: Some(key.into()), line: self.entries.get(key).and_then(|e| e.line), message: message.into() }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.err(key, format!("expected a number, found `{s}`"))),
            },
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| self.err(key, format!("expected a non-negative integer, found `{s}`"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(s) => Err(self.err(key, format!("expected true or false, found `{s}`"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(s) = self.get(key) else { return Ok(None) };
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|_| self.err(key, format!("cannot parse list entry `{}`", x.trim()))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "workspace.dir",
    "mesh.kind",
    "mesh.path",
    "mesh.target_h",
    "mesh.divisions",
    "mesh.length",
    "mesh.height",
    "mesh.depth",
    "physics.rho",
    "physics.mu",
    "physics.alpha",
    "physics.alphas",
    "physics.alpha_test",
    "physics.model",
    "time.t0",
    "time.t_end",
    "time.dt",
    "time.sample",
    "inflow.profile",
    "inflow.height",
    "inflow.width",
    "inflow.velocity",
    "inflow.time",
    "inflow.period",
    "inflow.value",
    "inflow.tau",
    "solver.momentum_rtol",
    "solver.pressure_rtol",
    "solver.max_iter",
    "solver.correctors",
    "solver.filter_tol",
    "solver.filter_max_outer",
    "pod.ranks",
    "pod.energy",
    "rom.lifting",
    "rom.lifting_alpha",
    "rom.ppe_boundary_form",
    "output.drag",
    "output.coefficient_convention",
    "output.u_ref",
    "output.l_ref",
    "output.depth_ref",
    "output.vtk",
];

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    /// Channel with cylinder at the 2D or 3D benchmark dimensions, either
    /// from a target spacing or an explicit lattice.
    Benchmark { three_d: bool, target_h: f64, divisions: Option<[usize; 3]> },
    /// Plain channel `[0,length] x [0,height] (x [0,depth])`.
    Channel { length: f64, height: f64, depth: Option<f64>, target_h: f64, divisions: Option<[usize; 3]> },
    File(PathBuf),
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        let lin = |extent: f64, n: usize| -> Vec<f64> { (0..=n).map(|i| extent * i as f64 / n as f64).collect() };
        Ok(match self {
            MeshSpec::Benchmark { three_d, target_h, divisions } => {
                let g = if *three_d { ChannelGeometry::benchmark_3d() } else { ChannelGeometry::benchmark_2d() };
                match divisions {
                    Some(n) => channel_cylinder_lattice(&g, *n)?,
                    None => generate_channel_cylinder_mesh(&g, *target_h)?,
                }
            }
            MeshSpec::Channel { length, height, depth, target_h, divisions } => match divisions {
                Some(n) => {
                    let zs = depth.map(|d| lin(d, n[2]));
                    rectilinear_mesh(&lin(*length, n[0]), &lin(*height, n[1]), zs.as_deref(), |_| false)?
                }
                None => generate_channel_mesh(*length, *height, *depth, *target_h)?,
            },
            MeshSpec::File(p) => load_mesh(p)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub workspace: PathBuf,
    pub mesh: MeshSpec,
    pub rho: f64,
    pub mu: f64,
    pub alpha: f64,
    /// Training radii of an α-sweep.
    pub alphas: Vec<f64>,
    /// Held-out radius of an α-sweep.
    pub alpha_test: Option<f64>,
    pub model: Model,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub sample: f64,
    pub profile: InflowProfile,
    pub time_factor: TimeFactor,
    pub controls: SolverControls,
    pub ranks: RankPlan,
    pub lifting: bool,
    pub lifting_alpha: f64,
    pub ppe_form: PpeBoundaryForm,
    pub drag: bool,
    pub convention: CoefficientConvention,
    pub u_ref: f64,
    pub l_ref: f64,
    pub depth_ref: f64,
    pub vtk: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::from_map(&ConfigMap::default()).expect("defaults are valid")
    }
}

fn fmt_list<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn rank_text(r: RankSelection) -> String {
    match r {
        RankSelection::Fixed(n) => n.to_string(),
        RankSelection::Energy(e) => format!("{e:?}"),
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut map = match path {
            Some(p) => ConfigMap::read(p)?,
            None => ConfigMap::default(),
        };
        for o in overrides {
            map.set(o)?;
        }
        Self::from_map(&map)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        for k in m.entries.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(m.err(k, "unknown key"));
            }
        }
        let divisions = match m.list::<usize>("mesh.divisions")? {
            None => None,
            Some(v) if (2..=3).contains(&v.len()) && !v.contains(&0) => {
                Some([v[0], v[1], v.get(2).copied().unwrap_or(1)])
            }
            Some(_) => return Err(m.err("mesh.divisions", "expected 2 or 3 positive integers")),
        };
        let target_h = m.f64_or("mesh.target_h", 0.02)?;
        let depth = match m.get("mesh.depth") {
            None => None,
            Some(_) => Some(m.f64_or("mesh.depth", 0.0)?),
        };
        let mesh = match m.get("mesh.kind").unwrap_or("benchmark2d") {
            "benchmark2d" => MeshSpec::Benchmark { three_d: false, target_h, divisions },
            "benchmark3d" => MeshSpec::Benchmark { three_d: true, target_h, divisions },
            "channel" => MeshSpec::Channel {
                length: m.f64_or("mesh.length", 2.2)?,
                height: m.f64_or("mesh.height", 0.41)?,
                depth,
                target_h,
                divisions,
            },
            "file" => MeshSpec::File(PathBuf::from(
                m.get("mesh.path").ok_or_else(|| m.err("mesh.kind", "kind = file needs mesh.path"))?,
            )),
            other => return Err(m.err("mesh.kind", format!("unknown mesh kind `{other}`"))),
        };

        let model_s = m.get("physics.model").unwrap_or("ef");
        let model = Model::parse(model_s).ok_or_else(|| m.err("physics.model", format!("unknown model `{model_s}`")))?;

        let height = m.f64_or("inflow.height", 0.41)?;
        let profile = match m.get("inflow.profile").unwrap_or("parabolic2d") {
            "parabolic2d" => InflowProfile::Parabolic2d { height },
            "parabolic3d" => InflowProfile::Parabolic3d { height, width: m.f64_or("inflow.width", 0.41)? },
            "plug" => {
                let v = m.list::<f64>("inflow.velocity")?.unwrap_or(vec![1.0, 0.0, 0.0]);
                if v.len() != 3 {
                    return Err(m.err("inflow.velocity", "expected three components"));
                }
                InflowProfile::Plug(Vec3::new(v[0], v[1], v[2]))
            }
            other => return Err(m.err("inflow.profile", format!("unknown profile `{other}`"))),
        };
        let time_factor = match m.get("inflow.time").unwrap_or("sine") {
            "sine" => TimeFactor::Sine { period: m.f64_or("inflow.period", 8.0)? },
            "constant" => TimeFactor::Constant(m.f64_or("inflow.value", 1.0)?),
            "rise-decay" => TimeFactor::RiseDecay { tau: m.f64_or("inflow.tau", 0.5)? },
            other => return Err(m.err("inflow.time", format!("unknown time factor `{other}`"))),
        };

        let d = SolverControls::default();
        let controls = SolverControls {
            momentum_rtol: m.f64_or("solver.momentum_rtol", d.momentum_rtol)?,
            pressure_rtol: m.f64_or("solver.pressure_rtol", d.pressure_rtol)?,
            max_iter: m.usize_or("solver.max_iter", d.max_iter)?,
            n_correctors: m.usize_or("solver.correctors", d.n_correctors)?,
            filter_tol: m.f64_or("solver.filter_tol", d.filter_tol)?,
            filter_max_outer: m.usize_or("solver.filter_max_outer", d.filter_max_outer)?,
            convection: d.convection,
        };

        let ranks = match (m.get("pod.ranks"), m.get("pod.energy")) {
            (Some(_), Some(_)) => return Err(m.err("pod.energy", "give either pod.ranks or pod.energy, not both")),
            (_, Some(_)) => {
                let e = m.f64_or("pod.energy", 0.0)?;
                if !(e > 0.0 && e <= 1.0) {
                    return Err(m.err("pod.energy", format!("energy threshold must lie in (0, 1], got {e}")));
                }
                let r = RankSelection::Energy(e);
                RankPlan { v: r, u: r, q: r, qbar: r }
            }
            _ => {
                let r = m.list::<usize>("pod.ranks")?.unwrap_or(vec![2, 2, 2, 1]);
                if r.len() != 4 || r.contains(&0) {
                    return Err(m.err("pod.ranks", "expected four positive ranks (v, u, q, qbar)"));
                }
                RankPlan::fixed(r[0], r[1], r[2], r[3])
            }
        };

        let form_s = m.get("rom.ppe_boundary_form").unwrap_or("consistent");
        let ppe_form = PpeBoundaryForm::parse(form_s)
            .ok_or_else(|| m.err("rom.ppe_boundary_form", format!("expected consistent or literal, found `{form_s}`")))?;
        let conv_s = m.get("output.coefficient_convention").unwrap_or("force-component");
        let convention = CoefficientConvention::parse(conv_s).ok_or_else(|| {
            m.err("output.coefficient_convention", format!("expected printed or force-component, found `{conv_s}`"))
        })?;

        let cfg = PipelineConfig {
            workspace: PathBuf::from(m.get("workspace.dir").unwrap_or("workspace")),
            mesh,
            rho: m.f64_or("physics.rho", 1.0)?,
            mu: m.f64_or("physics.mu", 1e-3)?,
            alpha: m.f64_or("physics.alpha", 0.0032)?,
            alphas: m.list::<f64>("physics.alphas")?.unwrap_or_default(),
            alpha_test: match m.get("physics.alpha_test") {
                None => None,
                Some(_) => Some(m.f64_or("physics.alpha_test", 0.0)?),
            },
            model,
            t0: m.f64_or("time.t0", 0.0)?,
            t_end: m.f64_or("time.t_end", 8.0)?,
            dt: m.f64_or("time.dt", 2e-3)?,
            sample: m.f64_or("time.sample", 0.1)?,
            profile,
            time_factor,
            controls,
            ranks,
            lifting: m.bool_or("rom.lifting", true)?,
            lifting_alpha: m.f64_or("rom.lifting_alpha", LiftingOptions::default().alpha)?,
            ppe_form,
            drag: m.bool_or("output.drag", true)?,
            convention,
            u_ref: m.f64_or("output.u_ref", 1.0)?,
            l_ref: m.f64_or("output.l_ref", 0.1)?,
            depth_ref: m.f64_or("output.depth_ref", 1.0)?,
            vtk: m.bool_or("output.vtk", false)?,
        };
        cfg.validate(m)?;
        Ok(cfg)
    }

    fn validate(&self, m: &ConfigMap) -> Result<()> {
        let positive = [
            ("physics.rho", self.rho),
            ("physics.mu", self.mu),
            ("time.dt", self.dt),
            ("time.sample", self.sample),
            ("mesh.target_h", match &self.mesh {
                MeshSpec::Benchmark { target_h, .. } | MeshSpec::Channel { target_h, .. } => *target_h,
                MeshSpec::File(_) => 1.0,
            }),
            ("output.u_ref", self.u_ref),
            ("output.l_ref", self.l_ref),
            ("output.depth_ref", self.depth_ref),
            ("rom.lifting_alpha", self.lifting_alpha),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(m.err(k, format!("must be positive, got {v}")));
            }
        }
        if !(self.alpha >= 0.0) {
            return Err(m.err("physics.alpha", "filter radius must be non-negative"));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0)) {
            return Err(m.err("physics.alphas", "filter radii must be non-negative"));
        }
        if let Some(a) = self.alpha_test {
            if !(a >= 0.0) {
                return Err(m.err("physics.alpha_test", "filter radius must be non-negative"));
            }
        }
        TimeSetup::new(self.t0, self.t_end, self.dt, self.sample).map_err(|e| match e {
            Error::Config { key: Some(k), message, .. } => {
                let key = if k == "sample_interval" { "time.sample".to_string() } else { format!("time.{k}") };
                m.err(&key, message)
            }
            other => other,
        })?;
        Ok(())
    }

    pub fn time_setup(&self) -> TimeSetup {
        TimeSetup::new(self.t0, self.t_end, self.dt, self.sample).expect("validated on load")
    }

    pub fn boundary(&self, mesh: &Mesh) -> Result<FlowBoundary> {
        let bc = FlowBoundary::standard(mesh, self.profile, self.time_factor);
        bc.check(mesh)?;
        Ok(bc)
    }

    /// Drag/lift parameters when requested and the mesh has a `cylinder` patch.
    pub fn drag_params(&self, mesh: &Mesh) -> Option<DragLiftParams> {
        if !self.drag || mesh.patch_by_name("cylinder").is_none() {
            return None;
        }
        Some(DragLiftParams {
            rho: self.rho,
            mu: self.mu,
            u_ref: self.u_ref,
            l_ref: self.l_ref,
            depth_ref: self.depth_ref,
            convention: self.convention,
            patch: "cylinder".into(),
        })
    }

    pub fn lifting_options(&self) -> LiftingOptions {
        LiftingOptions { alpha: self.lifting_alpha, ..LiftingOptions::default() }
    }

    /// Sweep training radii (the single `alpha` when no list is given) and
    /// the held-out radius (midpoint of the two smallest training values,
    /// or the only value).
    pub fn sweep_points(&self) -> (Vec<f64>, f64) {
        let train = if self.alphas.is_empty() { vec![self.alpha] } else { self.alphas.clone() };
        let test = self.alpha_test.unwrap_or_else(|| {
            let mut s = train.clone();
            s.sort_by(f64::total_cmp);
            if s.len() > 1 { 0.5 * (s[0] + s[1]) } else { s[0] }
        });
        (train, test)
    }

    /// Every resolved value in config syntax, except the workspace directory
    /// (a run location rather than a model setting).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut w = |line: String| {
            s.push_str(&line);
            s.push('\n');
        };
        w("[mesh]".into());
        let divs = |d: &Option<[usize; 3]>, w: &mut dyn FnMut(String)| {
            if let Some(n) = d {
                w(format!("divisions = {},{},{}", n[0], n[1], n[2]));
            }
        };
        match &self.mesh {
            MeshSpec::Benchmark { three_d, target_h, divisions } => {
                w(format!("kind = {}", if *three_d { "benchmark3d" } else { "benchmark2d" }));
                w(format!("target_h = {target_h:?}"));
                divs(divisions, &mut w);
            }
            MeshSpec::Channel { length, height, depth, target_h, divisions } => {
                w("kind = channel".into());
                w(format!("length = {length:?}"));
                w(format!("height = {height:?}"));
                if let Some(d) = depth {
                    w(format!("depth = {d:?}"));
                }
                w(format!("target_h = {target_h:?}"));
                divs(divisions, &mut w);
            }
            MeshSpec::File(p) => {
                w("kind = file".into());
                w(format!("path = {}", p.display()));
            }
        }
        w("\n[physics]".into());
        w(format!("rho = {:?}", self.rho));
        w(format!("mu = {:?}", self.mu));
        w(format!("alpha = {:?}", self.alpha));
        if !self.alphas.is_empty() {
            w(format!("alphas = {}", fmt_list(&self.alphas)));
        }
        if let Some(a) = self.alpha_test {
            w(format!("alpha_test = {a:?}"));
        }
        w(format!("model = {}", self.model.as_str()));
        w("\n[time]".into());
        w(format!("t0 = {:?}", self.t0));
        w(format!("t_end = {:?}", self.t_end));
        w(format!("dt = {:?}", self.dt));
        w(format!("sample = {:?}", self.sample));
        w("\n[inflow]".into());
        match self.profile {
            InflowProfile::Parabolic2d { height } => {
                w("profile = parabolic2d".into());
                w(format!("height = {height:?}"));
            }
            InflowProfile::Parabolic3d { height, width } => {
                w("profile = parabolic3d".into());
                w(format!("height = {height:?}"));
                w(format!("width = {width:?}"));
            }
            InflowProfile::Plug(v) => {
                w("profile = plug".into());
                w(format!("velocity = {:?},{:?},{:?}", v.x, v.y, v.z));
            }
        }
        match self.time_factor {
            TimeFactor::Sine { period } => {
                w("time = sine".into());
                w(format!("period = {period:?}"));
            }
            TimeFactor::Constant(c) => {
                w("time = constant".into());
                w(format!("value = {c:?}"));
            }
            TimeFactor::RiseDecay { tau } => {
                w("time = rise-decay".into());
                w(format!("tau = {tau:?}"));
            }
        }
        let c = &self.controls;
        w("\n[solver]".into());
        w(format!("momentum_rtol = {:?}", c.momentum_rtol));
        w(format!("pressure_rtol = {:?}", c.pressure_rtol));
        w(format!("max_iter = {}", c.max_iter));
        w(format!("correctors = {}", c.n_correctors));
        w(format!("filter_tol = {:?}", c.filter_tol));
        w(format!("filter_max_outer = {}", c.filter_max_outer));
        w("\n[pod]".into());
        let r = &self.ranks;
        match r.v {
            RankSelection::Energy(_) => w(format!("energy = {}", rank_text(r.v))),
            RankSelection::Fixed(_) => w(format!(
                "ranks = {},{},{},{}",
                rank_text(r.v),
                rank_text(r.u),
                rank_text(r.q),
                rank_text(r.qbar)
            )),
        }
        w("\n[rom]".into());
        w(format!("lifting = {}", self.lifting));
        w(format!("lifting_alpha = {:?}", self.lifting_alpha));
        w(format!("ppe_boundary_form = {}", self.ppe_form.as_str()));
        w("\n[output]".into());
        w(format!("drag = {}", self.drag));
        w(format!("coefficient_convention = {}", self.convention.as_str()));
        w(format!("u_ref = {:?}", self.u_ref));
        w(format!("l_ref = {:?}", self.l_ref));
        w(format!("depth_ref = {:?}", self.depth_ref));
        w(format!("vtk = {}", self.vtk));
        s
    }

    /// One-line description used in logs.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "model {} rho {} mu {} alpha {} dt {} T {}",
            self.model.as_str(),
            self.rho,
            self.mu,
            self.alpha,
            self.dt,
            self.t_end
        );
        s
    }
}
