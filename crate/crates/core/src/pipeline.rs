//! File-based pipeline: mesh -> fom -> pod -> offline -> online -> report,
//! plus the α-sweep. Every stage writes its artifacts into its own
//! directory together with `manifest.json` (config snapshot, input and
//! output checksums). Wall-clock figures go to `timing.json`, which is the
//! only file that differs between identical runs.
//!
//! A stage whose manifest matches the current config and inputs, and whose
//! outputs are intact, is skipped.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fom::{run_fom, FilterParams, FluidProperties, FomConfig};
use crate::io::{
    eigenvalue_csv, load_field, load_snapshot_set, save_field, save_snapshot_set, vtk_legacy, FieldFile, VtkData,
};
use crate::lifting::build_lifting;
use crate::mesh::{load_mesh, mesh_quality, save_mesh, Mesh};
use crate::metrics::series_stats;
use crate::pod::{FieldLayout, PodBasis, SnapshotMatrix, SnapshotSet};
use crate::rom_offline::{load_operators, save_operators, write_operators_csv, OperatorConstants};
use crate::rom_online::{run_rom, RomConfig, RomTrajectory};
use crate::workflow::{evaluate, fit_bases, Evaluation, TrainedRom};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const MANIFEST: &str = "manifest.json";
const TIMING: &str = "timing.json";
const FIELDS: [&str; 4] = ["v", "u", "q", "qbar"];

/// Stage directories. [`StageDirs::standard`] puts them all under one
/// workspace; the sweep rewires them.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDirs {
    pub mesh: PathBuf,
    /// Training snapshots.
    pub fom: PathBuf,
    /// Full-order run the reduced model is started from and compared with.
    pub reference: PathBuf,
    pub pod: PathBuf,
    pub offline: PathBuf,
    pub online: PathBuf,
    pub report: PathBuf,
}

impl StageDirs {
    pub fn standard(root: &Path) -> Self {
        StageDirs {
            mesh: root.join("mesh"),
            fom: root.join("fom"),
            reference: root.join("fom"),
            pod: root.join("pod"),
            offline: root.join("offline"),
            online: root.join("online"),
            report: root.join("report"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub config: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    /// Files written by the stage whose content is not reproducible.
    pub volatile: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn require(path: &Path, command: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingPrerequisite { artifact: path.to_path_buf(), command: command.into() })
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Input entry labelled `<stage>/<relative path>`.
fn input(stage: &str, dir: &Path, rel: &str) -> Result<FileEntry> {
    Ok(FileEntry { path: format!("{stage}/{rel}"), sha256: sha256_file(&dir.join(rel))? })
}

struct StageRun {
    dir: PathBuf,
    manifest: Manifest,
}

impl StageRun {
    /// `None` when an existing manifest already covers this config and these
    /// inputs and every recorded output is intact.
    fn begin(stage: &str, dir: &Path, cfg: &PipelineConfig, inputs: Vec<FileEntry>) -> Result<Option<StageRun>> {
        let manifest = Manifest {
            stage: stage.into(),
            version: VERSION.into(),
            config: cfg.to_text(),
            inputs,
            outputs: Vec::new(),
            volatile: Vec::new(),
        };
        if let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST)) {
            if let Ok(old) = serde_json::from_str::<Manifest>(&text) {
                let same = old.stage == manifest.stage
                    && old.version == manifest.version
                    && old.config == manifest.config
                    && old.inputs == manifest.inputs;
                let intact = old
                    .outputs
                    .iter()
                    .all(|o| sha256_file(&dir.join(&o.path)).map(|h| h == o.sha256).unwrap_or(false));
                if same && intact {
                    log::info!("{stage}: up to date in {}", dir.display());
                    return Ok(None);
                }
            }
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        // A failed run must not leave a manifest describing older outputs.
        let _ = std::fs::remove_file(dir.join(MANIFEST));
        Ok(Some(StageRun { dir: dir.to_path_buf(), manifest }))
    }

    fn output(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        write(&self.dir.join(rel), bytes)?;
        self.record(rel)
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        let sha256 = sha256_file(&self.dir.join(rel))?;
        self.manifest.outputs.push(FileEntry { path: rel.into(), sha256 });
        Ok(())
    }

    fn timing(&mut self, value: serde_json::Value) -> Result<()> {
        write(&self.dir.join(TIMING), serde_json::to_string_pretty(&value).expect("json") + "\n")?;
        self.manifest.volatile.push(TIMING.into());
        Ok(())
    }

    fn finish(mut self) -> Result<Outcome> {
        self.manifest.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let text = serde_json::to_string_pretty(&self.manifest).expect("json") + "\n";
        write(&self.dir.join(MANIFEST), text)?;
        log::info!("{}: wrote {} files to {}", self.manifest.stage, self.manifest.outputs.len(), self.dir.display());
        Ok(Outcome::Ran)
    }
}

fn mesh_file(dirs: &StageDirs) -> Result<PathBuf> {
    let p = dirs.mesh.join("mesh.txt");
    require(&p, "mesh")?;
    Ok(p)
}

fn snapshot_files(dir: &Path) -> Result<()> {
    for f in FIELDS {
        require(&dir.join("snapshots").join(format!("{f}.field")), "fom")?;
    }
    Ok(())
}

fn snapshot_inputs(dir: &Path) -> Result<Vec<FileEntry>> {
    FIELDS.iter().map(|f| input("fom", dir, &format!("snapshots/{f}.field"))).collect()
}

fn pod_files(cfg: &PipelineConfig) -> Vec<String> {
    let mut v: Vec<String> = FIELDS.iter().map(|f| format!("basis_{f}.field")).collect();
    if cfg.lifting {
        v.push("lifting.field".into());
    }
    v
}

pub fn stage_mesh(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    let inputs = match &cfg.mesh {
        crate::config::MeshSpec::File(p) => {
            require(p, "mesh (the configured mesh.path does not exist)")?;
            vec![FileEntry { path: p.display().to_string(), sha256: sha256_file(p)? }]
        }
        _ => Vec::new(),
    };
    let Some(mut run) = StageRun::begin("mesh", &dirs.mesh, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let mesh = cfg.mesh.build()?;
    let path = dirs.mesh.join("mesh.txt");
    save_mesh(&mesh, &path)?;
    run.record("mesh.txt")?;
    let q = mesh_quality(&mesh);
    let text = format!(
        "cells {}\nfaces {}\ndimension {}\nmax_non_orthogonality {:?}\navg_non_orthogonality {:?}\nmax_skewness {:?}\nmax_aspect_ratio {:?}\n",
        q.cell_count,
        mesh.n_faces(),
        mesh.dimension(),
        q.max_non_orthogonality,
        q.avg_non_orthogonality,
        q.max_skewness,
        q.max_aspect_ratio
    );
    run.output("quality.txt", text)?;
    run.finish()
}

fn fom_config(cfg: &PipelineConfig, mesh: &Mesh) -> Result<FomConfig> {
    Ok(FomConfig {
        props: FluidProperties::new(cfg.rho, cfg.mu)?,
        filter: FilterParams::new(cfg.alpha)?,
        time: cfg.time_setup(),
        model: cfg.model,
        boundary: cfg.boundary(mesh)?,
        controls: cfg.controls,
        drag: cfg.drag_params(mesh),
    })
}

/// Runs the full-order model into `out`.
fn fom_into(cfg: &PipelineConfig, dirs: &StageDirs, out: &Path) -> Result<Outcome> {
    let mesh_path = mesh_file(dirs)?;
    let inputs = vec![input("mesh", &dirs.mesh, "mesh.txt")?];
    let Some(mut run) = StageRun::begin("fom", out, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let mesh = load_mesh(&mesh_path)?;
    let fc = fom_config(cfg, &mesh)?;
    log::info!("fom: {} cells, {} steps, {}", mesh.n_cells(), fc.time.n_steps(), cfg.summary());
    let result = run_fom(&mesh, &fc)?.into_result()?;
    save_snapshot_set(&result.snapshots, &out.join("snapshots"))?;
    for f in FIELDS {
        run.record(&format!("snapshots/{f}.field"))?;
    }
    run.output("series.csv", result.series.to_csv())?;
    let mut steps = String::from("step,t,bdf_order,div_v,div_u,courant\n");
    for s in &result.steps {
        steps.push_str(&format!(
            "{},{:?},{},{:?},{:?},{:?}\n",
            s.step, s.time, s.bdf_order, s.divergence_v, s.divergence_u, s.courant
        ));
    }
    run.output("steps.csv", steps)?;
    run.timing(serde_json::json!({ "wall_seconds": result.wall_seconds, "steps": result.steps.len() }))?;
    log::info!("fom: {:.1} s, max divergence {:.3e}", result.wall_seconds, result.max_divergence());
    run.finish()
}

pub fn stage_fom(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    fom_into(cfg, dirs, &dirs.fom)
}

pub fn stage_pod(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    let mesh_path = mesh_file(dirs)?;
    snapshot_files(&dirs.fom)?;
    let mut inputs = vec![input("mesh", &dirs.mesh, "mesh.txt")?];
    inputs.extend(snapshot_inputs(&dirs.fom)?);
    let Some(mut run) = StageRun::begin("pod", &dirs.pod, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let mesh = load_mesh(&mesh_path)?;
    let set = load_snapshot_set(&dirs.fom.join("snapshots"))?;
    let lifting = if cfg.lifting {
        let bc = cfg.boundary(&mesh)?;
        let l = build_lifting(&mesh, &bc, &cfg.lifting_options())?;
        log::info!("pod: lifting after {} outer iterations", l.report.outer_iterations);
        let col = l.column(&mesh);
        let m = SnapshotMatrix::from_columns(FieldLayout::velocity(&mesh), std::slice::from_ref(&col));
        save_field(&FieldFile::bare(m), &dirs.pod.join("lifting.field"))?;
        run.record("lifting.field")?;
        Some(col)
    } else {
        None
    };
    let bases = fit_bases(&mesh, &set, &cfg.ranks, lifting.as_deref())?;
    for (name, b) in FIELDS.iter().zip(&bases) {
        let m = SnapshotMatrix { layout: b.layout, data: b.modes.clone() };
        save_field(&FieldFile::bare(m), &dirs.pod.join(format!("basis_{name}.field")))?;
        run.record(&format!("basis_{name}.field"))?;
        run.output(&format!("eigen_{name}.csv"), eigenvalue_csv(&b.eigenvalues, &b.cumulative))?;
        log::info!("pod: {name} rank {} energy {:.6}", b.rank(), b.cumulative[b.rank() - 1]);
    }
    run.finish()
}

fn load_basis(dir: &Path, name: &str) -> Result<PodBasis> {
    let f = load_field(&dir.join(format!("basis_{name}.field")))?;
    let csv_path = dir.join(format!("eigen_{name}.csv"));
    let mut eigenvalues = Vec::new();
    let mut cumulative = Vec::new();
    for (i, line) in read_text(&csv_path)?.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                file: csv_path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        };
        if cols.len() != 3 {
            return Err(Error::Parse { file: csv_path.display().to_string(), line: i + 1, message: "expected 3 columns".into() });
        }
        eigenvalues.push(parse(cols[1])?);
        cumulative.push(parse(cols[2])?);
    }
    Ok(PodBasis {
        layout: f.matrix.layout,
        modes: f.matrix.data,
        eigenvalues,
        // Eigenvectors of the correlation matrix are not persisted.
        eigenvectors: DMatrix::zeros(0, 0),
        clipped: Vec::new(),
        cumulative,
    })
}

fn load_lifting(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Option<Vec<f64>>> {
    if !cfg.lifting {
        return Ok(None);
    }
    let f = load_field(&dirs.pod.join("lifting.field"))?;
    Ok(Some(f.matrix.column(0).to_vec()))
}

fn pod_inputs(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Vec<FileEntry>> {
    let mut v = Vec::new();
    for f in pod_files(cfg) {
        require(&dirs.pod.join(&f), "pod")?;
        v.push(input("pod", &dirs.pod, &f)?);
        if let Some(name) = f.strip_prefix("basis_").and_then(|s| s.strip_suffix(".field")) {
            let e = format!("eigen_{name}.csv");
            require(&dirs.pod.join(&e), "pod")?;
            v.push(input("pod", &dirs.pod, &e)?);
        }
    }
    Ok(v)
}

pub fn stage_offline(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    let mesh_path = mesh_file(dirs)?;
    let mut inputs = vec![input("mesh", &dirs.mesh, "mesh.txt")?];
    inputs.extend(pod_inputs(cfg, dirs)?);
    let Some(mut run) = StageRun::begin("offline", &dirs.offline, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let mesh = load_mesh(&mesh_path)?;
    let bc = cfg.boundary(&mesh)?;
    let bases = [
        load_basis(&dirs.pod, "v")?,
        load_basis(&dirs.pod, "u")?,
        load_basis(&dirs.pod, "q")?,
        load_basis(&dirs.pod, "qbar")?,
    ];
    let start = std::time::Instant::now();
    let constants = OperatorConstants { rho: cfg.rho, mu: cfg.mu, alpha: cfg.alpha, dt: cfg.dt };
    let rom = TrainedRom::from_bases(&mesh, &bc, load_lifting(cfg, dirs)?, bases, constants)?;
    let seconds = start.elapsed().as_secs_f64();
    save_operators(&rom.ops, &dirs.offline.join("operators.lrop"))?;
    run.record("operators.lrop")?;
    write_operators_csv(&rom.ops, &dirs.offline.join("operators"))?;
    let mut names: Vec<String> = std::fs::read_dir(dirs.offline.join("operators"))
        .map_err(|e| Error::io(dirs.offline.join("operators"), e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for n in names {
        run.record(&format!("operators/{n}"))?;
    }
    run.timing(serde_json::json!({ "assembly_seconds": seconds }))?;
    run.finish()
}

/// Mesh, boundary data and the trained model from stage artifacts.
fn load_rom(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<(Mesh, TrainedRom)> {
    let mesh = load_mesh(&mesh_file(dirs)?)?;
    require(&dirs.offline.join("operators.lrop"), "offline")?;
    pod_inputs(cfg, dirs)?;
    let ops = load_operators(&dirs.offline.join("operators.lrop"))?;
    let [v, u, q, qbar] = [
        load_basis(&dirs.pod, "v")?,
        load_basis(&dirs.pod, "u")?,
        load_basis(&dirs.pod, "q")?,
        load_basis(&dirs.pod, "qbar")?,
    ];
    let r = ops.ranks;
    if [r.v, r.u, r.q, r.qbar] != [v.rank(), u.rank(), q.rank(), qbar.rank()] {
        return Err(Error::Dimension(format!(
            "operators have ranks {:?} but the bases have {:?}; rerun `offline`",
            [r.v, r.u, r.q, r.qbar],
            [v.rank(), u.rank(), q.rank(), qbar.rank()]
        )));
    }
    if ops.lifting.is_some() != cfg.lifting {
        return Err(Error::config_key("rom.lifting", "operators were assembled with a different lifting setting; rerun `pod` and `offline`"));
    }
    let rom = TrainedRom { lifting: load_lifting(cfg, dirs)?, v, u, q, qbar, ops };
    Ok((mesh, rom))
}

fn rom_config(cfg: &PipelineConfig) -> RomConfig {
    RomConfig {
        rho: cfg.rho,
        mu: cfg.mu,
        alpha: cfg.alpha,
        time: cfg.time_setup(),
        model: cfg.model,
        ppe_form: cfg.ppe_form,
        amplitude: cfg.time_factor,
    }
}

/// Reduced trajectory started from the projection of the first reference
/// snapshot.
fn integrate(cfg: &PipelineConfig, mesh: &Mesh, rom: &TrainedRom, reference: &SnapshotSet) -> Result<RomTrajectory> {
    if reference.n_snapshots() == 0 || (reference.times[0] - cfg.t0).abs() > 1e-12 * cfg.t0.abs().max(1.0) {
        return Err(Error::Dimension("the reference run does not start at time.t0".into()));
    }
    let init = rom.initial_state(mesh, reference, 0);
    run_rom(&rom.ops, &rom_config(cfg), init)
}

pub fn stage_online(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    let (mesh, rom) = load_rom(cfg, dirs)?;
    snapshot_files(&dirs.reference)?;
    let mut inputs = vec![input("mesh", &dirs.mesh, "mesh.txt")?];
    inputs.extend(pod_inputs(cfg, dirs)?);
    inputs.push(input("offline", &dirs.offline, "operators.lrop")?);
    inputs.push(input("fom", &dirs.reference, "snapshots/v.field")?);
    inputs.push(input("fom", &dirs.reference, "snapshots/u.field")?);
    let Some(mut run) = StageRun::begin("online", &dirs.online, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let reference = load_snapshot_set(&dirs.reference.join("snapshots"))?;
    let traj = integrate(cfg, &mesh, &rom, &reference)?;
    run.output("trajectory.csv", traj.to_csv())?;
    let mut diag = String::from("t,amplitude,divergence\n");
    for k in 0..traj.t.len() {
        diag.push_str(&format!("{:?},{:?},{:?}\n", traj.t[k], traj.amplitude[k], traj.divergence[k]));
    }
    run.output("diagnostics.csv", diag)?;
    if cfg.vtk {
        let vl = FieldLayout::velocity(&mesh);
        let n = mesh.n_cells();
        for k in 0..traj.t.len() {
            let [v, u, q, qb] = rom.reconstruct(&traj, k);
            let text = vtk_legacy(
                &mesh,
                &format!("reduced solution t = {:?}", traj.t[k]),
                &[
                    VtkData::Vector("v", &vl.velocity_cells(&v)),
                    VtkData::Vector("u", &vl.velocity_cells(&u)),
                    VtkData::Scalar("q", &q[..n]),
                    VtkData::Scalar("qbar", &qb[..n]),
                ],
            )?;
            run.output(&format!("fields/rom_{k:04}.vtk"), text)?;
        }
    }
    run.timing(serde_json::json!({ "wall_seconds": traj.wall_seconds, "steps": traj.steps }))?;
    log::info!("online: {} steps in {:.4} s", traj.steps, traj.wall_seconds);
    run.finish()
}

fn stats_line(name: &str, e: &[f64]) -> String {
    let tail = if e.len() > 1 { &e[1..] } else { e };
    let s = series_stats(tail);
    format!("{name:<8}{:>14.6e}{:>14.6e}{:>14.6e}\n", s.mean, s.min, s.max)
}

/// Plain-text summary of an evaluation.
pub fn summary_text(cfg: &PipelineConfig, rom: &TrainedRom, ev: &Evaluation) -> String {
    let r = rom.ops.ranks;
    let mut s = String::new();
    s.push_str("reduced order model report\n\n");
    s.push_str(&format!(
        "model {}  alpha {:?}  ppe boundary form {}  lifting {}\n",
        cfg.model.as_str(),
        cfg.alpha,
        cfg.ppe_form.as_str(),
        cfg.lifting
    ));
    s.push_str(&format!("ranks v {} u {} q {} qbar {}\n", r.v, r.u, r.q, r.qbar));
    let energy = |b: &PodBasis| b.cumulative.get(b.rank().saturating_sub(1)).copied().unwrap_or(f64::NAN);
    s.push_str(&format!(
        "retained energy v {:.6} u {:.6} q {:.6} qbar {:.6}\n",
        energy(&rom.v),
        energy(&rom.u),
        energy(&rom.q),
        energy(&rom.qbar)
    ));
    if let (Some(a), Some(b)) = (ev.t.first(), ev.t.last()) {
        s.push_str(&format!("samples {} (t = {a:?} .. {b:?}); statistics exclude the initial sample\n", ev.t.len()));
    }
    s.push_str(&format!("\n{:<8}{:>14}{:>14}{:>14}\n", "error", "average", "min", "max"));
    s.push_str(&stats_line("E_v", &ev.e_v));
    s.push_str(&stats_line("E_u", &ev.e_u));
    s.push_str(&stats_line("E_q", &ev.e_q));
    s.push_str(&stats_line("E_qbar", &ev.e_qbar));
    let kerr = |rom_k: &[f64], fom_k: &[f64]| -> Vec<f64> {
        rom_k.iter().zip(fom_k).map(|(r, f)| crate::metrics::kinetic_energy_error(*f, *r)).collect()
    };
    s.push_str(&stats_line("E_Kv", &kerr(&ev.kv, &ev.kv_ref)));
    s.push_str(&stats_line("E_Ku", &kerr(&ev.ku, &ev.ku_ref)));
    if ev.cd.iter().all(|x| x.is_finite()) && !ev.cd.is_empty() {
        s.push_str(&format!(
            "\n{:<6}{:>10}{:>14}{:>10}{:>14}{:>14}{:>10}\n",
            "coeff", "t_fom", "max_fom", "t_rom", "max_rom", "E_c", "E_t"
        ));
        for (name, p) in [("c_d", ev.drag_peaks()), ("c_l", ev.lift_peaks())] {
            s.push_str(&format!(
                "{name:<6}{:>10.3}{:>14.6e}{:>10.3}{:>14.6e}{:>14.6e}{:>10.3}\n",
                p.t_fom, p.max_fom, p.t_rom, p.max_rom, p.value_error, p.time_error
            ));
        }
    }
    s
}

fn evaluate_stage(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<(TrainedRom, Evaluation)> {
    let (mesh, rom) = load_rom(cfg, dirs)?;
    let text = read_text(&dirs.online.join("trajectory.csv"))?;
    let traj = RomTrajectory::from_csv(&text, rom.ops.ranks, &cfg.time_factor)?;
    let reference = load_snapshot_set(&dirs.reference.join("snapshots"))?;
    let bc = cfg.boundary(&mesh)?;
    let ev = evaluate(&mesh, &bc, &rom, &traj, &reference, cfg.rho, cfg.drag_params(&mesh).as_ref())?;
    Ok((rom, ev))
}

fn wall_seconds(dir: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(dir.join(TIMING)).ok()?;
    serde_json::from_str::<serde_json::Value>(&text).ok()?.get("wall_seconds")?.as_f64()
}

pub fn stage_report(cfg: &PipelineConfig, dirs: &StageDirs) -> Result<Outcome> {
    mesh_file(dirs)?;
    snapshot_files(&dirs.reference)?;
    require(&dirs.online.join("trajectory.csv"), "online")?;
    let mut inputs = vec![input("mesh", &dirs.mesh, "mesh.txt")?];
    inputs.extend(snapshot_inputs(&dirs.reference)?);
    inputs.extend(pod_inputs(cfg, dirs)?);
    inputs.push(input("offline", &dirs.offline, "operators.lrop")?);
    inputs.push(input("online", &dirs.online, "trajectory.csv")?);
    let Some(mut run) = StageRun::begin("report", &dirs.report, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let (rom, ev) = evaluate_stage(cfg, dirs)?;
    run.output("errors.csv", ev.to_csv())?;
    run.output("summary.txt", summary_text(cfg, &rom, &ev))?;
    let (fom_s, rom_s) = (wall_seconds(&dirs.reference), wall_seconds(&dirs.online));
    let speedup = match (fom_s, rom_s) {
        (Some(f), Some(r)) if r > 0.0 => Some(f / r),
        _ => None,
    };
    run.timing(serde_json::json!({ "fom_seconds": fom_s, "rom_seconds": rom_s, "speedup": speedup }))?;
    let [ev_, eu, eq, eqb] = ev.mean_errors();
    log::info!("report: average E_v {ev_:.3e} E_u {eu:.3e} E_q {eq:.3e} E_qbar {eqb:.3e}");
    run.finish()
}

/// Every stage from `mesh` to `report` in the standard layout.
pub fn run_all(cfg: &PipelineConfig, root: &Path) -> Result<()> {
    let dirs = StageDirs::standard(root);
    stage_mesh(cfg, &dirs)?;
    stage_fom(cfg, &dirs)?;
    stage_pod(cfg, &dirs)?;
    stage_offline(cfg, &dirs)?;
    stage_online(cfg, &dirs)?;
    stage_report(cfg, &dirs)?;
    Ok(())
}

/// Configuration of one sweep point: radius `alpha`, no sweep keys.
fn point_config(cfg: &PipelineConfig, alpha: f64) -> PipelineConfig {
    PipelineConfig { alpha, alphas: Vec::new(), alpha_test: None, ..cfg.clone() }
}

/// Runs `f(k)` for `k < n` on at most `jobs` threads; results in index order.
fn pool<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n {
                    break;
                }
                let r = f(k);
                slots.lock().expect("pool lock")[k] = Some(r);
            });
        }
    });
    slots.into_inner().expect("pool lock").into_iter().map(|r| r.expect("every job ran")).collect()
}

/// α-sweep under `<root>/sweep`: one full-order run per training radius
/// (and the held-out radius when it is not a training value) on a pool of
/// `jobs` threads, POD of the pooled snapshots, then the reduced model at
/// the held-out radius. `sweep.csv` lists the averaged errors of the
/// reduced model at every radius. Needs the `mesh` stage.
pub fn stage_sweep(cfg: &PipelineConfig, root: &Path, jobs: usize) -> Result<Outcome> {
    let base = StageDirs::standard(root);
    mesh_file(&base)?;
    let (train, test) = cfg.sweep_points();
    let sweep = root.join("sweep");
    let point_dir = |k: usize| sweep.join(format!("point_{k:02}")).join("fom");
    let test_idx = train.iter().position(|a| *a == test);
    let mut runs: Vec<(PipelineConfig, PathBuf)> =
        train.iter().enumerate().map(|(k, a)| (point_config(cfg, *a), point_dir(k))).collect();
    if test_idx.is_none() {
        runs.push((point_config(cfg, test), sweep.join("test").join("fom")));
    }
    log::info!("sweep: {} full-order runs on {} threads", runs.len(), jobs.max(1));
    let results = pool(runs.len(), jobs, |k| fom_into(&runs[k].0, &base, &runs[k].1));
    for r in results {
        r?;
    }

    let test_cfg = point_config(cfg, test);
    let dirs = StageDirs {
        mesh: base.mesh.clone(),
        fom: sweep.join("train").join("fom"),
        reference: match test_idx {
            Some(k) => point_dir(k),
            None => sweep.join("test").join("fom"),
        },
        pod: sweep.join("pod"),
        offline: sweep.join("offline"),
        online: sweep.join("online"),
        report: sweep.join("report"),
    };

    // Pooled training snapshots, in training order.
    let mut inputs = Vec::new();
    for k in 0..train.len() {
        for f in FIELDS {
            let rel = format!("snapshots/{f}.field");
            inputs.push(FileEntry {
                path: format!("point_{k:02}/fom/{rel}"),
                sha256: sha256_file(&point_dir(k).join(&rel))?,
            });
        }
    }
    if let Some(mut run) = StageRun::begin("pool", &dirs.fom, &test_cfg, inputs)? {
        let mut pooled: Option<SnapshotSet> = None;
        for k in 0..train.len() {
            let s = load_snapshot_set(&point_dir(k).join("snapshots"))?;
            pooled = Some(match pooled {
                None => s,
                Some(p) => p.concat(&s)?,
            });
        }
        save_snapshot_set(&pooled.expect("at least one training radius"), &dirs.fom.join("snapshots"))?;
        for f in FIELDS {
            run.record(&format!("snapshots/{f}.field"))?;
        }
        run.finish()?;
    }

    stage_pod(&test_cfg, &dirs)?;
    stage_offline(&test_cfg, &dirs)?;
    stage_online(&test_cfg, &dirs)?;
    stage_report(&test_cfg, &dirs)?;

    // Reduced model at every radius against its own full-order run.
    let mut inputs = vec![input("offline", &dirs.offline, "operators.lrop")?];
    for k in 0..train.len() {
        inputs.push(FileEntry {
            path: format!("point_{k:02}/fom/snapshots/v.field"),
            sha256: sha256_file(&point_dir(k).join("snapshots/v.field"))?,
        });
    }
    inputs.push(input("report", &dirs.report, "errors.csv")?);
    let Some(mut run) = StageRun::begin("sweep", &sweep, cfg, inputs)? else { return Ok(Outcome::UpToDate) };
    let (mesh, rom) = load_rom(&test_cfg, &dirs)?;
    let bc = test_cfg.boundary(&mesh)?;
    let mut table = String::from("alpha,role,Ev,Eu,Eq,Eqbar\n");
    let mut points: Vec<(f64, &str, PathBuf)> =
        train.iter().enumerate().map(|(k, a)| (*a, "train", point_dir(k))).collect();
    if test_idx.is_none() {
        points.push((test, "test", dirs.reference.clone()));
    }
    for (a, role, dir) in points {
        let pc = point_config(cfg, a);
        let reference = load_snapshot_set(&dir.join("snapshots"))?;
        let traj = integrate(&pc, &mesh, &rom, &reference)?;
        let ev = evaluate(&mesh, &bc, &rom, &traj, &reference, pc.rho, None)?;
        let [e_v, e_u, e_q, e_qb] = ev.mean_errors();
        let role = if Some(a) == Some(test) && role == "train" { "train+test" } else { role };
        table.push_str(&format!("{a:?},{role},{e_v:?},{e_u:?},{e_q:?},{e_qb:?}\n"));
    }
    run.output("sweep.csv", table)?;
    run.finish()
}
