use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::ScenarioConfig;
use super::scenario::{Rollout, ScenarioResult, AGENT_CONTROL_DIM, AGENT_STATE_DIM};
use crate::error::{Error, Result};

/// Seventeen significant digits: enough to round-trip every f64.
pub fn format_f64(v: f64) -> String {
    // -0.0 prints as "-0.0…e0"; write both zeros the same way
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Pretty JSON whose floats use [`format_f64`].
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct RolloutSummary {
    rfs_cost: f64,
    initial_distance: f64,
    final_distance: f64,
    distance_reduction: f64,
}

impl From<&Rollout> for RolloutSummary {
    fn from(r: &Rollout) -> Self {
        Self {
            rfs_cost: r.rfs_cost,
            initial_distance: r.initial_distance,
            final_distance: r.final_distance,
            distance_reduction: r.distance_reduction(),
        }
    }
}

#[derive(Serialize)]
struct NormalizationSummary {
    enabled: bool,
    cost_scale: f64,
    input_scale: f64,
}

#[derive(Serialize)]
struct Metadata {
    seed: u64,
    n_agents: usize,
    agent_state_dim: usize,
    agent_control_dim: usize,
    orbital_rate: f64,
    loop_mode: String,
    control_law: &'static str,
    static_gain_mode: String,
    static_gain_step: usize,
    static_gain_fallback: bool,
    lqr_q: &'static str,
    lqr_r: &'static str,
    lqr_b2: &'static str,
    j_definition: &'static str,
    j_c_source: &'static str,
    nnz_ratio_denominator: &'static str,
    normalization: NormalizationSummary,
    initial_state: Vec<f64>,
}

#[derive(Serialize)]
struct BaselineSummary {
    ilqr_nnz: usize,
    ilqr_j: Option<f64>,
    ilqr_iterations: usize,
    ilqr_converged: bool,
    ilqr_cost_history: Vec<f64>,
    nominal_cost: f64,
    j_c: Option<f64>,
    rollout: RolloutSummary,
}

#[derive(Serialize)]
struct FileSet {
    trajectory: String,
    gain: String,
    pattern: String,
    adjacency: String,
}

#[derive(Serialize)]
struct RecordSummary {
    gamma: f64,
    error: Option<String>,
    nnz: Option<usize>,
    nnz_ratio: Option<f64>,
    j: Option<f64>,
    j_ratio: Option<f64>,
    j_admm: Option<f64>,
    off_diagonal_edges: Option<usize>,
    admm_iterations: Option<usize>,
    admm_converged: Option<bool>,
    fmin_stalls: Option<usize>,
    polish_iterations: Option<usize>,
    polish_stalled: Option<bool>,
    rollout: Option<RolloutSummary>,
    files: Option<FileSet>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ScenarioConfig,
    metadata: Metadata,
    baseline: BaselineSummary,
    records: Vec<RecordSummary>,
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn file_set(index: usize) -> FileSet {
    let stem = format!("gamma_{index:02}");
    FileSet {
        trajectory: format!("{stem}_trajectory.csv"),
        gain: format!("{stem}_gain.csv"),
        pattern: format!("{stem}_pattern.txt"),
        adjacency: format!("{stem}_adjacency.csv"),
    }
}

/// The summary document written as `summary.json`.
pub fn summary_json(res: &ScenarioResult) -> Result<String> {
    let cfg = &res.setup.cfg;
    let b = &res.baseline;
    let metadata = Metadata {
        seed: cfg.rng_seed,
        n_agents: cfg.n_agents,
        agent_state_dim: AGENT_STATE_DIM,
        agent_control_dim: AGENT_CONTROL_DIM,
        orbital_rate: res.setup.orbital_rate,
        loop_mode: enum_name(&cfg.loop_mode),
        control_law: "u = u_ref - F (x_hat - x_ref) about the ILQR nominal trajectory",
        static_gain_mode: enum_name(&cfg.static_gain),
        static_gain_step: b.static_gain_step,
        static_gain_fallback: b.static_gain_fallback,
        lqr_q: "PSD-projected Hessian of the terminal mixture cost at the nominal terminal state",
        lqr_r: "2 * r_weight * I",
        lqr_b2: "b2_scale * I",
        j_definition: "trace(B2^T P B2), P the closed-loop observability grammian of Q + F^T R F",
        j_c_source: "polished gain of the gamma = 0 sweep entry",
        nnz_ratio_denominator: "nnz of the ILQR static gain",
        normalization: NormalizationSummary {
            enabled: res.normalization.enabled,
            cost_scale: res.normalization.cost_scale,
            input_scale: res.normalization.input_scale,
        },
        initial_state: res.setup.x0.iter().copied().collect(),
    };
    let baseline = BaselineSummary {
        ilqr_nnz: b.ilqr_nnz,
        ilqr_j: b.ilqr_j,
        ilqr_iterations: b.ilqr_iterations,
        ilqr_converged: b.ilqr_converged,
        ilqr_cost_history: b.ilqr_cost_history.clone(),
        nominal_cost: res.nominal.cost,
        j_c: b.j_c,
        rollout: (&b.rollout).into(),
    };
    let records = res
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| match &e.record {
            Ok(r) => RecordSummary {
                gamma: e.gamma,
                error: None,
                nnz: Some(r.nnz),
                nnz_ratio: Some(r.nnz_ratio),
                j: Some(r.j),
                j_ratio: r.j_ratio,
                j_admm: Some(r.j_admm),
                off_diagonal_edges: Some(r.edges),
                admm_iterations: Some(r.admm_iterations),
                admm_converged: Some(r.admm_converged),
                fmin_stalls: Some(r.fmin_stalls),
                polish_iterations: Some(r.polish_iterations),
                polish_stalled: Some(r.polish_stalled),
                rollout: Some((&r.rollout).into()),
                files: Some(file_set(i)),
            },
            Err(msg) => RecordSummary {
                gamma: e.gamma,
                error: Some(msg.clone()),
                nnz: None,
                nnz_ratio: None,
                j: None,
                j_ratio: None,
                j_admm: None,
                off_diagonal_edges: None,
                admm_iterations: None,
                admm_converged: None,
                fmin_stalls: None,
                polish_iterations: None,
                polish_stalled: None,
                rollout: None,
                files: None,
            },
        })
        .collect();
    to_json(&Summary { config: cfg, metadata, baseline, records })
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn pattern_txt(f: &DMatrix<f64>, pattern: &DMatrix<bool>) -> String {
    let mut s = String::new();
    for i in 0..f.nrows() {
        for j in 0..f.ncols() {
            if pattern[(i, j)] {
                let _ = writeln!(s, "{i} {j} {}", format_f64(f[(i, j)]));
            }
        }
    }
    s
}

fn adjacency_csv(adj: &DMatrix<bool>) -> String {
    let mut s = String::new();
    for i in 0..adj.nrows() {
        let row: Vec<&str> = (0..adj.ncols()).map(|j| if adj[(i, j)] { "1" } else { "0" }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn trajectory_csv(r: &Rollout, n_agents: usize) -> String {
    let mut s = String::from("step,agent,x,y,z,vx,vy,vz,ux,uy,uz\n");
    for (k, x) in r.states.iter().enumerate() {
        for a in 0..n_agents {
            let _ = write!(s, "{k},{a}");
            for i in 0..AGENT_STATE_DIM {
                let _ = write!(s, ",{}", format_f64(x[a * AGENT_STATE_DIM + i]));
            }
            match r.controls.get(k) {
                Some(u) => {
                    for i in 0..AGENT_CONTROL_DIM {
                        let _ = write!(s, ",{}", format_f64(u[a * AGENT_CONTROL_DIM + i]));
                    }
                }
                None => s.push_str(",,,"),
            }
            s.push('\n');
        }
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Write the summary and per-γ trajectory, gain, pattern and adjacency files.
pub fn export_results(res: &ScenarioResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = vec![write(out_dir, "summary.json", &summary_json(res)?)?];
    for (i, e) in res.entries.iter().enumerate() {
        let Ok(r) = &e.record else {
            continue;
        };
        let files = file_set(i);
        written.push(write(out_dir, &files.trajectory, &trajectory_csv(&r.rollout, res.setup.cfg.n_agents))?);
        written.push(write(out_dir, &files.gain, &matrix_csv(&r.gain.f))?);
        written.push(write(out_dir, &files.pattern, &pattern_txt(&r.gain.f, &r.gain.pattern))?);
        written.push(write(out_dir, &files.adjacency, &adjacency_csv(&r.adjacency))?);
    }
    Ok(written)
}

/// Parse a dense numeric CSV (no header) written by [`export_results`].
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Io(format!("{}: `{t}`: {e}", path.display()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Io(format!("{}: ragged rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
