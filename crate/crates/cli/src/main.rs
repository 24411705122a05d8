mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use h3plateau::curve::{build_gamma, summarize, winding_number};
use h3plateau::diagnostics::{beta_heights, solve_status, sweep_with, to_csv, SweepRow};
use h3plateau::domain::{build_domain, solve_en, DiskSolution};
use h3plateau::mesh::{TriMesh, Topology};
use h3plateau::topology::{alpha_word, is_trivial, kill_generator, Generator};
use h3plateau::tunnel::TunnelSolid;
use h3plateau::Error;
use serde_json::json;

use config::{parse_probe, RunConfig};

#[derive(Parser)]
#[command(name = "h3plateau", version, about = "Least-area disks in hyperbolic space with tunnel obstacles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the boundary curve Γₙ as a tagged polyline plus a JSON summary.
    Curve(NArgs),
    /// Build tunnel 1 and write its surface, annulus and summary.
    Tunnel(Common),
    /// Build the domain Ωₙ and write its boundary pieces.
    Domain(NArgs),
    /// Solve for the least-area disk Eₙ.
    Solve(NArgs),
    /// Check the loop word and the crossings of Eₙ with β.
    Verify(VerifyArgs),
    /// Solve n = 1..n_max and write the measurements as CSV.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct NArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    n: NArgs,
    /// Solve first instead of reading disk_n.obj.
    #[arg(long)]
    solve: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long = "n-max", value_parser = clap::value_parser!(u64).range(1..))]
    n_max: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    del1: Option<f64>,
    #[arg(long)]
    zd: Option<f64>,
    /// Boundary samples per unit length.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "grad-tol")]
    grad_tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    /// Probe ball as `x,y,z,r`.
    #[arg(long, value_parser = parse_probe, allow_hyphen_values = true)]
    probe: Option<h3plateau::diagnostics::Probe>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse(_) => 2,
            Error::Construction(_) => 3,
            Error::NeckPinch { .. } => 4,
            Error::Solver(_) | Error::Io(_) => 1,
        };
        Self::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
            c.apply_file(&text).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = self.eps1 {
            c.eps1 = v;
        }
        if let Some(v) = self.del1 {
            c.del1 = v;
        }
        if let Some(v) = self.zd {
            c.zd = Some(v);
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.grad_tol {
            c.solver.grad_tol = v;
        }
        if let Some(v) = self.max_iter {
            c.solver.max_iter = v;
        }
        if let Some(v) = self.margin {
            c.margin = Some(v);
        }
        if let Some(v) = self.probe {
            c.probe = v;
        }
        if let Some(v) = &self.out_dir {
            c.out_dir = v.clone();
        }
        Ok(c)
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(1, format!("{}: {e}", dir.join(name).display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn curve_json(cfg: &RunConfig, n: usize) -> Result<(String, serde_json::Value), Failure> {
    let params = cfg.curve(n);
    let gamma = build_gamma(&params)?;
    let summary = summarize(&gamma, &params)?;
    let v = json!({ "summary": summary, "params": params, "vertices": gamma.len() });
    Ok((gamma.to_text(), v))
}

fn cmd_curve(a: &NArgs) -> CmdResult {
    let cfg = a.common.resolve()?;
    let n = a.n as usize;
    let (text, v) = curve_json(&cfg, n)?;
    write_atomic(&cfg.out_dir, &format!("gamma_{n}.txt"), &text)?;
    write_atomic(&cfg.out_dir, &format!("gamma_{n}.json"), &to_json(&v))
}

fn build_tunnel(cfg: &RunConfig) -> Result<TunnelSolid, Failure> {
    Ok(TunnelSolid::build_first(&cfg.tunnel())?)
}

fn cmd_tunnel(common: &Common) -> CmdResult {
    let cfg = common.resolve()?;
    let t = build_tunnel(&cfg)?;
    let summary = t.summary(&cfg.solver);
    write_atomic(&cfg.out_dir, "tunnel_1.obj", &t.surface.to_obj())?;
    write_atomic(&cfg.out_dir, "annulus_1.obj", &t.annulus.to_obj())?;
    write_atomic(&cfg.out_dir, "tunnel_1.json", &to_json(&json!({ "summary": summary, "params": cfg.tunnel() })))
}

fn cmd_domain(a: &NArgs) -> CmdResult {
    let cfg = a.common.resolve()?;
    let n = a.n as usize;
    let params = cfg.domain(n);
    params.validate()?;
    let t = build_tunnel(&cfg)?;
    let d = build_domain(n, &params, &t)?;
    write_atomic(&cfg.out_dir, &format!("domain_{n}.obj"), &d.to_obj())?;
    write_atomic(&cfg.out_dir, &format!("domain_{n}.json"), &to_json(&json!({ "summary": d.summary(), "params": params })))
}

fn solve(cfg: &RunConfig, n: usize) -> Result<DiskSolution, Failure> {
    let params = cfg.domain(n);
    params.validate()?;
    let t = build_tunnel(cfg)?;
    Ok(solve_en(n, &params, &t, &cfg.solver)?)
}

/// Writes the disk and its report; fails with exit 5 unless the solve converged feasibly.
fn write_solution(cfg: &RunConfig, s: &DiskSolution) -> CmdResult {
    let n = s.domain.n;
    let status = solve_status(s.report.termination, s.report.feasibility, &cfg.solver);
    write_atomic(&cfg.out_dir, &format!("disk_{n}.obj"), &s.mesh.to_obj())?;
    let v = json!({
        "n": n,
        "status": status,
        "c_n": s.domain.c_n,
        "alpha_height": s.alpha.height(),
        "report": s.report,
        "domain": s.domain.summary(),
        "solver": cfg.solver,
    });
    write_atomic(&cfg.out_dir, &format!("report_{n}.json"), &to_json(&v))?;
    if status == "ok" {
        Ok(())
    } else {
        Err(Failure::new(5, format!("solve for n = {n} ended with status {status}")))
    }
}

fn cmd_solve(a: &NArgs) -> CmdResult {
    let cfg = a.common.resolve()?;
    let s = solve(&cfg, a.n as usize)?;
    write_solution(&cfg, &s)
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let cfg = a.n.common.resolve()?;
    let n = a.n.n as usize;
    let mesh = if a.solve {
        let s = solve(&cfg, n)?;
        write_solution(&cfg, &s)?;
        s.mesh
    } else {
        let path = cfg.out_dir.join(format!("disk_{n}.obj"));
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::new(6, format!("{}: {e}; run `solve --n {n}` or pass --solve", path.display())))?;
        TriMesh::from_obj(&text, Topology::Disk)?
    };
    let word = alpha_word(n)?;
    let nontrivial = !is_trivial(&word);
    let killed_trivial = is_trivial(&kill_generator(&word, Generator::Delta));
    let heights = beta_heights(&mesh);
    let gamma = build_gamma(&cfg.curve(n))?;
    let winding = winding_number(&gamma.vertices, [0.0, 0.0])?;
    let v = json!({
        "n": n,
        "word": word.to_string(),
        "word_nontrivial": nontrivial,
        "word_delta_killed_trivial": killed_trivial,
        "beta_count": heights.len(),
        "beta_heights": heights,
        "winding": winding,
    });
    write_atomic(&cfg.out_dir, &format!("verify_{n}.json"), &to_json(&v))?;
    if nontrivial && killed_trivial && !heights.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(7, format!("verification failed for n = {n}")))
    }
}

fn cmd_diagnose(a: &DiagnoseArgs) -> CmdResult {
    let cfg = a.common.resolve()?;
    let n_max = a.n_max as usize;
    let params = cfg.domain(n_max);
    params.validate()?;
    let first = TunnelSolid::build_first(&cfg.tunnel());
    let rows: Vec<SweepRow> =
        sweep_with(n_max, &params, &cfg.solver, &cfg.probe, first.as_ref().map_err(|e| e.to_string()), |_| {});
    write_atomic(&cfg.out_dir, "sweep.csv", &to_csv(&rows))?;
    let failed: Vec<usize> = rows.iter().filter(|r| !r.is_ok()).map(|r| r.n).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(7, format!("rows not ok: n = {failed:?}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Curve(a) => cmd_curve(a),
        Cmd::Tunnel(c) => cmd_tunnel(c),
        Cmd::Domain(a) => cmd_domain(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Diagnose(a) => cmd_diagnose(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
