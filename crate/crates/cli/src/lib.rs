//! Batch commands behind the `sdflow` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use sdflow::config::{Boundary, IcKind, RunConfig, RNG_ALGORITHM};
use sdflow::diagnostics::{volume, DiagnosticsRow};
use sdflow::equilibria::{predicted_radius, CylinderFit};
use sdflow::flow::{Integrator, RunOutcome};
use sdflow::linearization::spectrum_table;
use sdflow::neumann::{restrict, run_neumann_with, NeumannField};
use sdflow::verify::{run_all, GroupReport, VerifyOptions};
use sdflow::HeightField;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLOW: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Environment variable that replaces `output.dir`.
pub const OUT_ENV: &str = "SDFLOW_OUT";

#[derive(Clone, Debug, Serialize)]
pub struct RngInfo {
    pub algorithm: &'static str,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config: RunConfig,
    pub bc: Boundary,
    pub rng: Option<RngInfo>,
    /// Wall clock, seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    /// Flow event name, or `"Error"` when the run could not proceed.
    pub event: String,
    pub error: Option<String>,
    pub t_final: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_diagnostics: Option<DiagnosticsRow>,
    pub fit: Option<CylinderFit>,
    pub initial_volume: Option<f64>,
    pub predicted_rbar: Option<f64>,
    pub snapshots: Vec<String>,
}

/// What a finished `run` produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub exit_code: i32,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output directory after applying [`OUT_ENV`].
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

/// Write `x,theta,rho` rows with `theta` varying fastest.
fn write_snapshot(path: &Path, rows: usize, ntheta: usize, x: impl Fn(usize) -> f64, theta: impl Fn(usize) -> f64, v: impl Fn(usize, usize) -> f64) -> Result<()> {
    let mut out = String::with_capacity(rows * ntheta * 72 + 16);
    out.push_str("x,theta,rho\n");
    for j in 0..rows {
        for k in 0..ntheta {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x(j), theta(k), v(j, k)));
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

struct Snapshots {
    dir: PathBuf,
    every: usize,
    names: Vec<String>,
}

impl Snapshots {
    fn due(&self, step: usize) -> bool {
        step == 0 || (self.every > 0 && step % self.every == 0)
    }

    fn periodic(&mut self, rho: &HeightField) -> Result<()> {
        let g = rho.grid();
        let name = format!("snap_{}.csv", self.names.len());
        write_snapshot(&self.dir.join(&name), g.nx(), g.ntheta(), |j| g.x(j), |k| g.theta(k), |j, k| rho.get(j, k))?;
        self.names.push(name);
        Ok(())
    }

    fn half(&mut self, f: &NeumannField) -> Result<()> {
        let g = f.extended();
        let v = f.values();
        let name = format!("snap_{}.csv", self.names.len());
        write_snapshot(&self.dir.join(&name), f.nh() + 1, g.ntheta(), |j| g.x(j), |k| g.theta(k), |j, k| v[[j, k]])?;
        self.names.push(name);
        Ok(())
    }
}

fn write_series(dir: &Path, series: &[DiagnosticsRow]) -> Result<()> {
    let mut out = String::from(DiagnosticsRow::HEADER);
    out.push('\n');
    for row in series {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    fs::write(dir.join("series.csv"), out).context("writing series.csv")
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let mut f = fs::File::create(dir.join("manifest.json")).context("creating manifest.json")?;
    serde_json::to_writer_pretty(&mut f, m)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Run the flow described by `cfg` and write its artifacts into `dir`.
///
/// A manifest is written whatever the outcome. The exit code is
/// [`EXIT_OK`] for `Converged`/`MaxTime` and [`EXIT_FLOW`] otherwise.
pub fn cmd_run(cfg: &RunConfig, dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let start_time = now();
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        bc: cfg.bc,
        rng: (cfg.ic.kind == IcKind::Random).then_some(RngInfo { algorithm: RNG_ALGORITHM, seed: cfg.ic.seed }),
        start_time,
        end_time: start_time,
        event: "Error".into(),
        error: None,
        t_final: None,
        accepted_steps: 0,
        rejected_steps: 0,
        final_diagnostics: None,
        fit: None,
        initial_volume: None,
        predicted_rbar: None,
        snapshots: Vec::new(),
    };
    let mut snaps = Snapshots { dir: dir.to_path_buf(), every: cfg.output.snapshot_every, names: Vec::new() };
    let result = simulate(cfg, &mut manifest, &mut snaps);
    manifest.snapshots = snaps.names;
    manifest.end_time = now();
    let exit_code = match result {
        Ok(outcome) => {
            write_series(dir, &outcome.series)?;
            manifest.event = outcome.event.as_str().into();
            manifest.t_final = Some(outcome.final_state.t);
            manifest.accepted_steps = outcome.accepted;
            manifest.rejected_steps = outcome.rejected;
            manifest.final_diagnostics = outcome.series.last().copied();
            manifest.fit = outcome.fit;
            if outcome.event.is_failure() {
                EXIT_FLOW
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            manifest.error = Some(format!("{e:#}"));
            EXIT_FLOW
        }
    };
    write_manifest(dir, &manifest)?;
    Ok(RunReport { dir: dir.to_path_buf(), manifest, exit_code })
}

fn simulate(cfg: &RunConfig, manifest: &mut RunManifest, snaps: &mut Snapshots) -> Result<RunOutcome> {
    let grid = cfg.grid()?;
    let rho0 = cfg.initial_field(&grid)?;
    let v0 = volume(&rho0);
    manifest.initial_volume = Some(v0);
    manifest.predicted_rbar = predicted_radius(v0, grid.a()).ok();
    let params = cfg.flow_params();
    let mut io_error = None;
    let outcome = match cfg.bc {
        Boundary::Periodic => {
            let integrator = Integrator::new(&grid, params)?;
            let out = integrator.run_with(&rho0, |info| {
                if io_error.is_none() && snaps.due(info.step) {
                    io_error = snaps.periodic(info.rho).err();
                }
                Ok(())
            })?;
            if io_error.is_none() {
                io_error = snaps.periodic(&out.final_state.rho).err();
            }
            out
        }
        Boundary::Neumann => {
            let half0 = restrict(&rho0)?;
            let out = run_neumann_with(&half0, params, |s| {
                if io_error.is_none() && snaps.due(s.info.step) {
                    io_error = snaps.half(s.half).err();
                }
                Ok(())
            })?;
            if io_error.is_none() {
                io_error = snaps.half(&out.final_half).err();
            }
            manifest.initial_volume = Some(0.5 * v0);
            out.outcome
        }
    };
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(outcome)
}

/// Eigenvalue table as CSV: `m,n,lambda,multiplicity,flag`, sorted by `lambda` descending.
pub fn cmd_spectrum(r: f64, a: f64, mmax: u32, nmax: u32, out: &mut impl Write) -> Result<()> {
    let table = spectrum_table(r, a, mmax, nmax)?;
    writeln!(out, "m,n,lambda,multiplicity,flag")?;
    for e in table {
        // adding zero maps -0 to +0
        writeln!(out, "{},{},{:.16e},{},{}", e.m, e.n, e.lambda + 0.0, e.multiplicity, e.flag.as_str())?;
    }
    Ok(())
}

/// Print one PASS/FAIL line per check group; true when all pass.
pub fn cmd_verify(opts: VerifyOptions, out: &mut impl Write) -> Result<(bool, Vec<GroupReport>)> {
    let reports = run_all(opts);
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    let ok = reports.iter().all(|r| r.passed);
    writeln!(out, "{}", if ok { "all groups passed" } else { "verification failed" })?;
    Ok((ok, reports))
}

/// Read `path` (or a preset name prefixed with `preset:`) and apply
/// `key=value` overrides in order.
pub fn load_config(source: &str, overrides: &[(String, String)]) -> std::result::Result<RunConfig, String> {
    let text = match source.strip_prefix("preset:") {
        Some(name) => sdflow::config::preset(name).ok_or_else(|| format!("unknown preset {name:?}"))?.to_string(),
        None => fs::read_to_string(source).map_err(|e| format!("{source}: {e}"))?,
    };
    let mut cfg = RunConfig::parse(&text).map_err(|e| format!("{source}: {e}"))?;
    for (k, v) in overrides {
        cfg.set(k, v).map_err(|e| format!("override --{k}: {e}"))?;
    }
    cfg.validate().map_err(|e| format!("after overrides: {e}"))?;
    Ok(cfg)
}

/// Split `--key=value` arguments.
pub fn parse_overrides(args: &[String]) -> std::result::Result<Vec<(String, String)>, String> {
    args.iter()
        .map(|a| {
            let body = a.strip_prefix("--").ok_or_else(|| format!("expected --key=value, got {a:?}"))?;
            let (k, v) = body.split_once('=').ok_or_else(|| format!("expected --key=value, got {a:?}"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_split() {
        let args = vec!["--r=2".to_string(), "--ic.modes=1 0 1 cc".to_string()];
        let o = parse_overrides(&args).unwrap();
        assert_eq!(o[1], ("ic.modes".to_string(), "1 0 1 cc".to_string()));
        assert!(parse_overrides(&["r=2".to_string()]).is_err());
        assert!(parse_overrides(&["--r".to_string()]).is_err());
    }

    #[test]
    fn spectrum_rows() {
        let mut buf = Vec::new();
        cmd_spectrum(2.0, 2.0 * std::f64::consts::PI, 2, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,n,lambda,multiplicity,flag\n"));
        assert!(text.lines().any(|l| l.starts_with("1,0,-7.5000000000000000e-1,")));
    }

    #[test]
    fn presets_load_with_overrides() {
        let cfg = load_config("preset:stability", &[("t_end".into(), "1".into())]).unwrap();
        assert_eq!(cfg.t_end, 1.0);
        assert!(load_config("preset:nope", &[]).is_err());
        assert!(load_config("preset:stability", &[("nx".into(), "7".into())]).is_err());
    }

    #[test]
    fn manifest_written_on_early_failure() {
        let dir = std::env::temp_dir().join(format!("sdflow-lib-{}", std::process::id()));
        let mut cfg = RunConfig::default();
        cfg.nx = 16;
        cfg.ntheta = 16;
        cfg.ic.kind = IcKind::Modes;
        cfg.ic.amplitude = 2.0;
        cfg.ic.modes = RunConfig::parse("ic.kind = modes\nic.modes = 1 0 1 cc").unwrap().ic.modes;
        let report = cmd_run(&cfg, &dir).unwrap();
        assert_eq!(report.exit_code, EXIT_FLOW);
        assert_eq!(report.manifest.event, "Error");
        assert!(dir.join("manifest.json").exists());
        fs::remove_dir_all(&dir).ok();
    }
}
