//! The four run modes. Each computes everything in memory first and only
//! then writes its files, so a failed run leaves nothing behind.

use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use trapnoise::analysis::{
    chain_mode_sweep, classify_orientation, find_crossover, fit_slope, prepare_grid, ratio_sweep, scaling_exponent,
    scaling_sweep, ChainSetup, PairSetup, ScalingSetup, SweepVariable,
};
use trapnoise::noise::{noise_matrix, IonConfiguration};
use trapnoise::oracle::EnsembleSampler;
use trapnoise::{Axis, DipoleOrientation};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Scaling,
    Chain,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Scaling => "scaling",
            Command::Chain => "chain",
            Command::OracleCheck => "oracle-check",
        }
    }
}

/// Files written by a run and whether its checks passed (always true except
/// for a failed oracle verdict).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: Value,
}

struct Pending {
    files: Vec<(String, String)>,
    passed: bool,
    results: Value,
    grid: Value,
}

/// Run `command` with a resolved config and write its outputs under `out_dir`.
pub fn run(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let pending = match command {
        Command::Sweep => sweep(config)?,
        Command::Scaling => scaling(config)?,
        Command::Chain => chain(config)?,
        Command::OracleCheck => oracle(config)?,
    };
    let prefix = &config.output.prefix;
    let sidecar_name = format!("{prefix}.json");
    let mut names: Vec<String> = pending.files.iter().map(|(n, _)| n.clone()).collect();
    names.push(sidecar_name.clone());
    let sidecar = json!({
        "tool": "trapnoise",
        "version": trapnoise::VERSION,
        "command": command.name(),
        "config": config,
        "grid": pending.grid,
        "files": names,
        "passed": pending.passed,
        "results": pending.results,
    });
    let mut files = pending.files;
    files.push((sidecar_name, serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n"));

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(Outcome { files: written, passed: pending.passed, summary: sidecar })
}

fn curve_name(prefix: &str, axis: Axis, u: &DipoleOrientation) -> String {
    format!("{prefix}_{axis}_mu{}", u.label())
}

fn csv<R: AsRef<[f64]>>(header: &[String], rows: impl IntoIterator<Item = R>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn grid_info(config: &RunConfig) -> Result<Value, CliError> {
    let geometry = config.geometry()?;
    let grid = prepare_grid(&geometry, config.resolution(), &config.kernel)?;
    Ok(json!({
        "resolution": config.resolution(),
        "nodes": grid.len(),
        "total_weight": grid.total_weight(),
        "lattice": grid.lattice().is_some(),
    }))
}

fn pair_setup(config: &RunConfig, axis: Axis, u: DipoleOrientation) -> Result<PairSetup, CliError> {
    Ok(PairSetup::new(config.geometry()?, axis, u, config.ions.height)
        .with_kernel(config.kernel)
        .with_source(config.dipoles.source)
        .with_resolution(config.resolution())
        .with_ion_z(config.ions.z))
}

fn sweep(config: &RunConfig) -> Result<Pending, CliError> {
    let s = &config.sweep;
    let d = config.ions.height;
    let orientations = config.orientations()?;
    let mut files = Vec::new();
    let mut curves = Vec::new();
    let mut flags: Vec<(Axis, String, bool)> = Vec::new();
    for &axis in &config.ions.axes {
        for u in &orientations {
            let setup = pair_setup(config, axis, *u)?;
            let result = ratio_sweep(&setup, s.variable, (s.range[0], s.range[1]), s.points, s.separation)?;
            let name = curve_name(&config.output.prefix, axis, u);
            let header = ["variable", "S_self", "S_cross", "ratio"].map(String::from);
            let body = csv(&header, result.rows.iter().map(|r| [r.variable, r.s_self, r.s_cross, r.ratio]));
            files.push((format!("{name}.csv"), body));
            let crossover = if s.variable == SweepVariable::IonSeparation && s.crossover {
                let r = find_crossover(&setup, (s.bracket[0] * d, s.bracket[1] * d))?;
                flags.push((axis, u.label(), r.found));
                json!({
                    "found": r.found,
                    "l_over_d": r.location.map(|l| l / d),
                    "residual": r.residual,
                    "sign_changes": r.sign_changes,
                    "bracket_l_over_d": s.bracket,
                })
            } else {
                Value::Null
            };
            curves.push(json!({
                "file": format!("{name}.csv"),
                "axis": axis,
                "orientation": u.components(),
                "min_ratio": result.min_ratio(),
                "sign_changes_on_sweep": result.sign_changes(),
                "crossover": crossover,
            }));
        }
    }
    let mut classification = Vec::new();
    for u in &orientations {
        let flag = |a: Axis| flags.iter().find(|(ax, l, _)| *ax == a && *l == u.label()).map(|f| f.2);
        if let (Some(y), Some(z)) = (flag(Axis::Y), flag(Axis::Z)) {
            classification.push(json!({
                "orientation": u.components(),
                "y_crossover": y,
                "z_crossover": z,
                "class": classify_orientation(y, z).to_string(),
            }));
        }
    }
    Ok(Pending {
        files,
        passed: true,
        results: json!({ "curves": curves, "classification": classification }),
        grid: grid_info(config)?,
    })
}

fn scaling(config: &RunConfig) -> Result<Pending, CliError> {
    let sc = &config.scaling;
    let orientations = config.orientations()?;
    let mut files = Vec::new();
    let mut fits = Vec::new();
    for &axis in &config.ions.axes {
        let mut header = vec!["d".to_string()];
        let mut columns: Vec<Vec<f64>> = Vec::new();
        let mut ds = Vec::new();
        for u in &orientations {
            let setup = ScalingSetup {
                axis,
                orientation: *u,
                kernel: config.kernel,
                source: config.dipoles.source,
                nodes_per_height: sc.nodes_per_height,
                plane_factor: sc.plane_factor,
            };
            let pts = scaling_sweep(&setup, (sc.range[0], sc.range[1]), sc.points)?;
            let (d, s): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let analysis = scaling_exponent(&d, &s, sc.window)?;
            fits.push(json!({
                "axis": axis,
                "orientation": u.components(),
                "slope_overall": fit_slope(&d, &s)?,
                "break_point": analysis.break_point,
            }));
            header.push(format!("S_mu{}", u.label()));
            header.push(format!("slope_mu{}", u.label()));
            columns.push(s);
            columns.push(analysis.slopes);
            ds = d;
        }
        let rows = (0..ds.len()).map(|i| {
            let mut row = vec![ds[i]];
            row.extend(columns.iter().map(|c| c[i]));
            row
        });
        files.push((format!("{}_{axis}.csv", config.output.prefix), csv(&header, rows)));
    }
    Ok(Pending {
        files,
        passed: true,
        results: json!({ "fits": fits }),
        grid: json!({
            "nodes_per_height": sc.nodes_per_height,
            "plane_factor": sc.plane_factor,
            "scale_adaptive": true,
        }),
    })
}

fn chain(config: &RunConfig) -> Result<Pending, CliError> {
    let c = &config.chain;
    let orientations = config.orientations()?;
    let mut files = Vec::new();
    let mut modes = Value::Null;
    for &axis in &config.ions.axes {
        for u in &orientations {
            let setup = ChainSetup {
                geometry: config.geometry()?,
                ions: c.ions,
                coupling: c.coupling,
                axis,
                orientation: *u,
                kernel: config.kernel,
                source: config.dipoles.source,
                height: config.ions.height,
                ion_z: config.ions.z,
                resolution: config.resolution(),
            };
            let sweep = chain_mode_sweep(&setup, (c.spacing_range[0], c.spacing_range[1]), c.points)?;
            let mut header = vec!["spacing".to_string()];
            for (j, p) in sweep.parity.iter().enumerate() {
                let p = serde_json::to_value(p).expect("serializable");
                header.push(format!("S_m{j}_{}", p.as_str().unwrap_or("none")));
            }
            let rows = sweep.spacings.iter().zip(&sweep.noise).map(|(l, row)| {
                let mut r = vec![*l];
                r.extend(row);
                r
            });
            files.push((format!("{}.csv", curve_name(&config.output.prefix, axis, u)), csv(&header, rows)));
            modes = json!({ "parity": sweep.parity, "frequencies": sweep.frequencies });
        }
    }
    Ok(Pending { files, passed: true, results: json!({ "modes": modes }), grid: grid_info(config)? })
}

#[derive(Serialize)]
struct EntryCheck {
    i: usize,
    j: usize,
    deterministic: f64,
    estimate: f64,
    stderr: f64,
    z: f64,
    pass: bool,
}

fn oracle(config: &RunConfig) -> Result<Pending, CliError> {
    let o = &config.oracle;
    let geometry = config.geometry()?;
    let grid = prepare_grid(&geometry, config.resolution(), &config.kernel)?;
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for &axis in &config.ions.axes {
        for u in config.orientations()? {
            let ions = IonConfiguration::pair(o.separation, config.ions.height, config.ions.z, axis)?;
            let s = noise_matrix(&ions, &grid, u, &config.kernel, config.dipoles.source)?;
            let sampler =
                EnsembleSampler::new(&ions, &grid, u, &config.kernel, config.dipoles.source, o.inject_sign_fault)?;
            let est = sampler.run(o.samples, o.seed)?;
            let z = est.z_scores(&s)?;
            let mut entries = Vec::new();
            for i in 0..s.n() {
                for j in i..s.n() {
                    let e = EntryCheck {
                        i,
                        j,
                        deterministic: s.get(i, j),
                        estimate: est.s_hat[(i, j)],
                        stderr: est.stderr[(i, j)],
                        z: z[(i, j)],
                        pass: z[(i, j)].abs() <= o.z_threshold,
                    };
                    checks.push(e.pass);
                    entries.push(e);
                }
            }
            runs.push(json!({
                "axis": axis,
                "orientation": u.components(),
                "clipped_mass": est.clipped_mass,
                "entries": entries,
            }));
        }
    }
    let fraction = checks.iter().filter(|p| **p).count() as f64 / checks.len() as f64;
    let passed = fraction >= o.min_pass_fraction;
    let verdict = json!({
        "passed": passed,
        "pass_fraction": fraction,
        "z_threshold": o.z_threshold,
        "n_samples": o.samples,
        "seed": o.seed,
        "sign_fault_injected": o.inject_sign_fault,
        "runs": runs,
    });
    let body = serde_json::to_string_pretty(&verdict).expect("serializable") + "\n";
    Ok(Pending {
        files: vec![(format!("{}_oracle.json", config.output.prefix), body)],
        passed,
        results: json!({ "pass_fraction": fraction }),
        grid: grid_info(config)?,
    })
}
