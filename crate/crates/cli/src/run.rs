//! Command dispatch: merges flag overrides into the run configuration,
//! resolves the lattice, executes one subcommand and renders its output.

use std::f64::consts::PI;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Map, Value};

use lattice_spectra::config::RunConfig;
use lattice_spectra::guided::{self, RootOptions};
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::localized::{self, LocalizedProblem};
use lattice_spectra::modes::{self, ModeResult};
use lattice_spectra::propagative::{self, ProjectionOptions};
use lattice_spectra::{finite, par, Error};

use crate::args::{Cli, Cmd, ShapeKind};
use crate::output::{fmt_f, render_json, Table};

pub struct CliErr {
    kind: &'static str,
    message: String,
}

impl CliErr {
    fn config(message: impl Into<String>) -> Self {
        CliErr { kind: "config", message: message.into() }
    }

    fn precondition(message: impl Into<String>) -> Self {
        CliErr { kind: "precondition", message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CliErr { kind: "io", message: message.into() }
    }

    fn exit_code(&self) -> i32 {
        if self.kind == "config" {
            2
        } else {
            1
        }
    }

    fn to_json(&self) -> String {
        render_json(&json!({"error": {"kind": self.kind, "message": self.message}}))
    }
}

impl From<Error> for CliErr {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Config(_) | Error::InvalidLattice(_) => "config",
            Error::Domain(_)
            | Error::SpectrumViolation { .. }
            | Error::NotARoot { .. }
            | Error::DegenerateNullSpace { .. } => "precondition",
            Error::NonConvergence { .. } | Error::Singular(_) | Error::ComplexResidual { .. } => {
                "runtime"
            }
        };
        CliErr { kind, message: e.to_string() }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = CliErr::config(e.to_string());
            eprint!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprint!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliErr> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    // merge per-command grid flags so one validator covers both sources
    match &cli.cmd {
        Cmd::Bands { n_k1, n_k2 } => {
            if let Some(n) = n_k1 {
                cfg.grids.n_k1 = *n;
            }
            if let Some(n) = n_k2 {
                cfg.grids.n_k2 = *n;
            }
        }
        Cmd::Project { points } | Cmd::Guided { points } => {
            if let Some(n) = points {
                cfg.grids.curve_points = *n;
            }
        }
        Cmd::RegionMap { points, .. } => {
            if let Some(n) = points {
                cfg.grids.region_points = *n;
            }
        }
        Cmd::DlocTrace { points } => {
            if let Some(n) = points {
                cfg.grids.trace_points = *n;
            }
        }
        Cmd::Oracle { width, height } => {
            if let Some(n) = width {
                cfg.grids.oracle_width = *n;
            }
            if let Some(n) = height {
                cfg.grids.oracle_height = *n;
            }
        }
        Cmd::Modeshape { half_x, half_y, .. } => {
            if let Some(n) = half_x {
                cfg.grids.half_x = *n;
            }
            if let Some(n) = half_y {
                cfg.grids.half_y = *n;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        if let Err(msg) = par::configure_threads(n) {
            // the sequential build already satisfies a single-thread cap
            if n != 1 {
                return Err(CliErr::config(format!("--threads: {msg}")));
            }
        }
    }

    let text = match &cli.cmd {
        Cmd::Bands { .. } => cmd_bands(&cli, &cfg)?,
        Cmd::Project { .. } => cmd_project(&cli, &cfg)?,
        Cmd::Guided { .. } => cmd_guided(&cli, &cfg)?,
        Cmd::Localized => cmd_localized(&cli, &cfg)?,
        Cmd::RegionMap { min, max, .. } => cmd_region_map(&cfg, *min, *max)?,
        Cmd::DlocTrace { .. } => cmd_dloc_trace(&cli, &cfg)?,
        Cmd::Oracle { .. } => cmd_oracle(&cli, &cfg)?,
        Cmd::Modeshape { kind, k1, omega, branch, .. } => {
            cmd_modeshape(&cli, &cfg, *kind, *k1, *omega, *branch)?
        }
        Cmd::Classify => cmd_classify(&cli, &cfg)?,
        Cmd::Repro { figure } => cmd_repro(&cfg, *figure)?,
    };

    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliErr::io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Lattice for commands that consume one: `--m1`/`--m2` build the
/// single-node cell, a config names an arbitrary one, and with neither the
/// defect-free unit cell is used. Two simultaneous sources are an error.
fn lattice_from(cli: &Cli, cfg: &RunConfig) -> Result<LatticeSpec, CliErr> {
    let flagged = cli.m1.is_some() || cli.m2.is_some();
    let configured = cfg.resolve_lattice()?;
    match (flagged, configured) {
        (true, Some(_)) => Err(CliErr::config(
            "lattice given both by --m1/--m2 and by the config; pick one source",
        )),
        (true, None) => {
            Ok(LatticeSpec::uniform_with_defects(cli.m1.unwrap_or(0.0), cli.m2.unwrap_or(0.0))?)
        }
        (false, Some(spec)) => Ok(spec),
        (false, None) => Ok(LatticeSpec::square(1, 1)),
    }
}

/// Defect mass pair for the closed-form classifier, which is scalar by
/// construction: a configured lattice must be the single-node cell.
fn cell_masses(cli: &Cli, cfg: &RunConfig) -> Result<(f64, f64), CliErr> {
    let flagged = cli.m1.is_some() || cli.m2.is_some();
    let configured = cfg.resolve_lattice()?;
    match (flagged, configured) {
        (true, Some(_)) => Err(CliErr::config(
            "lattice given both by --m1/--m2 and by the config; pick one source",
        )),
        (true, None) => Ok((cli.m1.unwrap_or(0.0), cli.m2.unwrap_or(0.0))),
        (false, Some(spec)) => {
            if spec.dim() != 1 {
                return Err(CliErr::precondition(
                    "the existence verdict is closed-form for the single-node cell only",
                ));
            }
            Ok((spec.strip()[0], spec.point()[0]))
        }
        (false, None) => Ok((0.0, 0.0)),
    }
}

fn version_line() -> String {
    format!("lattice-spectra {}", env!("CARGO_PKG_VERSION"))
}

fn standard_meta(t: &mut Table, command: &str, cfg: &RunConfig, spec: Option<&LatticeSpec>) {
    t.meta("tool", version_line());
    t.meta("command", command);
    if let Some(s) = spec {
        t.meta("spec", s.digest());
    }
    if let Some(seed) = cfg.seed {
        t.meta("seed", seed.to_string());
    }
}

fn json_meta(
    command: &str,
    cfg: &RunConfig,
    spec: Option<&LatticeSpec>,
    extra: &[(&str, Value)],
) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), json!("lattice-spectra"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    if let Some(s) = spec {
        m.insert("spec_digest".into(), json!(s.digest()));
    }
    if let Some(seed) = cfg.seed {
        m.insert("seed".into(), json!(seed));
    }
    for (k, v) in extra {
        m.insert((*k).into(), v.clone());
    }
    Value::Object(m)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliErr> {
    serde_json::to_value(v).map_err(|e| CliErr { kind: "runtime", message: e.to_string() })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

fn root_options(cfg: &RunConfig) -> RootOptions {
    RootOptions {
        scan_points: cfg.grids.scan_points,
        xtol: cfg.tolerances.root_xtol,
        quad_tol: cfg.tolerances.quadrature,
    }
}

fn cmd_bands(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let (n1, n2) = (cfg.grids.n_k1, cfg.grids.n_k2);
    let table = propagative::dispersion_table(&spec, n1, n2)?;
    let mut cols: Vec<String> = vec!["k1".into(), "k2".into()];
    for b in 0..spec.dim() {
        cols.push(format!("omega_{b}"));
    }
    let mut t = Table::new(cols);
    standard_meta(&mut t, "bands", cfg, Some(&spec));
    t.meta("grids", format!("n_k1={n1} n_k2={n2}"));
    for (i2, &q2) in table.k2.iter().enumerate() {
        for (i1, &q1) in table.k1.iter().enumerate() {
            let mut row = vec![fmt_f(q1), fmt_f(q2)];
            row.extend(table.branches[i2 * n1 + i1].iter().map(|&w| fmt_f(w)));
            t.row(row);
        }
    }
    Ok(t.render())
}

fn cmd_project(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let n = cfg.grids.curve_points;
    let opts = ProjectionOptions { tol: cfg.tolerances.projection, ..Default::default() };
    let k1s = linspace(-PI, PI, n);
    let slices = par::try_map(&k1s, |&k1| propagative::projection_k1(&spec, k1, &opts))?;
    let mut t = Table::new(vec!["k1", "segment", "lo", "hi"]);
    standard_meta(&mut t, "project", cfg, Some(&spec));
    t.meta("grids", format!("curve_points={n}"));
    t.meta("tolerances", format!("projection={}", fmt_f(opts.tol)));
    for (&k1, set) in k1s.iter().zip(&slices) {
        for (si, iv) in set.intervals().iter().enumerate() {
            t.row(vec![fmt_f(k1), si.to_string(), fmt_f(iv.lo), fmt_f(iv.hi)]);
        }
    }
    Ok(t.render())
}

fn cmd_guided(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let n = cfg.grids.curve_points;
    let opts = root_options(cfg);
    let k1s = linspace(-PI, PI, n);
    let roots = par::try_map(&k1s, |&k1| {
        let search = guided::default_search(&spec, k1)?;
        guided::guided_spectrum(&spec, k1, &search, &opts)
    })?;
    let mut t = Table::new(vec!["k1", "branch", "omega"]);
    standard_meta(&mut t, "guided", cfg, Some(&spec));
    t.meta("grids", format!("curve_points={n} scan_points={}", opts.scan_points));
    t.meta(
        "tolerances",
        format!("quadrature={} root_xtol={}", fmt_f(opts.quad_tol), fmt_f(opts.xtol)),
    );
    for (&k1, rs) in k1s.iter().zip(&roots) {
        for (b, &w) in rs.iter().enumerate() {
            t.row(vec![fmt_f(k1), b.to_string(), fmt_f(w)]);
        }
    }
    Ok(t.render())
}

fn cmd_localized(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let problem = LocalizedProblem::new(spec.clone())?;
    let found = problem.modes()?;
    let mut obj = Map::new();
    obj.insert("meta".into(), json_meta("localized", cfg, Some(&spec), &[]));
    obj.insert("gaps".into(), to_value(problem.gaps())?);
    obj.insert("asymptote".into(), json!(problem.asymptote()));
    obj.insert("roots".into(), to_value(&found.roots)?);
    obj.insert("ambiguous".into(), to_value(&found.ambiguous)?);
    Ok(render_json(&Value::Object(obj)))
}

fn region_rows(lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, Option<f64>)>, CliErr> {
    if !lo.is_finite() || !hi.is_finite() || !(lo > 0.0) || lo >= hi {
        return Err(CliErr::config(format!(
            "region range must satisfy 0 < min < max, got [{lo}, {hi}]"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for m in linspace(lo, hi, n) {
        let boundary = match localized::region_boundary(m) {
            Ok(v) => Some(v),
            // inside the masked strip-mass range the trapping threshold
            // does not exist; the diagonal is the only boundary there
            Err(Error::Domain(_)) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push((m, boundary));
    }
    Ok(rows)
}

fn render_region(
    cfg: &RunConfig,
    lo: f64,
    hi: f64,
    command: &str,
    figure: Option<&str>,
) -> Result<String, CliErr> {
    let n = cfg.grids.region_points;
    let rows = region_rows(lo, hi, n)?;
    let mut t = Table::new(vec!["m_tilde", "diagonal", "boundary"]);
    standard_meta(&mut t, command, cfg, None);
    if let Some(f) = figure {
        t.meta("figure", f);
    }
    t.meta("grids", format!("region_points={n}"));
    t.meta("range", format!("min={} max={}", fmt_f(lo), fmt_f(hi)));
    for (m, boundary) in rows {
        t.row(vec![fmt_f(m), fmt_f(m), boundary.map(fmt_f).unwrap_or_default()]);
    }
    Ok(t.render())
}

fn cmd_region_map(cfg: &RunConfig, min: Option<f64>, max: Option<f64>) -> Result<String, CliErr> {
    render_region(cfg, min.unwrap_or(0.05), max.unwrap_or(6.0), "region-map", None)
}

fn cmd_dloc_trace(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let problem = LocalizedProblem::new(spec.clone())?;
    let points = cfg.grids.trace_points;
    let tol = cfg.tolerances.trace;
    let scalar = spec.dim() == 1;
    let gs = problem.gaps();
    let mut t = Table::new(vec!["omega", "gap", "in_tail", "value", "realness"]);
    standard_meta(&mut t, "dloc-trace", cfg, Some(&spec));
    t.meta("grids", format!("trace_points={points}"));
    t.meta("tolerances", format!("trace={}", fmt_f(tol)));
    for (gi, gap) in gs.gaps.intervals().iter().enumerate() {
        let in_tail = gs.tail == Some(gi);
        for j in 0..points {
            let frac = (j as f64 + 0.5) / points as f64;
            let omega = gap.lo + frac * gap.width();
            let (value, realness) = if scalar {
                (1.0 + spec.point()[0] * localized::d1(omega, spec.strip()[0], tol)?, 0.0)
            } else {
                let d = problem.d_loc_with_tol(omega, tol)?;
                (d.value.re, d.realness)
            };
            t.row(vec![
                fmt_f(omega),
                gi.to_string(),
                in_tail.to_string(),
                fmt_f(value),
                fmt_f(realness),
            ]);
        }
    }
    Ok(t.render())
}

fn cmd_oracle(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let (w, h) = (cfg.grids.oracle_width, cfg.grids.oracle_height);
    let report = finite::finite_oracle(&spec, w, h)?;
    let mut obj = match to_value(&report)? {
        Value::Object(m) => m,
        _ => unreachable!("report serializes to an object"),
    };
    obj.insert(
        "meta".into(),
        json_meta(
            "oracle",
            cfg,
            Some(&spec),
            &[("grids", json!(format!("oracle_width={w} oracle_height={h}")))],
        ),
    );
    Ok(render_json(&Value::Object(obj)))
}

fn cmd_modeshape(
    cli: &Cli,
    cfg: &RunConfig,
    kind: ShapeKind,
    k1: Option<f64>,
    omega: Option<f64>,
    branch: Option<usize>,
) -> Result<String, CliErr> {
    let spec = lattice_from(cli, cfg)?;
    let half = (cfg.grids.half_x, cfg.grids.half_y);
    let mode: ModeResult;
    let mut extras: Vec<(&str, String)> = Vec::new();
    match kind {
        ShapeKind::Guided => {
            let k1 = k1.ok_or_else(|| CliErr::config("guided shapes need --k1"))?;
            let opts = root_options(cfg);
            let search = guided::default_search(&spec, k1)?;
            let roots = guided::guided_spectrum(&spec, k1, &search, &opts)?;
            let w = pick_scalar_root(&roots, omega, branch)?;
            mode = modes::reconstruct_guided_mode(&spec, k1, w, half)?;
            extras.push(("k1", fmt_f(k1)));
        }
        ShapeKind::Localized => {
            if k1.is_some() {
                return Err(CliErr::config("--k1 applies to guided shapes only"));
            }
            if branch.is_some() {
                return Err(CliErr::config("--branch applies to guided shapes only"));
            }
            let problem = LocalizedProblem::new(spec.clone())?;
            let found = problem.modes()?;
            let roots: Vec<f64> = found.roots.iter().map(|r| r.omega).collect();
            let w = match (omega, roots.len()) {
                (Some(_), _) => pick_scalar_root(&roots, omega, None)?,
                (None, 1) => roots[0],
                (None, n) => {
                    return Err(CliErr::precondition(format!(
                        "{n} localized roots found; pick one with --omega"
                    )))
                }
            };
            mode = modes::reconstruct_localized_mode(&problem, w, half)?;
        }
    }
    let mut t = Table::new(vec!["n1", "n2", "re", "im", "abs"]);
    standard_meta(&mut t, "modeshape", cfg, Some(&spec));
    t.meta(
        "kind",
        match kind {
            ShapeKind::Guided => "guided",
            ShapeKind::Localized => "localized",
        },
    );
    t.meta("omega", fmt_f(mode.omega));
    for (k, v) in extras {
        t.meta(k, v);
    }
    t.meta("grids", format!("half_x={} half_y={}", half.0, half.1));
    t.meta(
        "decay",
        format!(
            "rate_x={} rate_y={} r2_x={} r2_y={}",
            fmt_f(mode.decay_rate_x),
            fmt_f(mode.decay_rate_y),
            fmt_f(mode.decay_r2_x),
            fmt_f(mode.decay_r2_y)
        ),
    );
    t.meta("participation", fmt_f(mode.participation));
    for y in 0..mode.height {
        for x in 0..mode.width {
            let z = mode.value(x, y);
            t.row(vec![
                (x as i64 - mode.center.0 as i64).to_string(),
                (y as i64 - mode.center.1 as i64).to_string(),
                fmt_f(z.re),
                fmt_f(z.im),
                fmt_f(z.norm()),
            ]);
        }
    }
    Ok(t.render())
}

fn pick_scalar_root(
    roots: &[f64],
    omega: Option<f64>,
    branch: Option<usize>,
) -> Result<f64, CliErr> {
    if roots.is_empty() {
        return Err(CliErr::precondition("no root in the search region"));
    }
    match omega {
        Some(w) => Ok(roots
            .iter()
            .copied()
            .min_by(|a, b| (a - w).abs().total_cmp(&(b - w).abs()))
            .unwrap()),
        None => {
            let b = branch.unwrap_or(0);
            roots.get(b).copied().ok_or_else(|| {
                CliErr::precondition(format!("branch {b} out of range: {} roots", roots.len()))
            })
        }
    }
}

fn cmd_classify(cli: &Cli, cfg: &RunConfig) -> Result<String, CliErr> {
    let (m1, m2) = cell_masses(cli, cfg)?;
    let report = localized::classify_existence(m1, m2)?;
    let mut obj = match to_value(&report)? {
        Value::Object(m) => m,
        _ => unreachable!("report serializes to an object"),
    };
    obj.insert("meta".into(), json_meta("classify", cfg, None, &[]));
    Ok(render_json(&Value::Object(obj)))
}

fn cmd_repro(cfg: &RunConfig, figure: u8) -> Result<String, CliErr> {
    match figure {
        1 => repro_guided_curves(cfg),
        2 => repro_determinant_traces(cfg),
        3 => render_region(cfg, 0.05, 6.0, "repro", Some("3")),
        n => Err(CliErr::config(format!("figure must be 1, 2 or 3, got {n}"))),
    }
}

/// Band projection edges and the guided curve over the strip wavevector for
/// the four published strip masses.
fn repro_guided_curves(cfg: &RunConfig) -> Result<String, CliErr> {
    let panels = [("a", -0.9), ("b", -0.5), ("c", 0.5), ("d", 2.0)];
    let n = cfg.grids.curve_points;
    let mut t = Table::new(vec!["panel", "m1", "k1", "band_lo", "band_hi", "omega_g"]);
    standard_meta(&mut t, "repro", cfg, None);
    t.meta("figure", "1");
    t.meta("grids", format!("curve_points={n}"));
    for (name, m1) in panels {
        for k1 in linspace(-PI, PI, n) {
            let band_lo = propagative::uniform_branch([k1, 0.0]);
            let band_hi = propagative::uniform_branch([k1, PI]);
            let omega_g = match guided::guided_closed_form(m1, k1) {
                Ok(w) => fmt_f(w),
                Err(Error::Domain(_)) => String::new(),
                Err(e) => return Err(e.into()),
            };
            t.row(vec![
                name.to_string(),
                fmt_f(m1),
                fmt_f(k1),
                fmt_f(band_lo),
                fmt_f(band_hi),
                omega_g,
            ]);
        }
    }
    Ok(t.render())
}

/// Localization determinant across the gaps for the eight published defect
/// pairs. Panels sharing a strip mass also share the gap structure and the
/// scalar trace, so both are computed once per group.
fn repro_determinant_traces(cfg: &RunConfig) -> Result<String, CliErr> {
    let groups: [(f64, &[(&str, f64)]); 3] = [
        (-0.9, &[("a", -0.03), ("b", 0.1), ("c", 0.25), ("d", 0.7)]),
        (-0.5, &[("e", -0.2), ("f", 0.1)]),
        (2.0, &[("g", -2.6), ("h", -2.0)]),
    ];
    let points = cfg.grids.trace_points;
    let tol = cfg.tolerances.trace;
    let mut t = Table::new(vec!["panel", "m1", "m2", "omega", "gap", "in_tail", "value"]);
    standard_meta(&mut t, "repro", cfg, None);
    t.meta("figure", "2");
    t.meta("grids", format!("trace_points={points}"));
    t.meta("tolerances", format!("trace={}", fmt_f(tol)));
    for (m1, panels) in groups {
        let spec = LatticeSpec::uniform_with_defects(m1, 0.0)?;
        let gs = localized::gap_structure(&spec, localized::frequency_bound(&spec))?;
        let mut stations: Vec<(f64, usize, bool, f64)> = Vec::new();
        for (gi, gap) in gs.gaps.intervals().iter().enumerate() {
            let in_tail = gs.tail == Some(gi);
            for j in 0..points {
                let frac = (j as f64 + 0.5) / points as f64;
                let omega = gap.lo + frac * gap.width();
                stations.push((omega, gi, in_tail, localized::d1(omega, m1, tol)?));
            }
        }
        for (name, m2) in panels {
            for &(omega, gi, in_tail, d1v) in &stations {
                t.row(vec![
                    name.to_string(),
                    fmt_f(m1),
                    fmt_f(*m2),
                    fmt_f(omega),
                    gi.to_string(),
                    in_tail.to_string(),
                    fmt_f(1.0 + m2 * d1v),
                ]);
            }
        }
    }
    Ok(t.render())
}
