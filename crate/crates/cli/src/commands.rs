use std::path::Path;

use anyhow::{anyhow, Result};
use fbcmc::energy::{dirichlet, hopf_defect, HomotopyPath};
use fbcmc::solver::{
    check_max_principle, continue_epsilon, effective_curvature, init, monotonicity_sweep, mountain_pass,
    quantization_check, solve_critical_point, solve_critical_point_observed, SolveReport,
};
use fbcmc::spectrum::{
    area_index_form, assemble_second_variation, default_index_tol, hersch_bound_check, index_comparison_check,
    morse_index,
};
use fbcmc::{DiskMesh, Error, SurfaceMap, Vec3};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, Resolved, ScheduleKind};
use crate::output::{OutDir, SCHEMA};

/// What the process should report once artifacts are on disk.
pub struct Outcome {
    pub exit: u8,
    pub message: String,
}

impl Outcome {
    fn ok(message: impl Into<String>) -> Self {
        Self { exit: 0, message: message.into() }
    }

    fn convergence(message: impl Into<String>) -> Self {
        Self { exit: 2, message: message.into() }
    }
}

fn config_error(r: &Resolved, message: String) -> anyhow::Error {
    ConfigError { message, hash: r.hash.clone() }.into()
}

fn header(r: &Resolved, command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.insert("config_hash".into(), json!(r.hash));
    m.insert("config".into(), json!(r.config));
    m
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Report without the per-iteration history (that goes to CSV).
fn report_value(rep: &SolveReport) -> Value {
    let mut v = to_value(rep);
    if let Value::Object(m) = &mut v {
        m.remove("history");
        m.insert("iterations_logged".into(), json!(rep.history.len()));
    }
    v
}

fn open(r: &Resolved, command: &str) -> Result<(OutDir, Map<String, Value>)> {
    let mut out = OutDir::create(&r.config.out)?;
    let text = toml::to_string(&r.config)?;
    out.write("config.resolved.toml", text.as_bytes())?;
    Ok((out, header(r, command)))
}

/// The map named by `init.name`: a built-in initializer or an OBJ file with
/// a `.bnd` sibling.
pub fn initial_map(r: &Resolved) -> Result<SurfaceMap> {
    let c = &r.config;
    let s = &r.params.surface;
    let built = |level| -> Result<_> { Ok(std::sync::Arc::new(DiskMesh::build(level)?)) };
    let u = match c.init.name.as_str() {
        "flat" => init::flat(built(c.mesh.level)?, s),
        "cap" => {
            let h = c.init.cap_h.unwrap_or_else(|| effective_curvature(&r.params));
            init::cap(built(c.mesh.level)?, s, h, &Vec3::z()).map_err(|e| config_error(r, format!("init cap: {e}")))?
        }
        "constant" => init::constant(built(c.mesh.level)?, s, &s.from_unit(&Vec3::z()))?,
        path => {
            let obj = Path::new(path);
            if !obj.is_file() {
                return Err(config_error(r, format!("init must be flat, cap, constant or an OBJ file; got {path:?}")));
            }
            let bnd = obj.with_extension("bnd");
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| config_error(r, format!("{}: {e}", p.display())));
            let u = SurfaceMap::read_obj(&read(obj)?, &read(&bnd)?).map_err(|e| config_error(r, e.to_string()))?;
            u.check_boundary(s).map_err(|e| config_error(r, format!("{path}: {e}")))?;
            u
        }
    };
    if c.init.perturb > 0.0 {
        Ok(init::perturbed(&u, s, c.init.perturb, c.seed)?)
    } else {
        Ok(u)
    }
}

fn is_file_init(r: &Resolved) -> bool {
    !matches!(r.config.init.name.as_str(), "flat" | "cap" | "constant")
}

pub fn solve(r: &Resolved) -> Result<Outcome> {
    let u0 = initial_map(r)?;
    let (mut out, mut summary) = open(r, "solve")?;
    let mut checkpoints = Vec::new();
    let res = solve_critical_point_observed(&u0, &r.params, &r.solve, &mut |i, u| checkpoints.push((i, u.clone())));
    for (i, u) in &checkpoints {
        out.write_map(&format!("checkpoints/iter_{i:06}"), u)?;
    }
    let outcome = match res {
        Ok((u, rep)) => {
            out.write_history("iterations.csv", &rep.history)?;
            out.write_map("map", &u)?;
            summary.insert("status".into(), json!("converged"));
            summary.insert("dirichlet".into(), json!(dirichlet(&u)));
            summary.insert("report".into(), report_value(&rep));
            Outcome::ok(format!("converged in {} iterations, D = {:.6}", rep.iterations, dirichlet(&u)))
        }
        Err(Error::Solve { reason, report }) => {
            out.write_history("iterations.csv", &report.history)?;
            summary.insert("status".into(), json!("failed"));
            summary.insert("reason".into(), json!(reason));
            summary.insert("report".into(), report_value(&report));
            Outcome::convergence(reason)
        }
        Err(e) => return Err(e.into()),
    };
    out.finish(summary)?;
    Ok(outcome)
}

fn stage_value(key: &str, value: f64, u: &SurfaceMap, rep: &SolveReport) -> Value {
    json!({
        key: value,
        "dirichlet": dirichlet(u),
        "report": report_value(rep),
    })
}

pub fn continue_(r: &Resolved) -> Result<Outcome> {
    let u0 = initial_map(r)?;
    let (mut out, mut summary) = open(r, "continue")?;
    let mut stages = Vec::new();
    let mut failure = None;
    let mut last = None;
    match r.config.schedule.kind {
        ScheduleKind::Eps => match continue_epsilon(&u0, &r.params, &r.solve) {
            Ok(st) => {
                for (k, s) in st.iter().enumerate() {
                    out.write_history(&format!("stage_{k:02}.csv"), &s.report.history)?;
                    stages.push(stage_value("eps", s.eps, &s.map, &s.report));
                }
                last = st.last().map(|s| s.map.clone());
            }
            Err(Error::Solve { reason, report }) => failure = Some((reason, report)),
            Err(e) => return Err(e.into()),
        },
        ScheduleKind::H => {
            let mut u = u0;
            for (k, &h) in r.config.schedule.values.iter().enumerate() {
                match solve_critical_point(&u, &r.params_at(h)?, &r.solve) {
                    Ok((v, rep)) => {
                        out.write_history(&format!("stage_{k:02}.csv"), &rep.history)?;
                        stages.push(stage_value("H", h, &v, &rep));
                        u = v;
                    }
                    Err(Error::Solve { reason, report }) => {
                        failure = Some((format!("stage H = {h}: {reason}"), report));
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
                last = Some(u.clone());
            }
        }
    }
    summary.insert("stages".into(), json!(stages));
    let outcome = match failure {
        None => {
            let u = last.ok_or_else(|| anyhow!("empty schedule"))?;
            out.write_map("map", &u)?;
            summary.insert("status".into(), json!("converged"));
            summary.insert("dirichlet".into(), json!(dirichlet(&u)));
            Outcome::ok(format!("{} stages, final D = {:.6}", stages.len(), dirichlet(&u)))
        }
        Some((reason, report)) => {
            out.write_history("failed_stage.csv", &report.history)?;
            summary.insert("status".into(), json!("failed"));
            summary.insert("reason".into(), json!(reason));
            summary.insert("report".into(), report_value(&report));
            Outcome::convergence(reason)
        }
    };
    out.finish(summary)?;
    Ok(outcome)
}

pub fn minmax(r: &Resolved) -> Result<Outcome> {
    let mesh = std::sync::Arc::new(DiskMesh::build(r.config.mesh.level)?);
    let p = &r.params;
    let cap = r.solve.bead_spacing.unwrap_or_else(|| HomotopyPath::default_cap(p));
    let seed = init::cap_sweepout(mesh.clone(), p, effective_curvature(p), &Vec3::z(), r.solve.beads, cap)
        .map_err(|e| config_error(r, format!("seed sweepout: {e}")))?;
    let (mut out, mut summary) = open(r, "minmax")?;
    let outcome = match mountain_pass(&seed, p, &r.solve) {
        Ok((path, slice, mut rep)) => {
            out.write_map("map", &slice)?;
            let energies = path.energies(p)?;
            let mut csv = String::from("bead,E\n");
            for (k, e) in energies.iter().enumerate() {
                csv.push_str(&format!("{k},{e:e}\n"));
            }
            out.write("path_energies.csv", csv.as_bytes())?;
            out.write_history("iterations.csv", &rep.polish.history)?;
            rep.polish.history.clear();
            summary.insert("status".into(), json!("converged"));
            summary.insert("mountain_pass".into(), to_value(&rep));
            Outcome::ok(format!("omega = {:.6}, slice D = {:.6}", rep.omega, rep.slice_dirichlet))
        }
        Err(e @ (Error::Solve { .. } | Error::Degree { .. })) => {
            summary.insert("status".into(), json!("failed"));
            summary.insert("reason".into(), json!(e.to_string()));
            Outcome::convergence(e.to_string())
        }
        Err(e) => return Err(e.into()),
    };
    if r.config.minmax.sweep {
        let rows = monotonicity_sweep(mesh, p, &r.solve)?;
        summary.insert("monotonicity".into(), to_value(&rows));
    }
    out.finish(summary)?;
    Ok(outcome)
}

/// A saved map, or the critical point reached from a named initializer.
fn target_map(r: &Resolved, summary: &mut Map<String, Value>) -> Result<std::result::Result<SurfaceMap, Outcome>> {
    let u0 = initial_map(r)?;
    if is_file_init(r) {
        summary.insert("source".into(), json!({ "file": r.config.init.name }));
        return Ok(Ok(u0));
    }
    match solve_critical_point(&u0, &r.params, &r.solve) {
        Ok((u, rep)) => {
            summary.insert("source".into(), json!({ "solved_from": r.config.init.name, "report": report_value(&rep) }));
            Ok(Ok(u))
        }
        Err(Error::Solve { reason, report }) => {
            summary.insert("status".into(), json!("failed"));
            summary.insert("reason".into(), json!(reason));
            summary.insert("report".into(), report_value(&report));
            Ok(Err(Outcome::convergence(reason)))
        }
        Err(e) => Err(e.into()),
    }
}

fn attempt<T: Serialize>(res: fbcmc::Result<T>, pass: impl Fn(&T) -> bool) -> (bool, Value) {
    match res {
        Ok(v) => (pass(&v), json!({ "pass": pass(&v), "report": to_value(&v) })),
        Err(e) => (false, json!({ "pass": false, "error": e.to_string() })),
    }
}

pub fn spectrum(r: &Resolved) -> Result<Outcome> {
    let (mut out, mut summary) = open(r, "spectrum")?;
    let u = match target_map(r, &mut summary)? {
        Ok(u) => u,
        Err(o) => {
            out.finish(summary)?;
            return Ok(o);
        }
    };
    let k = r.config.spectrum.k;
    let second = assemble_second_variation(&u, &r.params).and_then(|s| morse_index(&s, k, default_index_tol(&s)));
    let area = area_index_form(&u, &r.params.with_eps(0.0)).and_then(|s| morse_index(&s, k, default_index_tol(&s)));
    let cmp = index_comparison_check(&u, &r.params);
    let message = match &second {
        Ok(s) => format!("index {} nullity {}", s.index, s.nullity),
        Err(e) => format!("second variation failed: {e}"),
    };
    let err = |e: &Error| json!({ "error": e.to_string() });
    let doc = json!({
        "second_variation": second.as_ref().map(to_value).unwrap_or_else(err),
        "area_form": area.as_ref().map(to_value).unwrap_or_else(err),
        "index_comparison": cmp.as_ref().map(to_value).unwrap_or_else(err),
    });
    out.write_json("spectrum.json", &doc)?;
    summary.insert("status".into(), json!("ok"));
    if let Ok(s) = &second {
        summary.insert("morse_index".into(), json!(s.index));
        summary.insert("nullity".into(), json!(s.nullity));
    }
    out.finish(summary)?;
    Ok(Outcome::ok(message))
}

pub fn check(r: &Resolved) -> Result<Outcome> {
    let (mut out, mut summary) = open(r, "check")?;
    let u = match target_map(r, &mut summary)? {
        Ok(u) => u,
        Err(o) => {
            out.finish(summary)?;
            return Ok(o);
        }
    };
    let c = &r.config.check;
    let p = &r.params;
    let hopf = hopf_defect(&u);
    let checks = [
        ("max_principle", attempt(check_max_principle(&u, p, r.solve.mesh_tol_c), |m| m.passed())),
        ("hopf", (hopf <= c.hopf_tol, json!({ "pass": hopf <= c.hopf_tol, "defect": hopf, "tol": c.hopf_tol }))),
        ("quantization", attempt(quantization_check(&u, p, c.quantization_pairs, r.config.seed), |q| q.pass)),
        ("hersch", attempt(hersch_bound_check(&u, p, c.hersch_tol), |h| h.pass)),
        ("index_comparison", attempt(index_comparison_check(&u, p), |i| i.pass)),
    ];
    let all = checks.iter().all(|(_, (ok, _))| *ok);
    let mut doc = Map::new();
    for (name, (_, v)) in &checks {
        doc.insert(name.to_string(), v.clone());
    }
    doc.insert("all_pass".into(), json!(all));
    out.write_json("checks.json", &Value::Object(doc))?;
    let passed: Vec<&str> = checks.iter().filter(|(_, (ok, _))| *ok).map(|(n, _)| *n).collect();
    summary.insert("status".into(), json!("ok"));
    summary.insert("all_pass".into(), json!(all));
    summary.insert("passed".into(), json!(passed));
    out.finish(summary)?;
    Ok(Outcome::ok(format!("{}/{} checks pass", passed.len(), checks.len())))
}

pub fn export(r: &Resolved, format: &str) -> Result<Outcome> {
    let (mut out, mut summary) = open(r, "export")?;
    let u = match target_map(r, &mut summary)? {
        Ok(u) => u,
        Err(o) => {
            out.finish(summary)?;
            return Ok(o);
        }
    };
    match format {
        "vtk" => {
            let mut buf = Vec::new();
            u.write_vtk(&mut buf)?;
            out.write("map.vtk", &buf)?;
        }
        "obj" => out.write_map("map", &u)?,
        other => return Err(config_error(r, format!("unknown export format {other:?} (vtk | obj)"))),
    }
    summary.insert("status".into(), json!("ok"));
    summary.insert("format".into(), json!(format));
    out.finish(summary)?;
    Ok(Outcome::ok(format!("exported {format}")))
}
