//! Artifact tree: every file written goes through [`OutDir`] so that
//! summary.json can list it exactly once.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use fbcmc::solver::IterationRecord;
use fbcmc::SurfaceMap;
use serde_json::{json, Map, Value};

/// Bumped whenever summary.json changes shape.
pub const SCHEMA: u32 = 1;

pub struct OutDir {
    dir: PathBuf,
    artifacts: Vec<String>,
    started: SystemTime,
    clock: Instant,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new(), started: SystemTime::now(), clock: Instant::now() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.artifacts.iter().any(|a| a == name) {
            bail!("artifact {name} written twice");
        }
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// `stem.obj` plus the boundary index sidecar `stem.bnd`.
    pub fn write_map(&mut self, stem: &str, u: &SurfaceMap) -> Result<()> {
        let mut obj = Vec::new();
        u.write_obj(&mut obj)?;
        let mut bnd = Vec::new();
        u.write_boundary(&mut bnd)?;
        self.write(&format!("{stem}.obj"), &obj)?;
        self.write(&format!("{stem}.bnd"), &bnd)
    }

    pub fn write_history(&mut self, name: &str, history: &[IterationRecord]) -> Result<()> {
        let mut s = Vec::new();
        writeln!(s, "iter,E,D,residual,step,orth_defect")?;
        for h in history {
            writeln!(s, "{},{:e},{:e},{:e},{:e},{:e}", h.iter, h.energy, h.dirichlet, h.residual, h.step, h.orth_defect)?;
        }
        self.write(name, &s)
    }

    /// Writes summary.json (deterministic) and summary.meta.json (timing).
    pub fn finish(mut self, mut summary: Map<String, Value>) -> Result<PathBuf> {
        let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let meta = json!({
            "started_unix": unix(self.started),
            "finished_unix": unix(SystemTime::now()),
            "elapsed_s": self.clock.elapsed().as_secs_f64(),
        });
        self.write_json("summary.meta.json", &meta)?;
        self.artifacts.push("summary.json".into());
        summary.insert("artifacts".into(), json!(self.artifacts));
        let path = self.dir.join("summary.json");
        let mut s = serde_json::to_string_pretty(&Value::Object(summary))?;
        s.push('\n');
        std::fs::write(&path, s).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
