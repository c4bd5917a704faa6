use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use thinfilm::analysis::EnergySeries;
use thinfilm::{Params, SolveConfig};

/// Version of the JSON summary layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ParamSet {
    pub alpha: f64,
    pub dim: u32,
    pub p: f64,
}

impl From<&Params> for ParamSet {
    fn from(p: &Params) -> Self {
        Self { alpha: p.alpha(), dim: p.dim(), p: p.pressure() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    pub r_max: f64,
    pub stop_after_events: Option<usize>,
    pub f_offset: f64,
}

impl From<&SolveConfig> for Tolerances {
    fn from(c: &SolveConfig) -> Self {
        Self {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            event_tol: c.event_refine_tol,
            r_max: c.r_max,
            stop_after_events: c.stop_after_events,
            f_offset: c.f_offset,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: ParamSet,
    /// Command-specific inputs.
    pub inputs: Value,
    pub tolerances: Tolerances,
    pub tool_version: String,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, params: &Params, inputs: Value, config: &SolveConfig) -> Self {
        Self {
            command: command.to_string(),
            params: params.into(),
            inputs,
            tolerances: config.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
        }
    }
}

fn timestamp() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return epoch;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    version: u32,
    command: &'a str,
    manifest: &'a RunManifest,
    files: &'a [String],
    result: &'a T,
}

/// Output directory plus the list of files written so far.
pub struct Sink {
    dir: PathBuf,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write via a temporary file and rename, so readers never see a partial file.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let dest = self.dir.join(name);
        fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &dest).with_context(|| format!("renaming to {}", dest.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_trajectory(&mut self, stem: &str, es: &EnergySeries, states: &[thinfilm::State], gnuplot: bool) -> Result<()> {
        let csv_name = format!("{stem}.csv");
        self.write(&csv_name, &trajectory_csv(es, states))?;
        if gnuplot {
            self.write(&format!("{stem}.gp"), &gnuplot_script(&csv_name))?;
        }
        Ok(())
    }

    /// Summary JSON, written last so that it lists every other file.
    pub fn finish<T: Serialize>(mut self, stem: &str, manifest: &RunManifest, result: &T) -> Result<PathBuf> {
        let files = self.written.clone();
        let env = Envelope { version: FORMAT_VERSION, command: &manifest.command, manifest, files: &files, result };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        let name = format!("{stem}.json");
        self.write(&name, &text)?;
        Ok(self.path(&name))
    }
}

/// CSV with header `r,h,dh,e1,e2` and one row per sample.
pub fn trajectory_csv(es: &EnergySeries, states: &[thinfilm::State]) -> String {
    let mut out = String::with_capacity(states.len() * 96);
    out.push_str("r,h,dh,e1,e2\n");
    for (i, s) in states.iter().enumerate() {
        let _ = writeln!(out, "{:e},{:e},{:e},{:e},{:e}", s.r, s.h, s.dh, es.e1[i], es.e2[i]);
    }
    out
}

pub fn gnuplot_script(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 2,1\n\
         set xlabel 'r'\n\
         set ylabel 'h'\n\
         plot '{csv}' using 1:2 with lines\n\
         set ylabel 'energy'\n\
         plot '{csv}' using 1:4 with lines, '' using 1:5 with lines axes x1y2\n\
         unset multiplot\n\
         pause mouse close\n"
    )
}
