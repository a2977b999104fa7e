//! File rendering: CSV tables, JSON summaries, SVG plots and the manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempath::experiment::{
    ConvergenceRow, Curve, ExperimentResult, FormalismResult, ObservableAxis,
};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// An output file held in memory until everything has been computed.
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(path: &str, text: String) -> Self {
        Self {
            path: path.to_string(),
            bytes: text.into_bytes(),
        }
    }

    pub fn json<T: Serialize>(path: &str, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
        text.push('\n');
        Self::text(path, text)
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn push_curve(out: &mut String, formalism: &str, p: &str, curve: &Curve) {
    for (u, d) in curve.grid.points().zip(&curve.density) {
        let _ = writeln!(
            out,
            "{formalism},{p},{},{},{}",
            curve.axis.name(),
            num(u),
            num(*d)
        );
    }
}

/// `formalism,p,axis,coordinate,probability_density`; `p = all` marks the
/// weighted sum over components.
pub fn distributions_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("formalism,p,axis,coordinate,probability_density\n");
    for run in &result.runs {
        let name = run.formalism.name();
        for c in &run.components {
            for curve in &c.curves {
                push_curve(&mut out, name, &num(c.p), curve);
            }
        }
        for curve in &run.combined {
            push_curve(&mut out, name, "all", curve);
        }
    }
    out
}

pub fn oracle_errors_csv(run: &FormalismResult) -> String {
    let mut out = String::from("p,rel_l2,lattice_points,lattice_slices\n");
    for r in &run.oracle {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(r.p),
            num(r.rel_l2),
            r.lattice_points,
            r.lattice_slices
        );
    }
    out
}

pub fn convergence_csv(parameter: &str, rows: &[ConvergenceRow]) -> String {
    let mut out = format!("{parameter},rel_l2\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", num(r.parameter), num(r.rel_l2));
    }
    out
}

#[derive(Serialize)]
struct ComponentSummary {
    p: f64,
    weight: f64,
    delta_omega: f64,
    frequency_shift: f64,
    delta_v: f64,
    mean_t: f64,
    mean_x: f64,
    mean_v: f64,
}

#[derive(Serialize)]
pub struct FormalismSummary {
    formalism: &'static str,
    hump_count: usize,
    hump_spacing_v: f64,
    hump_spacing_omega: f64,
    delta_omega_width: f64,
    margin: f64,
    detectable: bool,
    components: Vec<ComponentSummary>,
    max_oracle_rel_l2: Option<f64>,
}

impl From<&FormalismResult> for FormalismSummary {
    fn from(r: &FormalismResult) -> Self {
        Self {
            formalism: r.formalism.name(),
            hump_count: r.hump_count,
            hump_spacing_v: r.hump_spacing_v,
            hump_spacing_omega: r.hump_spacing_omega,
            delta_omega_width: r.delta_omega_width,
            margin: r.margin,
            detectable: r.detectable,
            components: r
                .components
                .iter()
                .map(|c| ComponentSummary {
                    p: c.p,
                    weight: c.weight,
                    delta_omega: c.delta_omega,
                    frequency_shift: c.frequency_shift,
                    delta_v: c.delta_v,
                    mean_t: c.mean_t,
                    mean_x: c.mean_x,
                    mean_v: c.mean_v,
                })
                .collect(),
            max_oracle_rel_l2: (!r.oracle.is_empty())
                .then(|| r.oracle.iter().map(|o| o.rel_l2).fold(0.0, f64::max)),
        }
    }
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line plot of the combined density of each formalism on one axis.
pub fn svg_plot(result: &ExperimentResult, axis: ObservableAxis) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let curves: Vec<(&str, &Curve)> = result
        .runs
        .iter()
        .map(|r| (r.formalism.name(), r.combined_curve(axis)))
        .collect();
    let grid = curves.first().map(|c| c.1.grid);
    let ymax = curves
        .iter()
        .flat_map(|c| c.1.density.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    if let Some(grid) = grid {
        let (x0, x1) = (grid.start, grid.end());
        let sx = |u: f64| pad + (u - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |d: f64| h - pad - d / ymax * (h - 2.0 * pad);
        for (k, (name, curve)) in curves.iter().enumerate() {
            let pts: Vec<String> = curve
                .grid
                .points()
                .zip(&curve.density)
                .map(|(u, d)| format!("{:.2},{:.2}", sx(u), sy(*d)))
                .collect();
            let colour = PALETTE[k % PALETTE.len()];
            let dash = if k > 0 {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-size="12" fill="{colour}">{name}</text>"#,
                w - pad - 90.0,
                pad + 16.0 * (k as f64 + 1.0)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{pad}" y="{}" font-size="12">{:.4}</text>"#,
            h - pad + 18.0,
            x0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{:.4}</text>"#,
            w - pad,
            h - pad + 18.0,
            x1
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 12.0,
        axis.name()
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="14" transform="rotate(-90 14 {})" text-anchor="middle">probability density</text>"#,
        h / 2.0,
        h / 2.0
    );
    out.push_str("</svg>\n");
    out
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    version: &'a str,
    config_path: String,
    output_dir: String,
    seed: u64,
    started_unix: f64,
    finished_unix: f64,
    files: Vec<FileEntry>,
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub seed: u64,
    pub started_unix: f64,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Write every artifact under `dir`, then `manifest.json` listing them.
pub fn write_all(dir: &Path, artifacts: &[Artifact], info: RunInfo) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut files = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        }
        std::fs::write(&path, &a.bytes).map_err(|e| io(&path, e))?;
        files.push(FileEntry {
            path: a.path.clone(),
            bytes: a.bytes.len(),
            sha256: hex::encode(Sha256::digest(&a.bytes)),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: info.command,
        version: env!("CARGO_PKG_VERSION"),
        config_path: info.config_path.display().to_string(),
        output_dir: dir.display().to_string(),
        seed: info.seed,
        started_unix: info.started_unix,
        finished_unix: unix_now(),
        files,
    };
    let m = Artifact::json("manifest.json", &manifest);
    let path = dir.join(&m.path);
    std::fs::write(&path, &m.bytes).map_err(|e| io(&path, e))
}
