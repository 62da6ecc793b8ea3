//! File formats: curve JSON, trajectory JSON lines, diagnostics and profile CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::DensityReport;
use crate::error::{Error, Result};
use crate::flow::{Frame, StepDiagnostics, Trajectory};
use crate::geometry::{DiscreteCurve, Vec2};
use crate::singularity::RescaledFrame;

/// `{"n": 1, "vertices": [[x, y], ...]}`, with `"s"` on rescaled frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "closed_default", skip_serializing_if = "is_true")]
    pub closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

fn closed_default() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl From<&DiscreteCurve> for CurveFile {
    fn from(c: &DiscreteCurve) -> Self {
        Self {
            n: 1,
            vertices: c.vertices().iter().map(|v| [v.x, v.y]).collect(),
            closed: c.is_closed(),
            s: None,
        }
    }
}

impl From<&RescaledFrame> for CurveFile {
    fn from(f: &RescaledFrame) -> Self {
        Self {
            s: Some(f.s),
            ..Self::from(&f.curve)
        }
    }
}

impl TryFrom<CurveFile> for DiscreteCurve {
    type Error = Error;

    fn try_from(f: CurveFile) -> Result<Self> {
        if f.n != 1 {
            return Err(Error::Dimension { expected: 1, got: f.n });
        }
        let v: Vec<Vec2> = f.vertices.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        if f.closed {
            DiscreteCurve::new(v)
        } else {
            DiscreteCurve::open(v)
        }
    }
}

pub fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let f: CurveFile = serde_json::from_str(&text)?;
    f.try_into()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FrameLine {
    t: f64,
    vertices: Vec<[f64; 2]>,
}

/// One frame per line: `{"t": t, "vertices": [...]}`.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    for f in &traj.frames {
        let line = FrameLine {
            t: f.t,
            vertices: f.curve.vertices().iter().map(|v| [v.x, v.y]).collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads the frames written by [`write_trajectory`].
pub fn read_frames<R: Read>(r: R) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: FrameLine = serde_json::from_str(&line)?;
        let curve = DiscreteCurve::new(f.vertices.iter().map(|p| Vec2::new(p[0], p[1])).collect())?;
        frames.push(Frame { t: f.t, curve });
    }
    Ok(frames)
}

/// Columns `t, dt, max_k, min_edge, length`.
pub fn write_diagnostics<W: Write>(w: W, steps: &[StepDiagnostics]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for s in steps {
        csv.serialize(s)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    tau: f64,
    sigma: f64,
    px: f64,
    py: f64,
}

/// Columns `tau, sigma, px, py`.
pub fn write_profile<W: Write>(w: W, profile: &[DensityReport]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in profile {
        csv.serialize(ProfileRow {
            tau: r.diagnostics.tau,
            sigma: r.value,
            px: r.p_star[0],
            py: r.p_star[1],
        })?;
    }
    csv.flush()?;
    Ok(())
}
