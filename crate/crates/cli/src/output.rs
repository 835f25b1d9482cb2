//! CSV, PLY and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rotcomp::simcore::{LidarFrame, Pose};

/// Decimal text with at most 9 significant digits.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}

/// A CSV body built in memory and written in one go.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line: Vec<String> = fields.into_iter().map(|s| s.as_ref().to_string()).collect();
        self.text += &line.join(",");
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, &self.text)
    }
}

pub fn poses_csv(poses: &[Pose]) -> Csv {
    let mut csv = Csv::new(&["timestamp", "tx", "ty", "tz", "qw", "qx", "qy", "qz"]);
    for p in poses {
        let q = rotcomp::geom::UnitQuaternion::from_rotation_matrix(&p.rotation);
        let t = p.translation;
        csv.row([p.timestamp, t.x, t.y, t.z, q.w, q.i, q.j, q.k].map(num));
    }
    csv
}

/// World-frame returns of one frame as ASCII PLY.
pub fn frame_ply(frame: &LidarFrame) -> String {
    let hits: Vec<_> = frame
        .points
        .iter()
        .filter_map(|p| {
            p.range
                .map(|r| (p.origin + r * p.direction, p.timestamp, p.ray_index))
        })
        .collect();
    let mut s = String::new();
    s += "ply\nformat ascii 1.0\n";
    let _ = writeln!(s, "comment frame {}", frame.frame_index);
    let _ = writeln!(s, "element vertex {}", hits.len());
    s += "property float x\nproperty float y\nproperty float z\nproperty float time\nproperty int ray_index\nend_header\n";
    for (p, t, ray) in hits {
        let _ = writeln!(
            s,
            "{} {} {} {} {ray}",
            p.x as f32, p.y as f32, p.z as f32, t as f32
        );
    }
    s
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    /// Written to a temporary name and renamed into place.
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&tmp, text + "\n")?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(0.1234567891234), "0.123456789");
        assert_eq!(num(2.4), "2.4");
        assert_eq!(num(-1234567891.0), "-1234567890");
        assert_eq!(num(1.5e-7), "0.00000015");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(["1", "2"]);
        assert_eq!(c.as_str(), "a,b\n1,2\n");
    }
}
