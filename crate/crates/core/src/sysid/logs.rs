use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Free-swing record of one passive joint.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationLog {
    /// Sample times (s), strictly increasing.
    pub t: Vec<f64>,
    /// Joint angle relative to the hanging equilibrium (rad).
    pub angle: Vec<f64>,
    pub axis: String,
}

/// Release trials: command time and detected free-fall onset (s).
#[derive(Clone, Debug, PartialEq)]
pub struct ReleaseEventLog {
    pub t_cmd: Vec<f64>,
    pub t_onset: Vec<f64>,
}

fn malformed(path: &Path, row: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLog {
        path: path.to_path_buf(),
        row,
        reason: reason.into(),
    }
}

/// Read a two-column CSV whose header must be `cols`. Rows are numbered from
/// 1 for the header.
fn read_two_columns(path: &Path, text: &str, cols: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| malformed(path, 1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != cols {
        return Err(malformed(path, 1, format!("expected header `{}`, found `{}`", cols.join(","), names.join(","))));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| malformed(path, row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(malformed(path, row, format!("expected 2 columns, found {}", rec.len())));
        }
        let parse = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| malformed(path, row, format!("column `{}`: `{}` is not a number", cols[i], &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed(path, row, format!("column `{}` is not finite", cols[i])))
            }
        };
        a.push(parse(0)?);
        b.push(parse(1)?);
    }
    Ok((a, b))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl OscillationLog {
    pub fn new(t: Vec<f64>, angle: Vec<f64>, axis: impl Into<String>) -> Result<Self> {
        let log = OscillationLog {
            t,
            angle,
            axis: axis.into(),
        };
        log.check(Path::new("<memory>"))?;
        Ok(log)
    }

    fn check(&self, path: &Path) -> Result<()> {
        if self.t.len() != self.angle.len() {
            return Err(Error::Shape("time and angle columns differ in length".into()));
        }
        if let Some(k) = self.t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(malformed(path, k + 3, "timestamps must be strictly increasing"));
        }
        Ok(())
    }

    /// CSV with header `t,angle`.
    pub fn parse(path: impl Into<PathBuf>, text: &str, axis: impl Into<String>) -> Result<Self> {
        let path = path.into();
        let (t, angle) = read_two_columns(&path, text, ["t", "angle"])?;
        let log = OscillationLog {
            t,
            angle,
            axis: axis.into(),
        };
        log.check(&path)?;
        Ok(log)
    }

    pub fn load(path: impl AsRef<Path>, axis: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(path, &read_text(path)?, axis)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Mean sampling rate (Hz).
    pub fn sample_rate(&self) -> f64 {
        if self.t.len() < 2 {
            return 0.0;
        }
        (self.t.len() - 1) as f64 / (self.t[self.t.len() - 1] - self.t[0])
    }

    /// Number of sign changes of the angle; two per full period.
    pub fn zero_crossings(&self) -> usize {
        let mut last = 0.0;
        let mut count = 0;
        for &a in &self.angle {
            if a != 0.0 {
                if last * a < 0.0 {
                    count += 1;
                }
                last = a;
            }
        }
        count
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Write(format!("{}: {e}", path.display())))?;
        w.write_record(["t", "angle"])?;
        for (t, a) in self.t.iter().zip(&self.angle) {
            w.write_record([t.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl ReleaseEventLog {
    pub fn new(t_cmd: Vec<f64>, t_onset: Vec<f64>) -> Result<Self> {
        let log = ReleaseEventLog { t_cmd, t_onset };
        log.check(Path::new("<memory>"))?;
        Ok(log)
    }

    fn check(&self, path: &Path) -> Result<()> {
        if self.t_cmd.len() != self.t_onset.len() {
            return Err(Error::Shape("command and onset columns differ in length".into()));
        }
        if let Some(k) = self.t_cmd.iter().zip(&self.t_onset).position(|(c, o)| o < c) {
            return Err(malformed(path, k + 2, "free-fall onset precedes the command"));
        }
        Ok(())
    }

    /// CSV with header `t_cmd,t_onset`.
    pub fn parse(path: impl Into<PathBuf>, text: &str) -> Result<Self> {
        let path = path.into();
        let (t_cmd, t_onset) = read_two_columns(&path, text, ["t_cmd", "t_onset"])?;
        let log = ReleaseEventLog { t_cmd, t_onset };
        log.check(&path)?;
        Ok(log)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(path, &read_text(path)?)
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        self.t_cmd.iter().zip(&self.t_onset).map(|(c, o)| o - c)
    }

    pub fn len(&self) -> usize {
        self.t_cmd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_cmd.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Write(format!("{}: {e}", path.display())))?;
        w.write_record(["t_cmd", "t_onset"])?;
        for (c, o) in self.t_cmd.iter().zip(&self.t_onset) {
            w.write_record([c.to_string(), o.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
