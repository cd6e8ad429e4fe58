//! CSV trace files: header `t,u,y[,...]`, one row per grid time, row 0 at
//! `t = 0`.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::signal::{Signal, SignalError};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace header must start with t,u,y, got {0:?}")]
    BadHeader(Vec<String>),
    #[error("row {row}: {msg}")]
    BadRow { row: usize, msg: String },
    #[error("time column is not a uniform grid starting at 0 (row {row})")]
    NonUniformGrid { row: usize },
    #[error("column {column} has {got} samples, expected {expected}")]
    LengthMismatch {
        column: String,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Named columns sampled on a common uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    len: usize,
    columns: Vec<(String, Vec<f64>)>,
}

impl Trace {
    pub fn new(dt: f64, len: usize) -> Self {
        Self {
            dt,
            len,
            columns: Vec::new(),
        }
    }

    pub fn from_signals(u: &Signal, y: &Signal) -> Self {
        let mut trace = Self::new(u.dt(), u.len());
        trace.columns.push(("u".into(), u.values().to_vec()));
        trace.columns.push(("y".into(), y.values().to_vec()));
        trace
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<(), TraceError> {
        if values.len() != self.len {
            return Err(TraceError::LengthMismatch {
                column: name.to_string(),
                got: values.len(),
                expected: self.len,
            });
        }
        self.columns.retain(|(n, _)| n != name);
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Result<Self, TraceError> {
        self.push(name, values)?;
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn signal(&self, name: &str) -> Option<Result<Signal, SignalError>> {
        self.column(name).map(|v| Signal::new(self.dt, v.to_vec()))
    }

    /// Writes with 17 significant digits so that values survive a round trip.
    pub fn write<W: Write>(&self, writer: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for k in 0..self.len {
            let mut row = vec![format!("{:.16e}", k as f64 * self.dt)];
            row.extend(self.columns.iter().map(|(_, v)| format!("{:.16e}", v[k])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<(), TraceError> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, TraceError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[0] != "t" || header[1] != "u" || header[2] != "y" {
            return Err(TraceError::BadHeader(header));
        }
        let mut times = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
        for (row, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(TraceError::BadRow {
                    row,
                    msg: format!("{} fields, expected {}", record.len(), header.len()),
                });
            }
            for (i, field) in record.iter().enumerate() {
                let x: f64 = field.parse().map_err(|_| TraceError::BadRow {
                    row,
                    msg: format!("cannot parse {field:?}"),
                })?;
                if !x.is_finite() {
                    return Err(TraceError::BadRow {
                        row,
                        msg: format!("non-finite value in column {}", header[i]),
                    });
                }
                if i == 0 {
                    times.push(x);
                } else {
                    cols[i - 1].push(x);
                }
            }
        }
        if times.len() < 2 {
            return Err(SignalError::TooShort(times.len()).into());
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(TraceError::NonUniformGrid { row: 1 });
        }
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-6 * dt {
                return Err(TraceError::NonUniformGrid { row: k });
            }
        }
        Ok(Self {
            dt,
            len: times.len(),
            columns: header[1..].iter().cloned().zip(cols).collect(),
        })
    }

    pub fn read_path(path: &Path) -> Result<Self, TraceError> {
        Self::read(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let u = Signal::sample(1.0, 0.1, |t| (3.0 * t).sin() / 7.0).unwrap();
        let y = Signal::sample(1.0, 0.1, |t| t.exp()).unwrap();
        let trace = Trace::from_signals(&u, &y)
            .with("v", y.values().iter().map(|v| -v).collect())
            .unwrap();
        let mut buf = Vec::new();
        trace.write(&mut buf).unwrap();
        let back = Trace::read(buf.as_slice()).unwrap();
        assert_eq!(back.column("u").unwrap(), u.values());
        assert_eq!(back.column("v").unwrap(), trace.column("v").unwrap());
        assert!((back.dt() - 0.1).abs() < 1e-15);
        assert_eq!(back.names().collect::<Vec<_>>(), ["u", "y", "v"]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Trace::read("t,y,u\n0,1,2\n1,1,2\n".as_bytes()),
            Err(TraceError::BadHeader(_))
        ));
        assert!(matches!(
            Trace::read("t,u,y\n0,1,2\n1,1,2\n3,1,1\n".as_bytes()),
            Err(TraceError::NonUniformGrid { .. })
        ));
        assert!(matches!(
            Trace::read("t,u,y\n0,1,abc\n1,1,2\n".as_bytes()),
            Err(TraceError::BadRow { row: 0, .. })
        ));
        assert!(Trace::read("t,u,y\n0,1,2\n".as_bytes()).is_err());
    }
}
