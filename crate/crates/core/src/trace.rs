//! Per-iteration records of an adaptive run and their CSV form.

use std::io;
use std::path::Path;

pub const TRACE_HEADER: [&str; 11] = [
    "k",
    "N",
    "elements",
    "eta_hat_sq",
    "eta_sq",
    "eta_res_sq",
    "rho_sq",
    "I_primal",
    "D_dual",
    "discrete_gap",
    "seconds",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// Number of vertices.
    pub n: usize,
    pub elements: usize,
    pub eta_hat_sq: f64,
    pub eta_sq: f64,
    /// Residual estimator, `NaN` where it is not defined.
    pub eta_res_sq: f64,
    /// `rho_F^2` against the exact solution, or `I(u_k) - I_ref` when only a
    /// reference energy is available.
    pub rho_sq: f64,
    /// Primal energy of the conforming approximation.
    pub i_primal: f64,
    /// Dual energy of the reconstructed field (vertex rule).
    pub d_dual: f64,
    /// Discrete primal energy of the CR solution minus discrete dual energy.
    pub discrete_gap: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Free-form `key = value` description of the run.
    pub metadata: Vec<(String, String)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad trace header")]
    Header,
    #[error("row {row}: cannot parse {field:?}")]
    Field { row: usize, field: String },
}

impl Trace {
    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_rows(&mut w).expect("writing to memory");
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
    }

    fn write_rows<W: io::Write>(&self, w: &mut csv::Writer<W>) -> Result<(), csv::Error> {
        w.write_record(TRACE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.n.to_string(),
                r.elements.to_string(),
                fmt(r.eta_hat_sq),
                fmt(r.eta_sq),
                fmt(r.eta_res_sq),
                fmt(r.rho_sq),
                fmt(r.i_primal),
                fmt(r.d_dual),
                fmt(r.discrete_gap),
                fmt(r.seconds),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_rows(&mut w)?;
        Ok(())
    }

    pub fn write_metadata(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let text: String = self
            .metadata
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        std::fs::write(path, text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, TraceError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        if r.headers()?.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(TraceError::Header);
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let f = |j: usize| -> Result<f64, TraceError> {
                rec[j].parse().map_err(|_| TraceError::Field {
                    row: i,
                    field: rec[j].to_string(),
                })
            };
            let u = |j: usize| -> Result<usize, TraceError> {
                rec[j].parse().map_err(|_| TraceError::Field {
                    row: i,
                    field: rec[j].to_string(),
                })
            };
            rows.push(TraceRow {
                k: u(0)?,
                n: u(1)?,
                elements: u(2)?,
                eta_hat_sq: f(3)?,
                eta_sq: f(4)?,
                eta_res_sq: f(5)?,
                rho_sq: f(6)?,
                i_primal: f(7)?,
                d_dual: f(8)?,
                discrete_gap: f(9)?,
                seconds: f(10)?,
            });
        }
        Ok(Trace {
            rows,
            metadata: Vec::new(),
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = Trace {
            rows: vec![TraceRow {
                k: 0,
                n: 65,
                elements: 96,
                eta_hat_sq: 0.1 + 0.2,
                eta_sq: 1.0 / 3.0,
                eta_res_sq: f64::NAN,
                rho_sq: 1e-300,
                i_primal: -0.0745503,
                d_dual: std::f64::consts::PI,
                discrete_gap: f64::INFINITY,
                seconds: 0.0,
            }],
            metadata: vec![],
        };
        let back = Trace::from_csv_str(&t.to_csv_string()).unwrap();
        let (a, b) = (&t.rows[0], &back.rows[0]);
        assert_eq!(a.eta_hat_sq.to_bits(), b.eta_hat_sq.to_bits());
        assert_eq!(a.eta_sq.to_bits(), b.eta_sq.to_bits());
        assert!(b.eta_res_sq.is_nan());
        assert_eq!(a.d_dual.to_bits(), b.d_dual.to_bits());
        assert_eq!(b.discrete_gap, f64::INFINITY);
    }
}
