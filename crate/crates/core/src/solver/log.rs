use std::io::{BufRead, Write};

use crate::error::{ensure, Error, Result};

pub const CSV_HEADER: &str = "iter,objective,residual_norm,rel_error,step,elapsed_ms";

/// State of one iterate `T_l` and the step taken from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `½‖P_Ω(T_l − T*)‖_F²`.
    pub objective: f64,
    pub residual_norm: f64,
    pub rel_error: Option<f64>,
    /// Step size used to leave `T_l`; absent for the final iterate.
    pub step: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    RelativeError,
    IterateChange,
    Stationary,
    MaxIters,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::RelativeError => "rel_error",
            StopReason::IterateChange => "iterate_change",
            StopReason::Stationary => "stationary",
            StopReason::MaxIters => "max_iters",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
    pub stop_reason: Option<StopReason>,
    /// Number of steps taken.
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl IterationLog {
    pub fn new() -> Self {
        Self { records: Vec::new(), stop_reason: None, iterations: 0, warnings: Vec::new() }
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_rel_error(&self) -> Option<f64> {
        self.last().and_then(|r| r.rel_error)
    }

    /// Equality of every field except wall-clock time, compared bitwise.
    pub fn same_trajectory(&self, other: &IterationLog) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.iter == b.iter
                    && a.objective.to_bits() == b.objective.to_bits()
                    && a.residual_norm.to_bits() == b.residual_norm.to_bits()
                    && bits(a.rel_error) == bits(b.rel_error)
                    && bits(a.step) == bits(b.step)
            })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                w,
                "{},{:?},{:?},{},{},{:?}",
                r.iter,
                r.objective,
                r.residual_norm,
                opt(r.rel_error),
                opt(r.step),
                r.elapsed_ms
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the CSV written by [`IterationLog::write_csv`]. Stop reason and
    /// warnings are not part of the format; `iterations` is the last `iter`.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        ensure!(header.trim() == CSV_HEADER, Format, "unexpected log header {header:?}");
        let mut log = IterationLog::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            ensure!(f.len() == 6, Format, "log line {}: expected 6 fields", k + 2);
            let num = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| Error::Format(format!("log line {}: bad number {s:?}", k + 2)))
            };
            let opt = |s: &str| -> Result<Option<f64>> { if s.trim().is_empty() { Ok(None) } else { num(s).map(Some) } };
            log.records.push(IterationRecord {
                iter: f[0].trim().parse().map_err(|_| Error::Format(format!("log line {}: bad iter", k + 2)))?,
                objective: num(f[1])?,
                residual_norm: num(f[2])?,
                rel_error: opt(f[3])?,
                step: opt(f[4])?,
                elapsed_ms: num(f[5])?,
            });
        }
        log.iterations = log.records.last().map_or(0, |r| r.iter);
        Ok(log)
    }
}

impl Default for IterationLog {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut log = IterationLog::new();
        log.records.push(IterationRecord {
            iter: 0,
            objective: 0.5,
            residual_norm: 1.0,
            rel_error: None,
            step: Some(1.0 / 3.0),
            elapsed_ms: 0.25,
        });
        log.records.push(IterationRecord {
            iter: 1,
            objective: 1e-20,
            residual_norm: 1.4142135623730951e-10,
            rel_error: Some(3e-11),
            step: None,
            elapsed_ms: 1.5,
        });
        log.iterations = 1;
        let s = log.to_csv_string();
        assert!(s.starts_with(CSV_HEADER));
        assert!(s.contains("\n0,0.5,1.0,,"));
        let back = IterationLog::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.records, log.records);
        assert!(back.same_trajectory(&log));
        assert!(IterationLog::read_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn trajectory_comparison_ignores_time() {
        let rec = IterationRecord { iter: 0, objective: 1.0, residual_norm: 1.0, rel_error: None, step: None, elapsed_ms: 1.0 };
        let mut a = IterationLog::new();
        a.records.push(rec);
        let mut b = a.clone();
        b.records[0].elapsed_ms = 7.0;
        assert!(a.same_trajectory(&b));
        b.records[0].objective = 1.0 + f64::EPSILON;
        assert!(!a.same_trajectory(&b));
    }
}
