//! Whitespace-separated plot tables with `#` header lines, one row per SNR point
//! (or per iteration) and one column per scheme.

use std::io::Write;

use super::metrics::to_db;
use super::sweep::SweepResult;
use crate::dd::Scheme;
use crate::error::{Error, Result};

/// Quantity plotted against SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    Ber,
    Nmse,
}

fn schemes_in(result: &SweepResult) -> Vec<Scheme> {
    let mut out: Vec<Scheme> = Vec::new();
    for p in &result.points {
        if !out.contains(&p.scheme) {
            out.push(p.scheme);
        }
    }
    out
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        "nan".into()
    }
}

pub fn write_snr_table<W: Write>(result: &SweepResult, metric: PlotMetric, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let schemes = schemes_in(result);
    let mut snrs: Vec<f64> = Vec::new();
    for p in &result.points {
        if !snrs.contains(&p.snr_db) {
            snrs.push(p.snr_db);
        }
    }
    snrs.sort_by(f64::total_cmp);
    let label = match metric {
        PlotMetric::Ber => "ber",
        PlotMetric::Nmse => "nmse",
    };
    write!(out, "# snr_db").map_err(io)?;
    for s in &schemes {
        write!(out, " {label}_{}", s.name()).map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for snr in snrs {
        write!(out, "{}", num(snr)).map_err(io)?;
        for &s in &schemes {
            let v = result.point(s, snr).map_or(f64::NAN, |p| match metric {
                PlotMetric::Ber => p.ber,
                PlotMetric::Nmse => p.nmse,
            });
            write!(out, " {}", num(v)).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

/// Per-iteration BER and NMSE (dB) for every `(scheme, SNR)` point with a trace.
/// Blocks are separated by two blank lines so gnuplot can address them with `index`.
pub fn write_iteration_table<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let mut first = true;
    for p in result.points.iter().filter(|p| !p.trace.is_empty()) {
        if !first {
            writeln!(out, "\n").map_err(io)?;
        }
        first = false;
        writeln!(out, "# {} at {} dB", p.scheme.name(), p.snr_db).map_err(io)?;
        writeln!(out, "# iteration ber nmse nmse_db").map_err(io)?;
        for t in &p.trace {
            writeln!(out, "{} {} {} {}", t.iteration, num(t.ber), num(t.nmse), num(to_db(t.nmse))).map_err(io)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{IterationSummary, PointResult};

    fn point(scheme: Scheme, snr_db: f64, ber: f64) -> PointResult {
        PointResult {
            scheme,
            snr_db,
            ber,
            nmse: 1e-3,
            nmse_db: -30.0,
            mean_iters: 1.0,
            frames: 1,
            failed_frames: 0,
            bit_errors: 0,
            bits: 0,
            wall_time_s: 0.0,
            trace: vec![IterationSummary { iteration: 0, ber, nmse: 1e-2 }],
        }
    }

    #[test]
    fn snr_table_has_one_column_per_scheme() {
        let r = SweepResult {
            seed: 1,
            points: vec![point(Scheme::FullGuard, 2.0, 0.1), point(Scheme::FullGuard, 0.0, 0.2), point(Scheme::SplitPilot, 0.0, 0.3)],
        };
        let mut buf = Vec::new();
        write_snr_table(&r, PlotMetric::Ber, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# snr_db ber_full ber_split");
        assert_eq!(lines[1], "0.000000000e0 2.000000000e-1 3.000000000e-1");
        assert_eq!(lines[2], "2.000000000e0 1.000000000e-1 nan");
    }

    #[test]
    fn iteration_blocks() {
        let r = SweepResult { seed: 1, points: vec![point(Scheme::SplitPilot, 14.0, 0.1), point(Scheme::ReducedGuard, 14.0, 0.2)] };
        let mut buf = Vec::new();
        write_iteration_table(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("# iteration").count(), 2);
        assert!(text.contains("\n\n\n# reduced at 14 dB"));
        assert!(text.contains("0 1.000000000e-1 1.000000000e-2 -2.000000000e1"));
    }
}
