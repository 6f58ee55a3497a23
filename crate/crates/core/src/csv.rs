//! CSV output for traces, sweeps and dumps.
//!
//! Numbers use `.` as decimal separator and 16 significant digits in
//! scientific notation, independent of locale; lines end with `\n`.

use std::io::{self, Write};

use crate::experiments::{EigenvectorTable, SweepResult};
use crate::transfer::FidelityTrace;

pub const TRACE_HEADER: &str = "t,f_abs,f_sq,fidelity";
pub const SWEEP_HEADER: &str = "n,variant,fid_max,t_meas,t_id,t_est,ratio,delta12,f_m,gamma1_sq,gamma2_sq";
pub const ONSITE_HEADER: &str = "site,h_ii";
/// Placeholder for hole sites in eigenvector dumps.
pub const NULL: &str = "null";

pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

pub fn write_trace<W: Write>(mut w: W, trace: &FidelityTrace) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for ((&t, &f), &fid) in trace.times.iter().zip(&trace.f_abs).zip(&trace.fidelity) {
        writeln!(w, "{},{},{},{}", num(t), num(f), num(f * f), num(fid))?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut w: W, result: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in &result.rows {
        match &row.outcome {
            Ok(m) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.n,
                row.variant,
                num(m.report.fidelity_max),
                num(m.report.t_measured),
                num(m.report.t_ideal),
                num(m.report.t_estimate),
                num(m.report.ratio_ideal_over_measured),
                num(m.delta12),
                num(m.f_m),
                num(m.gamma1_sq),
                num(m.gamma2_sq),
            )?,
            Err(e) => writeln!(w, "{},{},ERROR:{},,,,,,,,", row.n, row.variant, e.code())?,
        }
    }
    Ok(())
}

pub fn write_eigenvectors<W: Write>(mut w: W, table: &EigenvectorTable) -> io::Result<()> {
    let cols: Vec<String> = table.j_list.iter().map(|j| format!("lambda_{j}")).collect();
    writeln!(w, "site,{}", cols.join(","))?;
    for (site, comps) in &table.rows {
        let cells: Vec<String> = comps.iter().map(|c| c.map_or_else(|| NULL.to_string(), num)).collect();
        writeln!(w, "{site},{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_onsite<W: Write>(mut w: W, rows: &[(usize, f64)]) -> io::Result<()> {
    writeln!(w, "{ONSITE_HEADER}")?;
    for &(site, e) in rows {
        writeln!(w, "{site},{}", num(e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::experiments::{SweepRow, Variant};

    #[test]
    fn numbers_keep_sixteen_digits() {
        assert_eq!(num(std::f64::consts::PI), "3.141592653589793e0");
        assert_eq!(num(0.5), "5.000000000000000e-1");
        assert_eq!(num(-1234.5), "-1.234500000000000e3");
        let back: f64 = num(1.0 / 3.0).parse().unwrap();
        assert!((back - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn error_rows_keep_column_count() {
        let result = SweepResult {
            nu: 3.0,
            rows: vec![SweepRow { n: 7, variant: Variant::Complete, outcome: Err(Error::Degenerate { gap: 0.0 }) }],
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &result).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines[1], "7,complete,ERROR:degenerate,,,,,,,,");
        assert_eq!(lines[1].split(',').count(), SWEEP_HEADER.split(',').count());
    }

    #[test]
    fn eigenvector_nulls() {
        let table = EigenvectorTable { j_list: vec![1, 3], rows: vec![(1, vec![Some(0.5), Some(-1.0)]), (2, vec![None, None])] };
        let mut buf = Vec::new();
        write_eigenvectors(&mut buf, &table).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "site,lambda_1,lambda_3\n1,5.000000000000000e-1,-1.000000000000000e0\n2,null,null\n"
        );
    }
}
