//! CSV form of convergence tables.

use std::io::{Read, Write};
use std::path::Path;

use super::convergence::ConvergenceRow;
use crate::error::{Error, Result};

pub const HEADER: [&str; 10] = [
    "dt",
    "inv_h",
    "e_u",
    "roc_u",
    "e_c",
    "roc_c",
    "e_p",
    "roc_p",
    "total",
    "roc_total",
];

/// Six significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.5e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

/// Writes the header and one record per row.
pub fn write_table<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            format_value(r.dt),
            r.inv_h.to_string(),
            format_value(r.e_u),
            opt(r.roc_u),
            format_value(r.e_c),
            opt(r.roc_c),
            format_value(r.e_p),
            opt(r.roc_p),
            format_value(r.total),
            opt(r.roc_total),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_table(f, rows)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("column {what}: '{s}' is not a number")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

/// Parses a table written by [`write_table`].
pub fn read_table<R: Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut rd = ::csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Config(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let col = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ConvergenceRow {
            dt: parse_f64(col(0), "dt")?,
            inv_h: col(1)
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("column inv_h: '{}'", col(1))))?,
            e_u: parse_f64(col(2), "e_u")?,
            roc_u: parse_opt(col(3), "roc_u")?,
            e_c: parse_f64(col(4), "e_c")?,
            roc_c: parse_opt(col(5), "roc_c")?,
            e_p: parse_f64(col(6), "e_p")?,
            roc_p: parse_opt(col(7), "roc_p")?,
            total: parse_f64(col(8), "total")?,
            roc_total: parse_opt(col(9), "roc_total")?,
        });
    }
    Ok(rows)
}

pub fn read_table_file(path: &Path) -> Result<Vec<ConvergenceRow>> {
    read_table(std::fs::File::open(path)?)
}

/// The row as it reads back from the CSV (values rounded to six significant digits).
pub fn rounded(row: &ConvergenceRow) -> ConvergenceRow {
    let r = |v: f64| {
        format_value(v)
            .parse::<f64>()
            .expect("formatted float parses")
    };
    ConvergenceRow {
        dt: r(row.dt),
        inv_h: row.inv_h,
        e_u: r(row.e_u),
        roc_u: row.roc_u.map(r),
        e_c: r(row.e_c),
        roc_c: row.roc_c.map(r),
        e_p: r(row.e_p),
        roc_p: row.roc_p.map(r),
        total: r(row.total),
        roc_total: row.roc_total.map(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_value(0.158216), "1.58216e-1");
        assert_eq!(format_value(1.0), "1.00000e0");
    }

    #[test]
    fn header_and_blank_first_rates() {
        let row = ConvergenceRow {
            dt: 0.1,
            inv_h: 10,
            e_u: 1e-2,
            roc_u: None,
            e_c: 2e-3,
            roc_c: None,
            e_p: 0.15,
            roc_p: None,
            total: 0.2,
            roc_total: None,
        };
        let mut buf = Vec::new();
        write_table(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "1.00000e-1,10,1.00000e-2,,2.00000e-3,,1.50000e-1,,2.00000e-1,"
        );
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_table("a,b\n1,2\n".as_bytes()).is_err());
    }
}
