//! Writers for sweep grids: CSV, JSON and a gnuplot matrix file.
//!
//! Floats are printed in scientific notation with 17 significant digits, so
//! a parsed value is bit-identical to the one written.

use std::io::{self, Write};

use linqubit_core::SweepRecord;

pub const CSV_HEADER: [&str; 5] = ["gamma", "phi", "eta", "p_yn", "fidelity"];
pub const CSV_DELTA_HEADER: [&str; 2] = ["dp", "dF"];

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> io::Result<()> {
    let with_deltas = records.iter().any(|r| r.dp.is_some());
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_deltas {
        header.extend(CSV_DELTA_HEADER);
    }
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![
            format_number(r.gamma),
            format_number(r.phi),
            format_number(r.eta),
            format_number(r.p_yn),
            format_number(r.fidelity),
        ];
        if with_deltas {
            row.push(format_number(r.dp.unwrap_or(0.0)));
            row.push(format_number(r.df.unwrap_or(0.0)));
        }
        writer.write_record(&row)?;
    }
    writer.flush()
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<SweepRecord>, csv::Error> {
    let mut reader = csv::Reader::from_reader(input);
    let has_deltas = reader.headers()?.len() > CSV_HEADER.len();
    reader
        .records()
        .map(|row| {
            let row = row?;
            let field = |i: usize| -> Result<f64, csv::Error> {
                row[i].parse::<f64>().map_err(|e| {
                    csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, e))
                })
            };
            Ok(SweepRecord {
                gamma: field(0)?,
                phi: field(1)?,
                eta: field(2)?,
                p_yn: field(3)?,
                fidelity: field(4)?,
                dp: if has_deltas { Some(field(5)?) } else { None },
                df: if has_deltas { Some(field(6)?) } else { None },
            })
        })
        .collect()
}

pub fn write_json<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out)
}

/// Two gnuplot `matrix nonuniform` blocks (P_YN, then F), separated by two blank lines.
pub fn write_gnuplot<W: Write>(records: &[SweepRecord], gammas: &[f64], mut out: W) -> io::Result<()> {
    let rows: Vec<&[SweepRecord]> = records.chunks(gammas.len()).collect();
    for (i, (label, pick)) in [
        ("p_yn", (|r: &SweepRecord| r.p_yn) as fn(&SweepRecord) -> f64),
        ("fidelity", |r: &SweepRecord| r.fidelity),
    ]
    .into_iter()
    .enumerate()
    {
        if i > 0 {
            writeln!(out, "\n")?;
        }
        writeln!(out, "# {label}: first row gamma, first column phi")?;
        write!(out, "{}", gammas.len())?;
        for g in gammas {
            write!(out, " {}", format_number(*g))?;
        }
        writeln!(out)?;
        for row in &rows {
            write!(out, "{}", format_number(row[0].phi))?;
            for r in *row {
                write!(out, " {}", format_number(pick(r)))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(g: f64, phi: f64) -> SweepRecord {
        SweepRecord { gamma: g, phi, eta: 0.8, p_yn: 0.1 * g, fidelity: 1.0 / 3.0, dp: None, df: None }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_number(0.1875), "1.8750000000000000e-1");
        assert_eq!(format_number(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(format_number(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn csv_header_with_and_without_deltas() {
        let mut buf = Vec::new();
        write_csv(&[record(0.5, 0.1)], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("gamma,phi,eta,p_yn,fidelity\n"));

        let mut with = record(0.5, 0.1);
        with.dp = Some(1e-12);
        with.df = Some(-2e-13);
        let mut buf = Vec::new();
        write_csv(&[with], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("gamma,phi,eta,p_yn,fidelity,dp,dF\n"));
    }

    #[test]
    fn json_field_names() {
        let mut r = record(0.5, 0.1);
        r.df = Some(0.0);
        r.dp = Some(0.0);
        let mut buf = Vec::new();
        write_json(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for key in ["\"gamma\"", "\"phi\"", "\"eta\"", "\"p_yn\"", "\"fidelity\"", "\"dp\"", "\"dF\""] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
    }

    #[test]
    fn gnuplot_layout() {
        let recs = vec![record(0.0, 0.0), record(1.0, 0.0), record(0.0, 1.0), record(1.0, 1.0)];
        let mut buf = Vec::new();
        write_gnuplot(&recs, &[0.0, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let blocks: Vec<&str> = text.split("\n\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].lines().count(), 4);
    }
}
