//! CSV formats for profiles and sweep tables.
//!
//! Numbers are written with `{:.16e}`, enough to round-trip every `f64`.
//! Missing sweep entries are written as `NA`.

use std::io::{Read, Write};

use crate::asymptotics::SweepRecord;
use crate::error::{Error, Result};
use crate::problem::RadialProfile;

pub const PROFILE_HEADER: [&str; 3] = ["r", "u", "du"];
pub const MISSING: &str = "NA";

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_profile_csv<W: Write>(out: W, profile: &RadialProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER).map_err(io_err)?;
    for i in 0..profile.len() {
        w.write_record([
            fmt_f64(profile.nodes()[i]),
            fmt_f64(profile.values()[i]),
            fmt_f64(profile.derivs()[i]),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn profile_csv_string(profile: &RadialProfile) -> String {
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, profile).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

pub fn read_profile_csv<R: Read>(input: R) -> Result<RadialProfile> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(io_err)?.clone();
    if header.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(Error::InvalidProfile(format!(
            "expected header r,u,du, got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut r, mut u, mut du) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| {
                    Error::InvalidProfile(format!("row {}: missing column {}", line + 2, k + 1))
                })?
                .parse::<f64>()
                .map_err(|e| Error::InvalidProfile(format!("row {}: {e}", line + 2)))
        };
        r.push(parse(0)?);
        u.push(parse(1)?);
        du.push(parse(2)?);
    }
    RadialProfile::new(r, u, du)
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SweepRecord::COLUMNS).map_err(io_err)?;
    for rec in records {
        let row: Vec<String> = rec
            .fields()
            .iter()
            .map(|f| f.map_or_else(|| MISSING.to_string(), fmt_f64))
            .collect();
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn sweep_csv_string(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
