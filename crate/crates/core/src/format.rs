//! Trajectory text format and numeric formatting for CSV output.
//!
//! ```text
//! # mpcstat trajectory v1
//! # band=f6
//! # freq_ghz=28
//! # tx_power_dbm=0
//! # nlos_through=30
//! location_index,power_dbm,phase_deg,delay_s,aoa_az_deg,aoa_el_deg,aod_az_deg,aod_el_deg,n_reflections,n_diffractions
//! 1,-95.25,117.5,2.5e-7,12.5,-3.1,-167.5,3.1,1,0
//! ```
//!
//! Locations `1..=nlos_through` are NLOS, the rest LOS. Rows are grouped by
//! non-decreasing location index. Floats are written in shortest round-trip
//! form, so `parse(write(t)) == t`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::angle::{is_valid_azimuth, is_valid_elevation, Direction};
use crate::channel::{BandSpec, Mpc, Segment, Snapshot, Trajectory};

pub const MAGIC: &str = "# mpcstat trajectory v1";

pub const COLUMNS: [&str; 10] = [
    "location_index",
    "power_dbm",
    "phase_deg",
    "delay_s",
    "aoa_az_deg",
    "aoa_el_deg",
    "aod_az_deg",
    "aod_el_deg",
    "n_reflections",
    "n_diffractions",
];

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}, field `{field}`: {message}")]
    MalformedRow { line: usize, field: &'static str, message: String },
    #[error("line {line}: location_index {found} follows {previous}; rows must be grouped in ascending order")]
    NonMonotoneLocation { line: usize, previous: u32, found: u32 },
    #[error("line {line}, field `{field}`: angle {value} outside {range}")]
    AngleOutOfRange { line: usize, field: &'static str, value: f64, range: &'static str },
    #[error("no MPCs")]
    NoMpcs,
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("segments are not a leading NLOS run followed by LOS (location {0})")]
    SegmentLayout(u32),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io { path: path.to_path_buf(), source })?;
    parse_trajectory(&text)
}

#[derive(Default)]
struct Header {
    band: Option<String>,
    freq_ghz: Option<f64>,
    tx_power_dbm: Option<f64>,
    nlos_through: Option<u32>,
}

fn parse_header_line(header: &mut Header, line_no: usize, body: &str) -> Result<(), ParseError> {
    let err = |message: String| ParseError::Header { line: line_no, message };
    let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected `key=value`, got {body:?}")))?;
    let (key, value) = (key.trim(), value.trim());
    let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
    let dup = |seen: bool| if seen { Err(err(format!("duplicate key `{key}`"))) } else { Ok(()) };
    match key {
        "band" => {
            dup(header.band.is_some())?;
            header.band = Some(value.to_string());
        }
        "freq_ghz" => {
            dup(header.freq_ghz.is_some())?;
            header.freq_ghz = Some(num(value)?);
        }
        "tx_power_dbm" => {
            dup(header.tx_power_dbm.is_some())?;
            let v = num(value)?;
            if !v.is_finite() {
                return Err(err("tx_power_dbm must be finite".into()));
            }
            header.tx_power_dbm = Some(v);
        }
        "nlos_through" => {
            dup(header.nlos_through.is_some())?;
            header.nlos_through = Some(value.parse().map_err(|e| err(format!("nlos_through: {e}")))?);
        }
        other => return Err(err(format!("unknown header key `{other}`"))),
    }
    Ok(())
}

fn field<T: std::str::FromStr>(line: usize, name: &'static str, raw: &str) -> Result<T, ParseError>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| ParseError::MalformedRow {
        line,
        field: name,
        message: format!("{raw:?}: {e}"),
    })
}

fn finite(line: usize, name: &'static str, raw: &str) -> Result<f64, ParseError> {
    let v: f64 = field(line, name, raw)?;
    if !v.is_finite() {
        return Err(ParseError::MalformedRow { line, field: name, message: format!("{raw:?} is not finite") });
    }
    Ok(v)
}

fn azimuth(line: usize, name: &'static str, raw: &str) -> Result<f64, ParseError> {
    let v = finite(line, name, raw)?;
    if !is_valid_azimuth(v) {
        return Err(ParseError::AngleOutOfRange { line, field: name, value: v, range: "[-180, 180)" });
    }
    Ok(v)
}

fn elevation(line: usize, name: &'static str, raw: &str) -> Result<f64, ParseError> {
    let v = finite(line, name, raw)?;
    if !is_valid_elevation(v) {
        return Err(ParseError::AngleOutOfRange { line, field: name, value: v, range: "[-90, 90]" });
    }
    Ok(v)
}

fn parse_row(line: usize, text: &str) -> Result<(u32, Mpc), ParseError> {
    let cols: Vec<&str> = text.split(',').collect();
    if cols.len() != COLUMNS.len() {
        return Err(ParseError::MalformedRow {
            line,
            field: COLUMNS[cols.len().min(COLUMNS.len() - 1)],
            message: format!("expected {} fields, found {}", COLUMNS.len(), cols.len()),
        });
    }
    let location: u32 = field(line, COLUMNS[0], cols[0])?;
    if location == 0 {
        return Err(ParseError::MalformedRow { line, field: COLUMNS[0], message: "must be >= 1".into() });
    }
    let phase = finite(line, COLUMNS[2], cols[2])?;
    if !(0.0..360.0).contains(&phase) {
        return Err(ParseError::AngleOutOfRange { line, field: COLUMNS[2], value: phase, range: "[0, 360)" });
    }
    let delay = finite(line, COLUMNS[3], cols[3])?;
    if delay < 0.0 {
        return Err(ParseError::MalformedRow { line, field: COLUMNS[3], message: "must be >= 0".into() });
    }
    let mpc = Mpc {
        power_dbm: finite(line, COLUMNS[1], cols[1])?,
        phase_deg: phase,
        delay_s: delay,
        aoa: Direction::new(azimuth(line, COLUMNS[4], cols[4])?, elevation(line, COLUMNS[5], cols[5])?),
        aod: Direction::new(azimuth(line, COLUMNS[6], cols[6])?, elevation(line, COLUMNS[7], cols[7])?),
        n_reflections: field(line, COLUMNS[8], cols[8])?,
        n_diffractions: field(line, COLUMNS[9], cols[9])?,
    };
    Ok((location, mpc))
}

/// Parses the trajectory text format. Either the whole file is accepted or
/// an error naming the line and field is returned.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        Some((n, l)) => {
            return Err(ParseError::Header { line: n, message: format!("expected `{MAGIC}`, got {l:?}") });
        }
        None => return Err(ParseError::Header { line: 1, message: "empty file".into() }),
    }

    let mut header = Header::default();
    let mut saw_columns = false;
    let mut groups: Vec<(u32, Vec<Mpc>)> = Vec::new();
    for (line_no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_columns {
            if let Some(body) = line.strip_prefix('#') {
                parse_header_line(&mut header, line_no, body.trim())?;
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != COLUMNS {
                return Err(ParseError::Header {
                    line: line_no,
                    message: format!("expected column line `{}`", COLUMNS.join(",")),
                });
            }
            saw_columns = true;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (location, mpc) = parse_row(line_no, line)?;
        match groups.last_mut() {
            Some((prev, mpcs)) if *prev == location => mpcs.push(mpc),
            Some((prev, _)) if *prev > location => {
                return Err(ParseError::NonMonotoneLocation { line: line_no, previous: *prev, found: location });
            }
            _ => groups.push((location, vec![mpc])),
        }
    }

    let band_label = header.band.ok_or(ParseError::MissingKey("band"))?;
    let freq = header.freq_ghz.ok_or(ParseError::MissingKey("freq_ghz"))?;
    let tx = header.tx_power_dbm.ok_or(ParseError::MissingKey("tx_power_dbm"))?;
    let nlos_through = header.nlos_through.ok_or(ParseError::MissingKey("nlos_through"))?;
    let band = BandSpec::new(band_label, freq).map_err(|e| ParseError::Header { line: 1, message: e.to_string() })?;
    if !saw_columns || groups.is_empty() {
        return Err(ParseError::NoMpcs);
    }
    let snapshots = groups
        .into_iter()
        .map(|(location, mpcs)| {
            let segment = if location <= nlos_through { Segment::Nlos } else { Segment::Los };
            Snapshot { location_index: location, segment, mpcs }
        })
        .collect();
    Ok(Trajectory { band, tx_power_dbm: tx, snapshots })
}

fn nlos_boundary(t: &Trajectory) -> Result<u32, WriteError> {
    let mut boundary = 0;
    let mut in_los = false;
    for s in &t.snapshots {
        match s.segment {
            Segment::Nlos if in_los => return Err(WriteError::SegmentLayout(s.location_index)),
            Segment::Nlos => boundary = s.location_index,
            Segment::Los => in_los = true,
        }
    }
    Ok(boundary)
}

/// Serializes a trajectory in the canonical text format.
pub fn write_trajectory_string(t: &Trajectory) -> Result<String, WriteError> {
    let boundary = nlos_boundary(t)?;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "# band={}", t.band.label);
    let _ = writeln!(out, "# freq_ghz={}", t.band.freq_ghz);
    let _ = writeln!(out, "# tx_power_dbm={}", t.tx_power_dbm);
    let _ = writeln!(out, "# nlos_through={boundary}");
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for s in &t.snapshots {
        for m in &s.mpcs {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{},{},{},{},{},{}",
                s.location_index,
                m.power_dbm,
                m.phase_deg,
                m.delay_s,
                m.aoa.az_deg,
                m.aoa.el_deg,
                m.aod.az_deg,
                m.aod.el_deg,
                m.n_reflections,
                m.n_diffractions
            );
        }
    }
    Ok(out)
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<(), WriteError> {
    let text = write_trajectory_string(t)?;
    std::fs::write(path, text).map_err(|source| WriteError::Io { path: path.to_path_buf(), source })
}

/// Formats a float with 9 significant digits, `%.9g` style.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
