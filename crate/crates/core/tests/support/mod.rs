#![allow(dead_code)]

pub mod canyon;
pub mod reference;

use mpcstat::pipeline::{Cell, Table};
use mpcstat::{BandSpec, Direction, Mpc, Segment, Snapshot, Trajectory};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mpc(rng: &mut impl Rng) -> Mpc {
    Mpc {
        power_dbm: rng.gen_range(-140.0..-20.0),
        phase_deg: rng.gen_range(0.0..360.0),
        delay_s: rng.gen_range(0.0..2e-6),
        aoa: Direction::new(rng.gen_range(-180.0..180.0), rng.gen_range(-90.0..=90.0)),
        aod: Direction::new(rng.gen_range(-180.0..180.0), rng.gen_range(-90.0..=90.0)),
        n_reflections: rng.gen_range(0..5),
        n_diffractions: if rng.gen_bool(0.2) { 1 } else { 0 },
    }
}

/// Snapshot whose MPCs cluster around a few random directions, so cones and
/// narrow beams see more than one path.
pub fn random_snapshot(rng: &mut impl Rng, location_index: u32, max_mpcs: usize) -> Snapshot {
    let n = rng.gen_range(1..=max_mpcs);
    let centres: Vec<(f64, f64)> =
        (0..rng.gen_range(1..=4)).map(|_| (rng.gen_range(-180.0..180.0), rng.gen_range(-60.0..60.0))).collect();
    let mpcs = (0..n)
        .map(|_| {
            let mut m = random_mpc(rng);
            if rng.gen_bool(0.7) {
                let (az, el) = centres[rng.gen_range(0..centres.len())];
                m.aoa = Direction::new(
                    mpcstat::angle::normalize_azimuth(az + rng.gen_range(-25.0..25.0)),
                    (el + rng.gen_range(-15.0..15.0_f64)).clamp(-90.0, 90.0),
                );
            }
            m
        })
        .collect();
    let segment = if rng.gen_bool(0.5) { Segment::Los } else { Segment::Nlos };
    Snapshot::new(location_index, segment, mpcs).unwrap()
}

pub fn random_trajectory(rng: &mut impl Rng, n_locations: u32, max_mpcs: usize) -> Trajectory {
    let nlos_through = rng.gen_range(0..=n_locations);
    let snaps = (1..=n_locations)
        .map(|i| {
            let mut s = random_snapshot(rng, i, max_mpcs);
            s.segment = if i <= nlos_through { Segment::Nlos } else { Segment::Los };
            s
        })
        .collect();
    Trajectory::new(BandSpec::standard(6).unwrap(), 0.0, snaps).unwrap()
}

/// Absolute tolerance floor for a numeric cell, chosen by column and by the
/// unit of the row (delay spreads are in seconds).
fn floor_for(header: &str, row: &[Cell], table: &Table) -> f64 {
    let metric = table.header.iter().position(|h| *h == "metric").map(|i| &row[i]);
    if matches!(metric, Some(Cell::Text(m)) if m == "DS") {
        return 1e-20;
    }
    match header {
        "fraction" | "mean_mpc_count" => 1e-15,
        _ => 1e-10,
    }
}

pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}

/// Compares pipeline tables against reference rows cell by cell. Text, integer
/// and empty cells must match exactly; numbers within `rel` plus a per-column
/// absolute floor.
pub fn compare_tables(actual: &[Table], expected: &[(String, Vec<Vec<Cell>>)], rel: f64) -> Result<usize, String> {
    let names: Vec<&str> = actual.iter().map(|t| t.name).collect();
    let ref_names: Vec<&str> = expected.iter().map(|(n, _)| n.as_str()).collect();
    if names != ref_names {
        return Err(format!("table sets differ: {names:?} vs {ref_names:?}"));
    }
    let mut compared = 0;
    for (table, (_, rows)) in actual.iter().zip(expected) {
        if table.rows.len() != rows.len() {
            return Err(format!("{}: {} rows, reference has {}", table.name, table.rows.len(), rows.len()));
        }
        for (r, (got, want)) in table.rows.iter().zip(rows).enumerate() {
            if got.len() != want.len() {
                return Err(format!("{} row {r}: width {} vs {}", table.name, got.len(), want.len()));
            }
            for (c, (g, w)) in got.iter().zip(want).enumerate() {
                let ok = match (g, w) {
                    (Cell::Num(a), Cell::Num(b)) => close(*a, *b, rel, floor_for(table.header[c], got, table)),
                    _ => g == w,
                };
                if !ok {
                    return Err(format!("{} row {r} column {}: {g:?} vs reference {w:?}", table.name, table.header[c]));
                }
                compared += 1;
            }
        }
    }
    Ok(compared)
}

/// Compares rendered CSV text against reference rows. Numbers are printed
/// with 9 significant digits, so each side carries up to half a unit in the
/// ninth digit of rounding.
pub fn compare_csv(table: &Table, csv: &str, expected: &[Vec<Cell>]) -> Result<(), String> {
    let mut lines = csv.lines();
    if lines.next() != Some(table.header.join(",").as_str()) {
        return Err(format!("{}: header mismatch", table.name));
    }
    let body: Vec<&str> = lines.collect();
    if body.len() != expected.len() {
        return Err(format!("{}: {} lines vs {} reference rows", table.name, body.len(), expected.len()));
    }
    for (r, (line, want)) in body.iter().zip(expected).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != want.len() {
            return Err(format!("{} line {r}: {} fields", table.name, fields.len()));
        }
        for (c, (f, w)) in fields.iter().zip(want).enumerate() {
            let ok = match w {
                Cell::Num(b) => f
                    .parse::<f64>()
                    .map(|a| close(a, *b, 1e-8, floor_for(table.header[c], &table.rows[r], table)))
                    .unwrap_or(false),
                Cell::Int(i) => *f == i.to_string(),
                Cell::Text(s) => f == s,
                Cell::Empty => f.is_empty(),
            };
            if !ok {
                return Err(format!("{} line {r} column {}: {f:?} vs reference {w:?}", table.name, table.header[c]));
            }
        }
    }
    Ok(())
}
