//! Straight-line reimplementation of the pipeline tables. Uses only the raw
//! trajectory fields and absolute linear powers, with its own angle
//! wrapping, gain formula, greedy cone loop and table layout.

use mpcstat::pipeline::Cell;
use mpcstat::{AngleDomain, Averaging, Mpc, RunConfig, Segment, Trajectory};

type Rows = Vec<Vec<Cell>>;

const CLASS_NAMES: [&str; 4] = ["direct", "single", "double", "beyond_double"];

fn seg_name(s: Segment) -> &'static str {
    match s {
        Segment::Los => "LOS",
        Segment::Nlos => "NLOS",
    }
}

fn t(s: &str) -> Cell {
    Cell::Text(s.to_string())
}

fn class_of(m: &Mpc) -> usize {
    if m.n_diffractions > 0 {
        3
    } else {
        (m.n_reflections as usize).min(3)
    }
}

fn lin(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0)
}

/// Angle difference `a - b` folded into (-180, 180].
fn diff(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d > 180.0 {
        d -= 360.0;
    }
    while d <= -180.0 {
        d += 360.0;
    }
    d
}

fn gate(mpcs: &[Mpc], mpct: f64) -> Vec<Mpc> {
    let max = mpcs.iter().map(|m| m.power_dbm).fold(f64::NEG_INFINITY, f64::max);
    mpcs.iter().copied().filter(|m| m.power_dbm >= max - mpct).collect()
}

/// Index of the strongest MPC among `idx`: highest power, then shortest
/// delay, then first listed.
fn best(mpcs: &[Mpc], idx: &[usize]) -> Option<usize> {
    let mut out: Option<usize> = None;
    for &i in idx {
        out = match out {
            None => Some(i),
            Some(j) => {
                let (a, b) = (&mpcs[i], &mpcs[j]);
                let better = a.power_dbm > b.power_dbm
                    || (a.power_dbm == b.power_dbm && (a.delay_s < b.delay_s || (a.delay_s == b.delay_s && i < j)));
                Some(if better { i } else { j })
            }
        };
    }
    out
}

fn all(mpcs: &[Mpc]) -> Vec<usize> {
    (0..mpcs.len()).collect()
}

fn az_of(m: &Mpc, d: AngleDomain) -> f64 {
    match d {
        AngleDomain::Aoa => m.aoa.az_deg,
        AngleDomain::Aod => m.aod.az_deg,
    }
}

fn el_of(m: &Mpc, d: AngleDomain) -> f64 {
    match d {
        AngleDomain::Aoa => m.aoa.el_deg,
        AngleDomain::Aod => m.aod.el_deg,
    }
}

/// Two-pass weighted standard deviation.
fn wstd(xs: &[f64], ws: &[f64]) -> f64 {
    let total: f64 = ws.iter().sum();
    let mean = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = xs.iter().zip(ws).map(|(x, w)| (x - mean) * (x - mean) * w).sum::<f64>() / total;
    var.sqrt()
}

struct Loc {
    index: u32,
    seg: Segment,
    mpcs: Vec<Mpc>,
}

fn segment_rows(locs: &[Loc], value: impl Fn(&Loc) -> f64) -> Vec<(Segment, usize, f64)> {
    let mut out = Vec::new();
    for seg in [Segment::Los, Segment::Nlos] {
        let vals: Vec<f64> = locs.iter().filter(|l| l.seg == seg).map(&value).collect();
        if !vals.is_empty() {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            out.push((seg, vals.len(), mean));
        }
    }
    out
}

fn mpct_sweep(cfg: &RunConfig, traj: &Trajectory) -> Rows {
    let mut rows = Vec::new();
    for &mpct in &cfg.mpct_sweep {
        for seg in [Segment::Los, Segment::Nlos] {
            let snaps: Vec<_> = traj.snapshots.iter().filter(|s| s.segment == seg).collect();
            if snaps.is_empty() {
                continue;
            }
            let mut counts = [0usize; 4];
            for s in &snaps {
                for m in gate(&s.mpcs, mpct) {
                    counts[class_of(&m)] += 1;
                }
            }
            for c in 0..4 {
                rows.push(vec![
                    Cell::Num(mpct),
                    t(seg_name(seg)),
                    t(CLASS_NAMES[c]),
                    Cell::Num(counts[c] as f64 / snaps.len() as f64),
                ]);
            }
        }
    }
    rows
}

fn path_loss(cfg: &RunConfig, traj: &Trajectory) -> Rows {
    let mut rows = Vec::new();
    for seg in [Segment::Los, Segment::Nlos] {
        let snaps: Vec<_> = traj.snapshots.iter().filter(|s| s.segment == seg).collect();
        if snaps.is_empty() {
            continue;
        }
        let mut losses: [Vec<f64>; 4] = Default::default();
        for s in &snaps {
            for m in gate(&s.mpcs, cfg.mpct_db) {
                losses[class_of(&m)].push(traj.tx_power_dbm - m.power_dbm);
            }
        }
        for c in 0..4 {
            let l = &losses[c];
            let mean = if l.is_empty() {
                Cell::Empty
            } else {
                let n = l.len() as f64;
                Cell::Num(match cfg.averaging {
                    Averaging::Db => l.iter().sum::<f64>() / n,
                    Averaging::Linear => -10.0 * (l.iter().map(|x| lin(-x)).sum::<f64>() / n).log10(),
                })
            };
            rows.push(vec![t(seg_name(seg)), t(CLASS_NAMES[c]), Cell::Int(l.len() as u64), mean]);
        }
    }
    rows
}

/// RMS spread of one location with the beam on the strongest MPC.
fn beam_spread(mpcs: &[Mpc], domain: AngleDomain, elevation: bool, delay: bool, bew: f64, scale: f64) -> f64 {
    let b = &mpcs[best(mpcs, &all(mpcs)).unwrap()];
    let (b_az, b_el) = (az_of(b, domain), el_of(b, domain));
    let half = scale * bew / 2.0;
    let inside: Vec<&Mpc> = mpcs
        .iter()
        .filter(|m| {
            if elevation {
                bew >= 180.0 || (el_of(m, domain) - b_el).abs() <= half
            } else {
                bew >= 360.0 || diff(az_of(m, domain), b_az).abs() <= half
            }
        })
        .collect();
    let ws: Vec<f64> = inside.iter().map(|m| lin(m.power_dbm)).collect();
    let xs: Vec<f64> = inside
        .iter()
        .map(|m| {
            if delay {
                m.delay_s
            } else if elevation {
                el_of(m, domain) - b_el
            } else {
                diff(az_of(m, domain), b_az)
            }
        })
        .collect();
    wstd(&xs, &ws)
}

fn spread_table(cfg: &RunConfig, locs: &[Loc]) -> Rows {
    let mut rows = Vec::new();
    for metric in ["AS", "DS"] {
        for (domain, dname) in [(AngleDomain::Aoa, "AOA"), (AngleDomain::Aod, "AOD")] {
            for (elevation, pname) in [(false, "az"), (true, "el")] {
                for &bew in &cfg.bew_values {
                    let per_seg = segment_rows(locs, |l| {
                        beam_spread(&l.mpcs, domain, elevation, metric == "DS", bew, cfg.window_scale)
                    });
                    for (seg, n, mean) in per_seg {
                        rows.push(vec![
                            t(dname),
                            t(pname),
                            t(metric),
                            Cell::Num(bew),
                            t(seg_name(seg)),
                            Cell::Int(n as u64),
                            Cell::Num(mean),
                        ]);
                    }
                }
            }
        }
    }
    rows
}

/// Planar Gaussian main-lobe gain, linear, at an azimuth offset.
fn planar_gain(offset_az: f64, w_az: f64, w_el: f64) -> f64 {
    let peak = 16.0 * std::f64::consts::PI / (6.76 * w_az.to_radians() * w_el.to_radians());
    let r = offset_az / w_az;
    peak * 10f64.powf(-1.2 * r * r)
}

/// (unweighted, weighted) spreads of one location for AOA-AS, AOD-AS, DS.
fn weighted_location(cfg: &RunConfig, mpcs: &[Mpc], hpbw: f64) -> [(f64, f64); 3] {
    let s = mpcs[best(mpcs, &all(mpcs)).unwrap()];
    let half = cfg.window_scale * hpbw / 2.0;
    let base: Vec<Mpc> = mpcs
        .iter()
        .copied()
        .filter(|m| {
            !cfg.beamweight_window
                || ((!cfg.rx_weight || diff(m.aoa.az_deg, s.aoa.az_deg).abs() <= half)
                    && (!cfg.tx_weight || diff(m.aod.az_deg, s.aod.az_deg).abs() <= half))
        })
        .collect();
    let plain: Vec<f64> = base.iter().map(|m| lin(m.power_dbm)).collect();
    let weighted: Vec<f64> = base
        .iter()
        .map(|m| {
            let mut w = lin(m.power_dbm);
            if cfg.rx_weight {
                w *= planar_gain(diff(m.aoa.az_deg, s.aoa.az_deg), hpbw, cfg.beamweight_hpbw_el);
            }
            if cfg.tx_weight {
                w *= planar_gain(diff(m.aod.az_deg, s.aod.az_deg), hpbw, cfg.beamweight_hpbw_el);
            }
            w
        })
        .collect();
    let aoa: Vec<f64> = base.iter().map(|m| diff(m.aoa.az_deg, s.aoa.az_deg)).collect();
    let aod: Vec<f64> = base.iter().map(|m| diff(m.aod.az_deg, s.aod.az_deg)).collect();
    let tau: Vec<f64> = base.iter().map(|m| m.delay_s).collect();
    [
        (wstd(&aoa, &plain), wstd(&aoa, &weighted)),
        (wstd(&aod, &plain), wstd(&aod, &weighted)),
        (wstd(&tau, &plain), wstd(&tau, &weighted)),
    ]
}

fn weighted_table(cfg: &RunConfig, locs: &[Loc]) -> Rows {
    let window = if cfg.beamweight_window { "hard" } else { "none" };
    let labels = [("AOA", "AS"), ("AOD", "AS"), ("-", "DS")];
    let mut rows = Vec::new();
    for (k, (dname, metric)) in labels.iter().enumerate() {
        for &hpbw in &cfg.beamweight_hpbw_az {
            let plain = segment_rows(locs, |l| weighted_location(cfg, &l.mpcs, hpbw)[k].0);
            let weighted = segment_rows(locs, |l| weighted_location(cfg, &l.mpcs, hpbw)[k].1);
            for ((seg, n, p), (_, _, w)) in plain.into_iter().zip(weighted) {
                rows.push(vec![
                    t(dname),
                    t("az"),
                    t(metric),
                    Cell::Num(hpbw),
                    Cell::Num(cfg.beamweight_hpbw_el),
                    t(window),
                    t(seg_name(seg)),
                    Cell::Int(n as u64),
                    Cell::Num(p),
                    Cell::Num(w),
                ]);
            }
        }
    }
    rows
}

/// Greedy cones: member lists in rank order, plus the leftover indices.
fn greedy_cones(cfg: &RunConfig, mpcs: &[Mpc], hpbw_az: f64, hpbw_el: f64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let d = cfg.cone_domain;
    let mut free = all(mpcs);
    let mut cones = Vec::new();
    while cones.len() < cfg.max_cones && !free.is_empty() {
        let b = best(mpcs, &free).unwrap();
        let (b_az, b_el) = (az_of(&mpcs[b], d), el_of(&mpcs[b], d));
        let a = cfg.cone_scale * hpbw_az / 2.0;
        let e = cfg.cone_scale * hpbw_el / 2.0;
        let (inside, outside): (Vec<usize>, Vec<usize>) = free.iter().partition(|&&i| {
            let x = diff(az_of(&mpcs[i], d), b_az) / a;
            let y = (el_of(&mpcs[i], d) - b_el) / e;
            x * x + y * y <= 1.0
        });
        cones.push(inside);
        free = outside;
    }
    (cones, free)
}

fn blockage_sets(max: usize) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![("none".to_string(), vec![])];
    for r in 1..=max {
        out.push((r.to_string(), vec![r]));
    }
    for r in 2..=max {
        let ranks: Vec<usize> = (1..=r).collect();
        let label = ranks.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("+");
        out.push((label, ranks));
    }
    out
}

fn cone_tables(cfg: &RunConfig, locs: &[Loc]) -> (Rows, Rows, Rows) {
    let (mut fr, mut tr, mut bl) = (Vec::new(), Vec::new(), Vec::new());
    for &[haz, hel] in &cfg.hpbw_pairs {
        for l in locs {
            let prefix = || vec![Cell::Num(haz), Cell::Num(hel), Cell::Int(l.index as u64), t(seg_name(l.seg))];
            let m = &l.mpcs;
            let (cones, residual) = greedy_cones(cfg, m, haz, hel);
            let total: f64 = m.iter().map(|x| lin(x.power_dbm)).sum();
            let share = |idx: &[usize]| idx.iter().map(|&i| lin(m[i].power_dbm)).sum::<f64>() / total;
            for (k, members) in cones.iter().enumerate() {
                let mut row = prefix();
                row.extend([Cell::Int(k as u64 + 1), Cell::Int(members.len() as u64), Cell::Num(share(members))]);
                fr.push(row);
            }
            let mut row = prefix();
            row.extend([t("residual"), Cell::Int(residual.len() as u64), Cell::Num(share(&residual))]);
            fr.push(row);

            for rank in 1..=cfg.max_cones {
                let mut row = prefix();
                row.push(Cell::Int(rank as u64));
                match cones.get(rank - 1).and_then(|c| best(m, c)) {
                    Some(i) => row.extend([
                        Cell::Int(i as u64),
                        Cell::Num(m[i].power_dbm),
                        Cell::Num(m[i].aoa.az_deg),
                        Cell::Num(m[i].aoa.el_deg),
                        Cell::Num(m[i].aod.az_deg),
                        Cell::Num(m[i].aod.el_deg),
                    ]),
                    None => row.extend((0..6).map(|_| Cell::Empty)),
                }
                tr.push(row);
            }

            let top = m[best(m, &all(m)).unwrap()].power_dbm;
            for (label, blocked) in blockage_sets(cfg.max_cones) {
                let mut open: Vec<usize> = residual.clone();
                for (k, members) in cones.iter().enumerate() {
                    if !blocked.contains(&(k + 1)) {
                        open.extend(members);
                    }
                }
                let mut row = prefix();
                row.push(t(&label));
                match best(m, &open) {
                    Some(i) => {
                        let cone = cones.iter().position(|c| c.contains(&i));
                        row.extend([
                            t("locked"),
                            Cell::Int(i as u64),
                            cone.map_or(t("residual"), |k| Cell::Int(k as u64 + 1)),
                            Cell::Num(m[i].power_dbm),
                            Cell::Num(top - m[i].power_dbm),
                            Cell::Num(az_of(&m[i], cfg.cone_domain)),
                            Cell::Num(el_of(&m[i], cfg.cone_domain)),
                        ]);
                    }
                    None => {
                        row.push(t("outage"));
                        row.extend((0..6).map(|_| Cell::Empty));
                    }
                }
                bl.push(row);
            }
        }
    }
    (fr, tr, bl)
}

/// Every table of a full pipeline run without a companion band, in output
/// order.
pub fn reference_tables(cfg: &RunConfig, traj: &Trajectory) -> Vec<(String, Rows)> {
    let locs: Vec<Loc> = traj
        .snapshots
        .iter()
        .map(|s| Loc { index: s.location_index, seg: s.segment, mpcs: gate(&s.mpcs, cfg.mpct_db) })
        .collect();
    let (fr, tr, bl) = cone_tables(cfg, &locs);
    vec![
        ("mpct_sweep.csv".into(), mpct_sweep(cfg, traj)),
        ("path_loss.csv".into(), path_loss(cfg, traj)),
        ("spread_vs_bew.csv".into(), spread_table(cfg, &locs)),
        ("weighted_spread.csv".into(), weighted_table(cfg, &locs)),
        ("cone_fractions.csv".into(), fr),
        ("cone_tracks.csv".into(), tr),
        ("blockage.csv".into(), bl),
    ]
}
