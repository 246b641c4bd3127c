use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::MomentTerms;
use crate::error::{Error, Result};
use crate::solver::{RadialGrid, Record, State, TimeSeries};

/// Shortest representation that parses back to the same `f64`; exponent
/// notation outside `[1e-4, 1e16)` keeps tiny and huge values compact.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn timeseries_header(moments: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "dt", "u_max", "mass_u", "mass_v", "v_min"].iter().map(|s| s.to_string()).collect();
    for i in 0..moments {
        for name in ["phi", "I1", "I2", "I3"] {
            h.push(format!("{name}_{i}"));
        }
    }
    h.push("K_emp".into());
    h.push("Cv_emp".into());
    h
}

pub fn write_timeseries(path: &Path, series: &TimeSeries, moments: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(timeseries_header(moments)).map_err(csv_err)?;
    for r in &series.records {
        let mut row = vec![r.t, r.dt, r.u_max, r.mass_u, r.mass_v, r.v_min];
        for m in &r.moments {
            row.extend([m.phi, m.i1, m.i2, m.i3]);
        }
        row.extend([r.k_emp, r.cv_emp]);
        w.write_record(row.into_iter().map(fmt_num)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Io(format!("line {line}: cannot parse {field:?} as a number")))
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?.clone();
    let cols = header.len();
    if cols < 8 || (cols - 8) % 4 != 0 || &header[0] != "t" {
        return Err(Error::Io(format!("{}: unexpected time-series header", path.display())));
    }
    let moments = (cols - 8) / 4;
    let mut records = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v = rec.iter().map(|f| parse_f64(f, i + 2)).collect::<Result<Vec<f64>>>()?;
        if v.len() != cols {
            return Err(Error::Io(format!("line {}: expected {cols} fields", i + 2)));
        }
        let terms = (0..moments)
            .map(|k| {
                let b = 6 + 4 * k;
                MomentTerms { phi: v[b], i1: v[b + 1], i2: v[b + 2], i3: v[b + 3] }
            })
            .collect();
        records.push(Record {
            t: v[0],
            dt: v[1],
            u_max: v[2],
            mass_u: v[3],
            mass_v: v[4],
            v_min: v[5],
            moments: terms,
            k_emp: v[cols - 2],
            cv_emp: v[cols - 1],
        });
    }
    Ok(TimeSeries { records })
}

/// Node-wise profile with 17 significant digits; `u` and `v` are interpolated
/// from cells to nodes.
pub fn write_snapshot(path: &Path, state: &State, grid: &RadialGrid) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    writeln!(f, "s,r,w,u,v,z")?;
    let u = state.u_nodes(grid);
    for j in 0..grid.s_nodes.len() {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            grid.s_nodes[j], grid.r_nodes[j], state.w[j], u[j], state.v[j], state.z[j]
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Columns `(s, r, w, u, v, z)` of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotColumns {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotColumns> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != ["s", "r", "w", "u", "v", "z"] {
        return Err(Error::Io(format!("{}: unexpected snapshot header {header:?}", path.display())));
    }
    let mut cols = SnapshotColumns { s: vec![], r: vec![], w: vec![], u: vec![], v: vec![], z: vec![] };
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v = rec.iter().map(|f| parse_f64(f, i + 2)).collect::<Result<Vec<f64>>>()?;
        if v.len() != 6 {
            return Err(Error::Io(format!("line {}: expected 6 fields", i + 2)));
        }
        cols.s.push(v[0]);
        cols.r.push(v[1]);
        cols.w.push(v[2]);
        cols.u.push(v[3]);
        cols.v.push(v[4]);
        cols.z.push(v[5]);
    }
    Ok(cols)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::State;

    #[test]
    fn number_format_round_trips() {
        for &x in &[0.0, 1.0, -2.5, 0.1 + 0.2, 1e-300, 6.02e23, 123456.789, 1e-5, f64::MIN_POSITIVE] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(1e-7), "1e-7");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn timeseries_and_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Record {
            t: 0.1,
            dt: 1e-9,
            u_max: 3.0e7,
            mass_u: 10.0,
            mass_v: 10.000000000000002,
            v_min: 2.19,
            moments: vec![MomentTerms { phi: 0.25, i1: -5.3, i2: 18.2, i3: -0.52 }; 2],
            k_emp: 0.079,
            cv_emp: 2.18,
        };
        let series = TimeSeries { records: vec![rec.clone(), Record { t: 0.2, ..rec }] };
        let p = dir.path().join("ts.csv");
        write_timeseries(&p, &series, 2).unwrap();
        assert_eq!(read_timeseries(&p).unwrap(), series);

        let grid = RadialGrid::new(3, 1.0, 16, 3.0).unwrap();
        let st = State::from_u(0.0, (0..16).map(|c| 1.0 + c as f64 / 7.0).collect(), &grid).unwrap();
        let p = dir.path().join("snap.csv");
        write_snapshot(&p, &st, &grid).unwrap();
        let cols = read_snapshot(&p).unwrap();
        assert_eq!(cols.w, st.w);
        assert_eq!(cols.z, st.z);
        assert_eq!(cols.s, grid.s_nodes);
    }
}
