//! Trajectory CSV format.
//!
//! The first line is a version comment, followed by a header row and one row
//! per node. Floats are written with 17 significant digits.

use std::io::{BufRead, BufReader, Read, Write};

use anyhow::{anyhow, bail, Context, Result};

use rivolve_core::{DiscreteTrajectory, RisProblem, State};

pub const VERSION_LINE: &str = "# rivolve-trajectory v1";

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn header(n_z: usize, n_u: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n_z).map(|i| format!("z{i}")));
    h.extend((1..=n_u).map(|i| format!("u{i}")));
    for c in ["energy", "power", "step_dissipation", "cum_var_d", "residual_stability", "jump_flag"] {
        h.push(c.into());
    }
    h
}

/// Writes `traj` with per-node stability residuals and jump flags.
pub fn write_trajectory<P: RisProblem + ?Sized, W: Write>(
    out: W,
    p: &P,
    traj: &DiscreteTrajectory,
    residuals: &[f64],
    jump_flags: &[bool],
) -> Result<()> {
    let mut out = out;
    writeln!(out, "{VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(p.n_z(), p.n_u()))?;
    let mut cum = 0.0;
    for k in 0..traj.len() {
        let t = traj.times[k];
        let s = &traj.states[k];
        cum += traj.step_dissipation[k];
        let e = p.energy(t, &s.u, &s.z);
        let pw = if e.is_finite() { p.power(t, &s.u, &s.z) } else { f64::NAN };
        let mut row = vec![fmt_f64(t)];
        row.extend(s.z.iter().map(|&x| fmt_f64(x)));
        row.extend(s.u.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(e.to_f64()));
        row.push(fmt_f64(pw));
        row.push(fmt_f64(traj.step_dissipation[k]));
        row.push(fmt_f64(cum));
        row.push(fmt_f64(residuals.get(k).copied().unwrap_or(f64::NAN)));
        row.push(if jump_flags.get(k).copied().unwrap_or(false) { "1" } else { "0" }.into());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Nodes read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCsv {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        v => v.parse::<f64>().map_err(|e| anyhow!("bad number {v:?}: {e}")),
    }
}

/// Reads a trajectory CSV, checking the version line and the column layout
/// for the given dimensions.
pub fn read_trajectory<R: Read>(input: R, n_z: usize, n_u: usize) -> Result<TrajectoryCsv> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    if input.read_line(&mut first)? == 0 {
        bail!("empty trajectory file");
    }
    let first = first.trim_end();
    if first != VERSION_LINE {
        if first.starts_with("# rivolve-trajectory") {
            bail!("unsupported trajectory version line {first:?}, expected {VERSION_LINE:?}");
        }
        bail!("missing version line {VERSION_LINE:?}");
    }
    let mut r = csv::Reader::from_reader(input);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let want = header(n_z, n_u);
    if got != want {
        bail!("column mismatch: expected {:?}, found {:?}", want, got);
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("row {}", line + 1))?;
        if rec.len() != want.len() {
            bail!("row {}: {} fields, expected {}", line + 1, rec.len(), want.len());
        }
        let v = |i: usize| parse_f64(&rec[i]).with_context(|| format!("row {} column {}", line + 1, want[i]));
        times.push(v(0)?);
        let z = (1..=n_z).map(v).collect::<Result<Vec<_>>>()?;
        let u = (n_z + 1..=n_z + n_u).map(v).collect::<Result<Vec<_>>>()?;
        if z.iter().chain(&u).any(|x| !x.is_finite()) {
            bail!("row {}: non-finite state entry", line + 1);
        }
        states.push(State::new(u, z));
    }
    if times.is_empty() {
        bail!("trajectory has no rows");
    }
    Ok(TrajectoryCsv { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rivolve_core::models::Toy1d;
    use rivolve_core::scheme::{solve_incremental, SchemeConfig, SchemeKind};

    #[test]
    fn round_trip_is_lossless() {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let tr = solve_incremental(&p, &SchemeConfig::new(SchemeKind::Energetic, 0.05, vec![0.1])).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &p, &tr, &vec![0.0; tr.len()], &vec![false; tr.len()]).unwrap();
        let back = read_trajectory(&buf[..], 1, 0).unwrap();
        assert_eq!(back.times, tr.times);
        assert_eq!(back.states, tr.states);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_trajectory(&b""[..], 1, 0).is_err());
        assert!(read_trajectory(&b"# rivolve-trajectory v9\nt,z1\n"[..], 1, 0).is_err());
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let tr = solve_incremental(&p, &SchemeConfig::new(SchemeKind::Energetic, 0.5, vec![0.1])).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &p, &tr, &[], &[]).unwrap();
        assert!(read_trajectory(&buf[..], 2, 0).is_err());
        let text = String::from_utf8(buf).unwrap();
        let last = text.trim_end().lines().last().unwrap();
        let field = last.split(',').nth(1).unwrap();
        let text = text.replace(last, &last.replacen(field, "abc", 1));
        assert!(read_trajectory(text.as_bytes(), 1, 0).is_err());
    }
}
