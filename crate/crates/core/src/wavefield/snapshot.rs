//! Columnar wavefunction snapshots.
//!
//! ```text
//! # pilotwave-wavefunction v1
//! # source <free text, optional>
//! # units natural hbar=1e0
//! # time 0e0
//! # dims 1
//! # axis -1e1 1e1 256
//! index,re,im
//! 0,0e0,0e0
//! ...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so reading a snapshot
//! back reproduces every amplitude bit for bit.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::grid::{Axis, Grid};
use super::hamiltonian::{UnitSystem, Units};
use super::wavefunction::Wavefunction;
use crate::error::{Error, Result};

const MAGIC: &str = "# pilotwave-wavefunction v1";

pub fn write_snapshot(psi: &Wavefunction, units: &Units) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "# units {units}");
    let _ = writeln!(s, "# time {:e}", psi.time());
    let _ = writeln!(s, "# dims {}", psi.grid().dim());
    for a in psi.grid().axes() {
        let _ = writeln!(s, "# axis {:e} {:e} {}", a.min, a.max, a.points);
    }
    s.push_str("index,re,im\n");
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let _ = writeln!(s, "{k},{:e},{:e}", a.re, a.im);
    }
    s
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse().map_err(|_| Error::config(format!("snapshot line {line}: bad number '{tok}'")))
}

pub fn read_snapshot(text: &str) -> Result<(Wavefunction, Units)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(Error::config("not a pilotwave wavefunction snapshot")),
    }
    let mut units = None;
    let mut time = None;
    let mut dims = None;
    let mut axes = Vec::new();
    let mut amps = Vec::new();
    let mut in_body = false;
    for (n, line) in lines {
        let lineno = n + 1;
        if !in_body {
            if line == "index,re,im" {
                in_body = true;
                continue;
            }
            let rest = line.strip_prefix("# ").ok_or_else(|| Error::config(format!("snapshot line {lineno}: expected header")))?;
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("units") => {
                    let system = match it.next() {
                        Some("natural") => UnitSystem::Natural,
                        Some("si") => UnitSystem::Si,
                        other => return Err(Error::config(format!("snapshot line {lineno}: unknown unit system {other:?}"))),
                    };
                    let hbar = it
                        .next()
                        .and_then(|t| t.strip_prefix("hbar="))
                        .ok_or_else(|| Error::config(format!("snapshot line {lineno}: missing hbar")))?;
                    units = Some(Units { system, hbar: parse_f64(hbar, lineno)? });
                }
                Some("time") => time = Some(parse_f64(it.next().unwrap_or(""), lineno)?),
                Some("dims") => {
                    dims = Some(
                        it.next().and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| Error::config(format!("snapshot line {lineno}: bad dims")))?,
                    )
                }
                Some("axis") => {
                    let min = parse_f64(it.next().unwrap_or(""), lineno)?;
                    let max = parse_f64(it.next().unwrap_or(""), lineno)?;
                    let points = it
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| Error::config(format!("snapshot line {lineno}: bad point count")))?;
                    axes.push(Axis::new(min, max, points)?);
                }
                Some("source") => {}
                _ => return Err(Error::config(format!("snapshot line {lineno}: unknown header"))),
            }
            continue;
        }
        let mut it = line.split(',');
        let (Some(idx), Some(re), Some(im), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(Error::config(format!("snapshot line {lineno}: expected index,re,im")));
        };
        if idx.parse::<usize>().ok() != Some(amps.len()) {
            return Err(Error::config(format!("snapshot line {lineno}: index out of sequence")));
        }
        amps.push(Complex64::new(parse_f64(re, lineno)?, parse_f64(im, lineno)?));
    }
    let dims = dims.ok_or_else(|| Error::config("snapshot missing dims"))?;
    if axes.len() != dims {
        return Err(Error::config("snapshot axis count does not match dims"));
    }
    let grid = match dims {
        1 => Grid::one_d(axes[0]),
        2 => Grid::two_d_with_cap(axes[0], axes[1], usize::MAX)?,
        _ => return Err(Error::config("snapshot dims must be 1 or 2")),
    };
    let psi = Wavefunction::from_amplitudes(grid, amps, time.ok_or_else(|| Error::config("snapshot missing time"))?)?;
    Ok((psi, units.ok_or_else(|| Error::config("snapshot missing units"))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            min in -50.0f64..0.0,
            len in 0.1f64..80.0,
            points in 16usize..40,
            t in -1e3f64..1e3,
            hbar in 1e-35f64..10.0,
            seed in any::<u64>(),
        ) {
            let g = Grid::line(min, min + len, points).unwrap();
            let mut s = seed;
            let amps: Vec<Complex64> = (0..points).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = f64::from_bits((s >> 12) | 0x3ff0_0000_0000_0000) - 1.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = f64::from_bits((s >> 12) | 0x3ff0_0000_0000_0000) - 1.5;
                Complex64::new(a * 1e-7, b)
            }).collect();
            let psi = Wavefunction::from_amplitudes(g, amps, t).unwrap();
            let units = Units { system: UnitSystem::Si, hbar };
            let text = write_snapshot(&psi, &units);
            let (back, u) = read_snapshot(&text).unwrap();
            prop_assert_eq!(back, psi);
            prop_assert_eq!(u, units);
            prop_assert_eq!(write_snapshot(&read_snapshot(&text).unwrap().0, &u), text);
        }
    }

    #[test]
    fn two_d_round_trip_and_garbage_rejected() {
        let g = Grid::two_d(Axis::new(-1.0, 1.0, 16).unwrap(), Axis::new(0.0, 3.0, 17).unwrap()).unwrap();
        let psi = Wavefunction::from_fn_2d(&g, |x, y| Complex64::new(x, y * 0.1));
        let text = write_snapshot(&psi, &Units::default());
        assert_eq!(read_snapshot(&text).unwrap().0, psi);
        assert!(read_snapshot("hello").is_err());
        assert!(read_snapshot(&text.replace("index,re,im\n0,", "index,re,im\n5,")).is_err());
    }
}
