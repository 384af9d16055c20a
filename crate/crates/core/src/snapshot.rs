//! Plain-text snapshots of states, grids and distributions.
//!
//! Values are written with the shortest decimal representation that parses
//! back to the same bits, so a write/read round trip is exact.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::analysis::Distribution;
use crate::error::{Error, Result};
use crate::float::Real;
use crate::markov::{MarkovState, OccPair};
use crate::pme::PmeGrid;
use crate::walk::{AmpPair, WalkerState};

const WALKER_HEADER: &str = "# walker-state v1";
const MARKOV_HEADER: &str = "# markov-state v1";
const GRID_HEADER: &str = "# pme-grid v1";
const DIST_HEADER: &str = "# distribution v1";

pub fn write_walker<F: Real>(state: &WalkerState<F>) -> String {
    let mut out = String::new();
    let (lo, _) = state.window();
    writeln!(out, "{WALKER_HEADER}").unwrap();
    writeln!(
        out,
        "# t={} truncated_mass={} epsilon_trunc={} window_lo={}",
        state.step_count(),
        state.truncated_mass(),
        state.epsilon_trunc(),
        lo
    )
    .unwrap();
    writeln!(out, "site,re_a,im_a,re_b,im_b").unwrap();
    for (i, p) in state.amps().iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            lo + i as i64,
            p.a.re,
            p.a.im,
            p.b.re,
            p.b.im
        )
        .unwrap();
    }
    out
}

pub fn read_walker<F: Real>(text: &str) -> Result<WalkerState<F>> {
    let mut lines = Lines::new(text);
    lines.expect_header(WALKER_HEADER)?;
    let meta = lines.meta()?;
    let step_count: u64 = meta.get_int("t")?;
    let truncated_mass: F = meta.get_real("truncated_mass")?;
    let epsilon_trunc: F = meta.get_real("epsilon_trunc")?;
    let window_lo: i64 = meta.get_int("window_lo")?;
    lines.expect_header("site,re_a,im_a,re_b,im_b")?;
    let mut amps = Vec::new();
    while let Some((no, line)) = lines.next_data() {
        let fields = split_fields(line, 5, no)?;
        let _site: i64 = parse_int(fields[0], no)?;
        amps.push(AmpPair::new(
            Complex::new(parse_real(fields[1], no)?, parse_real(fields[2], no)?),
            Complex::new(parse_real(fields[3], no)?, parse_real(fields[4], no)?),
        ));
    }
    WalkerState::restore(window_lo, amps, step_count, truncated_mass, epsilon_trunc)
}

pub fn write_markov<F: Real>(state: &MarkovState<F>) -> String {
    let mut out = String::new();
    let (lo, _) = state.window();
    writeln!(out, "{MARKOV_HEADER}").unwrap();
    writeln!(
        out,
        "# t={} truncated_mass={} epsilon_trunc={} window_lo={}",
        state.step_count(),
        state.truncated_mass(),
        state.epsilon_trunc(),
        lo
    )
    .unwrap();
    writeln!(out, "site,l,r").unwrap();
    for (i, p) in state.occupations().iter().enumerate() {
        writeln!(out, "{},{},{}", lo + i as i64, p.l, p.r).unwrap();
    }
    out
}

pub fn read_markov<F: Real>(text: &str) -> Result<MarkovState<F>> {
    let mut lines = Lines::new(text);
    lines.expect_header(MARKOV_HEADER)?;
    let meta = lines.meta()?;
    let step_count: u64 = meta.get_int("t")?;
    let truncated_mass: F = meta.get_real("truncated_mass")?;
    let epsilon_trunc: F = meta.get_real("epsilon_trunc")?;
    let window_lo: i64 = meta.get_int("window_lo")?;
    lines.expect_header("site,l,r")?;
    let mut occ = Vec::new();
    while let Some((no, line)) = lines.next_data() {
        let fields = split_fields(line, 3, no)?;
        let _site: i64 = parse_int(fields[0], no)?;
        occ.push(OccPair::new(
            parse_real(fields[1], no)?,
            parse_real(fields[2], no)?,
        ));
    }
    MarkovState::restore(window_lo, occ, step_count, truncated_mass, epsilon_trunc)
}

pub fn write_grid<F: Real>(grid: &PmeGrid<F>) -> String {
    let mut out = String::new();
    writeln!(out, "{GRID_HEADER}").unwrap();
    let m = grid
        .m()
        .map(|m| m.to_string())
        .unwrap_or_else(|| "none".into());
    writeln!(
        out,
        "# time={} m={} dx={} dt={} x_lo={} n_cells={} mass_drift={}",
        grid.time(),
        m,
        grid.dx(),
        grid.dt(),
        grid.x_lo(),
        grid.n_cells(),
        grid.mass_drift()
    )
    .unwrap();
    writeln!(out, "x,rho").unwrap();
    for (i, r) in grid.rho().iter().enumerate() {
        writeln!(out, "{},{}", grid.cell_center(i), r).unwrap();
    }
    out
}

pub fn read_grid<F: Real>(text: &str) -> Result<PmeGrid<F>> {
    let mut lines = Lines::new(text);
    lines.expect_header(GRID_HEADER)?;
    let meta = lines.meta()?;
    let time: F = meta.get_real("time")?;
    let m: Option<F> = match meta.get("m")? {
        "none" => None,
        s => Some(parse_real(s, 2)?),
    };
    let dx: F = meta.get_real("dx")?;
    let dt: F = meta.get_real("dt")?;
    let x_lo: F = meta.get_real("x_lo")?;
    let n_cells: usize = meta.get_int("n_cells")?;
    lines.expect_header("x,rho")?;
    let mut rho = Vec::with_capacity(n_cells);
    while let Some((no, line)) = lines.next_data() {
        let fields = split_fields(line, 2, no)?;
        rho.push(parse_real::<F>(fields[1], no)?);
    }
    if rho.len() != n_cells {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {n_cells} cells, found {}", rho.len()),
        });
    }
    let x_hi = x_lo + dx * F::from_usize(n_cells).unwrap();
    let mut grid = PmeGrid::new(x_lo, x_hi, n_cells, m, dt)?;
    grid.set_density(rho)?;
    grid.set_time(time);
    Ok(grid)
}

pub fn write_distribution<F: Real>(dist: &Distribution<F>, t: Option<u64>) -> String {
    let mut out = String::new();
    writeln!(out, "{DIST_HEADER}").unwrap();
    let t_text = t.map(|t| t.to_string()).unwrap_or_else(|| "none".into());
    writeln!(
        out,
        "# t={} origin={} total={}",
        t_text,
        dist.origin(),
        dist.total()
    )
    .unwrap();
    writeln!(out, "site,p").unwrap();
    for (i, m) in dist.masses().iter().enumerate() {
        writeln!(out, "{},{}", dist.origin() + i as i64, m).unwrap();
    }
    out
}

pub fn read_distribution<F: Real>(text: &str) -> Result<(Distribution<F>, Option<u64>)> {
    let mut lines = Lines::new(text);
    lines.expect_header(DIST_HEADER)?;
    let meta = lines.meta()?;
    let t = match meta.get("t")? {
        "none" => None,
        s => Some(parse_int::<u64>(s, 2)?),
    };
    let origin: i64 = meta.get_int("origin")?;
    lines.expect_header("site,p")?;
    let mut masses = Vec::new();
    while let Some((no, line)) = lines.next_data() {
        let fields = split_fields(line, 2, no)?;
        masses.push(parse_real::<F>(fields[1], no)?);
    }
    Ok((Distribution::new(origin, masses)?, t))
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            iter: text.lines().enumerate(),
        }
    }

    fn expect_header(&mut self, expected: &str) -> Result<()> {
        match self.iter.next() {
            Some((no, line)) if line.trim_end() == expected => {
                let _ = no;
                Ok(())
            }
            Some((no, line)) => Err(Error::Parse {
                line: no + 1,
                message: format!("expected `{expected}`, found `{line}`"),
            }),
            None => Err(Error::Parse {
                line: 0,
                message: format!("missing `{expected}` line"),
            }),
        }
    }

    fn meta(&mut self) -> Result<Meta> {
        match self.iter.next() {
            Some((no, line)) if line.starts_with("# ") => Ok(Meta {
                line: no + 1,
                text: line[2..].to_string(),
            }),
            Some((no, line)) => Err(Error::Parse {
                line: no + 1,
                message: format!("expected metadata line, found `{line}`"),
            }),
            None => Err(Error::Parse {
                line: 0,
                message: "missing metadata line".into(),
            }),
        }
    }

    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (no, line) in self.iter.by_ref() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            return Some((no + 1, trimmed));
        }
        None
    }
}

struct Meta {
    line: usize,
    text: String,
}

impl Meta {
    fn get(&self, key: &str) -> Result<&str> {
        for token in self.text.split_whitespace() {
            if let Some(value) = token.strip_prefix(key) {
                if let Some(value) = value.strip_prefix('=') {
                    return Ok(value);
                }
            }
        }
        Err(Error::Parse {
            line: self.line,
            message: format!("missing metadata key `{key}`"),
        })
    }

    fn get_real<F: Real>(&self, key: &str) -> Result<F> {
        parse_real(self.get(key)?, self.line)
    }

    fn get_int<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        parse_int(self.get(key)?, self.line)
    }
}

fn split_fields(line: &str, expected: usize, no: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            line: no,
            message: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn parse_real<F: Real>(s: &str, no: usize) -> Result<F> {
    s.parse::<F>().map_err(|_| Error::Parse {
        line: no,
        message: format!("invalid number `{s}`"),
    })
}

fn parse_int<T: std::str::FromStr>(s: &str, no: usize) -> Result<T> {
    s.parse::<T>().map_err(|_| Error::Parse {
        line: no,
        message: format!("invalid integer `{s}`"),
    })
}
