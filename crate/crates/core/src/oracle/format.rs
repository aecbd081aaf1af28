//! Plain-text instance format.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! |S| |A| gamma n tau0
//! P(.|s,a) rows, |S|·|A| lines in s-major order, |S| numbers each
//! r(s,.) rows, |S| lines, |A| numbers each
//! expert maps, n lines, |S| action indices each
//! ```

use std::fmt::Write as _;

use super::{EnhancedFiniteMdp, FiniteMdp};
use crate::error::{Error, Result};

// largest instance the parser will allocate for
const MAX_CELLS: usize = 1 << 24;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Ok((idx + 1, line.split_whitespace().collect()));
            }
        }
        Err(Error::parse(0, format!("unexpected end of input, expected {what}")))
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_fields("") {
            Ok((line, _)) => Err(Error::parse(line, "trailing content after expert maps")),
            Err(_) => Ok(()),
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("cannot read {what} from {tok:?}")))
}

fn parse_row<T: std::str::FromStr>(
    lines: &mut Lines<'_>,
    width: usize,
    what: &str,
) -> Result<Vec<T>> {
    let (line, fields) = lines.next_fields(what)?;
    if fields.len() != width {
        return Err(Error::parse(
            line,
            format!("{what}: expected {width} values, found {}", fields.len()),
        ));
    }
    fields.iter().map(|t| parse_num(line, t, what)).collect()
}

pub fn parse_mdp(text: &str) -> Result<EnhancedFiniteMdp> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (line, header) = lines.next_fields("header")?;
    if header.len() != 5 {
        return Err(Error::parse(line, "header must read: |S| |A| gamma n tau0"));
    }
    let n_s: usize = parse_num(line, header[0], "|S|")?;
    let n_a: usize = parse_num(line, header[1], "|A|")?;
    let gamma: f64 = parse_num(line, header[2], "gamma")?;
    let n: usize = parse_num(line, header[3], "n")?;
    let tau0: u32 = parse_num(line, header[4], "tau0")?;
    if n_s == 0 || n_a == 0 || tau0 == 0 {
        return Err(Error::parse(line, "|S|, |A| and tau0 must be positive"));
    }
    let cells = n_s
        .checked_mul(n_a)
        .and_then(|v| v.checked_mul(n_s))
        .filter(|v| *v <= MAX_CELLS)
        .ok_or_else(|| Error::parse(line, "instance too large"))?;
    if n.checked_mul(n_s).is_none_or(|v| v > MAX_CELLS) {
        return Err(Error::parse(line, "too many experts"));
    }

    let mut transitions = Vec::with_capacity(cells);
    for _ in 0..n_s * n_a {
        transitions.extend(parse_row::<f64>(&mut lines, n_s, "transition row")?);
    }
    let mut rewards = Vec::with_capacity(n_s * n_a);
    for _ in 0..n_s {
        rewards.extend(parse_row::<f64>(&mut lines, n_a, "reward row")?);
    }
    let mut experts = Vec::with_capacity(n);
    for _ in 0..n {
        experts.push(parse_row::<usize>(&mut lines, n_s, "expert map")?);
    }
    lines.expect_end()?;

    let base = FiniteMdp::new(n_s, n_a, gamma, transitions, rewards)?;
    EnhancedFiniteMdp::new(base, experts, tau0)
}

/// Inverse of [`parse_mdp`]; floats use shortest round-trip formatting.
pub fn write_mdp(m: &EnhancedFiniteMdp) -> String {
    let base = m.base();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        base.num_states(),
        base.num_actions(),
        base.gamma(),
        m.experts().len(),
        m.space().max_duration()
    );
    let join = |vals: &mut dyn Iterator<Item = String>| vals.collect::<Vec<_>>().join(" ");
    for s in 0..base.num_states() {
        for a in 0..base.num_actions() {
            let _ = writeln!(out, "{}", join(&mut base.row(s, a).iter().map(|p| p.to_string())));
        }
    }
    for s in 0..base.num_states() {
        let _ = writeln!(
            out,
            "{}",
            join(&mut (0..base.num_actions()).map(|a| base.reward(s, a).to_string()))
        );
    }
    for map in m.experts() {
        let _ = writeln!(out, "{}", join(&mut map.iter().map(|a| a.to_string())));
    }
    out
}
