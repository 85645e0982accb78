//! SDPA sparse (`.dat-s`) export and import.
//!
//! A [`ConicProgram`] maps onto the SDPA dual form
//! `max F0•Y s.t. Fi•Y = ci, Y ⪰ 0`: F0 is the objective (negated for
//! minimization, recorded in a `*` comment line), Fi and ci are the
//! constraint matrices and right-hand sides. Nonnegative blocks appear with
//! negative sizes and diagonal entries only.

use std::fmt::Write as _;

use super::program::{BlockKind, ConicProgram, Constraint, Entry, Sense, SparseSym};
use crate::error::{Error, Result};

const SENSE_TAG: &str = "* sense:";

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn export_sdpa(p: &ConicProgram) -> String {
    let mut out = String::new();
    let sense = match p.sense() {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    };
    let _ = writeln!(out, "{SENSE_TAG} {sense}");
    let _ = writeln!(out, "{}", p.num_constraints());
    let _ = writeln!(out, "{}", p.blocks().len());
    let sizes: Vec<String> = p
        .blocks()
        .iter()
        .map(|b| match *b {
            BlockKind::Psd(n) => n.to_string(),
            BlockKind::Nonneg(n) => format!("-{n}"),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = p.constraints().iter().map(|c| fmt_value(c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let sign = match p.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut write_entries = |matno: usize, entries: &[Entry], scale: f64| {
        for e in entries {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                matno,
                e.block + 1,
                e.row + 1,
                e.col + 1,
                fmt_value(scale * e.value)
            );
        }
    };
    write_entries(0, p.objective().entries(), sign);
    for (i, c) in p.constraints().iter().enumerate() {
        write_entries(i + 1, c.coeffs.entries(), 1.0);
    }
    out
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("sdpa line {line}: {msg}"))
}

/// Parse SDPA sparse text. Comment lines start with `*` or `"`; separators
/// `,(){}` are treated as whitespace.
pub fn import_sdpa(text: &str) -> Result<ConicProgram> {
    let mut sense = Sense::Maximize;
    let mut lines = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if let Some(rest) = t.strip_prefix(SENSE_TAG) {
            sense = match rest.trim() {
                "maximize" => Sense::Maximize,
                "minimize" => Sense::Minimize,
                other => return Err(parse_err(no + 1, format!("unknown sense {other:?}"))),
            };
            continue;
        }
        if t.starts_with('*') || t.starts_with('"') {
            continue;
        }
        let cleaned: String = t
            .chars()
            .map(|c| if ",(){}".contains(c) { ' ' } else { c })
            .collect();
        lines.push((no + 1, cleaned));
    }
    // The header is token based: m, nblocks, nblocks sizes, m values.
    // Trailing non-numeric words (`=mdim`) are ignored.
    let mut tokens: Vec<(usize, String)> = Vec::new();
    let mut need: Option<usize> = None;
    let mut body_start = lines.len();
    for (k, (no, line)) in lines.iter().enumerate() {
        if need.is_some_and(|n| tokens.len() >= n) {
            body_start = k;
            break;
        }
        tokens.extend(
            line.split_whitespace()
                .take_while(|t| t.parse::<f64>().is_ok())
                .map(|t| (*no, t.to_string())),
        );
        if need.is_none() && tokens.len() >= 2 {
            let m: usize = tokens[0].1.parse().map_err(|e| parse_err(tokens[0].0, e))?;
            let nb: usize = tokens[1].1.parse().map_err(|e| parse_err(tokens[1].0, e))?;
            need = Some(2 + nb + m);
        }
    }
    let need = need.ok_or_else(|| Error::Parse("sdpa: missing header".into()))?;
    if tokens.len() != need {
        return Err(Error::Parse(format!(
            "sdpa: header has {} tokens, expected {need}",
            tokens.len()
        )));
    }
    let m: usize = tokens[0].1.parse().map_err(|e| parse_err(tokens[0].0, e))?;
    let nb: usize = tokens[1].1.parse().map_err(|e| parse_err(tokens[1].0, e))?;
    let mut blocks = Vec::with_capacity(nb);
    for (no, t) in &tokens[2..2 + nb] {
        let s: i64 = t.parse().map_err(|e| parse_err(*no, e))?;
        blocks.push(if s < 0 {
            BlockKind::Nonneg((-s) as usize)
        } else {
            BlockKind::Psd(s as usize)
        });
    }
    let mut rhs = Vec::with_capacity(m);
    for (no, t) in &tokens[2 + nb..] {
        rhs.push(t.parse::<f64>().map_err(|e| parse_err(*no, e))?);
    }

    let mut mats: Vec<Vec<Entry>> = vec![Vec::new(); m + 1];
    for (no, line) in &lines[body_start..] {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 5 {
            return Err(parse_err(*no, "expected `matno block i j value`"));
        }
        let idx = |s: &str| -> Result<usize> { s.parse::<usize>().map_err(|e| parse_err(*no, e)) };
        let (matno, blk, i, j) = (idx(f[0])?, idx(f[1])?, idx(f[2])?, idx(f[3])?);
        let v: f64 = f[4].parse().map_err(|e| parse_err(*no, e))?;
        if matno > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(parse_err(*no, "index out of range"));
        }
        mats[matno].push(Entry::new(blk - 1, i - 1, j - 1, v));
    }
    let mut mats = mats.into_iter();
    let mut objective = mats.next().unwrap_or_default();
    if sense == Sense::Minimize {
        for e in &mut objective {
            e.value = -e.value;
        }
    }
    let constraints = mats
        .zip(rhs)
        .map(|(entries, rhs)| Constraint {
            coeffs: SparseSym::new(entries),
            rhs,
        })
        .collect();
    ConicProgram::new(blocks, constraints, SparseSym::new(objective), sense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::ProgramBuilder;

    #[test]
    fn empty_program_is_header_only() {
        let p = ProgramBuilder::new(Sense::Maximize).build().unwrap();
        let text = export_sdpa(&p);
        assert_eq!(text, "* sense: maximize\n0\n0\n\n\n");
        assert_eq!(import_sdpa(&text).unwrap(), p);
    }

    #[test]
    fn reads_foreign_punctuation() {
        let text = "\"example\"\n1 =mdim\n2 =nblocks\n{2, -1}\n{1.0}\n0 1 1 1 1.0\n1 1 1 2 0.5\n1 2 1 1 1.0\n";
        let p = import_sdpa(text).unwrap();
        assert_eq!(p.blocks(), &[BlockKind::Psd(2), BlockKind::Nonneg(1)]);
        assert_eq!(p.constraints()[0].coeffs.entries().len(), 2);
    }
}
