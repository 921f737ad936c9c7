//! Line-oriented text form of [`SdpProblem`] for regression fixtures.
//!
//! ```text
//! sdp-problem v1
//! n_vars 2
//! objective 1 0
//! lower -inf 0
//! upper inf 1
//! blocks 1
//! block <dim> <shift> <n_constant> <n_terms>
//! c <row> <col> <value>          (n_constant lines)
//! var <index> <n_entries>
//! e <row> <col> <value>          (n_entries lines)
//! linear <count>
//! row <rhs> <var>:<coef> ...
//! end
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits.

use std::fmt::Write as _;

use super::{BlockTerm, Entry, LinearIneq, SdpBlock, SdpError, SdpProblem};

const MAGIC: &str = "sdp-problem v1";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn dump(p: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "n_vars {}", p.n_vars);
    let _ = writeln!(out, "objective {}", join(&p.objective));
    let _ = writeln!(out, "lower {}", join(&p.lower));
    let _ = writeln!(out, "upper {}", join(&p.upper));
    let _ = writeln!(out, "blocks {}", p.blocks.len());
    for b in &p.blocks {
        let _ = writeln!(
            out,
            "block {} {:?} {} {}",
            b.dim,
            b.shift,
            b.constant.len(),
            b.terms.len()
        );
        for &(r, c, v) in &b.constant {
            let _ = writeln!(out, "c {r} {c} {v:?}");
        }
        for t in &b.terms {
            let _ = writeln!(out, "var {} {}", t.var, t.entries.len());
            for &(r, c, v) in &t.entries {
                let _ = writeln!(out, "e {r} {c} {v:?}");
            }
        }
    }
    let _ = writeln!(out, "linear {}", p.linear.len());
    for row in &p.linear {
        let _ = write!(out, "row {:?}", row.rhs);
        for &(k, a) in &row.coeffs {
            let _ = write!(out, " {k}:{a:?}");
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> SdpError {
        SdpError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Next non-empty line split into tokens, checking the leading keyword.
    fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>, SdpError> {
        loop {
            let Some((i, raw)) = self.inner.next() else {
                self.line += 1;
                return Err(self.err(format!("unexpected end of input, wanted `{keyword}`")));
            };
            self.line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            if keyword == MAGIC {
                return if raw == MAGIC {
                    Ok(Vec::new())
                } else {
                    Err(self.err("missing header"))
                };
            }
            let mut tokens = raw.split_whitespace();
            let head = tokens.next().unwrap_or("");
            if head != keyword {
                return Err(self.err(format!("expected `{keyword}`, found `{head}`")));
            }
            return Ok(tokens.collect());
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: Option<&&str>) -> Result<T, SdpError> {
        let tok = tok.ok_or_else(|| self.err("missing field"))?;
        tok.parse::<T>()
            .map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }

    fn floats(&self, toks: &[&str], n: usize) -> Result<Vec<f64>, SdpError> {
        if toks.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", toks.len())));
        }
        toks.iter().map(|t| self.num::<f64>(Some(t))).collect()
    }

    fn entry(&mut self, keyword: &str) -> Result<Entry, SdpError> {
        let t = self.expect(keyword)?;
        if t.len() != 3 {
            return Err(self.err("entry needs row, col, value"));
        }
        Ok((self.num(t.first())?, self.num(t.get(1))?, self.num(t.get(2))?))
    }
}

pub fn load(text: &str) -> Result<SdpProblem, SdpError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    lines.expect(MAGIC)?;
    let t = lines.expect("n_vars")?;
    let n: usize = lines.num(t.first())?;
    let t = lines.expect("objective")?;
    let objective = lines.floats(&t, n)?;
    let t = lines.expect("lower")?;
    let lower = lines.floats(&t, n)?;
    let t = lines.expect("upper")?;
    let upper = lines.floats(&t, n)?;
    let t = lines.expect("blocks")?;
    let nb: usize = lines.num(t.first())?;
    let mut blocks = Vec::with_capacity(nb);
    for _ in 0..nb {
        let t = lines.expect("block")?;
        if t.len() != 4 {
            return Err(lines.err("block header needs dim, shift, n_constant, n_terms"));
        }
        let mut b = SdpBlock::new(lines.num(t.first())?, lines.num(t.get(1))?);
        let nc: usize = lines.num(t.get(2))?;
        let nt: usize = lines.num(t.get(3))?;
        for _ in 0..nc {
            b.constant.push(lines.entry("c")?);
        }
        for _ in 0..nt {
            let t = lines.expect("var")?;
            let var: usize = lines.num(t.first())?;
            let ne: usize = lines.num(t.get(1))?;
            let mut entries = Vec::with_capacity(ne);
            for _ in 0..ne {
                entries.push(lines.entry("e")?);
            }
            b.terms.push(BlockTerm { var, entries });
        }
        blocks.push(b);
    }
    let t = lines.expect("linear")?;
    let nl: usize = lines.num(t.first())?;
    let mut linear = Vec::with_capacity(nl);
    for _ in 0..nl {
        let t = lines.expect("row")?;
        let rhs: f64 = lines.num(t.first())?;
        let mut coeffs = Vec::with_capacity(t.len().saturating_sub(1));
        for tok in &t[1..] {
            let (k, a) = tok
                .split_once(':')
                .ok_or_else(|| lines.err(format!("bad coefficient `{tok}`")))?;
            coeffs.push((lines.num(Some(&k))?, lines.num(Some(&a))?));
        }
        linear.push(LinearIneq { coeffs, rhs });
    }
    lines.expect("end")?;
    Ok(SdpProblem {
        n_vars: n,
        objective,
        blocks,
        linear,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_truncated_input() {
        let p = SdpProblem::new(1);
        let text = dump(&p);
        let cut = &text[..text.len() - 4];
        assert!(matches!(load(cut), Err(SdpError::Parse { .. })));
        assert!(load("nonsense").is_err());
    }

    #[test]
    fn infinite_bounds_survive() {
        let mut p = SdpProblem::new(2);
        p.lower[1] = 0.0;
        p.upper[0] = 1e-300;
        let back = load(&dump(&p)).unwrap();
        assert_eq!(back, p);
    }
}
