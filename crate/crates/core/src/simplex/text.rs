//! Minimal whitespace-separated LP text format:
//!
//! ```text
//! # comment lines are skipped
//! m d max|min
//! a_11 ... a_1d        (m rows)
//! b_1 ... b_m
//! l_1 ... l_d
//! u_1 ... u_d          ("inf" allowed)
//! c_1 ... c_d
//! <= = >= ...          (optional; defaults to all "<=")
//! ```

use super::{ConstraintKind, LinearProgram};
use crate::error::{Error, Result};
use crate::types::Sense;

fn parse_num(tok: &str) -> Result<f64> {
    match tok {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{tok}`"))),
    }
}

fn parse_row(line: Option<&str>, len: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing {what} line")))?;
    let row = line
        .split_whitespace()
        .map(parse_num)
        .collect::<Result<Vec<_>>>()?;
    if row.len() != len {
        return Err(Error::Parse(format!(
            "{what}: expected {len} values, got {}",
            row.len()
        )));
    }
    Ok(row)
}

pub fn parse_lp(text: &str) -> Result<LinearProgram> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty LP file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let [m, d, sense] = parts.as_slice() else {
        return Err(Error::Parse(format!("bad header `{header}`")));
    };
    let m: usize = m
        .parse()
        .map_err(|_| Error::Parse(format!("bad m `{m}`")))?;
    let d: usize = d
        .parse()
        .map_err(|_| Error::Parse(format!("bad d `{d}`")))?;
    let sense = match *sense {
        "max" | "maximize" => Sense::Maximize,
        "min" | "minimize" => Sense::Minimize,
        other => return Err(Error::Parse(format!("bad sense `{other}`"))),
    };
    let constraints = (0..m)
        .map(|i| parse_row(lines.next(), d, &format!("row {i}")))
        .collect::<Result<Vec<_>>>()?;
    let rhs = parse_row(lines.next(), m, "rhs")?;
    let lower = parse_row(lines.next(), d, "lower bounds")?;
    let upper = parse_row(lines.next(), d, "upper bounds")?;
    let objective = parse_row(lines.next(), d, "objective")?;
    let kinds = match lines.next() {
        None => vec![ConstraintKind::Le; m],
        Some(line) => {
            let kinds = line
                .split_whitespace()
                .map(|t| match t {
                    "<=" => Ok(ConstraintKind::Le),
                    "=" | "==" => Ok(ConstraintKind::Eq),
                    ">=" => Ok(ConstraintKind::Ge),
                    other => Err(Error::Parse(format!("bad constraint kind `{other}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if kinds.len() != m {
                return Err(Error::Parse("constraint kinds: wrong count".into()));
            }
            kinds
        }
    };
    let lp = LinearProgram {
        constraints,
        rhs,
        kinds,
        sense,
        lower,
        upper,
        objective,
    };
    lp.validate()?;
    Ok(lp)
}

pub fn write_lp(lp: &LinearProgram) -> String {
    fn row(v: &[f64]) -> String {
        v.iter()
            .map(|x| {
                if *x == f64::INFINITY {
                    "inf".to_string()
                } else if *x == f64::NEG_INFINITY {
                    "-inf".to_string()
                } else {
                    x.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
    let sense = match lp.sense {
        Sense::Maximize => "max",
        Sense::Minimize => "min",
    };
    let mut out = format!("{} {} {sense}\n", lp.num_constraints(), lp.num_vars());
    for a in &lp.constraints {
        out.push_str(&row(a));
        out.push('\n');
    }
    for v in [&lp.rhs, &lp.lower, &lp.upper, &lp.objective] {
        out.push_str(&row(v));
        out.push('\n');
    }
    let kinds: Vec<&str> = lp
        .kinds
        .iter()
        .map(|k| match k {
            ConstraintKind::Le => "<=",
            ConstraintKind::Eq => "=",
            ConstraintKind::Ge => ">=",
        })
        .collect();
    out.push_str(&kinds.join(" "));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fig1_problem() {
        let text = "# x1 + x2 <= 1\n1 2 max\n1 1\n1\n0 0\ninf inf\n2 1\n";
        let lp = parse_lp(text).unwrap();
        assert_eq!(lp.constraints, vec![vec![1.0, 1.0]]);
        assert_eq!(lp.upper, vec![f64::INFINITY; 2]);
        assert_eq!(lp.kinds, vec![ConstraintKind::Le]);
        assert_eq!(parse_lp(&write_lp(&lp)).unwrap(), lp);
    }

    #[test]
    fn rejects_short_rows() {
        let text = "1 2 max\n1\n1\n0 0\ninf inf\n2 1\n";
        assert!(matches!(parse_lp(text), Err(Error::Parse(_))));
    }
}
