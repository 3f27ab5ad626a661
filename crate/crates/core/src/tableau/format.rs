//! Plain-text scheme files.
//!
//! ```text
//! # comment
//! name DIRK(6,6)A
//! order 6
//! stages 6
//! <s lines: rows of A, s floats each>
//! <1 line: b, s floats>
//! ```
//!
//! Blank lines are ignored and `#` starts a comment anywhere on a line.

use std::fmt::Write as _;

use super::ButcherTableau;
use crate::error::TableauError;
use crate::scalar::Scalar;

fn perr(line: usize, message: impl Into<String>) -> TableauError {
    TableauError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a scheme file. Errors carry the 1-based line number of the offending line.
pub fn parse_tableau<T: Scalar>(text: &str) -> Result<ButcherTableau<T>, TableauError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let last_line = text.lines().count().max(1);
    let mut header = |key: &str| -> Result<(usize, String), TableauError> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| perr(last_line, format!("missing `{key}` line")))?;
        let rest = line
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
            .ok_or_else(|| perr(no, format!("expected `{key} <value>`, found `{line}`")))?;
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(perr(no, format!("`{key}` needs a value")));
        }
        Ok((no, rest.to_string()))
    };

    let (_, name) = header("name")?;
    let (order_line, order) = header("order")?;
    let order: usize = order
        .parse()
        .map_err(|_| perr(order_line, format!("order `{order}` is not a positive integer")))?;
    let (stages_line, stages) = header("stages")?;
    let s: usize = stages
        .parse()
        .ok()
        .filter(|&s| s > 0)
        .ok_or_else(|| perr(stages_line, format!("stages `{stages}` is not a positive integer")))?;

    let mut parse_row = |what: &str| -> Result<Vec<T>, TableauError> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| perr(last_line, format!("missing {what}")))?;
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<T>()
                    .map_err(|_| perr(no, format!("`{tok}` is not a decimal number")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if row.len() != s {
            return Err(perr(
                no,
                format!("{what} has {} entries, expected {s}", row.len()),
            ));
        }
        Ok(row)
    };

    let mut a = Vec::with_capacity(s);
    for i in 0..s {
        a.push(parse_row(&format!("row {} of A", i + 1))?);
    }
    let b = parse_row("b")?;
    if let Some((no, line)) = lines.next() {
        return Err(perr(no, format!("unexpected trailing content `{line}`")));
    }
    ButcherTableau::new(name, order, a, b)
}

/// Writes a tableau in the scheme file format with 17 significant digits, which
/// round-trips `f64` exactly.
pub fn serialize_tableau<T: Scalar>(t: &ButcherTableau<T>) -> String {
    let mut out = String::new();
    let flags = t.structural_flags();
    let _ = writeln!(
        out,
        "# {}-stage scheme; dirk={} stiffly_accurate={}",
        t.stages(),
        flags.is_dirk,
        flags.is_stiffly_accurate
    );
    let _ = writeln!(out, "name {}", t.name());
    let _ = writeln!(out, "order {}", t.order());
    let _ = writeln!(out, "stages {}", t.stages());
    let fmt_row = |row: &[T]| {
        row.iter()
            .map(|x| format!("{:.16e}", x))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for row in t.rows() {
        let _ = writeln!(out, "{}", fmt_row(row));
    }
    let _ = writeln!(out, "{}", fmt_row(t.b()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{all_builtins, load_builtin};

    #[test]
    fn implicit_midpoint_file() {
        let text = "# implicit midpoint\nname midpoint\norder 2\nstages 1\n0.5\n1.0\n";
        let t = parse_tableau::<f64>(text).unwrap();
        assert_eq!(t.c(), &[0.5]);
        assert_eq!(t.name(), "midpoint");
        assert!(t.structural_flags().is_dirk);
    }

    #[test]
    fn b_shorter_than_a_is_rejected_with_line() {
        let text = "name bad\norder 1\nstages 3\n1 0 0\n1 1 0\n1 1 1\n0.5 0.5\n";
        match parse_tableau::<f64>(text) {
            Err(TableauError::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("b has 2 entries"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_square_row_rejected() {
        let text = "name bad\norder 1\nstages 2\n1 0\n1 1 1\n0.5 0.5\n";
        let err = parse_tableau::<f64>(text).unwrap_err();
        assert!(matches!(err, TableauError::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn malformed_number_and_header() {
        let err = parse_tableau::<f64>("name x\norder six\nstages 1\n1\n1\n").unwrap_err();
        assert!(matches!(err, TableauError::Parse { line: 2, .. }));
        let err = parse_tableau::<f64>("name x\norder 1\nstages 1\n1e\n1\n").unwrap_err();
        assert!(matches!(err, TableauError::Parse { line: 4, .. }));
        let err = parse_tableau::<f64>("nombre x\n").unwrap_err();
        assert!(matches!(err, TableauError::Parse { line: 1, .. }));
        let err = parse_tableau::<f64>("name x\norder 1\nstages 1\n1\n").unwrap_err();
        assert!(matches!(err, TableauError::Parse { .. }));
    }

    #[test]
    fn trailing_comments_and_blank_lines() {
        let text = "\nname m # the midpoint\n\norder 2\nstages 1  # one stage\n 0.5 \n1 # weights\n\n";
        let t = parse_tableau::<f64>(text).unwrap();
        assert_eq!(t.b(), &[1.0]);
    }

    #[test]
    fn builtins_round_trip_bit_for_bit() {
        for t in all_builtins::<f64>() {
            let back = parse_tableau::<f64>(&serialize_tableau(&t)).unwrap();
            assert_eq!(back, t, "{}", t.name());
        }
        let t = load_builtin::<f64>("DIRK(9,7)A").unwrap();
        let back = parse_tableau::<f64>(&serialize_tableau(&t)).unwrap();
        for (x, y) in t.a_flat().iter().zip(back.a_flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
