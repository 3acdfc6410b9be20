//! Fixed-format MPS export of `(A, b, c)`. Optimum metadata is not written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::LpInstance;
use crate::error::{Error, Result};

/// Shortest scientific rendering that fits the 12-character value field.
fn field_value(v: f64) -> String {
    for precision in (0..=16).rev() {
        let s = format!("{v:.precision$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn row_name(i: usize) -> String {
    format!("R{}", i + 1)
}

fn col_name(j: usize) -> String {
    format!("X{}", j + 1)
}

/// Renders the instance as fixed-format MPS text (objective row `COST`,
/// equality rows `R1..Rm`, columns `X1..Xn`, default bounds `x ≥ 0`).
pub fn export_mps(inst: &LpInstance, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n N  COST\n");
    for i in 0..inst.m {
        let _ = writeln!(out, " E  {}", row_name(i));
    }
    out.push_str("COLUMNS\n");
    for j in 0..inst.n {
        let col = col_name(j);
        if inst.c[j] != 0.0 {
            let _ = writeln!(out, "    {col:<8}  {:<8}  {:>12}", "COST", field_value(inst.c[j]));
        }
        for i in 0..inst.m {
            let v = inst.a.get(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "    {col:<8}  {:<8}  {:>12}", row_name(i), field_value(v));
            }
        }
    }
    out.push_str("RHS\n");
    for i in 0..inst.m {
        if inst.b[i] != 0.0 {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(i), field_value(inst.b[i]));
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(inst: &LpInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, export_mps(inst, "PDLAB")).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GeneratorSpec};

    #[test]
    fn sections_and_field_widths() {
        let inst = generate(&GeneratorSpec::gaussian(2, 4), 3).unwrap();
        let text = export_mps(&inst, "T");
        assert!(text.starts_with("NAME          T\nROWS\n N  COST\n E  R1\n E  R2\nCOLUMNS\n"));
        assert!(text.ends_with("ENDATA\n"));
        for line in text.lines().filter(|l| l.starts_with("    ")) {
            assert!(line.len() <= 36, "{line}");
        }
        let entries = text.lines().filter(|l| l.starts_with("    X")).count();
        assert!(entries >= 8);
    }

    #[test]
    fn field_value_fits() {
        for v in [1.0, -123456.789, 1e-300, std::f64::consts::PI] {
            assert!(field_value(v).len() <= 12);
        }
        assert_eq!(field_value(0.5).parse::<f64>().unwrap(), 0.5);
    }
}
