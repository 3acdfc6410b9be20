//! Self-describing JSON instance files.
//!
//! Reals are stored as hexadecimal float strings so a save/load round trip is
//! bit-exact; a `decimal` object repeats every array in plain decimal for
//! human readers and is ignored on load. Indices in `basis` are 0-based.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::hexfloat::{format_hex, parse_hex};
use super::{InstanceMeta, LpInstance, MatrixDistribution, SolutionDistribution};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
struct Hex(f64);

impl Serialize for Hex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_hex(self.0))
    }
}

impl<'de> Deserialize<'de> for Hex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_hex(&text)
            .map(Hex)
            .ok_or_else(|| de::Error::custom(format!("invalid hexadecimal float `{text}`")))
    }
}

#[derive(Serialize, Deserialize)]
struct DistDescriptor {
    matrix: MatrixDistribution,
    solution: SolutionDistribution,
}

#[derive(Serialize, Deserialize)]
struct Shadow {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    x_star: Vec<f64>,
    s_star: Vec<f64>,
    y_star: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format_version: u32,
    m: usize,
    n: usize,
    seed: u64,
    dist: DistDescriptor,
    presolved: bool,
    certified: bool,
    basis_rcond: Hex,
    min_u: Hex,
    shuffled: bool,
    #[serde(rename = "A")]
    a: Vec<Vec<Hex>>,
    b: Vec<Hex>,
    c: Vec<Hex>,
    x_star: Vec<Hex>,
    s_star: Vec<Hex>,
    y_star: Vec<Hex>,
    basis: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decimal: Option<Shadow>,
}

fn hex_vec(v: &[f64]) -> Vec<Hex> {
    v.iter().copied().map(Hex).collect()
}

fn plain(v: &[Hex]) -> Vec<f64> {
    v.iter().map(|h| h.0).collect()
}

impl From<&LpInstance> for InstanceFile {
    fn from(inst: &LpInstance) -> Self {
        let rows: Vec<Vec<f64>> = (0..inst.m).map(|i| inst.a.row(i).to_vec()).collect();
        Self {
            format_version: FORMAT_VERSION,
            m: inst.m,
            n: inst.n,
            seed: inst.seed,
            dist: DistDescriptor {
                matrix: inst.meta.matrix,
                solution: inst.meta.solution.clone(),
            },
            presolved: inst.presolved,
            certified: inst.meta.certified,
            basis_rcond: Hex(inst.meta.basis_rcond),
            min_u: Hex(inst.meta.min_u),
            shuffled: inst.meta.shuffled,
            a: rows.iter().map(|r| hex_vec(r)).collect(),
            b: hex_vec(&inst.b),
            c: hex_vec(&inst.c),
            x_star: hex_vec(&inst.x_star),
            s_star: hex_vec(&inst.s_star),
            y_star: hex_vec(&inst.y_star),
            basis: inst.basis.clone(),
            decimal: Some(Shadow {
                a: rows,
                b: inst.b.clone(),
                c: inst.c.clone(),
                x_star: inst.x_star.clone(),
                s_star: inst.s_star.clone(),
                y_star: inst.y_star.clone(),
            }),
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<LpInstance> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.a.len() != self.m || self.a.iter().any(|r| r.len() != self.n) {
            return Err(Error::Validation(format!(
                "A is not {}x{}",
                self.m, self.n
            )));
        }
        let data: Vec<f64> = self.a.iter().flat_map(|r| plain(r)).collect();
        let a = DenseMatrix::new(self.m, self.n, data)
            .map_err(|e| Error::Validation(format!("A: {e}")))?;
        let inst = LpInstance {
            m: self.m,
            n: self.n,
            a,
            b: plain(&self.b),
            c: plain(&self.c),
            x_star: plain(&self.x_star),
            s_star: plain(&self.s_star),
            y_star: plain(&self.y_star),
            basis: self.basis,
            seed: self.seed,
            presolved: self.presolved,
            meta: InstanceMeta {
                matrix: self.dist.matrix,
                solution: self.dist.solution,
                certified: self.certified,
                basis_rcond: self.basis_rcond.0,
                min_u: self.min_u.0,
                shuffled: self.shuffled,
            },
        };
        inst.validate()?;
        Ok(inst)
    }
}

pub fn write_instance<W: Write>(inst: &LpInstance, mut w: W) -> Result<()> {
    let file = InstanceFile::from(inst);
    serde_json::to_writer_pretty(&mut w, &file).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))
}

/// Parses and validates an instance. Syntax errors carry the line and
/// column; invariant violations surface as [`Error::Validation`].
pub fn read_instance<R: Read>(r: R) -> Result<LpInstance> {
    let file: InstanceFile = serde_json::from_reader(r).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_instance()
}

pub fn save_instance(inst: &LpInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_instance(inst, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<LpInstance> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_instance(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GeneratorSpec};

    #[test]
    fn round_trip_is_bit_exact() {
        let inst = generate(&GeneratorSpec::gaussian(3, 7), 21).unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let back = read_instance(buf.as_slice()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let inst = generate(&GeneratorSpec::gaussian(2, 4), 1).unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        buf.truncate(buf.len() / 2);
        match read_instance(buf.as_slice()) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn tampered_rhs_fails_validation() {
        let mut inst = generate(&GeneratorSpec::gaussian(2, 4), 1).unwrap();
        inst.b[0] += 1e-3;
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        assert!(matches!(
            read_instance(buf.as_slice()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bad_hex_literal_is_a_parse_error() {
        let inst = generate(&GeneratorSpec::gaussian(2, 4), 1).unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = format!("\"{}\"", format_hex(inst.b[0]));
        let broken = text.replacen(&first, "\"0xZZp+0\"", 1);
        assert!(matches!(
            read_instance(broken.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }
}
