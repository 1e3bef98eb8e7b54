//! Lossless text checkpoints.
//!
//! ```text
//! faithkit-ckpt v1
//! dims <V> <d> <h> <C>
//! embedding <rows> <cols>
//! <row-major values, one matrix row per line>
//! w1 <rows> <cols>
//! ...
//! ```
//!
//! Biases are stored as `1 × len` blocks. Reals are written with the shortest
//! representation that parses back to the identical value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{ClassifierModel, ModelParts, NUM_CLASSES};
use crate::scalar::Scalar;

pub const HEADER: &str = "faithkit-ckpt v1";

const BLOCKS: [&str; 7] = ["embedding", "w1", "b1", "w2", "b2", "w3", "b3"];

fn write_block<T: Scalar>(out: &mut String, name: &str, m: &Array2<T>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
}

fn as_row<T: Scalar>(v: &Array1<T>) -> Array2<T> {
    v.clone().insert_axis(ndarray::Axis(0))
}

/// Serializes a model to the checkpoint text format.
pub fn to_string<T: Scalar>(model: &ClassifierModel<T>) -> String {
    let p = model.parts();
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(
        out,
        "dims {} {} {} {}",
        model.vocab_size(),
        model.embed_dim(),
        model.hidden(),
        NUM_CLASSES
    );
    write_block(&mut out, "embedding", &p.embedding);
    write_block(&mut out, "w1", &p.w1);
    write_block(&mut out, "b1", &as_row(&p.b1));
    write_block(&mut out, "w2", &p.w2);
    write_block(&mut out, "b2", &as_row(&p.b2));
    write_block(&mut out, "w3", &p.w3);
    write_block(&mut out, "b3", &as_row(&p.b3));
    out
}

pub fn save_checkpoint<T: Scalar>(model: &ClassifierModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(model)).map_err(|e| Error::io(path, e))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l.trim_end_matches('\r'))),
            None => Err(Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    }
}

fn parse_usize(line: usize, tok: Option<&str>) -> Result<usize> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: "expected a non-negative integer".into(),
    })
}

fn read_block<T: Scalar>(
    lines: &mut Lines<'_>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Array2<T>> {
    let (ln, head) = lines.next(name)?;
    let mut toks = head.split_whitespace();
    if toks.next() != Some(name) {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected block `{name}`"),
        });
    }
    let r = parse_usize(ln, toks.next())?;
    let c = parse_usize(ln, toks.next())?;
    if (r, c) != (rows, cols) {
        return Err(Error::Dimension(format!(
            "block `{name}` is {r} × {c}, dims line implies {rows} × {cols}"
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (ln, row) = lines.next(name)?;
        let before = data.len();
        for tok in row.split_whitespace() {
            let v: T = tok.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad real `{tok}`"),
            })?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {cols} values in `{name}` row"),
            });
        }
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
}

/// Parses checkpoint text. Nothing is returned unless the whole file is valid.
pub fn from_str<T: Scalar>(text: &str) -> Result<ClassifierModel<T>> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.next("header")?;
    if header.trim() != HEADER {
        return if header.starts_with("faithkit-ckpt") {
            Err(Error::Version(header.trim().to_string()))
        } else {
            Err(Error::Parse {
                line: 1,
                msg: format!("expected `{HEADER}`"),
            })
        };
    }
    let (ln, dims) = lines.next("dims")?;
    let mut toks = dims.split_whitespace();
    if toks.next() != Some("dims") {
        return Err(Error::Parse {
            line: ln,
            msg: "expected `dims V d h C`".into(),
        });
    }
    let v = parse_usize(ln, toks.next())?;
    let d = parse_usize(ln, toks.next())?;
    let h = parse_usize(ln, toks.next())?;
    let c = parse_usize(ln, toks.next())?;
    if c != NUM_CLASSES {
        return Err(Error::Dimension(format!("{c} classes, only binary is supported")));
    }
    let shapes = [(v, d), (h, d), (1, h), (h, h), (1, h), (c, h), (1, c)];
    let mut blocks = Vec::with_capacity(BLOCKS.len());
    for (name, (r, cols)) in BLOCKS.iter().zip(shapes) {
        blocks.push(read_block::<T>(&mut lines, name, r, cols)?);
    }
    let mut it = blocks.into_iter();
    let mut next = || it.next().unwrap();
    let row = |m: Array2<T>| m.row(0).to_owned();
    let parts = ModelParts {
        embedding: next(),
        w1: next(),
        b1: row(next()),
        w2: next(),
        b2: row(next()),
        w3: next(),
        b3: row(next()),
    };
    ClassifierModel::new(parts)
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ClassifierModel<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}

/// Loads a checkpoint and checks its vocabulary size against `vocab_len`.
pub fn load_checkpoint_for_vocab<T: Scalar>(
    path: impl AsRef<Path>,
    vocab_len: usize,
) -> Result<ClassifierModel<T>> {
    let model = load_checkpoint(path)?;
    if model.vocab_size() != vocab_len {
        return Err(Error::Dimension(format!(
            "checkpoint has |V| = {}, vocabulary has {vocab_len} entries",
            model.vocab_size()
        )));
    }
    Ok(model)
}
