//! Reader for sparse matrices in MATLAB level-5 `.mat` files.
//!
//! Handles both byte orders, compressed (`miCOMPRESSED`) and plain variables,
//! and the small-element tag form. Dense, cell and struct variables are
//! skipped. HDF5-based (v7.3) files are rejected.

use std::io::Read;

use anyhow::{anyhow, bail, ensure, Context, Result};
use flate2::read::ZlibDecoder;

const HEADER_LEN: usize = 128;

const MI_INT8: u32 = 1;
const MI_UINT8: u32 = 2;
const MI_INT16: u32 = 3;
const MI_UINT16: u32 = 4;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_SINGLE: u32 = 7;
const MI_DOUBLE: u32 = 9;
const MI_INT64: u32 = 12;
const MI_UINT64: u32 = 13;
const MI_MATRIX: u32 = 14;
const MI_COMPRESSED: u32 = 15;

const MX_SPARSE_CLASS: u8 = 5;
const FLAG_COMPLEX: u32 = 0x800;

/// Compressed-sparse-column matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row index of every stored entry.
    pub ir: Vec<usize>,
    /// Column start offsets into `ir`, length `cols + 1`.
    pub jc: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |c| {
            (self.jc[c]..self.jc[c + 1]).map(move |k| (self.ir[k], c, self.values[k]))
        })
    }

    /// Unordered pairs `(i, j)`, `i < j`, with a nonzero entry at either
    /// `(i, j)` or `(j, i)`; the diagonal is ignored.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .triplets()
            .filter(|&(r, c, v)| r != c && v != 0.0)
            .map(|(r, c, _)| (r.min(c), r.max(c)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Copy)]
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    big_endian: bool,
}

struct Element<'a> {
    ty: u32,
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], big_endian: bool) -> Self {
        Cursor {
            buf,
            pos: 0,
            big_endian,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn u32(&mut self) -> Result<u32> {
        let b: [u8; 4] = self
            .buf
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| anyhow!("truncated element tag at byte {}", self.pos))?
            .try_into()
            .unwrap();
        self.pos += 4;
        Ok(if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }

    fn element(&mut self) -> Result<Element<'a>> {
        let first = self.u32()?;
        if first >> 16 != 0 {
            // small element: size and type packed into one word, data in the next four bytes
            let n = (first >> 16) as usize;
            ensure!(n <= 4, "small element claims {n} bytes");
            let data = self
                .buf
                .get(self.pos..self.pos + n)
                .ok_or_else(|| anyhow!("truncated small element"))?;
            self.pos += 4;
            return Ok(Element {
                ty: first & 0xffff,
                data,
            });
        }
        let ty = first;
        let n = self.u32()? as usize;
        let data = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or_else(|| anyhow!("element of {n} bytes runs past the end of the data"))?;
        self.pos += n;
        if ty != MI_COMPRESSED {
            self.pos = (self.pos + 7) & !7;
        }
        Ok(Element { ty, data })
    }

    fn numbers(&self, e: &Element) -> Result<Vec<f64>> {
        macro_rules! decode {
            ($t:ty) => {{
                const W: usize = std::mem::size_of::<$t>();
                ensure!(e.data.len().is_multiple_of(W), "misaligned numeric element");
                e.data
                    .chunks_exact(W)
                    .map(|c| {
                        let b: [u8; W] = c.try_into().unwrap();
                        let x = if self.big_endian {
                            <$t>::from_be_bytes(b)
                        } else {
                            <$t>::from_le_bytes(b)
                        };
                        x as f64
                    })
                    .collect()
            }};
        }
        Ok(match e.ty {
            MI_INT8 => decode!(i8),
            MI_UINT8 => decode!(u8),
            MI_INT16 => decode!(i16),
            MI_UINT16 => decode!(u16),
            MI_INT32 => decode!(i32),
            MI_UINT32 => decode!(u32),
            MI_SINGLE => decode!(f32),
            MI_DOUBLE => decode!(f64),
            MI_INT64 => decode!(i64),
            MI_UINT64 => decode!(u64),
            other => bail!("unsupported numeric type {other}"),
        })
    }

    fn indices(&self, e: &Element, what: &str) -> Result<Vec<usize>> {
        self.numbers(e)?
            .into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(anyhow!("invalid {what} entry {x}"))
                }
            })
            .collect()
    }
}

enum Variable {
    Sparse(String, SparseMatrix),
    Other(String),
}

fn parse_matrix(c: &Cursor, data: &[u8]) -> Result<Variable> {
    let mut cur = Cursor::new(data, c.big_endian);
    let flags = cur.element()?;
    let flags = cur.indices(&flags, "array flags")?;
    let word = *flags.first().ok_or_else(|| anyhow!("empty array flags"))? as u32;
    let class = (word & 0xff) as u8;
    let dims = cur.element()?;
    let dims = cur.indices(&dims, "dimension")?;
    let name = cur.element()?;
    let name = String::from_utf8_lossy(name.data).into_owned();
    if class != MX_SPARSE_CLASS {
        return Ok(Variable::Other(name));
    }
    ensure!(
        dims.len() == 2,
        "sparse variable {name} has {} dimensions",
        dims.len()
    );
    if word & FLAG_COMPLEX != 0 {
        bail!("sparse variable {name} is complex");
    }
    let ir = cur.element()?;
    let ir = cur.indices(&ir, "row index")?;
    let jc = cur.element()?;
    let jc = cur.indices(&jc, "column pointer")?;
    let (rows, cols) = (dims[0], dims[1]);
    ensure!(
        jc.len() == cols + 1,
        "{name}: {} column pointers for {cols} columns",
        jc.len()
    );
    let nnz = jc[cols];
    ensure!(
        jc.windows(2).all(|w| w[0] <= w[1]) && ir.len() >= nnz,
        "{name}: inconsistent column pointers"
    );
    let mut ir = ir;
    ir.truncate(nnz);
    ensure!(
        ir.iter().all(|&r| r < rows),
        "{name}: row index out of range"
    );
    let values = if cur.at_end() {
        vec![1.0; nnz]
    } else {
        let pr = cur.element()?;
        let mut v = cur.numbers(&pr)?;
        ensure!(
            v.len() >= nnz,
            "{name}: {} values for {nnz} entries",
            v.len()
        );
        v.truncate(nnz);
        v
    };
    Ok(Variable::Sparse(
        name,
        SparseMatrix {
            rows,
            cols,
            ir,
            jc,
            values,
        },
    ))
}

/// Top-level variables; only sparse matrices are decoded.
fn variables(bytes: &[u8]) -> Result<Vec<Variable>> {
    ensure!(
        bytes.len() >= HEADER_LEN,
        "file is shorter than a MAT header"
    );
    let text = String::from_utf8_lossy(&bytes[..116]);
    if text.starts_with("MATLAB 7.3") {
        bail!("HDF5-based MAT files (v7.3) are not supported");
    }
    let big_endian = match &bytes[126..128] {
        b"IM" => false,
        b"MI" => true,
        other => bail!("bad MAT endian indicator {other:?}"),
    };
    let mut cur = Cursor::new(&bytes[HEADER_LEN..], big_endian);
    let mut out = Vec::new();
    while !cur.at_end() {
        let e = cur.element()?;
        match e.ty {
            MI_MATRIX => out.push(parse_matrix(&cur, e.data)?),
            MI_COMPRESSED => {
                let mut inflated = Vec::new();
                ZlibDecoder::new(e.data)
                    .read_to_end(&mut inflated)
                    .context("inflating compressed variable")?;
                let mut inner = Cursor::new(&inflated, big_endian);
                let m = inner.element()?;
                ensure!(m.ty == MI_MATRIX, "compressed element holds type {}", m.ty);
                out.push(parse_matrix(&inner, m.data)?);
            }
            other => log::debug!("skipping top-level element of type {other}"),
        }
    }
    Ok(out)
}

/// Reads the sparse variable `name` from the bytes of a `.mat` file.
pub fn read_sparse(bytes: &[u8], name: &str) -> Result<SparseMatrix> {
    let mut seen = Vec::new();
    for v in variables(bytes)? {
        match v {
            Variable::Sparse(n, m) if n == name => return Ok(m),
            Variable::Sparse(n, _) | Variable::Other(n) => seen.push(n),
        }
    }
    if seen.iter().any(|n| n == name) {
        bail!("variable {name:?} is not a sparse matrix");
    }
    bail!("no variable {name:?} (found: {})", seen.join(", "))
}
