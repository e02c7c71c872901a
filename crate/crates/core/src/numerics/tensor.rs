//! Dense row-major f32 tensors.
//!
//! Small and predictable beats clever here: this pipeline works at desk
//! scale, so every operation is a plain loop with a deterministic summation
//! order. Reductions accumulate in f64. Public operations reject non-finite
//! results so NaN poisoning surfaces at the op that produced it, not three
//! stages later.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SMLY";
const FORMAT_VERSION: u16 = 1;
const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Build a tensor, validating element count and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                expect,
                data.len()
            )));
        }
        let t = Tensor { shape, data };
        t.check_finite()?;
        Ok(t)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn vector(data: Vec<f32>) -> Result<Self> {
        let len = data.len();
        Tensor::new(vec![len], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Row count of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn at2(&self, r: usize, c: usize) -> f32 {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        let w = self.shape[1];
        &self.data[r * w..(r + 1) * w]
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::Numeric(format!(
                "non-finite value {} at flat index {i}",
                self.data[i]
            ))),
            None => Ok(()),
        }
    }

    fn require_rank2(&self, what: &str) -> Result<()> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!(
                "{what} needs a rank-2 tensor, got rank {}",
                self.rank()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Tensor> {
        Tensor::new(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, s: f32) -> Result<Tensor> {
        self.map(|v| v * s)
    }

    fn zip(&self, other: &Tensor, f: impl Fn(f32, f32) -> f32, op: &str) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "{op} shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a + b, "add")
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a - b, "sub")
    }

    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a * b, "hadamard")
    }

    /// Matrix product (m x k) . (k x n), accumulated in f64 with a fixed
    /// summation order.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        self.require_rank2("matmul lhs")?;
        other.require_rank2("matmul rhs")?;
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul inner dims differ: {k} vs {k2}"
            )));
        }
        let mut out = vec![0.0f32; m * n];
        let mut acc = vec![0.0f64; n];
        for i in 0..m {
            acc.fill(0.0);
            for kk in 0..k {
                let a = self.data[i * k + kk] as f64;
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[kk * n..(kk + 1) * n];
                for (j, &b) in brow.iter().enumerate() {
                    acc[j] += a * b as f64;
                }
            }
            for j in 0..n {
                out[i * n + j] = acc[j] as f32;
            }
        }
        Tensor::new(vec![m, n], out)
    }

    /// (m x k) . (n x k)^T -> (m x n), without materializing the transpose.
    pub fn matmul_bt(&self, other: &Tensor) -> Result<Tensor> {
        self.require_rank2("matmul_bt lhs")?;
        other.require_rank2("matmul_bt rhs")?;
        let (m, k) = (self.shape[0], self.shape[1]);
        let (n, k2) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul_bt inner dims differ: {k} vs {k2}"
            )));
        }
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &other.data[j * k..(j + 1) * k];
                let mut acc = 0.0f64;
                for kk in 0..k {
                    acc += arow[kk] as f64 * brow[kk] as f64;
                }
                out[i * n + j] = acc as f32;
            }
        }
        Tensor::new(vec![m, n], out)
    }

    /// (m x k)^T . (m x n) -> (k x n).
    pub fn matmul_at(&self, other: &Tensor) -> Result<Tensor> {
        self.require_rank2("matmul_at lhs")?;
        other.require_rank2("matmul_at rhs")?;
        let (m, k) = (self.shape[0], self.shape[1]);
        let (m2, n) = (other.shape[0], other.shape[1]);
        if m != m2 {
            return Err(Error::Shape(format!(
                "matmul_at outer dims differ: {m} vs {m2}"
            )));
        }
        let mut acc = vec![0.0f64; k * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let brow = &other.data[i * n..(i + 1) * n];
            for (kk, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let a = a as f64;
                let dst = &mut acc[kk * n..(kk + 1) * n];
                for (j, &b) in brow.iter().enumerate() {
                    dst[j] += a * b as f64;
                }
            }
        }
        Tensor::new(vec![k, n], acc.iter().map(|&v| v as f32).collect())
    }

    pub fn transpose(&self) -> Result<Tensor> {
        self.require_rank2("transpose")?;
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Tensor::new(vec![n, m], out)
    }

    /// Add a length-n bias vector to every row of an (m x n) tensor.
    pub fn add_row(&self, bias: &Tensor) -> Result<Tensor> {
        self.require_rank2("add_row lhs")?;
        if bias.rank() != 1 || bias.len() != self.shape[1] {
            return Err(Error::Shape(format!(
                "bias shape {:?} does not match row width {}",
                bias.shape, self.shape[1]
            )));
        }
        let n = self.shape[1];
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| v + bias.data[i % n])
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    /// Column sums of a rank-2 tensor as a length-n vector.
    pub fn col_sum(&self) -> Result<Tensor> {
        self.require_rank2("col_sum")?;
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut acc = vec![0.0f64; n];
        for i in 0..m {
            for j in 0..n {
                acc[j] += self.data[i * n + j] as f64;
            }
        }
        Tensor::new(vec![n], acc.iter().map(|&v| v as f32).collect())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    // ---- serialization ----

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[DTYPE_F32, self.rank() as u8])?;
        for &d in &self.shape {
            let d = u32::try_from(d)
                .map_err(|_| Error::Parse(format!("dimension {d} exceeds u32")))?;
            w.write_all(&d.to_le_bytes())?;
        }
        for &v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Parse(format!("bad tensor magic {magic:?}")));
        }
        let mut buf2 = [0u8; 2];
        read_exact(r, &mut buf2, "version")?;
        let version = u16::from_le_bytes(buf2);
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported tensor version {version}")));
        }
        read_exact(r, &mut buf2, "dtype/rank")?;
        let [dtype, rank] = buf2;
        if dtype != DTYPE_F32 {
            return Err(Error::Parse(format!("unsupported dtype {dtype}")));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut buf4 = [0u8; 4];
        for _ in 0..rank {
            read_exact(r, &mut buf4, "dimension")?;
            shape.push(u32::from_le_bytes(buf4) as usize);
        }
        let len = shape.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        let len = len.ok_or_else(|| Error::Parse("dimension product overflow".into()))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            read_exact(r, &mut buf4, "payload")?;
            data.push(f32::from_le_bytes(buf4));
        }
        Tensor::new(shape, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        use std::io::Write as _;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Tensor::read_from(&mut f)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Parse(format!("truncated tensor file while reading {what}: {e}")))
}
