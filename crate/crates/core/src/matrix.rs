//! Dense matrices over a chain ring.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{Elem, RingSpec};

/// A finite `A`-module type `(lambda_1 >= lambda_2 >= ...)`, standing for the
/// direct sum of the cyclic modules `A / pi^{lambda_r}`. Zero parts are trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&x| x > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Composition length of the module, the sum of the parts.
    pub fn length(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Young diagram containment `other ⊆ self`.
    pub fn contains(&self, other: &Partition) -> bool {
        other.0.len() <= self.0.len() && other.0.iter().zip(&self.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat {
    ring: RingSpec,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

/// Result of the Smith-type diagonalisation `P * A * Q = D`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Valuations of the diagonal entries of `D` (length `min(rows, cols)`,
    /// nondecreasing, `k` for zero entries). Each nonzero entry is exactly `pi^d`.
    pub diagonal: Vec<u32>,
    pub left: Mat,
    pub right: Mat,
}

impl Mat {
    pub fn new(ring: RingSpec, rows: usize, cols: usize, data: Vec<Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|e| e.0 >= ring.size()) {
            return Err(Error::InvalidParameters("entry out of range".into()));
        }
        Ok(Self {
            ring,
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(ring: RingSpec, rows: usize, cols: usize) -> Self {
        Self {
            ring,
            rows,
            cols,
            data: vec![ring.zero(); rows * cols],
        }
    }

    pub fn identity(ring: RingSpec, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, ring.one());
        }
        m
    }

    /// Builds a matrix from element codes in row-major order.
    pub fn from_codes(ring: RingSpec, rows: usize, cols: usize, codes: &[u32]) -> Result<Self> {
        Self::new(ring, rows, cols, codes.iter().map(|&c| Elem(c)).collect())
    }

    /// Permutation matrix with a 1 in row `perm[j]` of column `j` (0-based).
    pub fn permutation(ring: RingSpec, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zeros(ring, n, n);
        for (j, &i) in perm.iter().enumerate() {
            m.set(i, j, ring.one());
        }
        m
    }

    /// Parses `"1,0;2,1"`: rows separated by `;`, entries by `,`.
    pub fn parse(ring: RingSpec, s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.trim().split(';').collect();
        let mut data = Vec::new();
        let mut cols = None;
        for row in &rows {
            let entries: Vec<&str> = row.split(',').collect();
            if *cols.get_or_insert(entries.len()) != entries.len() {
                return Err(Error::Parse(format!("ragged matrix `{s}`")));
            }
            for e in entries {
                data.push(ring.parse_elem(e)?);
            }
        }
        Self::new(ring, rows.len(), cols.unwrap_or(0), data)
    }

    pub fn ring(&self) -> &RingSpec {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, x: Elem) {
        self.data[r * self.cols + c] = x;
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let ring = &self.ring;
        let mut out = Mat::zeros(*ring, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = ring.zero();
                for t in 0..self.cols {
                    acc = ring.add(acc, ring.mul(self.get(i, t), other.get(t, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Shape("subtraction of different shapes".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.ring.sub(a, b))
            .collect();
        Ok(Mat {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Determinant via elimination with minimal-valuation pivots.
    pub fn det(&self) -> Result<Elem> {
        if !self.is_square() {
            return Err(Error::Shape("determinant of a non-square matrix".into()));
        }
        let ring = self.ring;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = ring.one();
        for t in 0..n {
            let pivot = (t..n)
                .min_by_key(|&r| (ring.valuation(m.get(r, t)), r))
                .unwrap();
            let (v, u) = ring.split_unit(m.get(pivot, t));
            if v == ring.k() {
                return Ok(ring.zero());
            }
            if pivot != t {
                m.swap_rows(pivot, t);
                det = ring.neg(det);
            }
            let u_inv = ring.inv(u)?;
            for r in t + 1..n {
                let c = ring.mul(divide_by_pi_power(&ring, m.get(r, t), v), u_inv);
                m.add_row_multiple(r, t, ring.neg(c));
            }
            det = ring.mul(det, m.get(t, t));
        }
        Ok(det)
    }

    /// Invertibility is decided over the residue field.
    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.det().map(|d| self.ring.is_unit(d)).unwrap_or(false)
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of a non-square matrix".into()));
        }
        let ring = self.ring;
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = Mat::identity(ring, n);
        for t in 0..n {
            let pivot = (t..n)
                .find(|&r| ring.is_unit(m.get(r, t)))
                .ok_or(Error::NonInvertible)?;
            m.swap_rows(pivot, t);
            inv.swap_rows(pivot, t);
            let s = ring.inv(m.get(t, t))?;
            m.scale_row(t, s);
            inv.scale_row(t, s);
            for r in 0..n {
                if r != t {
                    let c = ring.neg(m.get(r, t));
                    m.add_row_multiple(r, t, c);
                    inv.add_row_multiple(r, t, c);
                }
            }
        }
        Ok(inv)
    }

    /// Upper triangular with unit diagonal.
    pub fn is_borel(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                self.ring.is_unit(self.get(i, i))
                    && (0..i).all(|j| self.get(i, j) == self.ring.zero())
            })
    }

    pub fn reduce_mod_p(&self) -> Mat {
        self.reduce_to(1)
    }

    /// Entrywise image in the quotient ring `A_m`.
    pub fn reduce_to(&self, m: u32) -> Mat {
        let m = m.min(self.ring.k());
        let target = self.ring.quotient(m).expect("m >= 1");
        let data = self.data.iter().map(|&e| self.ring.reduce(e, m)).collect();
        Mat {
            ring: target,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Rows `r0..r1`, columns `c0..c1` (half-open).
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Result<Mat> {
        if r0 > r1 || r1 > self.rows || c0 > c1 || c1 > self.cols {
            return Err(Error::IndexOutOfRange(format!(
                "rows {r0}..{r1}, cols {c0}..{c1} of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut data = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for r in r0..r1 {
            data.extend_from_slice(&self.data[r * self.cols + c0..r * self.cols + c1]);
        }
        Ok(Mat {
            ring: self.ring,
            rows: r1 - r0,
            cols: c1 - c0,
            data,
        })
    }

    /// The lower-left `(n - i) x j` submatrix: rows `i+1..n`, columns `1..j` (1-based).
    pub fn lower_left_submatrix(&self, i: usize, j: usize) -> Result<Mat> {
        if i > self.rows || j > self.cols {
            return Err(Error::IndexOutOfRange(format!(
                "({i},{j}) for a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        self.submatrix(i, self.rows, 0, j)
    }

    pub fn hconcat(&self, other: &Mat) -> Result<Mat> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if self.rows != other.rows {
            return Err(Error::Shape("hconcat of different row counts".into()));
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + other.cols));
        for r in 0..self.rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            data.extend_from_slice(&other.data[r * other.cols..(r + 1) * other.cols]);
        }
        Ok(Mat {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    /// Smith-type diagonalisation. Pivot is an entry of minimal valuation in the
    /// remaining block, ties broken by row-major scan order.
    pub fn smith(&self) -> SmithForm {
        let ring = self.ring;
        let k = ring.k();
        let (rows, cols) = (self.rows, self.cols);
        let mut d = self.clone();
        let mut left = Mat::identity(ring, rows);
        let mut right = Mat::identity(ring, cols);
        let mut diagonal = Vec::with_capacity(rows.min(cols));
        for t in 0..rows.min(cols) {
            let mut best: Option<(u32, usize, usize)> = None;
            for r in t..rows {
                for c in t..cols {
                    let v = ring.valuation(d.get(r, c));
                    if v < k && best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, r, c));
                    }
                }
            }
            let Some((v, pr, pc)) = best else {
                diagonal.extend(std::iter::repeat_n(k, rows.min(cols) - t));
                break;
            };
            d.swap_rows(pr, t);
            left.swap_rows(pr, t);
            d.swap_cols(pc, t);
            right.swap_cols(pc, t);
            let (_, u) = ring.split_unit(d.get(t, t));
            let u_inv = ring.inv(u).expect("unit part");
            d.scale_row(t, u_inv);
            left.scale_row(t, u_inv);
            for r in t + 1..rows {
                let c = divide_by_pi_power(&ring, d.get(r, t), v);
                if c != ring.zero() {
                    d.add_row_multiple(r, t, ring.neg(c));
                    left.add_row_multiple(r, t, ring.neg(c));
                }
            }
            for c in t + 1..cols {
                let x = divide_by_pi_power(&ring, d.get(t, c), v);
                if x != ring.zero() {
                    d.add_col_multiple(c, t, ring.neg(x));
                    right.add_col_multiple(c, t, ring.neg(x));
                }
            }
            diagonal.push(v);
        }
        SmithForm {
            diagonal,
            left,
            right,
        }
    }

    /// Isomorphism type of the column span.
    pub fn module_type(&self) -> Partition {
        let k = self.ring.k();
        Partition::new(self.smith().diagonal.iter().map(|&d| k - d).collect())
    }

    /// Composition length of the column span.
    pub fn column_span_length(&self) -> u32 {
        self.module_type().length()
    }

    /// Generators (as columns) of `{x : self * x = 0}`.
    pub fn kernel(&self) -> Mat {
        let ring = self.ring;
        let k = ring.k();
        let smith = self.smith();
        let mut gens: Vec<Vec<Elem>> = Vec::new();
        for t in 0..self.cols {
            let d = smith.diagonal.get(t).copied().unwrap_or(k);
            if d == 0 {
                continue;
            }
            // pi^d y_t = 0  <=>  y_t in pi^(k-d) A
            let scale = ring.pi_pow(k - d);
            gens.push(
                (0..self.cols)
                    .map(|r| ring.mul(smith.right.get(r, t), scale))
                    .collect(),
            );
        }
        let mut out = Mat::zeros(ring, self.cols, gens.len());
        for (c, g) in gens.iter().enumerate() {
            for (r, &x) in g.iter().enumerate() {
                out.set(r, c, x);
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.ring, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    pub fn scale_row(&mut self, r: usize, s: Elem) {
        for c in 0..self.cols {
            let x = self.get(r, c);
            self.set(r, c, self.ring.mul(x, s));
        }
    }

    pub fn scale_col(&mut self, c: usize, s: Elem) {
        for r in 0..self.rows {
            let x = self.get(r, c);
            self.set(r, c, self.ring.mul(x, s));
        }
    }

    /// `R_dst += s * R_src`.
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, s: Elem) {
        for c in 0..self.cols {
            let x = self
                .ring
                .add(self.get(dst, c), self.ring.mul(s, self.get(src, c)));
            self.set(dst, c, x);
        }
    }

    /// `C_dst += s * C_src`.
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, s: Elem) {
        for r in 0..self.rows {
            let x = self
                .ring
                .add(self.get(r, dst), self.ring.mul(s, self.get(r, src)));
            self.set(r, dst, x);
        }
    }

    pub fn to_json(&self) -> MatJson {
        MatJson {
            ring: self.ring,
            rows: (0..self.rows)
                .map(|r| {
                    (0..self.cols)
                        .map(|c| self.ring.format_elem(self.get(r, c)))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Some `y` with `pi^v * y = x`; requires `v(x) >= v`.
pub(crate) fn divide_by_pi_power(ring: &RingSpec, x: Elem, v: u32) -> Elem {
    let (w, u) = ring.split_unit(x);
    if w >= ring.k() {
        return ring.zero();
    }
    debug_assert!(w >= v);
    ring.mul(ring.pi_pow(w - v), u)
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.ring.format_elem(self.get(r, c)))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

/// JSON form `{"ring": "zpk:p=2,k=2", "rows": [["1","0"],["2","1"]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatJson {
    pub ring: RingSpec,
    pub rows: Vec<Vec<String>>,
}

impl TryFrom<MatJson> for Mat {
    type Error = Error;

    fn try_from(j: MatJson) -> Result<Mat> {
        let cols = j.rows.first().map_or(0, Vec::len);
        let mut data = Vec::new();
        for row in &j.rows {
            if row.len() != cols {
                return Err(Error::Parse("ragged matrix".into()));
            }
            for e in row {
                data.push(j.ring.parse_elem(e)?);
            }
        }
        Mat::new(j.ring, j.rows.len(), cols, data)
    }
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Mat::try_from(MatJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub fn random_gl_with<R: Rng>(ring: RingSpec, n: usize, rng: &mut R) -> Mat {
    loop {
        let data = (0..n * n)
            .map(|_| Elem(rng.random_range(0..ring.size())))
            .collect();
        let m = Mat {
            ring,
            rows: n,
            cols: n,
            data,
        };
        if m.is_invertible() {
            return m;
        }
    }
}

pub fn random_borel_with<R: Rng>(ring: RingSpec, n: usize, rng: &mut R) -> Mat {
    let mut m = Mat::zeros(ring, n, n);
    for i in 0..n {
        let unit = loop {
            let x = Elem(rng.random_range(0..ring.size()));
            if ring.is_unit(x) {
                break x;
            }
        };
        m.set(i, i, unit);
        for j in i + 1..n {
            m.set(i, j, Elem(rng.random_range(0..ring.size())));
        }
    }
    m
}

/// Uniform element of `GL_n(A)`, by rejection; deterministic in `seed`.
pub fn random_gl(ring: RingSpec, n: usize, seed: u64) -> Mat {
    random_gl_with(ring, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform element of the upper triangular subgroup; deterministic in `seed`.
pub fn random_borel(ring: RingSpec, n: usize, seed: u64) -> Mat {
    random_borel_with(ring, n, &mut ChaCha8Rng::seed_from_u64(seed))
}
