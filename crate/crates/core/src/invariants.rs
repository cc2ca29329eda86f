//! Double-coset invariants of `alpha` in `GL_n(A)`.
//!
//! With `F_0^i` the span of `e_1..e_i` and `F^j` the span of the first `j`
//! columns of `alpha`, every invariant here is read off the modules
//! `F^j ∩ F_0^i`. Their lengths come from the lower-left submatrices: the
//! column span of rows `i+1..n`, columns `1..j` is `F^j / (F^j ∩ F_0^i)`.
//!
//! Row sums of the intersection-number matrix are checked by tests rather
//! than assumed; only the column sums have a written argument behind them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Mat, Partition};
use crate::ring::RingSpec;

/// A permutation matrix stored by columns: column `j` has its 1 in row `perm[j]`
/// (0-based internally, 1-based in text and JSON).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermMatrix {
    perm: Vec<usize>,
}

impl PermMatrix {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &i in &perm {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameters(format!(
                    "{perm:?} is not a permutation"
                )));
            }
        }
        Ok(Self { perm })
    }

    /// From 1-based one-line notation.
    pub fn from_one_line(one_line: &[usize]) -> Result<Self> {
        if one_line.contains(&0) {
            return Err(Error::InvalidParameters(
                "one-line notation is 1-based".into(),
            ));
        }
        Self::new(one_line.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    /// The longest element, the antidiagonal matrix.
    pub fn longest(n: usize) -> Self {
        Self {
            perm: (0..n).rev().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Row (0-based) of the 1 in column `j`.
    pub fn row_of(&self, j: usize) -> usize {
        self.perm[j]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.perm.iter().map(|&i| i + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &i)| i == j)
    }

    pub fn to_mat(&self, ring: RingSpec) -> Mat {
        Mat::permutation(ring, &self.perm)
    }

    /// Splittings `w = (0 w1; w2 0)` with `w1` of order `n1` in the top-right
    /// corner and `w2` of order `n - n1` in the bottom-left corner.
    pub fn decompositions(&self) -> Vec<(PermMatrix, PermMatrix)> {
        let n = self.n();
        (1..n)
            .filter_map(|n1| {
                let n2 = n - n1;
                let lower = (0..n2).all(|j| self.perm[j] >= n1);
                lower.then(|| {
                    let w2 = PermMatrix {
                        perm: (0..n2).map(|j| self.perm[j] - n1).collect(),
                    };
                    let w1 = PermMatrix {
                        perm: (n2..n).map(|j| self.perm[j]).collect(),
                    };
                    (w1, w2)
                })
            })
            .collect()
    }
}

impl fmt::Display for PermMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.one_line().iter().map(usize::to_string).collect();
        write!(f, "[{}]", s.join(","))
    }
}

impl Serialize for PermMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_line().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PermMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        PermMatrix::from_one_line(&v).map_err(serde::de::Error::custom)
    }
}

/// The matrix of intersection numbers `r(alpha)`; `get(i, j)` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntersectionMatrix {
    rows: Vec<Vec<u32>>,
}

impl IntersectionMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.rows[i - 1][j - 1]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row_sums(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u32> {
        (0..self.n())
            .map(|j| self.rows.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// The permutation matrix with the same nonzero pattern, if `r` is one.
    pub fn as_permutation(&self) -> Option<PermMatrix> {
        let n = self.n();
        let mut perm = Vec::with_capacity(n);
        for j in 0..n {
            let ones: Vec<usize> = (0..n).filter(|&i| self.rows[i][j] != 0).collect();
            if ones.len() != 1 || self.rows[ones[0]][j] != 1 {
                return None;
            }
            perm.push(ones[0]);
        }
        PermMatrix::new(perm).ok()
    }
}

/// Types of `F^j ∩ F_0^i` for `0 <= i, j <= n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntersectionProfile {
    n: usize,
    table: Vec<Partition>,
}

impl IntersectionProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Partition {
        &self.table[i * (self.n + 1) + j]
    }

    /// Keys `"i,j"`, for JSON output.
    pub fn to_map(&self) -> BTreeMap<String, Partition> {
        let mut out = BTreeMap::new();
        for i in 0..=self.n {
            for j in 0..=self.n {
                out.insert(format!("{i},{j}"), self.get(i, j).clone());
            }
        }
        out
    }

    /// Containment grows along both indices.
    pub fn is_monotone(&self) -> bool {
        (0..=self.n).all(|i| {
            (0..=self.n).all(|j| {
                (i == 0 || self.get(i, j).contains(self.get(i - 1, j)))
                    && (j == 0 || self.get(i, j).contains(self.get(i, j - 1)))
            })
        })
    }
}

/// All invariants in their JSON shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    #[serde(rename = "W")]
    pub w: PermMatrix,
    pub r: IntersectionMatrix,
    pub profile: BTreeMap<String, Partition>,
}

fn require_invertible(alpha: &Mat) -> Result<()> {
    if alpha.is_invertible() {
        Ok(())
    } else {
        Err(Error::NonInvertible)
    }
}

/// Lengths `ell(i, j)` for all `0 <= i, j <= n`, with `ell(i,j) = j*k - length([alpha]^{ij})`.
fn length_table(alpha: &Mat) -> Vec<Vec<u32>> {
    let n = alpha.rows();
    let k = alpha.ring().k();
    (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    let block = alpha.lower_left_submatrix(i, j).expect("indices in range");
                    j as u32 * k - block.column_span_length()
                })
                .collect()
        })
        .collect()
}

fn graded_pieces(ell: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = ell.len() - 1;
    (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| ell[i][j] + ell[i - 1][j - 1] - ell[i - 1][j] - ell[i][j - 1])
                .collect()
        })
        .collect()
}

/// The Bruhat permutation of `alpha` reduced modulo the maximal ideal.
///
/// Over the residue field, `rank([alpha]^{i-1,j}) > rank([alpha]^{i-1,j-1})`
/// holds exactly when the 1 in column `j` sits in row `i` or below, so
/// `w(j)` is the largest such `i`.
pub fn permutation_invariant(alpha: &Mat) -> Result<PermMatrix> {
    require_invertible(alpha)?;
    let reduced = alpha.reduce_mod_p();
    let n = alpha.rows();
    let rank = |i: usize, j: usize| {
        reduced
            .lower_left_submatrix(i, j)
            .expect("in range")
            .column_span_length()
    };
    let perm = (1..=n)
        .map(|j| {
            (1..=n)
                .rev()
                .find(|&i| rank(i - 1, j) > rank(i - 1, j - 1))
                .map(|i| i - 1)
                .expect("invertible matrix has a pivot in every column")
        })
        .collect();
    PermMatrix::new(perm)
}

/// Length of `F^j ∩ F_0^i`.
pub fn intersection_length(alpha: &Mat, i: usize, j: usize) -> Result<u32> {
    let n = alpha.rows();
    if i > n || j > n {
        return Err(Error::IndexOutOfRange(format!("({i},{j}) with n = {n}")));
    }
    require_invertible(alpha)?;
    let block = alpha.lower_left_submatrix(i, j)?;
    Ok(j as u32 * alpha.ring().k() - block.column_span_length())
}

/// `r_ij = ell(i,j) - ell(i-1,j) - ell(i,j-1) + ell(i-1,j-1)`.
pub fn intersection_numbers(alpha: &Mat) -> Result<IntersectionMatrix> {
    require_invertible(alpha)?;
    Ok(IntersectionMatrix {
        rows: graded_pieces(&length_table(alpha)),
    })
}

/// Type of `F^j ∩ F_0^i`, from the kernel of `[alpha_{*,1..j} | e_1 .. e_i]`.
pub fn intersection_type(alpha: &Mat, i: usize, j: usize) -> Result<Partition> {
    let n = alpha.rows();
    if i > n || j > n {
        return Err(Error::IndexOutOfRange(format!("({i},{j}) with n = {n}")));
    }
    if i == 0 || j == 0 {
        return Ok(Partition::default());
    }
    let ring = *alpha.ring();
    let first_cols = alpha.submatrix(0, n, 0, j)?;
    let std_cols = Mat::identity(ring, n).submatrix(0, n, 0, i)?;
    let kernel = first_cols.hconcat(&std_cols)?.kernel();
    if kernel.cols() == 0 {
        return Ok(Partition::default());
    }
    let coeffs = kernel.submatrix(0, j, 0, kernel.cols())?;
    Ok(first_cols.mul(&coeffs)?.module_type())
}

pub fn intersection_profile(alpha: &Mat) -> Result<IntersectionProfile> {
    require_invertible(alpha)?;
    let n = alpha.rows();
    let mut table = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            table.push(intersection_type(alpha, i, j)?);
        }
    }
    Ok(IntersectionProfile { n, table })
}

pub fn invariants(alpha: &Mat) -> Result<Invariants> {
    Ok(Invariants {
        w: permutation_invariant(alpha)?,
        r: intersection_numbers(alpha)?,
        profile: intersection_profile(alpha)?.to_map(),
    })
}

/// Block reduction for `alpha = (X1 alpha1; alpha2 X2)` with `alpha1` of order
/// `n1` in the top-right corner and `alpha2` of order `n2` in the bottom-left
/// corner. Returns `(alpha2, alpha1 - X1 alpha2^{-1} X2)`; `alpha` is
/// equivalent to the antidiagonal matrix assembled from the pair.
pub fn block_reduce(alpha: &Mat, n1: usize, n2: usize) -> Result<(Mat, Mat)> {
    let n = alpha.rows();
    if !alpha.is_square() || n1 + n2 != n || n1 == 0 || n2 == 0 {
        return Err(Error::Shape(format!(
            "cannot split order {n} as {n1} + {n2}"
        )));
    }
    let x1 = alpha.submatrix(0, n1, 0, n2)?;
    let alpha1 = alpha.submatrix(0, n1, n2, n)?;
    let alpha2 = alpha.submatrix(n1, n, 0, n2)?;
    let x2 = alpha.submatrix(n1, n, n2, n)?;
    let alpha2_inv = alpha2.inverse().map_err(|_| Error::BlockNotInvertible)?;
    let reduced = alpha1.sub(&x1.mul(&alpha2_inv)?.mul(&x2)?)?;
    Ok((alpha2, reduced))
}

/// The block matrix `(0 alpha1; alpha2 0)`.
pub fn antidiagonal_blocks(alpha1: &Mat, alpha2: &Mat) -> Result<Mat> {
    if alpha1.ring() != alpha2.ring() {
        return Err(Error::RingMismatch);
    }
    let (n1, n2) = (alpha1.rows(), alpha2.rows());
    let n = n1 + n2;
    let mut out = Mat::zeros(*alpha1.ring(), n, n);
    for r in 0..n1 {
        for c in 0..n1 {
            out.set(r, n2 + c, alpha1.get(r, c));
        }
    }
    for r in 0..n2 {
        for c in 0..n2 {
            out.set(n1 + r, c, alpha2.get(r, c));
        }
    }
    Ok(out)
}
