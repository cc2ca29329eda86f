//! Brute-force ground truth for double cosets.
//!
//! `B\G/B` is computed as the set of left `B`-orbits on the flag space `G/B`.
//! Each coset `gB` is stored through a canonical representative obtained by
//! right-`B` column moves, and canonical forms are ranked into `0..|G/B|` so
//! the orbit computation is a union-find over a dense index.
//!
//! Canonical form of `gB`: columns left to right; column `c` first has the
//! pivot rows of the earlier columns cleared, then its first remaining unit
//! entry becomes the pivot and is scaled to 1. Rows above the pivot that are
//! not pivot rows of earlier columns then hold elements of the maximal ideal.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{permutation_invariant, PermMatrix};
use crate::matrix::Mat;
use crate::ring::{Elem, FastRing, RingSpec};

pub const MAX_N: usize = 6;
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorSet {
    /// Every nonzero amount at every elementary position and every unit on the diagonal.
    Full,
    /// Additive generators of `A` at each position and a generating set of `A^x`.
    Minimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Left `B`-orbits on canonical flags.
    FlagOrbits,
    /// Union-find over `B x B` moves on all of `GL_n(A)`; tiny cases only.
    RawUnionFind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub budget: u64,
    pub threads: usize,
    pub generators: GeneratorSet,
    pub method: Method,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            threads: 1,
            generators: GeneratorSet::Full,
            method: Method::FlagOrbits,
        }
    }
}

/// Left multiplication by an elementary matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowMove {
    /// `R_dst += a * R_src`.
    Add {
        dst: usize,
        src: usize,
        amount: Elem,
    },
    /// `R_row *= unit`.
    Scale { row: usize, unit: Elem },
}

impl RowMove {
    fn apply(&self, fast: &FastRing, n: usize, buf: &mut [Elem]) {
        match *self {
            RowMove::Add { dst, src, amount } => {
                for c in 0..n {
                    buf[dst * n + c] =
                        fast.add(buf[dst * n + c], fast.mul(amount, buf[src * n + c]));
                }
            }
            RowMove::Scale { row, unit } => {
                for c in 0..n {
                    buf[row * n + c] = fast.mul(unit, buf[row * n + c]);
                }
            }
        }
    }
}

fn amounts(ring: &RingSpec, set: GeneratorSet) -> (Vec<Elem>, Vec<Elem>) {
    match set {
        GeneratorSet::Full => (
            ring.elements().skip(1).collect(),
            ring.units().skip(1).collect(),
        ),
        GeneratorSet::Minimal => (ring.additive_generators(), ring.unit_generators()),
    }
}

/// Generators of the upper triangular group acting on the left.
pub fn borel_moves(ring: &RingSpec, n: usize, set: GeneratorSet) -> Vec<RowMove> {
    let (adds, units) = amounts(ring, set);
    let mut out = Vec::new();
    for dst in 0..n {
        for src in dst + 1..n {
            out.extend(adds.iter().map(|&amount| RowMove::Add { dst, src, amount }));
        }
    }
    for row in 0..n {
        out.extend(units.iter().map(|&unit| RowMove::Scale { row, unit }));
    }
    out
}

/// Generators of all of `GL_n(A)` acting on the left.
pub fn general_moves(ring: &RingSpec, n: usize) -> Vec<RowMove> {
    let (adds, units) = amounts(ring, GeneratorSet::Minimal);
    let mut out = Vec::new();
    for dst in 0..n {
        for src in 0..n {
            if src != dst {
                out.extend(adds.iter().map(|&amount| RowMove::Add { dst, src, amount }));
            }
        }
    }
    for row in 0..n {
        out.extend(units.iter().map(|&unit| RowMove::Scale { row, unit }));
    }
    out
}

/// Number of complete flags in `F_q^n`: `prod_{m=1}^{n} (q^m - 1)/(q - 1)`.
pub fn field_flag_count(q: u64, n: usize) -> u64 {
    (1..=n as u32).map(|m| (q.pow(m) - 1) / (q - 1)).product()
}

/// `|G/B| = N_1(q, n) * q^((k-1) n (n-1) / 2)`.
pub fn flag_count_formula(q: u64, n: usize, k: u32) -> u64 {
    field_flag_count(q, n) * q.pow((k - 1) * (n * (n.saturating_sub(1)) / 2) as u32)
}

/// The flag space `G/B` with a perfect ranking of canonical forms.
#[derive(Clone, Debug)]
pub struct FlagSpace {
    ring: RingSpec,
    n: usize,
    fast: FastRing,
    perms: Vec<Vec<usize>>,
    offsets: Vec<u64>,
    /// Per pivot pattern: free entries in ranking order as `(row, col, in_ideal)`.
    layouts: Vec<Vec<(usize, usize, bool)>>,
}

fn permutations_lex(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

fn lex_rank(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

impl FlagSpace {
    pub fn new(ring: RingSpec, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::InvalidParameters(format!(
                "n = {n} outside 1..={MAX_N}"
            )));
        }
        let perms = permutations_lex(n);
        let ideal = (ring.size() / ring.p()) as u64;
        let full = ring.size() as u64;
        let mut offsets = vec![0u64];
        let mut layouts = Vec::with_capacity(perms.len());
        for perm in &perms {
            let mut layout = Vec::new();
            let mut size = 1u64;
            for (c, &pivot) in perm.iter().enumerate() {
                for row in 0..n {
                    if perm[..=c].contains(&row) {
                        continue;
                    }
                    let in_ideal = row < pivot;
                    layout.push((row, c, in_ideal));
                    size = size.saturating_mul(if in_ideal { ideal } else { full });
                }
            }
            layouts.push(layout);
            offsets.push(offsets.last().unwrap().saturating_add(size));
        }
        Ok(Self {
            ring,
            n,
            fast: FastRing::new(ring),
            perms,
            offsets,
            layouts,
        })
    }

    pub fn ring(&self) -> &RingSpec {
        &self.ring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|G/B|`.
    pub fn len(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reduces a row-major `n x n` buffer to canonical form in place and
    /// returns the pivot rows, or `None` if the matrix is not invertible.
    pub fn canonicalize(&self, buf: &mut [Elem]) -> Option<[usize; MAX_N]> {
        let (n, f) = (self.n, &self.fast);
        let mut pivots = [usize::MAX; MAX_N];
        for c in 0..n {
            for prev in 0..c {
                let r = pivots[prev];
                let x = buf[r * n + c];
                if x.0 != 0 {
                    let s = f.neg(x);
                    for row in 0..n {
                        buf[row * n + c] = f.add(buf[row * n + c], f.mul(s, buf[row * n + prev]));
                    }
                }
            }
            let pivot =
                (0..n).find(|&row| !pivots[..c].contains(&row) && f.is_unit(buf[row * n + c]))?;
            let s = f.inv_unit(buf[pivot * n + c]);
            for row in 0..n {
                buf[row * n + c] = f.mul(s, buf[row * n + c]);
            }
            pivots[c] = pivot;
        }
        Some(pivots)
    }

    /// Rank of a buffer already in canonical form.
    pub fn rank(&self, buf: &[Elem], pivots: &[usize]) -> u64 {
        let p = self.ring.p();
        let block = lex_rank(&pivots[..self.n]);
        let mut idx = 0u64;
        for &(row, col, in_ideal) in &self.layouts[block] {
            let code = buf[row * self.n + col].0;
            idx = if in_ideal {
                idx * (self.ring.size() / p) as u64 + (code / p) as u64
            } else {
                idx * self.ring.size() as u64 + code as u64
            };
        }
        self.offsets[block] + idx
    }

    /// Writes the canonical matrix with the given rank into `buf`.
    pub fn unrank(&self, index: u64, buf: &mut [Elem]) {
        let block = self.offsets.partition_point(|&o| o <= index) - 1;
        let perm = &self.perms[block];
        let n = self.n;
        buf[..n * n].fill(Elem(0));
        for (c, &r) in perm.iter().enumerate() {
            buf[r * n + c] = Elem(1);
        }
        let p = self.ring.p();
        let mut rest = index - self.offsets[block];
        for &(row, col, in_ideal) in self.layouts[block].iter().rev() {
            let code = if in_ideal {
                let radix = (self.ring.size() / p) as u64;
                let d = rest % radix;
                rest /= radix;
                d as u32 * p
            } else {
                let radix = self.ring.size() as u64;
                let d = rest % radix;
                rest /= radix;
                d as u32
            };
            buf[row * n + col] = Elem(code);
        }
    }

    pub fn canonical_mat(&self, g: &Mat) -> Result<Mat> {
        let (buf, _) = self.canonical_buf(g)?;
        Mat::new(self.ring, self.n, self.n, buf)
    }

    pub fn index_of(&self, g: &Mat) -> Result<u64> {
        let (buf, pivots) = self.canonical_buf(g)?;
        Ok(self.rank(&buf, &pivots))
    }

    pub fn mat_at(&self, index: u64) -> Mat {
        let mut buf = vec![Elem(0); self.n * self.n];
        self.unrank(index, &mut buf);
        Mat::new(self.ring, self.n, self.n, buf).expect("valid canonical matrix")
    }

    fn canonical_buf(&self, g: &Mat) -> Result<(Vec<Elem>, [usize; MAX_N])> {
        if g.ring() != &self.ring {
            return Err(Error::RingMismatch);
        }
        if g.rows() != self.n || g.cols() != self.n {
            return Err(Error::Shape(format!("expected a {0}x{0} matrix", self.n)));
        }
        let mut buf = g.entries().to_vec();
        let pivots = self.canonicalize(&mut buf).ok_or(Error::NonInvertible)?;
        Ok((buf, pivots))
    }

    /// Flag indices reached from `index` by one move each.
    fn neighbours(&self, index: u64, moves: &[RowMove], out: &mut Vec<u64>) {
        let nn = self.n * self.n;
        let mut base = [Elem(0); MAX_N * MAX_N];
        self.unrank(index, &mut base[..nn]);
        let mut buf = [Elem(0); MAX_N * MAX_N];
        for mv in moves {
            buf[..nn].copy_from_slice(&base[..nn]);
            mv.apply(&self.fast, self.n, &mut buf[..nn]);
            let pivots = self
                .canonicalize(&mut buf[..nn])
                .expect("moves preserve invertibility");
            out.push(self.rank(&buf[..nn], &pivots));
        }
    }
}

/// Canonical representative of the coset `gB`.
pub fn canonical_flag(g: &Mat) -> Result<Mat> {
    FlagSpace::new(*g.ring(), g.rows())?.canonical_mat(g)
}

/// Number of distinct canonical flags reachable from the standard flag under
/// left multiplication by generators of `GL_n(A)`. Independent of the ranking.
pub fn flag_count_by_closure(ring: RingSpec, n: usize, budget: u64) -> Result<u64> {
    let space = FlagSpace::new(ring, n)?;
    let moves = general_moves(&ring, n);
    let nn = n * n;
    let start = Mat::identity(ring, n).entries().to_vec();
    let mut seen: HashSet<Vec<Elem>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut buf = vec![Elem(0); nn];
    while let Some(cur) = queue.pop_front() {
        for mv in &moves {
            buf.copy_from_slice(&cur);
            mv.apply(&space.fast, n, &mut buf);
            space.canonicalize(&mut buf).expect("invertible");
            if !seen.contains(&buf) {
                if seen.len() as u64 >= budget {
                    return Err(Error::BudgetExceeded {
                        needed: seen.len() as u64 + 1,
                        budget,
                    });
                }
                seen.insert(buf.clone());
                queue.push_back(buf.clone());
            }
        }
    }
    Ok(seen.len() as u64)
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Links the larger root under the smaller one, so every root is the
    /// minimum of its class.
    pub(crate) fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }

    /// Class label per element, labels assigned in order of smallest member.
    pub(crate) fn labels(&mut self) -> (Vec<u32>, u32) {
        let n = self.parent.len();
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        for x in 0..n {
            let r = self.find(x as u32) as usize;
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            label[x] = label[r];
        }
        (label, next)
    }
}

/// Every flag labelled by its double coset.
#[derive(Clone, Debug)]
pub struct DoubleCosetPartition {
    space: FlagSpace,
    coset_of_flag: Vec<u32>,
    num_cosets: u32,
}

const CHUNK: u64 = 1 << 15;

impl DoubleCosetPartition {
    pub fn compute(ring: RingSpec, n: usize, config: &OracleConfig) -> Result<Self> {
        let formula = flag_count_formula(ring.q() as u64, n, ring.k());
        if formula > config.budget {
            return Err(Error::BudgetExceeded {
                needed: formula,
                budget: config.budget,
            });
        }
        let space = FlagSpace::new(ring, n)?;
        debug_assert_eq!(space.len(), formula);
        let moves = borel_moves(&ring, n, config.generators);
        let total = space.len();
        let mut uf = UnionFind::new(total as usize);
        let edges_for = |lo: u64, hi: u64| -> Vec<u64> {
            let mut out = Vec::with_capacity(((hi - lo) as usize) * moves.len());
            for idx in lo..hi {
                space.neighbours(idx, &moves, &mut out);
            }
            out
        };
        let chunks: Vec<(u64, u64)> = (0..total)
            .step_by(CHUNK as usize)
            .map(|lo| (lo, (lo + CHUNK).min(total)))
            .collect();
        let mut absorb = |lo: u64, edges: Vec<u64>| {
            for (t, &dst) in edges.iter().enumerate() {
                uf.union((lo + (t / moves.len()) as u64) as u32, dst as u32);
            }
        };
        if config.threads <= 1 {
            for &(lo, hi) in &chunks {
                absorb(lo, edges_for(lo, hi));
            }
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::InvalidParameters(e.to_string()))?;
            for batch in chunks.chunks(config.threads * 2) {
                let results: Vec<Vec<u64>> = pool.install(|| {
                    batch
                        .par_iter()
                        .map(|&(lo, hi)| edges_for(lo, hi))
                        .collect()
                });
                for (&(lo, _), edges) in batch.iter().zip(results) {
                    absorb(lo, edges);
                }
            }
        }
        let (coset_of_flag, num_cosets) = uf.labels();
        Ok(Self {
            space,
            coset_of_flag,
            num_cosets,
        })
    }

    pub fn space(&self) -> &FlagSpace {
        &self.space
    }

    pub fn num_cosets(&self) -> u64 {
        self.num_cosets as u64
    }

    /// Index (in order of smallest canonical flag) of the double coset of `g`.
    pub fn coset_of(&self, g: &Mat) -> Result<u32> {
        Ok(self.coset_of_flag[self.space.index_of(g)? as usize])
    }

    pub fn equiv(&self, a: &Mat, b: &Mat) -> Result<bool> {
        Ok(self.coset_of(a)? == self.coset_of(b)?)
    }

    pub fn report(&self) -> Result<OrbitReport> {
        let mut first = vec![u64::MAX; self.num_cosets as usize];
        let mut sizes = vec![0u64; self.num_cosets as usize];
        for (idx, &c) in self.coset_of_flag.iter().enumerate() {
            if first[c as usize] == u64::MAX {
                first[c as usize] = idx as u64;
            }
            sizes[c as usize] += 1;
        }
        let representatives: Vec<Mat> = first.iter().map(|&i| self.space.mat_at(i)).collect();
        OrbitReport::new(
            *self.space.ring(),
            self.space.n(),
            representatives,
            sizes,
            self.space.len(),
        )
    }
}

/// Output of the orbit enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitReport {
    pub ring: RingSpec,
    pub n: usize,
    pub num_cosets: u64,
    pub flag_count: u64,
    pub representatives: Vec<Mat>,
    pub orbit_sizes: Vec<u64>,
    pub fiber_counts: BTreeMap<PermMatrix, u64>,
}

impl OrbitReport {
    fn new(
        ring: RingSpec,
        n: usize,
        representatives: Vec<Mat>,
        orbit_sizes: Vec<u64>,
        flag_count: u64,
    ) -> Result<Self> {
        let mut report = Self {
            ring,
            n,
            num_cosets: representatives.len() as u64,
            flag_count,
            representatives,
            orbit_sizes,
            fiber_counts: BTreeMap::new(),
        };
        report.fiber_counts = fiber_counts(&report)?;
        Ok(report)
    }

    pub fn fiber(&self, w: &PermMatrix) -> u64 {
        self.fiber_counts.get(w).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> OrbitReportJson {
        OrbitReportJson {
            ring: self.ring,
            n: self.n,
            num_cosets: self.num_cosets,
            flag_count: self.flag_count,
            fibers: self
                .fiber_counts
                .iter()
                .map(|(w, &count)| FiberCount {
                    w: w.clone(),
                    count,
                })
                .collect(),
            representatives: self.representatives.iter().map(Mat::to_string).collect(),
            orbit_sizes: self.orbit_sizes.clone(),
        }
    }

    /// CSV census rows `flavor,p,k,n,fiber,count,total`.
    pub fn census_rows(&self) -> Vec<String> {
        let flavor = match self.ring.flavor() {
            crate::ring::Flavor::Zpk => "zpk",
            crate::ring::Flavor::FqTk => "fqtk",
        };
        self.fiber_counts
            .iter()
            .map(|(w, count)| {
                let fiber: Vec<String> = w.one_line().iter().map(usize::to_string).collect();
                format!(
                    "{flavor},{},{},{},{},{count},{}",
                    self.ring.p(),
                    self.ring.k(),
                    self.n,
                    fiber.join(""),
                    self.num_cosets
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberCount {
    pub w: PermMatrix,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitReportJson {
    pub ring: RingSpec,
    pub n: usize,
    pub num_cosets: u64,
    pub flag_count: u64,
    pub fibers: Vec<FiberCount>,
    pub representatives: Vec<String>,
    pub orbit_sizes: Vec<u64>,
}

/// `N(w)`: double cosets grouped by their permutation invariant.
pub fn fiber_counts(report: &OrbitReport) -> Result<BTreeMap<PermMatrix, u64>> {
    let mut out = BTreeMap::new();
    for rep in &report.representatives {
        *out.entry(permutation_invariant(rep)?).or_insert(0) += 1;
    }
    Ok(out)
}

/// Violations of `N(w) >= N(w2)` over all splittings `w = (0 w1; w2 0)`,
/// given the fiber counts of the smaller groups by order.
pub fn decomposability_violations(
    report: &OrbitReport,
    smaller: &BTreeMap<usize, OrbitReport>,
) -> Vec<(PermMatrix, PermMatrix, u64, u64)> {
    let mut out = Vec::new();
    for (w, &count) in &report.fiber_counts {
        for (_, w2) in w.decompositions() {
            if let Some(sub) = smaller.get(&w2.n()) {
                let lower = sub.fiber(&w2);
                if count < lower {
                    out.push((w.clone(), w2, count, lower));
                }
            }
        }
    }
    out
}

pub fn double_cosets(ring: RingSpec, n: usize, config: &OracleConfig) -> Result<OrbitReport> {
    match config.method {
        Method::FlagOrbits => DoubleCosetPartition::compute(ring, n, config)?.report(),
        Method::RawUnionFind => raw_double_cosets(ring, n, config),
    }
}

/// Decides whether two invertible matrices lie in one double coset by a
/// breadth-first search of the left `B`-orbit of the first flag.
pub fn equiv_flags(a: &Mat, b: &Mat, config: &OracleConfig) -> Result<bool> {
    if a.ring() != b.ring() {
        return Err(Error::RingMismatch);
    }
    if a.rows() != b.rows() {
        return Err(Error::Shape("matrices of different order".into()));
    }
    let space = FlagSpace::new(*a.ring(), a.rows())?;
    let (start, target) = (space.index_of(a)?, space.index_of(b)?);
    if start == target {
        return Ok(true);
    }
    let moves = borel_moves(a.ring(), a.rows(), GeneratorSet::Minimal);
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut next = Vec::with_capacity(moves.len());
    while let Some(cur) = queue.pop_front() {
        next.clear();
        space.neighbours(cur, &moves, &mut next);
        for &x in &next {
            if x == target {
                return Ok(true);
            }
            if seen.insert(x) {
                if seen.len() as u64 > config.budget {
                    return Err(Error::BudgetExceeded {
                        needed: seen.len() as u64,
                        budget: config.budget,
                    });
                }
                queue.push_back(x);
            }
        }
    }
    Ok(false)
}

/// Oracle equivalence: flag orbits for invertible inputs, the direct
/// `B x B` search on `M2-bullet` for 2x2 inputs in that set.
pub fn equiv(a: &Mat, b: &Mat, config: &OracleConfig) -> Result<bool> {
    if a.ring() != b.ring() {
        return Err(Error::RingMismatch);
    }
    if a.rows() == 2
        && a.cols() == 2
        && b.rows() == 2
        && b.cols() == 2
        && in_m2_bullet(a)
        && in_m2_bullet(b)
    {
        return m2_equiv_bfs(a, b);
    }
    equiv_flags(a, b, config)
}

/// Double cosets by union-find on raw matrices with `B x B` elementary moves.
pub fn raw_double_cosets(ring: RingSpec, n: usize, config: &OracleConfig) -> Result<OrbitReport> {
    let size = ring.size() as u64;
    let total = size
        .checked_pow((n * n) as u32)
        .filter(|&t| t <= config.budget && t <= u32::MAX as u64)
        .ok_or(Error::BudgetExceeded {
            needed: u64::MAX,
            budget: config.budget,
        })?;
    let fast = FastRing::new(ring);
    let nn = n * n;
    let decode = |mut idx: u64, buf: &mut [Elem]| {
        for slot in buf.iter_mut() {
            *slot = Elem((idx % size) as u32);
            idx /= size;
        }
    };
    let encode = |buf: &[Elem]| {
        buf.iter()
            .rev()
            .fold(0u64, |acc, e| acc * size + e.0 as u64)
    };
    let (adds, units) = amounts(&ring, config.generators);
    let mut uf = UnionFind::new(total as usize);
    let mut buf = vec![Elem(0); nn];
    let mut work = vec![Elem(0); nn];
    let mut invertible = vec![false; total as usize];
    for idx in 0..total {
        decode(idx, &mut buf);
        let m = Mat::new(ring, n, n, buf.clone())?;
        if !m.is_invertible() {
            continue;
        }
        invertible[idx as usize] = true;
        let link = |w: &[Elem], uf: &mut UnionFind| uf.union(idx as u32, encode(w) as u32);
        for u in 0..n {
            for v in u + 1..n {
                for &a in &adds {
                    work.copy_from_slice(&buf);
                    RowMove::Add {
                        dst: u,
                        src: v,
                        amount: a,
                    }
                    .apply(&fast, n, &mut work);
                    link(&work, &mut uf);
                    work.copy_from_slice(&buf);
                    for r in 0..n {
                        work[r * n + v] = fast.add(work[r * n + v], fast.mul(a, work[r * n + u]));
                    }
                    link(&work, &mut uf);
                }
            }
            for &x in &units {
                work.copy_from_slice(&buf);
                RowMove::Scale { row: u, unit: x }.apply(&fast, n, &mut work);
                link(&work, &mut uf);
                work.copy_from_slice(&buf);
                for r in 0..n {
                    work[r * n + u] = fast.mul(x, work[r * n + u]);
                }
                link(&work, &mut uf);
            }
        }
    }
    let space = FlagSpace::new(ring, n)?;
    let mut best: BTreeMap<u32, u64> = BTreeMap::new();
    let mut sizes: BTreeMap<u32, u64> = BTreeMap::new();
    for idx in 0..total {
        if !invertible[idx as usize] {
            continue;
        }
        let root = uf.find(idx as u32);
        decode(idx, &mut buf);
        let flag = space.index_of(&Mat::new(ring, n, n, buf.clone())?)?;
        let e = best.entry(root).or_insert(u64::MAX);
        *e = (*e).min(flag);
        *sizes.entry(root).or_insert(0) += 1;
    }
    let mut classes: Vec<(u64, u64)> = best
        .iter()
        .map(|(root, &flag)| (flag, sizes[root]))
        .collect();
    classes.sort_unstable();
    let b_order = (ring.num_units() as u64).pow(n as u32) * size.pow((n * (n - 1) / 2) as u32);
    let representatives = classes
        .iter()
        .map(|&(flag, _)| space.mat_at(flag))
        .collect();
    let orbit_sizes = classes.iter().map(|&(_, s)| s / b_order).collect();
    OrbitReport::new(ring, n, representatives, orbit_sizes, space.len())
}

/// 2x2 matrices whose only unit entry is the top-right one.
pub fn in_m2_bullet(a: &Mat) -> bool {
    let ring = a.ring();
    a.rows() == 2
        && a.cols() == 2
        && ring.is_unit(a.get(0, 1))
        && !ring.is_unit(a.get(0, 0))
        && !ring.is_unit(a.get(1, 0))
        && !ring.is_unit(a.get(1, 1))
}

/// Orbits of `B x B` on `M2-bullet`, stored on the slice where the top-right
/// entry is 1 (every orbit meets it, by scaling the first row).
#[derive(Clone, Debug)]
pub struct M2Partition {
    ring: RingSpec,
    orbit: Vec<u32>,
    num_orbits: u32,
}

/// One `B x B` move on a normalized M2-bullet triple `(b11, b21, b22)`.
#[derive(Clone, Copy, Debug)]
enum M2Move {
    AddRows(Elem),
    AddCols(Elem),
    ScaleRow1(Elem),
    ScaleRow2(Elem),
    ScaleCol1(Elem),
    ScaleCol2(Elem),
}

fn m2_moves(ring: &RingSpec, set: GeneratorSet) -> Vec<M2Move> {
    let (adds, units) = amounts(ring, set);
    let mut out: Vec<M2Move> = Vec::new();
    out.extend(adds.iter().map(|&a| M2Move::AddRows(a)));
    out.extend(adds.iter().map(|&a| M2Move::AddCols(a)));
    for &u in &units {
        out.extend([
            M2Move::ScaleRow1(u),
            M2Move::ScaleRow2(u),
            M2Move::ScaleCol1(u),
            M2Move::ScaleCol2(u),
        ]);
    }
    out
}

fn m2_apply(f: &FastRing, mv: M2Move, [b11, b21, b22]: [Elem; 3]) -> [Elem; 3] {
    let b12 = Elem(1);
    let (n11, n12, n21, n22) = match mv {
        M2Move::AddRows(c) => (
            f.add(b11, f.mul(c, b21)),
            f.add(b12, f.mul(c, b22)),
            b21,
            b22,
        ),
        M2Move::AddCols(c) => (
            b11,
            f.add(b12, f.mul(c, b11)),
            b21,
            f.add(b22, f.mul(c, b21)),
        ),
        M2Move::ScaleRow1(u) => (f.mul(u, b11), f.mul(u, b12), b21, b22),
        M2Move::ScaleRow2(u) => (b11, b12, f.mul(u, b21), f.mul(u, b22)),
        M2Move::ScaleCol1(u) => (f.mul(u, b11), b12, f.mul(u, b21), b22),
        M2Move::ScaleCol2(u) => (b11, f.mul(u, b12), b21, f.mul(u, b22)),
    };
    let s = f.inv_unit(n12);
    [f.mul(s, n11), n21, n22]
}

fn m2_normalize(a: &Mat) -> Result<[Elem; 3]> {
    if !in_m2_bullet(a) {
        return Err(Error::NotInM2Bullet);
    }
    let ring = a.ring();
    let s = ring.inv(a.get(0, 1))?;
    Ok([ring.mul(s, a.get(0, 0)), a.get(1, 0), a.get(1, 1)])
}

impl M2Partition {
    pub fn compute(ring: RingSpec, set: GeneratorSet, budget: u64) -> Result<Self> {
        let ideal = (ring.size() / ring.p()) as u64;
        let total = ideal.pow(3);
        if total > budget {
            return Err(Error::BudgetExceeded {
                needed: total,
                budget,
            });
        }
        let fast = FastRing::new(ring);
        let moves = m2_moves(&ring, set);
        let mut uf = UnionFind::new(total as usize);
        for idx in 0..total {
            let t = Self::decode(&ring, idx);
            for &mv in &moves {
                let next = m2_apply(&fast, mv, t);
                uf.union(idx as u32, Self::encode(&ring, next) as u32);
            }
        }
        let (orbit, num_orbits) = uf.labels();
        Ok(Self {
            ring,
            orbit,
            num_orbits,
        })
    }

    fn encode(ring: &RingSpec, t: [Elem; 3]) -> u64 {
        let ideal = (ring.size() / ring.p()) as u64;
        let p = ring.p();
        t.iter()
            .rev()
            .fold(0, |acc, e| acc * ideal + (e.0 / p) as u64)
    }

    fn decode(ring: &RingSpec, mut idx: u64) -> [Elem; 3] {
        let ideal = (ring.size() / ring.p()) as u64;
        let mut out = [Elem(0); 3];
        for slot in out.iter_mut() {
            *slot = Elem((idx % ideal) as u32 * ring.p());
            idx /= ideal;
        }
        out
    }

    pub fn ring(&self) -> &RingSpec {
        &self.ring
    }

    pub fn num_orbits(&self) -> u64 {
        self.num_orbits as u64
    }

    pub fn orbit_of(&self, a: &Mat) -> Result<u32> {
        if a.ring() != &self.ring {
            return Err(Error::RingMismatch);
        }
        Ok(self.orbit[Self::encode(&self.ring, m2_normalize(a)?) as usize])
    }

    pub fn equiv(&self, a: &Mat, b: &Mat) -> Result<bool> {
        Ok(self.orbit_of(a)? == self.orbit_of(b)?)
    }

    /// One normalized representative per orbit, in orbit order.
    pub fn representatives(&self) -> Vec<Mat> {
        let mut out = vec![None; self.num_orbits as usize];
        for (idx, &o) in self.orbit.iter().enumerate() {
            if out[o as usize].is_none() {
                let [b11, b21, b22] = Self::decode(&self.ring, idx as u64);
                out[o as usize] =
                    Some(Mat::new(self.ring, 2, 2, vec![b11, Elem(1), b21, b22]).expect("2x2"));
            }
        }
        out.into_iter().map(Option::unwrap).collect()
    }
}

/// Direct search on the pair: explores the `B x B` orbit of `a` inside
/// `M2-bullet` until `b` is found.
pub fn m2_equiv_bfs(a: &Mat, b: &Mat) -> Result<bool> {
    if a.ring() != b.ring() {
        return Err(Error::RingMismatch);
    }
    let ring = *a.ring();
    let (start, target) = (m2_normalize(a)?, m2_normalize(b)?);
    let fast = FastRing::new(ring);
    let moves = m2_moves(&ring, GeneratorSet::Minimal);
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        if cur == target {
            return Ok(true);
        }
        for &mv in &moves {
            let next = m2_apply(&fast, mv, cur);
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_borel, random_gl};

    fn z(p: u32, k: u32) -> RingSpec {
        RingSpec::zpk(p, k).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let ring = z(2, 2);
        assert_eq!(
            canonical_flag(&Mat::identity(ring, 3)).unwrap(),
            Mat::identity(ring, 3)
        );
        for seed in 0..50 {
            assert_eq!(
                canonical_flag(&random_borel(ring, 3, seed)).unwrap(),
                Mat::identity(ring, 3)
            );
        }
        let singular = Mat::parse(ring, "2,0;0,1").unwrap();
        assert_eq!(canonical_flag(&singular), Err(Error::NonInvertible));
    }

    #[test]
    fn canonical_is_idempotent_and_right_invariant() {
        for ring in [z(2, 3), z(3, 2), RingSpec::fqtk(3, 2).unwrap()] {
            let space = FlagSpace::new(ring, 3).unwrap();
            for seed in 0..300 {
                let g = random_gl(ring, 3, seed);
                let c = space.canonical_mat(&g).unwrap();
                assert_eq!(space.canonical_mat(&c).unwrap(), c);
                let gb = g.mul(&random_borel(ring, 3, seed + 10_000)).unwrap();
                assert_eq!(space.canonical_mat(&gb).unwrap(), c);
            }
        }
    }

    #[test]
    fn ranking_is_a_bijection() {
        for (ring, n) in [
            (z(2, 2), 3),
            (z(3, 2), 2),
            (RingSpec::fqtk(2, 3).unwrap(), 3),
        ] {
            let space = FlagSpace::new(ring, n).unwrap();
            assert_eq!(
                space.len(),
                flag_count_formula(ring.q() as u64, n, ring.k())
            );
            for idx in 0..space.len() {
                let m = space.mat_at(idx);
                assert!(m.is_invertible());
                assert_eq!(space.index_of(&m).unwrap(), idx);
            }
        }
    }

    #[test]
    fn flag_count_examples() {
        assert_eq!(flag_count_formula(2, 2, 2), 6);
        assert_eq!(flag_count_formula(2, 3, 2), 168);
        assert_eq!(flag_count_formula(2, 3, 1), 21);
        assert_eq!(
            flag_count_by_closure(z(2, 2), 2, DEFAULT_BUDGET).unwrap(),
            6
        );
        assert_eq!(
            flag_count_by_closure(z(2, 2), 3, DEFAULT_BUDGET).unwrap(),
            168
        );
        assert_eq!(
            flag_count_by_closure(z(2, 1), 3, DEFAULT_BUDGET).unwrap(),
            21
        );
        assert!(matches!(
            flag_count_by_closure(z(2, 2), 3, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    // |GL_2(Z/4)| / |B_2(Z/4)| = 96 / 16 distinct canonical forms, over the whole group.
    #[test]
    fn distinct_canonicals_over_gl2_z4() {
        let ring = z(2, 2);
        let mut seen = HashSet::new();
        let mut group = 0;
        for code in 0..256u32 {
            let codes = [code % 4, (code / 4) % 4, (code / 16) % 4, code / 64];
            let g = Mat::from_codes(ring, 2, 2, &codes).unwrap();
            if g.is_invertible() {
                group += 1;
                seen.insert(canonical_flag(&g).unwrap());
            }
        }
        assert_eq!(group, 96);
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn double_coset_examples() {
        let cfg = OracleConfig::default();
        let r = double_cosets(z(2, 2), 2, &cfg).unwrap();
        assert_eq!(r.num_cosets, 3);
        assert_eq!(r.fiber(&PermMatrix::identity(2)), 2);
        assert_eq!(r.orbit_sizes.iter().sum::<u64>(), r.flag_count);
        assert_eq!(double_cosets(z(2, 1), 3, &cfg).unwrap().num_cosets, 6);
        let r3 = double_cosets(z(2, 2), 3, &cfg).unwrap();
        assert_eq!(r3.num_cosets, 18);
        assert_eq!(r3.fiber(&PermMatrix::longest(3)), 1);
        assert_eq!(r3.fiber(&PermMatrix::from_one_line(&[2, 1, 3]).unwrap()), 4);
        assert_eq!(r3.fiber_counts.values().sum::<u64>(), r3.num_cosets);
    }

    #[test]
    fn raw_union_find_agrees_with_flags() {
        let cfg = OracleConfig {
            method: Method::RawUnionFind,
            ..Default::default()
        };
        for (ring, n) in [(z(2, 2), 2), (z(3, 1), 3), (z(3, 2), 2), (z(2, 2), 3)] {
            let raw = double_cosets(ring, n, &cfg).unwrap();
            let flags = double_cosets(ring, n, &OracleConfig::default()).unwrap();
            assert_eq!(raw, flags, "{ring} n={n}");
        }
    }

    #[test]
    fn generator_sets_and_threads_agree() {
        let ring = z(2, 3);
        let base = double_cosets(ring, 3, &OracleConfig::default()).unwrap();
        let minimal = double_cosets(
            ring,
            3,
            &OracleConfig {
                generators: GeneratorSet::Minimal,
                ..Default::default()
            },
        )
        .unwrap();
        let threaded = double_cosets(
            ring,
            3,
            &OracleConfig {
                threads: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(base, minimal);
        assert_eq!(base, threaded);
        let j1 = serde_json::to_string(&base.to_json()).unwrap();
        let j2 = serde_json::to_string(&threaded.to_json()).unwrap();
        assert_eq!(j1, j2);
    }

    #[test]
    fn budget_guard() {
        let cfg = OracleConfig {
            budget: 100,
            ..Default::default()
        };
        assert!(matches!(
            double_cosets(z(2, 2), 3, &cfg),
            Err(Error::BudgetExceeded {
                needed: 168,
                budget: 100
            })
        ));
    }

    #[test]
    fn equiv_examples() {
        let cfg = OracleConfig::default();
        let ring = z(2, 2);
        let a = Mat::parse(ring, "1,0;2,1").unwrap();
        assert!(!equiv(&a, &Mat::identity(ring, 2), &cfg).unwrap());
        for seed in 0..20 {
            let g = random_gl(z(3, 2), 3, seed);
            let moved = random_borel(z(3, 2), 3, seed + 1)
                .mul(&g)
                .unwrap()
                .mul(&random_borel(z(3, 2), 3, seed + 2))
                .unwrap();
            assert!(equiv(&g, &moved, &cfg).unwrap());
        }
        assert_eq!(
            equiv(&a, &Mat::identity(z(2, 3), 2), &cfg),
            Err(Error::RingMismatch)
        );
    }

    #[test]
    fn m2_partition_and_bfs_agree() {
        let ring = z(2, 4);
        let part = M2Partition::compute(ring, GeneratorSet::Full, DEFAULT_BUDGET).unwrap();
        let minimal = M2Partition::compute(ring, GeneratorSet::Minimal, DEFAULT_BUDGET).unwrap();
        assert_eq!(part.orbit, minimal.orbit);
        let reps = part.representatives();
        for a in &reps {
            for b in &reps {
                assert_eq!(m2_equiv_bfs(a, b).unwrap(), a == b);
            }
        }
        let not_m2 = Mat::identity(ring, 2);
        assert_eq!(part.orbit_of(&not_m2), Err(Error::NotInM2Bullet));
    }
}
