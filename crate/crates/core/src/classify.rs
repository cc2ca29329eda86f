//! Complete classification of `B\GL_n(A)/B` for `n <= 3`.
//!
//! For `n = 3` the double cosets are grouped by their permutation invariant.
//! The five nontrivial fibres are read off intersection lengths. The trivial
//! fibre is determined by the lower-left `2x2` block, which lies in `M2-bullet`
//! (only the top-right entry is a unit) and is classified by the standard form
//! `(pi^i 1; pi^j a pi^l)`.
//!
//! Residues are stored as element codes of the quotient `A_m`: the least code
//! in the canonical element order, which is also a valid code of `A`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{intersection_length, permutation_invariant, PermMatrix};
use crate::matrix::Mat;
use crate::oracle::in_m2_bullet;
use crate::ring::{units_in_quotient, units_with_delta, Elem, RingSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct N2Label {
    pub r: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "stratum", rename_all = "lowercase")]
pub enum M2Label {
    /// Some valuation equals `k`.
    Discrete { i: u32, j: u32, l: u32 },
    /// `k > j > max(i, l)`, `i + l != j`; `a` is a unit code of `A_m`, `m = min(eps, k-j)`.
    Generic { i: u32, j: u32, l: u32, a: u32 },
    /// `k > j > max(i, l)`, `i + l = j`, `delta = v(a - 1)` in `A_{k-j}`;
    /// `a` is a unit code of `A_m`, `m = min(eps + delta, k-j)`.
    Special {
        i: u32,
        j: u32,
        l: u32,
        delta: u32,
        a: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "fiber", content = "payload")]
pub enum N3Label {
    #[serde(rename = "1")]
    Trivial(M2Label),
    #[serde(rename = "s1")]
    S1 { i: u32, j: u32 },
    #[serde(rename = "s2")]
    S2 { i: u32, j: u32 },
    #[serde(rename = "s1s2")]
    S1S2 { i: u32 },
    #[serde(rename = "s2s1")]
    S2S1 { i: u32 },
    #[serde(rename = "w0")]
    W0 {},
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CosetLabel {
    N2(N2Label),
    N3(N3Label),
}

/// Standard form data of a matrix in `M2-bullet`. `a` is present only when
/// no valuation equals `k`, and is then reduced modulo `pi^(k-j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StandardForm {
    pub i: u32,
    pub j: u32,
    pub l: u32,
    pub a: Option<Elem>,
}

fn eps(i: u32, j: u32, l: u32) -> u32 {
    (j - i).min(j - l).min(i).min(l)
}

/// `v(a - 1)` computed in `A_n`.
fn delta_in(ring: &RingSpec, a: Elem, n: u32) -> u32 {
    let x = ring.reduce(ring.sub(a, ring.one()), n);
    ring.valuation(x).min(n)
}

fn check_non_discrete(k: u32, i: u32, j: u32, l: u32) -> Result<()> {
    if i >= 1 && l >= 1 && j > i.max(l) && j < k {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!(
            "(i,j,l) = ({i},{j},{l}) needs k > j > max(i,l) >= 1 with k = {k}"
        )))
    }
}

pub fn classify_n2(alpha: &Mat) -> Result<N2Label> {
    if alpha.rows() != 2 || alpha.cols() != 2 {
        return Err(Error::Shape("expected a 2x2 matrix".into()));
    }
    if permutation_invariant(alpha)?.is_identity() {
        Ok(N2Label {
            r: intersection_length(alpha, 1, 1)?,
        })
    } else {
        Ok(N2Label { r: 0 })
    }
}

pub fn standard_form_m2(beta: &Mat) -> Result<StandardForm> {
    if !in_m2_bullet(beta) {
        return Err(Error::NotInM2Bullet);
    }
    let ring = beta.ring();
    let k = ring.k();
    let s = ring.inv(beta.get(0, 1))?;
    let (vi, u1) = ring.split_unit(ring.mul(s, beta.get(0, 0)));
    let (j, u2) = ring.split_unit(beta.get(1, 0));
    let (vl, u3) = ring.split_unit(beta.get(1, 1));
    // Entries of valuation at least j are cleared by the bottom-left entry.
    let i = if vi < j { vi } else { k };
    let l = if vl < j { vl } else { k };
    let a = if i < k && j < k && l < k {
        let a = ring.mul(u2, ring.inv(ring.mul(u1, u3))?);
        Some(ring.reduce(a, k - j))
    } else {
        None
    };
    Ok(StandardForm { i, j, l, a })
}

impl M2Label {
    pub fn from_standard_form(ring: &RingSpec, sf: &StandardForm) -> Self {
        let k = ring.k();
        let StandardForm { i, j, l, a } = *sf;
        let Some(a) = a else {
            return M2Label::Discrete { i, j, l };
        };
        let e = eps(i, j, l);
        if i + l != j {
            let m = e.min(k - j);
            M2Label::Generic {
                i,
                j,
                l,
                a: ring.reduce(a, m).code(),
            }
        } else {
            let delta = delta_in(ring, a, k - j);
            let m = (e + delta).min(k - j);
            M2Label::Special {
                i,
                j,
                l,
                delta,
                a: ring.reduce(a, m).code(),
            }
        }
    }

    pub fn of(beta: &Mat) -> Result<Self> {
        Ok(Self::from_standard_form(
            beta.ring(),
            &standard_form_m2(beta)?,
        ))
    }

    pub fn valuations(&self) -> (u32, u32, u32) {
        match *self {
            M2Label::Discrete { i, j, l }
            | M2Label::Generic { i, j, l, .. }
            | M2Label::Special { i, j, l, .. } => (i, j, l),
        }
    }

    /// `(pi^i 1; pi^j a pi^l)`, with `a = 1` for discrete labels.
    pub fn representative(&self, ring: RingSpec) -> Result<Mat> {
        let k = ring.k();
        let (i, j, l) = self.valuations();
        let a = match *self {
            M2Label::Discrete { .. } => {
                let ok = (1..=k).contains(&i)
                    && (1..=k).contains(&j)
                    && (1..=k).contains(&l)
                    && (j == k || ((i < j || i == k) && (l < j || l == k) && (i == k || l == k)));
                if !ok {
                    return Err(Error::InvalidParameters(format!(
                        "not a discrete stratum: {self}"
                    )));
                }
                ring.one()
            }
            M2Label::Generic { a, .. } | M2Label::Special { a, .. } => {
                check_non_discrete(k, i, j, l)?;
                let a = ring.elem(a)?;
                if !ring.is_unit(a)
                    || M2Label::from_standard_form(
                        &ring,
                        &StandardForm {
                            i,
                            j,
                            l,
                            a: Some(a),
                        },
                    ) != *self
                {
                    return Err(Error::InvalidParameters(format!(
                        "residue is not canonical for {self}"
                    )));
                }
                a
            }
        };
        Mat::new(
            ring,
            2,
            2,
            vec![
                ring.pi_pow(i),
                ring.one(),
                ring.mul(ring.pi_pow(j), a),
                ring.pi_pow(l),
            ],
        )
    }
}

/// Whether `alpha(a)` and `alpha(a')` lie in one `B x B` orbit, by the residue criterion.
pub fn bmb_equiv(ring: &RingSpec, i: u32, j: u32, l: u32, a: Elem, a2: Elem) -> Result<bool> {
    let k = ring.k();
    check_non_discrete(k, i, j, l)?;
    if !ring.is_unit(a) || !ring.is_unit(a2) {
        return Err(Error::NonUnit);
    }
    let e = eps(i, j, l);
    let same_mod = |m: u32| ring.reduce(a, m) == ring.reduce(a2, m);
    if i + l != j {
        return Ok(same_mod(e.min(k - j)));
    }
    let (d1, d2) = (delta_in(ring, a, k - j), delta_in(ring, a2, k - j));
    Ok(d1 == d2 && same_mod((e + d1).min(k - j)))
}

pub fn classify_n3(alpha: &Mat) -> Result<N3Label> {
    if alpha.rows() != 3 || alpha.cols() != 3 {
        return Err(Error::Shape("expected a 3x3 matrix".into()));
    }
    let w = permutation_invariant(alpha)?;
    let len = |i, j| intersection_length(alpha, i, j);
    Ok(match w.one_line().as_slice() {
        [1, 2, 3] => N3Label::Trivial(M2Label::of(&alpha.submatrix(1, 3, 0, 2)?)?),
        [2, 1, 3] => N3Label::S1 {
            i: len(2, 1)?,
            j: len(1, 2)?,
        },
        [1, 3, 2] => N3Label::S2 {
            i: len(1, 2)?,
            j: len(2, 1)?,
        },
        [2, 3, 1] => N3Label::S1S2 { i: len(2, 1)? },
        [3, 1, 2] => N3Label::S2S1 { i: len(1, 2)? },
        _ => N3Label::W0 {},
    })
}

pub fn classify(alpha: &Mat) -> Result<CosetLabel> {
    match alpha.rows() {
        2 => Ok(CosetLabel::N2(classify_n2(alpha)?)),
        3 => Ok(CosetLabel::N3(classify_n3(alpha)?)),
        n => Err(Error::InvalidParameters(format!(
            "no classification for n = {n}"
        ))),
    }
}

impl N3Label {
    pub fn fiber(&self) -> PermMatrix {
        let one_line: &[usize] = match self {
            N3Label::Trivial(_) => &[1, 2, 3],
            N3Label::S1 { .. } => &[2, 1, 3],
            N3Label::S2 { .. } => &[1, 3, 2],
            N3Label::S1S2 { .. } => &[2, 3, 1],
            N3Label::S2S1 { .. } => &[3, 1, 2],
            N3Label::W0 {} => &[3, 2, 1],
        };
        PermMatrix::from_one_line(one_line).expect("valid permutation")
    }

    pub fn representative(&self, ring: RingSpec) -> Result<Mat> {
        let k = ring.k();
        let check = |x: u32| {
            if (1..=k).contains(&x) {
                Ok(ring.pi_pow(x))
            } else {
                Err(Error::InvalidParameters(format!(
                    "valuation {x} outside 1..={k}"
                )))
            }
        };
        let (o, z) = (ring.one(), ring.zero());
        let entries = match *self {
            N3Label::Trivial(m2) => {
                let b = m2.representative(ring)?;
                vec![
                    o,
                    z,
                    z,
                    b.get(0, 0),
                    b.get(0, 1),
                    z,
                    b.get(1, 0),
                    b.get(1, 1),
                    o,
                ]
            }
            N3Label::S1 { i, j } => vec![z, o, z, o, z, z, check(i)?, check(j)?, o],
            N3Label::S2 { i, j } => vec![o, z, z, check(i)?, z, o, check(j)?, o, z],
            N3Label::S1S2 { i } => vec![z, z, o, o, z, z, check(i)?, o, z],
            N3Label::S2S1 { i } => vec![z, o, z, z, check(i)?, o, o, z, z],
            N3Label::W0 {} => vec![z, z, o, z, o, z, o, z, z],
        };
        Mat::new(ring, 3, 3, entries)
    }
}

pub fn rep_of_label(ring: RingSpec, label: &CosetLabel) -> Result<Mat> {
    match label {
        CosetLabel::N2(N2Label { r }) => {
            if *r > ring.k() {
                return Err(Error::InvalidParameters(format!(
                    "r = {r} exceeds k = {}",
                    ring.k()
                )));
            }
            Mat::new(
                ring,
                2,
                2,
                vec![ring.one(), ring.zero(), ring.pi_pow(*r), ring.one()],
            )
        }
        CosetLabel::N3(l) => l.representative(ring),
    }
}

/// Valuation triples `(i, j, l)` of the `M2-bullet` strata, `j` outermost.
pub fn m2_strata(k: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for j in 1..=k {
        let allowed: Vec<u32> = if j == k {
            (1..=k).collect()
        } else {
            (1..j).chain([k]).collect()
        };
        for &i in &allowed {
            for &l in &allowed {
                out.push((i, j, l));
            }
        }
    }
    out
}

fn is_discrete(k: u32, (i, j, l): (u32, u32, u32)) -> bool {
    i == k || j == k || l == k
}

/// Residue codes of `A_m` that are units with `v(a - 1) = delta`, in code order.
fn residues_with_delta(ring: &RingSpec, m: u32, delta: u32) -> Vec<u32> {
    let quotient = ring.quotient(m).expect("m <= k");
    quotient
        .units()
        .filter(|&a| delta_in(&quotient, a, m) == delta)
        .map(Elem::code)
        .collect()
}

pub fn enumerate_m2_labels(ring: &RingSpec) -> Vec<M2Label> {
    let k = ring.k();
    let mut out = Vec::new();
    for (i, j, l) in m2_strata(k) {
        if is_discrete(k, (i, j, l)) {
            out.push(M2Label::Discrete { i, j, l });
            continue;
        }
        let e = eps(i, j, l);
        if i + l != j {
            let quotient = ring.quotient(e.min(k - j)).expect("m <= k");
            out.extend(quotient.units().map(|a| M2Label::Generic {
                i,
                j,
                l,
                a: a.code(),
            }));
        } else {
            for delta in 0..=k - j {
                let m = (e + delta).min(k - j);
                out.extend(
                    residues_with_delta(ring, m, delta)
                        .into_iter()
                        .map(|a| M2Label::Special { i, j, l, delta, a }),
                );
            }
        }
    }
    out
}

/// One label per double coset of `GL_3(A)`.
pub fn enumerate_labels_n3(ring: &RingSpec) -> Vec<N3Label> {
    let k = ring.k();
    let mut out: Vec<N3Label> = enumerate_m2_labels(ring)
        .into_iter()
        .map(N3Label::Trivial)
        .collect();
    for i in 1..=k {
        out.extend((1..=k).map(|j| N3Label::S1 { i, j }));
    }
    for i in 1..=k {
        out.extend((1..=k).map(|j| N3Label::S2 { i, j }));
    }
    out.extend((1..=k).map(|i| N3Label::S1S2 { i }));
    out.extend((1..=k).map(|i| N3Label::S2S1 { i }));
    out.push(N3Label::W0 {});
    out
}

/// Number of labels in the stratum `(i, j, l)`, as a function of `q`.
pub fn stratum_count(q: u64, k: u32, (i, j, l): (u32, u32, u32)) -> u64 {
    if is_discrete(k, (i, j, l)) {
        return 1;
    }
    let e = eps(i, j, l);
    if i + l != j {
        units_in_quotient(q, e.min(k - j))
    } else {
        (0..=k - j)
            .map(|d| units_with_delta(q, (e + d).min(k - j), d))
            .sum()
    }
}

/// `|B\M2-bullet/B|` over `A_k` with residue field of order `q`.
pub fn count_m2(q: u64, k: u32) -> u64 {
    m2_strata(k)
        .into_iter()
        .map(|s| stratum_count(q, k, s))
        .sum()
}

/// `|B\GL_3(A_k)/B|` in closed form.
pub fn count_n3(q: u64, k: u32) -> u64 {
    let k64 = k as u64;
    count_m2(q, k) + 2 * k64 * k64 + 2 * k64 + 1
}

/// Closed-form count for `n <= 3`.
pub fn count_closed_form(q: u64, k: u32, n: usize) -> Option<u64> {
    match n {
        1 => Some(1),
        2 => Some(k as u64 + 1),
        3 => Some(count_n3(q, k)),
        _ => None,
    }
}

/// A stratum `(i, j, l)` together with `delta` for the special strata.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub i: u32,
    pub j: u32,
    pub l: u32,
    pub delta: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub exponent: u32,
    pub witness: Witness,
}

/// Largest degree in `q` of a single stratum count, with the first stratum
/// (in `m2_strata` order, then by `delta`) attaining it.
pub fn max_q_exponent(k: u32) -> Result<ExponentReport> {
    if k < 2 {
        return Err(Error::InvalidParameters(
            "max_q_exponent needs k >= 2".into(),
        ));
    }
    let mut best: Option<ExponentReport> = None;
    for (i, j, l) in m2_strata(k) {
        let candidates: Vec<(u32, Option<u32>)> = if is_discrete(k, (i, j, l)) {
            vec![(0, None)]
        } else {
            let e = eps(i, j, l);
            if i + l != j {
                vec![(e.min(k - j), None)]
            } else {
                // Degree of |A_m^{x,delta}|: m for delta = 0, m - delta below m, 0 at delta = m.
                (0..=k - j)
                    .map(|d| {
                        let m = (e + d).min(k - j);
                        (if d == m { 0 } else { m - d }, Some(d))
                    })
                    .collect()
            }
        };
        for (exponent, delta) in candidates {
            if best.is_none_or(|b| exponent > b.exponent) {
                best = Some(ExponentReport {
                    exponent,
                    witness: Witness { i, j, l, delta },
                });
            }
        }
    }
    Ok(best.expect("k >= 2 has strata"))
}

impl fmt::Display for N2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={}", self.r)
    }
}

impl fmt::Display for M2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            M2Label::Discrete { i, j, l } => write!(f, "discrete(i={i},j={j},l={l})"),
            M2Label::Generic { i, j, l, a } => write!(f, "generic(i={i},j={j},l={l},a={a})"),
            M2Label::Special { i, j, l, delta, a } => {
                write!(f, "special(i={i},j={j},l={l},delta={delta},a={a})")
            }
        }
    }
}

impl fmt::Display for N3Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            N3Label::Trivial(m) => write!(f, "1:{m}"),
            N3Label::S1 { i, j } => write!(f, "s1(i={i},j={j})"),
            N3Label::S2 { i, j } => write!(f, "s2(i={i},j={j})"),
            N3Label::S1S2 { i } => write!(f, "s1s2(i={i})"),
            N3Label::S2S1 { i } => write!(f, "s2s1(i={i})"),
            N3Label::W0 {} => write!(f, "w0"),
        }
    }
}

impl fmt::Display for CosetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CosetLabel::N2(l) => l.fmt(f),
            CosetLabel::N3(l) => l.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, HashSet};

    use super::*;
    use crate::matrix::{random_borel, random_gl};
    use crate::oracle::{
        DoubleCosetPartition, GeneratorSet, M2Partition, OracleConfig, DEFAULT_BUDGET,
    };

    fn z(p: u32, k: u32) -> RingSpec {
        RingSpec::zpk(p, k).unwrap()
    }

    #[test]
    fn n2_examples() {
        let ring = z(2, 3);
        assert_eq!(
            classify_n2(&Mat::identity(ring, 2)).unwrap(),
            N2Label { r: 3 }
        );
        assert_eq!(
            classify_n2(&Mat::parse(ring, "0,1;1,0").unwrap()).unwrap(),
            N2Label { r: 0 }
        );
        assert_eq!(
            classify_n2(&Mat::parse(ring, "1,0;2,1").unwrap()).unwrap(),
            N2Label { r: 1 }
        );
    }

    #[test]
    fn n2_labels_match_oracle_on_all_of_gl2_z4() {
        let ring = z(2, 2);
        let part = DoubleCosetPartition::compute(ring, 2, &OracleConfig::default()).unwrap();
        let mut by_label: HashMap<N2Label, u32> = HashMap::new();
        for code in 0..256u32 {
            let codes = [code % 4, (code / 4) % 4, (code / 16) % 4, code / 64];
            let g = Mat::from_codes(ring, 2, 2, &codes).unwrap();
            if !g.is_invertible() {
                continue;
            }
            let coset = part.coset_of(&g).unwrap();
            assert_eq!(
                *by_label.entry(classify_n2(&g).unwrap()).or_insert(coset),
                coset
            );
        }
        assert_eq!(by_label.len() as u64, part.num_cosets());
        let distinct: HashSet<u32> = by_label.values().copied().collect();
        assert_eq!(distinct.len(), by_label.len());
    }

    #[test]
    fn n2_labels_match_oracle_over_f3t2() {
        let ring = RingSpec::fqtk(3, 2).unwrap();
        let part = DoubleCosetPartition::compute(ring, 2, &OracleConfig::default()).unwrap();
        let space = part.space();
        let mut seen: HashMap<N2Label, u32> = HashMap::new();
        for idx in 0..space.len() {
            let g = space.mat_at(idx);
            let g = random_borel(ring, 2, idx)
                .mul(&g)
                .unwrap()
                .mul(&random_borel(ring, 2, idx + 7))
                .unwrap();
            let coset = part.coset_of(&g).unwrap();
            assert_eq!(
                *seen.entry(classify_n2(&g).unwrap()).or_insert(coset),
                coset
            );
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn standard_form_examples() {
        let sf = standard_form_m2(&Mat::parse(z(2, 3), "2,1;0,2").unwrap()).unwrap();
        assert_eq!(
            sf,
            StandardForm {
                i: 1,
                j: 3,
                l: 1,
                a: None
            }
        );
        let ring = z(2, 4);
        let sf = standard_form_m2(&Mat::parse(ring, "2,1;8,4").unwrap()).unwrap();
        assert_eq!(
            sf,
            StandardForm {
                i: 1,
                j: 3,
                l: 2,
                a: Some(ring.one())
            }
        );
        let sf = standard_form_m2(&Mat::parse(ring, "2,1;12,2").unwrap()).unwrap();
        assert_eq!((sf.i, sf.j, sf.l), (1, 2, 1));
        assert_eq!(sf.a.unwrap().code(), 3);
        assert_eq!(
            standard_form_m2(&Mat::identity(ring, 2)),
            Err(Error::NotInM2Bullet)
        );
    }

    #[test]
    fn bmb_examples() {
        let r32 = z(2, 5);
        assert!(bmb_equiv(&r32, 1, 4, 2, r32.one(), r32.from_int(3)).unwrap());
        let r16 = z(2, 4);
        assert!(!bmb_equiv(&r16, 1, 2, 1, r16.one(), r16.from_int(3)).unwrap());
        assert!(bmb_equiv(&r16, 1, 2, 1, r16.from_int(5), r16.from_int(5)).unwrap());
        assert!(bmb_equiv(&r16, 2, 2, 1, r16.one(), r16.one()).is_err());
    }

    fn m2_labels_match_partition(ring: RingSpec) {
        let part = M2Partition::compute(ring, GeneratorSet::Minimal, DEFAULT_BUDGET).unwrap();
        let p = ring.p();
        let ideal = ring.size() / p;
        let mut label_of_orbit: HashMap<u32, M2Label> = HashMap::new();
        let mut orbit_of_label: HashMap<M2Label, u32> = HashMap::new();
        for idx in 0..ideal.pow(3) {
            let codes = [
                idx % ideal * p,
                1,
                (idx / ideal) % ideal * p,
                idx / ideal / ideal * p,
            ];
            let beta = Mat::from_codes(ring, 2, 2, &codes).unwrap();
            let (label, orbit) = (M2Label::of(&beta).unwrap(), part.orbit_of(&beta).unwrap());
            assert_eq!(
                *label_of_orbit.entry(orbit).or_insert(label),
                label,
                "{ring} {beta}"
            );
            assert_eq!(
                *orbit_of_label.entry(label).or_insert(orbit),
                orbit,
                "{ring} {beta}"
            );
        }
        let labels = enumerate_m2_labels(&ring);
        assert_eq!(labels.len() as u64, part.num_orbits());
        assert_eq!(labels.len() as u64, count_m2(ring.q() as u64, ring.k()));
        for label in labels {
            assert_eq!(
                M2Label::of(&label.representative(ring).unwrap()).unwrap(),
                label
            );
        }
    }

    #[test]
    fn m2_labels_are_complete_invariants() {
        for ring in [
            z(2, 2),
            z(2, 3),
            z(2, 4),
            z(3, 3),
            RingSpec::fqtk(2, 4).unwrap(),
            RingSpec::fqtk(3, 3).unwrap(),
        ] {
            m2_labels_match_partition(ring);
        }
    }

    #[test]
    fn n3_examples() {
        let ring = z(2, 3);
        assert_eq!(
            classify_n3(&Mat::identity(ring, 3)).unwrap(),
            N3Label::Trivial(M2Label::Discrete { i: 3, j: 3, l: 3 })
        );
        assert_eq!(
            classify_n3(&PermMatrix::longest(3).to_mat(ring)).unwrap(),
            N3Label::W0 {}
        );
        let s1 = Mat::parse(ring, "0,1,0;1,0,0;2,4,1").unwrap();
        assert_eq!(classify_n3(&s1).unwrap(), N3Label::S1 { i: 1, j: 2 });
    }

    #[test]
    fn n3_fibers_of_representatives() {
        let ring = z(3, 2);
        for label in enumerate_labels_n3(&ring) {
            let rep = label.representative(ring).unwrap();
            assert_eq!(permutation_invariant(&rep).unwrap(), label.fiber());
        }
    }

    fn n3_labels_match_oracle(ring: RingSpec) {
        let part = DoubleCosetPartition::compute(ring, 3, &OracleConfig::default()).unwrap();
        let labels = enumerate_labels_n3(&ring);
        assert_eq!(labels.len() as u64, count_n3(ring.q() as u64, ring.k()));
        assert_eq!(labels.len() as u64, part.num_cosets(), "{ring}");
        let mut cosets = HashSet::new();
        for label in &labels {
            let rep = label.representative(ring).unwrap();
            assert_eq!(classify_n3(&rep).unwrap(), *label);
            cosets.insert(part.coset_of(&rep).unwrap());
        }
        assert_eq!(cosets.len(), labels.len());
        let space = part.space();
        let mut seen: HashMap<N3Label, u32> = HashMap::new();
        for idx in 0..space.len() {
            let g = space.mat_at(idx);
            let coset = part.coset_of(&g).unwrap();
            assert_eq!(
                *seen.entry(classify_n3(&g).unwrap()).or_insert(coset),
                coset
            );
        }
    }

    #[test]
    fn n3_labels_match_oracle_small() {
        for ring in [
            z(2, 1),
            z(3, 1),
            z(2, 2),
            RingSpec::fqtk(2, 2).unwrap(),
            z(3, 2),
            z(2, 3),
        ] {
            n3_labels_match_oracle(ring);
        }
    }

    #[test]
    fn classification_is_invariant_under_borel_moves() {
        for ring in [z(2, 3), z(3, 2), RingSpec::fqtk(3, 2).unwrap()] {
            for seed in 0..200 {
                let g = random_gl(ring, 3, seed);
                let moved = random_borel(ring, 3, seed + 1)
                    .mul(&g)
                    .unwrap()
                    .mul(&random_borel(ring, 3, seed + 2))
                    .unwrap();
                assert_eq!(classify_n3(&g).unwrap(), classify_n3(&moved).unwrap());
            }
        }
    }

    #[test]
    fn counts() {
        for q in [2, 3, 5] {
            assert_eq!(count_n3(q, 1), 6);
            assert_eq!(count_n3(q, 2), 18);
        }
        assert_eq!(count_n3(2, 3), 39);
        assert_eq!(count_n3(3, 3), 40);
        for (q, k) in [(2, 4), (3, 3), (5, 2)] {
            let ring = z(q, k);
            assert_eq!(
                enumerate_labels_n3(&ring).len() as u64,
                count_n3(q as u64, k)
            );
        }
    }

    #[test]
    fn exponent_scan() {
        assert_eq!(max_q_exponent(2).unwrap().exponent, 0);
        let three = max_q_exponent(3).unwrap();
        assert_eq!(three.exponent, 1);
        assert_eq!(
            three.witness,
            Witness {
                i: 1,
                j: 2,
                l: 1,
                delta: Some(0)
            }
        );
        assert_eq!(max_q_exponent(6).unwrap().exponent, 2);
        for k in 3..=12 {
            assert_eq!(max_q_exponent(k).unwrap().exponent, k / 3);
        }
        assert!(max_q_exponent(1).is_err());
    }

    #[test]
    fn label_json_shape() {
        let label = N3Label::Trivial(M2Label::Special {
            i: 1,
            j: 2,
            l: 1,
            delta: 0,
            a: 2,
        });
        let json = serde_json::to_value(label).unwrap();
        assert_eq!(json["fiber"], "1");
        assert_eq!(json["payload"]["stratum"], "special");
        assert_eq!(json["payload"]["delta"], 0);
        assert_eq!(serde_json::to_value(N3Label::W0 {}).unwrap()["fiber"], "w0");
        let s1 = serde_json::to_value(N3Label::S1 { i: 1, j: 2 }).unwrap();
        assert_eq!(s1["payload"]["j"], 2);
        for l in enumerate_labels_n3(&z(3, 3)) {
            let back: N3Label = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
            assert_eq!(back, l);
        }
    }

    #[test]
    fn invalid_labels_rejected() {
        let ring = z(2, 3);
        assert!(N3Label::S1 { i: 0, j: 1 }.representative(ring).is_err());
        assert!(N3Label::Trivial(M2Label::Discrete { i: 1, j: 2, l: 1 })
            .representative(ring)
            .is_err());
        assert!(N3Label::Trivial(M2Label::Generic {
            i: 1,
            j: 2,
            l: 1,
            a: 1
        })
        .representative(ring)
        .is_err());
        assert!(rep_of_label(ring, &CosetLabel::N2(N2Label { r: 4 })).is_err());
    }
}
