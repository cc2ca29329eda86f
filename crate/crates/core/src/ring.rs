//! Finite chain rings `Z/p^k` and `F_p[t]/t^k`.
//!
//! Elements of both flavors are encoded by a single integer code in
//! `[0, p^k)`. For `Z/p^k` the code is the least nonnegative residue; for
//! `F_p[t]/t^k` it is the coefficient vector read as base-`p` digits, so the
//! coefficient of `t^s` is digit `s`. With this encoding the uniformiser
//! `pi^r` has code `p^r` in both flavors, units are exactly the codes not
//! divisible by `p`, and reduction to the quotient `A_m = A / pi^m` is
//! `code mod p^m`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ring size `p^k`.
pub const MAX_RING_SIZE: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flavor {
    /// Integers modulo `p^k`, uniformiser `p`.
    Zpk,
    /// Truncated polynomials `F_p[t]/t^k`, uniformiser `t`.
    FqTk,
}

/// A finite chain ring of length `k` with residue field of prime order `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingSpec {
    flavor: Flavor,
    p: u32,
    k: u32,
    size: u32,
}

/// Canonical element code; only meaningful together with its [`RingSpec`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem(pub(crate) u32);

impl Elem {
    pub fn code(self) -> u32 {
        self.0
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl RingSpec {
    pub fn new(flavor: Flavor, p: u32, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k < 1 {
            return Err(Error::InvalidLength(k));
        }
        let size = (p as u64).checked_pow(k).filter(|&s| s <= MAX_RING_SIZE);
        let Some(size) = size else {
            return Err(Error::RingTooLarge { p, k });
        };
        Ok(Self {
            flavor,
            p,
            k,
            size: size as u32,
        })
    }

    pub fn zpk(p: u32, k: u32) -> Result<Self> {
        Self::new(Flavor::Zpk, p, k)
    }

    pub fn fqtk(p: u32, k: u32) -> Result<Self> {
        Self::new(Flavor::FqTk, p, k)
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Residue characteristic, which is also the residue field order `q`.
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of elements, `p^k`.
    pub fn size(&self) -> u32 {
        self.size
    }

    /// Number of units, `p^(k-1) (p-1)`.
    pub fn num_units(&self) -> u32 {
        self.size / self.p * (self.p - 1)
    }

    /// The quotient `A_m`, same flavor and residue field, length `m`.
    pub fn quotient(&self, m: u32) -> Result<Self> {
        if m > self.k {
            return Err(Error::InvalidParameters(format!(
                "quotient length {m} exceeds k = {}",
                self.k
            )));
        }
        Self::new(self.flavor, self.p, m)
    }

    pub fn residue_field(&self) -> Self {
        Self {
            flavor: self.flavor,
            p: self.p,
            k: 1,
            size: self.p,
        }
    }

    pub fn zero(&self) -> Elem {
        Elem(0)
    }

    pub fn one(&self) -> Elem {
        Elem(1)
    }

    pub fn pi(&self) -> Elem {
        self.pi_pow(1)
    }

    /// `pi^r`, which is zero for `r >= k`.
    pub fn pi_pow(&self, r: u32) -> Elem {
        if r >= self.k {
            Elem(0)
        } else {
            Elem(self.p.pow(r))
        }
    }

    pub fn elem(&self, code: u32) -> Result<Elem> {
        if code < self.size {
            Ok(Elem(code))
        } else {
            Err(Error::InvalidParameters(format!(
                "code {code} out of range for {self}"
            )))
        }
    }

    /// Image of an integer under `Z -> A`.
    pub fn from_int(&self, n: i64) -> Elem {
        match self.flavor {
            Flavor::Zpk => Elem(n.rem_euclid(self.size as i64) as u32),
            Flavor::FqTk => Elem(n.rem_euclid(self.p as i64) as u32),
        }
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        match self.flavor {
            Flavor::Zpk => Elem(((a.0 as u64 + b.0 as u64) % self.size as u64) as u32),
            Flavor::FqTk => self.digitwise(a, b, |x, y| x + y),
        }
    }

    pub fn neg(&self, a: Elem) -> Elem {
        match self.flavor {
            Flavor::Zpk => Elem((self.size - a.0) % self.size),
            Flavor::FqTk => self.digitwise(a, Elem(0), |x, _| self.p - x),
        }
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match self.flavor {
            Flavor::Zpk => Elem(((a.0 as u64 * b.0 as u64) % self.size as u64) as u32),
            Flavor::FqTk => self.poly_mul(a, b),
        }
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn is_unit(&self, a: Elem) -> bool {
        !a.0.is_multiple_of(self.p)
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit);
        }
        // The unit group has order p^(k-1)(p-1).
        Ok(self.pow(a, self.num_units() as u64 - 1))
    }

    /// Largest `r` with `a` in `pi^r A`; `v(0) = k`.
    pub fn valuation(&self, a: Elem) -> u32 {
        if a.0 == 0 {
            return self.k;
        }
        let mut x = a.0;
        let mut r = 0;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            r += 1;
        }
        r
    }

    /// Writes `a = pi^v * u` with `u` a unit. For `a = 0` returns `(k, 1)`.
    pub fn split_unit(&self, a: Elem) -> (u32, Elem) {
        let v = self.valuation(a);
        if v == self.k {
            (v, self.one())
        } else {
            (v, Elem(a.0 / self.p.pow(v)))
        }
    }

    /// Canonical representative of the image of `a` in `A_m`, read back as an element of `A`.
    pub fn reduce(&self, a: Elem, m: u32) -> Elem {
        if m >= self.k {
            a
        } else {
            Elem(a.0 % self.p.pow(m))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.size).map(Elem)
    }

    pub fn units(&self) -> impl Iterator<Item = Elem> {
        let p = self.p;
        (0..self.size).filter(move |c| c % p != 0).map(Elem)
    }

    /// Elements of the maximal ideal, in canonical order.
    pub fn ideal_elements(&self) -> impl Iterator<Item = Elem> {
        let p = self.p;
        (0..self.size / p).map(move |c| Elem(c * p))
    }

    /// `|A_m^x|` for `m <= k`.
    pub fn unit_count(&self, m: u32) -> Result<u64> {
        if m > self.k {
            return Err(Error::InvalidParameters(format!(
                "m = {m} exceeds k = {}",
                self.k
            )));
        }
        Ok(units_in_quotient(self.p as u64, m))
    }

    /// `|{a in A_m^x : v(a - 1) = delta}|` for `delta <= m <= k`.
    pub fn units_with_delta_count(&self, m: u32, delta: u32) -> Result<u64> {
        if m > self.k || delta > m {
            return Err(Error::InvalidParameters(format!(
                "need delta <= m <= k, got delta = {delta}, m = {m}, k = {}",
                self.k
            )));
        }
        Ok(units_with_delta(self.p as u64, m, delta))
    }

    /// Additive generators: `1` for `Z/p^k`, the monomials `t^s` for `F_p[t]/t^k`.
    pub fn additive_generators(&self) -> Vec<Elem> {
        match self.flavor {
            Flavor::Zpk => vec![self.one()],
            Flavor::FqTk => (0..self.k).map(|s| self.pi_pow(s)).collect(),
        }
    }

    /// A small generating set of the unit group, chosen greedily in canonical order.
    pub fn unit_generators(&self) -> Vec<Elem> {
        let total = self.num_units() as usize;
        let mut seen = vec![false; self.size as usize];
        let mut members = vec![self.one()];
        seen[1 % self.size as usize] = true;
        let mut gens = Vec::new();
        for u in self.units() {
            if members.len() == total {
                break;
            }
            if seen[u.0 as usize] {
                continue;
            }
            gens.push(u);
            // close the subgroup under multiplication by every generator
            let mut i = 0;
            while i < members.len() {
                for &g in &gens {
                    let x = self.mul(members[i], g);
                    if !seen[x.0 as usize] {
                        seen[x.0 as usize] = true;
                        members.push(x);
                    }
                }
                i += 1;
            }
        }
        gens
    }

    pub fn parse_elem(&self, s: &str) -> Result<Elem> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty element".into()));
        }
        match self.flavor {
            Flavor::Zpk => {
                let n: i64 = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer `{s}`")))?;
                Ok(self.from_int(n))
            }
            Flavor::FqTk => self.parse_poly(&s),
        }
    }

    pub fn format_elem(&self, a: Elem) -> String {
        match self.flavor {
            Flavor::Zpk => a.0.to_string(),
            Flavor::FqTk => {
                let mut terms = Vec::new();
                let mut x = a.0;
                for s in 0..self.k {
                    let d = x % self.p;
                    x /= self.p;
                    if d == 0 {
                        continue;
                    }
                    let coeff = if d == 1 && s > 0 {
                        String::new()
                    } else {
                        d.to_string()
                    };
                    terms.push(match s {
                        0 => coeff,
                        1 => format!("{coeff}t"),
                        _ => format!("{coeff}t^{s}"),
                    });
                }
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join("+")
                }
            }
        }
    }

    fn digitwise(&self, a: Elem, b: Elem, f: impl Fn(u32, u32) -> u32) -> Elem {
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.k {
            let d = f(x % self.p, y % self.p) % self.p;
            out += d * place;
            x /= self.p;
            y /= self.p;
            place = place.wrapping_mul(self.p);
        }
        Elem(out)
    }

    fn digits(&self, a: Elem) -> [u32; 32] {
        let mut d = [0u32; 32];
        let mut x = a.0;
        for slot in d.iter_mut().take(self.k as usize) {
            *slot = x % self.p;
            x /= self.p;
        }
        d
    }

    fn poly_mul(&self, a: Elem, b: Elem) -> Elem {
        let k = self.k as usize;
        let (da, db) = (self.digits(a), self.digits(b));
        let mut acc = [0u64; 32];
        for i in 0..k {
            if da[i] == 0 {
                continue;
            }
            for j in 0..k - i {
                acc[i + j] += da[i] as u64 * db[j] as u64;
            }
        }
        let mut out = 0u32;
        for s in (0..k).rev() {
            out = out * self.p + (acc[s] % self.p as u64) as u32;
        }
        Elem(out)
    }

    fn parse_poly(&self, s: &str) -> Result<Elem> {
        let bad = || Error::Parse(format!("bad polynomial `{s}`"));
        let mut acc = self.zero();
        let mut rest = s;
        let mut sign = 1i64;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        loop {
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            if term.is_empty() {
                return Err(bad());
            }
            let (coeff, degree) = match term.find('t') {
                None => (term.parse::<i64>().map_err(|_| bad())?, 0u32),
                Some(pos) => {
                    let c = term[..pos].trim_end_matches('*');
                    let c = if c.is_empty() {
                        1
                    } else {
                        c.parse::<i64>().map_err(|_| bad())?
                    };
                    let e = &term[pos + 1..];
                    let e = if e.is_empty() {
                        1
                    } else {
                        e.strip_prefix('^')
                            .ok_or_else(bad)?
                            .parse::<u32>()
                            .map_err(|_| bad())?
                    };
                    (c, e)
                }
            };
            let t = self.mul(self.from_int(sign * coeff), self.pi_pow(degree));
            acc = self.add(acc, t);
            if end == rest.len() {
                break;
            }
            sign = if rest.as_bytes()[end] == b'-' { -1 } else { 1 };
            rest = &rest[end + 1..];
        }
        Ok(acc)
    }
}

/// `|A_m^x| = q^(m-1) (q-1)` for `m >= 1`, and `1` for the zero ring `A_0`.
pub fn units_in_quotient(q: u64, m: u32) -> u64 {
    if m == 0 {
        1
    } else {
        q.pow(m - 1) * (q - 1)
    }
}

/// `|A_m^{x,delta}|`, the units `a` of `A_m` with `v(a - 1) = delta`
/// (valuation taken in `A_m`, so `delta = m` means `a = 1`).
pub fn units_with_delta(q: u64, m: u32, delta: u32) -> u64 {
    debug_assert!(delta <= m);
    if delta == m {
        1
    } else if delta == 0 {
        (q - 2) * q.pow(m - 1)
    } else {
        (q - 1) * q.pow(m - delta - 1)
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.flavor {
            Flavor::Zpk => write!(f, "zpk:p={},k={}", self.p, self.k),
            Flavor::FqTk => write!(f, "fqtk:q={},k={}", self.p, self.k),
        }
    }
}

impl FromStr for RingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "bad ring `{s}`, expected e.g. zpk:p=2,k=3 or fqtk:q=3,k=2"
            ))
        };
        let (kind, params) = s.trim().split_once(':').ok_or_else(bad)?;
        let flavor = match kind {
            "zpk" => Flavor::Zpk,
            "fqtk" => Flavor::FqTk,
            _ => return Err(bad()),
        };
        let (mut p, mut k) = (None, None);
        for kv in params.split(',') {
            let (key, val) = kv.split_once('=').ok_or_else(bad)?;
            let val: u32 = val.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "p" | "q" => p = Some(val),
                "k" => k = Some(val),
                _ => return Err(bad()),
            }
        }
        RingSpec::new(flavor, p.ok_or_else(bad)?, k.ok_or_else(bad)?)
    }
}

impl Serialize for RingSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RingSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Precomputed addition and multiplication tables for small rings, used in
/// the orbit enumeration hot loops. Falls back to direct arithmetic when the
/// ring is too large to tabulate.
#[derive(Clone, Debug)]
pub struct FastRing {
    ring: RingSpec,
    add: Vec<u16>,
    mul: Vec<u16>,
    neg: Vec<u16>,
    inv: Vec<u16>,
}

const TABLE_LIMIT: u32 = 1024;

impl FastRing {
    pub fn new(ring: RingSpec) -> Self {
        let n = ring.size();
        if n > TABLE_LIMIT {
            return Self {
                ring,
                add: Vec::new(),
                mul: Vec::new(),
                neg: Vec::new(),
                inv: Vec::new(),
            };
        }
        let mut add = Vec::with_capacity((n * n) as usize);
        let mut mul = Vec::with_capacity((n * n) as usize);
        for a in ring.elements() {
            for b in ring.elements() {
                add.push(ring.add(a, b).0 as u16);
                mul.push(ring.mul(a, b).0 as u16);
            }
        }
        let neg = ring.elements().map(|a| ring.neg(a).0 as u16).collect();
        let inv = ring
            .elements()
            .map(|a| ring.inv(a).map_or(0, |x| x.0 as u16))
            .collect();
        Self {
            ring,
            add,
            mul,
            neg,
            inv,
        }
    }

    pub fn ring(&self) -> &RingSpec {
        &self.ring
    }

    #[inline]
    fn tabulated(&self) -> bool {
        !self.add.is_empty()
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.tabulated() {
            Elem(self.add[(a.0 * self.ring.size + b.0) as usize] as u32)
        } else {
            self.ring.add(a, b)
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if self.tabulated() {
            Elem(self.mul[(a.0 * self.ring.size + b.0) as usize] as u32)
        } else {
            self.ring.mul(a, b)
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if self.tabulated() {
            Elem(self.neg[a.0 as usize] as u32)
        } else {
            self.ring.neg(a)
        }
    }

    /// Inverse of a unit; the caller guarantees `a` is a unit.
    #[inline]
    pub fn inv_unit(&self, a: Elem) -> Elem {
        if self.tabulated() {
            Elem(self.inv[a.0 as usize] as u32)
        } else {
            self.ring.inv(a).expect("inv_unit called on a non-unit")
        }
    }

    #[inline]
    pub fn is_unit(&self, a: Elem) -> bool {
        self.ring.is_unit(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(p: u32, k: u32) -> RingSpec {
        RingSpec::zpk(p, k).unwrap()
    }

    fn f(p: u32, k: u32) -> RingSpec {
        RingSpec::fqtk(p, k).unwrap()
    }

    #[test]
    fn make_ring_examples() {
        let r = z(2, 2);
        assert_eq!(r.size(), 4);
        assert_eq!(r.pi(), Elem(2));
        assert_eq!(f(3, 2).size(), 9);
        assert_eq!(RingSpec::zpk(4, 2), Err(Error::NotPrime(4)));
        assert_eq!(RingSpec::zpk(2, 0), Err(Error::InvalidLength(0)));
        assert!(matches!(
            RingSpec::zpk(2, 40),
            Err(Error::RingTooLarge { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let r = z(2, 2);
        assert_eq!(r.inv(Elem(3)), Ok(Elem(3)));
        assert_eq!(r.inv(Elem(2)), Err(Error::NonUnit));
        let s = f(2, 2);
        let one_plus_t = s.parse_elem("1+t").unwrap();
        assert_eq!(s.inv(one_plus_t), Ok(one_plus_t));
    }

    #[test]
    fn valuation_examples() {
        let r = z(2, 3);
        assert_eq!(r.valuation(Elem(4)), 2);
        assert_eq!(r.valuation(Elem(0)), 3);
        assert_eq!(r.valuation(Elem(3)), 0);
        let s = f(3, 3);
        assert_eq!(s.valuation(s.parse_elem("2t^2").unwrap()), 2);
    }

    #[test]
    fn enumeration_counts() {
        for (r, n, u) in [
            (z(2, 2), 4, 2),
            (f(2, 2), 4, 2),
            (z(2, 3), 8, 4),
            (f(3, 2), 9, 6),
        ] {
            assert_eq!(r.elements().count(), n);
            assert_eq!(r.units().count(), u);
        }
    }

    #[test]
    fn unit_count_examples() {
        assert_eq!(z(3, 1).unit_count(1), Ok(2));
        assert_eq!(z(2, 2).unit_count(2), Ok(2));
        assert_eq!(z(3, 1).units_with_delta_count(1, 0), Ok(1));
        assert_eq!(z(3, 3).unit_count(0), Ok(1));
        assert!(z(3, 3).units_with_delta_count(1, 2).is_err());
    }

    // Closed-form unit counts against direct enumeration in every quotient.
    #[test]
    fn unit_counts_match_enumeration() {
        for p in [2, 3, 5] {
            for k in 1..=4 {
                for ring in [z(p, k), f(p, k)] {
                    for m in 1..=k {
                        let sub = ring.quotient(m).unwrap();
                        let units: Vec<Elem> = sub.units().collect();
                        assert_eq!(ring.unit_count(m).unwrap(), units.len() as u64);
                        let mut total = 0;
                        for delta in 0..=m {
                            let direct = units
                                .iter()
                                .filter(|&&a| sub.valuation(sub.sub(a, sub.one())) == delta)
                                .count() as u64;
                            assert_eq!(
                                ring.units_with_delta_count(m, delta).unwrap(),
                                direct,
                                "{ring} m={m} d={delta}"
                            );
                            total += direct;
                        }
                        assert_eq!(total, units.len() as u64);
                    }
                }
            }
        }
    }

    #[test]
    fn flavors_share_counts_and_valuation_histograms() {
        for (p, k) in [(2, 3), (3, 2), (5, 2), (2, 5)] {
            let (a, b) = (z(p, k), f(p, k));
            let hist = |r: RingSpec| {
                let mut h = vec![0; k as usize + 1];
                r.elements().for_each(|x| h[r.valuation(x) as usize] += 1);
                h
            };
            assert_eq!(hist(a), hist(b));
            assert_eq!(a.units().count(), b.units().count());
        }
    }

    #[test]
    fn ring_axioms_exhaustive_small() {
        for ring in [z(2, 3), f(2, 3), z(3, 2), f(3, 2)] {
            let els: Vec<Elem> = ring.elements().collect();
            for &a in &els {
                assert_eq!(ring.add(a, ring.neg(a)), ring.zero());
                if ring.is_unit(a) {
                    assert_eq!(ring.mul(a, ring.inv(a).unwrap()), ring.one());
                }
                for &b in &els {
                    assert_eq!(ring.mul(a, b), ring.mul(b, a));
                    let v = (ring.valuation(a) + ring.valuation(b)).min(ring.k());
                    assert_eq!(ring.valuation(ring.mul(a, b)), v);
                    for &c in &els {
                        assert_eq!(
                            ring.mul(a, ring.add(b, c)),
                            ring.add(ring.mul(a, b), ring.mul(a, c))
                        );
                        assert_eq!(ring.mul(a, ring.mul(b, c)), ring.mul(ring.mul(a, b), c));
                    }
                }
            }
        }
    }

    #[test]
    fn split_unit_recovers_element() {
        for ring in [z(3, 3), f(3, 3), z(2, 4)] {
            for a in ring.elements() {
                let (v, u) = ring.split_unit(a);
                assert!(ring.is_unit(u));
                assert_eq!(ring.mul(ring.pi_pow(v), u), a);
            }
        }
    }

    #[test]
    fn reduction_is_a_homomorphism() {
        for ring in [z(2, 4), f(2, 4), z(3, 3), f(3, 3)] {
            let sub = ring.quotient(2).unwrap();
            for a in ring.elements() {
                for b in ring.elements() {
                    let lhs = ring.reduce(ring.mul(a, b), 2);
                    let rhs = sub.mul(ring.reduce(a, 2), ring.reduce(b, 2));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let s = f(3, 3);
        for a in s.elements() {
            assert_eq!(s.parse_elem(&s.format_elem(a)).unwrap(), a);
        }
        assert_eq!(s.parse_elem("1+2t").unwrap(), Elem(1 + 2 * 3));
        assert_eq!(s.parse_elem("-t").unwrap(), Elem(2 * 3));
        assert_eq!(z(2, 3).parse_elem("-1").unwrap(), Elem(7));
        assert!(s.parse_elem("1+").is_err());
        for spec in ["zpk:p=2,k=3", "fqtk:q=3,k=2"] {
            assert_eq!(spec.parse::<RingSpec>().unwrap().to_string(), spec);
        }
        assert!("zpk:p=4,k=2".parse::<RingSpec>().is_err());
        assert!("zp:p=2,k=2".parse::<RingSpec>().is_err());
    }

    #[test]
    fn unit_generators_generate() {
        for ring in [z(2, 5), z(3, 5), f(2, 3), f(3, 3), z(5, 2)] {
            let gens = ring.unit_generators();
            let mut seen = std::collections::BTreeSet::from([ring.one()]);
            let mut frontier = vec![ring.one()];
            while let Some(x) = frontier.pop() {
                for &g in &gens {
                    let y = ring.mul(x, g);
                    if seen.insert(y) {
                        frontier.push(y);
                    }
                }
            }
            assert_eq!(seen.len() as u32, ring.num_units(), "{ring}");
        }
    }

    #[test]
    fn fast_ring_matches_direct() {
        let ring = f(3, 2);
        let fast = FastRing::new(ring);
        for a in ring.elements() {
            assert_eq!(fast.neg(a), ring.neg(a));
            for b in ring.elements() {
                assert_eq!(fast.add(a, b), ring.add(a, b));
                assert_eq!(fast.mul(a, b), ring.mul(a, b));
            }
        }
    }
}
