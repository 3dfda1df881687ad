//! GF(p^m) in the polynomial basis, with elements named by their base-p index.

use std::fmt;

use crate::error::{Error, Result};

/// Element of a [`FieldCtx`]. The wrapped value is the canonical index: the
/// coefficient of `y^i` is the i-th base-p digit, `y^0` least significant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Requested field: characteristic, degree, and an optional modulus given as
/// monic coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
    pub modulus: Option<Vec<u32>>,
}

impl FieldSpec {
    pub fn new(p: u32, m: u32) -> Self {
        FieldSpec {
            p,
            m,
            modulus: None,
        }
    }

    pub fn with_modulus(p: u32, m: u32, modulus: Vec<u32>) -> Self {
        FieldSpec {
            p,
            m,
            modulus: Some(modulus),
        }
    }
}

/// Above this many elements the dense add/mul tables are not built and
/// arithmetic goes through digit addition and log/antilog tables.
const DENSE_TABLE_LIMIT: u32 = 729;

/// Arithmetic context for GF(p^m). Immutable once built.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    m: u32,
    order: u32,
    modulus: Vec<u32>,
    primitive: Elem,
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    add_tab: Option<Vec<u32>>,
    mul_tab: Option<Vec<u32>>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("modulus", &self.modulus)
            .field("primitive", &self.primitive)
            .finish()
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

pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Dense polynomials over GF(p), coefficient vectors lowest degree first.
mod poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn inv_mod(a: u32, p: u32) -> u32 {
        let mut r = 1u64;
        let (mut b, mut e) = (a as u64 % p as u64, p as u64 - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p as u64;
            }
            b = b * b % p as u64;
            e >>= 1;
        }
        r as u32
    }

    /// Remainder of `a` modulo a nonzero `b`.
    pub fn rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        let lead_inv = inv_mod(b[db], p) as u64;
        while r.len() > db {
            let dr = r.len() - 1;
            let c = r[dr] as u64 * lead_inv % p as u64;
            let shift = dr - db;
            for (i, &bi) in b.iter().enumerate() {
                let sub = c * bi as u64 % p as u64;
                r[shift + i] = ((r[shift + i] as u64 + p as u64 - sub) % p as u64) as u32;
            }
            trim(&mut r);
        }
        r
    }

    pub fn mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
        rem(&prod, modulus, p)
    }

    pub fn to_string(c: &[u32]) -> String {
        let mut terms = Vec::new();
        for (i, &ci) in c.iter().enumerate().rev() {
            if ci == 0 {
                continue;
            }
            let coef = if ci == 1 && i > 0 {
                String::new()
            } else {
                ci.to_string()
            };
            terms.push(match i {
                0 => coef,
                1 => format!("{coef}y"),
                _ => format!("{coef}y^{i}"),
            });
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }
}

fn digits_of(mut idx: u32, p: u32, m: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(m as usize);
    for _ in 0..m {
        d.push(idx % p);
        idx /= p;
    }
    poly::trim(&mut d);
    d
}

fn index_of(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Finds a monic factor of degree 1..=deg/2, if any. Exhaustive trial division.
fn find_factor(modulus: &[u32], p: u32) -> Option<Vec<u32>> {
    let deg = modulus.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for k in 0..count {
            let mut cand: Vec<u32> = Vec::with_capacity(d + 1);
            let mut kk = k;
            for _ in 0..d {
                cand.push((kk % p as u64) as u32);
                kk /= p as u64;
            }
            cand.push(1);
            if poly::rem(modulus, &cand, p).is_empty() {
                return Some(cand);
            }
        }
    }
    None
}

fn slow_pow(base: &[u32], mut e: u64, modulus: &[u32], p: u32) -> Vec<u32> {
    let mut result = vec![1u32];
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = poly::mul_mod(&result, &b, modulus, p);
        }
        b = poly::mul_mod(&b, &b, modulus, p);
        e >>= 1;
    }
    result
}

fn is_primitive_slow(elem: &[u32], modulus: &[u32], p: u32, order: u64) -> bool {
    if elem.is_empty() {
        return false;
    }
    let n = order - 1;
    prime_factors(n)
        .into_iter()
        .all(|r| slow_pow(elem, n / r, modulus, p) != [1])
}

/// Element `y` of GF(p)[y]/(modulus), as digits.
fn root_digits(modulus: &[u32], p: u32) -> Vec<u32> {
    if modulus.len() == 2 {
        // y = -c0 in the prime field
        let mut d = vec![(p - modulus[0] % p) % p];
        poly::trim(&mut d);
        d
    } else {
        vec![0, 1]
    }
}

/// Lexicographically smallest monic irreducible of degree m (comparing c0
/// first, then c1, ...), preferring one whose root is primitive.
fn default_modulus(p: u32, m: u32) -> Vec<u32> {
    let count = (p as u64).pow(m);
    let order = count;
    let mut first_irreducible = None;
    for k in 0..count {
        // c0 is the most significant digit of k
        let mut coeffs = vec![0u32; m as usize + 1];
        let mut kk = k;
        for i in (0..m as usize).rev() {
            coeffs[i] = (kk % p as u64) as u32;
            kk /= p as u64;
        }
        coeffs[m as usize] = 1;
        if m > 1 && coeffs[0] == 0 {
            continue;
        }
        if find_factor(&coeffs, p).is_some() {
            continue;
        }
        if first_irreducible.is_none() {
            first_irreducible = Some(coeffs.clone());
        }
        if is_primitive_slow(&root_digits(&coeffs, p), &coeffs, p, order) {
            return coeffs;
        }
    }
    first_irreducible.expect("irreducible polynomials exist in every degree")
}

impl FieldCtx {
    pub fn new(spec: &FieldSpec) -> Result<Self> {
        let FieldSpec { p, m, .. } = *spec;
        if p == 2 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("extension degree must be at least 1".into()));
        }
        let order64 = (p as u64)
            .checked_pow(m)
            .filter(|&o| o <= 1 << 24)
            .ok_or_else(|| Error::Unsupported(format!("GF({p}^{m}) is too large")))?;
        let order = order64 as u32;

        let modulus = match &spec.modulus {
            Some(c) => {
                if c.len() != m as usize + 1 || c[m as usize] != 1 || c.iter().any(|&x| x >= p) {
                    return Err(Error::InvalidArgument(format!(
                        "modulus {c:?} is not a monic degree-{m} polynomial over GF({p})"
                    )));
                }
                if let Some(f) = find_factor(c, p) {
                    return Err(Error::ReducibleModulus {
                        p,
                        modulus: poly::to_string(c),
                        factor: poly::to_string(&f),
                    });
                }
                c.clone()
            }
            None => default_modulus(p, m),
        };

        // smallest-index element of full multiplicative order
        let primitive = (1..order)
            .find(|&i| is_primitive_slow(&digits_of(i, p, m), &modulus, p, order64))
            .map(Elem)
            .expect("multiplicative group of a finite field is cyclic");

        let n = (order - 1) as usize;
        let mut exp = vec![0u32; 2 * n];
        let mut log = vec![u32::MAX; order as usize];
        let w = digits_of(primitive.0, p, m);
        let mut cur = vec![1u32];
        for k in 0..n {
            let idx = index_of(&cur, p);
            exp[k] = idx;
            exp[k + n] = idx;
            log[idx as usize] = k as u32;
            cur = poly::mul_mod(&cur, &w, &modulus, p);
        }

        let neg: Vec<u32> = (0..order)
            .map(|i| {
                let d: Vec<u32> = digits_of(i, p, m).iter().map(|&c| (p - c) % p).collect();
                index_of(&d, p)
            })
            .collect();
        let inv: Vec<u32> = (0..order)
            .map(|i| if i == 0 { 0 } else { exp[(n - log[i as usize] as usize) % n] })
            .collect();

        let mut ctx = FieldCtx {
            p,
            m,
            order,
            modulus,
            primitive,
            exp,
            log,
            neg,
            inv,
            add_tab: None,
            mul_tab: None,
        };
        if order <= DENSE_TABLE_LIMIT {
            let o = order as usize;
            let mut add_tab = vec![0u32; o * o];
            let mut mul_tab = vec![0u32; o * o];
            for a in 0..order {
                for b in 0..order {
                    add_tab[a as usize * o + b as usize] = ctx.add_digits(a, b);
                    mul_tab[a as usize * o + b as usize] = ctx.mul_log(a, b);
                }
            }
            ctx.add_tab = Some(add_tab);
            ctx.mul_tab = Some(mul_tab);
        }
        Ok(ctx)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of elements, p^m.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Modulus as a comma-separated coefficient list, lowest degree first.
    pub fn modulus_string(&self) -> String {
        self.modulus
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn modulus_poly_string(&self) -> String {
        poly::to_string(&self.modulus)
    }

    /// The fixed primitive element ω.
    pub fn primitive(&self) -> Elem {
        self.primitive
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + use<> {
        (0..self.order).map(Elem)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Elem> + use<> {
        (1..self.order).map(Elem)
    }

    pub fn coeffs(&self, a: Elem) -> Vec<u32> {
        let mut d = digits_of(a.0, self.p, self.m);
        d.resize(self.m as usize, 0);
        d
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Elem {
        Elem(index_of(c, self.p))
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, k: i64) -> Elem {
        Elem(k.rem_euclid(self.p as i64) as u32)
    }

    pub fn in_prime_field(&self, a: Elem) -> bool {
        a.0 < self.p
    }

    fn add_digits(&self, mut a: u32, mut b: u32) -> u32 {
        let p = self.p;
        let (mut out, mut place) = (0u32, 1u32);
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * place;
            place *= p;
            a /= p;
            b /= p;
        }
        out
    }

    fn mul_log(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        match &self.add_tab {
            Some(t) => Elem(t[a.index() * self.order as usize + b.index()]),
            None => Elem(self.add_digits(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.neg[a.index()])
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &self.mul_tab {
            Some(t) => Elem(t[a.index() * self.order as usize + b.index()]),
            None => Elem(self.mul_log(a.0, b.0)),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Option<Elem> {
        (!a.is_zero()).then(|| Elem(self.inv[a.index()]))
    }

    /// `a / b`. Panics when `b` is zero.
    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b).expect("division by zero"))
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.is_zero() {
            return Elem::ZERO;
        }
        let n = (self.order - 1) as u64;
        let k = (self.log[a.index()] as u64 * (e % n)) % n;
        Elem(self.exp[k as usize])
    }

    /// Discrete logarithm to base ω.
    pub fn log(&self, a: Elem) -> Option<u32> {
        (!a.is_zero()).then(|| self.log[a.index()])
    }

    /// ω^k.
    pub fn exp(&self, k: u64) -> Elem {
        Elem(self.exp[(k % (self.order as u64 - 1)) as usize])
    }

    pub fn sum<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        it.into_iter().fold(Elem::ZERO, |acc, x| self.add(acc, x))
    }

    pub fn multiplicative_order(&self, a: Elem) -> Option<u64> {
        let l = self.log(a)? as u64;
        let n = self.order as u64 - 1;
        Some(n / gcd(l, n))
    }

    /// Tr from GF(p^m) down to GF(p^sub_degree).
    pub fn trace(&self, x: Elem, sub_degree: u32) -> Result<Elem> {
        if sub_degree == 0 || !self.m.is_multiple_of(sub_degree) {
            return Err(Error::InvalidArgument(format!(
                "subfield degree {sub_degree} does not divide {}",
                self.m
            )));
        }
        let step = (self.p as u64).pow(sub_degree);
        let mut acc = Elem::ZERO;
        let mut y = x;
        for _ in 0..self.m / sub_degree {
            acc = self.add(acc, y);
            y = self.pow(y, step);
        }
        Ok(acc)
    }

    /// Absolute trace Tr_{q/p}, lifted to an integer in [0, p).
    pub fn abs_trace(&self, x: Elem) -> u32 {
        let t = self.trace(x, 1).expect("1 divides every degree");
        debug_assert!(self.in_prime_field(t));
        t.0
    }

    /// Quadratic character: 0 at zero, +1 on nonzero squares, -1 otherwise.
    pub fn quadratic_character(&self, x: Elem) -> i8 {
        if x.is_zero() {
            return 0;
        }
        let h = self.pow(x, (self.order as u64 - 1) / 2);
        if h == Elem::ONE {
            1
        } else {
            debug_assert_eq!(h, self.neg(Elem::ONE));
            -1
        }
    }

    pub fn is_square(&self, x: Elem) -> bool {
        self.quadratic_character(x) >= 0
    }

    /// Some square root of `x`, if it has one.
    pub fn sqrt(&self, x: Elem) -> Option<Elem> {
        if x.is_zero() {
            return Some(Elem::ZERO);
        }
        let l = self.log(x)?;
        (l % 2 == 0).then(|| self.exp(l as u64 / 2))
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32, m: u32) -> FieldCtx {
        FieldCtx::new(&FieldSpec::new(p, m)).unwrap()
    }

    #[test]
    fn prime_field_indices() {
        let f = gf(3, 1);
        assert_eq!(f.order(), 3);
        assert_eq!(f.elements().map(|e| e.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(f.add(Elem(2), Elem(2)), Elem(1));
        assert_eq!(f.mul(Elem(2), Elem(2)), Elem(1));
    }

    #[test]
    fn user_modulus_irreducible_and_reducible() {
        let f = FieldCtx::new(&FieldSpec::with_modulus(3, 2, vec![1, 0, 1])).unwrap();
        assert_eq!(f.order(), 9);
        // y^2 = -1
        let y = Elem(3);
        assert_eq!(f.mul(y, y), f.neg(Elem::ONE));
        match FieldCtx::new(&FieldSpec::with_modulus(3, 2, vec![2, 0, 1])) {
            Err(Error::ReducibleModulus { .. }) => {}
            other => panic!("expected reducible modulus error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_even_and_composite() {
        assert!(matches!(FieldCtx::new(&FieldSpec::new(2, 3)), Err(Error::NotOddPrime(2))));
        assert!(matches!(FieldCtx::new(&FieldSpec::new(9, 1)), Err(Error::NotOddPrime(9))));
    }

    #[test]
    fn default_modulus_gf9() {
        // y^2+1 is irreducible but y has order 4; y^2+y+2 is the first primitive one
        assert_eq!(gf(3, 2).modulus(), &[2, 1, 1]);
    }

    #[test]
    fn trace_examples() {
        let f9 = gf(3, 2);
        assert_eq!(f9.trace(Elem::ZERO, 1).unwrap(), Elem::ZERO);
        assert_eq!(f9.trace(Elem::ONE, 1).unwrap(), Elem(2));
        let f3 = gf(3, 1);
        for c in f3.elements() {
            assert_eq!(f3.trace(c, 1).unwrap(), c);
        }
        assert!(gf(3, 3).trace(Elem::ONE, 2).is_err());
    }

    #[test]
    fn quadratic_character_examples() {
        let f3 = gf(3, 1);
        assert_eq!(f3.quadratic_character(Elem(1)), 1);
        assert_eq!(f3.quadratic_character(Elem(2)), -1);
        assert_eq!(f3.quadratic_character(Elem(0)), 0);
        for (p, m) in [(3, 2), (5, 2), (7, 1), (3, 3)] {
            let f = gf(p, m);
            assert_eq!(f.quadratic_character(f.primitive()), -1);
        }
    }

    #[test]
    fn dense_and_log_paths_agree() {
        // GF(3^7) uses the digit/log path
        let f = gf(3, 7);
        assert!(f.add_tab.is_none());
        let a = Elem(1234);
        let b = Elem(987);
        let s = f.add(a, b);
        assert_eq!(f.sub(s, b), a);
        let prod = f.mul(a, b);
        assert_eq!(f.div(prod, b), a);
        let ca = f.coeffs(a);
        let cb = f.coeffs(b);
        let expected = poly::mul_mod(
            &ca.to_vec(),
            &cb,
            f.modulus(),
            3,
        );
        assert_eq!(prod, Elem(index_of(&expected, 3)));
    }

    #[test]
    fn exhaustive_frobenius_linearity_and_multiplicativity() {
        for (p, m) in [(3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2), (7, 1), (7, 2)] {
            let f = gf(p, m);
            if f.order() > 81 {
                continue;
            }
            for x in f.elements() {
                assert_eq!(f.abs_trace(f.pow(x, p as u64)), f.abs_trace(x));
                for y in f.elements() {
                    let lhs = f.abs_trace(f.add(x, y));
                    assert_eq!(lhs, (f.abs_trace(x) + f.abs_trace(y)) % p);
                    if !x.is_zero() && !y.is_zero() {
                        assert_eq!(
                            f.quadratic_character(f.mul(x, y)),
                            f.quadratic_character(x) * f.quadratic_character(y)
                        );
                    }
                }
                for c in 0..p {
                    let cx = f.mul(Elem(c), x);
                    assert_eq!(f.abs_trace(cx), c * f.abs_trace(x) % p);
                }
            }
        }
    }
}
