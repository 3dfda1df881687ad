//! GF(2^e) holding a primitive p-th root of unity ε_p, and the additive
//! character χ(t) = ε_p^{Tr(t)} with values there.

use crate::error::{Error, Result};

use super::prime::{is_prime, prime_factors};
use super::{Elem, FieldCtx};

/// Element of GF(2^e) as a bit polynomial.
pub type Gf2e = u32;

#[derive(Clone, Debug)]
pub struct CharFieldCtx {
    p: u32,
    e: u32,
    poly: u64,
    eps: Gf2e,
    eps_pow: Vec<Gf2e>,
}

fn clmul_mod(a: u64, b: u64, poly: u64, e: u32) -> u64 {
    let mut acc = 0u64;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> e & 1 == 1 {
            a ^= poly;
        }
    }
    acc
}

fn gf2_poly_rem(mut a: u64, b: u64) -> u64 {
    let db = 63 - b.leading_zeros();
    while a != 0 && 63 - a.leading_zeros() >= db {
        a ^= b << (63 - a.leading_zeros() - db);
    }
    a
}

fn gf2_irreducible(poly: u64, e: u32) -> bool {
    for d in 1..=e / 2 {
        for low in 0..(1u64 << d) {
            let cand = (1u64 << d) | low;
            if gf2_poly_rem(poly, cand) == 0 {
                return false;
            }
        }
    }
    true
}

/// Multiplicative order of 2 modulo the odd prime `p`.
pub fn order_of_two(p: u32) -> u32 {
    let mut x = 2 % p as u64;
    let mut k = 1;
    while x != 1 {
        x = x * 2 % p as u64;
        k += 1;
    }
    k
}

impl CharFieldCtx {
    pub fn new(p: u32) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        let e = order_of_two(p);
        if e > 31 {
            return Err(Error::Unsupported(format!(
                "GF(2^{e}) needed for p = {p} is too large"
            )));
        }
        let poly = ((1u64 << e)..(1u64 << (e + 1)))
            .find(|&c| gf2_irreducible(c, e))
            .expect("irreducible binary polynomials exist in every degree");
        let n = (1u64 << e) - 1;
        let factors = prime_factors(n);
        let pow = |mut b: u64, mut k: u64| {
            let mut r = 1u64;
            while k > 0 {
                if k & 1 == 1 {
                    r = clmul_mod(r, b, poly, e);
                }
                b = clmul_mod(b, b, poly, e);
                k >>= 1;
            }
            r
        };
        let generator = (2..=n)
            .find(|&g| factors.iter().all(|&r| pow(g, n / r) != 1))
            .unwrap_or(1);
        let eps = pow(generator, n / p as u64) as Gf2e;
        let mut eps_pow = Vec::with_capacity(p as usize);
        let mut cur = 1u64;
        for _ in 0..p {
            eps_pow.push(cur as Gf2e);
            cur = clmul_mod(cur, eps as u64, poly, e);
        }
        debug_assert_eq!(cur, 1);
        Ok(CharFieldCtx {
            p,
            e,
            poly,
            eps,
            eps_pow,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Degree of the extension over GF(2).
    pub fn e(&self) -> u32 {
        self.e
    }

    /// Defining polynomial of GF(2^e) as a bit mask.
    pub fn poly(&self) -> u64 {
        self.poly
    }

    pub fn eps(&self) -> Gf2e {
        self.eps
    }

    /// ε_p^k.
    #[inline]
    pub fn eps_pow(&self, k: u32) -> Gf2e {
        self.eps_pow[(k % self.p) as usize]
    }

    pub fn mul(&self, a: Gf2e, b: Gf2e) -> Gf2e {
        clmul_mod(a as u64, b as u64, self.poly, self.e) as Gf2e
    }

    pub fn pow(&self, a: Gf2e, mut k: u64) -> Gf2e {
        let mut r = 1;
        let mut b = a;
        while k > 0 {
            if k & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            k >>= 1;
        }
        r
    }

    pub fn chi(&self, field: &FieldCtx, t: Elem) -> Gf2e {
        self.eps_pow(field.abs_trace(t))
    }

    /// χ tabulated over all of `field`, indexed by element index.
    pub fn chi_table(&self, field: &FieldCtx) -> Result<Vec<Gf2e>> {
        if field.p() != self.p {
            return Err(Error::InvalidArgument(format!(
                "character field is for p = {} but the field has p = {}",
                self.p,
                field.p()
            )));
        }
        Ok(field.elements().map(|t| self.chi(field, t)).collect())
    }
}
