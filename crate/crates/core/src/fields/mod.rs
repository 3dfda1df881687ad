//! Finite-field arithmetic: GF(p^m), the quadratic tower over GF(q), and the
//! binary field where additive character values live.

mod charfield;
mod prime;
mod quadform;
mod tower;

pub use charfield::{order_of_two, CharFieldCtx, Gf2e};
pub use prime::{is_prime, Elem, FieldCtx, FieldSpec};
pub use quadform::{determinant, quadratic_form_count, QuadFormCount};
pub use tower::{construct_theta, ThetaSetup, TowerCtx};

/// Splits a prime power q into (p, m). Returns `None` if q is not an odd prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 3 || q.is_multiple_of(2) {
        return None;
    }
    let p = (3..=q).find(|d| q.is_multiple_of(*d))?;
    let mut m = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        m += 1;
    }
    (r == 1).then_some((p, m))
}

#[cfg(test)]
mod tests {
    use super::prime_power;

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power(27), Some((3, 3)));
        assert_eq!(prime_power(25), Some((5, 2)));
        assert_eq!(prime_power(7), Some((7, 1)));
        assert_eq!(prime_power(15), None);
        assert_eq!(prime_power(8), None);
    }
}
