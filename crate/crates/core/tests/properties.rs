use std::sync::OnceLock;

use proptest::prelude::*;

use unital_core::charspec::Character;
use unital_core::fields::{Elem, FieldCtx, FieldSpec, TowerCtx};
use unital_core::gf2rank::{BitRow, RankAccumulator};
use unital_core::kloosterman::{CyclotomicInt, KloostermanCtx};

fn field(p: u32, m: u32) -> &'static FieldCtx {
    static CACHE: OnceLock<Vec<((u32, u32), FieldCtx)>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        [(3, 1), (5, 1), (3, 2), (7, 2), (3, 4), (3, 7), (5, 3)]
            .into_iter()
            .map(|(p, m)| ((p, m), FieldCtx::new(&FieldSpec::new(p, m)).unwrap()))
            .collect()
    });
    &all.iter().find(|(k, _)| *k == (p, m)).unwrap().1
}

fn tower() -> &'static TowerCtx {
    static T: OnceLock<TowerCtx> = OnceLock::new();
    T.get_or_init(|| TowerCtx::new(&FieldSpec::new(3, 2), None).unwrap())
}

/// Schoolbook product of coefficient vectors reduced by the monic modulus.
fn poly_mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let m = modulus.len() - 1;
    let mut prod = vec![0u64; 2 * m];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    for d in (m..prod.len()).rev() {
        let c = prod[d];
        if c == 0 {
            continue;
        }
        for (k, &mk) in modulus.iter().enumerate() {
            let idx = d - m + k;
            prod[idx] = (prod[idx] + (p as u64 - c) * mk as u64) % p as u64;
        }
    }
    prod.truncate(m);
    prod.into_iter().map(|c| c as u32).collect()
}

fn field_and_pair() -> impl Strategy<Value = (u32, u32, u32, u32)> {
    prop_oneof![Just((3, 1)), Just((5, 1)), Just((3, 2)), Just((7, 2)), Just((3, 4)), Just((3, 7)), Just((5, 3))]
        .prop_flat_map(|(p, m): (u32, u32)| {
            let q = p.pow(m);
            (Just(p), Just(m), 0..q, 0..q)
        })
}

/// Rank over GF(2) by textbook elimination on dense boolean rows.
fn naive_rank(rows: &[Vec<bool>]) -> usize {
    let mut rows = rows.to_vec();
    let width = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..width {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(rank, piv);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                for c in 0..width {
                    rows[r][c] ^= rows[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

fn to_bitrow(r: &[bool]) -> BitRow {
    let cols = r.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i);
    BitRow::from_columns(r.len(), cols).unwrap()
}

proptest! {
    #[test]
    fn multiplication_matches_polynomial_oracle((p, m, a, b) in field_and_pair()) {
        let f = field(p, m);
        let want = poly_mul_mod(&f.coeffs(Elem(a)), &f.coeffs(Elem(b)), f.modulus(), p);
        prop_assert_eq!(f.coeffs(f.mul(Elem(a), Elem(b))), want);
    }

    #[test]
    fn field_axioms((p, m, a, b) in field_and_pair(), c in 0u32..9) {
        let f = field(p, m);
        let (a, b, c) = (Elem(a), Elem(b), Elem(c % f.order()));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        if let Some(ai) = f.inv(a) {
            prop_assert_eq!(f.mul(a, ai), Elem::ONE);
        } else {
            prop_assert!(a.is_zero());
        }
        prop_assert_eq!(f.pow(a, f.order() as u64), a);
        prop_assert_eq!(f.abs_trace(f.add(a, b)), (f.abs_trace(a) + f.abs_trace(b)) % p);
    }

    #[test]
    fn tower_round_trip(x in 0u32..81, y in 0u32..81) {
        let t = tower();
        let (x, y) = (Elem(x), Elem(y));
        let (x0, x1) = t.decompose(x);
        prop_assert_eq!(t.recompose(x0, x1), x);
        prop_assert_eq!(t.norm(t.ext().mul(x, y)), t.base().mul(t.norm(x), t.norm(y)));
        prop_assert_eq!(t.project(t.embed(x0)), Some(x0));
    }

    #[test]
    fn rank_matches_naive_and_ignores_order(
        rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 70), 0..40),
        seed in any::<u64>(),
    ) {
        let want = naive_rank(&rows);
        let mut acc = RankAccumulator::new(70);
        for r in &rows {
            acc.absorb(&to_bitrow(r)).unwrap();
        }
        prop_assert_eq!(acc.rank(), want);

        let mut shuffled: Vec<BitRow> = rows.iter().map(|r| to_bitrow(r)).collect();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                let j = (seed.rotate_left(i as u32) as usize) % n;
                shuffled.swap(i, j);
            }
        }
        let mut batch = RankAccumulator::new(70);
        batch.absorb_batch(&shuffled).unwrap();
        prop_assert_eq!(batch.rank(), want);
    }

    #[test]
    fn canonical_form_is_idempotent(coeffs in prop::collection::vec(-50i64..50, 3), shift in -20i64..20) {
        let z = CyclotomicInt::new(3, coeffs.clone()).unwrap();
        let c = z.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        prop_assert_eq!(*c.coeffs().last().unwrap(), 0);
        let moved: Vec<i64> = coeffs.iter().map(|k| k + shift).collect();
        prop_assert_eq!(CyclotomicInt::new(3, moved).unwrap(), z);
    }

    #[test]
    fn character_index_round_trip(k in 0usize..729) {
        let ch = Character::from_index(9, k);
        prop_assert_eq!(ch.index(9), k);
    }
}

/// K(a) via floating-point Σ cos(2π Tr(1/x + ax)/3).
fn kloosterman_float(f: &FieldCtx, a: Elem) -> f64 {
    f.nonzero()
        .map(|x| {
            let t = f.abs_trace(f.add(f.inv(x).unwrap(), f.mul(a, x)));
            (2.0 * std::f64::consts::PI * t as f64 / 3.0).cos()
        })
        .sum()
}

#[test]
fn kloosterman_reality_weil_and_float_oracle() {
    for m in 1..=4 {
        let f = FieldCtx::new(&FieldSpec::new(3, m)).unwrap();
        let ctx = KloostermanCtx::new(&f);
        let bound = 2.0 * (f.order() as f64).sqrt();
        for a in f.elements() {
            let k = ctx.sum(a).unwrap();
            assert!(k.is_real(), "K({a}) not real at m = {m}");
            let v = k.to_integer().unwrap();
            assert!((v as f64 - kloosterman_float(&f, a)).abs() < 1e-6);
            if !a.is_zero() {
                assert!((v as f64).abs() <= bound + 1e-9, "Weil bound fails for K({a})");
            }
        }
    }
}
