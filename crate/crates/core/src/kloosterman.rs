//! Kloosterman sums as cyclotomic integers, and their mod 4 classes in
//! characteristic 3.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{CharFieldCtx, Elem, FieldCtx, ThetaSetup, TowerCtx};

/// Σ_j N_j ζ_p^j in Z[ζ_p].
#[derive(Clone, Debug, Serialize)]
pub struct CyclotomicInt {
    p: u32,
    coeffs: Vec<i64>,
}

impl CyclotomicInt {
    pub fn new(p: u32, coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() != p as usize {
            return Err(Error::InvalidArgument(format!("need {p} coefficients, got {}", coeffs.len())));
        }
        Ok(CyclotomicInt { p, coeffs })
    }

    pub fn from_integer(p: u32, n: i64) -> Self {
        let mut coeffs = vec![0; p as usize];
        coeffs[0] = n;
        CyclotomicInt { p, coeffs }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Subtracts N_{p-1}·(1 + ζ + ... + ζ^{p-1}), leaving N_{p-1} = 0.
    pub fn canonical(&self) -> CyclotomicInt {
        let top = *self.coeffs.last().unwrap();
        CyclotomicInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c - top).collect(),
        }
    }

    /// Whether the stored coefficients satisfy N_j = N_{p-j}.
    pub fn is_real(&self) -> bool {
        let p = self.p as usize;
        (1..p).all(|j| self.coeffs[j] == self.coeffs[p - j])
    }

    /// `Some(n)` when the value is the rational integer n.
    pub fn to_integer(&self) -> Option<i64> {
        let c = self.canonical();
        c.coeffs[1..].iter().all(|&x| x == 0).then_some(c.coeffs[0])
    }

    pub fn sub(&self, other: &CyclotomicInt) -> CyclotomicInt {
        assert_eq!(self.p, other.p);
        CyclotomicInt {
            p: self.p,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    /// Every canonical coefficient divisible by n, i.e. the value lies in nZ[ζ_p].
    pub fn divisible_by(&self, n: i64) -> bool {
        self.canonical().coeffs.iter().all(|c| c % n == 0)
    }

    pub fn congruent_mod(&self, other: &CyclotomicInt, n: i64) -> bool {
        self.sub(other).divisible_by(n)
    }

    pub fn vanishes_mod2(&self) -> bool {
        self.divisible_by(2)
    }

    /// Complex absolute value.
    pub fn abs(&self) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &c) in self.coeffs.iter().enumerate() {
            let a = std::f64::consts::TAU * j as f64 / self.p as f64;
            re += c as f64 * a.cos();
            im += c as f64 * a.sin();
        }
        re.hypot(im)
    }
}

impl PartialEq for CyclotomicInt {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.canonical().coeffs == other.canonical().coeffs
    }
}

impl Eq for CyclotomicInt {}

impl fmt::Display for CyclotomicInt {
    /// Canonical coefficients of 1, ζ, ..., ζ^{p-2}, separated by ';'.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.canonical();
        let parts: Vec<String> = c.coeffs[..c.coeffs.len() - 1].iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Σ_{c ∈ A} λ(c) with λ(c) = ζ_p^{Tr(c)}.
pub fn lambda_sum(field: &FieldCtx, values: &[Elem]) -> CyclotomicInt {
    let mut coeffs = vec![0i64; field.p() as usize];
    for &c in values {
        coeffs[field.abs_trace(c) as usize] += 1;
    }
    CyclotomicInt { p: field.p(), coeffs }
}

/// Whether Σ_{c ∈ A} λ(c) ≡ 0 (mod 2) coefficientwise.
pub fn lambda_vanishes_mod2(field: &FieldCtx, values: &[Elem]) -> bool {
    lambda_sum(field, values).vanishes_mod2()
}

/// Whether Σ_{c ∈ A} χ(c) = 0 in GF(2^e).
pub fn chi_sum_vanishes(cf: &CharFieldCtx, field: &FieldCtx, values: &[Elem]) -> bool {
    values.iter().fold(0, |acc, &c| acc ^ cf.chi(field, c)) == 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KCase {
    /// a = 0, or a square with Tr(√a) ≠ 0.
    OddSquareTrace,
    /// a = t² - t³ with t or 1 - t a square.
    CaseB,
    /// a = t² - t³ with t and 1 - t nonsquares.
    CaseC,
}

impl fmt::Display for KCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KCase::OddSquareTrace => "a",
            KCase::CaseB => "b",
            KCase::CaseC => "c",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KloostermanRecord {
    pub a: Elem,
    pub value: CyclotomicInt,
    /// The integer value, for p = 3.
    pub integer: Option<i64>,
    pub mod4: Option<u8>,
    pub case: Option<KCase>,
    pub t_witness: Option<Elem>,
}

/// Trace and inverse tables shared by repeated Kloosterman evaluations.
pub struct KloostermanCtx<'a> {
    field: &'a FieldCtx,
    trace: Vec<u32>,
    inv: Vec<Elem>,
}

impl<'a> KloostermanCtx<'a> {
    pub fn new(field: &'a FieldCtx) -> Self {
        KloostermanCtx {
            field,
            trace: field.elements().map(|x| field.abs_trace(x)).collect(),
            inv: field.elements().map(|x| field.inv(x).unwrap_or(Elem::ZERO)).collect(),
        }
    }

    pub fn field(&self) -> &FieldCtx {
        self.field
    }

    /// K(a) = Σ_{x ≠ 0} λ(x⁻¹ + a·x) with coefficients N_j = |{x : Tr(x⁻¹ + ax) = j}|.
    pub fn sum(&self, a: Elem) -> Result<CyclotomicInt> {
        let f = self.field;
        let mut coeffs = vec![0i64; f.p() as usize];
        for x in f.nonzero() {
            coeffs[self.trace[f.add(self.inv[x.index()], f.mul(a, x)).index()] as usize] += 1;
        }
        let k = CyclotomicInt { p: f.p(), coeffs };
        if !k.is_real() {
            return Err(Error::violation("Kloosterman sum is real", format!("N_j != N_(p-j) at a = {a}")));
        }
        Ok(k)
    }

    /// K(a) with its mod 4 class and, for p = 3, its case.
    pub fn record(&self, a: Elem) -> Result<KloostermanRecord> {
        let value = self.sum(a)?;
        let integer = if self.field.p() == 3 {
            Some(value.to_integer().ok_or_else(|| {
                Error::violation("Kloosterman sum is an integer", format!("a = {a}"))
            })?)
        } else {
            value.to_integer()
        };
        let mod4 = integer.map(|k| k.rem_euclid(4) as u8);
        let (case, t_witness) = if self.field.p() == 3 {
            let (c, t) = self.classify(a)?;
            (Some(c), t)
        } else {
            (None, None)
        };
        Ok(KloostermanRecord {
            a,
            value,
            integer,
            mod4,
            case,
            t_witness,
        })
    }

    /// The case of a by its defining criteria, with the least root t of
    /// t³ - t² + a = 0 realizing cases (b) and (c). Fails unless exactly one
    /// case applies.
    pub fn classify(&self, a: Elem) -> Result<(KCase, Option<Elem>)> {
        let f = self.field;
        if f.p() != 3 {
            return Err(Error::Unsupported("mod 4 classification needs p = 3".into()));
        }
        let case_a = a.is_zero()
            || f.sqrt(a).is_some_and(|s| self.trace[s.index()] != 0);
        let roots: Vec<Elem> = f
            .elements()
            .filter(|&t| t.0 > 1 && f.sub(f.mul(t, t), f.pow(t, 3)) == a)
            .collect();
        let one_minus = |t: Elem| f.sub(Elem::ONE, t);
        let b_root = roots.iter().copied().find(|&t| f.is_square(t) || f.is_square(one_minus(t)));
        let c_root = roots.iter().copied().find(|&t| !f.is_square(t) && !f.is_square(one_minus(t)));
        match (case_a, b_root, c_root) {
            (true, None, None) => Ok((KCase::OddSquareTrace, None)),
            (false, Some(t), None) => Ok((KCase::CaseB, Some(t))),
            (false, None, Some(t)) => Ok((KCase::CaseC, Some(t))),
            other => Err(Error::violation(
                "exactly one case",
                format!("a = {a}: case (a) {}, (b) root {:?}, (c) root {:?}", other.0, other.1, other.2),
            )),
        }
    }
}

/// K(a) for a single element.
pub fn kloosterman(field: &FieldCtx, a: Elem) -> Result<KloostermanRecord> {
    KloostermanCtx::new(field).record(a)
}

/// Predicted K(a) mod 4 for a case: odd, 2m + 2, or 2m.
pub fn case_congruence(case: KCase, m: u32, k: i64) -> bool {
    let r = k.rem_euclid(4);
    match case {
        KCase::OddSquareTrace => r % 2 == 1,
        KCase::CaseB => r == (2 * m as i64 + 2) % 4,
        KCase::CaseC => r == (2 * m as i64) % 4,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub m: u32,
    /// Over GF(q)*.
    pub count_a: usize,
    pub count_b: usize,
    pub count_c: usize,
    pub expected_b: usize,
    pub expected_c: usize,
}

/// The full atlas over GF(3^m) with the case tallies over GF(q)*. Fails on
/// any congruence or tally mismatch.
pub fn kloosterman_atlas(field: &FieldCtx) -> Result<(Vec<KloostermanRecord>, Option<ClassCounts>)> {
    let ctx = KloostermanCtx::new(field);
    let records: Vec<KloostermanRecord> = field
        .elements()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|a| ctx.record(a))
        .collect::<Result<_>>()?;
    if field.p() != 3 {
        return Ok((records, None));
    }
    let m = field.m();
    for r in &records {
        let (case, k) = (r.case.unwrap(), r.integer.unwrap());
        if !case_congruence(case, m, k) {
            return Err(Error::violation(
                "case congruence",
                format!("a = {}: case ({case}) but K = {k}", r.a),
            ));
        }
    }
    let q = field.order() as usize;
    let tally = |c: KCase| records[1..].iter().filter(|r| r.case == Some(c)).count();
    let (expected_b, expected_c) = if m % 2 == 1 {
        ((5 * q - 15) / 12, (q + 1) / 4)
    } else {
        ((5 * q - 9) / 12, (q - 1) / 4)
    };
    let counts = ClassCounts {
        m,
        count_a: tally(KCase::OddSquareTrace),
        count_b: tally(KCase::CaseB),
        count_c: tally(KCase::CaseC),
        expected_b,
        expected_c,
    };
    if (counts.count_b, counts.count_c) != (expected_b, expected_c) {
        return Err(Error::violation(
            "class counts",
            format!(
                "m = {m}: (b, c) = ({}, {}), expected ({expected_b}, {expected_c})",
                counts.count_b, counts.count_c
            ),
        ));
    }
    Ok((records, Some(counts)))
}

/// Case tallies over GF(3^m)*.
pub fn count_classes(field: &FieldCtx) -> Result<ClassCounts> {
    kloosterman_atlas(field)?
        .1
        .ok_or_else(|| Error::Unsupported("class counts need p = 3".into()))
}

/// `a_index,K,K_mod4,case,t_witness`, preceded by a `#` line naming the field.
pub fn write_atlas_csv<W: Write>(mut w: W, field: &FieldCtx, records: &[KloostermanRecord]) -> Result<()> {
    writeln!(w, "# p={} m={} modulus={}", field.p(), field.m(), field.modulus_string())?;
    writeln!(w, "a_index,K,K_mod4,case,t_witness")?;
    let opt = |o: Option<String>| o.unwrap_or_default();
    for r in records {
        let k = if field.p() == 3 {
            r.integer.unwrap().to_string()
        } else {
            r.value.to_string()
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            r.a,
            k,
            opt(r.mod4.filter(|_| field.p() == 3).map(|x| x.to_string())),
            opt(r.case.map(|c| c.to_string())),
            opt(r.t_witness.map(|t| t.to_string())),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriterionOutcome {
    pub criterion_met: bool,
    pub k_argument: Elem,
    pub k_value: CyclotomicInt,
    pub k_mod4: Option<u8>,
}

/// Sufficient condition for χ_{u,v,w} ∈ K(U_θ) with f(x) = x² and exactly one
/// of u, v zero. For q ≡ 1 (mod 4) the sum must avoid 2 mod 4 at
/// -u⁴α/(64w²) or -v⁴/(64w²α); for q ≡ 3 (mod 4) it must avoid 0 mod 4 at
/// u⁴(θ₀² - α)/(64w²) or v⁴α²(θ₀² - α)/(64w²).
pub fn thm_membership_criterion(
    ctx: &KloostermanCtx,
    tower: &TowerCtx,
    setup: &ThetaSetup,
    u: Elem,
    v: Elem,
    w: Elem,
) -> Result<CriterionOutcome> {
    let f = tower.base();
    if ctx.field().p() != f.p() || ctx.field().modulus() != f.modulus() {
        return Err(Error::InvalidArgument("Kloosterman context is for a different field".into()));
    }
    if w.is_zero() || u.is_zero() == v.is_zero() {
        return Err(Error::Unsupported("criterion needs w != 0 and exactly one of u, v zero".into()));
    }
    let q = f.order();
    let alpha = setup.alpha;
    let denom = f.mul(f.from_int(64), f.mul(w, w));
    let fourth = |x: Elem| f.pow(x, 4);
    let (arg, avoid) = if q % 4 == 1 {
        let num = if v.is_zero() {
            f.neg(f.mul(fourth(u), alpha))
        } else {
            f.neg(f.div(fourth(v), alpha))
        };
        (f.div(num, denom), 2)
    } else {
        let na = f.sub(f.mul(setup.theta0, setup.theta0), alpha);
        let num = if v.is_zero() {
            f.mul(fourth(u), na)
        } else {
            f.mul(f.mul(fourth(v), f.mul(alpha, alpha)), na)
        };
        (f.div(num, denom), 0)
    };
    let k = ctx.sum(arg)?;
    let met = !k.congruent_mod(&CyclotomicInt::from_integer(f.p(), avoid), 4);
    Ok(CriterionOutcome {
        criterion_met: met,
        k_argument: arg,
        k_mod4: k.to_integer().map(|x| x.rem_euclid(4) as u8),
        k_value: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u32, m: u32) -> FieldCtx {
        FieldCtx::new(&FieldSpec::new(p, m)).unwrap()
    }

    #[test]
    fn canonical_form() {
        let z = CyclotomicInt::new(3, vec![4, 2, 2]).unwrap();
        assert_eq!(z.canonical().coeffs(), &[2, 0, 0]);
        assert_eq!(z.canonical().canonical(), z.canonical());
        assert_eq!(z.to_integer(), Some(2));
        assert!(z.is_real());
        assert!(!CyclotomicInt::new(3, vec![0, 1, 0]).unwrap().is_real());
        assert_eq!(z, CyclotomicInt::from_integer(3, 2));
        assert!(z.congruent_mod(&CyclotomicInt::from_integer(3, 6), 4));
        assert!(CyclotomicInt::new(3, vec![1, 0]).is_err());
    }

    #[test]
    fn small_values() {
        let f = gf(3, 1);
        let k: Vec<i64> = f.elements().map(|a| kloosterman(&f, a).unwrap().integer.unwrap()).collect();
        assert_eq!(k, vec![-1, -1, 2]);
        let r = kloosterman(&f, Elem(2)).unwrap();
        assert_eq!((r.case, r.t_witness, r.mod4), (Some(KCase::CaseC), Some(Elem(2)), Some(2)));
        assert_eq!(kloosterman(&f, Elem(1)).unwrap().case, Some(KCase::OddSquareTrace));
        for (p, m) in [(3, 2), (5, 1), (7, 1), (3, 3)] {
            let f = gf(p, m);
            assert_eq!(kloosterman(&f, Elem::ZERO).unwrap().value.to_integer(), Some(-1));
        }
    }

    #[test]
    fn sum_over_a_vanishes() {
        // Σ_a K(a) = Σ_x λ(1/x) Σ_a λ(ax) = 0
        for (p, m) in [(3, 1), (3, 2), (5, 1), (3, 3)] {
            let f = gf(p, m);
            let ctx = KloostermanCtx::new(&f);
            let mut total = vec![0i64; p as usize];
            for a in f.elements() {
                for (t, c) in total.iter_mut().zip(ctx.sum(a).unwrap().coeffs()) {
                    *t += c;
                }
            }
            assert!(CyclotomicInt::new(p, total).unwrap().to_integer() == Some(0));
        }
    }

    #[test]
    fn weil_bound() {
        for (p, m) in [(3, 2), (5, 1), (7, 1), (5, 2)] {
            let f = gf(p, m);
            let ctx = KloostermanCtx::new(&f);
            let bound = 2.0 * (f.order() as f64).sqrt() + 1e-9;
            for a in f.elements() {
                assert!(ctx.sum(a).unwrap().abs() <= bound);
            }
        }
    }

    #[test]
    fn lifting_lemma_agrees_for_gf9() {
        let f = gf(3, 2);
        let cf = CharFieldCtx::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.random_range(0..12);
            let set: Vec<Elem> = (0..n).map(|_| Elem(rng.random_range(0..9))).collect();
            assert_eq!(lambda_vanishes_mod2(&f, &set), chi_sum_vanishes(&cf, &f, &set));
        }
        assert!(lambda_vanishes_mod2(&f, &[Elem::ZERO, Elem::ZERO]));
        assert!(!lambda_vanishes_mod2(&f, &[Elem::ZERO]));
    }

    #[test]
    fn class_counts_small() {
        let c = count_classes(&gf(3, 1)).unwrap();
        assert_eq!((c.count_b, c.count_c), (0, 1));
        let c = count_classes(&gf(3, 2)).unwrap();
        assert_eq!((c.count_b, c.count_c), (3, 2));
        assert!(count_classes(&gf(5, 1)).is_err());
    }

    #[test]
    fn atlas_csv() {
        let f = gf(3, 1);
        let (recs, _) = kloosterman_atlas(&f).unwrap();
        let mut buf = Vec::new();
        write_atlas_csv(&mut buf, &f, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows, vec!["0,-1,3,a,", "1,-1,3,a,", "2,2,2,c,2"]);
        let f5 = gf(5, 1);
        let (recs, counts) = kloosterman_atlas(&f5).unwrap();
        assert!(counts.is_none());
        let mut buf = Vec::new();
        write_atlas_csv(&mut buf, &f5, &recs).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(2).unwrap().starts_with("0,-1;"));
    }
}
