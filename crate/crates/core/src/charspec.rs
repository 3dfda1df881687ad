//! Character-spectrum engine: the additive characters χ_{u,v,w} of T_θ that
//! do not annihilate every block of the punctured unital.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{CharFieldCtx, Elem, FieldCtx, Gf2e, ThetaSetup};
use crate::geometry::{fiber_condition_holds, Instance, UnitalDesign};

/// χ_{u,v,w}(x, tθ) = χ(u·x₀ + v·x₁ + w·t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Character {
    pub u: Elem,
    pub v: Elem,
    pub w: Elem,
}

impl Character {
    pub fn new(u: Elem, v: Elem, w: Elem) -> Self {
        Character { u, v, w }
    }

    /// Position in (u, v, w) order.
    pub fn index(&self, q: u32) -> usize {
        ((self.u.0 * q + self.v.0) * q + self.w.0) as usize
    }

    pub fn from_index(q: u32, k: usize) -> Self {
        let k = k as u32;
        Character::new(Elem(k / (q * q)), Elem(k / q % q), Elem(k % q))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Witness {
    /// S(β) ≠ 0.
    Beta(Elem),
    /// χ(B) ≠ 0 for this block index.
    Block(usize),
}

pub struct SpectrumEngine<'a> {
    inst: &'a Instance,
    setup: ThetaSetup,
    cf: CharFieldCtx,
    chi: Vec<Gf2e>,
    /// Per β index: (x₀, x₁, f_j(x)) for x in C_{0,β}.
    circles: Vec<Vec<(Elem, Elem, Elem)>>,
    use_f1: bool,
    theta_j_inv: Elem,
}

impl<'a> SpectrumEngine<'a> {
    pub fn new(inst: &'a Instance, setup: &ThetaSetup) -> Result<Self> {
        if !fiber_condition_holds(inst, setup) {
            return Err(Error::violation(
                "fiber condition",
                format!("theta = {} does not satisfy the fiber condition", setup.theta),
            ));
        }
        let tower = inst.tower();
        let base = tower.base();
        let cf = CharFieldCtx::new(tower.p())?;
        let chi = cf.chi_table(base)?;
        let use_f1 = !setup.theta1.is_zero();
        let theta_j = if use_f1 { setup.theta1 } else { setup.theta0 };
        let comps = inst.components();
        let mut circles = vec![Vec::new(); tower.q() as usize];
        for y in tower.ext().elements() {
            let beta = inst.circle_form(setup, y);
            let (x0, x1) = tower.decompose(y);
            let fj = if use_f1 { comps.f1(y) } else { comps.f0(y) };
            circles[beta.index()].push((x0, x1, fj));
        }
        Ok(SpectrumEngine {
            inst,
            setup: *setup,
            cf,
            chi,
            circles,
            use_f1,
            theta_j_inv: base.inv(theta_j).expect("theta is nonzero"),
        })
    }

    pub fn q(&self) -> u32 {
        self.inst.q()
    }

    pub fn char_field(&self) -> &CharFieldCtx {
        &self.cf
    }

    pub fn setup(&self) -> &ThetaSetup {
        &self.setup
    }

    fn base(&self) -> &FieldCtx {
        self.inst.tower().base()
    }

    #[inline]
    pub fn chi(&self, t: Elem) -> Gf2e {
        self.chi[t.index()]
    }

    /// χ_{u,v,w} at the affine point with index `pt`.
    pub fn chi_point(&self, design: &UnitalDesign, ch: &Character, pt: u32) -> Gf2e {
        let b = self.base();
        let (x, t) = design.affine_coords(pt);
        let (x0, x1) = self.inst.tower().decompose(x);
        self.chi(b.add(b.add(b.mul(ch.u, x0), b.mul(ch.v, x1)), b.mul(ch.w, t)))
    }

    /// χ(B) over the block with ∞ removed.
    pub fn chi_block(&self, design: &UnitalDesign, ch: &Character, block: usize) -> Gf2e {
        let inf = design.infinity();
        design
            .block(block)
            .iter()
            .filter(|&&pt| pt != inf)
            .fold(0, |acc, &pt| acc ^ self.chi_point(design, ch, pt))
    }

    /// w' = w/θ₁, or w/θ₀ when θ₁ = 0.
    pub fn w_prime(&self, w: Elem) -> Elem {
        self.base().mul(w, self.theta_j_inv)
    }

    /// S(β) = Σ_{x ∈ C_{0,β}} χ(u·x₀ + v·x₁ + w'·f_j(x)).
    pub fn s_beta(&self, ch: &Character, beta: Elem) -> Gf2e {
        let b = self.base();
        let wp = self.w_prime(ch.w);
        self.circles[beta.index()].iter().fold(0, |acc, &(x0, x1, fj)| {
            acc ^ self.chi(b.add(b.add(b.mul(ch.u, x0), b.mul(ch.v, x1)), b.mul(wp, fj)))
        })
    }

    pub fn s_beta_table(&self, ch: &Character) -> Vec<(Elem, Gf2e)> {
        self.base().nonzero().map(|beta| (beta, self.s_beta(ch, beta))).collect()
    }

    /// χ(-u·a₀ - v·a₁ - w'·b_j), the factor relating χ(B_{a,b}) to S(β(b)).
    pub fn block_phase(&self, ch: &Character, a: Elem, bb: Elem) -> Gf2e {
        let b = self.base();
        let tower = self.inst.tower();
        let (a0, a1) = tower.decompose(a);
        let (b0, b1) = tower.decompose(bb);
        let bj = if self.use_f1 { b1 } else { b0 };
        let s = b.add(b.add(b.mul(ch.u, a0), b.mul(ch.v, a1)), b.mul(self.w_prime(ch.w), bj));
        self.chi(b.neg(s))
    }

    /// β(b) = b₀θ₁ - b₁θ₀.
    pub fn beta_of(&self, bb: Elem) -> Elem {
        let b = self.base();
        let (b0, b1) = self.inst.tower().decompose(bb);
        b.sub(b.mul(b0, self.setup.theta1), b.mul(b1, self.setup.theta0))
    }

    /// Membership of χ in K(U_θ) via the S(β) criterion. Needs a normal f.
    pub fn in_spectrum(&self, ch: &Character) -> Result<Option<Witness>> {
        if !self.inst.is_normal() {
            return Err(Error::NotNormal(self.inst.f().id()));
        }
        Ok(self.criterion(ch))
    }

    fn criterion(&self, ch: &Character) -> Option<Witness> {
        if ch.w.is_zero() {
            // χ_{u,v,0}(B_0) = q·χ(0) = 1
            return Some(Witness::Block(0));
        }
        if ch.u.is_zero() && ch.v.is_zero() {
            return None;
        }
        self.base()
            .nonzero()
            .find(|&beta| self.s_beta(ch, beta) != 0)
            .map(Witness::Beta)
    }

    /// Membership by scanning every block of the punctured design.
    pub fn in_spectrum_by_blocks(&self, design: &UnitalDesign, ch: &Character) -> Option<Witness> {
        (0..design.num_blocks())
            .find(|&i| self.chi_block(design, ch, i) != 0)
            .map(Witness::Block)
    }

    /// All q³ characters through the S(β) criterion.
    pub fn spectrum(&self) -> Result<SpectrumResult> {
        if !self.inst.is_normal() {
            return Err(Error::NotNormal(self.inst.f().id()));
        }
        Ok(self.collect(|ch| self.criterion(ch)))
    }

    /// All q³ characters by block scan; works for any f.
    pub fn spectrum_by_blocks(&self, design: &UnitalDesign) -> SpectrumResult {
        self.collect(|ch| self.in_spectrum_by_blocks(design, ch))
    }

    fn collect(&self, test: impl Fn(&Character) -> Option<Witness> + Sync) -> SpectrumResult {
        let q = self.q();
        let n = (q as usize).pow(3);
        let witnesses: Vec<Option<Witness>> = (0..n)
            .into_par_iter()
            .map(|k| test(&Character::from_index(q, k)))
            .collect();
        SpectrumResult::new(q, witnesses)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumResult {
    pub q: u32,
    pub size: usize,
    /// Indexed by [`Character::index`].
    pub witnesses: Vec<Option<Witness>>,
}

impl SpectrumResult {
    fn new(q: u32, witnesses: Vec<Option<Witness>>) -> Self {
        let size = witnesses.iter().filter(|w| w.is_some()).count();
        SpectrumResult { q, size, witnesses }
    }

    pub fn is_member(&self, ch: &Character) -> bool {
        self.witnesses[ch.index(self.q)].is_some()
    }

    /// Membership bits packed LSB-first, character k at bit k % 8 of byte k / 8.
    pub fn bitmap(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.witnesses.len().div_ceil(8)];
        for (k, w) in self.witnesses.iter().enumerate() {
            if w.is_some() {
                out[k / 8] |= 1 << (k % 8);
            }
        }
        out
    }

    pub fn bitmap_hex(&self) -> String {
        self.bitmap().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `u,v,w,member,witness_beta` with element indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,v,w,member,witness_beta")?;
        for (k, wit) in self.witnesses.iter().enumerate() {
            let ch = Character::from_index(self.q, k);
            let beta = match wit {
                Some(Witness::Beta(b)) => b.to_string(),
                _ => String::new(),
            };
            writeln!(w, "{},{},{},{},{}", ch.u, ch.v, ch.w, wit.is_some() as u8, beta)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub upper: u64,
    pub leung_xiang: u64,
    /// Only for p = 3.
    pub corollary: Option<u64>,
}

/// Upper bound q³ - q + 1, the Leung–Xiang bound
/// (q³ - q² + q)(1 - 1/p) + q²/p, and for p = 3 the Kloosterman bound
/// (2/3)(q³ + q² - 2q) - 1 (m even) or (2/3)(q³ + q² + q) - 1 (m odd).
pub fn bounds(q: u64, p: u64, m: u32) -> Result<Bounds> {
    if p < 3 || p.checked_pow(m) != Some(q) {
        return Err(Error::InvalidArgument(format!("q = {q} is not {p}^{m}")));
    }
    let upper = q * q * q - q + 1;
    let leung_xiang = ((q * q * q - q * q + q) * (p - 1) + q * q) / p;
    let corollary = (p == 3).then(|| {
        if m.is_multiple_of(2) {
            2 * (q * q * q + q * q - 2 * q) / 3 - 1
        } else {
            2 * (q * q * q + q * q + q) / 3 - 1
        }
    });
    Ok(Bounds {
        upper,
        leung_xiang,
        corollary,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceCriterionReport {
    /// Triples with w ≠ 0 and Tr(uvθ₁/w) ≠ 0.
    pub qualifying: usize,
    pub counterexamples: Vec<(u32, u32, u32)>,
    /// |{(u, v, w) : w ≠ 0, Tr(uvθ₁/w) = 0}| by enumeration.
    pub trace_zero_recount: usize,
    /// (q - 1)²(1 + q/p).
    pub trace_zero_printed: usize,
    /// q³ minus the recount: the lower bound the criterion certifies.
    pub certified_lower_bound: usize,
    pub leung_xiang: u64,
}

/// For f(x) = x²: every χ_{u,v,w} with w ≠ 0 and Tr(uvθ₁/w) ≠ 0 is in K(U_θ).
pub fn verify_trace_criterion(engine: &SpectrumEngine) -> Result<TraceCriterionReport> {
    let inst = engine.inst;
    if !inst.is_square() {
        return Err(Error::Unsupported("trace criterion is stated for f(x) = x^2".into()));
    }
    let tower = inst.tower();
    let b = tower.base();
    let two = b.from_int(2);
    let comps = inst.components();
    if let Some(x) = tower.ext().elements().find(|&x| {
        let (x0, x1) = tower.decompose(x);
        comps.f1(x) != b.mul(two, b.mul(x0, x1))
    }) {
        return Err(Error::violation("f1 = 2 x0 x1", format!("fails at x = {x}")));
    }
    let theta1 = engine.setup.theta1;
    if theta1.is_zero() {
        return Err(Error::Unsupported("trace criterion needs theta1 != 0".into()));
    }
    let q = b.order() as usize;
    let p = b.p() as usize;
    let trace: Vec<u32> = b.elements().map(|x| b.abs_trace(x)).collect();
    let rows: Vec<(usize, usize, Vec<(u32, u32, u32)>)> = b
        .nonzero()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|w| {
            let (mut qual, mut zero, mut bad) = (0, 0, Vec::new());
            let scale = b.div(theta1, w);
            for u in b.elements() {
                for v in b.elements() {
                    if trace[b.mul(b.mul(u, v), scale).index()] == 0 {
                        zero += 1;
                        continue;
                    }
                    qual += 1;
                    if engine.criterion(&Character::new(u, v, w)).is_none() {
                        bad.push((u.0, v.0, w.0));
                    }
                }
            }
            (qual, zero, bad)
        })
        .collect();
    let qualifying = rows.iter().map(|r| r.0).sum();
    let trace_zero_recount = rows.iter().map(|r| r.1).sum();
    let counterexamples: Vec<_> = rows.into_iter().flat_map(|r| r.2).collect();
    let bnd = bounds(q as u64, p as u64, b.m())?;
    let report = TraceCriterionReport {
        qualifying,
        trace_zero_printed: (q - 1) * (q - 1) * (p + q) / p,
        certified_lower_bound: q * q * q - trace_zero_recount,
        leung_xiang: bnd.leung_xiang,
        trace_zero_recount,
        counterexamples,
    };
    if let Some(&(u, v, w)) = report.counterexamples.first() {
        return Err(Error::violation(
            "trace criterion",
            format!("chi_({u},{v},{w}) qualifies but is not in the spectrum"),
        ));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChiSquareReport {
    pub q: u32,
    pub checked: usize,
    pub failures: Vec<u32>,
}

/// Σ_{c ∈ GF(q)} χ(a·c²) = 1 for every a ≠ 0.
pub fn verify_chi_square_lemma(field: &FieldCtx) -> Result<ChiSquareReport> {
    let cf = CharFieldCtx::new(field.p())?;
    let chi = cf.chi_table(field)?;
    let squares: Vec<Elem> = field.elements().map(|c| field.mul(c, c)).collect();
    let failures: Vec<u32> = field
        .nonzero()
        .filter(|&a| squares.iter().fold(0, |acc, &s| acc ^ chi[field.mul(a, s).index()]) != 1)
        .map(|a| a.0)
        .collect();
    let report = ChiSquareReport {
        q: field.order(),
        checked: field.order() as usize - 1,
        failures,
    };
    if let Some(a) = report.failures.first() {
        return Err(Error::violation("sum of chi(a c^2) is 1", format!("fails at a = {a}")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{construct_theta, FieldSpec, TowerCtx};
    use crate::geometry::{build_unital, PairCheck};
    use crate::planar::{Family, PlanarFn};

    fn square(p: u32, m: u32) -> Instance {
        let t = TowerCtx::new(&FieldSpec::new(p, m), None).unwrap();
        let f = PlanarFn::new(t.ext(), Family::Square).unwrap();
        Instance::new(t, f).unwrap()
    }

    #[test]
    fn bounds_values() {
        let b = bounds(9, 3, 2).unwrap();
        assert_eq!((b.upper, b.leung_xiang, b.corollary), (721, 465, Some(527)));
        let b = bounds(3, 3, 1).unwrap();
        assert_eq!((b.upper, b.leung_xiang, b.corollary), (25, 17, Some(25)));
        let b = bounds(27, 3, 3).unwrap();
        assert_eq!((b.upper, b.corollary), (19657, Some(13625)));
        assert_eq!(bounds(5, 5, 1).unwrap().corollary, None);
        assert!(bounds(10, 3, 2).is_err());
    }

    #[test]
    fn block_values_on_b_a() {
        let i = square(3, 1);
        let s = construct_theta(i.tower()).unwrap();
        let d = build_unital(&i, &s, PairCheck::Exhaustive).unwrap();
        let e = SpectrumEngine::new(&i, &s).unwrap();
        let b = i.tower().base();
        for a in 0..d.num_b_a() {
            let (a0, a1) = i.tower().decompose(Elem(a as u32));
            for u in b.elements() {
                for v in b.elements() {
                    let ch = Character::new(u, v, Elem::ZERO);
                    let expect = e.chi(b.add(b.mul(u, a0), b.mul(v, a1)));
                    assert_eq!(e.chi_block(&d, &ch, a), expect);
                    assert_ne!(expect, 0);
                    for w in b.nonzero() {
                        assert_eq!(e.chi_block(&d, &Character::new(u, v, w), a), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn q3_spectrum_is_25_and_matches_block_scan() {
        let i = square(3, 1);
        let s = construct_theta(i.tower()).unwrap();
        let d = build_unital(&i, &s, PairCheck::Exhaustive).unwrap();
        let e = SpectrumEngine::new(&i, &s).unwrap();
        let fast = e.spectrum().unwrap();
        let slow = e.spectrum_by_blocks(&d);
        assert_eq!(fast.size, 25);
        assert_eq!(fast.bitmap(), slow.bitmap());
        let w0 = (0..27).filter(|&k| k % 3 == 0 && fast.witnesses[k].is_some()).count();
        assert_eq!(w0, 9);
    }

    #[test]
    fn hex_and_csv_layout() {
        let i = square(3, 1);
        let s = construct_theta(i.tower()).unwrap();
        let r = SpectrumEngine::new(&i, &s).unwrap().spectrum().unwrap();
        assert_eq!(r.bitmap_hex().len(), 8);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 28);
        assert!(text.starts_with("u,v,w,member,witness_beta\n0,0,0,1,\n0,0,1,0,\n"));
    }

    #[test]
    fn trace_criterion_q3_q9() {
        for (p, m) in [(3, 1), (3, 2), (5, 1)] {
            let i = square(p, m);
            let s = construct_theta(i.tower()).unwrap();
            let e = SpectrumEngine::new(&i, &s).unwrap();
            let r = verify_trace_criterion(&e).unwrap();
            let q = i.q() as usize;
            assert_eq!(r.qualifying + r.trace_zero_recount, (q - 1) * q * q);
            assert_eq!(r.certified_lower_bound as u64, r.leung_xiang);
            assert_eq!(r.trace_zero_recount, r.trace_zero_printed + (q - 1));
        }
    }

    #[test]
    fn chi_square_lemma() {
        for (p, m) in [(3, 1), (3, 2), (5, 1), (7, 1), (3, 3)] {
            let f = FieldCtx::new(&FieldSpec::new(p, m)).unwrap();
            let r = verify_chi_square_lemma(&f).unwrap();
            assert_eq!(r.checked as u32, f.order() - 1);
        }
    }
}
