use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fields::{Elem, ThetaSetup};

use super::Instance;

/// C_{a,β} = {x : θ₁f₀(x+a) - θ₀f₁(x+a) = β}, sorted by index.
pub fn circle(inst: &Instance, setup: &ThetaSetup, a: Elem, beta: Elem) -> Result<Vec<Elem>> {
    if beta.is_zero() {
        return Err(Error::InvalidArgument("circle needs beta != 0".into()));
    }
    let ext = inst.tower().ext();
    Ok(ext
        .elements()
        .filter(|&x| inst.circle_form(setup, ext.add(x, a)) == beta)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleKind {
    /// C_{0,1}.
    One,
    /// C_{0,α}.
    Alpha,
}

/// Points are (x₀, x₁) coordinate pairs, sorted by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleParamReport {
    pub kind: CircleKind,
    pub beta: Elem,
    pub enumerated: Vec<(Elem, Elem)>,
    pub printed: Vec<(Elem, Elem)>,
    pub printed_matches: bool,
    /// Points in exactly one of `printed` and `enumerated`.
    pub printed_symmetric_difference: Vec<(Elem, Elem)>,
    pub corrected: Vec<(Elem, Elem)>,
    pub corrected_matches: bool,
}

impl CircleParamReport {
    /// The parametrization that agrees with enumeration.
    pub fn output(&self) -> &[(Elem, Elem)] {
        if self.printed_matches {
            &self.printed
        } else {
            &self.corrected
        }
    }
}

fn rational(
    ts: impl Iterator<Item = Elem>,
    point: impl Fn(Elem) -> Option<(Elem, Elem)>,
    extra: [(Elem, Elem); 2],
) -> BTreeSet<(Elem, Elem)> {
    ts.filter_map(point).chain(extra).collect()
}

/// Rational parametrization of C_{0,1} or C_{0,α} for f(x) = x² with θ from
/// the q mod 4 recipe, as printed and in corrected form, each compared with
/// the enumerated circle. Fails unless one of them matches.
pub fn parametrize_circle(inst: &Instance, setup: &ThetaSetup, kind: CircleKind) -> Result<CircleParamReport> {
    if !inst.is_square() {
        return Err(Error::Unsupported("circle parametrization needs f(x) = x^2".into()));
    }
    let tower = inst.tower();
    let b = tower.base();
    let q = tower.q();
    let alpha = setup.alpha;
    let (theta0, theta1) = (setup.theta0, setup.theta1);
    if theta1 != Elem::ONE || (q % 4 == 1 && !theta0.is_zero()) {
        return Err(Error::Unsupported("theta must come from the q mod 4 recipe".into()));
    }
    let beta = match kind {
        CircleKind::One => Elem::ONE,
        CircleKind::Alpha => alpha,
    };
    let enumerated: BTreeSet<(Elem, Elem)> = circle(inst, setup, Elem::ZERO, beta)?
        .into_iter()
        .map(|y| tower.decompose(y))
        .collect();

    let (one, two) = (Elem::ONE, b.from_int(2));
    let minus_one = b.neg(one);
    let at = b.sub(alpha, b.mul(theta0, theta0));
    let sq = |t: Elem| b.mul(t, t);
    let frac = |n: Elem, d: Elem| b.inv(d).map(|di| b.mul(n, di));
    let ts = || b.nonzero();

    let (printed, corrected) = if q % 4 == 1 {
        let set = match kind {
            CircleKind::One => rational(
                ts(),
                |t| {
                    let d = b.add(one, b.mul(alpha, sq(t)));
                    Some((frac(b.sub(one, b.mul(alpha, sq(t))), d)?, frac(b.mul(two, t), d)?))
                },
                [(one, Elem::ZERO), (minus_one, Elem::ZERO)],
            ),
            CircleKind::Alpha => rational(
                ts(),
                |t| {
                    let d = b.add(alpha, sq(t));
                    Some((
                        frac(b.mul(b.mul(two, alpha), t), d)?,
                        frac(b.sub(alpha, sq(t)), d)?,
                    ))
                },
                [(Elem::ZERO, one), (Elem::ZERO, minus_one)],
            ),
        };
        (set.clone(), set)
    } else {
        let d = |t: Elem| b.add(one, b.mul(at, sq(t)));
        let two_theta0 = b.mul(two, theta0);
        match kind {
            CircleKind::One => {
                let printed = rational(
                    ts(),
                    |t| {
                        let n = b.sub(b.sub(one, b.mul(two_theta0, t)), b.mul(at, sq(t)));
                        Some((frac(n, d(t))?, frac(b.mul(two, t), d(t))?))
                    },
                    [(one, Elem::ZERO), (minus_one, Elem::ZERO)],
                );
                let corrected = rational(
                    ts(),
                    |t| {
                        let n = b.sub(b.add(one, b.mul(two_theta0, t)), b.mul(at, sq(t)));
                        Some((frac(n, d(t))?, frac(b.mul(two, t), d(t))?))
                    },
                    [(one, Elem::ZERO), (minus_one, Elem::ZERO)],
                );
                (printed, corrected)
            }
            CircleKind::Alpha => {
                let alpha_inv = b.inv(alpha).expect("alpha is nonzero");
                let printed = rational(
                    ts(),
                    |t| {
                        let n = b.sub(
                            b.sub(one, b.mul(b.mul(two_theta0, t), sq(alpha_inv))),
                            b.mul(at, sq(t)),
                        );
                        Some((frac(b.mul(b.mul(two, t), alpha_inv), d(t))?, frac(n, d(t))?))
                    },
                    [(Elem::ZERO, one), (Elem::ZERO, minus_one)],
                );
                let corrected = rational(
                    ts(),
                    |t| {
                        let n = b.sub(b.add(one, b.mul(two_theta0, t)), b.mul(at, sq(t)));
                        Some((frac(b.mul(b.mul(two, alpha), t), d(t))?, frac(n, d(t))?))
                    },
                    [(Elem::ZERO, one), (Elem::ZERO, minus_one)],
                );
                (printed, corrected)
            }
        }
    };

    let printed_symmetric_difference = printed.symmetric_difference(&enumerated).copied().collect();
    let report = CircleParamReport {
        kind,
        beta,
        printed_matches: printed == enumerated,
        corrected_matches: corrected == enumerated,
        enumerated: enumerated.into_iter().collect(),
        printed: printed.into_iter().collect(),
        printed_symmetric_difference,
        corrected: corrected.into_iter().collect(),
    };
    if !report.printed_matches && !report.corrected_matches {
        return Err(Error::violation(
            "circle parametrization",
            format!(
                "{kind:?} at q = {q}: neither parametrization matches; printed differs at {:?}",
                report.printed_symmetric_difference
            ),
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{construct_theta, FieldSpec, TowerCtx};
    use crate::planar::{Family, PlanarFn};

    fn square(p: u32, m: u32) -> Instance {
        let t = TowerCtx::new(&FieldSpec::new(p, m), None).unwrap();
        let f = PlanarFn::new(t.ext(), Family::Square).unwrap();
        Instance::new(t, f).unwrap()
    }

    #[test]
    fn circle_sizes_and_symmetry() {
        for (p, m) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let i = square(p, m);
            let s = construct_theta(i.tower()).unwrap();
            let ext = i.tower().ext();
            for beta in i.tower().base().nonzero() {
                let c = circle(&i, &s, Elem::ZERO, beta).unwrap();
                assert_eq!(c.len() as u32, i.q() + 1);
                assert!(!c.contains(&Elem::ZERO));
                for &x in &c {
                    assert!(c.contains(&ext.neg(x)));
                }
            }
        }
    }

    #[test]
    fn unit_points_on_c01() {
        let i = square(5, 1);
        let s = construct_theta(i.tower()).unwrap();
        let b = i.tower().base();
        let c: Vec<_> = circle(&i, &s, Elem::ZERO, Elem::ONE)
            .unwrap()
            .into_iter()
            .map(|y| i.tower().decompose(y))
            .collect();
        assert!(c.contains(&(Elem::ONE, Elem::ZERO)));
        assert!(c.contains(&(b.neg(Elem::ONE), Elem::ZERO)));
    }

    #[test]
    fn q1_mod4_printed_matches() {
        let i = square(5, 1);
        let s = construct_theta(i.tower()).unwrap();
        for kind in [CircleKind::One, CircleKind::Alpha] {
            let r = parametrize_circle(&i, &s, kind).unwrap();
            assert!(r.printed_matches);
            assert_eq!(r.output().len(), 6);
        }
    }

    #[test]
    fn q3_mod4_corrected_matches() {
        for p in [3, 7, 11] {
            let i = square(p, 1);
            let s = construct_theta(i.tower()).unwrap();
            for kind in [CircleKind::One, CircleKind::Alpha] {
                let r = parametrize_circle(&i, &s, kind).unwrap();
                assert!(r.corrected_matches, "q = {p}, {kind:?}");
                assert_eq!(r.output().len() as u32, p + 1);
            }
        }
    }
}
