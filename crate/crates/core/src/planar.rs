//! Planar functions on GF(q²): the registry, planarity and normality checks,
//! and the coordinate components f = f₀ + f₁ξ.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Elem, FieldCtx, TowerCtx};

/// One term a·x^(p^i + p^j) of a Dembowski–Ostrom polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DoTerm {
    pub i: u32,
    pub j: u32,
    pub coeff: Elem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Square,
    /// x^((3^k + 1)/2) on GF(3^e).
    CoulterMatthews { k: u32 },
    DembowskiOstrom { name: String, terms: Vec<DoTerm> },
    /// Plain power map x^d; used for negative tests and ad hoc exploration.
    Power { d: u64 },
    /// Arbitrary tabulated map.
    Table { name: String },
}

impl Family {
    /// Short identifier used in file headers and cache paths.
    pub fn id(&self) -> String {
        match self {
            Family::Square => "square".into(),
            Family::CoulterMatthews { k } => format!("cm{k}"),
            Family::DembowskiOstrom { name, .. } => format!("do-{name}"),
            Family::Power { d } => format!("pow{d}"),
            Family::Table { name } => format!("table-{name}"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// A map GF(q²) → GF(q²), tabulated over element indices.
#[derive(Clone, Debug)]
pub struct PlanarFn {
    family: Family,
    table: Vec<u32>,
}

/// f₀ and f₁ tabulated over GF(q²), values in GF(q).
#[derive(Clone, Debug)]
pub struct ComponentPair {
    pub f0: Vec<u32>,
    pub f1: Vec<u32>,
}

impl ComponentPair {
    #[inline]
    pub fn f0(&self, x: Elem) -> Elem {
        Elem(self.f0[x.index()])
    }

    #[inline]
    pub fn f1(&self, x: Elem) -> Elem {
        Elem(self.f1[x.index()])
    }
}

fn power_table(field: &FieldCtx, d: u64) -> Vec<u32> {
    field.elements().map(|x| field.pow(x, d).0).collect()
}

impl PlanarFn {
    pub fn new(field: &FieldCtx, family: Family) -> Result<Self> {
        let table = match &family {
            Family::Square => power_table(field, 2),
            Family::CoulterMatthews { k } => {
                if field.p() != 3 {
                    return Err(Error::InvalidArgument(
                        "Coulter-Matthews functions live in characteristic 3".into(),
                    ));
                }
                power_table(field, 3u64.pow(*k).div_ceil(2))
            }
            Family::Power { d } => power_table(field, *d),
            Family::DembowskiOstrom { terms, .. } => {
                let p = field.p() as u64;
                field
                    .elements()
                    .map(|x| {
                        field
                            .sum(terms.iter().map(|t| {
                                let e = p.pow(t.i) + p.pow(t.j);
                                field.mul(t.coeff, field.pow(x, e))
                            }))
                            .0
                    })
                    .collect()
            }
            Family::Table { .. } => {
                return Err(Error::InvalidArgument(
                    "tabulated maps are built with PlanarFn::from_table".into(),
                ));
            }
        };
        Ok(PlanarFn { family, table })
    }

    pub fn from_table(field: &FieldCtx, name: &str, table: Vec<u32>) -> Result<Self> {
        if table.len() != field.order() as usize || table.iter().any(|&v| v >= field.order()) {
            return Err(Error::InvalidArgument(format!(
                "table must list {} values in range",
                field.order()
            )));
        }
        Ok(PlanarFn {
            family: Family::Table { name: name.into() },
            table,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn id(&self) -> String {
        self.family.id()
    }

    #[inline]
    pub fn eval(&self, x: Elem) -> Elem {
        Elem(self.table[x.index()])
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// Some a ≠ 0 whose difference map x ↦ f(x+a) - f(x) is not a bijection.
    pub fn planarity_witness(&self, field: &FieldCtx) -> Option<Elem> {
        let n = field.order();
        (1..n).into_par_iter().find_first(|&a| {
            let a = Elem(a);
            let mut hit = vec![false; n as usize];
            field.elements().any(|x| {
                let d = field.sub(self.eval(field.add(x, a)), self.eval(x));
                std::mem::replace(&mut hit[d.index()], true)
            })
        })
        .map(Elem)
    }

    pub fn is_planar(&self, field: &FieldCtx) -> bool {
        self.planarity_witness(field).is_none()
    }

    /// Planarity on a sample of difference maps only.
    pub fn is_planar_sampled(&self, field: &FieldCtx, shifts: impl IntoIterator<Item = Elem>) -> bool {
        let n = field.order() as usize;
        shifts.into_iter().filter(|a| !a.is_zero()).all(|a| {
            let mut hit = vec![false; n];
            field.elements().all(|x| {
                let d = field.sub(self.eval(field.add(x, a)), self.eval(x));
                !std::mem::replace(&mut hit[d.index()], true)
            })
        })
    }

    /// f(0) = 0 and f(a) = f(b) exactly when a = ±b.
    pub fn is_normal(&self, field: &FieldCtx) -> bool {
        if !self.eval(Elem::ZERO).is_zero() {
            return false;
        }
        let n = field.order() as usize;
        let mut fiber: Vec<Vec<Elem>> = vec![Vec::new(); n];
        for x in field.elements() {
            fiber[self.eval(x).index()].push(x);
        }
        fiber.iter().all(|ys| match ys.as_slice() {
            [] => true,
            [x] => x.is_zero(),
            [x, y] => !x.is_zero() && field.neg(*x) == *y,
            _ => false,
        })
    }

    pub fn components(&self, tower: &TowerCtx) -> ComponentPair {
        let (f0, f1) = tower
            .ext()
            .elements()
            .map(|x| {
                let (a, b) = tower.decompose(self.eval(x));
                (a.0, b.0)
            })
            .unzip();
        ComponentPair { f0, f1 }
    }
}

/// Parses a Dembowski–Ostrom coefficient table: one `i j a_ij_index` per line,
/// `#` starts a comment.
pub fn parse_do_table(text: &str, field: &FieldCtx) -> Result<Vec<DoTerm>> {
    let mut terms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let nums: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let [i, j, a] = nums[..] else {
            return Err(parse_err(format!("expected `i j a_ij_index`, got {line:?}")));
        };
        if a >= field.order() {
            return Err(parse_err(format!("coefficient index {a} outside GF({})", field.order())));
        }
        if i >= field.m() || j >= field.m() {
            return Err(parse_err(format!("exponent indices must be below {}", field.m())));
        }
        terms.push(DoTerm { i, j, coeff: Elem(a) });
    }
    if terms.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty Dembowski-Ostrom table".into(),
        });
    }
    Ok(terms)
}

/// Builds and validates a user-supplied Dembowski–Ostrom function.
pub fn register_do_table(field: &FieldCtx, name: &str, text: &str) -> Result<PlanarFn> {
    let terms = parse_do_table(text, field)?;
    let f = PlanarFn::new(
        field,
        Family::DembowskiOstrom {
            name: name.into(),
            terms,
        },
    )?;
    match f.planarity_witness(field) {
        Some(a) => Err(Error::NotPlanar {
            name: f.id(),
            witness: a.0,
        }),
        None => Ok(f),
    }
}

/// Admissible Coulter–Matthews parameters on GF(3^e): 1 < k < e with gcd(k, 2e) = 1.
/// (k = 1 gives x² again.)
pub fn coulter_matthews_params(e: u32) -> Vec<u32> {
    (2..e).filter(|&k| gcd(k, 2 * e) == 1).collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Built-in planar functions on GF(q²), each re-verified for planarity.
pub fn registry_list(tower: &TowerCtx) -> Result<Vec<PlanarFn>> {
    let ext = tower.ext();
    let mut out = vec![PlanarFn::new(ext, Family::Square)?];
    if ext.p() == 3 {
        for k in coulter_matthews_params(ext.m()) {
            out.push(PlanarFn::new(ext, Family::CoulterMatthews { k })?);
        }
    }
    for f in &out {
        if let Some(a) = f.planarity_witness(ext) {
            return Err(Error::NotPlanar {
                name: f.id(),
                witness: a.0,
            });
        }
    }
    Ok(out)
}
