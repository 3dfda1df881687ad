use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{Elem, FieldCtx};
use crate::planar::PlanarFn;

use super::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanePoint {
    Affine(Elem, Elem),
    /// (a) for a in the field.
    Infinite(Elem),
    /// (∞).
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneLine {
    /// L_{a,b} = {(x, f(x+a) - b)} ∪ {(a)}.
    Graph(Elem, Elem),
    /// N_a = {(a, y)} ∪ {(∞)}.
    Vertical(Elem),
    /// L_∞.
    AtInfinity,
}

/// Incidence structure of Π(f) over GF(q²).
pub struct ShiftPlane<'a> {
    field: &'a FieldCtx,
    f: &'a PlanarFn,
}

impl<'a> ShiftPlane<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        ShiftPlane {
            field: inst.tower().ext(),
            f: inst.f(),
        }
    }

    /// Number of points (and of lines): n² + n + 1 for n = q².
    pub fn size(&self) -> usize {
        let n = self.field.order() as usize;
        n * n + n + 1
    }

    pub fn point(&self, idx: usize) -> PlanePoint {
        let n = self.field.order() as usize;
        if idx < n * n {
            PlanePoint::Affine(Elem((idx / n) as u32), Elem((idx % n) as u32))
        } else if idx < n * n + n {
            PlanePoint::Infinite(Elem((idx - n * n) as u32))
        } else {
            PlanePoint::Infinity
        }
    }

    pub fn line(&self, idx: usize) -> PlaneLine {
        let n = self.field.order() as usize;
        if idx < n * n {
            PlaneLine::Graph(Elem((idx / n) as u32), Elem((idx % n) as u32))
        } else if idx < n * n + n {
            PlaneLine::Vertical(Elem((idx - n * n) as u32))
        } else {
            PlaneLine::AtInfinity
        }
    }

    pub fn contains(&self, line: PlaneLine, pt: PlanePoint) -> bool {
        let fl = self.field;
        match (line, pt) {
            (PlaneLine::Graph(a, b), PlanePoint::Affine(x, y)) => {
                y == fl.sub(self.f.eval(fl.add(x, a)), b)
            }
            (PlaneLine::Graph(a, _), PlanePoint::Infinite(c)) => a == c,
            (PlaneLine::Graph(..), PlanePoint::Infinity) => false,
            (PlaneLine::Vertical(a), PlanePoint::Affine(x, _)) => a == x,
            (PlaneLine::Vertical(_), PlanePoint::Infinite(_)) => false,
            (PlaneLine::Vertical(_), PlanePoint::Infinity) => true,
            (PlaneLine::AtInfinity, PlanePoint::Affine(..)) => false,
            (PlaneLine::AtInfinity, _) => true,
        }
    }

    pub fn points_on(&self, line: PlaneLine) -> Vec<PlanePoint> {
        let fl = self.field;
        match line {
            PlaneLine::Graph(a, b) => fl
                .elements()
                .map(|x| PlanePoint::Affine(x, fl.sub(self.f.eval(fl.add(x, a)), b)))
                .chain(std::iter::once(PlanePoint::Infinite(a)))
                .collect(),
            PlaneLine::Vertical(a) => fl
                .elements()
                .map(|y| PlanePoint::Affine(a, y))
                .chain(std::iter::once(PlanePoint::Infinity))
                .collect(),
            PlaneLine::AtInfinity => fl
                .elements()
                .map(PlanePoint::Infinite)
                .chain(std::iter::once(PlanePoint::Infinity))
                .collect(),
        }
    }

    pub fn lines_through(&self, pt: PlanePoint) -> Vec<PlaneLine> {
        let fl = self.field;
        match pt {
            PlanePoint::Affine(x, y) => fl
                .elements()
                .map(|a| PlaneLine::Graph(a, fl.sub(self.f.eval(fl.add(x, a)), y)))
                .chain(std::iter::once(PlaneLine::Vertical(x)))
                .collect(),
            PlanePoint::Infinite(a) => fl
                .elements()
                .map(|b| PlaneLine::Graph(a, b))
                .chain(std::iter::once(PlaneLine::AtInfinity))
                .collect(),
            PlanePoint::Infinity => fl
                .elements()
                .map(PlaneLine::Vertical)
                .chain(std::iter::once(PlaneLine::AtInfinity))
                .collect(),
        }
    }

    /// Image under the shift τ_{u,v}: (x, y) ↦ (x+u, y+v), (a) ↦ (a-u), (∞) fixed.
    pub fn shift(&self, pt: PlanePoint, u: Elem, v: Elem) -> PlanePoint {
        match pt {
            PlanePoint::Affine(x, y) => PlanePoint::Affine(self.field.add(x, u), self.field.add(y, v)),
            PlanePoint::Infinite(a) => PlanePoint::Infinite(self.field.sub(a, u)),
            PlanePoint::Infinity => PlanePoint::Infinity,
        }
    }

    fn joining_lines(&self, p1: PlanePoint, p2: PlanePoint) -> Vec<PlaneLine> {
        self.lines_through(p1)
            .into_iter()
            .filter(|&l| self.contains(l, p2))
            .collect()
    }

    fn check_point_pair(&self, i: usize, j: usize) -> Result<()> {
        let (p1, p2) = (self.point(i), self.point(j));
        let n = self.joining_lines(p1, p2).len();
        if n != 1 {
            return Err(Error::violation(
                "two points span one line",
                format!("{p1:?} and {p2:?} lie on {n} common lines"),
            ));
        }
        Ok(())
    }

    fn check_line_pair(&self, i: usize, j: usize) -> Result<()> {
        let (l1, l2) = (self.line(i), self.line(j));
        let n = self.points_on(l1).into_iter().filter(|&p| self.contains(l2, p)).count();
        if n != 1 {
            return Err(Error::violation(
                "two lines meet in one point",
                format!("{l1:?} and {l2:?} share {n} points"),
            ));
        }
        Ok(())
    }

    fn check_shift(&self, u: Elem, v: Elem, line_idx: usize) -> Result<()> {
        let line = self.line(line_idx);
        let img: Vec<PlanePoint> = self.points_on(line).into_iter().map(|p| self.shift(p, u, v)).collect();
        let target = self.joining_lines(img[0], img[1]);
        let ok = target.len() == 1 && img.iter().all(|&p| self.contains(target[0], p));
        if !ok {
            return Err(Error::violation(
                "shifts are collineations",
                format!("tau_({u},{v}) does not map {line:?} onto a line"),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PlaneCheck {
    Exhaustive,
    Sampled { pairs: usize, shifts: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneReport {
    pub order: u32,
    pub points: usize,
    pub lines: usize,
    pub point_pairs_checked: usize,
    pub line_pairs_checked: usize,
    pub shift_images_checked: usize,
}

/// Checks the projective-plane axioms of Π(f) and that the shifts τ_{u,v}
/// permute its lines.
pub fn verify_plane(inst: &Instance, mode: PlaneCheck) -> Result<PlaneReport> {
    let plane = ShiftPlane::new(inst);
    let size = plane.size();
    let n = inst.tower().ext().order();
    for l in 0..size {
        let k = plane.points_on(plane.line(l)).len();
        if k != n as usize + 1 {
            return Err(Error::violation("line size", format!("{:?} has {k} points", plane.line(l))));
        }
    }
    let mut report = PlaneReport {
        order: n,
        points: size,
        lines: size,
        point_pairs_checked: 0,
        line_pairs_checked: 0,
        shift_images_checked: 0,
    };
    match mode {
        PlaneCheck::Exhaustive => {
            for i in 0..size {
                for j in i + 1..size {
                    plane.check_point_pair(i, j)?;
                    plane.check_line_pair(i, j)?;
                }
            }
            report.point_pairs_checked = size * (size - 1) / 2;
            report.line_pairs_checked = report.point_pairs_checked;
            for u in 0..n {
                for v in 0..n {
                    for l in 0..size {
                        plane.check_shift(Elem(u), Elem(v), l)?;
                    }
                }
            }
            report.shift_images_checked = (n as usize).pow(2) * size;
        }
        PlaneCheck::Sampled { pairs, shifts, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draw_pair = |rng: &mut ChaCha8Rng| loop {
                let (i, j) = (rng.random_range(0..size), rng.random_range(0..size));
                if i != j {
                    break (i, j);
                }
            };
            for _ in 0..pairs {
                let (i, j) = draw_pair(&mut rng);
                plane.check_point_pair(i, j)?;
                let (i, j) = draw_pair(&mut rng);
                plane.check_line_pair(i, j)?;
            }
            report.point_pairs_checked = pairs;
            report.line_pairs_checked = pairs;
            for _ in 0..shifts {
                let (u, v) = (Elem(rng.random_range(0..n)), Elem(rng.random_range(0..n)));
                plane.check_shift(u, v, rng.random_range(0..size))?;
            }
            report.shift_images_checked = shifts;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldSpec, TowerCtx};
    use crate::planar::Family;

    fn inst(p: u32, m: u32, fam: Family) -> Result<Instance> {
        let t = TowerCtx::new(&FieldSpec::new(p, m), None).unwrap();
        let f = PlanarFn::new(t.ext(), fam).unwrap();
        Instance::new(t, f)
    }

    #[test]
    fn desarguesian_plane_order_9() {
        let i = inst(3, 1, Family::Square).unwrap();
        let r = verify_plane(&i, PlaneCheck::Exhaustive).unwrap();
        assert_eq!((r.points, r.lines), (91, 91));
    }

    #[test]
    fn non_planar_rejected() {
        assert!(matches!(inst(3, 1, Family::Power { d: 3 }), Err(Error::NotPlanar { .. })));
    }

    #[test]
    fn cm_plane_sampled() {
        let i = inst(3, 2, Family::CoulterMatthews { k: 3 }).unwrap();
        let r = verify_plane(
            &i,
            PlaneCheck::Sampled {
                pairs: 100_000,
                shifts: 2_000,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(r.points, 81 * 81 + 82);
    }
}
