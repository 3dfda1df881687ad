//! The shift plane Π(f), the unitals U_θ inside it, and the circles that
//! shadow their blocks.

mod circles;
mod design_file;
mod plane;
mod unital;

pub use circles::{circle, parametrize_circle, CircleKind, CircleParamReport};
pub use design_file::{read_design, write_design, DesignHeader};
pub use plane::{verify_plane, PlaneCheck, PlaneLine, PlanePoint, PlaneReport, ShiftPlane};
pub use unital::{
    build_unital, build_unital_unchecked, fiber_condition_holds, find_thetas, verify_design,
    verify_ovals, verify_transitivity, verify_unital_in_plane, DesignReport, InPlaneReport,
    OvalReport, PairCheck, TransitivityReport, UnitalDesign,
};

use crate::error::{Error, Result};
use crate::fields::{Elem, ThetaSetup, TowerCtx};
use crate::planar::{ComponentPair, Family, PlanarFn};

/// A planar function on GF(q²) bound to its tower, with the component tables
/// precomputed. Construction rejects non-planar functions.
#[derive(Clone, Debug)]
pub struct Instance {
    tower: TowerCtx,
    f: PlanarFn,
    comps: ComponentPair,
    normal: bool,
}

impl Instance {
    pub fn new(tower: TowerCtx, f: PlanarFn) -> Result<Self> {
        if let Some(a) = f.planarity_witness(tower.ext()) {
            return Err(Error::NotPlanar {
                name: f.id(),
                witness: a.0,
            });
        }
        let comps = f.components(&tower);
        let normal = f.is_normal(tower.ext());
        Ok(Instance {
            tower,
            f,
            comps,
            normal,
        })
    }

    pub fn tower(&self) -> &TowerCtx {
        &self.tower
    }

    pub fn f(&self) -> &PlanarFn {
        &self.f
    }

    pub fn components(&self) -> &ComponentPair {
        &self.comps
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn is_square(&self) -> bool {
        matches!(self.f.family(), Family::Square)
    }

    pub fn q(&self) -> u32 {
        self.tower.q()
    }

    /// θ₁f₀(y) - θ₀f₁(y), the quantity whose level sets are the circles C_{0,β}.
    #[inline]
    pub fn circle_form(&self, setup: &ThetaSetup, y: Elem) -> Elem {
        let b = self.tower.base();
        b.sub(
            b.mul(setup.theta1, self.comps.f0(y)),
            b.mul(setup.theta0, self.comps.f1(y)),
        )
    }

    /// For each y in GF(q²): `Some(t)` when y = tθ with t in GF(q).
    pub fn theta_line(&self, setup: &ThetaSetup) -> Vec<Option<Elem>> {
        let ext = self.tower.ext();
        let mut out = vec![None; ext.order() as usize];
        for t in self.tower.base().elements() {
            out[ext.mul(self.tower.embed(t), setup.theta).index()] = Some(t);
        }
        out
    }
}
