//! The quadratic tower GF(q) ⊂ GF(q²) with basis {1, ξ}.

use crate::error::{Error, Result};

use super::{Elem, FieldCtx, FieldSpec};

/// GF(q) and GF(q²) together with an explicit embedding and the coordinate
/// map x ↦ (x₀, x₁) for x = x₀ + x₁ξ.
#[derive(Clone, Debug)]
pub struct TowerCtx {
    base: FieldCtx,
    ext: FieldCtx,
    embed: Vec<u32>,
    project: Vec<u32>,
    decomp: Vec<(u32, u32)>,
    xi: Elem,
    alpha: Elem,
}

impl TowerCtx {
    /// Builds GF(q) from `base_spec` and GF(q²) with either the default or the
    /// given modulus. ξ = ω^((q+1)/2) for the primitive element ω of GF(q²),
    /// so ξ^q = -ξ and α = ξ² lies in GF(q).
    pub fn new(base_spec: &FieldSpec, ext_modulus: Option<Vec<u32>>) -> Result<Self> {
        let base = FieldCtx::new(base_spec)?;
        let ext_spec = FieldSpec {
            p: base.p(),
            m: 2 * base.m(),
            modulus: ext_modulus,
        };
        let ext = FieldCtx::new(&ext_spec)?;
        let q = base.order() as u64;

        // root of the base modulus in GF(q²), smallest index
        let g = base.modulus();
        let eval = |r: Elem| {
            g.iter()
                .rev()
                .fold(Elem::ZERO, |acc, &c| ext.add(ext.mul(acc, r), Elem(c)))
        };
        let root = ext
            .elements()
            .find(|&r| eval(r).is_zero())
            .ok_or_else(|| Error::violation("tower embedding", "base modulus has no root in GF(q^2)"))?;

        let mut embed = Vec::with_capacity(base.order() as usize);
        for a in base.elements() {
            let c = base.coeffs(a);
            let img = c
                .iter()
                .rev()
                .fold(Elem::ZERO, |acc, &ci| ext.add(ext.mul(acc, root), Elem(ci)));
            embed.push(img.0);
        }
        let mut project = vec![u32::MAX; ext.order() as usize];
        for (i, &e) in embed.iter().enumerate() {
            if project[e as usize] != u32::MAX {
                return Err(Error::violation("tower embedding", "embedding is not injective"));
            }
            project[e as usize] = i as u32;
        }

        let xi = ext.pow(ext.primitive(), q.div_ceil(2));
        if ext.pow(xi, q) != ext.neg(xi) {
            return Err(Error::violation("tower basis", "xi^q != -xi"));
        }
        let alpha_ext = ext.mul(xi, xi);
        let alpha = match project[alpha_ext.index()] {
            u32::MAX => return Err(Error::violation("tower basis", "xi^2 not in GF(q)")),
            a => Elem(a),
        };

        let mut decomp = vec![(u32::MAX, u32::MAX); ext.order() as usize];
        for x0 in base.elements() {
            for x1 in base.elements() {
                let x = ext.add(Elem(embed[x0.index()]), ext.mul(Elem(embed[x1.index()]), xi));
                if decomp[x.index()].0 != u32::MAX {
                    return Err(Error::violation("tower basis", "decomposition is not injective"));
                }
                decomp[x.index()] = (x0.0, x1.0);
            }
        }

        Ok(TowerCtx {
            base,
            ext,
            embed,
            project,
            decomp,
            xi,
            alpha,
        })
    }

    pub fn base(&self) -> &FieldCtx {
        &self.base
    }

    pub fn ext(&self) -> &FieldCtx {
        &self.ext
    }

    pub fn q(&self) -> u32 {
        self.base.order()
    }

    pub fn p(&self) -> u32 {
        self.base.p()
    }

    pub fn m(&self) -> u32 {
        self.base.m()
    }

    pub fn xi(&self) -> Elem {
        self.xi
    }

    /// α = ξ², an element of GF(q).
    pub fn alpha(&self) -> Elem {
        self.alpha
    }

    pub fn embed(&self, c: Elem) -> Elem {
        Elem(self.embed[c.index()])
    }

    /// Inverse of [`embed`](Self::embed) on its image.
    pub fn project(&self, x: Elem) -> Option<Elem> {
        match self.project[x.index()] {
            u32::MAX => None,
            c => Some(Elem(c)),
        }
    }

    #[inline]
    pub fn decompose(&self, x: Elem) -> (Elem, Elem) {
        let (a, b) = self.decomp[x.index()];
        (Elem(a), Elem(b))
    }

    pub fn recompose(&self, x0: Elem, x1: Elem) -> Elem {
        self.ext
            .add(self.embed(x0), self.ext.mul(self.embed(x1), self.xi))
    }

    /// Norm x^(q+1), as an element of GF(q).
    pub fn norm(&self, x: Elem) -> Elem {
        let n = self.ext.pow(x, self.q() as u64 + 1);
        self.project(n).expect("norm lies in GF(q)")
    }
}

/// The choice of θ together with its coordinates relative to the tower basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaSetup {
    pub theta: Elem,
    pub theta0: Elem,
    pub theta1: Elem,
    pub xi: Elem,
    pub alpha: Elem,
}

impl ThetaSetup {
    pub fn from_theta(tower: &TowerCtx, theta: Elem) -> Self {
        let (theta0, theta1) = tower.decompose(theta);
        ThetaSetup {
            theta,
            theta0,
            theta1,
            xi: tower.xi(),
            alpha: tower.alpha(),
        }
    }

    pub fn theta_index(&self) -> u32 {
        self.theta.0
    }
}

/// θ for f(x) = x² following the q mod 4 recipes: θ = ξ when q ≡ 1 (mod 4),
/// otherwise θ = θ₀ + ξ with θ₀ the least nonzero element such that θ₀² - α
/// is a nonsquare.
pub fn construct_theta(tower: &TowerCtx) -> Result<ThetaSetup> {
    let base = tower.base();
    let alpha = tower.alpha();
    let q = tower.q();
    let theta = if q % 4 == 1 {
        if base.quadratic_character(alpha) != -1 {
            return Err(Error::violation("theta recipe", "alpha is a square"));
        }
        tower.xi()
    } else {
        let theta0 = base
            .nonzero()
            .find(|&c| base.quadratic_character(base.sub(base.mul(c, c), alpha)) == -1)
            .ok_or_else(|| Error::violation("theta recipe", "no theta0 with theta0^2 - alpha nonsquare"))?;
        let theta = tower.ext().add(tower.embed(theta0), tower.xi());
        if tower.norm(theta) != base.sub(base.mul(theta0, theta0), alpha) {
            return Err(Error::violation("theta recipe", "theta^(q+1) != theta0^2 - alpha"));
        }
        theta
    };
    if base.quadratic_character(tower.norm(theta)) != -1 {
        return Err(Error::violation("theta recipe", "theta^(q+1) is a square"));
    }
    Ok(ThetaSetup::from_theta(tower, theta))
}
