use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Elem, ThetaSetup};

use super::Instance;

/// Whether θ satisfies the fiber condition: θ₁f₀ - θ₀f₁ takes the value 0
/// exactly once and every other value of GF(q) exactly q+1 times.
pub fn fiber_condition_holds(inst: &Instance, setup: &ThetaSetup) -> bool {
    let q = inst.q() as usize;
    let mut counts = vec![0usize; q];
    for y in inst.tower().ext().elements() {
        counts[inst.circle_form(setup, y).index()] += 1;
    }
    counts[0] == 1 && counts[1..].iter().all(|&c| c == q + 1)
}

/// Every θ ≠ 0 in GF(q²) satisfying the fiber condition, in index order.
pub fn find_thetas(inst: &Instance) -> Vec<ThetaSetup> {
    let ext = inst.tower().ext();
    (1..ext.order())
        .into_par_iter()
        .map(|t| ThetaSetup::from_theta(inst.tower(), Elem(t)))
        .filter(|s| fiber_condition_holds(inst, s))
        .collect()
}

/// Point set and block list of U_θ.
///
/// Affine point (x, tθ) has index `x·q + t`; (∞) has index q³. Blocks are the
/// B_a in order of a, then the B_{a,b} in order of (a, b); each block is a
/// sorted list of point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitalDesign {
    pub q: u32,
    pub theta: ThetaSetup,
    pub f_id: String,
    pub normal: bool,
    offsets: Vec<u32>,
    incidences: Vec<u32>,
    num_b_a: usize,
}

impl UnitalDesign {
    pub(crate) fn from_blocks(
        q: u32,
        theta: ThetaSetup,
        f_id: String,
        normal: bool,
        offsets: Vec<u32>,
        incidences: Vec<u32>,
        num_b_a: usize,
    ) -> Self {
        UnitalDesign {
            q,
            theta,
            f_id,
            normal,
            offsets,
            incidences,
            num_b_a,
        }
    }

    pub fn num_points(&self) -> usize {
        (self.q as usize).pow(3) + 1
    }

    pub fn infinity(&self) -> u32 {
        self.q.pow(3)
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of leading blocks of the form B_a.
    pub fn num_b_a(&self) -> usize {
        self.num_b_a
    }

    pub fn block(&self, i: usize) -> &[u32] {
        &self.incidences[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn blocks(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.num_blocks()).map(|i| self.block(i))
    }

    /// (x index, t index) of an affine point.
    pub fn affine_coords(&self, pt: u32) -> (Elem, Elem) {
        (Elem(pt / self.q), Elem(pt % self.q))
    }

    pub fn point_index(&self, x: Elem, t: Elem) -> u32 {
        x.0 * self.q + t.0
    }
}

fn push_block(offsets: &mut Vec<u32>, incidences: &mut Vec<u32>, mut pts: Vec<u32>) {
    pts.sort_unstable();
    incidences.extend_from_slice(&pts);
    offsets.push(incidences.len() as u32);
}

/// Builds the blocks of U_θ without checking the design property. With the
/// fiber condition the B_{a,b} come from translated circles; otherwise every x
/// is tested against f(x+a) - b ∈ GF(q)·θ directly.
pub fn build_unital_unchecked(inst: &Instance, setup: &ThetaSetup) -> UnitalDesign {
    let tower = inst.tower();
    let (base, ext) = (tower.base(), tower.ext());
    let q = inst.q();
    let n = ext.order();
    let inf = q.pow(3);

    let beta_of = |b: Elem| {
        let (b0, b1) = tower.decompose(b);
        base.sub(base.mul(b0, setup.theta1), base.mul(b1, setup.theta0))
    };

    let mut offsets = vec![0u32];
    let mut incidences = Vec::new();
    for a in 0..n {
        let pts: Vec<u32> = (0..q).map(|t| a * q + t).chain(std::iter::once(inf)).collect();
        push_block(&mut offsets, &mut incidences, pts);
    }

    if fiber_condition_holds(inst, setup) {
        // C_{0,β} for every β; B_{a,b} = {(y - a, t(y)) : y ∈ C_{0,β(b)}}
        let mut circles: Vec<Vec<Elem>> = vec![Vec::new(); q as usize];
        for y in ext.elements() {
            circles[inst.circle_form(setup, y).index()].push(y);
        }
        let comps = inst.components();
        let use_f1 = !setup.theta1.is_zero();
        let scale = if use_f1 {
            base.inv(setup.theta1).unwrap()
        } else {
            base.inv(setup.theta0).unwrap()
        };
        for a in ext.elements() {
            for b in ext.elements() {
                let beta = beta_of(b);
                if beta.is_zero() {
                    continue;
                }
                let (b0, b1) = tower.decompose(b);
                let pts = circles[beta.index()]
                    .iter()
                    .map(|&y| {
                        let t = if use_f1 {
                            base.mul(base.sub(comps.f1(y), b1), scale)
                        } else {
                            base.mul(base.sub(comps.f0(y), b0), scale)
                        };
                        ext.sub(y, a).0 * q + t.0
                    })
                    .collect();
                push_block(&mut offsets, &mut incidences, pts);
            }
        }
    } else {
        let line = inst.theta_line(setup);
        for a in ext.elements() {
            for b in ext.elements() {
                if beta_of(b).is_zero() {
                    continue;
                }
                let pts = ext
                    .elements()
                    .filter_map(|x| {
                        let y = ext.sub(inst.f().eval(ext.add(x, a)), b);
                        line[y.index()].map(|t| x.0 * q + t.0)
                    })
                    .collect();
                push_block(&mut offsets, &mut incidences, pts);
            }
        }
    }

    UnitalDesign {
        q,
        theta: *setup,
        f_id: inst.f().id(),
        normal: inst.is_normal(),
        offsets,
        incidences,
        num_b_a: n as usize,
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PairCheck {
    Exhaustive,
    Sampled { pairs: usize, seed: u64 },
    /// Exhaustive up to 10⁴ points, otherwise 10⁶ sampled pairs.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignReport {
    pub points: usize,
    pub blocks: usize,
    pub block_size: usize,
    pub replication: usize,
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

/// Checks that the blocks form a 2-(q³+1, q+1, 1) design with q⁴ - q³ + q² blocks.
pub fn verify_design(design: &UnitalDesign, check: PairCheck) -> Result<DesignReport> {
    let q = design.q as usize;
    let npts = design.num_points();
    let expected_blocks = q.pow(4) - q.pow(3) + q.pow(2);
    if design.num_blocks() != expected_blocks {
        return Err(Error::violation(
            "block count",
            format!("{} blocks, expected {expected_blocks}", design.num_blocks()),
        ));
    }
    let mut replication = vec![0usize; npts];
    for (i, blk) in design.blocks().enumerate() {
        if blk.len() != q + 1 {
            return Err(Error::violation("block size", format!("block {i} has {} points", blk.len())));
        }
        if blk.windows(2).any(|w| w[0] >= w[1]) || *blk.last().unwrap() as usize >= npts {
            return Err(Error::violation("block points", format!("block {i} is not a sorted set of points")));
        }
        for &pt in blk {
            replication[pt as usize] += 1;
        }
    }
    if let Some(pt) = replication.iter().position(|&r| r != q * q) {
        return Err(Error::violation(
            "replication number",
            format!("point {pt} lies on {} blocks, expected {}", replication[pt], q * q),
        ));
    }

    let check = match check {
        PairCheck::Auto if npts <= 10_000 => PairCheck::Exhaustive,
        PairCheck::Auto => PairCheck::Sampled {
            pairs: 1_000_000,
            seed: 0x5eed,
        },
        c => c,
    };
    let (pairs_checked, exhaustive) = match check {
        PairCheck::Exhaustive => {
            let pair_index = |i: usize, j: usize| i * npts - i * (i + 1) / 2 + (j - i - 1);
            let mut seen = vec![0u8; npts * (npts - 1) / 2];
            for (bi, blk) in design.blocks().enumerate() {
                for (k, &i) in blk.iter().enumerate() {
                    for &j in &blk[k + 1..] {
                        let s = &mut seen[pair_index(i as usize, j as usize)];
                        if *s != 0 {
                            return Err(Error::violation(
                                "pair in exactly one block",
                                format!("points {i}, {j} appear again in block {bi}"),
                            ));
                        }
                        *s = 1;
                    }
                }
            }
            // with r = q² and k = q+1 every point meets q³ others; no repeats means all pairs are covered
            if let Some(pos) = seen.iter().position(|&s| s == 0) {
                return Err(Error::violation("pair in exactly one block", format!("pair #{pos} is uncovered")));
            }
            (seen.len(), true)
        }
        PairCheck::Sampled { pairs, seed } => {
            let mut through: Vec<Vec<u32>> = vec![Vec::with_capacity(q * q); npts];
            for (bi, blk) in design.blocks().enumerate() {
                for &pt in blk {
                    through[pt as usize].push(bi as u32);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..pairs {
                let (i, j) = loop {
                    let (i, j) = (rng.random_range(0..npts), rng.random_range(0..npts));
                    if i != j {
                        break (i, j);
                    }
                };
                let common = sorted_intersection_len(&through[i], &through[j]);
                if common != 1 {
                    return Err(Error::violation(
                        "pair in exactly one block",
                        format!("points {i}, {j} share {common} blocks"),
                    ));
                }
            }
            (pairs, false)
        }
        PairCheck::Auto => unreachable!(),
    };

    Ok(DesignReport {
        points: npts,
        blocks: design.num_blocks(),
        block_size: q + 1,
        replication: q * q,
        pairs_checked,
        exhaustive,
    })
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Builds U_θ and checks the design property.
pub fn build_unital(inst: &Instance, setup: &ThetaSetup, check: PairCheck) -> Result<UnitalDesign> {
    if !fiber_condition_holds(inst, setup) {
        return Err(Error::violation(
            "fiber condition",
            format!("theta = {} does not satisfy the fiber condition", setup.theta),
        ));
    }
    let design = build_unital_unchecked(inst, setup);
    verify_design(&design, check)?;
    Ok(design)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InPlaneReport {
    pub lines: usize,
    pub tangents: usize,
    pub secants: usize,
}

/// Every line of Π(f) meets U_θ in 1 or q+1 points, and the secant sections
/// are exactly the blocks.
pub fn verify_unital_in_plane(inst: &Instance, design: &UnitalDesign) -> Result<InPlaneReport> {
    let ext = inst.tower().ext();
    let q = inst.q() as usize;
    let n = ext.order() as usize;
    let line = inst.theta_line(&design.theta);
    let blocks: HashSet<&[u32]> = design.blocks().collect();
    let (mut tangents, mut secants) = (0usize, 0usize);

    let mut tally = |size: usize, what: &dyn Fn() -> String, section: Option<Vec<u32>>| -> Result<()> {
        match size {
            1 => tangents += 1,
            s if s == q + 1 => {
                secants += 1;
                if let Some(sec) = section
                    && !blocks.contains(sec.as_slice()) {
                        return Err(Error::violation("secant sections are blocks", what()));
                    }
            }
            s => {
                return Err(Error::violation(
                    "line meets unital in 1 or q+1 points",
                    format!("{} meets U in {s} points", what()),
                ));
            }
        }
        Ok(())
    };

    for a in ext.elements() {
        for b in ext.elements() {
            let mut sec: Vec<u32> = ext
                .elements()
                .filter_map(|x| {
                    let y = ext.sub(inst.f().eval(ext.add(x, a)), b);
                    line[y.index()].map(|t| x.0 * q as u32 + t.0)
                })
                .collect();
            sec.sort_unstable();
            tally(sec.len(), &|| format!("L_({a},{b})"), Some(sec))?;
        }
    }
    for a in ext.elements() {
        let mut sec: Vec<u32> = (0..q as u32).map(|t| a.0 * q as u32 + t).collect();
        sec.push(design.infinity());
        tally(sec.len(), &|| format!("N_{a}"), Some(sec))?;
    }
    tally(1, &|| "L_inf".into(), None)?;

    let expected_tangents = q.pow(3) + 1;
    if tangents != expected_tangents {
        return Err(Error::violation(
            "tangent count",
            format!("{tangents} tangents, expected {expected_tangents}"),
        ));
    }
    Ok(InPlaneReport {
        lines: n * n + n + 1,
        tangents,
        secants,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OvalReport {
    pub ovals: usize,
    pub oval_size: usize,
    pub max_line_intersection: usize,
    pub union_is_unital: bool,
}

/// O_{tθ} = {(x, tθ)} ∪ {(∞)} is an oval for every t, and U_θ is their union.
pub fn verify_ovals(inst: &Instance, design: &UnitalDesign) -> Result<OvalReport> {
    if !inst.is_normal() {
        return Err(Error::NotNormal(inst.f().id()));
    }
    let ext = inst.tower().ext();
    let q = inst.q() as usize;
    let line = inst.theta_line(&design.theta);
    let mut max_meet = 2; // N_a meets each oval in (a, tθ) and (∞)
    for a in ext.elements() {
        for b in ext.elements() {
            let mut hits = vec![0usize; q];
            for x in ext.elements() {
                let y = ext.sub(inst.f().eval(ext.add(x, a)), b);
                if let Some(t) = line[y.index()] {
                    hits[t.index()] += 1;
                }
            }
            if let Some(t) = hits.iter().position(|&h| h > 2) {
                return Err(Error::violation(
                    "oval meets lines in at most 2 points",
                    format!("L_({a},{b}) meets O_{t}theta in {} points", hits[t]),
                ));
            }
            max_meet = max_meet.max(hits.into_iter().max().unwrap_or(0));
        }
    }
    // ovals partition the affine points of U and share only (∞)
    let mut covered = vec![0u8; design.num_points()];
    for t in 0..q as u32 {
        for x in ext.elements() {
            covered[design.point_index(x, Elem(t)) as usize] += 1;
        }
    }
    covered[design.infinity() as usize] = 1;
    let union_is_unital = covered.iter().all(|&c| c == 1);
    if !union_is_unital {
        return Err(Error::violation("unital is a union of ovals", "point coverage mismatch"));
    }
    Ok(OvalReport {
        ovals: q,
        oval_size: ext.order() as usize + 1,
        max_line_intersection: max_meet,
        union_is_unital,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitivityReport {
    pub group_order: usize,
    pub affine_points: usize,
    pub block_images_checked: usize,
}

/// T_θ = {τ_{a, bθ}} acts regularly on the affine points and permutes blocks.
/// `sample` limits how many group elements are used for the block-image check.
pub fn verify_transitivity(
    inst: &Instance,
    design: &UnitalDesign,
    sample: Option<(usize, u64)>,
) -> Result<TransitivityReport> {
    let tower = inst.tower();
    let (base, ext) = (tower.base(), tower.ext());
    let q = inst.q();
    let theta = design.theta.theta;
    let line = inst.theta_line(&design.theta);
    let affine = q.pow(3) as usize;

    let act = |pt: u32, a: Elem, b: Elem| -> Result<u32> {
        if pt == design.infinity() {
            return Ok(pt);
        }
        let (x, t) = design.affine_coords(pt);
        let y = ext.add(ext.mul(tower.embed(t), theta), ext.mul(tower.embed(b), theta));
        let t2 = line[y.index()].ok_or_else(|| {
            Error::violation("T_theta preserves U", format!("image of point {pt} leaves U"))
        })?;
        Ok(design.point_index(ext.add(x, a), t2))
    };

    // regularity: the orbit map g ↦ g(p₀) is a bijection onto the affine points
    let mut seen = vec![false; affine];
    for a in ext.elements() {
        for b in base.elements() {
            let img = act(0, a, b)? as usize;
            if std::mem::replace(&mut seen[img], true) {
                return Err(Error::violation(
                    "T_theta acts regularly",
                    format!("two group elements send point 0 to {img}"),
                ));
            }
        }
    }

    let blocks: HashSet<&[u32]> = design.blocks().collect();
    let group: Vec<(Elem, Elem)> = match sample {
        None => ext
            .elements()
            .flat_map(|a| base.elements().map(move |b| (a, b)))
            .collect(),
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| (Elem(rng.random_range(0..ext.order())), Elem(rng.random_range(0..q))))
                .collect()
        }
    };
    let mut checked = 0usize;
    for &(a, b) in &group {
        for blk in design.blocks() {
            let mut img = blk.iter().map(|&pt| act(pt, a, b)).collect::<Result<Vec<u32>>>()?;
            img.sort_unstable();
            if !blocks.contains(img.as_slice()) {
                return Err(Error::violation(
                    "T_theta maps blocks to blocks",
                    format!("tau_({a},{b}theta) sends {blk:?} to a non-block"),
                ));
            }
            checked += 1;
        }
    }
    Ok(TransitivityReport {
        group_order: ext.order() as usize * q as usize,
        affine_points: affine,
        block_images_checked: checked,
    })
}
