use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fields::{Elem, ThetaSetup};

use super::{Instance, UnitalDesign};

/// First three lines of a design file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignHeader {
    pub p: u32,
    pub m: u32,
    pub q: u32,
    pub f: String,
    pub theta_index: u32,
    /// Modulus of GF(q²), low-degree coefficient first.
    pub modulus: String,
    pub base_modulus: String,
    pub points: usize,
    pub blocks: usize,
}

impl DesignHeader {
    pub fn for_design(inst: &Instance, design: &UnitalDesign) -> Self {
        let t = inst.tower();
        DesignHeader {
            p: t.p(),
            m: t.m(),
            q: t.q(),
            f: design.f_id.clone(),
            theta_index: design.theta.theta_index(),
            modulus: t.ext().modulus_string(),
            base_modulus: t.base().modulus_string(),
            points: design.num_points(),
            blocks: design.num_blocks(),
        }
    }
}

pub fn write_design<W: Write>(mut w: W, inst: &Instance, design: &UnitalDesign) -> Result<()> {
    let h = DesignHeader::for_design(inst, design);
    writeln!(w, "UNITAL v1")?;
    writeln!(
        w,
        "p={} m={} q={} f={} theta_index={} modulus={} base_modulus={}",
        h.p, h.m, h.q, h.f, h.theta_index, h.modulus, h.base_modulus
    )?;
    writeln!(w, "points={} blocks={}", h.points, h.blocks)?;
    let mut line = String::new();
    for blk in design.blocks() {
        line.clear();
        for (k, pt) in blk.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&pt.to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn kv<'a>(line_no: usize, text: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != keys.len() {
        return Err(parse_err(line_no, format!("expected {} fields", keys.len())));
    }
    fields
        .iter()
        .zip(keys)
        .map(|(f, k)| {
            f.strip_prefix(k)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| parse_err(line_no, format!("expected key {k}")))
        })
        .collect()
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, format!("bad number {s:?}")))
}

/// Reads a design file written for `inst`. The header must match the
/// instance's field, moduli and function.
pub fn read_design<R: BufRead>(r: R, inst: &Instance) -> Result<(DesignHeader, UnitalDesign)> {
    let mut lines = r.lines();
    let mut next = |n: usize| -> Result<String> {
        lines.next().ok_or_else(|| parse_err(n, "unexpected end of file"))?.map_err(Error::from)
    };
    if next(1)?.trim() != "UNITAL v1" {
        return Err(parse_err(1, "missing UNITAL v1 magic"));
    }
    let l2 = next(2)?;
    let v = kv(2, &l2, &["p", "m", "q", "f", "theta_index", "modulus", "base_modulus"])?;
    let l3 = next(3)?;
    let c = kv(3, &l3, &["points", "blocks"])?;
    let header = DesignHeader {
        p: num(2, v[0])?,
        m: num(2, v[1])?,
        q: num(2, v[2])?,
        f: v[3].to_string(),
        theta_index: num(2, v[4])?,
        modulus: v[5].to_string(),
        base_modulus: v[6].to_string(),
        points: num(3, c[0])?,
        blocks: num(3, c[1])?,
    };

    let t = inst.tower();
    let expected = (t.p(), t.m(), t.q(), inst.f().id(), t.ext().modulus_string(), t.base().modulus_string());
    let got = (
        header.p,
        header.m,
        header.q,
        header.f.clone(),
        header.modulus.clone(),
        header.base_modulus.clone(),
    );
    if expected != got {
        return Err(parse_err(2, format!("header {got:?} does not match instance {expected:?}")));
    }
    if header.theta_index == 0 || header.theta_index >= t.ext().order() {
        return Err(parse_err(2, "theta_index out of range"));
    }
    let npts = (t.q() as usize).pow(3) + 1;
    if header.points != npts {
        return Err(parse_err(3, format!("points={} but q^3+1 = {npts}", header.points)));
    }

    let mut offsets = Vec::with_capacity(header.blocks + 1);
    offsets.push(0u32);
    let mut incidences = Vec::with_capacity(header.blocks * (t.q() as usize + 1));
    for k in 0..header.blocks {
        let n = k + 4;
        let line = next(n)?;
        for tok in line.split_whitespace() {
            let pt: u32 = num(n, tok)?;
            if pt as usize >= npts {
                return Err(parse_err(n, format!("point {pt} out of range")));
            }
            incidences.push(pt);
        }
        offsets.push(incidences.len() as u32);
    }
    if let Some(extra) = lines.next()
        && !extra?.trim().is_empty() {
            return Err(parse_err(header.blocks + 4, "trailing data after last block"));
        }

    let design = UnitalDesign::from_blocks(
        t.q(),
        ThetaSetup::from_theta(t, Elem(header.theta_index)),
        header.f.clone(),
        inst.is_normal(),
        offsets,
        incidences,
        t.ext().order() as usize,
    );
    Ok((header, design))
}
