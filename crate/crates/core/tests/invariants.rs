use std::collections::HashSet;
use std::io::{BufReader, Cursor};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unital_core::charspec::{verify_trace_criterion, Character, SpectrumEngine};
use unital_core::fields::{construct_theta, FieldSpec, TowerCtx};
use unital_core::geometry::{
    build_unital, find_thetas, read_design, verify_design, write_design, Instance, PairCheck,
};
use unital_core::gf2rank::rank2_of_unital;
use unital_core::planar::{Family, PlanarFn};

fn square(p: u32, m: u32) -> Instance {
    let tower = TowerCtx::new(&FieldSpec::new(p, m), None).unwrap();
    let f = PlanarFn::new(tower.ext(), Family::Square).unwrap();
    Instance::new(tower, f).unwrap()
}

#[test]
fn in_spectrum_agrees_with_block_scan() {
    for p in [3, 5] {
        let inst = square(p, 1);
        let setup = construct_theta(inst.tower()).unwrap();
        let d = build_unital(&inst, &setup, PairCheck::Exhaustive).unwrap();
        let eng = SpectrumEngine::new(&inst, &setup).unwrap();
        let by_blocks = eng.spectrum_by_blocks(&d);
        let fast = eng.spectrum().unwrap();
        assert_eq!(by_blocks.bitmap(), fast.bitmap(), "q = {p}");
    }

    let inst = square(3, 2);
    let setup = construct_theta(inst.tower()).unwrap();
    let d = build_unital(&inst, &setup, PairCheck::Auto).unwrap();
    let eng = SpectrumEngine::new(&inst, &setup).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let ch = Character::from_index(9, rng.random_range(0..729));
        assert_eq!(
            eng.in_spectrum(&ch).unwrap().is_some(),
            eng.in_spectrum_by_blocks(&d, &ch).is_some(),
            "{ch:?}"
        );
    }
}

#[test]
fn spectrum_size_independent_of_theta() {
    for p in [3, 5, 7] {
        let inst = square(p, 1);
        let sizes: HashSet<usize> = find_thetas(&inst)
            .iter()
            .map(|s| SpectrumEngine::new(&inst, s).unwrap().spectrum().unwrap().size)
            .collect();
        let q = p as usize;
        assert_eq!(sizes, HashSet::from([q * q * q - q + 1]), "q = {p}");
    }
}

#[test]
fn b_a_blocks_annihilated_when_w_nonzero() {
    for p in [3, 5] {
        let inst = square(p, 1);
        let setup = construct_theta(inst.tower()).unwrap();
        let d = build_unital(&inst, &setup, PairCheck::Exhaustive).unwrap();
        let eng = SpectrumEngine::new(&inst, &setup).unwrap();
        let q = inst.q() as usize;
        for k in 0..q * q * q {
            let ch = Character::from_index(inst.q(), k);
            if ch.w.is_zero() {
                continue;
            }
            for b in 0..d.num_b_a() {
                assert_eq!(eng.chi_block(&d, &ch, b), 0, "{ch:?} on B_a #{b}");
            }
        }
    }
}

#[test]
fn w_zero_slice_has_q_squared_members() {
    let inst = square(3, 2);
    let setup = construct_theta(inst.tower()).unwrap();
    let s = SpectrumEngine::new(&inst, &setup).unwrap().spectrum().unwrap();
    let w0 = (0..729)
        .map(|k| Character::from_index(9, k))
        .filter(|ch| ch.w.is_zero() && s.is_member(ch))
        .count();
    assert_eq!(w0, 81);
}

#[test]
fn trace_criterion_has_no_counterexamples() {
    for (p, m) in [(3, 1), (3, 2), (5, 1)] {
        let inst = square(p, m);
        let setup = construct_theta(inst.tower()).unwrap();
        let eng = SpectrumEngine::new(&inst, &setup).unwrap();
        let r = verify_trace_criterion(&eng).unwrap();
        assert!(r.counterexamples.is_empty(), "q = {}", inst.q());
        let q = inst.q() as usize;
        let recount = (q - 1) * (q - 1) * (1 + q / p as usize) + (q - 1);
        assert_eq!(r.trace_zero_recount, recount);
    }
}

#[test]
fn design_file_round_trip_preserves_rank() {
    let inst = square(5, 1);
    let setup = construct_theta(inst.tower()).unwrap();
    let d = build_unital(&inst, &setup, PairCheck::Auto).unwrap();
    let mut buf = Vec::new();
    write_design(&mut buf, &inst, &d).unwrap();
    let (header, back) = read_design(BufReader::new(Cursor::new(&buf)), &inst).unwrap();
    assert_eq!(header.q, 5);
    assert_eq!(back.blocks().collect::<Vec<_>>(), d.blocks().collect::<Vec<_>>());
    verify_design(&back, PairCheck::Exhaustive).unwrap();
    assert_eq!(rank2_of_unital(&back, true, false).unwrap().rank, 121);

    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let last = lines.len() - 1;
    lines[last] = "0 1 2 3 4 5";
    let broken = lines.join("\n");
    assert!(read_design(BufReader::new(Cursor::new(broken.as_bytes())), &inst)
        .and_then(|(_, d)| verify_design(&d, PairCheck::Exhaustive))
        .is_err());
}

#[test]
fn point_index_round_trip() {
    let inst = square(3, 1);
    let setup = construct_theta(inst.tower()).unwrap();
    let d = build_unital(&inst, &setup, PairCheck::Exhaustive).unwrap();
    for pt in 0..d.infinity() {
        let (x, t) = d.affine_coords(pt);
        assert_eq!(d.point_index(x, t), pt);
    }
    assert_eq!(d.infinity() as usize, d.num_points() - 1);
}
