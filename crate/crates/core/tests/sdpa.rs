use proptest::prelude::*;
use randcert::solver::{
    export_sdpa, import_sdpa, BlockKind, ConicProgram, Entry, ProgramBuilder, Sense,
};

fn toy() -> ConicProgram {
    let mut b = ProgramBuilder::new(Sense::Maximize);
    let k = b.add_block(BlockKind::Psd(2));
    b.add_constraint(vec![Entry::new(k, 0, 0, 1.0)], 1.0);
    b.add_constraint(vec![Entry::new(k, 1, 1, 1.0)], 0.5);
    b.add_objective([Entry::element(k, 0, 1, 1.0), Entry::new(k, 1, 1, 1.0 / 3.0)]);
    b.build().unwrap()
}

#[test]
fn toy_matches_golden_file() {
    let golden = include_str!("data/toy.dat-s");
    assert_eq!(export_sdpa(&toy()), golden);
    assert_eq!(import_sdpa(golden).unwrap(), toy());
}

#[test]
fn minimize_sense_survives() {
    let mut b = ProgramBuilder::new(Sense::Minimize);
    let k = b.add_block(BlockKind::Nonneg(2));
    b.add_constraint(
        vec![Entry::new(k, 0, 0, 1.0), Entry::new(k, 1, 1, 1.0)],
        1.0,
    );
    b.add_objective([Entry::new(k, 0, 0, 2.0)]);
    let p = b.build().unwrap();
    let text = export_sdpa(&p);
    assert!(text.contains("0 1 1 1 -2.0000000000000000e0"));
    assert_eq!(import_sdpa(&text).unwrap(), p);
}

fn arb_program() -> impl Strategy<Value = ConicProgram> {
    let blocks = prop::collection::vec((any::<bool>(), 1usize..5), 1..4);
    (blocks, any::<bool>(), 0usize..6).prop_flat_map(|(blocks, maximize, m)| {
        let kinds: Vec<BlockKind> = blocks
            .iter()
            .map(|&(psd, n)| {
                if psd {
                    BlockKind::Psd(n)
                } else {
                    BlockKind::Nonneg(n)
                }
            })
            .collect();
        let nb = kinds.len();
        let entry = (0..nb, 0usize..5, 0usize..5, -1e3f64..1e3);
        let row = (prop::collection::vec(entry.clone(), 0..6), -10f64..10.0);
        (
            Just(kinds),
            Just(maximize),
            prop::collection::vec(row, m),
            prop::collection::vec(entry, 0..6),
        )
            .prop_map(|(kinds, maximize, rows, obj)| {
                let fit = |(blk, r, c, v): (usize, usize, usize, f64)| {
                    let n = kinds[blk].size();
                    let (r, c) = (r % n, c % n);
                    match kinds[blk] {
                        BlockKind::Psd(_) => Entry::new(blk, r, c, v),
                        BlockKind::Nonneg(_) => Entry::new(blk, r, r, v),
                    }
                };
                let mut b = ProgramBuilder::new(if maximize {
                    Sense::Maximize
                } else {
                    Sense::Minimize
                });
                for &k in &kinds {
                    b.add_block(k);
                }
                for (entries, rhs) in rows {
                    b.add_constraint(entries.into_iter().map(fit).collect(), rhs);
                }
                b.add_objective(obj.into_iter().map(fit));
                b.build().unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]
    #[test]
    fn round_trip_is_identity(p in arb_program()) {
        prop_assert_eq!(import_sdpa(&export_sdpa(&p)).unwrap(), p);
    }
}
