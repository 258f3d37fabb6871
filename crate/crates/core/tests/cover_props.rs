use advsample::cover::{count_traces, index_for, run_dynamic_set};
use advsample::dimension::Littlestone;
use advsample::family::binomial_up_to;
use advsample::{build_family, BitSet, Element, FamilySpec, Limits, SetFamily};
use proptest::prelude::*;

fn family_and_stream() -> impl Strategy<Value = (SetFamily, Vec<Element>)> {
    (1usize..=5).prop_flat_map(|m| {
        (
            prop::collection::vec(0u32..(1 << m), 1..=12),
            prop::collection::vec(0..m as u32, 0..=8),
        )
            .prop_map(move |(masks, xs)| {
                let sets = masks
                    .into_iter()
                    .map(|mask| BitSet::from_indices(m, (0..m).filter(|i| mask >> i & 1 == 1)))
                    .collect();
                (
                    SetFamily::new(m, sets, "random").unwrap(),
                    xs.into_iter().map(Element).collect(),
                )
            })
    })
}

proptest! {
    #[test]
    fn every_set_is_traced_exactly((f, stream) in family_and_stream()) {
        let mut engine = Littlestone::new(&f).unwrap();
        let root = engine.root();
        let d = engine.ldim(root);
        for e in 0..f.len() {
            let index = index_for(&mut engine, e, &stream).unwrap();
            prop_assert!(index.len() as i32 <= d);
            let run = run_dynamic_set(&mut engine, &index, &stream).unwrap();
            let truth: Vec<usize> = (0..stream.len())
                .filter(|&t| f.sets()[e].contains(stream[t].index()))
                .collect();
            prop_assert_eq!(&run.trace, &truth);

            let mut previous = root;
            for (t, &state) in run.states.iter().enumerate() {
                prop_assert!(engine.contains_set(state, e));
                if index.contains(&t) {
                    prop_assert!(engine.ldim(state) < engine.ldim(previous));
                } else {
                    prop_assert_eq!(state, previous);
                }
                previous = state;
            }
        }
    }

    #[test]
    fn trace_count_within_binomial((f, stream) in family_and_stream()) {
        let mut engine = Littlestone::new(&f).unwrap();
        let root = engine.root();
        let d = engine.ldim(root).max(0) as u64;
        let count = count_traces(&mut engine, &stream, &Limits::default()).unwrap();
        prop_assert!(count as u128 <= binomial_up_to(stream.len() as u64, d));
        prop_assert!(count >= 1);
    }
}

#[test]
fn thresholds_on_sorted_stream() {
    let f = build_family(&FamilySpec::Thresholds { m: 7 }, 0).unwrap();
    let mut engine = Littlestone::new(&f).unwrap();
    let stream: Vec<Element> = (0..7).map(Element).collect();
    let count = count_traces(&mut engine, &stream, &Limits::default()).unwrap();
    assert!(count >= 8);
    assert!(count <= 64);
}

#[test]
fn trace_cap_is_enforced() {
    let f = build_family(&FamilySpec::Powerset { m: 6 }, 0).unwrap();
    let mut engine = Littlestone::new(&f).unwrap();
    let stream: Vec<Element> = (0..40).map(|i| Element(i % 6)).collect();
    let tight = Limits {
        max_enumeration: 1000,
        ..Limits::default()
    };
    assert!(count_traces(&mut engine, &stream, &tight).is_err());
}

/// For a fixed dynamic set and a fair-coin split of the rounds, the signed
/// count `Y = #kept - #dropped` over its trace is a sum of `m` independent
/// signs, so `P(|Y| >= s) <= 2 exp(-s^2 / (2m))`.
#[test]
fn single_dynamic_set_discrepancy_tail() {
    use advsample::rng::rng_from_seed;
    use rand::Rng;

    let f = build_family(&FamilySpec::Thresholds { m: 31 }, 0).unwrap();
    let mut engine = Littlestone::new(&f).unwrap();
    let mut rng = rng_from_seed(11);
    let stream: Vec<Element> = (0..400).map(|_| Element(rng.random_range(0..31))).collect();
    let index = index_for(&mut engine, 16, &stream).unwrap();
    let run = run_dynamic_set(&mut engine, &index, &stream).unwrap();
    let m = run.trace.len();
    assert!(m > 50);
    let trials = 20_000;
    for s in [m as f64 / 8.0, m as f64 / 5.0, m as f64 / 3.0] {
        let mut hits = 0;
        for _ in 0..trials {
            let y: i64 = run.trace.iter().map(|_| if rng.random::<bool>() { 1 } else { -1 }).sum();
            if y.abs() as f64 >= s {
                hits += 1;
            }
        }
        let bound = 2.0 * (-s * s / (2.0 * m as f64)).exp();
        assert!(hits as f64 / trials as f64 <= 2.0 * bound + 1e-3, "s={s} m={m}");
    }
}
