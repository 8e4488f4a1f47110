use proptest::prelude::*;

use pooltest::ensemble::{bits_to_mask, enumerate_ensemble, mask_to_bits, PoolingGraph, SystemParams, TestFunction};
use pooltest::Error;

/// Shapes small enough to sample thousands of times, with `r | n l`.
fn shape() -> impl Strategy<Value = SystemParams> {
    (1usize..=4, 1usize..=4, 1usize..=6).prop_filter_map("r must divide n*l", |(l, k, n)| {
        let r = l * k;
        SystemParams::shape(l, r, n * k).ok()
    })
}

proptest! {
    #[test]
    fn sampled_graphs_are_biregular(params in shape(), seed in any::<u64>()) {
        let g = PoolingGraph::sample(&params, seed);
        prop_assert!(g.left_degrees().iter().all(|&d| d == params.l()));
        prop_assert!(g.right_degrees().iter().all(|&d| d == params.r()));
        let mut sorted = g.wiring().to_vec();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..params.sockets()).collect::<Vec<_>>());
    }

    #[test]
    fn or_forward_agrees_with_general_forward(params in shape(), seed in any::<u64>(), bits in any::<u64>()) {
        let g = PoolingGraph::sample(&params, seed);
        let x = mask_to_bits(u128::from(bits), params.n());
        let or = g.forward_or(&x).unwrap();
        let indices: Vec<usize> = x.iter().map(|&b| usize::from(b)).collect();
        let general = g.forward_general_indices(&TestFunction::or(params.r()).unwrap(), &indices).unwrap();
        prop_assert_eq!(or.iter().map(|&b| usize::from(b)).collect::<Vec<_>>(), general);
        let masks = g.or_masks().unwrap();
        prop_assert_eq!(mask_to_bits(masks.forward(bits_to_mask(&x)), params.m()), or);
    }

    #[test]
    fn or_forward_matches_pool_definition(params in shape(), seed in any::<u64>(), bits in any::<u64>()) {
        let g = PoolingGraph::sample(&params, seed);
        let x = mask_to_bits(u128::from(bits), params.n());
        let y = g.forward_or(&x).unwrap();
        for (j, &yj) in y.iter().enumerate() {
            prop_assert_eq!(yj, g.pool(j).iter().any(|&i| x[i]));
        }
    }

    #[test]
    fn json_round_trip(params in shape(), seed in any::<u64>()) {
        let g = PoolingGraph::sample(&params, seed);
        let text = serde_json::to_string(&g).unwrap();
        let back: PoolingGraph = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.wiring(), g.wiring());
        prop_assert_eq!((back.l(), back.r(), back.n(), back.m()), (g.l(), g.r(), g.n(), g.m()));
    }
}

#[test]
fn pools_follow_socket_convention() {
    let params = SystemParams::shape(2, 4, 4).unwrap();
    // left socket k belongs to object k / 2, right socket s to test s / 4
    let g = PoolingGraph::from_wiring(&params, vec![0, 4, 1, 5, 2, 6, 3, 7]).unwrap();
    assert_eq!(g.pool(0), &[0, 1, 2, 3]);
    assert_eq!(g.pool(1), &[0, 1, 2, 3]);
}

#[test]
fn parallel_edges_are_kept() {
    let params = SystemParams::shape(2, 2, 2).unwrap();
    let g = PoolingGraph::from_wiring(&params, vec![0, 1, 2, 3]).unwrap();
    assert_eq!(g.pool(0), &[0, 0]);
    assert_eq!(g.forward_or(&[true, false]).unwrap(), vec![true, false]);
}

#[test]
fn invalid_wirings_and_shapes_are_rejected() {
    let params = SystemParams::shape(1, 2, 4).unwrap();
    assert!(matches!(
        PoolingGraph::from_wiring(&params, vec![0, 0, 1, 2]),
        Err(Error::Input(_))
    ));
    assert!(matches!(
        PoolingGraph::from_wiring(&params, vec![0, 1, 2]),
        Err(Error::Input(_))
    ));
    assert!(matches!(SystemParams::shape(3, 6, 5), Err(Error::Config(_))));
    assert!(matches!(SystemParams::new(3, 6, 6, 1.5, 0.0), Err(Error::Config(_))));
    let g = PoolingGraph::sample(&params, 1);
    assert!(matches!(g.forward_or(&[true]), Err(Error::Input(_))));
}

#[test]
fn malformed_graph_json_is_rejected() {
    let text = r#"{"l":1,"r":2,"n":2,"wiring":[1,1]}"#;
    assert!(serde_json::from_str::<PoolingGraph>(text).is_err());
}

#[test]
fn enumeration_lists_every_wiring_once() {
    let params = SystemParams::shape(1, 2, 4).unwrap();
    let mut wirings: Vec<Vec<usize>> = enumerate_ensemble(&params)
        .unwrap()
        .map(|g| g.wiring().to_vec())
        .collect();
    assert_eq!(wirings.len(), 24);
    wirings.sort();
    wirings.dedup();
    assert_eq!(wirings.len(), 24);
    assert!(matches!(
        enumerate_ensemble(&SystemParams::shape(3, 6, 6).unwrap()),
        Err(Error::Guard(_))
    ));
}

#[test]
fn test_function_file_round_trip() {
    for f in [
        TestFunction::or(4).unwrap(),
        TestFunction::threshold(5, 2).unwrap(),
        TestFunction::max_level(3, 3).unwrap(),
    ] {
        let back = TestFunction::from_json_str(&f.to_json_string()).unwrap();
        assert_eq!(back.arity(), f.arity());
        assert_eq!(back.input_alphabet(), f.input_alphabet());
        assert_eq!(back.output_alphabet(), f.output_alphabet());
        assert!(back.entries().eq(f.entries()));
    }
}

#[test]
fn shipped_function_files_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let or = TestFunction::from_json_str(&std::fs::read_to_string(format!("{dir}/or_r6.json")).unwrap()).unwrap();
    assert!(or.entries().eq(TestFunction::or(6).unwrap().entries()));
    let t2 =
        TestFunction::from_json_str(&std::fs::read_to_string(format!("{dir}/threshold2_r6.json")).unwrap()).unwrap();
    assert!(t2.entries().eq(TestFunction::threshold(6, 2).unwrap().entries()));
    let ml =
        TestFunction::from_json_str(&std::fs::read_to_string(format!("{dir}/max_level3_r6.json")).unwrap()).unwrap();
    assert_eq!(ml.input_size(), 3);
}

#[test]
fn malformed_function_files_name_the_location() {
    let incomplete = r#"{"input_alphabet":[0,1],"output_alphabet":[0,1],"arity":2,
        "table":[{"type":[2,0],"output":0},{"type":[1,1],"output":1}]}"#;
    let bad_output = r#"{"input_alphabet":[0,1],"output_alphabet":[0,1],"arity":1,
        "table":[{"type":[1,0],"output":0},{"type":[0,1],"output":7}]}"#;
    for text in [incomplete, bad_output, "{ not json"] {
        match TestFunction::from_json_str(text) {
            Err(Error::TestFunction { location, .. }) => assert!(!location.is_empty()),
            other => panic!("expected a located error, got {other:?}"),
        }
    }
}
