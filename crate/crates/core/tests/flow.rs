use outspine::canonical_form;
use outspine::collapse_forest;
use outspine::flow::{
    bent_tree_scene, check_collapsible, check_flow, check_profile, check_smallness, collapse_flow, flow_frames,
    hausdorff_within, identity_correspondence, radial_identity_error, radial_star, straight_edge, BoxRegion,
    Correspondence, EmbeddedGraph, FlowParams, LambdaProfile, Preimage, SampleRef, SmallnessFailure, SmallnessSpec,
    TreeSpec, HAUSDORFF_SLOPE_BOUND,
};
use outspine::EdgeSet;
use proptest::prelude::*;

fn star_scene() -> outspine::flow::CollapseScene {
    check_collapsible(&radial_star(3, 4.0, 41), &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap()
}

fn big_box() -> BoxRegion {
    BoxRegion { min: [-5.0, -5.0, 0.0], max: [5.0, 5.0, 0.0] }
}

#[test]
fn profile_anchor_values() {
    let p = LambdaProfile;
    assert_eq!(p.value(1.0), 1.5);
    assert!((p.value(1.3) - 1.95).abs() < 1e-12);
    for r in [1.4, 1.5, 1.9] {
        assert_eq!(p.value(r), 2.0);
    }
    for r in [2.5, 3.0, 4.0] {
        assert_eq!(p.value(r), r);
    }
    assert!(check_profile(10_000).passed());
}

#[test]
fn lambda_t_below_one_third_is_a_blend() {
    for t in [0.05, 0.1, 0.2, 0.3] {
        let fp = FlowParams::new(t).unwrap();
        // on the linear piece λ_{1/3}(r) = 1.5 r, so λ_t(r) = (1 + 1.5 t) r
        for r in [0.2, 0.7, 1.0, 1.25] {
            assert!((fp.lambda(r) - (1.0 + 1.5 * t) * r).abs() < 1e-12);
        }
        assert!((fp.lambda(3.0) - 3.0).abs() < 1e-12);
    }
}

#[test]
fn plateau_after_one_third() {
    let fp = FlowParams::new(0.5).unwrap();
    let lo = fp.plateau_start();
    assert!((lo - 1.05).abs() < 1e-12);
    for k in 0..=20 {
        let r = lo + (1.9 - lo) * k as f64 / 20.0;
        assert_eq!(fp.lambda(r), 2.0);
        let x = [r, 0.0, 0.0];
        assert!((fp.phi(&x).unwrap()[0] - 2.0).abs() < 1e-12);
    }
    assert_eq!(fp.preimage(2.0), Preimage::Plateau(lo, 1.9));
    assert_eq!(FlowParams::new(1.0).unwrap().preimage(1.5), Preimage::Empty);
}

#[test]
fn phi_radial_identity_on_grid() {
    let (err, id) = radial_identity_error(101, 401);
    assert!(err < 1e-9, "{err}");
    assert!(id < 1e-12, "{id}");
    let fp = FlowParams::new(0.0).unwrap();
    let x = [0.3, -1.7, 2.2];
    assert_eq!(fp.phi(&x).unwrap(), x);
}

#[test]
fn g_at_origin() {
    assert_eq!(FlowParams::new(0.0).unwrap().g(0.0), 1.0);
    assert!((FlowParams::new(0.2).unwrap().g(0.0) - 1.0 / 1.3).abs() < 1e-15);
    assert_eq!(FlowParams::new(0.75).unwrap().g(0.0), 0.25);
    // continuity at the origin
    for t in [0.1, 0.5, 0.9] {
        let fp = FlowParams::new(t).unwrap();
        assert!((fp.g(1e-9) - fp.g(0.0)).abs() < 1e-6);
    }
}

proptest! {
    #[test]
    fn lambda_t_monotone_in_r(t in 0.0f64..=1.0, a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let fp = FlowParams::new(t).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fp.lambda(lo) <= fp.lambda(hi) + 1e-12);
    }

    #[test]
    fn preimage_is_unique_off_plateau(t in 0.0f64..1.0, r in 0.01f64..4.0) {
        let fp = FlowParams::new(t).unwrap();
        let rho = fp.lambda(r);
        match fp.preimage(rho) {
            Preimage::Radius(back) => prop_assert!((back - r).abs() < 1e-9, "t={} r={} back={}", t, r, back),
            Preimage::Plateau(lo, hi) => prop_assert!(rho == 2.0 && lo - 1e-12 <= r && r <= hi + 1e-12),
            Preimage::Empty => prop_assert!(false),
        }
    }
}

#[test]
fn collapsible_examples() {
    let g = EmbeddedGraph {
        dim: 2,
        vertices: vec![[0.0; 3], [4.0, 0.0, 0.0], [-2.0, 3.5, 0.0], [-2.0, -3.5, 0.0]],
        edges: (1..4).map(|k| straight_edge(0, k, [0.0; 3], [[4.0, 0.0, 0.0], [-2.0, 3.5, 0.0], [-2.0, -3.5, 0.0]][k - 1], 21)).collect(),
        leaves: vec![1, 2, 3],
    };
    assert!(check_collapsible(&g, &TreeSpec { vertices: vec![0], edges: vec![] }).is_ok());

    let mut touching = radial_star(3, 4.0, 41);
    touching.vertices[0] = [0.0, 1.0, 0.0];
    for e in &mut touching.edges {
        e.points[0] = [0.0, 1.0, 0.0];
    }
    let err = check_collapsible(&touching, &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap_err();
    assert!(err.iter().any(|v| v.clause == "tree_in_unit_ball"));

    let mut inward = radial_star(3, 4.0, 41);
    for j in 18..22 {
        let p = inward.edges[1].points[j];
        inward.edges[1].points[j] = [p[0] * 0.5, p[1] * 0.5, 0.0];
    }
    let err = check_collapsible(&inward, &TreeSpec { vertices: vec![0], edges: vec![] }).unwrap_err();
    assert!(err.iter().any(|v| v.clause == "shell_inner_product"));
}

#[test]
fn time_zero_frame_is_the_input() {
    let scene = star_scene();
    let f0 = collapse_flow(&scene, 0.0).unwrap();
    for (a, b) in f0.graph.edges.iter().zip(&scene.graph.edges) {
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((0..3).all(|i| (p[i] - q[i]).abs() < 1e-9));
        }
    }
    assert_eq!(flow_frames(&scene, 0).len(), 1);
    assert_eq!(flow_frames(&scene, 10).len(), 11);
    assert!(collapse_flow(&scene, 1.5).is_err());
}

#[test]
fn star_and_bent_scenes_pass_the_suite() {
    let report = check_flow(&star_scene(), 10);
    assert!(report.passed(), "{report:?}");
    let (g, tree) = bent_tree_scene();
    let scene = check_collapsible(&g, &tree).unwrap();
    let report = check_flow(&scene, 20);
    assert!(report.passed(), "{report:?}");
    assert!(report.hausdorff_slope <= HAUSDORFF_SLOPE_BOUND);
}

#[test]
fn endpoint_is_the_forest_collapse() {
    let (g, tree) = bent_tree_scene();
    let scene = check_collapsible(&g, &tree).unwrap();
    let end = collapse_flow(&scene, 1.0).unwrap();
    let abs = g.abstract_graph();
    let forest = tree.edges.iter().fold(EdgeSet::default(), |mut s, &e| {
        s.insert(e);
        s
    });
    let (quotient, _) = collapse_forest(&abs, forest).unwrap();
    assert_eq!(canonical_form(&end.graph.abstract_graph()).string(), canonical_form(&quotient).string());
}

#[test]
fn consecutive_frames_are_close() {
    let scene = star_scene();
    let frames = flow_frames(&scene, 40);
    for w in frames.windows(2) {
        let h = hausdorff_within(&w[0].graph, &w[1].graph, 3.0);
        assert!(h / (w[1].t - w[0].t) <= HAUSDORFF_SLOPE_BOUND, "t={} h={h}", w[0].t);
    }
}

#[test]
fn identity_is_small() {
    let g = radial_star(4, 4.0, 21);
    for eps in [1e-6, 0.1, 1.0] {
        let spec = SmallnessSpec { epsilon: eps, k: big_box(), q: None, correspondence: identity_correspondence(&g) };
        assert!(check_smallness(&g, &g, &spec).unwrap().small);
    }
    let q = BoxRegion { min: [1.0, -4.0, 0.0], max: [4.0, 4.0, 0.0] };
    let spec = SmallnessSpec { epsilon: 0.01, k: big_box(), q: Some(q), correspondence: identity_correspondence(&g) };
    let v = check_smallness(&g, &g, &spec).unwrap();
    assert!(v.small && v.derivative == Some(true));
}

#[test]
fn translation_is_small_iff_shift_below_epsilon() {
    let g = radial_star(3, 2.0, 21);
    let delta = 0.05;
    let mut moved = g.clone();
    for v in &mut moved.vertices {
        v[0] += delta;
    }
    for e in &mut moved.edges {
        for p in &mut e.points {
            p[0] += delta;
        }
    }
    for (eps, small) in [(0.1, true), (0.051, true), (0.05, false), (0.01, false)] {
        let spec = SmallnessSpec { epsilon: eps, k: big_box(), q: None, correspondence: identity_correspondence(&g) };
        let v = check_smallness(&g, &moved, &spec).unwrap();
        assert_eq!(v.small, small, "eps={eps}");
        assert!((v.max_displacement - delta).abs() < 1e-12);
        if !small {
            assert_eq!(v.failure, Some(SmallnessFailure::Pointwise));
        }
    }
}

#[test]
fn convergence_to_empty() {
    let empty = EmbeddedGraph::empty(2);
    let far = radial_star(3, 4.0, 21);
    let mut shifted = far.clone();
    for v in &mut shifted.vertices {
        v[0] += 20.0;
    }
    for e in &mut shifted.edges {
        for p in &mut e.points {
            p[0] += 20.0;
        }
    }
    let k = BoxRegion { min: [-3.0, -3.0, 0.0], max: [3.0, 3.0, 0.0] };
    let spec = SmallnessSpec { epsilon: 0.5, k, q: None, correspondence: Correspondence::default() };
    assert!(check_smallness(&empty, &shifted, &spec).unwrap().small);
    let v = check_smallness(&empty, &far, &spec).unwrap();
    assert!(!v.small);
    assert_eq!(v.failure, Some(SmallnessFailure::Containment));
}

#[test]
fn missing_derivative_neighbours_are_reported() {
    let g = radial_star(3, 4.0, 21);
    let mut corr = identity_correspondence(&g);
    corr.pairs.retain(|(a, _)| *a != SampleRef::Edge { edge: 0, index: 10 });
    let q = BoxRegion { min: [-4.0, -4.0, 0.0], max: [4.0, 4.0, 0.0] };
    let spec = SmallnessSpec { epsilon: 0.1, k: big_box(), q: Some(q), correspondence: corr };
    let v = check_smallness(&g, &g, &spec).unwrap();
    assert_eq!(v.failure, Some(SmallnessFailure::UndefinedCorrespondence));
}

#[test]
fn malformed_correspondence_is_an_error() {
    let g = radial_star(3, 4.0, 21);
    let corr = Correspondence { pairs: vec![(SampleRef::Edge { edge: 9, index: 1 }, SampleRef::Vertex { vertex: 0 })] };
    let spec = SmallnessSpec { epsilon: 0.1, k: big_box(), q: None, correspondence: corr };
    assert!(check_smallness(&g, &g, &spec).is_err());
}
