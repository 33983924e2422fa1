use super::*;
use crate::Error;

fn unit_disk_one_inclusion(h: f64) -> Mesh {
    generate_mesh(&GeometrySpec::new(
        Shape::disk(0.0, 0.0, 1.0),
        vec![Shape::disk(0.0, 0.0, 0.25)],
        h,
    ))
    .unwrap()
}

#[test]
fn square_without_inclusions() {
    let mesh = generate_mesh(&GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![], 0.5)).unwrap();
    assert!(mesh.num_triangles() >= 8);
    assert!(mesh.triangles.iter().all(|t| t.tag == 0));
    assert!((mesh.total_area() - 1.0).abs() <= 10.0 * f64::EPSILON * mesh.num_triangles() as f64);
}

#[test]
fn disk_with_centered_inclusion() {
    let mesh = unit_disk_one_inclusion(0.1);
    assert_eq!(mesh.distinct_tags(), 2);
    let loop_nodes = mesh.interface_nodes(1);
    assert!(!loop_nodes.is_empty());
    for n in loop_nodes {
        let p = mesh.nodes[n];
        assert!((p[0].hypot(p[1]) - 0.25).abs() < 1e-14, "interface vertex off the circle");
    }
    let pi = std::f64::consts::PI;
    assert!((mesh.total_area() - pi).abs() < 0.02 * pi);
}

#[test]
fn thirty_six_inclusion_area() {
    let spec = GeometrySpec::unit_disk_lattice(36, 0.07, 0.27, 0.02);
    let mesh = generate_mesh(&spec).unwrap();
    assert_eq!(mesh.distinct_tags(), 37);
    let inclusion_area: f64 = (1..=36).map(|m| mesh.tag_area(m)).sum();
    let exact = 36.0 * std::f64::consts::PI * 0.07 * 0.07;
    assert!((inclusion_area - exact).abs() < 0.05 * exact, "{inclusion_area} vs {exact}");
}

#[test]
fn polygon_inclusion_is_resolved_exactly() {
    let tri = Shape::polygon(vec![[0.3, 0.3], [0.72, 0.35], [0.41, 0.77]]);
    let spec = GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![tri.clone()], 1.0 / 32.0);
    let mesh = generate_mesh(&spec).unwrap();
    assert!((mesh.tag_area(1) - tri.area()).abs() < 1e-12, "{} vs {}", mesh.tag_area(1), tri.area());
    assert!((mesh.total_area() - 1.0).abs() < 1e-12);
}

#[test]
fn coarse_mesh_is_a_resolution_error() {
    let spec = GeometrySpec::new(Shape::rectangle(0.0, 0.0, 4.0, 4.0), vec![Shape::disk(2.0, 2.0, 0.05)], 0.5);
    assert!(matches!(generate_mesh(&spec), Err(Error::Resolution(_))));
}

#[test]
fn boundary_touching_inclusion_is_a_geometry_error() {
    let spec = GeometrySpec::new(Shape::disk(0.0, 0.0, 1.0), vec![Shape::disk(0.8, 0.0, 0.2)], 0.05);
    assert!(matches!(generate_mesh(&spec), Err(Error::Geometry(_))));
}

#[test]
fn refinement_counts() {
    let mesh = generate_mesh(&GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![], 0.5)).unwrap();
    assert_eq!(mesh.num_triangles(), 8);
    let once = mesh.refine_uniform().unwrap();
    assert_eq!(once.num_triangles(), 32);
    let edges = |m: &Mesh| {
        let mut set = std::collections::BTreeSet::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t.nodes[k], t.nodes[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    };
    assert_eq!(once.num_nodes(), mesh.num_nodes() + edges(&mesh));
    let twice = once.refine_uniform().unwrap();
    assert_eq!(twice.num_triangles(), 16 * mesh.num_triangles());
    assert_eq!(twice.num_nodes(), once.num_nodes() + edges(&once));
    twice.validate().unwrap();
}

#[test]
fn refined_inclusion_area_converges_quadratically() {
    let mut mesh = unit_disk_one_inclusion(0.1);
    let exact = std::f64::consts::PI * 0.25 * 0.25;
    let mut errors = vec![(mesh.tag_area(1) - exact).abs()];
    for _ in 0..3 {
        mesh = mesh.refine_uniform().unwrap();
        mesh.validate().unwrap();
        errors.push((mesh.tag_area(1) - exact).abs());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "area error ratio {ratio}");
    }
}

#[test]
fn refinement_preserves_aspect_ratio_on_straight_meshes() {
    let mesh = Mesh::structured_rectangle(0.0, 0.0, 1.0, 1.0, 4, 4);
    let q0 = mesh_quality(&mesh).unwrap();
    let q1 = mesh_quality(&mesh.refine_uniform().unwrap()).unwrap();
    assert!((q0.max_aspect_ratio - q1.max_aspect_ratio).abs() < 1e-12);
    assert!((q1.h - 0.5 * q0.h).abs() < 1e-15);
}

#[test]
fn json_round_trip_is_exact() {
    let mesh = unit_disk_one_inclusion(0.1);
    let loaded = Mesh::from_json(&mesh.to_json()).unwrap();
    assert_eq!(loaded.nodes, mesh.nodes);
    assert_eq!(loaded.triangles, mesh.triangles);
    assert_eq!(loaded.boundary_edges, mesh.boundary_edges);
    assert_eq!(loaded.num_inclusions, mesh.num_inclusions);
}

#[test]
fn two_triangle_file_loads() {
    let text = r#"{"nodes": [[0,0],[1,0],[1,1],[0,1]],
        "triangles": [[0,1,2,0],[0,2,3,0]],
        "boundary_edges": [[0,1,0],[1,2,0],[2,3,0],[3,0,0]],
        "num_inclusions": 0}"#;
    let mesh = Mesh::from_json(text).unwrap();
    assert_eq!(mesh.num_triangles(), 2);
}

#[test]
fn missing_node_is_named() {
    let text = r#"{"nodes": [[0,0],[1,0],[1,1]],
        "triangles": [[0,1,7,0]], "boundary_edges": [], "num_inclusions": 0}"#;
    match Mesh::from_json(text) {
        Err(Error::Validation(msg)) => assert!(msg.contains("node 7"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn open_interface_is_rejected() {
    let mesh = unit_disk_one_inclusion(0.2);
    let mut broken = mesh.clone();
    let idx = broken.boundary_edges.iter().position(|e| e.tag == 1).unwrap();
    broken.boundary_edges.remove(idx);
    assert!(matches!(broken.validate(), Err(Error::Validation(_))));
}

#[test]
fn malformed_json_has_location() {
    match Mesh::from_json("{\"nodes\": [[0,0],\n oops]}") {
        Err(Error::Parse { location, .. }) => assert!(location.contains("line 2")),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        Mesh::from_json(r#"{"nodes": [], "triangles": [], "boundary_edges": [], "num_inclusions": 0, "extra": 1}"#),
        Err(Error::Parse { .. })
    ));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn generated_meshes_validate(cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.12f64..0.3, h in 0.03f64..0.06) {
            let spec = GeometrySpec::new(Shape::disk(0.0, 0.0, 1.0), vec![Shape::disk(cx, cy, r)], h);
            let mesh = generate_mesh(&spec).unwrap();
            mesh.validate().unwrap();
            prop_assert_eq!(mesh.distinct_tags(), 2);
            let exact = std::f64::consts::PI * r * r;
            prop_assert!((mesh.tag_area(1) - exact).abs() < 0.1 * exact);
        }

        #[test]
        fn rectangle_area_is_exact(w in 0.5f64..3.0, ht in 0.5f64..3.0, h in 0.05f64..0.5) {
            let spec = GeometrySpec::new(Shape::rectangle(0.0, 0.0, w, ht), vec![], h);
            let mesh = generate_mesh(&spec).unwrap();
            let tol = 10.0 * f64::EPSILON * mesh.num_triangles() as f64 * w * ht;
            prop_assert!((mesh.total_area() - w * ht).abs() <= tol);
        }
    }
}

