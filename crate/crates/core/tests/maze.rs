use topiary_core::maze::{conjugate_field, potential_field, rasterize, solve_maze, trace_path, FieldGrid, Mask, MazeSpec, PathStatus};
use topiary_core::Error;

fn single_point() -> MazeSpec {
    let mut s = MazeSpec::new(Mask::parse_text("#").unwrap(), 0.1);
    s.origin_offset = [1.0, 0.0];
    s
}

#[test]
fn single_point_topiary_and_path() {
    let spec = single_point();
    let cells = rasterize(&spec).unwrap();
    assert_eq!(cells.len(), 1);
    assert!((cells[0].center[0] - 1.0).abs() < 1e-15 && cells[0].center[1].abs() < 1e-15);

    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    assert_eq!(sol.result.support(), vec![0]);
    // margin(0) = -Re e^0 - rate = e - 1 for a single atom at 1
    assert!((sol.margin_at([0.0, 0.0]).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-12);

    let g = sol.gradient_at([0.0, 0.0]).unwrap();
    assert!((g[0] + 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
    let path = trace_path(&sol, 0.05, 1000).unwrap();
    assert_eq!(path.status, PathStatus::Escaped);
    assert!(path.points[1][0] < 0.0);
    assert!(path.clearance > 0.0);
}

#[test]
fn step_lengths_are_bounded() {
    let sol = solve_maze(&single_point(), &MazeSpec::default_config()).unwrap();
    let step = 0.02;
    let path = trace_path(&sol, step, 500).unwrap();
    for w in path.points.windows(2) {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        assert!(d <= step * 1.01, "step {d}");
    }
}

#[test]
fn symmetric_mask_keeps_path_on_axis() {
    // a vertical bar right of the origin, symmetric about the real axis
    let mask = Mask::from_fn(8, 8, |r, c| c == 6 && (2..6).contains(&r)).unwrap();
    let spec = MazeSpec::new(mask, 0.25);
    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    let path = trace_path(&sol, 0.05, 2000).unwrap();
    assert_eq!(path.status, PathStatus::Escaped);
    assert!(path.points.iter().all(|p| p[1].abs() < 1e-9));
    assert!(path.points.last().unwrap()[0] < 0.0);
}

#[test]
fn ring_rasterizes_to_boundary_cells() {
    let mask = Mask::parse_text("###\n#.#\n###\n").unwrap();
    let spec = MazeSpec::new(mask, 1.0);
    let cells = rasterize(&spec).unwrap();
    assert_eq!(cells.len(), 8);
    assert!(cells.iter().all(|c| spec.mask.is_boundary(c.row, c.col)));
}

#[test]
fn empty_mask_is_rejected() {
    let spec = MazeSpec::new(Mask::parse_text("..\n..\n").unwrap(), 1.0);
    assert!(matches!(rasterize(&spec), Err(Error::EmptyMask)));
    assert!(matches!(solve_maze(&spec, &MazeSpec::default_config()), Err(Error::EmptyMask)));
}

#[test]
fn origin_inside_obstacle_gives_point_mass() {
    let mask = Mask::from_fn(4, 4, |r, c| (1..3).contains(&r) && (1..3).contains(&c)).unwrap();
    let spec = MazeSpec::new(mask, 0.5);
    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    assert!(sol.trichotomy);
    assert_eq!(sol.result.iterations, 0);
    assert_eq!(sol.result.measure.len(), 1);
    let cell = sol.support_cells()[0];
    assert_eq!(spec.cell_at([0.0, 0.0]), Some((cell.row, cell.col)));
    assert!(matches!(trace_path(&sol, 0.1, 10), Err(Error::StartInsideObstacle)));
}

#[test]
fn potential_and_harmonicity() {
    let mask = Mask::annulus(32, 10.0, 14.0, Some(0.6)).unwrap();
    let spec = MazeSpec::new(mask, 0.08);
    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    let tol = sol.result.tolerance;
    for c in &sol.cells {
        assert!(sol.margin_at(c.center).unwrap() <= tol * 1.001);
    }
    for c in sol.support_cells() {
        assert!(sol.margin_at(c.center).unwrap().abs() <= tol * 1.001);
        assert!(spec.mask.is_boundary(c.row, c.col));
    }
    assert!(sol.margin_at([0.0, 0.0]).unwrap() > 0.0);

    // discrete mean-value property of the margin
    let h = 1e-2;
    for i in 0..20 {
        let z = [-1.5 + 0.15 * i as f64, 0.7 - 0.07 * i as f64];
        let f = |dx: f64, dy: f64| sol.margin_at([z[0] + dx, z[1] + dy]).unwrap();
        let mean = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h)) / 4.0;
        let lap = (mean - f(0.0, 0.0)) * 4.0 / (h * h);
        assert!(lap.abs() < 1e-4, "laplacian {lap} at {z:?}");
    }

    let grid = sol.default_grid(24);
    let field = potential_field(&sol, &grid).unwrap();
    assert_eq!(field.to_u8().len(), 24 * 24);
    assert!(field.to_pgm().starts_with("P2\n24 24\n255\n"));
}

#[test]
fn conjugate_vanishes_on_axis_for_real_atoms() {
    let sol = solve_maze(&single_point(), &MazeSpec::default_config()).unwrap();
    for x in [-1.0, -0.3, 0.0, 0.5, 0.9] {
        assert!(sol.conjugate_at([x, 0.0]).unwrap().abs() < 1e-14);
    }
    let grid = FieldGrid { res: 5, min: [-1.0, -1.0], max: [1.0, 1.0] };
    let field = conjugate_field(&sol, &grid).unwrap();
    // the middle row lies on the real axis
    for c in 0..5 {
        assert!(field.get(2, c) < 1e-14);
    }
}

#[test]
fn gapless_annulus_has_level_inner_boundary() {
    let (inner, outer) = (10.0, 14.0);
    let spec = MazeSpec::new(Mask::annulus(32, inner, outer, None).unwrap(), 0.08);
    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    let mid = (inner + outer) / 2.0 * spec.cell_size;
    let m: Vec<f64> = sol
        .cells
        .iter()
        .filter(|c| spec.mask.is_boundary(c.row, c.col) && c.center[0].hypot(c.center[1]) < mid)
        .map(|c| sol.margin_at(c.center).unwrap())
        .collect();
    let spread = m.iter().copied().fold(f64::NEG_INFINITY, f64::max) - m.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread <= 10.0 * sol.result.tolerance, "spread {spread}");
}

#[test]
fn target_variant_solves() {
    let mut spec = MazeSpec::new(Mask::annulus(32, 10.0, 14.0, Some(0.6)).unwrap(), 0.08);
    spec.target = Some([0.2, -0.1]);
    let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
    assert!(!sol.trichotomy);
    assert!(sol.result.score <= sol.result.tolerance);
    assert!(trace_path(&sol, 0.02, 2000).is_ok());
}
