use mch_core::cell_problems::{CellProblem, GradientAnchor};
use mch_core::fem::{solve_saddle, ConstraintBlock, CsrMatrix};
use mch_core::geometry::{Axis, ChannelSpec};
use mch_core::{rasterize, Continuum, Kappa, PerforatedMesh, Period, RowTag, UnitCellSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 3×3 coarse blocks of an 8×8 unit cell: vertical continuum-1 channel,
/// horizontal continuum-2 channel.
fn tiny_mesh() -> PerforatedMesh {
    let spec = UnitCellSpec {
        n_fine: 8,
        channels: vec![
            ChannelSpec { axis: Axis::Vertical, offset: 3, width: 2, continuum: Continuum::One },
            ChannelSpec { axis: Axis::Horizontal, offset: 3, width: 2, continuum: Continuum::Two },
        ],
    };
    rasterize(&spec, Period::from_inverse(3).unwrap()).unwrap()
}

/// Solve [A Cᵀ; C 0][φ; μ] = [0; g] by dense LU.
fn dense_saddle(a: &CsrMatrix, c: &CsrMatrix, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, r) = (a.nrows(), c.nrows());
    let mut k = DMatrix::<f64>::zeros(n + r, n + r);
    for i in 0..n {
        for (j, v) in a.row(i) {
            k[(i, j)] = v;
        }
    }
    for i in 0..r {
        for (j, v) in c.row(i) {
            k[(n + i, j)] = v;
            k[(j, n + i)] = v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n + r);
    for i in 0..r {
        rhs[n + i] = g[i];
    }
    let x = k.lu().solve(&rhs).expect("dense saddle is nonsingular");
    (x.rows(0, n).iter().copied().collect(), x.rows(n, r).iter().copied().collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn assert_close(ours: &[f64], oracle: &[f64], what: &str) {
    let scale = max_abs(oracle).max(1e-300);
    let diff = ours.iter().zip(oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-10 * scale, "{what}: max diff {diff:e} vs scale {scale:e}");
}

#[test]
fn cell_problems_match_dense_saddle() {
    let mesh = tiny_mesh();
    for p in [4, 0, 5] {
        let problem = CellProblem::new(&mesh, &Kappa::TwoPlusSine, p, 1).unwrap();
        let mut targets = vec![
            ("phi_1", problem.average_targets(Continuum::One)),
            ("phi_2", problem.average_targets(Continuum::Two)),
        ];
        for i in Continuum::ALL {
            let c = [0, 1].map(|m| mesh.centered_offset(p, i, m).ok());
            for m in 0..2 {
                targets.push(("phi_grad", problem.gradient_targets(&mesh, i, m, GradientAnchor::Central, c[m])));
            }
        }
        for (name, g) in targets {
            let ours = problem.solve_target(&g, name.into()).unwrap();
            let (phi, mu) = dense_saddle(&problem.stiffness, &problem.constraints.matrix, &g);
            assert_close(&ours.phi, &phi, &format!("p={p} {name} phi"));
            // [A Cᵀ; C 0] carries μ = −λ for Aφ = Cᵀλ
            let neg: Vec<f64> = mu.iter().map(|x| -x).collect();
            assert_close(&ours.lambda, &neg, &format!("p={p} {name} lambda"));
        }
    }
}

#[test]
fn random_spd_systems_match_dense_saddle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let n = rng.random_range(6..30);
        let r = rng.random_range(1..5);
        // diagonally dominant SPD with random sparsity
        let mut trip = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                if rng.random_bool(0.3) {
                    let v: f64 = rng.random_range(-1.0..0.0);
                    trip.push((i, j, v));
                    trip.push((j, i, v));
                    diag[i] -= v;
                    diag[j] -= v;
                }
            }
        }
        for (i, d) in diag.iter().enumerate() {
            trip.push((i, i, d + 1.0));
        }
        let a = CsrMatrix::from_triplets(n, n, &trip);
        let mut ctrip = Vec::new();
        for row in 0..r {
            for j in 0..n {
                if rng.random_bool(0.5) || j % r == row {
                    ctrip.push((row, j, rng.random_range(0.1..1.0)));
                }
            }
        }
        let c = CsrMatrix::from_triplets(r, n, &ctrip);
        let cb = ConstraintBlock::new(
            (0..r).map(|q| RowTag { continuum: 1, block: q }).collect(),
            c.clone(),
            vec![1.0; r],
        );
        let g: Vec<f64> = (0..r).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ours = solve_saddle(&a, &cb, std::slice::from_ref(&g)).unwrap().remove(0);
        let (phi, mu) = dense_saddle(&a, &c, &g);
        assert_close(&ours.phi, &phi, "phi");
        let neg: Vec<f64> = mu.iter().map(|x| -x).collect();
        assert_close(&ours.lambda, &neg, "lambda");
    }
}
