use kdst_core::lp::mps::{parse_mps, write_mps};
use kdst_core::simplex::solve_with_stats;
use kdst_core::{solve, LinearProgram, LpStatus, Relation, SolverConfig, VarTag};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `min c·x` s.t. `A x ≥ b`, `0 ≤ x ≤ u`.
struct Dense {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    u: Vec<f64>,
}

impl Dense {
    fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Self {
        let a = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-2..=4) as f64).collect())
            .collect();
        let b = (0..m).map(|_| rng.gen_range(-3..=6) as f64).collect();
        let c = (0..n).map(|_| rng.gen_range(-3..=5) as f64).collect();
        let u = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
        Self { a, b, c, u }
    }

    fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new("dense");
        let vars: Vec<usize> = (0..self.c.len())
            .map(|j| lp.add_var(format!("v{}", j), 0.0, self.u[j], self.c[j], VarTag::Other))
            .collect();
        for (i, row) in self.a.iter().enumerate() {
            let coeffs = row
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0.0)
                .map(|(j, &a)| (vars[j], a))
                .collect();
            lp.add_constraint(format!("r{}", i), coeffs, Relation::Ge, self.b[i]);
        }
        lp
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let tol = 1e-9;
        x.iter().zip(&self.u).all(|(&v, &u)| v >= -tol && v <= u + tol)
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(row, &b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() >= b - tol)
    }

    /// Best vertex over all choices of `n` tight constraints, or `None` when
    /// the polytope is empty.
    fn vertex_optimum(&self) -> Option<f64> {
        let n = self.c.len();
        let mut rows: Vec<(Vec<f64>, f64)> = self.a.iter().cloned().zip(self.b.iter().copied()).collect();
        for j in 0..n {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            rows.push((unit.clone(), 0.0));
            rows.push((unit, self.u[j]));
        }
        let mut best: Option<f64> = None;
        let mut pick = Vec::new();
        self.choose(&rows, 0, &mut pick, &mut best);
        best
    }

    fn choose(&self, rows: &[(Vec<f64>, f64)], start: usize, pick: &mut Vec<usize>, best: &mut Option<f64>) {
        let n = self.c.len();
        if pick.len() == n {
            let m = DMatrix::from_fn(n, n, |i, j| rows[pick[i]].0[j]);
            let rhs = DVector::from_fn(n, |i, _| rows[pick[i]].1);
            if let Some(x) = m.lu().solve(&rhs) {
                let x: Vec<f64> = x.iter().copied().collect();
                if x.iter().all(|v| v.is_finite()) && self.feasible(&x) {
                    let obj: f64 = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
                    if best.is_none_or(|b| obj < b) {
                        *best = Some(obj);
                    }
                }
            }
            return;
        }
        for r in start..rows.len() {
            pick.push(r);
            self.choose(rows, r + 1, pick, best);
            pick.pop();
        }
    }
}

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut optimal = 0;
    for _ in 0..25 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=5);
        let dense = Dense::random(&mut rng, n, m);
        let sol = solve(&dense.to_lp(), &SolverConfig::default()).unwrap();
        match dense.vertex_optimum() {
            Some(want) => {
                assert_eq!(sol.status, LpStatus::Optimal);
                assert!((sol.objective_value - want).abs() <= 1e-6 * (1.0 + want.abs()));
                assert!(dense.feasible(&sol.values));
                optimal += 1;
            }
            None => assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }
    assert!(optimal >= 10);
}

/// Solves the dual `max b·y − u·w` s.t. `Aᵀy − w ≤ c`, `y, w ≥ 0`, checks the
/// dual point independently, and compares objectives.
#[test]
fn larger_programs_have_matching_dual_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..25 {
        let n = rng.gen_range(10..=30);
        let m = rng.gen_range(5..=25);
        let mut dense = Dense::random(&mut rng, n, m);
        // Nonnegative costs keep the dual from being trivially infeasible.
        for c in &mut dense.c {
            *c = c.abs();
        }
        let primal = solve(&dense.to_lp(), &SolverConfig::default()).unwrap();
        if primal.status != LpStatus::Optimal {
            continue;
        }
        assert!(dense.feasible(&primal.values));

        let mut dual = LinearProgram::new("dual");
        let y: Vec<usize> = (0..m)
            .map(|i| dual.add_var(format!("y{}", i), 0.0, f64::INFINITY, -dense.b[i], VarTag::Other))
            .collect();
        let w: Vec<usize> = (0..n)
            .map(|j| dual.add_var(format!("w{}", j), 0.0, f64::INFINITY, dense.u[j], VarTag::Other))
            .collect();
        for j in 0..n {
            let mut coeffs: Vec<(usize, f64)> = (0..m)
                .filter(|&i| dense.a[i][j] != 0.0)
                .map(|i| (y[i], dense.a[i][j]))
                .collect();
            coeffs.push((w[j], -1.0));
            dual.add_constraint(format!("d{}", j), coeffs, Relation::Le, dense.c[j]);
        }
        let d = solve(&dual, &SolverConfig::default()).unwrap();
        assert_eq!(d.status, LpStatus::Optimal);
        let yv: Vec<f64> = y.iter().map(|&i| d.values[i]).collect();
        let wv: Vec<f64> = w.iter().map(|&j| d.values[j]).collect();
        for j in 0..n {
            let lhs: f64 = (0..m).map(|i| dense.a[i][j] * yv[i]).sum::<f64>() - wv[j];
            assert!(lhs <= dense.c[j] + 1e-7);
        }
        let dual_obj: f64 = yv.iter().zip(&dense.b).map(|(a, b)| a * b).sum::<f64>()
            - wv.iter().zip(&dense.u).map(|(a, b)| a * b).sum::<f64>();
        assert!((dual_obj - primal.objective_value).abs() <= 1e-6 * (1.0 + dual_obj.abs()));
        checked += 1;
    }
    assert!(checked >= 5, "only {} feasible programs", checked);
}

#[test]
fn phase_two_objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = SolverConfig {
        record_trace: true,
        ..SolverConfig::default()
    };
    for _ in 0..10 {
        let mut dense = Dense::random(&mut rng, 20, 15);
        for c in &mut dense.c {
            *c = c.abs();
        }
        let (sol, stats) = solve_with_stats(&dense.to_lp(), &config).unwrap();
        if sol.status != LpStatus::Optimal {
            continue;
        }
        for pair in stats.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
    }
}

#[test]
fn solving_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dense = Dense::random(&mut rng, 25, 20);
    let config = SolverConfig {
        record_trace: true,
        ..SolverConfig::default()
    };
    let (a, sa) = solve_with_stats(&dense.to_lp(), &config).unwrap();
    let (b, sb) = solve_with_stats(&dense.to_lp(), &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa.pivots, sb.pivots);
}

#[test]
fn mps_reimport_gives_same_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let mut dense = Dense::random(&mut rng, 12, 8);
        for c in &mut dense.c {
            *c = c.abs();
        }
        let lp = dense.to_lp();
        let back = parse_mps(&write_mps(&lp)).unwrap();
        let a = solve(&lp, &SolverConfig::default()).unwrap();
        let b = solve(&back, &SolverConfig::default()).unwrap();
        assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            assert!((a.objective_value - b.objective_value).abs() <= 1e-9 * (1.0 + a.objective_value.abs()));
        }
    }
}
