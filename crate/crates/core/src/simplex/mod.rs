//! Two-phase bounded-variable revised simplex.
//!
//! Every row `a·x (≤|≥|=) b` gets a slack `s` with `a·x + s = b`, bounded
//! according to the relation. Rows whose slack cannot absorb the initial
//! residual get an artificial column; phase one drives the artificials to
//! zero and phase two optimizes the real objective from the resulting basis.
//!
//! The basis is kept as a sparse LU factorization plus a product-form eta
//! file, refactorized every `refactor_interval` pivots. Pricing is Dantzig's
//! rule with a Harris two-pass ratio test; after a long run of degenerate
//! pivots the solver falls back to Bland's rule until it makes progress.

mod lu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, LpStatus, Relation};
use lu::LuFactors;

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feasibility_tolerance: f64,
    pub optimality_tolerance: f64,
    pub max_iterations: usize,
    /// Switch to Bland's rule after `10 · rows` consecutive degenerate pivots.
    pub anti_cycling: bool,
    pub refactor_interval: usize,
    /// Record the phase-two objective after every pivot.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-7,
            optimality_tolerance: 1e-7,
            max_iterations: 200_000,
            anti_cycling: true,
            refactor_interval: 100,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.feasibility_tolerance > 0.0 && self.optimality_tolerance > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.refactor_interval == 0 {
            return Err(Error::Config("refactor interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase_one_iterations: usize,
    pub bland_activations: usize,
    pub refactorizations: usize,
    /// `(iteration, objective)` after every phase-two pivot, when recorded.
    pub objective_trace: Vec<f64>,
    /// Entering/leaving variable of every pivot, when recorded.
    pub pivots: Vec<(usize, usize)>,
}

pub fn solve(lp: &LinearProgram, config: &SolverConfig) -> Result<LpSolution> {
    solve_with_stats(lp, config).map(|(sol, _)| sol)
}

pub fn solve_with_stats(lp: &LinearProgram, config: &SolverConfig) -> Result<(LpSolution, SolveStats)> {
    config.validate()?;
    let mut simplex = Simplex::new(lp, config);
    let status = simplex.run()?;
    let solution = match status {
        LpStatus::Optimal => {
            let values = simplex.structural_values();
            let objective_value = lp.objective(&values);
            LpSolution {
                status,
                objective_value,
                values,
            }
        }
        LpStatus::Infeasible => LpSolution {
            status,
            objective_value: f64::INFINITY,
            values: Vec::new(),
        },
        LpStatus::Unbounded => LpSolution {
            status,
            objective_value: f64::NEG_INFINITY,
            values: Vec::new(),
        },
    };
    Ok((solution, simplex.stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    column: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    config: &'a SolverConfig,
    m: usize,
    n_struct: usize,
    columns: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    original_cost: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    artificial_start: usize,
    state: Vec<VarState>,
    x: Vec<f64>,
    basis: Vec<usize>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    stats: SolveStats,
}

enum Pricing {
    Entering(usize, f64),
    Optimal,
}

enum Ratio {
    Flip(f64),
    Pivot { pos: usize, theta: f64, to_upper: bool },
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, config: &'a SolverConfig) -> Self {
        let m = lp.num_constraints();
        let n_struct = lp.num_vars();
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    columns[j].push((i, a));
                }
            }
        }
        let mut lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
        let mut original_cost: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
        let rhs: Vec<f64> = lp.constraints.iter().map(|c| c.rhs).collect();

        let mut state = Vec::with_capacity(n_struct + m);
        let mut x = Vec::with_capacity(n_struct + m);
        for j in 0..n_struct {
            let (s, v) = if lower[j].is_finite() {
                (VarState::AtLower, lower[j])
            } else if upper[j].is_finite() {
                (VarState::AtUpper, upper[j])
            } else {
                (VarState::Free, 0.0)
            };
            state.push(s);
            x.push(v);
        }

        let mut residual = rhs.clone();
        for (j, col) in columns.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    residual[i] -= a * x[j];
                }
            }
        }

        let mut basis = vec![0; m];
        let mut artificials = Vec::new();
        for (i, c) in lp.constraints.iter().enumerate() {
            let (lo, hi) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            let slack = n_struct + i;
            columns.push(vec![(i, 1.0)]);
            lower.push(lo);
            upper.push(hi);
            original_cost.push(0.0);
            let r = residual[i];
            if r >= lo && r <= hi {
                state.push(VarState::Basic(i));
                x.push(r);
                basis[i] = slack;
            } else {
                let at = r.clamp(lo, hi);
                state.push(if at == lo { VarState::AtLower } else { VarState::AtUpper });
                x.push(at);
                artificials.push((i, r - at));
            }
        }

        let artificial_start = n_struct + m;
        for &(i, excess) in &artificials {
            let j = columns.len();
            columns.push(vec![(i, excess.signum())]);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            original_cost.push(0.0);
            state.push(VarState::Basic(i));
            x.push(excess.abs());
            basis[i] = j;
        }

        let total = columns.len();
        let mut cost = vec![0.0; total];
        for c in cost.iter_mut().skip(artificial_start) {
            *c = 1.0;
        }

        Self {
            config,
            m,
            n_struct,
            columns,
            lower,
            upper,
            original_cost,
            cost,
            rhs,
            artificial_start,
            state,
            x,
            basis,
            lu: None,
            etas: Vec::new(),
            stats: SolveStats::default(),
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| self.x[j].clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    fn run(&mut self) -> Result<LpStatus> {
        self.refactor()?;
        if self.columns.len() > self.artificial_start {
            self.iterate(true)?;
            let infeasibility: f64 = (self.artificial_start..self.columns.len())
                .map(|j| self.x[j].max(0.0))
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > self.config.feasibility_tolerance * scale {
                return Ok(LpStatus::Infeasible);
            }
            for j in self.artificial_start..self.columns.len() {
                self.upper[j] = 0.0;
                if !matches!(self.state[j], VarState::Basic(_)) {
                    self.state[j] = VarState::AtLower;
                    self.x[j] = 0.0;
                }
            }
            self.drive_out_artificials()?;
            self.refactor()?;
        }
        self.stats.phase_one_iterations = self.stats.iterations;
        self.cost = self.original_cost.clone();
        if !self.iterate(false)? {
            return Ok(LpStatus::Unbounded);
        }
        self.refactor()?;
        let violation = self.primal_violation();
        if violation > self.config.feasibility_tolerance {
            return Err(Error::Numerical(format!(
                "final basis violates a bound or row by {:e}",
                violation
            )));
        }
        Ok(LpStatus::Optimal)
    }

    fn primal_violation(&self) -> f64 {
        let mut residual = self.rhs.clone();
        let mut worst = 0.0f64;
        for (j, col) in self.columns.iter().enumerate() {
            let v = self.x[j];
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
            for &(i, a) in col {
                residual[i] -= a * v;
            }
        }
        residual.iter().fold(worst, |acc, r| acc.max(r.abs()))
    }

    fn refactor(&mut self) -> Result<()> {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basis
                .iter()
                .map(|&j| self.columns[j].clone())
                .collect();
            self.stats.refactorizations += 1;
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.etas.clear();
                    self.recompute_basic_values();
                    return Ok(());
                }
                Err(singular) => {
                    // Replace dependent columns by the slacks of uncovered rows.
                    for (&pos, &row) in singular.positions.iter().zip(&singular.rows) {
                        let out = self.basis[pos];
                        self.make_nonbasic(out);
                        let slack = self.n_struct + row;
                        if matches!(self.state[slack], VarState::Basic(_)) {
                            return Err(Error::Numerical("singular basis could not be repaired".into()));
                        }
                        self.basis[pos] = slack;
                        self.state[slack] = VarState::Basic(pos);
                    }
                }
            }
        }
    }

    fn make_nonbasic(&mut self, j: usize) {
        let v = self.x[j];
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let to_lower = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (v - lo).abs() <= (hi - v).abs(),
            (true, false) => true,
            (false, true) => false,
            (false, false) => {
                self.state[j] = VarState::Free;
                self.x[j] = 0.0;
                return;
            }
        };
        if to_lower {
            self.state[j] = VarState::AtLower;
            self.x[j] = lo;
        } else {
            self.state[j] = VarState::AtUpper;
            self.x[j] = hi;
        }
    }

    fn recompute_basic_values(&mut self) {
        let mut b = self.rhs.clone();
        for (j, col) in self.columns.iter().enumerate() {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in col {
                    b[i] -= a * v;
                }
            }
        }
        let xb = self.ftran_dense(b);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn ftran_dense(&self, b: Vec<f64>) -> Vec<f64> {
        let mut x = self.lu.as_ref().unwrap().solve(b);
        for eta in &self.etas {
            let xr = x[eta.pos] / eta.pivot;
            if xr != 0.0 {
                for &(i, a) in &eta.column {
                    x[i] -= a * xr;
                }
            }
            x[eta.pos] = xr;
        }
        x
    }

    fn ftran_column(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        for &(i, a) in &self.columns[j] {
            b[i] = a;
        }
        self.ftran_dense(b)
    }

    fn btran(&self, mut d: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.column.iter().map(|&(i, a)| a * d[i]).sum();
            d[eta.pos] = (d[eta.pos] - s) / eta.pivot;
        }
        self.lu.as_ref().unwrap().solve_transposed(d)
    }

    fn reduced_cost(&self, j: usize, duals: &[f64]) -> f64 {
        self.cost[j]
            - self.columns[j]
                .iter()
                .map(|&(i, a)| a * duals[i])
                .sum::<f64>()
    }

    fn price(&self, duals: &[f64], bland: bool) -> Pricing {
        let tol = self.config.optimality_tolerance;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.columns.len() {
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                _ if self.lower[j] == self.upper[j] => continue,
                VarState::AtLower => {
                    let d = self.reduced_cost(j, duals);
                    if d < -tol {
                        (1.0, -d)
                    } else {
                        continue;
                    }
                }
                VarState::AtUpper => {
                    let d = self.reduced_cost(j, duals);
                    if d > tol {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
                VarState::Free => {
                    let d = self.reduced_cost(j, duals);
                    if d.abs() > tol {
                        (-d.signum(), d.abs())
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Pricing::Entering(j, dir.0);
            }
            if best.is_none_or(|(_, _, score)| dir.1 > score) {
                best = Some((j, dir.0, dir.1));
            }
        }
        match best {
            Some((j, dir, _)) => Pricing::Entering(j, dir),
            None => Pricing::Optimal,
        }
    }

    /// Step length to the first blocking bound, Harris style unless `bland`.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Ratio {
        let tol = self.config.feasibility_tolerance;
        let range = self.upper[q] - self.lower[q];
        let limit = |pos: usize, relax: f64| -> Option<(f64, bool)> {
            let a = alpha[pos];
            if a.abs() <= PIVOT_TOL {
                return None;
            }
            let j = self.basis[pos];
            let rate = -dir * a;
            if rate < 0.0 {
                self.lower[j]
                    .is_finite()
                    .then(|| (((self.x[j] - self.lower[j]) + relax) / -rate, false))
            } else {
                self.upper[j]
                    .is_finite()
                    .then(|| (((self.upper[j] - self.x[j]) + relax) / rate, true))
            }
        };

        if bland {
            let mut best: Option<(f64, usize, usize, bool)> = None;
            for pos in 0..self.m {
                if let Some((theta, to_upper)) = limit(pos, 0.0) {
                    let theta = theta.max(0.0);
                    let j = self.basis[pos];
                    let better = match best {
                        None => true,
                        Some((t, _, bj, _)) => theta < t - 1e-12 || (theta <= t + 1e-12 && j < bj),
                    };
                    if better {
                        best = Some((theta, pos, j, to_upper));
                    }
                }
            }
            return match best {
                Some((theta, _, _, _)) if range <= theta => Ratio::Flip(range),
                Some((theta, pos, _, to_upper)) => Ratio::Pivot { pos, theta, to_upper },
                None if range.is_finite() => Ratio::Flip(range),
                None => Ratio::Unbounded,
            };
        }

        let mut theta_max = f64::INFINITY;
        for pos in 0..self.m {
            if let Some((theta, _)) = limit(pos, tol) {
                theta_max = theta_max.min(theta);
            }
        }
        if range.is_finite() && range <= theta_max {
            return Ratio::Flip(range);
        }
        if !theta_max.is_finite() {
            return Ratio::Unbounded;
        }
        let mut best: Option<(f64, usize, f64, bool)> = None;
        for pos in 0..self.m {
            if let Some((theta, to_upper)) = limit(pos, 0.0) {
                if theta <= theta_max {
                    let size = alpha[pos].abs();
                    if best.is_none_or(|(s, _, _, _)| size > s) {
                        best = Some((size, pos, theta.max(0.0), to_upper));
                    }
                }
            }
        }
        match best {
            Some((_, pos, theta, to_upper)) => Ratio::Pivot { pos, theta, to_upper },
            None => Ratio::Unbounded,
        }
    }

    fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Runs pivots until optimality. Returns `false` on unboundedness.
    fn iterate(&mut self, phase_one: bool) -> Result<bool> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.stats.iterations >= self.config.max_iterations {
                return Err(Error::NonConvergence {
                    iterations: self.stats.iterations,
                });
            }
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            let duals = self.btran(cb);
            let (q, dir) = match self.price(&duals, bland) {
                Pricing::Optimal => return Ok(true),
                Pricing::Entering(q, dir) => (q, dir),
            };
            let alpha = self.ftran_column(q);
            let ratio = self.ratio_test(q, dir, &alpha, bland);
            self.stats.iterations += 1;

            let theta = match ratio {
                Ratio::Unbounded => {
                    if phase_one {
                        return Err(Error::Numerical("phase one reported an unbounded ray".into()));
                    }
                    return Ok(false);
                }
                Ratio::Flip(theta) => {
                    self.step(q, dir, theta, &alpha);
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    theta
                }
                Ratio::Pivot { pos, theta, to_upper } => {
                    self.step(q, dir, theta, &alpha);
                    let leaving = self.basis[pos];
                    if to_upper {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.upper[leaving];
                    } else {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lower[leaving];
                    }
                    if self.config.record_trace {
                        self.stats.pivots.push((q, leaving));
                    }
                    self.basis[pos] = q;
                    self.state[q] = VarState::Basic(pos);
                    self.etas.push(Eta {
                        pos,
                        pivot: alpha[pos],
                        column: alpha
                            .iter()
                            .enumerate()
                            .filter(|&(i, a)| i != pos && a.abs() > 1e-13)
                            .map(|(i, &a)| (i, a))
                            .collect(),
                    });
                    if self.etas.len() >= self.config.refactor_interval {
                        self.refactor()?;
                    }
                    theta
                }
            };

            if !phase_one && self.config.record_trace {
                let obj = self.objective();
                self.stats.objective_trace.push(obj);
            }

            if theta <= 1e-12 {
                degenerate_run += 1;
                if self.config.anti_cycling && !bland && degenerate_run > 10 * self.m.max(1) {
                    bland = true;
                    self.stats.bland_activations += 1;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn step(&mut self, q: usize, dir: f64, theta: f64, alpha: &[f64]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[pos];
                self.x[j] -= dir * theta * a;
            }
        }
    }

    /// Pivots basic artificials (now fixed at zero) out of the basis where a
    /// non-artificial column can replace them.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for pos in 0..self.m {
            let j = self.basis[pos];
            if j < self.artificial_start {
                continue;
            }
            let mut unit = vec![0.0; self.m];
            unit[pos] = 1.0;
            let row = self.btran(unit);
            let mut best: Option<(usize, f64)> = None;
            for q in 0..self.artificial_start {
                if matches!(self.state[q], VarState::Basic(_)) || self.lower[q] == self.upper[q] {
                    continue;
                }
                let a: f64 = self.columns[q].iter().map(|&(i, v)| v * row[i]).sum();
                if a.abs() > 1e-7 && best.is_none_or(|(_, b)| a.abs() > b.abs()) {
                    best = Some((q, a));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran_column(q);
                self.state[j] = VarState::AtLower;
                self.x[j] = 0.0;
                self.basis[pos] = q;
                self.state[q] = VarState::Basic(pos);
                self.etas.push(Eta {
                    pos,
                    pivot: alpha[pos],
                    column: alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, a)| i != pos && a.abs() > 1e-13)
                        .map(|(i, &a)| (i, a))
                        .collect(),
                });
                if self.etas.len() >= self.config.refactor_interval {
                    self.refactor()?;
                }
            }
        }
        self.recompute_basic_values();
        Ok(())
    }
}
