//! Validation-split selection of `(tau, lambda1, lambda2)`.
//!
//! Every grid cell is fitted on the training split from a zero start and scored
//! by mean absolute error on the validation split. The smallest score wins; exact
//! ties go to the larger `lambda1`, then the larger `lambda2`, then the smaller
//! `tau`. Because cells never share state, the result does not depend on the
//! order (or thread) in which cells are evaluated.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{check_len, Error, Result};
use crate::float::{powf, sqrt, ln};
use crate::metrics::{estimation_error, mae};
use crate::model::{Coefficients, LossKind, ProblemData, SolverConfig};
use crate::solver::{solve_with_factorization, NormalFactorization, SolveStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid {
    taus: Vec<f64>,
    lambda1s: Vec<f64>,
    lambda2s: Vec<f64>,
}

impl TuneGrid {
    pub fn new(taus: Vec<f64>, lambda1s: Vec<f64>, lambda2s: Vec<f64>) -> Result<Self> {
        if taus.is_empty() || lambda1s.is_empty() || lambda2s.is_empty() {
            return Err(Error::InvalidArgument("grid lists must be nonempty"));
        }
        if !taus.iter().all(|t| t.is_finite() && *t > 0.0) {
            return Err(Error::InvalidArgument("grid tau values must be finite and positive"));
        }
        if !lambda1s.iter().chain(&lambda2s).all(|l| l.is_finite() && *l >= 0.0) {
            return Err(Error::InvalidArgument("grid lambda values must be finite and nonnegative"));
        }
        Ok(Self { taus, lambda1s, lambda2s })
    }

    /// The `tau` grid for `(n, p)` crossed with the default lambda grid.
    pub fn default_for(n: usize, p: usize) -> Result<Self> {
        Self::new(tau_grid(n, p)?, default_lambda_grid(), default_lambda_grid())
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn lambda1s(&self) -> &[f64] {
        &self.lambda1s
    }

    pub fn lambda2s(&self) -> &[f64] {
        &self.lambda2s
    }

    pub fn len(&self) -> usize {
        self.taus.len() * self.lambda1s.len() * self.lambda2s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product, `tau` outermost, `lambda2` innermost.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(self.len());
        for &tau in &self.taus {
            for &lambda1 in &self.lambda1s {
                for &lambda2 in &self.lambda2s {
                    out.push(GridCell { tau, lambda1, lambda2 });
                }
            }
        }
        out
    }
}

/// `a sqrt(n / ln p)` for `a = 0.40, 0.45, ..., 1.50` (23 values, ascending).
pub fn tau_grid(n: usize, p: usize) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::InvalidArgument("tau grid needs p >= 2"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("tau grid needs n >= 1"));
    }
    let scale = sqrt(n as f64 / ln(p as f64));
    Ok((0..23).map(|k| (40 + 5 * k) as f64 / 100.0 * scale).collect())
}

/// Nine log-spaced values from `1e-3` to `1e1`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..9).map(|k| powf(10.0, -3.0 + 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl GridCell {
    pub fn apply(&self, base: &SolverConfig) -> SolverConfig {
        base.with_tau(self.tau).with_lambdas(self.lambda1, self.lambda2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    /// Validation mean absolute error.
    pub mae: f64,
    /// Coefficient error, when the true coefficients are supplied.
    pub estimation_error: Option<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub beta: Coefficients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub cell: GridCell,
    pub outcome: core::result::Result<CellScore, Error>,
}

impl ScoreRow {
    pub fn mae(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.mae)
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best: SolverConfig,
    pub best_index: usize,
    /// One row per grid cell, in [`TuneGrid::cells`] order.
    pub rows: Vec<ScoreRow>,
}

impl TuneOutcome {
    pub fn best_score(&self) -> &CellScore {
        self.rows[self.best_index].outcome.as_ref().expect("selected row is scored")
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Fits and scores one cell. Solver failures land in the row, they are not raised.
pub fn evaluate_cell(
    train: &ProblemData,
    factorization: &NormalFactorization,
    validation: &ProblemData,
    base: &SolverConfig,
    cell: GridCell,
    beta_star: Option<&[f64]>,
) -> ScoreRow {
    let outcome = (|| {
        let cfg = cell.apply(base);
        let fit = solve_with_factorization(train, factorization, &cfg, None)?;
        let score = mae(validation, &fit.beta)?;
        let err = beta_star.map(|b| estimation_error(&fit.beta, b)).transpose()?;
        Ok(CellScore { mae: score, estimation_error: err, iterations: fit.iterations, status: fit.status, beta: fit.beta })
    })();
    ScoreRow { cell, outcome }
}

/// `Less` when `a` is preferred over `b`.
fn preference(a: &ScoreRow, b: &ScoreRow) -> Ordering {
    let (sa, sb) = (a.mae().unwrap_or(f64::INFINITY), b.mae().unwrap_or(f64::INFINITY));
    sa.total_cmp(&sb)
        .then(b.cell.lambda1.total_cmp(&a.cell.lambda1))
        .then(b.cell.lambda2.total_cmp(&a.cell.lambda2))
        .then(a.cell.tau.total_cmp(&b.cell.tau))
}

/// Index of the preferred scored row; the first such row on complete ties.
pub fn select_best(rows: &[ScoreRow]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        if row.mae().is_none_or(|m| m.is_nan()) {
            continue;
        }
        match best {
            Some(b) if preference(row, &rows[b]) != Ordering::Less => {}
            _ => best = Some(i),
        }
    }
    best.ok_or(Error::TuningFailed)
}

/// Grid search with a caller-supplied evaluation strategy.
///
/// `map` receives the cells that need a solve and a thread-safe evaluator, and
/// must return one row per cell in the same order. Under the squared loss `tau`
/// has no effect, so each `(lambda1, lambda2)` pair is solved once and its row
/// copied across the `tau` values.
pub fn grid_search_with<F>(
    train: &ProblemData,
    validation: &ProblemData,
    grid: &TuneGrid,
    base: &SolverConfig,
    beta_star: Option<&[f64]>,
    map: F,
) -> Result<TuneOutcome>
where
    F: FnOnce(&[GridCell], &(dyn Fn(GridCell) -> ScoreRow + Sync)) -> Vec<ScoreRow>,
{
    base.validate()?;
    check_len("validation features", train.p(), validation.p())?;
    if let Some(b) = beta_star {
        check_len("true coefficients", train.p(), b.len())?;
    }
    let factorization = NormalFactorization::new(train)?;
    let evaluator = |cell: GridCell| evaluate_cell(train, &factorization, validation, base, cell, beta_star);

    let cells = grid.cells();
    let rows = if base.loss == LossKind::Squared && grid.taus.len() > 1 {
        let per_tau = grid.lambda1s.len() * grid.lambda2s.len();
        let solved = map(&cells[..per_tau], &evaluator);
        check_len("evaluated cells", per_tau, solved.len())?;
        cells
            .iter()
            .enumerate()
            .map(|(i, &cell)| ScoreRow { cell, outcome: solved[i % per_tau].outcome.clone() })
            .collect()
    } else {
        let rows = map(&cells, &evaluator);
        check_len("evaluated cells", cells.len(), rows.len())?;
        rows
    };

    let best_index = select_best(&rows)?;
    Ok(TuneOutcome { best: rows[best_index].cell.apply(base), best_index, rows })
}

/// Sequential grid search.
pub fn grid_search(
    train: &ProblemData,
    validation: &ProblemData,
    grid: &TuneGrid,
    base: &SolverConfig,
    beta_star: Option<&[f64]>,
) -> Result<TuneOutcome> {
    grid_search_with(train, validation, grid, base, beta_star, |cells, eval| {
        cells.iter().map(|&c| eval(c)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use alloc::vec;

    fn split_problem() -> (ProblemData, ProblemData, Vec<f64>) {
        let beta = vec![1.0, 1.0, 0.0, -0.5];
        let make = |rows: usize, offset: usize| {
            let x: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..4).map(|j| (((i + offset) * 7 + j * 3) as f64 * 0.61).sin()).collect())
                .collect();
            let x = Matrix::from_rows(&x).unwrap();
            let y = x.mul_vec(&beta).unwrap();
            ProblemData::new(x, y).unwrap()
        };
        (make(30, 0), make(20, 100), beta)
    }

    #[test]
    fn tau_grid_examples() {
        let g = tau_grid(100, 50).unwrap();
        assert_eq!(g.len(), 23);
        assert!((g[0] - 0.4 * (100.0f64 / 50f64.ln()).sqrt()).abs() < 1e-12);
        assert!((g[0] - 2.0226).abs() < 5e-4);
        assert!((g[22] / g[0] - 1.5 / 0.4).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let g4 = tau_grid(400, 50).unwrap();
        for (a, b) in g.iter().zip(&g4) {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
        assert!(tau_grid(100, 1).is_err());
    }

    #[test]
    fn lambda_grid_endpoints() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[8] - 10.0).abs() < 1e-12);
        assert!((g[2] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(TuneGrid::new(vec![], vec![1.0], vec![1.0]).is_err());
        assert!(TuneGrid::new(vec![0.0], vec![1.0], vec![1.0]).is_err());
        assert!(TuneGrid::new(vec![1.0], vec![f64::NAN], vec![1.0]).is_err());
        let g = TuneGrid::new(vec![1.0, 2.0], vec![0.1], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.cells()[1], GridCell { tau: 1.0, lambda1: 0.1, lambda2: 0.2 });
        assert_eq!(g.cells()[3].tau, 2.0);
    }

    #[test]
    fn single_point_grid() {
        let (train, val, beta) = split_problem();
        let grid = TuneGrid::new(vec![1.0], vec![0.01], vec![0.02]).unwrap();
        let out = grid_search(&train, &val, &grid, &SolverConfig::default(), Some(&beta)).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.best.tau, 1.0);
        assert_eq!(out.best.lambda1, 0.01);
        assert_eq!(out.best.lambda2, 0.02);
        assert!(out.best_score().estimation_error.is_some());
    }

    #[test]
    fn noiseless_prefers_small_lambda() {
        let (train, val, _) = split_problem();
        let grid = TuneGrid::new(vec![1.0], vec![1e-6, 10.0], vec![1e-6, 10.0]).unwrap();
        let base = SolverConfig::default().with_tol(1e-6, 20_000);
        let out = grid_search(&train, &val, &grid, &base, None).unwrap();
        assert_eq!((out.best.lambda1, out.best.lambda2), (1e-6, 1e-6));
        let min = out.rows.iter().filter_map(|r| r.mae()).fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_score().mae, min);
    }

    #[test]
    fn duplicate_cells_tie_break_deterministically() {
        let (train, val, _) = split_problem();
        let grid = TuneGrid::new(vec![2.0, 1.0, 2.0], vec![0.05, 0.05], vec![0.05]).unwrap();
        let base = SolverConfig::default().with_loss(LossKind::Squared);
        let a = grid_search(&train, &val, &grid, &base, None).unwrap();
        let b = grid_search(&train, &val, &grid, &base, None).unwrap();
        assert_eq!(a.best_index, b.best_index);
        // squared loss ignores tau: every row scores the same, smallest tau wins
        let first = a.rows[0].mae().unwrap();
        assert!(a.rows.iter().all(|r| r.mae() == Some(first)));
        assert_eq!(a.best.tau, 1.0);
        assert_eq!(a.best_index, 2);
    }

    #[test]
    fn tie_break_order() {
        let row = |tau, lambda1, lambda2, mae: f64| ScoreRow {
            cell: GridCell { tau, lambda1, lambda2 },
            outcome: Ok(CellScore {
                mae,
                estimation_error: None,
                iterations: 1,
                status: SolveStatus::Converged,
                beta: Coefficients::zeros(2),
            }),
        };
        let rows = vec![row(1.0, 0.1, 0.1, 0.5), row(1.0, 0.2, 0.1, 0.5), row(1.0, 0.2, 0.3, 0.5), row(0.5, 0.2, 0.3, 0.5)];
        assert_eq!(select_best(&rows).unwrap(), 3);
        let mut rows = rows;
        rows.push(row(9.0, 0.0, 0.0, 0.4));
        assert_eq!(select_best(&rows).unwrap(), 4);
        rows[4].outcome = Err(Error::Diverged { iteration: 3 });
        assert_eq!(select_best(&rows).unwrap(), 3);
        let failed: Vec<ScoreRow> = rows.into_iter().map(|mut r| { r.outcome = Err(Error::TuningFailed); r }).collect();
        assert_eq!(select_best(&failed), Err(Error::TuningFailed));
    }

    #[test]
    fn failed_cells_are_recorded() {
        let (train, val, _) = split_problem();
        let grid = TuneGrid::new(vec![1.0], vec![0.01], vec![0.01, 0.1]).unwrap();
        let out = grid_search_with(&train, &val, &grid, &SolverConfig::default(), None, |cells, eval| {
            cells
                .iter()
                .map(|&c| if c.lambda2 == 0.01 { ScoreRow { cell: c, outcome: Err(Error::Diverged { iteration: 1 }) } } else { eval(c) })
                .collect()
        })
        .unwrap();
        assert_eq!(out.failures(), 1);
        assert_eq!(out.best_index, 1);
    }
}
