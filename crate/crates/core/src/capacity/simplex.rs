//! Exact linear-separability test.
//!
//! Signed points `y_i = sign_i * z_i` admit `w` with `w·y_i >= 1` for all `i`
//! iff no convex combination of them is the origin (Gordan's alternative).
//! The second condition is the feasibility problem
//!
//! ```text
//! find λ >= 0  with  Σ λ_i y_i = 0,  Σ λ_i = 1
//! ```
//!
//! solved here by a phase-one simplex on a dense tableau. Both outcomes come
//! with a certificate that is checked before the answer is returned: the
//! convex weights `λ`, or a separating direction `w` read off the simplex
//! multipliers of the phase-one optimum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
/// Phase-one objective above which the convex-hull system is infeasible.
const FEAS_TOL: f64 = 1e-9;
const CERT_TOL: f64 = 1e-7;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;
/// Scale of the right-hand-side perturbation used to escape degenerate
/// vertices; small enough that a perturbed convex combination still passes
/// the certificate check.
const PERTURBATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    /// `w·ŷ_i >= margin > 0` for every column after unit normalization.
    Separable { w: DVector<f64>, margin: f64 },
    /// Convex weights with `Σ λ_i ŷ_i ≈ 0`.
    Inseparable { weights: DVector<f64> },
}

impl Separation {
    pub fn is_separable(&self) -> bool {
        matches!(self, Separation::Separable { .. })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Rule {
    Dantzig,
    Bland,
    /// Dantzig pricing with an exact minimum-ratio test, for perturbed
    /// right-hand sides where ties have probability zero.
    Perturbed,
}

struct Tableau {
    rows: usize,
    width: usize,
    n_vars: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    /// Phase-one tableau for `[Y; 1ᵀ] λ + a = (ε, 1)`, with `ε` either zero
    /// or a tiny positive perturbation.
    fn new(y: &DMatrix<f64>, eps: &[f64]) -> Self {
        let (m, n) = y.shape();
        let rows = m + 1;
        let width = n + rows + 1;
        let mut t = vec![0.0; (rows + 1) * width];
        for r in 0..m {
            for j in 0..n {
                t[r * width + j] = y[(r, j)];
            }
            t[r * width + width - 1] = eps[r];
        }
        for j in 0..n {
            t[m * width + j] = 1.0;
        }
        for r in 0..rows {
            t[r * width + n + r] = 1.0;
        }
        t[m * width + width - 1] = 1.0;
        // Reduced costs with all artificials basic.
        let obj = rows * width;
        for j in 0..n {
            let s: f64 = (0..rows).map(|r| t[r * width + j]).sum();
            t[obj + j] = -s;
        }
        t[obj + width - 1] = -(1.0 + eps.iter().sum::<f64>());
        Tableau {
            rows,
            width,
            n_vars: n,
            t,
            basis: (n..n + rows).collect(),
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn reduced_cost(&self, c: usize) -> f64 {
        self.at(self.rows, c)
    }

    fn objective(&self) -> f64 {
        -self.rhs(self.rows)
    }

    fn entering(&self, rule: Rule) -> Option<usize> {
        let mut best = None;
        let mut best_val = -OPT_TOL;
        for j in 0..self.n_vars {
            let d = self.reduced_cost(j);
            if d < best_val {
                best = Some(j);
                match rule {
                    Rule::Bland => return best,
                    Rule::Dantzig | Rule::Perturbed => best_val = d,
                }
            }
        }
        best
    }

    /// Ratio test. Under Dantzig pricing this is Harris's two-pass test:
    /// among rows whose ratio is within the feasibility tolerance of the
    /// minimum, the largest pivot wins, which keeps tiny (noise-level)
    /// pivots out of degenerate vertices. Under Bland's rule ties go to the
    /// lowest basic index, as the anti-cycling argument requires.
    fn leaving(&self, col: usize, rule: Rule) -> Option<usize> {
        let candidates = (0..self.rows).filter(|&r| self.at(r, col) > PIVOT_TOL);
        match rule {
            Rule::Dantzig => {
                let bound = candidates
                    .clone()
                    .map(|r| (self.rhs(r).max(0.0) + FEAS_TOL) / self.at(r, col))
                    .fold(f64::INFINITY, f64::min);
                candidates
                    .filter(|&r| self.rhs(r).max(0.0) / self.at(r, col) <= bound)
                    .max_by(|&x, &y| {
                        self.at(x, col)
                            .partial_cmp(&self.at(y, col))
                            .unwrap()
                            .then_with(|| self.basis[y].cmp(&self.basis[x]))
                    })
            }
            Rule::Perturbed => candidates.min_by(|&x, &y| {
                let (rx, ry) = (
                    self.rhs(x).max(0.0) / self.at(x, col),
                    self.rhs(y).max(0.0) / self.at(y, col),
                );
                rx.partial_cmp(&ry)
                    .unwrap()
                    .then_with(|| self.at(y, col).partial_cmp(&self.at(x, col)).unwrap())
            }),
            Rule::Bland => {
                let mut best: Option<(usize, f64)> = None;
                for r in candidates {
                    let ratio = self.rhs(r).max(0.0) / self.at(r, col);
                    best = match best {
                        Some((br, bratio))
                            if ratio > bratio + 1e-12
                                || (ratio >= bratio - 1e-12 && self.basis[r] > self.basis[br]) =>
                        {
                            Some((br, bratio))
                        }
                        _ => Some((r, ratio)),
                    };
                }
                best.map(|(r, _)| r)
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let (before, rest) = self.t.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        prow.iter_mut().for_each(|v| *v *= inv);
        prow[pc] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[pr] = pc;
    }

    fn solve(&mut self, start: Rule) -> Result<()> {
        let max_iter = 50 * (self.rows + self.n_vars) + 1000;
        let mut rule = start;
        let mut stalled = 0usize;
        for _ in 0..max_iter {
            let Some(col) = self.entering(rule) else {
                return Ok(());
            };
            let Some(row) = self.leaving(col, rule) else {
                return Err(Error::Estimator(
                    "phase-one simplex reported an unbounded direction".into(),
                ));
            };
            let degenerate = start != Rule::Perturbed && self.rhs(row) <= PIVOT_TOL;
            self.pivot(row, col);
            if degenerate {
                stalled += 1;
                if stalled > STALL_LIMIT {
                    rule = Rule::Bland;
                }
            } else {
                stalled = 0;
                rule = start;
            }
        }
        Err(Error::Estimator(format!(
            "simplex did not converge in {max_iter} pivots"
        )))
    }

    /// Reads the certificate off the final tableau and verifies it on the
    /// unit columns `y`; `basis` maps reduced coordinates back.
    fn certificate(&self, y: &DMatrix<f64>, basis: &DMatrix<f64>) -> Option<Separation> {
        let m = self.rows - 1;
        let n = self.n_vars;
        if self.objective() > FEAS_TOL {
            let pi: Vec<f64> = (0..self.rows)
                .map(|r| 1.0 - self.reduced_cost(n + r))
                .collect();
            let w_reduced = DVector::from_iterator(m, pi[..m].iter().map(|p| -p));
            let w = basis * w_reduced;
            let margins = y.transpose() * &w;
            let margin = margins.min();
            (margin > 1e-12 * w.norm()).then_some(Separation::Separable { w, margin })
        } else {
            let mut weights = DVector::zeros(n);
            for (r, &b) in self.basis.iter().enumerate() {
                if b < n {
                    weights[b] = self.rhs(r);
                }
            }
            let total = weights.sum();
            let residual = (y * &weights).amax();
            let ok = weights.min() >= -CERT_TOL
                && (total - 1.0).abs() <= CERT_TOL
                && residual <= CERT_TOL;
            ok.then_some(Separation::Inseparable { weights })
        }
    }
}

/// Orthonormal basis `U_r` of the numerical column space of `y` and the
/// coordinates `U_rᵀ y`. Redundant rows make the tableau degenerate, so
/// every problem is reduced to its rank before pivoting.
fn reduce_rows(y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let svd = y.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    let basis = u.select_columns(&keep);
    let coords = basis.transpose() * y;
    (basis, coords)
}

/// Decides separability of the columns of `y` (already multiplied by their
/// signs): is there `w` with `w·y_i > 0` for every column?
///
/// Columns are scaled to unit length and the rows reduced to the numerical
/// rank, which preserves every linear relation among the columns. The
/// certificate is checked against the unit columns in the original space.
pub fn separate_columns(y: &DMatrix<f64>) -> Result<Separation> {
    let (m, n) = y.shape();
    if n == 0 || m == 0 {
        return Err(Error::validation("points", "empty separability problem"));
    }
    let mut unit = y.clone();
    for (j, mut col) in unit.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            // A signed point at the origin can never satisfy w·y >= 1.
            let mut weights = DVector::zeros(n);
            weights[j] = 1.0;
            return Ok(Separation::Inseparable { weights });
        }
        col /= norm;
    }
    let (basis, reduced) = reduce_rows(&unit);

    let rank = reduced.nrows();
    let zero = vec![0.0; rank];
    // Deterministic, distinct perturbations (golden-ratio sequence in [1, 2)).
    let eps: Vec<f64> = (1..=rank)
        .map(|r| PERTURBATION * (1.0 + (r as f64 * 0.618_033_988_749_894_9).fract()))
        .collect();
    let mut failure = None;
    for (rule, rhs) in [
        (Rule::Dantzig, &zero),
        (Rule::Perturbed, &eps),
        (Rule::Bland, &zero),
    ] {
        let mut tab = Tableau::new(&reduced, rhs);
        match tab.solve(rule) {
            Ok(()) => {
                if let Some(sep) = tab.certificate(&unit, &basis) {
                    return Ok(sep);
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    Err(failure.unwrap_or_else(|| {
        Error::Estimator(format!(
            "separability certificate failed to verify ({n} points in {m} dims, rank {rank})"
        ))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(points: &[&[f64]]) -> DMatrix<f64> {
        let d = points[0].len();
        DMatrix::from_fn(d, points.len(), |r, c| points[c][r])
    }

    #[test]
    fn opposite_points_on_a_line() {
        // (1,0) with +, (-1,0) with -: signed points coincide.
        let y = cols(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(separate_columns(&y).unwrap().is_separable());
    }

    #[test]
    fn surrounded_origin() {
        let y = cols(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        match separate_columns(&y).unwrap() {
            Separation::Inseparable { weights } => {
                assert!((weights.sum() - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_column_is_inseparable() {
        let y = cols(&[&[1.0, 2.0], &[0.0, 0.0]]);
        assert!(!separate_columns(&y).unwrap().is_separable());
    }

    #[test]
    fn certificate_separates() {
        let y = cols(&[&[1.0, 0.2], &[0.5, 1.0], &[2.0, -0.3], &[0.1, 0.1]]);
        match separate_columns(&y).unwrap() {
            Separation::Separable { w, margin } => {
                assert!(margin > 0.0);
                for c in y.column_iter() {
                    assert!(w.dot(&c) > 0.0);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_deficient_problem_converges() {
        // 200 signed points spanning only 4 of 30 dimensions.
        let mut state = 7u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let frame = DMatrix::from_fn(30, 4, |_, _| next());
        let coeffs = DMatrix::from_fn(4, 200, |_, _| next());
        let y = &frame * &coeffs;
        assert!(!separate_columns(&y).unwrap().is_separable());
        let shifted = DMatrix::from_fn(4, 200, |r, c| {
            if r == 0 {
                coeffs[(r, c)].abs() + 0.1
            } else {
                coeffs[(r, c)]
            }
        });
        assert!(separate_columns(&(&frame * shifted))
            .unwrap()
            .is_separable());
    }

    #[test]
    fn tall_problem_is_reduced() {
        // 3 points in 6 dims, linearly independent: always separable.
        let y = cols(&[
            &[1.0, 0.0, 2.0, 0.0, 1.0, 0.0],
            &[0.0, -1.0, 0.0, 1.0, 0.0, 3.0],
            &[-1.0, 1.0, -2.0, -1.0, -1.0, -3.0],
        ]);
        // Third is minus the sum of the first two: 0 in the convex hull.
        assert!(!separate_columns(&y).unwrap().is_separable());
        let y2 = cols(&[
            &[1.0, 0.0, 2.0, 0.0, 1.0, 0.0],
            &[0.0, -1.0, 0.0, 1.0, 0.0, 3.0],
            &[-1.0, 1.0, -2.0, -1.0, 0.0, -3.0],
        ]);
        assert!(separate_columns(&y2).unwrap().is_separable());
    }

    #[test]
    fn degenerate_many_duplicates() {
        // Many copies of the same signed point plus its negation.
        let mut pts: Vec<&[f64]> = vec![&[1.0, 1.0, 0.0]; 30];
        pts.push(&[-1.0, -1.0, 0.0]);
        assert!(!separate_columns(&cols(&pts)).unwrap().is_separable());
        let pts: Vec<&[f64]> = vec![&[1.0, 1.0, 0.0]; 30];
        assert!(separate_columns(&cols(&pts)).unwrap().is_separable());
    }
}
