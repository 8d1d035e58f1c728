//! Exact optimal transport between equal-size uniform empirical measures.
//!
//! With `n` atoms of mass `1/n` on each side the optimal plan is a permutation,
//! so both the Wasserstein-1 distance and the quadratic matching cost reduce to
//! a linear assignment problem, solved here by shortest augmenting paths with
//! dual potentials in `O(n³)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::NetworkParams;
use crate::tensor::{dist, sq_dist, Matrix};

/// Point cloud `x_1..x_n` in `R^d` with uniform weights `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Matrix,
}

impl EmpiricalMeasure {
    /// Wraps an `n x d` matrix, one point per row.
    pub fn new(points: Matrix) -> Result<Self> {
        if !points.is_finite() {
            return Err(Error::Data("point cloud has non-finite coordinates".into()));
        }
        if points.rows() > 0 && points.cols() == 0 {
            return Err(Error::Data("points must have dimension >= 1".into()));
        }
        Ok(EmpiricalMeasure { points })
    }

    pub fn from_points<R: AsRef<[f64]>>(points: &[R]) -> Result<Self> {
        EmpiricalMeasure::new(Matrix::from_rows(points)?)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.row_iter()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// The first `k` points.
    pub fn head(&self, k: usize) -> EmpiricalMeasure {
        let idx: Vec<usize> = (0..k.min(self.len())).collect();
        EmpiricalMeasure {
            points: self.points.select_rows(&idx),
        }
    }

    pub fn select(&self, indices: &[usize]) -> EmpiricalMeasure {
        EmpiricalMeasure {
            points: self.points.select_rows(indices),
        }
    }
}

/// A map `R^d -> R^p` that can push a point cloud forward.
pub trait TransportMap {
    /// Applies the map to every row of `x`.
    fn apply_batch(&self, x: &Matrix) -> Result<Matrix>;

    fn push_forward(&self, x: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
        EmpiricalMeasure::new(self.apply_batch(x.points())?)
    }
}

impl TransportMap for NetworkParams {
    fn apply_batch(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_batch(x, false)?.0)
    }
}

/// Adapts a per-point closure into a [`TransportMap`].
pub struct FnMap<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64>> TransportMap for FnMap<F> {
    fn apply_batch(&self, x: &Matrix) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = x.row_iter().map(&self.0).collect();
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, x.cols()));
        }
        Matrix::from_rows(&rows)
    }
}

pub struct IdentityMap;

impl TransportMap for IdentityMap {
    fn apply_batch(&self, x: &Matrix) -> Result<Matrix> {
        Ok(x.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// `‖x − y‖` (Wasserstein-1).
    Euclidean,
    /// `‖x − y‖²` (squared Wasserstein-2).
    SquaredEuclidean,
}

impl CostKind {
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            CostKind::Euclidean => dist(x, y),
            CostKind::SquaredEuclidean => sq_dist(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CostKind::Euclidean => "w1",
            CostKind::SquaredEuclidean => "w2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "w1" | "euclidean" => Ok(CostKind::Euclidean),
            "w2" | "squared_euclidean" => Ok(CostKind::SquaredEuclidean),
            _ => Err(Error::Config(format!("unknown cost kind `{s}` (expected w1 or w2)"))),
        }
    }
}

/// Optimal pairing `x_i -> y_{σ(i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub permutation: Vec<usize>,
    /// `c(x_i, y_{σ(i)})` for each `i`.
    pub pair_costs: Vec<f64>,
    /// `(1/n) Σ_i c(x_i, y_{σ(i)})`.
    pub cost: f64,
    pub cost_kind: CostKind,
}

impl Matching {
    fn from_permutation(x: &EmpiricalMeasure, y: &EmpiricalMeasure, permutation: Vec<usize>, kind: CostKind) -> Self {
        let pair_costs: Vec<f64> = permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| kind.eval(x.point(i), y.point(j)))
            .collect();
        let cost = pair_costs.iter().sum::<f64>() / permutation.len() as f64;
        Matching {
            permutation,
            pair_costs,
            cost,
            cost_kind: kind,
        }
    }

    /// Writes `i,sigma_i,cost_i` rows preceded by a comment line with the total.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# total_cost={:e} cost_kind={} n={}",
            self.cost,
            self.cost_kind.name(),
            self.permutation.len()
        )
        .unwrap();
        out.push_str("i,sigma_i,cost_i\n");
        for (i, (&j, c)) in self.permutation.iter().zip(&self.pair_costs).enumerate() {
            writeln!(out, "{i},{j},{c:e}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Cost of the pairing `x_i -> y_{perm(i)}`.
pub fn permutation_cost(x: &EmpiricalMeasure, y: &EmpiricalMeasure, perm: &[usize], kind: CostKind) -> f64 {
    Matching::from_permutation(x, y, perm.to_vec(), kind).cost
}

fn check_pair(x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "empirical measures must have equal size, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Data("empirical measures must be non-empty".into()));
    }
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!(
            "point dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Exact minimum-cost matching between two clouds of equal size.
pub fn solve_assignment(x: &EmpiricalMeasure, y: &EmpiricalMeasure, kind: CostKind) -> Result<Matching> {
    check_pair(x, y)?;
    let n = x.len();
    let mut cost = Matrix::zeros(n, n);
    for i in 0..n {
        let xi = x.point(i);
        for (j, c) in cost.row_mut(i).iter_mut().enumerate() {
            *c = kind.eval(xi, y.point(j));
        }
    }
    let perm = assignment(&cost);
    Ok(Matching::from_permutation(x, y, perm, kind))
}

/// Shortest augmenting path assignment on a dense square cost matrix.
///
/// Rows are inserted one at a time; each insertion runs a Dijkstra-like search
/// over reduced costs `c(i,j) − u_i − v_j` and augments along the shortest path.
/// Ties go to the lowest column index.
fn assignment(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    // 1-based with a virtual column 0 holding the row being inserted
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let crow = cost.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = crow[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[row_of[j] - 1] = j - 1;
    }
    perm
}

/// Largest size accepted by [`brute_force_matching`].
pub const BRUTE_FORCE_MAX: usize = 9;

/// Exhaustive minimum over all `n!` permutations (test oracle, `n ≤ 9`).
/// Among equal-cost permutations the lexicographically first wins.
pub fn brute_force_matching(x: &EmpiricalMeasure, y: &EmpiricalMeasure, kind: CostKind) -> Result<Matching> {
    check_pair(x, y)?;
    let n = x.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::Config(format!(
            "brute force matching is limited to n <= {BRUTE_FORCE_MAX}, got {n}"
        )));
    }
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| kind.eval(x.point(i), y.point(j))).collect())
        .collect();

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        if total < best_cost {
            best_cost = total;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(Matching::from_permutation(x, y, best, kind))
}

/// Advances to the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Wasserstein-1 distance between two equal-size uniform clouds.
pub fn wasserstein1(x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<f64> {
    Ok(solve_assignment(x, y, CostKind::Euclidean)?.cost)
}

/// Quadratic transportation cost `(1/n) Σ ‖x_i − G(x_i)‖²`.
pub fn transport_cost(map: &dyn TransportMap, x: &EmpiricalMeasure) -> Result<f64> {
    let gx = map.apply_batch(x.points())?;
    if gx.shape() != x.points().shape() {
        return Err(Error::Dimension(format!(
            "map output shape {:?} does not match input {:?}",
            gx.shape(),
            x.points().shape()
        )));
    }
    let total: f64 = x.iter().zip(gx.row_iter()).map(|(a, b)| sq_dist(a, b)).sum();
    Ok(total / x.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(pts: &[&[f64]]) -> EmpiricalMeasure {
        EmpiricalMeasure::from_points(pts).unwrap()
    }

    fn random_cloud(rng: &mut impl Rng, n: usize, d: usize) -> EmpiricalMeasure {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        EmpiricalMeasure::from_points(&rows).unwrap()
    }

    #[test]
    fn single_point() {
        let x = cloud(&[&[0.0, 0.0]]);
        let y = cloud(&[&[3.0, 4.0]]);
        let m = solve_assignment(&x, &y, CostKind::Euclidean).unwrap();
        assert_eq!(m.permutation, vec![0]);
        assert_eq!(m.cost, 5.0);
        assert_eq!(solve_assignment(&x, &y, CostKind::SquaredEuclidean).unwrap().cost, 25.0);
    }

    #[test]
    fn crossing_overlap_costs_zero() {
        let x = cloud(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let y = cloud(&[&[1.0, 0.0], &[0.0, 0.0]]);
        for kind in [CostKind::Euclidean, CostKind::SquaredEuclidean] {
            let m = solve_assignment(&x, &y, kind).unwrap();
            assert_eq!(m.permutation, vec![1, 0]);
            assert_eq!(m.cost, 0.0);
            assert_eq!(brute_force_matching(&x, &y, kind).unwrap().cost, 0.0);
        }
    }

    #[test]
    fn monotone_matching_in_one_dimension() {
        let x = cloud(&[&[0.0], &[1.0], &[2.5]]);
        let y = cloud(&[&[0.2], &[1.1], &[3.0]]);
        let m = brute_force_matching(&x, &y, CostKind::SquaredEuclidean).unwrap();
        assert_eq!(m.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn size_errors() {
        let x = cloud(&[&[0.0], &[1.0]]);
        let y = cloud(&[&[0.0]]);
        assert!(solve_assignment(&x, &y, CostKind::Euclidean).is_err());
        let big: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let b = EmpiricalMeasure::from_points(&big).unwrap();
        assert!(brute_force_matching(&b, &b, CostKind::Euclidean).is_err());
        let y2 = cloud(&[&[0.0, 1.0], &[1.0, 1.0]]);
        assert!(solve_assignment(&x, &y2, CostKind::Euclidean).is_err());
    }

    #[test]
    fn agrees_with_brute_force_at_n6() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_cloud(&mut rng, 6, 2);
            let y = random_cloud(&mut rng, 6, 2);
            for kind in [CostKind::Euclidean, CostKind::SquaredEuclidean] {
                let a = solve_assignment(&x, &y, kind).unwrap().cost;
                let b = brute_force_matching(&x, &y, kind).unwrap().cost;
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn point_distances() {
        let x = cloud(&[&[0.0]]);
        assert_eq!(wasserstein1(&x, &x).unwrap(), 0.0);
        assert_eq!(wasserstein1(&x, &cloud(&[&[3.0]])).unwrap(), 3.0);
    }

    #[test]
    fn translation_costs_its_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_cloud(&mut rng, 7, 2);
        let t = [0.3, -0.4];
        let y = FnMap(|p: &[f64]| vec![p[0] + t[0], p[1] + t[1]])
            .push_forward(&x)
            .unwrap();
        let brute = brute_force_matching(&x, &y, CostKind::Euclidean).unwrap().cost;
        assert!((brute - 0.5).abs() < 1e-12);
        assert!((wasserstein1(&x, &y).unwrap() - 0.5).abs() < 1e-12);
        let shifted = FnMap(|p: &[f64]| vec![p[0] + t[0], p[1] + t[1]]);
        assert!((transport_cost(&shifted, &x).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(transport_cost(&IdentityMap, &x).unwrap(), 0.0);
    }

    #[test]
    fn matching_csv_layout() {
        let x = cloud(&[&[0.0], &[1.0]]);
        let y = cloud(&[&[1.0], &[0.0]]);
        let csv = solve_assignment(&x, &y, CostKind::SquaredEuclidean).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# total_cost=0e0 cost_kind=w2 n=2");
        assert_eq!(lines[1], "i,sigma_i,cost_i");
        assert_eq!(lines[2], "0,1,0e0");
    }

    #[test]
    fn next_permutation_enumerates_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }
}
