//! Generalized optimal subpattern assignment (GOSPA) metric between two
//! finite sets of 2D positions, with its localization / missed / false split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GospaParams {
    pub p: f64,
    pub c: f64,
    pub beta: f64,
}

impl Default for GospaParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            c: 20.0,
            beta: 2.0,
        }
    }
}

impl GospaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("GOSPA p must be >= 1, got {}", self.p)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("GOSPA c must be positive, got {}", self.c)));
        }
        if self.beta != 2.0 {
            return Err(Error::InvalidParameter(format!(
                "only beta = 2 is supported, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Metric value and its decomposition. The three terms are contributions to
/// the `p`-th power of the total, so for `p = 1` they add up to `total`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GospaResult {
    pub total: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_: f64,
}

fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn gospa(truth: &[[f64; 2]], estimates: &[[f64; 2]], params: &GospaParams) -> Result<GospaResult> {
    params.validate()?;
    let cap = params.c.powf(params.p);
    let half = cap / params.beta;
    let pair_cost = |i: usize, j: usize| distance(&truth[i], &estimates[j]).powf(params.p).min(cap);

    let (n, m) = (truth.len(), estimates.len());
    // rows are the smaller set
    let assignment: Vec<(usize, usize)> = if n <= m {
        let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| pair_cost(i, j)).collect()).collect();
        hungarian(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| pair_cost(i, j)).collect()).collect();
        hungarian(&cost).into_iter().enumerate().map(|(j, i)| (i, j)).collect()
    };

    let mut localization = 0.0;
    let mut matched = 0usize;
    for &(i, j) in &assignment {
        let d = distance(&truth[i], &estimates[j]).powf(params.p);
        if d < cap {
            localization += d;
            matched += 1;
        }
    }
    let missed = half * (n - matched) as f64;
    let false_ = half * (m - matched) as f64;
    Ok(GospaResult {
        total: (localization + missed + false_).powf(1.0 / params.p),
        localization,
        missed,
        false_,
    })
}

/// Minimum-cost assignment of every row to a distinct column for an
/// `n x m` cost matrix with `n <= m`. Returns the column of each row.
///
/// Shortest augmenting paths with row and column potentials, `O(n^2 m)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= columns");
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
    let mut col_of = vec![0usize; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum over every partial matching, straight from the definition.
    fn exhaustive(truth: &[[f64; 2]], est: &[[f64; 2]], p: f64, c: f64) -> f64 {
        fn rec(i: usize, truth: &[[f64; 2]], est: &[[f64; 2]], used: &mut Vec<bool>, p: f64, c: f64, acc: f64, best: &mut f64) {
            if i == truth.len() {
                let unused = used.iter().filter(|u| !**u).count();
                let v = acc + c.powf(p) / 2.0 * unused as f64;
                if v < *best {
                    *best = v;
                }
                return;
            }
            // leave truth i unassigned
            rec(i + 1, truth, est, used, p, c, acc + c.powf(p) / 2.0, best);
            for j in 0..est.len() {
                if !used[j] {
                    used[j] = true;
                    let d = distance(&truth[i], &est[j]).powf(p);
                    rec(i + 1, truth, est, used, p, c, acc + d, best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, truth, est, &mut vec![false; est.len()], p, c, 0.0, &mut best);
        best.powf(1.0 / p)
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<[f64; 2]> {
        (0..n).map(|_| [rng.random_range(0.0..span), rng.random_range(0.0..span)]).collect()
    }

    #[test]
    fn examples() {
        let g = GospaParams::default();
        let a = [[1.0, 2.0], [5.0, 5.0]];
        assert_eq!(gospa(&a, &a, &g).unwrap().total, 0.0);
        let r = gospa(&[[3.0, 3.0]], &[], &g).unwrap();
        assert_eq!((r.total, r.missed, r.false_), (10.0, 10.0, 0.0));
        let r = gospa(&[[0.0, 0.0]], &[[3.0, 4.0]], &g).unwrap();
        assert!((r.total - 5.0).abs() < 1e-12 && (r.localization - 5.0).abs() < 1e-12);
        let far = gospa(&[[0.0, 0.0]], &[[30.0, 0.0]], &g).unwrap();
        assert_eq!((far.total, far.localization, far.missed, far.false_), (20.0, 0.0, 10.0, 10.0));
        assert_eq!(gospa(&[], &[], &g).unwrap().total, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gospa(&[], &[], &GospaParams { beta: 1.0, ..Default::default() }).is_err());
        assert!(gospa(&[], &[], &GospaParams { p: 0.5, ..Default::default() }).is_err());
        assert!(gospa(&[], &[], &GospaParams { c: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn matches_exhaustive_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..400 {
            let n = rng.random_range(0..=6);
            let m = rng.random_range(0..=6);
            let span = if trial % 3 == 0 { 80.0 } else { 32.0 };
            let x = random_set(&mut rng, n, span);
            let y = random_set(&mut rng, m, span);
            for p in [1.0, 2.0] {
                let g = GospaParams { p, ..Default::default() };
                let got = gospa(&x, &y, &g).unwrap();
                let want = exhaustive(&x, &y, p, 20.0);
                assert!((got.total - want).abs() < 1e-12 * want.max(1.0), "{got:?} vs {want}");
                if p == 1.0 {
                    assert!((got.total - (got.localization + got.missed + got.false_)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn hungarian_against_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(n..=6);
            let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
            let a = hungarian(&cost);
            let got: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            let mut cols: Vec<usize> = a.clone();
            cols.sort_unstable();
            cols.dedup();
            assert_eq!(cols.len(), n);
            // brute force over injective maps
            fn best(i: usize, cost: &[Vec<f64>], used: &mut [bool]) -> f64 {
                if i == cost.len() {
                    return 0.0;
                }
                let mut b = f64::INFINITY;
                for j in 0..used.len() {
                    if !used[j] {
                        used[j] = true;
                        b = b.min(cost[i][j] + best(i + 1, cost, used));
                        used[j] = false;
                    }
                }
                b
            }
            let want = best(0, &cost, &mut vec![false; m]);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn far_spurious_estimate_adds_half_cap() {
        let g = GospaParams::default();
        let x = [[3.0, 3.0], [10.0, 12.0]];
        let y = [[3.5, 2.0], [9.0, 12.5]];
        let base = gospa(&x, &y, &g).unwrap().total;
        let more = gospa(&x, &[y[0], y[1], [200.0, 200.0]], &g).unwrap().total;
        assert!((more - base - 10.0).abs() < 1e-12);
    }

    fn point_set() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec((0.0f64..32.0, 0.0f64..32.0).prop_map(|(a, b)| [a, b]), 0..5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn metric_axioms(x in point_set(), y in point_set(), z in point_set()) {
            let g = GospaParams::default();
            let d = |a: &[[f64; 2]], b: &[[f64; 2]]| gospa(a, b, &g).unwrap().total;
            prop_assert!(d(&x, &x).abs() < 1e-12);
            prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-9);
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
        }
    }
}
