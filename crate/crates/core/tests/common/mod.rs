#![allow(dead_code)]

use kelly_market::{BinaryBettorState, PositionMatrix, ProbabilitySimplex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Market probabilities from the linear system `(p wᵀ − I) m = 0`, `Σ m = 1`.
/// `w[i][j]` and `p[i][j]` are outcome `i`, bettor `j`.
pub fn oracle_market_probs(w: &[Vec<f64>], p: &[Vec<f64>]) -> Vec<f64> {
    let n = w.len();
    let bettors = w[0].len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            a[i][k] = (0..bettors).map(|j| p[i][j] * w[k][j]).sum::<f64>() - if i == k { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    solve(a, b)
}

/// `c_j = Σ_i w_ij m_i`.
pub fn oracle_credibilities(w: &[Vec<f64>], m: &[f64]) -> Vec<f64> {
    (0..w[0].len()).map(|j| (0..w.len()).map(|i| w[i][j] * m[i]).sum()).collect()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// A random valid position matrix: random trades around flat bankrolls.
pub fn random_positions(rng: &mut ChaCha8Rng, outcomes: usize, bettors: usize) -> Vec<Vec<f64>> {
    // Columns are each bettor's wealth per outcome; rows must sum to one.
    // Mixing flat bankrolls with a random rebalanced market gives both.
    let bankrolls = random_simplex(rng, bettors, 0.05);
    let mut w: Vec<Vec<f64>> = (0..outcomes).map(|_| bankrolls.clone()).collect();
    for _ in 0..3 {
        let estimates: Vec<ProbabilitySimplex> = (0..bettors)
            .map(|_| ProbabilitySimplex::new(&random_simplex(rng, outcomes, 0.1)).unwrap())
            .collect();
        let state = kelly_market::MarketState::new(PositionMatrix::from_rows(&w).unwrap(), &estimates, 0).unwrap();
        let (next, _) = kelly_market::multinomial::step_market(&state, &estimates).unwrap();
        w = next.positions().to_rows();
    }
    w
}

pub fn flat_binary(bankrolls: &[f64]) -> Vec<BinaryBettorState> {
    bankrolls.iter().map(|&b| BinaryBettorState::flat(b).unwrap()).collect()
}

/// Random binary market reached by a few rounds of trading.
pub fn random_binary_market(rng: &mut ChaCha8Rng, bettors: usize) -> Vec<BinaryBettorState> {
    let mut states = flat_binary(&random_simplex(rng, bettors, 0.05));
    for _ in 0..rng.random_range(0..4) {
        let p: Vec<f64> = (0..bettors).map(|_| 0.02 + 0.96 * rng.random::<f64>()).collect();
        states = kelly_market::binary::apply_round(&p, &states).unwrap().updated_states;
    }
    states
}
