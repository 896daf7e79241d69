use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use viou_core::affinity::CostMatrix;
use viou_core::assignment::solve;

fn folds(terms: &[f64]) -> (f64, f64) {
    let mut left = 0.0f64;
    for &x in terms {
        left += x;
    }
    let mut right = 0.0f64;
    for &x in terms.iter().rev() {
        right = x + right;
    }
    (left, right)
}

fn main() {
    // Control group: fresh uniform triples from the same RNG family.
    let mut rng = ChaCha8Rng::seed_from_u64(0xA55160);
    let mut diff = 0;
    for _ in 0..1000 {
        let xs: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let (l, r) = folds(&xs);
        if l != r {
            diff += 1;
        }
    }
    println!("control uniform triples: {diff} / 1000 differ");

    // Matched-cost triples.
    let mut rng = ChaCha8Rng::seed_from_u64(0xA55160);
    let mut diff = 0;
    let mut total3 = 0;
    for _case in 0..1000 {
        let rows = rng.random_range(1..=8usize);
        let cols = rng.random_range(1..=8usize);
        let cost: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect();
        let m = CostMatrix::from_parts(rows, cols, cost.clone(), vec![true; rows * cols]);
        let got = solve(&m);
        let terms: Vec<f64> = got.matches.iter().map(|&(i, j, _)| m.cost(i, j)).collect();
        if terms.len() == 3 {
            total3 += 1;
            let (l, r) = folds(&terms);
            if l != r {
                diff += 1;
            } else if total3 <= 2 {
                println!("sample terms: {:?}", terms.iter().map(|t| t.to_bits()).collect::<Vec<_>>());
            }
        }
    }
    println!("matched triples: {diff} / {total3} differ");
}
