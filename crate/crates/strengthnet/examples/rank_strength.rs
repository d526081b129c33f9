//! Trains a pairwise ranker on points whose strength is a known linear
//! attribute, compares the learned direction against a brute-force grid
//! search of the same objective, and scores held-out points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strengthnet::rank::{
    brute_force_rank_oracle, score, train_ranker, PairSets, SolverConfig,
};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn main() {
    // True attribute grows along (0.8, 0.6); the second axis carries no
    // strength information beyond that direction.
    let true_dir = [0.8f64, 0.6];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut points = Vec::new();
    let mut strengths = Vec::new();
    for _ in 0..120 {
        let s: f64 = rng.gen();
        let noise = [rng.gen::<f64>() * 0.02, rng.gen::<f64>() * 0.02];
        points.push(vec![
            s * true_dir[0] + noise[0],
            s * true_dir[1] + noise[1],
        ]);
        strengths.push(s);
    }

    // Ordered pairs point from the stronger row to the weaker one.
    // Similar pairs tie rows whose strengths are nearly equal.
    let mut ordered = Vec::new();
    let mut similar = Vec::new();
    for _ in 0..200 {
        let i = rng.gen_range(0..points.len());
        let j = rng.gen_range(0..points.len());
        if (strengths[i] - strengths[j]).abs() < 0.05 {
            continue;
        }
        if strengths[i] > strengths[j] {
            ordered.push((i, j));
        } else {
            ordered.push((j, i));
        }
    }
    'outer: for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (strengths[i] - strengths[j]).abs() < 0.01 {
                similar.push((i, j));
                if similar.len() == 40 {
                    break 'outer;
                }
            }
        }
    }
    let pairs = PairSets {
        ordered,
        similar,
        features: points.clone(),
        emotion: "happy".into(),
        dataset_id: "demo".into(),
    };
    assert!(pairs.is_well_formed());
    println!("{} ordered pairs, {} similar pairs", pairs.ordered.len(), pairs.similar.len());

    // Standardization is off so the learned w lives in the original
    // coordinates and is directly comparable to the oracle grid.
    let config = SolverConfig { standardize: false, ..SolverConfig::default() };
    let fit = train_ranker(&pairs, &config).unwrap();
    println!(
        "solver: converged {}, {} iterations, w [{:.4}, {:.4}]",
        fit.converged, fit.iterations, fit.model.w[0], fit.model.w[1]
    );

    let oracle_w = brute_force_rank_oracle(&pairs, config.c, 400).unwrap();
    println!("oracle: w [{:.4}, {:.4}]", oracle_w[0], oracle_w[1]);
    let cos_oracle = cosine(&fit.model.w, &oracle_w);
    let cos_true = cosine(&fit.model.w, &true_dir);
    println!("cosine to oracle {cos_oracle:.5}, cosine to true direction {cos_true:.5}");
    assert!(cos_oracle > 0.99);

    let satisfied = pairs
        .ordered
        .iter()
        .filter(|&&(hi, lo)| {
            fit.model.raw_score(&points[hi]).unwrap() > fit.model.raw_score(&points[lo]).unwrap()
        })
        .count();
    println!("ordered constraints satisfied: {satisfied}/{}", pairs.ordered.len());

    // Normalized scores land in [0, 1] and follow the hidden attribute.
    println!("\nheld-out scores:");
    for s in [0.05, 0.35, 0.65, 0.95] {
        let x = vec![s * true_dir[0], s * true_dir[1]];
        let got = score(&fit.model, &x).unwrap();
        println!("  attribute {s:.2} -> score {:.3}", got.value);
    }
}
