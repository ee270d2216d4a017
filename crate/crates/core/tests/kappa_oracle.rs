use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crosscat_core::stats::{agreement, fleiss_kappa, reduce_pair};
use crosscat_core::{Error, Topic};

/// Textbook Fleiss: per-item agreement P_i, its mean, and chance agreement
/// from the marginal proportions, all in floating point over a count table.
fn textbook(table: &[Vec<usize>]) -> f64 {
    let n_items = table.len() as f64;
    let n = table[0].iter().sum::<usize>() as f64;
    let k = table[0].len();
    let p_bar = table
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|&c| (c * c) as f64).sum();
            (s - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;
    let p_e: f64 = (0..k)
        .map(|j| {
            let pj = table.iter().map(|row| row[j] as f64).sum::<f64>() / (n_items * n);
            pj * pj
        })
        .sum();
    (p_bar - p_e) / (1.0 - p_e)
}

fn to_items(table: &[Vec<usize>], cats: &[Topic]) -> Vec<Vec<Topic>> {
    table
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .flat_map(|(j, &c)| std::iter::repeat(cats[j]).take(c))
                .collect()
        })
        .collect()
}

#[test]
fn matches_textbook_on_random_tables() {
    let cats: Vec<Topic> = Topic::all().take(5).collect();
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let raters = rng.gen_range(2..=6);
        let table: Vec<Vec<usize>> = (0..20)
            .map(|_| {
                let mut row = vec![0; 5];
                for _ in 0..raters {
                    row[rng.gen_range(0..5)] += 1;
                }
                row
            })
            .collect();
        let items = to_items(&table, &cats);
        let ours = fleiss_kappa(&items).unwrap();
        let want = textbook(&table);
        assert!((ours - want).abs() <= 1e-9, "{ours} vs {want}");
        checked += 1;
    }
}

#[test]
fn perfect_agreement_is_one() {
    let cats: Vec<Topic> = Topic::all().take(5).collect();
    let items: Vec<Vec<Topic>> = (0..20).map(|i| vec![cats[i % 5]; 3]).collect();
    assert_eq!(fleiss_kappa(&items).unwrap(), 1.0);
}

#[test]
fn single_category_is_degenerate() {
    let items = vec![vec![Topic::Internet; 2]; 4];
    assert!(matches!(fleiss_kappa(&items), Err(Error::DegenerateAgreement)));
}

#[test]
fn reduction_respects_coincidence() {
    use Topic::*;
    assert_eq!(reduce_pair(&[Internet, System], &[System]), (System, System));
    assert_eq!(reduce_pair(&[Internet], &[Database, System]), (Internet, Database));
    let rep = agreement(&[
        vec![vec![Internet, Security], vec![Security]],
        vec![vec![Database], vec![Database, System]],
        vec![vec![Internet], vec![System]],
    ])
    .unwrap();
    assert_eq!(
        rep.reduced,
        vec![vec![Security, Security], vec![Database, Database], vec![Internet, System]]
    );
}
