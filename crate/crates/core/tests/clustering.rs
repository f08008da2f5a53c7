mod common;

use online_coreset::clustering::{kz_opt, Provenance};
use online_coreset::inconsistency;
use online_coreset::{
    dz_sampling, online_clustering, two_stage_coreset, weighted_kz_solve, CenterSet,
    ClusteringConfig, CoresetConstants, DrawScheme, SeedStream, Stream,
};

fn indep(seed: u64) -> DrawScheme {
    DrawScheme::Independent(SeedStream::new(seed))
}

fn three_blobs(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let centers = vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]];
    common::blobs(n, &centers, 0.3, &mut common::rng(seed))
}

#[test]
fn seeding_finds_separated_clusters() {
    let data = three_blobs(90, 1);
    let mut hits = 0;
    for seed in 0..1000 {
        let s = dz_sampling(&data, 3, 2.0, &indep(seed)).unwrap();
        let mut labels: Vec<usize> = s.indices.iter().map(|i| i % 3).collect();
        labels.sort();
        if labels == vec![0, 1, 2] {
            hits += 1;
        }
    }
    assert!(hits >= 950, "{hits}");
}

#[test]
fn seeding_never_repeats_distinct_points() {
    let data = three_blobs(30, 2);
    for seed in 0..200 {
        let mut s = dz_sampling(&data, 8, 1.0, &indep(seed)).unwrap().indices;
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 8);
    }
}

#[test]
fn stage_one_weight_band() {
    let mut rng = common::rng(4);
    let data: Vec<Vec<f64>> = (0..100)
        .map(|_| common::uniform_point(2, -1.0, 1.0, &mut rng))
        .collect();
    let eps = 0.2;
    let constants = CoresetConstants {
        eps_rescale: 1.0,
        ..CoresetConstants::default()
    };
    let mut mean = 0.0;
    for seed in 0..1000 {
        let c = two_stage_coreset(&data, 3, 2.0, eps, 0.01, &indep(seed), &constants).unwrap();
        mean += c.stage1_total / 1000.0;
    }
    let n = 100.0;
    assert!(mean >= n / (1.0 + eps) && mean <= n * (1.0 + eps), "{mean}");
}

#[test]
fn coreset_sandwich_small() {
    let mut pass = 0;
    let mut total = 0;
    for seed in 0..20u64 {
        let mut rng = common::rng(1000 + seed);
        let mut data = common::blobs(
            200,
            &[vec![-0.4, 0.2], vec![0.3, 0.3], vec![0.0, -0.4]],
            0.1,
            &mut rng,
        );
        let scale = data
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        data.iter_mut()
            .for_each(|p| p.iter_mut().for_each(|v| *v /= scale));
        let c = two_stage_coreset(
            &data,
            3,
            2.0,
            0.2,
            0.01,
            &indep(seed),
            &CoresetConstants::default(),
        )
        .unwrap();
        assert_eq!(
            c.points
                .iter()
                .filter(|p| p.provenance == Provenance::BicriteriaCenter)
                .count(),
            3
        );
        for _ in 0..20 {
            let theta = CenterSet::new(
                (0..3)
                    .map(|_| common::uniform_point(2, -1.0, 1.0, &mut rng))
                    .collect(),
                2.0,
            )
            .unwrap();
            let r = c.loss(&theta) / theta.cost(&data);
            total += 1;
            if (r - 1.0).abs() <= 0.25 {
                pass += 1;
            }
        }
    }
    assert!(pass as f64 >= 0.95 * total as f64, "{pass}/{total}");
}

#[test]
fn solver_close_to_discrete_optimum() {
    let mut rng = common::rng(9);
    let pts: Vec<(Vec<f64>, f64)> = three_blobs(12, 3)
        .into_iter()
        .map(|p| (p, 0.5 + common::uniform_point(1, 0.0, 1.0, &mut rng)[0]))
        .collect();
    let c = weighted_kz_solve(&pts, 3, 2.0, 10, &indep(0)).unwrap();
    let mut best = f64::INFINITY;
    for a in 0..12 {
        for b in a + 1..12 {
            for d in b + 1..12 {
                let cs = CenterSet::new(
                    vec![pts[a].0.clone(), pts[b].0.clone(), pts[d].0.clone()],
                    2.0,
                )
                .unwrap();
                best = best.min(cs.weighted_cost(&pts));
            }
        }
    }
    assert!(c.weighted_cost(&pts) <= 1.1 * best);
}

#[test]
fn local_search_for_z_one() {
    let pts: Vec<(Vec<f64>, f64)> = vec![(vec![0.0], 1.0), (vec![1.0], 1.0), (vec![10.0], 1.0)];
    let c = weighted_kz_solve(&pts, 1, 1.0, 3, &indep(1)).unwrap();
    // the weighted median minimizes the sum of distances
    assert_eq!(c.centers()[0], vec![1.0]);
}

#[test]
fn weighted_centroid_for_one_center() {
    let pts = vec![
        (vec![0.0, 1.0], 1.0),
        (vec![3.0, -1.0], 3.0),
        (vec![1.0, 2.0], 0.5),
    ];
    let c = weighted_kz_solve(&pts, 1, 2.0, 4, &indep(2)).unwrap();
    let w: f64 = 4.5;
    let expect = [(0.0 + 9.0 + 0.5) / w, (1.0 - 3.0 + 1.0) / w];
    assert!((c.centers()[0][0] - expect[0]).abs() < 1e-10);
    assert!((c.centers()[0][1] - expect[1]).abs() < 1e-10);
}

#[test]
fn k_equals_n_pays_distance_to_earlier_points() {
    let pts = vec![
        vec![0.1, 0.0],
        vec![0.0, 0.3],
        vec![-0.2, 0.1],
        vec![0.4, 0.4],
    ];
    let stream = Stream::as_given(pts.clone()).unwrap();
    let r = online_clustering(&stream, &ClusteringConfig::new(2, 4, 2.0, 0.3), 0).unwrap();
    let mut expected = vec![0.01];
    for t in 1..4 {
        let prior = CenterSet::new(pts[..t].to_vec(), 2.0).unwrap();
        expected.push(prior.assign(&pts[t]).1);
    }
    for (got, want) in r.ledger.step_losses.iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn online_run_is_reproducible_and_lazy_is_stable() {
    let data = three_blobs(150, 7);
    let scale = 15.0;
    let data: Vec<Vec<f64>> = data
        .iter()
        .map(|p| p.iter().map(|v| v / scale).collect())
        .collect();
    let stream = online_coreset::random_order(data.clone(), 3).unwrap();
    let mut cfg = ClusteringConfig::new(2, 3, 2.0, 0.3);
    let a = online_clustering(&stream, &cfg, 11).unwrap();
    let b = online_clustering(&stream, &cfg, 11).unwrap();
    assert_eq!(a.ledger.step_losses, b.ledger.step_losses);
    cfg.mode = online_coreset::UpdateMode::Lazy;
    let lazy = online_clustering(&stream, &cfg, 11).unwrap();
    assert!(lazy.resolves <= a.resolves);
    assert!(inconsistency(&lazy.ledger) <= inconsistency(&a.ledger));
    // the oracle must at least beat the empty-prefix default
    let (_, opt) = kz_opt(&data, 3, 2.0, 20, &indep(0)).unwrap();
    assert!(
        opt <= data
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
    );
}
