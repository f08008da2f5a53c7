mod common;

use online_coreset::clustering::{dz_sampling, CenterSet, KzLoss};
use online_coreset::coreset::{deletion_stability, grid_sensitivities};
use online_coreset::sensitivity::{uniform_sensitivities, SelectionSampler};
use online_coreset::{
    coreset_loss, estimate_average_sensitivity, sensitivity_sample, DrawScheme, EstimationMode,
    SeedStream, SensitivityProfile, WeightNormalization,
};

fn indep(seed: u64) -> DrawScheme {
    DrawScheme::Independent(SeedStream::new(seed))
}

#[test]
fn uniform_profile_total_weight() {
    let profile = SensitivityProfile::uniform(4).unwrap();
    let trials = 200;
    let mean: f64 = (0..trials)
        .map(|s| {
            sensitivity_sample(&profile, 1000, 0.2, &indep(s), WeightNormalization::PerDraw)
                .unwrap()
                .total_weight()
        })
        .sum::<f64>()
        / trials as f64;
    assert!((3.63 - 0.05..=4.0 + 0.05).contains(&mean), "{mean}");
    // E[1/(1 + 0.1 U)] = ln(1.1) / 0.1
    assert!((mean - 4.0 * 1.1f64.ln() / 0.1).abs() < 0.01);
}

#[test]
fn weighted_loss_is_unbiased_up_to_perturbation() {
    let data: Vec<f64> = (0..10).map(|i| 0.05 + 0.09 * i as f64).collect();
    let theta = 0.3;
    let loss = |t: &f64, x: &f64| (t - x).abs();
    let sigma: Vec<f64> = data.iter().map(|x| loss(&theta, x) + 0.05).collect();
    let profile = SensitivityProfile::new(sigma).unwrap();
    let full: f64 = data.iter().map(|x| loss(&theta, x)).sum();
    let eps = 0.2;
    let trials = 10_000;
    let mean = (0..trials)
        .map(|s| {
            let c = sensitivity_sample(&profile, 5, eps, &indep(s), WeightNormalization::PerDraw)
                .unwrap();
            coreset_loss(&c, &data, &theta, &loss).unwrap()
        })
        .sum::<f64>()
        / trials as f64;
    let shrink = (1.0 + eps / 2.0f64).ln() / (eps / 2.0);
    assert!(
        mean >= full * shrink * 0.98 && mean <= full * 1.02,
        "{mean} vs {full}"
    );
}

#[test]
fn clustering_coreset_from_generic_sampler() {
    let k = 3;
    let mut pass = 0;
    let mut total = 0;
    for seed in 0..100u64 {
        let mut rng = common::rng(seed);
        let centers = vec![vec![-0.5, 0.0], vec![0.4, 0.4], vec![0.2, -0.5]];
        let data = common::blobs(50, &centers, 0.1, &mut rng);
        let seeding = dz_sampling(&data, k, 2.0, &indep(seed).child("seed", 0)).unwrap();
        let assigned: Vec<(usize, f64)> = data.iter().map(|p| seeding.centers.assign(p)).collect();
        let cost: f64 = assigned.iter().map(|a| a.1).sum();
        let mut sizes = vec![0.0; k];
        for a in &assigned {
            sizes[a.0] += 1.0;
        }
        let sigma = assigned
            .iter()
            .map(|&(c, l)| l / cost + 1.0 / sizes[c])
            .collect();
        let profile = SensitivityProfile::new(sigma).unwrap();
        let c = sensitivity_sample(
            &profile,
            500,
            0.1,
            &indep(seed).child("draw", 0),
            WeightNormalization::PerDraw,
        )
        .unwrap();
        for _ in 0..20 {
            let theta = CenterSet::new(
                (0..k)
                    .map(|_| common::uniform_point(2, -1.0, 1.0, &mut rng))
                    .collect(),
                2.0,
            )
            .unwrap();
            let approx = coreset_loss(&c, &data, &theta, &KzLoss).unwrap();
            let exact = theta.cost(&data);
            total += 1;
            if (approx / exact - 1.0).abs() <= 0.15 {
                pass += 1;
            }
        }
    }
    assert!(pass as f64 >= 0.95 * total as f64, "{pass}/{total}");
}

#[test]
fn uniform_pick_on_two_points() {
    let s = SelectionSampler::new(1, uniform_sensitivities::<f64>);
    let b = estimate_average_sensitivity(&s, &[0.0, 1.0], EstimationMode::Exhaustive, 0).unwrap();
    assert!((b.value - 0.5).abs() < 1e-12);
}

#[test]
fn uniform_pick_halves_when_n_doubles() {
    let s = SelectionSampler::new(1, uniform_sensitivities::<f64>);
    let beta = |n: usize| {
        let data: Vec<f64> = (0..n).map(|i| i as f64).collect();
        estimate_average_sensitivity(&s, &data, EstimationMode::Exhaustive, 0)
            .unwrap()
            .value
    };
    let ratio = beta(4) / beta(8);
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}

#[test]
fn monte_carlo_agrees_with_exhaustive() {
    let s = SelectionSampler::new(2, |d: &[f64]| {
        d.iter().map(|x| 1.0 + x).collect::<Vec<f64>>()
    });
    let data = vec![0.0, 1.0, 2.0, 3.0];
    let exact = estimate_average_sensitivity(&s, &data, EstimationMode::Exhaustive, 0).unwrap();
    let mc =
        estimate_average_sensitivity(&s, &data, EstimationMode::MonteCarlo { trials: 20_000 }, 9)
            .unwrap();
    assert!(
        (exact.value - mc.value).abs() <= mc.error_bar,
        "{exact:?} {mc:?}"
    );
}

fn center_grid(k: usize) -> Vec<CenterSet> {
    let axis: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let singles: Vec<Vec<f64>> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
        .collect();
    match k {
        1 => singles
            .into_iter()
            .map(|c| CenterSet::new(vec![c], 2.0).unwrap())
            .collect(),
        _ => singles
            .iter()
            .enumerate()
            .flat_map(|(i, a)| {
                singles[i + 1..]
                    .iter()
                    .map(move |b| CenterSet::new(vec![a.clone(), b.clone()], 2.0).unwrap())
            })
            .collect(),
    }
}

#[test]
fn deletion_stability_on_small_instances() {
    for k in [1, 2] {
        let grid = center_grid(k);
        for seed in 0..20 {
            let mut rng = common::rng(100 + seed);
            let n = 3 + (seed as usize % 4);
            let data: Vec<Vec<f64>> = (0..n)
                .map(|_| common::uniform_point(2, -1.0, 1.0, &mut rng))
                .collect();
            let sigma = grid_sensitivities(&KzLoss, &data, &grid);
            assert!(sigma.iter().sum::<f64>() >= 1.0 - 1e-12);
            let s = deletion_stability(&KzLoss, &data, &grid).unwrap();
            assert_eq!(s.monotonicity_violations, 0);
            assert!(s.total_change <= s.total + 1e-12, "{s:?}");
            assert!(s.probability_change <= 2.0 + 1e-12, "{s:?}");
        }
    }
}
