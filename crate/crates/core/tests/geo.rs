use goar_core::attribution::{attr_random, l2_norm, unit_sphere, Attribution, Method};
use goar_core::data::{apply_matrix, make_gmm, random_rotation, GmmSpec};
use goar_core::geo::{
    perturb_dataset, project_to_manifold, project_to_manifold_with_noise, strength_to_timestep,
    CanonicalScale, DiffusionSchedule, GmmPrior, ProjectionConfig,
};
use rand::Rng;
use rand_distr::StandardNormal;

fn prior64() -> (GmmSpec, GmmPrior) {
    let spec = GmmSpec::symmetric(64, 0.3, 100);
    let prior = GmmPrior::from_spec(&spec).unwrap();
    (spec, prior)
}

#[test]
fn zero_strength_without_extra_noise_is_identity() {
    let (spec, prior) = prior64();
    let data = make_gmm(&spec, 1).unwrap();
    let cfg = ProjectionConfig { extra_noise_fraction: 0.0, ..ProjectionConfig::default() };
    let s = DiffusionSchedule::default();
    let v = unit_sphere(&mut goar_core::seed::rng(2), 64);
    for x in data.features.iter().take(10) {
        assert_eq!(&project_to_manifold(x, &v, 0.0, &cfg, &prior, &s, 1.0).unwrap(), x);
    }
    let attr = attr_random(&data, 3).unwrap();
    let scale = CanonicalScale::from_dataset(&data).unwrap();
    assert_eq!(perturb_dataset(&data, &attr, 0.0, &cfg, &prior, &s, &scale).unwrap(), data);
}

#[test]
fn non_unit_feature_is_rejected() {
    let (_, prior) = prior64();
    let s = DiffusionSchedule::default();
    let r = project_to_manifold(&[0.0; 64], &[0.5; 64], 1.0, &ProjectionConfig::default(), &prior, &s, 1.0);
    assert!(r.is_err());
}

#[test]
fn strength_mapping_is_monotone() {
    let s = DiffusionSchedule::default();
    let mut last = 0;
    for i in 0..400 {
        let t = strength_to_timestep(i as f64 * 0.25, &s, 64, 0.5).unwrap();
        assert!(t >= last);
        last = t;
    }
}

#[test]
fn projection_moves_shifted_points_toward_the_prior() {
    let (spec, prior) = prior64();
    let data = make_gmm(&spec, 5).unwrap();
    let s = DiffusionSchedule::default();
    let cfg = ProjectionConfig::default();
    let std = data.mean_coordinate_std();
    let strength = 3.0 * spec.cov_scale.sqrt() * 8.0;
    let mut rng = goar_core::seed::rng(9);
    let mut improved = 0;
    for (i, x) in data.features.iter().take(200).enumerate() {
        let v = unit_sphere(&mut rng, 64);
        let shifted: Vec<f64> = x.iter().zip(&v).map(|(x, v)| x - strength * v).collect();
        let cfg = ProjectionConfig { seed: i as u64, ..cfg.clone() };
        let out = project_to_manifold(x, &v, strength, &cfg, &prior, &s, std).unwrap();
        if prior.log_density(&out).unwrap() > prior.log_density(&shifted).unwrap() {
            improved += 1;
        }
    }
    assert!(improved >= 180, "{improved} of 200 improved");
}

#[test]
fn projection_commutes_with_rotation() {
    let d = 16;
    let spec = GmmSpec::symmetric(d, 0.3, 20);
    let prior = GmmPrior::from_spec(&spec).unwrap();
    let rot = random_rotation(d, 4).unwrap();
    let rotated_prior = prior.map_means(|m| apply_matrix(&rot, m).unwrap(), 1.0).unwrap();
    let s = DiffusionSchedule::default();
    let cfg = ProjectionConfig::default();
    let data = make_gmm(&spec, 6).unwrap();
    let mut rng = goar_core::seed::rng(7);
    for (i, x) in data.features.iter().enumerate().take(20) {
        let v = unit_sphere(&mut rng, d);
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let strength = 0.5 * i as f64;
        let plain = project_to_manifold_with_noise(x, &v, strength, &g, &cfg, &prior, &s, 1.0).unwrap();
        let turned = project_to_manifold_with_noise(
            &apply_matrix(&rot, x).unwrap(),
            &apply_matrix(&rot, &v).unwrap(),
            strength,
            &apply_matrix(&rot, &g).unwrap(),
            &cfg,
            &rotated_prior,
            &s,
            1.0,
        )
        .unwrap();
        let expected = apply_matrix(&rot, &plain).unwrap();
        for (a, b) in turned.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn perturbation_keeps_labels_and_is_seeded() {
    let (spec, prior) = prior64();
    let data = make_gmm(&GmmSpec { samples_per_class: 20, ..spec }, 2).unwrap();
    let attr = attr_random(&data, 1).unwrap();
    let s = DiffusionSchedule::default();
    let scale = CanonicalScale::from_dataset(&data).unwrap();
    let cfg = ProjectionConfig { seed: 3, ..ProjectionConfig::default() };
    let a = perturb_dataset(&data, &attr, 4.0, &cfg, &prior, &s, &scale).unwrap();
    let b = perturb_dataset(&data, &attr, 4.0, &cfg, &prior, &s, &scale).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.labels, data.labels);
    assert_eq!(a.dim, data.dim);
    let other = perturb_dataset(&data, &attr, 4.0, &ProjectionConfig { seed: 4, ..cfg }, &prior, &s, &scale).unwrap();
    assert_ne!(a, other);
}

#[test]
fn shift_only_mode_returns_shifted_points() {
    let (spec, prior) = prior64();
    let data = make_gmm(&GmmSpec { samples_per_class: 5, ..spec }, 2).unwrap();
    let v: Vec<Vec<f64>> = (0..data.len()).map(|i| unit_sphere(&mut goar_core::seed::rng(i as u64), 64)).collect();
    let attr = Attribution::new(v.clone(), Method::Grad).unwrap();
    let s = DiffusionSchedule::default();
    let scale = CanonicalScale::from_dataset(&data).unwrap();
    let cfg = ProjectionConfig { project: false, ..ProjectionConfig::default() };
    let out = perturb_dataset(&data, &attr, 2.0, &cfg, &prior, &s, &scale).unwrap();
    for ((o, x), v) in out.features.iter().zip(&data.features).zip(&v) {
        for j in 0..64 {
            assert_eq!(o[j], x[j] - 2.0 * v[j]);
        }
    }
    assert!(v.iter().all(|v| (l2_norm(v) - 1.0).abs() < 1e-12));
}

#[test]
fn small_shift_keeps_the_cluster() {
    let (spec, prior) = prior64();
    let data = make_gmm(&spec, 8).unwrap();
    let std = data.mean_coordinate_std();
    let s = DiffusionSchedule::default();
    let mut rng = goar_core::seed::rng(12);
    let nearest = |z: &[f64]| {
        let d = |m: &[f64]| z.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        usize::from(d(&spec.means[1]) < d(&spec.means[0]))
    };
    for (i, (x, &y)) in data.features.iter().zip(&data.labels).take(100).enumerate() {
        let v = unit_sphere(&mut rng, 64);
        let cfg = ProjectionConfig { seed: i as u64, ..ProjectionConfig::default() };
        let out = project_to_manifold(x, &v, 0.1, &cfg, &prior, &s, std).unwrap();
        assert_eq!(nearest(&out), y);
        // Without the extra noise a shift this small maps to timestep 0 and is kept as is.
        let bare = ProjectionConfig { extra_noise_fraction: 0.0, ..cfg };
        let out = project_to_manifold(x, &v, 0.1, &bare, &prior, &s, std).unwrap();
        let target: Vec<f64> = x.iter().zip(&v).map(|(x, v)| x - 0.1 * v).collect();
        assert_eq!(out, target);
    }
}
