//! Randomized invariant checks for the core estimators.
//!
//! Exact floating-point equalities below lean on a lattice trick: data
//! on multiples of 1/8 and translations or scale factors that are
//! integers or powers of two keep every intermediate arithmetic step
//! exact, so equivariances that hold in exact arithmetic hold bit for
//! bit here too.

use momkde_core::bandwidth::{cv_score, fold_assignments};
use momkde_core::metrics::{auc, js_divergence, kl_divergence};
use momkde_core::rkde::fit_rkde;
use momkde_core::{
    integrate_on_grid, normalize_density, partition_blocks, project_simplex, EvaluationGrid,
    KernelFamily, KernelSpec, Label, MomEstimate, Points, RobustLoss, WeightedDensityEstimate,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family(index: usize) -> KernelFamily {
    KernelFamily::ALL[index % KernelFamily::ALL.len()]
}

/// Coordinates on the 1/8 lattice, exactly representable.
fn lattice_points(raw: &[i16]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 8.0).collect()
}

proptest! {
    #[test]
    fn projected_vectors_land_on_the_simplex(
        v in prop::collection::vec(-100.0f64..100.0, 1..12),
    ) {
        let w = project_simplex(&v).unwrap();
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10, "sum {sum}");
    }

    #[test]
    fn projection_is_idempotent(
        v in prop::collection::vec(-50.0f64..50.0, 1..10),
    ) {
        let once = project_simplex(&v).unwrap();
        let twice = project_simplex(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_is_nonexpansive(
        u in prop::collection::vec(-50.0f64..50.0, 2..10),
        shift in prop::collection::vec(-1.0f64..1.0, 2..10),
    ) {
        let n = u.len().min(shift.len());
        let u = &u[..n];
        let v: Vec<f64> = u.iter().zip(&shift[..n]).map(|(a, d)| a + d).collect();
        let pu = project_simplex(u).unwrap();
        let pv = project_simplex(&v).unwrap();
        let dist = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        prop_assert!(dist(&pu, &pv) <= dist(u, &v) + 1e-12);
    }

    #[test]
    fn partitions_cover_every_index_with_balanced_blocks(
        n in 1usize..200,
        num_blocks in 1usize..12,
        seed in any::<u64>(),
    ) {
        prop_assume!(num_blocks <= n);
        let partition = partition_blocks(n, num_blocks, seed).unwrap();
        let sizes = partition.block_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        let min = sizes.iter().min().unwrap();
        let max = sizes.iter().max().unwrap();
        prop_assert!(max - min <= 1);
        prop_assert!(sizes.iter().all(|s| *s > 0));
        let mut seen = vec![false; n];
        for block in 0..num_blocks {
            let indices = partition.block_indices(block);
            prop_assert!(indices.windows(2).all(|p| p[0] < p[1]));
            prop_assert_eq!(indices.len(), sizes[block]);
            for i in indices {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn kde_is_translation_equivariant(
        raw in prop::collection::vec(-16i16..16, 2..20),
        query in -16i16..16,
        translation in -64i16..64,
        h_eighths in 2i16..16,
        family_index in 0usize..6,
    ) {
        let data = lattice_points(&raw);
        let shifted: Vec<f64> =
            data.iter().map(|x| x + f64::from(translation)).collect();
        let h = f64::from(h_eighths) / 8.0;
        let kernel = KernelSpec::new(family(family_index), 1).unwrap();
        let base = WeightedDensityEstimate::uniform(
            Points::new(data, 1).unwrap(), h, kernel.clone(),
        ).unwrap();
        let moved = WeightedDensityEstimate::uniform(
            Points::new(shifted, 1).unwrap(), h, kernel,
        ).unwrap();
        let q = f64::from(query) / 8.0;
        let a = base.evaluate_at(&[q]).unwrap();
        let b = moved.evaluate_at(&[q + f64::from(translation)]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kde_is_scale_equivariant(
        raw in prop::collection::vec(-16i16..16, 2..20),
        query in -16i16..16,
        scale_log2 in -1i32..3,
        h_eighths in 2i16..16,
        family_index in 0usize..6,
    ) {
        let c = 2.0f64.powi(scale_log2);
        let data = lattice_points(&raw);
        let scaled: Vec<f64> = data.iter().map(|x| c * x).collect();
        let h = f64::from(h_eighths) / 8.0;
        let kernel = KernelSpec::new(family(family_index), 1).unwrap();
        let base = WeightedDensityEstimate::uniform(
            Points::new(data, 1).unwrap(), h, kernel.clone(),
        ).unwrap();
        let stretched = WeightedDensityEstimate::uniform(
            Points::new(scaled, 1).unwrap(), c * h, kernel,
        ).unwrap();
        let q = f64::from(query) / 8.0;
        let a = base.evaluate_at(&[q]).unwrap();
        let b = stretched.evaluate_at(&[c * q]).unwrap();
        prop_assert_eq!(a, c * b);
    }

    #[test]
    fn kernels_are_rotation_invariant(
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
        angle in 0.0f64..6.283,
        family_index in 0usize..6,
    ) {
        let norm = (x * x + y * y).sqrt();
        // Keep clear of the box kernel's jump at radius one, where an
        // ulp-level change in the norm flips the value.
        prop_assume!((norm - 1.0).abs() > 1e-6);
        let kernel = KernelSpec::new(family(family_index), 2).unwrap();
        let (sin, cos) = angle.sin_cos();
        let rotated = [cos * x - sin * y, sin * x + cos * y];
        let a = kernel.eval(&[x, y]).unwrap();
        let b = kernel.eval(&rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn compact_kernels_vanish_beyond_the_support(
        direction in -1.0f64..1.0,
        radius in 1.0f64..10.0,
        family_index in 0usize..6,
    ) {
        prop_assume!(radius > 1.0 + 1e-9);
        let fam = family(family_index);
        prop_assume!(fam.compactly_supported());
        let kernel = KernelSpec::new(fam, 2).unwrap();
        let angle = direction * core::f64::consts::PI;
        let u = [radius * angle.cos(), radius * angle.sin()];
        prop_assert_eq!(kernel.eval(&u).unwrap(), 0.0);
    }

    #[test]
    fn integration_is_linear(
        f in prop::collection::vec(-10.0f64..10.0, 31),
        g in prop::collection::vec(-10.0f64..10.0, 31),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let grid = EvaluationGrid::new(vec![-2.0], vec![3.0], vec![31]).unwrap();
        let combined: Vec<f64> =
            f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = integrate_on_grid(&grid, &combined).unwrap();
        let rhs = a * integrate_on_grid(&grid, &f).unwrap()
            + b * integrate_on_grid(&grid, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn normalized_densities_integrate_to_one(
        values in prop::collection::vec(0.0f64..5.0, 41),
    ) {
        let grid = EvaluationGrid::new(vec![0.0], vec![1.0], vec![41]).unwrap();
        let mass = integrate_on_grid(&grid, &values).unwrap();
        prop_assume!(mass > 1e-6);
        let (normalized, z) = normalize_density(&grid, &values).unwrap();
        prop_assert!((z - mass).abs() <= 1e-12 * mass.max(1.0));
        let after = integrate_on_grid(&grid, &normalized).unwrap();
        prop_assert!((after - 1.0).abs() <= 1e-9, "integral {after}");
    }

    #[test]
    fn median_stays_inside_the_block_envelope(
        raw in prop::collection::vec(-24i16..24, 6..40),
        num_blocks in 1usize..6,
        query in -32i16..32,
        seed in any::<u64>(),
    ) {
        prop_assume!(num_blocks <= raw.len());
        let points = Points::new(lattice_points(&raw), 1).unwrap();
        let kernel = KernelSpec::new(KernelFamily::Gaussian, 1).unwrap();
        let fit = MomEstimate::fit_raw(points, num_blocks, 0.5, kernel, seed).unwrap();
        let q = [f64::from(query) / 8.0];
        let blocks = fit.block_values(&q).unwrap();
        let value = fit.evaluate_at(&q).unwrap();
        let lo = blocks.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = blocks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(value >= lo - 1e-15 && value <= hi + 1e-15);
    }

    #[test]
    fn auc_ignores_monotone_rescaling(
        raw_scores in prop::collection::vec(-16i32..16, 4..40),
        label_bits in prop::collection::vec(any::<bool>(), 4..40),
        scale_log2 in 0i32..3,
        offset in -3i32..4,
    ) {
        let n = raw_scores.len().min(label_bits.len());
        prop_assume!(label_bits[..n].iter().any(|b| *b));
        prop_assume!(label_bits[..n].iter().any(|b| !*b));
        let labels: Vec<Label> = label_bits[..n]
            .iter()
            .map(|b| if *b { Label::Inlier } else { Label::Outlier })
            .collect();
        let scores: Vec<f64> =
            raw_scores[..n].iter().map(|s| f64::from(*s) / 8.0).collect();
        // Scaling by a power of two and adding an integer is exact on the
        // lattice, so the tie structure is preserved exactly.
        let rescaled: Vec<f64> = scores
            .iter()
            .map(|s| s * 2.0f64.powi(scale_log2) + f64::from(offset))
            .collect();
        let a = auc(&scores, &labels).unwrap();
        let b = auc(&rescaled, &labels).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn js_is_symmetric_bounded_and_zero_on_equal_inputs(
        raw_p in prop::collection::vec(0.0f64..5.0, 41),
        raw_q in prop::collection::vec(0.0f64..5.0, 41),
    ) {
        let grid = EvaluationGrid::new(vec![-1.0], vec![1.0], vec![41]).unwrap();
        let shifted_p: Vec<f64> = raw_p.iter().map(|v| v + 0.01).collect();
        let shifted_q: Vec<f64> = raw_q.iter().map(|v| v + 0.01).collect();
        let (p, _) = normalize_density(&grid, &shifted_p).unwrap();
        let (q, _) = normalize_density(&grid, &shifted_q).unwrap();
        let pq = js_divergence(&p, &q, &grid).unwrap();
        let qp = js_divergence(&q, &p, &grid).unwrap();
        prop_assert_eq!(pq, qp);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(js_divergence(&p, &p, &grid).unwrap(), 0.0);
    }

    #[test]
    fn kl_is_nonnegative_on_shared_support(
        raw_p in prop::collection::vec(0.0f64..5.0, 41),
        raw_q in prop::collection::vec(0.0f64..5.0, 41),
    ) {
        let grid = EvaluationGrid::new(vec![-1.0], vec![1.0], vec![41]).unwrap();
        let shifted_p: Vec<f64> = raw_p.iter().map(|v| v + 0.01).collect();
        let shifted_q: Vec<f64> = raw_q.iter().map(|v| v + 0.01).collect();
        let (p, _) = normalize_density(&grid, &shifted_p).unwrap();
        let (q, _) = normalize_density(&grid, &shifted_q).unwrap();
        let kl = kl_divergence(&p, &q, &grid).unwrap();
        prop_assert!(kl >= -1e-9, "kl {kl}");
        prop_assert!(kl_divergence(&p, &p, &grid).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn cv_score_is_invariant_under_consistent_relabeling(
        raw in prop::collection::vec(-32i16..32, 10..40),
        seed in any::<u64>(),
        shuffle_seed in any::<u64>(),
        h_eighths in 2i16..24,
    ) {
        let n = raw.len();
        let data = lattice_points(&raw);
        let folds = fold_assignments(n, 5, seed).unwrap();
        let h = f64::from(h_eighths) / 8.0;
        let kernel = KernelSpec::new(KernelFamily::Gaussian, 1).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let permuted_data: Vec<f64> = order.iter().map(|&i| data[i]).collect();
        let permuted_folds: Vec<usize> = order.iter().map(|&i| folds[i]).collect();

        let base = cv_score(
            &Points::new(data, 1).unwrap(), &folds, 5, h, kernel.clone(),
        ).unwrap();
        let permuted = cv_score(
            &Points::new(permuted_data, 1).unwrap(), &permuted_folds, 5, h, kernel,
        ).unwrap();
        prop_assert!(
            (base - permuted).abs() <= 1e-9 * base.abs().max(1.0),
            "{base} vs {permuted}"
        );
    }

    #[test]
    fn rkde_weights_are_translation_invariant(
        raw in prop::collection::vec(-16i16..16, 5..20),
        translation in -64i16..64,
        threshold_eighths in 1i16..8,
    ) {
        let data = lattice_points(&raw);
        let shifted: Vec<f64> =
            data.iter().map(|x| x + f64::from(translation)).collect();
        let kernel = KernelSpec::new(KernelFamily::Gaussian, 1).unwrap();
        let loss = RobustLoss::huber(f64::from(threshold_eighths) / 8.0).unwrap();
        let base = fit_rkde(
            &Points::new(data, 1).unwrap(), 0.5, &kernel, &loss, 1e-8, 100,
        ).unwrap();
        let moved = fit_rkde(
            &Points::new(shifted, 1).unwrap(), 0.5, &kernel, &loss, 1e-8, 100,
        ).unwrap();
        // Integer translations keep pairwise differences exact, so the Gram
        // matrix and the whole reweighting trajectory match bit for bit.
        prop_assert_eq!(base.weights, moved.weights);
    }
}
