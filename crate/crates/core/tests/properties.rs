use proptest::prelude::*;

use lasched::loss::{eps_to_x0, LossKind, LossKnot, LossProfile};
use lasched::schedule::{eta_axis, las_beam, las_exact, CandidateSet, LasConfig};
use lasched::target::TargetDistribution;

fn probs(max_atoms: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, 2..=max_atoms).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    })
}

fn candidates(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max_n).prop_flat_map(|n| {
        (
            0.01f64..2.0,
            prop::collection::vec(1.05f64..3.0, n - 1),
            prop::collection::vec(0.0f64..2.0, n),
        )
            .prop_map(|(start, ratios, risks)| {
                let mut g = vec![start];
                for r in ratios {
                    let last = *g.last().unwrap();
                    g.push(last * r);
                }
                (g, risks)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropies_are_ordered(p in probs(16)) {
        let n = p.len() as f64;
        let d = TargetDistribution::discrete_on_line(&p).unwrap();
        let h = d.shannon_entropy().unwrap();
        let h_half = d.renyi_half_entropy().unwrap();
        prop_assert!(h <= h_half + 1e-10);
        prop_assert!(h_half <= n.ln() + 1e-10);
        // Mean surprisal, summed independently.
        let mean: f64 = p.iter().enumerate().map(|(i, pi)| pi * d.surprisal(i).unwrap()).sum();
        prop_assert!((mean - h).abs() <= 1e-12);
    }

    #[test]
    fn fitted_profile_bounds_renyi(p in probs(10)) {
        let d = TargetDistribution::discrete_on_line(&p).unwrap();
        let fit = d.fit_subexponential(1.0).unwrap();
        if fit.mgf_ok {
            prop_assert!(fit.renyi_half <= fit.shannon + 0.5 * fit.nu_sq + 1e-10);
        }
    }

    #[test]
    fn profile_ignores_atom_order(p in probs(10), seed in any::<u64>()) {
        let d = TargetDistribution::discrete_on_line(&p).unwrap();
        let mut order: Vec<usize> = (0..p.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let e = TargetDistribution::discrete_on_line(&shuffled).unwrap();
        prop_assert_eq!(d.fit_subexponential(1.0).unwrap(), e.fit_subexponential(1.0).unwrap());
    }

    #[test]
    fn eps_and_x0_losses_convert_exactly(gamma in 1e-4f64..1e4, x0 in 0.0f64..100.0) {
        let eps = gamma * x0;
        let back = eps_to_x0(eps, gamma);
        prop_assert!((back - x0).abs() <= 1e-12 * x0.max(1e-300));
        let knot = LossKnot { gamma, loss: eps, kind: LossKind::Eps };
        prop_assert_eq!(knot.x0_loss(), back);
    }

    #[test]
    fn schedules_are_pinned_and_scale_free((g, r) in candidates(14), k in 1usize..6, c in 0.1f64..10.0) {
        let n = g.len();
        prop_assume!(k < n);
        let base = CandidateSet::new(g.clone(), r.clone()).unwrap();
        let s = las_exact(&base, &LasConfig::new(k)).unwrap();
        prop_assert_eq!(s.indices[0], 0);
        prop_assert_eq!(*s.indices.last().unwrap(), n - 1);
        prop_assert_eq!(s.indices.len(), k + 1);

        let scaled = las_exact(&base.scaled(c).unwrap(), &LasConfig::new(k)).unwrap();
        prop_assert_eq!(&scaled.indices, &s.indices);
        prop_assert!((scaled.objective - c * s.objective).abs() <= 1e-12 * (c * s.objective).abs().max(1e-300));

        let cfg = LasConfig::new(k).with_alpha(0.5);
        let b = las_beam(&base, &cfg).unwrap();
        let bs = las_beam(&base.scaled(c).unwrap(), &cfg.with_alpha(0.5 * c)).unwrap();
        prop_assert_eq!(b.indices[0], 0);
        prop_assert_eq!(*b.indices.last().unwrap(), n - 1);
        prop_assert_eq!(&bs.indices, &b.indices);
    }

    #[test]
    fn eta_is_strictly_increasing((g, _r) in candidates(30), lambda in 0.01f64..10.0) {
        let eta: Vec<f64> = g.iter().map(|x| eta_axis(*x, lambda)).collect();
        prop_assert!(eta.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(eta.iter().all(|e| *e < 1.0 / (lambda * lambda)));
    }

    #[test]
    fn loss_csv_round_trips(rows in prop::collection::vec((1.05f64..3.0, 0.0f64..5.0, any::<bool>()), 2..20)) {
        let mut gamma = 0.1;
        let knots: Vec<LossKnot> = rows
            .into_iter()
            .map(|(ratio, loss, eps)| {
                gamma *= ratio;
                LossKnot { gamma, loss, kind: if eps { LossKind::Eps } else { LossKind::X0 } }
            })
            .collect();
        let p = LossProfile::new(knots).unwrap();
        let q = LossProfile::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(p, q);
    }
}
