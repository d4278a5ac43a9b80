//! Solver and analysis results checked against independent computations.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use csdc::channel::{transmit, LossModel};
use csdc::matrices::{
    build_selection_matrix, build_sparse_gaussian, compose_sensing_matrix, Layout, SensingMatrix,
};
use csdc::recovery::{
    bp_solve, l0_oracle_detailed, omp_solve, omp_solve_traced, BpParams, OmpParams,
};
use csdc::rip::{
    gershgorin_bounds, in_disc_union, scan_submatrix_spectra, verify_rip_exhaustive, RipVerdict,
};
use csdc::seed::{derive_seed, rng};
use csdc::signal::{Signal, SparsifyingBasis};

fn gaussian(rows: usize, cols: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = StandardNormal.sample(&mut r);
        scale * v
    })
}

fn sparse_vector(n: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut s = vec![0.0; n];
    for pos in rand::seq::index::sample(&mut r, n, k) {
        let mag: f64 = r.random_range(0.5..1.5);
        s[pos] = if r.random_bool(0.5) { mag } else { -mag };
    }
    s
}

/// `min Σ(u⁺ + u⁻)` s.t. `A(u⁺ − u⁻) = y` by an external LP solver.
fn lp_l1_objective(a: &DMatrix<f64>, y: &[f64]) -> f64 {
    let (m, n) = a.shape();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let plus: Vec<_> = (0..n)
        .map(|_| p.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    let minus: Vec<_> = (0..n)
        .map(|_| p.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for i in 0..m {
        let mut row = Vec::with_capacity(2 * n);
        for j in 0..n {
            row.push((plus[j], a[(i, j)]));
            row.push((minus[j], -a[(i, j)]));
        }
        p.add_constraint(row.as_slice(), ComparisonOp::Eq, y[i]);
    }
    p.solve().expect("feasible LP").objective()
}

#[test]
fn bp_matches_external_lp() {
    for t in 0..100u64 {
        let a = gaussian(6, 10, 1.0, derive_seed(1, &[t]));
        let y: Vec<f64> = if t % 2 == 0 {
            let s = sparse_vector(10, 2, derive_seed(2, &[t]));
            (&a * DVector::from_vec(s)).iter().copied().collect()
        } else {
            let mut r = rng(derive_seed(3, &[t]));
            (0..6)
                .map(|_| -> f64 { StandardNormal.sample(&mut r) })
                .collect()
        };
        let expected = lp_l1_objective(&a, &y);
        let got = bp_solve(
            &SensingMatrix::from_dense(a.clone()),
            &y,
            &BpParams::default(),
        )
        .unwrap();
        let l1: f64 = got.s_hat.iter().map(|v| v.abs()).sum();
        assert!(
            (l1 - expected).abs() <= 1e-6 * expected.max(1.0),
            "instance {t}: {l1} vs {expected}"
        );
        assert!(got.residual_norm <= 1e-8 * DVector::from_column_slice(&y).norm());
    }
}

/// Greedy selection with a from-scratch least-squares refit per step.
fn textbook_omp(a: &DMatrix<f64>, y: &[f64], max_steps: usize, normalize: bool) -> Vec<usize> {
    let y = DVector::from_column_slice(y);
    let mut selected: Vec<usize> = Vec::new();
    let mut r = y.clone();
    while selected.len() < max_steps && r.norm() > 1e-6 * y.norm() {
        let mut best = (usize::MAX, 0.0);
        for j in (0..a.ncols()).filter(|j| !selected.contains(j)) {
            let scale = if normalize { a.column(j).norm() } else { 1.0 };
            let c = a.column(j).dot(&r).abs() / scale;
            if c > best.1 {
                best = (j, c);
            }
        }
        selected.push(best.0);
        let sub = a.select_columns(&selected);
        let z = sub.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        r = &y - sub * z;
    }
    selected
}

#[test]
fn omp_selections_match_textbook_omp() {
    for normalize in [true, false] {
        let params = OmpParams {
            normalize_columns: normalize,
            ..OmpParams::default()
        };
        for t in 0..200u64 {
            let dense = gaussian(8, 12, 1.0 / 8f64.sqrt(), derive_seed(4, &[t]));
            let a = SensingMatrix::from_dense(dense.clone());
            let y = a.mul(&sparse_vector(12, 2, derive_seed(5, &[t])));
            let (_, trace) = omp_solve_traced(&a, &y, &params).unwrap();
            assert_eq!(
                trace.selected,
                textbook_omp(&dense, &y, 4, normalize),
                "instance {t}"
            );
        }
    }
}

#[test]
fn omp_two_sparse_answers_are_the_sparsest() {
    let mut unique = 0;
    let mut exact = 0;
    for t in 0..200u64 {
        let a = SensingMatrix::from_dense(gaussian(8, 12, 1.0 / 8f64.sqrt(), derive_seed(4, &[t])));
        let y = a.mul(&sparse_vector(12, 2, derive_seed(5, &[t])));
        let oracle = l0_oracle_detailed(&a, &y, 2).unwrap();
        if !oracle.is_unique() {
            continue;
        }
        unique += 1;
        let omp = omp_solve(&a, &y, &OmpParams::default()).unwrap();
        if omp.support.len() <= 2 {
            assert_eq!(omp.support, oracle.minimal_supports[0], "instance {t}");
            exact += 1;
        }
    }
    assert!(unique >= 190, "{unique}");
    // greedy selection misses on about 15% of these; see the acceptance suite
    assert!(exact * 100 >= unique * 78, "{exact}/{unique}");
}

#[test]
fn both_solvers_recover_unique_sparse_solutions() {
    for (n, k) in [(16, 2), (24, 3)] {
        let m = 4 * k;
        let mut omp_ok = 0;
        let mut bp_ok = 0;
        let mut eligible = 0;
        for t in 0..200u64 {
            let a = SensingMatrix::from_dense(gaussian(m, n, 1.0, derive_seed(6, &[n as u64, t])));
            let s = sparse_vector(n, k, derive_seed(7, &[n as u64, t]));
            let y = a.mul(&s);
            if n <= 16 && !l0_oracle_detailed(&a, &y, k).unwrap().is_unique() {
                continue;
            }
            eligible += 1;
            let err = |hat: &[f64]| {
                let d: f64 = hat.iter().zip(&s).map(|(h, v)| (h - v).powi(2)).sum();
                d.sqrt() / s.iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            if err(&omp_solve(&a, &y, &OmpParams::default()).unwrap().s_hat) <= 1e-6 {
                omp_ok += 1;
            }
            if err(&bp_solve(&a, &y, &BpParams::default()).unwrap().s_hat) <= 1e-6 {
                bp_ok += 1;
            }
        }
        // at M = 4K neither solver reaches 90% for N = 16 (omp ~82%, bp ~87%)
        assert!(
            omp_ok * 100 >= eligible * 78,
            "N={n}: omp {omp_ok}/{eligible}"
        );
        assert!(bp_ok * 100 >= eligible * 82, "N={n}: bp {bp_ok}/{eligible}");
    }
}

#[test]
fn gershgorin_contains_eigenvalues_of_random_matrices() {
    for t in 0..200u64 {
        let mut r = rng(derive_seed(8, &[t]));
        let size = r.random_range(2..=12);
        let m = gaussian(size, size, 1.0, derive_seed(9, &[t]));
        for sym in [false, true] {
            let mat = if sym { &m + m.transpose() } else { m.clone() };
            let discs = gershgorin_bounds(&mat).unwrap();
            for ev in mat.complex_eigenvalues().iter() {
                assert!(in_disc_union(&discs, ev.re, ev.im), "trial {t}: {ev}");
            }
        }
    }
}

/// Eigenvalues of `[[a, b], [b, c]]`.
fn closed_form_2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    (mid - rad, mid + rad)
}

#[test]
fn two_column_spectrum_matches_closed_form() {
    for t in 0..50u64 {
        let phi = gaussian(5, 2, 0.5, derive_seed(10, &[t]));
        let g = phi.tr_mul(&phi);
        let (lo, hi) = closed_form_2x2(g[(0, 0)], g[(0, 1)], g[(1, 1)]);
        let scan = scan_submatrix_spectra(&phi, 2).unwrap();
        assert!((scan.min_eigenvalue - lo).abs() < 1e-12 * hi.max(1.0));
        assert!((scan.max_eigenvalue - hi).abs() < 1e-12 * hi.max(1.0));
        let delta = 0.3;
        let holds = lo >= 1.0 - delta && hi <= 1.0 + delta;
        let cert = verify_rip_exhaustive(&phi, 2, delta).unwrap();
        assert_eq!(cert.verdict == RipVerdict::CertifiedByExhaustion, holds);
        if !holds {
            assert!(cert.witness_violates(&phi));
        }
    }
}

#[test]
fn submatrix_scan_matches_brute_force_eigenvalues() {
    let phi = gaussian(6, 7, 0.4, 11);
    let scan = scan_submatrix_spectra(&phi, 3).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in 0..7 {
        for b in a + 1..7 {
            for c in b + 1..7 {
                let sub = phi.select_columns(&[a, b, c]);
                let eig = SymmetricEigen::new(sub.tr_mul(&sub)).eigenvalues;
                lo = lo.min(eig.min());
                hi = hi.max(eig.max());
            }
        }
    }
    assert!((scan.min_eigenvalue - lo).abs() < 1e-12);
    assert!((scan.max_eigenvalue - hi).abs() < 1e-12);
}

#[test]
fn sensing_matrix_two_paths() {
    let n = 32;
    for (t, basis) in [
        SparsifyingBasis::canonical(n),
        SparsifyingBasis::dct(n),
        SparsifyingBasis::fourier(n),
    ]
    .into_iter()
    .enumerate()
    {
        let basis = basis.unwrap();
        let phi =
            build_sparse_gaussian(24, n, 0.2, Layout::RandomPlacement, 1.0, 12 + t as u64).unwrap();
        let x_s = vec![0.0; 24];
        let outcome = transmit(&x_s, &LossModel::exact(12, 4), 13).unwrap();
        let sel = build_selection_matrix(outcome.received_seq(), 24).unwrap();
        let a = compose_sensing_matrix(&sel, &phi, &basis).unwrap();
        let explicit = sel.to_dense() * phi.to_dense() * basis.synthesis_matrix();
        assert!((a.entries() - &explicit).abs().max() < 1e-12);
        // and by pushing a coefficient vector through each stage
        let s = sparse_vector(n, 4, 14 + t as u64);
        let x = Signal::new(basis.synthesize_slice(&s)).unwrap();
        let staged = sel.apply(&phi.project(&x).unwrap()).unwrap();
        for (u, v) in a.mul(&s).iter().zip(&staged) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn coordinate_and_dense_projection_agree() {
    for t in 0..20u64 {
        let phi = build_sparse_gaussian(40, 64, 0.1, Layout::RandomPlacement, 1.0, t).unwrap();
        let mut r = rng(derive_seed(15, &[t]));
        let x = Signal::new((0..64).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let sparse = phi.with_coordinate_storage().project(&x).unwrap();
        let dense = phi.with_dense_storage().project(&x).unwrap();
        let oracle = phi.to_dense() * x.to_vector();
        for i in 0..40 {
            assert!((sparse[i] - dense[i]).abs() < 1e-12);
            assert!((sparse[i] - oracle[i]).abs() < 1e-12);
        }
    }
}
