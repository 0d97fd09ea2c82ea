use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shgcat_core::fock::{HarmonicOrder, SectorBasis};
use shgcat_core::hamiltonian::build_sector_block;
use shgcat_core::linalg::{dense_eigen, symmetric_tridiagonal_eigen, tridiag_eigen, DenseMatrix, EigenDecomposition};

fn tridiagonal(diag: &[f64], off: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(diag.len(), |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    })
}

fn worst_residual(m: &DenseMatrix, eig: &EigenDecomposition) -> f64 {
    (0..m.dim())
        .map(|j| {
            let v = eig.eigenvectors.column(j);
            let hv = m.mul_vec(&v);
            let r = hv
                .iter()
                .zip(&v)
                .map(|(h, x)| (h - eig.eigenvalues[j] * x).powi(2))
                .sum::<f64>()
                .sqrt();
            r / (1.0 + eig.eigenvalues[j].abs())
        })
        .fold(0.0, f64::max)
}

fn random_block(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(1..=40);
    let scale = 10f64.powf(rng.gen_range(-1.0..2.5));
    let diag = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    let off = (0..n - 1).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    (diag, off)
}

#[test]
fn random_blocks_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..200 {
        let (diag, off) = random_block(&mut rng);
        let m = tridiagonal(&diag, &off);
        let fast = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let slow = dense_eigen(&m).unwrap();
        let tol = 1e-10 * m.norm().max(f64::MIN_POSITIVE);
        for (a, b) in fast.eigenvalues.iter().zip(&slow.eigenvalues) {
            assert!((a - b).abs() <= tol, "eigenvalue {a} vs oracle {b}");
        }
        assert!(fast.orthonormality_error() <= 1e-10);
        assert!(worst_residual(&m, &fast) <= 1e-10);
        assert!(slow.orthonormality_error() <= 1e-10);
        assert!(worst_residual(&m, &slow) <= 1e-10);
    }
}

#[test]
fn physical_blocks_match_dense_oracle() {
    for order in [HarmonicOrder::Second, HarmonicOrder::Third] {
        for n in [0, 1, 2, 7, 20, 45, 60] {
            for detuning in [0.0, 3.0, 50.0, -20.0] {
                let block = build_sector_block(&SectorBasis::new(n, order), detuning);
                let m = block.to_dense();
                let fast = tridiag_eigen(&block).unwrap();
                let slow = dense_eigen(&m).unwrap();
                let tol = 1e-10 * m.norm().max(1.0);
                for (a, b) in fast.eigenvalues.iter().zip(&slow.eigenvalues) {
                    assert!((a - b).abs() <= tol);
                }
                assert!(worst_residual(&m, &fast) <= 1e-10);
                let sum: f64 = fast.eigenvalues.iter().sum();
                assert!((sum - m.trace()).abs() <= tol);
            }
        }
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (diag, off) = random_block(&mut rng);
        assert_eq!(
            symmetric_tridiagonal_eigen(&diag, &off).unwrap(),
            symmetric_tridiagonal_eigen(&diag, &off).unwrap()
        );
    }
}

fn block_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=24).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(-50.0f64..50.0, n - 1),
        )
    })
}

proptest! {
    #[test]
    fn off_diagonal_sign_flip_keeps_spectrum((diag, off) in block_strategy()) {
        let a = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let flipped: Vec<f64> = off.iter().map(|x| -x).collect();
        let b = symmetric_tridiagonal_eigen(&diag, &flipped).unwrap();
        let tol = 1e-10 * tridiagonal(&diag, &off).norm().max(1.0);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= tol);
        }
    }

    #[test]
    fn diagonal_perturbation_obeys_weyl_bound(
        (diag, off) in block_strategy(),
        pick in any::<prop::sample::Index>(),
        delta in -10.0f64..10.0,
    ) {
        let i = pick.index(diag.len());
        let mut moved = diag.clone();
        moved[i] += delta;
        let a = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let b = symmetric_tridiagonal_eigen(&moved, &off).unwrap();
        let slack = 1e-10 * tridiagonal(&moved, &off).norm().max(1.0);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= delta.abs() + slack);
        }
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residual((diag, off) in block_strategy()) {
        let eig = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        prop_assert!(eig.orthonormality_error() <= 1e-10);
        prop_assert!(worst_residual(&tridiagonal(&diag, &off), &eig) <= 1e-10);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}
