//! Seeded instance generators: exact-rank points, random subspaces, random
//! (generally oblique) complements. Deterministic for a fixed seed.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::scalar::{real, Real};
use crate::subspace::{graph_subspace, GraphOperator, Subspace};
use crate::thresholds;

/// Conditioning floor demanded of generated rank-k points: the k-th singular
/// value must carry at least this fraction of the largest.
const GENERATOR_GAP: f64 = 1e-4;

/// The stream-cipher generator keeps samples identical across platforms.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard normal entries.
pub fn gaussian_matrix<T: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        real(rng.sample::<f64, _>(StandardNormal))
    })
}

/// Seeded sample of an exact-rank-k operator in factored form `A·B`, with a
/// conditioning certificate (resampled until `sigma_k/sigma_1` clears the
/// generator floor). `k = 0` yields the zero matrix.
pub fn random_stratum_point<T: Real>(
    rows: usize,
    cols: usize,
    k: usize,
    seed: u64,
) -> Result<DMatrix<T>> {
    if k > rows.min(cols) {
        return Err(Error::OutOfRange(format!(
            "rank {k} exceeds min({rows}, {cols})"
        )));
    }
    let mut rng = rng_from_seed(seed);
    if k == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    for _ in 0..64 {
        let a: DMatrix<T> = gaussian_matrix(rows, k, &mut rng);
        let b: DMatrix<T> = gaussian_matrix(k, cols, &mut rng);
        let t = a * b / real::<T>(k as f64).sqrt();
        let decision = numerical_rank(&t, real(thresholds::DEFAULT_TOL));
        if decision.rank == k && decision.leading_gap >= real(GENERATOR_GAP) {
            return Ok(t);
        }
    }
    Err(Error::NumericalDegeneracy(format!(
        "no well-conditioned rank-{k} sample in 64 draws"
    )))
}

/// Uniformly random `dim`-dimensional subspace of `R^ambient` (orthonormal
/// basis of a Gaussian matrix).
pub fn random_subspace<T: Real, R: Rng>(ambient: usize, dim: usize, rng: &mut R) -> Subspace<T> {
    assert!(dim <= ambient);
    if dim == 0 {
        return Subspace::zero(ambient);
    }
    loop {
        let g: DMatrix<T> = gaussian_matrix(ambient, dim, rng);
        let s = Subspace::span(&g, real(thresholds::DEFAULT_TOL));
        if s.dim() == dim {
            return s;
        }
    }
}

/// A random complement of `s`: the graph of a bounded random map from `s^⊥`
/// into `s`. Generally oblique, never degenerate.
pub fn random_complement_of<T: Real, R: Rng>(s: &Subspace<T>, rng: &mut R) -> Subspace<T> {
    let orth = s.orthogonal_complement();
    if s.dim() == 0 || orth.dim() == 0 {
        return orth;
    }
    let coeffs: DMatrix<T> = gaussian_matrix::<T, _>(s.dim(), orth.dim(), rng) * real::<T>(0.5);
    let alpha = GraphOperator::from_coeffs(orth, s.clone(), coeffs)
        .expect("coefficient shape matches by construction");
    graph_subspace(&alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::Decomposition;

    #[test]
    fn stratum_point_is_deterministic_and_exact_rank() {
        let a: DMatrix<f64> = random_stratum_point(5, 4, 2, 17).unwrap();
        let b: DMatrix<f64> = random_stratum_point(5, 4, 2, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(numerical_rank(&a, thresholds::DEFAULT_TOL).rank, 2);

        let z: DMatrix<f64> = random_stratum_point(3, 3, 0, 5).unwrap();
        assert_eq!(z.norm(), 0.0);

        let full: DMatrix<f64> = random_stratum_point(3, 3, 3, 5).unwrap();
        assert_eq!(numerical_rank(&full, thresholds::DEFAULT_TOL).rank, 3);

        assert!(random_stratum_point::<f64>(2, 2, 3, 0).is_err());
    }

    #[test]
    fn random_complement_certifies() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let s: Subspace<f64> = random_subspace(6, 2, &mut rng);
            let c = random_complement_of(&s, &mut rng);
            assert_eq!(c.dim(), 4);
            Decomposition::try_new(s, c).unwrap();
        }
    }
}
