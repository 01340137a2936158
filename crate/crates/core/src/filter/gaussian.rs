use std::f64::consts::PI;

use nalgebra::{Matrix4, Matrix4x6, Matrix6, Vector4, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

use super::ParticleCloud;
use crate::dynamics::{
    cartesian_to_spherical, spherical_to_cartesian, topocentric_state, topocentric_to_eci, GeodeticSite, OrbitalState,
    PhysicalConstants,
};
use crate::radar::{wrap_pi, wrap_two_pi};
use crate::{Error, Result};

/// Index of the azimuth-like coordinate, the only one that wraps.
const AZIMUTH: usize = 1;

/// Frame in which particles are summarised by a Gaussian.
#[derive(Debug, Clone, Copy)]
pub enum SphericalFrame<'a> {
    /// Geocentric inertial spherical coordinates.
    Eci,
    /// Range/azimuth/elevation and rates seen from a station.
    Topocentric(&'a GeodeticSite),
}

impl SphericalFrame<'_> {
    pub fn to_spherical(&self, x: &OrbitalState, c: &PhysicalConstants) -> Result<Vector6<f64>> {
        match self {
            SphericalFrame::Eci => cartesian_to_spherical(&x.position, &x.velocity),
            SphericalFrame::Topocentric(site) => topocentric_state(site, x, c),
        }
    }

    pub fn to_cartesian(&self, s: &Vector6<f64>, epoch: f64, c: &PhysicalConstants) -> OrbitalState {
        match self {
            SphericalFrame::Eci => {
                let (p, v) = spherical_to_cartesian(s);
                OrbitalState::new(p, v, epoch)
            }
            SphericalFrame::Topocentric(site) => topocentric_to_eci(site, epoch, s, c),
        }
    }
}

/// Gaussian summary `[r, azimuth, elevation, r', azimuth', elevation']`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGaussian {
    pub mean: Vector6<f64>,
    pub spread: Matrix6<f64>,
}

/// Weighted mean (circular for the azimuth) and covariance of the particles in
/// `frame`.
pub fn to_spherical_gaussian(
    cloud: &ParticleCloud,
    frame: SphericalFrame<'_>,
    c: &PhysicalConstants,
) -> Result<SphericalGaussian> {
    let points = cloud
        .states()
        .iter()
        .map(|x| frame.to_spherical(x, c))
        .collect::<Result<Vec<_>>>()?;
    weighted_gaussian(&points, cloud.weights())
}

/// Moments of 6-vectors whose second component is an angle on the circle.
pub fn weighted_gaussian(points: &[Vector6<f64>], weights: &[f64]) -> Result<SphericalGaussian> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("zero total weight".into()));
    }
    let mut mean = Vector6::zeros();
    let (mut s, mut co) = (0.0, 0.0);
    for (p, w) in points.iter().zip(weights) {
        mean += p * (*w / total);
        s += w * p[AZIMUTH].sin();
        co += w * p[AZIMUTH].cos();
    }
    mean[AZIMUTH] = wrap_two_pi(s.atan2(co));

    let mut spread = Matrix6::zeros();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (p, w) in points.iter().zip(weights) {
        let mut d = p - mean;
        d[AZIMUTH] = wrap_pi(d[AZIMUTH]);
        lo = lo.min(d[AZIMUTH]);
        hi = hi.max(d[AZIMUTH]);
        spread += d * d.transpose() * (*w / total);
    }
    if hi - lo > PI {
        log::warn!("particles span more than pi in azimuth; circular mean is ambiguous");
    }
    Ok(SphericalGaussian {
        mean,
        spread: symmetrize(&spread),
    })
}

fn symmetrize(m: &Matrix6<f64>) -> Matrix6<f64> {
    (m + m.transpose()) * 0.5
}

/// Observation matrix picking `[r, azimuth, elevation, r']`.
pub fn observation_matrix() -> Matrix4x6<f64> {
    let mut h = Matrix4x6::zeros();
    for k in 0..4 {
        h[(k, k)] = 1.0;
    }
    h
}

/// Linear Kalman update of `prior` by `y` with observation covariance
/// `diag(variances)`; the azimuth innovation is wrapped to `(-pi, pi]`.
pub fn kalman_update(prior: &SphericalGaussian, y: &Vector4<f64>, variances: &Vector4<f64>) -> Result<SphericalGaussian> {
    let h = observation_matrix();
    let s = h * prior.spread * h.transpose() + Matrix4::from_diagonal(variances);
    let s_inv = s
        .cholesky()
        .ok_or_else(|| Error::Numeric("innovation covariance is not positive definite".into()))?
        .inverse();
    let gain = prior.spread * h.transpose() * s_inv;
    let mut innovation = y - h * prior.mean;
    innovation[AZIMUTH] = wrap_pi(innovation[AZIMUTH]);
    let mut mean = prior.mean + gain * innovation;
    mean[AZIMUTH] = wrap_two_pi(mean[AZIMUTH]);
    let spread = symmetrize(&((Matrix6::identity() - gain * h) * prior.spread));
    Ok(SphericalGaussian { mean, spread })
}

/// Square-root factor `L` with `L L^T` equal to `spread` after negative
/// eigenvalues are clamped to zero.
pub fn sampling_factor(spread: &Matrix6<f64>) -> Matrix6<f64> {
    let eig = symmetrize(spread).symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix6::from_diagonal(&root)
}

pub fn sample_gaussian<R: Rng + ?Sized>(mean: &Vector6<f64>, factor: &Matrix6<f64>, rng: &mut R) -> Vector6<f64> {
    let z = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = mean + factor * z;
    x[AZIMUTH] = wrap_two_pi(x[AZIMUTH]);
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_points_have_zero_spread() {
        let p = Vector6::new(7e6, 0.3, 0.1, 5.0, 1e-3, -2e-4);
        let g = weighted_gaussian(&[p; 5], &[0.2; 5]).unwrap();
        assert!((g.mean - p).norm() < 1e-9);
        assert!(g.spread.norm() < 1e-6);
    }

    #[test]
    fn symmetric_pair_averages_to_midpoint_across_wrap() {
        let a = Vector6::new(1.0, 0.1, 0.2, 0.0, 0.0, 0.0);
        let b = Vector6::new(3.0, 2.0 * PI - 0.1, 0.4, 0.0, 0.0, 0.0);
        let g = weighted_gaussian(&[a, b], &[0.5, 0.5]).unwrap();
        assert!((g.mean[0] - 2.0).abs() < 1e-15);
        assert!(wrap_pi(g.mean[1]).abs() < 1e-15);
        assert!((g.mean[2] - 0.3).abs() < 1e-15);
        assert!((g.spread[(1, 1)] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn moments_match_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let pts: Vec<Vector6<f64>> = (0..n)
            .map(|_| {
                Vector6::new(
                    7e6 + rng.random::<f64>() * 1e4,
                    1.0 + rng.random::<f64>() * 0.5,
                    rng.random::<f64>() * 0.2,
                    rng.random::<f64>() * 10.0,
                    rng.random::<f64>() * 1e-3,
                    rng.random::<f64>() * 1e-3,
                )
            })
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let g = weighted_gaussian(&pts, &w).unwrap();
        // no wrapping in play: the plain weighted moments apply, with the
        // azimuth mean given by the circular formula
        let az = {
            let s: f64 = pts.iter().zip(&w).map(|(p, w)| w * p[1].sin()).sum();
            let c: f64 = pts.iter().zip(&w).map(|(p, w)| w * p[1].cos()).sum();
            s.atan2(c)
        };
        for k in 0..6 {
            let m = if k == 1 { az } else { pts.iter().zip(&w).map(|(p, w)| w * p[k]).sum() };
            assert!((g.mean[k] - m).abs() <= 1e-10 * m.abs().max(1.0), "mean {k}");
        }
        for i in 0..6 {
            for j in 0..6 {
                let q: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p[i] - g.mean[i]) * (p[j] - g.mean[j])).sum();
                assert!((g.spread[(i, j)] - q).abs() <= 1e-10 * q.abs().max(1e-12), "cov {i},{j}");
            }
        }
    }

    #[test]
    fn scalar_kalman_matches_closed_form() {
        let mut spread = Matrix6::zeros();
        let vars = [400.0, 1e-6, 2e-6, 9.0, 1e-8, 1e-8];
        for k in 0..6 {
            spread[(k, k)] = vars[k];
        }
        let prior = SphericalGaussian {
            mean: Vector6::new(1e6, 1.0, 0.5, 100.0, 0.0, 0.0),
            spread,
        };
        let r = Vector4::new(784.0, 3e-6, 3e-6, 121.0);
        let y = Vector4::new(1e6 + 50.0, 1.001, 0.499, 95.0);
        let post = kalman_update(&prior, &y, &r).unwrap();
        for k in 0..4 {
            let (m0, p0) = (prior.mean[k], vars[k]);
            let gain = p0 / (p0 + r[k]);
            let m = m0 + gain * (y[k] - m0);
            let p = (1.0 - gain) * p0;
            assert!((post.mean[k] - m).abs() <= 1e-10 * m.abs(), "{k}");
            assert!((post.spread[(k, k)] - p).abs() <= 1e-10 * p, "{k}");
        }
        assert_eq!(post.mean[4], 0.0);
        assert_eq!(post.spread[(5, 5)], vars[5]);
    }

    #[test]
    fn zero_observed_spread_leaves_mean() {
        let mut spread = Matrix6::zeros();
        spread[(4, 4)] = 1e-6;
        spread[(5, 5)] = 1e-6;
        let prior = SphericalGaussian {
            mean: Vector6::new(1e6, 1.0, 0.5, 100.0, 1e-3, 2e-3),
            spread,
        };
        let y = observation_matrix() * prior.mean;
        let post = kalman_update(&prior, &y, &Vector4::new(1.0, 1e-6, 1e-6, 1.0)).unwrap();
        assert!((post.mean - prior.mean).norm() < 1e-12);
    }

    #[test]
    fn uninformative_observation_leaves_mean() {
        let mut spread = Matrix6::from_diagonal(&Vector6::new(1e4, 1e-6, 1e-6, 100.0, 1e-8, 1e-8));
        spread[(0, 3)] = 500.0;
        spread[(3, 0)] = 500.0;
        let prior = SphericalGaussian {
            mean: Vector6::new(1e6, 1.0, 0.5, 100.0, 1e-3, 2e-3),
            spread,
        };
        let sig = [28.0e6, 1.7453e-3 * 1e6, 1.7453e-3 * 1e6, 11e6];
        let var = Vector4::from_iterator(sig.iter().map(|s| s * s));
        let y = Vector4::new(1e6 + 300.0, 1.01, 0.49, 130.0);
        let post = kalman_update(&prior, &y, &var).unwrap();
        for k in 0..6 {
            assert!((post.mean[k] - prior.mean[k]).abs() <= 1e-3 * spread[(k, k)].sqrt());
        }
    }

    #[test]
    fn sampling_factor_clamps_negative_eigenvalues() {
        let mut m = Matrix6::from_diagonal(&Vector6::new(4.0, 1.0, 0.0, 9.0, 1.0, 1.0));
        m[(2, 2)] = -1e-12;
        let l = sampling_factor(&m);
        let back = l * l.transpose();
        assert!((back[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(back[(2, 2)].abs() < 1e-12);
    }
}
