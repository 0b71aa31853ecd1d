//! Seeded sampling helpers. All randomness in the crate flows through
//! explicitly seeded `ChaCha8Rng` instances so runs are reproducible.

use rand::Rng;

use crate::Vector;

/// Standard normal draw via Box-Muller.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 > f64::MIN_POSITIVE {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

pub(crate) fn normal_vector<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| standard_normal(rng))
}

/// Uniform draw from the closed ball of the given radius centered at the origin.
pub(crate) fn uniform_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    let dir = normal_vector(rng, dim);
    let n = dir.norm();
    if n == 0.0 {
        return Vector::zeros(dim);
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    dir * (r / n)
}
