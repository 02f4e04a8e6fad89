use num_complex::Complex;
use rand::Rng;

use crate::signal::IqSignal;
use crate::Scalar;

/// A circular time shift followed by a constant phase rotation.
///
/// Both steps are unitary, so signal power is unchanged and the operation
/// commutes with mixing when applied identically to every component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Augmentation {
    pub shift: usize,
    pub theta: f64,
}

impl Augmentation {
    pub const IDENTITY: Self = Self { shift: 0, theta: 0.0 };

    /// Shift uniform on `0..=max_shift`, rotation uniform on `[0, 2π)`.
    pub fn draw(rng: &mut impl Rng, max_shift: usize) -> Self {
        Self {
            shift: rng.random_range(0..=max_shift),
            theta: rng.random_range(0.0..2.0 * std::f64::consts::PI),
        }
    }

    /// `y[n] = x[(n - shift) mod len] · exp(iθ)`.
    pub fn apply_samples<T: Scalar>(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let rot = Complex::new(T::lit(self.theta.cos()), T::lit(self.theta.sin()));
        let s = self.shift % n;
        (0..n).map(|i| x[(i + n - s) % n] * rot).collect()
    }

    pub fn apply<T: Scalar>(&self, x: &IqSignal<T>) -> IqSignal<T> {
        IqSignal::from_trusted(self.apply_samples(x.samples()), x.sample_rate_hz())
    }
}

/// Draws an [`Augmentation`] from `rng` and applies it.
pub fn augment<T: Scalar>(x: &IqSignal<T>, max_shift: usize, rng: &mut impl Rng) -> IqSignal<T> {
    Augmentation::draw(rng, max_shift).apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(seed: u64) -> IqSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        IqSignal::new((0..100).map(|_| Complex::new(rng.random(), rng.random())).collect(), 1.0).unwrap()
    }

    #[test]
    fn identity_and_power() {
        let x = sig(0);
        assert_eq!(Augmentation::IDENTITY.apply(&x), x);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = augment(&x, 40, &mut rng);
        assert!((y.mean_power() - x.mean_power()).abs() <= 1e-12 * x.mean_power());
    }

    #[test]
    fn deterministic_per_seed() {
        let x = sig(1);
        let a = augment(&x, 10, &mut ChaCha8Rng::seed_from_u64(9));
        let b = augment(&x, 10, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn shift_is_circular_delay() {
        let x = sig(2);
        let y = Augmentation { shift: 3, theta: 0.0 }.apply(&x);
        assert_eq!(y.samples()[3], x.samples()[0]);
        assert_eq!(y.samples()[0], x.samples()[97]);
    }

    #[test]
    fn commutes_with_mixing() {
        let (s, b) = (sig(3), sig(4));
        let kappa = 0.37;
        let aug = Augmentation { shift: 17, theta: 1.234 };
        let lhs = aug.apply(&s).add(&aug.apply(&b).scaled(kappa)).unwrap();
        let rhs = aug.apply(&s.add(&b.scaled(kappa)).unwrap());
        for (p, q) in lhs.samples().iter().zip(rhs.samples()) {
            assert!((p - q).norm() < 1e-9);
        }
    }
}
