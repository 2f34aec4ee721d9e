use rand::Rng;

use super::tensor::Tensor;

/// Uniform init over +/- sqrt(6 / fan_in), used for conv and dense weights.
pub fn uniform_fan_in<R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::from_vec(shape, data).expect("shape/product consistent")
}

/// Zero-mean Gaussian init via Box-Muller, used for embedding tables.
pub fn normal<R: Rng>(rng: &mut R, shape: &[usize], std: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        data.push(std * r * theta.cos());
        if data.len() < n {
            data.push(std * r * theta.sin());
        }
    }
    Tensor::from_vec(shape, data).expect("shape/product consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fan_in_bound_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = uniform_fan_in(&mut rng, &[64, 32], 32);
        let bound = (6.0f64 / 32.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn normal_is_seed_deterministic_and_roughly_scaled() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let ta = normal(&mut a, &[1000], 0.01);
        let tb = normal(&mut b, &[1000], 0.01);
        assert_eq!(ta.data(), tb.data());
        let var: f64 = ta.data().iter().map(|v| v * v).sum::<f64>() / 1000.0;
        assert!(var > 0.5e-4 && var < 2.0e-4, "sample variance {var}");
    }
}
