//! Finite-difference check of every trainable layer.

use kicksense::models::AttentionFusion;
use kicksense::nn::gradcheck::{check, LayerProbe, DEFAULT_EPSILON};
use kicksense::nn::{uniform, BiLstm, Conv1d, Conv2d, Dense, Layer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn probe(name: &str, layer: impl Layer, shape: &[usize], rng: &mut ChaCha8Rng) -> kicksense::Result<()> {
    let x = uniform(shape, 1.0, rng);
    let mut p = LayerProbe::new(layer, x, rng.gen())?;
    let report = check(&mut p, 20, DEFAULT_EPSILON, rng.gen())?;
    println!("{name:<10} {:>4} coords  max rel err {:.2e}", report.checked, report.max_rel_error);
    Ok(())
}

fn main() -> kicksense::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let conv1 = Conv1d::new("conv1d", 3, 8, 5, 2, 2, &mut rng);
    probe("conv1d", conv1, &[2, 3, 20], &mut rng)?;
    let conv2 = Conv2d::new("conv2d", 3, 4, (3, 3), (2, 1), (0, 0), &mut rng);
    probe("conv2d", conv2, &[2, 3, 9, 9], &mut rng)?;
    let lstm = BiLstm::new("bilstm", 4, 6, &mut rng);
    probe("bilstm", lstm, &[2, 7, 4], &mut rng)?;
    let dense = Dense::new("dense", 10, 6, &mut rng);
    probe("dense", dense, &[4, 10], &mut rng)?;
    let att = AttentionFusion::from_weights("attention", uniform(&[8, 8], 0.5, &mut rng), uniform(&[8], 0.5, &mut rng));
    probe("attention", att, &[4, 8], &mut rng)?;
    Ok(())
}
