//! Split a secret three ways, rebuild it from any two shares, and add two
//! shared vectors without reconstructing either.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use secure_logreg::field::FieldModulus;
use secure_logreg::sharing::{reconstruct_secret, share_secret, SharedTensor, SharingParams};

fn main() -> secure_logreg::Result<()> {
    let p = FieldModulus::default();
    let params = SharingParams::new(2, 3)?;
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    let secret = p.element(123_456_789);
    let shares = share_secret(secret, params, &p, &mut rng)?;
    for s in &shares {
        println!("center {} holds {}", s.eval_point, s.value);
    }
    for pair in [[0, 1], [0, 2], [1, 2]] {
        let subset = [shares[pair[0]], shares[pair[1]]];
        println!("centers {:?} rebuild {}", pair.map(|i| i + 1), reconstruct_secret(&subset, params, &p)?);
    }

    let a = [5, 7, 11].map(|v| p.element(v));
    let b = [100, 200, 300].map(|v| p.element(v));
    let sa = SharedTensor::share(&a, (3, 1), 0, params, &p, &mut rng)?;
    let sb = SharedTensor::share(&b, (3, 1), 0, params, &p, &mut rng)?;
    let sum = sa.secure_add(&sb)?.reconstruct_from(&[2, 3])?;
    println!("a + b = {:?}", sum.iter().map(|e| e.value()).collect::<Vec<_>>());
    Ok(())
}
