//! Generate a multi-institution study and check the responses follow the
//! logistic model: bin records by linear predictor and compare rates.

use secure_logreg::data::{generate_synthetic, SyntheticSpec};
use secure_logreg::regression::sigmoid;

fn main() -> secure_logreg::Result<()> {
    let spec = SyntheticSpec::even(100_000, 4, 6, 5);
    let (sites, beta) = generate_synthetic(&spec)?;
    println!("sizes {:?}, true beta {:.3?}", spec.institution_sizes, beta.as_slice());

    let beta = &beta;
    let mut scored: Vec<(f64, f64)> = sites
        .iter()
        .flat_map(|s| (0..s.rows()).map(move |i| ((s.x().row(i) * beta)[0], s.y()[i])))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (k, bin) in scored.chunks(scored.len() / 10).enumerate() {
        let n = bin.len() as f64;
        let mean_z = bin.iter().map(|r| r.0).sum::<f64>() / n;
        let rate = bin.iter().map(|r| r.1).sum::<f64>() / n;
        println!("decile {k}: P(y=1) observed {rate:.3}, model {:.3}", sigmoid(mean_z));
    }
    Ok(())
}
