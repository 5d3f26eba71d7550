//! Ridge logistic regression on pooled rows with Newton iterations.

use secure_logreg::data::{generate_synthetic, SyntheticSpec};
use secure_logreg::regression::{centralized_fit, FitOptions};

fn main() -> secure_logreg::Result<()> {
    let (sites, truth) = generate_synthetic(&SyntheticSpec::even(50_000, 6, 1, 3))?;
    for lambda in [0.0, 1.0, 100.0] {
        let model = centralized_fit(&sites, &FitOptions::new(lambda))?;
        println!(
            "lambda={lambda:<5} iterations={} converged={} final deviance={:.6}",
            model.iteration,
            model.converged,
            model.deviance_history.last().unwrap()
        );
        for (k, (b, t)) in model.beta.iter().zip(truth.iter()).enumerate() {
            println!("  beta[{k}] = {b:>9.5}   (generating value {t:>8.5})");
        }
    }
    Ok(())
}
