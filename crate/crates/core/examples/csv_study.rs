//! Load a pooled CSV, split it across institutions and fit securely.
//!
//! `cargo run --example csv_study -- data.csv outcome 5`

use secure_logreg::data::{generate_synthetic, load_csv, partition_horizontal, write_csv, SyntheticSpec, TabularSource};
use secure_logreg::protocol::{run_protocol, ProtocolConfig};

fn main() -> secure_logreg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp;
    let (path, response) = match args.first() {
        Some(p) => (std::path::PathBuf::from(p), args.get(1).cloned().unwrap_or_else(|| "y".into())),
        None => {
            // no file given: write a demo one
            tmp = std::env::temp_dir().join("secure_logreg_demo.csv");
            let (sites, _) = generate_synthetic(&SyntheticSpec::even(5875, 21, 1, 2))?;
            write_csv(&tmp, &sites[0])?;
            (tmp.clone(), "y".to_string())
        }
    };
    let parts: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);

    let pooled = load_csv(&TabularSource::new(&path, response))?;
    println!("{}: {} rows, {} coefficients", path.display(), pooled.rows(), pooled.dim());
    let sites = partition_horizontal(&pooled, parts, 0)?;
    let fit = run_protocol(&sites, &ProtocolConfig { record_bodies: false, ..Default::default() })?;
    println!(
        "{} institutions, {} iterations, central {:.4}s, total {:.3}s, {:.2} MB",
        fit.institutions,
        fit.iterations(),
        fit.central_phase_seconds,
        fit.total_seconds,
        fit.bytes_transmitted as f64 / 1e6
    );
    println!("beta = {:.5?}", fit.model.beta.as_slice());
    Ok(())
}
