//! Central and total time as the number of institutions grows.
//!
//! `cargo run --release --example scaling_bench -- 5,10,25,50,100 10000`

use secure_logreg::cli::bench_scaling;
use secure_logreg::protocol::ProtocolConfig;

fn main() -> secure_logreg::Result<()> {
    let mut args = std::env::args().skip(1);
    let sweep: Vec<usize> = args
        .next()
        .map(|s| s.split(',').filter_map(|v| v.parse().ok()).collect())
        .unwrap_or_else(|| vec![5, 10, 25, 50]);
    let per_site = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);

    println!("institutions,records,iterations,central_s,total_s,megabytes");
    for row in bench_scaling(&sweep, per_site, 6, 3, &ProtocolConfig::default())? {
        println!(
            "{},{},{},{:.6},{:.4},{:.3}",
            row.institutions,
            row.records,
            row.iterations,
            row.central_seconds,
            row.total_seconds,
            row.bytes_transmitted as f64 / 1e6
        );
    }
    Ok(())
}
