//! Inspect the message log of a small run: who sent what, and how big.

use secure_logreg::data::{generate_synthetic, SyntheticSpec};
use secure_logreg::protocol::{run_protocol, MessageType, ProtocolConfig};

fn main() -> secure_logreg::Result<()> {
    let (sites, _) = generate_synthetic(&SyntheticSpec::even(2_000, 3, 2, 4))?;
    let fit = run_protocol(&sites, &ProtocolConfig::default())?;
    let t = &fit.transcript;
    for ty in [MessageType::Submission, MessageType::Aggregate, MessageType::BetaBroadcast] {
        println!("{ty:?}: {} bytes", t.bytes_by_type(ty));
    }
    for r in t.records().iter().filter(|r| r.iteration == 1) {
        println!("{:>8.4}s {:?} {} -> {} ({} bytes)", r.timestamp, r.msg_type, r.sender, r.receiver, r.bytes);
    }
    let first = t.records()[0].body.clone().unwrap();
    println!("\nfirst submission body:\n{}", serde_json::to_string_pretty(&first)?);

    let path = std::env::temp_dir().join("secure_logreg_transcript.jsonl");
    t.write_jsonl(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
