//! Encode reals as field elements, sum them in the field and decode.

use secure_logreg::field::FieldModulus;
use secure_logreg::fixed_point::FixedPoint;

fn main() -> secure_logreg::Result<()> {
    let p = FieldModulus::default();
    let codec = FixedPoint::new(p, 40, 4);
    let xs = [1.5, -0.25, 1234.5678, -1e-9];
    let mut total = p.element(0);
    for &x in &xs {
        let e = codec.encode(x)?;
        println!("{x:>12} -> {e}");
        total = p.add(total, e);
    }
    let exact: f64 = xs.iter().sum();
    println!("decoded sum {} (float sum {exact}, quantum {:e})", codec.decode(total), codec.quantum());

    // tiny field: large values no longer fit
    let small = FixedPoint::new(FieldModulus::new(1_000_003)?, 8, 1);
    println!("encode 5000 at 2^8 in p=1000003: {:?}", small.encode(5000.0).err());
    Ok(())
}
