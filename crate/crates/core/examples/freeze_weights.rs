//! Regenerates `data/conv_relu_conv.tfw`.
//!
//! cargo run -p idse-core --example freeze_weights

use idse::toyfe::weights::{encode_weights, generate_conv_weights, CONV_WEIGHTS_SEED};

fn main() -> std::io::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/conv_relu_conv.tfw");
    std::fs::write(path, encode_weights(&generate_conv_weights(CONV_WEIGHTS_SEED)))?;
    println!("wrote {path}");
    Ok(())
}
