//! File-format checks against hand-assembled bytes, as an external sketch
//! producer would write them.

use idse::sketch::{decode_sketch, encode_sketch, read_sketch};
use idse::{decode, encode_with_rdo, load_pgm, MetricConfig, SketchedJacobian};

fn skj1_bytes(w: u32, h: u32, n_s: u32, seed: u64, tag: &str, entries: &[f32]) -> Vec<u8> {
    let mut b = b"SKJ1".to_vec();
    b.push(1);
    for v in [w, h, n_s] {
        b.extend(v.to_le_bytes());
    }
    b.extend(seed.to_le_bytes());
    b.extend((tag.len() as u16).to_le_bytes());
    b.extend(tag.as_bytes());
    for e in entries {
        b.extend(e.to_le_bytes());
    }
    b
}

#[test]
fn external_sketch_loads_and_drives_encoder() {
    let x = load_pgm(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/fixture.pgm")).unwrap();
    let (w, h) = (x.width() as u32, x.height() as u32);
    let n_p = (w * h) as usize;
    // two rows: a left-half and a right-half weighting, exact in f32
    let entries: Vec<f32> = (0..2 * n_p)
        .map(|k| {
            let (r, p) = (k / n_p, k % n_p);
            let left = (p as u32 % w) < w / 2;
            if (r == 0) == left { 0.5 } else { 0.0 }
        })
        .collect();
    let bytes = skj1_bytes(w, h, 2, 77, "resnet18:layer2", &entries);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ext.skj");
    std::fs::write(&path, &bytes).unwrap();

    let j = read_sketch(&path).unwrap();
    assert_eq!((j.width(), j.height(), j.n_s(), j.seed()), (w as usize, h as usize, 2, 77));
    assert_eq!(j.source_tag(), "resnet18:layer2");
    assert_eq!(j.matrix().get(0, 0), 0.5);
    assert_eq!(j.matrix().get(1, 0), 0.0);
    assert_eq!(encode_sketch(&j).unwrap(), bytes);

    let enc = encode_with_rdo(&x, 30, &MetricConfig::idse().with_alpha(0.0), Some(&j)).unwrap();
    let dec = decode(&enc.bitstream).unwrap();
    assert_eq!(dec, enc.reconstruction);
}

#[test]
fn malformed_sketches_are_format_errors() {
    let good = skj1_bytes(16, 16, 1, 0, "", &[1.0; 256]);
    assert!(decode_sketch(&good).is_ok());
    let mut bad_magic = good.clone();
    bad_magic[3] = b'2';
    let mut bad_version = good.clone();
    bad_version[4] = 2;
    let truncated = &good[..good.len() - 1];
    let zero_rows = skj1_bytes(16, 16, 0, 0, "", &[]);
    let bad_grid = skj1_bytes(15, 16, 1, 0, "", &[1.0; 240]);
    for data in [&bad_magic[..], &bad_version[..], truncated, &zero_rows[..], &bad_grid[..]] {
        assert!(matches!(decode_sketch(data), Err(idse::Error::Format(_))));
    }
}

#[test]
fn f32_storage_rounds_once() {
    let j = SketchedJacobian::new(16, 16, 1, vec![0.1; 256], 0, "t").unwrap();
    let back = decode_sketch(&encode_sketch(&j).unwrap()).unwrap();
    assert_eq!(back.entries()[0], f64::from(0.1f32));
    assert_eq!(encode_sketch(&back).unwrap(), encode_sketch(&j).unwrap());
}
