use std::path::Path;

use dann::csvio::{read_csv, write_csv};
use dann::formats::{dae_to_string, model_to_string, norm_to_string, parse_dae, parse_model, parse_norm};
use dann_core::dae::DaeParams;
use dann_core::data::{Dataset, NormStats};
use dann_core::network::DannParams;
use dann_core::Matrix;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3..1e3f64,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(finite(), rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn model() -> impl Strategy<Value = DannParams> {
    (1..5usize, 1..5usize, 1..4usize)
        .prop_flat_map(|(d, k, l)| (matrix(d + 1, k), matrix(k + 1, l)))
        .prop_map(|(u1, u2)| DannParams::new(u1, u2).unwrap())
}

fn bits(m: &Matrix) -> Vec<u64> {
    m.as_slice().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #[test]
    fn model_print_parse_is_bit_exact(p in model()) {
        let text = model_to_string(&p);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(bits(back.u1()), bits(p.u1()));
        prop_assert_eq!(bits(back.u2()), bits(p.u2()));
        prop_assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn dae_print_parse_is_bit_exact(
        (enc, dec) in (1..5usize, 1..5usize).prop_flat_map(|(d, k)| (matrix(d + 1, k), matrix(k + 1, d)))
    ) {
        let p = DaeParams::new(enc, dec).unwrap();
        let back = parse_dae(&dae_to_string(&p)).unwrap();
        prop_assert_eq!(bits(back.encoder()), bits(p.encoder()));
        prop_assert_eq!(bits(back.decoder()), bits(p.decoder()));
    }

    #[test]
    fn norm_print_parse_is_exact(mean in prop::collection::vec(finite(), 1..6), scale in 1e-8..1e6f64) {
        let s = NormStats { std: vec![scale; mean.len()], mean };
        prop_assert_eq!(parse_norm(&norm_to_string(&s)).unwrap(), s);
    }

    #[test]
    fn csv_save_load_is_exact(
        x in (1..8usize, 1..4usize).prop_flat_map(|(n, d)| matrix(n, d)),
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = (0..x.rows()).map(|i| ((seed >> (i % 60)) % 3) as usize).collect();
        let ds = Dataset::labeled(x, labels, "p").unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &ds).unwrap();
        let back = read_csv(buf.as_slice(), true, Path::new("p.csv"), "p").unwrap();
        prop_assert_eq!(bits(back.features()), bits(ds.features()));
        prop_assert_eq!(back.labels(), ds.labels());
    }
}
