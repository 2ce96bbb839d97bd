mod common;

use gdkit::codec::{compress, decompress, from_bytes, to_bytes};
use gdkit::configurator::{configure, ConfigureOptions, GdConfig, GreedyParams};
use gdkit::ingest::{read_csv, CsvOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tables_survive_the_container(seed in any::<u64>(), lambda in 0.0..0.9f64, alpha in 0.01..3.0f64, subset in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = common::random_table(&mut rng, 600, 6);
        let options = ConfigureOptions {
            params: GreedyParams { lambda, alpha },
            subset_size: subset.then(|| (table.n_rows() / 3).max(1)),
            seed,
        };
        let c = configure(&table, &options).unwrap();
        let cd = compress(&c.matrix, &c.layout, &c.plan, c.config()).unwrap();
        let (bytes, report) = to_bytes(&cd).unwrap();
        prop_assert_eq!(report.payload_bits(), cd.payload_bits());
        let back = from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &cd);
        prop_assert!(decompress(&back).unwrap().bit_eq(&table));
    }

    #[test]
    fn csv_text_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = common::random_table(&mut rng, 300, 5);
        let mut text = Vec::new();
        table.write_csv(&mut text, true).unwrap();
        let read = read_csv(text.as_slice(), &CsvOptions::default()).unwrap().table;
        let c = configure(&read, &ConfigureOptions::default()).unwrap();
        let cd = compress(&c.matrix, &c.layout, &c.plan, &GdConfig::all_bits(c.layout.l_c())).unwrap();
        let restored = decompress(&from_bytes(&to_bytes(&cd).unwrap().0).unwrap()).unwrap();
        let mut again = Vec::new();
        restored.with_names_from(&read).write_csv(&mut again, true).unwrap();
        prop_assert_eq!(String::from_utf8(again).unwrap(), String::from_utf8(text).unwrap());
    }
}
