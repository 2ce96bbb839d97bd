//! Deterministic minute-resolution household power readings for benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{Column, ColumnData, Table};

/// Column names in output order.
pub const HOUSEHOLD_COLUMNS: [&str; 12] = [
    "global_active_power",
    "global_reactive_power",
    "voltage",
    "global_intensity",
    "sub_metering_1",
    "sub_metering_2",
    "sub_metering_3",
    "outdoor_temperature",
    "indoor_temperature",
    "humidity",
    "frequency",
    "co2",
];

fn decimal(v: f64, places: i32) -> f32 {
    let s = (v * 10f64.powi(places)).round();
    // Adding zero turns -0.0 into 0.0.
    (s / 10f64.powi(places)) as f32 + 0.0
}

/// Two-state appliance switching on and off with the given per-minute
/// probabilities.
struct Appliance {
    on: bool,
    p_on: f64,
    p_off: f64,
}

impl Appliance {
    fn step(&mut self, rng: &mut impl Rng, boost: f64) -> bool {
        let p = if self.on { self.p_off } else { self.p_on * boost };
        if rng.random::<f64>() < p {
            self.on = !self.on;
        }
        self.on
    }
}

/// `n` rows of household readings; the first `d` of [`HOUSEHOLD_COLUMNS`].
pub fn household_power(n: usize, d: usize, seed: u64) -> Table {
    let d = d.clamp(1, HOUSEHOLD_COLUMNS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid");
    let mut cols: Vec<Vec<f32>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut ints: Vec<Vec<i64>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
    let mut env: Vec<Vec<f32>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut co2 = Vec::with_capacity(n);

    let mut kitchen = Appliance {
        on: false,
        p_on: 0.004,
        p_off: 0.08,
    };
    let mut laundry = Appliance {
        on: false,
        p_on: 0.002,
        p_off: 0.02,
    };
    let mut heater = Appliance {
        on: false,
        p_on: 0.01,
        p_off: 0.03,
    };
    let (mut voltage, mut outdoor, mut indoor, mut humidity, mut ppm) = (240.0f64, 8.0f64, 20.0f64, 55.0f64, 600.0f64);

    for i in 0..n {
        let hour = (i % 1440) as f64 / 60.0;
        let day = (i / 1440) as f64;
        let awake = if (7.0..23.0).contains(&hour) { 1.0 } else { 0.15 };
        let evening = (-((hour - 19.5) / 2.0).powi(2)).exp();

        let k = kitchen.step(&mut rng, awake * (1.0 + 3.0 * evening));
        let l = laundry.step(&mut rng, awake);
        let h = heater.step(&mut rng, 1.0);
        let sm1 = if k { rng.random_range(30..=40) } else { 0 };
        let sm2 = if l {
            rng.random_range(15..=30)
        } else {
            i64::from(rng.random::<f64>() < 0.3)
        };
        let sm3 = if h {
            rng.random_range(17..=19)
        } else {
            i64::from(rng.random::<f64>() < 0.1)
        };

        let base = 0.25 + 0.6 * awake * (0.5 + evening) + 0.05 * noise.sample(&mut rng);
        let active = (base + (sm1 + sm2 + sm3) as f64 * 0.06).max(0.076);
        let reactive = (0.1 + 0.08 * noise.sample(&mut rng) + if k || l { 0.15 } else { 0.0 }).max(0.0);
        voltage += 0.05 * (240.5 - voltage) + 0.3 * noise.sample(&mut rng) - 0.4 * (active - 1.0) * 0.1;
        voltage = voltage.clamp(223.0, 254.0);
        let intensity = active * 1000.0 / voltage;

        let seasonal = 8.0 - 6.0 * (day / 365.0 * std::f64::consts::TAU).cos();
        let diurnal = 4.0 * ((hour - 15.0) / 24.0 * std::f64::consts::TAU).cos();
        outdoor += 0.02 * (seasonal + diurnal - outdoor) + 0.05 * noise.sample(&mut rng);
        indoor += 0.01 * (21.0 + if h { 1.5 } else { 0.0 } - indoor) + 0.01 * noise.sample(&mut rng);
        humidity += 0.01 * (60.0 - 0.8 * (outdoor - 8.0) - humidity) + 0.1 * noise.sample(&mut rng);
        humidity = humidity.clamp(15.0, 99.0);
        ppm += 0.02 * (450.0 + 500.0 * awake - ppm) + 3.0 * noise.sample(&mut rng);
        let frequency = 50.0 + 0.02 * noise.sample(&mut rng);

        cols[0].push(decimal(active, 3));
        cols[1].push(decimal(reactive, 3));
        cols[2].push(decimal(voltage, 2));
        cols[3].push(decimal(intensity, 1));
        ints[0].push(sm1);
        ints[1].push(sm2);
        ints[2].push(sm3);
        env[0].push(decimal(outdoor, 1));
        env[1].push(decimal(indoor, 1));
        env[2].push(decimal(humidity, 1));
        env[3].push(decimal(frequency, 3));
        co2.push(ppm.round().max(0.0) as i64);
    }

    let mut data: Vec<ColumnData> = cols.into_iter().map(ColumnData::F32).collect();
    data.extend(ints.into_iter().map(|values| ColumnData::Int { bits: 32, values }));
    data.extend(env.into_iter().map(ColumnData::F32));
    data.push(ColumnData::Int { bits: 32, values: co2 });
    data.truncate(d);
    let columns = data
        .into_iter()
        .zip(HOUSEHOLD_COLUMNS)
        .map(|(data, name)| Column {
            name: Some(name.to_string()),
            data,
        })
        .collect();
    Table::new(columns).expect("columns have equal length")
}
