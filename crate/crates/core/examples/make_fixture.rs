//! Regenerates the bundled 2,000-row housing fixture.
//!
//! The rows are synthetic but shaped like the California census-block
//! housing table: same eight features, same target units (100k USD, capped
//! at 5), similar marginal ranges. A 20,640-row population is drawn and a
//! target-stratified subsample of 2,000 rows is written.
//!
//!     cargo run --example make_fixture -- [out.csv]

use std::error::Error;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal, Normal};

const POPULATION: usize = 20_640;
const SAMPLE: usize = 2_000;
const STRATA: usize = 10;

// (lat, lon, spread, weight, price premium)
const METROS: [(f64, f64, f64, f64, f64); 6] = [
    (34.05, -118.25, 0.45, 0.36, 0.55),
    (37.70, -122.20, 0.35, 0.22, 1.05),
    (32.80, -117.10, 0.25, 0.10, 0.65),
    (38.60, -121.40, 0.30, 0.08, 0.05),
    (36.70, -119.80, 0.45, 0.09, -0.35),
    (39.50, -121.50, 1.10, 0.15, -0.30),
];

struct Row {
    x: [f64; 8],
    y: f64,
}

fn draw(rng: &mut ChaCha8Rng) -> Row {
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let pick: f64 = rng.random();
    let mut acc = 0.0;
    let mut metro = METROS[METROS.len() - 1];
    for m in METROS {
        acc += m.3;
        if pick < acc {
            metro = m;
            break;
        }
    }
    let (mut lat0, mut lon0, spread, _, premium) = metro;
    if premium < -0.2 && spread > 1.0 {
        // rural blocks spread along the state's NW-SE axis
        let t: f64 = rng.random();
        lat0 = 33.0 + 8.5 * t;
        lon0 = -115.8 - 8.0 * t;
    }
    let lat = (lat0 + spread * unit.sample(rng)).clamp(32.54, 41.95);
    let lon = (lon0 + spread * unit.sample(rng)).clamp(-124.35, -114.31);

    // distance from a rough coastline running NW-SE
    let coast = ((lon + 121.0) + 0.9 * (lat - 36.0)).max(0.0);

    let income = LogNormal::<f64>::new(1.25 + 0.25 * premium.max(0.0), 0.45).unwrap().sample(rng).clamp(0.5, 15.0);
    let age = rng.random_range(1..=52) as f64;
    let mut rooms = (4.6 + 0.35 * income + 0.6 * unit.sample(rng)).clamp(1.5, 12.0);
    let bedrooms = (0.2 * rooms + 0.08 * unit.sample(rng)).clamp(0.5, 3.0);
    let population = LogNormal::<f64>::new(7.0, 0.8).unwrap().sample(rng).clamp(3.0, 35_000.0).round();
    let mut occupancy = LogNormal::<f64>::new(1.03 + 0.1 * premium.max(0.0), 0.25).unwrap().sample(rng).clamp(0.7, 12.0);
    // resort areas and dormitories give the heavy tails of the real table
    if rng.random::<f64>() < 0.02 {
        occupancy *= rng.random_range(3.0..20.0);
    }
    if rng.random::<f64>() < 0.01 {
        rooms *= rng.random_range(2.0..6.0);
    }

    let near_coast = (-coast).exp();
    let bay = (-((lat - 37.6).powi(2) + (lon + 122.2).powi(2)) / 0.15).exp();
    let south = (-((lat - 34.0).powi(2) + (lon + 118.4).powi(2)) / 0.3).exp();
    let signal = 0.9 * income.ln() * income.sqrt() * (1.0 + 0.4 * near_coast)
        + premium * (-0.8 * coast).exp()
        + 1.3 * bay
        + 0.8 * south
        + 0.012 * age * near_coast
        - 0.55 * (occupancy / 3.0).ln()
        - 0.04 * (rooms - 5.0)
        + 0.15 * (bedrooms / rooms - 0.2) * 10.0
        - 0.00001 * population;
    let noise = Normal::<f64>::new(0.0, 0.42).unwrap().sample(rng);
    let y = (signal - 1.2 + noise).clamp(0.15, 5.0);
    Row {
        x: [income, age, rooms, bedrooms, population, occupancy, lat, lon],
        y,
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/california_fixture.csv"));
    let mut rng = ChaCha8Rng::seed_from_u64(20_640);
    let mut rows: Vec<Row> = (0..POPULATION).map(|_| draw(&mut rng)).collect();

    // equal-count target strata, sampled proportionally
    rows.sort_by(|a, b| a.y.total_cmp(&b.y));
    let per = SAMPLE / STRATA;
    let mut chosen = Vec::with_capacity(SAMPLE);
    for stratum in rows.chunks(POPULATION.div_ceil(STRATA)) {
        let mut idx: Vec<usize> = (0..stratum.len()).collect();
        idx.shuffle(&mut rng);
        chosen.extend(idx[..per].iter().map(|&i| &stratum[i]));
    }
    chosen.shuffle(&mut rng);

    if let Some(dir) = out.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "MedInc", "HouseAge", "AveRooms", "AveBedrms", "Population", "AveOccup", "Latitude", "Longitude", "MedHouseVal",
    ])?;
    for r in chosen {
        let mut rec: Vec<String> = r.x.iter().map(|v| format!("{v:.4}")).collect();
        rec.push(format!("{:.5}", r.y));
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!("wrote {SAMPLE} rows to {}", out.display());
    Ok(())
}
