// Enroll one device with the code-offset construction and recover its key
// from noisy re-measurements at the corners of the operating envelope. The
// untuned population is used so that the decoder has errors to correct.
//
//     cargo run --example fuzzy_extractor

use noisepulse::puf::{measure_response, sample_device, EnvCondition, PopulationParams};
use noisepulse::seal::{enroll, reproduce_from_response, DeviceKey};
use noisepulse::RngSeed;

pub struct Recovery {
    pub env: EnvCondition,
    pub raw_errors: u32,
    pub corrected: usize,
    pub key_matches: bool,
}

pub fn run_example() -> noisepulse::Result<(DeviceKey, String, Vec<Recovery>)> {
    let seed = RngSeed(3);
    let device = sample_device(&PopulationParams::untuned(), 0, seed)?;
    let reference = device.reference_response()?;
    let (helper, key) = enroll(&device, seed)?;

    let mut rng = seed.rng();
    let mut out = Vec::new();
    for (t, v) in [(0.0, 0.0), (10.0, 0.05), (-10.0, -0.05), (10.0, -0.05), (-10.0, 0.05)] {
        let env = EnvCondition::new(t, v)?;
        let response = measure_response(&device, &env, &mut rng)?;
        let (k, corrected) = reproduce_from_response(response.bits, &helper)?;
        out.push(Recovery { env, raw_errors: response.distance(&reference), corrected, key_matches: k == key });
    }
    Ok((key, helper.to_hex(), out))
}

fn main() -> noisepulse::Result<()> {
    let (key, helper, rows) = run_example()?;
    println!("helper data {helper}");
    println!("key         {}", key.to_hex());
    for r in rows {
        println!(
            "dT {:+5.1} C, dV {:+.2}: {} raw bit errors, {} corrected, key {}",
            r.env.temp_delta,
            r.env.volt_delta,
            r.raw_errors,
            r.corrected,
            if r.key_matches { "ok" } else { "MISMATCH" }
        );
    }
    Ok(())
}
