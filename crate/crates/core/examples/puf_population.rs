// Sample a ring-oscillator PUF population and measure uniqueness and
// reliability, for the tuned and the untuned parameter sets.
//
//     cargo run --release --example puf_population

use noisepulse::puf::{ideality_score, reliability, sample_population, uniqueness, EnvEnvelope, PopulationParams};
use noisepulse::rng::Stream;
use noisepulse::RngSeed;

pub struct PopulationSummary {
    pub name: &'static str,
    pub mean_fractional_hd: f64,
    pub ideality_score: f64,
    pub intra_ber: f64,
    pub bit_stability: f64,
}

fn summarize(name: &'static str, params: &PopulationParams, seed: RngSeed) -> noisepulse::Result<PopulationSummary> {
    let devices = sample_population(params, 100, seed)?;
    let hd = uniqueness(&devices)?;
    let (mut ber, mut stab) = (0.0, 0.0);
    for d in &devices {
        let mut rng = seed.derive(Stream::Trial, d.device_id).rng();
        let r = reliability(d, 20, &EnvEnvelope::default(), &mut rng)?;
        ber += r.intra_ber;
        stab += r.bit_stability;
    }
    let n = devices.len() as f64;
    Ok(PopulationSummary {
        name,
        mean_fractional_hd: hd,
        ideality_score: ideality_score(hd),
        intra_ber: ber / n,
        bit_stability: stab / n,
    })
}

pub fn run_example() -> noisepulse::Result<Vec<PopulationSummary>> {
    let seed = RngSeed(5);
    Ok(vec![
        summarize("tuned", &PopulationParams::default(), seed)?,
        summarize("untuned", &PopulationParams::untuned(), seed)?,
    ])
}

fn main() -> noisepulse::Result<()> {
    for s in run_example()? {
        println!(
            "{:>8}: inter-device HD {:.4} (score {:.4}), raw BER {:.5}, stability {:.4}",
            s.name, s.mean_fractional_hd, s.ideality_score, s.intra_ber, s.bit_stability
        );
    }
    Ok(())
}
