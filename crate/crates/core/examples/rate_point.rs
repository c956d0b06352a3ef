//! Prints the asymptotic rate breakdown for one channel setting.
//!
//! Usage: `rate_point N ALPHA NU_TH ATTENUATION_DB EXCESS_NOISE CUTOFF [BETA_NODES THETA_NODES]`

use std::time::Instant;

use cvqkd_core::rates::{asymptotic_rate, GridSpec, QuadratureGrid};
use cvqkd_core::{ChannelParams, ProtocolParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 6 {
        return Err("usage: rate_point N ALPHA NU_TH ATTENUATION_DB EXCESS_NOISE CUTOFF [BETA_NODES THETA_NODES]".into());
    }
    let params = ProtocolParams::new(args[0].parse()?, args[1].parse()?, args[2].parse()?, 1.0)?;
    let ch = ChannelParams::from_attenuation_db(args[3].parse()?, args[4].parse()?)?;
    let cutoff: usize = args[5].parse()?;
    let mut spec = GridSpec::default();
    if args.len() >= 8 {
        spec.beta_nodes = args[6].parse()?;
        spec.theta_nodes = args[7].parse()?;
    }
    let grid = QuadratureGrid::new(&params, &ch, spec)?;
    let start = Instant::now();
    let r = asymptotic_rate(&params, &ch, &grid, cutoff)?;
    println!(
        "tau={:.6} omega={:.6} I={:.10} chi={:.10} R={:.10} deficit={:.3e} ({:.2?})",
        ch.tau(),
        ch.omega(),
        r.mi,
        r.holevo,
        r.rate,
        r.max_trace_deficit,
        start.elapsed()
    );
    Ok(())
}
