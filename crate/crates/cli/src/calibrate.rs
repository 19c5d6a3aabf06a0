use clap::Args;
use lenia_evo::field::{Dims, Fft2D};
use lenia_evo::genome::{build_ring_bank, calibrate_rings, GeneSchema, RingAssignment};

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 12)]
    radius: usize,
    #[arg(long, default_value_t = 24)]
    n_ring: usize,
    #[arg(long, value_enum, default_value_t = Assignment::Linear)]
    assignment: Assignment,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Assignment {
    Floor,
    Linear,
}

pub fn calibrate(args: CalibrateArgs) -> anyhow::Result<u8> {
    let side = (2 * args.radius + 2).next_power_of_two().max(16);
    let plan = Fft2D::new(Dims::new(side, side));
    let assignment = match args.assignment {
        Assignment::Floor => RingAssignment::Floor,
        Assignment::Linear => RingAssignment::Linear,
    };
    let bank = build_ring_bank(&plan, args.radius, args.n_ring, assignment)?;
    let report = calibrate_rings(&bank, &GeneSchema::default(), args.samples, args.seed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(0);
    }
    println!(
        "# R={} n_ring={} assignment={:?}",
        report.radius, report.n_ring, report.assignment
    );
    println!("{:>5}  {:>10}", "draw", "rel_l2");
    for (i, e) in report.errors.iter().enumerate() {
        println!("{i:>5}  {e:>10.6}");
    }
    println!(
        "mean {:.4}  median {:.4}  p90 {:.4}  max {:.4}  within 5%: {:.0}%",
        report.mean,
        report.median,
        report.p90,
        report.max,
        100.0 * report.within_5pct
    );
    Ok(0)
}
