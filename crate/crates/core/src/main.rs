use std::io::Write;

use anyhow::{Context, Result};
use clap::Parser;

use lwsim::config::{parse_and_validate, CliArgs, Role};
use lwsim::sim::run_scenario;
use lwsim::wire::{run_enb, Station};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = CliArgs::parse();
    let cfg = parse_and_validate(&args)?;
    if args.print_config {
        print!("{}", cfg.to_dotted());
        return Ok(());
    }

    let outcome = match cfg.wire.as_ref().map(|w| (w.role, w.peer, w.listen)) {
        None => run_scenario(&cfg)?,
        Some((Role::Enb, Some(peer), _)) => run_enb(&cfg, peer).context("eNB process")?,
        Some((Role::Sta, _, Some(listen))) => {
            let station =
                Station::bind(&cfg, listen).with_context(|| format!("binding {listen}"))?;
            println!("listening on {}", station.local_addr()?);
            std::io::stdout().flush()?;
            station.run().context("station process")?
        }
        Some(_) => unreachable!("validated configs carry their role's address"),
    };
    print!("{}", outcome.summary_text());
    Ok(())
}
