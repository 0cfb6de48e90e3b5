use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use qpjacobi_cli::{run, write_artifacts, Cli};

fn main() {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let written = write_artifacts(&out.artifacts, out.resolved.out_dir.as_deref(), &format!("generated-unix: {secs}"))?;
        for p in written {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    });
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
