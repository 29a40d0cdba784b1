// SPDX-License-Identifier: MIT OR Apache-2.0

use clap::Parser;

fn main() {
    let config = catseg_cli::RunConfig::parse();
    std::process::exit(catseg_cli::run(config));
}
