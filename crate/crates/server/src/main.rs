use clap::Parser;

fn main() -> anyhow::Result<()> {
    tunnel_blimp_server::cli::run(tunnel_blimp_server::cli::Cli::parse())
}
