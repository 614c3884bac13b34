fn main() {
    std::process::exit(aspect_embed_cli::run_cli(std::env::args_os()));
}
