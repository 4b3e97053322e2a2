fn main() {
    std::process::exit(social_circuits::cli::run());
}
