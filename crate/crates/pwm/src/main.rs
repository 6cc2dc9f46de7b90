fn main() {
    std::process::exit(pwm::cli::main_exit());
}
