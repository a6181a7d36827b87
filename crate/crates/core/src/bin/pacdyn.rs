fn main() {
    pacdyn::par::init_thread_pool_from_env();
    std::process::exit(pacdyn::cli::main());
}
