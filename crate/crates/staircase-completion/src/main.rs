use staircase_completion::cli;

// Rust ignores SIGPIPE by default, which turns `staircase ... | head` into a
// panic when stdout closes early. Restore the default so the process dies
// quietly like any other pipeline stage.
#[cfg(unix)]
fn restore_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe() {}

fn main() {
    restore_sigpipe();
    std::process::exit(cli::run(std::env::args_os()));
}
