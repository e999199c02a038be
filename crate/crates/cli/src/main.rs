mod args;
mod output;
mod run;

fn main() {
    std::process::exit(run::run());
}
