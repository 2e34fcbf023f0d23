//! Loading an experiment file and running the batch commands from code.

use std::path::Path;

use sqht::cli::{cmd_mre, cmd_validate, Overrides};

fn main() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/r1.json");
    let overrides = Overrides { output_dir: Some(std::env::temp_dir().join("sqht-example")), workers: None };
    for outcome in [cmd_validate(&config, &overrides), cmd_mre(&config, &overrides)] {
        print!("{}", outcome.stdout);
        println!("exit code {:?}, wrote {:?}", outcome.code, outcome.written);
    }
}
