//! The command-line drivers called from code: parse a configuration, run the
//! identity sweep twice and confirm the CSV output is byte-identical.
//!
//! cargo run --release --example run_config

use flatnormal::config::parse_config;
use flatnormal::report::run_verify;

const CONFIG: &str = "
[chart]
name = dini
params = a = 1, b = 0.5

[grid]
resolution = 65
engine = ad
";

fn main() -> flatnormal::Result<()> {
    let base = std::env::temp_dir().join(format!("flatnormal-run-config-{}", std::process::id()));
    let mut outputs = vec![];
    for k in 0..2 {
        let mut cfg = parse_config(CONFIG)?;
        cfg.output = base.join(format!("run{k}"));
        let outcome = run_verify(&cfg, false);
        print!("{}", outcome.summary);
        println!("exit {}", outcome.code);
        let bytes: Vec<Vec<u8>> = outcome.files.iter().map(std::fs::read).collect::<Result<_, _>>()?;
        outputs.push(bytes);
    }
    println!("byte-identical: {}", outputs[0] == outputs[1]);
    std::fs::remove_dir_all(&base)?;
    Ok(())
}
