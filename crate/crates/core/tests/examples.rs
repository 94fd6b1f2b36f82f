//! Every example runs to completion.

#[path = "../examples/parameter_table.rs"]
mod parameter_table;

#[path = "../examples/codec_roundtrip.rs"]
mod codec_roundtrip;

#[path = "../examples/threshold_design.rs"]
mod threshold_design;

#[path = "../examples/embed_and_extract.rs"]
mod embed_and_extract;

#[path = "../examples/pruning_immunity.rs"]
mod pruning_immunity;

#[path = "../examples/block_mode.rs"]
mod block_mode;

#[path = "../examples/file_formats.rs"]
mod file_formats;

#[path = "../examples/secrecy_attacks.rs"]
mod secrecy_attacks;

#[path = "../examples/noise_margin.rs"]
mod noise_margin;

#[path = "../examples/experiment.rs"]
mod experiment;

macro_rules! runs {
    ($($name:ident),*) => {
        $(
            #[test]
            fn $name() {
                $name::main().expect("example runs");
            }
        )*
    };
}

runs!(
    parameter_table,
    codec_roundtrip,
    threshold_design,
    embed_and_extract,
    pruning_immunity,
    block_mode,
    file_formats,
    secrecy_attacks,
    noise_margin,
    experiment
);
