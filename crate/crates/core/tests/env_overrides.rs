// Own binary: mutates the process environment.

use tempfile::TempDir;

use tvoirf::cli::{main_with_args, OUT_DIR_ENV, THREADS_ENV};

#[test]
fn environment_sets_output_dir_and_threads() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-env");
    std::env::set_var(OUT_DIR_ENV, &target);
    std::env::set_var(THREADS_ENV, "2");
    let code = main_with_args(["tvoirf", "simulate", "--T", "50"]);
    assert_eq!(code, 0);
    assert!(target.join("series.csv").exists());
    assert_eq!(rayon::current_num_threads(), 2);

    // the flag wins over the environment
    let flag = dir.path().join("from-flag");
    let code = main_with_args(["tvoirf", "simulate", "--T", "50", "--out-dir", flag.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(flag.join("series.csv").exists());

    std::env::set_var(THREADS_ENV, "many");
    assert_eq!(main_with_args(["tvoirf", "simulate", "--T", "50"]), 2);
}
