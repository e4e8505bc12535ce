use breather_cli::config::{apply_env, apply_override, from_table, parse_document, GammaSource};
use breather_cli::{parse_config, ConfigError, SolverConfig};

fn error_text(source: &str) -> String {
    parse_config(source).unwrap_err().to_string()
}

#[test]
fn empty_document_gives_the_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, SolverConfig::default());
    assert_eq!((cfg.m, cfg.omega, cfg.s, cfg.k_max), (1.0, 2.0, 1, 8));
    assert_eq!(cfg.gamma, GammaSource::Constant(1.0));
    assert_eq!((cfg.grid.r_max, cfg.grid.n), (100.0, 4096));
    assert_eq!(cfg.alphas, vec![1e-3, 2e-3, 1e-2, -1e-3, -2e-3, -1e-2]);
}

#[test]
fn full_document() {
    let cfg = parse_config(
        "# two-mode run\nm = 1\nomega = 2.5\ngamma0 = 0.5\ns = 2\nK = 6\nr_max = 100.0\nn = 8192\n\
         alphas = [0.001, -0.001]\ntau_3 = 2.0\nout = \"run\"\n",
    )
    .unwrap();
    assert_eq!((cfg.omega, cfg.s, cfg.k_max, cfg.grid.n), (2.5, 2, 6, 8192));
    assert_eq!(cfg.gamma, GammaSource::Constant(0.5));
    assert_eq!(cfg.tau_overrides, vec![(3, 2.0)]);
    assert_eq!(cfg.alphas, vec![1e-3, -1e-3]);
    assert_eq!(cfg.out.to_str(), Some("run"));
}

#[test]
fn frequency_must_exceed_the_mass() {
    assert!(error_text("omega = 0.5").contains("requires omega > m"));
    assert!(error_text("m = 3.0\nomega = 3.0").contains("requires omega > m"));
}

#[test]
fn truncation_must_hold_the_third_harmonic() {
    assert!(error_text("K = 2").contains("requires K >= 3s"));
    assert!(error_text("s = 3\nK = 8").contains("requires K >= 3s"));
    assert!(parse_config("s = 2\nK = 6").is_ok());
}

#[test]
fn invalid_values() {
    assert!(matches!(parse_config("frequency = 2"), Err(ConfigError::UnknownKey(k)) if k == "frequency"));
    assert!(matches!(parse_config("omega = ["), Err(ConfigError::Syntax(_))));
    assert!(matches!(parse_config("[grid]\nn = 5"), Err(ConfigError::Syntax(_))));
    assert!(parse_config("n = -4").is_err());
    assert!(parse_config("omega = \"fast\"").is_err());
    assert!(parse_config("tau_2 = 4.0").is_err());
    assert!(parse_config("tau_x = 1.0").is_err());
    assert!(parse_config("newton_tol = nan").is_err());
    // too coarse for mode K, and a box too small for the far-field window
    assert!(parse_config("n = 512").is_err());
    assert!(parse_config("r_max = 20.0\nn = 4096").is_err());
}

#[test]
fn environment_then_overrides() {
    let mut table = parse_document("omega = 2.5\nK = 8\nn = 8192").unwrap();
    apply_env(
        &mut table,
        vec![
            ("BREATHER_OMEGA".to_string(), "3.0".to_string()),
            ("BREATHER_ALPHAS".to_string(), "1e-3, -1e-3".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ],
    );
    let cfg = from_table(&table).unwrap();
    assert_eq!(cfg.omega, 3.0);
    assert_eq!(cfg.alphas, vec![1e-3, -1e-3]);

    apply_override(&mut table, "omega=3.5").unwrap();
    apply_override(&mut table, "K = 9").unwrap();
    let cfg = from_table(&table).unwrap();
    assert_eq!((cfg.omega, cfg.k_max), (3.5, 9));
    assert!(apply_override(&mut table, "omega").is_err());
}

#[test]
fn keys_are_case_insensitive() {
    assert_eq!(parse_config("k = 9\nn = 8192").unwrap().k_max, 9);
    assert_eq!(parse_config("OMEGA = 3.0\nN = 8192").unwrap().omega, 3.0);
}
