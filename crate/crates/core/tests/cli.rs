use granular_spacetime::cli::run;
use granular_spacetime::manifest::RunManifest;
use std::path::Path;

fn sgst(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["sgst".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push(format!("--out={}", out.display()));
    run(argv)
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Small invocations of every subcommand with the CSV headers they must produce.
const CASES: &[(&str, &[&str], &[(&str, &str)])] = &[
    (
        "interference",
        &["--alpha-grid=0:6.283:16"],
        &[("interference.csv", "alpha,beta,density,variant")],
    ),
    (
        "search",
        &["--subspace=zt-block", "--stride=50"],
        &[("hits.csv", "index,matrix_entries")],
    ),
    ("verify-f", &[], &[]),
    (
        "ricci",
        &["--samples=3"],
        &[(
            "ricci.csv",
            "component,z,t,k,omega,computed_re,computed_im,reference_re,reference_im,rel_err",
        )],
    ),
    (
        "geodesic",
        &["--steps=50"],
        &[("geodesic.csv", "s,x,y,z,t,vx,vy,vz,vt")],
    ),
    ("spread", &["--n=20"], &[("spread.csv", "n,variance,skew,kurtosis")]),
    (
        "walk",
        &[
            "--walkers=50",
            "--steps=20",
            "--paths=2",
            "--wiener-steps=100",
            "--merge-extent=4,4,4,8",
        ],
        &[
            ("terminals.csv", "walker_id,x,y,z,t"),
            ("paths.csv", "walker_id,step,x,y,z,t,tau_phase"),
            ("wiener.csv", "walker_id,terminal"),
        ],
    ),
    ("uncertainty", &["--samples=1000", "--m-points=4"], &[]),
    (
        "compton",
        &["--t-bar=32"],
        &[("oscillation.csv", "step,angle_0"), ("spectrum.csv", "frequency,power")],
    ),
    (
        "sweep",
        &[
            "--t-min=0.1",
            "--t-max=1000",
            "--points=5",
            "--trials=3",
            "--min-steps=1024",
        ],
        &[("sweep_trials.csv", "t_bar,trial,detected,snr,dominant_freq")],
    ),
    (
        "gravity",
        &["--radii=100"],
        &[("line_element.csv", "r,g_tt,g_rr,product")],
    ),
    (
        "dwell",
        &[
            "--r-s=20",
            "--start-r=60",
            "--walkers=200",
            "--steps=200",
            "--bin-width=4",
        ],
        &[(
            "dwell.csv",
            "r_mid,dwell_count,visit_count,dwell_per_visit,predicted_density",
        )],
    ),
    ("demo-covariant", &[], &[("covariant.csv", "r,contravariant,covariant")]),
];

#[test]
fn every_subcommand_writes_outputs_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, args, headers) in CASES {
        let first = tmp.path().join(format!("{name}-a"));
        let mut argv = vec![*name];
        argv.extend_from_slice(args);
        assert_eq!(sgst(&first, &argv), 0, "{name}");
        for (file, h) in *headers {
            assert_eq!(header(&first.join(file)), *h, "{name}/{file}");
        }
        let m1 = RunManifest::read(&first.join("manifest.json")).unwrap();
        assert_eq!(m1.experiment_name, *name);
        assert!(!m1.output_files.is_empty());

        // Replay from the manifest with a different worker count.
        let second = tmp.path().join(format!("{name}-b"));
        let config = format!("--config={}", first.join("manifest.json").display());
        assert_eq!(sgst(&second, &[name, &config, "--workers=2"]), 0, "{name} replay");
        let m2 = RunManifest::read(&second.join("manifest.json")).unwrap();
        assert_eq!(m1.output_hashes(), m2.output_hashes(), "{name}");
    }
}

#[test]
fn seeds_change_stochastic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(sgst(&a, &["walk", "--walkers=40", "--steps=30", "--seed=1"]), 0);
    assert_eq!(sgst(&b, &["walk", "--walkers=40", "--steps=30", "--seed=2"]), 0);
    let ha = RunManifest::read(&a.join("manifest.json")).unwrap();
    let hb = RunManifest::read(&b.join("manifest.json")).unwrap();
    assert_ne!(ha.output_hashes(), hb.output_hashes());
}

#[test]
fn exit_codes_separate_domain_and_numerical_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    // Parameter out of domain.
    assert_eq!(sgst(&out, &["uncertainty", "--samples=10"]), 1);
    assert_eq!(sgst(&out, &["sweep", "--t-min=1", "--t-max=1000"]), 1);
    assert_eq!(sgst(&out, &["demo-covariant", "--r-s=-1"]), 1);
    // Singular metric at the start point.
    assert_eq!(sgst(&out, &["geodesic", "--metric=f1", "--steps=5"]), 2);
    // Unknown flags are usage errors.
    assert_ne!(sgst(&out, &["spread", "--no-such-flag"]), 0);
}

#[test]
fn flat_config_file_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "n = 12\nd1 = uniform:-1:1\n").unwrap();
    let out = tmp.path().join("o");
    let config = format!("--config={}", cfg.display());
    assert_eq!(sgst(&out, &["spread", &config]), 0);
    let m = RunManifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.get("n"), Some("12"));
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "bogus = 1\n").unwrap();
    assert_eq!(sgst(&out, &["spread", &format!("--config={}", bad.display())]), 1);
}
