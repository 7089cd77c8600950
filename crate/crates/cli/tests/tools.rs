mod common;

use common::*;

fn s(p: &std::path::Path) -> String {
    p.to_str().unwrap().to_owned()
}

#[test]
fn inspect_matches_golden_reports() {
    let demo = Demo::build();
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for label in LABELS {
        let staged = demo.stage(label);
        for bind in ["lazy", "eager"] {
            let out = ok(
                "facinspect",
                [
                    "--got".into(),
                    format!("--bind={bind}"),
                    "--path".into(),
                    s(staged.path()),
                    s(&demo.path("mime_fac.facx")),
                ],
            );
            let want =
                std::fs::read_to_string(golden.join(format!("got_{label}_{bind}.tsv"))).unwrap();
            assert_eq!(out, want, "{label} {bind}");
        }
    }
}

#[test]
fn run_prints_the_expected_dispatch() {
    let demo = Demo::build();
    for label in LABELS {
        let staged = demo.stage(label);
        for exe in ["mime_fac.facx", "mime_weak.facx", "mime_dyn.facx"] {
            let out = tool(
                "facrun",
                ["--path".into(), s(staged.path()), s(&demo.path(exe))],
            );
            assert_eq!(out.status.code(), Some(0), "{exe} {label}");
            assert_eq!(
                String::from_utf8(out.stdout).unwrap(),
                expected_stdout(label),
                "{exe} {label}"
            );
        }
    }
}

#[test]
fn library_path_variable_is_searched_after_flags() {
    let demo = Demo::build();
    let staged = demo.stage("p");
    let out = std::process::Command::new(bin("facrun"))
        .arg(demo.path("mime_fac.facx"))
        .env(
            "FAC_LIBRARY_PATH",
            format!("/nonexistent:{}", staged.path().display()),
        )
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected_stdout("p"));
}

#[test]
fn multiplexed_binary_dispatches_by_name() {
    let out = tool("fac", ["facc", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("facc"));
    assert_eq!(tool("fac", ["nosuchtool"]).status.code(), Some(2));
    assert_eq!(tool("fac", Vec::<String>::new()).status.code(), Some(2));
    assert_eq!(tool("fac", ["--help"]).status.code(), Some(0));
    let demo = Demo::build();
    let staged = demo.stage("jpg");
    let out = ok(
        "fac",
        [
            "facrun".into(),
            "--path".into(),
            s(staged.path()),
            s(&demo.path("mime_fac.facx")),
        ],
    );
    assert_eq!(out, expected_stdout("jpg"));
}

#[test]
fn unknown_flags_are_usage_errors() {
    for t in [
        "facc",
        "facld",
        "facstub",
        "facrun",
        "facinspect",
        "facbench",
    ] {
        let out = tool(t, ["--definitely-not-a-flag"]);
        assert_eq!(out.status.code(), Some(2), "{t}");
        assert!(!out.stderr.is_empty(), "{t}");
        assert_eq!(tool(t, ["--help"]).status.code(), Some(0), "{t}");
    }
    assert_eq!(
        tool("facld", ["--strict", "--tolerant", "-o", "x", "y"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tool("facrun", ["--bind=sometimes", "x"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tool("facinspect", ["--got", "--syms", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn compile_errors_point_at_the_source() {
    let d = tempfile::tempdir().unwrap();
    let src = d.path().join("bad.mc");
    std::fs::write(&src, "void f() {\n  nothing();\n}\n").unwrap();
    let out = tool(
        "facc",
        [s(&src), "-o".into(), s(&d.path().join("bad.faco"))],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("bad.mc:2:3: error: undeclared identifier `nothing`"),
        "{err}"
    );
}

#[test]
fn strict_link_stub_and_tolerant_link() {
    let d = tempfile::tempdir().unwrap();
    let obj = d.path().join("m.faco");
    ok("facc", [s(&corpus("mime_fac.mc")), "-o".into(), s(&obj)]);
    let exe = d.path().join("m.facx");
    let strict = tool("facld", ["--strict".into(), "-o".into(), s(&exe), s(&obj)]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr)
        .contains("undefined reference to `Jpeg_handler_fn`"));
    assert!(!exe.exists());

    let spec = d.path().join("img.stub");
    std::fs::write(
        &spec,
        "# image handlers\nfunc Jpeg_handler_fn/1\nfunc Png_handler_fn/1\nfunc Gif_handler_fn/1\n",
    )
    .unwrap();
    let stub = d.path().join("libimg.facl");
    ok(
        "facstub",
        ["--spec".into(), s(&spec), "-o".into(), s(&stub)],
    );
    ok(
        "facld",
        [
            "--strict".into(),
            "--needed".into(),
            "libimg".into(),
            "-o".into(),
            s(&exe),
            s(&obj),
            s(&stub),
        ],
    );
    let run = tool("facrun", ["--path".into(), s(d.path()), s(&exe)]);
    assert_eq!(run.status.code(), Some(12));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "text:handled\n");
    assert!(String::from_utf8_lossy(&run.stderr).contains("STUB_CALLED"));

    ok(
        "facld",
        ["--tolerant".into(), "-o".into(), s(&exe), s(&obj)],
    );
    let run = tool("facrun", [s(&exe)]);
    assert_eq!(
        String::from_utf8(run.stdout).unwrap(),
        expected_stdout("none")
    );
}

#[test]
fn runtime_failures_map_to_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        (
            "call",
            "extern void gone();\nint main() { gone(); return 0; }\n",
            10,
        ),
        (
            "data",
            "extern int level;\nint main() { return level; }\n",
            11,
        ),
        (
            "deep",
            "int f(int n) { return f(n + 1); }\nint main() { return f(0); }\n",
            14,
        ),
        ("args", "int main(int a, int b) { return a - b; }\n", 0),
    ];
    for (name, src, code) in cases {
        let (mc, obj, exe) = (
            d.path().join(format!("{name}.mc")),
            d.path().join(format!("{name}.faco")),
            d.path().join(format!("{name}.facx")),
        );
        std::fs::write(&mc, src).unwrap();
        ok("facc", [s(&mc), "-o".into(), s(&obj)]);
        ok(
            "facld",
            [
                "--tolerant".into(),
                "--needed".into(),
                "libgone".into(),
                "-o".into(),
                s(&exe),
                s(&obj),
            ],
        );
        let args = if name == "args" {
            vec![s(&exe), "-3".into(), "-3".into()]
        } else {
            vec![s(&exe)]
        };
        assert_eq!(tool("facrun", args).status.code(), Some(code), "{name}");
    }
    let junk = d.path().join("junk.facx");
    std::fs::write(&junk, b"FACM\x01\x00\x02").unwrap();
    assert_eq!(tool("facrun", [s(&junk)]).status.code(), Some(15));
    assert_eq!(tool("facinspect", [s(&junk)]).status.code(), Some(15));
    assert_eq!(
        tool("facrun", [s(&d.path().join("missing.facx"))])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn instruction_stats_show_weak_overhead() {
    let d = tempfile::tempdir().unwrap();
    let count = |mode: &str| -> usize {
        let out = ok(
            "facc",
            [
                format!("--mode={mode}"),
                "--stats".into(),
                s(&corpus("mime_fac.mc")),
                "-o".into(),
                s(&d.path().join(format!("{mode}.faco"))),
            ],
        );
        out.trim()
            .strip_prefix("instructions\t")
            .unwrap()
            .parse()
            .unwrap()
    };
    let (fac, weak) = (count("fac"), count("weak"));
    assert_eq!(weak, fac + 3);
}

#[test]
fn symbol_listing_shows_needed_libraries() {
    let demo = Demo::build();
    let out = ok(
        "facinspect",
        ["--syms".into(), s(&demo.path("mime_fac.facx"))],
    );
    let needed: Vec<&str> = out
        .lines()
        .filter_map(|l| l.strip_prefix("NEEDED\t"))
        .collect();
    assert_eq!(needed, LIBS);
    assert!(out
        .lines()
        .any(|l| l == "SYM\t4\tPng_handler_fn\tFUNC\tUNDEFINED\t-"));
    let weak = ok(
        "facinspect",
        ["--syms".into(), s(&demo.path("mime_weak.facx"))],
    );
    assert_eq!(weak.matches("WEAK_UNDEFINED").count(), 3);
}

#[test]
fn bench_matrix_and_loc_subcommands() {
    let demo = Demo::build();
    let expect = demo.path("expect.json");
    let map: std::collections::BTreeMap<&str, String> =
        LABELS.iter().map(|l| (*l, expected_stdout(l))).collect();
    std::fs::write(&expect, serde_json::to_string(&map).unwrap()).unwrap();
    let csv = ok(
        "facbench",
        [
            "matrix".into(),
            "--exec".into(),
            s(&demo.path("mime_fac.facx")),
            "--libs".into(),
            s(demo.dir.path()),
            "--expect".into(),
            s(&expect),
        ],
    );
    assert_eq!(csv.lines().count(), 9);
    let combos: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_owned())
        .collect();
    let size = |label: &str| -> u64 {
        LIBS.iter()
            .filter(|l| label.contains(&l[3..4]))
            .map(|l| std::fs::metadata(demo.lib(l)).unwrap().len())
            .sum()
    };
    let mut want: Vec<&str> = LABELS.to_vec();
    want.sort_by(|a, b| size(b).cmp(&size(a)).then(a.cmp(b)));
    assert_eq!(combos, want);

    let mut bad = map.clone();
    bad.insert("jp", "wrong".into());
    std::fs::write(&expect, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = tool(
        "facbench",
        [
            "matrix".into(),
            "--exec".into(),
            s(&demo.path("mime_fac.facx")),
            "--libs".into(),
            s(demo.dir.path()),
            "--expect".into(),
            s(&expect),
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let loc = ok(
        "facbench",
        ["loc".into(), s(&corpus("fig2.mc")), s(&corpus("fig4.mc"))],
    );
    let row: Vec<&str> = loc.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[2..], ["13", "6", "2.1667"]);
}

#[test]
fn bench_init_rejects_too_few_reps() {
    let demo = Demo::build();
    let out = tool(
        "facbench",
        [
            "init".into(),
            "--exec".into(),
            s(&demo.path("mime_fac.facx")),
            "--libs".into(),
            s(demo.dir.path()),
            "--combo".into(),
            "libjpeg".into(),
            "--reps".into(),
            "5".into(),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 100"));
}

#[test]
fn bench_init_pairs_executables_with_variants() {
    let demo = Demo::build();
    let base = [
        "init".to_owned(),
        "--libs".into(),
        s(demo.dir.path()),
        "--combo".into(),
        "libpng".into(),
        "--runner".into(),
        s(&bin("facrun")),
    ];
    let (fac, dyn_) = (
        s(&demo.path("mime_fac.facx")),
        s(&demo.path("mime_dyn.facx")),
    );
    let mut args = base.to_vec();
    args.extend([
        "--exec".into(),
        fac.clone(),
        "--exec".into(),
        dyn_.clone(),
        "--variant".into(),
        "FAC".into(),
    ]);
    assert_eq!(tool("facbench", args).status.code(), Some(1));

    let mut args = base.to_vec();
    args.extend([
        "--exec".into(),
        fac,
        "--variant".into(),
        "FAC".into(),
        "--exec".into(),
        dyn_,
        "--variant".into(),
        "DYN".into(),
    ]);
    let csv = ok("facbench", args);
    let rows: Vec<(&str, &str, &str)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0], f[1], f[3])
        })
        .collect();
    assert_eq!(rows, [("FAC", "p", "100"), ("DYN", "p", "100")]);
}
