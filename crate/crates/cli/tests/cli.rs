use std::path::PathBuf;
use std::process::Command;

use cbs_cli::config::{parse_config, Axis, Mode};
use cbs_cli::run::{plot_columns, run_with};
use cbs_cli::table::{parse_csv, render_svg, write_csv, Cell, Table};
use cbs_cli::{preset, run_to_dir};
use proptest::prelude::*;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cbs-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![
        any::<u64>().prop_map(Cell::Int),
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Cell::Real),
        "[ -~\n]{0,12}".prop_map(Cell::Text),
    ]
}

fn table() -> impl Strategy<Value = Table> {
    (1usize..5).prop_flat_map(|w| {
        (
            proptest::collection::vec("[a-z_]{1,8}", w),
            proptest::collection::vec(proptest::collection::vec(cell(), w), 1..6),
        )
            .prop_map(|(columns, rows)| Table { columns, rows })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(t in table()) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["provenance".into()], &t).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}

/// Every element except the root and `<text>` labels closes itself.
fn only_self_closed(svg: &str) -> Result<(), String> {
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').ok_or("unterminated tag")? + start;
        let tag = &rest[start + 1..end];
        let name: String = tag.trim_start_matches('/').chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
        let allowed = matches!(name.as_str(), "svg" | "text");
        if !tag.ends_with('/') && !allowed {
            return Err(format!("<{tag}> is not self-closed"));
        }
        rest = &rest[end + 1..];
    }
    Ok(())
}

#[test]
fn svg_elements_are_self_closed() {
    let t = Table {
        columns: vec!["delta".into(), "gamma_l_el".into(), "note".into()],
        rows: (0..5).map(|k| vec![Cell::Real(k as f64 * 0.5), Cell::Real(-6.0 - k as f64), Cell::Text("a<b".into())]).collect(),
    };
    let svg = render_svg(&t, "delta", &["gamma_l_el"], "x < y & z");
    only_self_closed(&svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("&lt;"));
    assert!(svg.contains(">delta</text>"));
    assert!(svg.contains(">gamma / eta</text>"));
}

#[test]
fn rows_arrive_in_sweep_order() {
    let cfg = parse_config("mode = spectrum\nb = 0.5\ndelta_p = 2, -1, 0.5, -3\nnodes = 64").unwrap();
    let mut seen = Vec::new();
    let table = run_with(&cfg, Some(3), |row, _| {
        seen.push(row[0].clone());
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, (0..4usize).map(Cell::from).collect::<Vec<_>>());
    assert_eq!(table.values("delta_p").unwrap(), vec![2.0, -1.0, 0.5, -3.0]);
}

#[test]
fn failing_point_is_named() {
    let cfg = parse_config("mode = vectorial\nb = 0.5\ndelta = 0\nsamples = 100\nseed = 1").unwrap();
    let mut bad = cfg.clone();
    bad.values = vec![0.5, -1.0];
    let err = run_with(&bad, None, |_, _| Ok(())).unwrap_err().to_string();
    assert!(err.contains("sweep point 1") && err.contains("b = -1"), "{err}");
}

#[test]
fn full_run_is_byte_identical() {
    let text = "mode = vectorial\nchannel = hpar\nb = 0.25, 0.5\ndelta = 0.5\nsamples = 3000\nseed = 42\n";
    let cfg = parse_config(text).unwrap();
    let plot = plot_columns(&cfg);
    let (a, b) = (scratch_dir("det-a"), scratch_dir("det-b"));
    let (ta, fa) = run_to_dir(&cfg, &plot, &a, Some(1)).unwrap();
    let (_, fb) = run_to_dir(&cfg, &plot, &b, Some(4)).unwrap();
    let csv_a = std::fs::read(&fa.csv).unwrap();
    assert_eq!(csv_a, std::fs::read(&fb.csv).unwrap());
    assert_eq!(std::fs::read(&fa.svg).unwrap(), std::fs::read(&fb.svg).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.contains(&format!("# config_sha256 = {}", cbs_cli::config_hash(&cfg))));
    assert!(text.contains("# seed = 42"));
    let parsed = parse_csv(&text).unwrap();
    assert_eq!(parsed, ta);
    assert_eq!(parsed.rows.len(), 2);
    assert!(parsed.rows.iter().all(|r| r.len() == parsed.columns.len()));
}

#[test]
fn fig9_scalar_elastic_values() {
    let job = &preset("fig9").unwrap().jobs[0];
    assert_eq!(job.config.mode, Mode::Scalar);
    let mut cfg = job.config.clone();
    cfg.inelastic = false;
    let t = run_with(&cfg, None, |_, _| Ok(())).unwrap();
    for (gl, gc) in t.values("gamma_l_el").unwrap().iter().zip(t.values("gamma_c_el").unwrap()) {
        assert!((gl / -6.53 - 1.0).abs() < 0.02, "{gl}");
        assert!((gc / -18.8 - 1.0).abs() < 0.02, "{gc}");
    }
}

#[test]
fn fig10_scalar_components_grow_with_thickness() {
    let job = &preset("fig10").unwrap().jobs[0];
    assert_eq!(job.config.axis, Axis::B);
    let t = run_with(&job.config, None, |_, _| Ok(())).unwrap();
    for col in ["gamma_l_el", "gamma_c_el", "gamma_l_in", "gamma_c_in"] {
        let v = t.values(col).unwrap();
        assert!(v.windows(2).all(|w| w[1].abs() > w[0].abs()), "{col}: {v:?}");
    }
}

#[test]
fn fig12_scalar_exceeds_two_off_the_laser_line() {
    let job = preset("fig12").unwrap().jobs.into_iter().find(|j| j.config.label == "fig12_scalar_b0p5").unwrap();
    let t = run_with(&job.config, None, |_, _| Ok(())).unwrap();
    let above = t
        .values("delta_p")
        .unwrap()
        .into_iter()
        .zip(t.values("eta").unwrap())
        .filter(|(d, e)| *d != 0.0 && *e > 2.0)
        .count();
    assert!(above > 0);
}

fn cbs(args: &[&str], dir: &PathBuf) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cbs")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = scratch_dir("exit");
    std::fs::write(dir.join("ok.cfg"), "b = 0.5\ndelta = 0\ninelastic = false\nnodes = 64\n").unwrap();
    std::fs::write(dir.join("bad.cfg"), "mode = bogus\nsamples = many\n").unwrap();
    std::fs::write(dir.join("thick.cfg"), "b = 4\ndelta = 0\ninelastic = false\nnodes = 64\n").unwrap();
    std::fs::write(dir.join("mc.cfg"), "b = 0.5\nsamples = 100\n").unwrap();

    let ok = cbs(&["scalar", "--config", "ok.cfg", "--out", "out"], &dir);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.join("out/run.csv").exists() && dir.join("out/run.svg").exists());

    let bad = cbs(&["scalar", "--config", "bad.cfg"], &dir);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("line 1") && err.contains("line 2"), "{err}");

    assert_eq!(cbs(&["nonsense"], &dir).status.code(), Some(1));
    assert_eq!(cbs(&["scalar", "--bogus-flag"], &dir).status.code(), Some(1));
    assert_eq!(cbs(&["vectorial", "--config", "mc.cfg"], &dir).status.code(), Some(1));

    let warn = cbs(&["scalar", "--config", "thick.cfg", "--out", "out"], &dir);
    let err = String::from_utf8_lossy(&warn.stderr);
    assert!(err.contains("warning") && err.contains("s*b^2"), "{err}");
    assert_eq!(warn.status.code(), Some(0));

    let mc = cbs(&["vectorial", "--config", "mc.cfg", "--seed", "9", "--samples", "500", "--out", "mc"], &dir);
    assert_eq!(mc.status.code(), Some(0), "{}", String::from_utf8_lossy(&mc.stderr));
    let text = std::fs::read_to_string(dir.join("mc/run.csv")).unwrap();
    assert!(text.contains("# seed = 9") && text.contains("samples = 500"));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = scratch_dir("fail");
    std::fs::write(dir.join("huge.cfg"), "b = 1e6\ndelta = 0\ninelastic = false\nnodes = 16\n").unwrap();
    let out = cbs(&["scalar", "--config", "huge.cfg", "--out", "out"], &dir);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
