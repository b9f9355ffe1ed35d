use rfid_motion::bounds::{
    c_t_dual, c_t_for, c_t_single, mcrb_sigma_sq, required_ps_dbm, required_ps_n0, sigma_max_sq,
    MotionScenario,
};
use rfid_motion::experiments::figures::{figure_dataset, FigureOptions, FIGURE_IDS};
use rfid_motion::experiments::{ConfigBuilder, CsvTable, ExperimentConfig};
use rfid_motion::protocol::{reply_timing, EncodingScheme, ReaderMode, ReplyParts};
use rfid_motion::units::db_to_linear;
use rfid_motion::Error;

fn analytic(id: u32) -> CsvTable {
    figure_dataset(id, &ExperimentConfig::default(), FigureOptions::default()).unwrap()
}

fn series(t: &CsvTable, name: &str, x: &str, y: &str) -> Vec<(f64, f64)> {
    let s = t.text("series").unwrap();
    let xs = t.numeric(x).unwrap();
    let ys = t.numeric(y).unwrap();
    s.iter()
        .zip(xs.iter().zip(ys))
        .filter(|(n, _)| n.as_str() == name)
        .map(|(_, (&x, y))| (x, y))
        .collect()
}

/// Linear interpolation of `x` at which the curve reaches `y` (log-x).
fn crossing(points: &[(f64, f64)], y: f64) -> f64 {
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 - y) * (y1 - y) <= 0.0 {
            let f = (y - y0) / (y1 - y0);
            return 10f64.powf(x0.log10() + f * (x1.log10() - x0.log10()));
        }
    }
    panic!("curve never reaches {y}");
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn m8_40k() -> ReaderMode {
    ReaderMode::new("m", 40_000, EncodingScheme::Miller8).unwrap()
}

#[test]
fn every_figure_id_produces_rows() {
    for id in FIGURE_IDS {
        let t = analytic(id);
        assert!(!t.rows.is_empty(), "figure {id}");
        assert!(t.column_index("series").is_some());
    }
}

#[test]
fn unknown_figure_is_an_error() {
    for id in [1, 2, 3, 6, 12] {
        let r = figure_dataset(id, &ExperimentConfig::default(), FigureOptions::default());
        assert!(matches!(r, Err(Error::NotFound(_))), "figure {id}");
    }
}

#[test]
fn figure4_matches_tolerable_variance() {
    let t = analytic(4);
    let p = t.numeric("p_err").unwrap();
    let v = t.numeric("v_m_per_s").unwrap();
    let s = t.numeric("sigma_max_sq_hz2").unwrap();
    for i in 0..s.len() {
        let want = sigma_max_sq(&MotionScenario::new(v[i], 868e6, p[i]).unwrap()).unwrap();
        assert!(rel(s[i], want) <= 1e-12);
    }
}

#[test]
fn figure5_bound_is_single_part_mcrb() {
    let t = analytic(5);
    assert!(t.column_index("empirical_var_hz2").is_none());
    let r = t.numeric("ps_n0_dbhz").unwrap();
    let t0 = t.numeric("t0_s").unwrap();
    let m = t.numeric("mcrb_hz2").unwrap();
    let mut ratios: Vec<f64> = r.clone();
    ratios.dedup();
    assert_eq!(ratios, vec![30.0, 52.8, 80.0]);
    assert!((t0[0] - 1e-4).abs() < 1e-18 && (t0.last().unwrap() - 0.1).abs() < 1e-15);
    for i in 0..m.len() {
        let want = mcrb_sigma_sq(c_t_single(t0[i]).unwrap(), db_to_linear(r[i])).unwrap();
        assert!(rel(m[i], want) <= 1e-12, "{} vs {want}", m[i]);
    }
}

#[test]
fn figure7_marks_the_actual_reply() {
    let t = analytic(7);
    let mark = series(&t, "tag_reply", "t_pause_s", "mcrb_hz2");
    assert_eq!(mark.len(), 1);
    let (tp, m) = mark[0];
    assert!((tp - 1.4e-3).abs() < 1e-15);
    let want = mcrb_sigma_sq(c_t_dual(7.8e-3, 27e-3, 1.4e-3).unwrap(), db_to_linear(52.8)).unwrap();
    assert!(rel(m, want) <= 1e-9);
    let curve = series(&t, "two_parts", "t_pause_s", "mcrb_hz2");
    assert!(
        curve.windows(2).all(|w| w[1].1 < w[0].1),
        "bound falls as the pause grows"
    );
    assert!(
        rel(
            curve[0].1,
            mcrb_sigma_sq((34.8e-3f64).powi(3), db_to_linear(52.8)).unwrap()
        ) <= 1e-9
    );
}

#[test]
fn figure7_empirical_columns_on_request() {
    let mut b = ConfigBuilder::new();
    b.set("trials", "30")
        .unwrap()
        .set("grid", "0, 0.01")
        .unwrap();
    let cfg = b.build().unwrap();
    let t = figure_dataset(7, &cfg, FigureOptions { empirical: true }).unwrap();
    let r = t.numeric("var_ratio").unwrap();
    assert_eq!(r.len(), 3);
    assert!(
        r.iter().all(|x| x.is_finite() && *x > 0.2 && *x < 5.0),
        "{r:?}"
    );
    assert_eq!(t.numeric("trials").unwrap(), vec![30.0; 3]);
}

#[test]
fn figure8_crosses_the_threshold_ratio_near_0_14() {
    let t = analytic(8);
    let curve = series(&t, "p_err=0.001", "v_m_per_s", "required_ps_n0_dbhz");
    let ct = c_t_for(&reply_timing(&m8_40k()).unwrap(), ReplyParts::Both).unwrap();
    for &(v, y) in &curve {
        assert!(rel(y, required_ps_n0(v, ct, 868e6, 1e-3).unwrap()) <= 1e-12);
    }
    let v = crossing(&curve, 52.8);
    assert!((v - 0.14).abs() < 0.01, "{v}");
}

#[test]
fn figure9_longer_encodings_need_less_power() {
    let t = analytic(9);
    let at = |name: &str| series(&t, name, "v_m_per_s", "required_ps_n0_dbhz");
    let fm0 = at("FM0 640 kHz");
    let m8 = at("Miller-8 40 kHz");
    assert!(!fm0.is_empty() && fm0.len() == m8.len());
    assert!(fm0.iter().zip(&m8).all(|(a, b)| a.1 > b.1));
}

#[test]
fn figure10_passes_through_mode_290_sensitivity() {
    let t = analytic(10);
    let curve = series(&t, "Mode 290 NF=25.4", "v_m_per_s", "required_ps_dbm");
    let v = crossing(&curve, -95.8);
    assert!((v - 1.1).abs() < 0.05, "{v}");
    let reference = series(
        &t,
        "Miller-8 BLF 40 kHz NF=25.4",
        "v_m_per_s",
        "required_ps_dbm",
    );
    let ct = c_t_for(&reply_timing(&m8_40k()).unwrap(), ReplyParts::Both).unwrap();
    for &(v, y) in &reference {
        assert!(rel(y, required_ps_dbm(v, ct, 868e6, 1e-3, 25.4).unwrap()) <= 1e-12);
    }
    assert!((crossing(&reference, -95.8) - 0.14).abs() < 0.01);
}

#[test]
fn figure11_longer_epc_lies_below() {
    let t = analytic(11);
    let a = series(&t, "Mode 290 EPC 96", "v_m_per_s", "required_ps_dbm");
    let b = series(&t, "Mode 290 EPC 256", "v_m_per_s", "required_ps_dbm");
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| y.1 < x.1));
    assert!(t.text("series").unwrap().iter().any(|s| s == "Mode 204"));
}

#[test]
fn figure_csv_is_parseable() {
    let text = analytic(8).to_csv_string();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert!(lines.next().unwrap().starts_with("# series"));
    assert_eq!(
        lines.next().unwrap(),
        "series,p_err,v_m_per_s,required_ps_n0_dbhz"
    );
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert!(cols[3].parse::<f64>().is_ok());
    }
}
