use american_fbsde::mollifier::{geometric_grid, select_bandwidth};
use american_fbsde::{price_american, Bandwidth, BlackScholesParams, Model, MollifierConfig, OptionSpec, SimConfig};

// The selected bandwidth should sit on a plateau: its order-3 price agrees
// with the neighbouring grid points to within three standard errors.
#[test]
fn scan_selects_a_stable_bandwidth() {
    let model = Model::BlackScholes(BlackScholesParams {
        r: 0.08,
        y: 0.08,
        sigma: 0.2,
    });
    let spec = OptionSpec::put(100.0, 3.0, 100.0).unwrap();
    let grid = geometric_grid(1e4 * 1e-2, 1e4 * 1e-6, 9);
    let run = |h: f64| {
        let cfg = SimConfig {
            n_paths: 100_000,
            n_steps: 600,
            lambda: 2.0,
            order: 3,
            mollifier: MollifierConfig::uniform(Bandwidth::Absolute(h)),
            seed: 17,
            ..SimConfig::default()
        };
        let r = price_american(&model, &spec, &cfg)?;
        Ok((r.cumulative[3], r.cumulative_stderrs[3]))
    };
    let scan = select_bandwidth(run, &grid).unwrap();
    let i = scan.points.iter().position(|p| p.h == scan.selected).unwrap();
    let me = scan.points[i];
    for j in [i.wrapping_sub(1), i + 1] {
        if let Some(n) = scan.points.get(j) {
            let band = 3.0 * (me.dispersion.powi(2) + n.dispersion.powi(2)).sqrt();
            assert!((me.mean - n.mean).abs() <= band, "{:?}", scan.points);
        }
    }
    let csv = scan.to_csv();
    assert!(csv.starts_with("h,mean,stderr\n"));
    assert_eq!(csv.lines().count(), grid.len() + 1);
}
