use bluegreen_core::damage::{aggregate, assess, interp_damage, BuildingDamage, CurveUnit, DamageCurve, DamageCurves};
use bluegreen_core::exposure::{
    buffer_stats, classify, classify_all, depth_stats, ExposureClass, ExposureFlag, ExposureRecord,
};
use bluegreen_core::geodata::{BuildingFootprint, GridGeoref, UseClass};
use bluegreen_core::hydro::MaxDepthRaster;
use proptest::prelude::*;

/// Sort-based reference: mean, and the ceil(0.9 k)-th smallest value.
fn oracle(depths: &[f64]) -> (f64, f64) {
    if depths.is_empty() {
        return (0.0, 0.0);
    }
    let mut s = depths.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    let mut rank = 1;
    while (rank as f64) < 0.9 * k as f64 - 1e-9 {
        rank += 1;
    }
    (depths.iter().sum::<f64>() / k as f64, s[rank - 1])
}

fn raster(depth: Vec<f64>) -> MaxDepthRaster {
    let n = depth.len();
    MaxDepthRaster {
        scenario_id: "t".into(),
        end_time: 0.0,
        georef: GridGeoref {
            origin_x: 0.0,
            origin_y: 0.0,
            cell_size: 1.0,
            n_rows: 1,
            n_cols: n,
        },
        depth,
    }
}

fn building(id: &str, class: UseClass, buffer: Vec<usize>) -> BuildingFootprint {
    BuildingFootprint {
        id: id.into(),
        use_class: class,
        polygons: vec![],
        footprint_cells: vec![],
        buffer_cells: buffer,
    }
}

#[test]
fn truth_table_rows() {
    use ExposureClass::*;
    let rows = [
        (0.0, 0.0, Low),
        (0.099, 0.299, Low),
        (0.099, 0.30, Medium),
        (0.05, 2.0, Medium),
        (0.10, 0.0, Medium),
        (0.10, 0.299, Medium),
        (0.299, 0.299, Medium),
        (0.10, 0.30, High),
        (0.25, 1.0, High),
        (1.0, 1.0, High),
    ];
    for (m, p, want) in rows {
        assert_eq!(classify(m, p).unwrap(), want, "mean {m} p90 {p}");
    }
    assert!(classify(-0.1, 0.0).is_err());
    assert!(classify(0.0, f64::NAN).is_err());
}

#[test]
fn table_gap_is_high_and_flagged() {
    // Mean above the p90 threshold while p90 sits below it.
    let r = raster(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.29, 5.0]);
    let b = building("g", UseClass::Residential, (0..10).collect());
    let (mean, p90) = buffer_stats(&r, &b).unwrap();
    assert!(mean >= 0.3 && p90 < 0.3);
    let rec = &classify_all(&r, &[b]).unwrap()[0];
    assert_eq!(rec.exposure_class, ExposureClass::High);
    assert_eq!(rec.flags, vec![ExposureFlag::TableGap]);
}

#[test]
fn no_buffer_is_low() {
    let rec = &classify_all(&raster(vec![3.0]), &[building("n", UseClass::Commercial, vec![])]).unwrap()[0];
    assert_eq!(rec.exposure_class, ExposureClass::Low);
    assert_eq!(rec.flags, vec![ExposureFlag::NoBuffer]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn buffer_stats_match_oracle(
        depth in prop::collection::vec(prop_oneof![Just(0.0), 0.0..3.0f64], 1..400),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..120),
    ) {
        let r = raster(depth);
        let mut cells: Vec<usize> = picks.iter().map(|p| p.index(r.depth.len())).collect();
        cells.sort_unstable();
        cells.dedup();
        let vals: Vec<f64> = cells.iter().map(|&c| r.depth[c]).collect();
        let b = building("x", UseClass::Residential, cells);
        prop_assert_eq!(buffer_stats(&r, &b).unwrap(), oracle(&vals));
    }

    #[test]
    fn classification_is_monotone(m in 0.0..1.0f64, p in 0.0..1.0f64, dm in 0.0..0.5f64, dp in 0.0..0.5f64) {
        let a = classify(m, p).unwrap();
        let b = classify(m + dm, p + dp).unwrap();
        prop_assert!(b >= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn depth_stats_large_sets(depths in prop::collection::vec(0.0..2.0f64, 1..10_000)) {
        prop_assert_eq!(depth_stats(&depths).unwrap(), oracle(&depths));
    }
}

fn curve_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01..1.0f64, 0.0..50_000.0f64), 1..8).prop_map(|steps| {
        let (mut d, mut v) = (0.0, 0.0);
        let mut pts = vec![(0.0, 0.0)];
        for (dd, dv) in steps {
            d += dd;
            v += dv;
            pts.push((d, v));
        }
        pts
    })
}

proptest! {
    #[test]
    fn interpolation_is_monotone_and_clamped(pts in curve_strategy(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let c = DamageCurve::new(UseClass::Commercial, pts.clone()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (dl, dh) = (interp_damage(&c, lo).unwrap(), interp_damage(&c, hi).unwrap());
        prop_assert!(dl <= dh);
        let last = pts.last().unwrap();
        prop_assert!(dh <= last.1);
        if hi >= last.0 {
            prop_assert_eq!(dh, last.1);
        }
        for &(d, v) in &pts {
            prop_assert!((interp_damage(&c, d).unwrap() - v).abs() <= 1e-9 * v.max(1.0));
        }
    }

    #[test]
    fn aggregate_ignores_building_order(
        rows in prop::collection::vec((any::<bool>(), 0u8..3, 0.0..1e6f64), 0..40),
        seed in any::<u64>(),
    ) {
        let buildings: Vec<BuildingDamage> = rows
            .iter()
            .enumerate()
            .map(|(i, &(res, class, dmg))| BuildingDamage {
                building_id: format!("b{i:03}"),
                use_class: if res { UseClass::Residential } else { UseClass::Commercial },
                exposure_class: [ExposureClass::Low, ExposureClass::Medium, ExposureClass::High][class as usize],
                p90_depth: 0.0,
                damage: if class == 0 { 0.0 } else { dmg },
            })
            .collect();
        let mut shuffled = buildings.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = aggregate("s", 10.0, buildings);
        let b = aggregate("s", 10.0, shuffled);
        prop_assert_eq!(a.total.to_bits(), b.total.to_bits());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total, a.commercial + a.residential);
    }
}

fn curves() -> DamageCurves {
    DamageCurves {
        commercial: Some(DamageCurve::new(UseClass::Commercial, vec![(0.0, 0.0), (1.0, 100_000.0)]).unwrap()),
        residential: Some(DamageCurve::new(UseClass::Residential, vec![(0.0, 0.0), (0.5, 10_000.0)]).unwrap()),
    }
}

fn record(id: &str, class: UseClass, exposure: ExposureClass, p90: f64) -> ExposureRecord {
    ExposureRecord {
        building_id: id.into(),
        use_class: class,
        mean_depth: 0.2,
        p90_depth: p90,
        exposure_class: exposure,
        flags: vec![],
    }
}

#[test]
fn low_buildings_cost_nothing_and_p90_drives_the_curve() {
    let recs = vec![
        record("a", UseClass::Commercial, ExposureClass::High, 0.4),
        record("b", UseClass::Residential, ExposureClass::Medium, 0.25),
        record("c", UseClass::Commercial, ExposureClass::Low, 0.29),
    ];
    let d = assess("s", 20.0, &recs, &[100.0, 100.0, 100.0], &curves()).unwrap();
    assert_eq!(d.commercial, 40_000.0);
    assert_eq!(d.residential, 5_000.0);
    assert_eq!(d.total, 45_000.0);
    assert_eq!(d.counts.medium, 1);
    assert_eq!(d.counts.high, 1);
    assert_eq!(d.buildings.iter().find(|b| b.building_id == "c").unwrap().damage, 0.0);
}

#[test]
fn per_square_metre_curves_scale_with_footprint() {
    let mut c = curves();
    c.commercial = Some(c.commercial.unwrap().with_unit(CurveUnit::PerSquareMetre));
    let recs = vec![record("a", UseClass::Commercial, ExposureClass::High, 0.5)];
    let d = assess("s", 20.0, &recs, &[240.0], &c).unwrap();
    assert_eq!(d.total, 50_000.0 * 240.0);
}

#[test]
fn missing_curve_for_an_inundated_class_is_an_error() {
    let c = DamageCurves {
        commercial: None,
        ..curves()
    };
    let recs = vec![record("a", UseClass::Commercial, ExposureClass::High, 0.5)];
    assert!(assess("s", 20.0, &recs, &[1.0], &c).is_err());
}

#[test]
fn curve_csv_roundtrip() {
    let text = "depth_m,damage_gbp\n0,0\n 0.3 , 1500\n1.2,9000\n";
    let c = DamageCurve::from_csv(text.as_bytes(), UseClass::Residential).unwrap();
    assert_eq!(c.points, vec![(0.0, 0.0), (0.3, 1500.0), (1.2, 9000.0)]);
    assert!((c.interp(0.75).unwrap() - 5250.0).abs() < 1e-9);
    assert!(DamageCurve::from_csv("depth_m,damage_gbp\n0.5,10\n0.2,20\n".as_bytes(), UseClass::Residential).is_err());
}
