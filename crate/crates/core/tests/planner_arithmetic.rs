use bluegreen_core::damage::ScenarioDamages;
use bluegreen_core::geometry::Polygon;
use bluegreen_core::hydro::{InterventionKind, InterventionSpec};
use bluegreen_core::planner::{
    benefit, cost_intervention, expected_annual_damage, rank_tiles, ranking_csv, score, CostModel, DamagePoint,
    Suggestion, TileBenefit, DEFAULT_GF_THRESHOLD,
};
use proptest::prelude::*;

const M: f64 = 1e6;

fn totals(rp: f64, c: f64, r: f64, t: f64) -> ScenarioDamages {
    ScenarioDamages::from_totals("x", rp, c * M, r * M, t * M)
}

/// Ten-year case-study rows: (tile, green fraction, commercial, residential, total) in £M.
const TEN_YEAR: [(u32, f64, f64, f64, f64); 3] = [
    (13, 0.6220, 35.7, 5.8, 41.5),
    (17, 0.2771, 29.2, 6.1, 35.3),
    (14, 0.5070, 36.2, 6.1, 42.3),
];

fn ten_year_ranking() -> bluegreen_core::planner::TileRanking {
    let base = totals(10.0, 40.8, 6.1, 47.0);
    let input: Vec<TileBenefit> = TEN_YEAR
        .iter()
        .map(|&(id, gf, c, r, t)| TileBenefit::new(id, benefit(&base, &totals(10.0, c, r, t)).unwrap(), gf))
        .collect();
    rank_tiles(10.0, 1.0, &input, DEFAULT_GF_THRESHOLD)
}

#[test]
fn case_study_benefit_and_score() {
    let base = totals(10.0, 40.8, 6.1, 47.0);
    let b = benefit(&base, &totals(10.0, 29.2, 6.1, 35.3)).unwrap();
    assert_eq!(b, 11.7 * M);
    assert!((score(b, 0.2771) - 3.24).abs() <= 0.01);
}

#[test]
fn case_study_ten_year_order() {
    let r = ten_year_ranking();
    let ids: Vec<u32> = r.rows.iter().map(|x| x.tile_id).collect();
    assert_eq!(ids, [13, 17, 14]);
    // Printed scores came from unrounded damages.
    for (row, printed) in r.rows.iter().zip([3.38, 3.24, 2.37]) {
        assert!((row.score - printed).abs() <= 0.1, "tile {}: {} vs {printed}", row.tile_id, row.score);
    }
    assert_eq!(r.rows[0].suggestion, Suggestion::DetentionPond);
    assert_eq!(r.rows[1].suggestion, Suggestion::PermeablePavement);
    let csv = ranking_csv(&r);
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("1,13,capture:13:1@10,"), "{first}");
}

#[test]
fn case_study_other_return_periods() {
    // (rp, baseline total, [(tile, gf, variant total)], expected order)
    let cases: [(f64, f64, [(u32, f64, f64); 3], [u32; 3]); 3] = [
        (20.0, 68.5, [(13, 0.6220, 60.9), (17, 0.2771, 57.3), (12, 0.5382, 63.9)], [13, 17, 12]),
        (50.0, 106.7, [(13, 0.6220, 96.2), (16, 0.7029, 100.1), (17, 0.2771, 90.6)], [13, 16, 17]),
        (100.0, 166.5, [(16, 0.7029, 152.8), (9, 0.8413, 157.0), (13, 0.6220, 156.0)], [16, 9, 13]),
    ];
    for (rp, base, rows, order) in cases {
        let b = ScenarioDamages::from_totals("b", rp, 0.0, 0.0, base * M);
        let input: Vec<TileBenefit> = rows
            .iter()
            .map(|&(id, gf, t)| {
                TileBenefit::new(id, benefit(&b, &ScenarioDamages::from_totals("v", rp, 0.0, 0.0, t * M)).unwrap(), gf)
            })
            .collect();
        let ids: Vec<u32> = rank_tiles(rp, 1.0, &input, DEFAULT_GF_THRESHOLD).rows.iter().map(|r| r.tile_id).collect();
        assert_eq!(ids, order, "rp {rp}");
    }
}

fn spec(kind: InterventionKind, area: f64) -> InterventionSpec {
    InterventionSpec {
        id: "i".into(),
        kind,
        geometry: vec![Polygon::rect(0.0, 0.0, 10.0, 10.0)],
        area_m2: Some(area),
    }
}

#[test]
fn pavement_cost() {
    let r = cost_intervention(&spec(InterventionKind::PermeablePavement, 21_726.375), &CostModel::default()).unwrap();
    assert_eq!(r.installation, 651_791.25);
    assert!((r.annual_operation - 8_690.55).abs() < 1e-9);
    assert_eq!(r.lifetime_years, 40.0);
    // Rounds to the reported £0.65M.
    assert_eq!((r.installation / 1e4).round() / 100.0, 0.65);
}

#[test]
fn pond_costs() {
    let c = CostModel::default();
    let big = cost_intervention(&spec(InterventionKind::DetentionPond { volume_m3: 10_000.0 }, 8_000.0), &c).unwrap();
    assert_eq!(big.installation, 160_000.0);
    assert_eq!(big.annual_operation, 4_800.0);
    assert_eq!(big.lifetime_years, 15.0);
    // Linear pro-rata for both ponds together.
    let small = cost_intervention(&spec(InterventionKind::DetentionPond { volume_m3: 765.0 }, 510.0), &c).unwrap();
    assert!((big.installation + small.installation - 172_240.0).abs() < 1e-9);
}

#[test]
fn default_rates() {
    let c = CostModel::default();
    assert_eq!(c.pavement_per_m2, 30.0);
    assert_eq!(c.pavement_annual_per_m2, 0.40);
    assert_eq!(c.pavement_life_years, 40.0);
    assert_eq!(c.pond_per_m3(), 16.0);
    assert_eq!(c.pond_annual_per_m2, 0.60);
    assert_eq!(c.pond_life_years, 15.0);
}

#[test]
fn rates_are_overridable() {
    let c = CostModel {
        pavement_per_m2: 45.0,
        pond_reference_cost: 100_000.0,
        ..CostModel::default()
    };
    let p = cost_intervention(&spec(InterventionKind::PermeablePavement, 100.0), &c).unwrap();
    assert_eq!(p.installation, 4_500.0);
    let q = cost_intervention(&spec(InterventionKind::DetentionPond { volume_m3: 5_000.0 }, 100.0), &c).unwrap();
    assert_eq!(q.installation, 100_000.0);
    let json: CostModel = serde_json::from_str(r#"{"pavement_per_m2": 12.5}"#).unwrap();
    assert_eq!(json.pavement_per_m2, 12.5);
    assert_eq!(json.pond_life_years, 15.0);
}

#[test]
fn intervention_benefits() {
    // Pavement and pond rows: baseline total minus variant total.
    let rows = [
        (10.0, 47.0, 46.8, 0.2),
        (10.0, 47.0, 45.4, 1.6),
        (20.0, 68.5, 68.0, 0.5),
        (100.0, 166.5, 157.7, 8.8),
    ];
    for (rp, base, var, want) in rows {
        let b = benefit(&totals(rp, 0.0, 0.0, base), &totals(rp, 0.0, 0.0, var)).unwrap();
        assert!((b / M - want).abs() < 1e-9);
    }
}

#[test]
fn negative_benefit_is_reported() {
    let b = benefit(&totals(10.0, 0.0, 0.0, 1.0), &totals(10.0, 0.0, 0.0, 1.5)).unwrap();
    assert_eq!(b, -0.5 * M);
    let r = rank_tiles(10.0, 1.0, &[TileBenefit::new(1, b, 0.5), TileBenefit::new(2, 0.0, 0.1)], 0.5);
    assert_eq!(r.rows[0].tile_id, 2);
    assert!(r.rows[1].score < 0.0);
}

#[test]
fn expected_annual_damage_extension() {
    let pts: Vec<DamagePoint> = [(10.0, 47.0), (20.0, 68.5), (50.0, 106.7), (100.0, 166.5)]
        .iter()
        .map(|&(rp, d)| DamagePoint {
            return_period: rp,
            damage: d * M,
        })
        .collect();
    let want = 0.05 * (47.0 + 68.5) / 2.0 + 0.03 * (68.5 + 106.7) / 2.0 + 0.01 * (106.7 + 166.5) / 2.0;
    assert!((expected_annual_damage(&pts).unwrap() / M - want).abs() < 1e-9);
}

fn benefit_rows() -> impl Strategy<Value = Vec<TileBenefit>> {
    prop::collection::vec((-1e7..1e8f64, 0.0..=1.0f64), 1..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (b, gf))| TileBenefit::new(i as u32 + 1, b, gf))
            .collect()
    })
}

proptest! {
    #[test]
    fn ranking_ignores_input_order(rows in benefit_rows(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(rank_tiles(10.0, 1.0, &rows, 0.5), rank_tiles(10.0, 1.0, &shuffled, 0.5));
    }

    #[test]
    fn ranking_is_sorted_by_score(rows in benefit_rows()) {
        let r = rank_tiles(10.0, 1.0, &rows, 0.5);
        for (i, w) in r.rows.windows(2).enumerate() {
            prop_assert!(w[0].score >= w[1].score);
            prop_assert_eq!(w[0].rank, i + 1);
        }
    }

    #[test]
    fn ranking_survives_positive_scaling(rows in benefit_rows(), k in prop::sample::select(vec![2.0, 4.0, 0.5, 1024.0])) {
        let scaled: Vec<TileBenefit> = rows.iter().map(|t| TileBenefit::new(t.tile_id, t.benefit * k, t.green_fraction)).collect();
        let a: Vec<u32> = rank_tiles(10.0, 1.0, &rows, 0.5).rows.iter().map(|r| r.tile_id).collect();
        let b: Vec<u32> = rank_tiles(10.0, 1.0, &scaled, 0.5).rows.iter().map(|r| r.tile_id).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cost_is_linear(area in 1.0..1e6f64, volume in 1.0..1e6f64, k in 1.0..10.0f64) {
        let c = CostModel::default();
        let p1 = cost_intervention(&spec(InterventionKind::PermeablePavement, area), &c).unwrap();
        let p2 = cost_intervention(&spec(InterventionKind::PermeablePavement, area * k), &c).unwrap();
        prop_assert!((p2.installation - k * p1.installation).abs() <= 1e-9 * p2.installation);
        prop_assert!((p1.whole_life() - area * (30.0 + 0.4 * 40.0)).abs() <= 1e-9 * p1.whole_life());
        let q = cost_intervention(&spec(InterventionKind::DetentionPond { volume_m3: volume }, area), &c).unwrap();
        prop_assert!((q.installation - 16.0 * volume).abs() <= 1e-9 * q.installation);
        prop_assert!((q.annual_operation - 0.6 * area).abs() <= 1e-9 * q.annual_operation);
    }
}
