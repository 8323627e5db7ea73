//! Seeded synthetic datasets shaped like two public benchmarks: a
//! residential-sales table (80 columns, 1460 rows) and a daily city
//! air-quality table (15 columns, 29531 rows). Both are returned as CSV
//! bytes, and the same seed always gives the same bytes.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

pub const HOUSE_ROWS: usize = 1460;
pub const HOUSE_COLUMNS: usize = 80;
pub const AIR_ROWS: usize = 29531;
pub const AIR_COLUMNS: usize = 15;

const HOUSE_HEADER: [&str; HOUSE_COLUMNS] = [
    "MSSubClass", "MSZoning", "LotFrontage", "LotArea", "Street", "Alley", "LotShape", "LandContour",
    "Utilities", "LotConfig", "LandSlope", "Neighborhood", "Condition1", "Condition2", "BldgType",
    "HouseStyle", "OverallQual", "OverallCond", "YearBuilt", "YearRemodAdd", "RoofStyle", "RoofMatl",
    "Exterior1st", "Exterior2nd", "MasVnrType", "MasVnrArea", "ExterQual", "ExterCond", "Foundation",
    "BsmtQual", "BsmtCond", "BsmtExposure", "BsmtFinType1", "BsmtFinSF1", "BsmtFinType2", "BsmtFinSF2",
    "BsmtUnfSF", "TotalBsmtSF", "Heating", "HeatingQC", "CentralAir", "Electrical", "1stFlrSF", "2ndFlrSF",
    "LowQualFinSF", "GrLivArea", "BsmtFullBath", "BsmtHalfBath", "FullBath", "HalfBath", "BedroomAbvGr",
    "KitchenAbvGr", "KitchenQual", "TotRmsAbvGrd", "Functional", "Fireplaces", "FireplaceQu", "GarageType",
    "GarageYrBlt", "GarageFinish", "GarageCars", "GarageArea", "GarageQual", "GarageCond", "PavedDrive",
    "WoodDeckSF", "OpenPorchSF", "EnclosedPorch", "3SsnPorch", "ScreenPorch", "PoolArea", "PoolQC", "Fence",
    "MiscFeature", "MiscVal", "MoSold", "YrSold", "SaleType", "SaleCondition", "SalePrice",
];

const NEIGHBORHOODS: [(&str, f64); 25] = [
    ("NAmes", 15.4), ("CollgCr", 10.3), ("OldTown", 7.7), ("Edwards", 6.8), ("Somerst", 5.9),
    ("Gilbert", 5.4), ("NridgHt", 5.3), ("Sawyer", 5.1), ("NWAmes", 5.0), ("SawyerW", 4.1),
    ("BrkSide", 4.0), ("Crawfor", 3.5), ("Mitchel", 3.4), ("NoRidge", 2.8), ("Timber", 2.6),
    ("IDOTRR", 2.5), ("ClearCr", 1.9), ("StoneBr", 1.7), ("SWISU", 1.7), ("MeadowV", 1.2),
    ("Blmngtn", 1.2), ("BrDale", 1.1), ("Veenker", 0.8), ("NPkVill", 0.6), ("Blueste", 0.2),
];

/// Log-price offset per neighborhood, same order as `NEIGHBORHOODS`.
const NEIGHBORHOOD_EFFECT: [f64; 25] = [
    -0.05, 0.08, -0.2, -0.18, 0.12, 0.06, 0.3, -0.1, 0.02, 0.04, -0.2, 0.05, -0.05, 0.35, 0.12, -0.3,
    0.08, 0.35, -0.12, -0.35, 0.1, -0.3, 0.15, -0.05, -0.1,
];

const CITIES: [&str; 26] = [
    "Ahmedabad", "Aizawl", "Amaravati", "Amritsar", "Bengaluru", "Bhopal", "Brajrajnagar", "Chandigarh",
    "Chennai", "Coimbatore", "Delhi", "Ernakulam", "Gurugram", "Guwahati", "Hyderabad", "Jaipur",
    "Jorapokhar", "Kochi", "Kolkata", "Lucknow", "Mumbai", "Patna", "Shillong", "Talcher",
    "Thiruvananthapuram", "Visakhapatnam",
];

fn pick<'a, R: Rng>(rng: &mut R, options: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.random::<f64>() * total;
    for (v, w) in options {
        if u < *w {
            return v;
        }
        u -= w;
    }
    options[options.len() - 1].0
}

fn pick_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Five-level quality grade from a latent score.
fn grade(score: f64) -> &'static str {
    match score {
        s if s > 1.9 => "Ex",
        s if s > 0.45 => "Gd",
        s if s > -1.9 => "TA",
        s if s > -2.8 => "Fa",
        _ => "Po",
    }
}

fn int(x: f64) -> String {
    format!("{}", x.round() as i64)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Residential sales: latent quality and size drive areas, grades and the
/// log-normal `SalePrice`. Two rows are planted as oversized lots with
/// huge living areas and low prices.
pub fn house_prices_like(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("valid normal");
    let planted = [523usize, 1298];
    let mut rows = Vec::with_capacity(HOUSE_ROWS);
    for i in 0..HOUSE_ROWS {
        let q: f64 = std.sample(&mut rng);
        let s: f64 = std.sample(&mut rng);
        let mut n = || std.sample(&mut rng);
        let (nq, ns, n1, n2, n3, n4, n5) = (n(), n(), n(), n(), n(), n(), n());
        let big = planted.contains(&i);

        let sub_class = pick(
            &mut rng,
            &[
                ("20", 36.7), ("60", 20.5), ("50", 9.9), ("120", 6.0), ("30", 4.7), ("160", 4.3), ("70", 4.1),
                ("80", 4.0), ("90", 3.6), ("190", 2.1), ("85", 1.4), ("75", 1.1), ("45", 0.8), ("180", 0.7),
                ("40", 0.3),
            ],
        );
        let zoning = pick(&mut rng, &[("RL", 78.8), ("RM", 14.9), ("FV", 4.5), ("RH", 1.1), ("C (all)", 0.7)]);
        let frontage = (70.0 + 20.0 * s + 10.0 * n1).max(21.0);
        let lot_area = if big {
            40000.0 + 23000.0 * rng.random::<f64>()
        } else {
            (9.1 + 0.35 * s + 0.35 * n2).exp()
        };
        let street = pick(&mut rng, &[("Pave", 99.6), ("Grvl", 0.4)]);
        let alley = pick(&mut rng, &[("", 93.8), ("Grvl", 3.4), ("Pave", 2.8)]);
        let lot_shape = pick(&mut rng, &[("Reg", 63.4), ("IR1", 33.1), ("IR2", 2.8), ("IR3", 0.7)]);
        let contour = pick(&mut rng, &[("Lvl", 89.8), ("Bnk", 4.3), ("HLS", 3.4), ("Low", 2.5)]);
        let utilities = pick(&mut rng, &[("AllPub", 99.9), ("NoSeWa", 0.1)]);
        let lot_config = pick(
            &mut rng,
            &[("Inside", 72.1), ("Corner", 18.0), ("CulDSac", 6.4), ("FR2", 3.2), ("FR3", 0.3)],
        );
        let slope = pick(&mut rng, &[("Gtl", 94.7), ("Mod", 4.5), ("Sev", 0.8)]);
        let nb = pick_index(&mut rng, &NEIGHBORHOODS.map(|x| x.1));
        let cond1 = pick(
            &mut rng,
            &[
                ("Norm", 86.3), ("Feedr", 5.5), ("Artery", 3.3), ("RRAn", 1.8), ("PosN", 1.3), ("RRAe", 0.8),
                ("PosA", 0.6), ("RRNn", 0.3), ("RRNe", 0.1),
            ],
        );
        let cond2 = pick(&mut rng, &[("Norm", 99.0), ("Feedr", 0.4), ("Artery", 0.2), ("PosN", 0.2), ("RRNn", 0.2)]);
        let bldg = pick(
            &mut rng,
            &[("1Fam", 83.6), ("TwnhsE", 7.8), ("Duplex", 3.6), ("Twnhs", 3.0), ("2fmCon", 2.1)],
        );
        let style = pick(
            &mut rng,
            &[
                ("1Story", 49.7), ("2Story", 30.5), ("1.5Fin", 10.5), ("SLvl", 4.5), ("SFoyer", 2.5),
                ("1.5Unf", 1.0), ("2.5Unf", 0.8), ("2.5Fin", 0.5),
            ],
        );
        let overall_qual = (6.1 + 1.4 * q).round().clamp(1.0, 10.0);
        let overall_cond = pick(
            &mut rng,
            &[
                ("5", 56.2), ("6", 17.3), ("7", 14.0), ("8", 4.9), ("4", 3.9), ("3", 1.7), ("9", 1.5),
                ("2", 0.3), ("1", 0.2),
            ],
        );
        let year_built = (1972.0 + 12.0 * q + 22.0 * n3).round().clamp(1872.0, 2010.0);
        let year_remod = if rng.random::<f64>() < 0.5 {
            year_built
        } else {
            let lo = year_built.max(1950.0);
            (lo + (2010.0 - lo) * rng.random::<f64>()).round()
        };
        let roof_style = pick(
            &mut rng,
            &[("Gable", 78.2), ("Hip", 19.6), ("Flat", 0.9), ("Gambrel", 0.8), ("Mansard", 0.5), ("Shed", 0.2)],
        );
        let roof_matl = pick(
            &mut rng,
            &[("CompShg", 98.2), ("Tar&Grv", 0.8), ("WdShngl", 0.4), ("WdShake", 0.3), ("Metal", 0.1), ("Membran", 0.1), ("Roll", 0.1)],
        );
        let exteriors = [
            ("VinylSd", 35.3), ("HdBoard", 15.2), ("MetalSd", 15.1), ("Wd Sdng", 14.1), ("Plywood", 7.4),
            ("CemntBd", 4.2), ("BrkFace", 3.4), ("WdShing", 1.8), ("Stucco", 1.7), ("AsbShng", 1.4),
            ("BrkComm", 0.1), ("Stone", 0.1), ("AsphShn", 0.1), ("ImStucc", 0.1), ("CBlock", 0.1),
        ];
        let ext1 = pick(&mut rng, &exteriors);
        let ext2 = if rng.random::<f64>() < 0.85 { ext1 } else { pick(&mut rng, &exteriors) };
        let mas_type = pick(&mut rng, &[("None", 59.2), ("BrkFace", 30.5), ("Stone", 8.8), ("BrkCmn", 1.0), ("", 0.5)]);
        let mas_area = match mas_type {
            "" => String::new(),
            "None" => "0".to_string(),
            _ => int((5.2 + 0.6 * n4).exp()),
        };
        let exter_qual = grade(1.1 * q + 0.5 * nq);
        let exter_cond = pick(&mut rng, &[("TA", 87.8), ("Gd", 10.0), ("Fa", 1.9), ("Ex", 0.2), ("Po", 0.1)]);
        let foundation = if year_built > 1990.0 && rng.random::<f64>() < 0.85 {
            "PConc"
        } else {
            pick(&mut rng, &[("CBlock", 55.0), ("PConc", 20.0), ("BrkTil", 19.0), ("Slab", 3.5), ("Stone", 1.5), ("Wood", 1.0)])
        };

        let no_bsmt = rng.random::<f64>() < 0.025;
        let total_bsmt = if big {
            3000.0 + 3000.0 * rng.random::<f64>()
        } else if no_bsmt {
            0.0
        } else {
            (1050.0 + 420.0 * s + 80.0 * q + 150.0 * n5).max(100.0)
        };
        let (bq, bc, bexp, bft1, bfin1, bft2, bfin2) = if no_bsmt {
            let z = "0".to_string();
            ("", "", "", "", z.clone(), "", z)
        } else {
            let bq = match grade(1.1 * q + 0.6 * std.sample(&mut rng)) {
                "Po" => "Fa",
                g => g,
            };
            let bc = pick(&mut rng, &[("TA", 90.0), ("Gd", 4.5), ("Fa", 4.5), ("Po", 0.2)]);
            let bexp = pick(&mut rng, &[("No", 65.3), ("Av", 15.2), ("Gd", 9.2), ("Mn", 7.8), ("", 0.1)]);
            let bft1 = pick(
                &mut rng,
                &[("Unf", 29.5), ("GLQ", 28.6), ("ALQ", 15.1), ("BLQ", 10.1), ("Rec", 9.1), ("LwQ", 5.1)],
            );
            let fin1 = if bft1 == "Unf" {
                0.0
            } else {
                (total_bsmt * (0.3 + 0.6 * rng.random::<f64>())).round()
            };
            let bft2 = pick(
                &mut rng,
                &[("Unf", 88.0), ("Rec", 3.7), ("LwQ", 3.2), ("BLQ", 2.3), ("ALQ", 1.3), ("GLQ", 0.9), ("", 0.1)],
            );
            let fin2 = if bft2 == "Unf" || bft2.is_empty() {
                0.0
            } else {
                ((total_bsmt - fin1) * 0.5 * rng.random::<f64>()).round()
            };
            (bq, bc, bexp, bft1, int(fin1), bft2, int(fin2))
        };
        let unf = (total_bsmt - bfin1.parse::<f64>().unwrap_or(0.0) - bfin2.parse::<f64>().unwrap_or(0.0)).max(0.0);

        let heating = pick(&mut rng, &[("GasA", 97.8), ("GasW", 1.2), ("Grav", 0.5), ("Wall", 0.3), ("OthW", 0.1), ("Floor", 0.1)]);
        let heating_qc = grade(1.2 * q + 0.9 * std.sample(&mut rng) + 0.7);
        let central_air = pick(&mut rng, &[("Y", 93.5), ("N", 6.5)]);
        let electrical = pick(
            &mut rng,
            &[("SBrkr", 91.4), ("FuseA", 6.4), ("FuseF", 1.8), ("FuseP", 0.2), ("Mix", 0.05), ("", 0.07)],
        );
        let first = if big {
            total_bsmt + 300.0 * rng.random::<f64>()
        } else {
            (0.8 * total_bsmt.max(600.0) + 250.0 + 150.0 * std.sample(&mut rng)).max(334.0)
        };
        let second = if big {
            1600.0 + 500.0 * rng.random::<f64>()
        } else {
            match style {
                "2Story" | "2.5Fin" | "2.5Unf" => (800.0 + 200.0 * std.sample(&mut rng)).max(300.0),
                "1.5Fin" => (500.0 + 120.0 * std.sample(&mut rng)).max(150.0),
                _ => 0.0,
            }
        };
        let low_qual = if rng.random::<f64>() < 0.018 { 50.0 + 550.0 * rng.random::<f64>() } else { 0.0 };
        let (first, second, low_qual) = (first.round(), second.round(), low_qual.round());
        let gr_liv = first + second + low_qual;

        let bsmt_full = if no_bsmt { "0" } else { pick(&mut rng, &[("0", 58.6), ("1", 40.3), ("2", 1.1)]) };
        let bsmt_half = if no_bsmt { "0" } else { pick(&mut rng, &[("0", 94.4), ("1", 5.5), ("2", 0.1)]) };
        let full_bath = if gr_liv > 2800.0 {
            3.0
        } else if gr_liv + 200.0 * std.sample(&mut rng) > 1300.0 {
            2.0
        } else {
            1.0
        };
        let half_bath = pick(&mut rng, &[("0", 62.5), ("1", 36.6), ("2", 0.9)]);
        let bedrooms = (gr_liv / 500.0 + 0.6 * std.sample(&mut rng)).round().clamp(0.0, 8.0);
        let kitchens = pick(&mut rng, &[("1", 95.3), ("2", 4.5), ("0", 0.1), ("3", 0.1)]);
        let kitchen_qual = grade(1.1 * q + 0.6 * std.sample(&mut rng) - 0.1);
        let rooms = (bedrooms + 3.0 + 0.8 * std.sample(&mut rng)).round().clamp(2.0, 14.0);
        let functional = pick(
            &mut rng,
            &[("Typ", 93.1), ("Min2", 2.3), ("Min1", 2.1), ("Mod", 1.0), ("Maj1", 1.0), ("Maj2", 0.3), ("Sev", 0.1)],
        );
        let fireplaces = pick(&mut rng, &[("0", 47.3), ("1", 44.5), ("2", 7.9), ("3", 0.3)]);
        let fireplace_qu = if fireplaces == "0" {
            ""
        } else {
            pick(&mut rng, &[("Gd", 49.0), ("TA", 41.0), ("Fa", 4.3), ("Ex", 3.1), ("Po", 2.6)])
        };

        let no_garage = rng.random::<f64>() < 0.0555;
        let (g_type, g_year, g_finish, g_cars, g_area, g_qual, g_cond) = if no_garage {
            ("", String::new(), "", "0".to_string(), "0".to_string(), "", "")
        } else {
            let t = pick(
                &mut rng,
                &[("Attchd", 63.0), ("Detchd", 28.0), ("BuiltIn", 6.0), ("Basment", 1.3), ("CarPort", 0.6), ("2Types", 0.4)],
            );
            let year = if rng.random::<f64>() < 0.8 { year_built } else { year_remod };
            let finish = pick(&mut rng, &[("Unf", 43.0), ("RFn", 30.5), ("Fin", 26.5)]);
            let cars = (1.9 + 0.5 * q + 0.4 * s + 0.4 * std.sample(&mut rng)).round().clamp(1.0, 4.0);
            let area = (cars * 240.0 + 60.0 * std.sample(&mut rng)).max(160.0);
            let gq = pick(&mut rng, &[("TA", 95.0), ("Fa", 3.5), ("Gd", 1.0), ("Ex", 0.2), ("Po", 0.3)]);
            let gc = pick(&mut rng, &[("TA", 96.0), ("Fa", 2.6), ("Gd", 0.7), ("Po", 0.5), ("Ex", 0.2)]);
            (t, int(year), finish, int(cars), int(area), gq, gc)
        };
        let paved = pick(&mut rng, &[("Y", 91.8), ("N", 6.2), ("P", 2.0)]);
        let mut porch = |p_zero: f64, mu: f64, sigma: f64| {
            if rng.random::<f64>() < p_zero {
                "0".to_string()
            } else {
                int((mu + sigma * std.sample(&mut rng)).exp())
            }
        };
        let wood_deck = porch(0.52, 5.2, 0.5);
        let open_porch = porch(0.45, 4.0, 0.6);
        let enclosed = porch(0.86, 4.9, 0.4);
        let three_ssn = porch(0.984, 5.2, 0.3);
        let screen = porch(0.92, 5.1, 0.3);
        let pool = rng.random::<f64>() < 0.005;
        let pool_area = if pool { int(500.0 + 240.0 * rng.random::<f64>()) } else { "0".to_string() };
        let pool_qc = if pool { pick(&mut rng, &[("Gd", 40.0), ("Ex", 30.0), ("Fa", 30.0)]) } else { "" };
        let fence = pick(&mut rng, &[("", 80.8), ("MnPrv", 10.8), ("GdPrv", 4.0), ("GdWo", 3.7), ("MnWw", 0.7)]);
        let misc = pick(&mut rng, &[("", 96.3), ("Shed", 3.4), ("Gar2", 0.1), ("Othr", 0.1), ("TenC", 0.1)]);
        let misc_val = if misc.is_empty() { "0".to_string() } else { int(100.0 * (2.0 + 20.0 * rng.random::<f64>()).round()) };
        let month = 1 + pick_index(&mut rng, &[4.0, 3.6, 7.3, 9.7, 13.9, 17.3, 16.0, 8.3, 4.3, 6.1, 5.4, 4.1]);
        let yr_sold = pick(&mut rng, &[("2006", 21.4), ("2007", 22.0), ("2008", 20.7), ("2009", 23.0), ("2010", 12.9)]);
        let sale_type = pick(
            &mut rng,
            &[("WD", 86.8), ("New", 8.4), ("COD", 3.0), ("ConLD", 0.6), ("ConLI", 0.3), ("ConLw", 0.3), ("CWD", 0.3), ("Oth", 0.2), ("Con", 0.1)],
        );
        let sale_cond = if sale_type == "New" {
            "Partial"
        } else {
            pick(&mut rng, &[("Normal", 89.0), ("Abnorml", 7.5), ("Family", 1.5), ("Alloca", 0.9), ("AdjLand", 0.3), ("Partial", 0.8)])
        };

        let log_price = if big {
            (160_000.0 + 25_000.0 * rng.random::<f64>()).ln()
        } else {
            12.02
                + 0.11 * (overall_qual - 6.0)
                + 0.38 * (gr_liv / 1500.0).ln()
                + 0.08 * ((total_bsmt + 200.0) / 1200.0).ln()
                + 0.0025 * (year_built - 1972.0)
                + NEIGHBORHOOD_EFFECT[nb]
                + if no_garage { -0.1 } else { 0.0 }
                + 0.05 * ns
                + 0.1 * std.sample(&mut rng)
        };
        let lot_frontage = if rng.random::<f64>() < 0.177 { String::new() } else { int(frontage) };

        let row: Vec<String> = vec![
            sub_class.into(), zoning.into(), lot_frontage, int(lot_area), street.into(), alley.into(),
            lot_shape.into(), contour.into(), utilities.into(), lot_config.into(), slope.into(),
            NEIGHBORHOODS[nb].0.into(), cond1.into(), cond2.into(), bldg.into(), style.into(),
            int(overall_qual), overall_cond.into(), int(year_built), int(year_remod), roof_style.into(),
            roof_matl.into(), ext1.into(), ext2.into(), mas_type.into(), mas_area, exter_qual.into(),
            exter_cond.into(), foundation.into(), bq.into(), bc.into(), bexp.into(), bft1.into(), bfin1,
            bft2.into(), bfin2, int(unf), int(total_bsmt), heating.into(), heating_qc.into(),
            central_air.into(), electrical.into(), int(first), int(second), int(low_qual), int(gr_liv),
            bsmt_full.into(), bsmt_half.into(), int(full_bath), half_bath.into(), int(bedrooms),
            kitchens.into(), kitchen_qual.into(), int(rooms), functional.into(), fireplaces.into(),
            fireplace_qu.into(), g_type.into(), g_year, g_finish.into(), g_cars, g_area, g_qual.into(),
            g_cond.into(), paved.into(), wood_deck, open_porch, enclosed, three_ssn, screen, pool_area,
            pool_qc.into(), fence.into(), misc.into(), misc_val, month.to_string(), yr_sold.into(),
            sale_type.into(), sale_cond.into(), int(log_price.exp()),
        ];
        debug_assert_eq!(row.len(), HOUSE_COLUMNS);
        rows.push(row);
    }
    csv_bytes(&HOUSE_HEADER, rows)
}

/// Piecewise-linear AQI sub-index over concentration breakpoints.
fn sub_index(c: f64, breaks: &[f64; 6]) -> f64 {
    const AQI: [f64; 7] = [0.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0];
    let mut lo = 0.0;
    for (i, &hi) in breaks.iter().enumerate() {
        if c <= hi {
            return AQI[i] + (AQI[i + 1] - AQI[i]) * (c - lo) / (hi - lo);
        }
        lo = hi;
    }
    500.0 + (c - lo) / 2.0
}

fn aqi_bucket(aqi: f64) -> &'static str {
    match aqi {
        a if a <= 50.0 => "Good",
        a if a <= 100.0 => "Satisfactory",
        a if a <= 200.0 => "Moderate",
        a if a <= 300.0 => "Poor",
        a if a <= 400.0 => "Very Poor",
        _ => "Severe",
    }
}

/// Daily city readings: each city covers a contiguous run of days ending
/// 2020-07-01, pollutants are log-normal around a shared daily level with a
/// winter peak, and AQI follows the usual sub-index breakpoints.
pub fn air_quality_like(seed: u64) -> Vec<u8> {
    const HEADER: [&str; AIR_COLUMNS] = [
        "City", "Date", "PM2.5", "PM10", "NO", "NO2", "NOx", "NH3", "CO", "SO2", "O3", "Benzene", "Toluene",
        "AQI", "AQI_Bucket",
    ];
    // (base level, log-sd, missing rate) for PM2.5 .. Toluene, excluding NOx
    const POLLUTANTS: [(f64, f64, f64); 10] = [
        (48.0, 0.55, 0.155),
        (95.0, 0.5, 0.377),
        (10.0, 0.8, 0.118),
        (22.0, 0.6, 0.121),
        (0.0, 0.0, 0.141),
        (15.0, 0.6, 0.349),
        (0.9, 0.7, 0.07),
        (11.0, 0.6, 0.131),
        (30.0, 0.45, 0.136),
        (2.5, 0.9, 0.19),
    ];
    let end = NaiveDate::from_ymd_opt(2020, 7, 1).expect("valid date");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("valid normal");
    let city_level = LogNormal::new(0.0, 0.45).expect("valid lognormal");
    let per_city = AIR_ROWS / CITIES.len();
    let extra = AIR_ROWS % CITIES.len();
    let mut rows = Vec::with_capacity(AIR_ROWS);
    for (ci, city) in CITIES.iter().enumerate() {
        let days = per_city + usize::from(ci < extra);
        let level: f64 = city_level.sample(&mut rng);
        let mut z = 0.0;
        for d in 0..days {
            let date = end - Duration::days((days - 1 - d) as i64);
            let doy = date.format("%j").to_string().parse::<f64>().expect("day of year");
            let season = (2.0 * std::f64::consts::PI * (doy - 15.0) / 365.0).cos();
            z = 0.8 * z + 0.6 * std.sample(&mut rng);
            let mut values = [0.0f64; 11];
            for (k, &(base, sd, _)) in POLLUTANTS.iter().enumerate() {
                if k == 4 {
                    continue;
                }
                let shared = if k == 8 { 0.2 } else { 0.6 };
                let seasonal = if k == 8 { -0.1 } else { 0.35 };
                values[k] = (base * level).ln() + seasonal * season + shared * z + sd * std.sample(&mut rng);
                values[k] = values[k].exp();
            }
            values[4] = 0.8 * values[2] + 0.9 * values[3] + (1.0 + 0.3 * std.sample(&mut rng)).max(0.0);
            values[10] = 0.7 * values[9] * (0.5 * std.sample(&mut rng)).exp();
            let mut observed: Vec<bool> = POLLUTANTS.iter().map(|p| rng.random::<f64>() >= p.2).collect();
            observed.push(rng.random::<f64>() >= 0.27);
            let pm25 = observed[0].then_some(values[0]);
            let pm10 = observed[1].then_some(values[1]);
            let aqi = match (pm25, pm10) {
                (None, None) => None,
                (a, b) => {
                    let s1 = a.map_or(0.0, |c| sub_index(c, &[30.0, 60.0, 90.0, 120.0, 250.0, 380.0]));
                    let s2 = b.map_or(0.0, |c| sub_index(c, &[50.0, 100.0, 250.0, 350.0, 430.0, 510.0]));
                    (rng.random::<f64>() >= 0.05).then_some(s1.max(s2).round())
                }
            };
            let mut row = vec![city.to_string(), date.format("%Y-%m-%d").to_string()];
            for (k, v) in values.iter().enumerate() {
                let cell = match (observed[k], k) {
                    (false, _) => String::new(),
                    // CO is reported in mg/m3
                    (true, 6) => format!("{v:.3}"),
                    (true, _) => format!("{v:.2}"),
                };
                row.push(cell);
            }
            row.push(aqi.map(int).unwrap_or_default());
            row.push(aqi.map(aqi_bucket).unwrap_or_default().to_string());
            rows.push(row);
        }
    }
    csv_bytes(&HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{parse_csv, ParseOptions, VariableType};

    #[test]
    fn house_shape_and_types() {
        let bytes = house_prices_like(7);
        assert_eq!(bytes, house_prices_like(7));
        let (d, _) = parse_csv(&bytes, &ParseOptions::default()).unwrap();
        assert_eq!(d.row_count(), HOUSE_ROWS);
        assert_eq!(d.column_count(), HOUSE_COLUMNS);
        assert_eq!(d.column("ExterQual").unwrap().vtype(), VariableType::CategoricalOrdinal);
        assert_eq!(d.column("Neighborhood").unwrap().vtype(), VariableType::CategoricalNominal);
        assert_eq!(d.column("SalePrice").unwrap().vtype(), VariableType::ContinuousNumeric);
        let alley = d.column("Alley").unwrap();
        assert!(alley.missing_count() as f64 / HOUSE_ROWS as f64 > 0.85);
    }

    #[test]
    fn air_shape_and_types() {
        let bytes = air_quality_like(7);
        let (d, _) = parse_csv(&bytes, &ParseOptions::default()).unwrap();
        assert_eq!(d.row_count(), AIR_ROWS);
        assert_eq!(d.column_count(), AIR_COLUMNS);
        assert_eq!(d.column("City").unwrap().vtype(), VariableType::CategoricalNominal);
        assert_eq!(d.column("Date").unwrap().vtype(), VariableType::DateTime);
        let bucket = d.column("AQI_Bucket").unwrap();
        assert_eq!(bucket.vtype(), VariableType::CategoricalOrdinal);
        assert_eq!(bucket.order().unwrap()[0], "Good");
        assert_eq!(d.column("PM2.5").unwrap().vtype(), VariableType::ContinuousNumeric);
    }
}
