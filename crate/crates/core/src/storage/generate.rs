//! Synthetic benchmark data with controllable skew and attribute correlation.
//!
//! Two desk-scale schema kinds are supported:
//!
//! * `tpch_lite` - the TPC-H tables with trimmed column sets. At scale 1 the
//!   row counts are lineitem 6M, orders 1.5M, partsupp 0.8M, part 0.2M,
//!   customer 150K, supplier 10K, plus the fixed nation (25) and region (5)
//!   tables.
//! * `ssb_lite` - the star schema benchmark tables with integer dimension
//!   attributes. At scale 1: lineorder 6M, part 200K, customer 30K,
//!   supplier 2K, plus a fixed calendar table `ddate`.
//!
//! `skew` is a Zipf exponent applied to foreign keys and enumerated
//! attributes (0 means uniform). `correlation` links designated attribute
//! pairs: `o_orderstatus` follows the `o_totalprice` tercile in tpch_lite,
//! and city/nation/region form a hierarchy in ssb_lite. Identical spec and
//! seed always produce byte-identical tables.

use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use crate::error::{Error, Result};
use crate::storage::{date_to_days, Column, ColumnData, Dictionary, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    TpchLite,
    SsbLite,
}

impl SchemaKind {
    pub fn parse(s: &str) -> Result<SchemaKind> {
        match s {
            "tpch_lite" | "tpch" => Ok(SchemaKind::TpchLite),
            "ssb_lite" | "ssb" => Ok(SchemaKind::SsbLite),
            other => Err(Error::Generator(format!("unknown schema kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemaKind::TpchLite => "tpch_lite",
            SchemaKind::SsbLite => "ssb_lite",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub schema: SchemaKind,
    pub scale: f64,
    pub skew: f64,
    pub correlation: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.scale.is_nan() || self.scale <= 0.0 {
            return Err(Error::Generator(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if self.skew.is_nan() || self.skew < 0.0 {
            return Err(Error::Generator(format!(
                "skew must be >= 0, got {}",
                self.skew
            )));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::Generator(format!(
                "correlation must be in [0,1], got {}",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// Generates the database described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<Table>> {
    spec.validate()?;
    match spec.schema {
        SchemaKind::TpchLite => tpch_lite(spec),
        SchemaKind::SsbLite => ssb_lite(spec),
    }
}

/// Base rows scaled by `scale`, rounded down (with a guard against float
/// noise on exact products), minimum one row.
fn scaled_rows(base: u64, scale: f64) -> usize {
    let exact = base as f64 * scale;
    let rounded = exact.round();
    let rows = if (exact - rounded).abs() < 1e-6 {
        rounded
    } else {
        exact.floor()
    };
    (rows as usize).max(1)
}

/// Independent, reproducible stream per (seed, table, column).
fn col_rng(seed: u64, table: &str, column: &str) -> ChaCha8Rng {
    let mut h = seed ^ 0xcbf2_9ce4_8422_2325;
    for b in table.bytes().chain([0x1f]).chain(column.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Samples values in `1..=n`, uniform at skew 0 and Zipf otherwise.
struct DomainSampler {
    n: u64,
    zipf: Option<Zipf<f64>>,
}

impl DomainSampler {
    fn new(n: u64, skew: f64) -> DomainSampler {
        let zipf = if skew > 0.0 && n > 1 {
            Some(Zipf::new(n as f64, skew).expect("valid zipf parameters"))
        } else {
            None
        };
        DomainSampler { n: n.max(1), zipf }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match &self.zipf {
            Some(z) => (z.sample(rng) as u64).clamp(1, self.n),
            None => rng.random_range(1..=self.n),
        }
    }
}

fn int_column(name: &str, values: Vec<i64>) -> Column {
    Column {
        name: name.into(),
        data: ColumnData::Int64(Arc::new(values)),
    }
}

fn float_column(name: &str, values: Vec<f64>) -> Column {
    Column {
        name: name.into(),
        data: ColumnData::Float64(Arc::new(values)),
    }
}

fn date_column(name: &str, values: Vec<i64>) -> Column {
    Column {
        name: name.into(),
        data: ColumnData::Date(Arc::new(values)),
    }
}

fn text_column(name: &str, values: impl IntoIterator<Item = String>) -> Column {
    let mut dict = Dictionary::new();
    let codes: Vec<u32> = values.into_iter().map(|s| dict.intern(&s)).collect();
    Column {
        name: name.into(),
        data: ColumnData::Text {
            codes: Arc::new(codes),
            dict: Arc::new(dict),
        },
    }
}

fn fk_column(spec: &GeneratorSpec, table: &str, name: &str, rows: usize, parent: u64) -> Column {
    let mut rng = col_rng(spec.seed, table, name);
    let dom = DomainSampler::new(parent, spec.skew);
    int_column(
        name,
        (0..rows).map(|_| dom.sample(&mut rng) as i64).collect(),
    )
}

fn key_column(name: &str, rows: usize) -> Column {
    int_column(name, (1..=rows as i64).collect())
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

// TPC-H dates span 1992-01-01 .. 1998-12-31.
fn date_range() -> (i64, i64) {
    (
        date_to_days("1992-01-01").expect("valid"),
        date_to_days("1998-12-31").expect("valid"),
    )
}

fn random_date_column(spec: &GeneratorSpec, table: &str, name: &str, rows: usize) -> Column {
    let (lo, hi) = date_range();
    let span = (hi - lo + 1) as u64;
    let mut rng = col_rng(spec.seed, table, name);
    let dom = DomainSampler::new(span, spec.skew);
    date_column(
        name,
        (0..rows)
            .map(|_| lo + dom.sample(&mut rng) as i64 - 1)
            .collect(),
    )
}

const NATIONS: [&str; 25] = [
    "ALGERIA",
    "ARGENTINA",
    "BRAZIL",
    "CANADA",
    "EGYPT",
    "ETHIOPIA",
    "FRANCE",
    "GERMANY",
    "INDIA",
    "INDONESIA",
    "IRAN",
    "IRAQ",
    "JAPAN",
    "JORDAN",
    "KENYA",
    "MOROCCO",
    "MOZAMBIQUE",
    "PERU",
    "CHINA",
    "ROMANIA",
    "SAUDI ARABIA",
    "VIETNAM",
    "RUSSIA",
    "UNITED KINGDOM",
    "UNITED STATES",
];

const NATION_REGION: [i64; 25] = [
    0, 1, 1, 1, 4, 0, 3, 3, 2, 2, 4, 4, 2, 4, 0, 0, 0, 1, 2, 3, 4, 2, 3, 3, 1,
];

const REGIONS: [&str; 5] = ["AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"];

const SEGMENTS: [&str; 5] = [
    "AUTOMOBILE",
    "BUILDING",
    "FURNITURE",
    "MACHINERY",
    "HOUSEHOLD",
];

fn alnum(rng: &mut ChaCha8Rng, len: usize) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len)
        .map(|_| CHARS[rng.random_range(0..CHARS.len())] as char)
        .collect()
}

fn tpch_lite(spec: &GeneratorSpec) -> Result<Vec<Table>> {
    let n_lineitem = scaled_rows(6_000_000, spec.scale);
    let n_orders = scaled_rows(1_500_000, spec.scale);
    let n_partsupp = scaled_rows(800_000, spec.scale);
    let n_part = scaled_rows(200_000, spec.scale);
    let n_customer = scaled_rows(150_000, spec.scale);
    let n_supplier = scaled_rows(10_000, spec.scale);

    let region = Table::new(
        "region",
        vec![
            key_column("r_regionkey", REGIONS.len()),
            text_column("r_name", REGIONS.iter().map(|s| s.to_string())),
        ],
    )?;

    let nation = Table::new(
        "nation",
        vec![
            key_column("n_nationkey", NATIONS.len()),
            text_column("n_name", NATIONS.iter().map(|s| s.to_string())),
            int_column(
                "n_regionkey",
                NATION_REGION.iter().map(|r| r + 1).collect(),
            ),
        ],
    )?;

    let supplier = Table::new(
        "supplier",
        vec![
            key_column("s_suppkey", n_supplier),
            fk_column(spec, "supplier", "s_nationkey", n_supplier, 25),
        ],
    )?;

    let part = {
        let mut rng = col_rng(spec.seed, "part", "p_size");
        let dom = DomainSampler::new(50, spec.skew);
        Table::new(
            "part",
            vec![
                key_column("p_partkey", n_part),
                int_column(
                    "p_size",
                    (0..n_part).map(|_| dom.sample(&mut rng) as i64).collect(),
                ),
                {
                    let mut rng = col_rng(spec.seed, "part", "p_retailprice");
                    float_column(
                        "p_retailprice",
                        (0..n_part)
                            .map(|_| cents(rng.random_range(900.0..2100.0)))
                            .collect(),
                    )
                },
            ],
        )?
    };

    let partsupp = {
        // Four suppliers per part, composite (ps_partkey, ps_suppkey) keys.
        let step = (n_supplier / 4).max(1) as i64;
        let mut partkeys = Vec::with_capacity(n_partsupp);
        let mut suppkeys = Vec::with_capacity(n_partsupp);
        for i in 0..n_partsupp as i64 {
            partkeys.push((1 + i / 4).min(n_part as i64));
            suppkeys.push(1 + (i / 4 + (i % 4) * step) % n_supplier as i64);
        }
        let mut qty_rng = col_rng(spec.seed, "partsupp", "ps_availqty");
        let mut cost_rng = col_rng(spec.seed, "partsupp", "ps_supplycost");
        Table::new(
            "partsupp",
            vec![
                int_column("ps_partkey", partkeys),
                int_column("ps_suppkey", suppkeys),
                int_column(
                    "ps_availqty",
                    (0..n_partsupp)
                        .map(|_| qty_rng.random_range(1..=9999))
                        .collect(),
                ),
                float_column(
                    "ps_supplycost",
                    (0..n_partsupp)
                        .map(|_| cents(cost_rng.random_range(1.0..1000.0)))
                        .collect(),
                ),
            ],
        )?
    };

    let customer = {
        let mut seg_rng = col_rng(spec.seed, "customer", "c_mktsegment");
        let seg_dom = DomainSampler::new(SEGMENTS.len() as u64, spec.skew);
        let mut bal_rng = col_rng(spec.seed, "customer", "c_acctbal");
        let mut addr_rng = col_rng(spec.seed, "customer", "c_address");
        let mut phone_rng = col_rng(spec.seed, "customer", "c_phone");
        let mut comment_rng = col_rng(spec.seed, "customer", "c_comment");
        Table::new(
            "customer",
            vec![
                key_column("c_custkey", n_customer),
                text_column(
                    "c_name",
                    (1..=n_customer).map(|i| format!("Customer#{i:09}")),
                ),
                fk_column(spec, "customer", "c_nationkey", n_customer, 25),
                text_column(
                    "c_mktsegment",
                    (0..n_customer)
                        .map(|_| SEGMENTS[(seg_dom.sample(&mut seg_rng) - 1) as usize].to_string()),
                ),
                float_column(
                    "c_acctbal",
                    (0..n_customer)
                        .map(|_| cents(bal_rng.random_range(-999.99..10000.0)))
                        .collect(),
                ),
                text_column("c_address", (0..n_customer).map(|_| alnum(&mut addr_rng, 12))),
                text_column(
                    "c_phone",
                    (0..n_customer).map(|_| {
                        format!(
                            "{}-{}",
                            phone_rng.random_range(10..35),
                            phone_rng.random_range(100_000_000..1_000_000_000u64)
                        )
                    }),
                ),
                text_column(
                    "c_comment",
                    (0..n_customer).map(|_| alnum(&mut comment_rng, 16)),
                ),
            ],
        )?
    };

    let orders = {
        let prices: Vec<f64> = {
            let mut rng = col_rng(spec.seed, "orders", "o_totalprice");
            (0..n_orders)
                .map(|_| cents(rng.random_range(900.0..600_000.0)))
                .collect()
        };
        // Designated correlated pair: with probability `correlation` the
        // status is the price tercile, otherwise it is independent.
        let statuses: Vec<String> = {
            let mut rng = col_rng(spec.seed, "orders", "o_orderstatus");
            let dom = DomainSampler::new(3, spec.skew);
            prices
                .iter()
                .map(|&p| {
                    let tercile = ((p - 900.0) / (600_000.0 - 900.0) * 3.0).min(2.0) as usize;
                    let pick = if rng.random_range(0.0..1.0) < spec.correlation {
                        tercile
                    } else {
                        (dom.sample(&mut rng) - 1) as usize
                    };
                    ["O", "F", "P"][pick].to_string()
                })
                .collect()
        };
        Table::new(
            "orders",
            vec![
                key_column("o_orderkey", n_orders),
                fk_column(spec, "orders", "o_custkey", n_orders, n_customer as u64),
                text_column("o_orderstatus", statuses),
                float_column("o_totalprice", prices),
                random_date_column(spec, "orders", "o_orderdate", n_orders),
            ],
        )?
    };

    let lineitem = {
        let mut qty_rng = col_rng(spec.seed, "lineitem", "l_quantity");
        let mut price_rng = col_rng(spec.seed, "lineitem", "l_extendedprice");
        let mut disc_rng = col_rng(spec.seed, "lineitem", "l_discount");
        let mut flag_rng = col_rng(spec.seed, "lineitem", "l_returnflag");
        let flag_dom = DomainSampler::new(3, spec.skew);
        Table::new(
            "lineitem",
            vec![
                fk_column(spec, "lineitem", "l_orderkey", n_lineitem, n_orders as u64),
                fk_column(spec, "lineitem", "l_partkey", n_lineitem, n_part as u64),
                fk_column(spec, "lineitem", "l_suppkey", n_lineitem, n_supplier as u64),
                int_column(
                    "l_quantity",
                    (0..n_lineitem)
                        .map(|_| qty_rng.random_range(1..=50))
                        .collect(),
                ),
                float_column(
                    "l_extendedprice",
                    (0..n_lineitem)
                        .map(|_| cents(price_rng.random_range(900.0..105_000.0)))
                        .collect(),
                ),
                float_column(
                    "l_discount",
                    (0..n_lineitem)
                        .map(|_| disc_rng.random_range(0..=10) as f64 / 100.0)
                        .collect(),
                ),
                random_date_column(spec, "lineitem", "l_shipdate", n_lineitem),
                text_column(
                    "l_returnflag",
                    (0..n_lineitem)
                        .map(|_| ["R", "A", "N"][(flag_dom.sample(&mut flag_rng) - 1) as usize]
                            .to_string()),
                ),
            ],
        )?
    };

    Ok(vec![
        lineitem, orders, partsupp, part, customer, supplier, nation, region,
    ])
}

fn ssb_lite(spec: &GeneratorSpec) -> Result<Vec<Table>> {
    let n_lineorder = scaled_rows(6_000_000, spec.scale);
    let n_customer = scaled_rows(30_000, spec.scale);
    let n_supplier = scaled_rows(2_000, spec.scale);
    let n_part = scaled_rows(200_000, spec.scale);

    // Fixed calendar: every day of 1992..1998.
    let (lo, hi) = date_range();
    let mut datekeys = Vec::new();
    let mut years = Vec::new();
    let mut yearmonths = Vec::new();
    for days in lo..=hi {
        let text = crate::storage::days_to_date(days);
        let (y, m, d) = {
            let mut parts = text.split('-');
            let y: i64 = parts.next().unwrap().parse().unwrap();
            let m: i64 = parts.next().unwrap().parse().unwrap();
            let d: i64 = parts.next().unwrap().parse().unwrap();
            (y, m, d)
        };
        datekeys.push(y * 10_000 + m * 100 + d);
        years.push(y);
        yearmonths.push(y * 100 + m);
    }
    let n_days = datekeys.len();
    let ddate = Table::new(
        "ddate",
        vec![
            int_column("d_datekey", datekeys.clone()),
            int_column("d_year", years),
            int_column("d_yearmonthnum", yearmonths),
        ],
    )?;

    // Hierarchical geography: region 0..4, nation 0..24, city 0..249. With
    // probability `correlation` the finer attribute nests inside the coarser
    // one the way stock SSB data does; otherwise it is independent.
    fn geography(
        spec: &GeneratorSpec,
        table: &str,
        prefix: &str,
        rows: usize,
    ) -> (Column, Column, Column) {
        let mut region_rng = col_rng(spec.seed, table, &format!("{prefix}_region"));
        let mut nation_rng = col_rng(spec.seed, table, &format!("{prefix}_nation"));
        let mut city_rng = col_rng(spec.seed, table, &format!("{prefix}_city"));
        let region_dom = DomainSampler::new(5, spec.skew);
        let nation_dom = DomainSampler::new(25, spec.skew);
        let city_dom = DomainSampler::new(250, spec.skew);
        let mut regions = Vec::with_capacity(rows);
        let mut nations = Vec::with_capacity(rows);
        let mut cities = Vec::with_capacity(rows);
        for _ in 0..rows {
            let region = region_dom.sample(&mut region_rng) as i64 - 1;
            let nation = if nation_rng.random_range(0.0..1.0) < spec.correlation {
                region * 5 + nation_rng.random_range(0..5)
            } else {
                nation_dom.sample(&mut nation_rng) as i64 - 1
            };
            let city = if city_rng.random_range(0.0..1.0) < spec.correlation {
                nation * 10 + city_rng.random_range(0..10)
            } else {
                city_dom.sample(&mut city_rng) as i64 - 1
            };
            regions.push(region);
            nations.push(nation);
            cities.push(city);
        }
        (
            int_column(&format!("{prefix}_region"), regions),
            int_column(&format!("{prefix}_nation"), nations),
            int_column(&format!("{prefix}_city"), cities),
        )
    }

    let customer = {
        let (region, nation, city) = geography(spec, "customer", "c", n_customer);
        Table::new(
            "customer",
            vec![key_column("c_custkey", n_customer), region, nation, city],
        )?
    };

    let supplier = {
        let (region, nation, city) = geography(spec, "supplier", "s", n_supplier);
        Table::new(
            "supplier",
            vec![key_column("s_suppkey", n_supplier), region, nation, city],
        )?
    };

    let part = {
        let mut mfgr_rng = col_rng(spec.seed, "part", "p_mfgr");
        let mfgr_dom = DomainSampler::new(5, spec.skew);
        let mut cat_rng = col_rng(spec.seed, "part", "p_category");
        let mut brand_rng = col_rng(spec.seed, "part", "p_brand1");
        let mut mfgrs = Vec::with_capacity(n_part);
        let mut cats = Vec::with_capacity(n_part);
        let mut brands = Vec::with_capacity(n_part);
        for _ in 0..n_part {
            // Category and brand nest inside the manufacturer, as in stock
            // SSB data: category = mfgr*10 + 0..4, brand = category*100 + 1..40.
            let mfgr = mfgr_dom.sample(&mut mfgr_rng) as i64;
            let cat = mfgr * 10 + cat_rng.random_range(0..5);
            let brand = cat * 100 + brand_rng.random_range(1..=40);
            mfgrs.push(mfgr);
            cats.push(cat);
            brands.push(brand);
        }
        Table::new(
            "part",
            vec![
                key_column("p_partkey", n_part),
                int_column("p_mfgr", mfgrs),
                int_column("p_category", cats),
                int_column("p_brand1", brands),
            ],
        )?
    };

    let lineorder = {
        let mut date_rng = col_rng(spec.seed, "lineorder", "lo_orderdate");
        let date_dom = DomainSampler::new(n_days as u64, spec.skew);
        let mut rev_rng = col_rng(spec.seed, "lineorder", "lo_revenue");
        let mut cost_rng = col_rng(spec.seed, "lineorder", "lo_supplycost");
        let mut qty_rng = col_rng(spec.seed, "lineorder", "lo_quantity");
        Table::new(
            "lineorder",
            vec![
                fk_column(spec, "lineorder", "lo_custkey", n_lineorder, n_customer as u64),
                fk_column(spec, "lineorder", "lo_partkey", n_lineorder, n_part as u64),
                fk_column(spec, "lineorder", "lo_suppkey", n_lineorder, n_supplier as u64),
                int_column(
                    "lo_orderdate",
                    (0..n_lineorder)
                        .map(|_| datekeys[(date_dom.sample(&mut date_rng) - 1) as usize])
                        .collect(),
                ),
                int_column(
                    "lo_quantity",
                    (0..n_lineorder)
                        .map(|_| qty_rng.random_range(1..=50))
                        .collect(),
                ),
                int_column(
                    "lo_revenue",
                    (0..n_lineorder)
                        .map(|_| rev_rng.random_range(1_000..=100_000))
                        .collect(),
                ),
                int_column(
                    "lo_supplycost",
                    (0..n_lineorder)
                        .map(|_| cost_rng.random_range(100..=10_000))
                        .collect(),
                ),
            ],
        )?
    };

    Ok(vec![lineorder, customer, supplier, part, ddate])
}
