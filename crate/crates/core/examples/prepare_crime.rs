//! Builds `crime.csv` from the UCI Communities and Crime files.
//!
//! Reads `communities.data` and `communities.names` from the data directory
//! (first argument, else `FAIRMARS_DATA_DIR`, else `./data`) and writes
//! `crime.csv` next to them: eleven predictors, a 0/1 `black` flag and
//! `ViolentCrimesPerPop`.

use std::error::Error;
use std::fs;
use std::path::PathBuf;

const FEATURES: [&str; 11] = [
    "PctIlleg",
    "PctKids2Par",
    "PctFam2Par",
    "PctYoungKids2Par",
    "PctTeen2Par",
    "pctWInvInc",
    "pctWPubAsst",
    "FemalePctDiv",
    "TotalPctDiv",
    "PctPersDenseHous",
    "NumIlleg",
];
const RESPONSE: &str = "ViolentCrimesPerPop";
const RACE: &str = "racepctblack";
/// Communities at or above this (normalized) share are flagged `black = 1`.
const BLACK_THRESHOLD: f64 = 0.06;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .or_else(|| std::env::var_os("FAIRMARS_DATA_DIR"))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"));

    let names_path = dir.join("communities.names");
    let names_text = fs::read_to_string(&names_path).map_err(|e| format!("{}: {e}", names_path.display()))?;
    let attributes: Vec<&str> = names_text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("@attribute "))
        .filter_map(|rest| rest.split_whitespace().next())
        .collect();
    let col = |name: &str| {
        attributes
            .iter()
            .position(|a| *a == name)
            .ok_or_else(|| format!("attribute '{name}' missing from communities.names"))
    };
    let feature_idx: Vec<usize> = FEATURES.iter().map(|f| col(f)).collect::<Result<_, _>>()?;
    let race_idx = col(RACE)?;
    let response_idx = col(RESPONSE)?;

    let data_path = dir.join("communities.data");
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(&data_path)
        .map_err(|e| format!("{}: {e}", data_path.display()))?;
    let out_path = dir.join("crime.csv");
    let mut out = csv::Writer::from_path(&out_path)?;
    let mut header: Vec<&str> = FEATURES.to_vec();
    header.extend(["black", RESPONSE]);
    out.write_record(&header)?;

    let (mut kept, mut skipped, mut black) = (0usize, 0usize, 0usize);
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != attributes.len() {
            return Err(format!("row with {} fields, expected {}", rec.len(), attributes.len()).into());
        }
        let used = feature_idx.iter().chain([&race_idx, &response_idx]);
        if used.clone().any(|&j| rec[j].trim() == "?") {
            skipped += 1;
            continue;
        }
        let flag = rec[race_idx].trim().parse::<f64>()? >= BLACK_THRESHOLD;
        black += usize::from(flag);
        let mut row: Vec<String> = feature_idx.iter().map(|&j| rec[j].trim().to_string()).collect();
        row.push(if flag { "1" } else { "0" }.to_string());
        row.push(rec[response_idx].trim().to_string());
        out.write_record(&row)?;
        kept += 1;
    }
    out.flush()?;
    println!(
        "wrote {} ({kept} rows, {black} flagged black, {skipped} skipped for missing values)",
        out_path.display()
    );
    Ok(())
}
