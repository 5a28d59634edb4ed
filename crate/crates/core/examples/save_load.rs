//! Fits a model on a CSV file, saves it as JSON, reloads it and checks that
//! predictions agree bit for bit.

use fairmars::{fit, load_csv, CsvOptions, FairMarsModel, FitConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let csv_path = dir.path().join("grades.csv");
    let mut text = String::from("hours,school,grade,gender\n");
    for i in 0..120 {
        let hours = (i % 40) as f64 * 0.5;
        let school = ["north", "south", "east"][i % 3];
        let gender = if i % 4 == 0 { "F" } else { "M" };
        let grade = 8.0 + (hours - 6.0).max(0.0) * 0.6 + if school == "east" { 1.5 } else { 0.0 };
        text.push_str(&format!("{hours},{school},{grade},{gender}\n"));
    }
    std::fs::write(&csv_path, text)?;

    let ds = load_csv(&csv_path, &CsvOptions::new("grade", "gender"))?;
    println!("features: {}", ds.column_names().join(", "));
    let model = fit(&ds, &FitConfig::default())?.model;

    let model_path = dir.path().join("model.json");
    model.save(&model_path)?;
    let restored = FairMarsModel::load(&model_path)?;
    let same = model.predict_dataset(&ds)? == restored.predict_dataset(&ds)?;
    println!("saved {} bytes, reloaded predictions identical: {same}", std::fs::metadata(&model_path)?.len());
    println!("dataset hash {}", restored.provenance().dataset_hash);
    print!("{}", restored.export_rules(false));
    Ok(())
}
