//! Write the initial relaxed program for n = 3 to stdout.

use obliq::opt::QcqpModel;

fn main() -> obliq::Result<()> {
    let model = QcqpModel::initial(3)?;
    eprintln!("{} variables, {} ratio constraints", model.variable_count(), model.active_count());
    print!("{}", model.to_text());
    Ok(())
}
