//! Evaluates the mean-field coefficients and the operators L0, L1, L_e^-1 for
//! the linear model against a small particle snapshot.

use msdej::model::builtin::LinearInteraction;
use msdej::model::{compensated_drift, jump_compensator, op_l0, op_l0_tilde, op_l1, op_lminus1, Coef, LawView, Model};

fn main() -> msdej::Result<()> {
    let model = LinearInteraction::standard(1.0);
    let states = [0.05, 0.1, 0.15, 0.2];
    let law = LawView::full(&model, 0.0, &states)?;
    let x = 0.3;
    println!("law mean {:.4}, second moment {:.4}", law.mean(), law.second_moment());
    for coef in [Coef::Drift, Coef::Diffusion, Coef::Jump(0.4)] {
        let mf = model.mean_field(coef, 0.0, &law, x)?;
        println!(
            "{coef:?}: value {:+.5}  L1 {:+.5}  L0 {:+.5}  L0~ {:+.5}  L_e^-1(e=0.4) {:+.5}",
            mf.value,
            op_l1(&model, coef.into(), 0.0, &law, x)?,
            op_l0(&model, coef.into(), 0.0, &law, x)?,
            op_l0_tilde(&model, coef.into(), 0.0, &law, x)?,
            op_lminus1(&model, coef.into(), 0.0, &law, x, 0.4)?,
        );
    }
    println!("compensator {:+.5}", jump_compensator(&model, 0.0, &law, x)?);
    println!("compensated drift {:+.5}", compensated_drift(&model, 0.0, &law, x)?);
    Ok(())
}
